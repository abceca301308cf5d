"""
Pointwise Riemannian machinery.

Index conventions (all arrays are coordinate components):

* ``gamma[k, i, j]`` is the Christoffel symbol with ``nabla_i d_j = gamma[k, i, j] d_k``
  and ``dgamma[k, i, j, l]`` its partial derivative along ``x_l``.
* ``riemann[l, k, i, j]`` is the l-th component of ``R(d_i, d_j) d_k`` with
  ``R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]``.
* ``ricci[j, k] = Ric(d_j, d_k) = tr(X -> R(X, d_j) d_k)``.
* covariant derivatives append the differentiating slot last.

With this convention the round sphere has positive and the hyperbolic space
negative sectional curvature.
"""
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from torsionlab.errors import BasisMismatchError, UnsupportedDegreeError
from torsionlab.exprlang import ScalarExpr, eval_jet2, eval_jet2_array
from torsionlab.tensor import (
    DOWN,
    UP,
    FrameBasis,
    TensorJet,
    TensorValue,
    check_metric,
    check_positive_definite,
    jeinsum,
)

log = logging.getLogger(__name__)

BASIS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Jet2Field:
    """Components of a sampled field with first and second partials."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def first(self) -> TensorJet:
        return TensorJet(self.value, self.grad)

    def derivative(self) -> TensorJet:
        """The partials as a jet of their own."""
        return TensorJet(self.grad, self.hess)


def sample_field(
    exprs, point: Sequence[float], params: Optional[Mapping[str, float]] = None
) -> Jet2Field:
    value, grad, hess = eval_jet2_array(exprs, point, params)
    return Jet2Field(value, grad, hess)


@dataclass(frozen=True)
class MetricField:
    """A Riemannian metric given by expressions; only the upper triangle is read."""

    dim: int
    components: Tuple[Tuple[ScalarExpr, ...], ...]
    params: Tuple[Tuple[str, float], ...] = ()

    @staticmethod
    def from_upper(dim: int, upper: Mapping[Tuple[int, int], ScalarExpr], zero: ScalarExpr,
                   params: Optional[Mapping[str, float]] = None) -> "MetricField":
        """Build from ``{(i, j): expr}`` with ``i <= j`` (0-based); missing entries are ``zero``."""
        rows = []
        for i in range(dim):
            row = []
            for j in range(dim):
                key = (i, j) if i <= j else (j, i)
                row.append(upper.get(key, zero))
            rows.append(tuple(row))
        return MetricField(dim, tuple(rows), tuple(sorted((params or {}).items())))

    def sample(self, point: Sequence[float]) -> Jet2Field:
        field = sample_field(self.components, point, dict(self.params))
        check_positive_definite(field.value)
        return field


@dataclass(frozen=True)
class ConnectionPoint:
    gamma: np.ndarray
    dgamma: np.ndarray

    @property
    def jet(self) -> TensorJet:
        return TensorJet(self.gamma, self.dgamma)


@dataclass(frozen=True)
class CurvaturePoint:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    metric: np.ndarray
    metric_inv: np.ndarray

    def lowered(self) -> np.ndarray:
        """``Rm[i, j, k, w] = g(R(d_i, d_j) d_k, d_w)``."""
        return np.einsum("wl,lkij->ijkw", self.metric, self.riemann)


def christoffel_jet(g: Jet2Field) -> TensorJet:
    """Christoffel symbols with their partials, from exact second derivatives of g."""
    dg, ddg = g.grad, g.hess
    koszul = TensorJet(
        np.einsum("jli->ijl", dg) + np.einsum("ilj->ijl", dg) - dg,
        np.einsum("jliz->ijlz", ddg) + np.einsum("iljz->ijlz", ddg) - ddg,
    )
    ginv = g.first().inv()
    return jeinsum("kl,ijl->kij", ginv, koszul) * 0.5  # type: ignore[operator]


def christoffel(metric: MetricField, point: Sequence[float]) -> ConnectionPoint:
    """The Levi-Civita connection of ``metric`` at ``point``."""
    g = metric.sample(point)
    check_metric(g.value)
    jet = christoffel_jet(g)
    return ConnectionPoint(jet.value, jet.grad)


def curvature(conn: ConnectionPoint, metric: np.ndarray) -> CurvaturePoint:
    """Riemann, Ricci and scalar curvature from a connection and the metric value."""
    gam, dgam = conn.gamma, conn.dgamma
    riem = (
        np.einsum("ljki->lkij", dgam)
        - np.einsum("likj->lkij", dgam)
        + np.einsum("lim,mjk->lkij", gam, gam)
        - np.einsum("ljm,mik->lkij", gam, gam)
    )
    ricci = np.einsum("ikij->jk", riem)
    ginv = check_metric(metric)
    scalar = float(np.einsum("jk,jk->", ginv, ricci))
    return CurvaturePoint(riem, ricci, scalar, np.asarray(metric), ginv)


def sectional_curvature(curv: CurvaturePoint, x: np.ndarray, y: np.ndarray) -> float:
    g = curv.metric
    num = np.einsum("ijkw,i,j,k,w->", curv.lowered(), x, y, y, x)
    den = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    return float(num / den)


def ricci_operator(curv: CurvaturePoint, x: np.ndarray) -> np.ndarray:
    """``Ric(X) = sum_j R(X, e_j) e_j``."""
    return curv.metric_inv @ curv.ricci @ x


def l_tensor(f: ScalarExpr, point: Sequence[float],
             params: Optional[Mapping[str, float]] = None) -> TensorValue:
    """``L(X, Y) = (nabla_X df) Y + df(X) df(Y)`` with the flat hessian."""
    jet = eval_jet2(f, point, params)
    return TensorValue.bilinear(jet.hess + np.outer(jet.grad, jet.grad))


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``(h o k)(X,Y,Z,W) = h(X,W)k(Y,Z) + h(Y,Z)k(X,W) - h(X,Z)k(Y,W) - h(Y,W)k(X,Z)``."""
    return (
        np.einsum("xw,yz->xyzw", h, k)
        + np.einsum("yz,xw->xyzw", h, k)
        - np.einsum("xz,yw->xyzw", h, k)
        - np.einsum("yw,xz->xyzw", h, k)
    )


def conformal_curvature_formula(f: ScalarExpr, point: Sequence[float],
                                params: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """
    ``g0(R0(X,Y)Z,W)`` for ``g0 = exp(-2f) delta`` through the L-tensor, in
    the same slot order as :meth:`CurvaturePoint.lowered`.
    """
    jet = eval_jet2(f, point, params)
    n = len(point)
    g0 = np.exp(-2.0 * jet.value) * np.eye(n)
    ell = jet.hess + np.outer(jet.grad, jet.grad)
    df_sq = np.exp(2.0 * jet.value) * (jet.grad @ jet.grad)
    return kulkarni_nomizu(g0, ell) - df_sq * (
        np.einsum("xw,yz->xyzw", g0, g0) - np.einsum("xz,yw->xyzw", g0, g0)
    )


_SLOTS = "abcdefgh"


def covariant_derivative(
    field: Union[Jet2Field, TensorJet],
    variance: Sequence[str],
    gamma: Union[np.ndarray, TensorJet],
) -> Union[np.ndarray, TensorJet]:
    """
    Covariant derivative of a tensor field, the new covariant slot last.

    :param field: The field components and partials. When ``gamma`` is a jet
        the field must carry second partials (:class:`Jet2Field`) and the
        result is a jet too.
    :param variance: ``up``/``down`` per slot.
    :param gamma: Christoffel symbols (array) or their jet.
    """
    rank = len(variance)
    letters = _SLOTS[:rank]
    if isinstance(gamma, TensorJet):
        if not isinstance(field, Jet2Field):
            raise TypeError("a jet-valued covariant derivative needs second partials")
        partial: Union[np.ndarray, TensorJet] = field.derivative()
        tensor: Union[np.ndarray, TensorJet] = field.first()
    else:
        partial = field.grad
        tensor = field.value
    result = partial
    for s, var in enumerate(variance):
        swapped = letters[:s] + "M" + letters[s + 1 :]
        if var == UP:
            term = jeinsum(f"{letters[s]}QM,{swapped}->{letters}Q", gamma, tensor)
            result = result + term
        elif var == DOWN:
            term = jeinsum(f"MQ{letters[s]},{swapped}->{letters}Q", gamma, tensor)
            result = result - term
        else:
            raise ValueError(f"unknown variance {var!r}")
    return result


def along(nabla: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Contract the trailing derivative slot with a direction."""
    return nabla @ x


def lie_bracket(x: TensorJet, y: TensorJet) -> np.ndarray:
    """``[X, Y]^k = X^j d_j Y^k - Y^j d_j X^k``."""
    return y.grad @ x.value - x.grad @ y.value


def exterior_derivative(form: TensorJet, degree: int) -> np.ndarray:
    """
    ``d`` of a 1-form (``dw[i, j] = d_i w_j - d_j w_i``) or of a 2-form
    (cyclic sum of partials).
    """
    if degree == 1:
        return form.grad.T - form.grad
    if degree == 2:
        d = form.grad  # d[j, k, i] = d_i w_jk
        return np.einsum("jki->ijk", d) + np.einsum("kij->ijk", d) + np.einsum("ijk->ijk", d)
    raise UnsupportedDegreeError(f"exterior derivative of a {degree}-form is not supported")


def wedge_one_two(theta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``(theta ^ Omega)_ijk``, normalised like :func:`exterior_derivative`."""
    return (
        np.einsum("i,jk->ijk", theta, omega)
        + np.einsum("j,ki->ijk", theta, omega)
        + np.einsum("k,ij->ijk", theta, omega)
    )


def r_endomorphism(t: np.ndarray, curv: CurvaturePoint, basis: FrameBasis, x: np.ndarray) -> np.ndarray:
    """``R_T(X) = sum_j R(e_j, T e_j) X`` over a basis orthonormal for the curvature's metric."""
    check_basis(basis, curv.metric)
    return np.einsum("lkij,ji,k->l", curv.riemann, t @ basis.outer_sum(), x)


def check_basis(basis: FrameBasis, metric: np.ndarray) -> None:
    defect = float(np.max(np.abs(basis.vectors @ metric @ basis.vectors.T - np.eye(metric.shape[0]))))
    if defect > BASIS_TOLERANCE:
        raise BasisMismatchError(f"basis is not orthonormal for this metric (defect {defect:.3e})")
