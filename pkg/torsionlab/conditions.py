"""
Harmonicity, harmonic-map and minimality residuals of a G-structure, their
reductions on locally conformally Kaehler and alpha-Kenmotsu manifolds, and
the cross-checks through the difference tensor of g~ and g.

Every residual is the max-norm of a tensor that vanishes exactly when the
condition holds. A residual of ``None`` marks a condition that does not apply
to the structure at hand.
"""
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from torsionlab.diffgeo import Jet2Field, christoffel_jet, covariant_derivative, lie_bracket
from torsionlab.gstruct import (
    HERMITIAN,
    LEE_ZERO,
    GStructureFrame,
    build_frame,
    check_contact,
    check_hermitian,
    contact_identities_residual,
    deformed_metric_c5,
    deformed_metric_jet,
    deformed_metric_w4,
    kenmotsu_identity_residual,
    proj_m_contact,
    proj_m_unitary,
    script_r,
    torsion_c5_closed,
    torsion_curvature_sum,
    torsion_membership,
    torsion_w4_closed,
)
from torsionlab.tensor import DOWN, UP, FrameBasis, TensorJet, jeinsum

if TYPE_CHECKING:
    from torsionlab.manifolds import ManifoldSpec

log = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
NOT_APPLICABLE = "n/a"
ERROR = "error"

DEFAULT_PASS_TOL = 1e-7
DEFAULT_FAIL_TOL = 1e-4

W4_CLASSES = ("W4", "Kaehler")


@dataclass(frozen=True)
class Tolerances:
    pass_tol: float = DEFAULT_PASS_TOL
    fail_tol: float = DEFAULT_FAIL_TOL

    def verdict(self, value: Optional[float]) -> str:
        if value is None:
            return NOT_APPLICABLE
        if not np.isfinite(value):
            return ERROR
        if value < self.pass_tol:
            return PASS
        if value > self.fail_tol:
            return FAIL
        return INCONCLUSIVE


@dataclass(frozen=True)
class ConditionResidual:
    name: str
    point: Tuple[float, ...]
    value: Optional[float]
    verdict: str
    message: Optional[str] = None


@dataclass(frozen=True)
class DifferenceTensorPoint:
    """``S[k, i, j]``, the k-th component of ``S_{d_i} d_j``."""

    S: np.ndarray

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.S - np.swapaxes(self.S, 1, 2))))

    def along(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.S, x, y)

    def trace(self, inner_sum: np.ndarray) -> np.ndarray:
        """``sum_j S_{b_j} b_j`` for a basis with ``sum_j b_j (x) b_j = inner_sum``."""
        return np.einsum("kij,ij->k", self.S, inner_sum)


def _max(a) -> float:
    return float(np.max(np.abs(a)))


# ----------------------------------------------------------------------------
# Harmonic G-structures and minimality
# ----------------------------------------------------------------------------


def nabla_torsion(frame: GStructureFrame) -> np.ndarray:
    """``(nabla_c xi)[a, k, b]`` stored as ``[a, k, b, c]``."""
    return covariant_derivative(frame.torsion.jet, (DOWN, UP, DOWN), frame.gamma.value)  # type: ignore[return-value]


def traced_nabla_torsion(frame: GStructureFrame, basis: FrameBasis) -> np.ndarray:
    """``sum_j (nabla_{b_j} xi)_{b_j}`` as an endomorphism."""
    return np.einsum("akbc,ac->kb", nabla_torsion(frame), basis.outer_sum())


def harmonic_endomorphism(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> np.ndarray:
    return traced_nabla_torsion(frame, basis or frame.g_basis)


def harmonic_residual(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> float:
    return _max(harmonic_endomorphism(frame, basis))


def harmonic_map_vector(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> np.ndarray:
    """``sum_j R_{xi_{e_j}}(e_j)``."""
    return torsion_curvature_sum(frame.curv, frame.torsion, basis or frame.g_basis, frame.g_basis)


def harmonic_map_residual(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> float:
    return _max(harmonic_map_vector(frame, basis))


def tilde_curvature_vector(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> np.ndarray:
    """``sum_j R_{xi_{e~_j}}(e~_j)`` over a g~-orthonormal basis."""
    return torsion_curvature_sum(
        frame.curv, frame.torsion, basis or frame.deformed.adapted_basis, frame.g_basis
    )


def minimal_endomorphism(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> np.ndarray:
    """
    ``sum_j (nabla_{e~_j} xi)_{e~_j} + xi_V`` with ``V = sum_j R_{xi_{e~_j}}(e~_j)``.

    The covariant derivative is the Levi-Civita connection of g, the basis is
    orthonormal for g~.
    """
    tilde = basis or frame.deformed.adapted_basis
    v = tilde_curvature_vector(frame, tilde)
    return traced_nabla_torsion(frame, tilde) + frame.torsion.along(v)


def minimal_residual(frame: GStructureFrame, basis: Optional[FrameBasis] = None) -> float:
    return _max(minimal_endomorphism(frame, basis))


def parallel_lee_scaling(frame: GStructureFrame) -> float:
    """Defect of ``sum (nabla_{e~} xi)_{e~} = c sum (nabla_e xi)_e`` with ``c`` the prime factor."""
    tilde = traced_nabla_torsion(frame, frame.deformed.adapted_basis)
    plain = traced_nabla_torsion(frame, frame.g_basis)
    return _max(tilde - frame.deformed.prime_factor * plain)


# ----------------------------------------------------------------------------
# Locally conformally Kaehler reductions
# ----------------------------------------------------------------------------


def _lee_quantities(frame: GStructureFrame):
    theta = frame.theta.value  # type: ignore[union-attr]
    theta_sharp = frame.theta_sharp.value
    norm_sq = float(frame.lee_norm_sq.value)
    r_vec = script_r(frame.curv, frame.J.value, theta_sharp, frame.g_basis)  # type: ignore[union-attr]
    return theta, theta_sharp, norm_sq, r_vec


def nabla_lee(frame: GStructureFrame) -> np.ndarray:
    """``(nabla_a theta)_b`` stored as ``[b, a]``."""
    return covariant_derivative(frame.theta, (DOWN,), frame.gamma.value)  # type: ignore[arg-type, return-value]


def lck_minimal_full(frame: GStructureFrame, y: np.ndarray, z: np.ndarray) -> Optional[float]:
    """
    Residual of the minimality condition of an LcK structure written through
    the Lee form::

        (nabla_{Z'} theta) Y - (nabla_{Y'} theta) Z - (nabla_{JZ'} theta) JY + (nabla_{JY'} theta) JZ
        - 1/2 c (theta(Y) g(R, Z) - theta(Z) g(R, Y) - theta(JY) Omega(R, Z) + theta(JZ) Omega(R, Y))

    where ``c = 1 / (1 + |theta#|^2 / 4)`` and ``R = Ric(theta#) - Ric*(J theta#)``.
    """
    if frame.kind != HERMITIAN:
        return None
    g = frame.metric
    j = frame.J.value  # type: ignore[union-attr]
    theta, _, norm_sq, r_vec = _lee_quantities(frame)
    nt = nabla_lee(frame)
    prime = frame.deformed.adapted_basis.outer_sum() @ g
    yp, zp = prime @ y, prime @ z
    jy, jz = j @ y, j @ z

    def dtheta(direction, arg):
        return float(arg @ nt @ direction)

    def omega(a, b):
        return float(a @ g @ (j @ b))

    lee_part = dtheta(zp, y) - dtheta(yp, z) - dtheta(j @ zp, jy) + dtheta(j @ yp, jz)
    curv_part = (
        (theta @ y) * float(r_vec @ g @ z)
        - (theta @ z) * float(r_vec @ g @ y)
        - (theta @ jy) * omega(r_vec, z)
        + (theta @ jz) * omega(r_vec, y)
    )
    return abs(lee_part - 0.5 / (1.0 + 0.25 * norm_sq) * curv_part)


def _complement_dim(frame: GStructureFrame) -> int:
    return frame.n - frame.distribution().shape[0]


def _seed_fields(frame: GStructureFrame) -> List[TensorJet]:
    """Coordinate directions pushed into D-perp by the projector field, as vector jets."""
    proj = frame.complement_projector()
    fields = []
    for e in np.eye(frame.n):
        fields.append(jeinsum("kb,b->k", proj, e))
    return fields  # type: ignore[return-value]


def _apply_j(frame: GStructureFrame, y: TensorJet) -> TensorJet:
    return jeinsum("km,m->k", frame.J.first(), y)  # type: ignore[union-attr, return-value]


def lck_reduced_4(frame: GStructureFrame) -> Optional[float]:
    """Max over projected coordinate fields Y, Z of ``|theta([Y,Z]) - theta([JY,JZ])|``."""
    if frame.kind != HERMITIAN:
        return None
    if _complement_dim(frame) < 2:
        return None
    theta = frame.theta.value  # type: ignore[union-attr]
    fields = _seed_fields(frame)
    worst = 0.0
    for i, y in enumerate(fields):
        jy = _apply_j(frame, y)
        for z in fields[i + 1 :]:
            jz = _apply_j(frame, z)
            value = theta @ lie_bracket(y, z) - theta @ lie_bracket(jy, jz)
            worst = max(worst, abs(float(value)))
    return worst


def _nabla_along(frame: GStructureFrame, field: TensorJet, direction: np.ndarray) -> np.ndarray:
    nabla = covariant_derivative(field, (UP,), frame.gamma.value)
    return nabla @ direction  # type: ignore[operator]


def lck_reduced_2_value(frame: GStructureFrame, y: TensorJet) -> float:
    """
    ``(1 + |theta#|^2/4) theta(nabla_{J theta#} JY - nabla_{theta#} Y)
    - 1/2 Y|theta#|^2 - theta(nabla_{JY} J theta#) + 1/2 |theta#|^2 g(R, Y)``
    for a vector field Y tangent to D-perp.
    """
    theta, theta_sharp, norm_sq, r_vec = _lee_quantities(frame)
    j = frame.J.value  # type: ignore[union-attr]
    jy = _apply_j(frame, y)
    jts = frame.j_theta_sharp
    lhs = (1.0 + 0.25 * norm_sq) * float(
        theta @ (_nabla_along(frame, jy, j @ theta_sharp) - _nabla_along(frame, y, theta_sharp))
    )
    y_norm = float(frame.lee_norm_sq.grad @ y.value)
    rhs = (
        0.5 * y_norm
        + float(theta @ _nabla_along(frame, jts, jy.value))
        - 0.5 * norm_sq * float(r_vec @ frame.metric @ y.value)
    )
    return lhs - rhs


def lck_reduced_2(frame: GStructureFrame) -> Optional[float]:
    if frame.kind != HERMITIAN:
        return None
    if _complement_dim(frame) < 1:
        return None
    return max(abs(lck_reduced_2_value(frame, y)) for y in _seed_fields(frame))


def lck_case_residuals(frame: GStructureFrame) -> Optional[Dict[str, float]]:
    """
    The full LcK condition on Y in D-perp paired with ``Z = theta#`` and with
    ``Z = J theta#``, maximised over projected coordinate directions and their
    images under J. Both cases range over the same J-invariant set of Y.
    """
    if frame.kind != HERMITIAN or float(frame.lee_norm_sq.value) < LEE_ZERO:
        return None
    ts = frame.theta_sharp.value
    jts = frame.J.value @ ts  # type: ignore[union-attr]
    proj = frame.complement_projector().value
    seeds = [proj @ e for e in np.eye(frame.n)]
    seeds += [frame.J.value @ y for y in seeds]  # type: ignore[union-attr]
    case_ii = case_iii = 0.0
    for y in seeds:
        case_ii = max(case_ii, lck_minimal_full(frame, y, ts) or 0.0)
        case_iii = max(case_iii, lck_minimal_full(frame, y, jts) or 0.0)
    return {"case_ii": case_ii, "case_iii": case_iii, "difference": abs(case_ii - case_iii)}


# ----------------------------------------------------------------------------
# Almost contact metric reductions
# ----------------------------------------------------------------------------


def kenmotsu_value(frame: GStructureFrame, y: np.ndarray) -> float:
    """``Y alpha - 2 alpha^2 Ric(zeta, Y)``."""
    alpha = frame.alpha
    zeta = frame.zeta.value  # type: ignore[union-attr]
    a = float(alpha.value)  # type: ignore[union-attr]
    return float(alpha.grad @ y) - 2.0 * a * a * float(zeta @ frame.curv.ricci @ y)  # type: ignore[union-attr]


def kenmotsu_residual(frame: GStructureFrame) -> Optional[float]:
    """Max of ``|Y alpha - 2 alpha^2 Ric(zeta, Y)|`` over projected coordinate Y."""
    if frame.kind == HERMITIAN or frame.alpha is None:
        return None
    proj = frame.complement_projector().value
    return max(abs(kenmotsu_value(frame, proj @ e)) for e in np.eye(frame.n))


def c4_product_check(product: GStructureFrame, base: GStructureFrame) -> float:
    """
    Max of: torsion of the product on slots touching the line, deviation of
    the product torsion on the base from the base torsion, and deviation of
    the product g~ on the base from the base g~.
    """
    n = base.n
    xi = product.torsion.xi
    line = max(_max(xi[n]), _max(xi[:, :, n]), _max(xi[:, n, :]))
    block = _max(xi[:n, :n, :n] - base.torsion.xi)
    metric = _max(product.deformed.metric[:n, :n] - base.deformed.metric)
    mixed = max(_max(product.deformed.metric[:n, n]), abs(product.deformed.metric[n, n] - 1.0))
    return max(line, block, metric, mixed)


# ----------------------------------------------------------------------------
# Difference tensor of g~ and g
# ----------------------------------------------------------------------------


def deformed_metric_field(frame: GStructureFrame, closed: bool = False) -> TensorJet:
    """g~ with its first partials, from the torsion sum or from the class formula."""
    g, ginv = frame.g.first(), frame.ginv
    if not closed:
        return deformed_metric_jet(frame.torsion.jet, g, ginv)
    if frame.kind == HERMITIAN:
        return deformed_metric_w4(frame.theta, frame.J.first(), g, ginv)  # type: ignore[arg-type, union-attr]
    if frame.alpha is None:
        raise ValueError("closed form of g~ needs alpha")
    return deformed_metric_c5(frame.alpha, frame.eta, g)  # type: ignore[arg-type]


def difference_tensor(frame: GStructureFrame, closed: bool = False) -> DifferenceTensorPoint:
    """``S = Gamma~ - Gamma`` where Gamma~ belongs to g~."""
    gt = deformed_metric_field(frame, closed)
    n = frame.n
    # Gamma~ is needed without its own partials
    field = Jet2Field(gt.value, gt.grad, np.zeros(gt.grad.shape + (n,)))
    gamma_t = christoffel_jet(field).value
    return DifferenceTensorPoint(gamma_t - frame.gamma.value)


def remark_identities(frame: GStructureFrame) -> Tuple[float, float]:
    """
    ``sum (nabla_{e~} xi)_{e~} - xi_{sum S_{e~} e~}`` and
    ``sum R_{xi_{e~}}(e~) + sum S_{e~} e~``; both vanish on minimal structures.
    """
    tilde = frame.deformed.adapted_basis
    s = difference_tensor(frame)
    s_trace = s.trace(tilde.outer_sum())
    first = traced_nabla_torsion(frame, tilde) - frame.torsion.along(s_trace)
    second = tilde_curvature_vector(frame, tilde) + s_trace
    return _max(first), _max(second)


# ----------------------------------------------------------------------------
# Structure certificate
# ----------------------------------------------------------------------------


def structure_residual(frame: GStructureFrame, w4: bool = True) -> float:
    """
    Compatibility, torsion membership and two-route torsion agreement. The W4
    route is compared only when ``w4`` is set.
    """
    g = frame.metric
    if frame.kind == HERMITIAN:
        j = frame.J.value  # type: ignore[union-attr]
        checks = check_hermitian(j, g)
        checks.update(torsion_membership(frame.torsion, g, lambda a: proj_m_unitary(a, j)))
        if w4:
            closed = torsion_w4_closed(frame.theta, frame.J.first(), frame.g.first(), frame.ginv)  # type: ignore[arg-type, union-attr]
            checks["torsion routes"] = _max(closed.xi - frame.torsion.xi)
    else:
        phi, zeta, eta = frame.phi.value, frame.zeta.value, frame.eta.value  # type: ignore[union-attr]
        checks = check_contact(phi, zeta, g)
        checks.update(
            torsion_membership(frame.torsion, g, lambda a: proj_m_contact(a, phi, eta, zeta))
        )
        checks["contact identities"] = contact_identities_residual(
            frame.nabla_phi.value, frame.nabla_zeta.value, frame.nabla_eta.value, phi, zeta, g  # type: ignore[union-attr]
        )
        if frame.alpha is not None:
            closed = torsion_c5_closed(frame.alpha, frame.eta, frame.zeta.first(), frame.g.first())  # type: ignore[arg-type, union-attr]
            checks["torsion routes"] = _max(closed.xi - frame.torsion.xi)
            checks["alpha-Kenmotsu"] = kenmotsu_identity_residual(
                frame.nabla_phi.value, phi, eta, float(frame.alpha.value), g  # type: ignore[union-attr]
            )
    worst = max(checks, key=checks.get)  # type: ignore[arg-type]
    log.debug("Structure residuals at %s: worst %s = %.3e", frame.point, worst, checks[worst])
    return max(checks.values())


# ----------------------------------------------------------------------------
# Registry used by the suite runner
# ----------------------------------------------------------------------------


def _c4(spec: "ManifoldSpec", frame: GStructureFrame) -> Optional[float]:
    if spec.base is None:
        return None
    base_frame = build_frame(spec.base, frame.point[: spec.base.dim])
    return c4_product_check(frame, base_frame)


def _lck_pair(spec: "ManifoldSpec", frame: GStructureFrame) -> Optional[float]:
    four, two = lck_reduced_4(frame), lck_reduced_2(frame)
    if four is None and two is None:
        return None
    return max(v for v in (four, two) if v is not None)


ConditionFn = Callable[["ManifoldSpec", GStructureFrame], Optional[float]]

CONDITIONS: Dict[str, ConditionFn] = {
    "harmonic": lambda spec, frame: harmonic_residual(frame),
    "harmonic_map": lambda spec, frame: harmonic_map_residual(frame),
    "minimal": lambda spec, frame: minimal_residual(frame),
    "lck4": lambda spec, frame: lck_reduced_4(frame),
    "lck2": lambda spec, frame: lck_reduced_2(frame),
    "lck": _lck_pair,
    "kenmotsu": lambda spec, frame: kenmotsu_residual(frame),
    "c4product": _c4,
    "structure": lambda spec, frame: structure_residual(frame, spec.declared_class in W4_CLASSES),
}


def evaluate(
    names: Iterable[str], spec: "ManifoldSpec", frame: GStructureFrame, tolerances: Tolerances
) -> List[ConditionResidual]:
    point = tuple(float(x) for x in frame.point)
    results = []
    for name in names:
        value = CONDITIONS[name](spec, frame)
        results.append(ConditionResidual(name, point, value, tolerances.verdict(value)))
    return results
