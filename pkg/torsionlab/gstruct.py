"""
Almost Hermitian and almost contact metric structures.

The intrinsic torsion is stored as ``xi[a, k, b]``, the k-th component of
``xi_{d_a} d_b``; ``xi[a]`` is the skew endomorphism ``xi_{d_a}``. The sign
is the one for which ``xi_X = -1/2 J (nabla_X J)`` on a Hermitian manifold.
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from torsionlab.diffgeo import (
    ConnectionPoint,
    CurvaturePoint,
    Jet2Field,
    check_basis,
    christoffel_jet,
    covariant_derivative,
    curvature,
    exterior_derivative,
    sample_field,
    wedge_one_two,
)
from torsionlab.errors import StructureViolationError
from torsionlab.exprlang import ScalarExpr, constant, eval_jet2
from torsionlab.tensor import DOWN, UP, FrameBasis, TensorJet, complete_basis, gram_schmidt, jeinsum

if TYPE_CHECKING:
    from torsionlab.manifolds import ManifoldSpec

log = logging.getLogger(__name__)

STRUCTURE_TOLERANCE = 1e-9
LEE_ZERO = 1e-12

HERMITIAN = "hermitian"
CONTACT = "contact"


# ----------------------------------------------------------------------------
# Structure data
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LeeForm:
    """
    A 1-form given either componentwise or as ``scale * d(potential)``.
    Only first partials are ever needed.
    """

    components: Optional[Tuple[ScalarExpr, ...]] = None
    potential: Optional[ScalarExpr] = None
    scale: float = 1.0

    def sample(self, point: Sequence[float], params: Optional[Mapping[str, float]] = None) -> TensorJet:
        if self.potential is not None:
            jet = eval_jet2(self.potential, point, params)
            return TensorJet(self.scale * jet.grad, self.scale * jet.hess)
        if self.components is None:
            return TensorJet.constant(np.zeros(len(point)), len(point))
        comps = self.components
        if len(comps) < len(point):
            # pulled back to a product chart: no component along the extra line
            zero = constant(0.0)
            comps = comps + (zero,) * (len(point) - len(comps))
        return sample_field(comps, point, params).first() * self.scale


@dataclass(frozen=True)
class HermitianStructure:
    J: Tuple[Tuple[ScalarExpr, ...], ...]
    lee: LeeForm


@dataclass(frozen=True)
class ContactStructure:
    phi: Tuple[Tuple[ScalarExpr, ...], ...]
    zeta: Tuple[ScalarExpr, ...]
    alpha: Optional[ScalarExpr] = None
    lee: Optional[LeeForm] = None


@dataclass(frozen=True)
class TorsionPoint:
    xi: np.ndarray
    dxi: np.ndarray

    @property
    def jet(self) -> TensorJet:
        return TensorJet(self.xi, self.dxi)

    @staticmethod
    def from_jet(jet: TensorJet) -> "TorsionPoint":
        return TorsionPoint(jet.value, jet.grad)

    def along(self, x: np.ndarray) -> np.ndarray:
        """The endomorphism ``xi_X``."""
        return np.einsum("a,akb->kb", x, self.xi)


@dataclass(frozen=True)
class DeformedMetricPoint:
    metric: np.ndarray
    adapted_basis: FrameBasis
    prime_factor: float


class LeeFormCheck(NamedTuple):
    residual: float
    pinning: bool


# ----------------------------------------------------------------------------
# Compatibility checks
# ----------------------------------------------------------------------------


def skew_defect(a: np.ndarray, g: np.ndarray) -> float:
    ga = g @ a
    return float(np.max(np.abs(ga + ga.T)))


def _require_skew(a: np.ndarray, g: np.ndarray) -> None:
    defect = skew_defect(a, g)
    scale = max(1.0, float(np.max(np.abs(g @ a))))
    if defect > STRUCTURE_TOLERANCE * scale:
        raise StructureViolationError("skew-adjointness of the endomorphism", defect)


def check_hermitian(j: np.ndarray, g: np.ndarray) -> Dict[str, float]:
    n = j.shape[0]
    return {
        "J^2=-Id": float(np.max(np.abs(j @ j + np.eye(n)))),
        "g(JX,JY)=g(X,Y)": float(np.max(np.abs(j.T @ g @ j - g))),
    }


def check_contact(phi: np.ndarray, zeta: np.ndarray, g: np.ndarray) -> Dict[str, float]:
    n = phi.shape[0]
    eta = g @ zeta
    return {
        "phi^2=-Id+eta(x)zeta": float(np.max(np.abs(phi @ phi + np.eye(n) - np.outer(zeta, eta)))),
        "g(phiX,phiY)=g-eta(x)eta": float(np.max(np.abs(phi.T @ g @ phi - g + np.outer(eta, eta)))),
        "|zeta|=1": abs(float(zeta @ g @ zeta) - 1.0),
        "eta(zeta)=1": abs(float(eta @ zeta) - 1.0),
    }


def _require(residuals: Dict[str, float]) -> None:
    for name, value in residuals.items():
        if value > STRUCTURE_TOLERANCE:
            raise StructureViolationError(name, value)


# ----------------------------------------------------------------------------
# Lie-algebra projections
# ----------------------------------------------------------------------------


def proj_m_unitary(a: np.ndarray, j: np.ndarray, g: Optional[np.ndarray] = None) -> np.ndarray:
    """``pr_m(A) = 1/2 (A + JAJ)``, the part of A anticommuting with J."""
    if g is not None:
        _require_skew(a, g)
    return 0.5 * (a + j @ a @ j)


def proj_g_unitary(a: np.ndarray, j: np.ndarray) -> np.ndarray:
    return 0.5 * (a - j @ a @ j)


def proj_m_contact(
    a: np.ndarray, phi: np.ndarray, eta: np.ndarray, zeta: np.ndarray, g: Optional[np.ndarray] = None
) -> np.ndarray:
    """``pr_m(A) = 1/2 (A + phi A phi + (eta o A) (x) zeta + eta (x) A zeta)``."""
    if g is not None:
        _require_skew(a, g)
    return 0.5 * (a + phi @ a @ phi + np.outer(zeta, eta @ a) + np.outer(a @ zeta, eta))


# ----------------------------------------------------------------------------
# Intrinsic torsion
# ----------------------------------------------------------------------------


def nabla_endomorphism(field: Jet2Field, gamma: TensorJet) -> TensorJet:
    """``(nabla_a T)[k, j]`` as ``[k, j, a]`` with its partials."""
    return covariant_derivative(field, (UP, DOWN), gamma)  # type: ignore[return-value]


def torsion_unitary_general(j: Jet2Field, g: np.ndarray, gamma: TensorJet) -> TorsionPoint:
    """``xi_X = -1/2 J (nabla_X J)``."""
    _require(check_hermitian(j.value, g))
    nabla_j = nabla_endomorphism(j, gamma)
    xi = jeinsum("km,mja->akj", j.first(), nabla_j) * -0.5  # type: ignore[operator]
    return TorsionPoint.from_jet(xi)


def torsion_w4_closed(theta: TensorJet, j: TensorJet, g: TensorJet, ginv: TensorJet) -> TorsionPoint:
    """
    ``xi_X Y = -1/4 (theta(Y) X + theta(JY) JX - g(X,Y) theta# - g(X,JY) J theta#)``.
    """
    n = theta.n
    delta = np.eye(n)
    theta_sharp = jeinsum("kl,l->k", ginv, theta)
    j_theta_sharp = jeinsum("km,m->k", j, theta_sharp)
    theta_j = jeinsum("m,mb->b", theta, j)
    g_j = jeinsum("am,mb->ab", g, j)
    xi = (
        jeinsum("b,ka->akb", theta, delta)
        + jeinsum("b,ka->akb", theta_j, j)
        - jeinsum("ab,k->akb", g, theta_sharp)
        - jeinsum("ab,k->akb", g_j, j_theta_sharp)
    ) * -0.25
    return TorsionPoint.from_jet(xi)  # type: ignore[arg-type]


def contact_derivatives(
    phi: Jet2Field, zeta: Jet2Field, g: TensorJet, gamma: TensorJet
) -> Tuple[TensorJet, TensorJet, TensorJet, TensorJet]:
    """``(nabla phi, nabla zeta, eta, nabla eta)``; ``nabla eta`` is ``(nabla zeta)`` flattened."""
    nabla_phi = nabla_endomorphism(phi, gamma)
    nabla_zeta: TensorJet = covariant_derivative(zeta, (UP,), gamma)  # type: ignore[assignment]
    eta: TensorJet = jeinsum("ij,j->i", g, zeta.first())  # type: ignore[assignment]
    nabla_eta: TensorJet = jeinsum("bk,ka->ba", g, nabla_zeta)  # type: ignore[assignment]
    return nabla_phi, nabla_zeta, eta, nabla_eta


def torsion_contact_general(
    phi: Jet2Field, zeta: Jet2Field, g: TensorJet, gamma: TensorJet
) -> TorsionPoint:
    """``xi_X Y = 1/2 (nabla_X phi) phi Y + 1/2 (nabla_X eta)(Y) zeta - eta(Y) nabla_X zeta``."""
    _require(check_contact(phi.value, zeta.value, g.value))
    nabla_phi, nabla_zeta, eta, nabla_eta = contact_derivatives(phi, zeta, g, gamma)
    zeta_jet = zeta.first()
    xi = (
        jeinsum("kma,mb->akb", nabla_phi, phi.first()) * 0.5
        + jeinsum("ba,k->akb", nabla_eta, zeta_jet) * 0.5
        - jeinsum("b,ka->akb", eta, nabla_zeta)
    )
    return TorsionPoint.from_jet(xi)  # type: ignore[arg-type]


def torsion_c5_closed(alpha: TensorJet, eta: TensorJet, zeta: TensorJet, g: TensorJet) -> TorsionPoint:
    """``xi_X Y = alpha (g(X,Y) zeta - eta(Y) X)``."""
    delta = np.eye(g.n)
    inner = jeinsum("ab,k->akb", g, zeta) - jeinsum("b,ka->akb", eta, delta)
    return TorsionPoint.from_jet(inner * alpha)  # type: ignore[operator]


def torsion_membership(t: TorsionPoint, g: np.ndarray, project) -> Dict[str, float]:
    """Residuals of ``xi_X in so(TM)`` and ``pr_m(xi_X) = xi_X`` over coordinate X."""
    skew = max(skew_defect(t.xi[a], g) for a in range(g.shape[0]))
    in_m = max(float(np.max(np.abs(project(t.xi[a]) - t.xi[a]))) for a in range(g.shape[0]))
    return {"xi skew": skew, "xi in m": in_m}


# ----------------------------------------------------------------------------
# Lee form
# ----------------------------------------------------------------------------


def kaehler_form(j: Jet2Field, g: TensorJet) -> TensorJet:
    """``Omega(X, Y) = g(X, JY)``."""
    return jeinsum("ik,kj->ij", g, j.first())  # type: ignore[return-value]


def verify_lee_form(omega: TensorJet, theta: np.ndarray) -> LeeFormCheck:
    """
    Max-norm of ``d Omega - theta ^ Omega``. The identity pins theta only in
    dimension six and up.
    """
    n = theta.shape[0]
    residual = exterior_derivative(omega, 2) - wedge_one_two(theta, omega.value)
    if n < 6:
        log.debug("Lee form check in dimension %s does not determine theta", n)
    return LeeFormCheck(float(np.max(np.abs(residual))), n >= 6)


# ----------------------------------------------------------------------------
# Deformed metric
# ----------------------------------------------------------------------------


def torsion_gram(xi: np.ndarray, g: np.ndarray, basis: FrameBasis) -> np.ndarray:
    """``sum_j g(xi_X e_j, xi_Y e_j)`` as a bilinear form."""
    xe = np.einsum("akm,jm->akj", xi, basis.vectors)
    return np.einsum("akj,kl,blj->ab", xe, g, xe)


def deformed_metric(
    xi: TorsionPoint, g: np.ndarray, basis: FrameBasis, priority: Sequence[np.ndarray] = ()
) -> DeformedMetricPoint:
    """
    ``g~(X, Y) = g(X, Y) + sum_j g(xi_X e_j, xi_Y e_j)`` for a g-orthonormal basis.

    :param priority: Vectors spanning the distribution on which g~ = g; the
        adapted g~-orthonormal basis starts with them.
    """
    check_basis(basis, g)
    gt = g + torsion_gram(xi.xi, g, basis)
    gt = 0.5 * (gt + gt.T)
    adapted = complete_basis(priority, gt, role="g~")
    ratio = np.linalg.eigvals(np.linalg.solve(g, gt)).real
    return DeformedMetricPoint(gt, adapted, float(1.0 / np.max(ratio)))


def deformed_metric_jet(xi: TensorJet, g: TensorJet, ginv: TensorJet) -> TensorJet:
    """Basis-free form of g~ with partials: ``g_ab + g_kl g^mn xi[a,k,m] xi[b,l,n]``."""
    return g + jeinsum("akm,kl,bln,mn->ab", xi, g, xi, ginv)  # type: ignore[operator]


def deformed_metric_w4(theta: TensorJet, j: TensorJet, g: TensorJet, ginv: TensorJet) -> TensorJet:
    """``(1 + |theta#|^2/4) g - 1/4 (theta (x) theta + (theta o J) (x) (theta o J))``."""
    norm_sq = jeinsum("k,kl,l->", theta, ginv, theta)
    theta_j = jeinsum("m,mb->b", theta, j)
    factor = norm_sq * 0.25 + 1.0  # type: ignore[operator]
    return jeinsum(",ab->ab", factor, g) - (
        jeinsum("a,b->ab", theta, theta) + jeinsum("a,b->ab", theta_j, theta_j)
    ) * 0.25  # type: ignore[operator]


def deformed_metric_c5(alpha: TensorJet, eta: TensorJet, g: TensorJet) -> TensorJet:
    """``(1 + 2 alpha^2) g - 2 alpha^2 eta (x) eta``."""
    a2 = jeinsum(",->", alpha, alpha) * 2.0  # type: ignore[operator]
    return g + jeinsum(",ab->ab", a2, g) - jeinsum(",a,b->ab", a2, eta, eta)  # type: ignore[operator]


def prime_map(x: np.ndarray, deformed: DeformedMetricPoint, g: np.ndarray) -> np.ndarray:
    """``X' = sum_j g(X, e~_j) e~_j``."""
    return deformed.adapted_basis.outer_sum() @ g @ x


# ----------------------------------------------------------------------------
# Curvature contractions
# ----------------------------------------------------------------------------


def ricci_sum(curv: CurvaturePoint, basis: FrameBasis, x: np.ndarray) -> np.ndarray:
    """``Ric(X) = sum_j R(X, e_j) e_j``."""
    check_basis(basis, curv.metric)
    return np.einsum("lkij,i,jk->l", curv.riemann, x, basis.outer_sum())


def ric_star(curv: CurvaturePoint, j: np.ndarray, basis: FrameBasis, x: np.ndarray) -> np.ndarray:
    """``Ric*(X) = sum_j R(X, J e_j) e_j``."""
    check_basis(basis, curv.metric)
    return np.einsum("lkij,i,jk->l", curv.riemann, x, j @ basis.outer_sum())


def script_r(curv: CurvaturePoint, j: np.ndarray, theta_sharp: np.ndarray, basis: FrameBasis) -> np.ndarray:
    """``Ric(theta#) - Ric*(J theta#)``."""
    return ricci_sum(curv, basis, theta_sharp) - ric_star(curv, j, basis, j @ theta_sharp)


def torsion_curvature_sum(
    curv: CurvaturePoint, xi: TorsionPoint, basis: FrameBasis, g_basis: FrameBasis
) -> np.ndarray:
    """
    ``sum_j R_{xi_{b_j}}(b_j)`` for the basis ``basis``; the inner sum of
    ``R_T`` runs over the g-orthonormal ``g_basis``.
    """
    check_basis(g_basis, curv.metric)
    inner = g_basis.outer_sum()
    return np.einsum("lkim,amp,pi,ak->l", curv.riemann, xi.xi, inner, basis.outer_sum())


# ----------------------------------------------------------------------------
# Identities of the W4 and alpha-Kenmotsu classes
# ----------------------------------------------------------------------------


def div_prime_j(nabla_j: np.ndarray, deformed: DeformedMetricPoint) -> np.ndarray:
    """``sum_j (nabla_{e~_j} J) e~_j``."""
    return np.einsum("kja,aj->k", nabla_j, deformed.adapted_basis.outer_sum())


def w4_symmetric_form(
    nabla_j: np.ndarray, j: np.ndarray, theta: np.ndarray, deformed: DeformedMetricPoint, g: np.ndarray
) -> np.ndarray:
    """``F[x, y] = 2 theta((nabla_{J X'} J) Y)`` for coordinate X, Y."""
    prime = deformed.adapted_basis.outer_sum() @ g
    return 2.0 * np.einsum("k,kya,ax->xy", theta, nabla_j, j @ prime)


def kenmotsu_identity_residual(
    nabla_phi: np.ndarray, phi: np.ndarray, eta: np.ndarray, alpha: float, g: np.ndarray
) -> float:
    """Max-norm of ``(nabla_X Phi)(Y,Z) + alpha (Phi(X,Z) eta(Y) - Phi(X,Y) eta(Z))``."""
    nabla_fund = np.einsum("bk,kca->abc", g, nabla_phi)
    fund = g @ phi
    rhs = -alpha * (np.einsum("ac,b->abc", fund, eta) - np.einsum("ab,c->abc", fund, eta))
    return float(np.max(np.abs(nabla_fund - rhs)))


def contact_identities_residual(
    nabla_phi: np.ndarray, nabla_zeta: np.ndarray, nabla_eta: np.ndarray, phi: np.ndarray,
    zeta: np.ndarray, g: np.ndarray
) -> float:
    """``(nabla_X eta) Y = g(Y, nabla_X zeta) = (nabla_X Phi)(zeta, phi Y)``, as ``[b, a]`` arrays."""
    first = nabla_eta
    second = g @ nabla_zeta
    third = np.einsum("m,mk,kca,cb->ba", zeta, g, nabla_phi, phi)
    return float(max(np.max(np.abs(first - second)), np.max(np.abs(first - third))))


# ----------------------------------------------------------------------------
# Per-point frame
# ----------------------------------------------------------------------------


@dataclass
class GStructureFrame:
    """Everything the condition layer reads at one sample point."""

    point: np.ndarray
    kind: str
    g: Jet2Field
    ginv: TensorJet
    gamma: TensorJet
    conn: ConnectionPoint
    curv: CurvaturePoint
    torsion: TorsionPoint
    g_basis: FrameBasis
    deformed: DeformedMetricPoint
    params: Dict[str, float] = field(default_factory=dict)
    # hermitian
    J: Optional[Jet2Field] = None
    theta: Optional[TensorJet] = None
    nabla_J: Optional[TensorJet] = None
    # contact
    phi: Optional[Jet2Field] = None
    zeta: Optional[Jet2Field] = None
    eta: Optional[TensorJet] = None
    alpha: Optional[TensorJet] = None
    nabla_phi: Optional[TensorJet] = None
    nabla_zeta: Optional[TensorJet] = None
    nabla_eta: Optional[TensorJet] = None

    @property
    def n(self) -> int:
        return self.point.shape[0]

    @property
    def metric(self) -> np.ndarray:
        return self.g.value

    @property
    def theta_sharp(self) -> TensorJet:
        assert self.theta is not None
        return jeinsum("kl,l->k", self.ginv, self.theta)  # type: ignore[return-value]

    @property
    def j_theta_sharp(self) -> TensorJet:
        assert self.J is not None
        return jeinsum("km,m->k", self.J.first(), self.theta_sharp)  # type: ignore[return-value]

    @property
    def lee_norm_sq(self) -> TensorJet:
        return jeinsum("k,kl,l->", self.theta, self.ginv, self.theta)  # type: ignore[return-value]

    def project_m(self, a: np.ndarray) -> np.ndarray:
        if self.kind == HERMITIAN:
            assert self.J is not None
            return proj_m_unitary(a, self.J.value)
        assert self.phi is not None and self.zeta is not None and self.eta is not None
        return proj_m_contact(a, self.phi.value, self.eta.value, self.zeta.value)

    def distribution(self) -> np.ndarray:
        """Orthonormal (for g) vectors spanning D, resp. span(zeta), as rows."""
        if self.kind == HERMITIAN:
            ts = self.theta_sharp.value
            norm_sq = float(self.lee_norm_sq.value)
            if norm_sq < LEE_ZERO:
                return np.zeros((0, self.n))
            return np.array([ts, self.J.value @ ts]) / np.sqrt(norm_sq)  # type: ignore[union-attr]
        return np.array([self.zeta.value])  # type: ignore[union-attr]

    def complement_projector(self) -> TensorJet:
        """g-orthogonal projector onto D-perp, resp. E, with its partials."""
        n = self.n
        ident = TensorJet.constant(np.eye(n), n)
        if self.kind == HERMITIAN:
            norm_sq = self.lee_norm_sq
            if float(norm_sq.value) < LEE_ZERO:
                return ident
            inv_norm = norm_sq.map_scalar(lambda s: 1.0 / s, lambda s: -1.0 / s**2)
            ts, jts = self.theta_sharp, self.j_theta_sharp
            jts_flat = jeinsum("ij,j->i", self.g.first(), jts)
            outer = jeinsum("k,b->kb", ts, self.theta) + jeinsum("k,b->kb", jts, jts_flat)
            return ident - jeinsum(",kb->kb", inv_norm, outer)  # type: ignore[operator]
        return ident - jeinsum("k,b->kb", self.zeta.first(), self.eta)  # type: ignore[union-attr, operator]


def build_frame(spec: "ManifoldSpec", point: Sequence[float]) -> GStructureFrame:
    """Assemble metric, connection, curvature, structure, torsion and g~ at ``point``."""
    from torsionlab.manifolds import structure_kind

    pt = np.asarray(point, dtype=float)
    params = dict(spec.params)
    g = spec.metric.sample(pt)
    g_first = g.first()
    ginv = g_first.inv()
    gamma = christoffel_jet(g)
    conn = ConnectionPoint(gamma.value, gamma.grad)
    curv = curvature(conn, g.value)
    kind = structure_kind(spec)
    extra: Dict[str, object] = {}

    if kind == HERMITIAN:
        j = sample_field(spec.structure.J, pt, params)
        theta = spec.structure.lee.sample(pt, params)
        torsion = torsion_unitary_general(j, g.value, gamma)
        extra.update(J=j, theta=theta, nabla_J=nabla_endomorphism(j, gamma))
        norm_sq = float(theta.value @ ginv.value @ theta.value)
        if norm_sq > LEE_ZERO:
            ts = ginv.value @ theta.value
            priority = [ts, j.value @ ts]
        else:
            priority = []
    else:
        phi = sample_field(spec.structure.phi, pt, params)
        zeta = sample_field(spec.structure.zeta, pt, params)
        torsion = torsion_contact_general(phi, zeta, g_first, gamma)
        nabla_phi, nabla_zeta, eta, nabla_eta = contact_derivatives(phi, zeta, g_first, gamma)
        extra.update(phi=phi, zeta=zeta, eta=eta, nabla_phi=nabla_phi, nabla_zeta=nabla_zeta,
                     nabla_eta=nabla_eta)
        if spec.structure.alpha is not None:
            a = eval_jet2(spec.structure.alpha, pt, params)
            extra["alpha"] = TensorJet(np.asarray(a.value), a.grad)
        if spec.structure.lee is not None:
            extra["theta"] = spec.structure.lee.sample(pt, params)
        priority = [zeta.value]

    g_basis = complete_basis(priority, g.value, role="g")
    deformed = deformed_metric(torsion, g.value, g_basis, priority)
    log.debug("Frame at %s: prime factor %.6g", pt, deformed.prime_factor)
    return GStructureFrame(
        point=pt, kind=kind, g=g, ginv=ginv, gamma=gamma, conn=conn, curv=curv, torsion=torsion,
        g_basis=g_basis, deformed=deformed, params=params, **extra,  # type: ignore[arg-type]
    )


def random_orthonormal_basis(inner: np.ndarray, rng: np.random.Generator, role: str = "g") -> FrameBasis:
    """A basis orthonormal for ``inner`` built from random seeds."""
    n = inner.shape[0]
    return gram_schmidt(rng.normal(size=(n, n)), inner, role)
