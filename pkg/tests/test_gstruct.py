import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.diffgeo import Jet2Field, christoffel_jet, sample_field
from torsionlab.errors import StructureViolationError
from torsionlab.gstruct import (
    DeformedMetricPoint,
    build_frame,
    check_hermitian,
    contact_identities_residual,
    deformed_metric,
    deformed_metric_c5,
    deformed_metric_jet,
    deformed_metric_w4,
    div_prime_j,
    kaehler_form,
    kenmotsu_identity_residual,
    prime_map,
    proj_g_unitary,
    proj_m_contact,
    proj_m_unitary,
    random_orthonormal_basis,
    ric_star,
    ricci_sum,
    script_r,
    torsion_c5_closed,
    torsion_contact_general,
    torsion_membership,
    torsion_unitary_general,
    torsion_w4_closed,
    verify_lee_form,
    w4_symmetric_form,
)
from torsionlab.manifolds import build_conformal_euclidean, sample_points, standard_complex_structure
from torsionlab.tensor import TensorJet

from .conftest import frames


def numeric_j(n, offset=0, size=None):
    return sample_field(standard_complex_structure(n, offset, size), np.zeros(n)).value


def random_skew(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


def rel(a, b):
    return float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b))))


def test_standard_complex_structure():
    j = numeric_j(4)
    np.testing.assert_array_equal(j @ np.array([1.0, 0, 0, 0]), [0, 1.0, 0, 0])
    assert max(check_hermitian(j, np.eye(4)).values()) == 0.0


def test_unitary_projections_split_so(rng):
    j = numeric_j(6)
    a = random_skew(rng, 6)
    m, u = proj_m_unitary(a, j, np.eye(6)), proj_g_unitary(a, j)
    np.testing.assert_allclose(m + u, a, atol=1e-14)
    np.testing.assert_allclose(proj_m_unitary(m, j), m, atol=1e-14)
    np.testing.assert_allclose(j @ m, -m @ j, atol=1e-14)
    np.testing.assert_allclose(j @ u, u @ j, atol=1e-14)
    assert abs(np.trace(m.T @ u)) < 1e-12


def test_projection_rejects_non_skew(rng):
    a = rng.normal(size=(4, 4))
    a = a + a.T
    with pytest.raises(StructureViolationError):
        proj_m_unitary(a, numeric_j(4), np.eye(4))


def contact_frame(n=5):
    phi = numeric_j(n, offset=1)
    zeta = np.eye(n)[0]
    return phi, zeta, zeta.copy()


def test_contact_projection(rng):
    phi, zeta, eta = contact_frame()
    a = random_skew(rng, 5)
    m = proj_m_contact(a, phi, eta, zeta, np.eye(5))
    np.testing.assert_allclose(proj_m_contact(m, phi, eta, zeta), m, atol=1e-14)

    # X -> eta(X) Y - g(X, Y) zeta lies in m for Y orthogonal to zeta
    y = np.array([0.0, 0.3, -1.2, 0.5, 2.0])
    wedge = np.outer(y, eta) - np.outer(zeta, y)
    np.testing.assert_allclose(proj_m_contact(wedge, phi, eta, zeta), wedge, atol=1e-14)


def test_flat_torsion_vanishes(flat):
    for frame in frames(flat, 4):
        assert np.max(np.abs(frame.torsion.xi)) == 0.0
        assert np.max(np.abs(frame.torsion.dxi)) == 0.0


def test_w4_torsion_routes_agree(hopf_frames, conformal_frames):
    for frame in hopf_frames + conformal_frames:
        closed = torsion_w4_closed(frame.theta, frame.J.first(), frame.g.first(), frame.ginv)
        assert rel(closed.xi, frame.torsion.xi) < 1e-9
        assert rel(closed.dxi, frame.torsion.dxi) < 1e-8


def test_c5_torsion_routes_agree(hyperbolic_frames):
    for frame in hyperbolic_frames:
        closed = torsion_c5_closed(frame.alpha, frame.eta, frame.zeta.first(), frame.g.first())
        assert rel(closed.xi, frame.torsion.xi) < 1e-9
        assert rel(closed.dxi, frame.torsion.dxi) < 1e-8


def test_contact_torsion_rejects_non_unit_reeb_field(hyperbolic_frames):
    frame = hyperbolic_frames[0]
    direct = torsion_contact_general(frame.phi, frame.zeta, frame.g.first(), frame.gamma)
    assert rel(direct.xi, frame.torsion.xi) < 1e-12
    z = frame.zeta
    doubled = Jet2Field(2 * z.value, 2 * z.grad, 2 * z.hess)
    with pytest.raises(StructureViolationError):
        torsion_contact_general(frame.phi, doubled, frame.g.first(), frame.gamma)


def test_w4_torsion_hand_example():
    n = 4
    theta = TensorJet.constant(np.eye(n)[0], n)
    j = TensorJet.constant(numeric_j(n), n)
    g = TensorJet.constant(np.eye(n), n)
    xi = torsion_w4_closed(theta, j, g, g).xi
    # xi_{d3} d2 = 1/4 d4
    np.testing.assert_allclose(xi[2, :, 1], [0.0, 0.0, 0.0, 0.25], atol=1e-15)


def test_hyperbolic_torsion_on_reeb_field(hyperbolic_frames, rng):
    for frame in hyperbolic_frames:
        zeta, eta = frame.zeta.value, frame.eta.value
        alpha = float(frame.alpha.value)
        assert np.max(np.abs(frame.torsion.along(zeta))) < 1e-12
        x = rng.normal(size=5)
        pr_x = x - (eta @ x) * zeta
        np.testing.assert_allclose(frame.torsion.along(x) @ zeta, -alpha * pr_x, atol=1e-10)


def test_torsion_lies_in_m(conformal_frames, hyperbolic_frames):
    for frame in conformal_frames + hyperbolic_frames:
        residuals = torsion_membership(frame.torsion, frame.metric, frame.project_m)
        scale = max(1.0, float(np.max(np.abs(frame.torsion.xi))))
        assert residuals["xi skew"] < 1e-9 * scale
        assert residuals["xi in m"] < 1e-9 * scale


def test_lee_form_identity_and_pinning():
    for n, pinned in ((4, False), (6, True)):
        spec = build_conformal_euclidean(n, "x1^2 + x2")
        for frame in frames(spec, 4):
            omega = kaehler_form(frame.J, frame.g.first())
            check = verify_lee_form(omega, frame.theta.value)
            assert check.residual < 1e-10 * max(1.0, float(np.max(np.abs(omega.grad))))
            assert check.pinning is pinned


def test_hopf_lee_form_identity(hopf):
    for frame in frames(hopf, 16, seed=42):
        omega = kaehler_form(frame.J, frame.g.first())
        check = verify_lee_form(omega, frame.theta.value)
        assert check.residual < 1e-10 * max(1.0, float(np.max(np.abs(omega.grad))))
        assert check.pinning is False


def test_lee_form_rejects_wrong_theta(conformal_frames):
    frame = conformal_frames[0]
    check = verify_lee_form(kaehler_form(frame.J, frame.g.first()), 2.0 * frame.theta.value)
    assert check.residual > 1e-3


def test_deformed_metric_closed_forms(hopf_frames, conformal_frames, hyperbolic_frames):
    for frame in hopf_frames + conformal_frames:
        closed = deformed_metric_w4(frame.theta, frame.J.first(), frame.g.first(), frame.ginv)
        assert rel(closed.value, frame.deformed.metric) < 1e-10
        general = deformed_metric_jet(frame.torsion.jet, frame.g.first(), frame.ginv)
        assert rel(general.grad, closed.grad) < 1e-8
    for frame in hyperbolic_frames:
        closed = deformed_metric_c5(frame.alpha, frame.eta, frame.g.first())
        assert rel(closed.value, frame.deformed.metric) < 1e-10


def test_deformed_metric_does_not_depend_on_basis(conformal_frames, rng):
    frame = conformal_frames[3]
    for _ in range(3):
        basis = random_orthonormal_basis(frame.metric, rng)
        other = deformed_metric(frame.torsion, frame.metric, basis)
        assert rel(other.metric, frame.deformed.metric) < 1e-12


def test_adapted_basis_is_orthonormal_for_deformed_metric(conformal_frames, hyperbolic_frames):
    for frame in conformal_frames + hyperbolic_frames:
        assert frame.deformed.adapted_basis.orthonormality_defect() < 1e-10


def test_prime_map(conformal_frames, rng):
    for frame in conformal_frames:
        g, gt = frame.metric, frame.deformed.metric
        x = rng.normal(size=4)
        np.testing.assert_allclose(gt @ prime_map(x, frame.deformed, g), g @ x, atol=1e-10 * np.max(np.abs(g)))
        for d in frame.distribution():
            np.testing.assert_allclose(prime_map(d, frame.deformed, g), d, atol=1e-10)
        c = 1.0 / (1.0 + 0.25 * float(frame.lee_norm_sq.value))
        assert frame.deformed.prime_factor == pytest.approx(c, rel=1e-10)


def test_hopf_lee_vector_has_constant_norm(hopf_frames):
    for frame in hopf_frames:
        assert float(frame.lee_norm_sq.value) == pytest.approx(4.0, rel=1e-12)


def test_ric_star(flat, hopf_frames, rng):
    frame = frames(flat, 1)[0]
    assert np.max(np.abs(ric_star(frame.curv, frame.J.value, frame.g_basis, rng.normal(size=4)))) == 0.0

    frame = hopf_frames[0]
    x = rng.normal(size=4)
    expected = ric_star(frame.curv, frame.J.value, frame.g_basis, x)
    for _ in range(3):
        basis = random_orthonormal_basis(frame.metric, rng)
        assert rel(ric_star(frame.curv, frame.J.value, basis, x), expected) < 1e-9


def test_script_r(flat, hopf_frames, rng):
    frame = frames(flat, 1)[0]
    assert np.max(np.abs(script_r(frame.curv, frame.J.value, rng.normal(size=4), frame.g_basis))) == 0.0

    frame = hopf_frames[1]
    j, ts = frame.J.value, frame.theta_sharp.value
    expected = ricci_sum(frame.curv, frame.g_basis, ts) - ric_star(frame.curv, j, frame.g_basis, j @ ts)
    assert rel(script_r(frame.curv, j, ts, frame.g_basis), expected) < 1e-12
    for _ in range(3):
        basis = random_orthonormal_basis(frame.metric, rng)
        assert rel(script_r(frame.curv, j, ts, basis), expected) < 1e-9


def test_div_prime_j(conformal_frames):
    n = 4
    for frame in conformal_frames:
        expected = (n - 2) / (2.0 * (1.0 + 0.25 * float(frame.lee_norm_sq.value))) * frame.j_theta_sharp.value
        assert rel(div_prime_j(frame.nabla_J.value, frame.deformed), expected) < 1e-9


def test_w4_symmetric_form(conformal_frames, hopf_frames):
    for frame in conformal_frames + hopf_frames:
        g, j, theta = frame.metric, frame.J.value, frame.theta.value
        form = w4_symmetric_form(frame.nabla_J.value, j, theta, frame.deformed, g)
        prime = frame.deformed.adapted_basis.outer_sum() @ g
        theta_j = theta @ j
        expected = (
            np.outer(theta_j, theta_j)
            + np.outer(theta, theta)
            - (g @ prime).T * float(frame.lee_norm_sq.value)
        )
        assert rel(form, expected) < 1e-9
        assert rel(form, form.T) < 1e-9


def test_contact_identities(hyperbolic_frames):
    for frame in hyperbolic_frames:
        phi, zeta, eta, g = frame.phi.value, frame.zeta.value, frame.eta.value, frame.metric
        scale = max(1.0, float(np.max(np.abs(frame.nabla_phi.value))))
        residual = contact_identities_residual(
            frame.nabla_phi.value, frame.nabla_zeta.value, frame.nabla_eta.value, phi, zeta, g
        )
        assert residual < 1e-9 * scale
        alpha = float(frame.alpha.value)
        assert kenmotsu_identity_residual(frame.nabla_phi.value, phi, eta, alpha, g) < 1e-9 * scale
        assert kenmotsu_identity_residual(frame.nabla_phi.value, phi, eta, alpha + 0.5, g) > 1e-3


def test_kenmotsu_eta_derivative(hyperbolic_frames):
    for frame in hyperbolic_frames:
        alpha = float(frame.alpha.value)
        eta = frame.eta.value
        expected = alpha * (frame.metric - np.outer(eta, eta))
        assert rel(frame.nabla_eta.value, expected) < 1e-9


def test_doubled_complex_structure_is_rejected(flat):
    g = flat.metric.sample(np.zeros(4))
    j = numeric_j(4)
    doubled = Jet2Field(2.0 * j, np.zeros((4, 4, 4)), np.zeros((4, 4, 4, 4)))
    with pytest.raises(StructureViolationError):
        torsion_unitary_general(doubled, g.value, christoffel_jet(g))


def test_hyperbolic_frame_distribution(hyperbolic):
    frame = build_frame(hyperbolic, sample_points(hyperbolic, 1, seed=4)[0])
    assert isinstance(frame.deformed, DeformedMetricPoint)
    assert frame.distribution().shape == (1, 5)
    proj = frame.complement_projector().value
    np.testing.assert_allclose(proj @ frame.zeta.value, 0.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([4, 6, 8]))
def test_unitary_projection_property(seed, n):
    rng = np.random.default_rng(seed)
    j = numeric_j(n)
    m = proj_m_unitary(random_skew(rng, n), j)
    np.testing.assert_allclose(proj_m_unitary(m, j), m, atol=1e-12)
    assert abs(np.trace(m.T @ proj_g_unitary(random_skew(rng, n), j))) < 1e-10
