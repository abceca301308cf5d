from pathlib import Path

import numpy as np
import pytest

from torsionlab.conditions import (
    CONDITIONS,
    ERROR,
    FAIL,
    INCONCLUSIVE,
    NOT_APPLICABLE,
    PASS,
    Tolerances,
    c4_product_check,
    difference_tensor,
    evaluate,
    harmonic_map_residual,
    harmonic_residual,
    kenmotsu_residual,
    lck_case_residuals,
    lck_minimal_full,
    lck_reduced_2,
    lck_reduced_4,
    minimal_residual,
    nabla_lee,
    parallel_lee_scaling,
    remark_identities,
    structure_residual,
    tilde_curvature_vector,
)
from torsionlab.diffgeo import ricci_operator
from torsionlab.gstruct import build_frame, random_orthonormal_basis, script_r
from torsionlab.manifolds import (
    build_conformal_euclidean,
    build_hyperbolic_kenmotsu,
    load_manifold,
    product_with_line,
    with_alpha,
)

from .conftest import frames

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_tolerance_bands():
    tol = Tolerances()
    assert tol.verdict(None) == NOT_APPLICABLE
    assert tol.verdict(0.0) == PASS
    assert tol.verdict(1e-8) == PASS
    assert tol.verdict(1e-5) == INCONCLUSIVE
    assert tol.verdict(1e-3) == FAIL
    assert tol.verdict(float("nan")) == ERROR


def test_flat_residuals_vanish(flat):
    for frame in frames(flat, 4):
        assert harmonic_residual(frame) == 0.0
        assert harmonic_map_residual(frame) == 0.0
        assert minimal_residual(frame) == 0.0
        assert lck_reduced_4(frame) == 0.0
        assert lck_reduced_2(frame) == 0.0
        assert structure_residual(frame) < 1e-12


def test_hopf_is_harmonic_and_minimal(hopf):
    for frame in frames(hopf, 64, seed=42):
        assert np.max(np.abs(nabla_lee(frame))) < 1e-9
        assert float(frame.lee_norm_sq.value) == pytest.approx(4.0, abs=1e-9)
        assert harmonic_residual(frame) < 1e-8
        assert harmonic_map_residual(frame) < 1e-8
        assert minimal_residual(frame) < 1e-7
        assert lck_reduced_4(frame) < 1e-8
        assert lck_reduced_2(frame) < 1e-8
        assert structure_residual(frame) < 1e-9


def test_hopf_full_lck_equation(hopf_frames, rng):
    for frame in hopf_frames:
        y, z = rng.normal(size=4), rng.normal(size=4)
        assert lck_minimal_full(frame, y, z) < 1e-8
        cases = lck_case_residuals(frame)
        assert max(cases.values()) < 1e-8


def test_hopf_parallel_lee_scaling(hopf_frames):
    for frame in hopf_frames:
        assert parallel_lee_scaling(frame) < 1e-9


def test_full_lck_equation_is_skew(conformal_frames, rng):
    for frame in conformal_frames:
        y = rng.normal(size=4)
        assert lck_minimal_full(frame, y, y) == 0.0


def test_full_lck_equation_trivial_on_lee_plane(conformal_frames):
    for frame in conformal_frames:
        ts = frame.theta_sharp.value
        scale = max(1.0, float(np.max(np.abs(frame.theta.value))) ** 3)
        assert lck_minimal_full(frame, ts, frame.J.value @ ts) < 1e-9 * scale


def test_lck_case_residuals_report_both_pairings(conformal_frames):
    cases = lck_case_residuals(conformal_frames[0])
    assert set(cases) == {"case_ii", "case_iii", "difference"}
    assert all(np.isfinite(v) for v in cases.values())
    assert cases["difference"] == pytest.approx(abs(cases["case_ii"] - cases["case_iii"]))


def test_lck_cases_agree_on_non_minimal_control():
    spec = build_conformal_euclidean(6, "x1*x3")
    worst = 0.0
    for frame in frames(spec, 16, seed=42):
        cases = lck_case_residuals(frame)
        assert cases["difference"] < 1e-9 * max(1.0, cases["case_ii"])
        worst = max(worst, cases["case_ii"])
    assert worst > 1e-4


@pytest.mark.parametrize("name", ["hopf", "conformal", "control"])
def test_tilde_curvature_vector_through_lee_form(name, hopf, conformal):
    spec = {"hopf": hopf, "conformal": conformal, "control": build_conformal_euclidean(6, "x1*x3")}[name]
    for frame in frames(spec, 20, seed=42):
        factor = -0.5 / (1.0 + 0.25 * float(frame.lee_norm_sq.value))
        expected = factor * script_r(frame.curv, frame.J.value, frame.theta_sharp.value, frame.g_basis)
        vector = tilde_curvature_vector(frame)
        assert np.max(np.abs(vector - expected)) < 1e-8 * max(1.0, float(np.max(np.abs(expected))))


def test_only_the_hopf_lee_form_is_parallel(hopf_frames, conformal_frames):
    assert max(float(np.max(np.abs(nabla_lee(f)))) for f in hopf_frames) < 1e-9
    assert max(float(np.max(np.abs(nabla_lee(f)))) for f in conformal_frames) > 1e-3


def test_lck_reductions_not_applicable_to_contact(hyperbolic_frames):
    frame = hyperbolic_frames[0]
    assert lck_reduced_4(frame) is None
    assert lck_reduced_2(frame) is None
    assert lck_minimal_full(frame, frame.zeta.value, frame.zeta.value) is None
    assert lck_case_residuals(frame) is None


def test_conformal_lck4_holds_trivially(conformal_frames):
    for frame in conformal_frames:
        assert lck_reduced_4(frame) < 1e-9


def test_conformal_negative_control():
    spec = build_conformal_euclidean(6, "x1*x3")
    values = [minimal_residual(frame) for frame in frames(spec, 64, seed=42)]
    assert sum(v > 1e-4 for v in values) >= 0.9 * len(values)


def test_first_complex_coordinate_is_minimal(conformal_frames):
    for frame in conformal_frames:
        assert minimal_residual(frame) < 1e-7


@pytest.mark.parametrize("n,f", [(4, "x1^2"), (4, "x1*x3"), (6, "x1*x3"), (6, "x1^2 + x3*x5")])
def test_closed_lee_form_is_harmonic(n, f):
    spec = build_conformal_euclidean(n, f)
    for frame in frames(spec, 8):
        assert harmonic_residual(frame) < 1e-8


def test_rotating_complex_structure_is_not_harmonic():
    spec = load_manifold(CONFIGS / "rotating-frame.yml")
    for frame in frames(spec, 8):
        assert structure_residual(frame, w4=False) < 1e-9
        # the traced derivative of the torsion is constant with entries 0 and +-1
        assert harmonic_residual(frame) == pytest.approx(1.0, abs=1e-9)
        assert harmonic_map_residual(frame) < 1e-12


@pytest.mark.parametrize("name", ["hopf", "conformal", "control"])
def test_w4_minimality_matches_lck_pair(name, hopf, conformal):
    spec = {"hopf": hopf, "conformal": conformal, "control": build_conformal_euclidean(6, "x1*x3")}[name]
    for frame in frames(spec, 64, seed=42):
        minimal = minimal_residual(frame)
        reduced = max(lck_reduced_4(frame), lck_reduced_2(frame))
        if minimal < 1e-7:
            assert reduced < 1e-6
        if minimal > 1e-4:
            assert reduced > 1e-6


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_hyperbolic_is_minimal_kenmotsu(c):
    spec = build_hyperbolic_kenmotsu(5, c)
    for frame in frames(spec, 64, seed=42):
        alpha = float(frame.alpha.value)
        assert alpha == pytest.approx(-c)
        minimal = minimal_residual(frame)
        kenmotsu = kenmotsu_residual(frame)
        assert minimal < 1e-7
        assert kenmotsu < 1e-9
        tol = Tolerances()
        assert tol.verdict(minimal) == tol.verdict(kenmotsu)

        expected = -(2 * alpha / (1 + 2 * alpha**2)) * ricci_operator(frame.curv, frame.zeta.value)
        vector = tilde_curvature_vector(frame)
        assert np.max(np.abs(vector - expected)) < 1e-9 * max(1.0, float(np.max(np.abs(expected))))


def test_hyperbolic_remark_identities(hyperbolic_frames, hopf_frames):
    for frame in hyperbolic_frames + hopf_frames:
        first, second = remark_identities(frame)
        assert first < 1e-7
        assert second < 1e-7


def test_varying_alpha_is_not_kenmotsu(hyperbolic):
    spec = with_alpha(hyperbolic, "x2")
    for frame in frames(spec, 8):
        assert kenmotsu_residual(frame) > 1e-3


def test_kenmotsu_not_applicable_to_hermitian(hopf_frames):
    assert kenmotsu_residual(hopf_frames[0]) is None


def test_difference_tensor(flat, hyperbolic_frames, conformal_frames):
    s = difference_tensor(frames(flat, 1)[0])
    assert np.max(np.abs(s.S)) == 0.0

    for frame in hyperbolic_frames + conformal_frames:
        general = difference_tensor(frame)
        closed = difference_tensor(frame, closed=True)
        scale = max(1.0, float(np.max(np.abs(general.S))))
        assert general.symmetry_defect() < 1e-10 * scale
        assert np.max(np.abs(general.S - closed.S)) < 1e-8 * scale


def test_product_with_hopf(hopf, hopf_product):
    for frame in frames(hopf_product, 8):
        base = build_frame(hopf, frame.point[:4])
        assert c4_product_check(frame, base) < 1e-10
        assert np.max(np.abs(frame.torsion.along(np.eye(5)[4]))) < 1e-10
        assert minimal_residual(frame) < 1e-7
        assert CONDITIONS["c4product"](hopf_product, frame) < 1e-10


def test_product_with_flat_has_no_torsion(flat):
    spec = product_with_line(flat)
    for frame in frames(spec, 4):
        assert np.max(np.abs(frame.torsion.xi)) < 1e-14
        assert CONDITIONS["c4product"](spec, frame) < 1e-14


def test_residuals_do_not_depend_on_basis(hopf_frames, conformal_frames, rng):
    for frame in (hopf_frames[0], conformal_frames[0], conformal_frames[1]):
        plain = random_orthonormal_basis(frame.metric, rng)
        tilde = random_orthonormal_basis(frame.deformed.metric, rng, "g~")
        h, m = harmonic_residual(frame), minimal_residual(frame)
        assert abs(harmonic_residual(frame, plain) - h) < 1e-10 * max(1.0, h)
        assert abs(minimal_residual(frame, tilde) - m) < 1e-9 * max(1.0, m)


def test_evaluate_marks_inapplicable_conditions(hopf, hopf_frames):
    results = evaluate(["minimal", "kenmotsu", "c4product"], hopf, hopf_frames[0], Tolerances())
    assert [r.name for r in results] == ["minimal", "kenmotsu", "c4product"]
    assert [r.verdict for r in results] == [PASS, NOT_APPLICABLE, NOT_APPLICABLE]
    assert results[0].point == tuple(hopf_frames[0].point)
