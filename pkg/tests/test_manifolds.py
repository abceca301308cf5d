import re

import numpy as np
import pytest

from torsionlab.errors import ConfigError
from torsionlab.gstruct import CONTACT, HERMITIAN, build_frame
from torsionlab.manifolds import (
    CATALOG,
    DEFAULT_DIMENSIONS,
    build_catalog,
    build_conformal_euclidean,
    build_hopf_cover,
    build_hyperbolic_kenmotsu,
    certify,
    check_boundary,
    load_manifold,
    product_with_line,
    resolve_manifold,
    sample_points,
    structure_kind,
    with_alpha,
)

CUSTOM = """\
name: warped-hyperbolic
dim: 3
params:
  k: 2.0
metric:
  "1,1": 1/(k^2*x1^2)
  "2,2": 1/(k^2*x1^2)
  "3,3": 1/(k^2*x1^2)
structure:
  kind: contact
  zeta: [k*x1, 0, 0]
  alpha: -k
domain: [[0.5, 2.0], [-1, 1], [-1, 1]]
class: C5
"""


def test_sampling_is_deterministic(hopf):
    first = sample_points(hopf, 8, seed=42)
    again = sample_points(hopf, 8, seed=42)
    other = sample_points(hopf, 8, seed=43)
    for a, b in zip(first, again):
        np.testing.assert_array_equal(a, b)
    assert any(np.any(a != b) for a, b in zip(first, other))


def test_samples_stay_in_domain(hopf, hyperbolic):
    for p in sample_points(hopf, 32, seed=1):
        assert 0.5 < np.linalg.norm(p) < 2.0
    for p in sample_points(hyperbolic, 32, seed=1):
        assert 0.5 <= p[0] <= 2.0
        assert np.all(np.abs(p[1:]) <= 1.0)


def test_sample_count_must_be_positive(flat):
    with pytest.raises(ValueError):
        sample_points(flat, 0, seed=1)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_manifolds_are_certified(name):
    spec = build_catalog(name)
    assert spec.dim == DEFAULT_DIMENSIONS[name] + (1 if spec.base is not None else 0)
    assert check_boundary(spec, count=200) == 200
    assert certify(spec, sample_points(spec, 4, seed=9)) < 1e-9


def test_builder_arguments_are_validated():
    with pytest.raises(ConfigError):
        build_conformal_euclidean(5)
    with pytest.raises(ConfigError):
        build_hopf_cover(2)
    with pytest.raises(ConfigError):
        build_hyperbolic_kenmotsu(4)
    with pytest.raises(ConfigError):
        build_hyperbolic_kenmotsu(5, 0.0)
    with pytest.raises(ConfigError):
        build_catalog("hopf", c=2.0)
    with pytest.raises(ConfigError):
        build_catalog("hyperbolic", f="x1")
    with pytest.raises(ConfigError) as info:
        build_catalog("sphere")
    assert "hopf" in str(info.value)


@pytest.mark.parametrize("f", ["x1^", "x0", "x7", "z + 1", "exp(x1"])
def test_unparsable_conformal_factor_is_a_configuration_error(f):
    with pytest.raises(ConfigError) as info:
        build_conformal_euclidean(6, f)
    assert "parameter f" in str(info.value)


def test_unparsable_alpha_is_a_configuration_error(hyperbolic):
    with pytest.raises(ConfigError):
        with_alpha(hyperbolic, "x2 *")
    with pytest.raises(ConfigError):
        with_alpha(hyperbolic, "k")


def test_conformal_lee_norm():
    spec = build_conformal_euclidean(4, "x1")
    for frame in (build_frame(spec, p) for p in sample_points(spec, 4, seed=2)):
        expected = 4.0 * np.exp(2.0 * frame.point[0])
        assert float(frame.lee_norm_sq.value) == pytest.approx(expected, rel=1e-12)


def test_product_with_line(hopf, hyperbolic):
    product = product_with_line(hopf)
    assert product.dim == 5
    assert product.base is hopf
    assert structure_kind(product) == CONTACT
    assert product.declared_class == "C4"
    with pytest.raises(ConfigError):
        product_with_line(hyperbolic)


def test_with_alpha_replaces_only_alpha(hyperbolic, hopf):
    spec = with_alpha(hyperbolic, "x2")
    assert spec.structure.phi == hyperbolic.structure.phi
    assert spec.structure.alpha.text == "x2"
    assert spec.name != hyperbolic.name
    with pytest.raises(ConfigError):
        with_alpha(hopf, "x2")


def test_resolve_prefers_catalog(tmp_path):
    assert resolve_manifold("hyperbolic", n=7, c=0.5).dim == 7
    with pytest.raises(ConfigError):
        resolve_manifold(str(tmp_path / "missing.yml"))


def test_custom_manifold(tmp_path):
    path = tmp_path / "warped.yml"
    path.write_text(CUSTOM, encoding="utf-8")
    spec = resolve_manifold(str(path))
    assert spec.name == "warped-hyperbolic"
    assert structure_kind(spec) == CONTACT
    assert spec.declared_class == "C5"
    points = sample_points(spec, 4, seed=5)
    assert certify(spec, points) < 1e-9
    frame = build_frame(spec, points[0])
    assert float(frame.alpha.value) == -2.0


def test_custom_hermitian_defaults(tmp_path):
    path = tmp_path / "plain.yml"
    path.write_text('dim: 4\nmetric:\n  "1,1": 1\n  "2,2": 1\n  "3,3": 1\n  "4,4": 1\n', encoding="utf-8")
    spec = load_manifold(path)
    assert spec.name == "plain"
    assert structure_kind(spec) == HERMITIAN
    frame = build_frame(spec, np.zeros(4))
    assert np.max(np.abs(frame.torsion.xi)) == 0.0


@pytest.mark.parametrize(
    "text,location",
    [
        ('dim: 2\nmetric:\n  "1,1": x1 +\n', "metric.1,1"),
        ('dim: 2\nmetric:\n  "1,3": 1\n', "metric"),
        ("dim: two\n", "dim"),
        ('dim: 2\nmetric:\n  "1,1": 1\nstructure:\n  kind: spin\n', "structure.kind"),
        ("dim: 2\nmetric: [1, 2\n", r"bad\.yml:\d+:\d+"),
    ],
)
def test_custom_manifold_errors_are_located(tmp_path, text, location):
    path = tmp_path / "bad.yml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_manifold(path)
    assert re.search(location, str(info.value))
