"""
Catalog of example manifolds and the product with a line.

Every builder returns an immutable :class:`ManifoldSpec`. Custom manifolds
are read from YAML files with the same fields (see ``doc/config.md``).
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from torsionlab.diffgeo import MetricField
from torsionlab.errors import (
    ConfigError,
    CoordinateRangeError,
    DomainViolationError,
    ExprSyntaxError,
    NotPositiveDefiniteError,
    TorsionLabError,
    UnknownIdentifierError,
)
from torsionlab.exprlang import BinOp, Const, Func, ScalarExpr, constant, parse_expr
from torsionlab.gstruct import CONTACT, HERMITIAN, ContactStructure, HermitianStructure, LeeForm

log = logging.getLogger(__name__)

Structure = Union[HermitianStructure, ContactStructure]

MAX_REJECTIONS = 1000


@dataclass(frozen=True)
class ManifoldSpec:
    """
    A chart with a metric, a U(n) or U(n)x1 structure and a sampling box.

    :param annulus: ``(r_min, r_max)`` on the first ``radial_dims`` coordinates;
        samples outside are rejected.
    :param base: For a product with a line, the Hermitian factor.
    """

    name: str
    dim: int
    metric: MetricField
    structure: Structure
    domain: Tuple[Tuple[float, float], ...]
    declared_class: str
    params: Tuple[Tuple[str, float], ...] = ()
    annulus: Optional[Tuple[float, float]] = None
    radial_dims: int = 0
    base: Optional["ManifoldSpec"] = None
    description: str = ""

    def contains(self, point: np.ndarray) -> bool:
        for x, (lo, hi) in zip(point, self.domain):
            if not lo <= x <= hi:
                return False
        if self.annulus is not None:
            r = float(np.linalg.norm(point[: self.radial_dims]))
            return self.annulus[0] < r < self.annulus[1]
        return True


def structure_kind(spec: ManifoldSpec) -> str:
    return HERMITIAN if isinstance(spec.structure, HermitianStructure) else CONTACT


def _zero() -> ScalarExpr:
    return constant(0.0)


def standard_complex_structure(n: int, offset: int = 0, size: Optional[int] = None) -> Tuple[Tuple[ScalarExpr, ...], ...]:
    """
    Rotation by a right angle in the coordinate pairs ``(x_{offset+1}, x_{offset+2})``, ...

    Coordinates outside the block are mapped to zero.
    """
    size = n - offset if size is None else size
    rows = [[_zero() for _ in range(n)] for _ in range(n)]
    for p in range(offset, offset + size, 2):
        rows[p + 1][p] = constant(1.0)
        rows[p][p + 1] = constant(-1.0)
    return tuple(tuple(r) for r in rows)


def _conformal_metric(n: int, factor: ScalarExpr) -> MetricField:
    return MetricField.from_upper(n, {(i, i): factor for i in range(n)}, _zero())


def _require_even(n: int, minimum: int = 4) -> None:
    if n < minimum or n % 2:
        raise ConfigError(f"dimension must be even and at least {minimum}, got {n}")


def _parameter_expr(
    text: Union[str, ScalarExpr], n: int, what: str, params: Optional[Mapping[str, float]] = None
) -> ScalarExpr:
    """Parse a user-supplied expression parameter; parse failures are configuration errors."""
    if not isinstance(text, str):
        return text
    try:
        return parse_expr(text, n, params)
    except (ExprSyntaxError, UnknownIdentifierError, CoordinateRangeError) as e:
        raise ConfigError(f"parameter {what}: {e}") from e


# ----------------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------------


def build_conformal_euclidean(n: int = 6, f: Union[str, ScalarExpr] = "x1*x3") -> ManifoldSpec:
    """
    ``exp(-2f) delta`` on R^n with the standard J; the Lee form is ``-2 df``.

    The default f is not minimal. An f of the first complex coordinate alone
    (``x1^2``, ``x1^2 + x2``) is minimal, and so is every f sampled in real
    dimension four.
    """
    _require_even(n)
    f_expr = _parameter_expr(f, n, "f")
    factor = ScalarExpr(Func("exp", BinOp("*", Const(-2.0), f_expr.ast)), f_expr.free_coords)
    return ManifoldSpec(
        name="conformal-euclidean",
        dim=n,
        metric=_conformal_metric(n, factor),
        structure=HermitianStructure(standard_complex_structure(n), LeeForm(potential=f_expr, scale=-2.0)),
        domain=((-1.0, 1.0),) * n,
        declared_class="W4",
        description=f"R^{n} with metric exp(-2f) delta, f = {f_expr.text}",
    )


def build_flat(n: int = 4) -> ManifoldSpec:
    spec = build_conformal_euclidean(n, "0")
    return replace(spec, name="flat", declared_class="Kaehler", description=f"flat C^{n // 2}")


def build_hopf_cover(n: int = 4) -> ManifoldSpec:
    """``delta / r^2`` on R^n minus the origin; Lee form ``-2 d(log r)``, parallel."""
    _require_even(n)
    r_sq = " + ".join(f"x{i}^2" for i in range(1, n + 1))
    factor = parse_expr(f"({r_sq})^(-1)", n)
    lee = LeeForm(potential=parse_expr(f"log({r_sq})", n), scale=-1.0)
    return ManifoldSpec(
        name="hopf",
        dim=n,
        metric=_conformal_metric(n, factor),
        structure=HermitianStructure(standard_complex_structure(n), lee),
        domain=((-2.0, 2.0),) * n,
        declared_class="W4",
        annulus=(0.5, 2.0),
        radial_dims=n,
        description=f"cover C^{n // 2} minus 0 of a Hopf manifold, annulus 0.5 < r < 2",
    )


def build_hyperbolic_kenmotsu(n: int = 5, c: float = 1.0) -> ManifoldSpec:
    """
    Upper half space ``delta / (c x1)^2`` with ``zeta = c x1 d1``, phi rotating
    the pairs ``(x2, x3), (x4, x5), ...`` and ``alpha = -c``.
    """
    if n < 3 or n % 2 == 0:
        raise ConfigError(f"dimension must be odd and at least 3, got {n}")
    if c == 0:
        raise ConfigError("curvature parameter c must be nonzero")
    params = {"c": float(c)}
    factor = parse_expr("1/(c^2*x1^2)", n, params)
    zeta = (parse_expr("c*x1", n, params),) + tuple(_zero() for _ in range(n - 1))
    structure = ContactStructure(
        phi=standard_complex_structure(n, offset=1),
        zeta=zeta,
        alpha=parse_expr("-c", n, params),
    )
    return ManifoldSpec(
        name="hyperbolic",
        dim=n,
        metric=_conformal_metric(n, factor),
        structure=structure,
        domain=((0.5, 2.0),) + ((-1.0, 1.0),) * (n - 1),
        declared_class="C5",
        params=tuple(params.items()),
        description=f"hyperbolic space H^{n}, sectional curvature -{c:g}^2",
    )


def with_alpha(spec: ManifoldSpec, alpha: Union[str, ScalarExpr]) -> ManifoldSpec:
    """The same contact data with ``alpha`` replaced, e.g. for a negative control."""
    if not isinstance(spec.structure, ContactStructure):
        raise ConfigError(f"{spec.name} carries no contact structure")
    expr = _parameter_expr(alpha, spec.dim, "alpha", dict(spec.params))
    return replace(
        spec,
        name=f"{spec.name}[alpha={expr.text}]",
        structure=replace(spec.structure, alpha=expr),
        declared_class="C5?",
    )


def product_with_line(base: ManifoldSpec) -> ManifoldSpec:
    """``M x R`` with ``phi = J + 0``, ``zeta = d/dt`` and ``g + dt^2``."""
    if not isinstance(base.structure, HermitianStructure):
        raise ConfigError(f"{base.name} is not Hermitian")
    n = base.dim
    rows = [list(r) + [_zero()] for r in base.metric.components]
    rows.append([_zero()] * n + [constant(1.0)])
    metric = MetricField(n + 1, tuple(tuple(r) for r in rows), base.metric.params)
    phi = [list(r) + [_zero()] for r in base.structure.J]
    phi.append([_zero()] * (n + 1))
    zeta = tuple(_zero() for _ in range(n)) + (constant(1.0),)
    structure = ContactStructure(
        phi=tuple(tuple(r) for r in phi), zeta=zeta, alpha=None, lee=base.structure.lee
    )
    return ManifoldSpec(
        name=f"{base.name}-product",
        dim=n + 1,
        metric=metric,
        structure=structure,
        domain=base.domain + ((-1.0, 1.0),),
        declared_class="C4" if base.declared_class in ("W4", "Kaehler") else "product",
        params=base.params,
        annulus=base.annulus,
        radial_dims=base.radial_dims,
        base=base,
        description=f"{base.description} times R",
    )


# ----------------------------------------------------------------------------
# Sampling
# ----------------------------------------------------------------------------


def _admissible(spec: ManifoldSpec, point: np.ndarray) -> bool:
    try:
        spec.metric.sample(point)
    except (NotPositiveDefiniteError, DomainViolationError) as e:
        log.debug("Rejected sample %s: %s", point, e)
        return False
    return True


def sample_points(spec: ManifoldSpec, count: int, seed: int) -> List[np.ndarray]:
    """
    ``count`` points drawn uniformly from the sampling box, rejecting points
    outside the annulus or where the metric is not positive definite.
    Deterministic in ``seed``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    lo = np.array([d[0] for d in spec.domain])
    hi = np.array([d[1] for d in spec.domain])
    points: List[np.ndarray] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > MAX_REJECTIONS * count:
            raise TorsionLabError(f"sampling domain of {spec.name} is nearly empty")
        p = lo + (hi - lo) * rng.random(spec.dim)
        if spec.contains(p) and _admissible(spec, p):
            points.append(p)
    log.debug("Sampled %s points on %s in %s attempts", count, spec.name, attempts)
    return points


def check_boundary(spec: ManifoldSpec, count: int = 1000, seed: int = 0) -> int:
    """
    Check positive definiteness on the boundary of the sampling domain (box
    faces, and the annulus spheres if any). Returns the number of points checked.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([d[0] for d in spec.domain])
    hi = np.array([d[1] for d in spec.domain])
    for k in range(count):
        p = lo + (hi - lo) * rng.random(spec.dim)
        if spec.annulus is not None:
            radial = p[: spec.radial_dims]
            norm = np.linalg.norm(radial)
            if norm == 0:
                radial = np.ones(spec.radial_dims)
                norm = np.linalg.norm(radial)
            p[: spec.radial_dims] = radial / norm * spec.annulus[k % 2]
        else:
            axis = k % spec.dim
            p[axis] = lo[axis] if (k // spec.dim) % 2 == 0 else hi[axis]
        spec.metric.sample(p)
    return count


# ----------------------------------------------------------------------------
# Catalog
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    build: Callable[..., ManifoldSpec]
    description: str
    anchor: str


def _hopf_product(n: int = 4) -> ManifoldSpec:
    return product_with_line(build_hopf_cover(n))


CATALOG: Dict[str, CatalogEntry] = {
    "flat": CatalogEntry(build_flat, "flat C^m, Kaehler", "xi = 0, every condition vanishes"),
    "conformal-euclidean": CatalogEntry(
        build_conformal_euclidean,
        "R^n with exp(-2f) delta, globally conformally Kaehler",
        "minimality through the reduced LcK conditions",
    ),
    "hopf": CatalogEntry(
        build_hopf_cover, "cover of a Hopf manifold", "Hopf manifolds induce minimal U(n)-structures"
    ),
    "hyperbolic": CatalogEntry(
        build_hyperbolic_kenmotsu,
        "hyperbolic space, alpha-Kenmotsu",
        "H^(2m+1) is a minimal U(m)x1-structure",
    ),
    "hopf-product": CatalogEntry(
        _hopf_product, "Hopf cover times R, class C4", "M x R over a Hopf manifold is minimal"
    ),
}

DEFAULT_DIMENSIONS = {"flat": 4, "conformal-euclidean": 6, "hopf": 4, "hyperbolic": 5, "hopf-product": 4}


def build_catalog(
    name: str, n: Optional[int] = None, c: Optional[float] = None, f: Optional[str] = None
) -> ManifoldSpec:
    """Build a catalog manifold by name, with optional parameter overrides."""
    if name not in CATALOG:
        raise ConfigError(f"unknown manifold {name!r}; catalog: {', '.join(sorted(CATALOG))}")
    kwargs: Dict[str, object] = {}
    if n is not None:
        kwargs["n"] = n
    if c is not None:
        if name != "hyperbolic":
            raise ConfigError(f"parameter c does not apply to {name}")
        kwargs["c"] = c
    if f is not None:
        if name != "conformal-euclidean":
            raise ConfigError(f"parameter f does not apply to {name}")
        kwargs["f"] = f
    return CATALOG[name].build(**kwargs)


# ----------------------------------------------------------------------------
# Custom manifolds
# ----------------------------------------------------------------------------


def _location(path: Path, key: str) -> str:
    return f"{path}: {key}"


def _expr(text, n: int, params: Mapping[str, float], path: Path, key: str) -> ScalarExpr:
    if isinstance(text, (int, float)):
        return constant(float(text))
    if not isinstance(text, str):
        raise ConfigError("expected an expression string", _location(path, key))
    try:
        return parse_expr(text, n, params)
    except TorsionLabError as e:
        raise ConfigError(str(e), _location(path, key)) from e


def _matrix(rows, n: int, params, path: Path, key: str) -> Tuple[Tuple[ScalarExpr, ...], ...]:
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise ConfigError(f"expected a {n}x{n} list of rows", _location(path, key))
    return tuple(
        tuple(_expr(e, n, params, path, f"{key}[{i}][{j}]") for j, e in enumerate(r))
        for i, r in enumerate(rows)
    )


def _vector(items, n: int, params, path: Path, key: str) -> Tuple[ScalarExpr, ...]:
    if not isinstance(items, list) or len(items) != n:
        raise ConfigError(f"expected a list of {n} expressions", _location(path, key))
    return tuple(_expr(e, n, params, path, f"{key}[{i}]") for i, e in enumerate(items))


def _lee(data, n: int, params, path: Path) -> LeeForm:
    if data is None:
        return LeeForm()
    if isinstance(data, list):
        return LeeForm(components=_vector(data, n, params, path, "structure.lee"))
    if isinstance(data, dict) and "potential" in data:
        scale = float(data.get("scale", 1.0))
        return LeeForm(potential=_expr(data["potential"], n, params, path, "structure.lee.potential"), scale=scale)
    raise ConfigError("expected a list of components or {potential, scale}", _location(path, "structure.lee"))


def _yaml_location(path: Path, err: yaml.YAMLError) -> Optional[str]:
    mark = getattr(err, "problem_mark", None)
    if mark is None:
        return str(path)
    return f"{path}:{mark.line + 1}:{mark.column + 1}"


def load_yaml(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read file: {e.strerror}", str(path)) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML parse error: {getattr(e, 'problem', e)}", _yaml_location(path, e)) from e
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping at top level", str(path))
    return data


def load_manifold(path: Union[str, Path]) -> ManifoldSpec:
    """
    Read a custom manifold. Metric entries are keyed ``"i,j"`` (1-based, upper
    triangle); missing entries are zero.
    """
    path = Path(path)
    data = load_yaml(path)
    try:
        n = int(data["dim"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("missing or invalid dim", _location(path, "dim")) from e
    params = {str(k): float(v) for k, v in (data.get("params") or {}).items()}

    upper: Dict[Tuple[int, int], ScalarExpr] = {}
    for key, text in (data.get("metric") or {}).items():
        try:
            i, j = (int(s) - 1 for s in str(key).split(","))
        except ValueError as e:
            raise ConfigError(f"bad metric key {key!r}", _location(path, "metric")) from e
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"metric key {key!r} out of range", _location(path, "metric"))
        upper[(min(i, j), max(i, j))] = _expr(text, n, params, path, f"metric.{key}")
    if not upper:
        raise ConfigError("metric has no entries", _location(path, "metric"))
    metric = MetricField.from_upper(n, upper, _zero(), params)

    struct = data.get("structure") or {}
    kind = struct.get("kind", HERMITIAN)
    structure: Structure
    if kind == HERMITIAN:
        j_rows = struct.get("J")
        j = _matrix(j_rows, n, params, path, "structure.J") if j_rows else standard_complex_structure(n)
        structure = HermitianStructure(j, _lee(struct.get("lee"), n, params, path))
    elif kind == CONTACT:
        phi_rows = struct.get("phi")
        phi = (_matrix(phi_rows, n, params, path, "structure.phi") if phi_rows
               else standard_complex_structure(n, offset=1))
        zeta = _vector(struct.get("zeta"), n, params, path, "structure.zeta")
        alpha = struct.get("alpha")
        structure = ContactStructure(
            phi=phi,
            zeta=zeta,
            alpha=None if alpha is None else _expr(alpha, n, params, path, "structure.alpha"),
        )
    else:
        raise ConfigError(f"unknown structure kind {kind!r}", _location(path, "structure.kind"))

    domain_data = data.get("domain") or [[-1.0, 1.0]] * n
    if len(domain_data) != n:
        raise ConfigError(f"expected {n} intervals", _location(path, "domain"))
    domain = tuple((float(lo), float(hi)) for lo, hi in domain_data)
    annulus = data.get("annulus")
    spec = ManifoldSpec(
        name=str(data.get("name", path.stem)),
        dim=n,
        metric=metric,
        structure=structure,
        domain=domain,
        declared_class=str(data.get("class", "")),
        params=tuple(sorted(params.items())),
        annulus=None if annulus is None else (float(annulus[0]), float(annulus[1])),
        radial_dims=n if annulus is not None else 0,
        description=str(data.get("description", "")),
    )
    log.info("Loaded manifold %s (dim %s) from %s", spec.name, n, path)
    return spec


def resolve_manifold(
    name_or_path: str, n: Optional[int] = None, c: Optional[float] = None, f: Optional[str] = None
) -> ManifoldSpec:
    """A catalog name, or a path to a custom manifold file."""
    if name_or_path in CATALOG:
        return build_catalog(name_or_path, n, c, f)
    path = Path(name_or_path)
    if path.suffix in (".yml", ".yaml") and path.exists():
        return load_manifold(path)
    raise ConfigError(f"unknown manifold {name_or_path!r}; catalog: {', '.join(sorted(CATALOG))}")


def certify(spec: ManifoldSpec, points: Sequence[np.ndarray]) -> float:
    """Worst structure residual over ``points``."""
    from torsionlab.conditions import structure_residual
    from torsionlab.gstruct import build_frame

    return max(structure_residual(build_frame(spec, p)) for p in points)
