"""
Run configuration: YAML files with one level of nesting, merged with
command-line overrides.
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import yaml

from torsionlab.conditions import CONDITIONS, DEFAULT_FAIL_TOL, DEFAULT_PASS_TOL, Tolerances
from torsionlab.errors import ConfigError
from torsionlab.manifolds import CATALOG

log = logging.getLogger(__name__)

FORMATS = ("json", "csv")
DEFAULT_CONDITIONS = (
    "structure",
    "harmonic",
    "harmonic_map",
    "minimal",
    "lck4",
    "lck2",
    "kenmotsu",
    "c4product",
)
DEFAULT_SAMPLES = 64
DEFAULT_SEED = 42

_TOP_KEYS = {"manifold", "params", "samples", "seed", "tolerances", "conditions", "output", "workers", "details"}
_PARAM_KEYS = {"n", "c", "f", "alpha"}


@dataclass(frozen=True)
class RunConfig:
    manifold: str
    n: Optional[int] = None
    c: Optional[float] = None
    f: Optional[str] = None
    alpha: Optional[str] = None
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    pass_tol: float = DEFAULT_PASS_TOL
    fail_tol: float = DEFAULT_FAIL_TOL
    conditions: Tuple[str, ...] = DEFAULT_CONDITIONS
    report: Optional[str] = None
    format: str = "json"
    workers: int = 1
    details: bool = True
    source: Optional[str] = field(default=None, compare=False)

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(self.pass_tol, self.fail_tol)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Replace every field whose override is not ``None``, then validate."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        config = replace(self, **changes)
        config.validate()
        return config

    def validate(self, location: Optional[str] = None) -> None:
        if self.manifold not in CATALOG and not self.manifold.endswith((".yml", ".yaml")):
            raise ConfigError(
                f"unknown manifold {self.manifold!r}; catalog: {', '.join(sorted(CATALOG))}", location
            )
        if self.samples < 1:
            raise ConfigError(f"samples must be at least 1, got {self.samples}", location)
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}", location)
        if not 0 < self.pass_tol < self.fail_tol:
            raise ConfigError(
                f"tolerances must satisfy 0 < pass ({self.pass_tol:g}) < fail ({self.fail_tol:g})", location
            )
        unknown = [c for c in self.conditions if c not in CONDITIONS]
        if unknown:
            raise ConfigError(
                f"unknown conditions {', '.join(unknown)}; known: {', '.join(sorted(CONDITIONS))}", location
            )
        if self.format not in FORMATS:
            raise ConfigError(f"unknown report format {self.format!r}", location)

    def echo(self) -> Dict[str, Any]:
        """The configuration as written into reports."""
        data = asdict(self)
        data.pop("source")
        data.pop("workers")
        data["conditions"] = list(self.conditions)
        return data


def parse_conditions(text: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    return tuple(i.strip() for i in items if str(i).strip())


# ----------------------------------------------------------------------------
# YAML loading
# ----------------------------------------------------------------------------


def _node_location(path: Path, root: Optional[yaml.Node], keys: Sequence[str]) -> str:
    """``path:line:col`` of the value at ``keys``, or of the deepest key found."""
    node = root
    mark = getattr(root, "start_mark", None)
    for key in keys:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if getattr(k, "value", None) == key:
                node, mark = v, v.start_mark
                break
        else:
            break
    if mark is None:
        return str(path)
    return f"{path}:{mark.line + 1}:{mark.column + 1}"


def _typed(value: Any, kind: type, path: Path, root, keys: Sequence[str]) -> Any:
    if value is None:
        return None
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return kind(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(
            f"{'.'.join(keys)} must be of type {kind.__name__}", _node_location(path, root, keys)
        ) from e


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a run configuration. Missing keys take their documented
    defaults. Errors carry the file position of the offending value.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read configuration: {e.strerror}", str(path)) from e
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        location = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"YAML parse error: {getattr(e, 'problem', e)}", location) from e
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping at top level", str(path))

    unknown = set(data) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", _node_location(path, root, [key]))
    if "manifold" not in data:
        raise ConfigError("missing key 'manifold'", str(path))

    params = data.get("params") or {}
    tolerances = data.get("tolerances") or {}
    output = data.get("output") or {}
    for section, keys in (("params", _PARAM_KEYS), ("tolerances", {"pass", "fail"}),
                          ("output", {"path", "format"})):
        value = data.get(section) or {}
        if not isinstance(value, dict):
            raise ConfigError(f"{section} must be a mapping", _node_location(path, root, [section]))
        extra = set(value) - keys
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"unknown key {section}.{key}", _node_location(path, root, [section, key]))

    manifold = str(data["manifold"])
    if manifold.endswith((".yml", ".yaml")) and not Path(manifold).is_absolute():
        manifold = str(path.parent / manifold)

    kwargs: Dict[str, Any] = {
        "manifold": manifold,
        "n": _typed(params.get("n"), int, path, root, ["params", "n"]),
        "c": _typed(params.get("c"), float, path, root, ["params", "c"]),
        "f": _typed(params.get("f"), str, path, root, ["params", "f"]),
        "alpha": _typed(params.get("alpha"), str, path, root, ["params", "alpha"]),
        "samples": _typed(data.get("samples", DEFAULT_SAMPLES), int, path, root, ["samples"]),
        "seed": _typed(data.get("seed", DEFAULT_SEED), int, path, root, ["seed"]),
        "pass_tol": _typed(tolerances.get("pass", DEFAULT_PASS_TOL), float, path, root, ["tolerances", "pass"]),
        "fail_tol": _typed(tolerances.get("fail", DEFAULT_FAIL_TOL), float, path, root, ["tolerances", "fail"]),
        "report": _typed(output.get("path"), str, path, root, ["output", "path"]),
        "format": _typed(output.get("format", "json"), str, path, root, ["output", "format"]),
        "workers": _typed(data.get("workers", 1), int, path, root, ["workers"]),
        "details": bool(data.get("details", True)),
        "source": str(path),
    }
    if "conditions" in data:
        kwargs["conditions"] = parse_conditions(data["conditions"])
    config = RunConfig(**kwargs)
    config.validate(str(path))
    log.debug("Loaded configuration %s", config)
    return config
