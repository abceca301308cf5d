"""
Suite orchestration and report files.

Reports are byte-stable: keys are sorted, floats are written in scientific
notation as the shortest round-trip digits padded to 16 decimals, and nothing
depends on the clock.
"""
import csv
import io
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from torsionlab import __version__
from torsionlab.conditions import (
    ERROR,
    FAIL,
    INCONCLUSIVE,
    NOT_APPLICABLE,
    PASS,
    ConditionResidual,
    evaluate,
)
from torsionlab.config import RunConfig
from torsionlab.errors import TorsionLabError
from torsionlab.gstruct import build_frame
from torsionlab.manifolds import ManifoldSpec, resolve_manifold, sample_points, with_alpha

log = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_CONFIG = 3

_PLACEHOLDER = re.compile(r'"@@float(\d+)@@"')


@dataclass
class ConditionSummary:
    name: str
    verdict: str
    max: Optional[float] = None
    mean: Optional[float] = None
    worst_point: Optional[List[float]] = None
    points: List[ConditionResidual] = field(default_factory=list)

    @staticmethod
    def reduce(name: str, residuals: Sequence[ConditionResidual]) -> "ConditionSummary":
        values = [r.value for r in residuals if r.value is not None and np.isfinite(r.value)]
        errors = [r for r in residuals if r.verdict == ERROR]
        verdicts = {r.verdict for r in residuals}
        if errors:
            verdict = ERROR
        elif FAIL in verdicts:
            verdict = FAIL
        elif INCONCLUSIVE in verdicts:
            verdict = INCONCLUSIVE
        elif PASS in verdicts:
            verdict = PASS
        else:
            verdict = NOT_APPLICABLE
        summary = ConditionSummary(name, verdict, points=list(residuals))
        if values:
            worst = max(
                (r for r in residuals if r.value is not None and np.isfinite(r.value)),
                key=lambda r: r.value,  # type: ignore[arg-type, return-value]
            )
            summary.max = float(worst.value)  # type: ignore[arg-type]
            summary.mean = float(np.mean(values))
            summary.worst_point = list(worst.point)
        return summary


@dataclass
class ConditionReport:
    config: Dict[str, Any]
    manifold: str
    seed: int
    conditions: List[ConditionSummary]
    details: bool = True
    version: str = __version__

    @property
    def exit_code(self) -> int:
        verdicts = {c.verdict for c in self.conditions}
        if FAIL in verdicts or ERROR in verdicts:
            return EXIT_FAIL
        if INCONCLUSIVE in verdicts:
            return EXIT_INCONCLUSIVE
        return EXIT_PASS

    def summary(self, name: str) -> ConditionSummary:
        return next(c for c in self.conditions if c.name == name)

    def to_dict(self) -> Dict[str, Any]:
        results = {}
        for c in self.conditions:
            entry: Dict[str, Any] = {
                "max": c.max,
                "mean": c.mean,
                "verdict": c.verdict,
                "worst_point": c.worst_point,
            }
            if self.details:
                entry["points"] = [
                    {"point": list(p.point), "value": p.value, "verdict": p.verdict, "message": p.message}
                    for p in c.points
                ]
            results[c.name] = entry
        return {
            "config": self.config,
            "manifold": self.manifold,
            "results": results,
            "seed": self.seed,
            "version": self.version,
        }


def build_manifold(config: RunConfig) -> ManifoldSpec:
    spec = resolve_manifold(config.manifold, config.n, config.c, config.f)
    if config.alpha is not None:
        spec = with_alpha(spec, config.alpha)
    return spec


def evaluate_point(spec: ManifoldSpec, point: np.ndarray, config: RunConfig) -> List[ConditionResidual]:
    """All requested conditions at one point; an evaluation error is recorded for each of them."""
    try:
        frame = build_frame(spec, point)
        return evaluate(config.conditions, spec, frame, config.tolerances)
    except (TorsionLabError, np.linalg.LinAlgError) as e:
        log.warning("Evaluation failed at %s: %s", point, e)
        pt = tuple(float(x) for x in point)
        return [ConditionResidual(name, pt, None, ERROR, str(e)) for name in config.conditions]


def run_suite(config: RunConfig) -> ConditionReport:
    """
    Sample the manifold and evaluate every requested condition at every point.

    Points are evaluated in a thread pool; results keep the sampling order so
    the report does not depend on ``workers``.
    """
    spec = build_manifold(config)
    points = sample_points(spec, config.samples, config.seed)
    log.info("Evaluating %s conditions at %s points of %s", len(config.conditions), len(points), spec.name)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_point = list(pool.map(lambda p: evaluate_point(spec, p, config), points))
    else:
        per_point = [evaluate_point(spec, p, config) for p in points]

    summaries = []
    for k, name in enumerate(config.conditions):
        summary = ConditionSummary.reduce(name, [row[k] for row in per_point])
        log.info("%s: %s (max %s)", name, summary.verdict, summary.max)
        summaries.append(summary)
    return ConditionReport(config.echo(), spec.name, config.seed, summaries, config.details)


# ----------------------------------------------------------------------------
# Emission
# ----------------------------------------------------------------------------


def scientific(value: float) -> str:
    """``1e-07`` becomes ``1.0000000000000000e-07``; digits beyond the 16th appear only when needed."""
    return np.format_float_scientific(float(value), unique=True, min_digits=16)


def format_float(value: Optional[float]) -> str:
    if value is None or not np.isfinite(value):
        return ""
    return scientific(value)


def _freeze_floats(obj: Any, table: List[str]) -> Any:
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            return None
        table.append(scientific(float(obj)))
        return f"@@float{len(table) - 1}@@"
    if isinstance(obj, dict):
        return {str(k): _freeze_floats(v, table) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_freeze_floats(v, table) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def render_json(report: ConditionReport) -> str:
    table: List[str] = []
    frozen = _freeze_floats(report.to_dict(), table)
    text = json.dumps(frozen, indent=2, sort_keys=True, ensure_ascii=True)
    text = _PLACEHOLDER.sub(lambda m: table[int(m.group(1))], text)
    return text + "\n"


CSV_COLUMNS = ("condition", "point", "value", "verdict", "message")


def render_csv(report: ConditionReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in report.conditions:
        for p in c.points:
            point = " ".join(scientific(x) for x in p.point)
            writer.writerow((c.name, point, format_float(p.value), p.verdict, p.message or ""))
    return buffer.getvalue()


def emit_report(report: ConditionReport, fmt: str, path: Optional[Union[str, Path]]) -> str:
    """Render the report; write it to ``path`` when given. Returns the text."""
    text = render_json(report) if fmt == "json" else render_csv(report)
    if path is not None:
        out = Path(path)
        log.debug("Writing %s report %s", fmt, out.resolve())
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text
