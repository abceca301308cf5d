"""
Exception hierarchy shared by every torsionlab module.
"""
from typing import Optional, Sequence


class TorsionLabError(Exception):
    """Base class for all errors raised by torsionlab."""


class ExprSyntaxError(TorsionLabError):
    def __init__(self, message: str, offset: int, text: str):
        super().__init__(f"{message} at byte {offset} in {text!r}")
        self.offset = offset
        self.text = text


class UnknownIdentifierError(TorsionLabError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at byte {offset}")
        self.name = name
        self.offset = offset


class CoordinateRangeError(TorsionLabError):
    def __init__(self, index: int, dim: int):
        super().__init__(f"coordinate x{index} out of range for dimension {dim}")
        self.index = index
        self.dim = dim


class DomainViolationError(TorsionLabError):
    def __init__(self, subexpr: str, point: Sequence[float], reason: str):
        pt = ", ".join(f"{p:.6g}" for p in point)
        super().__init__(f"{reason} in {subexpr!r} at ({pt})")
        self.subexpr = subexpr
        self.point = tuple(point)


class VarianceError(TorsionLabError):
    pass


class SingularMetricError(TorsionLabError):
    pass


class NotPositiveDefiniteError(TorsionLabError):
    pass


class RankDeficiencyError(TorsionLabError):
    pass


class BasisMismatchError(TorsionLabError):
    pass


class UnsupportedDegreeError(TorsionLabError):
    pass


class StructureViolationError(TorsionLabError):
    def __init__(self, what: str, residual: float):
        super().__init__(f"{what} violated, residual {residual:.3e}")
        self.what = what
        self.residual = residual


class ConfigError(TorsionLabError):
    def __init__(self, message: str, location: Optional[str] = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
