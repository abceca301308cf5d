"""
Dense pointwise multilinear algebra.

Components are stored row-major in numpy arrays of shape ``(n,) * rank``.
A vector ``X`` has components ``X[a]``, an endomorphism ``A`` acts as
``(A X)[a] = A[a, b] X[b]``, and a bilinear form ``h`` is ``h[a, b]``.

:class:`TensorJet` carries an array together with its first partial
derivatives (trailing axis). It is the carrier for every assembled field
whose covariant derivative is needed later (Christoffel symbols, the
intrinsic torsion, the deformed metric).
"""
import logging
import string
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from torsionlab.errors import (
    NotPositiveDefiniteError,
    RankDeficiencyError,
    SingularMetricError,
    VarianceError,
)

log = logging.getLogger(__name__)

UP = "up"
DOWN = "down"

MAX_DIM = 16
PIVOT_TOLERANCE = 1e-12
CONDITION_LIMIT = 1e12
ORTHONORMAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TensorValue:
    """Components of a tensor at a point together with its variance signature."""

    dim: int
    variance: Tuple[str, ...]
    components: np.ndarray

    def __post_init__(self) -> None:
        if not 0 < self.dim <= MAX_DIM:
            raise ValueError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        for v in self.variance:
            if v not in (UP, DOWN):
                raise VarianceError(f"unknown variance {v!r}")
        expected = (self.dim,) * len(self.variance)
        if self.components.shape != expected:
            raise ValueError(f"components shape {self.components.shape}, expected {expected}")

    @property
    def rank(self) -> int:
        return len(self.variance)

    @staticmethod
    def vector(components: Sequence[float]) -> "TensorValue":
        arr = np.asarray(components, dtype=float)
        return TensorValue(arr.shape[0], (UP,), arr)

    @staticmethod
    def covector(components: Sequence[float]) -> "TensorValue":
        arr = np.asarray(components, dtype=float)
        return TensorValue(arr.shape[0], (DOWN,), arr)

    @staticmethod
    def endomorphism(matrix: np.ndarray) -> "TensorValue":
        arr = np.asarray(matrix, dtype=float)
        return TensorValue(arr.shape[0], (UP, DOWN), arr)

    @staticmethod
    def bilinear(matrix: np.ndarray) -> "TensorValue":
        arr = np.asarray(matrix, dtype=float)
        return TensorValue(arr.shape[0], (DOWN, DOWN), arr)

    def tensor(self, other: "TensorValue") -> "TensorValue":
        """Tensor product, slots of ``self`` first."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return TensorValue(
            self.dim, self.variance + other.variance, np.multiply.outer(self.components, other.components)
        )


@dataclass(frozen=True)
class FrameBasis:
    """
    ``n`` vectors orthonormal for ``inner``. ``vectors[j]`` is the j-th basis
    vector; ``role`` names the inner product ("g" or "g~").
    """

    vectors: np.ndarray
    inner: np.ndarray
    role: str = "g"

    def gram(self) -> np.ndarray:
        return self.vectors @ self.inner @ self.vectors.T

    def outer_sum(self) -> np.ndarray:
        """``sum_j e_j (x) e_j``, the inverse of ``inner`` for a complete basis."""
        return self.vectors.T @ self.vectors

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.vectors.shape[0]))))


def contract(t: TensorValue, slot_up: int, slot_down: int) -> TensorValue:
    """Trace over one up and one down slot."""
    for slot in (slot_up, slot_down):
        if not 0 <= slot < t.rank:
            raise VarianceError(f"slot {slot} out of range for rank {t.rank}")
    if t.variance[slot_up] != UP or t.variance[slot_down] != DOWN:
        raise VarianceError(
            f"cannot contract slots {slot_up} ({t.variance[slot_up]}) and "
            f"{slot_down} ({t.variance[slot_down]})"
        )
    comps = np.trace(t.components, axis1=slot_up, axis2=slot_down)
    variance = tuple(v for i, v in enumerate(t.variance) if i not in (slot_up, slot_down))
    return TensorValue(t.dim, variance, np.asarray(comps, dtype=float))


def check_metric(metric: np.ndarray) -> np.ndarray:
    """Return the inverse of a symmetric metric, refusing ill-conditioned ones."""
    if np.linalg.cond(metric) > CONDITION_LIMIT:
        raise SingularMetricError(f"metric condition number exceeds {CONDITION_LIMIT:.0e}")
    return np.linalg.inv(metric)


def raise_lower(t: TensorValue, slot: int, metric: TensorValue, direction: str) -> TensorValue:
    """Flip the variance of one slot with the metric (``up`` raises, ``down`` lowers)."""
    if not 0 <= slot < t.rank:
        raise VarianceError(f"slot {slot} out of range for rank {t.rank}")
    want_from = DOWN if direction == UP else UP
    if direction not in (UP, DOWN) or t.variance[slot] != want_from:
        raise VarianceError(f"slot {slot} is {t.variance[slot]}, cannot move it {direction}")
    g = metric.components
    inv = check_metric(g)
    mat = inv if direction == UP else g
    moved = np.tensordot(mat, t.components, axes=([1], [slot]))
    moved = np.moveaxis(moved, 0, slot)
    variance = t.variance[:slot] + (direction,) + t.variance[slot + 1 :]
    return TensorValue(t.dim, variance, moved)


def check_positive_definite(inner: np.ndarray) -> None:
    """Cholesky-style factorisation; any pivot below the tolerance fails."""
    n = inner.shape[0]
    lower = np.zeros_like(inner, dtype=float)
    for j in range(n):
        pivot = inner[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot < PIVOT_TOLERANCE:
            raise NotPositiveDefiniteError(f"pivot {j} is {pivot:.3e}")
        lower[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            lower[i, j] = (inner[i, j] - lower[i, :j] @ lower[j, :j]) / lower[j, j]


def gram_schmidt(seed: np.ndarray, inner: np.ndarray, role: str = "g") -> FrameBasis:
    """
    Orthonormalise ``seed`` (rows) against ``inner``.

    Classical Gram-Schmidt with one reorthogonalisation pass.

    :param seed: ``(n, n)`` array whose rows are linearly independent vectors.
    :param inner: Symmetric positive-definite Gram matrix.
    :param role: Name of the inner product, stored on the basis.
    :return: The orthonormal basis, spanning the same flags as ``seed``.
    """
    check_positive_definite(inner)
    seed = np.asarray(seed, dtype=float)
    basis: List[np.ndarray] = []
    for k, v in enumerate(seed):
        w = v.copy()
        for _ in range(2):
            for q in basis:
                w = w - (q @ inner @ w) * q
        norm_sq = w @ inner @ w
        scale = v @ inner @ v
        if norm_sq <= 1e-20 * max(scale, 1e-300):
            raise RankDeficiencyError(f"seed vector {k} is dependent on the previous ones")
        basis.append(w / np.sqrt(norm_sq))
    frame = FrameBasis(np.array(basis), np.asarray(inner, dtype=float), role)
    defect = frame.orthonormality_defect()
    if defect > ORTHONORMAL_TOLERANCE:
        raise RankDeficiencyError(f"orthonormality lost ({defect:.3e}); seeds nearly dependent")
    return frame


def complete_basis(priority: Sequence[np.ndarray], inner: np.ndarray, role: str = "g") -> FrameBasis:
    """
    Orthonormal basis whose first vectors span ``priority`` (zero vectors are
    skipped), completed with coordinate directions.
    """
    n = inner.shape[0]
    chosen: List[np.ndarray] = []
    candidates = [np.asarray(p, dtype=float) for p in priority] + list(np.eye(n))
    for cand in candidates:
        if len(chosen) == n:
            break
        trial = np.array(chosen + [cand])
        # the rank test is done in an inner-orthonormal picture
        q = np.linalg.cholesky(inner).T @ trial.T
        if np.linalg.matrix_rank(q, tol=1e-8 * max(1.0, np.max(np.abs(q)))) == len(trial):
            chosen.append(cand)
    return gram_schmidt(np.array(chosen), inner, role)


# ----------------------------------------------------------------------------
# First-order jets of arrays
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TensorJet:
    """An array ``value`` and its partials ``grad[..., l] = d_l value[...]``."""

    value: np.ndarray
    grad: np.ndarray

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    @staticmethod
    def constant(value: np.ndarray, n: int) -> "TensorJet":
        value = np.asarray(value, dtype=float)
        return TensorJet(value, np.zeros(value.shape + (n,)))

    def __add__(self, other: "JetOperand") -> "TensorJet":
        other = _as_jet(other, self.n)
        return TensorJet(self.value + other.value, self.grad + other.grad)

    __radd__ = __add__

    def __neg__(self) -> "TensorJet":
        return TensorJet(-self.value, -self.grad)

    def __sub__(self, other: "JetOperand") -> "TensorJet":
        return self + (-_as_jet(other, self.n))

    def __rsub__(self, other: "JetOperand") -> "TensorJet":
        return _as_jet(other, self.n) - self

    def __mul__(self, factor: Union[float, "TensorJet"]) -> "TensorJet":
        """Product with a number or with a scalar jet."""
        if isinstance(factor, TensorJet):
            if factor.value.shape != ():
                raise ValueError("only scalar jets multiply elementwise")
            return jeinsum(",...->...", factor, self)
        return TensorJet(self.value * factor, self.grad * factor)

    __rmul__ = __mul__

    def map_scalar(self, f: Callable[[float], float], df: Callable[[float], float]) -> "TensorJet":
        """Compose a scalar jet with a smooth function."""
        x = float(self.value)
        return TensorJet(np.asarray(f(x)), df(x) * self.grad)

    def inv(self) -> "TensorJet":
        """Matrix inverse; d(A^-1) = -A^-1 dA A^-1."""
        v = np.linalg.inv(self.value)
        return TensorJet(v, -np.einsum("ij,jkz,kl->ilz", v, self.grad, v))

    def transpose(self) -> "TensorJet":
        return TensorJet(self.value.T, np.swapaxes(self.grad, 0, 1))

    def directional(self, direction: np.ndarray) -> np.ndarray:
        """The derivative of ``value`` along ``direction``."""
        return self.grad @ direction


JetOperand = Union[TensorJet, np.ndarray, float]


def _as_jet(x: JetOperand, n: int) -> TensorJet:
    if isinstance(x, TensorJet):
        return x
    return TensorJet.constant(np.asarray(x, dtype=float), n)


def jeinsum(subscripts: str, *operands: JetOperand) -> Union[TensorJet, np.ndarray]:
    """
    ``numpy.einsum`` with the Leibniz rule applied to every jet operand.
    Plain arrays are treated as constants. Returns an array if no operand is
    a jet.
    """
    inputs, output = subscripts.split("->")
    in_specs = inputs.split(",")
    values = [op.value if isinstance(op, TensorJet) else np.asarray(op, dtype=float) for op in operands]
    value = np.einsum(subscripts, *values)
    jets = [i for i, op in enumerate(operands) if isinstance(op, TensorJet)]
    if not jets:
        return value
    used = set(subscripts)
    z = next(c for c in string.ascii_letters if c not in used)
    grad: Optional[np.ndarray] = None
    for i in jets:
        specs = list(in_specs)
        specs[i] = specs[i] + z
        args = list(values)
        args[i] = operands[i].grad  # type: ignore[union-attr]
        term = np.einsum(",".join(specs) + "->" + output + z, *args)
        grad = term if grad is None else grad + term
    return TensorJet(value, grad)  # type: ignore[arg-type]
