"""Euclidean Jordan algebra of quadratic forms (spin algebra) and products thereof.

An element of the spin algebra is a pair (head, tail) with scalar head and an
m-vector tail.  The Jordan product is

    x o y = (x.y, x0*tail(y) + y0*tail(x)),

the identity is e = (1, 0), and the rank is always 2.  The cone of squares is
the second-order cone {x : head >= ||tail||}.  Throughout this package the
inner product is <x, y> = 2*(x0*y0 + tail(x).tail(y)); all norms, adjoints and
operator norms downstream use this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpinElement",
    "BlockConeVector",
    "DimensionMismatchError",
    "SingularElementError",
    "SpectralDomainError",
    "identity",
    "jordan_product",
    "inner",
    "norm",
    "spectral",
    "det",
    "trace",
    "inverse",
    "power",
    "quadratic_rep_apply",
    "is_in_cone",
    "is_interior",
    "lambda_min",
    "lambda_max",
]


class DimensionMismatchError(ValueError):
    """Operands live in spin algebras of different dimension."""


class SingularElementError(ArithmeticError):
    """Inverse of an element with (numerically) vanishing determinant."""


class SpectralDomainError(ValueError):
    """Fractional power of an element with a non-positive eigenvalue."""


def _as_tail(tail):
    arr = np.asarray(tail, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("tail must be a vector of dimension >= 1")
    return arr


@dataclass(frozen=True)
class SpinElement:
    """Element of the spin algebra E_{1+m}: scalar head, m-vector tail."""

    head: float
    tail: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "head", float(self.head))
        arr = _as_tail(self.tail).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "tail", arr)

    @property
    def dim(self) -> int:
        return self.tail.size

    def __add__(self, other: "SpinElement") -> "SpinElement":
        _check_dims(self, other)
        return SpinElement(self.head + other.head, self.tail + other.tail)

    def __sub__(self, other: "SpinElement") -> "SpinElement":
        _check_dims(self, other)
        return SpinElement(self.head - other.head, self.tail - other.tail)

    def __mul__(self, scalar) -> "SpinElement":
        return SpinElement(self.head * scalar, self.tail * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "SpinElement":
        return SpinElement(self.head / scalar, self.tail / scalar)

    def __neg__(self) -> "SpinElement":
        return SpinElement(-self.head, -self.tail)

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.head], self.tail))

    @classmethod
    def from_array(cls, arr) -> "SpinElement":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0], arr[1:])

    def __repr__(self):
        return f"SpinElement({self.head!r}, {self.tail!r})"


def identity(m: int) -> SpinElement:
    """The multiplicative unit e = (1, 0) of E_{1+m}."""
    return SpinElement(1.0, np.zeros(m))


def _check_dims(x: SpinElement, y: SpinElement):
    if x.dim != y.dim:
        raise DimensionMismatchError(f"tail dimensions differ: {x.dim} != {y.dim}")


def jordan_product(x, y):
    """Jordan product x o y; commutative, not associative."""
    if isinstance(x, BlockConeVector):
        return _blockwise2(jordan_product, x, y)
    _check_dims(x, y)
    head = x.head * y.head + float(x.tail @ y.tail)
    return SpinElement(head, x.head * y.tail + y.head * x.tail)


def inner(x, y) -> float:
    """Trace inner product <x, y> = tr(x o y) = 2 x.y; summed over blocks."""
    if isinstance(x, BlockConeVector):
        x._check_compatible(y)
        return 2.0 * float(x.heads @ y.heads + np.vdot(x.tails, y.tails))
    _check_dims(x, y)
    return 2.0 * (x.head * y.head + float(x.tail @ y.tail))


def norm(x) -> float:
    """Frobenius norm induced by the trace inner product."""
    return float(np.sqrt(inner(x, x)))


def _frame_direction(tail: np.ndarray) -> np.ndarray:
    """Unit direction for the Jordan frame; first axis when tail = 0."""
    t = float(np.linalg.norm(tail))
    if t == 0.0:
        u = np.zeros(tail.size)
        u[0] = 1.0
        return u
    return tail / t


def spectral(x: SpinElement):
    """Eigenvalues and Jordan frame: x = lam_p*c_p + lam_m*c_m.

    Returns (lam_p, lam_m, (c_p, c_m)) with lam_pm = head +- ||tail|| and
    c_pm = (1, +-u)/2 for the unit tail direction u.
    """
    t = float(np.linalg.norm(x.tail))
    u = _frame_direction(x.tail)
    c_plus = SpinElement(0.5, 0.5 * u)
    c_minus = SpinElement(0.5, -0.5 * u)
    return x.head + t, x.head - t, (c_plus, c_minus)


def lambda_min(x) -> float:
    if isinstance(x, BlockConeVector):
        return float(np.min(x.heads - np.linalg.norm(x.tails, axis=1)))
    return x.head - float(np.linalg.norm(x.tail))


def lambda_max(x) -> float:
    if isinstance(x, BlockConeVector):
        return float(np.max(x.heads + np.linalg.norm(x.tails, axis=1)))
    return x.head + float(np.linalg.norm(x.tail))


def det(x) -> float:
    """Determinant; product of eigenvalues, aggregated over blocks."""
    if isinstance(x, BlockConeVector):
        return float(np.prod(x.heads**2 - np.sum(x.tails**2, axis=1)))
    return x.head**2 - float(x.tail @ x.tail)


def trace(x) -> float:
    if isinstance(x, BlockConeVector):
        return 2.0 * float(np.sum(x.heads))
    return 2.0 * x.head


def inverse(x):
    """Jordan inverse x^-1 = Rx/det(x), R the diagonal mirroring."""
    if isinstance(x, BlockConeVector):
        return _blockwise1(inverse, x)
    d = det(x)
    if abs(d) <= 1e-14 * (1.0 + inner(x, x)):
        raise SingularElementError(f"element is singular: det = {d:g}")
    return SpinElement(x.head / d, -x.tail / d)


def power(x, alpha: float):
    """Spectral power x^alpha = lam_p^a c_p + lam_m^a c_m.

    Integer alpha only needs invertibility (for negative exponents);
    fractional alpha needs strictly positive eigenvalues.
    """
    if isinstance(x, BlockConeVector):
        return _blockwise1(lambda b: power(b, alpha), x)
    lam_p, lam_m, (c_p, c_m) = spectral(x)
    if alpha != int(alpha):
        if lam_p <= 0.0 or lam_m <= 0.0:
            raise SpectralDomainError(
                f"fractional power of non-positive eigenvalues ({lam_p:g}, {lam_m:g})"
            )
    elif alpha < 0 and (lam_p == 0.0 or lam_m == 0.0):
        raise SingularElementError("negative power of singular element")
    return lam_p**alpha * c_p + lam_m**alpha * c_m


def quadratic_rep_apply(p, y):
    """Apply the quadratic presentation: Q_p y = 2 p o (p o y) - (p o p) o y."""
    if isinstance(p, BlockConeVector):
        return _blockwise2(quadratic_rep_apply, p, y)
    _check_dims(p, y)
    return 2.0 * jordan_product(p, jordan_product(p, y)) - jordan_product(
        jordan_product(p, p), y
    )


def is_in_cone(x, tol: float = 0.0) -> bool:
    """Second-order cone membership, lam_min >= -tol (all blocks)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return lambda_min(x) >= -tol


def is_interior(x, tol: float = 0.0) -> bool:
    """Strict cone interior, lam_min > tol (all blocks)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return lambda_min(x) > tol


class BlockConeVector:
    """Element of a finite product of spin algebras with uniform block dimension.

    Stored as arrays heads (n,) and tails (n, m) for n blocks of E_{1+m}; this
    covers both the per-pixel product cone of TV (n blocks of E_{1+2}) and the
    single big cone of H1 (one block).  Mixed block dimensions are not
    supported.  Values are immutable after construction and all algebraic
    operations act blockwise.
    """

    __slots__ = ("heads", "tails")

    def __init__(self, blocks):
        dims = {b.dim for b in blocks}
        if not blocks:
            raise ValueError("need at least one block")
        if len(dims) != 1:
            raise DimensionMismatchError(f"mixed block dimensions {sorted(dims)}")
        heads = np.array([b.head for b in blocks], dtype=float)
        tails = np.stack([b.tail for b in blocks]).astype(float)
        heads.flags.writeable = False
        tails.flags.writeable = False
        self.heads = heads
        self.tails = tails

    @classmethod
    def from_arrays(cls, heads, tails) -> "BlockConeVector":
        heads = np.ascontiguousarray(heads, dtype=float)
        tails = np.ascontiguousarray(tails, dtype=float)
        if heads.ndim != 1 or tails.ndim != 2 or tails.shape[0] != heads.size:
            raise ValueError("heads must be (n,), tails (n, m)")
        if heads.size < 1 or tails.shape[1] < 1:
            raise ValueError("need at least one block with tail dimension >= 1")
        obj = cls.__new__(cls)
        heads = heads.copy()
        tails = tails.copy()
        heads.flags.writeable = False
        tails.flags.writeable = False
        obj.heads = heads
        obj.tails = tails
        return obj

    @property
    def n_blocks(self) -> int:
        return self.heads.size

    @property
    def block_dims(self):
        return [self.tails.shape[1]] * self.n_blocks

    @property
    def blocks(self):
        return [SpinElement(h, t) for h, t in zip(self.heads, self.tails)]

    def block(self, i: int) -> SpinElement:
        return SpinElement(self.heads[i], self.tails[i])

    def _check_compatible(self, other: "BlockConeVector"):
        if not isinstance(other, BlockConeVector):
            raise DimensionMismatchError("expected a BlockConeVector operand")
        if self.heads.shape != other.heads.shape or self.tails.shape != other.tails.shape:
            raise DimensionMismatchError(
                f"block structures differ: {self.tails.shape} != {other.tails.shape}"
            )

    def __add__(self, other):
        self._check_compatible(other)
        return BlockConeVector.from_arrays(self.heads + other.heads, self.tails + other.tails)

    def __sub__(self, other):
        self._check_compatible(other)
        return BlockConeVector.from_arrays(self.heads - other.heads, self.tails - other.tails)

    def __mul__(self, scalar):
        return BlockConeVector.from_arrays(self.heads * scalar, self.tails * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return BlockConeVector.from_arrays(-self.heads, -self.tails)

    def __repr__(self):
        return f"BlockConeVector(n_blocks={self.n_blocks}, m={self.tails.shape[1]})"


def _blockwise1(op, x: BlockConeVector) -> BlockConeVector:
    return BlockConeVector([op(b) for b in x.blocks])


def _blockwise2(op, x: BlockConeVector, y) -> BlockConeVector:
    x._check_compatible(y)
    return BlockConeVector([op(bx, by) for bx, by in zip(x.blocks, y.blocks)])
