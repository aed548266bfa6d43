"""Denoising problem construction: discrete gradient, cone lifting, metrics.

Conventions fixed here and relied on by every solver:

* pixels are row-major; an image is a (n1, n2) array, a primal vector its
  row-major flattening;
* the discrete gradient uses forward differences with Neumann boundary
  (last difference along each axis is zero); a gradient field is an
  (n1, n2, 2) array with component 0 the axis-0 difference and component 1
  the axis-1 difference, flattened row-major to (n1*n2, 2) when a per-pixel
  layout is needed;
* the cone lifting puts gradient tails into spin-algebra blocks with zero
  heads -- n1*n2 blocks of E_{1+2} for TV, a single block of E_{1+2*n1*n2}
  for H1;
* in the trace inner product the lifted coupling is <Kx, y> = 2 (Dx).tail(y),
  so the per-block constraint <a, y> = b0 with a = e and b0 = alpha makes
  sup_y <Kx, y> = alpha * R(x) exactly the regularizer, and the portable
  (unlifted) dual variable is p = 2 tail(y) with ||p|| <= alpha, the same
  object the unlifted baseline solvers iterate on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .barrier import RankOneConstraint
from .jordan import BlockConeVector, identity
from .pedi import SaddleProblem

__all__ = [
    "ImageGrid",
    "DenoiseProblem",
    "IterationRecord",
    "VARIANTS",
    "gradient_apply",
    "gradient_adjoint",
    "lift",
    "unlift",
    "build_problem",
    "add_gaussian_noise",
    "estimate_opnorm",
    "synthetic_image",
    "metrics",
    "DB_CLAMP",
]

VARIANTS = ("tv", "h1")
DB_CLAMP = -320.0

# Analytic bound on the discrete-gradient operator norm (Euclidean, both
# axes, forward differences): ||D||^2 <= 8.
GRAD_OPNORM_BOUND = math.sqrt(8.0)


@dataclass(frozen=True)
class ImageGrid:
    """Immutable scalar field on an n1 x n2 pixel grid."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("values must be a nonempty 2-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n1(self) -> int:
        return self.values.shape[0]

    @property
    def n2(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def flat(self) -> np.ndarray:
        """Row-major flattening to a primal vector."""
        return self.values.reshape(-1).copy()


def _grad(values: np.ndarray) -> np.ndarray:
    g = np.zeros(values.shape + (2,))
    g[:-1, :, 0] = values[1:, :] - values[:-1, :]
    g[:, :-1, 1] = values[:, 1:] - values[:, :-1]
    return g


def _grad_adjoint(gfield: np.ndarray) -> np.ndarray:
    g0 = gfield[..., 0]
    g1 = gfield[..., 1]
    out = np.zeros(gfield.shape[:2])
    out[1:, :] += g0[:-1, :]
    out[:-1, :] -= g0[:-1, :]
    out[:, 1:] += g1[:, :-1]
    out[:, :-1] -= g1[:, :-1]
    return out


def gradient_apply(img: ImageGrid) -> np.ndarray:
    """Forward-difference gradient with Neumann boundary; (n1, n2, 2) field."""
    return _grad(img.values)


def gradient_adjoint(gfield: np.ndarray) -> ImageGrid:
    """Exact adjoint of gradient_apply (negative divergence)."""
    gfield = np.asarray(gfield, dtype=float)
    if gfield.ndim != 3 or gfield.shape[2] != 2:
        raise ValueError("gradient field must have shape (n1, n2, 2)")
    return ImageGrid(_grad_adjoint(gfield))


def lift(gfield: np.ndarray, variant: str) -> BlockConeVector:
    """Embed a gradient field into the product cone with zero heads."""
    _check_variant(variant)
    gfield = np.asarray(gfield, dtype=float)
    if gfield.ndim != 3 or gfield.shape[2] != 2:
        raise ValueError("gradient field must have shape (n1, n2, 2)")
    n = gfield.shape[0] * gfield.shape[1]
    if variant == "tv":
        return BlockConeVector.from_arrays(np.zeros(n), gfield.reshape(n, 2))
    return BlockConeVector.from_arrays(np.zeros(1), gfield.reshape(1, 2 * n))


def unlift(y: BlockConeVector, shape) -> np.ndarray:
    """Extract the gradient-field tails, discarding heads."""
    n1, n2 = shape
    expected = n1 * n2 * 2
    if y.tails.size != expected:
        raise ValueError(f"block vector carries {y.tails.size} tail entries, expected {expected}")
    return y.tails.reshape(n1, n2, 2)


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def estimate_opnorm(apply_op, apply_adjoint, dim: int, iters: int = 30, rtol: float = 1e-6, seed: int = 0) -> float:
    """Operator norm by power iteration on the normal map v -> A*(A v).

    Deterministic (fixed seed), with early stopping when successive Rayleigh
    estimates agree to rtol.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = apply_adjoint(apply_op(v))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        new_est = math.sqrt(nw)
        v = w / nw
        if est > 0.0 and abs(new_est - est) <= rtol * est:
            est = new_est
            break
        est = new_est
    return est


@dataclass
class DenoiseProblem:
    """The variational denoising problem min_x (1/2)||x-z||^2 + alpha R(x).

    R is the discrete TV seminorm (per-pixel Euclidean norms of the gradient,
    summed) or the H1 seminorm (global Euclidean norm of the gradient).
    """

    z: ImageGrid
    alpha: float
    variant: str
    _opnorm_D: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        _check_variant(self.variant)
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def shape(self):
        return self.z.shape

    @property
    def n_pixels(self) -> int:
        return self.z.values.size

    @property
    def opnorm_D(self) -> float:
        """Power-iteration estimate of ||D|| (Euclidean, unlifted)."""
        if self._opnorm_D is None:
            n1, n2 = self.shape
            self._opnorm_D = estimate_opnorm(
                lambda v: _grad(v.reshape(n1, n2)).reshape(-1),
                lambda g: _grad_adjoint(g.reshape(n1, n2, 2)).reshape(-1),
                self.n_pixels,
            )
        return self._opnorm_D

    # ----- functionals ---------------------------------------------------

    def regularizer(self, x: np.ndarray) -> float:
        """R(x): TV or H1 seminorm of the image x (flat vector)."""
        g = _grad(np.asarray(x, dtype=float).reshape(self.shape))
        if self.variant == "tv":
            return float(np.sum(np.sqrt(np.sum(g**2, axis=2))))
        return float(np.linalg.norm(g.reshape(-1)))

    def objective(self, x: np.ndarray) -> float:
        zf = self.z.flat()
        return 0.5 * float(np.sum((x - zf) ** 2)) + self.alpha * self.regularizer(x)

    def dual_value(self, p: np.ndarray) -> float:
        """Dual objective (1/2)||z||^2 - (1/2)||z - D* p||^2 at a field p."""
        zf = self.z.flat()
        dstar = _grad_adjoint(np.asarray(p, dtype=float).reshape(self.shape + (2,))).reshape(-1)
        return 0.5 * float(np.sum(zf**2)) - 0.5 * float(np.sum((zf - dstar) ** 2))

    def duality_gap(self, x: np.ndarray, p: np.ndarray) -> float:
        return self.objective(x) - self.dual_value(p)

    def project_dual(self, p: np.ndarray) -> np.ndarray:
        """Project a field onto the dual constraint ||p|| <= alpha.

        Per-pixel for TV, globally for H1.
        """
        p = np.asarray(p, dtype=float).reshape(self.shape + (2,))
        if self.variant == "tv":
            norms = np.sqrt(np.sum(p**2, axis=2))
            scale = np.minimum(1.0, self.alpha / np.maximum(norms, 1e-300))
            return p * scale[..., None]
        nrm = float(np.linalg.norm(p.reshape(-1)))
        if nrm <= self.alpha:
            return p.copy()
        return p * (self.alpha / nrm)

    # ----- conic form ----------------------------------------------------

    def saddle_problem(self) -> SaddleProblem:
        """Lifted conic saddle-point form consumed by the interior solver.

        The per-block constraint is (a, b0) = (e, alpha): in the trace inner
        product this fixes head(y) = alpha/2, and the coupling
        <Kx, y> = 2 (Dx).tail(y) then represents alpha R(x) exactly.  The
        adjoint is K* y = 2 D* tail(y).
        """
        n1, n2 = self.shape
        variant = self.variant
        m = 2 if variant == "tv" else 2 * self.n_pixels
        n_blocks = self.n_pixels if variant == "tv" else 1
        zf = self.z.flat()

        def apply_K(x):
            return lift(_grad(x.reshape(n1, n2)), variant)

        def apply_K_adjoint(y):
            return 2.0 * _grad_adjoint(y.tails.reshape(n1, n2, 2)).reshape(-1)

        def prox_G(v, tau):
            return (v + tau * zf) / (1.0 + tau)

        opnorm_K = math.sqrt(2.0) * self.opnorm_D
        return SaddleProblem(
            primal_dim=self.n_pixels,
            n_blocks=n_blocks,
            block_dim=1 + m,
            apply_K=apply_K,
            apply_K_adjoint=apply_K_adjoint,
            prox_G=prox_G,
            gamma=1.0,
            constraint=RankOneConstraint(identity(m), self.alpha),
            opnorm_K=opnorm_K,
            primal_bound_hint=float(np.linalg.norm(zf)) + 1.0,
            source=self,
        )

    def unlifted_dual(self, y: BlockConeVector) -> np.ndarray:
        """Portable dual field p = 2 tail(y); satisfies ||p|| <= alpha."""
        return 2.0 * unlift(y, self.shape)


def build_problem(z: ImageGrid, alpha: float, variant: str) -> SaddleProblem:
    """Lifted saddle-point problem for (1/2)||x-z||^2 + alpha R(x)."""
    return DenoiseProblem(z, alpha, variant).saddle_problem()


def add_gaussian_noise(img: ImageGrid, sigma: float, seed: int) -> ImageGrid:
    """Additive i.i.d. Gaussian noise from numpy's PCG64 generator.

    The seed is mandatory: identical (image, sigma, seed) gives identical
    output on any platform with the same numpy generator algorithm.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if seed is None:
        raise ValueError("seed is mandatory")
    if sigma == 0:
        return img
    rng = np.random.default_rng(seed)
    return ImageGrid(img.values + sigma * rng.standard_normal(img.shape))


def synthetic_image(n1: int, n2: int) -> ImageGrid:
    """Deterministic smooth test pattern in [0, 255]: ramp plus a Gaussian bump.

    Used by the test-suite and as a stand-in when no photograph is at hand;
    any grayscale PGM works equally well with the CLI.
    """
    i = np.arange(n1)[:, None] / max(n1 - 1, 1)
    j = np.arange(n2)[None, :] / max(n2 - 1, 1)
    ramp = 0.55 * i + 0.25 * j
    bump = 0.6 * np.exp(-(((i - 0.4) ** 2 + (j - 0.6) ** 2) / 0.05))
    vals = ramp + bump
    return ImageGrid(255.0 * (vals - vals.min()) / (vals.max() - vals.min()))


@dataclass(frozen=True)
class IterationRecord:
    """One logged solver iteration, dB values clamped at DB_CLAMP."""

    iter: int
    wall_seconds: float
    gap_db: float
    target_db: float
    value_db: float


def _db(ratio_num: float, ratio_den: float) -> float:
    if ratio_num <= 0.0 or ratio_den <= 0.0:
        return DB_CLAMP
    return max(DB_CLAMP, 10.0 * math.log10(ratio_num / ratio_den))


def metrics(
    x: np.ndarray,
    p: np.ndarray,
    problem: DenoiseProblem,
    target_x: np.ndarray,
    gap0: float,
    iter: int = 0,
    wall_seconds: float = 0.0,
) -> IterationRecord:
    """Per-iteration error report against a precomputed target solution.

    p is the unlifted dual field (use DenoiseProblem.unlifted_dual for
    interior-solver iterates, whose exact feasibility keeps the gap finite).
    gap_db is the duality gap relative to gap0, target_db the squared
    distance to target_x relative to ||target_x||^2, value_db the squared
    relative objective error.
    """
    target_x = np.asarray(target_x, dtype=float)
    tn2 = float(np.sum(target_x**2))
    if tn2 == 0.0:
        raise ValueError("degenerate target: ||target_x|| = 0")
    if gap0 <= 0.0:
        raise ValueError("gap0 must be positive")
    gap = problem.duality_gap(x, p)
    val = problem.objective(x)
    val_hat = problem.objective(target_x)
    gap_db = _db(gap, gap0)
    target_db = _db(float(np.sum((x - target_x) ** 2)), tn2)
    value_db = _db((val - val_hat) ** 2, val_hat**2) if val_hat != 0.0 else DB_CLAMP
    return IterationRecord(iter=iter, wall_seconds=wall_seconds, gap_db=gap_db, target_db=target_db, value_db=value_db)
