"""Log-determinant barrier, closed-form central-path solves, and monotonicity validators.

The central object is the system

    <a, y> = b0,    d = z*a + c,    y o d = mu*e,    y, d interior,

for a rank-one constraint direction a in the cone interior.  Under the range
condition <a^-1, c> = 0 this system has a closed-form solution obtained by
scaling the constraint direction to the identity.  The remaining functions are
numeric validators for strong-monotonicity estimates of the barrier gradient,
used by the property and acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jordan import (
    SpinElement,
    det,
    identity,
    inner,
    inverse,
    is_interior,
    is_in_cone,
    jordan_product,
    lambda_max,
    lambda_min,
    norm,
    power,
    quadratic_rep_apply,
)

RANK = 2  # every spin algebra has rank 2


class NotInteriorError(ValueError):
    """Argument required to be strictly inside the cone is not."""


class RangeConditionError(ValueError):
    """Constraint/offset pair violates <a^-1, c> = 0."""


class DegenerateInstanceError(ValueError):
    """Optimal pair fails the strict-complementarity / non-degeneracy check."""


@dataclass(frozen=True)
class RankOneConstraint:
    """The linear constraint <a, y> = b0 with interior direction a."""

    a: SpinElement
    b0: float

    def __post_init__(self):
        if not is_interior(self.a):
            raise NotInteriorError("constraint direction a must be strictly interior")
        if self.b0 <= 0:
            raise ValueError("b0 must be positive")


@dataclass(frozen=True)
class CentralPathPoint:
    """Solution (y, d, z) of the mu-regularised system for a rank-one constraint."""

    y: SpinElement
    d: SpinElement
    z: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if not (is_interior(self.y) and is_interior(self.d)):
            raise NotInteriorError("central path point must be strictly interior")
        res = norm(jordan_product(self.y, self.d) - self.mu * identity(self.y.dim))
        # scale-aware: rounding in y o d is relative to ||y|| ||d||, not to mu
        if res > 1e-10 * (self.mu * RANK + norm(self.y) * norm(self.d)):
            raise ValueError(f"y o d - mu*e residual too large: {res:g}")


def barrier_value(x: SpinElement) -> float:
    """B(x) = -log det x; finite only in the cone interior."""
    if not is_interior(x):
        raise NotInteriorError("barrier is finite only on the cone interior")
    return -float(np.log(det(x)))


def barrier_gradient(x: SpinElement) -> SpinElement:
    """Gradient -x^-1 of the barrier with respect to the trace inner product."""
    if not is_interior(x):
        raise NotInteriorError("barrier gradient needs a strictly interior point")
    return -inverse(x)


def central_path_solve(constraint: RankOneConstraint, c: SpinElement, mu: float) -> CentralPathPoint:
    """Closed-form solve of the mu-regularised system for a rank-one constraint.

    Scales the constraint direction to the identity with Q_{a^{-1/2}}, where the
    dual slack tail is pinned by c and its head solves a scalar quadratic, then
    scales back.  Requires mu > 0 and the range condition <a^-1, c> = 0.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    a, b0 = constraint.a, constraint.b0
    a_inv = inverse(a)
    viol = abs(inner(a_inv, c))
    if viol > 1e-9 * norm(c) + 1e-30:
        raise RangeConditionError(f"<a^-1, c> = {viol:g} not zero relative to ||c||")

    inv_sqrt_a = power(a, -0.5)
    c_scaled = quadratic_rep_apply(inv_sqrt_a, c)
    t = float(np.linalg.norm(c_scaled.tail))
    d0 = (mu + np.sqrt(mu**2 + b0**2 * t**2)) / b0
    # y = mu d^-1 in scaled coordinates; det(d) = 2 mu d0 / b0 there, so the
    # inverse collapses to the stable form below even as mu -> 0
    y_scaled = SpinElement(b0 / 2.0, -(b0 / (2.0 * d0)) * c_scaled.tail)

    y = quadratic_rep_apply(inv_sqrt_a, y_scaled)
    z = d0 - c_scaled.head
    d = z * a + c
    return CentralPathPoint(y=y, d=d, z=z, mu=mu)


def df_distance(w: SpinElement, d: SpinElement) -> float:
    """Central-path distance ||Q_w^{1/2} d - mu_{w,d} e|| with mu_{w,d} = <w,d>/r."""
    if not is_interior(w):
        raise NotInteriorError("df_distance needs strictly interior w")
    if not is_in_cone(d, tol=1e-12 * (1.0 + norm(d))):
        raise ValueError("d must belong to the cone")
    scaled = quadratic_rep_apply(power(w, 0.5), d)
    mu_wd = inner(w, d) / RANK
    return norm(scaled - mu_wd * identity(w.dim))


def nt_scaling_point(y: SpinElement, dprime: SpinElement) -> SpinElement:
    """Nesterov-Todd scaling point w with Q_w^-1 y = dprime."""
    if not (is_interior(y) and is_interior(dprime)):
        raise NotInteriorError("nt_scaling_point needs strictly interior arguments")
    inner_part = power(quadratic_rep_apply(power(y, 0.5), dprime), 0.5)
    return inverse(quadratic_rep_apply(power(y, -0.5), inner_part))


def _adapted_basis(constraint: RankOneConstraint, m: int) -> np.ndarray:
    """Orthonormal basis (trace inner product) with first vector spanning range(A*)."""
    n = 1 + m
    a_coord = constraint.a.as_array()
    cols = np.concatenate([a_coord[:, None], np.eye(n)], axis=1)
    q, _ = np.linalg.qr(cols)
    basis = q[:, :n]
    # coordinate-orthonormal -> trace-inner-product-orthonormal
    return basis / np.sqrt(2.0)


def assemble_M(y: SpinElement, d: SpinElement, constraint: RankOneConstraint) -> np.ndarray:
    """Dense matrix of M_{y,d}(xi + eta) = L(y) xi + L(d) eta.

    The splitting is xi in range(A*) = span{a}, eta in null(A); the matrix is
    expressed in an orthonormal basis adapted to it.  Diagnostic only, limited
    to total cone dimension 64.
    """
    m = y.dim
    if 1 + m > 64:
        raise ValueError("assemble_M is a diagnostic, limited to cone dimension <= 64")
    basis = _adapted_basis(constraint, m)
    n = 1 + m
    out = np.empty((n, n))
    for j in range(n):
        v = SpinElement.from_array(basis[:, j])
        mv = jordan_product(y if j == 0 else d, v)
        # entries <v_i, M v_j> in the trace inner product
        out[:, j] = 2.0 * (basis.T @ mv.as_array())
    return out


def min_eig_M(y: SpinElement, d: SpinElement, constraint: RankOneConstraint) -> float:
    """Smallest eigenvalue of the symmetric part of M_{y,d}."""
    mat = assemble_M(y, d, constraint)
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])


def check_interior_monotonicity(y: SpinElement, yprime: SpinElement) -> float:
    """Residual of the interior strong-monotonicity bound for d = y^-1.

    Returns LHS - RHS of

        -<d' - d, y' - y>  >=  ||y' - y||^2 / (lam_max(y') lam_max(y));

    nonnegative up to rounding for any strictly interior pair.
    """
    if not (is_interior(y) and is_interior(yprime)):
        raise NotInteriorError("both points must be strictly interior")
    d = inverse(y)
    dprime = inverse(yprime)
    diff = yprime - y
    lhs = -inner(dprime - d, diff)
    rhs = inner(diff, diff) / (lambda_max(yprime) * lambda_max(y))
    return lhs - rhs


def check_soc_pair_monotonicity(p: CentralPathPoint, pprime: CentralPathPoint) -> float:
    """Residual of the determinant-weighted monotonicity bound for two
    solutions of the mu-regularised system at the same mu:

        -<d - d', y - y'>  >=  ((det d + det d')/mu) * ||y - y'||^2_{-R},

    where ||v||^2_{-R} = ||tail||^2 - head^2 = -det(v).
    """
    if abs(p.mu - pprime.mu) > 1e-12 * max(p.mu, pprime.mu):
        raise ValueError("points must share the same mu")
    diff = p.y - pprime.y
    lhs = -inner(p.d - pprime.d, diff)
    rhs = (det(p.d) + det(pprime.d)) / p.mu * (-det(diff))
    return lhs - rhs


def det_sandwich_bounds(constraint: RankOneConstraint, point: CentralPathPoint):
    """Lower/upper determinant bounds for the dual slack of a central-path point.

    Returns (lower, det(d), upper) with the bounds built from the central-path
    distance of d to the inverse constraint direction.
    """
    a, b0 = constraint.a, constraint.b0
    mu = point.mu
    dist = df_distance(inverse(a), point.d)
    # det(Q_{a^{-1/2}} d) = det(d)/det(a), so det(a) multiplies the bounds
    factor = det(a) / b0**2
    lower = (2 * mu**2 + np.sqrt(2.0) * b0 * dist * mu) * factor
    upper = (4 * mu**2 + np.sqrt(2.0) * b0 * dist * mu) * factor
    return lower, det(point.d), upper


def _weighted_norm_sq_qa(a: SpinElement, v: SpinElement) -> float:
    return inner(quadratic_rep_apply(a, v), v)


def _c_weighted_norm(a: SpinElement, c: SpinElement) -> float:
    return norm(quadratic_rep_apply(power(a, -0.5), c))


def _check_optimal_pair(constraint, opt_y, opt_d, opt_c, tol=1e-8):
    a, b0 = constraint.a, constraint.b0
    scale = 1.0 + norm(opt_y) + norm(opt_d)
    if not (is_in_cone(opt_y, tol * scale) and is_in_cone(opt_d, tol * scale)):
        raise ValueError("optimal pair must lie in the cone")
    if abs(inner(a, opt_y) - b0) > tol * b0:
        raise ValueError("optimal y is not feasible for the constraint")
    if norm(jordan_product(opt_y, opt_d)) > tol * scale**2:
        raise ValueError("optimal pair is not complementary")
    z_hat = inner(inverse(a), opt_d) / RANK
    if norm(opt_d - z_hat * a - opt_c) > tol * scale:
        raise ValueError("optimal d is not of the form z*a + c_hat")


def check_soc_extension_bound(
    point: CentralPathPoint,
    opt_y: SpinElement,
    opt_d: SpinElement,
    constraint: RankOneConstraint,
    c: SpinElement,
    opt_c: SpinElement,
) -> float:
    """Residual of the boundary-extended strong-monotonicity bound (SOC case).

    With D(v) = ||v||_{Q_a^-1}, the bound reads

        -<d - d_opt, y - y_opt>
            >= (mu + b0 [D(c) + D(c_opt)] / sqrt(2)) / b0^2 * ||y - y_opt||^2_{Q_a} - mu

    when c_opt != 0 (penalty branch), and with D(c) alone and no -mu penalty
    when c_opt = 0 and y_opt = b0 a^-1 / 2.  The quadratic-term denominator is
    b0^2 because ||.||_{Q_a} here is built on the factor-2 trace inner product.
    Returns LHS - RHS.
    """
    _check_optimal_pair(constraint, opt_y, opt_d, opt_c)
    a, b0 = constraint.a, constraint.b0
    mu = point.mu
    diff = point.y - opt_y
    lhs = -inner(point.d - opt_d, diff)
    dist_c = _c_weighted_norm(a, c)
    dist_opt = _c_weighted_norm(a, opt_c)
    quad = _weighted_norm_sq_qa(a, diff)
    if dist_opt > 1e-12 * (1.0 + norm(opt_c)) and norm(opt_c) > 0:
        rhs = (mu + b0 * (dist_c + dist_opt) / np.sqrt(2.0)) / b0**2 * quad - mu
    else:
        ref = (b0 / RANK) * inverse(a)
        if norm(opt_y - ref) > 1e-8 * (1.0 + norm(ref)):
            raise ValueError("penalty-free branch requires y_opt = b0 a^-1 / 2")
        rhs = (mu + b0 * dist_c / np.sqrt(2.0)) / b0**2 * quad
    return lhs - rhs


def general_cone_penalty(
    constraint: RankOneConstraint,
    c: SpinElement,
    opt_c: SpinElement,
    mu: float,
    min_eig: float,
    ref_y: SpinElement,
) -> float:
    """Penalty term of the general-cone strong-monotonicity estimate."""
    a, b0 = constraint.a, constraint.b0
    lam_ref = lambda_min(ref_y)
    c_const = (mu * RANK + 2 * b0 * _c_weighted_norm(a, c)) / lam_ref
    c_opt_const = (mu * RANK + 2 * b0 * _c_weighted_norm(a, opt_c)) / lam_ref
    return c_const * c_opt_const * RANK / min_eig**2 * mu


def check_general_cone_bound(
    point: CentralPathPoint,
    opt,
    constraint: RankOneConstraint,
    c: SpinElement,
    opt_c: SpinElement,
    alpha: float,
    ref_y: SpinElement | None = None,
) -> float:
    """Residual of the general symmetric-cone strong-monotonicity estimate.

    `opt` is the optimal triple (y_opt, d_opt, z_opt) for c = opt_c, required
    strictly complementary and non-degenerate.  `ref_y` is the strictly
    feasible reference point entering the penalty constants; it defaults to
    (b0/r) a^-1.  Returns LHS - RHS for the bound

        -<d - d_opt, y - y_opt>
            >= (1 - alpha) mu / b0^2 * ||y - y_opt||^2_{Q_a} - penalty(alpha, mu).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    opt_y, opt_d, _ = opt
    _check_optimal_pair(constraint, opt_y, opt_d, opt_c)
    me = min_eig_M(opt_y, opt_d, constraint)
    if me <= 1e-10:
        raise DegenerateInstanceError(f"optimal pair is degenerate: min_eig_M = {me:g}")
    a, b0 = constraint.a, constraint.b0
    if ref_y is None:
        ref_y = (b0 / RANK) * inverse(a)
    mu = point.mu
    diff = point.y - opt_y
    lhs = -inner(point.d - opt_d, diff)
    rhs = (1.0 - alpha) * mu / b0**2 * _weighted_norm_sq_qa(a, diff) - general_cone_penalty(
        constraint, c, opt_c, mu, me, ref_y
    ) / alpha
    return lhs - rhs
