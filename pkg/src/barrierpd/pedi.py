"""Barrier-preconditioned primal-dual method.

Each iteration performs an exact interior dual solve (closed form for rank-one
constraints, see :mod:`barrierpd.barrier`) followed by a Euclidean proximal
step on the primal variable.  Two step-size regimes are provided: a general
rule giving O(1/N) squared-distance decay, and a second-order-cone rule whose
monotonicity lower bound grows with ||K x^i||, giving linear convergence when
the optimal K x is nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .barrier import RankOneConstraint, central_path_solve
from .jordan import BlockConeVector, inner, power, quadratic_rep_apply

__all__ = [
    "StepState",
    "StepConfig",
    "SaddleProblem",
    "PEDIResult",
    "initial_state",
    "step_rule_general",
    "step_rule_soc",
    "pedi_run",
    "descent_certificate",
]


class ConfigError(ValueError):
    """Inadmissible solver configuration."""


@dataclass(frozen=True)
class StepState:
    """Per-iteration scalars of the solver.

    After i+1 applications of a step rule: phi is the testing parameter
    phi_{i+1} = phi_i (1 + 2 gamma tau_i), tau the primal step
    tau_i = 2 omega_lb / ||K||^2, mu the barrier weight of the dual solve, and
    omega_lb the monotonicity lower bound.  The initial state carries phi_0
    and None for the not-yet-defined scalars.
    """

    phi: float
    tau: Optional[float]
    mu: Optional[float]
    omega_lb: Optional[float]
    iter: int


def initial_state(phi0: float = 1.0) -> StepState:
    if phi0 <= 0:
        raise ConfigError("phi0 must be positive")
    return StepState(phi=phi0, tau=None, mu=None, omega_lb=None, iter=0)


@dataclass(frozen=True)
class StepConfig:
    """Scalar parameters of the step rules.

    theta and zeta control the barrier weight mu_{i+1} = theta phi_i^{-1/2}
    and the monotonicity bound; gamma is the strong-convexity factor used for
    the testing-parameter update; b0 and lambda_min_a describe the per-block
    constraint (uniform across blocks); opnorm_K is the operator norm of K in
    the trace inner product.
    """

    opnorm_K: float
    b0: float
    gamma: float = 0.9
    zeta: Optional[float] = None
    theta: Optional[float] = None
    lambda_min_a: float = 1.0

    def __post_init__(self):
        if self.opnorm_K <= 0 or self.b0 <= 0 or self.lambda_min_a <= 0:
            raise ConfigError("opnorm_K, b0, lambda_min_a must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma must be nonnegative")
        if self.zeta is None:
            object.__setattr__(self, "zeta", 0.9 / self.b0**2)
        if self.theta is None:
            object.__setattr__(self, "theta", 1.0 / self.zeta)
        if self.zeta <= 0 or self.theta <= 0:
            raise ConfigError("zeta and theta must be positive")

    def with_tau0(self, tau0: float) -> "StepConfig":
        """Rescale theta so the first step (with K x^0 = 0) equals tau0."""
        if tau0 <= 0:
            raise ConfigError("tau0 must be positive")
        theta = tau0 * self.opnorm_K**2 / (2.0 * self.zeta * self.lambda_min_a)
        return replace(self, theta=theta)


def _advance(state: StepState, config: StepConfig, omega_lb: float, mu: float) -> StepState:
    tau = 2.0 * omega_lb / config.opnorm_K**2
    phi_next = state.phi * (1.0 + 2.0 * config.gamma * tau)
    return StepState(phi=phi_next, tau=tau, mu=mu, omega_lb=omega_lb, iter=state.iter + 1)


def step_rule_general(state: StepState, config: StepConfig) -> StepState:
    """General symmetric-cone rule: omega_lb = zeta lambda_min(a) mu_{i+1}."""
    if not config.zeta < 1.0 / config.b0**2:
        raise ConfigError("general rule needs zeta in (0, b0^-2)")
    mu = config.theta * state.phi ** -0.5
    omega_lb = config.zeta * config.lambda_min_a * mu
    return _advance(state, config, omega_lb, mu)


def step_rule_soc(state: StepState, current_Kx_norm: float, config: StepConfig) -> StepState:
    """Second-order-cone rule with the ||K x^i||-enlarged monotonicity bound."""
    if not config.zeta <= 2.0 / config.b0**2:
        raise ConfigError("soc rule needs zeta in (0, 2 b0^-2]")
    if current_Kx_norm < 0:
        raise ValueError("current_Kx_norm must be nonnegative")
    mu = config.theta * state.phi ** -0.5
    omega_lb = (mu * config.zeta + current_Kx_norm / (math.sqrt(2.0) * config.b0)) * config.lambda_min_a
    return _advance(state, config, omega_lb, mu)


@dataclass
class SaddleProblem:
    """Saddle-point problem min_x max_y G(x) + <Kx, y> - F*(y) with conic F*.

    apply_K maps primal vectors to BlockConeVector with all-zero heads (the
    lifting convention), apply_K_adjoint is its adjoint between the primal
    Euclidean and the trace inner product.  The same rank-one constraint
    applies to every block.  gamma is the strong-convexity factor of G.
    """

    primal_dim: int
    n_blocks: int
    block_dim: int
    apply_K: Callable[[np.ndarray], BlockConeVector]
    apply_K_adjoint: Callable[[BlockConeVector], np.ndarray]
    prox_G: Callable[[np.ndarray, float], np.ndarray]
    gamma: float
    constraint: RankOneConstraint
    opnorm_K: float
    primal_bound_hint: Optional[float] = None
    source: object = None

    @property
    def constraint_is_identity(self) -> bool:
        a = self.constraint.a
        return a.head == 1.0 and not np.any(a.tail)


@dataclass
class PEDIResult:
    x: np.ndarray
    y: BlockConeVector
    d: BlockConeVector
    states: list
    xs: Optional[list] = None
    watchdog_triggered: bool = False
    phi0: float = 1.0

    @property
    def phis(self) -> np.ndarray:
        """Testing parameters aligned with iterates: phi_0, phi_1, ..., phi_N."""
        return np.concatenate(([self.phi0], [s.phi for s in self.states]))


def _dual_update_identity(Kx: BlockConeVector, b0: float, mu: float):
    """Closed-form dual solve for a = e per block, c = -Kx (zero heads)."""
    tails_c = -Kx.tails
    tn2 = np.einsum("ij,ij->i", tails_c, tails_c)
    d0 = (mu + np.sqrt(mu * mu + b0 * b0 * tn2)) / b0
    # d0 = 0 only when mu underflowed and the block tail vanishes, in which
    # case the dual tail is zero anyway
    scale = np.divide(b0, 2.0 * d0, out=np.zeros_like(d0), where=d0 > 0.0)
    y_tails = -scale[:, None] * tails_c
    y = BlockConeVector.from_arrays(np.full(Kx.n_blocks, b0 / 2.0), y_tails)
    d = BlockConeVector.from_arrays(d0, tails_c)
    return y, d, d0


def _dual_update_general(Kx: BlockConeVector, constraint: RankOneConstraint, mu: float):
    ys, ds, zs = [], [], []
    for blk in Kx.blocks:
        pt = central_path_solve(constraint, -blk, mu)
        ys.append(pt.y)
        ds.append(pt.d)
        zs.append(pt.z)
    return BlockConeVector(ys), BlockConeVector(ds), np.array(zs)


def _weighted_kx_norm(problem: SaddleProblem, Kx: BlockConeVector) -> float:
    """Smallest per-block Q_{a^-1}-weighted trace norm of Kx.

    The enlarged monotonicity bound of the dual solve holds blockwise with
    the block's own ||(Kx)_b||; the scalar step rule can only use the worst
    block.  For a single cone this is the plain weighted norm; on product
    cones any block with vanishing gradient (a flat image region) collapses
    the enhancement and the rule degrades gracefully to the general one.
    """
    if problem.constraint_is_identity:
        tn2 = np.einsum("ij,ij->i", Kx.tails, Kx.tails)
        return math.sqrt(2.0 * float(np.min(tn2)))
    qinv = power(problem.constraint.a, -1.0)
    worst = min(inner(quadratic_rep_apply(qinv, blk), blk) for blk in Kx.blocks)
    return math.sqrt(worst)


def pedi_run(
    problem: SaddleProblem,
    config: StepConfig,
    max_iters: int,
    step_rule: str = "general",
    x0: Optional[np.ndarray] = None,
    callback: Optional[Callable] = None,
    keep_iterates: bool = False,
) -> PEDIResult:
    """Run the barrier-preconditioned primal-dual iteration.

    Per iteration: advance the step scalars with the configured rule, solve
    the interior dual system exactly with barrier weight mu_{i+1} and
    c = -K x^i, then take the primal proximal step
    x^{i+1} = prox_{tau_i G}(x^i - tau_i K* y^{i+1}).  The dual iterates are
    strictly interior and exactly feasible at every iteration.

    The callback, if given, is invoked as callback(i, x, y, state, metrics)
    after each iteration with metrics = {"kx_norm": ...}; it may be used for
    logging or error tracking.  No randomness: identical inputs give
    identical trajectories.
    """
    if step_rule not in ("general", "soc"):
        raise ConfigError(f"unknown step rule {step_rule!r}")
    x = np.zeros(problem.primal_dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.primal_dim,):
        raise ValueError("x0 has wrong dimension")

    state = initial_state()
    states = []
    xs = [x.copy()] if keep_iterates else None
    y = d = None
    watchdog = False
    b0 = problem.constraint.b0

    for i in range(max_iters):
        Kx = problem.apply_K(x)
        if step_rule == "soc":
            kx_norm = _weighted_kx_norm(problem, Kx)
            state = step_rule_soc(state, kx_norm, config)
        else:
            kx_norm = None
            state = step_rule_general(state, config)

        if problem.constraint_is_identity:
            y, d, _ = _dual_update_identity(Kx, b0, state.mu)
        else:
            y, d, _ = _dual_update_general(Kx, problem.constraint, state.mu)

        x = problem.prox_G(x - state.tau * problem.apply_K_adjoint(y), state.tau)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite primal iterate at iteration {i}")
        if problem.primal_bound_hint is not None and not watchdog:
            if float(np.linalg.norm(x)) > 1e3 * problem.primal_bound_hint:
                watchdog = True

        states.append(state)
        if keep_iterates:
            xs.append(x.copy())
        if callback is not None:
            callback(i, x, y, state, {"kx_norm": kx_norm})

    return PEDIResult(x=x, y=y, d=d, states=states, xs=xs, watchdog_triggered=watchdog)


def descent_certificate(result: PEDIResult, target_x: np.ndarray) -> np.ndarray:
    """Series (1/2) phi_N ||x^N - target||^2 over the stored trajectory.

    Requires the run to have been made with keep_iterates=True.  Boundedness
    of this series is the raw content of the convergence estimate; its growth
    order against phi_N = Theta(N^2) or exponential phi growth translates into
    the O(1/N) and linear rates.
    """
    if result.xs is None:
        raise ValueError("descent_certificate needs a run with keep_iterates=True")
    target = np.asarray(target_x, dtype=float)
    errs = np.array([float(np.sum((x - target) ** 2)) for x in result.xs])
    return 0.5 * result.phis * errs
