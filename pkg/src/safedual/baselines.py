"""Comparison algorithms: plain, accelerated, and diagonally scaled dual ascent.

None of these guard primal feasibility; they are the reference curves the
safe method is measured against.  The accelerated and scaled variants are
reconstructions of the standard recipes, not line-by-line ports of any
particular reference implementation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import best_response_profile, demand_at_prices
from .problem import NumProblem, ProblemConstants
from .trace import TrialTrace, build_trace

NDGM_EPSILON = 1e-6
# Damping for the diagonally scaled update.  The undamped Newton-style step
# overshoots so hard on cold starts that entire price columns collapse to
# zero and the user subproblems become unbounded; 0.2 is stable across the
# random ensemble while keeping the fast convergence.
NDGM_DAMPING = 0.2


@dataclass(frozen=True)
class BaselineParams:
    """Algorithm selector plus the knobs the individual methods read."""

    kind: str  # "DGM" | "FDGM" | "NDGM"
    step: float
    horizon: int
    epsilon_reg: float = NDGM_EPSILON

    def __post_init__(self):
        if self.kind not in ("DGM", "FDGM", "NDGM"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.step <= 0 or self.epsilon_reg <= 0:
            raise ValueError("step and epsilon_reg must be positive")


def scaled_step(
    lam: np.ndarray, x: np.ndarray, problem: NumProblem, scale
) -> np.ndarray:
    """Projected dual ascent step with scalar or per-constraint scaling."""
    gradient = problem.a_matrix @ x - problem.capacities
    return np.maximum(0.0, lam + scale * gradient)


def dgm_step(lam: np.ndarray, x: np.ndarray, problem: NumProblem, step: float) -> np.ndarray:
    """Classical projected subgradient update on the dual."""
    return scaled_step(lam, x, problem, float(step))


def run_dgm(
    problem: NumProblem,
    constants: ProblemConstants,
    horizon: int,
    step: float | None = None,
    lam_init: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Plain dual subgradient with constant step (default 1/L).

    Starts from the all-ones dual vector, the usual cold start for pricing
    iterations; the early rounds overshoot capacity before the duals climb.
    """
    if step is None:
        step = 1.0 / constants.dual_smoothness
    lam = np.ones(problem.m) if lam_init is None else np.asarray(lam_init, float).copy()
    x_hist = np.empty((horizon, problem.n))
    lam_hist = np.empty((horizon, problem.m))
    for t in range(horizon):
        x = best_response_profile(problem, lam)
        x_hist[t] = x
        lam_hist[t] = lam
        lam = dgm_step(lam, x, problem, step)
    return x_hist, lam_hist


def run_fdgm(
    problem: NumProblem, constants: ProblemConstants, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    """Accelerated projected gradient on the dual with step 1/L.

    Demand is evaluated at the extrapolation point, which is clamped to the
    non-negative orthant so prices stay valid.
    """
    inv_l = 1.0 / constants.dual_smoothness
    lam = np.full(problem.m, constants.lambda_bar)
    y = lam.copy()
    x_hist = np.empty((horizon, problem.n))
    lam_hist = np.empty((horizon, problem.m))
    for t in range(1, horizon + 1):
        x = best_response_profile(problem, y)
        x_hist[t - 1] = x
        lam_hist[t - 1] = y
        lam_next = np.maximum(0.0, y + inv_l * (problem.a_matrix @ x - problem.capacities))
        y = np.maximum(0.0, lam_next + (t - 1) / (t + 2) * (lam_next - lam))
        lam = lam_next
    return x_hist, lam_hist


def diagonal_scaling(
    problem: NumProblem, x: np.ndarray, epsilon_reg: float = NDGM_EPSILON
) -> np.ndarray:
    """Inverse of the per-constraint curvature estimate at the current demand.

    The estimate sums, over the users in each row, the reciprocal curvature
    of their utility at the realized demand; the regularizer caps the scaling
    when that sum degenerates.
    """
    inv_curvature = (np.asarray(x, float) + problem.shift) ** 2 / problem.theta
    h = problem.a_matrix @ inv_curvature
    return 1.0 / np.maximum(epsilon_reg, h)


def run_ndgm(
    problem: NumProblem,
    constants: ProblemConstants,
    horizon: int,
    epsilon_reg: float = NDGM_EPSILON,
    damping: float = NDGM_DAMPING,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped diagonally scaled dual ascent from the capped dual start."""
    lam = np.full(problem.m, constants.lambda_bar)
    x_hist = np.empty((horizon, problem.n))
    lam_hist = np.empty((horizon, problem.m))
    for t in range(horizon):
        x = best_response_profile(problem, lam)
        x_hist[t] = x
        lam_hist[t] = lam
        scale = damping * diagonal_scaling(problem, x, epsilon_reg)
        # never cut a dual below half its value in one move: the curvature
        # estimate is unreliable while demands sit on their box boundary, and
        # an unchecked step can zero out every price a user sees
        lam = np.maximum(0.5 * lam, scaled_step(lam, x, problem, scale))
    return x_hist, lam_hist


def dgm_trial(problem, constants, horizon, trial_id=0, f_star=np.nan, x_star=None,
              step=None) -> TrialTrace:
    x_hist, lam_hist = run_dgm(problem, constants, horizon, step=step)
    return build_trace(problem, "DGM", x_hist, lam_hist, trial_id=trial_id,
                       f_star=f_star, x_star=x_star)


def fdgm_trial(problem, constants, horizon, trial_id=0, f_star=np.nan, x_star=None) -> TrialTrace:
    x_hist, lam_hist = run_fdgm(problem, constants, horizon)
    return build_trace(problem, "FDGM", x_hist, lam_hist, trial_id=trial_id,
                       f_star=f_star, x_star=x_star)


def ndgm_trial(problem, constants, horizon, trial_id=0, f_star=np.nan, x_star=None,
               epsilon_reg=NDGM_EPSILON, damping=NDGM_DAMPING) -> TrialTrace:
    x_hist, lam_hist = run_ndgm(problem, constants, horizon, epsilon_reg, damping)
    return build_trace(problem, "NDGM", x_hist, lam_hist, trial_id=trial_id,
                       f_star=f_star, x_star=x_star)
