"""Ground-truth optimum and its certification.

The reference solver runs accelerated projected gradient on the dual to a
tight tolerance and certifies the result through the first-order optimality
residual, so every regret and distance metric has a trustworthy anchor.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .agents import best_response_profile, prices_from_duals
from .problem import NumProblem, ProblemConstants, compute_constants

DEFAULT_TOLERANCE = 1e-8
MAX_ITERATIONS = 1_000_000


def _capacity_bounded_copy(problem: NumProblem) -> NumProblem:
    """Copy of the problem with each upper bound capped by the tightest
    capacity among the constraints covering that user."""
    caps = np.array(
        [problem.capacities[problem.a_matrix[:, i] > 0].min() for i in range(problem.n)]
    )
    upper = np.minimum(problem.upper, caps)
    if (upper >= problem.upper).all():
        return problem
    utilities = tuple(
        replace(u, upper=float(hi)) for u, hi in zip(problem.utilities, upper)
    )
    return NumProblem(problem.a_matrix, problem.capacities, utilities, seed=problem.seed)


def _complete_duals(
    problem: NumProblem, bounded: NumProblem, x: np.ndarray, lam: np.ndarray
) -> np.ndarray:
    """Lift duals of the capacity-bounded problem back to the original.

    When a user sits exactly at its capped level, the box absorbs the binding
    capacity constraint and leaves its dual undetermined; push the remaining
    stationarity gap onto the dual of that tightest constraint.
    """
    if bounded is problem:
        return lam
    lam = lam.copy()
    for i in range(problem.n):
        cap = bounded.upper[i]
        if cap >= problem.upper[i] or x[i] < cap - 1e-9 * max(1.0, cap):
            continue
        price = float(problem.a_matrix[:, i] @ lam)
        gap = problem.theta[i] / (x[i] + problem.shift[i]) - price
        if gap <= 0:
            continue
        rows = np.flatnonzero(problem.a_matrix[:, i] > 0)
        lam[rows[np.argmin(problem.capacities[rows])]] += gap
    return lam


class OracleConvergenceError(RuntimeError):
    """Reference solver hit its iteration cap; carries best-so-far diagnostics."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (best residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class OptimalSolution:
    x_star: np.ndarray
    f_star: float
    lambda_star: np.ndarray
    kkt_residual: float
    iterations_used: int

    def to_dict(self) -> dict:
        return {
            "x_star": self.x_star.tolist(),
            "f_star": self.f_star,
            "lambda_star": self.lambda_star.tolist(),
            "kkt_residual": self.kkt_residual,
            "iterations_used": self.iterations_used,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OptimalSolution":
        return cls(
            x_star=np.asarray(doc["x_star"], float),
            f_star=float(doc["f_star"]),
            lambda_star=np.asarray(doc["lambda_star"], float),
            kkt_residual=float(doc["kkt_residual"]),
            iterations_used=int(doc["iterations_used"]),
        )


def dual_value(problem: NumProblem, lam: np.ndarray) -> float:
    """Value of the dual function at lam: best-response Lagrangian plus lam.c."""
    lam = np.asarray(lam, float)
    prices = prices_from_duals(problem, lam)
    x = best_response_profile(problem, lam)
    return float(problem.objective(x) - prices @ x + lam @ problem.capacities)


def kkt_residual(problem: NumProblem, x: np.ndarray, lam: np.ndarray) -> float:
    """First-order optimality residual of a primal/dual pair.

    Maximum of primal infeasibility, dual infeasibility, the box-projected
    stationarity gap of each user subproblem, and complementary slackness.
    """
    x = np.asarray(x, float)
    lam = np.asarray(lam, float)
    slack = problem.capacities - problem.a_matrix @ x
    primal = float(np.max(np.maximum(-slack, 0.0), initial=0.0))
    dual = float(np.max(np.maximum(-lam, 0.0), initial=0.0))
    prices = problem.a_matrix.T @ lam
    grad = problem.theta / (x + problem.shift) - prices
    at_lower = x <= problem.lower
    at_upper = x >= problem.upper
    projected = np.abs(grad)
    projected = np.where(at_lower, np.maximum(grad, 0.0), projected)
    projected = np.where(at_upper, np.maximum(-grad, 0.0), projected)
    stationarity = float(projected.max())
    complementarity = float(np.abs(lam * slack).max())
    return max(primal, dual, stationarity, complementarity)


def solve_optimal(
    problem: NumProblem,
    constants: ProblemConstants | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> OptimalSolution:
    """Accelerated projected gradient on the dual, run to certification.

    Steps of 1/L with momentum restarted whenever it points uphill; the
    iteration stops once the dual step stalls below tolerance/100 and the
    optimality residual of the induced primal/dual pair is below tolerance.
    """
    if constants is None:
        constants = compute_constants(problem)
    step = 1.0 / constants.dual_smoothness
    # Iterate on a box-bounded copy: no feasible demand can exceed the
    # tightest capacity a user touches, so clipping there preserves the
    # optimum while keeping subproblems bounded even if an extrapolated
    # dual transiently zeroes out some price.
    bounded = _capacity_bounded_copy(problem)
    lam = np.full(problem.m, constants.lambda_bar)
    y = lam.copy()
    momentum = 0.0
    best_residual = np.inf
    for k in range(1, max_iterations + 1):
        x = best_response_profile(bounded, y)
        gradient = problem.capacities - problem.a_matrix @ x
        lam_next = np.maximum(0.0, y - step * gradient)
        if gradient @ (lam_next - lam) > 0:
            momentum = 0.0  # restart: momentum points uphill
        else:
            momentum += 1.0
        y = np.maximum(0.0, lam_next + (momentum / (momentum + 3.0)) * (lam_next - lam))
        delta = float(np.abs(lam_next - lam).max())
        lam = lam_next
        if delta <= tolerance * 1e-2:
            x_cand = best_response_profile(bounded, lam)
            lam_cand = _complete_duals(problem, bounded, x_cand, lam)
            residual = kkt_residual(problem, x_cand, lam_cand)
            best_residual = min(best_residual, residual)
            if residual <= tolerance:
                return OptimalSolution(
                    x_star=x_cand,
                    f_star=problem.objective(x_cand),
                    lambda_star=lam_cand,
                    kkt_residual=residual,
                    iterations_used=k,
                )
    raise OracleConvergenceError("reference solver did not converge", best_residual, max_iterations)
