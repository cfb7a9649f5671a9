"""Per-user demand responses to posted prices.

Each user maximizes f_i(x_i) - p_i * x_i over its own box, which the
shifted-log family solves in closed form.  The coordinator never sees the
utilities, only the demand that comes back.
"""
from __future__ import annotations

import math

import numpy as np

from .problem import NumProblem, UtilitySpec


class UnboundedSubproblemError(ValueError):
    """The posted price admits no finite demand maximizer."""


def best_response(utility: UtilitySpec, price: float) -> float:
    """Unique maximizer of f(x) - price * x over [lower, upper].

    Interior solutions satisfy f'(x) == price; otherwise the stationary point
    is clamped to the nearer box edge.
    """
    if price < 0:
        raise ValueError(f"negative price {price}")
    if price == 0:
        if math.isinf(utility.upper):
            raise UnboundedSubproblemError("zero price with unbounded domain")
        return utility.upper
    x = utility.inverse_derivative(price)
    return min(max(x, utility.lower), utility.upper)


def prices_from_duals(problem: NumProblem, lam: np.ndarray) -> np.ndarray:
    """Per-user prices A^T lam."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (problem.m,):
        raise ValueError(f"dual vector has shape {lam.shape}, expected ({problem.m},)")
    if (lam < 0).any():
        raise ValueError("negative dual variable")
    return problem.a_matrix.T @ lam


def demand_at_prices(problem: NumProblem, prices: np.ndarray) -> np.ndarray:
    """Vectorized closed-form best responses for all users at once."""
    prices = np.asarray(prices, dtype=float)
    unbounded = (prices <= 0) & np.isinf(problem.upper)
    if unbounded.any():
        idx = int(np.argmax(unbounded))
        raise UnboundedSubproblemError(
            f"user {idx} faces price {prices[idx]} on an unbounded domain"
        )
    with np.errstate(divide="ignore"):
        interior = problem.theta / np.where(prices > 0, prices, np.inf) - problem.shift
    x = np.where(prices > 0, interior, problem.upper)
    return np.clip(x, problem.lower, problem.upper)


def best_response_profile(problem: NumProblem, lam: np.ndarray) -> np.ndarray:
    """Demand of every user at the prices induced by the dual vector."""
    return demand_at_prices(problem, prices_from_duals(problem, lam))
