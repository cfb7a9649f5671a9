"""Problem instances for price-based allocation under hard capacity limits.

A problem couples n users, each with a strictly increasing strongly concave
utility on a box domain, through binary capacity constraints A x <= c.
This module owns instance construction, structural validation, random
generation of test networks, and the derived constants the solvers need.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SLATER_EPS = 1e-6
RESAMPLE_CAP = 10_000
POWER_TOL = 1e-10
POWER_CAP = 100_000


class GenerationError(RuntimeError):
    """Random generation could not produce a non-degenerate constraint matrix."""


class PowerIterationError(RuntimeError):
    """Power iteration did not reach the requested tolerance."""


@dataclass(frozen=True)
class UtilitySpec:
    """Shifted-log utility theta * log(x + shift) on the box [lower, upper].

    Strictly increasing, and strongly concave on any bounded interval of its
    domain.  The shift keeps the utility finite at x = 0.
    """

    theta: float
    shift: float = 0.1
    lower: float = 0.0
    upper: float = math.inf

    def value(self, x: float) -> float:
        return self.theta * math.log(x + self.shift)

    def derivative(self, x: float) -> float:
        return self.theta / (x + self.shift)

    def inverse_derivative(self, marginal: float) -> float:
        """Solve derivative(x) == marginal for x (ignoring the box)."""
        return self.theta / marginal - self.shift

    def curvature(self, x: float) -> float:
        """Magnitude of the second derivative at x."""
        return self.theta / (x + self.shift) ** 2


@dataclass(frozen=True, eq=False)
class NumProblem:
    """A utility-maximization instance: max sum_i f_i(x_i) s.t. A x <= c."""

    a_matrix: np.ndarray
    capacities: np.ndarray
    utilities: tuple[UtilitySpec, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_matrix", np.asarray(self.a_matrix, dtype=np.int64))
        object.__setattr__(self, "capacities", np.asarray(self.capacities, dtype=float))
        object.__setattr__(self, "utilities", tuple(self.utilities))

    @property
    def m(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.a_matrix.shape[1]

    @cached_property
    def theta(self) -> np.ndarray:
        return np.array([u.theta for u in self.utilities])

    @cached_property
    def shift(self) -> np.ndarray:
        return np.array([u.shift for u in self.utilities])

    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([u.lower for u in self.utilities])

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([u.upper for u in self.utilities])

    def objective(self, x: np.ndarray) -> float:
        return float(np.sum(self.theta * np.log(np.asarray(x, float) + self.shift)))


@dataclass(frozen=True)
class GeneratorConfig:
    """Ranges for random network generation; ranges are inclusive."""

    n_range: tuple[int, int] = (10, 40)
    m_range: tuple[int, int] = (5, 25)
    theta_range: tuple[float, float] = (10.0, 30.0)
    capacity_value: float = 1.0
    bernoulli_p: float = 0.5
    seed: int = 0

    def check(self):
        if self.n_range[0] > self.n_range[1] or self.m_range[0] > self.m_range[1]:
            raise ValueError("empty integer range")
        if self.theta_range[0] > self.theta_range[1]:
            raise ValueError("empty theta range")
        if not 0.0 < self.bernoulli_p < 1.0:
            raise ValueError("bernoulli_p must lie strictly in (0, 1)")
        if self.capacity_value <= 0:
            raise ValueError("capacity_value must be positive")


@dataclass(frozen=True, eq=False)
class ProblemConstants:
    """Derived quantities shared by all solvers.

    mu               global strong-concavity lower bound over the enclosing box
    spectral         spectral radius of A^T A
    dual_smoothness  spectral / mu, the smoothness constant of the dual
    lambda_bar       uniform dual cap: a dual at lambda_bar keeps its row feasible
    row_weights      A A^T applied to the all-ones vector, in exact integers
    """

    mu: float
    spectral: float
    dual_smoothness: float
    lambda_bar: float
    row_weights: np.ndarray


def validate(problem: NumProblem) -> list[str]:
    """Return the names of every violated structural invariant (empty if valid)."""
    violations = []
    a = problem.a_matrix
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        return ["malformed constraint matrix"]
    if problem.capacities.shape != (problem.m,):
        violations.append("capacity dimension mismatch")
        return violations
    if len(problem.utilities) != problem.n:
        violations.append("utility dimension mismatch")
        return violations
    if not np.isin(a, (0, 1)).all():
        violations.append("non-binary entry")
    if (a.sum(axis=1) == 0).any():
        violations.append("zero row")
    if (a.sum(axis=0) == 0).any():
        violations.append("zero column")
    if (problem.capacities <= 0).any():
        violations.append("non-positive capacity")
    for u in problem.utilities:
        if u.theta <= 0 or u.shift <= 0:
            violations.append("non-positive utility parameter")
            break
    for u in problem.utilities:
        if u.lower < 0 or not u.lower < u.upper:
            violations.append("invalid domain bounds")
            break
    if not violations:
        interior = problem.lower + SLATER_EPS
        if (interior >= problem.upper).any() or not (a @ interior < problem.capacities).all():
            violations.append("no slater point")
    return violations


def generate_random(config: GeneratorConfig) -> NumProblem:
    """Draw a random instance; deterministic given config.seed.

    The whole matrix is resampled until it has no zero row or column.
    """
    config.check()
    rng = np.random.default_rng(config.seed)
    n = int(rng.integers(config.n_range[0], config.n_range[1] + 1))
    m = int(rng.integers(config.m_range[0], config.m_range[1] + 1))
    for _ in range(RESAMPLE_CAP):
        a = (rng.random((m, n)) < config.bernoulli_p).astype(np.int64)
        if (a.sum(axis=1) > 0).all() and (a.sum(axis=0) > 0).all():
            break
    else:
        raise GenerationError(
            f"no non-degenerate {m}x{n} matrix found in {RESAMPLE_CAP} attempts"
        )
    theta = rng.uniform(config.theta_range[0], config.theta_range[1], size=n)
    utilities = tuple(UtilitySpec(theta=float(t)) for t in theta)
    capacities = np.full(m, float(config.capacity_value))
    return NumProblem(a, capacities, utilities, seed=config.seed)


def spectral_radius(gram: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_CAP) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from the all-ones vector for reproducibility; converges when the
    eigen-residual drops below tol relative to the current estimate.
    """
    gram = np.asarray(gram, dtype=float)
    v = np.ones(gram.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = gram @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        estimate = float(v @ (gram @ v))
        residual = np.linalg.norm(gram @ v - estimate * v)
        if residual <= tol * max(estimate, 1.0):
            return estimate
    raise PowerIterationError(f"no convergence within {max_iter} iterations")


def compute_constants(problem: NumProblem) -> ProblemConstants:
    """Derive the curvature, smoothness, dual cap, and margin weights."""
    c_max = float(problem.capacities.max())
    mu = float(np.min(problem.theta / (c_max + problem.shift) ** 2))
    spectral = spectral_radius(problem.a_matrix.T @ problem.a_matrix)
    lambda_bar = float(np.max(problem.theta / (problem.lower + problem.shift)))
    ones = np.ones(problem.m, dtype=np.int64)
    row_weights = (problem.a_matrix @ problem.a_matrix.T) @ ones
    return ProblemConstants(
        mu=mu,
        spectral=spectral,
        dual_smoothness=spectral / mu,
        lambda_bar=lambda_bar,
        row_weights=row_weights,
    )


# --- serialization ---------------------------------------------------------

def problem_to_dict(problem: NumProblem) -> dict:
    shifts = problem.shift
    upper = ["inf" if math.isinf(u) else float(u) for u in problem.upper]
    return {
        "n": problem.n,
        "m": problem.m,
        "A": problem.a_matrix.tolist(),
        "c": problem.capacities.tolist(),
        "theta": problem.theta.tolist(),
        "shift": float(shifts[0]) if np.all(shifts == shifts[0]) else shifts.tolist(),
        "lower": problem.lower.tolist(),
        "upper": upper,
        "seed": problem.seed,
    }


def problem_from_dict(doc: dict) -> NumProblem:
    n = int(doc["n"])
    shift = doc["shift"]
    shifts = [float(shift)] * n if np.isscalar(shift) else [float(s) for s in shift]
    upper = [math.inf if u == "inf" else float(u) for u in doc["upper"]]
    utilities = tuple(
        UtilitySpec(theta=float(t), shift=s, lower=float(lo), upper=up)
        for t, s, lo, up in zip(doc["theta"], shifts, doc["lower"], upper)
    )
    return NumProblem(
        np.asarray(doc["A"], dtype=np.int64),
        np.asarray(doc["c"], dtype=float),
        utilities,
        seed=doc.get("seed"),
    )


def save_problem(problem: NumProblem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)
        fh.write("\n")


def load_problem(path) -> NumProblem:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


def problem_hash(problem: NumProblem) -> str:
    """Content hash of the mathematical instance (seed excluded)."""
    doc = problem_to_dict(problem)
    doc.pop("seed", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
