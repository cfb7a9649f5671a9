"""Per-trial iteration records and the metrics derived from them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import NumProblem

CSV_COLUMNS = (
    "trial_id",
    "algorithm",
    "t",
    "objective",
    "regret_cum",
    "infeasibility",
    "distance_to_opt",
    "max_lambda",
    "min_slack",
)
CSV_HEADER = ",".join(CSV_COLUMNS)
METRIC_COLUMNS = CSV_COLUMNS[3:]


def regret_series(objectives: np.ndarray, f_star: float) -> np.ndarray:
    """Cumulative sum of per-iteration suboptimality gaps."""
    return np.cumsum(f_star - np.asarray(objectives, float))


def infeasibility_norm(problem: NumProblem, x: np.ndarray) -> float:
    """Euclidean norm of the positive part of A x - c."""
    excess = problem.a_matrix @ np.asarray(x, float) - problem.capacities
    return float(np.linalg.norm(np.maximum(excess, 0.0)))


@dataclass
class TrialTrace:
    """One algorithm's run on one instance, one row per iteration.

    x_hist and lam_hist keep the raw iterates in memory for property checks;
    only the metric columns are serialized.
    """

    trial_id: int
    algorithm: str
    objective: np.ndarray
    regret_cum: np.ndarray
    infeasibility: np.ndarray
    distance_to_opt: np.ndarray
    max_lambda: np.ndarray
    min_slack: np.ndarray
    x_hist: np.ndarray | None = None
    lam_hist: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return len(self.objective)

    def iterations(self) -> np.ndarray:
        return np.arange(1, self.horizon + 1)

    def metrics(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}

    def write_csv(self, path_or_file) -> None:
        if hasattr(path_or_file, "write"):
            self._write_rows(path_or_file)
        else:
            with open(path_or_file, "w") as fh:
                self._write_rows(fh)

    def _write_rows(self, fh) -> None:
        cols = self.metrics()
        fh.write(CSV_HEADER + "\n")
        for i, t in enumerate(self.iterations()):
            values = ",".join(f"{cols[name][i]:.17g}" for name in METRIC_COLUMNS)
            fh.write(f"{self.trial_id},{self.algorithm},{t},{values}\n")


def build_trace(
    problem: NumProblem,
    algorithm: str,
    x_hist: np.ndarray,
    lam_hist: np.ndarray,
    trial_id: int = 0,
    f_star: float = np.nan,
    x_star: np.ndarray | None = None,
) -> TrialTrace:
    """Assemble the metric columns from raw iterates.

    Regret and distance columns are NaN when no reference optimum is given.
    """
    x_hist = np.asarray(x_hist, float)
    lam_hist = np.asarray(lam_hist, float)
    horizon = x_hist.shape[0]
    loads = x_hist @ problem.a_matrix.T
    slack = problem.capacities - loads
    objective = np.sum(problem.theta * np.log(x_hist + problem.shift), axis=1)
    infeasibility = np.linalg.norm(np.maximum(-slack, 0.0), axis=1)
    if x_star is not None:
        distance = np.linalg.norm(x_hist - np.asarray(x_star, float), axis=1)
    else:
        distance = np.full(horizon, np.nan)
    return TrialTrace(
        trial_id=trial_id,
        algorithm=algorithm,
        objective=objective,
        regret_cum=regret_series(objective, f_star),
        infeasibility=infeasibility,
        distance_to_opt=distance,
        max_lambda=lam_hist.max(axis=1),
        min_slack=slack.min(axis=1),
        x_hist=x_hist,
        lam_hist=lam_hist,
    )


def read_trace_csv(path) -> TrialTrace:
    """Load the metric columns of a trace CSV (raw iterates are not stored)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected trace header in {path}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"empty trace file {path}")
    trial_id = int(rows[0][0])
    algorithm = rows[0][1]
    data = np.array([[float(v) for v in row[3:]] for row in rows])
    return TrialTrace(
        trial_id=trial_id,
        algorithm=algorithm,
        objective=data[:, 0],
        regret_cum=data[:, 1],
        infeasibility=data[:, 2],
        distance_to_opt=data[:, 3],
        max_lambda=data[:, 4],
        min_slack=data[:, 5],
    )
