"""Monte Carlo experiment harness: sampling distributions of statistics and
of MAP estimates for the five-variable reference model.

Each experiment runs M independent trials of sample size N. Trial t uses its
own generator seeded with base_seed + t, so trials are reproducible and
order-independent; outputs are indexed by trial. Results are written as one
CSV per tracked quantity (columns trial,value) plus a summary.csv with
Monte Carlo mean/variance next to the theoretical prediction where one
exists (NaN where the theory column has no closed form).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .estimation import (
    FitConfig,
    MomentTarget,
    fit_map,
    fit_max_entropy,
    theoretical_stat_moments,
)
from .model import GrassmannBinary
from .sampling import sample, seeded_rng
from .states import state_mask

#: Reference five-variable model: means and Pearson correlations.
REFERENCE_MEANS = (0.77, 0.37, 0.67, 0.42, 0.7)
REFERENCE_PEARSON = {
    (1, 2): -0.03, (1, 3): 0.32, (1, 4): -0.1, (1, 5): 0.04,
    (2, 3): 0.004, (2, 4): 0.003, (2, 5): 0.06, (3, 4): -0.03,
    (3, 5): 0.05, (4, 5): -0.19,
}

#: The spotlighted state (x1..x5) = (1,1,0,0,1) and its bitmask.
REFERENCE_STATE = (1, 1, 0, 0, 1)
REFERENCE_STATE_MASK = state_mask(REFERENCE_STATE)

DEFAULT_TRIALS = {"statistics": 5000, "map-estimates": 2000, "sigma-estimates": 2000}
DEFAULT_SIZES = {
    "statistics": (50, 200, 500),
    "map-estimates": (50, 200, 500),
    "sigma-estimates": (50, 500, 5000),
}


def reference_target() -> MomentTarget:
    p = len(REFERENCE_MEANS)
    rho = np.zeros((p, p))
    for (i, j), r in REFERENCE_PEARSON.items():
        rho[i - 1, j - 1] = rho[j - 1, i - 1] = r
    return MomentTarget.from_pearson(np.array(REFERENCE_MEANS), rho)


@lru_cache(maxsize=1)
def reference_model() -> GrassmannBinary:
    """Max-entropy model for the reference means/correlations (deterministic)."""
    return fit_max_entropy(reference_target())


@dataclass
class ExperimentResult:
    """Per-trial values plus theoretical mean/variance for each statistic."""

    name: str
    n: int
    trials: int
    values: Dict[str, np.ndarray]
    theory_mean: Dict[str, float]
    theory_var: Dict[str, float]

    def summary_rows(self) -> List[Tuple]:
        rows = []
        for stat, vals in self.values.items():
            mc_var = float(np.var(vals, ddof=1)) if len(vals) > 1 else float("nan")
            rows.append((stat, float(np.mean(vals)), mc_var,
                         self.theory_mean.get(stat, float("nan")),
                         self.theory_var.get(stat, float("nan"))))
        return rows


def _pair_stat(rows: np.ndarray, i: int, j: int) -> float:
    """Unbiased sample covariance of columns i, j (0-based); NaN when n < 2."""
    n = rows.shape[0]
    if n < 2:
        return float("nan")
    xi = rows[:, i].astype(np.float64)
    xj = rows[:, j].astype(np.float64)
    return float((xi - xi.mean()) @ (xj - xj.mean()) / (n - 1))


def run_statistics(model: GrassmannBinary, n: int, trials: int,
                   base_seed: int) -> ExperimentResult:
    """Sampling distribution of xbar_5, s_12, s_13, and q(1,1,0,0,1)."""
    vals = {"xbar5": np.empty(trials), "s12": np.empty(trials),
            "s13": np.empty(trials), "q11001": np.empty(trials)}
    for t in range(trials):
        data = sample(model, n, seeded_rng(base_seed + t))
        rows = data.rows
        vals["xbar5"][t] = rows[:, 4].mean()
        vals["s12"][t] = _pair_stat(rows, 0, 1)
        vals["s13"][t] = _pair_stat(rows, 0, 2)
        vals["q11001"][t] = data.counts.get(REFERENCE_STATE_MASK, 0) / n
    sm = theoretical_stat_moments(model, n)
    mask = REFERENCE_STATE_MASK
    theory_mean = {"xbar5": float(sm.mean_xbar[4]), "s12": float(sm.mean_cov[0, 1]),
                   "s13": float(sm.mean_cov[0, 2]), "q11001": float(sm.mean_q[mask])}
    theory_var = {"xbar5": float(sm.var_xbar[4]), "s12": float(sm.var_cov[0, 1]),
                  "s13": float(sm.var_cov[0, 2]), "q11001": float(sm.var_q[mask])}
    return ExperimentResult("statistics", n, trials, vals, theory_mean, theory_var)


def run_map_estimates(model: GrassmannBinary, n: int, trials: int, base_seed: int,
                      config: Optional[FitConfig] = None) -> ExperimentResult:
    """Sampling distribution of MAP estimates mu5, sigma12, sigma13, pi(1,1,0,0,1)."""
    config = config or FitConfig()
    vals = {"mu5": np.empty(trials), "sigma12": np.empty(trials),
            "sigma13": np.empty(trials), "pi11001": np.empty(trials),
            "converged": np.empty(trials)}
    for t in range(trials):
        data = sample(model, n, seeded_rng(base_seed + t))
        report = fit_map(data, config)
        est = report.model(check="none")
        vals["mu5"][t] = est.mean(5)
        vals["sigma12"][t] = est.covariance(1, 2)
        vals["sigma13"][t] = est.covariance(1, 3)
        vals["pi11001"][t] = est.joint_table()[REFERENCE_STATE_MASK]
        vals["converged"][t] = float(report.converged)
    truth = model.joint_table()[REFERENCE_STATE_MASK]
    theory_mean = {"mu5": model.mean(5), "sigma12": model.covariance(1, 2),
                   "sigma13": model.covariance(1, 3), "pi11001": float(truth),
                   "converged": float("nan")}
    theory_var = {k: float("nan") for k in theory_mean}
    return ExperimentResult("map-estimates", n, trials, vals, theory_mean, theory_var)


def sigma_entry_pairs(p: int) -> List[Tuple[int, int]]:
    """Trackable entries: all off-diagonal positions except the pinned column."""
    return [(i, j) for i in range(1, p + 1) for j in range(2, p + 1) if i != j]


def run_sigma_estimates(model: GrassmannBinary, n: int, trials: int, base_seed: int,
                        config: Optional[FitConfig] = None) -> ExperimentResult:
    """Sampling distribution of the individual entries of the MAP Sigma-hat.

    Entries are identified only up to transposition, so the theory_mean
    column reports the canonical-gauge truth of the untransposed branch;
    consumers comparing against both branches should canonicalize the
    transpose themselves.
    """
    config = config or FitConfig()
    pairs = sigma_entry_pairs(model.p)
    names = {pair: f"Sigma{pair[0]}_{pair[1]}" for pair in pairs}
    vals = {names[pair]: np.empty(trials) for pair in pairs}
    for t in range(trials):
        data = sample(model, n, seeded_rng(base_seed + t))
        report = fit_map(data, config)
        for (i, j) in pairs:
            vals[names[(i, j)]][t] = report.sigma[i - 1, j - 1]
    theory_mean = {names[(i, j)]: float(model.sigma[i - 1, j - 1]) for (i, j) in pairs}
    theory_var = {name: float("nan") for name in theory_mean}
    return ExperimentResult("sigma-estimates", n, trials, vals, theory_mean, theory_var)


def write_result(result: ExperimentResult, out_dir: str) -> str:
    """Write per-statistic CSVs and summary.csv under out_dir/<name>_N<n>/."""
    sub = os.path.join(out_dir, f"{result.name.replace('-', '_')}_N{result.n}")
    os.makedirs(sub, exist_ok=True)
    for stat, values in result.values.items():
        with open(os.path.join(sub, f"{stat}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "value"])
            for t, v in enumerate(values):
                writer.writerow([t, format(v, ".17g")])
    with open(os.path.join(sub, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["statistic", "mc_mean", "mc_var", "theory_mean", "theory_var"])
        for row in result.summary_rows():
            writer.writerow([row[0]] + [format(v, ".17g") for v in row[1:]])
    return sub
