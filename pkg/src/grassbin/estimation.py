"""Dataset statistics, sampling-moment predictions, and parameter fitting.

Two fitters live here. fit_max_entropy builds a model matching prescribed
means and covariances, resolving the leftover per-pair ratio freedom by
maximizing the joint entropy (coordinate ascent with golden-section line
searches). fit_map maximizes the pseudo-count-weighted log posterior

    sum_delta (n_delta + gamma) log pi_delta(Sigma)

by a damped Newton method with an analytic gradient, a finite-difference
Hessian, and a step-halving line search that rejects any iterate driving a
state probability to zero or below.

Both work in the canonical gauge Sigma_i1 = -1 (i != 1), so the first row
of the estimate carries the covariances with variable 1 directly. The gauge
slice is degenerate when a first-column covariance vanishes: the posterior
can then climb forever along a ridge where individual entries diverge while
every product stays fixed. The optimizer bounds the parameter domain and
reports a stall instead of chasing that supremum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels, linalg
from .errors import (
    InfeasibleTargetError,
    NonConvergenceError,
    NonPositiveProbabilityError,
    TooFewSamplesError,
)
from .model import PROB_ATOL, GrassmannBinary, from_sigma
from .sampling import Dataset
from .states import all_state_bits


# ---------------------------------------------------------------------------
# dataset statistics and their theoretical sampling moments


@dataclass
class StatSummary:
    """Sample means, unbiased covariances, and the empirical joint table."""

    means: np.ndarray          # length p
    covariances: np.ndarray    # p x p, unbiased; diagonal holds variances
    empirical_joint: dict      # state mask -> n_delta / n
    n: int


def summarize(data: Dataset) -> StatSummary:
    """Exact sample statistics; requires at least two rows."""
    if data.n < 2:
        raise TooFewSamplesError(f"need at least 2 rows for covariances, got {data.n}")
    rows = data.rows.astype(np.float64)
    means = rows.mean(axis=0)
    centered = rows - means
    cov = centered.T @ centered / (data.n - 1)
    q = {mask: c / data.n for mask, c in data.counts.items()}
    return StatSummary(means, cov, q, data.n)


@dataclass
class StatMoments:
    """Theoretical mean/variance of sample statistics at sample size n."""

    mean_xbar: np.ndarray
    var_xbar: np.ndarray
    mean_cov: np.ndarray   # E[s_ij]; diagonal holds the true variances
    var_cov: np.ndarray    # Var[s_ij] for i != j; diagonal is NaN
    mean_q: np.ndarray
    var_q: np.ndarray


def theoretical_stat_moments(model: GrassmannBinary, n: int,
                             max_p: Optional[int] = None) -> StatMoments:
    """Predicted sampling moments of x-bar, s_ij, and the empirical table.

    E[xbar] = mu, Var[xbar] = mu(1-mu)/n; E[s_ij] = sigma_ij and
    Var[s_ij] = mu_iijj/n - (n-2)/(n(n-1)) sigma_ij^2 + mu_ii mu_jj/(n(n-1));
    E[q] = pi, Var[q] = pi(1-pi)/n.
    """
    p = model.p
    mu = np.diag(model.sigma).copy()
    var = mu * (1.0 - mu)
    mean_cov = np.empty((p, p))
    var_cov = np.full((p, p), np.nan)
    for i in range(p):
        mean_cov[i, i] = var[i]
        for j in range(p):
            if i == j:
                continue
            sij = -model.sigma[i, j] * model.sigma[j, i]
            mean_cov[i, j] = sij
            if n < 2:
                continue  # s_ij undefined at n = 1; leave Var as NaN
            miijj = model.fourth_central_moment(i + 1, j + 1)
            var_cov[i, j] = (miijj / n
                             - (n - 2) / (n * (n - 1)) * sij ** 2
                             + var[i] * var[j] / (n * (n - 1)))
    table = model.joint_table(max_p)
    return StatMoments(mu, var / n, mean_cov, var_cov,
                       np.asarray(table), table * (1.0 - table) / n)


# ---------------------------------------------------------------------------
# moment targets and the maximum-entropy parameterization


@dataclass
class MomentTarget:
    """Prescribed means and pairwise covariances for a model."""

    means: np.ndarray
    covariances: np.ndarray   # p x p symmetric; only off-diagonal entries used

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        p = self.means.shape[0]
        if self.covariances.shape != (p, p):
            raise ValueError("covariance matrix shape does not match means")
        if np.any(self.means <= 0.0) or np.any(self.means >= 1.0):
            raise ValueError("target means must lie strictly inside (0, 1)")
        var = self.means * (1.0 - self.means)
        rho = self.covariances / np.sqrt(np.outer(var, var))
        off = ~np.eye(p, dtype=bool)
        if np.any(np.abs(rho[off]) > 1.0):
            raise ValueError("implied Pearson correlations exceed 1 in magnitude")

    @classmethod
    def from_pearson(cls, means, rho) -> "MomentTarget":
        means = np.asarray(means, dtype=np.float64)
        if np.any(means <= 0.0) or np.any(means >= 1.0):
            raise ValueError("target means must lie strictly inside (0, 1)")
        rho = np.asarray(rho, dtype=np.float64)
        var = means * (1.0 - means)
        cov = rho * np.sqrt(np.outer(var, var))
        np.fill_diagonal(cov, var)
        return cls(means, cov)

    @property
    def p(self) -> int:
        return self.means.shape[0]


def _free_pairs(p: int) -> List[Tuple[int, int]]:
    """0-based pairs (i, j), i < j, i >= 1: the splits not pinned by the gauge."""
    return [(i, j) for i in range(1, p) for j in range(i + 1, p)]


def _assemble_sigma(target: MomentTarget, ratios, signs) -> np.ndarray:
    """Canonical-gauge Sigma realizing the target moments.

    First column pinned to -1 below the diagonal so the first row carries
    the covariances; every remaining pair (i, j) splits its covariance as
    Sigma_ij = s e^r sqrt|c|, Sigma_ji = -sign(c) s e^{-r} sqrt|c|.
    """
    p = target.p
    sigma = np.zeros((p, p))
    np.fill_diagonal(sigma, target.means)
    for i in range(1, p):
        sigma[i, 0] = -1.0
        sigma[0, i] = target.covariances[0, i]
    for k, (i, j) in enumerate(_free_pairs(p)):
        c = target.covariances[i, j]
        if c == 0.0:
            continue
        root = np.sqrt(abs(c))
        r, s = ratios[k], signs[k]
        sigma[i, j] = s * np.exp(r) * root
        sigma[j, i] = (-s if c > 0 else s) * np.exp(-r) * root
    return sigma


def _min_prob(sigma: np.ndarray) -> float:
    det_sigma = _kernels.det(np.ascontiguousarray(sigma))
    if det_sigma == 0.0:
        return -np.inf
    table = _kernels.joint_table(np.linalg.inv(sigma), 1.0 / det_sigma)
    return float(table.min())


def _entropy_or_neginf(sigma: np.ndarray) -> float:
    det_sigma = _kernels.det(np.ascontiguousarray(sigma))
    if det_sigma == 0.0:
        return -np.inf
    table = _kernels.joint_table(np.linalg.inv(sigma), 1.0 / det_sigma)
    if table.min() < -PROB_ATOL:
        return -np.inf
    probs = table[table > 1e-300]
    return float(-(probs * np.log(probs)).sum())


def _golden_refine(f, lo, hi, iters=40):
    """Golden-section maximization of f on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _coordinate_ascent(objective, ratios, signs, span=2.5, grid_points=33,
                       max_sweeps=200, tol=1e-11):
    """Cyclic per-pair optimization: sign flips plus a gridded golden-section
    line search on each ratio. Returns (ratios, signs, best value)."""
    best = objective(ratios, signs)
    n = len(ratios)
    for _ in range(max_sweeps):
        improved = False
        for k in range(n):
            for s in (signs[k], -signs[k]):
                trial_signs = signs.copy()
                trial_signs[k] = s
                grid = ratios[k] + np.linspace(-span, span, grid_points)

                def on_grid(r):
                    trial = ratios.copy()
                    trial[k] = r
                    return objective(trial, trial_signs)

                vals = np.array([on_grid(g) for g in grid])
                gi = int(np.argmax(vals))
                if not np.isfinite(vals[gi]):
                    continue
                lo = grid[max(gi - 1, 0)]
                hi = grid[min(gi + 1, grid_points - 1)]
                r_best, v_best = _golden_refine(on_grid, lo, hi)
                if v_best > best + tol:
                    ratios = ratios.copy()
                    ratios[k] = r_best
                    signs = trial_signs
                    best = v_best
                    improved = True
        if not improved:
            return ratios, signs, best
    raise NonConvergenceError(max_sweeps, "entropy coordinate ascent did not settle")


def fit_max_entropy(target: MomentTarget, max_p: Optional[int] = None) -> GrassmannBinary:
    """Model matching the target moments with maximal joint entropy.

    The means and covariances are exact by construction; the remaining
    per-pair ratio and sign freedom is optimized by coordinate ascent.
    Raises InfeasibleTargetError when no searched parameterization yields a
    valid model.
    """
    p = target.p
    cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    linalg._check_cap(p, cap)
    n_free = len(_free_pairs(p))
    ratios = np.zeros(n_free)
    signs = np.ones(n_free)

    if _min_prob(_assemble_sigma(target, ratios, signs)) < 0.0:
        # restore feasibility first: climb the minimum probability
        def feasibility(r, s):
            return _min_prob(_assemble_sigma(target, r, s))

        ratios, signs, reached = _coordinate_ascent(feasibility, ratios, signs,
                                                    span=3.0, max_sweeps=60)
        if reached < 0.0:
            raise InfeasibleTargetError(
                f"no valid parameterization found (best min probability {reached:.3e})")

    def entropy_obj(r, s):
        return _entropy_or_neginf(_assemble_sigma(target, r, s))

    ratios, signs, _ = _coordinate_ascent(entropy_obj, ratios, signs)
    sigma = _assemble_sigma(target, ratios, signs)
    mdl = from_sigma(sigma, check="force", max_p=cap)
    if not mdl.validity:
        raise InfeasibleTargetError("entropy search ended on an invalid model")
    return mdl


# ---------------------------------------------------------------------------
# log posterior and MAP fitting


def _counts_and_p(data) -> Tuple[np.ndarray, int]:
    if isinstance(data, Dataset):
        return data.count_vector(), data.p
    counts = np.asarray(data, dtype=np.float64)
    p = counts.shape[0].bit_length() - 1
    if 2 ** p != counts.shape[0]:
        raise ValueError("count vector length must be a power of two")
    return counts, p


def log_posterior(sigma, counts, gamma: float, max_p: Optional[int] = None) -> float:
    """sum_delta (n_delta + gamma) log pi_delta(Sigma), constants dropped.

    counts may be a Dataset, a dense length-2^p vector, or a mask -> count
    mapping. Raises NonPositiveProbabilityError (carrying the offending
    state mask) when the model puts nonpositive probability on any state.
    """
    sigma = linalg.as_square_matrix(sigma)
    p = sigma.shape[0]
    if isinstance(counts, Dataset):
        counts = counts.count_vector()
    elif isinstance(counts, dict):
        dense = np.zeros(2 ** p)
        for mask, c in counts.items():
            dense[mask] = c
        counts = dense
    else:
        counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (2 ** p,):
        raise ValueError(f"expected {2 ** p} state counts, got shape {counts.shape}")
    cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    linalg._check_cap(p, cap)
    det_sigma = _kernels.det(sigma)
    if det_sigma == 0.0:
        raise NonPositiveProbabilityError((1 << p) - 1, 0.0)
    table = _kernels.joint_table(np.linalg.inv(sigma), 1.0 / det_sigma)
    bad = np.nonzero(table <= 0.0)[0]
    if bad.size:
        raise NonPositiveProbabilityError(int(bad[0]), float(table[bad[0]]))
    return float((counts + gamma) @ np.log(table))


@dataclass
class FitConfig:
    """Knobs for the MAP Newton fitter."""

    gamma: float = 0.01
    max_newton_iters: int = 100
    gradient_tolerance: float = 1e-6
    step_halving_limit: int = 30
    initialization: str = "moments"     # or "independent"
    step_max: float = 2.0               # max-norm cap on a single Newton step
    sigma_bound: float = 32.0           # domain guard against gauge ridges
    hessian_step: float = 1e-5          # relative FD step on the gradient
    stall_iters: int = 3                # consecutive negligible-gain iterations

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")


@dataclass
class FitReport:
    """MAP estimate in canonical gauge plus optimizer diagnostics."""

    sigma: np.ndarray
    log_posterior_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_grad_norm: float = np.nan
    stop_reason: str = ""

    def model(self, check: str = "auto") -> GrassmannBinary:
        return from_sigma(self.sigma, check=check)


class _GaugeParam:
    """Packing between Sigma and the free parameter vector.

    Layout: p diagonal logits first, then the off-diagonal entries row-major
    with the first column (below the diagonal) pinned at -1. Total length
    p^2 - (p - 1).
    """

    def __init__(self, p: int):
        self.p = p
        free = np.ones((p, p), dtype=bool)
        np.fill_diagonal(free, False)
        free[1:, 0] = False
        self.free = free

    def pack(self, sigma: np.ndarray) -> np.ndarray:
        mu = np.clip(np.diag(sigma), 1e-12, 1 - 1e-12)
        return np.concatenate([np.log(mu / (1.0 - mu)), sigma[self.free]])

    def unpack(self, theta: np.ndarray) -> np.ndarray:
        p = self.p
        sigma = np.zeros((p, p))
        np.fill_diagonal(sigma, 1.0 / (1.0 + np.exp(-theta[:p])))
        sigma[1:, 0] = -1.0
        sigma[self.free] = theta[p:]
        return sigma

    def chain(self, sigma: np.ndarray, d_sigma: np.ndarray) -> np.ndarray:
        """Map a gradient in Sigma to a gradient in theta."""
        mu = np.diag(sigma)
        return np.concatenate([np.diag(d_sigma) * mu * (1.0 - mu), d_sigma[self.free]])


def _objective_grad(theta, gauge: _GaugeParam, weights):
    """Log posterior and its gradient in theta; (None, None) if infeasible."""
    sigma = gauge.unpack(theta)
    det_sigma = _kernels.det(np.ascontiguousarray(sigma))
    if det_sigma <= 0.0:
        # the all-ones state has probability det Sigma, so this is infeasible
        return None, None
    try:
        lam = np.linalg.inv(sigma)
    except np.linalg.LinAlgError:
        return None, None
    det_lam = 1.0 / det_sigma
    ok, val, grad_lam = _kernels.loglik_grad(lam, weights)
    if not ok:
        return None, None
    total_w = float(weights.sum())
    val -= total_w * np.log(det_lam)
    grad_lam -= total_w * sigma.T
    d_sigma = -lam.T @ grad_lam @ lam.T
    return val, gauge.chain(sigma, d_sigma)


def _fd_hessian(theta, grad, gauge, weights, rel_step):
    n = len(theta)
    hess = np.empty((n, n))
    for k in range(n):
        h = rel_step * max(1.0, abs(theta[k]))
        bumped = theta.copy()
        bumped[k] += h
        _, gk = _objective_grad(bumped, gauge, weights)
        if gk is None:
            bumped = theta.copy()
            bumped[k] -= h
            _, gk = _objective_grad(bumped, gauge, weights)
            if gk is None:
                hess[:, k] = 0.0
                continue
            hess[:, k] = (grad - gk) / h
        else:
            hess[:, k] = (gk - grad) / h
    return 0.5 * (hess + hess.T)


def _moment_init(counts: np.ndarray, p: int) -> np.ndarray:
    """Moment-matching start: diagonal from sample means, first row from
    first-column sample covariances, remaining pairs split symmetrically;
    off-diagonals are halved until the model is strictly valid."""
    n = counts.sum()
    bits = all_state_bits(p).astype(np.float64)
    xbar = counts @ bits / n
    xbar = np.clip(xbar, 0.02, 0.98)
    centered = bits - xbar
    cov = (counts[:, None] * centered).T @ centered / max(n - 1.0, 1.0)
    sigma = np.zeros((p, p))
    np.fill_diagonal(sigma, xbar)
    sigma[1:, 0] = -1.0
    sigma[0, 1:] = cov[0, 1:]
    for i in range(1, p):
        for j in range(i + 1, p):
            root = np.sqrt(abs(cov[i, j]))
            sigma[i, j] = root
            sigma[j, i] = -root if cov[i, j] > 0 else root
    off = ~np.eye(p, dtype=bool)
    for _ in range(80):
        if _min_prob(sigma) > 0.0:
            return sigma
        sigma[off] *= 0.5
        sigma[1:, 0] = -1.0
    return _independent_init(counts, p)


def _independent_init(counts: np.ndarray, p: int) -> np.ndarray:
    n = counts.sum()
    bits = all_state_bits(p).astype(np.float64)
    xbar = np.clip(counts @ bits / n, 0.02, 0.98)
    sigma = np.diag(xbar).copy()
    sigma[1:, 0] = -1.0
    return sigma


def fit_map(data, config: Optional[FitConfig] = None,
            max_p: Optional[int] = None) -> FitReport:
    """MAP estimation of Sigma by damped Newton in the canonical gauge.

    Newton directions use the analytic gradient and a finite-difference
    Hessian with adaptive Levenberg damping; the step-halving line search
    rejects any iterate that makes some state probability nonpositive or
    leaves the bounded parameter domain. Convergence is declared when the
    gradient max-norm falls below config.gradient_tolerance; the report
    carries the best iterate either way.
    """
    config = config or FitConfig()
    counts, p = _counts_and_p(data)
    cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    linalg._check_cap(p, cap)
    weights = counts + config.gamma
    gauge = _GaugeParam(p)
    if config.initialization == "independent":
        sigma0 = _independent_init(counts, p)
    else:
        sigma0 = _moment_init(counts, p)
    theta = gauge.pack(sigma0)
    value, grad = _objective_grad(theta, gauge, weights)
    if value is None:
        raise NonPositiveProbabilityError(-1, None)
    trace = [value]

    def finish(iters, reason):
        return FitReport(
            sigma=gauge.unpack(theta),
            log_posterior_trace=trace,
            iterations=iters,
            converged=bool(np.abs(grad).max() < config.gradient_tolerance),
            final_grad_norm=float(np.abs(grad).max()),
            stop_reason=reason,
        )

    damping = 0.0
    stall = 0
    identity = np.eye(len(theta))
    for it in range(config.max_newton_iters):
        if np.abs(grad).max() < config.gradient_tolerance:
            return finish(it, "gradient tolerance reached")
        hess = _fd_hessian(theta, grad, gauge, weights, config.hessian_step)
        try:
            shift = max(0.0, float(np.linalg.eigvalsh(hess).max())) + 1e-8
        except np.linalg.LinAlgError:
            shift = 1e-8
        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(hess - (shift + damping) * identity, -grad)
            except np.linalg.LinAlgError:
                # singular Hessian: damp harder, degrading toward gradient ascent
                damping = max(damping * 10.0, 1e-3)
                continue
            slope = float(grad @ step)
            if not np.all(np.isfinite(step)) or slope <= 0.0:
                damping = max(damping * 10.0, 1e-3)
                continue
            step_norm = float(np.abs(step).max())
            if step_norm > config.step_max:
                step *= config.step_max / step_norm
                slope = float(grad @ step)
            t = 1.0
            new_value = new_grad = None
            # sufficient-increase test with an ulp-scale slack: near the
            # optimum the true gain of a full Newton step falls below the
            # representable resolution of the objective, and without slack
            # one-ulp jitter would reject every productive step
            slack = 32.0 * np.finfo(float).eps * max(1.0, abs(value))
            for _ in range(config.step_halving_limit):
                candidate = theta + t * step
                if candidate[p:].size == 0 or np.abs(candidate[p:]).max() <= config.sigma_bound:
                    new_value, new_grad = _objective_grad(candidate, gauge, weights)
                    if new_value is not None and new_value >= value + 1e-4 * t * slope - slack:
                        break
                new_value = None
                t *= 0.5
            if new_value is not None:
                gain = (new_value - value) / max(1.0, abs(value))
                grad_shrunk = np.abs(new_grad).max() < 0.7 * np.abs(grad).max()
                theta = theta + t * step
                value, grad = new_value, new_grad
                trace.append(value)
                damping = damping / 3.0 if t >= 0.5 else min(max(damping * 4.0, 1e-3), 1e6)
                # a negligible gain is a stall only if the gradient has also
                # stopped shrinking; the quadratic endgame moves the gradient
                # orders of magnitude while the objective changes sub-ulp
                stall = stall + 1 if (gain < 1e-11 and not grad_shrunk) else 0
                accepted = True
                break
            damping = max(damping * 10.0, 1e-3)
        if not accepted:
            return finish(it + 1, "no acceptable step")
        if stall >= config.stall_iters:
            return finish(it + 1, "objective stalled")
    return finish(config.max_newton_iters, "iteration limit")


def canonicalize_gauge(sigma) -> np.ndarray:
    """Rescale rows/columns so the first column below the diagonal is -1.

    Scaling row i by c and column i by 1/c leaves every joint probability
    unchanged. When Sigma_i1 is (numerically) zero no scaling works; the
    entry is pinned to -1 and Sigma_1i zeroed, which preserves the vanishing
    covariance but not cycle products through that pair.
    """
    out = linalg.as_square_matrix(sigma).copy()
    p = out.shape[0]
    scale = max(float(np.abs(out).max()), 1e-300)
    for i in range(1, p):
        c = out[i, 0]
        if abs(c) > 1e-12 * scale:
            factor = -1.0 / c
            out[i, :] *= factor
            out[:, i] /= factor
        else:
            out[0, i] = 0.0
        out[i, 0] = -1.0
    return out
