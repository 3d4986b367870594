"""Exact sampling of correlated binary vectors by chain-rule Bernoulli trials.

The joint law factorizes as p(x_1) p(x_2|x_1) ... p(x_p|x_1..x_{p-1}); each
factor has a closed form, so a draw is p Bernoulli trials in fixed index
order. Conditional means for every prefix are precomputed once per model
from the joint tables of the leading marginals (the mean for step k given
prefix b is p(b,1)/p(b)), which makes batch sampling a handful of
vectorized operations per variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from . import _kernels
from .errors import InvalidConditionalMeanError, SingularSigmaError
from .model import GrassmannBinary

#: Identifier of the generator algorithm, recorded in output metadata.
RNG_ALGORITHM_ID = "numpy-pcg64"

#: Conditional means within this band outside [0, 1] are clamped.
MEAN_CLAMP_TOL = 1e-9


def seeded_rng(seed: int) -> np.random.Generator:
    """The package-standard seeded generator (PCG64, period 2^128)."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class Dataset:
    """N observed binary vectors plus derived per-state counts."""

    rows: np.ndarray
    counts: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.uint8)
        if self.rows.ndim != 2:
            raise ValueError("rows must be a 2-D array of 0/1 values")
        if not self.counts:
            self.counts = self._count()
        elif sum(self.counts.values()) != len(self.rows):
            raise ValueError("counts inconsistent with rows")

    def _count(self) -> Dict[int, int]:
        masks = self.rows.astype(np.int64) @ (1 << np.arange(self.p, dtype=np.int64))
        uniq, cts = np.unique(masks, return_counts=True)
        return {int(m): int(c) for m, c in zip(uniq, cts)}

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    def count_vector(self) -> np.ndarray:
        """Dense length-2^p count vector n_delta."""
        out = np.zeros(2 ** self.p)
        for mask, c in self.counts.items():
            out[mask] = c
        return out


#: Above this dimension conditional means are memoized per visited prefix
#: instead of tabulated for every prefix (the full tree has 2^p entries).
CHAIN_TREE_CAP = 20


def _clamp_mean(mean: float) -> float:
    if -MEAN_CLAMP_TOL <= mean < 0.0:
        return 0.0
    if 1.0 < mean <= 1.0 + MEAN_CLAMP_TOL:
        return 1.0
    if 0.0 <= mean <= 1.0:
        return mean
    return float("nan")


def _chain_tree(model: GrassmannBinary):
    """Per-step conditional-mean lookup tables, cached on the model.

    tree[k-1][b] is p(x_k = 1 | first k-1 variables = bits of b). Entries
    are clamped into [0, 1] within MEAN_CLAMP_TOL; anything further outside,
    or any prefix with nonpositive probability, is poisoned with NaN and
    only raises if a draw actually lands on it.
    """
    if model._chain_tree is not None:
        return model._chain_tree
    p = model.p
    tree = []
    prev = np.ones(1)
    for k in range(1, p + 1):
        sub = np.ascontiguousarray(model.sigma[:k, :k])
        det_sub = _kernels.det(sub)
        if det_sub == 0.0:
            raise SingularSigmaError(f"leading {k}x{k} block of Sigma is singular")
        table = _kernels.joint_table(np.linalg.inv(sub), 1.0 / det_sub)
        half = 1 << (k - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            means = table[half:] / prev
        means[prev <= 0.0] = np.nan
        low = (means >= -MEAN_CLAMP_TOL) & (means < 0.0)
        high = (means > 1.0) & (means <= 1.0 + MEAN_CLAMP_TOL)
        means[low] = 0.0
        means[high] = 1.0
        means[(means < 0.0) | (means > 1.0)] = np.nan
        tree.append(means)
        prev = table
    model._chain_tree = tree
    return tree


def _prefix_prob(sigma: np.ndarray, prefix: int, k: int) -> float:
    """p(x_1..x_k = bits of prefix) for the marginal over the leading block,
    via the recoded-block determinant (no state enumeration)."""
    if k == 0:
        return 1.0
    bits = (prefix >> np.arange(k)) & 1
    block = sigma[:k, :k] * (2.0 * bits - 1.0)[None, :] + np.diag(1.0 - bits)
    return float(np.linalg.det(block))


def _lazy_mean(model: GrassmannBinary, memo: dict, k: int, prefix: int) -> float:
    """Memoized conditional mean for step k+1 given a prefix bitmask."""
    key = (k, prefix)
    mean = memo.get(key)
    if mean is None:
        denom = _prefix_prob(model.sigma, prefix, k)
        if denom <= 0.0:
            mean = float("nan")
        else:
            num = _prefix_prob(model.sigma, prefix | (1 << k), k + 1)
            mean = _clamp_mean(num / denom)
        memo[key] = mean
    return mean


def sample(model: GrassmannBinary, n: int, rng: np.random.Generator) -> Dataset:
    """Draw n independent vectors; identical (model, seed) gives identical data."""
    p = model.p
    if p > CHAIN_TREE_CAP:
        return Dataset(np.array([sample_one(model, rng) for _ in range(n)],
                                dtype=np.uint8).reshape(n, p))
    tree = _chain_tree(model)
    states = np.zeros(n, dtype=np.int64)
    rows = np.empty((n, p), dtype=np.uint8)
    for k in range(p):
        means = tree[k][states]
        if np.isnan(means).any():
            raise InvalidConditionalMeanError(k + 1)
        bits = rng.random(n) < means
        rows[:, k] = bits
        states |= bits.astype(np.int64) << k
    return Dataset(rows)


def sample_one(model: GrassmannBinary, rng: np.random.Generator) -> np.ndarray:
    """Draw a single vector by p sequential Bernoulli trials."""
    p = model.p
    use_tree = p <= CHAIN_TREE_CAP
    if use_tree:
        tree = _chain_tree(model)
    else:
        if model._chain_tree is None:
            model._chain_tree = {}
        memo = model._chain_tree
    bits = np.empty(p, dtype=np.uint8)
    prefix = 0
    for k in range(p):
        mean = tree[k][prefix] if use_tree else _lazy_mean(model, memo, k, prefix)
        if np.isnan(mean):
            raise InvalidConditionalMeanError(k + 1)
        bit = rng.random() < mean
        bits[k] = bit
        prefix |= int(bit) << k
    return bits
