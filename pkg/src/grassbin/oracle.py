"""Brute-force reference implementations by exhaustive state enumeration.

Everything here is deliberately written as literal summations over all 2^p
states, evaluated through a different determinant formula than the model's
cached-inverse route: for a state x, the probability is the determinant of
the matrix with entries

    T_ij = Sigma_ij * (2 x_j - 1) + delta_ij * (1 - x_j),

built directly from Sigma with plain NumPy. These functions are the ground
truth that the closed-form operations are tested against; keep them slow
and obvious.
"""

from __future__ import annotations

from typing import Mapping, Optional, Tuple

import numpy as np

from . import linalg
from .errors import DimensionTooLargeError, ZeroEvidenceError
from .model import Observation, PROB_ATOL
from .states import all_state_bits


def _sigma_of(model_or_sigma) -> np.ndarray:
    sigma = getattr(model_or_sigma, "sigma", model_or_sigma)
    return linalg.as_square_matrix(sigma)


def oracle_table(model_or_sigma, max_p: Optional[int] = None) -> np.ndarray:
    """All 2^p joint probabilities via the per-state Sigma block determinant."""
    sigma = _sigma_of(model_or_sigma)
    p = sigma.shape[0]
    cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    if p > cap:
        raise DimensionTooLargeError(f"oracle table of dimension {p} exceeds cap {cap}")
    out = np.empty(2 ** p)
    for mask, bits in enumerate(all_state_bits(p)):
        x = bits.astype(np.float64)
        t = sigma * (2.0 * x - 1.0)[None, :] + np.diag(1.0 - x)
        out[mask] = np.linalg.det(t) if p else 1.0
    return out


def _dim_of(table) -> int:
    n = len(table)
    p = n.bit_length() - 1
    if 2 ** p != n:
        raise ValueError(f"table length {n} is not a power of two")
    return p


def oracle_marginal(table, keep) -> np.ndarray:
    """Sum the table over every variable not in keep (1-based indices).

    The result is indexed by bitmasks over keep in its sorted order.
    """
    table = np.asarray(table, dtype=np.float64)
    p = _dim_of(table)
    kept = linalg.index_tuple(keep, p)
    out = np.zeros(2 ** len(kept))
    for mask in range(2 ** p):
        sub = 0
        for pos, i in enumerate(kept):
            if (mask >> (i - 1)) & 1:
                sub |= 1 << pos
        out[sub] += table[mask]
    return out


def oracle_conditional(table, obs) -> Tuple[np.ndarray, float]:
    """Bayes' rule on the table: restrict to states matching obs, renormalize.

    Returns (conditional table over the unobserved variables in sorted
    order, evidence probability).
    """
    table = np.asarray(table, dtype=np.float64)
    p = _dim_of(table)
    if isinstance(obs, Mapping):
        obs = Observation(obs)
    obs.validate(p)
    rest = obs.rest(p)
    sel = np.zeros(2 ** len(rest))
    evidence = 0.0
    for mask in range(2 ** p):
        if any((mask >> (k - 1)) & 1 != v for k, v in obs.assignments.items()):
            continue
        evidence += table[mask]
        sub = 0
        for pos, i in enumerate(rest):
            if (mask >> (i - 1)) & 1:
                sub |= 1 << pos
        sel[sub] += table[mask]
    if abs(evidence) <= PROB_ATOL:
        raise ZeroEvidenceError(f"observation has probability {evidence:.3e}")
    return sel / evidence, float(evidence)


def oracle_mean(table, i: int) -> float:
    """E[x_i] as a literal sum over states."""
    table = np.asarray(table, dtype=np.float64)
    p = _dim_of(table)
    (i,) = linalg.index_tuple([i], p)
    bits = all_state_bits(p)[:, i - 1]
    return float((table * bits).sum())


def oracle_central_moment(table, indices) -> float:
    """E[prod_k (x_{i_k} - mu_{i_k})] over states; indices may repeat.

    Repeated indices give higher powers, e.g. (i, i, j, j) is the fourth
    central moment E[(x_i - mu_i)^2 (x_j - mu_j)^2].
    """
    table = np.asarray(table, dtype=np.float64)
    p = _dim_of(table)
    idx = [int(i) for i in indices]
    for i in set(idx):
        linalg.index_tuple([i], p)
    bits = all_state_bits(p).astype(np.float64)
    prod = np.ones(len(table))
    for i in idx:
        mu = float((table * bits[:, i - 1]).sum())
        prod *= bits[:, i - 1] - mu
    return float((table * prod).sum())


def oracle_entropy(table) -> float:
    """Shannon entropy of a probability table in nats, with 0 log 0 = 0."""
    table = np.asarray(table, dtype=np.float64)
    if table.min() < -PROB_ATOL:
        raise ValueError(f"table has a negative entry ({table.min():.3e})")
    probs = table[table > 1e-300]
    return float(-(probs * np.log(probs)).sum())
