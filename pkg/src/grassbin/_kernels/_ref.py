"""NumPy reference implementation of the hot kernels.

Selected at import time when the compiled extension is unavailable (see
``grassbin._kernels``). State loops are batched by subset size so the heavy
lifting happens in stacked ``np.linalg`` calls rather than Python loops.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

BACKEND_NAME = "numpy"

# Per-dimension enumeration plans, built once and reused. Each plan entry is
# (k, masks, idx): the state bitmasks whose zero-set has size k, and the
# (n_masks, k) array of 0-based zero-set indices in lexicographic order.
_PLANS: dict[int, list] = {}


def _state_plan(p):
    plan = _PLANS.get(p)
    if plan is None:
        groups: dict[int, list] = {i: [] for i in range(p + 1)}
        for mask in range(2 ** p):
            zeros = tuple(i for i in range(p) if not (mask >> i) & 1)
            groups[len(zeros)].append((mask, zeros))
        plan = []
        for k in range(p + 1):
            entries = groups[k]
            masks = np.array([m for m, _ in entries], dtype=np.int64)
            idx = np.array([z for _, z in entries], dtype=np.intp).reshape(len(entries), k)
            plan.append((k, masks, idx))
        _PLANS[p] = plan
    return plan


def det(a: np.ndarray) -> float:
    """Determinant by LU with partial pivoting; the 0x0 determinant is 1."""
    if a.shape[0] == 0:
        return 1.0
    return float(np.linalg.det(a))


def det_minpivot(a: np.ndarray):
    """(determinant, smallest |pivot|) from an explicit LU factorization."""
    n = a.shape[0]
    if n == 0:
        return 1.0, np.inf
    lu = np.array(a, dtype=np.float64, copy=True)
    sign = 1.0
    minpiv = np.inf
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if piv != k:
            lu[[k, piv], :] = lu[[piv, k], :]
            sign = -sign
        pivot = lu[k, k]
        minpiv = min(minpiv, abs(pivot))
        if pivot == 0.0:
            return 0.0, 0.0
        lu[k + 1:, k] /= pivot
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    d = sign * float(np.prod(np.diag(lu)))
    return d, float(minpiv)


def joint_table(lam: np.ndarray, det_lam: float) -> np.ndarray:
    """All 2^p state probabilities det(lam[B,B] - I) / det_lam."""
    p = lam.shape[0]
    out = np.empty(2 ** p)
    for k, masks, idx in _state_plan(p):
        if k == 0:
            out[masks] = 1.0
        else:
            subs = lam[idx[:, :, None], idx[:, None, :]] - np.eye(k)[None, :, :]
            out[masks] = np.linalg.det(subs)
    return out / det_lam


def sum_principal_minors(a: np.ndarray) -> float:
    """Sum of det(a[S,S]) over every subset S, including det of the empty matrix (1)."""
    p = a.shape[0]
    total = 0.0
    for k, _, idx in _state_plan(p):
        if k == 0:
            total += 1.0
        else:
            subs = a[idx[:, :, None], idx[:, None, :]]
            total += float(np.linalg.det(subs).sum())
    return total


def p0_witness(a: np.ndarray, tol: float) -> int:
    """First subset (by cardinality, then lexicographic) with minor < -tol.

    Returns the subset as a bitmask, or -1 when the matrix is P0.
    """
    p = a.shape[0]
    for k in range(1, p + 1):
        combos = list(combinations(range(p), k))
        idx = np.array(combos, dtype=np.intp)
        subs = a[idx[:, :, None], idx[:, None, :]]
        dets = np.linalg.det(subs)
        bad = np.nonzero(dets < -tol)[0]
        if bad.size:
            combo = combos[int(bad[0])]
            return sum(1 << i for i in combo)
    return -1


def loglik_grad(lam: np.ndarray, w: np.ndarray):
    """Weighted log-determinant sum over states and its gradient in lam.

    Returns (ok, value, grad) where value = sum_m w[m] log det(lam[B(m)] - I)
    and grad is d(value)/d(lam). ok is False when any state determinant is
    not strictly positive, in which case value/grad are meaningless.
    """
    p = lam.shape[0]
    val = 0.0
    grad = np.zeros((p, p))
    for k, masks, idx in _state_plan(p):
        if k == 0:
            continue
        subs = lam[idx[:, :, None], idx[:, None, :]] - np.eye(k)[None, :, :]
        sign, logdet = np.linalg.slogdet(subs)
        if np.any(sign <= 0):
            return False, -np.inf, grad
        wk = w[masks]
        val += float(wk @ logdet)
        inv_t = np.swapaxes(np.linalg.inv(subs), 1, 2)
        np.add.at(grad, (idx[:, :, None], idx[:, None, :]), wk[:, None, None] * inv_t)
    return True, val, grad
