"""Dense linear-algebra primitives for small square matrices (p <= ~20).

Determinants, inverses, Schur complements, principal submatrices,
principal-minor sums, and P0-matrix tests. Index sets are 1-based on the
public surface, matching the variable labels used everywhere else.

All functions are pure; inputs are never modified.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatchError,
    DimensionTooLargeError,
    IndexOutOfRangeError,
    SingularBlockError,
    SingularMatrixError,
)

#: Default cap on dimensions requiring a 2^p enumeration (~1M subsets at 20).
DEFAULT_ENUMERATION_CAP = 20

#: A pivot below this fraction of the max-abs entry counts as singular.
SINGULARITY_RTOL = 1e-12

#: Default absolute tolerance on principal minors in the P0 test.
P0_ATOL = 1e-10


def as_square_matrix(m) -> np.ndarray:
    """Validate and convert to a C-contiguous float64 square matrix."""
    a = np.ascontiguousarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise DimensionMismatchError("matrix entries must be finite")
    return a


def index_tuple(s, p: int) -> Tuple[int, ...]:
    """Normalize an iterable of 1-based indices into a sorted tuple.

    Raises IndexOutOfRangeError on duplicates or entries outside 1..p.
    """
    idx = sorted(int(i) for i in s)
    if any(i < 1 or i > p for i in idx):
        raise IndexOutOfRangeError(f"indices must lie in 1..{p}, got {idx}")
    if len(set(idx)) != len(idx):
        raise IndexOutOfRangeError(f"duplicate indices in {idx}")
    return tuple(idx)


def complement(s, p: int) -> Tuple[int, ...]:
    """Indices of 1..p not contained in s."""
    inside = set(index_tuple(s, p))
    return tuple(i for i in range(1, p + 1) if i not in inside)


def _check_cap(p: int, max_p: Optional[int]) -> None:
    cap = DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    if p > cap:
        raise DimensionTooLargeError(
            f"dimension {p} exceeds the enumeration cap {cap} (2^p subsets)")


def determinant(m) -> float:
    """det(m) by LU with partial pivoting; det of the 0x0 matrix is 1."""
    return _kernels.det(as_square_matrix(m))


def inverse(m) -> np.ndarray:
    """Matrix inverse; the 0x0 matrix inverts to itself.

    Raises SingularMatrixError when an LU pivot falls below
    SINGULARITY_RTOL times the max-abs entry.
    """
    a = as_square_matrix(m)
    if a.shape[0] == 0:
        return a.copy()
    _, minpiv = _kernels.det_minpivot(a)
    scale = float(np.abs(a).max())
    if minpiv < SINGULARITY_RTOL * max(scale, 1e-300):
        raise SingularMatrixError(
            f"matrix is singular to working precision (min pivot {minpiv:.3e})")
    return np.linalg.inv(a)


def principal_submatrix(m, s) -> np.ndarray:
    """Rows and columns of m restricted to the 1-based index set s."""
    a = as_square_matrix(m)
    idx = np.array(index_tuple(s, a.shape[0]), dtype=np.intp) - 1
    return a[np.ix_(idx, idx)].copy() if idx.size else np.empty((0, 0))


def schur_complement(m, keep, eliminate) -> np.ndarray:
    """m[keep] - m[keep,elim] @ inv(m[elim]) @ m[elim,keep].

    keep and eliminate must be disjoint 1-based index sets; raises
    SingularBlockError when m[eliminate] is singular.
    """
    a = as_square_matrix(m)
    p = a.shape[0]
    kt = index_tuple(keep, p)
    et = index_tuple(eliminate, p)
    if set(kt) & set(et):
        raise IndexOutOfRangeError(f"keep and eliminate overlap: {set(kt) & set(et)}")
    ki = np.array(kt, dtype=np.intp) - 1
    ei = np.array(et, dtype=np.intp) - 1
    if ki.size == 0:
        return np.empty((0, 0))
    if ei.size == 0:
        return a[np.ix_(ki, ki)].copy()
    try:
        block_inv = inverse(a[np.ix_(ei, ei)])
    except SingularMatrixError as exc:
        raise SingularBlockError(str(exc)) from exc
    return a[np.ix_(ki, ki)] - a[np.ix_(ki, ei)] @ block_inv @ a[np.ix_(ei, ki)]


def sum_principal_minors(m, max_p: Optional[int] = None) -> float:
    """Sum of det(m[S,S]) over all subsets S of 1..p, including the empty minor 1."""
    a = as_square_matrix(m)
    _check_cap(a.shape[0], max_p)
    return _kernels.sum_principal_minors(a)


class P0Result(NamedTuple):
    is_p0: bool
    witness: Optional[Tuple[int, ...]]


def is_p0_matrix(m, tol: float = P0_ATOL, max_p: Optional[int] = None) -> P0Result:
    """Test whether every principal minor of m is >= -tol.

    Subsets are enumerated by increasing cardinality, lexicographic within
    each cardinality; on failure the first violating subset in that order is
    returned as a 1-based tuple.
    """
    a = as_square_matrix(m)
    _check_cap(a.shape[0], max_p)
    mask = _kernels.p0_witness(a, tol)
    if mask < 0:
        return P0Result(True, None)
    witness = tuple(i + 1 for i in range(a.shape[0]) if (mask >> i) & 1)
    return P0Result(False, witness)
