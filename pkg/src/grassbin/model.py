"""The determinantal binary distribution and its closed-form queries.

A model over p binary variables is parameterized by a p x p matrix Sigma
whose diagonal holds the marginal means and whose off-diagonal products
-Sigma_ij * Sigma_ji are the covariances. With Lambda = Sigma^{-1}, the
probability of observing zeros exactly on the index set B is

    p(x) = det(Lambda[B,B] - I) / det(Lambda),

so every joint probability is a principal minor of Lambda - I normalized by
det Lambda. Marginals restrict Sigma to a principal submatrix; conditionals
are Schur complements of a recoded Sigma; positivity of the whole table is
equivalent to Lambda - I being a P0-matrix.

Queries on an invalid model return signed values; validity is tracked as a
model property and enforced only in strict construction mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from . import _kernels, linalg
from .errors import (
    DimensionMismatchError,
    DimensionTooLargeError,
    EmptyIndexSetError,
    IndexOutOfRangeError,
    InvalidModelError,
    MeanOutOfRangeError,
    ObservedIndexError,
    SameIndexError,
    SingularBlockError,
    SingularMatrixError,
    SingularSigmaError,
    ZeroEvidenceError,
)

#: Absolute tolerance for probability comparisons.
PROB_ATOL = 1e-10

#: Automatic validity checking runs only up to this dimension.
VALIDITY_AUTO_CAP = 12

#: Probabilities below this are treated as exactly zero in entropies.
ENTROPY_FLOOR = 1e-300

VALID = "valid"
INVALID = "invalid"
UNCHECKED = "unchecked"


@dataclass(frozen=True)
class Validity:
    """Outcome of the P0 positivity check on Lambda - I."""

    status: str
    witness: Optional[Tuple[int, ...]] = None

    def __bool__(self) -> bool:
        return self.status == VALID


@dataclass(frozen=True)
class Observation:
    """A partial assignment of variables to {0, 1}, keyed by 1-based index."""

    assignments: Mapping[int, int]

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.assignments).items():
            k = int(k)
            v = int(v)
            if k < 1:
                raise IndexOutOfRangeError(f"observation index {k} must be >= 1")
            if v not in (0, 1):
                raise IndexOutOfRangeError(f"observed value for x{k} must be 0 or 1, got {v}")
            clean[k] = v
        object.__setattr__(self, "assignments", clean)

    @property
    def ones(self) -> Tuple[int, ...]:
        return tuple(sorted(k for k, v in self.assignments.items() if v == 1))

    @property
    def zeros(self) -> Tuple[int, ...]:
        return tuple(sorted(k for k, v in self.assignments.items() if v == 0))

    @property
    def observed(self) -> Tuple[int, ...]:
        return tuple(sorted(self.assignments))

    def rest(self, p: int) -> Tuple[int, ...]:
        return tuple(i for i in range(1, p + 1) if i not in self.assignments)

    def validate(self, p: int) -> None:
        if self.assignments and max(self.assignments) > p:
            raise IndexOutOfRangeError(
                f"observation indexes variable {max(self.assignments)} but p = {p}")


def as_bits(x, p: int) -> np.ndarray:
    """Validate a length-p 0/1 vector."""
    b = np.asarray(x)
    if b.ndim != 1 or b.shape[0] != p:
        raise DimensionMismatchError(f"expected a 0/1 vector of length {p}")
    if not np.all((b == 0) | (b == 1)):
        raise DimensionMismatchError("state entries must be 0 or 1")
    return b.astype(np.uint8)


def _flip_transform(sigma: np.ndarray, flip0) -> np.ndarray:
    """Recode variables in flip0 (0-based): negate their columns, set
    diagonal to 1 - mean. Maps x_i to 1 - x_i for flipped variables."""
    out = np.array(sigma, copy=True)
    for j in flip0:
        out[:, j] = -out[:, j]
        out[j, j] = 1.0 + out[j, j]
    return out


class GrassmannBinary:
    """Immutable distribution object with cached inverse and determinant.

    Construct through :func:`from_sigma` or :func:`from_lambda`. All queries
    are pure; instances may be shared freely across threads.
    """

    def __init__(self, sigma: np.ndarray, lam: np.ndarray, det_lambda: float,
                 validity: Validity):
        self.sigma = sigma
        self.lam = lam
        self.det_lambda = det_lambda
        self.p = sigma.shape[0]
        self.validity = validity
        self.sigma.setflags(write=False)
        self.lam.setflags(write=False)
        self._table = None
        self._chain_tree = None

    @property
    def log_abs_det_lambda(self) -> float:
        return float(np.log(abs(self.det_lambda))) if self.p else 0.0

    def __repr__(self):
        return f"GrassmannBinary(p={self.p}, validity={self.validity.status!r})"

    # -- moments ---------------------------------------------------------

    def mean(self, i: int) -> float:
        """Marginal mean of variable i: the diagonal entry Sigma_ii."""
        (i,) = linalg.index_tuple([i], self.p)
        return float(self.sigma[i - 1, i - 1])

    def covariance(self, i: int, j: int) -> float:
        """Cov[x_i, x_j]: -Sigma_ij * Sigma_ji off the diagonal, mu(1-mu) on it."""
        (i,) = linalg.index_tuple([i], self.p)
        (j,) = linalg.index_tuple([j], self.p)
        if i == j:
            mu = self.sigma[i - 1, i - 1]
            return float(mu * (1.0 - mu))
        return float(-self.sigma[i - 1, j - 1] * self.sigma[j - 1, i - 1])

    def pearson(self, i: int, j: int) -> float:
        """Pearson correlation coefficient of variables i and j."""
        return self.covariance(i, j) / np.sqrt(self.covariance(i, i) * self.covariance(j, j))

    def central_moment(self, r) -> float:
        """E[prod_{i in r}(x_i - mu_i)] = det of Sigma[r,r] with zeroed diagonal."""
        idx = linalg.index_tuple(r, self.p)
        if not idx:
            raise EmptyIndexSetError("central_moment requires a nonempty index set")
        sub = self.sigma[np.ix_([i - 1 for i in idx], [i - 1 for i in idx])].copy()
        np.fill_diagonal(sub, 0.0)
        return _kernels.det(np.ascontiguousarray(sub))

    def fourth_central_moment(self, i: int, j: int) -> float:
        """E[(x_i - mu_i)^2 (x_j - mu_j)^2] for i != j."""
        (i,) = linalg.index_tuple([i], self.p)
        (j,) = linalg.index_tuple([j], self.p)
        if i == j:
            raise SameIndexError("fourth_central_moment requires two distinct indices")
        mi = self.sigma[i - 1, i - 1]
        mj = self.sigma[j - 1, j - 1]
        cov = -self.sigma[i - 1, j - 1] * self.sigma[j - 1, i - 1]
        return float((1 - 2 * mi) * (1 - 2 * mj) * cov + mi * (1 - mi) * mj * (1 - mj))

    # -- joint probabilities ---------------------------------------------

    def joint_prob(self, x) -> float:
        """Probability of the full realization x (may be negative if invalid)."""
        bits = as_bits(x, self.p)
        zeros = [i for i in range(self.p) if bits[i] == 0]
        if not zeros:
            return 1.0 / self.det_lambda
        sub = self.lam[np.ix_(zeros, zeros)] - np.eye(len(zeros))
        return _kernels.det(np.ascontiguousarray(sub)) / self.det_lambda

    def joint_table(self, max_p: Optional[int] = None) -> np.ndarray:
        """All 2^p state probabilities, indexed by state bitmask (read-only)."""
        if self._table is None:
            cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
            if self.p > cap:
                raise DimensionTooLargeError(
                    f"joint table of dimension {self.p} exceeds cap {cap}")
            table = _kernels.joint_table(self.lam, self.det_lambda)
            table.setflags(write=False)
            self._table = table
        return self._table

    def entropy(self, max_p: Optional[int] = None) -> float:
        """Shannon entropy of the joint table in nats, with 0 log 0 = 0."""
        table = self.joint_table(max_p)
        if table.min() < -PROB_ATOL:
            raise InvalidModelError(message="entropy of an invalid model "
                                            f"(min probability {table.min():.3e})")
        probs = table[table > ENTROPY_FLOOR]
        return float(-(probs * np.log(probs)).sum())

    # -- derived models ---------------------------------------------------

    def marginal(self, keep) -> "GrassmannBinary":
        """Marginal distribution of the variables in keep: Sigma restricted."""
        idx = linalg.index_tuple(keep, self.p)
        if not idx:
            raise EmptyIndexSetError("marginal requires a nonempty index set")
        sub = self.sigma[np.ix_([i - 1 for i in idx], [i - 1 for i in idx])]
        return from_sigma(sub, check="none" if self.validity.status == UNCHECKED else "auto")

    def flip_coding(self, flip) -> "GrassmannBinary":
        """Model of the recoded variables (x_i -> 1 - x_i for i in flip).

        Joint probabilities are a bit-inverted permutation of the original
        table, so the validity status carries over (the witness does not).
        """
        idx = linalg.index_tuple(flip, self.p)
        st = _flip_transform(self.sigma, [i - 1 for i in idx])
        out = from_sigma(st, check="none")
        out.validity = Validity(self.validity.status, None)
        return out

    def conditional(self, obs: Observation):
        """Condition on a partial observation.

        Returns (model over the unobserved variables, evidence probability).
        The conditional parameter matrix is the Schur complement of the
        recoded Sigma with respect to its observed block; the evidence is
        the marginal probability of the observation. When everything is
        observed the model has dimension 0 and the evidence is the joint
        probability.
        """
        if isinstance(obs, Mapping):
            obs = Observation(obs)
        obs.validate(self.p)
        c0 = [i - 1 for i in obs.observed]
        r0 = [i - 1 for i in obs.rest(self.p)]
        b0 = [i - 1 for i in obs.zeros]
        if not c0:
            return self, 1.0
        st = _flip_transform(self.sigma, b0)
        stcc = st[np.ix_(c0, c0)]
        evidence = _kernels.det(np.ascontiguousarray(stcc))
        if abs(evidence) <= PROB_ATOL:
            raise ZeroEvidenceError(
                f"observation has probability {evidence:.3e} within tolerance")
        if not r0:
            return from_sigma(np.empty((0, 0)), check="none"), evidence
        try:
            solved = np.linalg.solve(stcc, st[np.ix_(c0, r0)])
        except np.linalg.LinAlgError as exc:
            raise SingularBlockError(str(exc)) from exc
        schur = st[np.ix_(r0, r0)] - st[np.ix_(r0, c0)] @ solved
        return from_sigma(schur, check="auto"), evidence

    def partial_correlation(self, i: int, j: int, obs: Observation) -> float:
        """Correlation of x_i, x_j conditioned on obs plus every other
        unobserved variable set to 1.

        Evaluated from the 2x2 block of the inverse of the recoded Sigma:
        with L = inv(recode(Sigma, zeros(obs))) restricted to {i, j} and
        D = det(L), the value is -L_ij L_ji / sqrt(L_jj (D - L_jj) L_ii (D - L_ii)).
        """
        if isinstance(obs, Mapping):
            obs = Observation(obs)
        obs.validate(self.p)
        (i,) = linalg.index_tuple([i], self.p)
        (j,) = linalg.index_tuple([j], self.p)
        if i == j:
            raise SameIndexError("partial_correlation requires two distinct indices")
        if i in obs.assignments or j in obs.assignments:
            raise ObservedIndexError(f"variables {i}, {j} must be unobserved")
        st = _flip_transform(self.sigma, [k - 1 for k in obs.zeros])
        try:
            lt = linalg.inverse(st)
        except SingularMatrixError as exc:
            raise SingularSigmaError(str(exc)) from exc
        a = lt[i - 1, i - 1]
        d = lt[j - 1, j - 1]
        bc = lt[i - 1, j - 1] * lt[j - 1, i - 1]
        det2 = a * d - bc
        return float(-bc / np.sqrt(d * (det2 - d) * a * (det2 - a)))


def _build(sigma: np.ndarray, check: str, max_p: Optional[int]) -> GrassmannBinary:
    p = sigma.shape[0]
    for i in range(p):
        mu = sigma[i, i]
        if not 0.0 < mu < 1.0:
            raise MeanOutOfRangeError(i + 1, float(mu))
    try:
        lam = linalg.inverse(sigma)
    except SingularMatrixError as exc:
        raise SingularSigmaError(str(exc)) from exc
    det_lam = 1.0 / _kernels.det(sigma) if p else 1.0

    validity = Validity(UNCHECKED)
    cap = linalg.DEFAULT_ENUMERATION_CAP if max_p is None else max_p
    run_check = (check == "strict" or check == "force"
                 or (check == "auto" and p <= VALIDITY_AUTO_CAP))
    if p == 0:
        validity = Validity(VALID)
    elif run_check:
        if p > cap:
            raise DimensionTooLargeError(
                f"validity check of dimension {p} exceeds cap {cap}")
        ok, witness = linalg.is_p0_matrix(lam - np.eye(p), tol=PROB_ATOL, max_p=cap)
        # P0 alone is not enough: det Lambda must also be positive, else the
        # whole table is sign-flipped.
        if ok and det_lam <= 0:
            ok, witness = False, tuple(range(1, p + 1))
        validity = Validity(VALID if ok else INVALID, witness)
        if check == "strict" and not ok:
            raise InvalidModelError(witness)
    return GrassmannBinary(sigma, lam, det_lam, validity)


def from_sigma(sigma, check: str = "auto", max_p: Optional[int] = None) -> GrassmannBinary:
    """Build a model from its parameter matrix Sigma.

    check: "none" records nothing, "auto" runs the exhaustive P0 validity
    check when p <= VALIDITY_AUTO_CAP, "force" always runs it, and "strict"
    additionally raises InvalidModelError on failure.
    """
    if check not in ("none", "auto", "force", "strict"):
        raise ValueError(f"unknown check mode {check!r}")
    return _build(linalg.as_square_matrix(sigma).copy(), check, max_p)


def from_lambda(lam, check: str = "auto", max_p: Optional[int] = None) -> GrassmannBinary:
    """Build a model from the inverse parameter matrix Lambda = Sigma^{-1}."""
    a = linalg.as_square_matrix(lam)
    try:
        sigma = linalg.inverse(a)
    except SingularMatrixError as exc:
        raise SingularSigmaError(str(exc)) from exc
    return from_sigma(sigma, check=check, max_p=max_p)
