"""Shared utilities for the test suite."""

import numpy as np

from grassbin import from_sigma
from grassbin.oracle import oracle_table


def random_sigma(rng, p, spread=0.5):
    """A random parameter matrix with means inside (0, 1); validity not enforced."""
    sigma = rng.normal(0.0, spread / np.sqrt(p), (p, p))
    np.fill_diagonal(sigma, rng.uniform(0.15, 0.85, p))
    return sigma


def random_valid_sigma(rng, p, spread=0.5, atol=1e-12):
    """A random parameter matrix whose joint table is strictly nonnegative.

    Off-diagonals are halved until every state probability clears atol;
    independence (diagonal Sigma) is the guaranteed terminal point.
    """
    sigma = random_sigma(rng, p, spread)
    off = ~np.eye(p, dtype=bool)
    for _ in range(70):
        if abs(np.linalg.det(sigma)) > 1e-9 and oracle_table(sigma).min() > atol:
            return sigma
        sigma[off] *= 0.5
    raise AssertionError("could not build a valid random model")


def random_valid_model(rng, p, spread=0.5, check="auto"):
    return from_sigma(random_valid_sigma(rng, p, spread), check=check)
