"""State-index conventions shared across the package.

A realization of p binary variables maps to the bitmask sum_i x_i * 2**(i-1):
variable 1 is the least significant bit. Joint tables, dataset counts, and
CLI output all use this encoding.
"""

from __future__ import annotations

import numpy as np


def state_mask(bits) -> int:
    """Bitmask of a 0/1 realization, variable 1 in the lowest bit."""
    mask = 0
    for i, b in enumerate(bits):
        if b:
            mask |= 1 << i
    return mask


def mask_bits(mask: int, p: int) -> np.ndarray:
    """0/1 vector of length p for a state bitmask."""
    return (mask >> np.arange(p)) & 1


def all_state_bits(p: int) -> np.ndarray:
    """(2^p, p) array whose row m is mask_bits(m, p)."""
    masks = np.arange(2 ** p)
    return (masks[:, None] >> np.arange(p)[None, :]) & 1


def zero_set(mask: int, p: int):
    """0-based indices of variables equal to 0 in the state."""
    return tuple(i for i in range(p) if not (mask >> i) & 1)
