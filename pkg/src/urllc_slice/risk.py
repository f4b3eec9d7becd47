"""Tail-risk measures over sampled rates.

The threshold measure (``var_alpha``) is the smallest value exceeded with
probability at most alpha; the tail measure (``cvar_alpha``) is the mean of
the samples beyond it. Both act on the empirical measure of a sample set.
``phi_alpha`` is the deterministic hinge surrogate used by the placement
solver in place of the sampled tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EmpiricalDistribution:
    """Immutable sorted snapshot of nonnegative rate samples."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if arr.size == 0:
            raise ValueError("empty sample set")
        self.samples = arr

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def range(self) -> float:
        return float(self.samples[-1] - self.samples[0])


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def var_alpha(dist: EmpiricalDistribution, alpha: float) -> float:
    """Smallest sample value gamma with P(sample > gamma) <= alpha.

    Ties resolve toward the smaller gamma (the infimum).
    """
    _check_level(alpha)
    s = dist.samples
    n = s.size
    # fraction strictly above each sorted value; nonincreasing along the sort
    exceed = (n - np.searchsorted(s, s, side="right")) / n
    return float(s[np.argmax(exceed <= alpha)])


def cvar_alpha(dist: EmpiricalDistribution, alpha: float) -> float:
    """Mean of the samples strictly above the alpha threshold; degenerates to
    the threshold itself when nothing exceeds it (point-mass tail)."""
    threshold = var_alpha(dist, alpha)
    tail = dist.samples[dist.samples > threshold]
    if tail.size == 0:
        return threshold
    return float(tail.mean())


def cvar_alpha_lower(dist: EmpiricalDistribution, alpha: float) -> float:
    """Mean of the worst (lowest) alpha-tail; the mirror image of
    ``cvar_alpha``, reported alongside it so both tails are visible."""
    return -cvar_alpha(EmpiricalDistribution(-dist.samples), alpha)


def phi_alpha(expected_rate: float, gamma: float, alpha: float) -> float:
    """Hinge surrogate: gamma + max(0, E[R] - gamma) / (1 - alpha).

    Piecewise linear in gamma with its minimum (value E[R]) at gamma = E[R].
    """
    _check_level(alpha)
    return gamma + max(0.0, expected_rate - gamma) / (1.0 - alpha)


def tail_objective(dist: EmpiricalDistribution, gamma: float, tail_fraction: float) -> float:
    """Sampled threshold-plus-scaled-excess objective,
    gamma + mean((sample - gamma)^+) / tail_fraction.

    Minimizing over gamma recovers the mean of the upper ``tail_fraction``
    tail, which is how ``cvar_alpha`` is cross-checked.
    """
    _check_level(tail_fraction)
    excess = np.maximum(dist.samples - gamma, 0.0)
    return float(gamma + excess.mean() / tail_fraction)
