"""Confidence intervals for Monte Carlo summaries.

95% intervals throughout (z = 1.96). Proportions use the normal
approximation away from the boundary and fall back to the Wilson score
interval when successes or failures are scarce, since the experiments here
routinely sit near p = 0 or p = 1 where the normal interval degenerates.
"""

from __future__ import annotations

import math

Z95 = 1.96


def mean_ci95(values) -> tuple[float, float]:
    """Sample mean and normal-approximation half width."""
    n = len(values)
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, Z95 * math.sqrt(var / n)


def proportion_ci95(successes: int, trials: int) -> tuple[float, float, float]:
    """(p_hat, ci_low, ci_high) for a binomial proportion."""
    if trials <= 0:
        raise ValueError("no trials")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    p = successes / trials
    if min(successes, trials - successes) >= 5:
        half = Z95 * math.sqrt(p * (1.0 - p) / trials)
        return p, max(0.0, p - half), min(1.0, p + half)
    # Wilson score interval.
    z2 = Z95 * Z95
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (Z95 / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return p, max(0.0, center - half), min(1.0, center + half)
