"""Seed derivation, binomial intervals and log-log fits."""
from __future__ import annotations

import math

import numpy as np

Z95 = 1.959963984540054


def derive_seed(root: int, *key: int) -> int:
    """Counter-based child seed: independent streams keyed by ``(root, *key)``."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(root: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *key))


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    ph = successes / trials
    denom = 1.0 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def trials_for_half_width(width: float, z: float = Z95) -> int:
    """Smallest n whose Wilson half-width is at most ``width`` for every outcome.

    The Wilson half-width peaks at an observed rate of 1/2, where it equals
    ``z / (2 sqrt(n + z^2))``, strictly below ``z / (2 sqrt(n))``.
    """
    return max(1, math.ceil((z / (2 * width)) ** 2 - z * z))


def ratio_of_means_ci(ones: np.ndarray, horizon_len: int, z: float = Z95) -> tuple[float, float, float]:
    """``mean(c1) / mean(c0)`` with ``c0 = horizon_len - c1`` and a delta-method interval."""
    ones = np.asarray(ones, dtype=float)
    mu = float(ones.mean())
    rest = horizon_len - mu
    if rest <= 0:
        return math.inf, math.inf, math.inf
    ratio = mu / rest
    sd = float(ones.std(ddof=1)) if ones.size > 1 else 0.0
    se = horizon_len / rest ** 2 * sd / math.sqrt(ones.size)
    return ratio, ratio - z * se, ratio + z * se


def loglog_fit(xs, ys) -> dict:
    """Least-squares line through ``(log2 x, log2 y)``: slope, intercept, R^2."""
    lx = np.log2(np.asarray(xs, dtype=float))
    ly = np.log2(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(((ly - pred) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r_squared": r2}
