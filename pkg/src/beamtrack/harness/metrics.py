"""Pure metric operations used by the experiment reports."""

from __future__ import annotations

import math

import numpy as np

CONVERGENCE_NOT_REACHED = -1


def smooth(series, window: int = 50) -> np.ndarray:
    """Trailing moving average; the short prefix averages what is available."""
    if window < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(series, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    out = np.empty_like(x)
    for i in range(len(x)):
        lo = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def rolling_std(series, window: int = 50) -> np.ndarray:
    """Trailing sample standard deviation (0 where fewer than two points)."""
    if window < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(series, dtype=float)
    out = np.zeros_like(x)
    for i in range(len(x)):
        lo = max(0, i - window + 1)
        seg = x[lo : i + 1]
        if len(seg) > 1:
            out[i] = seg.std(ddof=1)
    return out


def tracking_efficiency(mean_error: float, e_max: float = 1.0) -> float:
    """Percentage of the saturation radius kept clear of, on average."""
    if mean_error < 0:
        raise ValueError("mean error must be nonnegative")
    return 100.0 * (1.0 - min(mean_error / e_max, 1.0))


def combined_gain(reward: float, reward_base: float, error: float, error_base: float) -> float:
    """Average of reward gain and error reduction versus a baseline, in %."""
    if reward_base <= 0 or error_base <= 0:
        raise ValueError("baselines must be positive")
    reward_gain = 100.0 * (reward - reward_base) / reward_base
    error_reduction = 100.0 * (error_base - error) / error_base
    return 0.5 * (reward_gain + error_reduction)


def convergence_episode(rewards, fraction: float, window: int = 50, tail: int = 100) -> int:
    """First episode where the smoothed series reaches fraction * final value.

    The final value is the mean of the last ``tail`` episodes of the
    smoothed series.  Returns CONVERGENCE_NOT_REACHED if never attained.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    sm = smooth(rewards, window)
    final = sm[-tail:].mean()
    threshold = fraction * final
    hits = np.nonzero(sm >= threshold)[0]
    return int(hits[0]) if len(hits) else CONVERGENCE_NOT_REACHED


def pearson(x, y) -> float:
    """Sample Pearson correlation; degenerate inputs are an error."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if len(xv) != len(yv) or len(xv) < 2:
        raise ValueError("need equal-length series with at least two points")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    denom = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    if denom == 0.0:
        raise ValueError("zero variance makes the correlation undefined")
    return float(xc @ yc) / denom
