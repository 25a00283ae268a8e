"""Target curves on the work surface and the offset base path.

Curves live on a vertical plane of constant y; the profile varies in z as a
function of the running parameter s, with x = s.  The base path shadows the
curve at a fixed standoff along -y with constant arc-length speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CURVE_KINDS = ("straight", "single_curve", "nonuniform_wave", "sinusoid_composite")

# second-tone frequency ratio for the nonuniform wave (incommensurate with 1)
WAVE_RATIO = 2.718


@dataclass(frozen=True)
class CurveSpec:
    kind: str
    amplitude: float = 0.0
    frequency: float = 1.0
    length: float = 2.0
    sample_count: int = 400
    wall_y: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.length <= 0:
            raise ValueError("curve length must be positive")
        if self.sample_count < 2:
            raise ValueError("need at least two curve samples")


@dataclass(frozen=True)
class Curve:
    points: np.ndarray  # (n, 3)
    params: np.ndarray  # (n,) running parameter s
    xs: np.ndarray  # contiguous per-axis copies for the nearest-point scan
    ys: np.ndarray
    zs: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.params[1] - self.params[0])


def _profile(spec: CurveSpec, s: np.ndarray) -> np.ndarray:
    a = spec.amplitude
    if spec.kind == "straight":
        return np.zeros_like(s)
    if spec.kind == "single_curve":
        return a * np.sin(math.pi * s / spec.length)
    if spec.kind == "nonuniform_wave":
        f = spec.frequency
        return 0.5 * a * (np.sin(2 * math.pi * f * s) + np.sin(2 * math.pi * WAVE_RATIO * f * s))
    return a * np.sin(2 * math.pi * spec.frequency * s)


def generate_curve(spec: CurveSpec) -> Curve:
    s = np.linspace(0.0, spec.length, spec.sample_count)
    z = _profile(spec, s)
    y = np.full_like(s, spec.wall_y)
    pts = np.column_stack([s, y, z])
    return Curve(points=pts, params=s, xs=s.copy(), ys=y, zs=z)


def generate_base_path(curve: Curve, standoff: float, horizon: int,
                       max_reach: float) -> np.ndarray:
    """Base positions for steps 0..horizon at constant arc-length speed.

    Each base point is the curve point at arc-length fraction t/horizon,
    pushed back by ``standoff`` along -y.  Rejects configurations whose
    base-to-target distance exceeds 90% of the arm reach.
    """
    if standoff <= 0:
        raise ValueError("standoff must be positive")
    pts = curve.points
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    targets = np.linspace(0.0, total, horizon + 1)
    idx = np.searchsorted(arc, targets, side="right") - 1
    idx = np.clip(idx, 0, len(pts) - 2)
    seg_len = np.where(seg[idx] > 0, seg[idx], 1.0)
    frac = (targets - arc[idx]) / seg_len
    on_curve = pts[idx] + frac[:, None] * (pts[idx + 1] - pts[idx])
    base = on_curve - np.array([0.0, standoff, 0.0])
    dist = np.linalg.norm(on_curve - base, axis=1).max()
    if dist > 0.9 * max_reach:
        raise ValueError(
            f"standoff {standoff:g} puts the curve beyond 90% of arm reach {max_reach:g}"
        )
    return base


def _nearest_scalar(px: float, py: float, pz: float, curve: Curve):
    """Core nearest-point scan: returns (s_star, x, y, z) as floats.

    Sample argmin (ties toward smaller s) plus a parabolic refinement of
    the squared distances at the winner and its neighbors, interpolated
    linearly along the polyline.  The refined candidate is kept only when
    it really is closer than the winning sample, so probes sitting exactly
    on a sample stay put.
    """
    dx = curve.xs - px
    dy = curve.ys - py
    dz = curve.zs - pz
    d2 = dx * dx
    d2 += dy * dy
    d2 += dz * dz
    i = int(np.argmin(d2))
    n = len(d2)
    if 0 < i < n - 1:
        lo = d2[i - 1]
        mid = d2[i]
        hi = d2[i + 1]
        denom = lo - 2.0 * mid + hi
        if abs(denom) > 1e-18:
            delta = min(max(0.5 * (lo - hi) / denom, -1.0), 1.0)
            j = i + 1 if delta >= 0.0 else i - 1
            w = abs(delta)
            xs, ys, zs = curve.xs, curve.ys, curve.zs
            x = (1.0 - w) * xs[i] + w * xs[j]
            y = (1.0 - w) * ys[i] + w * ys[j]
            z = (1.0 - w) * zs[i] + w * zs[j]
            if (x - px) ** 2 + (y - py) ** 2 + (z - pz) ** 2 < mid:
                return float(curve.params[i]) + delta * curve.spacing, float(x), float(y), float(z)
    return float(curve.params[i]), float(curve.xs[i]), float(curve.ys[i]), float(curve.zs[i])


def nearest_point(p, curve: Curve) -> tuple[float, np.ndarray]:
    """Closest curve point to p, refined between samples."""
    s_star, x, y, z = _nearest_scalar(float(p[0]), float(p[1]), float(p[2]), curve)
    return s_star, np.array([x, y, z])


def tracking_error(p, curve: Curve) -> float:
    """Euclidean distance from p to the nearest curve point."""
    px = float(p[0])
    py = float(p[1])
    pz = float(p[2])
    _, x, y, z = _nearest_scalar(px, py, pz, curve)
    return math.sqrt((px - x) ** 2 + (py - y) ** 2 + (pz - z) ** 2)


def normalize_error(e: float, e_max: float) -> float:
    """Saturating normalization into [0, 1]."""
    if e < 0 or e_max <= 0:
        raise ValueError("need e >= 0 and e_max > 0")
    return min(e / e_max, 1.0)
