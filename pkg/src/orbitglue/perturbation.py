"""Pseudo-trajectory generation and classification.

A pseudo-trajectory is a point sequence whose one-step defects ("gaps")
gamma_i = dist(T y_i, y_{i+1}) are controlled in one of three senses:
uniformly small (kind "U"), small on running average (kind "A"), or nonzero
only on a sparse index set with bounded amplitude (kind "R").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GAP_THRESHOLD,
    INTERVAL,
    PLANE,
    TORUS,
    TrajectoryWindow,
    diameter,
    pointwise_distance,
    space_dim,
    wrap01,
)

KINDS = ("U", "A", "R")


@dataclass(frozen=True)
class PerturbationSpec:
    """Recipe for one seeded pseudo-trajectory.

    epsilon is the accuracy parameter of the kind (gap bound for U, mean gap
    for A, perturbation density for R); cap_d bounds individual amplitudes
    for kinds A and R.  start pins the leftmost point of the window; None
    draws it from the RNG.
    """

    kind: str
    epsilon: float
    cap_d: float = 1.0
    neg_len: int = 0
    pos_len: int = 1000
    seed: int = 0
    start: tuple | float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.kind == "R" and self.epsilon > 1.0:
            raise ValueError("R-kind epsilon is a density and must be <= 1")
        if self.cap_d <= 0.0:
            raise ValueError("amplitude cap must be positive")
        if self.neg_len < 0 or self.pos_len < 1 or self.neg_len + self.pos_len < 2:
            raise ValueError("window must contain at least 2 points")

    def validate_for(self, space_tag: str) -> None:
        diam = diameter(space_tag)
        if self.kind in ("A", "R") and math.isfinite(diam) and self.cap_d > diam + 1e-12:
            raise ValueError(f"amplitude cap {self.cap_d} exceeds the space diameter {diam}")


@dataclass(frozen=True)
class PseudoTrajectory:
    """Points with derived gaps and the sorted perturbation-moment set.

    gaps[r] is the defect between window rows r and r+1; moments hold the
    window indices i (origin-relative, possibly negative) with
    gap > gap_threshold.  clamp_count records displacement clampings at the
    boundary of a bounded space during generation.
    """

    window: TrajectoryWindow
    gaps: np.ndarray
    moments: np.ndarray
    gap_threshold: float = GAP_THRESHOLD
    clamp_count: int = 0

    def __post_init__(self):
        gaps = np.asarray(self.gaps, dtype=float)
        moments = np.asarray(self.moments, dtype=int)
        if len(gaps) != len(self.window) - 1:
            raise ValueError("need exactly one gap per consecutive point pair")
        if np.any(np.diff(moments) <= 0):
            raise ValueError("moments must be strictly increasing")
        gaps.setflags(write=False)
        moments.setflags(write=False)
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "moments", moments)

    def gap(self, i: int) -> float:
        """Gap between window indices i and i+1."""
        return float(self.gaps[i + self.window.neg_len])


def compute_gaps(dyn_map, w: TrajectoryWindow, gap_threshold: float = GAP_THRESHOLD) -> PseudoTrajectory:
    if gap_threshold < 0.0:
        raise ValueError("gap_threshold must be nonnegative")
    images = np.asarray(dyn_map.forward_many(w.points[:-1]))
    gaps = pointwise_distance(w.space_tag, images, w.points[1:])
    moments = np.flatnonzero(gaps > gap_threshold) - w.neg_len
    return PseudoTrajectory(w, gaps, moments, gap_threshold)


def _default_start(space_tag: str, rng) -> np.ndarray:
    if space_tag == INTERVAL:
        return np.array([rng.random()])
    if space_tag == TORUS:
        return rng.random(2)
    return rng.normal(0.0, 1.0, 2)


def _displacements(spec: PerturbationSpec, dim: int, n: int, rng) -> np.ndarray:
    """Draw the n per-step displacement vectors for the spec's kind."""
    if spec.kind == "U":
        # Uniform in the epsilon-ball.
        amp = spec.epsilon * (rng.random(n) ** (1.0 / dim) if dim == 2 else rng.random(n))
    elif spec.kind == "A":
        # Half-normal amplitudes with mean epsilon/2, capped.
        sigma = 0.5 * spec.epsilon * math.sqrt(math.pi / 2.0)
        amp = np.minimum(np.abs(rng.normal(0.0, sigma, n)), spec.cap_d)
    else:
        # Perturb with probability epsilon; amplitude uniform in (0, cap_d].
        hit = rng.random(n) < spec.epsilon
        amp = np.where(hit, spec.cap_d * (1.0 - rng.random(n)), 0.0)
    if dim == 1:
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return (amp * sign)[:, None]
    angle = rng.uniform(0.0, 2.0 * math.pi, n)
    return amp[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])


def generate_pseudo(dyn_map, spec: PerturbationSpec, rng=None) -> PseudoTrajectory:
    """Generate one seeded pseudo-trajectory of the requested kind.

    Points are produced left to right across the index window
    [-neg_len, pos_len): apply the map, add the drawn displacement, then wrap
    (torus) or clamp (interval) back into the space.  On the interval a
    displacement whose drawn direction would leave [0, 1] is applied with the
    opposite sign instead when that fits, so the drawn amplitude survives;
    clamping (recorded in clamp_count) happens only when neither direction
    fits.  Identical spec and rng state reproduce the output bit for bit.
    """
    spec.validate_for(dyn_map.space_tag)
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    tag = dyn_map.space_tag
    dim = space_dim(tag)
    n = spec.neg_len + spec.pos_len

    if spec.start is None:
        cur = _default_start(tag, rng)
    else:
        cur = np.atleast_1d(np.asarray(spec.start, dtype=float))
    disp = _displacements(spec, dim, n - 1, rng) if spec.epsilon > 0 else np.zeros((n - 1, dim))

    pts = np.empty((n, dim))
    pts[0] = cur
    clamp_count = 0
    if dim == 1:
        x = float(cur[0])
        for i in range(n - 1):
            t = dyn_map.forward(x)
            d = disp[i, 0]
            # keep the drawn amplitude: flip toward the interior rather than
            # clamping onto a boundary fixed point (which would absorb the
            # orbit and silently drop later perturbation moments)
            if not (0.0 <= t + d <= 1.0) and 0.0 <= t - d <= 1.0:
                d = -d
            moved = t + d
            x = min(max(moved, 0.0), 1.0)
            if x != moved:
                clamp_count += 1
            pts[i + 1] = x
    else:
        x = cur
        for i in range(n - 1):
            x = dyn_map.forward(x) + disp[i]
            if tag == TORUS:
                x = wrap01(x)
            pts[i + 1] = x

    w = TrajectoryWindow(pts[:, 0] if dim == 1 else pts, spec.neg_len, tag)
    p = compute_gaps(dyn_map, w)
    return PseudoTrajectory(p.window, p.gaps, p.moments, p.gap_threshold, clamp_count)


def classify_uniform(p: PseudoTrajectory, epsilon: float) -> bool:
    """True iff every gap is <= epsilon (inclusive, 1e-12 slack)."""
    if len(p.gaps) == 0:
        return True
    return float(np.max(p.gaps)) <= epsilon + 1e-12


def _running_means(p: PseudoTrajectory):
    """Running gap means m_n, symmetric around index 0 when both sides exist."""
    w = p.window
    if w.neg_len == 0:
        n_max = w.pos_len - 2
        if n_max < 0:
            return np.array([]), 0
        csum = np.cumsum(p.gaps)
        ns = np.arange(n_max + 1)
        return csum[ns] / (ns + 1.0), 0
    n_max = min(w.neg_len, w.pos_len - 2)
    if n_max < 1:
        return np.array([]), 1
    csum = np.concatenate([[0.0], np.cumsum(p.gaps)])
    ns = np.arange(1, n_max + 1)
    # gap index i occupies row i + neg_len; symmetric block is i in [-n, n].
    lo = -ns + w.neg_len
    hi = ns + w.neg_len + 1
    return (csum[hi] - csum[lo]) / (2.0 * ns + 1.0), 1


def classify_average(p: PseudoTrajectory, epsilon: float, n_min: int = 1):
    """Smallest N >= n_min with all computable running means <= epsilon from N on.

    Returns (True, N) when such N <= window/2 exists, else (False, None).
    """
    if n_min < 1:
        raise ValueError("n_min must be >= 1")
    means, n0 = _running_means(p)
    if len(means) == 0:
        return False, None
    # suffix_max[j] = max of means[j:]; the first index where it drops under
    # epsilon is the smallest admissible N.
    suffix_max = np.maximum.accumulate(means[::-1])[::-1]
    ok = np.flatnonzero(suffix_max <= epsilon + 1e-12)
    start = max(n_min - n0, 0)
    ok = ok[ok >= start]
    if len(ok) == 0:
        return False, None
    n_first = int(ok[0]) + n0
    if n_first > len(p.window) // 2:
        return False, None
    return True, n_first


def upper_density(moments, window: TrajectoryWindow):
    """Running densities d_n of the moment set and their limsup estimate.

    Symmetric counts #(moments in [-n, n])/(2n+1) when the window has a
    backward part, one-sided counts otherwise; the estimate is the maximum
    over the final half of the computed sequence.
    """
    moments = np.sort(np.asarray(moments, dtype=int))
    if len(window) == 0:
        raise ValueError("window must be nonempty")
    if window.neg_len == 0:
        ns = np.arange(window.pos_len)
        counts = np.searchsorted(moments, ns, side="right") - np.searchsorted(moments, 0, side="left")
        dens = counts / (ns + 1.0)
    else:
        n_max = min(window.neg_len, window.pos_len - 1)
        ns = np.arange(n_max + 1)
        counts = np.searchsorted(moments, ns, side="right") - np.searchsorted(moments, -ns, side="left")
        dens = counts / (2.0 * ns + 1.0)
    tail = dens[len(dens) // 2 :]
    estimate = float(np.max(tail)) if len(tail) else 0.0
    return dens, estimate
