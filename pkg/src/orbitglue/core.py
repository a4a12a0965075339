"""Phase-space points, metrics, and finite trajectory windows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INTERVAL = "interval_01"
PLANE = "plane_r2"
TORUS = "torus_t2"

_SPACE_DIMS = {INTERVAL: 1, PLANE: 2, TORUS: 2}

# Default numerical tolerances used across the package.
ROOT_TOL = 1e-13
DEFECT_TOL = 1e-12
GAP_THRESHOLD = 1e-12

# The flat torus metric is the minimum over the 9 integer translates of the
# difference vector; for points in [0,1)^2 that covers every candidate.
_TORUS_SHIFTS = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)


def space_dim(space_tag: str) -> int:
    try:
        return _SPACE_DIMS[space_tag]
    except KeyError:
        raise ValueError(f"unknown space tag {space_tag!r}") from None


def diameter(space_tag: str) -> float:
    """Metric diameter of the phase space (inf for the plane)."""
    if space_tag == INTERVAL:
        return 1.0
    if space_tag == TORUS:
        return math.sqrt(0.5)
    if space_tag == PLANE:
        return math.inf
    raise ValueError(f"unknown space tag {space_tag!r}")


def wrap01(x):
    """Map values into [0, 1); guards the float artifact floor(-tiny) -> 1.0."""
    w = np.asarray(x, dtype=float) - np.floor(x)
    w = np.where(w >= 1.0, 0.0, w)
    if w.ndim == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class State:
    """A single validated phase-space point."""

    coords: tuple
    space_tag: str

    def __post_init__(self):
        dim = space_dim(self.space_tag)
        coords = tuple(float(v) for v in np.atleast_1d(self.coords))
        if len(coords) != dim:
            raise ValueError(f"{self.space_tag} needs {dim} coordinates, got {len(coords)}")
        if self.space_tag == INTERVAL and not (0.0 <= coords[0] <= 1.0):
            raise ValueError(f"interval point out of range: {coords[0]!r}")
        if self.space_tag == TORUS and not all(0.0 <= v < 1.0 for v in coords):
            raise ValueError(f"torus point out of [0,1)^2: {coords!r}")
        object.__setattr__(self, "coords", coords)

    @property
    def value(self):
        """Raw coordinate payload: a float in 1-D, an ndarray in 2-D."""
        if len(self.coords) == 1:
            return self.coords[0]
        return np.array(self.coords)


def _as_coords(space_tag: str, p) -> np.ndarray:
    if isinstance(p, State):
        if p.space_tag != space_tag:
            raise ValueError(f"space tag mismatch: {p.space_tag} vs {space_tag}")
        return np.asarray(p.coords, dtype=float)
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.shape != (space_dim(space_tag),):
        raise ValueError(f"expected {space_dim(space_tag)} coordinates, got shape {arr.shape}")
    return arr


def distance(space_tag: str, u, v) -> float:
    """Metric distance between two points of the tagged space."""
    a = _as_coords(space_tag, u)
    b = _as_coords(space_tag, v)
    if space_tag == TORUS:
        deltas = (a - b) + _TORUS_SHIFTS
        return float(np.min(np.hypot(deltas[:, 0], deltas[:, 1])))
    return float(np.linalg.norm(a - b))


def pointwise_distance(space_tag: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distances between two aligned point arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if space_tag == INTERVAL:
        return np.abs(a - b)
    d = a - b
    if space_tag == TORUS:
        cands = d[:, None, :] + _TORUS_SHIFTS[None, :, :]
        return np.min(np.hypot(cands[..., 0], cands[..., 1]), axis=1)
    return np.hypot(d[:, 0], d[:, 1])


def torus_nearest_lift(base: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Integer translate of `other` closest to `base` in the plane."""
    base = np.asarray(base, dtype=float)
    cands = np.asarray(other, dtype=float) + _TORUS_SHIFTS
    k = int(np.argmin(np.hypot(cands[:, 0] - base[0], cands[:, 1] - base[1])))
    return cands[k]


@dataclass(frozen=True)
class TrajectoryWindow:
    """A finite indexed orbit segment.

    Index i runs over [-neg_len, pos_len); the window origin is index 0 and
    points[i + neg_len] stores the point at index i.  Windows are immutable:
    the backing array is frozen at construction.
    """

    points: np.ndarray
    neg_len: int
    space_tag: str

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        dim = space_dim(self.space_tag)
        if dim == 1:
            pts = pts.reshape(-1)
        else:
            pts = pts.reshape(-1, dim)
        if not (0 <= self.neg_len <= len(pts)):
            raise ValueError(f"neg_len {self.neg_len} outside window of {len(pts)} points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def pos_len(self) -> int:
        return len(self.points) - self.neg_len

    @property
    def index_range(self) -> range:
        return range(-self.neg_len, self.pos_len)

    def value(self, i: int):
        """Raw point at window index i (float in 1-D, ndarray row in 2-D)."""
        if i not in self.index_range:
            raise IndexError(f"index {i} outside window [{-self.neg_len}, {self.pos_len})")
        row = self.points[i + self.neg_len]
        return float(row) if row.ndim == 0 else row

    def state(self, i: int) -> State:
        return State(np.atleast_1d(self.value(i)), self.space_tag)

    def shift(self, tau: int) -> "TrajectoryWindow":
        """Move the origin to the former index tau (same points, relabeled)."""
        if tau not in self.index_range:
            raise IndexError(f"shift target {tau} outside window [{-self.neg_len}, {self.pos_len})")
        return TrajectoryWindow(self.points, self.neg_len + tau, self.space_tag)


def verify_trajectory(dyn_map, w: TrajectoryWindow) -> float:
    """Maximum one-step defect max_i distance(T(w_i), w_{i+1}) over the window."""
    if len(w) < 2:
        raise ValueError("trajectory window needs at least 2 points")
    if getattr(dyn_map, "space_tag", w.space_tag) != w.space_tag:
        raise ValueError("map and window disagree on the space tag")
    images = dyn_map.forward_many(w.points[:-1])
    return float(np.max(pointwise_distance(w.space_tag, np.asarray(images), w.points[1:])))
