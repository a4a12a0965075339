"""Concrete piecewise-bijective dynamical systems on the interval, plane, and torus.

Every map exposes the same small surface: `space_tag`, `branch_count`,
`forward`, `forward_many`, `branch_index`, `branch_inverse`, and
`inverse_branch`.  Branch inverses are partial functions; calling one with a
point outside the closed image of its branch raises BranchDomainError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import INTERVAL, PLANE, TORUS, ROOT_TOL, TrajectoryWindow, wrap01


class BranchDomainError(ValueError):
    """Requested preimage through a branch whose image misses the point."""


class RootFindError(RuntimeError):
    """Scalar root solve failed to certify the requested accuracy."""


_IM_TOL = 1e-12  # closure slack when testing membership in a branch image


def _tau_inverse(R: float, alpha: float, v: float, upper: float) -> float:
    """Solve x + R*x**(1+alpha) = v for x in (0, upper].

    Safeguarded Newton on the convex increasing f(x) = x + R*x**(1+alpha) - v,
    started from the tangent-line bound so iterates descend monotonically onto
    the root.  Certifies |f| <= ROOT_TOL before returning.
    """
    if v <= 0.0:
        return 0.0
    lo, hi = 0.0, min(upper, v)
    # Tangent bound at v: f(v) / f'(v) step lands at or above the root.
    x = v * (1.0 - R * v**alpha / (1.0 + (1.0 + alpha) * R * v**alpha))
    x = min(max(x, lo), hi)
    for _ in range(80):
        fx = x + R * x ** (1.0 + alpha) - v
        if fx > 0.0:
            hi = x
        else:
            lo = x
        if abs(fx) <= ROOT_TOL:
            return x
        step = fx / (1.0 + (1.0 + alpha) * R * x**alpha)
        nxt = x - step
        if not (lo < nxt < hi if hi > lo else lo <= nxt <= hi):
            nxt = 0.5 * (lo + hi)  # bisect when Newton leaves the bracket
        if nxt == x:
            break
        x = nxt
    if abs(x + R * x ** (1.0 + alpha) - v) <= 1e3 * ROOT_TOL:
        return x
    raise RootFindError(f"inverse solve stalled at x={x!r} for v={v!r} (R={R}, alpha={alpha})")


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Two increasing linear branches on [0,1]: a*x below the cut, b*x + 1 - b above.

    Covers the full-branch expanding family (both branch images are all of
    [0,1] exactly when a*c = 1 and b*(1-c) = 1) as well as deliberately broken
    variants used to probe where gluing fails.
    """

    a: float
    b: float
    c: float
    space_tag: str = field(default=INTERVAL, init=False)
    branch_count: int = field(default=2, init=False)

    def __post_init__(self):
        if not (0.0 < self.c < 1.0):
            raise ValueError(f"cut point must lie in (0,1), got {self.c}")
        if self.a <= 0.0 or self.b <= 0.0:
            raise ValueError("branch slopes must be positive")
        object.__setattr__(self, "_left_top", float(np.nextafter(self.c, 0.0)))

    @property
    def full_branch(self) -> bool:
        return abs(self.a * self.c - 1.0) <= 1e-12 and abs(self.b * (1.0 - self.c) - 1.0) <= 1e-12

    def forward(self, x: float) -> float:
        if x < self.c:
            return min(self.a * x, 1.0)
        return min(self.b * x + 1.0 - self.b, 1.0)

    def forward_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return np.minimum(np.where(xs < self.c, self.a * xs, self.b * xs + 1.0 - self.b), 1.0)

    def branch_index(self, x: float) -> int:
        """0 for the left branch, 1 for the right; the cut itself is right."""
        return 0 if x < self.c else 1

    def branch_inverse(self, idx: int, y: float) -> float:
        if idx == 0:
            x = y / self.a
            if x > self.c + _IM_TOL / self.a:
                raise BranchDomainError(f"{y!r} is outside the left-branch image [0, {self.a * self.c}]")
            return min(x, self._left_top)
        if idx == 1:
            x = (y - 1.0 + self.b) / self.b
            if x < self.c - _IM_TOL / self.b or x > 1.0 + _IM_TOL / self.b:
                raise BranchDomainError(f"{y!r} is outside the right-branch image [{self.forward(self.c)}, 1]")
            return min(max(x, self.c), 1.0)
        raise ValueError(f"branch index must be 0 or 1, got {idx}")

    def inverse_branch(self, via_point: float, y: float) -> float:
        """Preimage of y through the branch that contains via_point."""
        return self.branch_inverse(self.branch_index(via_point), y)


def _branch_sequence(spec, n: int):
    """Normalize a backward branch spec into n branch indices (innermost first)."""
    names = {"left": 0, "right": 1, 0: 0, 1: 1}
    if isinstance(spec, (str, int)):
        return [names[spec]] * n
    seq = [names[s] for s in spec]
    if len(seq) != n:
        raise ValueError(f"need {n} branch choices, got {len(seq)}")
    return seq


@dataclass(frozen=True)
class NeutralMap:
    """Interval map with an indifferent fixed point at 0.

    Left branch T(x) = x + R*x**(1+alpha) with R = (1-c)/c**(1+alpha) so the
    branch carries [0,c] onto [0,1]; the right branch is the left one
    conjugated by the affine flip of [c,1] onto [0,1], hence T(c+) = 0 and the
    map is discontinuous at the cut.  alpha = 0 degenerates to slopes 1/c.
    """

    alpha: float
    c: float
    space_tag: str = field(default=INTERVAL, init=False)
    branch_count: int = field(default=2, init=False)
    R: float = field(init=False)

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not (0.0 < self.c < 1.0):
            raise ValueError(f"cut point must lie in (0,1), got {self.c}")
        object.__setattr__(self, "R", (1.0 - self.c) / self.c ** (1.0 + self.alpha))
        object.__setattr__(self, "_right_bottom", float(np.nextafter(self.c, 1.0)))

    def _left(self, x):
        return x + self.R * x ** (1.0 + self.alpha)

    def forward(self, x: float) -> float:
        if x <= self.c:
            return min(self._left(x), 1.0)
        s = self.c * (1.0 - x) / (1.0 - self.c)  # flip [c,1] onto [0,c], reversed
        return max(1.0 - self._left(s), 0.0)

    def forward_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        s = self.c * (1.0 - xs) / (1.0 - self.c)
        return np.where(
            xs <= self.c,
            np.minimum(self._left(xs), 1.0),
            np.maximum(1.0 - self._left(s), 0.0),
        )

    def branch_index(self, x: float) -> int:
        """0 for the left branch, 1 for the right; the cut itself is left."""
        return 0 if x <= self.c else 1

    def branch_inverse(self, idx: int, y: float) -> float:
        if not (-_IM_TOL <= y <= 1.0 + _IM_TOL):
            raise BranchDomainError(f"{y!r} is outside the branch image [0, 1]")
        y = min(max(y, 0.0), 1.0)
        if idx == 0:
            return min(_tau_inverse(self.R, self.alpha, y, self.c), self.c)
        if idx == 1:
            w = _tau_inverse(self.R, self.alpha, 1.0 - y, self.c)
            x = 1.0 - w * (1.0 - self.c) / self.c
            return min(max(x, self._right_bottom), 1.0)
        raise ValueError(f"branch index must be 0 or 1, got {idx}")

    def inverse_branch(self, via_point: float, y: float) -> float:
        return self.branch_inverse(self.branch_index(via_point), y)


@dataclass(frozen=True)
class HyperbolicAffine2D:
    """Affine bijection of the plane, T(x) = A x + a, hyperbolic by construction.

    A is assembled from eigenvalues (lam1 > 1 > lam2 > 0) and unit eigenvector
    directions given by angles, so expanding/contracting axes are explicit.
    """

    lam1: float
    lam2: float
    shift: tuple = (0.0, 0.0)
    angle1: float = 0.0
    angle2: float = math.pi / 2
    space_tag: str = field(default=PLANE, init=False)
    branch_count: int = field(default=1, init=False)
    A: np.ndarray = field(init=False)
    A_inv: np.ndarray = field(init=False)
    eigvecs: np.ndarray = field(init=False)
    cond: float = field(init=False)
    fixed_point: np.ndarray = field(init=False)

    def __post_init__(self):
        if not (self.lam1 > 1.0 > self.lam2 > 0.0):
            raise ValueError(f"need lam1 > 1 > lam2 > 0, got {self.lam1}, {self.lam2}")
        e1 = np.array([math.cos(self.angle1), math.sin(self.angle1)])
        e2 = np.array([math.cos(self.angle2), math.sin(self.angle2)])
        E = np.column_stack([e1, e2])
        if abs(np.linalg.det(E)) < 1e-8:
            raise ValueError("eigenvector directions are (nearly) parallel")
        A = E @ np.diag([self.lam1, self.lam2]) @ np.linalg.inv(E)
        a = np.asarray(self.shift, dtype=float)
        for name, val in [
            ("A", A),
            ("A_inv", np.linalg.inv(A)),
            ("eigvecs", E),
            ("cond", float(np.linalg.norm(E, 2) * np.linalg.norm(np.linalg.inv(E), 2))),
            ("fixed_point", np.linalg.solve(np.eye(2) - A, a)),
            ("shift", tuple(a)),
        ]:
            object.__setattr__(self, name, val)

    def forward(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + np.asarray(self.shift)

    def forward_many(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(xs, dtype=float) @ self.A.T + np.asarray(self.shift)

    def branch_index(self, x) -> int:
        return 0

    def branch_inverse(self, idx: int, y) -> np.ndarray:
        if idx != 0:
            raise ValueError(f"affine map has a single branch, got index {idx}")
        return self.A_inv @ (np.asarray(y, dtype=float) - np.asarray(self.shift))

    def inverse_branch(self, via_point, y) -> np.ndarray:
        return self.branch_inverse(0, y)

    def eigen_coordinates(self, v) -> np.ndarray:
        """Coordinates of v - fixed_point in the eigenbasis."""
        return np.linalg.solve(self.eigvecs, np.asarray(v, dtype=float) - self.fixed_point)


@dataclass(frozen=True)
class TorusLinearMap:
    """Integer unimodular matrix acting on the flat torus [0,1)^2.

    Requires real eigenvalues lam1 > 1 > lam2 > 0 (orientation-preserving
    hyperbolic case), so |det| = 1 and the inverse is the integer adjugate.
    """

    matrix: tuple = ((2, 1), (1, 1))
    space_tag: str = field(default=TORUS, init=False)
    branch_count: int = field(default=1, init=False)
    A: np.ndarray = field(init=False)
    A_inv: np.ndarray = field(init=False)
    eigvecs: np.ndarray = field(init=False)
    lam1: float = field(init=False)
    lam2: float = field(init=False)
    cond: float = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.shape != (2, 2) or not np.all(A == np.round(A)):
            raise ValueError("matrix must be a 2x2 integer array")
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(abs(det) - 1.0) > 1e-12:
            raise ValueError(f"matrix must be unimodular, det = {det}")
        vals, vecs = np.linalg.eig(A)
        if np.iscomplexobj(vals) and np.max(np.abs(vals.imag)) > 1e-12:
            raise ValueError("matrix must have real eigenvalues")
        vals = vals.real
        order = np.argsort(vals)[::-1]
        lam1, lam2 = float(vals[order[0]]), float(vals[order[1]])
        if not (lam1 > 1.0 > lam2 > 0.0):
            raise ValueError(f"need eigenvalues lam1 > 1 > lam2 > 0, got {lam1}, {lam2}")
        E = np.real(vecs[:, order])
        adj = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
        for name, val in [
            ("A", A),
            ("A_inv", adj),
            ("eigvecs", E),
            ("lam1", lam1),
            ("lam2", lam2),
            ("cond", float(np.linalg.norm(E, 2) * np.linalg.norm(np.linalg.inv(E), 2))),
        ]:
            object.__setattr__(self, name, val)

    def forward(self, x) -> np.ndarray:
        return wrap01(self.A @ np.asarray(x, dtype=float))

    def forward_many(self, xs: np.ndarray) -> np.ndarray:
        return wrap01(np.asarray(xs, dtype=float) @ self.A.T)

    def branch_index(self, x) -> int:
        return 0

    def branch_inverse(self, idx: int, y) -> np.ndarray:
        if idx != 0:
            raise ValueError(f"torus automorphism has a single branch, got index {idx}")
        return wrap01(self.A_inv @ np.asarray(y, dtype=float))

    def inverse_branch(self, via_point, y) -> np.ndarray:
        return self.branch_inverse(0, y)


def forward_window(dyn_map, x0, n: int) -> TrajectoryWindow:
    """True orbit window x0, T(x0), ..., T^(n-1)(x0) with the origin at x0."""
    if n < 1:
        raise ValueError("window needs at least one point")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    pts = np.empty((n, len(x0)))
    pts[0] = x0
    cur = x0 if len(x0) > 1 else float(x0[0])
    for i in range(1, n):
        cur = dyn_map.forward(cur)
        pts[i] = cur
    if pts.shape[1] == 1:
        pts = pts[:, 0]
    return TrajectoryWindow(pts, 0, dyn_map.space_tag)


def backward_window(dyn_map, x0, n: int, branches="left") -> TrajectoryWindow:
    """Backward orbit window through chosen branches, indices -n..0.

    `branches` picks the preimage branch at each backward step (innermost,
    i.e. the step producing index -1, first); 1-branch maps ignore it.
    """
    if n < 0:
        raise ValueError("backward depth must be nonnegative")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    scalar = len(x0) == 1
    seq = _branch_sequence(branches, n) if dyn_map.branch_count > 1 else [0] * n
    pts = np.empty((n + 1, len(x0)))
    pts[n] = x0
    cur = float(x0[0]) if scalar else x0
    for i in range(n):
        cur = dyn_map.branch_inverse(seq[i], cur)
        pts[n - 1 - i] = cur
    if scalar:
        pts = pts[:, 0]
    return TrajectoryWindow(pts, n, dyn_map.space_tag)
