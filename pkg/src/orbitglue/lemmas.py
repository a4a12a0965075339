"""Standalone numerical checks for the product and neutral-decay estimates.

Everything here is deliberately independent of the root-finding used by the
map classes: inverses are certified bisection (or exact division in the
linear case), fits are plain log-log regression.  That keeps these routines
usable as oracles against the rest of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import State
from .maps import backward_window


@dataclass(frozen=True)
class NeutralBranch:
    """Model branch tau(v) = v + R v^(1+alpha): neutral fixed point at 0."""

    R: float
    alpha: float

    def __post_init__(self):
        if self.R <= 0.0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")

    def tau(self, x: float) -> float:
        return x + self.R * x ** (1.0 + self.alpha)


def product_bounds(b):
    """prod(1 + b_k) together with its exponential and linear bounds.

    upper = exp(sum b_k) dominates the product termwise since 1 + x <= e^x;
    lower = 1 + sum b_k requires every term nonnegative and is None
    otherwise.  All factors 1 + b_k must be positive.
    """
    b = np.asarray(b, dtype=float)
    if np.any(1.0 + b <= 0.0):
        raise ValueError("all factors 1 + b_k must be positive")
    product = float(np.prod(1.0 + b))
    total = float(np.sum(b))
    upper = math.exp(total)
    lower = 1.0 + total if len(b) == 0 or np.all(b >= 0.0) else None
    assert product <= upper * (1.0 + 1e-12)
    if lower is not None:
        assert product >= lower * (1.0 - 1e-12)
    return product, upper, lower


def _bisect_inverse(nb: NeutralBranch, v: float) -> float:
    # tau(x) >= x pins the preimage inside [0, v]
    lo, hi = 0.0, v
    for _ in range(200):
        if hi - lo <= 1e-14 * hi:
            break
        mid = 0.5 * (lo + hi)
        if nb.tau(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def neutral_one_step_bounds(nb: NeutralBranch, v: float):
    """One backward step of tau with its algebraic sandwich (u, inv, w).

    u freezes the nonlinear factor at v; w follows the tangent line at v,
    which convexity keeps below the graph, so its crossing overshoots the
    true preimage.  inv is the bisection reference.  The ordering
    u <= inv <= w <= v is asserted before returning.
    """
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")
    rv = nb.R * v**nb.alpha
    u = v / (1.0 + rv)
    w = v * (1.0 - rv / (1.0 + (1.0 + nb.alpha) * rv))
    inv = _bisect_inverse(nb, v)
    assert u <= inv * (1.0 + 1e-12)
    assert inv <= w * (1.0 + 1e-12)
    assert w <= v
    return u, inv, w


def neutral_inverse_iterates(nb: NeutralBranch, v: float, n_max: int) -> np.ndarray:
    """Backward orbit v, tau^(-1)(v), ..., tau^(-n_max)(v) of the model branch.

    alpha = 0 makes tau linear and each step an exact division; otherwise
    every step is bisection.  The sequence is strictly decreasing while
    positive.
    """
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = np.empty(n_max + 1)
    out[0] = cur = float(v)
    shrink = 1.0 / (1.0 + nb.R)
    for k in range(1, n_max + 1):
        cur = cur * shrink if nb.alpha == 0.0 else _bisect_inverse(nb, cur)
        out[k] = cur
    return out


def fit_exponent(ns, vals):
    """Power-law fit vals ~ c * ns^(-gamma): returns (gamma, c)."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if len(ns) < 2:
        raise ValueError("need at least two samples to fit")
    if np.any(ns <= 0.0) or np.any(vals <= 0.0):
        raise ValueError("samples must be positive for a log-log fit")
    slope, intercept = np.polyfit(np.log(ns), np.log(vals), 1)
    return float(-slope), float(math.exp(intercept))


def neutral_map_backward_bound(dyn_map, u, n: int, branches="left") -> np.ndarray:
    """Distance of each backward iterate of an interval map to {0, 1}.

    Follows the branch path for n preimage steps from u and returns the
    distances at backward depth k = 0..n.  Given at least eight positive
    samples, the fitted power law with majorized constant is asserted over
    the tail before returning.
    """
    if isinstance(u, State):
        u = u.value
    pts = backward_window(dyn_map, u, n, branches).points
    d = np.minimum(np.abs(pts), np.abs(1.0 - pts))[::-1].copy()
    if n >= 1:
        ks = np.arange(1, n + 1, dtype=float)
        positive = d[1:] > 0.0
        if np.count_nonzero(positive) >= 8:
            gamma, _ = fit_exponent(ks[positive], d[1:][positive])
            c = float(np.max(d[1:][positive] * ks[positive] ** gamma))
            assert np.all(d[1:][positive] <= c * ks[positive] ** (-gamma) * (1.0 + 1e-9))
    return d
