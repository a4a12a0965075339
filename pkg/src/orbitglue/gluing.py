"""Rate functions and trajectory gluing.

A rate function phi maps integer time offsets to nonnegative reals; gluing a
backward semi-trajectory x to a forward one y means producing a true
trajectory z with dist(x_k, z_k) <= phi(k)*dist(x_0, y_0) for k < 0 and
dist(y_k, z_k) <= phi(k)*dist(x_0, y_0) for k >= 0 (strong form; the weak
form drops the dist(x_0, y_0) factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    INTERVAL,
    TORUS,
    TrajectoryWindow,
    distance,
    pointwise_distance,
    torus_nearest_lift,
    wrap01,
)
from .maps import BranchDomainError

RATE_KINDS = ("zero", "exp_two_sided", "power_one_sided", "tabulated")
POWER_PARTIAL_TERMS = 100_000


class NonSummableRateError(ValueError):
    """Rate function whose total sum diverges."""


class GluingError(RuntimeError):
    """Gluing construction failed (branch image miss or anchor too far)."""


@dataclass(frozen=True)
class RateFunction:
    """phi: Z -> R>=0 in one of four forms.

    exp_two_sided: phi(k) = C*lam_plus**(-k) for k >= 0 and C*lam_minus**|k|
    for k < 0; either side may be absent (None), leaving phi(0) = C and that
    side zero.  power_one_sided: phi(k) = C*|k|**(-gamma) on the chosen side,
    phi(0) = C, zero elsewhere.  tabulated: explicit values on the index
    window [k_min, k_min + len - 1], zero outside.
    """

    kind: str
    C: float = 0.0
    lam_plus: float | None = None
    lam_minus: float | None = None
    gamma: float | None = None
    side: str | None = None
    k_min: int = 0
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.C < 0.0:
            raise ValueError("C must be nonnegative")
        if self.kind == "exp_two_sided":
            if self.lam_plus is None and self.lam_minus is None:
                raise ValueError("exponential rate needs at least one side")
            if self.lam_plus is not None and self.lam_plus <= 1.0:
                raise ValueError(f"lam_plus must exceed 1, got {self.lam_plus}")
            if self.lam_minus is not None and not (0.0 < self.lam_minus < 1.0):
                raise ValueError(f"lam_minus must lie in (0,1), got {self.lam_minus}")
        if self.kind == "power_one_sided":
            if self.side not in ("backward", "forward"):
                raise ValueError("power rate side must be 'backward' or 'forward'")
            if self.gamma is None or not math.isfinite(self.gamma):
                raise ValueError("power rate needs a finite gamma")
        if self.kind == "tabulated":
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or len(vals) == 0:
                raise ValueError("tabulated rate needs a nonempty 1-D value array")
            if np.any(vals < 0.0):
                raise ValueError("rate values must be nonnegative")
            vals = vals.copy()
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls) -> "RateFunction":
        return cls("zero")

    @classmethod
    def exponential(cls, C: float, lam_plus: float | None, lam_minus: float | None) -> "RateFunction":
        return cls("exp_two_sided", C=C, lam_plus=lam_plus, lam_minus=lam_minus)

    @classmethod
    def power(cls, C: float, gamma: float, side: str) -> "RateFunction":
        return cls("power_one_sided", C=C, gamma=gamma, side=side)

    @classmethod
    def tabulated(cls, values, k_min: int) -> "RateFunction":
        return cls("tabulated", k_min=int(k_min), values=np.asarray(values, dtype=float))

    @property
    def k_max(self) -> int:
        if self.kind != "tabulated":
            raise ValueError("k_max is defined for tabulated rates only")
        return self.k_min + len(self.values) - 1

    def __call__(self, k: int) -> float:
        return float(self.values_on(np.array([k]))[0])

    def values_on(self, ks) -> np.ndarray:
        """Vectorized phi over an integer index array."""
        ks = np.asarray(ks, dtype=int)
        if self.kind == "zero":
            return np.zeros(ks.shape)
        if self.kind == "exp_two_sided":
            out = np.zeros(ks.shape)
            pos = ks >= 0
            if self.lam_plus is not None:
                out[pos] = self.C * self.lam_plus ** (-ks[pos].astype(float))
            else:
                out[pos & (ks == 0)] = self.C
            if self.lam_minus is not None:
                out[~pos] = self.C * self.lam_minus ** (-ks[~pos].astype(float))
            return out
        if self.kind == "power_one_sided":
            out = np.zeros(ks.shape)
            out[ks == 0] = self.C
            mask = ks < 0 if self.side == "backward" else ks > 0
            out[mask] = self.C * np.abs(ks[mask]).astype(float) ** (-self.gamma)
            return out
        idx = ks - self.k_min
        valid = (idx >= 0) & (idx < len(self.values))
        out = np.zeros(ks.shape)
        out[valid] = self.values[idx[valid]]
        return out


@dataclass(frozen=True)
class SumResult:
    """Total sum of a rate over Z: exact or partial-sum-plus-tail-bound.

    total includes tail_bound, so it upper-bounds the true sum; for
    tabulated rates the tail is unobserved and total covers the window only.
    """

    total: float
    tail_bound: float
    tail_unobserved: bool = False


def summate(rate: RateFunction) -> SumResult:
    if rate.kind == "zero":
        return SumResult(0.0, 0.0)
    if rate.kind == "exp_two_sided":
        plus = rate.C * rate.lam_plus / (rate.lam_plus - 1.0) if rate.lam_plus is not None else rate.C
        minus = rate.C * rate.lam_minus / (1.0 - rate.lam_minus) if rate.lam_minus is not None else 0.0
        return SumResult(plus + minus, 0.0)
    if rate.kind == "power_one_sided":
        if rate.gamma <= 1.0:
            raise NonSummableRateError(f"power rate with gamma = {rate.gamma} <= 1 diverges")
        m = POWER_PARTIAL_TERMS
        partial = rate.C * (1.0 + np.sum(np.arange(1, m + 1, dtype=float) ** (-rate.gamma)))
        tail = rate.C * m ** (1.0 - rate.gamma) / (rate.gamma - 1.0)
        return SumResult(float(partial + tail), float(tail))
    return SumResult(float(np.sum(rate.values)), 0.0, tail_unobserved=True)


def monotone_envelope(rate: RateFunction) -> RateFunction:
    """Smallest side-monotone majorant over the tabulated window.

    envelope(k) = sup of phi over i <= k for k < 0 and over i >= k for
    k >= 0, computed within the window.
    """
    if rate.kind != "tabulated":
        raise ValueError("monotone_envelope operates on tabulated rates")
    if rate.k_min > 0 or rate.k_max < 0:
        raise ValueError("tabulated window must contain index 0")
    split = -rate.k_min
    neg = np.maximum.accumulate(rate.values[:split])
    pos = np.maximum.accumulate(rate.values[split:][::-1])[::-1]
    return RateFunction.tabulated(np.concatenate([neg, pos]), rate.k_min)


def sparse_rate_example(max_block: int) -> RateFunction:
    """Even summable rate whose monotone envelope is non-summable.

    Block j >= 2 contributes the value j**-2 at +-p_j where p_j = j(j+1)/2 - 1,
    so consecutive nonzero entries are separated by j-1 zeros; the center
    value is 1.  Tabulated over |k| <= p_max_block.
    """
    if max_block < 1:
        raise ValueError("max_block must be >= 1")
    p_max = max_block * (max_block + 1) // 2 - 1
    values = np.zeros(2 * p_max + 1)
    values[p_max] = 1.0
    for j in range(2, max_block + 1):
        p = j * (j + 1) // 2 - 1
        values[p_max + p] = j ** (-2.0)
        values[p_max - p] = j ** (-2.0)
    return RateFunction.tabulated(values, -p_max)


@dataclass(frozen=True)
class FitResult:
    """Least-squares decay fit of error-vs-offset data in log space."""

    kind: str  # "exp", "power", or "zero"
    C: float
    lam: float | None
    gamma: float | None
    residual: float
    n_points: int


def fit_decay(ks, errors) -> FitResult:
    """Fit errors ~ C*lam**-k against errors ~ C*k**-gamma, keep the better.

    ks are positive offsets (distances from the anchor), errors strictly
    positive; the winner is chosen by mean squared log-residual.
    """
    ks = np.asarray(ks, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(ks) != len(errors) or len(ks) < 8:
        raise ValueError("need at least 8 (k, error) pairs with matching lengths")
    if np.any(ks < 1.0) or np.any(errors <= 0.0):
        raise ValueError("fit needs ks >= 1 and strictly positive errors")
    log_e = np.log(errors)

    slope, icept = np.polyfit(ks, log_e, 1)
    res_exp = float(np.mean((icept + slope * ks - log_e) ** 2))
    lam, c_exp = math.exp(-slope), math.exp(icept)

    slope_p, icept_p = np.polyfit(np.log(ks), log_e, 1)
    res_pow = float(np.mean((icept_p + slope_p * np.log(ks) - log_e) ** 2))

    if res_exp <= res_pow:
        return FitResult("exp", c_exp, lam, None, res_exp, len(ks))
    return FitResult("power", math.exp(icept_p), None, -slope_p, res_pow, len(ks))


@dataclass(frozen=True)
class GluingReport:
    """Gluing trajectory with per-index errors and rate verdicts.

    back_errors[j] is dist(x_k, z_k) at k = -neg_len + j (ascending k up to
    -1); fwd_errors[j] is dist(y_j, z_j) for j >= 0.  fitted_rate holds the
    rate the verdicts were computed against: the caller-supplied one when
    given, otherwise the least-squares fit of the observed errors.  With a
    fitted rate the strong and weak verdicts coincide (a single pair cannot
    separate the two normalizations) and mean "the fitted family explains
    the errors within a factor 2".
    """

    z: TrajectoryWindow
    back_errors: np.ndarray
    fwd_errors: np.ndarray
    anchor_distance: float
    strong_ok: bool
    weak_ok: bool
    fitted_rate: RateFunction | None
    fallback_count: int = 0

    def __post_init__(self):
        for name in ("back_errors", "fwd_errors"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def errors_by_k(self):
        """(ks, errors) over the full window in ascending index order."""
        ks = np.arange(-len(self.back_errors), len(self.fwd_errors))
        return ks, np.concatenate([self.back_errors, self.fwd_errors])


def _bounds_hold(report: GluingReport, rate: RateFunction, mode: str) -> bool:
    ks, errs = report.errors_by_k()
    bounds = rate.values_on(ks)
    if mode == "strong":
        bounds = bounds * report.anchor_distance
    return bool(np.all(errs <= bounds + 1e-12))


def verify_gluing(report: GluingReport, rate: RateFunction, mode: str = "strong") -> bool:
    """Check every per-index error against phi(k) (weak) or phi(k)*anchor (strong)."""
    if mode not in ("strong", "weak"):
        raise ValueError(f"mode must be 'strong' or 'weak', got {mode!r}")
    return _bounds_hold(report, rate, mode)


def _glue_expanding(dyn_map, x_back, y_fwd, strict: bool):
    B, F = x_back.neg_len, y_fwd.pos_len
    z = np.empty(B + F)
    z[B:] = y_fwd.points
    cur = float(y_fwd.value(0))
    fallbacks = 0
    for j in range(1, B + 1):
        xk = float(x_back.value(-j))
        try:
            cur = dyn_map.inverse_branch(xk, cur)
        except BranchDomainError as err:
            if strict:
                raise GluingError(f"no admissible preimage at index {-j}: {err}") from err
            for b in range(dyn_map.branch_count):
                if b == dyn_map.branch_index(xk):
                    continue
                try:
                    cur = dyn_map.branch_inverse(b, cur)
                    break
                except BranchDomainError:
                    continue
            else:
                raise GluingError(f"no branch image covers the point at index {-j}") from err
            fallbacks += 1
        z[B - 1 - (j - 1)] = cur
    return z, fallbacks


def _glue_linear(dyn_map, x_back, y_fwd, eps0: float, anchor: float):
    """Intersection of the expanding line at x_0 with the contracting line at y_0."""
    tag = dyn_map.space_tag
    x0 = np.asarray(x_back.value(0), dtype=float)
    y0 = np.asarray(y_fwd.value(0), dtype=float)
    if tag == TORUS:
        if anchor > eps0:
            raise GluingError(f"anchor distance {anchor:.6g} exceeds the local gluing radius {eps0}")
        y0 = torus_nearest_lift(x0, y0)
    e1, e2 = dyn_map.eigvecs[:, 0], dyn_map.eigvecs[:, 1]
    s = np.linalg.solve(np.column_stack([e1, -e2]), y0 - x0)
    z0 = x0 + s[0] * e1

    B, F = x_back.neg_len, y_fwd.pos_len
    z = np.empty((B + F, 2))
    z[B] = wrap01(z0) if tag == TORUS else z0
    cur = z[B]
    for j in range(B + 1, B + F):
        cur = dyn_map.forward(cur)
        z[j] = cur
    cur = z[B]
    for j in range(1, B + 1):
        cur = dyn_map.branch_inverse(0, cur)
        z[B - j] = cur
    return z


def glue(dyn_map, x_back: TrajectoryWindow, y_fwd: TrajectoryWindow, rate: RateFunction | None = None,
         strict: bool = True, eps0: float = 0.25) -> GluingReport:
    """Glue a backward semi-trajectory to a forward one with a true trajectory.

    x_back must end at its index 0 (pos_len == 1) and y_fwd must start at its
    index 0 (neg_len == 0).  Interval maps take z_k = y_k forward and pull z
    back through the branch containing x_k; with strict=False a branch whose
    image misses the point falls back to any admissible branch (counted in
    fallback_count) instead of raising.  Linear plane/torus maps intersect
    the expanding line through x_0 with the contracting line through y_0;
    torus gluing requires anchor distance <= eps0 and works on nearest lifts.
    """
    if x_back.pos_len != 1:
        raise ValueError("x_back must have pos_len == 1 (its last point is index 0)")
    if y_fwd.neg_len != 0:
        raise ValueError("y_fwd must have neg_len == 0 (its first point is index 0)")
    tag = dyn_map.space_tag
    if x_back.space_tag != tag or y_fwd.space_tag != tag:
        raise ValueError("windows and map disagree on the space tag")

    anchor = distance(tag, x_back.value(0), y_fwd.value(0))
    fallbacks = 0
    if tag == INTERVAL:
        z, fallbacks = _glue_expanding(dyn_map, x_back, y_fwd, strict)
    else:
        z = _glue_linear(dyn_map, x_back, y_fwd, eps0, anchor)
    zw = TrajectoryWindow(z, x_back.neg_len, tag)

    B = x_back.neg_len
    back_errors = pointwise_distance(tag, x_back.points[:B], zw.points[:B])
    fwd_errors = pointwise_distance(tag, y_fwd.points, zw.points[B:])

    report = GluingReport(zw, back_errors, fwd_errors, anchor, False, False, rate, fallbacks)
    if rate is not None:
        return replace(
            report,
            strong_ok=_bounds_hold(report, rate, "strong"),
            weak_ok=_bounds_hold(report, rate, "weak"),
        )
    try:
        fitted = fit_rate(report)
    except ValueError:
        fitted = RateFunction.tabulated(np.concatenate([back_errors, fwd_errors]), -B)
    ks, errs = report.errors_by_k()
    ok = bool(np.all(errs <= 2.0 * fitted.values_on(ks) + 1e-12))
    return replace(report, fitted_rate=fitted, strong_ok=ok, weak_ok=ok)


def _fit_side(distances: np.ndarray, errors: np.ndarray) -> FitResult | None:
    """Fit one side's decay; None for an all-zero side."""
    mask = errors > 0.0
    if not np.any(mask):
        return None
    if np.count_nonzero(mask) < 8:
        raise ValueError("side has fewer than 8 nonzero errors; cannot fit a rate")
    return fit_decay(distances[mask], errors[mask])


def fit_rate(report: GluingReport) -> RateFunction:
    """Empirical rate function from a gluing report's error arrays.

    Fits each side independently (exponential vs power law by residual) and
    assembles a symbolic rate when the winners are decaying; non-decaying or
    mixed-family results fall back to the tabulated raw errors.  C is in raw
    error units; divide by anchor_distance for a strong-form rate.
    """
    B = len(report.back_errors)
    F = len(report.fwd_errors)
    back = _fit_side(np.arange(B, 0, -1, dtype=float), report.back_errors) if B else None
    fwd = _fit_side(np.arange(1, F, dtype=float), report.fwd_errors[1:]) if F > 1 else None

    if back is None and fwd is None:
        return RateFunction.zero()
    table = RateFunction.tabulated(np.concatenate([report.back_errors, report.fwd_errors]), -B)

    def exp_ok(f):
        return f is not None and f.kind == "exp" and f.lam > 1.0

    def pow_ok(f):
        return f is not None and f.kind == "power" and f.gamma > 0.0

    if back is None and exp_ok(fwd):
        return RateFunction.exponential(fwd.C, fwd.lam, None)
    if fwd is None and exp_ok(back):
        return RateFunction.exponential(back.C, None, 1.0 / back.lam)
    if exp_ok(back) and exp_ok(fwd):
        return RateFunction.exponential(max(back.C, fwd.C), fwd.lam, 1.0 / back.lam)
    if back is None and pow_ok(fwd):
        return RateFunction.power(fwd.C, fwd.gamma, "forward")
    if fwd is None and pow_ok(back):
        return RateFunction.power(back.C, back.gamma, "backward")
    return table


def default_rate(dyn_map) -> RateFunction:
    """Theory-backed rate function for a concrete map.

    Full-branch expanding piecewise-linear maps decay geometrically with the
    weakest slope; linear hyperbolic maps decay with their eigenvalues and
    the eigenbasis condition constant; neutral maps (alpha > 0) get a power
    rate calibrated against a reference backward gluing, majorized so the
    rate dominates the measured decay.
    """
    name = type(dyn_map).__name__
    if name == "PiecewiseLinearMap":
        if not (dyn_map.full_branch and min(dyn_map.a, dyn_map.b) > 1.0):
            raise ValueError("no default rate: map is not full-branch uniformly expanding")
        return RateFunction.exponential(1.0, None, 1.0 / min(dyn_map.a, dyn_map.b))
    if name in ("HyperbolicAffine2D", "TorusLinearMap"):
        return RateFunction.exponential(dyn_map.cond, 1.0 / dyn_map.lam2, 1.0 / dyn_map.lam1)
    if name == "NeutralMap":
        if dyn_map.alpha == 0.0:
            return RateFunction.exponential(1.0, None, max(dyn_map.c, 1.0 - dyn_map.c))
        depth = 4096
        x_back = TrajectoryWindow(np.zeros(depth + 1), depth, INTERVAL)
        y_pts = [0.3]
        for _ in range(7):
            y_pts.append(dyn_map.forward(y_pts[-1]))
        y_fwd = TrajectoryWindow(np.array(y_pts), 0, INTERVAL)
        report = glue(dyn_map, x_back, y_fwd, rate=RateFunction.zero())
        errs = report.back_errors  # k = -depth .. -1, ascending k
        dists = np.arange(depth, 0, -1, dtype=float)
        tail = dists >= 256
        fit = fit_decay(dists[tail], errs[tail])
        gamma = fit.gamma if fit.kind == "power" else 1.0 / max(math.log(fit.lam), 1e-9)
        c_major = float(np.max(errs * dists**gamma))
        return RateFunction.power(max(c_major, float(errs[-1])), gamma, "backward")
    raise ValueError(f"no default rate known for map type {name}")
