"""PNG rendering for reports.

Uses the offline Agg backend; every function writes one file and closes its
figure so batch runs stay memory-flat.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .core import pointwise_distance  # noqa: E402
from .gluing import GluingReport, RateFunction  # noqa: E402
from .shadowing import ShadowingReport  # noqa: E402

_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_gluing_decay(path, report: GluingReport, rate: RateFunction,
                      fitted: RateFunction | None = None) -> None:
    """Per-index gluing errors against the strong and weak bound curves."""
    ks, errs = report.errors_by_k()
    phi = rate.values_on(ks)
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    pos = errs > 0
    ax.semilogy(ks[pos], errs[pos], ".", ms=4, color="tab:blue", label="observed error")
    bp = phi > 0
    ax.semilogy(ks[bp], phi[bp] * report.anchor_distance, "-", lw=1.2,
                color="tab:red", label="strong bound")
    ax.semilogy(ks[bp], phi[bp], "--", lw=1.0, color="tab:orange", label="weak bound")
    if fitted is not None:
        fp = fitted.values_on(ks)
        fm = fp > 0
        ax.semilogy(ks[fm], fp[fm], ":", lw=1.4, color="tab:green", label="fitted rate")
    ax.set_xlabel("index k")
    ax.set_ylabel("distance")
    ax.set_title(f"gluing decay (anchor {report.anchor_distance:.3g})")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_shadowing_overview(path, report: ShadowingReport) -> None:
    """Pointwise error over the window plus the running-average sequence."""
    y, z = report.y, report.z
    ts = np.arange(-y.neg_len, y.pos_len)
    errs = pointwise_distance(y.space_tag, z.points, y.points)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.5, 5.6), sharex=False)
    pos = errs > 0
    if np.any(pos):
        ax1.semilogy(ts[pos], errs[pos], ",", color="tab:blue")
    ax1.axhline(report.uniform_err, color="tab:red", lw=1.0,
                label=f"uniform {report.uniform_err:.3g}")
    ax1.set_xlabel("index")
    ax1.set_ylabel("pointwise error")
    ax1.legend(loc="best", fontsize=8)
    qn = report.qn_sequence
    ax2.plot(np.arange(len(qn)), qn, lw=1.0, color="tab:blue", label="running mean")
    ax2.axhline(report.q_limsup_estimate, color="tab:red", lw=1.0,
                label=f"limsup estimate {report.q_limsup_estimate:.3g}")
    ax2.set_xlabel("n")
    ax2.set_ylabel("average error")
    ax2.legend(loc="best", fontsize=8)
    fig.suptitle(f"{report.method} gluing, defect {report.defect:.2g}", fontsize=10)
    _finish(fig, path)


def save_level_gaps(path, report: ShadowingReport) -> None:
    """Observed per-round gaps against the recursion bound when tracked."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for lvl in report.levels:
        if len(lvl.gaps):
            ax.plot([lvl.level] * len(lvl.gaps), lvl.gaps, ".", ms=4,
                    color="tab:blue", alpha=0.5)
    if report.gap_recursion is not None:
        bars = report.gap_recursion.gamma_bars
        ax.step(np.arange(len(bars)), bars, where="post", color="tab:red",
                lw=1.2, label="recursion bound")
        ax.axhline(report.gap_recursion.de_phi_bound, color="tab:orange",
                   lw=1.0, ls="--", label="closing cap")
        ax.legend(loc="best", fontsize=8)
    ax.set_yscale("log")
    ax.set_xlabel("merge round")
    ax.set_ylabel("gap")
    ax.set_title("gaps by round")
    _finish(fig, path)


def save_envelope(path, rate: RateFunction, envelope: RateFunction) -> None:
    """Sparse rate values, their monotone envelope, and its partial sums."""
    k_max = envelope.k_max
    ks = np.arange(-k_max, k_max + 1)
    raw = rate.values_on(ks)
    env = envelope.values_on(ks)
    kp = np.arange(0, k_max + 1)
    partial = np.cumsum(envelope.values_on(kp) + envelope.values_on(-kp)) - envelope(0)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 5.6))
    nz = raw > 0
    ax1.semilogy(ks[nz], raw[nz], ".", ms=4, color="tab:blue", label="rate values")
    ax1.semilogy(ks, np.maximum(env, 1e-300), "-", lw=1.0, color="tab:red",
                 label="monotone envelope")
    ax1.set_xlabel("k")
    ax1.set_ylabel("value")
    ax1.legend(loc="best", fontsize=8)
    ax2.semilogx(np.maximum(kp, 1), partial, lw=1.2, color="tab:red")
    ax2.axhline(10.0, color="tab:gray", lw=1.0, ls="--")
    ax2.set_xlabel("k")
    ax2.set_ylabel("envelope partial sum")
    fig.suptitle("summable rate with non-summable envelope", fontsize=10)
    _finish(fig, path)


def save_lemma_decay(path, curves) -> None:
    """Log-log inverse-iterate decay curves, one per parameter choice."""
    fig, ax = plt.subplots(figsize=(6.5, 4.4))
    for label, ns, vals in curves:
        ns = np.asarray(ns, dtype=float)
        vals = np.asarray(vals, dtype=float)
        good = (ns > 0) & (vals > 0)
        ax.loglog(ns[good], vals[good], lw=1.1, label=label)
    ax.set_xlabel("n")
    ax.set_ylabel("backward iterate")
    ax.set_title("neutral-branch backward decay")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)
