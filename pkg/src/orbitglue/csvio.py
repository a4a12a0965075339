"""CSV writers with shortest round-trip float formatting.

All writers emit LF newlines and format doubles via repr, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .core import pointwise_distance, space_dim
from .gluing import GluingReport, RateFunction
from .shadowing import ShadowingReport

SUMMARY_HEADER = ("task", "map", "epsilon", "D", "seed", "window",
                  "uniform_err", "Q_limsup", "limit_err", "K_emp", "bound", "pass")


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_gluing_csv(path, report: GluingReport, rate: RateFunction) -> None:
    """Rows `k,error,bound_strong,bound_weak` in ascending index order."""
    ks, errs = report.errors_by_k()
    phi = rate.values_on(ks)
    rows = zip(ks, errs, phi * report.anchor_distance, phi)
    write_csv(path, ("k", "error", "bound_strong", "bound_weak"), rows)


def write_shadowing_csv(path, report: ShadowingReport) -> None:
    """Rows `t,y,z,err`; planar components flatten to y0,y1,z0,z1."""
    y, z = report.y, report.z
    errs = pointwise_distance(y.space_tag, z.points, y.points)
    ts = np.arange(-y.neg_len, y.pos_len)
    if space_dim(y.space_tag) == 1:
        header = ("t", "y", "z", "err")
        rows = zip(ts, y.points, z.points, errs)
    else:
        header = ("t", "y0", "y1", "z0", "z1", "err")
        rows = zip(ts, y.points[:, 0], y.points[:, 1], z.points[:, 0], z.points[:, 1], errs)
    write_csv(path, header, rows)


def write_levels_csv(path, report: ShadowingReport) -> None:
    """Rows `level,moment_index,gap,tau_min,gap_bound` across all merge rounds.

    gap_bound repeats the recursion bound entering each round; methods that
    do not track the recursion emit nan there.
    """
    bars = report.gap_recursion.gamma_bars if report.gap_recursion is not None else None

    def rows():
        for lvl in report.levels:
            bound = float(bars[lvl.level]) if bars is not None else float("nan")
            for m, g in zip(lvl.moments, lvl.gaps):
                yield lvl.level, m, g, lvl.tau_min, bound

    write_csv(path, ("level", "moment_index", "gap", "tau_min", "gap_bound"), rows())


def write_rate_csv(path, rate: RateFunction, k_lo: int, k_hi: int) -> None:
    ks = np.arange(k_lo, k_hi + 1)
    write_csv(path, ("k", "phi"), zip(ks, rate.values_on(ks)))


def write_envelope_csv(path, rate: RateFunction, envelope: RateFunction) -> None:
    """Rows `k,phi_env,partial_sum` for k >= 0 with symmetric partial sums.

    partial_sum at k accumulates the envelope over all indices |i| <= k, the
    quantity whose growth certifies non-summability of the envelope.
    """
    k_max = envelope.k_max
    ks = np.arange(0, k_max + 1)
    env_pos = envelope.values_on(ks)
    env_neg = envelope.values_on(-ks)
    partial = np.cumsum(env_pos + env_neg) - env_pos[0]  # center counted once
    write_csv(path, ("k", "phi_env", "partial_sum"), zip(ks, env_pos, partial))


def write_lemma_csv(path, rows) -> None:
    """Rows `alpha,R,n,tau_inv_n,fit_gamma` from a neutral-decay sweep."""
    write_csv(path, ("alpha", "R", "n", "tau_inv_n", "fit_gamma"), rows)


def summary_row(task, map_name, epsilon, cap_d, seed, window,
                uniform_err, q_limsup, limit_err, k_emp, bound, status) -> tuple:
    return (task, map_name, epsilon, cap_d, seed, window,
            uniform_err, q_limsup, limit_err, k_emp, bound, status)


def write_summary_csv(path, rows) -> None:
    write_csv(path, SUMMARY_HEADER, rows)
