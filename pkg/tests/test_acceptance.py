"""Acceptance suite: eleven numbered claims, one summary line each.

Every test records its verdict on the shared log before asserting, so the
terminal section in conftest shows one PASS/FAIL line per criterion even
when an assertion trips.  Criterion 10 is expected to fail: the advertised
window-sum target is off by exactly the center weight, and the two
companion tests after it pin the limit the construction actually attains.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from orbitglue import cli
from orbitglue.core import TrajectoryWindow
from orbitglue.gluing import (
    RateFunction,
    default_rate,
    fit_decay,
    fit_rate,
    glue,
    monotone_envelope,
    sparse_rate_example,
    summate,
)
from orbitglue.lemmas import (
    NeutralBranch,
    fit_exponent,
    neutral_inverse_iterates,
    neutral_one_step_bounds,
    product_bounds,
)
from orbitglue.maps import (
    HyperbolicAffine2D,
    NeutralMap,
    PiecewiseLinearMap,
    backward_window,
    forward_window,
)
from orbitglue.perturbation import PerturbationSpec, compute_gaps, generate_pseudo, upper_density
from orbitglue.shadowing import parallel_glue

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="module")
def acceptance_log(request):
    lines = []
    request.config.acceptance_lines = lines
    return lines


def _record(log, num, ok, detail):
    log.append(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def bulk_runs():
    """Rare-kick and uniform sweeps shared by criteria 4, 5, and 6.

    Only scalars and booleans are kept per run; the full reports would pin
    eighty window-100000 trajectories in memory at once.
    """
    m = PiecewiseLinearMap(2.0, 2.0, 0.5)
    rare, uniform = [], []
    t0 = time.perf_counter()
    for eps in (0.001, 0.01):
        for seed in range(20):
            spec = PerturbationSpec(kind="R", epsilon=eps, cap_d=1.0, pos_len=100_000, seed=seed)
            p = generate_pseudo(m, spec)
            rep = parallel_glue(m, p, cap_d=1.0, epsilon=eps)
            avg = next(c for c in rep.bound_checks if c.name == "average")
            dens_est = upper_density(p.moments, p.window)[1]
            gr = rep.gap_recursion
            rare.append({
                "defect": rep.defect,
                "q": rep.q_limsup_estimate,
                "bound": rep.phi_total * 1.0 * dens_est,
                "phi_total": rep.phi_total,
                "avg_passed": bool(avg.passed),
                "sound": bool(gr.sound),
                "final_ok": bool(gr.final_within_de_phi),
            })
    rare_seconds = time.perf_counter() - t0
    for eps in (0.001, 0.01):
        for seed in range(20):
            spec = PerturbationSpec(kind="U", epsilon=eps, cap_d=eps, pos_len=1500, seed=seed)
            p = generate_pseudo(m, spec)
            rep = parallel_glue(m, p, cap_d=eps, epsilon=eps)
            gr = rep.gap_recursion
            uniform.append({
                "ratio": rep.uniform_err / eps,
                "defect": rep.defect,
                "sound": bool(gr.sound),
                "final_ok": bool(gr.final_within_de_phi),
            })
    return rare, uniform, rare_seconds


def test_criterion_01_affine_strong_gluing(acceptance_log):
    rng = np.random.default_rng(20260817)
    t0 = time.perf_counter()
    n_strong = 0
    worst_dev = 0.0
    for _ in range(100):
        a1 = rng.uniform(0.0, 2.0 * math.pi)
        sep = rng.uniform(0.35, math.pi - 0.35)
        m = HyperbolicAffine2D(2.0, 0.5, shift=tuple(rng.normal(0.0, 0.5, 2)),
                               angle1=a1, angle2=a1 + sep)
        x_back = backward_window(m, rng.normal(0.0, 1.0, 2), 18)
        y_fwd = forward_window(m, rng.normal(0.0, 1.0, 2), 18)
        rep = glue(m, x_back, y_fwd, rate=RateFunction.exponential(m.cond, 2.0, 0.5))
        n_strong += rep.strong_ok
        fit = fit_rate(rep)
        if fit.kind == "exp_two_sided":
            for lam in (fit.lam_plus, 1.0 / fit.lam_minus):
                worst_dev = max(worst_dev, abs(math.log(lam) - math.log(2.0)) / math.log(2.0))
        else:
            worst_dev = math.inf
    elapsed = time.perf_counter() - t0
    ok = n_strong == 100 and worst_dev <= 0.05 and elapsed < 1.0
    _record(acceptance_log, 1, ok,
            f"100 random planar pairs: strong {n_strong}/100, "
            f"worst rate deviation {worst_dev:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_doubling_exact_halving(acceptance_log):
    m = PiecewiseLinearMap(2.0, 2.0, 0.5)
    x_back = backward_window(m, 0.3, 45)
    y_fwd = forward_window(m, 0.7, 45)
    t0 = time.perf_counter()
    rep = glue(m, x_back, y_fwd)
    elapsed = time.perf_counter() - t0
    ks = np.arange(1, 41)
    errs = rep.back_errors[45 - ks]
    worst = float(np.max(np.abs(errs - rep.anchor_distance * 2.0 ** -ks)))
    ok = worst <= 1e-12 and elapsed < 0.1
    _record(acceptance_log, 2, ok,
            f"backward errors equal anchor*2^-k to {worst:.1e} for k <= 40, {elapsed * 1e3:.1f}ms")
    assert ok


def test_criterion_03_no_decay_without_full_expansion(acceptance_log):
    # both constant orbits are genuine: 0 and 1 stay fixed for every triple
    details = []
    ok = True
    for params in ((1.8, 2.0, 0.5), (1.0, 2.0, 0.5), (0.9, 2.0, 0.5)):
        m = PiecewiseLinearMap(*params)
        x_back = TrajectoryWindow(np.zeros(201), 200, "interval_01")
        y_fwd = TrajectoryWindow(np.ones(8), 0, "interval_01")
        rep = glue(m, x_back, y_fwd, rate=RateFunction.zero(), strict=False)
        floor = float(rep.back_errors.min())
        fit = fit_decay(np.arange(200, 0, -1, dtype=float), rep.back_errors)
        summable = ((fit.kind == "exp" and fit.lam is not None and fit.lam > 1.0 + 1e-9)
                    or (fit.kind == "power" and fit.gamma is not None and fit.gamma > 1.0 + 1e-9))
        ok = ok and floor >= 0.1 and not summable
        details.append(f"a={params[0]:g} floor {floor:.2f}")
    _record(acceptance_log, 3, ok, "; ".join(details) + "; no summable decay fits")
    assert ok


def test_criterion_04_average_bound_rare_kicks(acceptance_log, bulk_runs):
    rare, _, rare_seconds = bulk_runs
    ok_defect = all(r["defect"] <= 1e-10 for r in rare)
    ok_bound = all(r["q"] <= r["bound"] and r["avg_passed"] for r in rare)
    ok_phi = all(r["phi_total"] == 2.0 for r in rare)
    ok = ok_defect and ok_bound and ok_phi and rare_seconds < 30.0
    worst_margin = max(r["q"] / r["bound"] for r in rare)
    _record(acceptance_log, 4, ok,
            f"40 rare-kick runs: true trajectories, worst Q/bound {worst_margin:.3f}, "
            f"{rare_seconds:.1f}s")
    assert ok


def test_criterion_05_uniform_bound(acceptance_log, bulk_runs):
    _, uniform, _ = bulk_runs
    worst = max(r["ratio"] for r in uniform)
    ok = worst <= 2.0 and all(r["defect"] <= 1e-10 for r in uniform)
    _record(acceptance_log, 5, ok, f"40 uniform runs: worst uniform_err/eps {worst:.3f} <= 2")
    assert ok


def test_criterion_06_gap_recursion_sound(acceptance_log, bulk_runs):
    rare, uniform, _ = bulk_runs
    runs = rare + uniform
    ok = all(r["sound"] and r["final_ok"] for r in runs)
    _record(acceptance_log, 6, ok,
            f"{len(runs)} runs: observed level gaps within recursion bounds, final <= D*e^Phi")
    assert ok


def _hover_ratio(m, rate, eps, window=2000):
    # kick every image toward 1 - s_target, the drift/kick equilibrium, so
    # the pseudo-orbit hovers where the map is slowest
    s_target = (eps / (2.0 * m.R)) ** (1.0 / (1.0 + m.alpha))
    pts = np.empty(window)
    pts[0] = m.c
    for i in range(window - 1):
        img = m.forward(pts[i])
        d = min(max((1.0 - s_target) - img, -eps), eps)
        pts[i + 1] = min(max(img + d, 0.0), 1.0)
    p = compute_gaps(m, TrajectoryWindow(pts, 0, "interval_01"))
    assert float(np.max(p.gaps, initial=0.0)) <= eps + 1e-12
    rep = parallel_glue(m, p, rate=rate, cap_d=eps, epsilon=eps)
    return rep.uniform_err / eps


def test_criterion_07_neutral_dichotomy(acceptance_log):
    m = NeutralMap(0.5, 0.5)
    rate = default_rate(m)

    # (i) weak bound holds and the observed decay is quadratic
    x_back = TrajectoryWindow(np.zeros(2001), 2000, "interval_01")
    rep = glue(m, x_back, forward_window(m, 0.3, 8), rate=rate)
    dists = np.arange(2000, 0, -1, dtype=float)
    mask = dists >= 100
    fit = fit_decay(dists[mask], rep.back_errors[mask])
    ok_weak = (rep.weak_ok and not rep.strong_ok
               and fit.gamma is not None and 1.8 <= fit.gamma <= 2.2)

    # (ii) anchor-normalized backward error escalates as the anchor shrinks
    ratios = []
    for expo in range(1, 7):
        anchor = 10.0 ** -expo
        xb = TrajectoryWindow(np.zeros(61), 60, "interval_01")
        rep2 = glue(m, xb, forward_window(m, anchor, 2), rate=RateFunction.zero())
        ratios.append(float(rep2.back_errors[10]) / anchor)
    ok_strong_fail = all(b > a for a, b in zip(ratios, ratios[1:]))

    # (iii) uniform_err/eps grows as eps shrinks for orbits hovering at the cut
    rs = [_hover_ratio(m, rate, e) for e in (1e-2, 1e-3, 1e-4)]
    ok_uniform_fail = rs[0] < rs[1] < rs[2]

    # (iv) the average bound still closes with the fitted total and 50% margin
    phi_fit = summate(rate).total
    ok_avg = True
    for seed in range(3):
        spec = PerturbationSpec(kind="R", epsilon=0.002, cap_d=0.5, pos_len=30_000, seed=seed)
        rep3 = parallel_glue(m, generate_pseudo(m, spec), rate=rate)
        bound = 1.5 * phi_fit * spec.cap_d * rep3.eps_density
        ok_avg = ok_avg and rep3.defect <= 1e-10 and rep3.q_limsup_estimate <= bound

    ok = ok_weak and ok_strong_fail and ok_uniform_fail and ok_avg
    _record(acceptance_log, 7, ok,
            f"weak holds (decay exponent {fit.gamma:.2f}), strong ratio climbs to "
            f"{ratios[-1]:.2f}, uniform_err/eps climbs to {rs[-1]:.1f}, average bound holds")
    assert ok


def test_criterion_08_product_sandwich(acceptance_log):
    rng = np.random.default_rng(8)
    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        b = rng.uniform(0.0, 2.0, n)
        prod, upper, lower = product_bounds(b)
        ok = ok and lower <= prod <= upper
        s = rng.uniform(-0.9, 2.0, n)
        prod_s, upper_s, lower_s = product_bounds(s)
        ok = ok and prod_s <= upper_s and (lower_s is None or lower_s <= prod_s)
    _record(acceptance_log, 8, ok,
            "1000 nonnegative and 1000 signed sequences inside the product bounds")
    assert ok


def test_criterion_09_neutral_one_step_and_decay(acceptance_log):
    # one-step sandwich on (v, alpha) in (0,1] x (0.1,2], three amplitudes;
    # the inverse carries the bisection's own relative tolerance
    vs = np.linspace(0.0, 1.0, 101)[1:]
    alphas = np.linspace(0.1, 2.0, 101)[1:]
    slack = 1.0 + 1e-12
    ok_grid = True
    for amp in (0.5, 1.0, 2.0):
        for a in alphas:
            nb = NeutralBranch(amp, float(a))
            for v in vs:
                u, inv, w = neutral_one_step_bounds(nb, float(v))
                ok_grid = ok_grid and u <= inv * slack and inv <= w * slack and w <= v

    ns = np.arange(10_001)
    tail = ns >= 1000
    worst_exp = 0.0
    for a in (0.25, 0.5, 0.75, 1.0):
        vals = neutral_inverse_iterates(NeutralBranch(1.0, a), 1.0, 10_000)
        gamma, _ = fit_exponent(ns[tail], vals[tail])
        worst_exp = max(worst_exp, abs(gamma * a - 1.0))
    ok_exp = worst_exp <= 0.05

    vals0 = neutral_inverse_iterates(NeutralBranch(1.0, 0.0), 1.0, 300)
    ok_zero = float(np.max(np.abs(vals0 - 2.0 ** -np.arange(301)))) <= 1e-12

    ok = ok_grid and ok_exp and ok_zero
    _record(acceptance_log, 9, ok,
            f"sandwich holds on the 100x100x3 grid, decay exponents within "
            f"{worst_exp:.1%} of 1/alpha, alpha=0 exact")
    assert ok


@pytest.fixture(scope="module")
def sparse_window_sum():
    # largest block whose position stays inside |k| <= 1e6: p_1413 = 998990
    return summate(sparse_rate_example(1413))


def test_criterion_10_sparse_counterexample(acceptance_log, sparse_window_sum):
    s_win = sparse_window_sum.total
    target = math.pi ** 2 / 3.0
    sum_gap = abs(s_win - target)
    ok_sum = sum_gap <= 2e-6

    env = monotone_envelope(sparse_rate_example(137))
    ks = np.arange(0, env.k_max + 1)
    partial = np.cumsum(env.values_on(ks) + env.values_on(-ks)) - env(0)
    harm = np.cumsum(1.0 / np.arange(1.0, 138.0))
    ok_env = bool(partial[-1] > 10.0)
    for m_blk in (10, 50, 100, 137):
        pos = m_blk * (m_blk + 1) // 2 - 1
        ok_env = ok_env and partial[pos] >= 1.0 + 2.0 * (harm[m_blk - 1] - 1.0) - 1e-9

    _record(acceptance_log, 10, ok_sum and ok_env,
            f"envelope partials track 1+2(H_m-1) and reach {partial[-1]:.3f} > 10, but the "
            f"window sum {s_win:.6f} misses the pi^2/3 target by {sum_gap:.4f}")
    assert ok_env
    # the construction sums to pi^2/3 - 1: center block contributes once, not
    # twice, so the advertised target overshoots by exactly 1; see the two
    # companion tests below for the limit the sum does attain
    assert ok_sum, (f"window sum {s_win!r} differs from pi^2/3 = {target!r} "
                    f"by {sum_gap:.6f}; it converges to pi^2/3 - 1 = {target - 1.0!r}")


def test_sparse_window_sum_attains_shifted_limit(sparse_window_sum):
    assert sparse_window_sum.tail_unobserved
    corrected = sparse_window_sum.total + 2.0 / 1413.5  # integral tail of sum j^-2
    assert abs(corrected - (math.pi ** 2 / 3.0 - 1.0)) <= 2e-6


def test_envelope_partial_sums_exceed_harmonic_floor():
    env = monotone_envelope(sparse_rate_example(137))
    ks = np.arange(0, env.k_max + 1)
    partial = np.cumsum(env.values_on(ks) + env.values_on(-ks)) - env(0)
    harm = np.cumsum(1.0 / np.arange(1.0, 138.0))
    for m_blk in (10, 50, 100, 137):
        pos = m_blk * (m_blk + 1) // 2 - 1
        assert partial[pos] >= 1.0 + 2.0 * (harm[m_blk - 1] - 1.0) - 1e-9
    assert partial[-1] > 10.0


def test_criterion_11_seeded_reruns_identical(acceptance_log, tmp_path):
    shadow_conf = tmp_path / "rerun.conf"
    shadow_conf.write_text("\n".join([
        "task = shadow",
        "map.kind = doubling",
        "perturbation.kind = R",
        "perturbation.epsilon = 0.01",
        "perturbation.D = 1.0",
        "perturbation.window = 2000",
        "perturbation.seed = 5",
        "rate.kind = auto",
        "output.prefix = rerun",
    ]) + "\n")
    cases = [
        (shadow_conf, ("rerun_shadowing", "rerun_levels", "rerun_summary")),
        (CONFIG_DIR / "glue_doubling.conf", ("glue_doubling_gluing", "glue_doubling_summary")),
    ]
    ok = True
    for conf, stems in cases:
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / conf.stem / sub
            rc = cli.run(["--config", str(conf), "--out", str(out), "--quiet", "--no-figures"])
            ok = ok and rc == 0
            outs.append(out)
        for stem in stems:
            first = (outs[0] / f"{stem}.csv").read_bytes()
            ok = ok and first == (outs[1] / f"{stem}.csv").read_bytes()
    _record(acceptance_log, 11, ok, "repeated seeded runs produce byte-identical CSVs")
    assert ok
