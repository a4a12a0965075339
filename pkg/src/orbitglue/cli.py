"""Config-driven experiment runner.

One task per invocation: build the configured map and inputs, run it, write
CSV reports (plus PNG figures unless disabled) into the output directory.
Config files are flat ``block.key = value`` text; canonical examples ship
under configs/.  Exit codes: 0 pass, 1 bound-check failure, 2 usage or
config error, 3 numerical failure (a partial summary row is still written).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import csvio, figures
from .gluing import (
    GluingError,
    NonSummableRateError,
    RateFunction,
    default_rate,
    fit_rate,
    glue,
    monotone_envelope,
    sparse_rate_example,
    summate,
)
from .lemmas import NeutralBranch, fit_exponent, neutral_inverse_iterates
from .maps import (
    HyperbolicAffine2D,
    NeutralMap,
    PiecewiseLinearMap,
    RootFindError,
    TorusLinearMap,
    backward_window,
    forward_window,
)
from .perturbation import PerturbationSpec, generate_pseudo
from .shadowing import consecutive_glue, parallel_glue

NAN = float("nan")
_REQUIRED = object()


class ConfigError(Exception):
    """Invalid or missing configuration; carries the source line when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ExperimentConfig:
    """Flat key-value config with per-key source lines for error messages."""

    def __init__(self, entries, lines, path="<config>"):
        self.entries = entries
        self.lines = lines
        self.path = path

    @classmethod
    def load(cls, path):
        entries, lines = {}, {}
        with open(path) as fh:
            for no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"expected 'key = value', got {line!r}", no)
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if not key or not value:
                    raise ConfigError(f"empty key or value in {line!r}", no)
                if key in entries:
                    raise ConfigError(f"duplicate key {key!r}", no)
                entries[key] = value
                lines[key] = no
        return cls(entries, lines, path)

    def line(self, key):
        return self.lines.get(key)

    def _fallback(self, key, default):
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def get_str(self, key, default=_REQUIRED):
        if key in self.entries:
            return self.entries[key]
        return self._fallback(key, default)

    def get_float(self, key, default=_REQUIRED):
        if key not in self.entries:
            return self._fallback(key, default)
        try:
            return float(self.entries[key])
        except ValueError:
            raise ConfigError(f"bad number for {key}: {self.entries[key]!r}", self.line(key)) from None

    def get_int(self, key, default=_REQUIRED):
        if key not in self.entries:
            return self._fallback(key, default)
        try:
            return int(self.entries[key])
        except ValueError:
            raise ConfigError(f"bad integer for {key}: {self.entries[key]!r}", self.line(key)) from None

    def get_floats(self, key, default=_REQUIRED):
        if key not in self.entries:
            return self._fallback(key, default)
        try:
            return [float(p) for p in self.entries[key].replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"bad number list for {key}: {self.entries[key]!r}", self.line(key)) from None

    def get_point(self, key, default=_REQUIRED):
        if key not in self.entries:
            return self._fallback(key, default)
        vals = self.get_floats(key)
        if len(vals) == 1:
            return vals[0]
        if len(vals) == 2:
            return tuple(vals)
        raise ConfigError(f"point {key} needs one or two coordinates", self.line(key))


def build_map(cfg: ExperimentConfig):
    kind = cfg.get_str("map.kind")
    where = cfg.line("map.kind")
    try:
        if kind == "doubling":
            return PiecewiseLinearMap(2.0, 2.0, 0.5)
        if kind == "piecewise_linear":
            return PiecewiseLinearMap(cfg.get_float("map.a"), cfg.get_float("map.b"),
                                      cfg.get_float("map.c", 0.5))
        if kind == "neutral":
            return NeutralMap(cfg.get_float("map.alpha"), cfg.get_float("map.c", 0.5))
        if kind == "affine":
            shift = cfg.get_floats("map.shift", [0.0, 0.0])
            if len(shift) != 2:
                raise ConfigError("map.shift needs two numbers", cfg.line("map.shift"))
            return HyperbolicAffine2D(cfg.get_float("map.lam1"), cfg.get_float("map.lam2"),
                                      shift=tuple(shift),
                                      angle1=cfg.get_float("map.angle1", 0.0),
                                      angle2=cfg.get_float("map.angle2", math.pi / 2))
        if kind == "torus":
            m = [int(v) for v in cfg.get_floats("map.matrix", [2, 1, 1, 1])]
            if len(m) != 4:
                raise ConfigError("map.matrix needs four integers", cfg.line("map.matrix"))
            return TorusLinearMap(((m[0], m[1]), (m[2], m[3])))
    except ValueError as exc:
        raise ConfigError(f"invalid map parameters: {exc}", where) from exc
    raise ConfigError(f"unknown map.kind {kind!r}", where)


def build_rate(cfg: ExperimentConfig, dyn_map) -> RateFunction:
    kind = cfg.get_str("rate.kind", "auto")
    where = cfg.line("rate.kind")
    try:
        if kind == "auto":
            return default_rate(dyn_map)
        if kind == "zero":
            return RateFunction.zero()
        if kind == "exp":
            return RateFunction.exponential(cfg.get_float("rate.C", 1.0),
                                            cfg.get_float("rate.lam_plus", None),
                                            cfg.get_float("rate.lam_minus", None))
        if kind == "power":
            return RateFunction.power(cfg.get_float("rate.C", 1.0),
                                      cfg.get_float("rate.gamma"),
                                      cfg.get_str("rate.side", "backward"))
    except ValueError as exc:
        raise ConfigError(f"invalid rate parameters: {exc}", where) from exc
    raise ConfigError(f"unknown rate.kind {kind!r}", where)


def build_pseudo(cfg: ExperimentConfig, dyn_map, seed: int):
    where = cfg.line("perturbation.kind")
    try:
        spec = PerturbationSpec(kind=cfg.get_str("perturbation.kind", "R"),
                                epsilon=cfg.get_float("perturbation.epsilon"),
                                cap_d=cfg.get_float("perturbation.D", 1.0),
                                neg_len=cfg.get_int("perturbation.neg_len", 0),
                                pos_len=cfg.get_int("perturbation.window", 1000),
                                seed=seed,
                                start=cfg.get_point("perturbation.start", None))
        spec.validate_for(dyn_map.space_tag)
    except ValueError as exc:
        raise ConfigError(f"invalid perturbation: {exc}", where) from exc
    return generate_pseudo(dyn_map, spec)


def _task_glue(cfg, seed, out_dir, prefix, make_figs, say, with_fit=False):
    dyn_map = build_map(cfg)
    back_len = cfg.get_int("glue.back_len", 50)
    fwd_len = cfg.get_int("glue.fwd_len", 50)
    try:
        x_back = backward_window(dyn_map, cfg.get_point("glue.x0"), back_len,
                                 cfg.get_str("glue.x_branch", "left"))
        y_fwd = forward_window(dyn_map, cfg.get_point("glue.y0"), fwd_len)
    except ValueError as exc:
        raise ConfigError(f"invalid glue window: {exc}", cfg.line("glue.x0")) from exc
    rate = build_rate(cfg, dyn_map)
    report = glue(dyn_map, x_back, y_fwd, rate=rate,
                  eps0=cfg.get_float("tolerances.eps0", 0.25))

    path = os.path.join(out_dir, f"{prefix}_gluing.csv")
    csvio.write_gluing_csv(path, report, rate)
    say(f"wrote {path}")
    fitted = None
    if with_fit:
        fitted = fit_rate(report)
        ks = np.arange(-back_len, fwd_len)
        path = os.path.join(out_dir, f"{prefix}_rates.csv")
        csvio.write_csv(path, ("k", "phi_theory", "phi_fitted"),
                        zip(ks, rate.values_on(ks), fitted.values_on(ks)))
        say(f"wrote {path}")
    if make_figs:
        path = os.path.join(out_dir, f"{prefix}_decay.png")
        figures.save_gluing_decay(path, report, rate, fitted)
        say(f"wrote {path}")

    _, errs = report.errors_by_k()
    max_err = float(np.max(errs)) if len(errs) else 0.0
    anchor = report.anchor_distance
    passed = bool(report.strong_ok)
    row = csvio.summary_row("rates" if with_fit else "glue", cfg.get_str("map.kind"),
                            anchor, NAN, seed, back_len + fwd_len, max_err, NAN, NAN,
                            max_err / anchor if anchor > 0 else 0.0,
                            summate(rate).total, passed)
    return passed, row


def _task_rates(cfg, seed, out_dir, prefix, make_figs, say):
    return _task_glue(cfg, seed, out_dir, prefix, make_figs, say, with_fit=True)


def _task_shadow(cfg, seed, out_dir, prefix, make_figs, say):
    dyn_map = build_map(cfg)
    pseudo = build_pseudo(cfg, dyn_map, seed)
    rate = build_rate(cfg, dyn_map)
    kind = cfg.get_str("perturbation.kind", "R")
    epsilon = cfg.get_float("perturbation.epsilon")
    # for uniform inputs the gap bound doubles as the amplitude cap
    cap = epsilon if kind == "U" else cfg.get_float("perturbation.D", 1.0)
    method = cfg.get_str("shadow.method", "parallel")
    if method not in ("parallel", "consecutive"):
        raise ConfigError(f"unknown shadow.method {method!r}", cfg.line("shadow.method"))
    runner = parallel_glue if method == "parallel" else consecutive_glue
    report = runner(dyn_map, pseudo, rate=rate, cap_d=cap, epsilon=epsilon,
                    eps0=cfg.get_float("tolerances.eps0", 0.25),
                    trunc_eps=cfg.get_float("tolerances.trunc_eps", 1e-15))

    path = os.path.join(out_dir, f"{prefix}_shadowing.csv")
    csvio.write_shadowing_csv(path, report)
    say(f"wrote {path}")
    path = os.path.join(out_dir, f"{prefix}_levels.csv")
    csvio.write_levels_csv(path, report)
    say(f"wrote {path}")
    if make_figs:
        path = os.path.join(out_dir, f"{prefix}_overview.png")
        figures.save_shadowing_overview(path, report)
        say(f"wrote {path}")
        path = os.path.join(out_dir, f"{prefix}_levels.png")
        figures.save_level_gaps(path, report)
        say(f"wrote {path}")

    check_name = "uniform" if kind == "U" else "average"
    check = next(c for c in report.bound_checks if c.name == check_name)
    passed = bool(check.passed)
    if report.phi_one_warning:
        say("warning: rate is not below 1 at spacing 1; consecutive welds may not contract")
    row = csvio.summary_row("shadow", cfg.get_str("map.kind"), epsilon, cap, seed,
                            len(report.y), report.uniform_err, report.q_limsup_estimate,
                            report.limit_err_estimate,
                            check.observed / epsilon if epsilon > 0 else 0.0,
                            check.bound, passed)
    return passed, row


def _task_lemmas(cfg, seed, out_dir, prefix, make_figs, say):
    alphas = cfg.get_floats("lemmas.alphas", [0.25, 0.5, 0.75, 1.0])
    amp = cfg.get_float("lemmas.R", 1.0)
    n_max = cfg.get_int("lemmas.n_max", 2000)
    v0 = cfg.get_float("lemmas.v0", 1.0)
    if n_max < 10:
        raise ConfigError("lemmas.n_max must be at least 10", cfg.line("lemmas.n_max"))

    rows, curves = [], []
    worst = 0.0
    for a in alphas:
        try:
            nb = NeutralBranch(amp, a)
            iters = neutral_inverse_iterates(nb, v0, n_max)
        except ValueError as exc:
            raise ConfigError(f"invalid lemma sweep: {exc}", cfg.line("lemmas.alphas")) from exc
        ns = np.arange(n_max + 1)
        if a > 0:
            tail = ns >= max(8, n_max // 10)
            gamma, _ = fit_exponent(ns[tail], iters[tail])
            worst = max(worst, abs(gamma * a - 1.0))
        else:
            gamma = NAN
        rows.extend((a, amp, int(n), iters[n], gamma) for n in ns)
        curves.append((f"alpha={a:g}", ns[1:], iters[1:]))

    path = os.path.join(out_dir, f"{prefix}_lemmas.csv")
    csvio.write_lemma_csv(path, rows)
    say(f"wrote {path}")
    if make_figs:
        path = os.path.join(out_dir, f"{prefix}_decay.png")
        figures.save_lemma_decay(path, curves)
        say(f"wrote {path}")

    passed = worst <= 0.05
    row = csvio.summary_row("lemmas", "neutral_branch", NAN, NAN, seed, n_max,
                            worst, NAN, NAN, NAN, 0.05, passed)
    return passed, row


def _task_envelope(cfg, seed, out_dir, prefix, make_figs, say):
    max_block = cfg.get_int("envelope.max_block", 137)
    try:
        rate = sparse_rate_example(max_block)
    except ValueError as exc:
        raise ConfigError(str(exc), cfg.line("envelope.max_block")) from exc
    env = monotone_envelope(rate)

    path = os.path.join(out_dir, f"{prefix}_phi.csv")
    csvio.write_rate_csv(path, rate, -rate.k_max, rate.k_max)
    say(f"wrote {path}")
    path = os.path.join(out_dir, f"{prefix}_envelope.csv")
    csvio.write_envelope_csv(path, rate, env)
    say(f"wrote {path}")
    if make_figs:
        path = os.path.join(out_dir, f"{prefix}_envelope.png")
        figures.save_envelope(path, rate, env)
        say(f"wrote {path}")

    kp = np.arange(0, env.k_max + 1)
    partial_final = float(np.sum(env.values_on(kp)) + np.sum(env.values_on(-kp)) - env(0))
    passed = partial_final > 10.0
    row = csvio.summary_row("envelope", "sparse_rate", NAN, NAN, seed,
                            2 * rate.k_max + 1, NAN, NAN, NAN, partial_final, 10.0, passed)
    return passed, row


_RUNNERS = {
    "glue": _task_glue,
    "shadow": _task_shadow,
    "rates": _task_rates,
    "lemmas": _task_lemmas,
    "envelope": _task_envelope,
}


def _soft_float(cfg, key):
    try:
        return cfg.get_float(key, NAN)
    except ConfigError:
        return NAN


def _fail_row(cfg, task, seed):
    try:
        window = cfg.get_int("perturbation.window", 0)
    except ConfigError:
        window = 0
    return csvio.summary_row(task, cfg.get_str("map.kind", "?"),
                             _soft_float(cfg, "perturbation.epsilon"),
                             _soft_float(cfg, "perturbation.D"),
                             seed, window, NAN, NAN, NAN, NAN, NAN, "fail")


def _config_message(path, exc):
    where = f"{path}:{exc.line}" if exc.line else path
    return f"config error: {where}: {exc}"


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbitglue",
        description="Run one gluing/shadowing experiment from a config file.")
    parser.add_argument("--config", required=True, help="flat 'block.key = value' config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config RNG seed")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    args = parser.parse_args(argv)

    def say(msg):
        if not args.quiet:
            print(msg)

    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(_config_message(args.config, exc), file=sys.stderr)
        return 2

    try:
        task = cfg.get_str("task")
        if task not in _RUNNERS:
            raise ConfigError(f"unknown task {task!r}, expected one of {sorted(_RUNNERS)}",
                              cfg.line("task"))
        seed = args.seed if args.seed is not None else cfg.get_int("perturbation.seed", 0)
        prefix = cfg.get_str("output.prefix", task)
    except ConfigError as exc:
        print(_config_message(args.config, exc), file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, f"{prefix}_summary.csv")
    try:
        passed, row = _RUNNERS[task](cfg, seed, args.out, prefix, not args.no_figures, say)
    except ConfigError as exc:
        print(_config_message(args.config, exc), file=sys.stderr)
        return 2
    except NonSummableRateError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GluingError, RootFindError) as exc:
        csvio.write_summary_csv(summary_path, [_fail_row(cfg, task, seed)])
        print(f"numerical failure: {exc}", file=sys.stderr)
        say(f"wrote {summary_path}")
        return 3

    csvio.write_summary_csv(summary_path, [row])
    say(f"wrote {summary_path}")
    say(f"{task}: {'pass' if passed else 'bound check failed'}")
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
