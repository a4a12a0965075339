"""End-to-end tests for the config-driven experiment runner.

Everything goes through cli.run(argv) in-process; files land in tmp_path.
"""

from pathlib import Path

import pytest

from orbitglue import cli
from orbitglue.cli import ConfigError, ExperimentConfig
from orbitglue.csvio import SUMMARY_HEADER

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

SMALL_SHADOW = [
    "task = shadow",
    "map.kind = doubling",
    "perturbation.kind = R",
    "perturbation.epsilon = 0.01",
    "perturbation.D = 1.0",
    "perturbation.window = 2000",
    "perturbation.seed = 1",
    "rate.kind = auto",
    "output.prefix = small",
]


def write_conf(tmp_path, lines, name="exp.conf"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def run_quiet(conf, out, *extra):
    return cli.run(["--config", str(conf), "--out", str(out), "--quiet", *extra])


def summary_lines(out_dir, prefix):
    text = (Path(out_dir) / f"{prefix}_summary.csv").read_text()
    lines = text.splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# --- config file parsing ---


def test_load_skips_comments_and_records_lines(tmp_path):
    conf = write_conf(tmp_path, ["# comment", "", "task = glue", "map.kind = doubling"])
    cfg = ExperimentConfig.load(conf)
    assert cfg.entries == {"task": "glue", "map.kind": "doubling"}
    assert cfg.line("task") == 3
    assert cfg.line("map.kind") == 4
    assert cfg.line("absent") is None


def test_typed_getters_and_defaults(tmp_path):
    conf = write_conf(tmp_path, [
        "task = glue",
        "glue.back_len = 12",
        "lemmas.alphas = 0.25, 0.5 1.0",
        "glue.x0 = 0.4 -0.2",
        "glue.y0 = 0.7",
    ])
    cfg = ExperimentConfig.load(conf)
    assert cfg.get_str("task") == "glue"
    assert cfg.get_int("glue.back_len") == 12
    assert cfg.get_floats("lemmas.alphas") == [0.25, 0.5, 1.0]
    assert cfg.get_point("glue.x0") == (0.4, -0.2)
    assert cfg.get_point("glue.y0") == 0.7
    assert cfg.get_str("rate.kind", "auto") == "auto"
    assert cfg.get_float("tolerances.eps0", 0.25) == 0.25
    with pytest.raises(ConfigError, match="missing required key"):
        cfg.get_float("perturbation.epsilon")


@pytest.mark.parametrize("lines,match", [
    (["task glue"], "expected 'key = value'"),
    (["task ="], "empty key or value"),
    (["task = glue", "task = shadow"], "duplicate key"),
])
def test_malformed_config_lines(tmp_path, lines, match):
    conf = write_conf(tmp_path, lines)
    with pytest.raises(ConfigError, match=match) as info:
        ExperimentConfig.load(conf)
    assert info.value.line is not None


def test_point_rejects_three_coordinates(tmp_path):
    conf = write_conf(tmp_path, ["glue.x0 = 0.1 0.2 0.3"])
    cfg = ExperimentConfig.load(conf)
    with pytest.raises(ConfigError, match="one or two coordinates"):
        cfg.get_point("glue.x0")


# --- usage and config errors exit 2 ---


def test_missing_config_file(tmp_path, capsys):
    rc = cli.run(["--config", str(tmp_path / "nope.conf"), "--out", str(tmp_path)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_bad_number_reports_path_and_line(tmp_path, capsys):
    conf = write_conf(tmp_path, [
        "task = shadow",
        "map.kind = doubling",
        "perturbation.epsilon = lots",
    ])
    rc = run_quiet(conf, tmp_path / "out")
    err = capsys.readouterr().err
    assert rc == 2
    assert f"config error: {conf}:3:" in err
    assert "perturbation.epsilon" in err


@pytest.mark.parametrize("lines,match", [
    (["task = fly", "map.kind = doubling"], "unknown task"),
    (["task = glue", "map.kind = escalator", "glue.x0 = 0.3", "glue.y0 = 0.7"],
     "unknown map.kind"),
    (["task = shadow", "map.kind = doubling", "shadow.method = zigzag",
      "perturbation.epsilon = 0.01", "perturbation.window = 100"],
     "unknown shadow.method"),
    (["task = glue", "map.kind = doubling", "glue.x0 = 0.3", "glue.y0 = 0.7",
      "rate.kind = sideways"], "unknown rate.kind"),
])
def test_unknown_names_exit_two(tmp_path, capsys, lines, match):
    rc = run_quiet(write_conf(tmp_path, lines), tmp_path / "out")
    err = capsys.readouterr().err
    assert rc == 2
    assert "config error" in err and match in err


def test_auto_rate_requires_full_branches(tmp_path, capsys):
    # contraction factors are only defined when both branches cover [0,1]
    conf = write_conf(tmp_path, [
        "task = glue",
        "map.kind = piecewise_linear",
        "map.a = 1.8",
        "map.b = 2.0",
        "glue.x0 = 0.0",
        "glue.y0 = 0.9",
        "glue.back_len = 5",
        "glue.fwd_len = 5",
    ])
    rc = run_quiet(conf, tmp_path / "out")
    err = capsys.readouterr().err
    assert rc == 2
    assert "invalid rate parameters" in err


def test_non_summable_power_rate_exits_two(tmp_path, capsys):
    conf = write_conf(tmp_path, [
        "task = glue",
        "map.kind = doubling",
        "glue.x0 = 0.3",
        "glue.y0 = 0.7",
        "glue.back_len = 5",
        "glue.fwd_len = 5",
        "rate.kind = power",
        "rate.gamma = 0.8",
    ])
    rc = run_quiet(conf, tmp_path / "out")
    err = capsys.readouterr().err
    assert rc == 2
    assert "config error" in err


# --- numerical failure exits 3 with a partial summary row ---


def test_torus_gap_beyond_radius_exits_three(tmp_path, capsys):
    # amplitude 0.6 exceeds the admissible anchor distance on the torus, so
    # some weld is eventually rejected; the summary row must still appear
    conf = write_conf(tmp_path, [
        "task = shadow",
        "map.kind = torus",
        "perturbation.kind = R",
        "perturbation.epsilon = 0.02",
        "perturbation.D = 0.6",
        "perturbation.window = 3000",
        "perturbation.seed = 3",
        "rate.kind = auto",
        "output.prefix = wide",
    ])
    rc = run_quiet(conf, tmp_path)
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err
    header, rows = summary_lines(tmp_path, "wide")
    assert header == list(SUMMARY_HEADER)
    assert len(rows) == 1
    row = rows[0]
    assert row[:6] == ["shadow", "torus", "0.02", "0.6", "3", "3000"]
    assert row[-1] == "fail"
    assert row[6] == "nan"


# --- bound-check failure exits 1 ---


def test_failed_bound_check_exits_one(tmp_path):
    # a tiny C makes the strong envelope impossible at the anchor itself
    conf = write_conf(tmp_path, [
        "task = glue",
        "map.kind = doubling",
        "glue.x0 = 0.3",
        "glue.y0 = 0.7",
        "glue.back_len = 10",
        "glue.fwd_len = 10",
        "rate.kind = exp",
        "rate.C = 0.01",
        "rate.lam_plus = 2.0",
        "rate.lam_minus = 0.5",
        "output.prefix = tight",
    ])
    rc = run_quiet(conf, tmp_path)
    assert rc == 1
    _, rows = summary_lines(tmp_path, "tight")
    assert rows[0][-1] == "false"


# --- shipped configs run clean end to end ---


@pytest.mark.parametrize("name,task,prefix,parts", [
    ("glue_doubling.conf", "glue", "glue_doubling", ["gluing"]),
    ("shadow_doubling.conf", "shadow", "shadow_doubling", ["shadowing", "levels"]),
    ("rates_affine.conf", "rates", "rates_affine", ["gluing", "rates"]),
    ("lemmas_neutral.conf", "lemmas", "lemmas_neutral", ["lemmas"]),
    ("envelope_sparse.conf", "envelope", "envelope_sparse", ["phi", "envelope"]),
])
def test_shipped_configs_pass(tmp_path, name, task, prefix, parts):
    rc = run_quiet(CONFIG_DIR / name, tmp_path, "--no-figures")
    assert rc == 0
    for part in parts:
        assert (tmp_path / f"{prefix}_{part}.csv").is_file()
    header, rows = summary_lines(tmp_path, prefix)
    assert header == list(SUMMARY_HEADER)
    assert len(rows) == 1 and len(rows[0]) == len(SUMMARY_HEADER)
    assert rows[0][0] == task
    assert rows[0][-1] == "true"
    assert list(tmp_path.glob("*.png")) == []


def test_progress_lines_name_outputs(tmp_path, capsys):
    rc = cli.run(["--config", str(CONFIG_DIR / "glue_doubling.conf"),
                  "--out", str(tmp_path), "--no-figures"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "glue_doubling_summary.csv" in out
    assert "glue: pass" in out


# --- figures ---


def test_glue_figure_rendered_by_default(tmp_path):
    rc = run_quiet(CONFIG_DIR / "glue_doubling.conf", tmp_path)
    assert rc == 0
    png = tmp_path / "glue_doubling_decay.png"
    assert png.is_file() and png.stat().st_size > 0


def test_shadow_figures_rendered_by_default(tmp_path):
    conf = write_conf(tmp_path, SMALL_SHADOW)
    rc = run_quiet(conf, tmp_path / "out")
    assert rc == 0
    for stem in ("small_overview", "small_levels"):
        png = tmp_path / "out" / f"{stem}.png"
        assert png.is_file() and png.stat().st_size > 0


# --- determinism and seeding ---


def test_same_seed_reruns_are_byte_identical(tmp_path):
    conf = write_conf(tmp_path, SMALL_SHADOW)
    assert run_quiet(conf, tmp_path / "a" / "deep", "--no-figures") == 0
    assert run_quiet(conf, tmp_path / "b", "--no-figures") == 0
    for stem in ("small_shadowing", "small_levels", "small_summary"):
        first = (tmp_path / "a" / "deep" / f"{stem}.csv").read_bytes()
        second = (tmp_path / "b" / f"{stem}.csv").read_bytes()
        assert first == second


def test_seed_flag_overrides_config(tmp_path):
    conf = write_conf(tmp_path, SMALL_SHADOW)
    assert run_quiet(conf, tmp_path / "base", "--no-figures") == 0
    assert run_quiet(conf, tmp_path / "over", "--no-figures", "--seed", "7") == 0
    _, rows = summary_lines(tmp_path / "over", "small")
    assert rows[0][SUMMARY_HEADER.index("seed")] == "7"
    base = (tmp_path / "base" / "small_shadowing.csv").read_bytes()
    over = (tmp_path / "over" / "small_shadowing.csv").read_bytes()
    assert base != over
