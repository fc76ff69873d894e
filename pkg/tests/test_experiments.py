"""Config schema, runners, persistence contract, and the CLI."""

import csv
import json
import textwrap

import pytest

from rfsurf.experiments import ExperimentConfig, load_config
from rfsurf.experiments.cli import main
from rfsurf.experiments.runner import (CSV_COLUMNS, run_coupling_scaling,
                                       run_dlr_check, run_green_study,
                                       run_ground_state_scaling,
                                       run_oracle_suite)
from rfsurf.potentials import Quadratic, QuadraticCosine

MINIMAL = """
    [experiment]
    name = "tiny"
    dimension = 1
    scales = [2, 3]
"""


def write_config(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


def read_rows(out_dir):
    with open(out_dir / "results.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


# -- config schema ---------------------------------------------------------------


def test_minimal_config_fills_defaults_and_keeps_raw_text(tmp_path):
    path = write_config(tmp_path, MINIMAL)
    cfg = load_config(path)
    assert cfg.name == "tiny"
    assert cfg.scales == (2, 3)
    assert cfg.family == "quadratic"
    assert cfg.law == "standard-gaussian"
    assert cfg.n_seeds == 1
    assert cfg.raw_text == path.read_text(encoding="utf-8")
    assert cfg.out_dir() == "runs/tiny"
    assert isinstance(cfg.potential(), Quadratic)


def test_full_config_round_trips_every_section(tmp_path):
    cfg = load_config(write_config(tmp_path, """
        [experiment]
        name = "full"
        dimension = 3
        scales = [2, 4, 8]

        [potential]
        family = "quadratic_cosine"
        kappa = 0.5

        [disorder]
        law = "rademacher"
        intensity = 2
        seeds = 4
        master_seed = 7

        [dynamics]
        dt = 0.01
        total_time = 12.5
        burn_in = 2.5
        stride = 16

        [tolerances]
        solver = 1e-9
        identity = 1e-8

        [dlr]
        resamples = 6
        inner_scale = 3

        [validation]
        dt_scale = 0.5

        [output]
        directory = "out/full"
    """))
    assert cfg.dimension == 3
    assert isinstance(cfg.potential(), QuadraticCosine)
    assert cfg.potential().kappa == 0.5
    assert cfg.intensity == 2.0
    assert cfg.n_seeds == 4
    assert cfg.master_seed == 7
    assert (cfg.dt, cfg.total_time, cfg.burn_in, cfg.stride) \
        == (0.01, 12.5, 2.5, 16)
    assert (cfg.solver_tol, cfg.identity_tol) == (1e-9, 1e-8)
    assert (cfg.n_resamples, cfg.inner_scale) == (6, 3)
    assert cfg.dt_scale == 0.5
    assert cfg.out_dir() == "out/full"


@pytest.mark.parametrize("snippet, fragment", [
    ("[mystery]\nx = 1", "unknown config section"),
    ("[disorder]\nflavor = 'x'", "unknown key"),
    ("[disorder]\nintensity = true", "must be float"),
    ("[experiment]\nname = 'x'\ndimension = '2'\nscales = [2]",
     "must be int"),
    ("[experiment]\nname = 'x'\ndimension = 2\nscales = [2, 4.5]",
     "must be integers"),
])
def test_malformed_configs_are_rejected(tmp_path, snippet, fragment):
    base = "" if snippet.startswith("[experiment]") else MINIMAL
    path = write_config(tmp_path, base + "\n" + snippet)
    with pytest.raises(ValueError, match=fragment):
        load_config(path)


def test_missing_required_keys_are_named(tmp_path):
    path = write_config(tmp_path, "[experiment]\nname = 'x'\nscales = [2]\n")
    with pytest.raises(ValueError, match="dimension"):
        load_config(path)


@pytest.mark.parametrize("kwargs", [
    {"family": "cubic"},
    {"law": "cauchy"},
    {"dimension": 0},
    {"scales": (4, 2)},
    {"scales": ()},
    {"n_seeds": 0},
    {"dt": -0.1},
    {"solver_tol": 0.0},
    {"dt_scale": 0.0},
    {"n_resamples": 0},
    {"name": ""},
])
def test_config_invariants(kwargs):
    base = dict(name="x", dimension=2, scales=(2, 4))
    base.update(kwargs)
    with pytest.raises(ValueError):
        ExperimentConfig(**base)


# -- runners and the persistence contract -------------------------------------------


GS_TINY = MINIMAL + """
    [disorder]
    seeds = 3
    master_seed = 1
"""


def test_ground_state_runner_writes_the_output_trio(tmp_path):
    cfg = load_config(write_config(tmp_path, GS_TINY))
    out = tmp_path / "run"
    series = run_ground_state_scaling(cfg, out=str(out))
    assert len(series.points) == 2

    header, rows = read_rows(out)
    assert header == list(CSV_COLUMNS)
    assert len(rows) == 6
    assert rows == sorted(rows)
    assert all(r[7] == "0.0" for r in rows)
    assert all(r[4] == "dyadic-gap" and float(r[5]) > 0.0 for r in rows)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "tiny"
    assert manifest["command"] == "ground-state"
    assert manifest["seeds"] == [0, 1, 2]
    assert manifest["config_text"] == cfg.raw_text
    assert len(manifest["config_sha256"]) == 64
    assert manifest["csv_columns"] == list(CSV_COLUMNS)

    payload = json.loads((out / "series.json").read_text())
    entry = payload["series"][0]
    assert entry["statistic"] == "dyadic-gap"
    assert [p["scale"] for p in entry["points"]] == [2, 3]
    assert not (out / "timings.json").exists()


def test_reruns_and_thread_counts_are_byte_identical(tmp_path):
    cfg = load_config(write_config(tmp_path, GS_TINY))
    outs = [tmp_path / f"run{i}" for i in range(3)]
    run_ground_state_scaling(cfg, out=str(outs[0]), threads=1)
    run_ground_state_scaling(cfg, out=str(outs[1]), threads=1)
    run_ground_state_scaling(cfg, out=str(outs[2]), threads=3)
    for name in ("results.csv", "manifest.json", "series.json"):
        reference = (outs[0] / name).read_bytes()
        assert (outs[1] / name).read_bytes() == reference
        assert (outs[2] / name).read_bytes() == reference


def test_timings_sidecar_is_opt_in(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL))
    out = tmp_path / "run"
    run_ground_state_scaling(cfg, out=str(out), timings=True)
    timings = json.loads((out / "timings.json").read_text())
    assert "total_s" in timings
    assert any(key.startswith("L2#") for key in timings)


def test_unpinned_surface_reports_a_degenerate_series(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL + """
        [disorder]
        intensity = 0.0
    """))
    out = tmp_path / "run"
    run_ground_state_scaling(cfg, out=str(out))
    _, rows = read_rows(out)
    assert all(r[5] == "0.0" for r in rows)
    entry = json.loads((out / "series.json").read_text())["series"][0]
    assert entry["degenerate"] is True
    assert entry["fits"] == {}


def test_seed_offset_relabels_the_replicates(tmp_path):
    cfg = load_config(write_config(tmp_path, GS_TINY))
    base, moved = tmp_path / "a", tmp_path / "b"
    run_ground_state_scaling(cfg, out=str(base))
    run_ground_state_scaling(cfg, out=str(moved), seed_offset=5)
    assert json.loads((moved / "manifest.json").read_text())["seeds"] \
        == [5, 6, 7]
    _, rows_a = read_rows(base)
    _, rows_b = read_rows(moved)
    assert {r[3] for r in rows_b} == {"5", "6", "7"}
    assert {r[5] for r in rows_a} != {r[5] for r in rows_b}


def test_oracle_runner_emits_exact_series_with_both_fits(tmp_path):
    cfg = load_config(write_config(tmp_path, """
        [experiment]
        name = "oracle-d2"
        dimension = 2
        scales = [2, 3, 4]
    """))
    out = tmp_path / "run"
    result = run_oracle_suite(cfg, out=str(out))
    assert set(result) == {"height-variance-center", "decorrelation",
                           "block-average"}

    payload = json.loads((out / "series.json").read_text())
    by_name = {e["statistic"]: e for e in payload["series"]}
    variance = by_name["height-variance-center"]
    assert set(variance["fits"]) == {"power_law", "log_growth"}
    assert variance["fits"]["log_growth"]["slope"] > 0.0

    _, rows = read_rows(out)
    stats = {r[4] for r in rows}
    assert stats == {"height-variance-center", "bl-margin", "decorrelation",
                     "block-average"}
    margins = [float(r[5]) for r in rows if r[4] == "bl-margin"]
    assert all(m >= -1e-12 for m in margins)
    decor = [(int(r[2]), float(r[5])) for r in rows
             if r[4] == "decorrelation"]
    assert sorted(decor) == decor and all(v > 0 for _, v in decor)


def test_green_runner_records_norms_and_residuals(tmp_path):
    cfg = load_config(write_config(tmp_path, """
        [experiment]
        name = "green-d2"
        dimension = 2
        scales = [1, 2, 3]

        [disorder]
        seeds = 2
    """))
    out = tmp_path / "run"
    run_green_study(cfg, out=str(out))
    _, rows = read_rows(out)
    residuals = [float(r[5]) for r in rows if r[4] == "identity-residual"]
    assert len(residuals) == 6
    assert all(r < 1e-9 for r in residuals)
    entry = json.loads((out / "series.json").read_text())["series"][0]
    assert entry["statistic"] == "kernel-sup-norm"
    assert entry["bounded"] is True


def test_coupling_runner_tracks_the_environment(tmp_path):
    cfg = load_config(write_config(tmp_path, """
        [experiment]
        name = "couple-d1"
        dimension = 1
        scales = [2]

        [disorder]
        seeds = 2

        [dynamics]
        total_time = 2.0
        burn_in = 1.0
    """))
    out = tmp_path / "run"
    result = run_coupling_scaling(cfg, out=str(out), threads=2)
    assert set(result) == {"sup-gradient", "height-difference"}
    _, rows = read_rows(out)
    stats = {r[4] for r in rows}
    assert stats == {"sup-gradient", "height-difference",
                     "average-difference", "env-min", "env-max"}
    envs = [float(r[5]) for r in rows if r[4].startswith("env-")]
    assert envs == [1.0] * 4


def test_dlr_runner_reports_three_statistics_per_seed(tmp_path):
    cfg = load_config(write_config(tmp_path, """
        [experiment]
        name = "dlr-d2"
        dimension = 2
        scales = [4]

        [disorder]
        seeds = 2

        [dynamics]
        total_time = 30.0
        burn_in = 5.0

        [dlr]
        resamples = 3
        inner_scale = 1
    """))
    out = tmp_path / "run"
    checks = run_dlr_check(cfg, out=str(out))
    assert len(checks) == 2
    _, rows = read_rows(out)
    assert {r[4] for r in rows} \
        == {"dlr-direct", "dlr-resampled", "dlr-discrepancy"}
    assert all(float(r[6]) > 0.0 for r in rows if r[4] != "dlr-discrepancy")


def test_dlr_runner_validates_geometry_and_duration(tmp_path):
    bad_time = load_config(write_config(tmp_path, """
        [experiment]
        name = "dlr-bad"
        dimension = 2
        scales = [4]
    """, name="a.toml"))
    with pytest.raises(ValueError, match="total_time"):
        run_dlr_check(bad_time, out=str(tmp_path / "x"))
    bad_inner = load_config(write_config(tmp_path, """
        [experiment]
        name = "dlr-bad2"
        dimension = 2
        scales = [2]

        [dynamics]
        total_time = 5.0

        [dlr]
        inner_scale = 2
    """, name="b.toml"))
    with pytest.raises(ValueError, match="inner scale"):
        run_dlr_check(bad_inner, out=str(tmp_path / "y"))


# -- command-line interface -----------------------------------------------------


def test_cli_runs_an_experiment_end_to_end(tmp_path, capsys):
    path = write_config(tmp_path, GS_TINY)
    out = tmp_path / "run"
    code = main(["ground-state", "--config", str(path), "--out", str(out)])
    assert code == 0
    assert (out / "results.csv").exists()
    assert capsys.readouterr().err == ""


def test_cli_reports_config_errors_without_tracebacks(tmp_path, capsys):
    missing = main(["oracle", "--config", str(tmp_path / "nope.toml")])
    assert missing == 2
    assert "error:" in capsys.readouterr().err

    bad = write_config(tmp_path, MINIMAL + "\n[mystery]\nx = 1\n")
    assert main(["oracle", "--config", str(bad)]) == 2
    assert "unknown config section" in capsys.readouterr().err


def test_cli_surfaces_runner_rejections(tmp_path, capsys):
    path = write_config(tmp_path, """
        [experiment]
        name = "dlr-bad"
        dimension = 2
        scales = [4]
    """)
    assert main(["dlr", "--config", str(path),
                 "--out", str(tmp_path / "x")]) == 2
    assert "total_time" in capsys.readouterr().err


def test_cli_thread_default_comes_from_the_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RFSURF_THREADS", "3")
    from rfsurf.experiments.cli import build_parser
    args = build_parser().parse_args(["oracle", "--config", "x"])
    assert args.threads == 3
    monkeypatch.setenv("RFSURF_THREADS", "banana")
    args = build_parser().parse_args(["oracle", "--config", "x"])
    assert args.threads == 1


VALIDATE_BASE = """
    [experiment]
    name = "suite"
    dimension = 2
    scales = [2]
"""


def test_validation_suite_passes_on_healthy_settings(tmp_path, capsys):
    path = write_config(tmp_path, VALIDATE_BASE)
    out = tmp_path / "run"
    assert main(["validate", "--config", str(path),
                 "--out", str(out)]) == 0
    report = json.loads((out / "validation.json").read_text())
    assert report["all_passed"] is True
    names = {c["name"] for c in report["checks"]}
    assert names == {"ground-state-oracle", "langevin-stationarity",
                     "green-identity", "dlr-consistency", "shift-covariance"}


def test_unstable_step_size_trips_the_stationarity_check(tmp_path, capsys):
    path = write_config(tmp_path, VALIDATE_BASE + """
        [validation]
        dt_scale = 2.0
    """)
    out = tmp_path / "run"
    assert main(["validate", "--config", str(path), "--out", str(out)]) == 1
    assert "langevin-stationarity" in capsys.readouterr().err
    report = json.loads((out / "validation.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert failed == {"langevin-stationarity"}


def test_loose_solver_tolerance_trips_the_identity_checks(tmp_path, capsys):
    path = write_config(tmp_path, VALIDATE_BASE + """
        [tolerances]
        solver = 1e-2
    """)
    out = tmp_path / "run"
    assert main(["validate", "--config", str(path), "--out", str(out)]) == 1
    report = json.loads((out / "validation.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "green-identity" in failed
    assert "langevin-stationarity" not in failed
