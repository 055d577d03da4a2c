"""Experiment harness: configs, scenario generation, CSV output, CLI."""

import pytest

from mec_priority_pricing.cli import EXIT_CONFIG, main
from mec_priority_pricing.experiments import (
    ALL_SCHEMES,
    ConfigError,
    CURVES_HEADER,
    ExperimentConfig,
    RESULTS_HEADER,
    SUMMARY_HEADER,
    TRACE_HEADER,
    build_config,
    export_suite,
    export_trace_csv,
    generate_scenario,
    parse_config_file,
    run_suite,
    utility_curves,
)

TINY = dict(n_users=10, schemes=("local-only", "selfish-single",
                                 "social-single", "priority-social",
                                 "priority-learned"))


@pytest.fixture(scope="module")
def tiny_result():
    return run_suite(ExperimentConfig(**TINY))


# -- config handling --------------------------------------------------------

def test_parse_config_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# comment\nn_users = 12\n\ntx_scale=1.5  # inline\n")
    assert parse_config_file(str(p)) == {"n_users": "12", "tx_scale": "1.5"}
    p.write_text("n_users 12\n")
    with pytest.raises(ConfigError):
        parse_config_file(str(p))


def test_build_config_coercion_and_overrides():
    cfg = build_config({"n_users": "12", "tx_scale": "1.5",
                        "schemes": "local-only, social-single"},
                       n_users=7)
    assert cfg.n_users == 7                      # override wins
    assert cfg.tx_scale == 1.5
    assert cfg.schemes == ("local-only", "social-single")
    with pytest.raises(ConfigError):
        build_config({"bogus_key": "1"})
    with pytest.raises(ConfigError):
        build_config({"schemes": "teleport"})
    with pytest.raises(ConfigError):
        build_config({}, n_users=0)


def test_config_defaults_match_reference_set():
    cfg = ExperimentConfig()
    assert (cfg.lambda_a, cfg.L_a, cfg.B_a) == (0.01, 100e3, 8250.0)
    assert cfg.system_params().mu_B == pytest.approx(3e9 / 6.6e9)
    assert cfg.schemes == ALL_SCHEMES


# -- scenario generation ----------------------------------------------------

def test_generate_scenario_deterministic():
    cfg = ExperimentConfig(n_users=30)
    a = generate_scenario(cfg)
    b = generate_scenario(cfg)
    assert [u.d for u in a.users] == [u.d for u in b.users]
    c = generate_scenario(ExperimentConfig(n_users=30, placement_seed=9))
    assert [u.d for u in a.users] != [u.d for u in c.users]


def test_generate_scenario_population():
    cfg = ExperimentConfig(n_users=40, r_min=12.0, r_max=60.0)
    scn = generate_scenario(cfg)
    assert len(scn.users) == 40
    assert all(12.0 <= u.d <= 60.0 for u in scn.users)
    assert [u.c_d for u in scn.users[:20]] == [0.9] * 20
    assert [u.c_d for u in scn.users[20:]] == [0.1] * 20
    assert [u.id for u in scn.users] == list(range(40))


# -- suite execution --------------------------------------------------------

def test_suite_structure(tiny_result):
    r = tiny_result
    assert [s.scheme for s in r.summaries] == list(TINY["schemes"])
    assert all(s.status == "ok" for s in r.summaries)
    assert len(r.rows) == 10 * len(TINY["schemes"])
    assert r.trace is not None and len(r.trace) > 0
    assert len(r.curves) == 3 * 200


def test_local_only_rows(tiny_result):
    rows = [r for r in tiny_result.rows if r.scheme == "local-only"]
    assert all(r.x == 0.0 and r.welfare == 0.0 for r in rows)
    assert all(r.cost_pct_of_local == 100.0 for r in rows)


def test_row_cost_accounting(tiny_result):
    # cost_per_job + welfare must equal the user's local-only cost
    by_user = {r.user_id: r for r in tiny_result.rows
               if r.scheme == "local-only"}
    for r in tiny_result.rows:
        local = by_user[r.user_id].cost_per_job
        assert r.cost_per_job + r.welfare == pytest.approx(local, rel=1e-9)
        assert r.cost_pct_of_local == pytest.approx(
            100.0 * r.cost_per_job / local, rel=1e-9)


def test_failed_scheme_is_isolated(monkeypatch):
    import mec_priority_pricing.experiments as exp

    def boom(*a, **k):
        raise RuntimeError("forced failure")

    monkeypatch.setattr(exp, "solve_selfish_single_class", boom)
    r = run_suite(ExperimentConfig(n_users=5, schemes=(
        "local-only", "selfish-single", "social-single")))
    status = {s.scheme: s.status for s in r.summaries}
    assert status["selfish-single"].startswith("error:")
    assert status["local-only"] == "ok" and status["social-single"] == "ok"


def test_utility_curves_shape():
    curves = utility_curves(ExperimentConfig(), distances=(20.0,),
                            n_points=50)
    d, x, u = zip(*curves)
    assert set(d) == {20.0}
    assert x[0] == 0.0 and u[0] == 0.0
    assert len(curves) == 50


# -- CSV emission -----------------------------------------------------------

def test_export_round_trip(tiny_result, tmp_path):
    export_suite(tiny_result, str(tmp_path))
    results = (tmp_path / "results.csv").read_text().splitlines()
    assert results[0] == RESULTS_HEADER
    assert len(results) == 1 + len(tiny_result.rows)
    # repr-formatted floats reparse exactly
    first = tiny_result.rows[0]
    cells = results[1].split(",")
    assert cells[0] == first.scheme
    assert float(cells[2]) == first.distance_m
    assert float(cells[5]) == first.x
    assert float(cells[8]) == first.welfare

    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == SUMMARY_HEADER
    assert len(summary) == 1 + len(tiny_result.summaries)

    trace = (tmp_path / "trace.csv").read_text().splitlines()
    assert trace[0] == TRACE_HEADER
    assert len(trace) == 1 + len(tiny_result.trace)

    curves = (tmp_path / "utility_curves.csv").read_text().splitlines()
    assert curves[0] == CURVES_HEADER
    assert len(curves) == 1 + len(tiny_result.curves)


def test_export_empty_trace(tmp_path):
    path = tmp_path / "trace.csv"
    export_trace_csv(None, str(path))
    assert path.read_text() == TRACE_HEADER + "\n"


# -- CLI --------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n_users = 8\nschemes = local-only, social-single\n")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "res")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "social-single: ok" in out
    assert (tmp_path / "res" / "summary.csv").exists()


def test_cli_learn(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n_users = 8\n")
    rc = main(["learn", "--config", str(cfg), "--out", str(tmp_path / "res")])
    assert rc == 0
    assert "converged after" in capsys.readouterr().out
    assert (tmp_path / "res" / "trace.csv").exists()


def test_cli_simulate(capsys):
    rc = main(["simulate", "--rate-h", "0.1", "--rate-l", "0.05",
               "--horizon", "20000"])
    assert rc == 0
    assert "mean_sojourn_H=" in capsys.readouterr().out


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n_users = 0\n")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "res")])
    assert rc == EXIT_CONFIG
    assert "error-category=config" in capsys.readouterr().err


def test_cli_seed_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n_users = 6\nschemes = social-single\n")
    outs = []
    for seed in (1, 2):
        rc = main(["run", "--config", str(cfg), "--seed", str(seed),
                   "--out", str(tmp_path / f"res{seed}")])
        assert rc == 0
        outs.append((tmp_path / f"res{seed}" / "results.csv").read_text())
    assert outs[0] != outs[1]
