import json
import subprocess
import sys

import numpy as np
import pytest

from mmsp_offload.cli import EXIT_NOT_CONVERGED, EXIT_UNSTABLE, main
from mmsp_offload.scenarios import PRESETS, parse_tau_grid
from mmsp_offload.sweep import COLUMNS, SweepResult, increments, sweep
from mmsp_offload import ConfigError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_report(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--scenario", "pedestrian", "--tau", "100")
    assert code == 0
    lines = {ln.split()[0]: ln.split()[1:] for ln in out.splitlines()[1:]}
    assert lines["D"][0] == "25.66" and lines["eta"][0] == "0.4232"
    assert "CTMC" in " ".join(lines["D_little"])


def test_analyze_json_mm1(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--scenario", "vehicular", "--tau", "1e-6", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["D"] == pytest.approx(2.155, abs=5e-4)
    assert data["eta"] == pytest.approx(0.307, abs=5e-4)


def test_instability_exit_code(capsys):
    code, _, err = run_cli(capsys, "analyze", "--f-c", "0.007", "--f-f", "0.016", "--mu1", "0.564",
                           "--mu2", "0.564", "--lambda", "0.6", "--tau", "1e6")
    assert code == EXIT_UNSTABLE == 2
    assert "lambda=0.6" in err and "0.1717" in err


def test_nonconvergence_exit_code(capsys):
    code, _, err = run_cli(capsys, "analyze", "--scenario", "pedestrian", "--tau", "100",
                           "--lambda", "0.4024450")
    assert code == EXIT_NOT_CONVERGED == 3
    assert "converge" in err


def test_missing_channel_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "analyze", "--tau", "1")
    assert code == 1 and "f-c" in err


def test_precedence_flags_over_config_over_preset(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lambda": 0.2, "mu2": 1.28, "tau": 10}))
    code, out, _ = run_cli(capsys, "analyze", "--scenario", "vehicular", "--config", str(cfg),
                           "--lambda", "0.05", "--json")
    data = json.loads(out)
    assert code == 0
    assert (data["f_C"], data["lam"], data["mu2"], data["mu1"], data["tau"]) == (0.035, 0.05, 1.28, 0.564, 10.0)


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"speed": 3}))
    code, _, err = run_cli(capsys, "analyze", "--config", str(cfg), "--tau", "1")
    assert code == 1 and "speed" in err


def test_dump_distribution_and_diagnostics(tmp_path, capsys):
    path = tmp_path / "p.csv"
    code, out, _ = run_cli(capsys, "analyze", "--scenario", "pedestrian", "--tau", "100", "--json",
                           "--diagnostics", "--dump-distribution", str(path))
    data = json.loads(out)
    assert code == 0 and path.read_text().startswith("n,p0,p1,p2")
    assert set(data["diagnostics"]) == {"params", "start_service", "waiting_time"}


def test_sweep_csv_round_trip(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, _ = run_cli(capsys, "sweep", "--scenario", "pedestrian", "--tau-grid", "1,10,100",
                         "--simulate", "--horizon", "3000", "--replications", "3", "--out", str(path))
    assert code == 0
    header = path.read_text().splitlines()[0]
    assert tuple(header.split(",")) == COLUMNS
    back = SweepResult.from_csv(path)
    assert [r["method"] for r in back.rows] == ["analytic", "simulation"] * 3
    again = tmp_path / "t.csv"
    back.to_csv(again)
    assert again.read_text() == path.read_text()
    sim = back.select("pedestrian", "simulation")[0]
    assert sim["D_ci_low"] <= sim["D"] <= sim["D_ci_high"]


def test_sweep_to_stdout_is_full_precision(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--scenario", "vehicular", "--tau-grid", "logspace:1:100:3")
    rows = out.strip().splitlines()
    assert code == 0 and len(rows) == 4
    assert float(rows[1].split(",")[3]) == 1.0
    assert len(rows[1].split(",")[15]) > 10


def test_sweep_records_errors_and_continues():
    sc = PRESETS["pedestrian"].with_rates(lam=0.3)
    res = sweep(sc, tau_grid=(0.1, 1e4))
    first, last = res.rows
    assert first["error"] == "" and first["D"] > 0
    assert last["error"].startswith("InstabilityError") and last["D"] is None


def test_increments_helper():
    res = sweep(PRESETS["vehicular"])
    inc = increments(res, "vehicular")
    assert 0.6 < inc["eta"] < 0.8


def test_compare_subcommand(capsys):
    code, out, _ = run_cli(capsys, "compare", "--scenario", "pedestrian", "--tau", "100", "--json")
    table = json.loads(out)
    assert code == 0
    assert [r["quantity"] for r in table] == ["D", "W", "eta", "pi0", "pi1", "pi2", "p00", "p01", "p02"]
    assert all(r["inside"] for r in table)


def test_compare_short_horizon_still_contains(capsys):
    code, out, _ = run_cli(capsys, "compare", "--scenario", "pedestrian", "--tau", "100",
                           "--horizon", "1000", "--json")
    table = json.loads(out)
    assert code == 0
    assert all(r["inside"] for r in table if r["quantity"] in ("D", "eta"))
    assert table[0]["rel_half_width"] > 0.05


def test_compare_asymmetric_rates(capsys):
    code, out, _ = run_cli(capsys, "compare", "--scenario", "vehicular", "--tau", "100",
                           "--mu1", "10", "--mu2", "1.28", "--json")
    assert code == 0
    assert all(r["inside"] for r in json.loads(out) if r["quantity"] in ("D", "eta"))


def test_simulate_with_trace(tmp_path, capsys):
    path = tmp_path / "tr.csv"
    code, out, _ = run_cli(capsys, "simulate", "--scenario", "pedestrian", "--tau", "100",
                           "--horizon", "5000", "--replications", "2", "--json",
                           "--trace", str(path), "--trace-duration", "1000")
    data = json.loads(out)
    assert code == 0 and data["method"] == "simulation"
    assert data["D_ci_low"] <= data["D"] <= data["D_ci_high"]
    assert path.read_text().startswith("t,event,n_after,j_after")


def test_tau_grid_parsing():
    np.testing.assert_allclose(parse_tau_grid("logspace:0.01:100000:20"), np.logspace(-2, 5, 20))
    assert parse_tau_grid("1, 2,5") == (1.0, 2.0, 5.0)
    for bad in ("3,2", "logspace:1:0.5:3", "a,b", "0,1"):
        with pytest.raises(ConfigError):
            parse_tau_grid(bad)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mmsp_offload", "analyze", "--scenario",
                          "vehicular", "--tau", "1", "--json"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["tau"] == 1.0
