import json

import numpy as np
import pytest
from click.testing import CliRunner

from bwlab import HysteresisCurve
from bwlab.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def write_cfg(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def invoke(runner, args, env=None):
    return runner.invoke(main, args, env=env, catch_exceptions=False)


def specimen_dict(fixtures_dir, name="specimen_bw"):
    return json.loads((fixtures_dir / f"{name}.json").read_text())


def test_version(runner):
    result = invoke(runner, ["--version"])
    assert result.exit_code == 0
    assert "0.1.0" in result.output


def test_history_table(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json",
                    {"kind": "table", "index": 3, "u_y_m": 0.01})
    result = invoke(runner, ["history", "--config", cfg,
                             "--out", str(tmp_path / "out"), "--json", "--svg"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["label"] == "LH3"
    assert summary["n_steps"] == 80
    assert (tmp_path / "out" / "history.json").is_file()
    assert (tmp_path / "out" / "series.csv").is_file()
    svg_text = (tmp_path / "out" / "history.svg").read_text()
    assert svg_text.startswith("<svg")


def test_history_envelope(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json",
                    {"kind": "envelope", "peak_uy": 4.0, "n_cycles": 8,
                     "u_y_m": 0.01})
    result = invoke(runner, ["history", "--config", cfg,
                             "--out", str(tmp_path / "out"), "--json"])
    assert result.exit_code == 0
    assert json.loads(result.output)["label"] == "ENV-4x8"


def test_config_errors_exit_2(runner, tmp_path):
    missing = invoke(runner, ["history", "--config",
                              str(tmp_path / "nope.json")])
    assert missing.exit_code == 2
    assert "not found" in missing.output

    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    result = invoke(runner, ["history", "--config", str(bad_json)])
    assert result.exit_code == 2
    assert "invalid JSON" in result.output

    unknown = write_cfg(tmp_path / "unknown.json",
                        {"kind": "table", "index": 3, "u_y_m": 0.01,
                         "typo_key": 1})
    result = invoke(runner, ["history", "--config", unknown])
    assert result.exit_code == 2
    assert "unknown keys" in result.output


def test_simulate(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "params": specimen_dict(fixtures_dir),
        "history": {"kind": "table", "index": 3},
    })
    out = tmp_path / "out"
    result = invoke(runner, ["simulate", "--config", cfg, "--out", str(out),
                             "--json"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["n_steps"] == 80
    assert summary["area_norm"] > 0.0
    curve = HysteresisCurve.from_csv(out / "curve.csv")
    assert len(curve) == 81


def test_simulate_rejects_bad_params(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "params": {"T": -1.0, "F_y": 0.5, "alpha": 0.1, "beta": 0.5,
                   "n": 1.5, "variant": "BW"},
        "history": {"kind": "table", "index": 3, "u_y_m": 0.01},
    })
    result = invoke(runner, ["simulate", "--config", cfg,
                             "--out", str(tmp_path / "out")])
    # malformed parameter values are a config problem
    assert result.exit_code == 2


def test_gen_dataset(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "history": {"kind": "table", "index": 3, "u_y_m": 1.0},
        "n_param_sets": 12,
        "variant": "BW",
        "noise": {"scale_default_to": 15},
        "split": 0.75,
        "seed": 3,
        "histograms": True,
    })
    out = tmp_path / "ds"
    result = invoke(runner, ["gen-dataset", "--config", cfg, "--out", str(out),
                             "--json"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["d"] == 80
    assert summary["n_train_records"] == 15
    assert (out / "manifest.json").is_file()
    assert (out / "records.bin").is_file()
    assert (out / "histograms.csv").is_file()


def test_gen_dataset_noise_list(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "history": {"kind": "table", "index": 3, "u_y_m": 1.0},
        "n_param_sets": 8,
        "variant": "BW",
        "noise": [[0.0, 4], [0.01, 4]],
        "split": 0.75,
    })
    result = invoke(runner, ["gen-dataset", "--config", cfg,
                             "--out", str(tmp_path / "ds"), "--json"])
    assert result.exit_code == 0
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["noise_levels"] == [{"cov": 0.0, "count": 4},
                                        {"cov": 0.01, "count": 4}]


def _measured_curve(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "sim.json", {
        "params": specimen_dict(fixtures_dir),
        "history": {"kind": "optimal", "variant": "BW"},
    })
    out = tmp_path / "sim_out"
    result = invoke(runner, ["simulate", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0
    return out / "curve.csv"


def test_estimate_ga_deterministic(runner, tmp_path, fixtures_dir):
    curve_csv = _measured_curve(runner, tmp_path, fixtures_dir)
    cfg = write_cfg(tmp_path / "est.json", {
        "curve_file": str(curve_csv),
        "variant": "BW",
        "seed": 11,
        "ga": {"generations": 5, "population": 24},
    })
    out1 = tmp_path / "est1"
    out2 = tmp_path / "est2"
    r1 = invoke(runner, ["estimate", "--config", cfg, "--out", str(out1),
                         "--json", "--svg"])
    assert r1.exit_code == 0
    r2 = invoke(runner, ["estimate", "--config", cfg, "--out", str(out2)])
    assert r2.exit_code == 0
    e1 = (out1 / "estimate.json").read_bytes()
    e2 = (out2 / "estimate.json").read_bytes()
    assert e1 == e2  # no timestamps, fully seeded
    data = json.loads(e1)
    assert data["estimator"] == "ga"
    assert data["params"]["variant"] == "BW"
    assert "wall_time_s" not in data
    assert len(data["trace"]) == 5
    assert (out1 / "estimate.svg").is_file()


def test_estimate_seed_env_override(runner, tmp_path, fixtures_dir):
    curve_csv = _measured_curve(runner, tmp_path, fixtures_dir)
    cfg = write_cfg(tmp_path / "est.json", {
        "curve_file": str(curve_csv),
        "variant": "BW",
        "seed": 11,
        "ga": {"generations": 3, "population": 16},
    })
    base = invoke(runner, ["estimate", "--config", cfg,
                           "--out", str(tmp_path / "a")])
    assert base.exit_code == 0
    other = invoke(runner, ["estimate", "--config", cfg,
                            "--out", str(tmp_path / "b")],
                   env={"BWLAB_SEED": "99"})
    assert other.exit_code == 0
    a = json.loads((tmp_path / "a" / "estimate.json").read_text())
    b = json.loads((tmp_path / "b" / "estimate.json").read_text())
    assert a["trace"] != b["trace"]


def test_estimate_cnn(runner, tmp_path, fixtures_dir):
    u = np.linspace(0.0, 0.5, 11)
    f = np.sin(u * 6.0)
    curve_csv = tmp_path / "tiny.csv"
    HysteresisCurve(u=u, f=f).to_csv(curve_csv)
    cfg = write_cfg(tmp_path / "est.json", {
        "curve_file": str(curve_csv),
        "estimator": "cnn",
        "weights_file": str(fixtures_dir / "golden_tiny.bwnn"),
    })
    result = invoke(runner, ["estimate", "--config", cfg,
                             "--out", str(tmp_path / "out"), "--json"])
    assert result.exit_code == 0
    data = json.loads((tmp_path / "out" / "estimate.json").read_text())
    assert data["estimator"] == "cnn"
    assert set(data["predictions"]) == {"p1", "p2", "p3"}
    assert len(data["outputs"]) == 3


def test_estimate_cnn_wrong_length(runner, tmp_path, fixtures_dir):
    u = np.linspace(0.0, 0.5, 8)
    curve_csv = tmp_path / "short.csv"
    HysteresisCurve(u=u, f=np.sin(u)).to_csv(curve_csv)
    cfg = write_cfg(tmp_path / "est.json", {
        "curve_file": str(curve_csv),
        "estimator": "cnn",
        "weights_file": str(fixtures_dir / "golden_tiny.bwnn"),
    })
    result = invoke(runner, ["estimate", "--config", cfg,
                             "--out", str(tmp_path / "out")])
    assert result.exit_code == 1  # curve length is a domain mismatch


def test_pushover(runner, tmp_path, fixtures_dir):
    spec = specimen_dict(fixtures_dir)
    params_file = tmp_path / "spec.json"
    params_file.write_text(json.dumps(spec))
    cfg = write_cfg(tmp_path / "cfg.json", {
        "params_file": str(params_file),
        "max_drift_m": 1.0,
        "step_m": 0.002,
    })
    result = invoke(runner, ["pushover", "--config", cfg,
                             "--out", str(tmp_path / "out"), "--json"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["note"] == ""
    assert summary["u_y_m"] == pytest.approx(0.14, abs=0.01)
    assert (tmp_path / "out" / "pushover.csv").is_file()


def test_tha(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "params": specimen_dict(fixtures_dir, "specimen_mbwbn"),
        "motion_file": str(fixtures_dir / "gm_a.txt"),
    })
    result = invoke(runner, ["tha", "--config", cfg,
                             "--out", str(tmp_path / "out"), "--json"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["peak_u_m"] > 0.0
    lines = (tmp_path / "out" / "response.csv").read_text().splitlines()
    assert lines[0] == "t,u,v,a,z,eps_n"
    assert len(lines) == summary["n_points"] + 1


def test_ida_and_fragility(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "ida.json", {
        "params": specimen_dict(fixtures_dir, "specimen_mbwbn"),
        "motions": [str(fixtures_dir / "gm_a.txt"),
                    str(fixtures_dir / "gm_b.txt")],
        "sa_levels": [0.2, 0.5],
    })
    out = tmp_path / "ida_out"
    result = invoke(runner, ["ida", "--config", cfg, "--out", str(out),
                             "--json"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["n_cells"] == 4
    assert summary["n_failed"] == 0

    frag_cfg = write_cfg(tmp_path / "frag.json", {
        "ida_file": str(fixtures_dir / "ida_mbwbn.csv"),
        "thresholds_m": [0.02, 0.05, 0.11],
    })
    frag_out = tmp_path / "frag_out"
    result = invoke(runner, ["fragility", "--config", frag_cfg,
                             "--out", str(frag_out), "--json", "--svg"])
    assert result.exit_code == 0
    lines = (frag_out / "fragility.csv").read_text().splitlines()
    assert lines[0] == "ds,theta_g,beta"
    assert len(lines) == 4
    assert [ln.split(",")[0] for ln in lines[1:]] == ["DS1", "DS2", "DS3"]

    # comparing a fit against itself gives zero divergence both ways
    cmp_cfg = write_cfg(tmp_path / "cmp.json", {
        "ida_file": str(fixtures_dir / "ida_mbwbn.csv"),
        "thresholds_m": [0.02, 0.05, 0.11],
        "compare_file": str(frag_out / "fragility.csv"),
    })
    result = invoke(runner, ["fragility", "--config", cmp_cfg,
                             "--out", str(tmp_path / "cmp_out"), "--json"])
    assert result.exit_code == 0
    kl = json.loads((tmp_path / "cmp_out" / "kl.json").read_text())
    assert len(kl["pairs"]) == 3
    for pair in kl["pairs"]:
        assert pair["kl_this_to_other"] == pytest.approx(0.0, abs=1e-12)
        assert pair["kl_other_to_this"] == pytest.approx(0.0, abs=1e-12)


def test_fragility_degenerate_grid_exits_1(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "frag.json", {
        "ida_file": str(fixtures_dir / "ida_mbwbn.csv"),
        "thresholds_m": [99.0],  # nothing exceeds
    })
    result = invoke(runner, ["fragility", "--config", cfg,
                             "--out", str(tmp_path / "out")])
    assert result.exit_code == 1


def test_protocol_end_to_end_deterministic(runner, tmp_path, fixtures_dir):
    cfg = write_cfg(tmp_path / "cfg.json", {
        "params": specimen_dict(fixtures_dir),
        "variant": "BW",
        "seed": 4,
        "ga": {"generations": 6, "population": 24},
    })
    out1 = tmp_path / "p1"
    r1 = invoke(runner, ["protocol", "--config", cfg, "--out", str(out1),
                         "--json", "--svg"])
    assert r1.exit_code == 0
    report = json.loads((out1 / "report.json").read_text())
    assert report["schema"] == "bwlab-protocol-1"
    assert report["u_y_m"] == pytest.approx(0.14, abs=0.01)
    assert report["history"]["amplitudes_uy"] == [2.0, 2.0, 3.0, 3.0]
    assert report["estimate"]["estimator"] == "ga"
    assert report["validation"]["area_true"] > 0.0
    for name in ("pushover.csv", "history.json", "curve.csv", "report.json",
                 "validation.svg"):
        assert (out1 / name).is_file()

    out2 = tmp_path / "p2"
    r2 = invoke(runner, ["protocol", "--config", cfg, "--out", str(out2)])
    assert r2.exit_code == 0
    assert (out1 / "report.json").read_bytes() == \
        (out2 / "report.json").read_bytes()


def test_thread_cap_env(runner, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json",
                    {"kind": "table", "index": 1, "u_y_m": 0.01})
    ok = invoke(runner, ["history", "--config", cfg,
                         "--out", str(tmp_path / "out")],
                env={"BWLAB_THREADS": "1"})
    assert ok.exit_code == 0
    bad = invoke(runner, ["history", "--config", cfg,
                          "--out", str(tmp_path / "out")],
                 env={"BWLAB_THREADS": "zero"})
    assert bad.exit_code == 2
