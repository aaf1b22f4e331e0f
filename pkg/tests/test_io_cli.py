import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

import phasemap as pm
from phasemap import io
from phasemap.cli import main
from tests.conftest import make_instance


@pytest.fixture
def runner():
    return CliRunner()


def test_instance_file_roundtrip(tmp_path):
    inst = make_instance(n=20, j=3, seed=1)
    path = tmp_path / "inst.json"
    io.write_instance(path, inst)
    again = io.read_instance(path)
    np.testing.assert_array_equal(inst.q.values, again.q.values)
    for a, b in zip(inst.samples, again.samples):
        np.testing.assert_array_equal(a.intensity, b.intensity)
        np.testing.assert_array_equal(a.composition, b.composition)


def test_solution_file_roundtrip(tmp_path):
    inst = make_instance(n=24, j=4, seed=2)
    sol = pm.solve(inst, pm.SolverConfig(k=2, m=2, seed=1, max_iters=25))
    path = tmp_path / "sol.json"
    io.write_solution(path, sol)
    again = io.read_solution(path)
    np.testing.assert_array_equal(sol.W, again.W)
    np.testing.assert_array_equal(sol.H, again.H)
    np.testing.assert_array_equal(sol.loss_trace, again.loss_trace)
    np.testing.assert_array_equal(sol.shift, again.shift)
    np.testing.assert_array_equal(sol.lam, again.lam)
    np.testing.assert_array_equal(sol.presence, again.presence)
    np.testing.assert_array_equal(sol.log_q.values, again.log_q.values)
    assert again.segments == sol.segments
    assert again.config == sol.config
    np.testing.assert_array_equal(sol.R, again.R)  # recomputed, same kernels


def test_truth_file_roundtrip(tmp_path):
    _, truth = pm.generate(pm.SyntheticSpec(k=3, grid_per_edge=4, n_q=32, seed=3))
    path = tmp_path / "truth.json"
    io.write_truth(path, truth)
    again = io.read_truth(path)
    np.testing.assert_array_equal(truth.signals, again.signals)
    np.testing.assert_array_equal(truth.weights, again.weights)
    np.testing.assert_array_equal(truth.lam, again.lam)
    np.testing.assert_array_equal(truth.q.values, again.q.values)


def test_malformed_json_rejected(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(pm.ValidationError, match="malformed"):
        io.read_json(p)


def test_gen_lattice_count_and_determinism(runner, tmp_path):
    args = [
        "gen", "--k", "3", "--grid", "15", "--seed", "1", "--nq", "48",
        "--out-instance", str(tmp_path / "a.json"), "--out-truth", str(tmp_path / "t.json"),
    ]
    res = runner.invoke(main, args)
    assert res.exit_code == 0, res.output
    assert "samples=136" in res.output
    doc = json.loads((tmp_path / "a.json").read_text())
    assert len(doc["samples"]) == 136

    first = (tmp_path / "a.json").read_bytes()
    res = runner.invoke(main, args)
    assert res.exit_code == 0
    assert (tmp_path / "a.json").read_bytes() == first


def test_gen_rejects_alloy_below_one(runner, tmp_path):
    res = runner.invoke(
        main,
        ["gen", "--alloy-max", "0.9", "--out-instance", str(tmp_path / "a.json"),
         "--out-truth", str(tmp_path / "t.json")],
    )
    assert res.exit_code == 2


def test_solve_requires_instance_flag(runner):
    res = runner.invoke(main, ["solve", "--k", "2", "--out", "x.json"])
    assert res.exit_code == 2
    assert "instance" in (res.output + str(res.stderr_bytes or b"")).lower()


def _gen_small(runner, tmp_path, seed=4):
    inst_path, truth_path = tmp_path / "inst.json", tmp_path / "truth.json"
    res = runner.invoke(
        main,
        ["gen", "--k", "3", "--grid", "5", "--nq", "64", "--seed", str(seed),
         "--out-instance", str(inst_path), "--out-truth", str(truth_path)],
    )
    assert res.exit_code == 0, res.output
    return inst_path, truth_path


def test_solve_writes_solution_and_is_byte_deterministic(runner, tmp_path):
    inst_path, _ = _gen_small(runner, tmp_path)
    out_a, out_b = tmp_path / "sa.json", tmp_path / "sb.json"
    args = ["solve", "--instance", str(inst_path), "--k", "3", "--m", "2",
            "--seed", "5", "--max-iters", "40"]
    res = runner.invoke(main, args + ["--out", str(out_a)])
    assert res.exit_code == 0, res.output
    assert "loss=" in res.output and "iterations=" in res.output
    res = runner.invoke(main, args + ["--out", str(out_b)])
    assert res.exit_code == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_solve_defaults_echoed_in_solution(runner, tmp_path):
    inst_path, _ = _gen_small(runner, tmp_path)
    out = tmp_path / "sol.json"
    res = runner.invoke(
        main, ["solve", "--instance", str(inst_path), "--k", "2", "--out", str(out),
               "--max-iters", "10"],
    )
    assert res.exit_code == 0, res.output
    cfg = json.loads(out.read_text())["config"]
    assert cfg["m"] == 1
    assert cfg["sparsity"] == 0.0
    assert cfg["gibbs"] == "off"
    assert cfg["conv_gap"] == 2e-5
    assert cfg["n_el"] == 3


def test_solve_bare_sparsity_flag_enables_default(runner, tmp_path):
    inst_path, _ = _gen_small(runner, tmp_path)
    out = tmp_path / "sol.json"
    res = runner.invoke(
        main, ["solve", "--instance", str(inst_path), "--k", "2", "--sparsity",
               "--out", str(out), "--max-iters", "10"],
    )
    assert res.exit_code == 0, res.output
    assert json.loads(out.read_text())["config"]["sparsity"] == 0.35


def test_solve_validation_failure_exits_3(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"elements": ["A"], "q": [2.0, 1.0], "samples": []}))
    res = runner.invoke(main, ["solve", "--instance", str(bad), "--k", "2",
                               "--out", str(tmp_path / "o.json")])
    assert res.exit_code == 3


def test_solve_precondition_failure_exits_4(runner, tmp_path):
    inst_path, _ = _gen_small(runner, tmp_path)
    res = runner.invoke(main, ["solve", "--instance", str(inst_path), "--k", "9999",
                               "--out", str(tmp_path / "o.json")])
    assert res.exit_code == 4


def test_solve_with_freeze_file(runner, tmp_path):
    inst_path, _ = _gen_small(runner, tmp_path)
    inst = io.read_instance(inst_path)
    plan = pm.ResamplePlan.for_instance_grid(inst.q)
    n_log = len(plan.dst)
    pattern = pm.to_log(inst.samples[0].intensity, plan)
    freeze_doc = {
        "w_mask": [[True, False]] * n_log,
        "w_values": [[float(v), 0.0] for v in pattern],
    }
    fz_path = tmp_path / "freeze.json"
    fz_path.write_text(json.dumps(freeze_doc))
    out = tmp_path / "sol.json"
    res = runner.invoke(
        main, ["solve", "--instance", str(inst_path), "--k", "2", "--freeze", str(fz_path),
               "--out", str(out), "--max-iters", "15"],
    )
    assert res.exit_code == 0, res.output
    sol = io.read_solution(out)
    np.testing.assert_array_equal(sol.W[:, 0], pattern)


def test_eval_reports_metrics(runner, tmp_path):
    inst_path, truth_path = _gen_small(runner, tmp_path)
    out = tmp_path / "sol.json"
    res = runner.invoke(
        main, ["solve", "--instance", str(inst_path), "--k", "3", "--gibbs", "exact",
               "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["eval", "--solution", str(out), "--truth", str(truth_path)])
    assert res.exit_code == 0, res.output
    record = json.loads(res.output)
    assert record["gibbs_percentage"] == 1.0
    assert record["matched_l2"] >= 0.0

    res0 = runner.invoke(
        main, ["eval", "--solution", str(out), "--truth", str(truth_path), "--threshold", "0.0"]
    )
    assert json.loads(res0.output)["gibbs_percentage"] <= record["gibbs_percentage"]


def test_eval_k_mismatch_exits_3(runner, tmp_path):
    inst_path, truth_path = _gen_small(runner, tmp_path)
    out = tmp_path / "sol.json"
    res = runner.invoke(
        main, ["solve", "--instance", str(inst_path), "--k", "2", "--out", str(out),
               "--max-iters", "10"],
    )
    assert res.exit_code == 0
    res = runner.invoke(main, ["eval", "--solution", str(out), "--truth", str(truth_path)])
    assert res.exit_code == 3
