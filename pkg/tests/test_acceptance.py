"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import phasemap as pm
from phasemap import gibbs, io, kernels
from phasemap.service import create_app
from tests.conftest import make_instance, geometric_grid
from tests.test_kernels import reconstruct_oracle
from tests.test_solver import oracle_kl_nmf

MONO_TOL = 1e-10


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)


def _monotone_violations(trace):
    trace = np.asarray(trace)
    excess = np.diff(trace) - MONO_TOL * np.maximum(1.0, trace[:-1])
    return int((excess > 0).sum())


def _random_freeze(rng, n_log, k, m, j, which):
    w_mask = w_values = h_mask = h_values = None
    if which in ("w", "both"):
        w_mask = rng.random((n_log, k)) < 0.05
        w_values = np.where(w_mask, rng.random((n_log, k)), 0.0)
    if which in ("h", "both"):
        h_mask = rng.random((m, k, j)) < 0.05
        h_values = np.where(h_mask, rng.random((m, k, j)), 0.0)
    if which == "none":
        return None
    return pm.FreezeSpec(
        w_mask=w_mask, w_values=w_values, h_mask=h_mask, h_values=h_values
    )


def test_monotonicity_and_freeze_fidelity_suite():
    """50 randomized (instance, seed, freeze-mask) triples; both criteria."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    k_choices = [2, 3, 4, 5, 6]
    m_choices = [1, 4, 10]
    mask_kinds = ["none", "w", "h", "both"]
    violations = 0
    pin_breaks = 0
    for trial in range(50):
        k = int(rng.choice(k_choices))
        m = int(rng.choice(m_choices))
        n = int(rng.integers(36, 72))
        j = int(rng.integers(6, 14))
        inst = make_instance(n=n, j=j, seed=int(rng.integers(1 << 30)))
        n_log = len(pm.build_log_grid(inst.q, 1.0))
        freeze = _random_freeze(rng, n_log, k, m, j, mask_kinds[trial % 4])
        cfg = pm.SolverConfig(
            k=k, m=m, seed=int(rng.integers(1 << 30)), max_iters=40, conv_gap=1e-13
        )
        pins_exact = [True]

        def watch(it, W, H, R, loss, fz=freeze):
            if fz is None:
                return
            if fz.w_mask is not None and not np.all(
                W[fz.w_mask] == fz.w_values[fz.w_mask]
            ):
                pins_exact[0] = False
            if fz.h_mask is not None and not np.all(
                H[fz.h_mask] == fz.h_values[fz.h_mask]
            ):
                pins_exact[0] = False

        sol = pm.solve(inst, cfg, freeze=freeze, inspect=watch)
        violations += _monotone_violations(sol.loss_trace)
        if not pins_exact[0]:
            pin_breaks += 1
    elapsed = time.perf_counter() - t0
    ok_mono = violations == 0
    ok_time = elapsed < 120.0
    report(
        "monotonicity suite (50 triples, K 2..6, M {1,4,10})",
        ok_mono and ok_time,
        f"{violations} violations, {elapsed:.1f}s",
    )
    report("freeze fidelity (bit-exact pins, same suite)", pin_breaks == 0, f"{pin_breaks} breaks")
    assert violations == 0
    assert pin_breaks == 0
    assert elapsed < 120.0


def test_reconstruction_oracle_100_shapes():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 12))
        k = int(rng.integers(1, 5))
        m = int(rng.integers(1, n + 1))
        j = int(rng.integers(1, 7))
        w = rng.random((n, k))
        h = rng.random((m, k, j))
        got = pm.reconstruct(w, h)
        want = reconstruct_oracle(w, h)
        scale = np.maximum(np.abs(want), 1e-300)
        worst = max(worst, float(np.max(np.abs(got - want) / scale)))
    ok = worst < 1e-12
    report("reconstruction vs brute-force triple loop (100 shapes)", ok, f"max rel err {worst:.2e}")
    assert ok


def test_nmf_degeneracy_m1():
    inst = make_instance(n=80, j=10, seed=101)
    plan = pm.ResamplePlan.for_instance_grid(inst.q, 1.0)
    a = pm.to_log(inst.intensity_matrix(), plan)
    rng = np.random.default_rng(7)
    w0 = 1.0 - rng.random((a.shape[0], 3))
    h0 = 1.0 - rng.random((1, 3, a.shape[1]))
    freeze = pm.FreezeSpec(w_init=w0, h_init=h0)
    worst = 0.0
    for steps in (1, 5, 20, 60):
        cfg = pm.SolverConfig(k=3, m=1, seed=7, max_iters=steps, conv_gap=1e-300)
        sol = pm.solve(inst, cfg, freeze=freeze)
        w_ref, h_ref, losses = oracle_kl_nmf(a, w0, h0[0], steps)
        for got, want in ((sol.W, w_ref), (sol.H[0], h_ref)):
            scale = np.maximum(np.abs(want), 1e-300)
            worst = max(worst, float(np.max(np.abs(got - want) / scale)))
        worst = max(
            worst,
            float(
                np.max(
                    np.abs(np.asarray(sol.loss_trace[1:]) - np.asarray(losses))
                    / np.maximum(np.abs(losses), 1e-300)
                )
            ),
        )
    ok = worst < 1e-12
    report("M=1 equals independent KL-NMF iterate-for-iterate", ok, f"max rel diff {worst:.2e}")
    assert ok


def test_shift_equivariance():
    src = geometric_grid(96, 1.0, 3.5)
    plan = pm.ResamplePlan.for_instance_grid(src, 1.0)
    rng = np.random.default_rng(5)
    sig = rng.random(96) + 0.05
    shifted = np.concatenate(([0.0], sig[:-1]))  # s(q / r) on the same grid
    lhs = pm.to_log(shifted, plan)
    rhs = np.concatenate(([0.0], pm.to_log(sig, plan)[:-1]))
    err = float(np.max(np.abs(lhs - rhs)))
    ok = err < 1e-10
    report("shift equivariance: lambda=exp(delta) is a one-row offset", ok, f"max err {err:.2e}")
    assert ok


def test_recovery_beats_plain_nmf():
    t0 = time.perf_counter()
    spec = pm.SyntheticSpec(k=3, grid_per_edge=15, n_q=256, alloy_max=1.02, seed=11)
    inst, truth = pm.generate(spec)
    ov = pm.oversample_for_shift(inst.q, 10, 1.02)
    sol_shift = pm.solve(inst, pm.SolverConfig(k=3, m=10, seed=3, oversample=ov))
    sol_plain = pm.solve(inst, pm.SolverConfig(k=3, m=1, seed=3, oversample=ov))
    l2_shift = pm.matched_l2(sol_shift, truth)
    l2_plain = pm.matched_l2(sol_plain, truth)
    elapsed = time.perf_counter() - t0
    ok = l2_shift < 1e-2 and l2_plain > l2_shift and elapsed < 300.0
    report(
        "recovery: matched_l2(M=10) < 1e-2 and < matched_l2(M=1)",
        ok,
        f"M=10 {l2_shift:.2e}, M=1 {l2_plain:.2e}, {elapsed:.1f}s",
    )
    assert l2_shift < 1e-2
    assert l2_plain > l2_shift
    assert elapsed < 300.0


def test_gibbs_enforcement_10_systems():
    rng = np.random.default_rng(500)
    all_perfect = True
    dominance_ok = True
    for idx in range(10):
        k = 4 + idx % 3
        spec = pm.SyntheticSpec(
            k=k, grid_per_edge=8, n_q=128, alloy_max=1.01, seed=int(rng.integers(1 << 30))
        )
        inst, _ = pm.generate(spec)
        ov = pm.oversample_for_shift(inst.q, 4, 1.01)
        base = dict(k=k, m=4, seed=idx, oversample=ov, n_el=3)
        sol_exact = pm.solve(inst, pm.SolverConfig(**base, gibbs="exact"))
        if pm.gibbs_percentage(sol_exact, 3) != 1.0:
            all_perfect = False
        # rounding comparison on the converged relaxed state
        sol_rel = pm.solve(inst, pm.SolverConfig(**base))
        plan = pm.ResamplePlan.for_instance_grid(inst.q, ov)
        a = pm.to_log(inst.intensity_matrix(), plan)
        w, h = sol_rel.W, sol_rel.H
        for j in range(inst.n_samples):
            keep_e = gibbs.select_keep_set(j, w, h, a, 3, "exact")
            keep_g = gibbs.select_keep_set(j, w, h, a, 3, "greedy")
            le = _rounded_sample_loss(w, h, a, j, keep_e)
            lg = _rounded_sample_loss(w, h, a, j, keep_g)
            if le > lg + 1e-12 * max(1.0, abs(lg)):
                dominance_ok = False
    report("gibbs=exact gives 100% satisfaction on 10 systems (K 4..6)", all_perfect)
    report("per-sample exact rounding loss <= greedy rounding loss", dominance_ok)
    assert all_perfect
    assert dominance_ok


def _rounded_sample_loss(w, h, a, j, keep):
    h2 = h.copy()
    for k in range(w.shape[1]):
        if k not in keep:
            h2[:, k, :] = 0.0
    r = pm.reconstruct(w, h2)
    return float(kernels.per_sample_kl(a[:, j : j + 1], r[:, j : j + 1], 1e-12)[0])


def test_cli_determinism(tmp_path):
    env_cmd = [sys.executable, "-m", "phasemap.cli"]
    inst_path = tmp_path / "inst.json"
    truth_path = tmp_path / "truth.json"
    gen = subprocess.run(
        env_cmd
        + ["gen", "--k", "3", "--grid", "6", "--nq", "64", "--seed", "4",
           "--out-instance", str(inst_path), "--out-truth", str(truth_path)],
        capture_output=True, text=True,
    )
    assert gen.returncode == 0, gen.stderr
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        run = subprocess.run(
            env_cmd
            + ["solve", "--instance", str(inst_path), "--k", "3", "--m", "2",
               "--seed", "9", "--max-iters", "60", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert run.returncode == 0, run.stderr
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1]
    report("CLI determinism: identical flags give byte-identical files", ok)
    assert ok


def test_service_lifecycle_scripted():
    with TestClient(create_app()) as client:
        doc = io.instance_to_doc(make_instance(n=48, j=10, seed=9))
        instance_id = client.post("/api/instances", json=doc).json()["instance_id"]

        # submit a gibbs job and poll events with a cursor
        config = {"k": 4, "m": 2, "seed": 2, "max_iters": 80, "gibbs": "greedy", "n_el": 2}
        job_id = client.post(
            "/api/jobs", json={"instance_id": instance_id, "config": config}
        ).json()["job_id"]
        events, cursor = [], 0
        deadline = time.time() + 60
        while time.time() < deadline:
            page = client.get(f"/api/jobs/{job_id}/events", params={"cursor": cursor}).json()
            assert page["cursor"] == cursor + len(page["events"])
            events.extend(page["events"])
            cursor = page["cursor"]
            if page["status"] in ("done", "failed", "cancelled") and not page["events"]:
                break
            time.sleep(0.01)
        statuses = [e["status"] for e in events]
        lifecycle_ok = (
            statuses[0] == "running"
            and "rounding" in statuses
            and "refining" in statuses
            and statuses[-1] == "done"
        )

        groups, current = [], []
        for e in events:
            if e["status"] == "rounding":
                groups.append(current)
                current = []
            current.append(e["loss"])
        groups.append(current)
        mono_ok = all(
            all(b <= a + MONO_TOL * max(1.0, abs(a)) for a, b in zip(g, g[1:]))
            for g in groups
        )

        # cancel path on a long-running job
        slow = {"k": 4, "m": 6, "seed": 1, "max_iters": 5000, "conv_gap": 1e-14}
        slow_id = client.post(
            "/api/jobs", json={"instance_id": instance_id, "config": slow}
        ).json()["job_id"]
        while not client.get(f"/api/jobs/{slow_id}/events").json()["events"]:
            time.sleep(0.005)
        client.post(f"/api/jobs/{slow_id}/cancel")
        deadline = time.time() + 30
        while time.time() < deadline:
            state = client.get(f"/api/jobs/{slow_id}").json()
            if state["status"] in ("cancelled", "done", "failed"):
                break
            time.sleep(0.01)
        cancel_ok = state["status"] == "cancelled" and bool(state["loss_trace_tail"])

        # refine with a frozen basis taken from a sample
        refine = {
            "freeze": {"basis_from_sample": [{"sample_id": "s1", "basis": 0, "pin": True}]},
            "config": {"max_iters": 30, "gibbs": "off"},
        }
        child_id = client.post(f"/api/jobs/{job_id}/refine", json=refine).json()["job_id"]
        deadline = time.time() + 60
        while time.time() < deadline:
            if client.get(f"/api/jobs/{child_id}").json()["status"] == "done":
                break
            time.sleep(0.01)
        child = client.get(f"/api/jobs/{child_id}/solution").json()
        inst = pm.validate_instance(doc)
        pattern = pm.to_log(
            inst.samples[1].intensity, pm.ResamplePlan.for_instance_grid(inst.q, 1.0)
        )
        refine_ok = np.array_equal(np.asarray(child["W"])[:, 0], pattern)

    ok = lifecycle_ok and mono_ok and cancel_ok and refine_ok
    report(
        "service lifecycle: submit, events cursor, cancel, refine-with-freeze",
        ok,
        f"lifecycle={lifecycle_ok} monotone={mono_ok} cancel={cancel_ok} refine={refine_ok}",
    )
    assert lifecycle_ok
    assert mono_ok
    assert cancel_ok
    assert refine_ok
