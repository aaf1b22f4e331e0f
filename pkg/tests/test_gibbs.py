import math
from itertools import combinations

import numpy as np
import pytest

import phasemap as pm
from phasemap import gibbs
from phasemap.model import ValidationError
from tests.conftest import make_instance


def kl_column_oracle(a, r, eps=1e-12):
    total = 0.0
    for av, rv in zip(a, r):
        total += rv
        if av > 0:
            total += av * math.log(av / max(rv, eps)) - av
    return total


def rounded_loss_oracle(W, H, A, j, keep, eps=1e-12):
    """KL loss of sample j with all phases outside ``keep`` zeroed."""
    h = H.copy()
    for k in range(W.shape[1]):
        if k not in keep:
            h[:, k, :] = 0.0
    r = pm.reconstruct(W, h)
    return kl_column_oracle(A[:, j], r[:, j], eps)


def test_presence_single_phase():
    w = np.ones((4, 3))
    h = np.zeros((1, 3, 5))
    h[0, 0, :] = 1.0  # all mass in phase 0
    ind, contrib = gibbs.presence_arrays(w, h, 0.01)
    assert ind.sum() == 5
    assert ind[0].all()
    np.testing.assert_array_equal(contrib[1:], 0.0)


def test_presence_below_threshold_not_counted():
    w = np.ones((1, 3))
    h = np.zeros((1, 3, 1))
    h[0, :, 0] = [0.995, 0.005, 0.0]
    ind, _ = gibbs.presence_arrays(w, h, 0.01)
    assert ind[:, 0].tolist() == [True, False, False]


def test_presence_equal_contributions_all_counted():
    w = np.ones((2, 6))
    h = np.full((1, 6, 2), 0.5)
    ind, _ = gibbs.presence_arrays(w, h, 0.01)
    assert ind.all()


def test_presence_threshold_bounds():
    w = np.ones((2, 2))
    h = np.ones((1, 2, 2))
    with pytest.raises(ValidationError):
        gibbs.presence_arrays(w, h, 1.0)
    with pytest.raises(ValidationError):
        gibbs.presence_arrays(w, h, -0.1)


def test_keep_all_when_k_within_limit():
    rng = np.random.default_rng(0)
    w = rng.random((6, 3))
    h = rng.random((2, 3, 4))
    a = pm.reconstruct(w, h)
    assert gibbs.select_keep_set(0, w, h, a, 3, "exact") == (0, 1, 2)
    assert gibbs.select_keep_set(0, w, h, a, 5, "greedy") == (0, 1, 2)
    np.testing.assert_array_equal(gibbs.zero_excluded(h, [(0, 1, 2)] * 4), h)


def test_orthogonal_bases_drop_smallest():
    # one distinct peak per phase, contributions (0.5, 0.3, 0.15, 0.05)
    w = np.eye(4)
    h = np.array([0.5, 0.3, 0.15, 0.05]).reshape(1, 4, 1)
    a = pm.reconstruct(w, h)
    exact = gibbs.select_keep_set(0, w, h, a, 3, "exact")
    greedy = gibbs.select_keep_set(0, w, h, a, 3, "greedy")
    assert exact == greedy == (0, 1, 2)
    # independent check by full enumeration
    best = min(
        combinations(range(4), 3),
        key=lambda s: rounded_loss_oracle(w, h, a, 0, s),
    )
    assert tuple(best) == exact


def test_correlated_bases_where_greedy_and_exact_disagree():
    # phase 0 has the larger mass but explains only half the signal;
    # phase 1 alone reconstructs A better
    w = np.array([[2.0, 1.0], [0.0, 1.0]])
    h = np.array([0.6, 0.5]).reshape(1, 2, 1)
    a = np.array([[1.0], [1.0]])
    greedy = gibbs.select_keep_set(0, w, h, a, 1, "greedy")
    exact = gibbs.select_keep_set(0, w, h, a, 1, "exact")
    assert greedy == (0,)
    assert exact == (1,)
    loss_exact = rounded_loss_oracle(w, h, a, 0, exact)
    loss_greedy = rounded_loss_oracle(w, h, a, 0, greedy)
    assert loss_exact < loss_greedy


def test_exact_matches_enumeration_oracle():
    rng = np.random.default_rng(3)
    w = rng.random((8, 5))
    h = rng.random((2, 5, 6))
    a = pm.reconstruct(w, h) * rng.uniform(0.5, 1.5, (8, 6))
    for j in range(6):
        got = gibbs.select_keep_set(j, w, h, a, 3, "exact")
        losses = {
            s: rounded_loss_oracle(w, h, a, j, s) for s in combinations(range(5), 3)
        }
        best = min(losses, key=losses.get)
        assert losses[got] == pytest.approx(losses[best], rel=1e-12)


def test_exact_dominates_greedy():
    rng = np.random.default_rng(4)
    for trial in range(5):
        w = rng.random((10, 5))
        h = rng.random((3, 5, 8))
        a = pm.reconstruct(w, h) * rng.uniform(0.2, 1.8, (10, 8))
        for j in range(8):
            exact = gibbs.select_keep_set(j, w, h, a, 2, "exact")
            greedy = gibbs.select_keep_set(j, w, h, a, 2, "greedy")
            le = rounded_loss_oracle(w, h, a, j, exact)
            lg = rounded_loss_oracle(w, h, a, j, greedy)
            assert le <= lg + 1e-12 * max(1.0, abs(lg))


def test_exact_refused_for_large_k():
    w = np.ones((20, 17))
    h = np.ones((1, 17, 2))
    with pytest.raises(ValidationError, match="refused"):
        gibbs.select_keep_set(0, w, h, np.ones((20, 2)), 3, "exact")


def test_zero_excluded_zeroes_all_shift_copies():
    rng = np.random.default_rng(5)
    h = rng.random((3, 4, 2))
    out = gibbs.zero_excluded(h, [(0, 2), (1, 3)])
    np.testing.assert_array_equal(out[:, [0, 2], 0], h[:, [0, 2], 0])
    np.testing.assert_array_equal(out[:, [1, 3], 0], 0.0)
    np.testing.assert_array_equal(out[:, [1, 3], 1], h[:, [1, 3], 1])
    np.testing.assert_array_equal(out[:, [0, 2], 1], 0.0)


def test_already_satisfying_solution_unchanged_by_rounding():
    # each sample already uses at most n_el phases
    rng = np.random.default_rng(6)
    w = rng.random((6, 4))
    h = rng.random((2, 4, 3))
    h[:, 2:, 0] = 0.0
    h[:, :2, 1] = 0.0
    h[:, 1:3, 2] = 0.0
    a = pm.reconstruct(w, h)
    keeps = gibbs.keep_sets(w, h, a, 2, "exact")
    np.testing.assert_array_equal(gibbs.zero_excluded(h, keeps), h)


@pytest.mark.parametrize("mode", ["greedy", "exact"])
def test_enforcement_post_conditions(backend, mode):
    inst = make_instance(n=64, j=12, seed=21)
    cfg = pm.SolverConfig(k=4, m=2, seed=2, n_el=2, gibbs=mode, max_iters=150)
    sol = pm.solve(inst, cfg)
    # 100% satisfaction at the reporting threshold
    assert pm.gibbs_percentage(sol, 2) == 1.0
    # hard count: at most n_el phases carry any mass per sample
    contrib = gibbs.presence_arrays(sol.W, sol.H, 0.0)[1]
    assert int((contrib > 0).sum(axis=0).max()) <= 2
    # refinement is loss-non-increasing from the rounded point
    refine_starts = [s[1] for s in sol.segments if s[0] == "refine"]
    assert refine_starts
    for lo in refine_starts:
        seg = sol.loss_trace[lo:]
        assert np.all(np.diff(seg) <= 1e-10 * np.maximum(1.0, seg[:-1]))
        assert seg[-1] <= seg[0]


def test_multiple_rounds(backend):
    inst = make_instance(n=48, j=8, seed=22)
    cfg = pm.SolverConfig(k=4, m=2, seed=3, n_el=2, gibbs="greedy", gibbs_rounds=2, max_iters=80)
    sol = pm.solve(inst, cfg)
    assert [s[0] for s in sol.segments] == ["solve", "refine", "refine"]
    assert pm.gibbs_percentage(sol, 2) == 1.0


def test_presence_wrapper_on_solution(backend):
    inst = make_instance(n=48, j=8, seed=23)
    sol = pm.solve(inst, pm.SolverConfig(k=3, m=2, seed=4, max_iters=40))
    mat = pm.presence(sol, 0.01)
    np.testing.assert_array_equal(mat.indicator, sol.presence)
    assert mat.contribution.shape == (3, 8)
