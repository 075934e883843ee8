from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divsim.dynamics import (
    OpinionState,
    ProcessKind,
    Rule,
    apply_pair,
    div_step,
    div_update,
    pair_probability,
    pull_update,
    run,
    run_python,
    select_pair,
    trial_rng,
)
from divsim.graph import complete_graph, cycle_graph, gnp, path_graph, random_regular, star_graph
from divsim.oracle import exact_weight, one_step_expected_weight

KINDS = [ProcessKind.VERTEX, ProcessKind.EDGE]
RULES = [Rule.DIV, Rule.PULL]


def test_update_rules():
    assert div_update(2, 5) == 3
    assert div_update(5, 2) == 4
    assert div_update(3, 3) == 3
    assert pull_update(2, 5) == 5


@pytest.mark.parametrize("kind", KINDS)
def test_pair_probabilities_sum_to_one(kind):
    g = star_graph(6)
    total = sum(pair_probability(g, kind, v, w) for v in range(g.n) for w in range(g.n))
    assert total == pytest.approx(1.0)
    assert pair_probability(g, kind, 1, 2) == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_select_pair_frequencies(kind):
    g = star_graph(4)
    rng = np.random.default_rng(0)
    N = 40000
    counts = {}
    for _ in range(N):
        p = select_pair(g, kind, rng)
        counts[p] = counts.get(p, 0) + 1
    for (v, w), c in counts.items():
        p = pair_probability(g, kind, v, w)
        assert p > 0
        assert abs(c / N - p) <= 4 * np.sqrt(p * (1 - p) / N)


def test_opinion_state_bookkeeping():
    g = star_graph(4)
    s = OpinionState(g, [2, 1, 3, 3])
    assert (s.s, s.ell, s.k) == (1, 3, 3)
    assert s.S == 9 and s.DX == 3 * 2 + 1 + 3 + 3
    apply_pair(s, Rule.DIV, 1, 0)
    s.check()
    assert (s.s, s.ell) == (2, 3)
    assert s.present() == [2, 3]
    assert s.exact_average(ProcessKind.VERTEX) == Fraction(7, 3)


def test_opinion_state_rejects_bad_values():
    with pytest.raises(ValueError):
        OpinionState(complete_graph(3), [0, 1, 2])
    with pytest.raises(ValueError):
        OpinionState(complete_graph(3), [1, 2])


def test_trial_rng_streams_independent_of_order():
    a = trial_rng(7, 3).random(4)
    trial_rng(7, 2).random(10)
    assert np.array_equal(a, trial_rng(7, 3).random(4))
    assert not np.array_equal(a, trial_rng(7, 4).random(4))


def test_consensus_start():
    g = cycle_graph(5)
    res = run(g, OpinionState(g, [2] * 5), rng=np.random.default_rng(0))
    assert res.winner == 2 and res.consensus_step == 0 and res.steps_taken == 0


def test_cap_hit_reported():
    g = path_graph(30)
    x = [1] * 15 + [5] * 15
    res = run(g, OpinionState(g, x), rng=np.random.default_rng(0), step_cap=50)
    assert res.cap_hit and res.winner is None and res.steps_taken == 50


def test_initial_not_modified():
    g = complete_graph(6)
    st0 = OpinionState(g, [1, 2, 3, 4, 5, 6])
    run(g, st0, rng=np.random.default_rng(1))
    assert st0.x.tolist() == [1, 2, 3, 4, 5, 6]


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("rule", RULES)
@pytest.mark.parametrize("gname", ["K5", "P6", "star6", "RR10_3"])
def test_kernel_matches_python_stepper(small_graphs, kind, rule, gname):
    g = small_graphs[gname]
    for seed in range(5):
        x = np.random.default_rng(seed).integers(1, 5, g.n)
        init = OpinionState(g, x, 4)
        res = run(g, init, kind, rule, np.random.default_rng(seed), 10**5)
        ref, t = run_python(g, init, kind, rule, np.random.default_rng(seed), 10**5)
        assert res.final_x.tolist() == ref.x.tolist()
        assert res.steps_taken == t


@pytest.mark.parametrize("chunk", [1, 7, 256, 1 << 16])
def test_chunking_does_not_change_trajectory(chunk):
    g = random_regular(20, 4, seed=2)
    init = OpinionState(g, np.random.default_rng(3).integers(1, 6, 20), 5)
    base = run(g, init, rng=np.random.default_rng(9), eps_list=[0.1], sample_stride=5)
    res = run(g, init, rng=np.random.default_rng(9), eps_list=[0.1], sample_stride=5, max_chunk=chunk)
    assert res.to_dict() == base.to_dict()


def test_samples_and_weight_at():
    g = complete_graph(8)
    init = OpinionState(g, [1, 1, 2, 3, 3, 4, 5, 5])
    res = run(g, init, ProcessKind.EDGE, rng=np.random.default_rng(4), sample_stride=3)
    assert res.weight_samples[0] == (0, 24, 24.0)
    assert all(t % 3 == 0 for t, _, _ in res.weight_samples)
    assert res.weight_at(0) == 24
    assert res.weight_at(res.steps_taken + 100) == res.final_S
    with pytest.raises(ValueError):
        res.weight_at(1)


def test_eps_hits_ordered():
    g = complete_graph(30)
    init = OpinionState(g, np.random.default_rng(0).integers(1, 6, 30), 5)
    res = run(g, init, rng=np.random.default_rng(1), eps_list=[0.01, 0.1, 0.2])
    h = res.extr_hits
    assert h[0.2] <= h[0.1] <= h[0.01] <= res.consensus_step


def test_two_left_before_consensus():
    g = complete_graph(20)
    init = OpinionState(g, np.random.default_rng(0).integers(1, 6, 20), 5)
    res = run(g, init, rng=np.random.default_rng(2))
    assert 0 < res.two_left_step <= res.consensus_step


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.sampled_from(KINDS), st.sampled_from(RULES))
def test_martingale_exact(seed, k, kind, rule):
    rng = np.random.default_rng(seed)
    g = gnp(int(rng.integers(3, 9)), 0.6, seed)
    x = rng.integers(1, k + 1, g.n)
    assert one_step_expected_weight(g, x, kind, rule, exact=True) == exact_weight(g, x, kind)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6), st.sampled_from(KINDS))
def test_extremes_never_expand(seed, k, kind):
    rng = np.random.default_rng(seed)
    g = gnp(10, 0.4, seed)
    s = OpinionState(g, rng.integers(1, k + 1, g.n), k)
    lo, hi = s.s, s.ell
    for _ in range(300):
        div_step(s, g, kind, rng)
        assert lo <= s.s and s.ell <= hi
        lo, hi = s.s, s.ell
        if s.is_consensus:
            break
    s.check()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(12, 3), (10, 4), (9, 2)]))
def test_regular_graph_S_equals_Z(seed, shape):
    # on d-regular graphs n*pi_v = 1, so Z = S exactly at every step
    n, d = shape
    g = cycle_graph(n) if d == 2 else random_regular(n, d, seed)
    rng = np.random.default_rng(seed)
    s = OpinionState(g, rng.integers(1, 4, n), 3)
    for _ in range(200):
        div_step(s, g, ProcessKind.EDGE, rng)
        assert Fraction(int(s.S)) == exact_weight(g, s.x, ProcessKind.VERTEX)
