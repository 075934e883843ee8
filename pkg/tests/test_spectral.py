import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divsim.graph import GraphError, Graph, complete_graph, cycle_graph, gnp, path_graph, random_regular, star_graph
from divsim.spectral import ergodic_flow, mixing_check, spectrum


@pytest.mark.parametrize("n", [3, 4, 10, 25])
def test_complete_lambda(n):
    assert spectrum(complete_graph(n)).lam == pytest.approx(1 / (n - 1), abs=1e-10)


def test_cycle4_bipartite():
    sp = spectrum(cycle_graph(4))
    assert sp.bipartite and sp.lam == pytest.approx(1.0, abs=1e-9)


def test_odd_cycle_not_bipartite():
    sp = spectrum(cycle_graph(7))
    assert not sp.bipartite
    assert sp.lam == pytest.approx(np.cos(np.pi / 7), abs=1e-10)


def test_star_is_bipartite():
    assert spectrum(star_graph(6)).bipartite


def test_eigenvalues_sorted_and_top_is_one():
    sp = spectrum(random_regular(20, 4, seed=1))
    ev = np.array(sp.eigenvalues)
    assert ev[0] == pytest.approx(1.0)
    assert np.all(np.diff(ev) <= 1e-12)
    assert sp.lam == pytest.approx(max(abs(sp.lambda2), abs(sp.lambdan)))


def test_long_path_has_poor_mixing():
    assert spectrum(path_graph(100)).lam >= 0.99


def test_size_cap_and_disconnected():
    with pytest.raises(GraphError):
        spectrum(complete_graph(30), size_cap=20)
    with pytest.raises(GraphError):
        spectrum(Graph.from_edges(4, [(0, 1), (2, 3)], allow_disconnected=True))


def test_ergodic_flow_symmetric_and_total():
    g = random_regular(12, 3, seed=4)
    S, U = [0, 1, 2], [3, 4, 5, 6]
    assert ergodic_flow(g, S, U) == pytest.approx(ergodic_flow(g, U, S))
    assert ergodic_flow(g, range(12), range(12)) == pytest.approx(1.0)


def test_mixing_full_set_exact_zero():
    g = complete_graph(10)
    c = mixing_check(g, np.ones(10, bool), np.ones(10, bool), spectrum(g).lam)
    assert c.deviation == pytest.approx(0.0, abs=1e-15) and c.holds


def test_mixing_bad_vertices():
    with pytest.raises(GraphError):
        mixing_check(complete_graph(4), [0, 9], [1], 0.3)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 25), st.floats(0.25, 0.9), st.integers(0, 10**6), st.data())
def test_mixing_lemma_property(n, p, seed, data):
    g = gnp(n, p, seed)
    lam = spectrum(g).lam
    for _ in range(30):
        S = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        U = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        assert mixing_check(g, np.array(S), np.array(U), lam).holds
