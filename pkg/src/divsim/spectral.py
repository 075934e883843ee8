"""Spectrum of the simple-random-walk matrix and expander-mixing quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError, stationary

DEFAULT_SIZE_CAP = 5000
TOL = 1e-9


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: tuple[float, ...]  # descending
    lam: float
    bipartite: bool
    pi_min: float
    pi_inf_norm: float

    @property
    def lambda2(self) -> float:
        return self.eigenvalues[1] if len(self.eigenvalues) > 1 else 1.0

    @property
    def lambdan(self) -> float:
        return self.eigenvalues[-1]


def spectrum(graph: Graph, size_cap: int = DEFAULT_SIZE_CAP) -> SpectralSummary:
    """Eigenvalues of P = D^-1 A, computed on D^-1/2 A D^-1/2."""
    if graph.n > size_cap:
        raise GraphError(f"n={graph.n} exceeds dense eigensolver cap {size_cap}")
    if not graph.connected:
        raise GraphError("spectrum requires a connected graph")
    a = graph.adjacency_matrix()
    s = 1.0 / np.sqrt(graph.degrees.astype(float))
    sym = a * s[:, None] * s[None, :]
    ev = np.linalg.eigvalsh(sym)[::-1]
    lam = max(abs(ev[1]), abs(ev[-1])) if graph.n > 1 else 0.0
    st = stationary(graph)
    return SpectralSummary(
        eigenvalues=tuple(float(x) for x in ev),
        lam=float(min(lam, 1.0)),
        bipartite=bool(abs(ev[-1] + 1.0) <= TOL),
        pi_min=st.pi_min,
        pi_inf_norm=st.pi_inf_norm,
    )


def _mask(graph: Graph, vertices) -> np.ndarray:
    idx = np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices)
    if idx.dtype == np.bool_:
        if idx.shape != (graph.n,):
            raise GraphError("boolean vertex mask has wrong length")
        return idx
    idx = idx.astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= graph.n):
        raise GraphError(f"vertex index out of range 0..{graph.n - 1}")
    mask = np.zeros(graph.n, dtype=bool)
    mask[idx] = True
    return mask


def ergodic_flow(graph: Graph, S, U) -> float:
    """Q(S, U) = sum over v in S of pi_v P(v, U), i.e. e(S, U) / 2m."""
    ms, mu = _mask(graph, S), _mask(graph, U)
    e = graph.edges
    # ordered pairs (v, w) with v in S, w in U, both orientations of each edge
    count = np.count_nonzero(ms[e[:, 0]] & mu[e[:, 1]]) + np.count_nonzero(ms[e[:, 1]] & mu[e[:, 0]])
    return count / (2.0 * graph.m)


@dataclass(frozen=True)
class MixingCheck:
    deviation: float
    bound: float
    holds: bool


def mixing_check(graph: Graph, S, U, lam: float) -> MixingCheck:
    """|Q(S,U) - pi(S)pi(U)| against lambda * sqrt(pi(S)pi(S^c)pi(U)pi(U^c))."""
    ms, mu = _mask(graph, S), _mask(graph, U)
    two_m = 2.0 * graph.m
    ps, pu = int(graph.degrees[ms].sum()) / two_m, int(graph.degrees[mu].sum()) / two_m
    dev = abs(ergodic_flow(graph, ms, mu) - ps * pu)
    prod = ps * max(1.0 - ps, 0.0) * pu * max(1.0 - pu, 0.0)
    bound = lam * math.sqrt(prod)
    return MixingCheck(deviation=dev, bound=bound, holds=dev <= bound + 1e-12)
