"""Discrete incremental voting and pull voting on a graph.

The step-level API (:func:`select_pair`, :func:`div_step`, :func:`pull_step`)
is plain Python and mutates an :class:`OpinionState`.  :func:`run` drives the
compiled loop in :mod:`divsim._kernels`; both read randomness from a
``numpy.random.Generator`` two uniforms per step, so a Python-stepped
trajectory and a compiled one coincide for the same generator state.

Random streams: a trajectory's generator is ``numpy.random.Generator(PCG64)``
seeded from a ``SeedSequence``; see :func:`trial_rng`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .graph import Graph


class ProcessKind(str, enum.Enum):
    VERTEX = "vertex"
    EDGE = "edge"

    @property
    def code(self) -> int:
        return K.VERTEX if self is ProcessKind.VERTEX else K.EDGE


class Rule(str, enum.Enum):
    DIV = "div"
    PULL = "pull"

    @property
    def code(self) -> int:
        return K.DIV if self is Rule.DIV else K.PULL


def trial_rng(master_seed: int, trial: int | None = None) -> np.random.Generator:
    """PCG64 generator for ``(master_seed, trial)``.

    The stream is ``SeedSequence(master_seed, spawn_key=(trial,))``, so
    trial ``i`` gets the same stream whether trials run serially or in
    parallel.  ``trial=None`` gives the plain ``SeedSequence(master_seed)``.
    """
    key = () if trial is None else (int(trial),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=key)))


class OpinionState:
    """Opinions X_v in [1..k] with incrementally maintained class statistics.

    ``counts[i]`` is N_i, ``degsum[i]`` the total degree of A_i (so
    ``pi_mass[i] = degsum[i] / 2m``), ``S`` the opinion sum and ``DX`` the
    integer sum of d(v) X_v.  ``s``/``ell`` are the current extreme opinions.
    """

    def __init__(self, graph: Graph, x, k: int | None = None):
        x = np.array(x, dtype=np.int64)
        if x.shape != (graph.n,):
            raise ValueError(f"expected {graph.n} opinions, got shape {x.shape}")
        if x.min() < 1:
            raise ValueError("opinions must be integers >= 1")
        k = int(x.max()) if k is None else int(k)
        if x.max() > k:
            raise ValueError(f"opinion {int(x.max())} exceeds k={k}")
        self.graph = graph
        self.k = k
        self.x = x
        self.recompute()

    def recompute(self) -> None:
        g = self.graph
        self.counts = np.bincount(self.x, minlength=self.k + 2).astype(np.int64)
        self.degsum = np.bincount(self.x, weights=g.degrees, minlength=self.k + 2).astype(np.int64)
        self.S = int(self.x.sum())
        self.DX = int(np.dot(g.degrees, self.x))
        present = np.flatnonzero(self.counts)
        self.s, self.ell = int(present[0]), int(present[-1])

    def copy(self) -> "OpinionState":
        return OpinionState(self.graph, self.x.copy(), self.k)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def pi_mass(self) -> np.ndarray:
        return self.degsum / (2.0 * self.graph.m)

    @property
    def Z(self) -> float:
        return self.graph.n * self.DX / (2.0 * self.graph.m)

    def weight(self, kind: ProcessKind) -> float:
        return float(self.S) if ProcessKind(kind) is ProcessKind.EDGE else self.Z

    def average(self, kind: ProcessKind) -> float:
        """c = W / n for the given process kind."""
        return self.weight(kind) / self.graph.n

    def exact_average(self, kind: ProcessKind) -> Fraction:
        if ProcessKind(kind) is ProcessKind.EDGE:
            return Fraction(self.S, self.graph.n)
        return Fraction(self.DX, 2 * self.graph.m)

    @property
    def is_consensus(self) -> bool:
        return self.s == self.ell

    def present(self) -> list[int]:
        return np.flatnonzero(self.counts).tolist()

    def set_opinion(self, v: int, new: int) -> None:
        old = int(self.x[v])
        if new == old:
            return
        if not 1 <= new <= self.k:
            raise AssertionError(f"opinion {new} left [1..{self.k}]")
        d = int(self.graph.degrees[v])
        self.x[v] = new
        self.counts[old] -= 1
        self.counts[new] += 1
        self.degsum[old] -= d
        self.degsum[new] += d
        self.S += new - old
        self.DX += d * (new - old)
        if new < self.s:
            self.s = new
        if new > self.ell:
            self.ell = new
        if self.counts[old] == 0:
            while self.counts[self.s] == 0:
                self.s += 1
            while self.counts[self.ell] == 0:
                self.ell -= 1

    def check(self) -> None:
        """Compare the incremental bookkeeping against a full recompute."""
        ref = OpinionState(self.graph, self.x, self.k)
        assert np.array_equal(ref.counts, self.counts)
        assert np.array_equal(ref.degsum, self.degsum)
        assert (ref.S, ref.DX, ref.s, ref.ell) == (self.S, self.DX, self.s, self.ell)


def select_pair(graph: Graph, kind: ProcessKind, rng: np.random.Generator) -> tuple[int, int]:
    """Draw ``(v, w)``: v chooses neighbour w.

    Vertex kind: v uniform, then w uniform among v's neighbours.  Edge kind:
    an edge uniformly, then its orientation by a fair bit.
    """
    u1, u2 = rng.random(2)
    v, w = K.select_pair(
        ProcessKind(kind).code, u1, u2, graph.n, graph.m, graph.indptr, graph.indices, graph.edges
    )
    return int(v), int(w)


def pair_probability(graph: Graph, kind: ProcessKind, v: int, w: int) -> float:
    """Exact probability that ``v`` chooses ``w`` in one step."""
    if not graph.has_edge(v, w):
        return 0.0
    if ProcessKind(kind) is ProcessKind.VERTEX:
        return 1.0 / (graph.n * graph.degrees[v])
    return 1.0 / (2 * graph.m)


def div_update(xv: int, xw: int) -> int:
    if xv < xw:
        return xv + 1
    if xv > xw:
        return xv - 1
    return xv


def pull_update(xv: int, xw: int) -> int:
    return xw


def apply_pair(state: OpinionState, rule: Rule, v: int, w: int) -> OpinionState:
    update = div_update if Rule(rule) is Rule.DIV else pull_update
    state.set_opinion(v, update(int(state.x[v]), int(state.x[w])))
    return state


def div_step(state: OpinionState, graph: Graph, kind: ProcessKind, rng: np.random.Generator) -> OpinionState:
    v, w = select_pair(graph, kind, rng)
    return apply_pair(state, Rule.DIV, v, w)


def pull_step(state: OpinionState, graph: Graph, kind: ProcessKind, rng: np.random.Generator) -> OpinionState:
    v, w = select_pair(graph, kind, rng)
    return apply_pair(state, Rule.PULL, v, w)


@dataclass
class TrajectoryResult:
    winner: int | None
    consensus_step: int | None
    two_left_step: int | None
    extr_hits: dict[float, int | None]
    weight_samples: list[tuple[int, int, float]]  # (step, S, Z)
    steps_taken: int
    kind: str
    rule: str
    initial_S: int
    initial_Z: float
    final_S: int
    final_Z: float
    max_drift_S: int
    max_drift_Z: float
    n: int = 0
    initial_extremes: tuple[int, int] = (0, 0)
    cap_hit: bool = False
    final_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def initial_average(self) -> float:
        w = self.initial_S if self.kind == ProcessKind.EDGE.value else self.initial_Z
        return w / self.n

    @property
    def max_weight_drift(self) -> float:
        return float(self.max_drift_S) if self.kind == ProcessKind.EDGE.value else self.max_drift_Z

    def weight_at(self, t: int) -> float:
        """W(t), read from the samples; the weight is frozen after absorption."""
        edge = self.kind == ProcessKind.EDGE.value
        if t >= self.steps_taken:
            if t > self.steps_taken and self.cap_hit:
                raise ValueError(f"run stopped at the cap before step {t}")
            return float(self.final_S) if edge else self.final_Z
        for step, s, z in self.weight_samples:
            if step == t:
                return float(s) if edge else z
        raise ValueError(f"step {t} is not on the sampling grid")

    def to_dict(self) -> dict:
        return {
            "winner": self.winner,
            "consensus_step": self.consensus_step,
            "two_left_step": self.two_left_step,
            "extr_hits": {repr(float(e)): h for e, h in self.extr_hits.items()},
            "steps_taken": self.steps_taken,
            "cap_hit": self.cap_hit,
            "kind": self.kind,
            "rule": self.rule,
            "initial_S": self.initial_S,
            "initial_Z": self.initial_Z,
            "final_S": self.final_S,
            "final_Z": self.final_Z,
            "max_drift_S": self.max_drift_S,
            "max_drift_Z": self.max_drift_Z,
            "weight_samples": [list(r) for r in self.weight_samples],
        }


def default_step_cap(n: int) -> int:
    return 50 * n * n


def run(
    graph: Graph,
    initial: OpinionState,
    kind: ProcessKind = ProcessKind.VERTEX,
    rule: Rule = Rule.DIV,
    rng: np.random.Generator | None = None,
    step_cap: int | None = None,
    eps_list=(),
    sample_stride: int = 0,
    max_chunk: int = 1 << 16,
) -> TrajectoryResult:
    """Run until consensus or ``step_cap`` steps.

    ``extr_hits[eps]`` is the first step at which the smaller of the
    pi-measures of the *initial* extreme opinion classes is at most ``eps``
    (a class that has emptied has measure 0).  ``sample_stride > 0`` records
    ``(t, S, Z)`` at every multiple of the stride, starting at step 0.
    ``initial`` is not modified.
    """
    kind, rule = ProcessKind(kind), Rule(rule)
    if rng is None:
        rng = np.random.default_rng()
    step_cap = default_step_cap(graph.n) if step_cap is None else int(step_cap)
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    n, two_m = graph.n, 2.0 * graph.m

    x = initial.x.copy()
    counts = initial.counts.copy()
    degsum = initial.degsum.copy()
    s0, l0 = initial.s, initial.ell
    st = np.zeros(K.NST, dtype=np.int64)
    st[K.S_MIN], st[K.L_MAX] = s0, l0
    st[K.SUM], st[K.DX] = initial.S, initial.DX
    st[K.S_INIT], st[K.DX_INIT] = initial.S, initial.DX
    st[K.S0], st[K.L0] = s0, l0
    st[K.TWO_LEFT] = 0 if l0 - s0 <= 1 else -1
    st[K.CONS] = 0 if s0 == l0 else -1

    eps = np.asarray(sorted(set(float(e) for e in eps_list)), dtype=np.float64)
    hits = np.full(len(eps), -1, dtype=np.int64)
    if s0 != l0:
        m0 = min(degsum[s0], degsum[l0]) / two_m
        hits[eps >= m0] = 0

    samples: list[tuple[int, int, int]] = []
    if sample_stride > 0:
        samples.append((0, initial.S, initial.DX))

    chunk = 256
    while st[K.CONS] < 0 and st[K.T] < step_cap:
        nsteps = int(min(chunk, step_cap - st[K.T]))
        uniforms = rng.random(2 * nsteps)
        buf = np.empty((nsteps // sample_stride + 1 if sample_stride > 0 else 0, 3), dtype=np.int64)
        ns = K.run_chunk(
            kind.code, rule.code, n, graph.m, graph.indptr, graph.indices, graph.edges, graph.degrees,
            x, counts, degsum, st, eps, hits, uniforms, int(sample_stride), buf, step_cap,
        )
        samples.extend(map(tuple, buf[:ns].tolist()))
        chunk = min(chunk * 2, max_chunk)

    def z(dx) -> float:
        return n * dx / two_m

    cons = int(st[K.CONS]) if st[K.CONS] >= 0 else None
    return TrajectoryResult(
        winner=int(st[K.S_MIN]) if cons is not None else None,
        consensus_step=cons,
        two_left_step=int(st[K.TWO_LEFT]) if st[K.TWO_LEFT] >= 0 else None,
        extr_hits={float(e): (int(h) if h >= 0 else None) for e, h in zip(eps, hits)},
        weight_samples=[(t, s, z(dx)) for t, s, dx in samples],
        steps_taken=int(st[K.T]),
        kind=kind.value,
        rule=rule.value,
        initial_S=int(initial.S),
        initial_Z=z(initial.DX),
        final_S=int(st[K.SUM]),
        final_Z=z(int(st[K.DX])),
        max_drift_S=int(st[K.DRIFT_S]),
        max_drift_Z=z(int(st[K.DRIFT_DX])),
        n=n,
        initial_extremes=(int(s0), int(l0)),
        cap_hit=cons is None,
        final_x=x,
    )


def run_python(
    graph: Graph,
    initial: OpinionState,
    kind: ProcessKind,
    rule: Rule,
    rng: np.random.Generator,
    step_cap: int,
) -> tuple[OpinionState, int]:
    """Reference stepper: plain Python loop over :func:`select_pair`.

    Returns the final state and the number of steps taken.
    """
    state = initial.copy()
    t = 0
    while not state.is_consensus and t < step_cap:
        v, w = select_pair(graph, kind, rng)
        apply_pair(state, rule, v, w)
        t += 1
    return state, t
