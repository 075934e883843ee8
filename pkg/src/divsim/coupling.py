"""DIV coupled with two-opinion pull voting on shared (v, w) draws.

Construction: both chains use the same selected pair.  DIV updates X_v by
the incremental rule; the pull chain sets v's membership of B to w's.  For
the s-side mode B(0) = A_s(0) and the claim checked at every step is
A_s(t) in B(t) and A_l(t) in V minus B(t); the l-side mode swaps the roles.
Here s and l are the initial extreme labels.

A non-zero violation count falsifies this particular construction; it says
nothing about whether some other coupling exists.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .dynamics import OpinionState, ProcessKind, TrajectoryResult, default_step_cap
from .graph import Graph


class CouplingMode(str, enum.Enum):
    S_SIDE = "s-side"
    L_SIDE = "l-side"


@dataclass
class CouplingReport:
    steps: int
    violations: int
    first_violation: int | None
    consequence_violations: int
    div: TrajectoryResult
    pull: TrajectoryResult
    mode: str

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "violations": self.violations,
            "first_violation": self.first_violation,
            "consequence_violations": self.consequence_violations,
            "div_winner": self.div.winner,
            "pull_winner": self.pull.winner,
            "div_consensus_step": self.div.consensus_step,
            "pull_consensus_step": self.pull.consensus_step,
            "mode": self.mode,
            "construction": "shared-pair monotone coupling",
        }


def _brief(kind, rule, n, winner, cons, steps, S0, Z0, S1, Z1, extremes) -> TrajectoryResult:
    return TrajectoryResult(
        winner=winner,
        consensus_step=cons,
        two_left_step=None,
        extr_hits={},
        weight_samples=[],
        steps_taken=steps,
        kind=kind,
        rule=rule,
        initial_S=S0,
        initial_Z=Z0,
        final_S=S1,
        final_Z=Z1,
        max_drift_S=0,
        max_drift_Z=0.0,
        n=n,
        initial_extremes=extremes,
        cap_hit=cons is None,
    )


def coupled_run(
    graph: Graph,
    div_initial: OpinionState,
    mode: CouplingMode = CouplingMode.S_SIDE,
    kind: ProcessKind = ProcessKind.VERTEX,
    rng: np.random.Generator | None = None,
    step_cap: int | None = None,
    max_chunk: int = 1 << 16,
) -> CouplingReport:
    """Run both chains until both are absorbed or ``step_cap`` steps pass.

    The pull chain holds opinion 1 on B and 2 elsewhere, so its winner is 1
    when B swallows V and 2 when B empties.
    """
    mode, kind = CouplingMode(mode), ProcessKind(kind)
    rng = np.random.default_rng() if rng is None else rng
    step_cap = default_step_cap(graph.n) if step_cap is None else int(step_cap)
    n = graph.n
    s0, l0 = div_initial.s, div_initial.ell
    inside, outside = (s0, l0) if mode is CouplingMode.S_SIDE else (l0, s0)

    x = div_initial.x.copy()
    b = (x == inside).astype(np.int8)
    counts = div_initial.counts.copy()
    st = np.zeros(K.NCST, dtype=np.int64)
    st[K.C_S], st[K.C_L], st[K.C_B] = s0, l0, int(b.sum())
    st[K.C_DIV_CONS] = 0 if s0 == l0 else -1
    st[K.C_PULL_CONS] = 0 if st[K.C_B] in (0, n) else -1
    st[K.C_FIRST_VIOL] = -1
    st[K.C_S0], st[K.C_L0] = s0, l0
    if s0 != l0:
        bad = ((x == inside) & (b == 0)) | ((x == outside) & (b == 1))
        st[K.C_BAD] = int(bad.sum())

    chunk = 256
    while st[K.C_T] < step_cap and not (st[K.C_S] == st[K.C_L] and st[K.C_B] in (0, n)):
        nsteps = int(min(chunk, step_cap - st[K.C_T]))
        K.coupled_chunk(
            kind.code, n, graph.m, graph.indptr, graph.indices, graph.edges,
            x, b, counts, st, inside, outside, rng.random(2 * nsteps), step_cap,
        )
        chunk = min(chunk * 2, max_chunk)

    steps = int(st[K.C_T])
    two_m = 2.0 * graph.m
    final = OpinionState(graph, x, div_initial.k)
    div_cons = int(st[K.C_DIV_CONS]) if st[K.C_DIV_CONS] >= 0 else None
    div = _brief(
        kind.value, "div", n, final.s if div_cons is not None else None, div_cons, steps,
        div_initial.S, div_initial.Z, final.S, final.Z, (s0, l0),
    )
    div.final_x = x
    pull_cons = int(st[K.C_PULL_CONS]) if st[K.C_PULL_CONS] >= 0 else None
    nb = int(st[K.C_B])
    pull_winner = None if pull_cons is None else (1 if nb == n else 2)
    b0 = div_initial.x == inside
    pull_S0 = int(2 * n - b0.sum())
    pull_Z0 = n * float(2 * graph.degrees.sum() - graph.degrees[b0].sum()) / two_m
    pull_S1 = int(2 * n - nb)
    pull_Z1 = n * float(2 * graph.degrees.sum() - graph.degrees[b == 1].sum()) / two_m
    pull = _brief(
        kind.value, "pull", n, pull_winner, pull_cons, steps, pull_S0, pull_Z0, pull_S1, pull_Z1, (1, 2),
    )
    pull.final_x = np.where(b == 1, 1, 2)
    viol = int(st[K.C_VIOL])
    return CouplingReport(
        steps=steps,
        violations=viol,
        first_violation=int(st[K.C_FIRST_VIOL]) if st[K.C_FIRST_VIOL] >= 0 else None,
        consequence_violations=int(st[K.C_CONSEQ]),
        div=div,
        pull=pull,
        mode=mode.value,
    )
