"""Exact ground truth on small instances by full state-space enumeration.

States are whole opinion assignments, encoded as integers
``sum_v x_v * B**v`` with ``B = k + 1``; only the set reachable from the
start is enumerated.  Absorption probabilities come from a dense solve for
small chains, a sparse LU solve above that, or plain fixed-point sweeps
``h <- P h`` on request.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .dynamics import ProcessKind, Rule, div_update, pull_update
from .graph import Graph

DEFAULT_STATE_CAP = 2_000_000
DENSE_LIMIT = 10_000
SWEEP_CAP = 10_000_000
RESIDUAL_TOL = 1e-12


class StateCapExceeded(RuntimeError):
    pass


def _ordered_pairs(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    e = graph.edges
    return np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]])


def pair_probabilities(graph: Graph, kind: ProcessKind) -> tuple[np.ndarray, np.ndarray, list[Fraction]]:
    """All ordered pairs (v, w) with their exact selection probabilities."""
    vs, ws = _ordered_pairs(graph)
    if ProcessKind(kind) is ProcessKind.VERTEX:
        probs = [Fraction(1, graph.n * int(graph.degrees[v])) for v in vs.tolist()]
    else:
        probs = [Fraction(1, 2 * graph.m)] * len(vs)
    return vs, ws, probs


def exact_weight(graph: Graph, x, kind: ProcessKind) -> Fraction:
    """S(x) for the edge kind, Z(x) = n * sum pi_v x_v for the vertex kind."""
    x = [int(a) for a in x]
    if ProcessKind(kind) is ProcessKind.EDGE:
        return Fraction(sum(x))
    dx = sum(int(d) * a for d, a in zip(graph.degrees.tolist(), x))
    return Fraction(graph.n * dx, 2 * graph.m)


def one_step_expected_weight(graph: Graph, x, kind: ProcessKind, rule: Rule = Rule.DIV, exact: bool = False):
    """E[W(t+1) | X(t) = x] by summing over every ordered pair (v, w)."""
    x = [int(a) for a in x]
    update = div_update if Rule(rule) is Rule.DIV else pull_update
    vs, ws, probs = pair_probabilities(graph, kind)
    w0 = exact_weight(graph, x, kind)
    edge = ProcessKind(kind) is ProcessKind.EDGE
    total = Fraction(0)
    for v, w, p in zip(vs.tolist(), ws.tolist(), probs):
        delta = update(x[v], x[w]) - x[v]
        if edge:
            change = Fraction(delta)
        else:
            change = Fraction(graph.n * int(graph.degrees[v]) * delta, 2 * graph.m)
        total += p * (w0 + change)
    return total if exact else float(total)


@dataclass
class Chain:
    """Reachable chain from one start state."""

    codes: np.ndarray  # sorted state codes
    states: np.ndarray  # (N, n) opinions, row i decodes codes[i]
    P: sp.csr_matrix  # full transition matrix including self-loops
    start: int
    absorbing: np.ndarray  # boolean mask
    base: int

    @property
    def size(self) -> int:
        return len(self.codes)


def _decode(codes: np.ndarray, n: int, base: int) -> np.ndarray:
    out = np.empty((len(codes), n), dtype=np.int64)
    c = codes.copy()
    for v in range(n):
        c, out[:, v] = np.divmod(c, base)
    return out


def _children(states: np.ndarray, codes: np.ndarray, vs, ws, powers, rule: Rule):
    xv = states[:, vs]
    xw = states[:, ws]
    if rule is Rule.DIV:
        new = xv + np.sign(xw - xv)
    else:
        new = xw
    delta = new - xv
    child = codes[:, None] + delta * powers[vs][None, :]
    return child, delta != 0


def build_chain(graph: Graph, x0, kind: ProcessKind, rule: Rule = Rule.DIV,
                state_cap: int = DEFAULT_STATE_CAP) -> Chain:
    kind, rule = ProcessKind(kind), Rule(rule)
    x0 = np.asarray(x0, dtype=np.int64)
    n = graph.n
    base = int(x0.max()) + 1
    if float(base) ** n > 2**62:
        raise StateCapExceeded(f"state encoding overflows for n={n}, k={base - 1}")
    powers = base ** np.arange(n, dtype=np.int64)
    vs, ws, fprobs = pair_probabilities(graph, kind)
    probs = np.array([float(p) for p in fprobs])

    start_code = int(np.dot(x0, powers))
    seen = np.array([start_code], dtype=np.int64)
    frontier = seen.copy()
    while len(frontier):
        child, moved = _children(_decode(frontier, n, base), frontier, vs, ws, powers, rule)
        cand = np.unique(child[moved])
        new = np.setdiff1d(cand, seen, assume_unique=True)
        seen = np.union1d(seen, new)
        if len(seen) > state_cap:
            raise StateCapExceeded(f"more than {state_cap} reachable states")
        frontier = new

    states = _decode(seen, n, base)
    child, moved = _children(states, seen, vs, ws, powers, rule)
    rows = np.broadcast_to(np.arange(len(seen))[:, None], child.shape)[moved]
    cols = np.searchsorted(seen, child[moved])
    vals = np.broadcast_to(probs[None, :], child.shape)[moved]
    out = np.bincount(rows, weights=vals, minlength=len(seen))
    stay = 1.0 - out
    P = sp.csr_matrix(
        (np.concatenate([vals, stay]), (np.concatenate([rows, np.arange(len(seen))]),
                                        np.concatenate([cols, np.arange(len(seen))]))),
        shape=(len(seen), len(seen)),
    )
    absorbing = ~moved.any(axis=1)
    return Chain(
        codes=seen,
        states=states,
        P=P,
        start=int(np.searchsorted(seen, start_code)),
        absorbing=absorbing,
        base=base,
    )


@dataclass
class WinDistribution:
    probabilities: dict[int, float]
    states: int
    residual: float
    method: str

    def to_dict(self) -> dict:
        return {
            "states": self.states,
            "win_distribution": {str(k): v for k, v in sorted(self.probabilities.items())},
            "residual": self.residual,
            "method": self.method,
        }


def absorption_probabilities(chain: Chain, method: str = "auto") -> tuple[np.ndarray, list[int], float, str]:
    """Matrix H (states x winners) of absorption probabilities and the residual."""
    absorbing = np.flatnonzero(chain.absorbing)
    winners = [int(chain.states[a, 0]) for a in absorbing]
    transient = np.flatnonzero(~chain.absorbing)
    N = chain.size
    H = np.zeros((N, len(absorbing)))
    H[absorbing, np.arange(len(absorbing))] = 1.0
    if len(transient) == 0:
        return H, winners, 0.0, "trivial"
    P = chain.P
    Ptt = P[transient][:, transient]
    Pta = P[transient][:, absorbing]
    rhs = Pta.toarray()

    if method == "auto":
        method = "dense" if len(transient) <= DENSE_LIMIT else "sparse"
    if method == "dense":
        A = np.eye(len(transient)) - Ptt.toarray()
        H[transient] = np.linalg.solve(A, rhs)
    elif method == "sparse":
        A = (sp.identity(len(transient), format="csc") - Ptt.tocsc()).tocsc()
        H[transient] = splu(A).solve(rhs)
    elif method == "sweep":
        h = np.zeros((len(transient), len(absorbing)))
        for _ in range(SWEEP_CAP):
            nh = Ptt @ h + rhs
            if np.max(np.abs(nh - h)) <= RESIDUAL_TOL * 1e-2:
                h = nh
                break
            h = nh
        H[transient] = h
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = float(np.max(np.abs(P[transient] @ H - H[transient])))
    return H, winners, residual, method


def exact_win_distribution(graph: Graph, x0, kind: ProcessKind = ProcessKind.VERTEX, rule: Rule = Rule.DIV,
                           state_cap: int = DEFAULT_STATE_CAP, method: str = "auto") -> WinDistribution:
    chain = build_chain(graph, x0, kind, rule, state_cap)
    H, winners, residual, used = absorption_probabilities(chain, method)
    row = H[chain.start]
    return WinDistribution(
        probabilities={w: float(p) for w, p in sorted(zip(winners, row))},
        states=chain.size,
        residual=residual,
        method=used,
    )


@dataclass
class FinalStageCheck:
    low: int
    p: float
    q: float
    oracle: dict[int, float]
    max_error: float

    @property
    def matches(self) -> bool:
        return self.max_error <= 1e-10


def exact_final_stage_check(graph: Graph, x0, kind: ProcessKind = ProcessKind.VERTEX) -> FinalStageCheck:
    """Closed form p = i + 1 - c', q = c' - i against the exact chain."""
    x0 = np.asarray(x0, dtype=np.int64)
    present = sorted(set(x0.tolist()))
    if len(present) > 2 or (len(present) == 2 and present[1] != present[0] + 1):
        raise ValueError(f"final stage needs one opinion or two adjacent opinions, got {present}")
    i = present[0]
    c = exact_weight(graph, x0, kind) / graph.n
    p, q = i + 1 - c, c - i
    if len(present) == 1:
        return FinalStageCheck(i, 1.0, 0.0, {i: 1.0}, 0.0)
    dist = exact_win_distribution(graph, x0, kind, Rule.DIV).probabilities
    err = max(abs(dist.get(i, 0.0) - float(p)), abs(dist.get(i + 1, 0.0) - float(q)))
    return FinalStageCheck(i, float(p), float(q), dist, err)
