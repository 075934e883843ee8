"""Undirected simple graphs, the example families, and stationary measures.

Vertices are dense integer indices ``0..n-1``.  A :class:`Graph` stores its
adjacency in CSR form (``indptr``/``indices``, neighbours sorted) plus the
canonical edge array, all read-only so that a graph can be shared between
concurrent trial workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

MAX_RETRIES = 1000


class GraphError(ValueError):
    """Invalid graph input or infeasible construction."""


class DisconnectedGraphError(GraphError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    m: int
    edges: np.ndarray  # (m, 2), u < v, lexicographically sorted
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray
    connected: bool

    @classmethod
    def from_edges(cls, n: int, edges, *, allow_disconnected: bool = False) -> "Graph":
        """Build a graph from an iterable of ``(u, v)`` pairs.

        Raises :class:`GraphError` on self-loops, duplicate edges or
        out-of-range endpoints, and :class:`DisconnectedGraphError` when the
        result is disconnected unless ``allow_disconnected`` is set.
        """
        n = int(n)
        if n < 1:
            raise GraphError(f"vertex count must be positive, got {n}")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError(f"edge endpoint out of range 0..{n - 1}")
        if np.any(e[:, 0] == e[:, 1]):
            u = int(e[e[:, 0] == e[:, 1]][0, 0])
            raise GraphError(f"self-loop at vertex {u}")
        canon = np.sort(e, axis=1)
        order = np.lexsort((canon[:, 1], canon[:, 0]))
        canon = canon[order]
        if len(canon) > 1:
            dup = np.all(canon[1:] == canon[:-1], axis=1)
            if dup.any():
                u, v = canon[1:][dup][0]
                raise GraphError(f"duplicate edge ({u}, {v})")
        m = len(canon)

        src = np.concatenate([canon[:, 0], canon[:, 1]])
        dst = np.concatenate([canon[:, 1], canon[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        degrees = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])

        if n == 1:
            connected = True
        else:
            adj = csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
            ncomp, _ = connected_components(adj, directed=False)
            connected = ncomp == 1
        if not connected and not allow_disconnected:
            raise DisconnectedGraphError("graph is disconnected")

        return cls(
            n=n,
            m=m,
            edges=_readonly(canon),
            indptr=_readonly(indptr),
            indices=_readonly(dst.astype(np.int64)),
            degrees=_readonly(degrees),
            connected=bool(connected),
        )

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def is_regular(self) -> bool:
        return bool(np.all(self.degrees == self.degrees[0]))

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.edges[:, 0], self.edges[:, 1]] = 1.0
        a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    pi: np.ndarray
    pi_min: float
    pi_inf_norm: float
    pi_2_norm: float

    def measure(self, vertices) -> float:
        """pi(S) for a vertex collection or boolean mask."""
        idx = np.asarray(vertices)
        if idx.dtype != np.bool_:
            idx = idx.astype(np.int64)
        return float(self.pi[idx].sum())


def stationary(graph: Graph) -> StationaryDistribution:
    """pi_v = d(v) / 2m."""
    pi = _readonly(graph.degrees / (2.0 * graph.m))
    return StationaryDistribution(
        pi=pi,
        pi_min=float(pi.min()),
        pi_inf_norm=float(pi.max()),
        pi_2_norm=float(np.sqrt(np.dot(pi, pi))),
    )


# -- edge-list text format ---------------------------------------------------


def load_edge_list(text: str, *, allow_disconnected: bool = False) -> Graph:
    """Parse ``"n m"`` followed by one ``"u v"`` line per undirected edge."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty edge list")
    try:
        header = [int(t) for t in lines[0].split()]
    except ValueError as exc:
        raise GraphError(f"line 1: cannot parse header {lines[0]!r}") from exc
    if len(header) != 2:
        raise GraphError(f"line 1: expected 'n m', got {lines[0]!r}")
    n, m = header
    edges = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphError(f"line {lineno}: cannot parse {ln!r}") from exc
        edges.append((u, v))
    if len(edges) != m:
        raise GraphError(f"header declares m={m} but {len(edges)} edges listed")
    return Graph.from_edges(n, edges, allow_disconnected=allow_disconnected)


def read_edge_list(path, *, allow_disconnected: bool = False) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh.read(), allow_disconnected=allow_disconnected)


def to_edge_list(graph: Graph) -> str:
    out = [f"{graph.n} {graph.m}"]
    out.extend(f"{u} {v}" for u, v in graph.edges.tolist())
    return "\n".join(out) + "\n"


# -- families ----------------------------------------------------------------


def complete_graph(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    iu = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.column_stack(iu))


def path_graph(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"path needs n >= 2, got {n}")
    v = np.arange(n - 1)
    return Graph.from_edges(n, np.column_stack([v, v + 1]))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    v = np.arange(n)
    return Graph.from_edges(n, np.column_stack([v, (v + 1) % n]))


def star_graph(n: int) -> Graph:
    """Star on ``n`` vertices with centre 0."""
    if n < 2:
        raise GraphError(f"star needs n >= 2, got {n}")
    leaves = np.arange(1, n)
    return Graph.from_edges(n, np.column_stack([np.zeros_like(leaves), leaves]))


def _pair_stubs(n: int, d: int, rng: np.random.Generator):
    # Pairing model, rejecting individual loop/multi-edge pairs and re-pairing
    # the leftover stubs; gives up (returns None) when no valid pair remains.
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while len(stubs):
        rng.shuffle(stubs)
        leftover = []
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover.extend((a, b))
        if not leftover:
            break
        left = sorted(set(leftover))
        if not any(
            (a, b) not in edges for i, a in enumerate(left) for b in left[i + 1 :]
        ):
            return None
        stubs = np.asarray(leftover, dtype=np.int64)
    return sorted(edges)


def random_regular(n: int, d: int, seed=None) -> Graph:
    """Connected simple ``d``-regular graph on ``n`` vertices (pairing model)."""
    if (n * d) % 2:
        raise GraphError(f"n*d must be even (n={n}, d={d})")
    if not 3 <= d < n:
        raise GraphError(f"need 3 <= d < n (n={n}, d={d})")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        edges = _pair_stubs(n, d, rng)
        if edges is None:
            continue
        g = Graph.from_edges(n, edges, allow_disconnected=True)
        if g.connected:
            return g
    raise GraphError(f"no connected simple {d}-regular graph after {MAX_RETRIES} attempts")


def gnp(n: int, p: float, seed=None) -> Graph:
    """Erdos-Renyi G(n, p), resampled until connected."""
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p must lie in (0, 1], got {p}")
    if n < 2:
        raise GraphError(f"G(n,p) needs n >= 2, got {n}")
    if p == 0.0:
        raise DisconnectedGraphError("G(n, 0) is empty and therefore disconnected")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(MAX_RETRIES):
        keep = rng.random(len(iu)) < p
        g = Graph.from_edges(n, np.column_stack([iu[keep], ju[keep]]), allow_disconnected=True)
        if g.connected:
            return g
    raise DisconnectedGraphError(f"G({n}, {p}) disconnected in {MAX_RETRIES} samples")


def bipartite_by_coloring(graph: Graph) -> bool:
    """2-colouring test by BFS (independent of the spectral flag)."""
    colour = np.full(graph.n, -1, dtype=np.int64)
    for root in range(graph.n):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        queue = [root]
        while queue:
            v = queue.pop()
            for w in graph.neighbors(v).tolist():
                if colour[w] < 0:
                    colour[w] = 1 - colour[v]
                    queue.append(w)
                elif colour[w] == colour[v]:
                    return False
    return True


def parse_graph_spec(spec: str, seed=None) -> Graph:
    """Resolve a compact graph description.

    Accepted forms: ``complete:N``, ``path:N``, ``cycle:N``, ``star:N``,
    ``regular:N,D[,SEED]``, ``gnp:N,P[,SEED]`` and ``file:PATH``.  A seed
    embedded in the string wins over ``seed``.
    """
    family, _, arg = spec.partition(":")
    family = family.strip().lower()
    if not arg:
        raise GraphError(f"graph spec {spec!r} lacks parameters")
    if family == "file":
        return read_edge_list(arg)
    parts = [p.strip() for p in arg.split(",")]
    try:
        if family in ("complete", "path", "cycle", "star"):
            (nstr,) = parts
            ctor = {"complete": complete_graph, "path": path_graph, "cycle": cycle_graph, "star": star_graph}
            return ctor[family](int(nstr))
        if family == "regular":
            s = int(parts[2]) if len(parts) > 2 else seed
            return random_regular(int(parts[0]), int(parts[1]), s)
        if family == "gnp":
            s = int(parts[2]) if len(parts) > 2 else seed
            return gnp(int(parts[0]), float(parts[1]), s)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"malformed graph spec {spec!r}") from exc
    raise GraphError(f"unknown graph family {family!r}")
