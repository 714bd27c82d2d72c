"""Anomaly families: membership, enumeration, superset counting, graph generators.

An anomaly family is a collection of admissible index sets over a universe
``[0, n)``.  Seven kinds are supported:

* ``interval``      -- contiguous runs ``{i, ..., j}``
* ``submatrix``     -- row-set x column-set products of a rows x cols grid
* ``connected``     -- vertex sets inducing a connected subgraph of a graph
* ``graph_cut``     -- vertex sets whose cut (edges leaving the set) is <= rho
* ``edge_dense``    -- vertex sets with induced edge density >= delta
* ``epsilon_ball``  -- metric balls of radius epsilon centered at data points
* ``unstructured``  -- every nonempty subset

The empty set is a member of no family.  All types are immutable after
construction and all operations are pure, so everything here is safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

FAMILY_KINDS = (
    "interval",
    "submatrix",
    "connected",
    "graph_cut",
    "edge_dense",
    "epsilon_ball",
    "unstructured",
)

GRAPH_FAMILY_KINDS = ("connected", "graph_cut", "edge_dense")


class EnumerationCapExceeded(RuntimeError):
    """Raised when a family is too large to enumerate within the cap."""

    def __init__(self, count_reached: int, cap: int):
        self.count_reached = count_reached
        self.cap = cap
        super().__init__(
            f"too large to enumerate: reached {count_reached} members with cap {cap}"
        )


@dataclass(frozen=True)
class IndexSet:
    """A sorted set of observation indices inside a universe of size n.

    ``indices`` is a strictly increasing tuple of ints in ``[0, universe_size)``.
    """

    indices: tuple[int, ...]
    universe_size: int

    def __post_init__(self):
        n = self.universe_size
        if n <= 0:
            raise ValueError(f"universe_size must be positive, got {n}")
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        prev = -1
        for i in idx:
            if i <= prev:
                raise ValueError(f"indices must be strictly increasing, got {idx}")
            prev = i
        if idx and (idx[0] < 0 or idx[-1] >= n):
            raise ValueError(f"indices must lie in [0, {n}), got {idx}")

    @classmethod
    def from_iterable(cls, items: Iterable[int], universe_size: int) -> "IndexSet":
        return cls(tuple(sorted(set(int(i) for i in items))), universe_size)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i: int) -> bool:
        return i in set(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)

    def union(self, other: "IndexSet") -> "IndexSet":
        self._check_same_universe(other)
        return IndexSet.from_iterable(self.as_set() | other.as_set(), self.universe_size)

    def intersection(self, other: "IndexSet") -> "IndexSet":
        self._check_same_universe(other)
        return IndexSet.from_iterable(self.as_set() & other.as_set(), self.universe_size)

    def symmetric_difference(self, other: "IndexSet") -> "IndexSet":
        self._check_same_universe(other)
        return IndexSet.from_iterable(self.as_set() ^ other.as_set(), self.universe_size)

    def issubset(self, other: "IndexSet") -> bool:
        self._check_same_universe(other)
        return self.as_set() <= other.as_set()

    def _check_same_universe(self, other: "IndexSet") -> None:
        if self.universe_size != other.universe_size:
            raise ValueError(
                f"universe mismatch: {self.universe_size} vs {other.universe_size}"
            )


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: vertex ids in [0, n_vertices), no self loops."""

    n_vertices: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n_vertices <= 0:
            raise ValueError("graph must have at least one vertex")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u},{v}) out of range [0,{self.n_vertices})")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return cls(n_vertices, frozenset((int(u), int(v)) for u, v in edges))

    def adjacency(self) -> list[list[int]]:
        """Adjacency lists with each neighbor list sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for lst in adj:
            lst.sort()
        return adj

    def n_edges(self) -> int:
        return len(self.edges)

    def components(self) -> list[list[int]]:
        """Connected components as sorted vertex lists, largest first."""
        adj = self.adjacency()
        seen = [False] * self.n_vertices
        comps = []
        for s in range(self.n_vertices):
            if seen[s]:
                continue
            stack = [s]
            seen[s] = True
            comp = []
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        comps.sort(key=lambda c: (-len(c), c[0]))
        return comps


@dataclass(frozen=True)
class FamilySpec:
    """Tagged description of an anomaly family over a universe of size n.

    Exactly the parameters required by ``kind`` may be set:
    graph for the three graph kinds, rho for graph_cut, delta for
    edge_dense, (rows, cols) for submatrix, (points, epsilon) for
    epsilon_ball.
    """

    kind: str
    n: int
    graph: Optional[Graph] = None
    rho: Optional[int] = None
    delta: Optional[float] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    points: Optional[tuple[tuple[float, ...], ...]] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.n <= 0:
            raise ValueError("universe size must be positive")
        required = {
            "interval": set(),
            "unstructured": set(),
            "submatrix": {"rows", "cols"},
            "connected": {"graph"},
            "graph_cut": {"graph", "rho"},
            "edge_dense": {"graph", "delta"},
            "epsilon_ball": {"points", "epsilon"},
        }[self.kind]
        present = {
            name
            for name in ("graph", "rho", "delta", "rows", "cols", "points", "epsilon")
            if getattr(self, name) is not None
        }
        if present != required:
            raise ValueError(
                f"family kind {self.kind!r} requires parameters {sorted(required)}, "
                f"got {sorted(present)}"
            )
        if self.graph is not None and self.graph.n_vertices != self.n:
            raise ValueError("graph vertex count must equal universe size")
        if self.kind == "submatrix" and self.rows * self.cols != self.n:
            raise ValueError(f"rows*cols = {self.rows * self.cols} != n = {self.n}")
        if self.kind == "graph_cut" and self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.kind == "edge_dense" and not (0.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [0, 1]")
        if self.kind == "epsilon_ball":
            if self.epsilon <= 0:
                raise ValueError("epsilon must be positive")
            pts = tuple(tuple(float(c) for c in p) for p in self.points)
            if len(pts) != self.n:
                raise ValueError(f"point count {len(pts)} != n = {self.n}")
            dims = {len(p) for p in pts}
            if len(dims) != 1:
                raise ValueError("all points must share one dimension")
            object.__setattr__(self, "points", pts)

    def cell(self, i: int) -> tuple[int, int]:
        """Row-major (row, col) coordinates of observation i in the submatrix grid."""
        return divmod(i, self.cols)


# -- convenience constructors -------------------------------------------------


def interval_family(n: int) -> FamilySpec:
    return FamilySpec("interval", n)


def unstructured_family(n: int) -> FamilySpec:
    return FamilySpec("unstructured", n)


def submatrix_family(rows: int, cols: int) -> FamilySpec:
    return FamilySpec("submatrix", rows * cols, rows=rows, cols=cols)


def connected_family(graph: Graph) -> FamilySpec:
    return FamilySpec("connected", graph.n_vertices, graph=graph)


def graph_cut_family(graph: Graph, rho: int) -> FamilySpec:
    return FamilySpec("graph_cut", graph.n_vertices, graph=graph, rho=rho)


def edge_dense_family(graph: Graph, delta: float) -> FamilySpec:
    return FamilySpec("edge_dense", graph.n_vertices, graph=graph, delta=delta)


def epsilon_ball_family(points: Sequence[Sequence[float]], epsilon: float) -> FamilySpec:
    pts = tuple(tuple(float(c) for c in p) for p in points)
    return FamilySpec("epsilon_ball", len(pts), points=pts, epsilon=epsilon)


# -- membership ---------------------------------------------------------------


def _induced_edge_count(graph: Graph, members: frozenset[int]) -> int:
    return sum(1 for u, v in graph.edges if u in members and v in members)


def _cut_size(graph: Graph, members: frozenset[int]) -> int:
    return sum(1 for u, v in graph.edges if (u in members) != (v in members))


def _is_connected(adj: list[list[int]], members: frozenset[int]) -> bool:
    if not members:
        return False
    start = next(iter(members))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w in members and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(members)


def ball_members(family: FamilySpec, center: int) -> tuple[int, ...]:
    """Indices within distance epsilon of the point at ``center``."""
    pts = np.asarray(family.points)
    d = np.sqrt(((pts - pts[center]) ** 2).sum(axis=1))
    return tuple(int(i) for i in np.nonzero(d <= family.epsilon)[0])


def contains(family: FamilySpec, s: IndexSet) -> bool:
    """True iff ``s`` is a member of the family.  Empty sets never are."""
    if s.universe_size != family.n:
        raise ValueError(
            f"universe mismatch: set has {s.universe_size}, family has {family.n}"
        )
    k = len(s)
    if k == 0:
        return False
    idx = s.indices
    if family.kind == "unstructured":
        return True
    if family.kind == "interval":
        return idx[-1] - idx[0] == k - 1
    if family.kind == "submatrix":
        rows = sorted({i // family.cols for i in idx})
        cols = sorted({i % family.cols for i in idx})
        if len(rows) * len(cols) != k:
            return False
        want = {r * family.cols + c for r in rows for c in cols}
        return want == set(idx)
    if family.kind == "connected":
        return _is_connected(family.graph.adjacency(), s.as_set())
    if family.kind == "graph_cut":
        return _cut_size(family.graph, s.as_set()) <= family.rho
    if family.kind == "edge_dense":
        if k == 1:
            return True
        possible = k * (k - 1) // 2
        return _induced_edge_count(family.graph, s.as_set()) >= family.delta * possible
    if family.kind == "epsilon_ball":
        target = set(idx)
        return any(set(ball_members(family, c)) == target for c in idx)
    raise AssertionError(family.kind)


# -- enumeration --------------------------------------------------------------


def _lex_subsets(n: int, max_size: Optional[int]) -> Iterator[tuple[int, ...]]:
    """All nonempty subsets of [0, n) in lexicographic index-sequence order."""

    def rec(prefix: tuple[int, ...], start: int) -> Iterator[tuple[int, ...]]:
        for j in range(start, n):
            cur = prefix + (j,)
            yield cur
            if max_size is None or len(cur) < max_size:
                yield from rec(cur, j + 1)

    yield from rec((), 0)


def _connected_sets(
    adj: list[list[int]], n: int, max_size: Optional[int]
) -> Iterator[frozenset[int]]:
    """Every connected vertex set of size <= max_size, each exactly once.

    Sets are grouped by their minimum vertex: for each root v the recursion
    extends {v} through neighbors greater than v, branching on whether each
    frontier vertex joins the set or is forbidden from the whole subtree.
    """
    for root in range(n):
        base = frozenset([root])
        yield base
        if max_size == 1:
            continue
        frontier0 = [w for w in adj[root] if w > root]

        def rec(members: frozenset[int], frontier: list[int], forbidden: set[int]):
            local_forbidden = set(forbidden)
            for i, u in enumerate(frontier):
                new_members = members | {u}
                yield new_members
                if max_size is None or len(new_members) < max_size:
                    ext = frontier[i + 1 :] + [
                        w
                        for w in adj[u]
                        if w > root
                        and w not in new_members
                        and w not in local_forbidden
                        and w not in frontier
                    ]
                    yield from rec(new_members, ext, local_forbidden)
                local_forbidden.add(u)

        yield from rec(base, frontier0, set())


def _candidate_members(
    family: FamilySpec, size_filter: Optional[int]
) -> Iterator[tuple[int, ...]]:
    """Lazy candidate stream, one yield per candidate visited.

    Candidates of the wrong size slip through (the recursive walks pass
    through smaller sets on the way to larger ones) and graph_cut /
    edge_dense candidates are arbitrary subsets; the consumer filters.
    """
    n = family.n
    if family.kind == "interval":
        for i in range(n):
            for j in range(i, n):
                yield tuple(range(i, j + 1))
    elif family.kind in ("unstructured", "graph_cut", "edge_dense"):
        yield from _lex_subsets(n, size_filter)
    elif family.kind == "submatrix":
        rows, cols = family.rows, family.cols
        for rset in _lex_subsets(rows, None):
            for cset in _lex_subsets(cols, None):
                yield tuple(sorted(r * cols + c for r in rset for c in cset))
    elif family.kind == "connected":
        adj = family.graph.adjacency()
        for members in _connected_sets(adj, n, size_filter):
            yield tuple(members)  # unsorted; consumer sorts survivors
    elif family.kind == "epsilon_ball":
        seen = set()
        for c in range(n):
            t = ball_members(family, c)
            if t not in seen:
                seen.add(t)
                yield t
    else:
        raise AssertionError(family.kind)


def _enumerate_raw(
    family: FamilySpec,
    size_filter: Optional[int],
    cap: int,
    work_budget: Optional[int] = None,
) -> list[tuple[int, ...]]:
    # The work budget bounds candidates *visited* so that un-enumerable
    # families (e.g. subset walks over n = 900) fail fast instead of hanging.
    needs_check = family.kind in ("graph_cut", "edge_dense")
    out: list[tuple[int, ...]] = []
    visited = 0
    if work_budget is None:
        work_budget = max(50 * cap, 1_000_000)
    for t in _candidate_members(family, size_filter):
        visited += 1
        if visited > work_budget:
            raise EnumerationCapExceeded(len(out), cap)
        if size_filter is not None and len(t) != size_filter:
            continue
        t = tuple(sorted(t))
        if needs_check and not contains(family, IndexSet(t, family.n)):
            continue
        out.append(t)
        if len(out) > cap:
            raise EnumerationCapExceeded(len(out), cap)
    return out


def enumerate_family(
    family: FamilySpec,
    size_filter: Optional[int] = None,
    cap: int = 1_000_000,
    work_budget: Optional[int] = None,
) -> list[IndexSet]:
    """All family members (optionally of one size), lexicographic order.

    Raises EnumerationCapExceeded as soon as more than ``cap`` members have
    been produced, or once ``work_budget`` candidates have been visited
    (default 50x the cap), whichever happens first.
    """
    raw = _enumerate_raw(family, size_filter, cap, work_budget)
    raw.sort()
    return [IndexSet(t, family.n) for t in raw]


def count_supersets(family: FamilySpec, a: IndexSet, cap: int = 1_000_000) -> int:
    """Number of family members that contain ``a``.

    Closed forms for the unstructured (2^(n-|a|)) and interval
    ((min(a)+1)*(n-max(a))) kinds; enumeration for the rest.
    """
    if len(a) == 0:
        raise ValueError("superset counting requires a nonempty set")
    if a.universe_size != family.n:
        raise ValueError("universe mismatch")
    n = family.n
    if family.kind == "unstructured":
        return 2 ** (n - len(a))
    if family.kind == "interval":
        return (a.indices[0] + 1) * (n - a.indices[-1])
    target = a.as_set()
    count = 0
    for member in enumerate_family(family, cap=cap):
        if target <= member.as_set():
            count += 1
    return count


# -- graph generators ----------------------------------------------------------


def generate_graph(
    kind: str,
    n: int,
    seed: Optional[int] = None,
    p: Optional[float] = None,
    path_len: Optional[int] = None,
    clique_len: Optional[int] = None,
) -> Graph:
    """Benchmark graph constructions.

    kind is one of ``path``, ``erdos_renyi`` (edge probability p),
    ``lattice`` (4-neighbor sqrt(n) x sqrt(n) grid), ``lollipop``
    (path joined to a clique at one shared vertex, path_len + clique_len - 1
    = n) and ``disjoint_path_clique`` (no connecting edge,
    path_len + clique_len = n).  Deterministic given (kind, params, seed).
    """
    if kind == "path":
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "erdos_renyi":
        if p is None or not (0.0 <= p <= 1.0):
            raise ValueError("erdos_renyi requires edge probability p in [0, 1]")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(iu.shape[0]) < p
        return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
    if kind == "lattice":
        m = math.isqrt(n)
        if m * m != n:
            raise ValueError(f"lattice requires square n, got {n}")
        edges = []
        for r in range(m):
            for c in range(m):
                v = r * m + c
                if c + 1 < m:
                    edges.append((v, v + 1))
                if r + 1 < m:
                    edges.append((v, v + m))
        return Graph.from_edges(n, edges)
    if kind == "lollipop":
        if path_len is None or clique_len is None:
            raise ValueError("lollipop requires path_len and clique_len")
        if path_len + clique_len - 1 != n:
            raise ValueError(
                f"lollipop shares one vertex: path_len + clique_len - 1 must be {n}"
            )
        edges = [(i, i + 1) for i in range(path_len - 1)]
        clique = range(path_len - 1, path_len - 1 + clique_len)
        edges += [(u, v) for u in clique for v in clique if u < v]
        return Graph.from_edges(n, edges)
    if kind == "disjoint_path_clique":
        if path_len is None or clique_len is None:
            raise ValueError("disjoint_path_clique requires path_len and clique_len")
        if path_len + clique_len != n:
            raise ValueError(f"path_len + clique_len must be {n}")
        edges = [(i, i + 1) for i in range(path_len - 1)]
        clique = range(path_len, path_len + clique_len)
        edges += [(u, v) for u in clique for v in clique if u < v]
        return Graph.from_edges(n, edges)
    raise ValueError(f"unknown graph kind {kind!r}")


# -- graph file format ----------------------------------------------------------


def read_graph(path) -> Graph:
    """Plain-text edge list: first line n_vertices, then `u v` per line."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    n = int(lines[0])
    edges = []
    for ln_no, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: line {ln_no}: expected `u v`, got {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(n, edges)


def write_graph(graph: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{graph.n_vertices}\n")
        for u, v in sorted(graph.edges):
            fh.write(f"{u} {v}\n")
