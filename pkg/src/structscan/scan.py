"""Scan-statistic solvers: the GLR statistic and the family-constrained MLE.

The shared objective is Gamma(S) = (sum of values over S) / sqrt(|S|),
maximized over an anomaly family.  Exact solvers exist for the unstructured
family (the optimum is a prefix of the descending sort), the interval family
(all n(n+1)/2 intervals via prefix sums), epsilon-balls (n candidate balls),
small submatrix grids (exhaustive row-set x column-set sweep), and any graph
family small enough to enumerate.  Everything else falls back to simulated
annealing over feasibility-preserving add/drop/swap moves; results carry a
``solver`` tag of ``exact`` or ``heuristic`` so downstream reports can tell
the difference.

Also here: the regularized submatrix variant (a size-dependent penalty
subtracted from Gamma) and the expectation-based Poisson scan used by the
disease-count model, plus ``argmax_additive`` which maximizes a plain linear
set function over a family (the machinery behind the mixture estimators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._state import GraphSetState
from .families import (
    EnumerationCapExceeded,
    FamilySpec,
    IndexSet,
    ball_members,
    enumerate_family,
)
from .sampling import (
    NoMemberOfSizeError,
    Observations,
    _feasible_dense_set,
    _feasible_low_cut_set,
    _grow_connected,
    rng_from,
)

__all__ = [
    "Budget",
    "ScanResult",
    "RegularizedScanResult",
    "gamma",
    "mle",
    "glr_statistic",
    "regularized_submatrix_mle",
    "poisson_scan_mle",
    "poisson_score",
    "argmax_additive",
]

# Enumeration is only attempted below these universe sizes; beyond them the
# subset / connected-set walks cannot finish and we go straight to annealing.
_ENUM_GATE_SUBSETS = 18
_ENUM_GATE_CONNECTED = 32


@dataclass(frozen=True)
class Budget:
    """Search configuration for the heuristic solvers.

    ``iterations`` is the annealing schedule length per restart (default
    200 * n), ``restarts`` the number of annealing restarts,
    ``submatrix_restarts`` the alternating-maximization restarts, and
    ``enum_cap`` the ceiling for exhaustive enumeration (0 disables
    enumeration entirely, forcing the heuristic path).  Heuristic searches
    draw their randomness from ``seed``, so solvers are pure functions of
    (data, family, budget).
    """

    iterations: Optional[int] = None
    restarts: int = 5
    submatrix_restarts: int = 20
    enum_cap: int = 300_000
    seed: int = 0

    def sa_iterations(self, n: int) -> int:
        return self.iterations if self.iterations is not None else 200 * n


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class ScanResult:
    """A scored family member plus how it was found."""

    set: IndexSet
    score: float
    solver: str  # "exact" | "heuristic"
    evaluations: int


@dataclass(frozen=True)
class RegularizedScanResult(ScanResult):
    """Penalized submatrix optimum; ``score`` is the penalized value."""

    gamma_unpenalized: float = float("nan")


def _gaussian_values(x: Union[Observations, np.ndarray, Sequence[float]]) -> np.ndarray:
    if isinstance(x, Observations):
        if x.mode != "gaussian":
            raise ValueError("gaussian observations required")
        return x.values
    return np.asarray(x, dtype=float)


def gamma(x: Union[Observations, np.ndarray, Sequence[float]], s: IndexSet) -> float:
    """Gamma(S) = (sum over S) / sqrt(|S|); undefined on the empty set."""
    if len(s) == 0:
        raise ValueError("gamma is undefined on the empty set")
    arr = _gaussian_values(x)
    if s.universe_size != arr.size:
        raise ValueError("universe mismatch between set and observations")
    total = math.fsum(float(arr[i]) for i in s.indices)
    return total / math.sqrt(len(s))


def poisson_score(counts: np.ndarray, baselines: np.ndarray, s: IndexSet) -> float:
    """Expectation-based Poisson score; zero-count sets score -sum(B)."""
    if len(s) == 0:
        raise ValueError("poisson score is undefined on the empty set")
    idx = list(s.indices)
    c = float(counts[idx].sum())
    b = math.fsum(float(baselines[i]) for i in idx)
    if c == 0.0:
        return -b
    return b + c * (-1.0 + math.log(c) - math.log(b))


# -- exact solvers ----------------------------------------------------------------


def _lex_min(cands: list[tuple[int, ...]]) -> tuple[int, ...]:
    return min(cands)


def _mle_unstructured(x: np.ndarray) -> tuple[tuple[int, ...], int]:
    """Argmax over all nonempty subsets: a prefix of the descending sort.

    At fixed size the best set takes the largest values, so scanning the n
    prefixes of the stable descending sort covers every candidate optimum;
    stability makes equal values enter in index order, which realizes the
    lexicographic tie-break.
    """
    n = x.size
    order = np.argsort(-x, kind="stable")
    csum = np.cumsum(x[order])
    scores = csum / np.sqrt(np.arange(1, n + 1))
    best = scores.max()
    ties = np.nonzero(scores == best)[0]
    if ties.size == 1:
        k = int(ties[0]) + 1
        return tuple(sorted(int(i) for i in order[:k])), n
    cands = [tuple(sorted(int(i) for i in order[: int(t) + 1])) for t in ties]
    return _lex_min(cands), n


def _mle_interval(x: np.ndarray) -> tuple[tuple[int, ...], int]:
    n = x.size
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    best_score = -np.inf
    best_start, best_len = 0, 1
    for length in range(1, n + 1):
        sums = prefix[length:] - prefix[:-length]
        scores = sums / math.sqrt(length)
        i = int(np.argmax(scores))
        sc = float(scores[i])
        if sc > best_score or (
            sc == best_score and (i, length) < (best_start, best_len)
        ):
            best_score, best_start, best_len = sc, i, length
    return tuple(range(best_start, best_start + best_len)), n * (n + 1) // 2


def _distinct_balls(family: FamilySpec) -> list[tuple[int, ...]]:
    seen: set[tuple[int, ...]] = set()
    out = []
    for c in range(family.n):
        t = ball_members(family, c)
        if t and t not in seen:
            seen.add(t)
            out.append(t)
    out.sort()
    return out


def _argmax_over_candidates(
    score_fn: Callable[[tuple[int, ...]], float], cands: list[tuple[int, ...]]
) -> tuple[tuple[int, ...], float, int]:
    """First (hence lexicographically smallest) strict argmax over sorted candidates."""
    best_t, best_s = None, -math.inf
    for t in cands:
        s = score_fn(t)
        if s > best_s:
            best_t, best_s = t, s
    return best_t, best_s, len(cands)


# -- submatrix solvers --------------------------------------------------------------


def _as_matrix(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return x.reshape(rows, cols)


def _subsets_matrix(m: int) -> tuple[np.ndarray, np.ndarray]:
    """(2^m - 1, m) boolean membership matrix for all nonempty subsets."""
    ids = np.arange(1, 2**m, dtype=np.uint32)
    masks = ((ids[:, None] >> np.arange(m)) & 1).astype(bool)
    return masks, masks.sum(axis=1)


def _exhaustive_submatrix(
    mat: np.ndarray, penalty: Optional[np.ndarray] = None
) -> tuple[tuple[int, ...], float, int]:
    """Score every row-set x column-set pair; penalty is indexed by (p, q)."""
    rows, cols = mat.shape
    rmasks, rsizes = _subsets_matrix(rows)
    cmasks, csizes = _subsets_matrix(cols)
    cs = csizes.astype(float)
    best_score, best_ri, best_ci = -np.inf, 0, 0
    chunk = max(1, 2_000_000 // max(len(cmasks), 1))
    for lo in range(0, len(rmasks), chunk):
        hi = min(lo + chunk, len(rmasks))
        partial = rmasks[lo:hi].astype(float) @ mat  # (chunk, cols)
        sums = partial @ cmasks.T.astype(float)  # (chunk, 2^cols-1)
        sizes = rsizes[lo:hi, None].astype(float) * cs[None, :]
        scores = sums / np.sqrt(sizes)
        if penalty is not None:
            scores = scores - penalty[rsizes[lo:hi][:, None], csizes[None, :]]
        flat = int(np.argmax(scores))
        ri, ci = divmod(flat, scores.shape[1])
        if scores[ri, ci] > best_score:
            best_score = float(scores[ri, ci])
            best_ri, best_ci = lo + ri, ci
    rsel = np.nonzero(rmasks[best_ri])[0]
    csel = np.nonzero(cmasks[best_ci])[0]
    cells = tuple(sorted(int(r) * cols + int(c) for r in rsel for c in csel))
    return cells, best_score, len(rmasks) * len(cmasks)


def _best_columns_by_cardinality(
    restricted: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Stable descending order of column sums plus their prefix sums."""
    order = np.argsort(-restricted, kind="stable")
    prefix = np.cumsum(restricted[order])
    return order, prefix


def _alternating_submatrix(
    mat: np.ndarray,
    budget: Budget,
    rng: np.random.Generator,
    penalty: Optional[np.ndarray] = None,
) -> tuple[tuple[int, ...], float, int]:
    """Alternating row/column maximization of (possibly penalized) Gamma.

    For a fixed row set the optimal column set of each cardinality c is the
    top-c columns by restricted column sum; sweeping c and swapping roles
    converges to a fixed point, and the best fixed point over restarts wins.
    """
    rows, cols = mat.shape
    evaluations = 0
    best_cells, best_score = None, -np.inf

    def half_step(fixed_mask: np.ndarray, axis: int):
        # axis = 0: rows fixed, choose columns; axis = 1: columns fixed, choose rows
        nonlocal evaluations
        p = int(fixed_mask.sum())
        restricted = mat[fixed_mask].sum(axis=0) if axis == 0 else mat[:, fixed_mask].sum(axis=1)
        order, prefix = _best_columns_by_cardinality(restricted)
        m = restricted.size
        sizes = p * np.arange(1, m + 1)
        scores = prefix / np.sqrt(sizes.astype(float))
        if penalty is not None:
            pq = (
                penalty[p, 1 : m + 1] if axis == 0 else penalty[1 : m + 1, p]
            )
            scores = scores - pq
        evaluations += m
        c = int(np.argmax(scores))
        new_mask = np.zeros(m, dtype=bool)
        new_mask[order[: c + 1]] = True
        return new_mask, float(scores[c])

    for restart in range(budget.submatrix_restarts):
        if restart == 0:
            rmask = mat.sum(axis=1) > 0
            if not rmask.any():
                rmask = np.zeros(rows, dtype=bool)
                rmask[int(np.argmax(mat.sum(axis=1)))] = True
        else:
            p = int(rng.integers(1, rows + 1))
            rmask = np.zeros(rows, dtype=bool)
            rmask[rng.choice(rows, size=p, replace=False)] = True
        score = -np.inf
        cmask = None
        for _ in range(60):
            cmask, s1 = half_step(rmask, axis=0)
            rmask, s2 = half_step(cmask, axis=1)
            if s2 <= score + 1e-15:
                score = max(score, s2)
                break
            score = s2
        rsel = np.nonzero(rmask)[0]
        csel = np.nonzero(cmask)[0]
        cells = tuple(sorted(int(r) * cols + int(c) for r in rsel for c in csel))
        if score > best_score or (score == best_score and best_cells is not None and cells < best_cells):
            best_score, best_cells = score, cells
    return best_cells, best_score, evaluations


# -- simulated annealing over graph families ------------------------------------------


def _anneal_graph_family(
    family: FamilySpec,
    w1: np.ndarray,
    objective: Callable[[float, float, int], float],
    budget: Budget,
    w2: Optional[np.ndarray] = None,
    fixed_size: Optional[int] = None,
    t0: Optional[float] = None,
) -> tuple[tuple[int, ...], float, int]:
    """Annealed maximization of ``objective(s1, s2, |S|)`` over a graph family.

    Variable-size searches use add/drop/swap moves, fixed-size searches swap
    only; every move preserves feasibility for the family kind.  Geometric
    cooling runs from t0 (default 2 max|w1|) down to 1e-3 per restart, with
    best-so-far tracking and deterministic seeding from the budget.
    """
    adj = family.graph.adjacency()
    n = family.n
    kind = family.kind
    w1l = [float(v) for v in w1]
    w2l = [float(v) for v in w2] if w2 is not None else None
    iterations = budget.sa_iterations(n)
    if t0 is None:
        t0 = 2.0 * max(abs(v) for v in w1l) or 1.0
    t_end = 1e-3
    rng = rng_from(budget.seed, 7)
    need_edges = None
    if kind == "edge_dense":
        need_edges = lambda size: 0.0 if size <= 1 else family.delta * size * (size - 1) / 2.0

    def feasible_after(state: GraphSetState, add: Optional[int], drop: Optional[int]) -> bool:
        size = state.size + (add is not None) - (drop is not None)
        if size < 1:
            return False
        if kind == "connected":
            if drop is None:
                return True  # adding a boundary vertex preserves connectivity
            if add is None:
                return state.drop_keeps_connected(drop)
            return state.swap_keeps_connected(drop, add)
        if kind == "graph_cut":
            cut = state.cut
            if add is not None and drop is not None:
                # apply drop arithmetic first, then add with adjusted cover
                cov_d = state.cover[drop]
                cut = cut - len(adj[drop]) + 2 * cov_d
                cov_a = state.cover[add] - (1 if add in adj_sets[drop] else 0)
                cut = cut + len(adj[add]) - 2 * cov_a
            elif add is not None:
                cut = cut + len(adj[add]) - 2 * state.cover[add]
            else:
                cut = cut - len(adj[drop]) + 2 * state.cover[drop]
            return cut <= family.rho
        if kind == "edge_dense":
            edges = state.edges
            if add is not None and drop is not None:
                cov_a = state.cover[add] - (1 if add in adj_sets[drop] else 0)
                edges = edges - state.cover[drop] + cov_a
            elif add is not None:
                edges = edges + state.cover[add]
            else:
                edges = edges - state.cover[drop]
            return edges >= need_edges(size)
        raise AssertionError(kind)

    adj_sets = [set(a) for a in adj] if kind in ("graph_cut", "edge_dense") else None

    # Restart r seeds at the r-th highest-weight vertex: anomalous vertices
    # dominate the top order statistics, so restarts land in or near the
    # anomaly even when it is far from everything else in the graph.
    seed_order = np.argsort(-w1, kind="stable")

    def initial_members(restart: int) -> set[int]:
        if fixed_size is None:
            v = int(seed_order[min(restart, n - 1)])
            s = {v}
            if kind == "graph_cut" and _cut_of(s) > family.rho:
                # fall back to the whole graph, whose cut is zero
                return set(range(n))
            return s
        if kind == "connected":
            comps = [c for c in family.graph.components() if len(c) >= fixed_size]
            if not comps:
                raise NoMemberOfSizeError(
                    f"no connected component has {fixed_size} or more vertices"
                )
            comp_of = {}
            for comp in comps:
                for v in comp:
                    comp_of[v] = comp
            if restart == 0:
                best_comp = max(comps, key=lambda c: max(w1[i] for i in c))
                return _greedy_grow(best_comp, fixed_size)
            for v in seed_order[restart - 1 :]:
                if int(v) in comp_of:
                    return _grow_connected(adj, comp_of[int(v)], fixed_size, rng, start=int(v))
            comp = comps[int(rng.integers(len(comps)))]
            return _grow_connected(adj, comp, fixed_size, rng)
        if kind == "graph_cut":
            return _feasible_low_cut_set(family, fixed_size, rng)
        return _feasible_dense_set(family, fixed_size, rng)

    def _cut_of(s: set[int]) -> int:
        return sum(1 for u in s for w in adj[u] if w not in s)

    def _greedy_grow(comp: list[int], k: int) -> set[int]:
        start = max(comp, key=lambda i: w1l[i])
        members = {start}
        boundary = {w for w in adj[start]}
        while len(members) < k:
            cand = max(boundary, key=lambda i: w1l[i])
            members.add(cand)
            boundary.discard(cand)
            boundary.update(w for w in adj[cand] if w not in members)
        return members

    best_t: Optional[tuple[int, ...]] = None
    best_score = -math.inf
    evaluations = 0
    cool = (t_end / t0) ** (1.0 / max(iterations, 1))

    for restart in range(budget.restarts):
        try:
            init = initial_members(restart)
        except NoMemberOfSizeError:
            if fixed_size is not None:
                raise
            init = {int(rng.integers(n))}
        state = GraphSetState(adj, w1l, w2l, init)
        cur = objective(state.s1, state.s2, state.size)
        if cur > best_score:
            best_score, best_t = cur, tuple(sorted(state.members))
        temp = t0
        for _ in range(iterations):
            if fixed_size is not None:
                move = 2
            else:
                move = int(rng.integers(3))
            add = drop = None
            if move == 0:  # add
                add = (
                    state.random_boundary(rng)
                    if kind == "connected"
                    else state.random_outsider(rng, n)
                )
                if add is None:
                    temp *= cool
                    continue
            elif move == 1:  # drop
                if state.size <= 1:
                    temp *= cool
                    continue
                drop = (
                    state.random_droppable(rng)
                    if kind == "connected"
                    else state.random_member(rng)
                )
            else:  # swap
                if state.size < 1:
                    temp *= cool
                    continue
                if kind == "connected":
                    drop = state.random_droppable(rng)
                    add = state.random_boundary(rng)
                else:
                    drop = state.random_member(rng)
                    add = state.random_outsider(rng, n)
                if add is None or add == drop:
                    temp *= cool
                    continue
            size = state.size + (add is not None) - (drop is not None)
            if size < 1:
                temp *= cool
                continue
            s1 = state.s1 + (w1l[add] if add is not None else 0.0) - (
                w1l[drop] if drop is not None else 0.0
            )
            s2 = state.s2
            if w2l is not None:
                s2 += (w2l[add] if add is not None else 0.0) - (
                    w2l[drop] if drop is not None else 0.0
                )
            cand = objective(s1, s2, size)
            evaluations += 1
            # score the move before the (possibly costly) feasibility check:
            # moves the Metropolis test would reject never pay for a BFS
            if cand >= cur or rng.random() < math.exp((cand - cur) / temp):
                if feasible_after(state, add, drop):
                    if drop is not None:
                        state.remove(drop)
                    if add is not None:
                        state.add(add)
                    cur = cand
                    if cur > best_score:
                        best_score, best_t = cur, tuple(sorted(state.members))
            temp *= cool
    return best_t, best_score, evaluations


# -- dispatch -----------------------------------------------------------------------


def _is_power_set(family: FamilySpec) -> bool:
    """graph_cut with rho >= |E| and edge_dense with delta = 0 admit every set."""
    if family.kind == "unstructured":
        return True
    if family.kind == "graph_cut" and family.rho >= family.graph.n_edges():
        return True
    if family.kind == "edge_dense" and family.delta == 0.0:
        return True
    return False


def _enumeration_plausible(family: FamilySpec) -> bool:
    n = family.n
    if family.kind == "connected":
        if n <= _ENUM_GATE_CONNECTED:
            return True
        # paths and cycles enumerate in O(n^2) regardless of n
        max_deg = max(len(a) for a in family.graph.adjacency())
        return max_deg <= 2
    if family.kind in ("graph_cut", "edge_dense"):
        return n <= _ENUM_GATE_SUBSETS
    return False


def _try_enumerate(family: FamilySpec, budget: Budget) -> Optional[list[IndexSet]]:
    if budget.enum_cap <= 0 or not _enumeration_plausible(family):
        return None
    try:
        return enumerate_family(family, cap=budget.enum_cap)
    except EnumerationCapExceeded:
        return None


def mle(
    x: Union[Observations, np.ndarray, Sequence[float]],
    family: FamilySpec,
    budget: Budget = DEFAULT_BUDGET,
) -> ScanResult:
    """The family-constrained maximizer of Gamma.

    Exact for the unstructured, interval and epsilon-ball families, for
    submatrix grids up to 12 x 12, and for graph families small enough to
    enumerate; simulated annealing otherwise.  Ties break to the
    lexicographically smallest index sequence.
    """
    arr = _gaussian_values(x)
    n = arr.size
    if family.n != n:
        raise ValueError("universe mismatch between observations and family")

    if _is_power_set(family):
        t, evals = _mle_unstructured(arr)
        return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), "exact", evals)
    if family.kind == "interval":
        t, evals = _mle_interval(arr)
        return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), "exact", evals)
    if family.kind == "epsilon_ball":
        balls = _distinct_balls(family)
        t, _, evals = _argmax_over_candidates(
            lambda c: math.fsum(arr[i] for i in c) / math.sqrt(len(c)), balls
        )
        return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), "exact", evals)
    if family.kind == "submatrix":
        mat = _as_matrix(arr, family.rows, family.cols)
        if family.rows <= 12 and family.cols <= 12:
            t, _, evals = _exhaustive_submatrix(mat)
            solver = "exact"
        else:
            t, _, evals = _alternating_submatrix(mat, budget, rng_from(budget.seed, 11))
            solver = "heuristic"
        return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), solver, evals)

    members = _try_enumerate(family, budget)
    if members is not None:
        cands = [m.indices for m in members]
        t, _, evals = _argmax_over_candidates(
            lambda c: math.fsum(arr[i] for i in c) / math.sqrt(len(c)), cands
        )
        return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), "exact", evals)

    t, _, evals = _anneal_graph_family(
        family,
        arr,
        lambda s1, s2, size: s1 / math.sqrt(size),
        budget,
    )
    return ScanResult(IndexSet(t, n), gamma(arr, IndexSet(t, n)), "heuristic", evals)


def glr_statistic(
    x: Union[Observations, np.ndarray, Sequence[float]],
    family: FamilySpec,
    budget: Budget = DEFAULT_BUDGET,
) -> float:
    """max Gamma over the family; exact precisely when the MLE path is exact."""
    return mle(x, family, budget).score


def _submatrix_penalty_table(m_rows: int, m_cols: int) -> np.ndarray:
    """penalty[p, q] = sqrt(2 log(m^2 C(m_rows, p) C(m_cols, q))), m = m_rows."""
    pen = np.zeros((m_rows + 1, m_cols + 1))
    for p in range(1, m_rows + 1):
        for q in range(1, m_cols + 1):
            pen[p, q] = math.sqrt(
                2.0
                * (
                    math.log(m_rows * m_cols)
                    + math.lgamma(m_rows + 1)
                    - math.lgamma(p + 1)
                    - math.lgamma(m_rows - p + 1)
                    + math.lgamma(m_cols + 1)
                    - math.lgamma(q + 1)
                    - math.lgamma(m_cols - q + 1)
                )
            )
    return pen


def regularized_submatrix_mle(
    x: Union[Observations, np.ndarray, Sequence[float]],
    budget: Budget = DEFAULT_BUDGET,
) -> RegularizedScanResult:
    """Maximize the penalized scan objective Gamma(M) - penalty(shape) over
    all submatrices of the square m x m grid (n must be a perfect square)."""
    arr = _gaussian_values(x)
    n = arr.size
    m = math.isqrt(n)
    if m * m != n:
        raise ValueError(f"regularized submatrix scan needs square n, got {n}")
    mat = _as_matrix(arr, m, m)
    penalty = _submatrix_penalty_table(m, m)
    if m <= 12:
        t, score, evals = _exhaustive_submatrix(mat, penalty=penalty)
        solver = "exact"
    else:
        t, score, evals = _alternating_submatrix(
            mat, budget, rng_from(budget.seed, 13), penalty=penalty
        )
        solver = "heuristic"
    s = IndexSet(t, n)
    raw = gamma(arr, s)
    rows = len({i // m for i in t})
    cols = len({i % m for i in t})
    return RegularizedScanResult(
        s, raw - penalty[rows, cols], solver, evals, gamma_unpenalized=raw
    )


# -- Poisson scan -------------------------------------------------------------------


def _poisson_agg_score(c: float, b: float) -> float:
    if c == 0.0:
        return -b
    return b + c * (-1.0 + math.log(c) - math.log(b))


def _poisson_best_prefix(
    counts: np.ndarray, baselines: np.ndarray
) -> tuple[tuple[int, ...], int]:
    """Best hot or cold ratio-ordered prefix.

    The elevated-rate optimum over all subsets is a prefix of the descending
    count/baseline order; depressed-rate argmaxes (possible because the raw
    objective is returned regardless) are approached by ascending prefixes.
    """
    ratio = counts / baselines
    best_t, best_s = None, -math.inf
    evals = 0
    for order in (np.argsort(-ratio, kind="stable"), np.argsort(ratio, kind="stable")):
        cp = np.cumsum(counts[order])
        bp = np.cumsum(baselines[order])
        with np.errstate(divide="ignore", invalid="ignore"):
            sc = np.where(
                cp == 0, -bp, bp + cp * (-1.0 + np.log(np.maximum(cp, 1e-300)) - np.log(bp))
            )
        evals += sc.size
        k = int(np.argmax(sc))
        if sc[k] > best_s:
            best_s = float(sc[k])
            best_t = tuple(sorted(int(i) for i in order[: k + 1]))
    return best_t, evals


def poisson_scan_mle(
    obs: Observations, family: FamilySpec, budget: Budget = DEFAULT_BUDGET
) -> ScanResult:
    """Expectation-based Poisson scan MLE over the family.

    Same exact/heuristic dispatch as the Gaussian scan; the raw argmax is
    returned even when the optimum is not an elevated-rate set.
    """
    if obs.mode != "poisson":
        raise ValueError("poisson observations required")
    counts, baselines = obs.counts.astype(float), obs.baselines
    n = len(obs)
    if family.n != n:
        raise ValueError("universe mismatch between observations and family")

    def score_tuple(t: tuple[int, ...]) -> float:
        return _poisson_agg_score(
            float(counts[list(t)].sum()), math.fsum(baselines[i] for i in t)
        )

    if family.kind == "interval":
        cp = np.concatenate([[0.0], np.cumsum(counts)])
        bp = np.concatenate([[0.0], np.cumsum(baselines)])
        best_score, best = -np.inf, None
        evals = 0
        for length in range(1, n + 1):
            cs = cp[length:] - cp[:-length]
            bs = bp[length:] - bp[:-length]
            with np.errstate(divide="ignore", invalid="ignore"):
                sc = np.where(
                    cs == 0, -bs, bs + cs * (-1.0 + np.log(np.maximum(cs, 1e-300)) - np.log(bs))
                )
            evals += sc.size
            i = int(np.argmax(sc))
            if sc[i] > best_score:
                best_score, best = float(sc[i]), tuple(range(i, i + length))
        s = IndexSet(best, n)
        return ScanResult(s, poisson_score(obs.counts, baselines, s), "exact", evals)

    if family.kind == "epsilon_ball":
        t, _, evals = _argmax_over_candidates(score_tuple, _distinct_balls(family))
        s = IndexSet(t, n)
        return ScanResult(s, poisson_score(obs.counts, baselines, s), "exact", evals)

    if _is_power_set(family) or family.kind in ("connected", "graph_cut", "edge_dense"):
        solve_family = family
        if _is_power_set(family) and family.kind != "unstructured":
            solve_family = FamilySpec("unstructured", n)
        if solve_family.kind == "unstructured":
            if n <= _ENUM_GATE_SUBSETS and budget.enum_cap > 0:
                members = enumerate_family(solve_family, cap=budget.enum_cap)
                t, _, evals = _argmax_over_candidates(
                    score_tuple, [m.indices for m in members]
                )
                s = IndexSet(t, n)
                return ScanResult(s, poisson_score(obs.counts, baselines, s), "exact", evals)
            t, evals = _poisson_best_prefix(counts, baselines)
            s = IndexSet(t, n)
            return ScanResult(s, poisson_score(obs.counts, baselines, s), "heuristic", evals)
        members = _try_enumerate(solve_family, budget)
        if members is not None:
            t, _, evals = _argmax_over_candidates(score_tuple, [m.indices for m in members])
            s = IndexSet(t, n)
            return ScanResult(s, poisson_score(obs.counts, baselines, s), "exact", evals)
        t0 = 2.0 * max(
            abs(_poisson_agg_score(float(c), float(b)))
            for c, b in zip(counts, baselines)
        )
        t, _, evals = _anneal_graph_family(
            solve_family,
            counts,
            lambda s1, s2, size: _poisson_agg_score(s1, s2),
            budget,
            w2=baselines,
            t0=t0 or 1.0,
        )
        s = IndexSet(t, n)
        return ScanResult(s, poisson_score(obs.counts, baselines, s), "heuristic", evals)

    if family.kind == "submatrix":
        # ratio-ordered alternating sweep, one axis at a time
        rows, cols = family.rows, family.cols
        cmat = counts.reshape(rows, cols)
        bmat = baselines.reshape(rows, cols)
        if rows <= 12 and cols <= 12 and budget.enum_cap > 0:
            members = enumerate_family(family, cap=budget.enum_cap)
            t, _, evals = _argmax_over_candidates(score_tuple, [m.indices for m in members])
            s = IndexSet(t, n)
            return ScanResult(s, poisson_score(obs.counts, baselines, s), "exact", evals)
        rng = rng_from(budget.seed, 17)
        evals = 0
        best_t, best_score = None, -math.inf
        for restart in range(budget.submatrix_restarts):
            rmask = np.zeros(rows, dtype=bool)
            if restart == 0:
                rmask[:] = cmat.sum(axis=1) > bmat.sum(axis=1)
                if not rmask.any():
                    rmask[int(np.argmax(cmat.sum(axis=1)))] = True
            else:
                p = int(rng.integers(1, rows + 1))
                rmask[rng.choice(rows, size=p, replace=False)] = True
            cmask = None
            prev = -math.inf
            for _ in range(40):
                # choose columns for fixed rows, then roles swap
                for axis in (0, 1):
                    fixed = rmask if axis == 0 else cmask
                    cres = (cmat[fixed] if axis == 0 else cmat[:, fixed]).sum(axis=axis)
                    bres = (bmat[fixed] if axis == 0 else bmat[:, fixed]).sum(axis=axis)
                    order = np.argsort(-(cres / bres), kind="stable")
                    cp2 = np.cumsum(cres[order])
                    bp2 = np.cumsum(bres[order])
                    with np.errstate(divide="ignore", invalid="ignore"):
                        sc = np.where(
                            cp2 == 0,
                            -bp2,
                            bp2 + cp2 * (-1.0 + np.log(np.maximum(cp2, 1e-300)) - np.log(bp2)),
                        )
                    evals += sc.size
                    kbest = int(np.argmax(sc))
                    mask = np.zeros(cres.size, dtype=bool)
                    mask[order[: kbest + 1]] = True
                    if axis == 0:
                        cmask = mask
                    else:
                        rmask = mask
                    cur = float(sc[kbest])
                if cur <= prev + 1e-15:
                    break
                prev = cur
            rsel, csel = np.nonzero(rmask)[0], np.nonzero(cmask)[0]
            t = tuple(sorted(int(r) * cols + int(c) for r in rsel for c in csel))
            sc = score_tuple(t)
            if sc > best_score:
                best_score, best_t = sc, t
        s = IndexSet(best_t, n)
        return ScanResult(s, poisson_score(obs.counts, baselines, s), "heuristic", evals)

    raise AssertionError(family.kind)


# -- linear (additive) objective over a family ----------------------------------------


def argmax_additive(
    w: np.ndarray,
    family: FamilySpec,
    budget: Budget = DEFAULT_BUDGET,
    size: Optional[int] = None,
) -> ScanResult:
    """Maximize the linear set function sum of w over the family.

    With ``size`` given the search is restricted to members of exactly that
    size (swap-move annealing for graph families); without it the search is
    unconstrained (add/drop/swap annealing).  Exact for the unstructured,
    interval and epsilon-ball families and for enumerable graph families.
    """
    w = np.asarray(w, dtype=float)
    n = w.size
    if family.n != n:
        raise ValueError("universe mismatch")
    if size is not None and not (1 <= size <= n):
        raise NoMemberOfSizeError(f"size {size} outside [1, {n}]")

    def finish(t: tuple[int, ...], solver: str, evals: int) -> ScanResult:
        s = IndexSet(t, n)
        return ScanResult(s, math.fsum(w[i] for i in t), solver, evals)

    if _is_power_set(family):
        order = np.argsort(-w, kind="stable")
        if size is not None:
            return finish(tuple(sorted(int(i) for i in order[:size])), "exact", 1)
        pos = order[w[order] > 0]
        if pos.size == 0:
            pos = order[:1]
        return finish(tuple(sorted(int(i) for i in pos)), "exact", 1)

    if family.kind == "interval":
        if size is not None:
            if size > n:
                raise NoMemberOfSizeError(f"no interval of size {size}")
            csum = np.concatenate([[0.0], np.cumsum(w)])
            sums = csum[size:] - csum[:-size]
            i = int(np.argmax(sums))
            return finish(tuple(range(i, i + size)), "exact", sums.size)
        # maximum-sum subarray, leftmost-shortest tie-break
        best_sum, best = -math.inf, (0, 0)
        run_sum, run_start = 0.0, 0
        for i, v in enumerate(w):
            if run_sum <= 0:
                run_sum, run_start = float(v), i
            else:
                run_sum += float(v)
            if run_sum > best_sum:
                best_sum, best = run_sum, (run_start, i)
        return finish(tuple(range(best[0], best[1] + 1)), "exact", n)

    if family.kind == "epsilon_ball":
        balls = _distinct_balls(family)
        if size is not None:
            balls = [b for b in balls if len(b) == size]
            if not balls:
                raise NoMemberOfSizeError(f"no ball of size {size}")
        t, _, evals = _argmax_over_candidates(
            lambda c: math.fsum(w[i] for i in c), balls
        )
        return finish(t, "exact", evals)

    if family.kind == "submatrix":
        rows, cols = family.rows, family.cols
        mat = w.reshape(rows, cols)
        if size is None:
            # alternate "keep positive restricted sums" until stable
            rmask = np.ones(rows, dtype=bool)
            for _ in range(60):
                colsum = mat[rmask].sum(axis=0)
                cmask = colsum > 0
                if not cmask.any():
                    cmask[int(np.argmax(colsum))] = True
                rowsum = mat[:, cmask].sum(axis=1)
                new_rmask = rowsum > 0
                if not new_rmask.any():
                    new_rmask[int(np.argmax(rowsum))] = True
                if (new_rmask == rmask).all():
                    break
                rmask = new_rmask
            t = tuple(
                sorted(
                    int(r) * cols + int(c)
                    for r in np.nonzero(rmask)[0]
                    for c in np.nonzero(cmask)[0]
                )
            )
            return finish(t, "heuristic", rows * cols)
        pairs = [
            (p, size // p)
            for p in range(1, rows + 1)
            if size % p == 0 and size // p <= cols
        ]
        if not pairs:
            raise NoMemberOfSizeError(
                f"size {size} has no rows x cols factorization within {rows} x {cols}"
            )
        best_t, best_s, evals = None, -math.inf, 0
        for p, q in pairs:
            rmask = np.zeros(rows, dtype=bool)
            rmask[np.argsort(-mat.sum(axis=1), kind="stable")[:p]] = True
            for _ in range(60):
                csum = mat[rmask].sum(axis=0)
                cmask = np.zeros(cols, dtype=bool)
                cmask[np.argsort(-csum, kind="stable")[:q]] = True
                rsum = mat[:, cmask].sum(axis=1)
                new_rmask = np.zeros(rows, dtype=bool)
                new_rmask[np.argsort(-rsum, kind="stable")[:p]] = True
                evals += 2
                if (new_rmask == rmask).all():
                    break
                rmask = new_rmask
            t = tuple(
                sorted(
                    int(r) * cols + int(c)
                    for r in np.nonzero(rmask)[0]
                    for c in np.nonzero(cmask)[0]
                )
            )
            sc = math.fsum(w[i] for i in t)
            if sc > best_s:
                best_s, best_t = sc, t
        return finish(best_t, "heuristic", evals)

    # graph families
    if size is None:
        members = _try_enumerate(family, budget)
        if members is not None:
            t, _, evals = _argmax_over_candidates(
                lambda c: math.fsum(w[i] for i in c), [m.indices for m in members]
            )
            return finish(t, "exact", evals)
    else:
        if budget.enum_cap > 0 and _enumeration_plausible(family):
            try:
                members = enumerate_family(family, size_filter=size, cap=budget.enum_cap)
                if not members:
                    raise NoMemberOfSizeError(f"no member of size {size}")
                t, _, evals = _argmax_over_candidates(
                    lambda c: math.fsum(w[i] for i in c), [m.indices for m in members]
                )
                return finish(t, "exact", evals)
            except EnumerationCapExceeded:
                pass

    t, _, evals = _anneal_graph_family(
        family,
        w,
        lambda s1, s2, size_: s1,
        budget,
        fixed_size=size,
    )
    return finish(t, "heuristic", evals)
