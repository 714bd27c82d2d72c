"""Data generators: anomalous-subset data, Gaussian mixtures, Poisson counts.

All samplers are pure functions of (parameters, seed).  Seeds follow a
counter-based splittable scheme: ``rng_from(master_seed, *path)`` derives an
independent stream per integer path, so trial t of experiment e can use
stream (master_seed, e, t) and parallel trials reproduce exactly regardless
of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ._state import GraphSetState
from .families import (
    EnumerationCapExceeded,
    FamilySpec,
    IndexSet,
    enumerate_family,
)

SeedLike = Union[int, None, np.random.Generator]

# Memory-safe ceiling for materializing all size-k members before sampling.
SAMPLER_ENUM_CAP = 100_000


def rng_from(seed: SeedLike, *path: int) -> np.random.Generator:
    """Derive a Generator from a master seed and an integer stream path."""
    if isinstance(seed, np.random.Generator):
        if path:
            raise ValueError("cannot re-derive a stream from a live Generator")
        return seed
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


@dataclass(frozen=True, eq=False)
class Observations:
    """Length-n observation vector; Gaussian values or Poisson (count, baseline)."""

    mode: str
    values: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    baselines: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode == "gaussian":
            if self.values is None or self.counts is not None or self.baselines is not None:
                raise ValueError("gaussian observations carry values only")
            v = np.asarray(self.values, dtype=float)
            if v.ndim != 1 or v.size == 0:
                raise ValueError("values must be a nonempty 1-d vector")
            v = v.copy()
            v.flags.writeable = False
            object.__setattr__(self, "values", v)
        elif self.mode == "poisson":
            if self.counts is None or self.baselines is None or self.values is not None:
                raise ValueError("poisson observations carry counts and baselines")
            c = np.asarray(self.counts, dtype=np.int64)
            b = np.asarray(self.baselines, dtype=float)
            if c.ndim != 1 or c.size == 0 or b.shape != c.shape:
                raise ValueError("counts and baselines must be matching 1-d vectors")
            if (c < 0).any():
                raise ValueError("counts must be nonnegative")
            if (b <= 0).any():
                raise ValueError("baselines must be strictly positive")
            c, b = c.copy(), b.copy()
            c.flags.writeable = False
            b.flags.writeable = False
            object.__setattr__(self, "counts", c)
            object.__setattr__(self, "baselines", b)
        else:
            raise ValueError(f"unknown observation mode {self.mode!r}")

    @classmethod
    def gaussian(cls, values) -> "Observations":
        return cls("gaussian", values=np.asarray(values, dtype=float))

    @classmethod
    def poisson(cls, counts, baselines) -> "Observations":
        return cls("poisson", counts=np.asarray(counts), baselines=np.asarray(baselines))

    def __len__(self) -> int:
        return len(self.values) if self.mode == "gaussian" else len(self.counts)


# -- anomaly sampling -----------------------------------------------------------


class NoMemberOfSizeError(ValueError):
    """The family has no member of the requested size."""


def _binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def _grow_connected(
    adj: list[list[int]],
    component: list[int],
    k: int,
    rng: np.random.Generator,
    start: Optional[int] = None,
) -> set[int]:
    """Random connected k-set grown by uniform boundary additions."""
    if start is None:
        start = component[int(rng.integers(len(component)))]
    members = {start}
    blist = [w for w in adj[start]]
    bset = set(blist)
    while len(members) < k:
        if not blist:
            raise NoMemberOfSizeError(f"component too small to grow a size-{k} set")
        i = int(rng.integers(len(blist)))
        v = blist[i]
        blist[i] = blist[-1]
        blist.pop()
        bset.discard(v)
        members.add(v)
        for w in adj[v]:
            if w not in members and w not in bset:
                bset.add(w)
                blist.append(w)
    return members


def _mass_weighted_start(
    adj: list[list[int]], component: list[int], k: int, rng: np.random.Generator
) -> int:
    """Start vertex tilted toward dense regions.

    The uniform law over connected k-sets puts overwhelmingly more mass where
    many such sets live (a clique region beats a path by an exponential
    factor), which a bounded burn-in cannot discover from a bad start.
    Weighting the chain's start vertex by (1 + deg)^(k-1) seeds it in
    proportion to a crude local count estimate; on near-regular graphs the
    weights are nearly flat and the start stays effectively uniform.
    """
    degs = np.array([len(adj[v]) for v in component], dtype=float)
    logw = (k - 1) * np.log1p(degs)
    logw -= logw.max()
    w = np.exp(logw)
    return component[int(rng.choice(len(component), p=w / w.sum()))]


def _connected_chain_draw(
    adj: list[list[int]],
    component: list[int],
    k: int,
    n: int,
    rng: np.random.Generator,
) -> set[int]:
    """Metropolis-Hastings chain targeting the uniform law on connected k-sets.

    Moves swap one member for a boundary vertex; the |boundary| ratio in the
    acceptance corrects for the state-dependent proposal.
    """
    start = _mass_weighted_start(adj, component, k, rng)
    members = _grow_connected(adj, component, k, rng, start=start)
    if k == len(component):
        return members
    state = GraphSetState(adj, initial=members)
    burn_in = int(math.ceil(50 * k * math.log(max(n, 2))))
    for _ in range(burn_in):
        b_old = len(state.blist)
        if b_old == 0:
            break
        u = state.random_member(rng)
        v = state.random_boundary(rng)
        if not state.swap_keeps_connected(u, v):
            continue
        state.remove(u)
        state.add(v)
        b_new = len(state.blist)
        if b_new > b_old and rng.random() >= b_old / b_new:
            state.remove(v)
            state.add(u)
    return set(state.members)


def _feasible_low_cut_set(
    family: FamilySpec, k: int, rng: np.random.Generator, attempts: int = 8
) -> set[int]:
    """Find a size-k set with cut <= rho by annealing the cut of a random blob."""
    adj = family.graph.adjacency()
    n = family.n
    for _ in range(attempts):
        comps = [c for c in family.graph.components() if len(c) >= min(k, 2)]
        comp = comps[int(rng.integers(len(comps)))] if comps else list(range(n))
        if len(comp) >= k:
            members = _grow_connected(adj, comp, k, rng)
        else:
            members = set(rng.choice(n, size=k, replace=False).tolist())
        state = GraphSetState(adj, initial=members)
        if state.cut <= family.rho:
            return set(state.members)
        temp = 4.0
        cooling = (0.01 / temp) ** (1.0 / 20_000)
        for _ in range(20_000):
            u = state.random_member(rng)
            v = state.random_boundary(rng)
            if v is None:
                v = state.random_outsider(rng, n)
                if v is None:
                    break
            old_cut = state.cut
            state.remove(u)
            state.add(v)
            if state.cut <= family.rho:
                return set(state.members)
            delta = state.cut - old_cut
            if delta > 0 and rng.random() >= math.exp(-delta / temp):
                state.remove(v)
                state.add(u)
            temp *= cooling
    raise NoMemberOfSizeError(f"no size-{k} member with cut <= {family.rho} found")


def _feasible_dense_set(
    family: FamilySpec, k: int, rng: np.random.Generator, attempts: int = 8
) -> set[int]:
    """Find a size-k set with induced density >= delta by local search."""
    adj = family.graph.adjacency()
    n = family.n
    need = family.delta * k * (k - 1) / 2 if k >= 2 else 0.0
    for _ in range(attempts):
        comps = [c for c in family.graph.components() if len(c) >= k]
        if comps:
            comp = comps[int(rng.integers(len(comps)))]
            members = _grow_connected(adj, comp, k, rng)
        else:
            members = set(rng.choice(n, size=k, replace=False).tolist())
        state = GraphSetState(adj, initial=members)
        for _ in range(20_000):
            if state.edges >= need:
                return set(state.members)
            u = state.random_member(rng)
            v = state.random_outsider(rng, n)
            if v is None:
                break
            old_edges = state.edges
            state.remove(u)
            state.add(v)
            if state.edges < old_edges:
                state.remove(v)
                state.add(u)
        if state.edges >= need:
            return set(state.members)
    raise NoMemberOfSizeError(
        f"no size-{k} member with density >= {family.delta} found"
    )


def _feasible_swap_chain(
    family: FamilySpec,
    members: set[int],
    feasible,
    k: int,
    rng: np.random.Generator,
) -> set[int]:
    """Uniform-target Metropolis chain with symmetric full swaps.

    Proposals draw u from the set and v from its complement uniformly, so the
    chain is reversible and its stationary law is uniform on the reachable
    feasible size-k sets.
    """
    n = family.n
    burn_in = int(math.ceil(50 * k * math.log(max(n, 2))))
    state = GraphSetState(family.graph.adjacency(), initial=members)
    for _ in range(burn_in):
        u = state.random_member(rng)
        v = state.random_outsider(rng, n)
        if v is None:
            break
        state.remove(u)
        state.add(v)
        if not feasible(state):
            state.remove(v)
            state.add(u)
    return set(state.members)


class AnomalySampler:
    """Uniform sampler over the size-k members of a family.

    Construction picks the strategy once (closed form, enumerated list, or
    Markov chain); ``draw(rng)`` is then cheap and deterministic per stream,
    so one sampler can serve every trial of an experiment cell.
    """

    def __init__(self, family: FamilySpec, k: int, enum_cap: int = SAMPLER_ENUM_CAP):
        if k < 1 or k > family.n:
            raise NoMemberOfSizeError(f"no member of size {k} in a universe of {family.n}")
        self.family = family
        self.k = k
        self.strategy = None
        self._members: Optional[list[IndexSet]] = None
        kind = family.kind
        n = family.n

        if kind == "unstructured":
            self.strategy = "subset"
        elif kind == "graph_cut" and family.rho >= family.graph.n_edges():
            self.strategy = "subset"  # every subset is feasible
        elif kind == "interval":
            self.strategy = "interval"
        elif kind == "submatrix":
            pairs = [
                (p, k // p)
                for p in range(1, family.rows + 1)
                if k % p == 0 and k // p <= family.cols
            ]
            if not pairs:
                raise NoMemberOfSizeError(
                    f"size {k} has no rows x cols factorization within "
                    f"{family.rows} x {family.cols}"
                )
            weights = np.array(
                [_binom(family.rows, p) * _binom(family.cols, q) for p, q in pairs],
                dtype=float,
            )
            self._pairs = pairs
            self._pair_probs = weights / weights.sum()
            self.strategy = "submatrix"
        elif kind == "connected":
            self._adj = family.graph.adjacency()
            self._components = [c for c in family.graph.components() if len(c) >= k]
            if not self._components:
                raise NoMemberOfSizeError(
                    f"no connected component has {k} or more vertices"
                )
            members = None
            if family.n <= 2000:
                # cheap probe; the work budget keeps a hopeless enumeration
                # from burning more than ~a second before we fall back
                try:
                    members = enumerate_family(
                        family, size_filter=k, cap=enum_cap, work_budget=500_000
                    )
                except EnumerationCapExceeded:
                    members = None
            if members is not None:
                if not members:
                    raise NoMemberOfSizeError(f"no connected member of size {k}")
                self._members = members
                self.strategy = "enumerated"
            else:
                self.strategy = "connected_chain"
        elif kind in ("graph_cut", "edge_dense", "epsilon_ball"):
            members = None
            if kind == "epsilon_ball" or family.n <= 24:
                try:
                    members = enumerate_family(
                        family, size_filter=k, cap=enum_cap, work_budget=2_000_000
                    )
                except EnumerationCapExceeded:
                    if kind == "epsilon_ball":
                        raise  # ball enumeration is O(n) and cannot realistically trip
                    members = None
            if members is not None:
                if not members:
                    raise NoMemberOfSizeError(f"no member of size {k}")
                self._members = members
                self.strategy = "enumerated"
            else:
                self.strategy = "feasible_chain"
        else:
            raise AssertionError(kind)

    def draw(self, rng: np.random.Generator) -> IndexSet:
        family, k, n = self.family, self.k, self.family.n
        if self.strategy == "subset":
            idx = np.sort(rng.choice(n, size=k, replace=False))
            return IndexSet(tuple(int(i) for i in idx), n)
        if self.strategy == "interval":
            start = int(rng.integers(0, n - k + 1))
            return IndexSet(tuple(range(start, start + k)), n)
        if self.strategy == "submatrix":
            which = int(rng.choice(len(self._pairs), p=self._pair_probs))
            p, q = self._pairs[which]
            rsel = rng.choice(family.rows, size=p, replace=False)
            csel = rng.choice(family.cols, size=q, replace=False)
            cells = sorted(int(r) * family.cols + int(c) for r in rsel for c in csel)
            return IndexSet(tuple(cells), n)
        if self.strategy == "enumerated":
            return self._members[int(rng.integers(len(self._members)))]
        if self.strategy == "connected_chain":
            sizes = np.array([len(c) for c in self._components], dtype=float)
            comp = self._components[int(rng.choice(len(self._components), p=sizes / sizes.sum()))]
            members = _connected_chain_draw(self._adj, comp, k, n, rng)
            return IndexSet(tuple(sorted(members)), n)
        if self.strategy == "feasible_chain":
            if family.kind == "graph_cut":
                members = _feasible_low_cut_set(family, k, rng)
                feasible = lambda st: st.cut <= family.rho
            else:
                members = _feasible_dense_set(family, k, rng)
                need = family.delta * k * (k - 1) / 2 if k >= 2 else 0.0
                feasible = lambda st: st.edges >= need
            members = _feasible_swap_chain(family, members, feasible, k, rng)
            return IndexSet(tuple(sorted(members)), n)
        raise AssertionError(self.strategy)


def sample_anomaly(family: FamilySpec, k: int, seed: SeedLike) -> IndexSet:
    """A size-k family member, uniform over size-k members.

    Exactly uniform whenever the size-k slice is available in closed form or
    enumerable within the sampler cap; otherwise approximately uniform via a
    feasibility-preserving Metropolis chain (burn-in 50 k log n).
    """
    return AnomalySampler(family, k).draw(rng_from(seed))


# -- observation samplers --------------------------------------------------------


def sample_asd(a: IndexSet, mu: float, n: int, seed: SeedLike) -> Observations:
    """Anomalous-subset data: N(mu, 1) on ``a``, N(0, 1) elsewhere."""
    if a.universe_size != n:
        raise ValueError(f"anomaly universe {a.universe_size} != n = {n}")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = rng_from(seed)
    x = rng.standard_normal(n)
    if len(a):
        x[list(a.indices)] += mu
    return Observations.gaussian(x)


def sample_gmm(
    alpha: float, mu: float, n: int, seed: SeedLike
) -> tuple[Observations, np.ndarray]:
    """i.i.d. two-component unit-variance mixture draws plus latent labels."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    rng = rng_from(seed)
    z = (rng.random(n) < alpha).astype(np.int8)
    x = rng.standard_normal(n) + mu * z
    return Observations.gaussian(x), z


def sample_poisson_counts(
    a: IndexSet, q_in: float, baselines: Sequence[float], seed: SeedLike
) -> Observations:
    """Counts with relative risk ``q_in`` on ``a`` over the given baselines."""
    b = np.asarray(baselines, dtype=float)
    if (b <= 0).any():
        raise ValueError("baselines must be strictly positive")
    if a.universe_size != b.size:
        raise ValueError(f"anomaly universe {a.universe_size} != {b.size} baselines")
    if q_in <= 0:
        raise ValueError("relative risk must be positive")
    rng = rng_from(seed)
    rates = b.copy()
    if len(a):
        rates[list(a.indices)] *= q_in
    return Observations.poisson(rng.poisson(rates), b)
