"""Incrementally maintained vertex-set state for chain samplers and annealers.

Tracks member and boundary lists with O(1) uniform sampling and swap-removal,
per-vertex member-neighbor counts (``cover``), the cut size and induced edge
count, and up to two running weight sums.  All mutations are O(deg).

``cover[u] == 1`` for a member u means u is a pendant of the induced
subgraph, so dropping it cannot disconnect the rest; callers use that to skip
most BFS connectivity checks on sparse graphs.
"""

from __future__ import annotations

from typing import Optional


class GraphSetState:
    __slots__ = (
        "adj",
        "w1",
        "w2",
        "members",
        "mlist",
        "mpos",
        "blist",
        "bpos",
        "plist",
        "ppos",
        "cover",
        "s1",
        "s2",
        "size",
        "cut",
        "edges",
    )

    def __init__(self, adj, w1=None, w2=None, initial=()):
        n = len(adj)
        self.adj = adj
        self.w1 = w1 if w1 is not None else [0.0] * n
        self.w2 = w2
        self.members: set[int] = set()
        self.mlist: list[int] = []
        self.mpos: dict[int, int] = {}
        self.blist: list[int] = []
        self.bpos: dict[int, int] = {}
        self.plist: list[int] = []  # pendant members (cover == 1)
        self.ppos: dict[int, int] = {}
        self.cover = [0] * n
        self.s1 = 0.0
        self.s2 = 0.0
        self.size = 0
        self.cut = 0
        self.edges = 0
        for v in sorted(initial):
            self.add(v)

    @staticmethod
    def _list_add(lst, pos, v):
        pos[v] = len(lst)
        lst.append(v)

    @staticmethod
    def _list_remove(lst, pos, v):
        i = pos.pop(v)
        last = lst.pop()
        if last != v:
            lst[i] = last
            pos[last] = i

    def add(self, v: int) -> None:
        cov = self.cover[v]
        self.cut += len(self.adj[v]) - 2 * cov
        self.edges += cov
        self.members.add(v)
        self._list_add(self.mlist, self.mpos, v)
        if v in self.bpos:
            self._list_remove(self.blist, self.bpos, v)
        members, bpos, ppos, cover = self.members, self.bpos, self.ppos, self.cover
        for w in self.adj[v]:
            cover[w] += 1
            if w not in members:
                if w not in bpos:
                    self._list_add(self.blist, bpos, w)
            elif cover[w] == 2:
                if w in ppos:
                    self._list_remove(self.plist, ppos, w)
            elif cover[w] == 1:
                self._list_add(self.plist, ppos, w)
        if cov == 1:
            self._list_add(self.plist, ppos, v)
        self.s1 += self.w1[v]
        if self.w2 is not None:
            self.s2 += self.w2[v]
        self.size += 1

    def remove(self, u: int) -> None:
        cov = self.cover[u]
        self.cut -= len(self.adj[u]) - 2 * cov
        self.edges -= cov
        self.members.discard(u)
        self._list_remove(self.mlist, self.mpos, u)
        if u in self.ppos:
            self._list_remove(self.plist, self.ppos, u)
        members, bpos, ppos, cover = self.members, self.bpos, self.ppos, self.cover
        for w in self.adj[u]:
            cover[w] -= 1
            if w not in members:
                if cover[w] == 0 and w in bpos:
                    self._list_remove(self.blist, bpos, w)
            elif cover[w] == 1:
                self._list_add(self.plist, ppos, w)
            elif cover[w] == 0 and w in ppos:
                self._list_remove(self.plist, ppos, w)
        if cov > 0:
            self._list_add(self.blist, bpos, u)
        self.s1 -= self.w1[u]
        if self.w2 is not None:
            self.s2 -= self.w2[u]
        self.size -= 1

    # -- connectivity ----------------------------------------------------------

    def drop_keeps_connected(self, u: int) -> bool:
        """Does (members - {u}) stay connected?  Pendants short-circuit."""
        if self.size <= 1:
            return False
        if self.cover[u] <= 1:
            return True
        return self._bfs_connected(exclude=u, extra=None, target=self.size - 1)

    def swap_keeps_connected(self, u: int, v: int) -> bool:
        """Is (members - {u}) + {v} connected?  v must have a member neighbor."""
        if self.size == 1:
            return True  # singleton swap always yields a singleton
        covu, covv = self.cover[u], self.cover[v]
        if covv == 0:
            return False
        if covu <= 1:
            # rest stays connected; v just needs a neighbor besides u
            if covv >= 2:
                return True
            return u not in self.adj_set(v)
        return self._bfs_connected(exclude=u, extra=v, target=self.size)

    def adj_set(self, v: int):
        return self.adj[v]  # lists are small; linear scan is fine

    def _bfs_connected(self, exclude: int, extra: Optional[int], target: int) -> bool:
        if target <= 0:
            return False
        members = self.members
        if extra is not None:
            start = extra
        else:
            start = self.mlist[0] if self.mlist[0] != exclude else self.mlist[1]
        seen = {start}
        stack = [start]
        count = 1
        if count == target:
            return True
        adj = self.adj
        while stack:
            a = stack.pop()
            for w in adj[a]:
                if w == exclude or w in seen:
                    continue
                if w in members or w == extra:
                    seen.add(w)
                    count += 1
                    if count == target:
                        return True
                    stack.append(w)
        return False

    # -- sampling helpers --------------------------------------------------------

    def random_member(self, rng) -> int:
        return self.mlist[int(rng.integers(self.size))]

    def random_droppable(self, rng) -> Optional[int]:
        """A member to drop, preferring pendants (no connectivity check needed).

        Pendants are always safe; a uniform member is proposed 30% of the
        time so non-pendant drops stay reachable (caller must BFS-check those).
        """
        if self.plist and rng.random() < 0.7:
            return self.plist[int(rng.integers(len(self.plist)))]
        return self.mlist[int(rng.integers(self.size))]

    def random_boundary(self, rng) -> Optional[int]:
        if not self.blist:
            return None
        return self.blist[int(rng.integers(len(self.blist)))]

    def random_outsider(self, rng, n: int) -> Optional[int]:
        if self.size >= n:
            return None
        while True:
            v = int(rng.integers(n))
            if v not in self.members:
                return v
