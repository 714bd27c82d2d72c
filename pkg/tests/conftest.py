"""Shared brute-force oracles for the solver tests.

The oracles deliberately avoid the library's solver code paths: subsets are
walked by bitmask and scored directly, so agreement with the fast solvers is
meaningful.
"""

import math

import numpy as np
import pytest

from structscan import FamilySpec, IndexSet, contains


def subset_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean membership matrix of all 2^n - 1 nonempty subsets, plus sizes."""
    ids = np.arange(1, 2**n, dtype=np.uint32)
    masks = ((ids[:, None] >> np.arange(n)) & 1).astype(bool)
    return masks, masks.sum(axis=1)


def brute_force_gamma_max(x: np.ndarray) -> float:
    """Max of Gamma over every nonempty subset, by direct evaluation."""
    masks, sizes = subset_masks(x.size)
    sums = masks @ x
    return float((sums / np.sqrt(sizes)).max())


def brute_force_family_argmax(x: np.ndarray, members) -> tuple[tuple, float]:
    """Direct argmax of Gamma over an explicit member list."""
    best, best_score = None, -math.inf
    for m in members:
        idx = list(m.indices) if isinstance(m, IndexSet) else list(m)
        s = float(x[idx].sum()) / math.sqrt(len(idx))
        if s > best_score:
            best, best_score = tuple(idx), s
    return best, best_score


def brute_force_members(family: FamilySpec) -> list[tuple]:
    """All family members on a small universe via the membership predicate."""
    n = family.n
    out = []
    masks, _ = subset_masks(n)
    for row in masks:
        t = tuple(int(i) for i in np.nonzero(row)[0])
        if contains(family, IndexSet(t, n)):
            out.append(t)
    return sorted(out)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240117)
