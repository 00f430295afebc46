"""Constrained design-space exploration: feasibility, dominance, frontiers.

Objective vectors are in minimization form
``[-snr_db, -throughput, energy_per_op, area_per_bit]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySpaceError, ValidationError
from .model import DesignPoint, PerformanceVector, _is_pow2, evaluate
from .profile import TechnologyProfile

N_OBJECTIVES = 4


@dataclass(frozen=True)
class SearchBounds:
    array_size: int
    max_b_adc: int = 8
    l_min: int = 2
    l_max: int = 32

    def __post_init__(self) -> None:
        if not _is_pow2(self.array_size):
            raise ValidationError(f"array_size must be a power of two, got {self.array_size!r}")
        if self.l_min < 1 or self.l_min > self.l_max:
            raise ValidationError(f"need 1 <= l_min <= l_max, got {self.l_min}, {self.l_max}")
        if self.max_b_adc < 1:
            raise ValidationError(f"max_b_adc must be >= 1, got {self.max_b_adc}")

    @property
    def log2_size(self) -> int:
        return self.array_size.bit_length() - 1

    @property
    def log2_l_range(self) -> tuple[int, int]:
        """Inclusive exponent range of powers of two inside [l_min, l_max]."""
        lo = (self.l_min - 1).bit_length()
        hi = self.l_max.bit_length() - 1
        return lo, hi


def objective_vector(perf: PerformanceVector) -> tuple[float, float, float, float]:
    vec = perf.objectives()
    if not all(math.isfinite(v) for v in vec):
        raise ValidationError(f"objective vector must be finite, got {vec}")
    return vec


def dominates(u: Sequence[float], v: Sequence[float]) -> bool:
    """Pareto dominance in a minimization context."""
    if len(u) != len(v):
        raise ValidationError(f"objective vectors differ in length: {len(u)} vs {len(v)}")
    strictly = False
    for a, b in zip(u, v):
        if a > b:
            return False
        if a < b:
            strictly = True
    return strictly


def is_feasible(point: DesignPoint, bounds: SearchBounds) -> bool:
    if point.violations():
        return False
    return (
        point.H * point.W == bounds.array_size
        and point.B_adc <= bounds.max_b_adc
        and bounds.l_min <= point.L <= bounds.l_max
    )


def enumerate_feasible(bounds: SearchBounds) -> list[DesignPoint]:
    """All feasible points, ordered lexicographically by (H, L, B_adc)."""
    out = []
    lo, hi = bounds.log2_l_range
    for h in range(bounds.log2_size + 1):
        H = 1 << h
        W = bounds.array_size // H
        for l in range(lo, min(hi, h) + 1):
            L = 1 << l
            for B in range(1, bounds.max_b_adc + 1):
                point = DesignPoint(H, W, L, B)
                if is_feasible(point, bounds):
                    out.append(point)
    return out


# --------------------------------------------------------------------------- #
# Pareto sets
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class ParetoEntry:
    point: DesignPoint
    performance: PerformanceVector

    @property
    def objectives(self) -> tuple[float, float, float, float]:
        return objective_vector(self.performance)


@dataclass
class ParetoSet:
    entries: list[ParetoEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for e in self.entries:
            if e.point in seen:
                raise ValidationError(f"duplicate design point {e.point} in Pareto set")
            seen.add(e.point)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def points(self) -> set[DesignPoint]:
        return {e.point for e in self.entries}

    def objective_matrix(self) -> np.ndarray:
        return np.array([e.objectives for e in self.entries], dtype=float).reshape(-1, N_OBJECTIVES)

    def sorted(self) -> "ParetoSet":
        return ParetoSet(sorted(self.entries, key=lambda e: e.point.as_tuple()))


def mutual_nondominance_violations(objectives: np.ndarray) -> list[tuple[int, int]]:
    """Index pairs (i, j) where row i dominates row j."""
    F = np.asarray(objectives, dtype=float)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    dom = le & lt
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(dom))]


def pareto_mask(objectives: np.ndarray) -> np.ndarray:
    """Boolean mask of non-dominated rows.

    Rows are visited in lexicographic order; a row can only be dominated by
    rows that precede it, so each candidate is compared against the current
    frontier only.
    """
    F = np.asarray(objectives, dtype=float)
    n = len(F)
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask
    order = np.lexsort(F.T[::-1])
    front: list[int] = []
    for i in order:
        row = F[i]
        if front:
            P = F[front]
            dominated = ((P <= row).all(axis=1) & (P < row).any(axis=1)).any()
            if dominated:
                continue
        front.append(int(i))
    mask[front] = True
    return mask


def frontier_of(entries: Iterable[ParetoEntry]) -> ParetoSet:
    entries = list(entries)
    if not entries:
        return ParetoSet([])
    F = np.array([e.objectives for e in entries])
    mask = pareto_mask(F)
    kept = [e for e, m in zip(entries, mask) if m]
    return ParetoSet(sorted(kept, key=lambda e: e.point.as_tuple()))


def evaluate_space(bounds: SearchBounds, profile: TechnologyProfile) -> list[ParetoEntry]:
    return [ParetoEntry(p, evaluate(p, profile)) for p in enumerate_feasible(bounds)]


def brute_force_pareto(bounds: SearchBounds, profile: TechnologyProfile) -> ParetoSet:
    """Exact frontier over the full feasible enumeration."""
    entries = evaluate_space(bounds, profile)
    if not entries:
        raise EmptySpaceError(f"no feasible design point for {bounds}")
    return frontier_of(entries)


# --------------------------------------------------------------------------- #
# NSGA-II building blocks
# --------------------------------------------------------------------------- #
def dominance_matrix(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    return le & lt


def non_dominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Fast non-dominated sort; returns fronts as ascending index lists."""
    F = np.asarray(objectives, dtype=float)
    if F.ndim != 2 or len(F) == 0:
        raise ValidationError("non_dominated_sort needs a non-empty 2-D objective list")
    dom = dominance_matrix(F)
    count = dom.sum(axis=0)  # how many rows dominate each column
    fronts: list[list[int]] = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append([int(i) for i in current])
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(front: Sequence[Sequence[float]]) -> list[float]:
    """Crowding distance of each member of one front.

    Members holding the extreme value of an objective get ``inf``.  Interior
    members add the gap between the nearest strictly smaller and strictly
    larger values, normalized by the objective range; tied members therefore
    receive identical distances.  A zero-range objective contributes nothing.
    """
    F = np.asarray(front, dtype=float)
    if F.ndim != 2 or len(F) == 0:
        raise ValidationError("crowding_distance needs a non-empty front")
    n, m = F.shape
    dist = np.zeros(n)
    for k in range(m):
        col = F[:, k]
        lo, hi = col.min(), col.max()
        span = hi - lo
        if span == 0:
            continue
        values = np.unique(col)
        pos = np.searchsorted(values, col)
        boundary = (col == lo) | (col == hi)
        prev = values[np.maximum(pos - 1, 0)]
        nxt = values[np.minimum(pos + 1, len(values) - 1)]
        gap = (nxt - prev) / span
        dist = np.where(boundary, np.inf, dist + np.where(boundary, 0.0, gap))
    return [float(d) for d in dist]
