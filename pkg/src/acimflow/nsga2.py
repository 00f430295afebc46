"""NSGA-II over the integer genome (log2 H, log2 L, B_adc).

W is derived from the array-size equality, so every genome satisfies
``H * W == array_size`` by construction.  Offspring that break the remaining
constraints are repaired rather than penalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import EmptySpaceError, ValidationError
from .explorer import (
    ParetoEntry,
    ParetoSet,
    SearchBounds,
    crowding_distance,
    enumerate_feasible,
    frontier_of,
    non_dominated_sort,
)
from .model import DesignPoint, evaluate
from .profile import TechnologyProfile

log = logging.getLogger(__name__)

Genome = tuple[int, int, int]

DEFAULT_SEED = 20240624


@dataclass(frozen=True)
class GaParams:
    population: int = 100
    generations: int = 100
    crossover_prob: float = 0.9
    mutation_prob_per_gene: float = 1.0 / 3.0
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.population < 4 or self.population % 2:
            raise ValidationError(f"population must be even and >= 4, got {self.population}")
        if self.generations < 0:
            raise ValidationError(f"generations must be >= 0, got {self.generations}")
        for name in ("crossover_prob", "mutation_prob_per_gene"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {p}")


@dataclass
class Nsga2Run:
    """Everything a run produced.

    ``pareto_set`` is the non-dominated subset of every individual evaluated
    during the run (an elitist archive); ``final_front`` is the first front
    of the last population, which is bounded by the population size.
    """

    pareto_set: ParetoSet
    final_front: ParetoSet
    evaluated: int
    population: list[DesignPoint] = field(default_factory=list)


class _Genes:
    def __init__(self, bounds: SearchBounds):
        lo, hi = bounds.log2_l_range
        self.l_lo, self.l_hi = lo, hi
        self.h_lo, self.h_hi = lo + 1, bounds.log2_size
        self.b_hi = bounds.max_b_adc
        self.size = bounds.array_size
        if self.h_lo > self.h_hi or lo > hi:
            raise EmptySpaceError(f"no feasible design point for {bounds}")

    def lower(self) -> tuple[int, int, int]:
        return (self.h_lo, self.l_lo, 1)

    def upper(self) -> tuple[int, int, int]:
        return (self.h_hi, self.l_hi, self.b_hi)

    def repair(self, g: Genome) -> Genome:
        h, l, b = g
        h = min(max(h, self.h_lo), self.h_hi)
        # L into [l_min, min(l_max, H/2)]; H/2 keeps room for at least one ADC bit
        l = min(max(l, self.l_lo), min(self.l_hi, h - 1))
        # B_adc limited by the capacitors available: 2^B <= H/L
        b = min(max(b, 1), self.b_hi, h - l)
        return (h, l, b)

    def point(self, g: Genome) -> DesignPoint:
        h, l, b = g
        return DesignPoint(1 << h, self.size >> h, 1 << l, b)

    @staticmethod
    def genome(p: DesignPoint) -> Genome:
        return (p.H.bit_length() - 1, p.L.bit_length() - 1, p.B_adc)


def _reflect(value: int, lo: int, hi: int) -> int:
    if lo == hi:
        return lo
    if value < lo:
        return min(2 * lo - value, hi)
    if value > hi:
        return max(2 * hi - value, lo)
    return value


class NSGA2:
    def __init__(
        self,
        bounds: SearchBounds,
        profile: TechnologyProfile,
        params: GaParams = GaParams(),
        initial: Iterable[DesignPoint] = (),
    ):
        self.bounds = bounds
        self.profile = profile
        self.params = params
        self.genes = _Genes(bounds)
        self.rng = np.random.default_rng(params.seed)
        self.initial = [self.genes.genome(p) for p in initial]
        self._cache: dict[Genome, tuple[float, ...]] = {}
        self._entries: dict[Genome, ParetoEntry] = {}
        self._space = len(enumerate_feasible(bounds))

    # ------------------------------------------------------------------ #
    def _objectives(self, g: Genome) -> tuple[float, ...]:
        cached = self._cache.get(g)
        if cached is None:
            point = self.genes.point(g)
            entry = ParetoEntry(point, evaluate(point, self.profile))
            self._entries[g] = entry
            cached = self._cache[g] = entry.objectives
        return cached

    def _random_genome(self) -> Genome:
        lo, hi = self.genes.lower(), self.genes.upper()
        g = tuple(int(self.rng.integers(a, b + 1)) for a, b in zip(lo, hi))
        return self.genes.repair(g)

    def _tournament(self, rank: np.ndarray, crowd: np.ndarray) -> int:
        i, j = self.rng.integers(0, len(rank), size=2)
        if rank[i] != rank[j]:
            return int(i if rank[i] < rank[j] else j)
        if crowd[i] != crowd[j]:
            return int(i if crowd[i] > crowd[j] else j)
        return int(i)

    def _crossover(self, a: Genome, b: Genome) -> tuple[Genome, Genome]:
        if self.rng.random() >= self.params.crossover_prob:
            return a, b
        swap = self.rng.random(3) < 0.5
        c1 = tuple(y if s else x for x, y, s in zip(a, b, swap))
        c2 = tuple(x if s else y for x, y, s in zip(a, b, swap))
        return c1, c2

    def _mutate(self, g: Genome) -> Genome:
        lo, hi = self.genes.lower(), self.genes.upper()
        out = list(g)
        for k in range(3):
            if self.rng.random() < self.params.mutation_prob_per_gene:
                step = 1 if self.rng.random() < 0.5 else -1
                out[k] = _reflect(out[k] + step, lo[k], hi[k])
        return self.genes.repair(tuple(out))

    def _walk_to_fresh(self, g: Genome, seen: set[Genome]) -> Genome:
        """Random +/-1 walk from a clone until it leaves ``seen`` (bounded)."""
        if len(seen) >= self._space:
            return g  # nothing left to find
        lo, hi = self.genes.lower(), self.genes.upper()
        steps = 2 * sum(b - a for a, b in zip(lo, hi))
        for _ in range(steps):
            if g not in seen:
                break
            out = list(g)
            k = int(self.rng.integers(0, 3))
            out[k] = _reflect(out[k] + (1 if self.rng.random() < 0.5 else -1), lo[k], hi[k])
            g = self.genes.repair(tuple(out))
        return g

    def _rank_and_crowd(self, pop: list[Genome]) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
        F = np.array([self._objectives(g) for g in pop])
        fronts = non_dominated_sort(F)
        rank = np.empty(len(pop), dtype=int)
        crowd = np.empty(len(pop))
        for r, front in enumerate(fronts):
            rank[front] = r
            crowd[front] = crowding_distance(F[front])
        return rank, crowd, fronts

    def _offspring(self, pop: list[Genome], rank, crowd) -> list[Genome]:
        n = self.params.population
        existing = set(pop) | set(self._entries)
        children: list[Genome] = []
        attempts = 0
        while len(children) < n:
            a = pop[self._tournament(rank, crowd)]
            b = pop[self._tournament(rank, crowd)]
            for child in self._crossover(a, b):
                child = self._walk_to_fresh(self._mutate(child), existing)
                # already-evaluated genomes are dropped while fresh ones remain reachable
                if child in existing and attempts < 20 * n and len(existing) < self._space:
                    attempts += 1
                    continue
                existing.add(child)
                children.append(child)
        return children[:n]

    def _survivors(self, merged: list[Genome]) -> list[Genome]:
        n = self.params.population
        unique = list(dict.fromkeys(merged))
        # a space smaller than the population is padded with repeats
        k = 0
        while len(unique) < n:
            unique.append(unique[k])
            k += 1
        rank, crowd, fronts = self._rank_and_crowd(unique)
        chosen: list[int] = []
        for front in fronts:
            if len(chosen) + len(front) <= n:
                chosen.extend(front)
                continue
            order = sorted(front, key=lambda i: (-crowd[i], unique[i]))
            chosen.extend(order[: n - len(chosen)])
            break
        return [unique[i] for i in chosen]

    # ------------------------------------------------------------------ #
    def run(self, on_generation: Callable[[int, list[DesignPoint]], None] | None = None) -> Nsga2Run:
        n = self.params.population
        pop = [self.genes.repair(g) for g in self.initial][:n]
        seen = set(pop)
        tries = 0
        while len(pop) < n:
            g = self._random_genome()
            tries += 1
            if g in seen and tries < 50 * n:
                continue
            seen.add(g)
            pop.append(g)
        for g in pop:
            self._objectives(g)
        if on_generation:
            on_generation(0, [self.genes.point(g) for g in pop])
        for gen in range(1, self.params.generations + 1):
            rank, crowd, _ = self._rank_and_crowd(pop)
            children = self._offspring(pop, rank, crowd)
            for g in children:
                self._objectives(g)
            pop = self._survivors(pop + children)
            if on_generation:
                on_generation(gen, [self.genes.point(g) for g in pop])
        _, _, fronts = self._rank_and_crowd(pop)
        first = list(dict.fromkeys(pop[i] for i in fronts[0]))
        final_front = ParetoSet(sorted((self._entries[g] for g in first), key=lambda e: e.point.as_tuple()))
        archive = frontier_of(self._entries.values())
        log.debug("nsga2 seed=%d evaluated=%d archive=%d final_front=%d",
                  self.params.seed, len(self._entries), len(archive), len(final_front))
        return Nsga2Run(archive, final_front, len(self._entries), [self.genes.point(g) for g in pop])


def nsga2_explore(
    bounds: SearchBounds,
    profile: TechnologyProfile,
    params: GaParams = GaParams(),
    initial: Iterable[DesignPoint] = (),
) -> ParetoSet:
    """Run NSGA-II and return the non-dominated set it discovered."""
    if not enumerate_feasible(bounds):
        raise EmptySpaceError(f"no feasible design point for {bounds}")
    return NSGA2(bounds, profile, params, initial).run().pareto_set
