"""Independent reference implementations used to check the package.

Nothing here imports the code under test; each oracle is the slowest,
most literal version of the thing it checks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np


# --------------------------------------------------------------------------- #
# dominance and frontiers

def ref_dominates(u, v) -> bool:
    return all(a <= b for a, b in zip(u, v)) and any(a < b for a, b in zip(u, v))


def ref_frontier(vectors) -> set[int]:
    """Indices of vectors no other vector dominates (O(n^2) scan)."""
    return {i for i, v in enumerate(vectors) if not any(ref_dominates(u, v) for u in vectors)}


def ref_fronts(vectors) -> list[set[int]]:
    """Peel successive non-dominated layers off a list of vectors."""
    left = set(range(len(vectors)))
    fronts = []
    while left:
        layer = {i for i in left if not any(ref_dominates(vectors[j], vectors[i]) for j in left)}
        fronts.append(layer)
        left -= layer
    return fronts


def dominance_scan(vectors) -> list[tuple[int, int]]:
    """Pairs (i, j) where vector i dominates vector j."""
    return [(i, j) for i, u in enumerate(vectors) for j, v in enumerate(vectors) if i != j and ref_dominates(u, v)]


# --------------------------------------------------------------------------- #
# design space

def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def ref_feasible(H, W, L, B, array_size, max_b=8, l_min=2, l_max=32) -> bool:
    return (
        all(is_pow2(v) for v in (H, W, L))
        and H * W == array_size
        and L <= H and H % L == 0
        and H // L >= 2 ** B
        and 1 <= B <= max_b
        and l_min <= L <= l_max
    )


def ref_enumerate(array_size, max_b=8, l_min=2, l_max=32) -> set[tuple[int, int, int, int]]:
    """Triple loop over a lattice wider than the feasible region."""
    out = set()
    for H, L, B in product(range(1, 2 * array_size + 1), range(1, 65), range(1, max_b + 3)):
        if array_size % H:
            continue
        W = array_size // H
        if ref_feasible(H, W, L, B, array_size, max_b, l_min, l_max):
            out.add((H, W, L, B))
    return out


# --------------------------------------------------------------------------- #
# closed-form model, evaluated in exact rationals where possible

def exact_adc_energy(B: int, k1: float, k2: float, vdd: float) -> float:
    """E = k1 (B + log2 Vdd) + k2 4^B Vdd^2; only the log is inexact."""
    log_term = Fraction(math.log2(vdd))
    value = Fraction(k1) * (B + log_term) + Fraction(k2) * 4**B * Fraction(vdd) ** 2
    return float(value)


def ref_area(p, H, L, B) -> float:
    return float(Fraction(p["A_sram"]) + Fraction(p["A_lc"]) / L + Fraction(p["A_comp"]) / H
                 + B * Fraction(p["A_dff"]) / H)


# --------------------------------------------------------------------------- #
# Monte Carlo oracles (no clipping, plain rounding quantizers)

def mc_input_quantization_variance(N, x_step, w_step, samples, seed) -> float:
    """Output error variance of sum(q(x) q(w)) - sum(x w), x, w ~ N(0, 1)."""
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    while done < samples:
        n = min(100_000, samples - done)
        x = rng.standard_normal((n, N))
        w = rng.standard_normal((n, N))
        xq = x_step * np.round(x / x_step)
        wq = w_step * np.round(w / w_step)
        err = (xq * wq).sum(axis=1) - (x * w).sum(axis=1)
        total += float((err**2).sum())
        done += n
    return total / samples


def mc_output_sqnr_db(B, N, zeta_x, zeta_w, samples, seed) -> float:
    """SQNR of a B-bit quantizer spanning +-N x_m w_m, fed with Gaussian outputs."""
    rng = np.random.default_rng(seed)
    sigma_y = math.sqrt(N)  # unit sigma_x, sigma_w
    full_scale = N * zeta_x * zeta_w
    step = 2.0 * full_scale / 2**B
    y = rng.standard_normal(samples) * sigma_y
    yq = np.clip(step * np.round(y / step), -full_scale, full_scale)
    return 10.0 * math.log10(float((y**2).mean()) / float(((yq - y) ** 2).mean()))


# --------------------------------------------------------------------------- #
# grids

def bfs_cost(shape, occupancy, nid, sources, targets, via_cost) -> int | None:
    """Cheapest path cost from any source to any target (Dial's buckets).

    ``shape`` is (layers, height, width); cells are flat indices in
    layer-major, then row-major order.  Passable cells are free (0) or
    already owned by ``nid``.  In-plane steps cost 1, layer changes
    ``via_cost``.
    """
    L, H, W = shape
    plane = H * W
    targets = set(targets)
    dist = {s: 0 for s in sources}
    buckets: dict[int, list[int]] = {0: list(sources)}
    d = 0
    limit = (L * plane + 1) * max(via_cost, 1)
    while d <= limit:
        for i in buckets.pop(d, []):
            if dist.get(i) != d:
                continue
            if i in targets:
                return d
            l, rem = divmod(i, plane)
            y, x = divmod(rem, W)
            nbrs = []
            if x > 0:
                nbrs.append((i - 1, 1))
            if x < W - 1:
                nbrs.append((i + 1, 1))
            if y > 0:
                nbrs.append((i - W, 1))
            if y < H - 1:
                nbrs.append((i + W, 1))
            if l > 0:
                nbrs.append((i - plane, via_cost))
            if l < L - 1:
                nbrs.append((i + plane, via_cost))
            for j, c in nbrs:
                o = occupancy[j]
                if o != 0 and o != nid:
                    continue
                nd = d + c
                if nd < dist.get(j, nd + 1):
                    dist[j] = nd
                    buckets.setdefault(nd, []).append(j)
        if not buckets:
            return None
        d = min(buckets)
    return None


def path_cost(shape, path, via_cost) -> int:
    _, H, W = shape
    plane = H * W
    cost = 0
    for a, b in zip(path, path[1:]):
        cost += via_cost if abs(a - b) == plane else 1
    return cost


def ref_hpwl(nets) -> int:
    total = 0
    for pins in nets.values():
        if len(pins) < 2:
            continue
        xs = [p[0] for p in pins]
        ys = [p[1] for p in pins]
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def ref_group_hpwl(groups) -> int:
    """Smallest box half perimeter holding a cell of every group, by trying every box."""
    if len(groups) < 2:
        return 0
    xs = sorted({c[0] for g in groups for c in g})
    ys = sorted({c[1] for g in groups for c in g})
    best = None
    for x0 in xs:
        for x1 in (x for x in xs if x >= x0):
            for y0 in ys:
                for y1 in (y for y in ys if y >= y0):
                    if all(any(x0 <= c[0] <= x1 and y0 <= c[1] <= y1 for c in g) for g in groups):
                        size = (x1 - x0) + (y1 - y0)
                        best = size if best is None else min(best, size)
    return best


# --------------------------------------------------------------------------- #
# netlist counts

def column_leaf_count(H, L, B) -> int:
    n = H // L
    return H + 2 * n + 1 + B + (1 if n > 2**B else 0)
