from __future__ import annotations

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from acimflow.distill import METRICS, Clause, FilterSpec, apply_filter
from acimflow.errors import RoutingError
from acimflow.explorer import (
    ParetoEntry,
    SearchBounds,
    brute_force_pareto,
    dominates,
    enumerate_feasible,
    evaluate_space,
    frontier_of,
    pareto_mask,
)
from acimflow.layout import LayoutParams, hpwl, orient_cells, route_nets
from acimflow.model import (
    DesignPoint,
    PerformanceVector,
    evaluate,
    snr_pre,
    snr_total_db,
    sqnr_output_db,
)
from acimflow.netlist import emit_netlist, generate_macro, load_cell_library, parse_netlist, sar_grouping
from acimflow.profile import default_profile

from oracles import bfs_cost, ref_dominates, ref_frontier, ref_hpwl

PROFILE = default_profile()
LIBRARY = load_cell_library()
SMALL_POINTS = [p for size in (16, 64, 256, 1024) for p in enumerate_feasible(SearchBounds(size))]
ALL_16K = enumerate_feasible(SearchBounds(16384))
ENTRIES_16K = evaluate_space(SearchBounds(16384), PROFILE)
FRONT_16K = brute_force_pareto(SearchBounds(16384), PROFILE)

vec4 = st.lists(st.integers(0, 3), min_size=4, max_size=4)
fast = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])


# --------------------------------------------------------------------------- #
# dominance and frontiers

@fast
@given(vec4, vec4, vec4)
def test_dominance_order(u, v, w):
    assert not dominates(u, u)
    assert not (dominates(u, v) and dominates(v, u))
    if dominates(u, v) and dominates(v, w):
        assert dominates(u, w)
    assert dominates(u, v) == ref_dominates(u, v)


@fast
@given(st.lists(vec4, min_size=1, max_size=30))
def test_pareto_mask_is_reference_frontier(rows):
    mask = pareto_mask(np.array(rows, dtype=float))
    assert set(np.flatnonzero(mask).tolist()) == ref_frontier(rows)


@fast
@given(st.integers(0, 3), st.floats(1e-6, 1e6))
def test_frontier_scale_invariance(k, factor):
    scaled = []
    for e in ENTRIES_16K:
        values = list(e.performance.as_tuple())
        values[k] *= factor
        scaled.append(ParetoEntry(e.point, PerformanceVector(*values)))
    assert frontier_of(scaled).points() == FRONT_16K.points()


# --------------------------------------------------------------------------- #
# model

points_16k = st.sampled_from(ALL_16K)


@fast
@given(points_16k)
def test_harmonic_bound(p):
    pre_db = 10.0 * math.log10(snr_pre(PROFILE, p.N))
    assert snr_total_db(p, PROFILE) <= min(pre_db, sqnr_output_db(PROFILE, p.B_adc, p.N)) + 1e-12


@fast
@given(points_16k)
def test_evaluate_is_pure(p):
    first = evaluate(p, PROFILE)
    evaluate(ALL_16K[0], PROFILE)
    assert evaluate(p, PROFILE) == first


@fast
@given(points_16k)
def test_halving_l_raises_throughput(p):
    q = DesignPoint(p.H, p.W, p.L * 2, p.B_adc)
    if q.L <= 32 and not q.violations():
        assert evaluate(q, PROFILE).throughput < evaluate(p, PROFILE).throughput
        assert evaluate(q, PROFILE).area_per_bit < evaluate(p, PROFILE).area_per_bit


# --------------------------------------------------------------------------- #
# netlist

small_points = st.sampled_from(SMALL_POINTS)


@fast
@given(small_points)
def test_grouping_pattern(p):
    g = sar_grouping(p)
    assert g.group_sizes == (1,) + tuple(2**k for k in range(p.B_adc))
    assert sum(g.group_sizes) + g.switch_isolated == p.N


@settings(max_examples=25, deadline=None)
@given(small_points)
def test_netlist_round_trip(p):
    n = generate_macro(p, LIBRARY)
    text = emit_netlist(n)
    assert parse_netlist(text) == n


# --------------------------------------------------------------------------- #
# distill

clauses = st.builds(
    Clause,
    st.sampled_from(METRICS),
    st.sampled_from(("<=", ">=", "=")),
    st.sampled_from([v for e in FRONT_16K.entries[:40] for v in (e.point.H, e.performance.snr_db)]),
)


@fast
@given(st.lists(clauses, max_size=3), st.lists(clauses, max_size=3))
def test_filter_compositional(a, b):
    fa, fb = FilterSpec(tuple(a)), FilterSpec(tuple(b))
    both = apply_filter(FRONT_16K, fa & fb)
    assert both.entries == apply_filter(apply_filter(FRONT_16K, fa), fb).entries
    assert apply_filter(both, fa & fb).entries == both.entries
    assert set(both.points()) <= set(FRONT_16K.points())


# --------------------------------------------------------------------------- #
# geometry and routing

coords = st.tuples(st.integers(-50, 50), st.integers(-50, 50))


@fast
@given(st.dictionaries(st.sampled_from("abcde"), st.lists(coords, min_size=1, max_size=6), min_size=1), coords)
def test_hpwl_translation(nets, shift):
    moved = {k: [(x + shift[0], y + shift[1]) for x, y in v] for k, v in nets.items()}
    assert hpwl(nets) == hpwl(moved) == ref_hpwl(nets)


@fast
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 6), st.integers(0, 4)), min_size=1, max_size=10),
       st.sampled_from(("R0", "MX", "MY", "R180")))
def test_orientation_is_an_involution(cells, orientation):
    arr = np.array(cells)
    twice = orient_cells(orient_cells(arr, 7, 5, orientation), 7, 5, orientation)
    assert twice.tolist() == arr.tolist()


@st.composite
def grid_instances(draw):
    W = draw(st.integers(4, 9))
    H = draw(st.integers(4, 9))
    cells = [(0, x, y) for x in range(W) for y in range(H)]
    picked = draw(st.permutations(cells))
    n_obst = draw(st.integers(0, W * H // 5))
    obstacles, rest = picked[:n_obst], picked[n_obst:]
    terms = {}
    k = 0
    for net in range(draw(st.integers(1, 4))):
        size = draw(st.integers(2, 3))
        if k + size > len(rest):
            break
        terms[f"n{net}"] = [np.array([rest[k + i]]) for i in range(size)]
        k += size
    return W, H, terms, obstacles


@settings(max_examples=100, deadline=None)
@given(grid_instances())
def test_route_connections_are_shortest(inst):
    W, H, terms, obstacles = inst
    params = LayoutParams(layer_count=2, via_cost=2)
    seen = []
    try:
        route_nets(W, H, terms, params, obstacles, seen.append)
    except RoutingError:
        pass
    for conn in seen:
        assert conn.cost == bfs_cost((2, H, W), conn.occupancy, conn.net_id, conn.sources, conn.targets, 2)
