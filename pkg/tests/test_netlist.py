from __future__ import annotations

import json
import random
import time

import pytest

from acimflow.errors import CheckFailedError, FeasibilityError, LibraryError, ParseError, ValidationError
from acimflow.explorer import SearchBounds, enumerate_feasible
from acimflow.model import DesignPoint
from acimflow.netlist import (
    Cell,
    Instance,
    Netlist,
    Port,
    emit_netlist,
    erc_check,
    generate_column,
    generate_macro,
    load_cell_library,
    parse_netlist,
    sar_grouping,
)

from oracles import column_leaf_count


def _all_small_points():
    out = []
    for size in (16, 64, 256, 1024):
        out += enumerate_feasible(SearchBounds(size, l_min=1))
    return out


# --------------------------------------------------------------------------- #
# SAR grouping

@pytest.mark.parametrize(
    "point,sizes,isolated",
    [
        (DesignPoint(16, 1, 2, 3), (1, 1, 2, 4), 0),
        (DesignPoint(128, 128, 2, 3), (1, 1, 2, 4), 56),
        (DesignPoint(4, 1, 2, 1), (1, 1), 0),
    ],
)
def test_grouping_examples(point, sizes, isolated):
    g = sar_grouping(point)
    assert g.group_sizes == sizes
    assert g.switch_isolated == isolated


def test_grouping_invariants():
    for p in _all_small_points():
        g = sar_grouping(p)
        assert g.group_sizes == (1,) + tuple(2**n for n in range(p.B_adc))
        assert sum(g.group_sizes) == 2**p.B_adc
        assert sum(g.group_sizes) + g.switch_isolated == p.N


def test_grouping_rejects_infeasible():
    with pytest.raises(FeasibilityError):
        sar_grouping(DesignPoint(32, 1, 8, 3))


# --------------------------------------------------------------------------- #
# generators

def test_column_counts_small(library):
    n = generate_column(DesignPoint(8, 1, 2, 2), library)
    assert n.leaf_counts() == {"sram8t": 8, "compute_cap": 4, "local_ctrl": 4, "comparator": 1, "sar_dff": 2}


def test_column_fig5a(library):
    n = generate_column(DesignPoint(128, 128, 2, 3), library)
    counts = n.leaf_counts()
    assert counts["sram8t"] == 128
    assert counts["compute_cap"] == 64
    assert counts["cmos_switch"] == 1


def test_column_count_formula(library):
    for p in _all_small_points():
        n = generate_column(p, library)
        assert sum(n.leaf_counts().values()) == column_leaf_count(p.H, p.L, p.B_adc)


def test_column_rbl_split(library):
    p = DesignPoint(128, 1, 2, 3)
    n = generate_column(p, library)
    col = n.instances[n.top]
    las = [i for i in col if i.name.startswith("la")]
    near = [i for i in las if i.connections["RBL"] == "rbl_cdac"]
    far = [i for i in las if i.connections["RBL"] == "rbl_far"]
    assert (len(near), len(far)) == (8, 56)
    sw = next(i for i in col if i.cell == "cmos_switch")
    assert (sw.connections["A"], sw.connections["B"]) == ("rbl_cdac", "rbl_far")
    # the CDAC groups are driven by P/N pairs in a 1:2:4 ratio after the dummy LSB
    drive = [i.connections["P"] for i in near]
    assert drive.count("VCM") == 1
    assert [drive.count(f"P[{k}]") for k in range(3)] == [1, 2, 4]


def test_local_array_read_ports(library):
    n = generate_column(DesignPoint(16, 1, 4, 2), library)
    la = n.instances["local_array_L4"]
    cap = next(i for i in la if i.cell == "compute_cap")
    srams = [i for i in la if i.cell == "sram8t"]
    assert len(srams) == 4
    assert all(s.connections["RBL"] == cap.connections["TOP"] for s in srams)


def test_missing_leaf_cell(library):
    partial = {k: v for k, v in library.items() if k != "comparator"}
    with pytest.raises(LibraryError, match="comparator"):
        generate_column(DesignPoint(16, 1, 2, 3), partial)


def test_macro_structure(library):
    n = generate_macro(DesignPoint(32, 2, 2, 3), library)
    top = n.instances[n.top]
    assert sum(1 for i in top if i.cell.startswith("column_")) == 2
    assert sum(1 for i in top if i.cell.startswith("control_")) == 1
    # row control nets are shared by every column
    for inst in top:
        if inst.cell.startswith("column_"):
            assert inst.connections["RWL[5]"] == "RWL[5]"
            assert inst.connections["RST[3]"] == "RST[3]"


def test_macro_fig5a_columns(library):
    n = generate_macro(DesignPoint(128, 128, 2, 3), library)
    assert sum(1 for i in n.instances[n.top] if i.cell.startswith("column_")) == 128


def test_macro_leaf_total(library):
    for p in random.Random(4).sample(_all_small_points(), 25):
        n = generate_macro(p, library)
        counts = n.leaf_counts()
        control = sum(n.leaf_counts(next(c for c in n.cells if c.startswith("control_"))).values())
        assert sum(counts.values()) == p.W * column_leaf_count(p.H, p.L, p.B_adc) + control
        assert counts["sram8t"] == p.H * p.W
        assert counts["sar_dff"] == p.B_adc * p.W


def test_generated_macros_are_erc_clean(library):
    for p in _all_small_points():
        assert erc_check(generate_macro(p, library)) == []


def test_hierarchy_is_children_first(library):
    n = generate_macro(DesignPoint(64, 4, 4, 2), library)
    order = n.topological_order()
    assert order[-1] == n.top
    pos = {c: k for k, c in enumerate(order)}
    for parent in n.composites():
        for child in n.children(parent):
            assert pos[child] < pos[parent]


# --------------------------------------------------------------------------- #
# ERC on hand-built netlists

def _cells():
    return {
        "buf": Cell("buf", (Port("A", "in"), Port("Y", "out"))),
        "top": Cell("top", (Port("I", "in"), Port("O", "out")), "composite"),
    }


def test_erc_floating_input():
    n = Netlist(_cells(), "top", {"top": [
        Instance("b0", "buf", {"A": "I", "Y": "x"}),
        Instance("b1", "buf", {"Y": "O"}),
        Instance("b2", "buf", {"A": "x", "Y": "y"}),
        Instance("b3", "buf", {"A": "y", "Y": "z"}),
        Instance("b4", "buf", {"A": "z"}),
    ]}, {"top": ["x", "y", "z"]})
    kinds = [v.kind for v in erc_check(n)]
    assert kinds.count("floating_input") == 1
    assert "unconnected_port" in kinds


def test_erc_multiple_drivers():
    n = Netlist(_cells(), "top", {"top": [
        Instance("b0", "buf", {"A": "I", "Y": "O"}),
        Instance("b1", "buf", {"A": "I", "Y": "O"}),
    ]}, {"top": []})
    assert [v.kind for v in erc_check(n)] == ["multiple_drivers"]


def test_erc_dangling_and_undefined():
    n = Netlist(_cells(), "top", {"top": [
        Instance("b0", "buf", {"A": "I", "Y": "O"}),
        Instance("b1", "buf", {"A": "I", "Y": "lonely"}),
        Instance("g", "ghost", {}),
    ]}, {"top": ["lonely"]})
    kinds = sorted(v.kind for v in erc_check(n))
    assert kinds == ["dangling_net", "undefined_cell"]


# --------------------------------------------------------------------------- #
# text format

def test_emit_parse_round_trip(library):
    for p in random.Random(8).sample(_all_small_points(), 20):
        n = generate_macro(p, library)
        text = emit_netlist(n)
        back = parse_netlist(text)
        assert back == n
        assert emit_netlist(back) == text


def test_emit_1kb_is_fast(library):
    n = generate_macro(DesignPoint(32, 32, 2, 3), library)
    start = time.perf_counter()
    text = emit_netlist(n)
    back = parse_netlist(text)
    assert time.perf_counter() - start < 1.0
    assert back == n


def test_emit_empty_top():
    n = Netlist({"top": Cell("top", (), "composite")}, "top", {"top": []}, {"top": []})
    assert emit_netlist(n) == "NETLIST top\nCELL top composite\nEND\n"


def test_emit_refuses_dirty():
    n = Netlist(_cells(), "top", {"top": [Instance("b0", "buf", {"Y": "O"})]}, {"top": []})
    with pytest.raises(CheckFailedError) as info:
        emit_netlist(n)
    assert info.value.report


@pytest.mark.parametrize(
    "text",
    [
        "CELL top composite\nEND\n",
        "NETLIST top\nCELL top composite\nINST a b (X)\nEND\n",
        "NETLIST top\nCELL top composite\n",
        "NETLIST top\nCELL top odd\nEND\n",
        "NETLIST top\nPORT A in\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_netlist(text)


def test_library_file(tmp_path, library):
    path = tmp_path / "lib.json"
    path.write_text(json.dumps({"cells": {"inv": {"ports": [["A", "in"], ["Y", "out"]]}}}))
    lib = load_cell_library(path)
    assert lib["inv"].port_names == ["A", "Y"]
    with pytest.raises(LibraryError):
        load_cell_library(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    with pytest.raises(LibraryError):
        load_cell_library(bad)
    with pytest.raises(ValidationError):
        Cell("x", (Port("A", "in"), Port("A", "out")))
