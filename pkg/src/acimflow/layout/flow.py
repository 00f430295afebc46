"""Bottom-up hierarchical layout: place, route, freeze, repeat."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import CheckFailedError, LibraryError
from ..netlist import Netlist
from .params import LayoutParams
from .place import Placed, Placement, group_hpwl, place_cell
from .route import Connection, GridRouter, RoutedNet
from .templates import CellTemplate, place_cells

FORMAT = "acimflow.layout/1"


@dataclass
class Layout:
    """One hierarchy level: placed child blocks plus the nets routed between them."""

    cell: str
    width: int
    height: int
    layer_count: int
    placement: list[Placed] = field(default_factory=list)
    routes: list[RoutedNet] = field(default_factory=list)
    templates: dict[str, CellTemplate] = field(default_factory=dict)
    connections: dict[str, dict[str, str]] = field(default_factory=dict)
    ports: tuple[str, ...] = ()

    def pin_groups(self) -> dict[str, list[tuple[str, str, np.ndarray]]]:
        """net -> [(instance, port, (k, 3) absolute cells)]"""
        out: dict[str, list] = {}
        for p in self.placement:
            t = self.templates[p.template]
            for port, net in self.connections.get(p.name, {}).items():
                if port not in t.pins:
                    continue
                cells = place_cells(t.pins[port], t.width, t.height, p.orientation, p.x, p.y)
                out.setdefault(net, []).append((p.name, port, cells[cells[:, 0] < self.layer_count]))
        return out

    def obstacle_cells(self) -> np.ndarray:
        parts = [np.empty((0, 3), dtype=np.int64)]
        for p in self.placement:
            t = self.templates[p.template]
            parts.append(place_cells(t.obstacles, t.width, t.height, p.orientation, p.x, p.y))
        cells = np.concatenate(parts)
        return cells[cells[:, 0] < self.layer_count]

    def hpwl(self) -> int:
        return sum(group_hpwl([g[:, 1:] for _, _, g in groups]) for groups in self.pin_groups().values())

    @property
    def wirelength(self) -> int:
        return sum(r.wirelength for r in self.routes)

    def to_json(self) -> dict:
        return {
            "name": self.cell,
            "region": [self.width, self.height],
            "placement": [p.to_json() for p in self.placement],
            "routes": [r.to_json() for r in self.routes],
        }


@dataclass
class LayoutDesign:
    """Layouts of every composite cell, children first, plus the leaf templates used."""

    top: str
    layer_count: int
    leaf_templates: dict[str, CellTemplate]
    levels: dict[str, Layout]
    derived: dict[str, CellTemplate] = field(default_factory=dict)

    @property
    def layout(self) -> Layout:
        return self.levels[self.top]

    def flatten_leaves(self):
        """Yield (path, leaf template, orientation chain, absolute origin) for every leaf instance."""
        def walk(cell: str, prefix: str, transform):
            lay = self.levels[cell]
            for p in lay.placement:
                t = lay.templates[p.template]
                sub = _compose(transform, p, t)
                if p.template in self.levels:
                    yield from walk(p.template, f"{prefix}{p.name}/", sub)
                else:
                    yield f"{prefix}{p.name}", self.leaf_templates[p.template], sub

        yield from walk(self.top, "", (0, 0, False, False, None))


def _compose(parent, placed: Placed, template: CellTemplate):
    """Absolute transform of a child block: origin shift plus accumulated flips.

    Parent transforms are (ox, oy, flip_x, flip_y, parent_box) where flips act
    inside parent_box = (width, height) of the parent cell.
    """
    ox, oy, fx, fy, box = parent
    flip_x = placed.orientation in ("MY", "R180")
    flip_y = placed.orientation in ("MX", "R180")
    x, y = placed.x, placed.y
    if box is not None:
        w, h = box
        if fx:
            x = w - placed.x - template.width
        if fy:
            y = h - placed.y - template.height
    return (ox + x, oy + y, fx ^ flip_x, fy ^ flip_y, (template.width, template.height))


def transformed_leaf_cells(cells: np.ndarray, template: CellTemplate, transform) -> np.ndarray:
    ox, oy, fx, fy, _ = transform
    out = np.array(cells, dtype=np.int64).reshape(-1, 3)
    if fx:
        out[:, 1] = template.width - 1 - out[:, 1]
    if fy:
        out[:, 2] = template.height - 1 - out[:, 2]
    out[:, 1] += ox
    out[:, 2] += oy
    return out


# ---------------------------------------------------------------------------
# building

def layout_level(
    cell: str,
    netlist: Netlist,
    templates: Mapping[str, CellTemplate],
    params: LayoutParams,
    on_connection: Callable[[Connection], None] | None = None,
    escape: Sequence[str] = (),
) -> Layout:
    """Place and route one composite cell.

    Port nets listed in ``escape`` are also joined to the bottom row (unless they already reach the boundary) so the
    level above can reach them.
    """
    instances = netlist.instances.get(cell, [])
    placement = place_cell(cell, instances, templates, params)
    used = {p.template: templates[p.template] for p in placement.placed}
    layout = Layout(
        cell, placement.width, placement.height, params.layer_count, placement.placed, [], used,
        {i.name: dict(i.connections) for i in instances}, tuple(netlist.cells[cell].port_names),
    )
    groups = layout.pin_groups()
    terminals = {net: [g for _, _, g in groups[net]] for net in sorted(groups)}
    if placement.width and placement.height:
        router = GridRouter(placement.width, placement.height, params, layout.obstacle_cells(),
                            terminals, on_connection, escape)
        layout.routes = router.route_all()
    return layout


def derive_template(layout: Layout) -> CellTemplate:
    """Freeze a routed level into a block for the level above.

    Cells on the cell's port nets become pins; every other occupied cell
    becomes an obstacle, so the contents cannot be disturbed later.
    """
    owner: dict[tuple[int, int, int], str] = {}
    for net, groups in layout.pin_groups().items():
        for _, _, cells in groups:
            for c in map(tuple, cells.tolist()):
                owner[c] = net
    for r in layout.routes:
        for c in r.cells():
            owner[c] = r.net
    ports = set(layout.ports)
    pins: dict[str, list] = {p: [] for p in layout.ports}
    obstacles = [tuple(c) for c in layout.obstacle_cells().tolist()]
    for c in sorted(owner):
        if owner[c] in ports:
            pins[owner[c]].append(c)
        else:
            obstacles.append(c)
    return CellTemplate(layout.cell, layout.width, layout.height,
                        {p: np.array(v, dtype=np.int64).reshape(-1, 3) for p, v in pins.items()},
                        np.array(sorted(set(obstacles)), dtype=np.int64).reshape(-1, 3))


def _shared_ports(netlist: Netlist, cell: str) -> list[str]:
    """Ports of ``cell`` that some parent wires to another child."""
    out = set()
    for parent, insts in netlist.instances.items():
        users: dict[str, int] = {}
        for inst in insts:
            for net in inst.connections.values():
                users[net] = users.get(net, 0) + 1
        for inst in insts:
            if inst.cell == cell:
                out.update(p for p, net in inst.connections.items() if users[net] > 1)
    return sorted(out)


def build_layout(
    netlist: Netlist,
    templates: Mapping[str, CellTemplate],
    params: LayoutParams,
    on_connection: Callable[[Connection], None] | None = None,
) -> LayoutDesign:
    table: dict[str, CellTemplate] = {}
    leaves: dict[str, CellTemplate] = {}
    levels: dict[str, Layout] = {}
    derived: dict[str, CellTemplate] = {}
    for cell in netlist.topological_order():
        if netlist.cells[cell].kind == "leaf":
            if cell not in templates:
                raise LibraryError(f"no layout template for cell '{cell}'", cell)
            missing = set(netlist.cells[cell].port_names) - set(templates[cell].pins)
            if missing:
                raise LibraryError(f"template '{cell}' lacks pins {sorted(missing)}", cell)
            leaves[cell] = table[cell] = templates[cell]
            continue
        lay = layout_level(cell, netlist, table, params, on_connection, _shared_ports(netlist, cell))
        levels[cell] = lay
        if cell != netlist.top:
            derived[cell] = table[cell] = derive_template(lay)
    return LayoutDesign(netlist.top, params.layer_count, leaves, levels, derived)


def place_hierarchy(
    netlist: Netlist, templates: Mapping[str, CellTemplate], params: LayoutParams
) -> dict[str, Placement]:
    """Placement of every composite cell, children first.

    Strip ordering looks at the children's pins, which only exist once the
    children are routed, so this runs the whole bottom-up flow.
    """
    design = build_layout(netlist, templates, params)
    return {
        cell: Placement(list(lay.placement), lay.width, lay.height)
        for cell, lay in design.levels.items()
    }


# ---------------------------------------------------------------------------
# checks

@dataclass(frozen=True)
class Violation:
    kind: str
    cell: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.cell}: {self.detail}"


def drc_lite(layout: Layout, min_spacing: int | LayoutParams = 0) -> list[Violation]:
    """Overlaps, shorts between routes, routes over obstacles, spacing."""
    if isinstance(min_spacing, LayoutParams):
        min_spacing = min_spacing.min_spacing
    report: list[Violation] = []
    cell = layout.cell

    # placement: every block inside the region, no two blocks sharing a grid cell
    owner = np.full((max(layout.height, 1), max(layout.width, 1)), -1, dtype=np.int64)
    reported: set[tuple[int, int]] = set()
    for k, p in enumerate(layout.placement):
        t = layout.templates[p.template]
        x0, y0, x1, y1 = p.x, p.y, p.x + t.width, p.y + t.height
        if x0 < 0 or y0 < 0 or x1 > layout.width or y1 > layout.height:
            report.append(Violation("out_of_region", cell, f"{p.name} at ({x0}, {y0})-({x1}, {y1})"))
            x0, y0 = max(x0, 0), max(y0, 0)
            x1, y1 = min(x1, layout.width), min(y1, layout.height)
        window = owner[y0:y1, x0:x1]
        for other in np.unique(window[window >= 0]).tolist():
            if (other, k) not in reported:
                reported.add((other, k))
                report.append(Violation("overlap", cell, f"{layout.placement[other].name} and {p.name}"))
        window[...] = k

    # route cells against other routes and against obstacles
    used: dict[tuple[int, int, int], str] = {}
    shorts: set[tuple[str, str, tuple]] = set()
    for r in layout.routes:
        for c in sorted(r.cells()):
            if not (0 <= c[0] < layout.layer_count and 0 <= c[1] < layout.width and 0 <= c[2] < layout.height):
                report.append(Violation("out_of_region", cell, f"net {r.net} at {c}"))
            other = used.get(c)
            if other is not None and other != r.net:
                key = tuple(sorted((other, r.net)))
                if key not in {s[:2] for s in shorts}:
                    shorts.add((*key, c))
            used[c] = r.net
    for a, b, c in sorted(shorts):
        report.append(Violation("short", cell, f"nets {a} and {b} share cell {c}"))
    obstacles = set(map(tuple, layout.obstacle_cells().tolist()))
    for r in layout.routes:
        hits = sorted(c for c in r.cells() if c in obstacles)
        if hits:
            report.append(Violation("obstacle", cell, f"net {r.net} crosses {len(hits)} obstacle cell(s), first {hits[0]}"))

    if min_spacing > 0:
        foreign: dict[tuple[int, int, int], str] = dict(used)
        for net, groups in layout.pin_groups().items():
            for _, _, g in groups:
                for c in map(tuple, g.tolist()):
                    foreign.setdefault(c, net)
        pairs: set[tuple[str, str]] = set()
        for (l, x, y), net in used.items():
            for dx in range(-min_spacing, min_spacing + 1):
                for dy in range(-min_spacing, min_spacing + 1):
                    if (dx or dy) and abs(dx) + abs(dy) <= min_spacing:
                        other = foreign.get((l, x + dx, y + dy))
                        if other is not None and other != net:
                            pairs.add(tuple(sorted((net, other))))
        for a, b in sorted(pairs):
            report.append(Violation("spacing", cell, f"nets {a} and {b} closer than {min_spacing}"))
    return report


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


_STEPS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def connectivity_check(layout: Layout, connections: Mapping[str, Mapping[str, str]] | None = None) -> list[Violation]:
    """Every multi-terminal net joined into one tree; no route on a foreign pin."""
    if connections is not None:
        layout = Layout(layout.cell, layout.width, layout.height, layout.layer_count, layout.placement,
                        layout.routes, layout.templates, {k: dict(v) for k, v in connections.items()},
                        layout.ports)
    report: list[Violation] = []
    groups = layout.pin_groups()
    # adjacent cells of one net (same layer, or stacked as a via) are joined
    pin_owner: dict[tuple[int, int, int], str] = {}
    for net, gs in groups.items():
        for _, _, g in gs:
            for c in map(tuple, g.tolist()):
                pin_owner[c] = net
    routes: dict[str, set] = {}
    for r in layout.routes:
        routes.setdefault(r.net, set()).update(r.cells())

    for net in sorted(set(groups) | set(routes)):
        cells = routes.get(net, set())
        foreign = sorted({pin_owner[c] for c in cells if c in pin_owner and pin_owner[c] != net})
        for other in foreign:
            report.append(Violation("short_to_pin", layout.cell, f"net {net} touches a pin of {other}"))
        terms = groups.get(net, [])
        if len(terms) < 2:
            continue
        uf = _UnionFind()
        for c in cells:
            uf.find(c)
            for dl, dx, dy in _STEPS:
                n = (c[0] + dl, c[1] + dx, c[2] + dy)
                if n in cells:
                    uf.union(c, n)
        # terminal k is the virtual node (-1, k, 0)
        for k, (_, _, g) in enumerate(terms):
            uf.find((-1, k, 0))
            for c in map(tuple, g.tolist()):
                uf.union((-1, k, 0), c)
        roots = {uf.find((-1, k, 0)) for k in range(len(terms))}
        if len(roots) > 1:
            report.append(Violation("open", layout.cell, f"net {net} split into {len(roots)} parts"))
    return report


def check_design(design: LayoutDesign, params: LayoutParams) -> dict[str, list[Violation]]:
    out = {"drc": [], "connectivity": []}
    for lay in design.levels.values():
        out["drc"] += drc_lite(lay, params)
        out["connectivity"] += connectivity_check(lay)
    return out


# ---------------------------------------------------------------------------
# output

def _dump(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def emit_layout(design: LayoutDesign | Layout, params: LayoutParams | None = None, *, check: bool = True) -> str:
    """Deterministic JSON document of every level, leaf templates included verbatim."""
    if isinstance(design, Layout):
        design = LayoutDesign(design.cell, design.layer_count,
                              {k: v for k, v in design.templates.items()}, {design.cell: design})
    if check:
        report = check_design(design, params or LayoutParams(layer_count=design.layer_count))
        bad = report["drc"] + report["connectivity"]
        if bad:
            raise CheckFailedError("refusing to emit a layout that fails checks", bad)
    lines = ["{", f' "format": {_dump(FORMAT)},', f' "top": {_dump(design.top)},',
             f' "layer_count": {design.layer_count},', ' "templates": [']
    tpls = [design.leaf_templates[k].to_json() for k in sorted(design.leaf_templates)]
    lines += [f"  {_dump(t)}" + ("," if i + 1 < len(tpls) else "") for i, t in enumerate(tpls)]
    lines.append(" ],")
    lines.append(' "cells": [')
    names = list(design.levels)
    for n, name in enumerate(names):
        lay = design.levels[name]
        lines.append("  {")
        lines.append(f'   "name": {_dump(lay.cell)},')
        lines.append(f'   "region": [{lay.width}, {lay.height}],')
        lines.append('   "placement": [')
        pl = [p.to_json() for p in lay.placement]
        lines += [f"    {_dump(p)}" + ("," if i + 1 < len(pl) else "") for i, p in enumerate(pl)]
        lines.append("   ],")
        lines.append('   "routes": [')
        rs = [r.to_json() for r in lay.routes]
        lines += [f"    {_dump(r)}" + ("," if i + 1 < len(rs) else "") for i, r in enumerate(rs)]
        lines.append("   ]")
        lines.append("  }" + ("," if n + 1 < len(names) else ""))
    lines.append(" ]")
    lines.append("}")
    return "\n".join(lines) + "\n"
