"""Rule-based placement of one composite cell's children as rigid blocks."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import LibraryError
from ..netlist import Instance
from .params import LayoutParams, PlacementRule
from .templates import CellTemplate, place_cells


@dataclass(frozen=True)
class Placed:
    name: str
    template: str
    x: int
    y: int
    orientation: str = "R0"

    def to_json(self) -> list:
        return [self.name, self.template, self.x, self.y, self.orientation]


@dataclass
class Placement:
    placed: list[Placed]
    width: int
    height: int

    def bbox(self, p: Placed, templates: Mapping[str, CellTemplate]) -> tuple[int, int, int, int]:
        t = templates[p.template]
        return (p.x, p.y, p.x + t.width, p.y + t.height)


def _xy(cells: np.ndarray) -> np.ndarray:
    return np.asarray(cells).reshape(-1, 3)[:, 1:]


def group_hpwl(groups: Sequence[np.ndarray]) -> int:
    """Smallest bounding-box half perimeter that touches every pin group.

    Each group is a set of (x, y) cells that are already connected to each
    other; for single-cell groups this is the ordinary HPWL.
    """
    if len(groups) < 2:
        return 0
    mins = np.array([g.min(axis=0) for g in groups])
    maxs = np.array([g.max(axis=0) for g in groups])
    span = mins.max(axis=0) - maxs.min(axis=0)
    return int(np.maximum(span, 0).sum())


def hpwl(nets: Mapping[str, Sequence]) -> int:
    """Total half-perimeter wirelength.

    ``nets`` maps a net name to its pins; a pin is an ``(x, y)`` point or an
    array of ``(x, y)`` cells forming one connected pin group.
    """
    total = 0
    for pins in nets.values():
        groups = [np.asarray(p, dtype=np.int64).reshape(-1, 2) for p in pins]
        total += group_hpwl(groups)
    return total


def _require(templates: Mapping[str, CellTemplate], cell: str) -> CellTemplate:
    try:
        return templates[cell]
    except KeyError:
        raise LibraryError(f"no layout template for cell '{cell}'", cell) from None


def _pack_strip(sizes: list[tuple[int, int]], limit: int) -> list[tuple[int, int]]:
    """Left-to-right rows of at most ``limit`` width, growing downward from y=0."""
    pos = []
    x = 0
    top = 0
    row_h = 0
    for w, h in sizes:
        if x > 0 and x + w > limit:
            top -= row_h
            x = 0
            row_h = 0
        pos.append((x, top, h))
        x += w
        row_h = max(row_h, h)
    # rows hang below y=0: a block's origin is its row top minus its height
    return [(px, ptop - h) for px, ptop, h in pos]


def _strip_order(
    strip: list[Instance],
    fixed: list[Placed],
    connections: Mapping[str, Mapping[str, str]],
    templates: Mapping[str, CellTemplate],
    limit: int,
    exhaustive_limit: int,
) -> list[int]:
    n = len(strip)
    if n <= 1 or n > exhaustive_limit:
        return list(range(n))
    strip_nets = {net for inst in strip for net in inst.connections.values()}
    nets = sorted(strip_nets)
    k_of = {net: k for k, net in enumerate(nets)}
    big = np.iinfo(np.int64).max // 4

    # fixed contribution per net: max of group minima and min of group maxima
    fix_maxmin = np.full((len(nets), 2), -big, dtype=np.int64)
    fix_minmax = np.full((len(nets), 2), big, dtype=np.int64)
    for p in fixed:
        t = templates[p.template]
        for port, net in connections[p.name].items():
            k = k_of.get(net)
            if k is None or port not in t.pins:
                continue
            xy = _xy(place_cells(t.pins[port], t.width, t.height, p.orientation, p.x, p.y))
            fix_maxmin[k] = np.maximum(fix_maxmin[k], xy.min(axis=0))
            fix_minmax[k] = np.minimum(fix_minmax[k], xy.max(axis=0))

    # moving groups: (net index, block, local min, local max)
    moving = []
    for b, inst in enumerate(strip):
        t = templates[inst.cell]
        for port, net in inst.connections.items():
            if port in t.pins:
                xy = _xy(t.pins[port])
                moving.append((k_of[net], b, xy.min(axis=0), xy.max(axis=0)))
    counts = np.zeros(len(nets), dtype=int)
    for k, *_ in moving:
        counts[k] += 1
    for p in fixed:
        for net in connections[p.name].values():
            if net in k_of:
                counts[k_of[net]] += 1

    sizes = [(templates[i.cell].width, templates[i.cell].height) for i in strip]
    perms = list(itertools.permutations(range(n)))
    origin = np.empty((len(perms), n, 2), dtype=np.int64)
    for r, perm in enumerate(perms):
        for (x, y), b in zip(_pack_strip([sizes[b] for b in perm], limit), perm):
            origin[r, b] = (x, y)

    total = np.zeros(len(perms), dtype=np.int64)
    for k in range(len(nets)):
        if counts[k] < 2:
            continue
        hi = np.broadcast_to(fix_maxmin[k], (len(perms), 2)).copy()
        lo = np.broadcast_to(fix_minmax[k], (len(perms), 2)).copy()
        for kk, b, mn, mx in moving:
            if kk != k:
                continue
            np.maximum(hi, origin[:, b] + mn, out=hi)
            np.minimum(lo, origin[:, b] + mx, out=lo)
        total += np.maximum(hi - lo, 0).sum(axis=1)
    return list(perms[int(np.argmin(total))])


def place_cell(
    cell: str,
    instances: list[Instance],
    templates: Mapping[str, CellTemplate],
    params: LayoutParams,
) -> Placement:
    """Place the children of one composite cell according to its rule."""
    for inst in instances:
        _require(templates, inst.cell)
    rule: PlacementRule = params.rule_for(cell)
    if rule.kind == "row":
        channel = rule.channel
        if channel == "auto":
            channel = _row_channel(instances, params)
        return _place_row(instances, templates, channel)
    return _place_stack(rule, instances, templates, params)


def _users(instances: list[Instance]) -> dict[str, set[str]]:
    users: dict[str, set[str]] = {}
    for inst in instances:
        for net in inst.connections.values():
            users.setdefault(net, set()).add(inst.name)
    return users


def _needs_channel(net: str, params: LayoutParams) -> bool:
    # nets on straight tracks cross the blocks; maze nets and comb trunks run below them
    return not params.is_critical(net) or any(t.stub_layer is not None for t in params.tracks_for(net))


def _row_channel(instances: list[Instance], params: LayoutParams) -> int:
    """One free row per shared net that runs under the blocks, plus one."""
    n = sum(1 for net, u in _users(instances).items() if len(u) > 1 and _needs_channel(net, params))
    return n + 1 if n else 0


def _stack_channel(instances: list[Instance], strip: list[Instance]) -> int:
    """One free row per net joining the strip to the array, plus one."""
    side = {i.name for i in strip}
    n = sum(1 for u in _users(instances).values() if u & side and u - side)
    return n + 1 if n else 0


def _place_row(instances: list[Instance], templates: Mapping[str, CellTemplate], channel: int = 0) -> Placement:
    top = max((templates[i.cell].height for i in instances), default=0) + channel
    placed = []
    x = 0
    for inst in instances:
        t = templates[inst.cell]
        placed.append(Placed(inst.name, inst.cell, x, top - t.height, "R0"))
        x += t.width
    return Placement(placed, x, top)


def _place_stack(
    rule: PlacementRule,
    instances: list[Instance],
    templates: Mapping[str, CellTemplate],
    params: LayoutParams,
) -> Placement:
    array = [i for i in instances if re.search(rule.array, i.cell)]
    strip = [i for i in instances if not re.search(rule.array, i.cell)]
    placed: list[Placed] = []
    y = 0
    run = 0
    prev = None
    for inst in array:
        t = templates[inst.cell]
        run = run + 1 if inst.cell == prev else 0
        prev = inst.cell
        orient = "MX" if inst.cell in params.alternate_mx and run % 2 == 0 else "R0"
        placed.append(Placed(inst.name, inst.cell, 0, y, orient))
        y += t.height
    array_w = max((templates[i.cell].width for i in array), default=0)
    total = sum(templates[i.cell].width for i in strip)
    limit = total if rule.strip_width == "single" else rule.strip_width or array_w or total

    if strip:
        channel = rule.channel
        if channel == "auto":
            channel = _stack_channel(instances, strip)
        connections = {i.name: i.connections for i in instances}
        if rule.strip_order == "hpwl":
            order = _strip_order(strip, placed, connections, templates, limit, params.exhaustive_strip_limit)
        else:
            order = list(range(len(strip)))
        ordered = [strip[b] for b in order]
        spots = _pack_strip([(templates[i.cell].width, templates[i.cell].height) for i in ordered], limit)
        for inst, (x, sy) in zip(ordered, spots):
            placed.append(Placed(inst.name, inst.cell, x, sy - channel, "R0"))

    low = min((p.y for p in placed), default=0)
    placed = [Placed(p.name, p.template, p.x, p.y - low, p.orientation) for p in placed]
    width = max((p.x + templates[p.template].width for p in placed), default=0)
    height = max((p.y + templates[p.template].height for p in placed), default=0)
    return Placement(placed, width, height)
