"""Sequential grid router.

Each layer is a width x height grid of unit cells.  A step within a layer
costs 1 and a layer change costs ``via_cost``.  Nets are routed one at a time
over cells that are free or already belong to the same net; nothing is ever
ripped up, so a net that cannot be completed raises :class:`RoutingError`.

Multi-terminal nets grow a tree: the next terminal (nearest by bounding box)
is joined to the closest cell of the tree with an A* search whose heuristic is
the in-plane distance to the tree's bounding box.
"""

from __future__ import annotations

import heapq
from array import array
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import RoutingError, ValidationError
from .params import LayoutParams, TrackRule

FREE = 0
BLOCKED = -1


@dataclass
class RoutedNet:
    net: str
    segments: list[tuple[int, int, int, int, int]] = field(default_factory=list)  # layer, x0, y0, x1, y1
    vias: list[tuple[int, int, int]] = field(default_factory=list)  # x, y, lower layer

    def cells(self) -> set[tuple[int, int, int]]:
        out = set()
        for l, x0, y0, x1, y1 in self.segments:
            if x0 == x1:
                out.update((l, x0, y) for y in range(min(y0, y1), max(y0, y1) + 1))
            else:
                out.update((l, x, y0) for x in range(min(x0, x1), max(x0, x1) + 1))
        for x, y, l in self.vias:
            out.add((l, x, y))
            out.add((l + 1, x, y))
        return out

    @property
    def wirelength(self) -> int:
        return sum(abs(x1 - x0) + abs(y1 - y0) for _, x0, y0, x1, y1 in self.segments)

    def to_json(self) -> dict:
        return {"net": self.net, "segments": [list(s) for s in self.segments],
                "vias": [list(v) for v in self.vias]}


@dataclass
class Connection:
    """One maze-routed terminal-to-tree connection, as seen by a callback.

    ``occupancy`` and ``targets`` are snapshots taken before the path is
    committed: occupancy is a compact int array holding 0 (free), -1
    (blocked) or a net id per flat cell index; targets are the flat indices
    of the tree at that moment.
    ``shape`` is (layers, height, width) and flat index ``i`` is
    ``(layer * height + y) * width + x``.
    """

    net: str
    net_id: int
    sources: list[int]
    targets: list[int]
    occupancy: array
    cost: int
    path: list[int]
    shape: tuple[int, int, int] = (1, 1, 1)


def _segments_from_path(path: list[tuple[int, int, int]]):
    segs: list[list[int]] = []
    vias: list[tuple[int, int, int]] = []
    cur = None  # [layer, x0, y0, x1, y1, dx, dy]
    for (l0, x0, y0), (l1, x1, y1) in zip(path, path[1:]):
        if l0 != l1:
            vias.append((x0, y0, min(l0, l1)))
            cur = None
            continue
        d = (x1 - x0, y1 - y0)
        if cur is not None and cur[0] == l0 and (cur[5], cur[6]) == d and (cur[3], cur[4]) == (x0, y0):
            cur[3], cur[4] = x1, y1
        else:
            cur = [l0, x0, y0, x1, y1, d[0], d[1]]
            segs.append(cur)
    return [tuple(s[:5]) for s in segs], vias


def _canonical(seg: tuple[int, int, int, int, int]) -> tuple[int, int, int, int, int]:
    l, x0, y0, x1, y1 = seg
    if (x1, y1) < (x0, y0):
        x0, y0, x1, y1 = x1, y1, x0, y0
    return (l, x0, y0, x1, y1)


class GridRouter:
    def __init__(
        self,
        width: int,
        height: int,
        params: LayoutParams,
        obstacles: np.ndarray | Sequence = (),
        terminals: Mapping[str, Sequence[np.ndarray]] | None = None,
        on_connection: Callable[[Connection], None] | None = None,
        escape: Sequence[str] = (),
    ):
        self.W, self.H, self.L = int(width), int(height), params.layer_count
        self.escape = set(escape)
        self.plane = self.W * self.H
        self.params = params
        self.via = int(params.via_cost)
        self.on_connection = on_connection
        self.occ: list[int] = [FREE] * (self.plane * self.L)
        self.net_ids: dict[str, int] = {}
        self.terminals: dict[str, list[list[int]]] = {}
        for l, x, y in np.asarray(obstacles, dtype=np.int64).reshape(-1, 3).tolist():
            if l < self.L:
                self.occ[self._index(l, x, y)] = BLOCKED
        for net, groups in (terminals or {}).items():
            self.add_net(net, groups)

    # ------------------------------------------------------------ helpers
    def _index(self, l: int, x: int, y: int) -> int:
        if not (0 <= l < self.L and 0 <= x < self.W and 0 <= y < self.H):
            raise ValidationError(f"cell {(l, x, y)} outside the {self.W}x{self.H}x{self.L} grid")
        return (l * self.H + y) * self.W + x

    def _coords(self, i: int) -> tuple[int, int, int]:
        l, rem = divmod(i, self.plane)
        y, x = divmod(rem, self.W)
        return l, x, y

    def add_net(self, net: str, groups: Sequence[np.ndarray]) -> None:
        nid = self.net_ids.setdefault(net, len(self.net_ids) + 1)
        flat_groups = []
        for g in groups:
            cells = np.asarray(g, dtype=np.int64).reshape(-1, 3)
            idx = []
            for l, x, y in cells.tolist():
                if l >= self.L:
                    continue
                i = self._index(l, x, y)
                o = self.occ[i]
                if o not in (FREE, nid):
                    other = "an obstacle" if o == BLOCKED else f"net {self._name(o)}"
                    raise ValidationError(f"pin of net {net} at {(l, x, y)} collides with {other}")
                self.occ[i] = nid
                idx.append(i)
            if not idx:
                raise RoutingError(f"net {net} has a terminal with no cell on the routing layers", net)
            flat_groups.append(idx)
        self.terminals.setdefault(net, []).extend(flat_groups)

    def _neighbors(self, i: int) -> list[tuple[int, int]]:
        W, plane = self.W, self.plane
        l, rem = divmod(i, plane)
        y, x = divmod(rem, W)
        steps = []
        if x > 0:
            steps.append((i - 1, 1))
        if x + 1 < W:
            steps.append((i + 1, 1))
        if y > 0:
            steps.append((i - W, 1))
        if y + 1 < self.H:
            steps.append((i + W, 1))
        if l > 0:
            steps.append((i - plane, self.via))
        if l + 1 < self.L:
            steps.append((i + plane, self.via))
        return steps

    def _name(self, nid: int) -> str:
        for k, v in self.net_ids.items():
            if v == nid:
                return k
        return str(nid)

    def occupancy(self) -> np.ndarray:
        return np.asarray(self.occ, dtype=np.int64).reshape(self.L, self.H, self.W)

    def net_order(self) -> list[str]:
        """Critical nets in pattern order, then the rest by decreasing terminal count.

        Within one critical pattern, nets with fewer terminals go first, so
        short SAR-control groups take the tracks nearest their pins.
        """
        nets = [n for n, g in self.terminals.items() if len(g) > 1 or n in self.escape]

        def key(n: str):
            rank = self.params.critical_rank(n)
            terms = len(self.terminals[n])
            return (0, rank, terms, n) if rank is not None else (1, 0, -terms, n)
        return sorted(nets, key=key)

    # ------------------------------------------------------------ routing
    def route_all(self) -> list[RoutedNet]:
        return [self.route_net(net) for net in self.net_order()]

    def route_net(self, net: str) -> RoutedNet:
        nid = self.net_ids[net]
        groups = self.terminals[net]
        n_cells = self.plane * self.L
        in_tree = bytearray(n_cells)
        bbox = [self.W, -1, self.H, -1]
        segments: list[tuple] = []
        vias: list[tuple] = []
        connected = [False] * len(groups)
        tree: list[int] = []

        def absorb(cells: Sequence[int]) -> None:
            for i in cells:
                if not in_tree[i]:
                    in_tree[i] = 1
                    tree.append(i)
                _, x, y = self._coords(i)
                bbox[0] = min(bbox[0], x)
                bbox[1] = max(bbox[1], x)
                bbox[2] = min(bbox[2], y)
                bbox[3] = max(bbox[3], y)

        trunk = None
        if len(groups) > 1 and self.params.is_critical(net):
            trunk = self._best_trunk(net, nid, groups)
        if trunk is not None:
            line, stacks, touched = trunk
            for path in [line, *stacks]:
                for i in path:
                    self.occ[i] = nid
                s, v = _segments_from_path([self._coords(i) for i in path])
                segments += s
                vias += v
                absorb(path)
            for t in touched:
                connected[t] = True
                absorb(groups[t])
        else:
            connected[0] = True
            absorb(groups[0])

        boxes = np.array([self._group_box(g) for g in groups], dtype=np.int64)
        for t in self._prim_order(boxes, connected):
            group = groups[t]
            if any(in_tree[i] for i in group):
                absorb(group)
                continue
            path = self._connect(net, nid, group, in_tree, self._box_distance(bbox))
            s, v = _segments_from_path([self._coords(i) for i in path])
            segments += s
            vias += v
            absorb(path)
            absorb(group)
        if net in self.escape and not any(self._on_boundary(i) for i in tree):
            # leave the port reachable from below the block
            edge = bytearray(n_cells)
            for base in range(0, n_cells, self.plane):
                for i in range(base, base + self.W):
                    edge[i] = self.occ[i] in (FREE, nid)
            path = self._connect(net, nid, sorted(tree), edge, self._edge_distance)
            s, v = _segments_from_path([self._coords(i) for i in path])
            segments += s
            vias += v
        segments = sorted(_canonical(s) for s in segments)
        return RoutedNet(net, segments, sorted(set(vias)))

    def _connect(self, net: str, nid: int, sources: list[int], goal: bytearray, heuristic) -> list[int]:
        cost, path = self._search(nid, sources, goal, heuristic)
        if path is None:
            _, x0, y0 = self._coords(sources[0])
            raise RoutingError(f"no path for net {net} from terminal near ({x0}, {y0})", net)
        if self.on_connection is not None:
            targets = np.flatnonzero(np.frombuffer(goal, dtype=np.uint8)).tolist()
            self.on_connection(Connection(net, nid, list(sources), targets,
                                          array("i", self.occ), cost, list(path), (self.L, self.H, self.W)))
        for i in path:
            self.occ[i] = nid
        return path

    def _on_boundary(self, i: int) -> bool:
        _, x, y = self._coords(i)
        return x == 0 or y == 0 or x == self.W - 1 or y == self.H - 1

    @staticmethod
    def _edge_distance(x: int, y: int) -> int:
        return y

    @staticmethod
    def _box_distance(bbox: list[int]):
        bx0, bx1, by0, by1 = bbox

        def h(x: int, y: int) -> int:
            return max(0, bx0 - x, x - bx1) + max(0, by0 - y, y - by1)
        return h

    def _group_box(self, group: list[int]) -> tuple[int, int, int, int]:
        xs, ys = [], []
        for i in group:
            _, x, y = self._coords(i)
            xs.append(x)
            ys.append(y)
        return (min(xs), max(xs), min(ys), max(ys))

    @staticmethod
    def _prim_order(boxes: np.ndarray, connected: list[bool]) -> list[int]:
        """Remaining terminals, each next one closest (by box gap) to those already joined."""
        n = len(boxes)
        best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        done = np.array(connected, dtype=bool)

        def relax(k: int) -> None:
            b = boxes[k]
            dx = np.maximum(0, np.maximum(boxes[:, 0] - b[1], b[0] - boxes[:, 1]))
            dy = np.maximum(0, np.maximum(boxes[:, 2] - b[3], b[2] - boxes[:, 3]))
            np.minimum(best, dx + dy, out=best)

        for k in np.nonzero(done)[0]:
            relax(int(k))
        order = []
        while not done.all():
            masked = np.where(done, np.iinfo(np.int64).max, best)
            k = int(np.argmin(masked))
            order.append(k)
            done[k] = True
            relax(k)
        return order

    def _search(self, nid: int, sources: Sequence[int], goal: bytearray, heuristic):
        """A* from ``sources`` to any cell flagged in ``goal``; returns (cost, path)."""
        W = self.W
        occ = self.occ
        dist: dict[int, int] = {}
        parent: dict[int, int] = {}
        heap: list[tuple[int, int, int]] = []
        for s in sources:
            rem = s % self.plane
            y, x = divmod(rem, W)
            h = heuristic(x, y)
            dist[s] = 0
            parent[s] = -1
            heap.append((h, 0, s))
        heapq.heapify(heap)
        push, pop = heapq.heappush, heapq.heappop
        while heap:
            f, g, i = pop(heap)
            if g != dist[i]:
                continue
            if goal[i]:
                path = [i]
                while parent[path[-1]] != -1:
                    path.append(parent[path[-1]])
                path.reverse()
                return g, path
            for j, c in self._neighbors(i):
                o = occ[j]
                if o != FREE and o != nid:
                    continue
                ng = g + c
                if ng < dist.get(j, ng + 1):
                    dist[j] = ng
                    parent[j] = i
                    rem = j % self.plane
                    yy, xx = divmod(rem, W)
                    h = heuristic(xx, yy)
                    push(heap, (ng + h, ng, j))
        return None, None

    # ------------------------------------------------------------ trunks
    def _passable(self, i: int, nid: int) -> bool:
        o = self.occ[i]
        return o == FREE or o == nid

    def _best_trunk(self, net: str, nid: int, groups: list[list[int]]):
        best = None
        for rule in self.params.tracks_for(net):
            cand = self._trunk_on(rule, nid, groups)
            if cand is not None and (best is None or cand[3] > best[3]):
                best = cand
        return best[:3] if best else None

    def _stack(self, l0: int, l1: int, x: int, y: int) -> list[int]:
        step = 1 if l1 >= l0 else -1
        rem = y * self.W + x
        return [k * self.plane + rem for k in range(l0, l1 + step, step)]

    def _reaches(self, rule: TrackRule, nid: int, i: int, dirs: tuple[int, ...] = (-1, 1)):
        """(line, pos, path, off) for every way cell ``i`` can reach a track line.

        Without a stub layer only the cell's own line counts (through a via
        stack); with one, a straight stub on that layer may run across lines
        in the directions ``dirs``.  ``path`` is a lazy ``(head, run, k, tail)``
        whose cells are ``head + run[:k] + tail`` (see ``_path_cells``) and
        ``off`` counts its free cells that lie off the track layer.
        """
        lt = rule.layer
        row = rule.axis == "row"
        l, rem = divmod(i, self.plane)
        y, x = divmod(rem, self.W)
        occ = self.occ
        ok = lambda cells: all(occ[j] == FREE or occ[j] == nid for j in cells)  # noqa: E731
        off = lambda cells: sum(occ[j] == FREE and j // self.plane != lt for j in cells)  # noqa: E731
        direct = self._stack(l, lt, x, y)
        if ok(direct):
            yield ((y, x) if row else (x, y)) + ((direct, [], 0, []), off(direct))
        s = rule.stub_layer
        if s is None or s >= self.L:
            return
        head = self._stack(l, s, x, y)
        if not ok(head):
            return
        head_off = off(head)
        for d in dirs:
            run: list[int] = []
            run_off = 0
            a, b = x, y
            while True:
                if row:
                    b += d
                    if not 0 <= b < self.H:
                        break
                else:
                    a += d
                    if not 0 <= a < self.W:
                        break
                j = s * self.plane + b * self.W + a
                if occ[j] != FREE and occ[j] != nid:
                    break
                run.append(j)
                run_off += occ[j] == FREE and s != lt
                tail = self._stack(s, lt, a, b)[1:]
                if ok(tail):
                    yield ((b, a) if row else (a, b)) + ((head, run, len(run), tail), head_off + run_off + off(tail))

    def _trunk_on(self, rule: TrackRule, nid: int, groups: list[list[int]]):
        """Longest-reaching straight line on the rule's layer/axis.

        A terminal is touched when one of its cells reaches the line through a
        passable via stack (or stub, see ``_reaches``).
        """
        lt = rule.layer
        row = rule.axis == "row"
        touches: dict[int, list[tuple[int, int, tuple, int, int]]] = {}
        for t, group in enumerate(groups):
            # a stub from inside the group would only retrace the group, so
            # only the outermost cell across each line may grow one per side
            ends: dict[tuple[int, int], list[int]] = {}
            for i in group:
                l, x, y = self._coords(i)
                key, across = ((l, x), y) if row else ((l, y), x)
                e = ends.setdefault(key, [across, across])
                e[0], e[1] = min(e[0], across), max(e[1], across)
            for i in group:
                l, x, y = self._coords(i)
                key, across = ((l, x), y) if row else ((l, y), x)
                lo, hi = ends[key]
                dirs = (-1,) * (across == lo) + (1,) * (across == hi)
                for line, pos, path, off in self._reaches(rule, nid, i, dirs):
                    if rule.allows(line):
                        size = len(path[0]) + path[2] + len(path[3])
                        touches.setdefault(line, []).append((t, pos, path, off, size))
        best = None
        limit = self.W if row else self.H
        for line in sorted(touches):
            cands = touches[line]
            if len({c[0] for c in cands}) < 2:
                continue
            cands.sort(key=lambda c: c[1])
            cand_pos = [c[1] for c in cands]
            cells = [self._index(lt, p, line) if row else self._index(lt, line, p) for p in range(limit)]
            ok = [self._passable(i, nid) for i in cells]
            pos_of = {i: p for p, i in enumerate(cells)}
            free_before = [0]
            for i in cells:
                free_before.append(free_before[-1] + (self.occ[i] == FREE))
            # split the line into passable runs and score each by terminals touched
            run_start = None
            for p in range(limit + 1):
                if p < limit and ok[p]:
                    if run_start is None:
                        run_start = p
                    continue
                if run_start is None:
                    continue
                inside: dict[int, tuple[int, tuple, int, int]] = {}
                for t, pos, path, off, size in cands[bisect_left(cand_pos, run_start):bisect_left(cand_pos, p)]:
                    cur = inside.get(t)
                    if cur is None or (size, pos) < (cur[3], cur[0]):
                        inside[t] = (pos, path, off, size)
                run_start = None
                if len(inside) < 2:
                    continue
                lo = min(v[0] for v in inside.values())
                hi = max(v[0] for v in inside.values())
                span_free = free_before[hi + 1] - free_before[lo]
                if best is not None and (len(inside), -(span_free + max(v[2] for v in inside.values()))) <= best[3]:
                    continue  # cannot beat the best even with fully shared stubs
                span = cells[lo:hi + 1]
                stacks = [_path_cells(v[1]) for _, v in sorted(inside.items()) if v[3] > 1]
                extra = {i for path in stacks for i in path if not lo <= pos_of.get(i, -1) <= hi}
                fresh = span_free + sum(self.occ[i] == FREE for i in extra)
                # most terminals first, then the fewest newly used cells
                score = (len(inside), -fresh)
                if best is None or score > best[3]:
                    best = (span, stacks, sorted(inside), score)
        return best


def _path_cells(path: tuple) -> list[int]:
    head, run, k, tail = path
    return head + run[:k] + tail


def route_nets(
    width: int,
    height: int,
    terminals: Mapping[str, Sequence[np.ndarray]],
    params: LayoutParams,
    obstacles: np.ndarray | Sequence = (),
    on_connection: Callable[[Connection], None] | None = None,
) -> list[RoutedNet]:
    """Route every multi-terminal net; terminals are groups of (layer, x, y) cells."""
    router = GridRouter(width, height, params, obstacles, terminals, on_connection)
    return router.route_all()


def route_level(
    placement,
    terminals: Mapping[str, Sequence[np.ndarray]],
    params: LayoutParams,
    obstacles: np.ndarray | Sequence = (),
    on_connection: Callable[[Connection], None] | None = None,
) -> list[RoutedNet]:
    """Route the nets of one placed level inside its bounding region."""
    return route_nets(placement.width, placement.height, terminals, params, obstacles, on_connection)
