"""Hierarchical structural netlist for one macro.

The hierarchy is ``macro -> {column x W, control}`` and
``column -> {local_array x H/L, comparator, sar_dff x B_adc, cmos_switch?}``.
Each local array holds L 8T cells sharing one compute capacitor and one
local control block.  The compute capacitors of a column are regrouped as
the SAR CDAC in a 1:1:2:...:2^(B-1) ratio; capacitors beyond 2^B sit on the
far side of the RBL switch.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import CheckFailedError, LibraryError, ParseError, ValidationError
from .model import DesignPoint

DIRECTIONS = ("in", "out", "inout")
COLUMN_LEAVES = ("sram8t", "compute_cap", "local_ctrl", "comparator", "sar_dff", "cmos_switch")
CONTROL_LEAVES = ("row_driver", "rst_driver", "sar_ctrl", "sar_phase", "sw_ctrl")
GLOBAL_NETS = ("VDD", "VSS", "VCM")


@dataclass(frozen=True)
class Port:
    name: str
    direction: str

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"port {self.name}: bad direction {self.direction!r}")


@dataclass(frozen=True)
class Cell:
    name: str
    ports: tuple[Port, ...]
    kind: str = "leaf"

    def __post_init__(self) -> None:
        if self.kind not in ("leaf", "composite"):
            raise ValidationError(f"cell {self.name}: bad kind {self.kind!r}")
        names = [p.name for p in self.ports]
        dup = [n for n, c in Counter(names).items() if c > 1]
        if dup:
            raise ValidationError(f"cell {self.name}: duplicate port(s) {', '.join(sorted(dup))}")

    @cached_property
    def _by_name(self) -> dict[str, Port]:
        return {p.name: p for p in self.ports}

    def port(self, name: str) -> Port | None:
        return self._by_name.get(name)

    @property
    def port_names(self) -> list[str]:
        return [p.name for p in self.ports]


@dataclass
class Instance:
    name: str
    cell: str
    connections: dict[str, str]


@dataclass
class Netlist:
    cells: dict[str, Cell]
    top: str
    instances: dict[str, list[Instance]] = field(default_factory=dict)
    nets: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        top = self.cells.get(self.top)
        if top is None or top.kind != "composite":
            raise ValidationError(f"top cell {self.top!r} missing or not composite")

    def composites(self) -> list[str]:
        return [n for n, c in self.cells.items() if c.kind == "composite"]

    def children(self, cell: str) -> list[str]:
        return sorted({i.cell for i in self.instances.get(cell, [])})

    def topological_order(self) -> list[str]:
        """Cells reachable from top, children first, alphabetical among peers."""
        reach: set[str] = set()
        stack = [self.top]
        while stack:
            c = stack.pop()
            if c in reach:
                continue
            reach.add(c)
            stack.extend(ch for ch in self.children(c) if ch in self.cells)
        pending = {c: {ch for ch in self.children(c) if ch in reach} for c in reach}
        parents: dict[str, set[str]] = {c: set() for c in reach}
        for c, kids in pending.items():
            for k in kids:
                parents[k].add(c)
        ready = [c for c, kids in pending.items() if not kids]
        heapq.heapify(ready)
        order = []
        while ready:
            c = heapq.heappop(ready)
            order.append(c)
            for p in parents[c]:
                pending[p].discard(c)
                if not pending[p]:
                    heapq.heappush(ready, p)
        if len(order) != len(reach):
            raise ValidationError("cell hierarchy contains a cycle")
        return order

    def leaf_counts(self, cell: str | None = None) -> Counter:
        """Number of leaf instances below ``cell`` (default top), by leaf name."""
        memo: dict[str, Counter] = {}

        def walk(name: str) -> Counter:
            if name in memo:
                return memo[name]
            out: Counter = Counter()
            for inst in self.instances.get(name, []):
                child = self.cells[inst.cell]
                if child.kind == "leaf":
                    out[inst.cell] += 1
                else:
                    for k, v in walk(inst.cell).items():
                        out[k] += v
            memo[name] = out
            return out

        return walk(cell or self.top)


# --------------------------------------------------------------------------- #
# cell library

def load_cell_library(path: str | Path | None = None) -> dict[str, Cell]:
    """Leaf cells from a JSON library file (the shipped mock when None)."""
    if path is None:
        text = resources.files("acimflow.data").joinpath("cell_library.json").read_text()
        source = "default cell library"
    else:
        path = Path(path)
        if not path.is_file():
            raise LibraryError(f"cell library not found: {path}")
        text = path.read_text()
        source = str(path)
    try:
        data = json.loads(text)
        table = data["cells"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise LibraryError(f"{source}: malformed cell library ({exc})") from None
    cells = {}
    for name, body in table.items():
        ports = tuple(Port(str(p), str(d)) for p, d in body["ports"])
        cells[name] = Cell(name, ports, "leaf")
    return cells


def _require(library: Mapping[str, Cell], names: Iterable[str]) -> None:
    for name in names:
        if name not in library:
            raise LibraryError(f"cell library has no cell '{name}'", name)


# --------------------------------------------------------------------------- #
# SAR grouping

@dataclass(frozen=True)
class SarGrouping:
    group_sizes: tuple[int, ...]
    switch_isolated: int

    @property
    def cdac_size(self) -> int:
        return sum(self.group_sizes)

    def group_of(self, index: int) -> int | None:
        """Group of the index-th local array, or None when isolated."""
        start = 0
        for g, size in enumerate(self.group_sizes):
            if index < start + size:
                return g
            start += size
        return None


def sar_grouping(point: DesignPoint) -> SarGrouping:
    point.check()
    B = point.B_adc
    sizes = (1,) + tuple(2 ** n for n in range(B))
    return SarGrouping(sizes, point.N - 2 ** B)


# --------------------------------------------------------------------------- #
# generators

class _Builder:
    def __init__(self, name: str):
        self.name = name
        self.ports: list[Port] = []
        self.nets: set[str] = set()
        self.instances: list[Instance] = []

    def port(self, name: str, direction: str) -> str:
        self.ports.append(Port(name, direction))
        return name

    def net(self, name: str) -> str:
        self.nets.add(name)
        return name

    def inst(self, name: str, cell: str, **conn: str) -> None:
        self.instances.append(Instance(name, cell, dict(conn)))

    def cell(self) -> Cell:
        return Cell(self.name, tuple(self.ports), "composite")


def _power(b: _Builder, vcm: bool = True) -> None:
    for net in GLOBAL_NETS if vcm else GLOBAL_NETS[:2]:
        b.port(net, "inout")


def _local_array(L: int) -> _Builder:
    b = _Builder(f"local_array_L{L}")
    for j in range(L):
        b.port(f"RWL[{j}]", "in")
        b.port(f"WWL[{j}]", "in")
    b.port("WBL", "inout")
    b.port("WBLB", "inout")
    b.port("RST", "in")
    b.port("P", "in")
    b.port("N", "in")
    b.port("RBL", "inout")
    _power(b)
    drv = b.net("drv")
    for j in range(L):
        b.inst(f"sram{j}", "sram8t", WWL=f"WWL[{j}]", WBL="WBL", WBLB="WBLB",
               RWL=f"RWL[{j}]", RBL=drv, VDD="VDD", VSS="VSS")
    b.inst("lctrl", "local_ctrl", RST="RST", P="P", N="N", VCM="VCM", DRV=drv,
           VDD="VDD", VSS="VSS")
    b.inst("cap", "compute_cap", TOP=drv, BOT="RBL")
    return b


def _tag(point: DesignPoint) -> str:
    return f"H{point.H}_L{point.L}_B{point.B_adc}"


def _column(point: DesignPoint, sar: SarGrouping, la_name: str) -> _Builder:
    H, L, B, n_la = point.H, point.L, point.B_adc, point.N
    has_switch = sar.switch_isolated > 0
    b = _Builder(f"column_{_tag(point)}")
    for r in range(H):
        b.port(f"RWL[{r}]", "in")
    for r in range(H):
        b.port(f"WWL[{r}]", "in")
    for i in range(n_la):
        b.port(f"RST[{i}]", "in")
    b.port("CMP_CLK", "in")
    for n in range(B):
        b.port(f"PH[{n}]", "in")
    if has_switch:
        b.port("SWEN", "in")
    b.port("WBL", "inout")
    b.port("WBLB", "inout")
    for n in range(B):
        b.port(f"P[{n}]", "out")
    _power(b)

    cdac = b.net("rbl_cdac")
    far = b.net("rbl_far") if has_switch else None
    cmp_out = b.net("cmp_out")
    for n in range(B):
        b.net(f"N[{n}]")

    for i in range(n_la):
        group = sar.group_of(i)
        if group is None or group == 0:
            p = n_ = "VCM"  # dummy LSB group and isolated capacitors stay at V_CM
        else:
            p, n_ = f"P[{group - 1}]", f"N[{group - 1}]"
        conn = {}
        for j in range(L):
            conn[f"RWL[{j}]"] = f"RWL[{i * L + j}]"
            conn[f"WWL[{j}]"] = f"WWL[{i * L + j}]"
        conn.update(WBL="WBL", WBLB="WBLB", RST=f"RST[{i}]", P=p, N=n_,
                    RBL=cdac if group is not None else far,
                    VCM="VCM", VDD="VDD", VSS="VSS")
        b.inst(f"la{i}", la_name, **conn)
    b.inst("cmp", "comparator", INP=cdac, INN="VCM", CLK="CMP_CLK", OUT=cmp_out,
           VDD="VDD", VSS="VSS")
    for n in range(B):
        b.inst(f"dff{n}", "sar_dff", D=cmp_out, CLK=f"PH[{n}]", P=f"P[{n}]", N=f"N[{n}]",
               VDD="VDD", VSS="VSS")
    if has_switch:
        b.inst("sw", "cmos_switch", A=cdac, B=far, EN="SWEN", VDD="VDD", VSS="VSS")
    return b


def _control(point: DesignPoint, has_switch: bool) -> _Builder:
    H, B, n_la = point.H, point.B_adc, point.N
    b = _Builder(f"control_{_tag(point)}")
    for r in range(H):
        b.port(f"RE[{r}]", "in")
    for r in range(H):
        b.port(f"WE[{r}]", "in")
    for i in range(n_la):
        b.port(f"RSTIN[{i}]", "in")
    b.port("CLK", "in")
    b.port("START", "in")
    for r in range(H):
        b.port(f"RWL[{r}]", "out")
    for r in range(H):
        b.port(f"WWL[{r}]", "out")
    for i in range(n_la):
        b.port(f"RST[{i}]", "out")
    b.port("CMP_CLK", "out")
    for n in range(B):
        b.port(f"PH[{n}]", "out")
    if has_switch:
        b.port("SWEN", "out")
    _power(b, vcm=False)
    seed = b.net("ph_seed")
    # reset and row drivers interleave in the same order as a column's local
    # arrays (reset strip first, then the L rows), so a stack lines them up
    L = point.L
    for i in range(n_la):
        b.inst(f"rstdrv{i}", "rst_driver", IN=f"RSTIN[{i}]", OUT=f"RST[{i}]",
               VDD="VDD", VSS="VSS")
        for r in range(i * L, (i + 1) * L):
            b.inst(f"rowdrv{r}", "row_driver", RE=f"RE[{r}]", WE=f"WE[{r}]",
                   RWL=f"RWL[{r}]", WWL=f"WWL[{r}]", VDD="VDD", VSS="VSS")
    b.inst("sarctl", "sar_ctrl", CLK="CLK", START="START", CMP_CLK="CMP_CLK", PH=seed,
           VDD="VDD", VSS="VSS")
    prev = seed
    for n in range(B):
        b.inst(f"phase{n}", "sar_phase", IN=prev, OUT=f"PH[{n}]", VDD="VDD", VSS="VSS")
        prev = f"PH[{n}]"
    if has_switch:
        b.inst("swctl", "sw_ctrl", CLK="CLK", SWEN="SWEN", VDD="VDD", VSS="VSS")
    return b


def _assemble(top: str, builders: list[_Builder], library: Mapping[str, Cell]) -> Netlist:
    cells: dict[str, Cell] = {}
    instances: dict[str, list[Instance]] = {}
    nets: dict[str, list[str]] = {}
    for b in builders:
        cells[b.name] = b.cell()
        instances[b.name] = b.instances
        nets[b.name] = sorted(b.nets)
    used = {i.cell for b in builders for i in b.instances}
    for name in sorted(used - set(cells)):
        cells[name] = library[name]
    netlist = Netlist(cells, top, instances, nets)
    ordered = netlist.topological_order()
    netlist.cells = {c: cells[c] for c in ordered}
    netlist.instances = {c: instances[c] for c in ordered if c in instances}
    netlist.nets = {c: nets[c] for c in ordered if c in nets}
    return netlist


def generate_column(point: DesignPoint, library: Mapping[str, Cell]) -> Netlist:
    """Netlist whose top is one column cell."""
    sar = sar_grouping(point)
    needed = ["sram8t", "compute_cap", "local_ctrl", "comparator", "sar_dff"]
    if sar.switch_isolated:
        needed.append("cmos_switch")
    _require(library, needed)
    la = _local_array(point.L)
    col = _column(point, sar, la.name)
    return _assemble(col.name, [la, col], library)


def generate_macro(point: DesignPoint, library: Mapping[str, Cell]) -> Netlist:
    """Full macro: W columns plus the shared row/SAR control block."""
    sar = sar_grouping(point)
    has_switch = sar.switch_isolated > 0
    needed = list(COLUMN_LEAVES if has_switch else COLUMN_LEAVES[:-1])
    needed += list(CONTROL_LEAVES if has_switch else CONTROL_LEAVES[:-1])
    _require(library, needed)
    H, W, B, n_la = point.H, point.W, point.B_adc, point.N

    la = _local_array(point.L)
    col = _column(point, sar, la.name)
    ctl = _control(point, has_switch)

    m = _Builder(f"macro_H{point.H}_W{W}_L{point.L}_B{B}")
    for r in range(H):
        m.port(f"RE[{r}]", "in")
    for r in range(H):
        m.port(f"WE[{r}]", "in")
    for i in range(n_la):
        m.port(f"RSTIN[{i}]", "in")
    m.port("CLK", "in")
    m.port("START", "in")
    for c in range(W):
        m.port(f"WBL[{c}]", "inout")
        m.port(f"WBLB[{c}]", "inout")
    for c in range(W):
        for n in range(B):
            m.port(f"Q{c}[{n}]", "out")
    _power(m)

    shared = [f"RWL[{r}]" for r in range(H)] + [f"WWL[{r}]" for r in range(H)]
    shared += [f"RST[{i}]" for i in range(n_la)] + ["CMP_CLK"]
    shared += [f"PH[{n}]" for n in range(B)]
    if has_switch:
        shared.append("SWEN")
    for net in shared:
        m.net(net)

    ctl_conn = {p.name: p.name for p in ctl.ports}
    m.inst("ctrl", ctl.name, **ctl_conn)
    for c in range(W):
        conn = {}
        for p in col.ports:
            if p.name in ("WBL", "WBLB"):
                conn[p.name] = f"{p.name}[{c}]"
            elif p.name.startswith("P["):
                conn[p.name] = f"Q{c}{p.name[1:]}"
            else:
                conn[p.name] = p.name
        m.inst(f"col{c}", col.name, **conn)
    return _assemble(m.name, [la, col, ctl, m], library)


# --------------------------------------------------------------------------- #
# electrical rule check

@dataclass(frozen=True)
class ErcViolation:
    kind: str
    cell: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.cell}: {self.detail}"


def erc_check(netlist: Netlist) -> list[ErcViolation]:
    """Floating inputs, multiply-driven nets, dangling nets, undefined cells."""
    report: list[ErcViolation] = []
    for parent in netlist.composites():
        pcell = netlist.cells[parent]
        declared = set(netlist.nets.get(parent, [])) | set(pcell.port_names)
        conns: dict[str, list[tuple[str, str]]] = {n: [] for n in declared}
        for inst in netlist.instances.get(parent, []):
            child = netlist.cells.get(inst.cell)
            if child is None:
                report.append(ErcViolation("undefined_cell", parent, f"{inst.name} references '{inst.cell}'"))
                continue
            for pname, net in inst.connections.items():
                port = child.port(pname)
                if port is None:
                    report.append(ErcViolation("unknown_port", parent, f"{inst.name}.{pname}"))
                    continue
                if net not in conns:
                    report.append(ErcViolation("undeclared_net", parent, f"{inst.name}.{pname} -> {net}"))
                    continue
                conns[net].append((f"{inst.name}.{pname}", port.direction))
            for port in child.ports:
                if port.name not in inst.connections:
                    kind = "floating_input" if port.direction == "in" else "unconnected_port"
                    report.append(ErcViolation(kind, parent, f"{inst.name}.{port.name} has no net"))
        for net in sorted(conns):
            pins = conns[net]
            pport = pcell.port(net)
            drivers = [p for p, d in pins if d == "out"]
            if pport is not None and pport.direction == "in":
                drivers.append(f"port {net}")
            if len(drivers) > 1:
                report.append(ErcViolation("multiple_drivers", parent, f"{net}: {', '.join(drivers)}"))
            can_drive = drivers or any(d == "inout" for _, d in pins) or (
                pport is not None and pport.direction == "inout")
            if not can_drive:
                for p, d in pins:
                    if d == "in":
                        report.append(ErcViolation("floating_input", parent, f"{p} on undriven net {net}"))
            count = len(pins) + (pport is not None)
            if count == 1:
                report.append(ErcViolation("dangling_net", parent, f"{net} has a single connection"))
    return report


# --------------------------------------------------------------------------- #
# text format

def emit_netlist(netlist: Netlist, *, check: bool = True) -> str:
    if check:
        report = erc_check(netlist)
        if report:
            raise CheckFailedError("refusing to emit an ERC-dirty netlist", report)
    lines = [f"NETLIST {netlist.top}"]
    for name in netlist.topological_order():
        cell = netlist.cells[name]
        lines.append(f"CELL {name} {cell.kind}")
        for p in cell.ports:
            lines.append(f"PORT {p.name} {p.direction}")
        if cell.kind == "composite":
            for net in sorted(netlist.nets.get(name, [])):
                lines.append(f"NET {net}")
            for inst in netlist.instances.get(name, []):
                pins = " ".join(f"{p}={n}" for p, n in inst.connections.items())
                lines.append(f"INST {inst.name} {inst.cell} ({pins})")
        lines.append("END")
    return "\n".join(lines) + "\n"


def parse_netlist(text: str) -> Netlist:
    top = None
    cells: dict[str, Cell] = {}
    instances: dict[str, list[Instance]] = {}
    nets: dict[str, list[str]] = {}
    current = None
    offset = 0
    for line in text.splitlines(keepends=True):
        pos = offset
        offset += len(line)
        words = line.split()
        if not words:
            continue
        key = words[0]

        def fail(msg: str) -> None:
            raise ParseError(msg, key, pos)

        if key == "NETLIST":
            if top is not None or len(words) != 2:
                fail("malformed NETLIST header")
            top = words[1]
        elif top is None:
            fail("missing NETLIST header")
        elif key == "CELL":
            if current is not None or len(words) != 3 or words[2] not in ("leaf", "composite"):
                fail("malformed CELL line")
            current = {"name": words[1], "kind": words[2], "ports": []}
            if words[2] == "composite":
                instances[words[1]] = []
                nets[words[1]] = []
        elif current is None:
            fail(f"'{key}' outside a CELL block")
        elif key == "PORT":
            if len(words) != 3 or words[2] not in DIRECTIONS:
                fail("malformed PORT line")
            current["ports"].append(Port(words[1], words[2]))
        elif key == "NET" and current["kind"] == "composite":
            if len(words) != 2:
                fail("malformed NET line")
            nets[current["name"]].append(words[1])
        elif key == "INST" and current["kind"] == "composite":
            body = line.strip()
            head, _, rest = body.partition("(")
            hw = head.split()
            if len(hw) != 3 or not rest.endswith(")"):
                fail("malformed INST line")
            conn = {}
            for pair in rest[:-1].split():
                p, eq, n = pair.partition("=")
                if not eq or not p or not n:
                    fail(f"malformed connection '{pair}'")
                conn[p] = n
            instances[current["name"]].append(Instance(hw[1], hw[2], conn))
        elif key == "END":
            try:
                cells[current["name"]] = Cell(current["name"], tuple(current["ports"]), current["kind"])
            except ValidationError as exc:
                fail(str(exc))
            current = None
        else:
            fail(f"unexpected keyword '{key}'")
    if current is not None:
        raise ParseError("unterminated CELL block", "", offset)
    if top is None:
        raise ParseError("missing NETLIST header", "", 0)
    try:
        return Netlist(cells, top, instances, nets)
    except ValidationError as exc:
        raise ParseError(str(exc), top, 0) from None
