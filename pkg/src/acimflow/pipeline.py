"""Per-point compilation and the CSV tables passed between flow stages."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AcimError, ValidationError
from .explorer import ParetoEntry, ParetoSet
from .layout import LayoutParams, build_layout, check_design, emit_layout
from .layout.templates import CellTemplate
from .model import DesignPoint, PerformanceVector, evaluate
from .netlist import Cell, emit_netlist, erc_check, generate_macro
from .profile import TechnologyProfile

CSV_COLUMNS = ("H", "W", "L", "B_adc", "snr_db", "throughput", "energy_per_op", "area_per_bit", "on_frontier")
SWEEP_COLUMNS = ("array_size",) + CSV_COLUMNS

_INT_COLUMNS = ("H", "W", "L", "B_adc")
_FLOAT_COLUMNS = ("snr_db", "throughput", "energy_per_op", "area_per_bit")


# --------------------------------------------------------------------------- #
# CSV tables

def _row(entry: ParetoEntry, on_frontier: bool) -> list[str]:
    p, perf = entry.point, entry.performance
    # repr keeps every float bit so a table read back compares exactly
    return [str(p.H), str(p.W), str(p.L), str(p.B_adc),
            repr(perf.snr_db), repr(perf.throughput), repr(perf.energy_per_op), repr(perf.area_per_bit),
            "1" if on_frontier else "0"]


def format_table(entries: Iterable[ParetoEntry], frontier: Iterable[DesignPoint] | None = None) -> str:
    """CSV text with the fixed column set.

    With ``frontier=None`` every row is flagged as a frontier member.
    """
    members = None if frontier is None else set(frontier)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in entries:
        writer.writerow(_row(e, members is None or e.point in members))
    return buf.getvalue()


def format_sweep(partitions: Sequence[tuple[int, Sequence[ParetoEntry], set[DesignPoint]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for size, entries, frontier in partitions:
        for e in entries:
            writer.writerow([str(size)] + _row(e, e.point in frontier))
    return buf.getvalue()


@dataclass(frozen=True)
class TableRow:
    entry: ParetoEntry
    on_frontier: bool


def parse_table(text: str) -> list[TableRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValidationError(f"expected CSV header {','.join(CSV_COLUMNS)}, got {header}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(CSV_COLUMNS):
            raise ValidationError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(rec)}")
        data = dict(zip(CSV_COLUMNS, rec))
        try:
            point = DesignPoint(*(int(data[c]) for c in _INT_COLUMNS))
            perf = PerformanceVector(*(float(data[c]) for c in _FLOAT_COLUMNS))
            flag = data["on_frontier"].strip().lower() in ("1", "true", "yes")
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        rows.append(TableRow(ParetoEntry(point, perf), flag))
    return rows


def read_frontier(path: str | Path) -> ParetoSet:
    """Entries of a frontier table, in file order."""
    return ParetoSet([r.entry for r in parse_table(Path(path).read_text(encoding="utf-8"))])


# --------------------------------------------------------------------------- #
# compilation

def point_dirname(point: DesignPoint) -> str:
    return f"H{point.H}_W{point.W}_L{point.L}_B{point.B_adc}"


@dataclass
class CompileResult:
    point: DesignPoint
    ok: bool
    report: dict
    netlist_text: str | None = None
    layout_text: str | None = None
    files: list[str] = field(default_factory=list)


def compile_point(
    point: DesignPoint,
    library: Mapping[str, Cell],
    templates: Mapping[str, CellTemplate],
    params: LayoutParams,
    profile: TechnologyProfile,
) -> CompileResult:
    """Netlist, layout and report for one design point.

    Failures are caught and recorded in the report instead of raised, so
    one bad point does not stop a batch.
    """
    report: dict = {"point": dict(zip(_INT_COLUMNS, point.as_tuple()))}
    try:
        point.check()
        report["performance"] = dict(zip(_FLOAT_COLUMNS, evaluate(point, profile).as_tuple()))
        netlist = generate_macro(point, library)
        erc = [str(v) for v in erc_check(netlist)]
        report["erc"] = erc
        report["instances"] = dict(sorted(netlist.leaf_counts().items()))
        netlist_text = emit_netlist(netlist, check=False)
        design = build_layout(netlist, templates, params)
        checks = check_design(design, params)
        report["drc"] = [str(v) for v in checks["drc"]]
        report["connectivity"] = [str(v) for v in checks["connectivity"]]
        top = design.layout
        report["region"] = [top.width, top.height]
        report["hpwl"] = sum(lay.hpwl() for lay in design.levels.values())
        report["wirelength"] = sum(lay.wirelength for lay in design.levels.values())
        clean = not (erc or checks["drc"] or checks["connectivity"])
        layout_text = emit_layout(design, params, check=False) if clean else None
    except AcimError as exc:
        report["status"] = "failed"
        report["error"] = f"{type(exc).__name__}: {exc}"
        return CompileResult(point, False, report)
    report["status"] = "ok" if clean else "dirty"
    return CompileResult(point, clean, report, netlist_text, layout_text)


def write_result(result: CompileResult, root: str | Path) -> Path:
    """Write the point's files under ``root/points/<point>/``."""
    out = Path(root) / "points" / point_dirname(result.point)
    out.mkdir(parents=True, exist_ok=True)
    files = {"report.json": json.dumps(result.report, indent=1, sort_keys=True) + "\n"}
    if result.netlist_text is not None:
        files["netlist.txt"] = result.netlist_text
    if result.layout_text is not None:
        files["layout.json"] = result.layout_text
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    # stale artifacts from an earlier clean run must not survive a failure
    for name in ("netlist.txt", "layout.json"):
        if name not in files and (out / name).exists():
            (out / name).unlink()
    result.files = sorted(files)
    return out
