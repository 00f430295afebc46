"""Command-line entry point: explore, distill, compile, sweep, full.

Exit codes: 0 success, 1 configuration error, 2 exploration error,
3 compile error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import RunConfig, load_config
from .distill import apply_filter, parse_filter
from .errors import AcimError, ConfigurationError, EmptySpaceError, LibraryError, ParseError, ValidationError
from .explorer import ParetoSet, SearchBounds, enumerate_feasible, evaluate_space, frontier_of
from .nsga2 import nsga2_explore
from .pipeline import compile_point, format_sweep, format_table, read_frontier, write_result

EXIT_OK, EXIT_CONFIG, EXIT_EXPLORE, EXIT_COMPILE = 0, 1, 2, 3

# brute-force cross-check is skipped above this many feasible points
ORACLE_LIMIT = 10**6

DESIGN_SPACE = "design_space.csv"
FRONTIER = "frontier.csv"
DISTILLED = "frontier_distilled.csv"
SWEEP = "sweep.csv"
RUN_LOG = "run.log"

log = logging.getLogger("acimflow.run")


class StageError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


class _Stage:
    """Times one stage and writes its line to the run log."""

    def __init__(self, name: str, seed: int):
        self.name = name
        self.seed = seed
        self.fields: dict[str, object] = {}

    def __enter__(self) -> "_Stage":
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        wall = time.perf_counter() - self.start
        status = "ok" if exc_type is None else "error"
        extra = " ".join(f"{k}={v}" for k, v in self.fields.items())
        log.info("stage=%s status=%s seed=%d wall=%.3fs %s", self.name, status, self.seed, wall, extra)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------- #
# commands

def cmd_explore(config: RunConfig) -> ParetoSet:
    out = Path(config.output_dir)
    bounds = config.search_bounds()
    params = config.ga_params()
    profile = config.profile()
    with _Stage("explore", params.seed) as st:
        try:
            frontier = nsga2_explore(bounds, profile, params).sorted()
        except EmptySpaceError as exc:
            raise StageError(str(exc), EXIT_EXPLORE) from None
        entries = evaluate_space(bounds, profile)
        _write(out / DESIGN_SPACE, format_table(entries, frontier.points()))
        _write(out / FRONTIER, format_table(frontier))
        st.fields.update(array_size=bounds.array_size, feasible=len(entries), frontier=len(frontier))
        if len(entries) <= ORACLE_LIMIT:
            exact = frontier_of(entries)
            agree = exact.points() == frontier.points()
            st.fields["oracle_agreement"] = "yes" if agree else f"no(oracle={len(exact)})"
    return frontier


def cmd_distill(config: RunConfig, source: str | Path | None = None) -> ParetoSet:
    out = Path(config.output_dir)
    source = Path(source) if source is not None else out / FRONTIER
    if not source.is_file():
        raise ConfigurationError(f"frontier file not found: {source}")
    spec = parse_filter(config.filter)
    with _Stage("distill", config.seed) as st:
        frontier = read_frontier(source)
        kept = apply_filter(frontier, spec)
        _write(out / DISTILLED, format_table(kept))
        st.fields.update(filter=repr(str(spec)), kept=len(kept), removed=len(frontier) - len(kept))
    print(f"distill: kept {len(kept)}, removed {len(frontier) - len(kept)}")
    return kept


def _compile_task(args):
    return compile_point(*args)


def cmd_compile(config: RunConfig, source: str | Path | None = None) -> int:
    """Compile every point of a frontier table; returns the number of failed points."""
    out = Path(config.output_dir)
    source = Path(source) if source is not None else out / DISTILLED
    if not source.is_file():
        raise ConfigurationError(f"frontier file not found: {source}")
    points = [e.point for e in read_frontier(source)]
    if not points:
        raise StageError(f"nothing to compile: {source} has no design points", EXIT_COMPILE)
    try:
        shared = (config.cell_library(), config.templates(), config.layout_params(), config.profile())
    except LibraryError as exc:
        raise StageError(str(exc), EXIT_COMPILE) from None
    tasks = [(p,) + shared for p in points]
    with _Stage("compile", config.seed) as st:
        if config.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=min(config.jobs, len(tasks))) as pool:
                results = list(pool.map(_compile_task, tasks))
        else:
            results = [_compile_task(t) for t in tasks]
        failed = 0
        for r in results:
            write_result(r, out)
            if not r.ok:
                failed += 1
                reason = r.report.get("error") or "checks failed"
                log.info("compile failed point=%s %s", r.point.as_tuple(), reason)
                print(f"compile: {r.point} failed: {reason}", file=sys.stderr)
        st.fields.update(points=len(results), failed=failed, jobs=config.jobs)
    return failed


def cmd_sweep(config: RunConfig, sizes: Sequence[int] | None = None) -> int:
    out = Path(config.output_dir)
    if sizes is None:
        sizes = config.sizes or (config.array_size,)
    profile = config.profile()
    with _Stage("sweep", config.seed) as st:
        parts = []
        for size in sizes:
            bounds: SearchBounds = config.search_bounds(size)
            entries = evaluate_space(bounds, profile)
            parts.append((size, entries, frontier_of(entries).points()))
        _write(out / SWEEP, format_sweep(parts))
        rows = sum(len(e) for _, e, _ in parts)
        st.fields.update(sizes=",".join(map(str, sizes)) or "-", rows=rows)
    return rows


def cmd_full(config: RunConfig, sizes: Sequence[int] | None = None) -> int:
    cmd_explore(config)
    cmd_distill(config)
    failed = cmd_compile(config)
    cmd_sweep(config, sizes)
    return failed


# --------------------------------------------------------------------------- #
# argument handling

def _sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be a comma list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--filter", help="distillation filter, e.g. 'snr_db >= 20; B_adc = 3'")
    common.add_argument("--jobs", type=int, help="parallel compile workers")
    common.add_argument("--sizes", type=_sizes, help="comma list of array sizes for sweep")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="acimflow", description="ACIM macro design-space exploration and compilation")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("explore", parents=[common], help="evaluate the design space and extract the frontier")
    p = sub.add_parser("distill", parents=[common], help="filter a frontier table")
    p.add_argument("input", nargs="?", help="frontier CSV (default: <out>/frontier.csv)")
    p = sub.add_parser("compile", parents=[common], help="netlist + layout + report per point")
    p.add_argument("input", nargs="?", help="frontier CSV (default: <out>/frontier_distilled.csv)")
    sub.add_parser("sweep", parents=[common], help="long-format design-space table over array sizes")
    sub.add_parser("full", parents=[common], help="explore, distill, compile and sweep")
    return parser


def _setup_log(out: Path) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / RUN_LOG, encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config).with_overrides(
            seed=args.seed, filter=args.filter, jobs=args.jobs, output_dir=args.out)
        config.check_paths()
    except (ConfigurationError, ValidationError) as exc:
        print(f"acimflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handler = _setup_log(Path(config.output_dir))
    log.info("command=%s seed=%d array_size=%d", args.command, config.seed, config.array_size)
    try:
        if args.command == "explore":
            cmd_explore(config)
            return EXIT_OK
        if args.command == "distill":
            cmd_distill(config, args.input)
            return EXIT_OK
        if args.command == "compile":
            return EXIT_COMPILE if cmd_compile(config, args.input) else EXIT_OK
        if args.command == "sweep":
            cmd_sweep(config, args.sizes)
            return EXIT_OK
        return EXIT_COMPILE if cmd_full(config, args.sizes) else EXIT_OK
    except ParseError as exc:
        print(f"acimflow: filter error: {exc} (token {exc.token!r})", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"acimflow: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigurationError, ValidationError) as exc:
        print(f"acimflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AcimError as exc:
        print(f"acimflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXPLORE if args.command == "explore" else EXIT_COMPILE
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
