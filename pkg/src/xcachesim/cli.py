"""Command-line entry point: ``xcachesim <command> ...``.

Exit status is 0 on success, 1 when an input fails validation and 2 on I/O
errors.  Outputs are written atomically next to a ``manifest.json`` that
records input digests, flags and tool version.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

from . import __version__
from .analytics import (
    FILE,
    DATASET,
    FOUR_WEEKS_S,
    WEEK_S,
    Window,
    capacity_plan,
    rolling_working_set,
    working_set,
    write_reports,
)
from .catalog import TB, load_catalog
from .errors import ConfigError, XCacheSimError
from .federation import load_topology
from .monicron import aggregate, load_jobs, persist
from .simulate import CACHED, DIRECT, compare_modes, load_world, replay, summarize, write_outcomes
from .trace import format_number, load_trace

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


@dataclass
class RunManifest:
    command: str
    version: str
    inputs: dict = field(default_factory=dict)  # role -> {"path", "sha256"}
    flags: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add_input(self, role, path):
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        self.inputs[role] = {"path": path, "sha256": digest}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".xcachesim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    """Collects output files and writes them, plus the manifest, at the end."""

    def __init__(self, out_dir, manifest: RunManifest):
        self.out_dir = out_dir
        self.manifest = manifest
        self.files: dict[str, str] = {}

    def add(self, name, text):
        self.files[name] = text

    def commit(self):
        if self.out_dir is None:
            return
        for name, text in self.files.items():
            write_atomic(os.path.join(self.out_dir, name), text)
        self.manifest.outputs = sorted(self.files)
        write_atomic(os.path.join(self.out_dir, "manifest.json"), _dump_json(asdict(self.manifest)))


def _load_world(args, manifest):
    manifest.add_input("world", args.world)
    world = load_world(args.world)
    with open(args.world, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.path.abspath(args.world))
    manifest.add_input("topology", args.topology or os.path.join(base, doc["topology"]))
    manifest.add_input("catalog", args.catalog or os.path.join(base, doc["catalog"]))
    if args.topology:
        world = type(world)(load_topology(args.topology), world.catalog, world.caches, world.latency, world.failures)
    if args.catalog:
        world = type(world)(world.topology, load_catalog(args.catalog), world.caches, world.latency, world.failures)
    return world


def _summary_dict(summary) -> dict:
    d = asdict(summary)
    d["average_basis"] = "per-read"
    return d


def cmd_replay(args) -> int:
    manifest = RunManifest("replay", __version__, flags={"mode": args.mode})
    world = _load_world(args, manifest)
    manifest.add_input("trace", args.trace)
    events = load_trace(args.trace)

    outcomes = replay(events, world, args.mode)
    summary = summarize(outcomes)

    buf = io.StringIO()
    write_outcomes(outcomes, buf)
    out = Outputs(args.out, manifest)
    out.add("outcomes.csv", buf.getvalue())
    out.add("summary.json", _dump_json(_summary_dict(summary)))
    out.commit()
    print(_dump_json(_summary_dict(summary)), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    manifest = RunManifest("compare", __version__)
    world = _load_world(args, manifest)
    manifest.add_input("trace", args.trace)
    events = load_trace(args.trace)

    cmp = compare_modes(events, world)
    lines = ["mode,avg_read_time_per_read_s,n_reads"]
    lines.append(f"{CACHED},{cmp.avg_cached_s!r},{cmp.cached.n_events}")
    lines.append(f"{DIRECT},{cmp.avg_direct_s!r},{cmp.direct.n_events}")
    text = "\n".join(lines) + "\n"
    result = {
        "avg_cached_s": cmp.avg_cached_s,
        "avg_direct_s": cmp.avg_direct_s,
        "ratio_direct_over_cached": cmp.ratio_direct_over_cached,
        "average_basis": "per-read",
    }
    out = Outputs(args.out, manifest)
    out.add("compare.csv", text)
    out.add("compare.json", _dump_json(result))
    out.commit()
    print(text + f"ratio_direct_over_cached,{cmp.ratio_direct_over_cached!r}")
    return EXIT_OK


def cmd_workset(args) -> int:
    tiers = args.tiers.split(",") if args.tiers else None
    flags = {"granularity": args.granularity, "tiers": tiers}
    manifest = RunManifest("workset", __version__, flags=flags)
    manifest.add_input("trace", args.trace)
    manifest.add_input("catalog", args.catalog)
    events = load_trace(args.trace)
    catalog = load_catalog(args.catalog)

    if (args.window_start is None) != (args.window_end is None):
        raise ConfigError("--window-start and --window-end go together")
    if args.window_start is not None:
        flags.update(window_start=args.window_start, window_end=args.window_end)
        window = Window(args.window_start, args.window_end)
        reports = [working_set(events, catalog, window, args.granularity, tiers)]
    else:
        flags.update(span=args.span, step=args.step)
        manifest.notes["window_basis"] = "rolling windows ending at each report time; a month is 28 days"
        reports = rolling_working_set(events, catalog, args.span, args.step, args.granularity, tiers)

    buf = io.StringIO()
    write_reports(reports, buf)
    out = Outputs(args.out, manifest)
    out.add("workset.csv", buf.getvalue())
    out.commit()
    if args.out is None:
        print(buf.getvalue(), end="")
    return EXIT_OK


def _tb(nbytes: int) -> str:
    whole, rest = divmod(nbytes, TB)
    return str(whole) if not rest else format_number(nbytes / TB)


def cmd_capacity(args) -> int:
    manifest = RunManifest("capacity", __version__)
    manifest.add_input("hardware", args.hardware)
    with open(args.hardware, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.hardware}: invalid JSON: {exc.msg}") from None
    try:
        sites = [(s["site"], s["nodes"]) for s in doc["sites"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{args.hardware}: expected sites[].site and sites[].nodes: {exc}") from None

    lines = ["site,bytes,TB"]
    total = 0
    for name, groups in sites:
        nbytes = capacity_plan(groups)
        total += nbytes
        lines.append(f"{name},{nbytes},{_tb(nbytes)}")
    lines.append(f"total,{total},{_tb(total)}")
    text = "\n".join(lines) + "\n"

    out = Outputs(args.out, manifest)
    out.add("capacity.csv", text)
    out.commit()
    print(text, end="")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    manifest = RunManifest(
        "aggregate", __version__,
        flags={"interval": args.interval, "keep_last": args.keep_last},
        notes={"window_alignment": "windows start at the earliest record timestamp"},
    )
    manifest.add_input("jobs", args.jobs)
    manifest.add_input("trace", args.trace)
    manifest.add_input("catalog", args.catalog)
    jobs = load_jobs(args.jobs)
    accesses = load_trace(args.trace)
    catalog = load_catalog(args.catalog)

    windows = aggregate(jobs, accesses, catalog, args.interval)
    os.makedirs(args.out, exist_ok=True)
    n = persist(windows, os.path.join(args.out, "aggregates.jsonl"), args.keep_last)
    manifest.outputs = ["aggregates.jsonl"]
    write_atomic(os.path.join(args.out, "manifest.json"), _dump_json(asdict(manifest)))
    print(f"{n} windows written")
    return EXIT_OK


def _add_world_flags(p):
    p.add_argument("--world", required=True, help="world config JSON")
    p.add_argument("--trace", required=True, help="access trace CSV")
    p.add_argument("--topology", help="override the world's topology file")
    p.add_argument("--catalog", help="override the world's catalog file")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xcachesim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="replay a trace and summarize read times")
    _add_world_flags(p)
    p.add_argument("--mode", choices=(CACHED, DIRECT), default=CACHED)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("compare", help="average read time with and without the caches")
    _add_world_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("workset", help="working-set size report")
    p.add_argument("--trace", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--granularity", choices=(FILE, DATASET), default=FILE)
    p.add_argument("--window-start", type=int)
    p.add_argument("--window-end", type=int)
    p.add_argument("--span", type=int, default=FOUR_WEEKS_S, help="rolling window length, seconds")
    p.add_argument("--step", type=int, default=WEEK_S, help="rolling stride, seconds")
    p.add_argument("--tiers", help="comma-separated data tiers to include")
    p.add_argument("--out")
    p.set_defaults(func=cmd_workset)

    p = sub.add_parser("capacity", help="disk capacity of a hardware deployment")
    p.add_argument("--hardware", required=True, help="hardware spec JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("aggregate", help="windowed job/cache metrics")
    p.add_argument("--jobs", required=True, help="job records CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--interval", type=int, required=True, help="window length, seconds")
    p.add_argument("--keep-last", type=int, help="retain only the newest N windows")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are validation failures here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except XCacheSimError as exc:
        print(f"xcachesim {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"xcachesim {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
