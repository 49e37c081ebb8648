"""Trace replay against a federation, with or without site caches.

Time is virtual: event timestamps order the replay and stamp cache recency.
Read times come from a simple LAN/WAN latency model:

cached hit      lan_open + bytes_read / lan_bw
cached miss     lan_open + hop * depth + file_size / wan_bw + bytes_read / lan_bw
direct read     hop * depth + bytes_read / wan_bw
unavailable     hop * depth

``depth`` is the number of redirector levels the lookup consulted.  On a miss
the cache fetches the whole file before serving the client.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .cache import CacheConfig
from .catalog import Catalog, load_catalog
from .errors import (
    ComparisonUndefinedError,
    ConfigError,
    NoDiskError,
    UnstorableFileError,
    ValidationError,
)
from .federation import Topology, load_topology, resolve
from .trace import AccessEvent, check_sorted, format_number

CACHED = "cached"
DIRECT = "direct"
HIT = "hit"
MISS = "miss"
UNAVAILABLE = "unavailable"

OUTCOME_HEADER = (
    "t", "site", "lfn", "bytes_read", "mode", "result", "read_time_s", "bytes_from_wan", "server",
)


@dataclass(frozen=True)
class LatencyModel:
    lan_open_s: float
    wan_open_per_hop_s: float
    lan_bw_Bps: float
    wan_bw_Bps: float

    def __post_init__(self):
        for name in ("lan_open_s", "wan_open_per_hop_s", "lan_bw_Bps", "wan_bw_Bps"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"latency model {name} must be > 0")
        if self.wan_bw_Bps > self.lan_bw_Bps:
            raise ValidationError("WAN bandwidth may not exceed LAN bandwidth")


@dataclass(frozen=True)
class DiskFailure:
    t: float
    site: str
    disk: int


@dataclass(frozen=True)
class World:
    topology: Topology
    catalog: Catalog
    caches: Mapping[str, CacheConfig]
    latency: LatencyModel
    failures: tuple = ()


@dataclass(frozen=True)
class EventOutcome:
    event: AccessEvent
    mode: str
    result: str
    read_time_s: float
    bytes_from_wan: int
    server: Optional[str] = None


@dataclass(frozen=True)
class Summary:
    avg_read_time_s: float
    total_bytes_delivered: int
    total_bytes_from_wan: int
    hit_rate: float
    failure_rate: float
    n_events: int = 0
    hits: int = 0
    misses: int = 0
    unavailable: int = 0


@dataclass(frozen=True)
class Comparison:
    avg_cached_s: float
    avg_direct_s: float
    ratio_direct_over_cached: float
    cached: Summary = field(repr=False, default=None)
    direct: Summary = field(repr=False, default=None)


def load_world(path) -> World:
    """Read a world config JSON; relative file paths resolve against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from None
    try:
        topo_path = os.path.join(base, doc["topology"])
        cat_path = os.path.join(base, doc["catalog"])
        caches = [CacheConfig.from_dict(c) for c in doc.get("caches", [])]
        latency = LatencyModel(**doc["latency"])
        failures = tuple(
            DiskFailure(f["t"], f["site"], int(f["disk"])) for f in doc.get("failures", [])
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: bad world config: {exc}") from None
    by_site = {}
    for c in caches:
        if c.site in by_site:
            raise ConfigError(f"{path}: two caches for site {c.site}")
        by_site[c.site] = c
    return World(load_topology(topo_path), load_catalog(cat_path), by_site, latency, failures)


def replay(events: Sequence[AccessEvent], world: World, mode: str = CACHED) -> list[EventOutcome]:
    if mode not in (CACHED, DIRECT):
        raise ValidationError(f"unknown mode {mode!r}")
    check_sorted(events)
    lat = world.latency
    topo = world.topology
    catalog = world.catalog

    nodes = {}
    failures = []
    if mode == CACHED:
        nodes = {site: cfg.build() for site, cfg in world.caches.items()}
        for ev in events:
            if ev.site not in nodes:
                raise ConfigError(f"no cache configured for site {ev.site!r}")
        failures = sorted(world.failures, key=lambda f: f.t)
        for f in failures:
            if f.site not in nodes:
                raise ConfigError(f"disk failure scheduled for unknown site {f.site!r}")

    lookups = {}
    outcomes = []
    pending = 0
    for ev in events:
        while pending < len(failures) and failures[pending].t <= ev.t:
            f = failures[pending]
            nodes[f.site].fail_disk(f.disk)
            pending += 1

        if ev.lfn in catalog and ev.bytes_read > catalog.size_of(ev.lfn):
            raise ValidationError(
                f"t={ev.t}: bytes_read {ev.bytes_read} exceeds size of {ev.lfn}"
            )

        if mode == CACHED:
            node = nodes[ev.site]
            if node.lookup(ev.lfn, ev.t) is not None:
                outcomes.append(EventOutcome(
                    ev, mode, HIT, lat.lan_open_s + ev.bytes_read / lat.lan_bw_Bps, 0,
                ))
                continue

        trace = lookups.get(ev.lfn)
        if trace is None:
            trace = lookups[ev.lfn] = resolve(topo, topo.root, ev.lfn)
        open_s = lat.wan_open_per_hop_s * trace.depth_queried
        if not trace.found:
            outcomes.append(EventOutcome(ev, mode, UNAVAILABLE, open_s, 0))
            continue

        if mode == DIRECT:
            outcomes.append(EventOutcome(
                ev, mode, MISS, open_s + ev.bytes_read / lat.wan_bw_Bps, ev.bytes_read, trace.server,
            ))
            continue

        size = catalog.size_of(ev.lfn)
        try:
            node.admit(ev.lfn, size, ev.t)
        except (UnstorableFileError, NoDiskError):
            pass  # served pass-through, not stored
        read_time = lat.lan_open_s + open_s + size / lat.wan_bw_Bps + ev.bytes_read / lat.lan_bw_Bps
        outcomes.append(EventOutcome(ev, mode, MISS, read_time, size, trace.server))
    return outcomes


def summarize(outcomes: Sequence[EventOutcome]) -> Summary:
    if not outcomes:
        return Summary(0.0, 0, 0, 0.0, 0.0)
    hits = sum(1 for o in outcomes if o.result == HIT)
    misses = sum(1 for o in outcomes if o.result == MISS)
    unavailable = len(outcomes) - hits - misses
    found = hits + misses
    return Summary(
        avg_read_time_s=sum(o.read_time_s for o in outcomes) / len(outcomes),
        total_bytes_delivered=sum(o.event.bytes_read for o in outcomes if o.result != UNAVAILABLE),
        total_bytes_from_wan=sum(o.bytes_from_wan for o in outcomes),
        hit_rate=hits / found if found else 0.0,
        failure_rate=unavailable / len(outcomes),
        n_events=len(outcomes),
        hits=hits,
        misses=misses,
        unavailable=unavailable,
    )


def compare_modes(events: Sequence[AccessEvent], world: World) -> Comparison:
    if not events:
        raise ComparisonUndefinedError("cannot compare modes on an empty trace")
    cached = summarize(replay(events, world, CACHED))
    direct = summarize(replay(events, world, DIRECT))
    if cached.avg_read_time_s <= 0:
        raise ComparisonUndefinedError("average cached read time is zero")
    return Comparison(
        cached.avg_read_time_s,
        direct.avg_read_time_s,
        direct.avg_read_time_s / cached.avg_read_time_s,
        cached,
        direct,
    )


def write_outcomes(outcomes: Sequence[EventOutcome], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(OUTCOME_HEADER)
    for o in outcomes:
        ev = o.event
        writer.writerow((
            format_number(ev.t), ev.site, ev.lfn, ev.bytes_read, o.mode, o.result,
            repr(o.read_time_s), o.bytes_from_wan, o.server or "",
        ))
