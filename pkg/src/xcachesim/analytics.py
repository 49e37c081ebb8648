"""Working-set metrics and hardware capacity arithmetic.

The working set of a window is the total size of the distinct files read in
it.  At dataset granularity, touching any file of a dataset charges the size
of the whole dataset, which is what a dataset-level access log forces on you.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .catalog import TB, Catalog
from .errors import ValidationError
from .trace import format_number

WEEK_S = 7 * 24 * 3600
FOUR_WEEKS_S = 4 * WEEK_S  # stands in for a month throughout

FILE = "file"
DATASET = "dataset"

REPORT_HEADER = ("window_start", "window_end", "granularity", "bytes", "unique_count")


@dataclass(frozen=True)
class Window:
    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f"window start {self.start} must precede end {self.end}")

    def __contains__(self, t):
        return self.start <= t < self.end


@dataclass(frozen=True)
class WorkingSetReport:
    window: Window
    granularity: str
    bytes: int
    unique_count: int

    def row(self) -> tuple:
        return (
            format_number(self.window.start), format_number(self.window.end),
            self.granularity, self.bytes, self.unique_count,
        )


def _touched_lfns(events, catalog: Catalog, window: Window, tiers) -> set:
    lfns = set()
    for ev in events:
        # resolve first so unknown files fail even outside the window
        entry = catalog[ev.lfn]
        if ev.t in window and (tiers is None or entry.tier in tiers):
            lfns.add(ev.lfn)
    return lfns


def working_set_file(events, catalog: Catalog, window: Window, tiers=None) -> WorkingSetReport:
    lfns = _touched_lfns(events, catalog, window, tiers)
    nbytes = sum(catalog.entries[lfn].size_bytes for lfn in lfns)
    return WorkingSetReport(window, FILE, nbytes, len(lfns))


def working_set_dataset(events, catalog: Catalog, window: Window, tiers=None) -> WorkingSetReport:
    datasets = {catalog.entries[lfn].dataset for lfn in _touched_lfns(events, catalog, window, tiers)}
    nbytes = sum(catalog.dataset_sizes[d] for d in datasets)
    return WorkingSetReport(window, DATASET, nbytes, len(datasets))


_BY_GRANULARITY = {FILE: working_set_file, DATASET: working_set_dataset}


def working_set(events, catalog, window, granularity=FILE, tiers=None) -> WorkingSetReport:
    try:
        fn = _BY_GRANULARITY[granularity]
    except KeyError:
        raise ValidationError(f"granularity must be 'file' or 'dataset', got {granularity!r}") from None
    return fn(events, catalog, window, tiers)


def rolling_working_set(
    events: Sequence,
    catalog: Catalog,
    span_s: float = FOUR_WEEKS_S,
    step_s: float = WEEK_S,
    granularity: str = FILE,
    tiers: Optional[Iterable[str]] = None,
) -> list[WorkingSetReport]:
    """One report per time T, covering the ``span_s`` seconds before T.

    T starts at the first event time plus ``span_s`` and advances by ``step_s``
    while it does not pass the last event time.
    """
    if not span_s > 0 or not step_s > 0:
        raise ValidationError("span and step must be positive")
    if granularity not in _BY_GRANULARITY:
        raise ValidationError(f"granularity must be 'file' or 'dataset', got {granularity!r}")
    if not events:
        return []
    tiers = None if tiers is None else set(tiers)
    ordered = sorted(events, key=lambda ev: ev.t)
    for ev in ordered:
        catalog[ev.lfn]
    first, last = ordered[0].t, ordered[-1].t

    times = [ev.t for ev in ordered]
    reports = []
    k = 0
    while True:
        end = first + span_s + k * step_s
        if end > last:
            break
        window = Window(end - span_s, end)
        chunk = ordered[bisect.bisect_left(times, window.start):bisect.bisect_left(times, end)]
        reports.append(working_set(chunk, catalog, window, granularity, tiers))
        k += 1
    return reports


def write_reports(reports: Iterable[WorkingSetReport], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in reports:
        writer.writerow(r.row())


@dataclass(frozen=True)
class NodeGroup:
    count: int
    disks_per_node: int
    disk_tb: float

    @classmethod
    def from_dict(cls, d: Mapping) -> "NodeGroup":
        try:
            return cls(d["count"], d["disks_per_node"], d["disk_tb"])
        except KeyError as exc:
            raise ValidationError(f"node group {dict(d)!r} lacks field {exc}") from None


def capacity_plan(nodes: Iterable) -> int:
    """Total raw bytes of a hardware deployment (decimal TB)."""
    total = Fraction(0)
    for group in nodes:
        if isinstance(group, Mapping):
            group = NodeGroup.from_dict(group)
        fields = (group.count, group.disks_per_node, group.disk_tb)
        for name, value in zip(("count", "disks_per_node", "disk_tb"), fields):
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise ValidationError(f"{name} must be a number, got {value!r}")
        count, per_node = group.count, group.disks_per_node
        if not isinstance(count, int) or not isinstance(per_node, int):
            raise ValidationError("count and disks_per_node must be integers")
        disk_tb = Fraction(str(group.disk_tb))
        if count <= 0 or per_node <= 0 or disk_tb <= 0:
            raise ValidationError(f"node group fields must be positive: {group}")
        total += count * per_node * disk_tb * TB
    if total.denominator != 1:
        raise ValidationError(f"capacity {float(total)} is not a whole number of bytes")
    return int(total)
