"""Fixed-interval aggregation of job and cache-access streams.

Windows are ``[origin + k*interval, origin + (k+1)*interval)`` where origin is
the earliest timestamp across both streams.  Every window up to the last
record is emitted, including empty ones.  Ratios with a zero denominator are
reported as 0 and listed in ``undefined_flags``.
"""

from __future__ import annotations

import bisect
import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .analytics import Window, working_set_file
from .catalog import Catalog
from .errors import ParseError, ValidationError
from .trace import check_sorted, parse_number

JOB_HEADER = ("t", "site", "success", "bytes_read", "read_time_s", "cpu_time_s", "wall_time_s")

FAILURE_RATE = "failure_rate"
AVG_READ_SPEED = "avg_read_speed_Bps"
CPU_EFFICIENCY = "cpu_efficiency"


@dataclass(frozen=True)
class JobRecord:
    t: float
    site: str
    success: bool
    bytes_read: int
    read_time_s: float
    cpu_time_s: float
    wall_time_s: float

    def __post_init__(self):
        if not (self.wall_time_s >= self.cpu_time_s >= 0):
            raise ValidationError(f"job at t={self.t}: need wall_time_s >= cpu_time_s >= 0")
        if self.read_time_s < 0 or self.bytes_read < 0:
            raise ValidationError(f"job at t={self.t}: negative read accounting")


@dataclass(frozen=True)
class AggregateWindow:
    window: Window
    failure_rate: float
    avg_read_speed_Bps: float
    cpu_efficiency: float
    total_data_delivered_bytes: int
    unique_reads: int
    working_set_bytes: int
    n_jobs: int
    n_accesses: int
    undefined_flags: tuple = field(default=())

    def to_json(self) -> dict:
        d = asdict(self)
        d["undefined_flags"] = list(self.undefined_flags)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AggregateWindow":
        w = d["window"]
        return cls(
            window=Window(w["start"], w["end"]),
            failure_rate=d["failure_rate"],
            avg_read_speed_Bps=d["avg_read_speed_Bps"],
            cpu_efficiency=d["cpu_efficiency"],
            total_data_delivered_bytes=d["total_data_delivered_bytes"],
            unique_reads=d["unique_reads"],
            working_set_bytes=d["working_set_bytes"],
            n_jobs=d["n_jobs"],
            n_accesses=d["n_accesses"],
            undefined_flags=tuple(d.get("undefined_flags", ())),
        )


def window_metrics(window: Window, jobs, accesses, catalog: Catalog) -> AggregateWindow:
    """Metrics for records already known to fall inside ``window``."""
    undefined = []
    n_jobs = len(jobs)
    failed = sum(1 for j in jobs if not j.success)
    if n_jobs:
        failure_rate = failed / n_jobs
    else:
        failure_rate = 0.0
        undefined.append(FAILURE_RATE)

    read_time = sum(j.read_time_s for j in jobs)
    if read_time > 0:
        speed = sum(j.bytes_read for j in jobs) / read_time
    else:
        speed = 0.0
        undefined.append(AVG_READ_SPEED)

    wall = sum(j.wall_time_s for j in jobs)
    if wall > 0:
        efficiency = sum(j.cpu_time_s for j in jobs) / wall
    else:
        efficiency = 0.0
        undefined.append(CPU_EFFICIENCY)

    ws = working_set_file(accesses, catalog, window)
    return AggregateWindow(
        window=window,
        failure_rate=failure_rate,
        avg_read_speed_Bps=speed,
        cpu_efficiency=efficiency,
        total_data_delivered_bytes=sum(a.bytes_read for a in accesses),
        unique_reads=len({a.lfn for a in accesses}),
        working_set_bytes=ws.bytes,
        n_jobs=n_jobs,
        n_accesses=len(accesses),
        undefined_flags=tuple(undefined),
    )


def aggregate(
    jobs: Sequence[JobRecord],
    accesses: Sequence,
    catalog: Catalog,
    interval_s: float,
) -> list[AggregateWindow]:
    if not interval_s > 0:
        raise ValidationError(f"interval must be positive, got {interval_s}")
    check_sorted(jobs, "job stream")
    check_sorted(accesses, "access stream")
    if not jobs and not accesses:
        return []

    heads = [s[0].t for s in (jobs, accesses) if s]
    tails = [s[-1].t for s in (jobs, accesses) if s]
    origin, last = min(heads), max(tails)

    bounds = [origin]
    while bounds[-1] <= last:
        bounds.append(origin + len(bounds) * interval_s)
    n_windows = len(bounds) - 1

    job_bins = [[] for _ in range(n_windows)]
    access_bins = [[] for _ in range(n_windows)]
    for records, bins in ((jobs, job_bins), (accesses, access_bins)):
        for r in records:
            bins[bisect.bisect_right(bounds, r.t) - 1].append(r)

    return [
        window_metrics(Window(bounds[k], bounds[k + 1]), job_bins[k], access_bins[k], catalog)
        for k in range(n_windows)
    ]


def persist(aggregates: Sequence[AggregateWindow], path, keep_last_n_windows: Optional[int] = None) -> int:
    """Write JSON Lines atomically; returns the number of records written."""
    rows = list(aggregates)
    if keep_last_n_windows is not None:
        if keep_last_n_windows < 0:
            raise ValidationError("keep_last_n_windows must be >= 0")
        rows = rows[len(rows) - keep_last_n_windows:] if keep_last_n_windows else []
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".monicron-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for agg in rows:
                fh.write(json.dumps(agg.to_json(), sort_keys=True) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(rows)


def load(path) -> list[AggregateWindow]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(AggregateWindow.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as exc:
                raise ParseError(f"bad aggregate record: {exc}", lineno, path) from None
    return out


def load_jobs(path) -> list[JobRecord]:
    jobs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != JOB_HEADER:
            raise ParseError(f"bad header, expected {','.join(JOB_HEADER)}", 1, path)
        for row in reader:
            if not row:
                continue
            if len(row) != len(JOB_HEADER):
                raise ParseError(f"expected {len(JOB_HEADER)} columns, got {len(row)}", reader.line_num, path)
            t, site, success, nbytes, read_s, cpu_s, wall_s = row
            if success.lower() not in ("0", "1", "true", "false"):
                raise ParseError(f"success must be a boolean, got {success!r}", reader.line_num, path)
            try:
                jobs.append(JobRecord(
                    parse_number(t), site, success.lower() in ("1", "true"), int(nbytes),
                    float(read_s), float(cpu_s), float(wall_s),
                ))
            except ValueError as exc:
                raise ParseError(str(exc), reader.line_num, path) from None
    return jobs
