"""Access-trace records and their CSV format (``t,site,lfn,bytes_read``)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import OrderError, ParseError, ValidationError

Number = Union[int, float]

TRACE_HEADER = ("t", "site", "lfn", "bytes_read")


@dataclass(frozen=True)
class AccessEvent:
    t: Number
    site: str
    lfn: str
    bytes_read: int

    def __post_init__(self):
        if self.bytes_read < 0:
            raise ValidationError(f"negative bytes_read for {self.lfn} at t={self.t}")


def parse_number(text: str) -> Number:
    """Integers stay integers so that timestamps round-trip exactly."""
    try:
        return int(text)
    except ValueError:
        return float(text)


def format_number(x: Number) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def check_sorted(records: Sequence, what: str = "trace") -> None:
    for i in range(1, len(records)):
        if records[i].t < records[i - 1].t:
            raise OrderError(
                f"{what} not time-ordered at record {i}: "
                f"t={records[i].t} follows t={records[i - 1].t}"
            )


def load_trace(path) -> list[AccessEvent]:
    events = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ParseError(f"bad header, expected {','.join(TRACE_HEADER)}", 1, path)
        for row in reader:
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise ParseError(f"expected 4 columns, got {len(row)}", reader.line_num, path)
            t, site, lfn, nbytes = row
            try:
                events.append(AccessEvent(parse_number(t), site, lfn, int(nbytes)))
            except ValueError as exc:
                raise ParseError(str(exc), reader.line_num, path) from None
    return events


def write_trace(events: Iterable[AccessEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for ev in events:
            writer.writerow((format_number(ev.t), ev.site, ev.lfn, ev.bytes_read))
