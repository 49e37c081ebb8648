"""File and dataset namespace.

Dataset names follow ``/primary/processed/TIER``; the data tier is the third
component.  All sizes are integer bytes in decimal SI units.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import DuplicateKeyError, FormatError, ParseError, UnknownFileError

TB = 10**12
PB = 10**15

CATALOG_HEADER = ("lfn", "dataset", "tier", "size_bytes")

MINIAOD = "MINIAOD"
MINIAODSIM = "MINIAODSIM"


def tier_of(dataset_name: str) -> str:
    parts = dataset_name.split("/")
    # leading slash yields an empty first element
    if len(parts) != 4 or parts[0] != "" or not all(parts[1:]):
        raise FormatError(
            f"dataset name {dataset_name!r} is not of the form /primary/processed/TIER"
        )
    return parts[3]


@dataclass(frozen=True)
class CatalogEntry:
    lfn: str
    dataset: str
    tier: str
    size_bytes: int

    def __post_init__(self):
        if self.size_bytes < 0:
            raise FormatError(f"{self.lfn}: negative size {self.size_bytes}")
        parsed = tier_of(self.dataset)
        if parsed != self.tier:
            raise FormatError(
                f"{self.lfn}: tier {self.tier!r} does not match dataset {self.dataset!r}"
            )


@dataclass(frozen=True)
class Catalog:
    """Immutable lfn -> entry mapping with precomputed dataset totals."""

    entries: Mapping[str, CatalogEntry]
    dataset_sizes: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        sizes: dict[str, int] = {}
        for entry in self.entries.values():
            sizes[entry.dataset] = sizes.get(entry.dataset, 0) + entry.size_bytes
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        object.__setattr__(self, "dataset_sizes", MappingProxyType(sizes))

    @classmethod
    def from_entries(cls, entries: Iterable[CatalogEntry]) -> "Catalog":
        table: dict[str, CatalogEntry] = {}
        for entry in entries:
            if entry.lfn in table:
                raise DuplicateKeyError(f"duplicate lfn: {entry.lfn}")
            table[entry.lfn] = entry
        return cls(table)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, lfn):
        return lfn in self.entries

    def __getitem__(self, lfn) -> CatalogEntry:
        try:
            return self.entries[lfn]
        except KeyError:
            raise UnknownFileError(lfn) from None

    def size_of(self, lfn: str) -> int:
        return self[lfn].size_bytes


def _parse_row(row: list[str], lineno: int, path) -> CatalogEntry:
    if len(row) != len(CATALOG_HEADER):
        raise ParseError(f"expected {len(CATALOG_HEADER)} columns, got {len(row)}", lineno, path)
    lfn, dataset, tier, size_text = row
    try:
        size = int(size_text)
    except ValueError:
        raise ParseError(f"size_bytes is not an integer: {size_text!r}", lineno, path) from None
    if size < 0:
        raise ParseError(f"negative size_bytes: {size}", lineno, path)
    try:
        return CatalogEntry(lfn, dataset, tier, size)
    except FormatError as exc:
        raise ParseError(str(exc), lineno, path) from None


def load_catalog(path) -> Catalog:
    entries: dict[str, CatalogEntry] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CATALOG_HEADER:
            raise ParseError(f"bad header, expected {','.join(CATALOG_HEADER)}", 1, path)
        for row in reader:
            if not row:
                continue
            entry = _parse_row(row, reader.line_num, path)
            if entry.lfn in entries:
                raise DuplicateKeyError(f"{path}:{reader.line_num}: duplicate lfn {entry.lfn}")
            entries[entry.lfn] = entry
    return Catalog(entries)


def write_catalog(catalog: Catalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CATALOG_HEADER)
        for e in catalog.entries.values():
            writer.writerow((e.lfn, e.dataset, e.tier, e.size_bytes))


def total_tier_size(catalog: Catalog, tiers: Iterable[str]) -> int:
    wanted = set(tiers)
    return sum(e.size_bytes for e in catalog.entries.values() if e.tier in wanted)


def job_tier_share(events, catalog: Catalog) -> dict[str, float]:
    """Fraction of access events landing on each data tier."""
    counts: Counter[str] = Counter()
    for ev in events:
        counts[catalog[ev.lfn].tier] += 1
    total = sum(counts.values())
    return {tier: n / total for tier, n in sorted(counts.items())}
