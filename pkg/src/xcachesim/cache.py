"""A caching proxy node backed by independent (JBOD) disks.

Whole files are cached.  Each disk is purged on its own: when an admission
would push a disk above its high watermark, least-recently-used files are
evicted until usage drops to the low watermark.  Losing a disk loses only the
files on that disk; they come back through ordinary misses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DoubleFailureError,
    DuplicateAdmissionError,
    FailedDiskError,
    NoDiskError,
    UnknownDiskError,
    UnstorableFileError,
    ValidationError,
)

DEFAULT_HIGH_WATERMARK = 0.95
DEFAULT_LOW_WATERMARK = 0.90


def _exact(fraction) -> Fraction:
    # str() keeps 0.9 as 9/10 instead of the nearest binary double
    return Fraction(str(fraction)) if isinstance(fraction, float) else Fraction(fraction)


@dataclass
class CachedFile:
    size_bytes: int
    last_access: float


@dataclass
class Disk:
    capacity_bytes: int
    resident: dict = field(default_factory=dict)
    failed: bool = False
    used_bytes: int = 0

    def __post_init__(self):
        if self.capacity_bytes <= 0:
            raise ValidationError(f"disk capacity must be positive, got {self.capacity_bytes}")

    @property
    def free_bytes(self) -> int:
        return self.capacity_bytes - self.used_bytes

    def _add(self, lfn, size, now):
        self.resident[lfn] = CachedFile(size, now)
        self.used_bytes += size

    def _remove(self, lfn) -> CachedFile:
        f = self.resident.pop(lfn)
        self.used_bytes -= f.size_bytes
        return f

    def _lru_order(self) -> list:
        return sorted(self.resident, key=lambda k: (self.resident[k].last_access, k))


def used_fraction(disk: Disk) -> float:
    return disk.used_bytes / disk.capacity_bytes


def purge(disk: Disk, low_watermark) -> list:
    """Evict LRU files (ties by lfn) until usage is at or below the low watermark."""
    if disk.failed:
        raise FailedDiskError("cannot purge a failed disk")
    limit = _exact(low_watermark) * disk.capacity_bytes
    evicted = []
    if disk.used_bytes <= limit:
        return evicted
    for lfn in disk._lru_order():
        disk._remove(lfn)
        evicted.append(lfn)
        if disk.used_bytes <= limit:
            break
    return evicted


class CacheNode:
    def __init__(
        self,
        capacities: Sequence[int],
        high_watermark=DEFAULT_HIGH_WATERMARK,
        low_watermark=DEFAULT_LOW_WATERMARK,
        site: str = "",
    ):
        if not capacities:
            raise ValidationError("a cache node needs at least one disk")
        high, low = _exact(high_watermark), _exact(low_watermark)
        if not (0 < low < high <= 1):
            raise ValidationError(
                f"watermarks must satisfy 0 < low < high <= 1, got low={low_watermark} high={high_watermark}"
            )
        self.disks = [Disk(int(c)) for c in capacities]
        self.high_watermark = high_watermark
        self.low_watermark = low_watermark
        self._high = high
        self._low = low
        self.site = site
        self._where: dict[str, int] = {}
        self.evicted: list = []  # (lfn, disk index) in eviction order

    def __contains__(self, lfn):
        return lfn in self._where

    def disk_of(self, lfn) -> Optional[int]:
        return self._where.get(lfn)

    def lookup(self, lfn, now) -> Optional[int]:
        """Disk index on a hit (refreshing recency), ``None`` on a miss."""
        idx = self._where.get(lfn)
        if idx is None:
            return None
        self.disks[idx].resident[lfn].last_access = now
        return idx

    def _check_index(self, index):
        if not (0 <= index < len(self.disks)):
            raise UnknownDiskError(f"no disk {index} (node has {len(self.disks)})")

    def purge(self, index: int) -> list:
        self._check_index(index)
        out = purge(self.disks[index], self._low)
        self._forget(out, index)
        return out

    def _forget(self, lfns, index):
        for lfn in lfns:
            del self._where[lfn]
            self.evicted.append((lfn, index))

    def admit(self, lfn, size_bytes: int, now) -> int:
        if lfn in self._where:
            raise DuplicateAdmissionError(f"{lfn} already resident on disk {self._where[lfn]}")
        if size_bytes < 0:
            raise ValidationError(f"negative size for {lfn}")
        live = [i for i, d in enumerate(self.disks) if not d.failed]
        if not live:
            raise NoDiskError(f"all disks of cache {self.site or '?'} have failed")
        fits = [i for i in live if self.disks[i].capacity_bytes >= size_bytes]
        if not fits:
            raise UnstorableFileError(
                f"{lfn} ({size_bytes} bytes) exceeds every live disk of cache {self.site or '?'}"
            )
        idx = max(fits, key=lambda i: (self.disks[i].free_bytes, -i))
        disk = self.disks[idx]

        if disk.used_bytes + size_bytes > self._high * disk.capacity_bytes:
            self._forget(purge(disk, self._low), idx)
        # a large newcomer can still overflow after the watermark purge
        if disk.used_bytes + size_bytes > disk.capacity_bytes:
            extra = []
            for victim in disk._lru_order():
                disk._remove(victim)
                extra.append(victim)
                if disk.used_bytes + size_bytes <= disk.capacity_bytes:
                    break
            self._forget(extra, idx)

        disk._add(lfn, size_bytes, now)
        self._where[lfn] = idx
        return idx

    def fail_disk(self, index: int) -> list:
        self._check_index(index)
        disk = self.disks[index]
        if disk.failed:
            raise DoubleFailureError(f"disk {index} already failed")
        lost = sorted(disk.resident)
        for lfn in lost:
            disk._remove(lfn)
            del self._where[lfn]
        disk.failed = True
        return lost

    def resident_bytes(self) -> int:
        return sum(d.used_bytes for d in self.disks)

    def snapshot(self) -> tuple:
        """Hashable, order-stable view of the full state."""
        return tuple(
            (
                d.capacity_bytes,
                d.failed,
                d.used_bytes,
                tuple(sorted((k, f.size_bytes, f.last_access) for k, f in d.resident.items())),
            )
            for d in self.disks
        )


@dataclass(frozen=True)
class CacheConfig:
    site: str
    disks: tuple
    high_watermark: float = DEFAULT_HIGH_WATERMARK
    low_watermark: float = DEFAULT_LOW_WATERMARK

    @classmethod
    def from_dict(cls, d) -> "CacheConfig":
        try:
            return cls(
                site=d["site"],
                disks=tuple(int(c) for c in d["disks"]),
                high_watermark=d.get("high_watermark", DEFAULT_HIGH_WATERMARK),
                low_watermark=d.get("low_watermark", DEFAULT_LOW_WATERMARK),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad cache config {d!r}: {exc}") from None

    def build(self) -> CacheNode:
        return CacheNode(self.disks, self.high_watermark, self.low_watermark, self.site)
