"""Random input builders and reference checks shared by the test modules."""

import random
from fractions import Fraction

import pytest

from xcachesim.cache import CacheConfig, CacheNode
from xcachesim.catalog import Catalog, CatalogEntry
from xcachesim.errors import DoubleFailureError, DuplicateAdmissionError, NoDiskError, UnstorableFileError
from xcachesim.federation import build_topology
from xcachesim.monicron import JobRecord
from xcachesim.simulate import DIRECT, HIT, MISS, UNAVAILABLE, LatencyModel, World
from xcachesim.trace import AccessEvent

TIERS = ("MINIAOD", "MINIAODSIM", "AOD")
SITES = ("T2_US_UCSD", "T2_US_Caltech")


def random_catalog(rng: random.Random, n_files=50, n_datasets=8, tiers=TIERS, max_size=10**6):
    datasets = [f"/Prim{i}/Proc{i % 3}/{rng.choice(tiers)}" for i in range(n_datasets)]
    entries = []
    for i in range(n_files):
        ds = rng.choice(datasets)
        entries.append(CatalogEntry(f"/store/f{i:05d}.root", ds, ds.rsplit("/", 1)[1], rng.randint(1, max_size)))
    return Catalog.from_entries(entries)


def random_trace(rng: random.Random, catalog, n_events=200, t_max=10**6, sites=SITES, full_reads=False):
    lfns = sorted(catalog.entries)
    times = sorted(rng.randint(0, t_max) for _ in range(n_events))
    events = []
    for t in times:
        lfn = rng.choice(lfns)
        size = catalog.entries[lfn].size_bytes
        nbytes = size if full_reads else rng.randint(0, size)
        events.append(AccessEvent(t, rng.choice(sites), lfn, nbytes))
    return events


def random_topology_records(rng: random.Random, n_nodes, lfns, p_server=0.6, max_holdings=5):
    """Node records of a random tree; the root is always a redirector."""
    records = [{"id": "r000", "kind": "redirector", "parent": None, "site": "global"}]
    redirectors = ["r000"]
    for i in range(1, n_nodes):
        parent = rng.choice(redirectors)
        if rng.random() < p_server:
            k = rng.randint(0, min(max_holdings, len(lfns)))
            records.append({
                "id": f"s{i:03d}", "kind": "server", "parent": parent,
                "site": rng.choice(SITES), "holdings": rng.sample(lfns, k),
            })
        else:
            nid = f"r{i:03d}"
            records.append({"id": nid, "kind": "redirector", "parent": parent, "site": rng.choice(SITES)})
            redirectors.append(nid)
    rng.shuffle(records)
    return records


# cache operation driver

def check_state(node):
    seen = {}
    for i, d in enumerate(node.disks):
        assert d.used_bytes == sum(f.size_bytes for f in d.resident.values())
        assert d.used_bytes <= d.capacity_bytes
        if d.failed:
            assert not d.resident
        for lfn in d.resident:
            assert lfn not in seen, f"{lfn} on disks {seen[lfn]} and {i}"
            seen[lfn] = i


def run_ops(seed, n_ops, check=True):
    """Drive a node with random ops; track expected residency from reported events."""
    rng = random.Random(seed)
    n_disks = rng.randint(1, 4)
    caps = [rng.randint(50, 500) for _ in range(n_disks)]
    high = rng.choice([0.8, 0.9, 0.95, 1.0])
    low = rng.choice([0.3, 0.5, 0.7])
    node = CacheNode(caps, high, low)
    expected = set()
    pool = [f"/f{i:03d}" for i in range(60)]
    sizes = {lfn: rng.randint(0, 200) for lfn in pool}
    for t in range(n_ops):
        op = rng.random()
        lfn = rng.choice(pool)
        if op < 0.45:
            hit = node.lookup(lfn, t)
            assert (hit is not None) == (lfn in expected)
        elif op < 0.85:
            if lfn in expected:
                with pytest.raises(DuplicateAdmissionError):
                    node.admit(lfn, sizes[lfn], t)
                continue
            before = len(node.evicted)
            try:
                node.admit(lfn, sizes[lfn], t)
                expected.add(lfn)
            except (UnstorableFileError, NoDiskError):
                pass
            expected -= {e for e, _ in node.evicted[before:]}
        elif op < 0.95:
            i = rng.randrange(n_disks)
            if node.disks[i].failed:
                continue
            d = node.disks[i]
            oracle = sorted(d.resident, key=lambda k: (d.resident[k].last_access, k))
            out = node.purge(i)
            assert out == oracle[:len(out)]
            bound = Fraction(str(low)) * d.capacity_bytes
            assert d.used_bytes <= bound or (
                len(d.resident) == 1 and next(iter(d.resident.values())).size_bytes > bound
            )
            expected -= set(out)
        else:
            i = rng.randrange(n_disks)
            if node.disks[i].failed:
                with pytest.raises(DoubleFailureError):
                    node.fail_disk(i)
                continue
            expected -= set(node.fail_disk(i))
        if check:
            check_state(node)
    return node


LAT = LatencyModel(lan_open_s=0.01, wan_open_per_hop_s=0.1, lan_bw_Bps=1.25e9, wan_bw_Bps=1.25e8)


def two_level_world(catalog, caps=(10**12,), hidden=()):
    """root -> {direct server, rX -> server, rY -> server}; ``hidden`` lfns are held nowhere."""
    lfns = [l for l in sorted(catalog.entries) if l not in hidden]
    top, nested = lfns[::3], [l for i, l in enumerate(lfns) if i % 3]
    records = [
        {"id": "root", "kind": "redirector", "parent": None, "site": "g"},
        {"id": "rX", "kind": "redirector", "parent": "root", "site": "x"},
        {"id": "rY", "kind": "redirector", "parent": "root", "site": "y"},
        {"id": "s0", "kind": "server", "parent": "root", "site": "g", "holdings": top},
        {"id": "sX", "kind": "server", "parent": "rX", "site": "x", "holdings": nested[::2]},
        {"id": "sY", "kind": "server", "parent": "rY", "site": "y", "holdings": nested[1::2]},
    ]
    caches = {s: CacheConfig(s, tuple(caps)) for s in SITES}
    return World(build_topology(records), catalog, caches, LAT)


def oracle_read_times(events, world, mode):
    """Straight-line formula replay for two_level_world with caches that never evict."""
    top = world.topology.nodes["s0"].holdings
    held = set().union(*(n.holdings for n in world.topology.servers()))
    lat = world.latency
    fetched = set()
    out = []
    for ev in events:
        if ev.lfn not in held:
            out.append((UNAVAILABLE, lat.wan_open_per_hop_s * 2))
            continue
        depth = 1 if ev.lfn in top else 2
        if mode == DIRECT:
            out.append((MISS, lat.wan_open_per_hop_s * depth + ev.bytes_read / lat.wan_bw_Bps))
        elif (ev.site, ev.lfn) in fetched:
            out.append((HIT, lat.lan_open_s + ev.bytes_read / lat.lan_bw_Bps))
        else:
            fetched.add((ev.site, ev.lfn))
            size = world.catalog.entries[ev.lfn].size_bytes
            out.append((MISS, lat.lan_open_s + lat.wan_open_per_hop_s * depth
                        + size / lat.wan_bw_Bps + ev.bytes_read / lat.lan_bw_Bps))
    return out


def random_jobs(rng, n, t_max):
    out = []
    for t in sorted(rng.randint(0, t_max) for _ in range(n)):
        wall = rng.uniform(0, 1000)
        out.append(JobRecord(t, "x", rng.random() < 0.8, rng.randint(0, 10**9),
                             rng.choice([0.0, rng.uniform(0, 500)]), rng.uniform(0, wall), wall))
    return out


def recompute(jobs, accesses, catalog, start, end):
    """Filter-and-compute reference for one window."""
    js = [j for j in jobs if start <= j.t < end]
    acc = [a for a in accesses if start <= a.t < end]
    n_failed = len([j for j in js if not j.success])
    rt = sum(j.read_time_s for j in js)
    wall = sum(j.wall_time_s for j in js)
    lfns = set(a.lfn for a in acc)
    return dict(
        failure_rate=n_failed / len(js) if js else 0.0,
        avg_read_speed_Bps=sum(j.bytes_read for j in js) / rt if rt else 0.0,
        cpu_efficiency=sum(j.cpu_time_s for j in js) / wall if wall else 0.0,
        total_data_delivered_bytes=sum(a.bytes_read for a in acc),
        unique_reads=len(lfns),
        working_set_bytes=sum(catalog.entries[l].size_bytes for l in lfns),
        n_jobs=len(js),
        n_accesses=len(acc),
    )
