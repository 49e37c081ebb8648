import random

import pytest
from hypothesis import given, settings, strategies as st

from xcachesim.analytics import Window, working_set_file
from xcachesim.errors import OrderError, ParseError, ValidationError
from xcachesim.monicron import (
    AggregateWindow,
    JobRecord,
    aggregate,
    load,
    load_jobs,
    persist,
)
from xcachesim.trace import AccessEvent

from gen import random_catalog, random_jobs, random_trace, recompute


def job(t, ok=True, nbytes=100, read=1.0, cpu=1.0, wall=2.0):
    return JobRecord(t, "T2_US_UCSD", ok, nbytes, read, cpu, wall)


def test_failure_rate_half():
    cat = random_catalog(random.Random(0))
    [w] = aggregate([job(0, True), job(10, False)], [], cat, 3600)
    assert w.failure_rate == 0.5
    assert w.cpu_efficiency == 0.5
    assert w.avg_read_speed_Bps == 100.0
    assert w.undefined_flags == ()


def test_gap_window_is_all_zero():
    cat = random_catalog(random.Random(0))
    ws = aggregate([job(0), job(250)], [], cat, 100)
    assert len(ws) == 3
    gap = ws[1]
    assert gap.window == Window(100, 200)
    assert (gap.failure_rate, gap.avg_read_speed_Bps, gap.cpu_efficiency) == (0, 0, 0)
    assert (gap.n_jobs, gap.n_accesses, gap.total_data_delivered_bytes, gap.working_set_bytes) == (0, 0, 0, 0)
    assert set(gap.undefined_flags) == {"failure_rate", "avg_read_speed_Bps", "cpu_efficiency"}


def test_origin_is_earliest_across_streams():
    cat = random_catalog(random.Random(0))
    lfn = sorted(cat.entries)[0]
    ws = aggregate([job(150)], [AccessEvent(30, "x", lfn, 1)], cat, 100)
    assert [w.window for w in ws] == [Window(30, 130), Window(130, 230)]


def test_errors():
    cat = random_catalog(random.Random(0))
    with pytest.raises(ValidationError):
        aggregate([], [], cat, -5)
    with pytest.raises(OrderError):
        aggregate([job(5), job(1)], [], cat, 10)
    assert aggregate([], [], cat, 10) == []


def test_job_record_invariants():
    with pytest.raises(ValidationError):
        job(0, cpu=3.0, wall=2.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_windows_match_recomputation(seed):
    rng = random.Random(seed)
    cat = random_catalog(rng, n_files=60)
    day = 24 * 3600
    jobs = random_jobs(rng, rng.randint(0, 200), day)
    accesses = random_trace(rng, cat, n_events=rng.randint(0, 300), t_max=day)
    ws = aggregate(jobs, accesses, cat, 3600)
    if not jobs and not accesses:
        assert ws == []
        return
    for w in ws:
        got = {k: getattr(w, k) for k in recompute(jobs, accesses, cat, w.window.start, w.window.end)}
        assert got == recompute(jobs, accesses, cat, w.window.start, w.window.end)
        assert w.unique_reads == working_set_file(accesses, cat, w.window).unique_count
        assert 0 <= w.failure_rate <= 1 and 0 <= w.cpu_efficiency <= 1
    assert sum(w.total_data_delivered_bytes for w in ws) == sum(a.bytes_read for a in accesses)
    assert sum(w.n_jobs for w in ws) == len(jobs)
    assert sum(w.n_accesses for w in ws) == len(accesses)
    # consecutive, gap-free coverage
    for a, b in zip(ws, ws[1:]):
        assert a.window.end == b.window.start


def _random_aggregate(rng):
    start = rng.randint(0, 10**6)
    flags = tuple(f for f in ("failure_rate", "avg_read_speed_Bps", "cpu_efficiency") if rng.random() < 0.3)
    return AggregateWindow(
        Window(start, start + rng.choice([3600, 1.5])), rng.random(), rng.uniform(0, 1e9), rng.random(),
        rng.randint(0, 10**12), rng.randint(0, 100), rng.randint(0, 10**12), rng.randint(0, 50),
        rng.randint(0, 50), flags,
    )


def test_persist_empty(tmp_path):
    path = tmp_path / "agg.jsonl"
    assert persist([], path) == 0
    assert path.read_text() == ""
    assert load(path) == []


def test_persist_one(tmp_path):
    path = tmp_path / "agg.jsonl"
    agg = _random_aggregate(random.Random(1))
    assert persist([agg], path) == 1
    assert len(path.read_text().splitlines()) == 1
    assert load(path) == [agg]


def test_persist_roundtrip_random(tmp_path):
    rng = random.Random(2)
    aggs = [_random_aggregate(rng) for _ in range(100)]
    path = tmp_path / "agg.jsonl"
    persist(aggs, path)
    assert load(path) == aggs


def test_persist_keep_last(tmp_path):
    rng = random.Random(3)
    aggs = [_random_aggregate(rng) for _ in range(10)]
    path = tmp_path / "agg.jsonl"
    assert persist(aggs, path, keep_last_n_windows=3) == 3
    assert load(path) == aggs[-3:]
    assert persist(aggs, path, keep_last_n_windows=0) == 0


def test_load_malformed_line(tmp_path):
    path = tmp_path / "agg.jsonl"
    persist([_random_aggregate(random.Random(4))], path)
    with open(path, "a") as fh:
        fh.write("{not json\n")
    with pytest.raises(ParseError) as info:
        load(path)
    assert info.value.line == 2


def test_load_jobs_csv(tmp_path):
    path = tmp_path / "jobs.csv"
    path.write_text(
        "t,site,success,bytes_read,read_time_s,cpu_time_s,wall_time_s\n"
        "0,T2_US_UCSD,1,100,2.0,1.0,4.0\n"
        "5,T2_US_UCSD,false,0,0,0,1\n"
    )
    jobs = load_jobs(path)
    assert jobs[0].success and not jobs[1].success
    assert jobs[0].wall_time_s == 4.0
    path.write_text("t,site,success,bytes_read,read_time_s,cpu_time_s,wall_time_s\n0,x,maybe,1,1,1,1\n")
    with pytest.raises(ParseError):
        load_jobs(path)
