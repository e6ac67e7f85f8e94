import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcaseg.core import AntigenEvent, ConfigError
from dcaseg.engine import PopulationConfig, ProcessedRecord, run_stream
from dcaseg.segmentation import (
    SegmenterConfig,
    analyze,
    classify,
    compute_k_alpha,
    k_alpha_series,
    segment_abs,
    segment_tbs,
)
from oracles import brute_abs_boundaries, brute_k_alpha, random_stream


def rec(t, sum_k, counts, idx=1, forced=False):
    return ProcessedRecord(t, idx, float(sum_k), dict(counts), forced)


def k_alpha_map(records):
    return {ag: s.k_alpha for ag, s in compute_k_alpha(records).items()}


def test_k_alpha_single_record():
    assert k_alpha_map([rec(0, -5, {"A": 10})]) == {"A": -0.5}


def test_k_alpha_two_records():
    scores = compute_k_alpha([rec(0, 4, {"A": 2}), rec(1, -2, {"A": 2, "B": 1})])
    assert scores["A"].k_alpha == 0.5
    assert scores["B"].k_alpha == -2
    assert scores["A"].total_count == 4 and scores["A"].contributing_dcs == 2
    assert scores["B"].total_count == 1 and scores["B"].contributing_dcs == 1


def test_k_alpha_empty():
    assert compute_k_alpha([]) == {}


def test_k_alpha_records_without_antigens_ignored():
    assert k_alpha_map([rec(0, 100, {}), rec(1, -3, {"A": 3})]) == {"A": -1}


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.tuples(st.floats(-1e4, 1e4), st.dictionaries(st.sampled_from("abcde"), st.integers(1, 50))),
    max_size=40,
))
def test_k_alpha_matches_formula(raw):
    records = [rec(i, k, c) for i, (k, c) in enumerate(raw)]
    got = k_alpha_map(records)
    expected = brute_k_alpha(records)
    assert got.keys() == expected.keys()
    for ag in got:
        assert got[ag] == pytest.approx(expected[ag], rel=1e-12, abs=1e-12)


def test_abs_atomic_records():
    records = [rec(0, 1, {"a": 40}), rec(1, 1, {"a": 50}), rec(2, 1, {"a": 30})]
    (seg,) = list(segment_abs(records, 100))
    assert len(seg.records) == 3 and seg.antigen_instances == 120


def test_abs_size_one():
    records = [rec(i, 1, {"a": i + 1}) for i in range(5)]
    segs = list(segment_abs(records, 1))
    assert [len(s.records) for s in segs] == [1] * 5
    assert [s.ordinal for s in segs] == list(range(5))


def test_abs_size_exceeds_total():
    records = [rec(i, 1, {"a": 3}) for i in range(10)]
    (seg,) = list(segment_abs(records, 31))
    assert len(seg.records) == 10


def test_abs_rejects_bad_size():
    with pytest.raises(ConfigError):
        list(segment_abs([], 0))


def test_tbs_windows():
    records = [rec(3, 1, {"a": 1}), rec(7, 1, {"a": 1}), rec(12, 1, {"a": 1})]
    segs = list(segment_tbs(records, 10))
    assert [[r.presented_at for r in s.records] for s in segs] == [[3, 7], [12]]
    assert (segs[1].start_tick, segs[1].end_tick) == (10, 19)


def test_tbs_size_one_emits_empty_windows():
    records = [rec(0, 1, {"a": 1}), rec(4, 1, {"a": 1})]
    segs = list(segment_tbs(records, 1))
    assert len(segs) == 5
    assert [s.antigen_instances for s in segs] == [1, 0, 0, 0, 1]


def test_tbs_size_beyond_last_tick():
    records = [rec(t, 1, {"a": 1}) for t in (0, 5, 9)]
    assert len(list(segment_tbs(records, 50))) == 1


def test_tbs_extends_to_last_tick():
    segs = list(segment_tbs([rec(2, 1, {"a": 1})], 5, last_tick=17))
    assert len(segs) == 4
    assert all(s.antigen_instances == 0 for s in segs[1:])


def test_tbs_empty_stream():
    assert analyze([], SegmenterConfig("tbs", 10)) == []


def test_none_mode_single_report_even_when_empty():
    (report,) = analyze([], SegmenterConfig("none"))
    assert report.empty and report.scores == {}


@pytest.mark.parametrize("seed", range(5))
def test_none_equals_abs_infinite(seed):
    records = run_stream(PopulationConfig(10, 30), random_stream(seed, 2000))
    (base,) = analyze(records, SegmenterConfig("none"))
    (abs_all,) = analyze(records, SegmenterConfig("abs", 10**9))
    assert base.scores == abs_all.scores


@pytest.mark.parametrize("mode, size", [("abs", 1), ("abs", 37), ("abs", 500), ("tbs", 1), ("tbs", 7)])
def test_segments_partition_records(mode, size):
    records = run_stream(PopulationConfig(10, 30), random_stream(3, 3000))
    fn = segment_abs if mode == "abs" else segment_tbs
    segs = list(fn(records, size))
    flat = [r for s in segs for r in s.records]
    assert flat == records
    assert [s.ordinal for s in segs] == list(range(len(segs)))
    assert sum(s.antigen_instances for s in segs) == sum(r.antigen_total for r in records)


@pytest.mark.parametrize("size", [1, 10, 100, 1000])
def test_abs_boundaries_match_running_sum(size):
    records = run_stream(PopulationConfig(), random_stream(9, 5000))
    totals = [r.antigen_total for r in records]
    cuts = brute_abs_boundaries(totals, size)
    segs = list(segment_abs(records, size))
    ends, i = [], -1
    for s in segs:
        i += len(s.records)
        ends.append(i)
    closed = ends if ends and ends[-1] in cuts else ends[:-1]
    assert closed == cuts


def test_abs_segment_count_on_generated_stream(bundled_records):
    # take roughly the first 10^4 antigens of the bundled scenario
    prefix, total = [], 0
    for r in bundled_records:
        if total >= 10_000:
            break
        prefix.append(r)
        total += r.antigen_total
    reports = analyze(prefix, SegmenterConfig("abs", 100))
    expected = len(brute_abs_boundaries([r.antigen_total for r in prefix], 100))
    assert expected <= len(reports) <= expected + 1
    assert 90 <= len(reports) <= 101


def test_merging_segments_recovers_baseline():
    records = run_stream(PopulationConfig(5, 40), random_stream(21, 2000))
    segs = list(segment_abs(records, 50))
    merged = [r for s in segs for r in s.records]
    assert k_alpha_map(merged) == k_alpha_map(records)


def test_exclude_forced():
    records = [rec(0, -1, {"a": 2}), rec(1, 5, {"a": 2}, forced=True)]
    (with_forced,) = analyze(records, SegmenterConfig("none"))
    (without,) = analyze(records, SegmenterConfig("none", include_forced=False))
    assert with_forced.scores["a"].k_alpha == 1.0
    assert without.scores["a"].k_alpha == -0.5


@pytest.mark.parametrize("cfg", [SegmenterConfig("fixed", 5), SegmenterConfig("abs", 0),
                                 SegmenterConfig("tbs", -1)])
def test_invalid_segmenter_config(cfg):
    with pytest.raises(ConfigError):
        analyze([], cfg)


def test_classify_and_series():
    reports = analyze(
        [rec(0, 10, {"a": 1}), rec(1, -10, {"b": 1}), rec(2, 4, {"a": 2})],
        SegmenterConfig("abs", 1),
    )
    assert classify(reports[0], 0.0) == {"a": "anomalous"}
    assert classify(reports[1], 0.0) == {"b": "normal"}
    assert k_alpha_series(reports, "a") == [10.0, 2.0]
    assert not any(math.isnan(v) for v in k_alpha_series(reports, "b"))


def test_conservation_every_mode():
    events = random_stream(5, 4000)
    ingested = sum(isinstance(e, AntigenEvent) for e in events)
    records = run_stream(PopulationConfig(7, 25), events)
    for cfg in (SegmenterConfig("none"), SegmenterConfig("abs", 13), SegmenterConfig("tbs", 4)):
        reports = analyze(records, cfg)
        assert sum(r.antigen_instances for r in reports) == ingested
        assert sum(s.total_count for r in reports for s in r.scores.values()) == ingested
