"""Partition presented records into segments and score antigen types per segment."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

from .core import ConfigError
from .engine import ProcessedRecord

MODES = ("none", "abs", "tbs")


@dataclass(frozen=True)
class SegmenterConfig:
    mode: str = "none"
    segment_size: int = 1
    include_forced: bool = True

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown segmentation mode {self.mode!r}; expected one of {MODES}")
        if self.mode != "none" and (not isinstance(self.segment_size, int) or self.segment_size < 1):
            raise ConfigError(f"segment_size must be a positive integer, got {self.segment_size!r}")


@dataclass
class Segment:
    ordinal: int
    start_tick: int
    end_tick: int
    records: list[ProcessedRecord] = field(default_factory=list)
    antigen_instances: int = 0


@dataclass(frozen=True)
class KAlphaScore:
    antigen_type: str
    k_alpha: float
    total_count: int
    contributing_dcs: int


@dataclass(frozen=True)
class SegmentReport:
    ordinal: int
    start_tick: int
    end_tick: int
    scores: dict[str, KAlphaScore]
    antigen_instances: int = 0
    n_records: int = 0

    @property
    def empty(self) -> bool:
        return self.antigen_instances == 0


def compute_k_alpha(records: Iterable[ProcessedRecord]) -> dict[str, KAlphaScore]:
    """Per-type anomaly coefficient: summed k of the DCs holding the type over its count.

    A record's ``sum_k`` enters each of its types' numerators once, regardless
    of how many instances of that type it holds. Types are returned sorted.
    """
    k_sum: dict[str, float] = {}
    count: dict[str, int] = {}
    dcs: dict[str, int] = {}
    for rec in records:
        for ag, n in rec.antigen_counts.items():
            k_sum[ag] = k_sum.get(ag, 0.0) + rec.sum_k
            count[ag] = count.get(ag, 0) + n
            dcs[ag] = dcs.get(ag, 0) + 1
    return {
        ag: KAlphaScore(ag, k_sum[ag] / count[ag], count[ag], dcs[ag])
        for ag in sorted(k_sum)
        if count[ag] > 0
    }


def segment_abs(records: Iterable[ProcessedRecord], size: int) -> Iterator[Segment]:
    """Close a segment once it holds at least ``size`` antigen instances.

    Records are never split, so a segment overshoots by at most one record.
    """
    if size < 1:
        raise ConfigError("ABS segment size must be >= 1")
    ordinal = 0
    current: Segment | None = None
    for rec in records:
        if current is None:
            current = Segment(ordinal, rec.presented_at, rec.presented_at)
        current.records.append(rec)
        current.end_tick = rec.presented_at
        current.antigen_instances += rec.antigen_total
        if current.antigen_instances >= size:
            yield current
            ordinal += 1
            current = None
    if current is not None:
        yield current


def segment_tbs(
    records: Iterable[ProcessedRecord], size: int, last_tick: int | None = None
) -> Iterator[Segment]:
    """Fixed windows ``[n*size, (n+1)*size)`` over presentation time.

    Every window from tick 0 through the one containing the last record (or
    ``last_tick`` if later) is emitted, empty windows included. Records must
    arrive in non-decreasing ``presented_at`` order.
    """
    if size < 1:
        raise ConfigError("TBS segment size must be >= 1")
    ordinal = 0
    current = Segment(0, 0, size - 1)
    seen_any = False
    for rec in records:
        seen_any = True
        window = rec.presented_at // size
        while ordinal < window:
            yield current
            ordinal += 1
            current = Segment(ordinal, ordinal * size, (ordinal + 1) * size - 1)
        current.records.append(rec)
        current.antigen_instances += rec.antigen_total
    if not seen_any and last_tick is None:
        return
    if last_tick is not None:
        while ordinal < last_tick // size:
            yield current
            ordinal += 1
            current = Segment(ordinal, ordinal * size, (ordinal + 1) * size - 1)
    yield current


def report_for(segment: Segment) -> SegmentReport:
    return SegmentReport(
        ordinal=segment.ordinal,
        start_tick=segment.start_tick,
        end_tick=segment.end_tick,
        scores=compute_k_alpha(segment.records),
        antigen_instances=segment.antigen_instances,
        n_records=len(segment.records),
    )


def iter_reports(
    records: Iterable[ProcessedRecord], cfg: SegmenterConfig, last_tick: int | None = None
) -> Iterator[SegmentReport]:
    """Streaming form of :func:`analyze`: each report is yielded as its segment closes."""
    cfg.validate()
    if not cfg.include_forced:
        records = (r for r in records if not r.forced)
    if cfg.mode == "abs":
        segments = segment_abs(records, cfg.segment_size)
    elif cfg.mode == "tbs":
        segments = segment_tbs(records, cfg.segment_size, last_tick)
    else:
        recs = list(records)
        start = recs[0].presented_at if recs else 0
        end = recs[-1].presented_at if recs else 0
        segments = iter([Segment(0, start, end, recs, sum(r.antigen_total for r in recs))])
    for seg in segments:
        yield report_for(seg)


def analyze(
    records: Iterable[ProcessedRecord], cfg: SegmenterConfig, last_tick: int | None = None
) -> list[SegmentReport]:
    return list(iter_reports(records, cfg, last_tick))


def classify(report: SegmentReport, threshold: float) -> dict[str, str]:
    """Label each scored type ``anomalous`` when its Kα exceeds ``threshold``."""
    return {
        ag: "anomalous" if score.k_alpha > threshold else "normal"
        for ag, score in report.scores.items()
    }


def k_alpha_series(reports: Sequence[SegmentReport], antigen_type: str) -> list[float]:
    """Kα of one type across segments, skipping segments where it was not seen."""
    return [r.scores[antigen_type].k_alpha for r in reports if antigen_type in r.scores]
