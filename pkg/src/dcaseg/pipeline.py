"""End-to-end runs: event file -> DC engine -> segmentation -> report document."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .core import DEFAULT_WEIGHTS, ConfigError, StreamOrderError, WeightMatrix
from .engine import Engine, PopulationConfig, ProcessedRecord
from .segmentation import SegmenterConfig, SegmentReport, iter_reports, k_alpha_series
from .stats import (
    ComparisonTable,
    SummaryRow,
    TestPlan,
    compare_runs,
    summarize,
)
from .stream_io import ReportDocument, read_events, read_report


@dataclass(frozen=True)
class RunConfig:
    input: str = ""
    mode: str = "none"
    segment_size: int | None = None
    population_size: int = 100
    threshold_step: float = 12.0
    weights: WeightMatrix = DEFAULT_WEIGHTS
    flush: bool = True
    include_forced: bool = True
    output: str | None = None
    format: str = "jsonl"

    def population(self) -> PopulationConfig:
        return PopulationConfig(self.population_size, self.threshold_step, self.weights, self.flush)

    def segmenter(self) -> SegmenterConfig:
        return SegmenterConfig(self.mode, self.segment_size or 1, self.include_forced)

    def validate(self) -> None:
        self.population().validate()
        if self.mode != "none" and self.segment_size is None:
            raise ConfigError(f"--size is required for mode {self.mode!r}")
        self.segmenter().validate()
        if self.format not in ("jsonl", "table"):
            raise ConfigError(f"unknown output format {self.format!r}")

    def to_metadata(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.to_dict() if isinstance(value, WeightMatrix) else value
        return out

    @classmethod
    def from_metadata(cls, data: Mapping) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "weights" in kwargs and not isinstance(kwargs["weights"], WeightMatrix):
            kwargs["weights"] = WeightMatrix.from_dict(kwargs["weights"])
        return cls(**kwargs)

    def with_overrides(self, **overrides) -> RunConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def load_weights(path: str | Path) -> WeightMatrix:
    return WeightMatrix.from_dict(load_config_file(path))


@dataclass
class RunTotals:
    antigens_ingested: int = 0
    signal_ticks: int = 0
    records: int = 0
    forced_records: int = 0
    dropped_antigens: int = 0
    segments: int = 0
    last_tick: int = 0


@dataclass
class RunResult:
    config: RunConfig
    reports: list[SegmentReport]
    totals: RunTotals = field(default_factory=RunTotals)

    def document(self) -> ReportDocument:
        return ReportDocument(
            {"tool": "dcaseg", "version": __version__, "config": self.config.to_metadata(),
             "totals": asdict(self.totals)},
            self.reports,
        )


class _Counting:
    """Record pass-through that keeps totals for the run summary."""

    def __init__(self, records: Iterable, totals: RunTotals):
        self.records = records
        self.totals = totals

    def __iter__(self):
        t = self.totals
        for rec in self.records:
            t.records += 1
            t.forced_records += rec.forced
            yield rec


def stream_end(engine: Engine) -> int | None:
    """Final tick of the stream the engine consumed, or None if it saw no events."""
    return engine.current_tick if engine.ag_counter or engine.signal_ticks else None


def feed_events(engine: Engine, events: Iterable) -> Iterator[ProcessedRecord]:
    """Like :meth:`Engine.process`, but ordering errors name the offending line."""
    for lineno, ev in enumerate(events, 1):
        try:
            matured = engine.feed(ev)
        except StreamOrderError as exc:
            raise StreamOrderError(f"line {lineno}: {exc}") from None
        if matured:
            yield from matured
    yield from engine.flush()


def run_events(cfg: RunConfig, events: Iterable) -> RunResult:
    """Run the engine and segmenter over ``events``.

    Stream-order violations name the 1-based index of the offending event,
    which equals its line number in an event file.
    """
    cfg.validate()
    engine = Engine(cfg.population())
    totals = RunTotals()
    records = lambda: feed_events(engine, events)  # noqa: E731

    segmenter_cfg = cfg.segmenter()
    if segmenter_cfg.mode == "tbs":
        # window range must reach the final tick, known only after the stream ends
        recs = list(_Counting(records(), totals))
        reports = list(iter_reports(recs, segmenter_cfg, last_tick=stream_end(engine)))
    else:
        reports = list(iter_reports(_Counting(records(), totals), segmenter_cfg))
    totals.antigens_ingested = engine.ag_counter
    totals.signal_ticks = engine.signal_ticks
    totals.dropped_antigens = engine.dropped_count
    totals.segments = len(reports)
    totals.last_tick = engine.current_tick
    return RunResult(cfg, reports, totals)


def run_file(cfg: RunConfig) -> RunResult:
    if not cfg.input:
        raise ConfigError("no input event file given")
    if not Path(cfg.input).is_file():
        raise ConfigError(f"input file not found: {cfg.input}")
    return run_events(cfg, read_events(cfg.input))


def sweep_summary(runs: Mapping[int, Sequence[SegmentReport]],
                  antigen_types: Sequence[str] | None = None) -> list[SummaryRow]:
    """Per-type summary rows, one per segment size, grouped by type."""
    if antigen_types is None:
        antigen_types = sorted({ag for reps in runs.values() for r in reps for ag in r.scores})
    rows = []
    for ag in antigen_types:
        for size in sorted(runs):
            series = k_alpha_series(runs[size], ag)
            if not series:
                continue
            rows.append(summarize(series, ag, size))
    return rows


def runs_from_documents(docs: Iterable[ReportDocument]
                        ) -> tuple[str | None, list[tuple[int | None, list[SegmentReport]]]]:
    """Order report documents by segment size for comparison.

    Unsegmented (mode=none) reports sort first with size ``None``. Sizes may
    repeat; ties keep input order.
    """
    modes = set()
    runs = []
    for doc in docs:
        cfg = doc.metadata.get("config", {})
        mode = cfg.get("mode")
        size = cfg.get("segment_size") if mode != "none" else None
        if mode not in ("none", "abs", "tbs"):
            raise ConfigError(f"report has unknown mode {mode!r}")
        modes.add(mode)
        runs.append((size, doc.reports))
    segmented = modes - {"none"}
    if len(segmented) > 1:
        raise ConfigError("compared reports mix segmentation modes")
    runs.sort(key=lambda run: (run[0] is not None, run[0] or 0))
    mode = segmented.pop() if segmented else ("none" if modes else None)
    return mode, runs


def baseline_report(doc: ReportDocument) -> SegmentReport:
    if doc.metadata.get("config", {}).get("mode") != "none" or len(doc.reports) != 1:
        raise ConfigError("baseline must be a single-segment mode=none report")
    return doc.reports[0]


def compare_files(report_paths: Sequence[str | Path], baseline_path: str | Path,
                  directions: Mapping[str, str], alpha: float = 0.05,
                  equal_var: bool = False) -> ComparisonTable:
    """Compare report files; every antigen type needs an explicit test direction."""
    mode, runs = runs_from_documents(read_report(p) for p in report_paths)
    base = baseline_report(read_report(baseline_path))
    types = sorted({ag for _, reps in runs for r in reps for ag in r.scores})
    plan = TestPlan(tuple(types), dict(directions), alpha, equal_var)
    return compare_runs(runs, base, plan, mode)
