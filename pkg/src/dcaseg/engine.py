"""Deterministic DC population: antigen sampling, signal accumulation, maturation."""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

from .core import (
    DEFAULT_WEIGHTS,
    AntigenEvent,
    ConfigError,
    DataError,
    SignalInstance,
    StreamOrderError,
    WeightMatrix,
    transform_signals,
    validate_weights,
)


@dataclass(frozen=True)
class PopulationConfig:
    population_size: int = 100
    threshold_step: float = 12.0
    weights: WeightMatrix = DEFAULT_WEIGHTS
    flush_at_end: bool = True

    def validate(self) -> None:
        if not isinstance(self.population_size, int) or self.population_size < 1:
            raise ConfigError(f"population_size must be a positive integer, got {self.population_size!r}")
        if not self.threshold_step > 0:
            raise ConfigError(f"threshold_step must be positive, got {self.threshold_step!r}")
        check = validate_weights(self.weights)
        if not check.valid:
            raise ConfigError("invalid weights: " + "; ".join(check.violations))


@dataclass(slots=True)
class DendriticCell:
    index: int
    migration_threshold: float
    lifespan: float = 0.0
    sum_k: float = 0.0
    antigen_profile: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.reset()

    def reset(self) -> None:
        self.lifespan = self.migration_threshold
        self.sum_k = 0.0
        self.antigen_profile = {}


@dataclass(frozen=True, slots=True)
class ProcessedRecord:
    """Information presented by one DC when it matures (or is flushed)."""

    presented_at: int
    dc_index: int
    sum_k: float
    antigen_counts: dict[str, int]
    forced: bool = False

    @property
    def antigen_total(self) -> int:
        return sum(self.antigen_counts.values())


class Engine:
    """Single-owner, sequentially mutated DC population.

    Feed events one at a time with :meth:`feed` (which enforces stream order)
    or call :meth:`ingest_antigen` / :meth:`ingest_signal_tick` directly.
    """

    def __init__(self, cfg: PopulationConfig | None = None):
        cfg = cfg or PopulationConfig()
        cfg.validate()
        self.cfg = cfg
        self.cells = [
            DendriticCell(i, cfg.threshold_step * i) for i in range(1, cfg.population_size + 1)
        ]
        self.ag_counter = 0
        self.current_tick = 0
        self.signal_ticks = 0
        self.dropped_count = 0
        self._last_signal_tick = -1
        self._last_event_tick = 0

    def ingest_antigen(self, ev: AntigenEvent) -> None:
        if not ev.antigen_type:
            raise DataError(f"empty antigen type at tick {ev.timestamp}")
        self.ag_counter += 1
        n = self.cfg.population_size
        index = self.ag_counter % n
        if index == 0:
            index = n
        profile = self.cells[index - 1].antigen_profile
        profile[ev.antigen_type] = profile.get(ev.antigen_type, 0) + 1

    def ingest_signal_tick(self, s: SignalInstance) -> list[ProcessedRecord]:
        if s.timestamp < self.current_tick:
            raise StreamOrderError(
                f"signal at tick {s.timestamp} precedes current tick {self.current_tick}"
            )
        out = transform_signals(s, self.cfg.weights)
        csm, k = out.csm, out.k
        matured = []
        for cell in self.cells:
            cell.lifespan -= csm
            cell.sum_k += k
            if cell.lifespan <= 0:
                matured.append(
                    ProcessedRecord(s.timestamp, cell.index, cell.sum_k, cell.antigen_profile)
                )
                cell.reset()
        self.current_tick = s.timestamp
        self.signal_ticks += 1
        self._last_signal_tick = s.timestamp
        return matured

    def flush(self) -> list[ProcessedRecord]:
        """Empty every cell still holding antigens at end of stream.

        With ``flush_at_end`` off, nothing is emitted and the residual antigen
        count is added to :attr:`dropped_count` instead.
        """
        records = []
        for cell in self.cells:
            if cell.antigen_profile:
                if self.cfg.flush_at_end:
                    records.append(
                        ProcessedRecord(
                            self.current_tick, cell.index, cell.sum_k, cell.antigen_profile, True
                        )
                    )
                else:
                    self.dropped_count += sum(cell.antigen_profile.values())
            cell.reset()
        return records

    def held_antigens(self) -> int:
        return sum(sum(c.antigen_profile.values()) for c in self.cells)

    def feed(self, event: SignalInstance | AntigenEvent) -> list[ProcessedRecord]:
        """Dispatch one event after checking stream ordering."""
        t = event.timestamp
        if t < self._last_event_tick:
            raise StreamOrderError(
                f"timestamp {t} after {self._last_event_tick}: stream is not sorted"
            )
        self._last_event_tick = t
        if isinstance(event, AntigenEvent):
            # so an end-of-stream flush is stamped with the last tick seen
            if t > self.current_tick:
                self.current_tick = t
            if t == self._last_signal_tick:
                raise StreamOrderError(f"antigen after signal within tick {t}")
            self.ingest_antigen(event)
            return []
        return self.ingest_signal_tick(event)

    def process(self, events: Iterable[SignalInstance | AntigenEvent]) -> Iterator[ProcessedRecord]:
        """Yield records in emission order, finishing with the end-of-stream flush."""
        for event in events:
            matured = self.feed(event)
            if matured:
                yield from matured
        yield from self.flush()


def init_population(cfg: PopulationConfig) -> Engine:
    return Engine(cfg)


def run_stream(
    cfg: PopulationConfig, events: Iterable[SignalInstance | AntigenEvent]
) -> list[ProcessedRecord]:
    return list(Engine(cfg).process(events))
