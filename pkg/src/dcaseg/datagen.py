"""Seeded synthetic signal/antigen streams shaped like a host-side SYN scan capture.

Randomness comes from :class:`SplitMix64`, specified constant-for-constant so a
stream can be regenerated by any implementation:

    state  = (state + 0x9E3779B97F4A7C15) mod 2^64
    z      = state
    z      = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z      = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z ^ (z >> 31)

Derived draws:

* uniform in [0, 1): ``(output >> 11) * 2**-53``
* standard normal: Box-Muller cosine branch, ``u1 = 1 - uniform()`` then
  ``u2 = uniform()``, value ``sqrt(-2 ln u1) * cos(2 pi u2)``; the sine branch
  is discarded
* Poisson(lam): inverse transform on one uniform; rates above
  ``POISSON_CHUNK`` are split into equal chunks (sum of Poissons) so that
  ``exp(-lam)`` never underflows

Per tick, draws happen in this order: one Poisson count per source (source
list order), a Fisher-Yates shuffle of the tick's antigens (``j`` from
``floor(uniform() * (i + 1))`` for ``i`` descending), then one normal each for
PAMP, danger and safe.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .core import SIGNAL_MAX, SIGNAL_MIN, AntigenEvent, ConfigError, SignalInstance

MASK64 = (1 << 64) - 1
POISSON_CHUNK = 500.0
LABELS = ("anomalous", "normal")


class SplitMix64:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def poisson(self, lam: float) -> int:
        if lam <= 0.0:
            return 0
        chunks = max(1, math.ceil(lam / POISSON_CHUNK))
        part = lam / chunks
        return sum(self._poisson_small(part) for _ in range(chunks))

    def _poisson_small(self, lam: float) -> int:
        u = self.uniform()
        p = math.exp(-lam)
        cdf = p
        k = 0
        while u > cdf:
            k += 1
            p *= lam / k
            if p == 0.0:
                break
            cdf += p
        return k


@dataclass(frozen=True)
class SignalLevels:
    pamp: float
    danger: float
    safe: float
    noise_stdev: float = 0.0


@dataclass(frozen=True)
class PhaseSpec:
    start_tick: int
    end_tick: int  # exclusive
    pamp_level: float
    danger_level: float
    safe_level: float
    noise_stdev: float = 0.0
    rate_multipliers: Mapping[str, float] = field(default_factory=dict)

    @property
    def levels(self) -> SignalLevels:
        return SignalLevels(self.pamp_level, self.danger_level, self.safe_level, self.noise_stdev)


@dataclass(frozen=True)
class AntigenSource:
    antigen_type: str
    label: str
    base_rate: float


@dataclass(frozen=True)
class ScenarioSpec:
    duration_ticks: int
    seed: int
    antigen_sources: tuple[AntigenSource, ...]
    phases: tuple[PhaseSpec, ...] = ()
    background: SignalLevels = SignalLevels(2.0, 10.0, 70.0, 5.0)
    name: str = "custom"

    def validate(self, require_labels: bool = False) -> None:
        if not isinstance(self.duration_ticks, int) or self.duration_ticks < 1:
            raise ConfigError("duration_ticks must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        names = [s.antigen_type for s in self.antigen_sources]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate antigen source")
        for src in self.antigen_sources:
            if not src.antigen_type or any(c in src.antigen_type for c in ",\n\r"):
                raise ConfigError(f"invalid antigen type {src.antigen_type!r}")
            if src.label not in LABELS:
                raise ConfigError(f"label for {src.antigen_type} must be one of {LABELS}")
            if not src.base_rate >= 0:
                raise ConfigError(f"base_rate for {src.antigen_type} must be >= 0")
        _check_levels(self.background, "background")
        for ph in self.phases:
            if not 0 <= ph.start_tick < ph.end_tick <= self.duration_ticks:
                raise ConfigError(
                    f"phase [{ph.start_tick}, {ph.end_tick}) outside [0, {self.duration_ticks})"
                )
            _check_levels(ph.levels, f"phase at {ph.start_tick}")
            for ag, mult in ph.rate_multipliers.items():
                if ag not in names:
                    raise ConfigError(f"rate multiplier for unknown source {ag!r}")
                if not mult >= 0:
                    raise ConfigError(f"rate multiplier for {ag} must be >= 0")
        ordered = sorted(self.phases, key=lambda p: p.start_tick)
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.start_tick < prev.end_tick:
                raise ConfigError("phases overlap")
        if require_labels:
            labels = {s.label for s in self.antigen_sources}
            if labels != set(LABELS):
                raise ConfigError("evaluation scenarios need at least one anomalous and one normal source")

    def labels(self) -> dict[str, str]:
        return {s.antigen_type: s.label for s in self.antigen_sources}

    def phase_at(self, tick: int) -> PhaseSpec | None:
        for ph in self.phases:
            if ph.start_tick <= tick < ph.end_tick:
                return ph
        return None

    def expected_antigens(self) -> float:
        total = 0.0
        for src in self.antigen_sources:
            in_phase = sum(
                (ph.end_tick - ph.start_tick) * ph.rate_multipliers.get(src.antigen_type, 1.0)
                for ph in self.phases
            )
            outside = self.duration_ticks - sum(ph.end_tick - ph.start_tick for ph in self.phases)
            total += src.base_rate * (outside + in_phase)
        return total

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "duration_ticks": self.duration_ticks,
            "seed": self.seed,
            "background": vars(self.background).copy(),
            "antigen_sources": [vars(s).copy() for s in self.antigen_sources],
            "phases": [
                {**{k: v for k, v in vars(p).items() if k != "rate_multipliers"},
                 "rate_multipliers": dict(p.rate_multipliers)}
                for p in self.phases
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ScenarioSpec:
        try:
            kwargs = dict(
                duration_ticks=data["duration_ticks"],
                seed=data.get("seed", 0),
                antigen_sources=tuple(AntigenSource(**s) for s in data.get("antigen_sources", [])),
                phases=tuple(
                    PhaseSpec(**{**p, "rate_multipliers": dict(p.get("rate_multipliers", {}))})
                    for p in data.get("phases", [])
                ),
                name=data.get("name", "custom"),
            )
            if "background" in data:
                kwargs["background"] = SignalLevels(**data["background"])
            return cls(**kwargs)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed scenario spec: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> ScenarioSpec:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def _check_levels(lv: SignalLevels, where: str) -> None:
    for name in ("pamp", "danger", "safe"):
        v = getattr(lv, name)
        if not SIGNAL_MIN <= v <= SIGNAL_MAX:
            raise ConfigError(f"{where}: {name} level {v!r} outside [0, 100]")
    if not lv.noise_stdev >= 0:
        raise ConfigError(f"{where}: noise_stdev must be >= 0")


def _clip(v: float) -> float:
    return SIGNAL_MIN if v < SIGNAL_MIN else SIGNAL_MAX if v > SIGNAL_MAX else v


def generate(spec: ScenarioSpec) -> Iterator[SignalInstance | AntigenEvent]:
    """Yield the scenario's events: each tick's antigens, then its one signal."""
    spec.validate()
    rng = SplitMix64(spec.seed)
    for tick in range(spec.duration_ticks):
        phase = spec.phase_at(tick)
        mults = phase.rate_multipliers if phase else {}
        levels = phase.levels if phase else spec.background
        batch: list[str] = []
        for src in spec.antigen_sources:
            n = rng.poisson(src.base_rate * mults.get(src.antigen_type, 1.0))
            batch.extend([src.antigen_type] * n)
        for i in range(len(batch) - 1, 0, -1):
            j = int(rng.uniform() * (i + 1))
            batch[i], batch[j] = batch[j], batch[i]
        for ag in batch:
            yield AntigenEvent(tick, ag)
        sd = levels.noise_stdev
        pamp = _clip(levels.pamp + sd * rng.normal())
        danger = _clip(levels.danger + sd * rng.normal())
        safe = _clip(levels.safe + sd * rng.normal())
        yield SignalInstance(tick, pamp, danger, safe)


def bundled_scenario_syn_scan(seed: int = 42) -> ScenarioSpec:
    """Desk-scale SYN scan session: two scan bursts against steady browsing.

    ``nmap`` and ``pts`` (the scanner and its parent terminal) are anomalous
    and mostly active during the bursts; ``firefox`` browses throughout. The
    signal levels are plausible reconstructions, not measured values: scans
    raise ICMP unreachable counts (PAMP) and the TCP packet ratio (danger)
    while shrinking mean packet size, which lowers the safe signal.
    """
    return ScenarioSpec(
        name="syn-scan",
        duration_ticks=4000,
        seed=seed,
        background=SignalLevels(pamp=2.0, danger=10.0, safe=70.0, noise_stdev=5.0),
        antigen_sources=(
            AntigenSource("nmap", "anomalous", 0.2),
            AntigenSource("firefox", "normal", 20.0),
            AntigenSource("pts", "anomalous", 0.5),
        ),
        phases=(
            PhaseSpec(1000, 1400, pamp_level=60.0, danger_level=65.0, safe_level=10.0,
                      noise_stdev=8.0, rate_multipliers={"nmap": 75.0, "pts": 20.0}),
            PhaseSpec(2600, 3000, pamp_level=55.0, danger_level=60.0, safe_level=12.0,
                      noise_stdev=8.0, rate_multipliers={"nmap": 75.0, "pts": 20.0}),
        ),
    )


BUNDLED = {"syn-scan": bundled_scenario_syn_scan}
