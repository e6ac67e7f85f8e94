"""Signal and antigen types plus the weighted signal transformation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

SIGNAL_MIN = 0.0
SIGNAL_MAX = 100.0


class DCAError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DCAError):
    """Invalid configuration (weights, population, segmenter, scenario)."""


class DataError(DCAError):
    """Invalid input data: out-of-range signals, bad antigen ids, bad ordering."""


class SignalRangeError(DataError):
    def __init__(self, component: str, value: float):
        super().__init__(
            f"{component} signal {value!r} outside [{SIGNAL_MIN:g}, {SIGNAL_MAX:g}]"
        )
        self.component = component
        self.value = value


class StreamOrderError(DataError):
    """Event stream violates timestamp or antigen-before-signal ordering."""


@dataclass(frozen=True, slots=True)
class SignalInstance:
    timestamp: int
    pamp: float
    danger: float
    safe: float

    def check_range(self) -> None:
        for name in ("pamp", "danger", "safe"):
            value = getattr(self, name)
            # written as a negated conjunction so NaN is rejected too
            if not (SIGNAL_MIN <= value <= SIGNAL_MAX):
                raise SignalRangeError(name, value)


class AntigenEvent(NamedTuple):
    # a tuple rather than a dataclass: millions are built per run
    timestamp: int
    antigen_type: str


@dataclass(frozen=True, slots=True)
class OutputSignals:
    csm: float
    k: float


@dataclass(frozen=True)
class WeightMatrix:
    """Weights mapping (PAMP, danger, safe) onto the CSM and k outputs.

    Defaults are the standard dDCA values: CSM row (4, 2, 6), k row (8, 4, -13).
    """

    w_csm_pamp: float = 4.0
    w_csm_danger: float = 2.0
    w_csm_safe: float = 6.0
    w_k_pamp: float = 8.0
    w_k_danger: float = 4.0
    w_k_safe: float = -13.0

    @property
    def csm_row(self) -> tuple[float, float, float]:
        return (self.w_csm_pamp, self.w_csm_danger, self.w_csm_safe)

    @property
    def k_row(self) -> tuple[float, float, float]:
        return (self.w_k_pamp, self.w_k_danger, self.w_k_safe)

    @classmethod
    def from_rows(cls, csm, k) -> WeightMatrix:
        if len(csm) != 3 or len(k) != 3:
            raise ConfigError("weight rows must each have 3 entries (pamp, danger, safe)")
        return cls(*(float(v) for v in csm), *(float(v) for v in k))

    def to_dict(self) -> dict[str, list[float]]:
        return {"csm": list(self.csm_row), "k": list(self.k_row)}

    @classmethod
    def from_dict(cls, data: dict) -> WeightMatrix:
        try:
            return cls.from_rows(data["csm"], data["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed weight matrix: {exc}") from exc


DEFAULT_WEIGHTS = WeightMatrix()


@dataclass(frozen=True)
class WeightValidation:
    violations: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def validate_weights(w: WeightMatrix) -> WeightValidation:
    """Check the ordering constraints on the k row.

    Returns a result listing every violated constraint; never raises.
    """
    violations = []
    if not w.w_k_safe < 0:
        violations.append("safe k-weight must be negative")
    if not w.w_k_pamp > w.w_k_danger:
        violations.append("PAMP must outweigh danger")
    if not w.w_k_danger > 0:
        violations.append("danger k-weight must be positive")
    return WeightValidation(tuple(violations))


def transform_signals(s: SignalInstance, w: WeightMatrix = DEFAULT_WEIGHTS) -> OutputSignals:
    s.check_range()
    csm = w.w_csm_pamp * s.pamp + w.w_csm_danger * s.danger + w.w_csm_safe * s.safe
    k = w.w_k_pamp * s.pamp + w.w_k_danger * s.danger + w.w_k_safe * s.safe
    return OutputSignals(csm, k)
