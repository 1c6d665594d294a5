"""Data-to-sound parameter mapping and playback scheduling.

Transport/cursor advancement, linear frequency/amplitude/modulation-index
maps, threshold/increment discrete triggering, and interleaved playback
slot scheduling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class FrequencyMapping:
    """Linear map from a normalized value onto [f_min, f_min + f_range] Hz."""

    f_min: float
    f_range: float = 0.0

    def __post_init__(self):
        if self.f_min <= 0:
            raise ValueError("f_min must be > 0")
        if self.f_range < 0:
            raise ValueError("f_range must be >= 0")


@dataclass(frozen=True)
class ModIndexMapping:
    """Linear map from a normalized value onto [i_min, i_min + i_range]."""

    i_min: float = 0.0
    i_range: float = 5.0

    def __post_init__(self):
        if self.i_min < 0 or self.i_range < 0:
            raise ValueError("modulation index bounds must be >= 0")


def map_frequency(norm: float, target: FrequencyMapping) -> float:
    """f_min + norm * f_range."""
    return target.f_min + norm * target.f_range


def map_amplitude(norm: float) -> float:
    """Amplitude mapping is the identity on the normalized value."""
    return norm


def map_mod_index(norm: float, target: ModIndexMapping) -> float:
    return target.i_min + norm * target.i_range


class TransportState(enum.Enum):
    STOPPED = "stopped"
    PLAYING = "playing"


@dataclass(frozen=True)
class Transport:
    """Global play state: seconds per data point, fractional cursor, play flag."""

    rate: float = 0.2
    cursor: float = 0.0
    state: TransportState = TransportState.STOPPED
    interleave_enabled: bool = False
    interleave_set: tuple[str, ...] = ()

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.cursor < 0:
            raise ValueError("cursor must be >= 0")

    @property
    def playing(self) -> bool:
        return self.state is TransportState.PLAYING

    def reset(self) -> "Transport":
        return replace(self, cursor=0.0, state=TransportState.STOPPED)

    def seconds_per_row(self) -> float:
        """Wall-time per data row; interleave stretches the row to N slots."""
        n = len(self.interleave_set) if self.interleave_enabled else 1
        return self.rate * max(n, 1)


def advance(transport: Transport, elapsed: float, dataset_len: int) -> tuple[Transport, list[int]]:
    """Move the cursor by elapsed seconds; report integer rows crossed.

    Crossed rows are the integers k with old cursor < k <= new cursor, in
    order. The cursor clamps at dataset_len and the transport stops there.
    """
    if not transport.playing:
        return transport, []
    old = transport.cursor
    new = old + elapsed / transport.seconds_per_row()
    state = transport.state
    if new >= dataset_len:
        new = float(dataset_len)
        state = TransportState.STOPPED
    first = math.floor(old) + 1
    last = min(math.floor(new), dataset_len - 1)
    crossed = list(range(first, last + 1))
    return replace(transport, cursor=new, state=state), crossed


@dataclass(frozen=True)
class DiscreteRule:
    """Threshold/increment trigger rule in raw data units.

    `current_threshold` is runtime state and equals `threshold` at reset.
    Positive increments pair with a >= comparison and a rising threshold;
    negative increments with <= and a falling threshold.
    """

    threshold: float
    increment: float
    current_threshold: float | None = None

    def __post_init__(self):
        if self.current_threshold is None:
            object.__setattr__(self, "current_threshold", self.threshold)

    def reset(self) -> "DiscreteRule":
        return replace(self, current_threshold=self.threshold)


def discrete_step(rule: DiscreteRule, value: float) -> tuple[bool, DiscreteRule]:
    """Evaluate one data row against the rule.

    Fires at most one trigger per call: if the value overshoots several
    threshold steps at once, the threshold fast-forwards past the value
    without extra triggers. A zero increment re-triggers at every
    qualifying row.
    """
    t = rule.current_threshold
    if rule.increment >= 0:
        if value < t:
            return False, rule
        t += rule.increment
        if rule.increment > 0:
            while value >= t:
                t += rule.increment
    else:
        if value > t:
            return False, rule
        t += rule.increment
        while value <= t:
            t += rule.increment
    return True, replace(rule, current_threshold=t)


def interleave_schedule(track_ids: tuple[str, ...], rate: float) -> list[tuple[str, float, float]]:
    """Slot layout for one data row under interleaved playback.

    Track k of N gets the slot [k*rate, (k+1)*rate) within the row, so the
    row as a whole spans N*rate seconds.
    """
    if not track_ids:
        raise ValueError("interleave set must be non-empty")
    return [(tid, k * rate, rate) for k, tid in enumerate(track_ids)]
