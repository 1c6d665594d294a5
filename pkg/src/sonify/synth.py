"""Core DSP primitives: oscillators, FM, ADSR envelopes, panning, sample voices.

Everything here is a pure function of its inputs (or an immutable loaded
sample), which is what makes offline renders byte-reproducible.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

DEFAULT_SAMPLE_RATE = 44_100
DEFAULT_BLOCK_SIZE = 64

TWO_PI = 2.0 * math.pi


class AliasWarning(UserWarning):
    """Estimated FM bandwidth exceeds Nyquist; output will alias."""


class OscillatorKind(enum.Enum):
    SINE = "sine"
    SQUARE = "square"
    SAW = "saw"
    TRIANGLE = "triangle"


def osc_value(kind: OscillatorKind, phase):
    """Evaluate a waveform at a phase in [0, 1). Output is in [-1, 1].

    Square/saw/triangle are deliberately naive (not band-limited).
    Triangle peaks (+1) at phase 0 and 1, with its trough (-1) at phase 0.5.
    Accepts scalars or numpy arrays; array phases may be any real and are
    wrapped mod 1.
    """
    p = np.mod(np.asarray(phase, dtype=np.float64), 1.0)
    if kind is OscillatorKind.SINE:
        out = np.sin(TWO_PI * p)
    elif kind is OscillatorKind.SQUARE:
        out = np.where(p < 0.5, 1.0, -1.0)
    elif kind is OscillatorKind.SAW:
        out = 2.0 * p - 1.0
    elif kind is OscillatorKind.TRIANGLE:
        out = 4.0 * np.abs(p - 0.5) - 1.0
    else:
        raise ValueError(f"unknown oscillator kind {kind!r}")
    if np.isscalar(phase) or np.ndim(phase) == 0:
        return float(out)
    return out


def fm_sample(
    carrier_freq: float,
    mod_freq: float,
    mod_index: float,
    carrier_amp: float,
    t,
    kinds: tuple[OscillatorKind, OscillatorKind] = (OscillatorKind.SINE, OscillatorKind.SINE),
    sample_rate: int = DEFAULT_SAMPLE_RATE,
):
    """Phase-modulation FM: amp * osc_c(f_c*t + I*osc_m(f_m*t)/(2*pi)).

    For sine/sine this is amp * sin(2*pi*f_c*t + I*sin(2*pi*f_m*t)), whose
    spectrum has sidebands at f_c +/- k*f_m with magnitudes |J_k(I)|.
    Non-sine kinds substitute their waveform at the same phase arguments.
    Emits AliasWarning (non-fatal) when the Carson-rule bandwidth estimate
    f_c + I*f_m crosses Nyquist.
    """
    kind_c, kind_m = kinds
    if carrier_freq + mod_index * mod_freq > sample_rate / 2:
        warnings.warn(
            f"FM bandwidth estimate {carrier_freq + mod_index * mod_freq:.0f} Hz "
            f"exceeds Nyquist ({sample_rate / 2:.0f} Hz)",
            AliasWarning,
            stacklevel=2,
        )
    t = np.asarray(t, dtype=np.float64)
    mod = osc_value(kind_m, mod_freq * t)
    out = carrier_amp * osc_value(kind_c, carrier_freq * t + mod_index * np.asarray(mod) / TWO_PI)
    return out


@dataclass(frozen=True)
class Envelope:
    """Linear ADSR envelope. Times in seconds, sustain is a level in [0, 1]."""

    attack: float = 0.01
    decay: float = 0.2
    sustain: float = 1.0
    release: float = 0.05

    def __post_init__(self):
        if self.attack < 0 or self.decay < 0 or self.release < 0:
            raise ValueError("envelope times must be >= 0")
        if not 0.0 <= self.sustain <= 1.0:
            raise ValueError("sustain must be in [0, 1]")


# Per the replication target: continuous sonification sustains at full level,
# discrete events default to a short percussive attack/decay shape.
CONTINUOUS_ENVELOPE = Envelope(attack=0.01, decay=0.2, sustain=1.0, release=0.05)
DISCRETE_ENVELOPE = Envelope(attack=0.01, decay=0.2, sustain=0.0, release=0.05)


def adsr_gain(env: Envelope, t_on: float, t_off: float | None = None) -> float:
    """Envelope gain at t_on seconds after note-on.

    Linear 0->1 over attack, 1->sustain over decay, hold at sustain; when
    t_off (seconds since note-on at which the note was released) is given,
    linear ramp from the level at release time down to 0 over env.release.
    """

    def held_gain(t: float) -> float:
        if t < 0:
            return 0.0
        if t < env.attack:
            return t / env.attack
        t -= env.attack
        if t < env.decay:
            return 1.0 + (env.sustain - 1.0) * (t / env.decay)
        return env.sustain

    if t_off is None:
        return held_gain(t_on)
    if t_off > t_on:
        raise ValueError("t_off must be <= t_on")
    level = held_gain(t_off)
    if env.release == 0.0:
        return 0.0
    return max(0.0, level * (1.0 - (t_on - t_off) / env.release))


def adsr_curve(env: Envelope, times: np.ndarray, gate: float | None = None) -> np.ndarray:
    """Vectorized adsr_gain over an array of note-on times.

    `gate` is the note-off time (seconds since note-on) applied to every
    point past it, or None for a held note.
    """
    t = np.asarray(times, dtype=np.float64)
    gains = np.full_like(t, env.sustain)
    in_decay = t < env.attack + env.decay
    if env.decay > 0:
        gains[in_decay] = 1.0 + (env.sustain - 1.0) * ((t[in_decay] - env.attack) / env.decay)
    else:
        gains[in_decay] = 1.0
    in_attack = t < env.attack
    if env.attack > 0:
        gains[in_attack] = t[in_attack] / env.attack
    gains[t < 0] = 0.0
    if gate is not None:
        level = adsr_gain(env, gate)
        off = times >= gate
        if env.release == 0.0:
            gains[off] = 0.0
        else:
            gains[off] = np.maximum(0.0, level * (1.0 - (times[off] - gate) / env.release))
    return gains


def pan_gains(x: float) -> tuple[float, float]:
    """Equal-power pan law. x in [-1 (far left), 1 (far right)].

    theta = (x+1)*pi/4; gL = cos(theta), gR = sin(theta), so gL^2 + gR^2 = 1.
    Evaluated as gL = sin((1 - x) * pi / 4) (identical by reflection) so the
    extremes give exact zeros and the center is exactly symmetric in float64.
    """
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"pan position {x} outside [-1, 1]")
    return (math.sin((1.0 - x) * math.pi / 4.0), math.sin((1.0 + x) * math.pi / 4.0))


class SampleLoadError(Exception):
    """Audio sample file missing or undecodable."""


@dataclass(frozen=True)
class LoadedSample:
    """A decoded mono audio clip, resampled on the fly by the voice reader."""

    data: np.ndarray  # mono float64 in [-1, 1]
    source_rate: int

    def __post_init__(self):
        self.data.setflags(write=False)

    @property
    def duration(self) -> float:
        return len(self.data) / self.source_rate


def load_sample(path: str) -> LoadedSample:
    """Decode a 16-bit or float PCM WAV; stereo files are downmixed to mono."""
    try:
        rate, raw = wavfile.read(path)
    except FileNotFoundError:
        raise SampleLoadError(f"sample file not found: {path}") from None
    except Exception as exc:
        raise SampleLoadError(f"cannot decode {path}: {exc}") from exc
    data = np.asarray(raw, dtype=np.float64)
    if data.dtype != np.float64:
        data = data.astype(np.float64)
    if raw.dtype == np.int16:
        data = data / 32768.0
    elif raw.dtype == np.int32:
        data = data / 2147483648.0
    elif raw.dtype == np.uint8:
        data = (data - 128.0) / 128.0
    if data.ndim == 2:
        data = data.mean(axis=1)
    return LoadedSample(data=data, source_rate=int(rate))


def sample_voice(sample: LoadedSample, t, speed: float = 1.0, amplitude: float = 1.0):
    """Read a sample at t seconds since trigger with playback-rate `speed`.

    Speed scales both duration and pitch (plain resampling with linear
    interpolation). Returns 0 past the (scaled) end of the clip.
    """
    if speed <= 0:
        raise ValueError("speed must be > 0")
    t = np.asarray(t, dtype=np.float64)
    idx = t * speed * sample.source_rate
    out = amplitude * np.interp(idx, np.arange(len(sample.data)), sample.data, left=0.0, right=0.0)
    if np.ndim(t) == 0:
        return float(out)
    return out
