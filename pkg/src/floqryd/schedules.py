"""Time-dependent drive description.

A schedule is a sequence of segments tiling [0, total) with no gaps; each
segment is one of

* ``Static``     constant detuning, full Rabi drive;
* ``Ffm``        sinusoidal detuning delta * sin(omega0 (t - t0)) about an
                 offset, full Rabi drive, optional residual amplitude
                 modulation of the Rabi frequency;
* ``LaserFree``  no drive at all;
* ``Stirap``     adiabatic ramp of the modulation index alpha(t), detuning
                 alpha(t) * omega0 * sin(omega0 t).

Segment-local time runs from 0 to ``duration``; the sinusoid phase restarts
at each segment start (the waveform generator is triggered per segment).
Boundaries follow a closed-open convention: a query exactly at a boundary
belongs to the later segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .bessel import bessel_j, j0_j1_crossing, j0_zero
from .system import TWO_PI, LaserParams

__all__ = [
    "TimeOutOfSegmentError",
    "TimeOutOfScheduleError",
    "FfmParams",
    "RamModel",
    "StirapProfile",
    "Static",
    "Ffm",
    "LaserFree",
    "Stirap",
    "PulseSegment",
    "Schedule",
    "detuning_at",
    "rabi_at",
    "stirap_alpha",
    "pi_pulse_duration",
]


class TimeOutOfSegmentError(ValueError):
    pass


class TimeOutOfScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class FfmParams:
    """Sinusoidal detuning modulation: amplitude, angular frequency (rad/us)
    and the segment-local time at which the sine argument is zero."""

    modulation_amplitude: float
    modulation_frequency: float
    phase_origin: float = 0.0

    def __post_init__(self):
        if self.modulation_frequency <= 0:
            raise ValueError("modulation frequency must be positive")
        if self.modulation_amplitude < 0:
            raise ValueError("modulation amplitude must be >= 0")

    @property
    def alpha(self) -> float:
        """Modulation index, amplitude over frequency."""
        return self.modulation_amplitude / self.modulation_frequency

    @classmethod
    def from_alpha(cls, alpha: float, modulation_frequency: float, phase_origin: float = 0.0) -> "FfmParams":
        return cls(alpha * modulation_frequency, modulation_frequency, phase_origin)


@dataclass(frozen=True)
class RamModel:
    """Residual amplitude modulation of the Rabi frequency: harmonics
    (A_n, B_n) of the modulation frequency, sine and cosine quadratures."""

    harmonics: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for a, b in self.harmonics:
            if abs(a) >= 1 or abs(b) >= 1:
                raise ValueError("RAM harmonics must stay perturbative (|A|,|B| < 1)")

    def factor(self, omega0: float, t: float) -> float:
        f = 1.0
        for n, (a, b) in enumerate(self.harmonics, start=1):
            f += a * math.sin(n * omega0 * t) + b * math.cos(n * omega0 * t)
        return f


@lru_cache(maxsize=32)
def _condition_solved_constants(alpha_start: float, alpha_mid: float, rate: float) -> tuple[float, float, float]:
    """Solve c1 * tanh(-(rate/T)(t - T/2) + s) + c2 for the boundary values
    alpha(0) = alpha_start, alpha(T) = 0, alpha(T/2) = alpha_mid.

    Reduces to a single equation in the offset s, solved by bisection.
    """
    h = rate / 2.0

    def mismatch(s: float) -> float:
        num = math.tanh(h + s) - math.tanh(s - h)
        den = math.tanh(s) - math.tanh(s - h)
        return num / den - alpha_start / alpha_mid

    lo, hi = 1e-9, 10.0
    flo, fhi = mismatch(lo), mismatch(hi)
    if flo * fhi > 0:
        raise ValueError("no tanh profile satisfies the ramp conditions")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = mismatch(mid)
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    s = 0.5 * (lo + hi)
    c1 = alpha_start / (math.tanh(h + s) - math.tanh(s - h))
    c2 = -c1 * math.tanh(s - h)
    return c1, c2, s


@dataclass(frozen=True)
class StirapProfile:
    """Tanh ramp of the modulation index used for adiabatic transfer.

    ``LiteralPaper`` evaluates
        alpha(t) = alpha0 * (A * tanh(-(rate/T)(t - T/2) + offset) + 1)
    with the published constants verbatim, clamping negative values to zero.

    ``ConditionSolved`` keeps the tanh shape and rate but re-solves the
    remaining constants so that the ramp starts at the first zero of J0
    (pump coupling off), ends at alpha = 0 (the Stokes J1 coupling off) and
    balances J0 = J1 at mid-ramp.  Starting at a higher J0 zero would sweep
    alpha through a J1 zero mid-ramp and collapse the transfer, so the first
    zero is the only viable choice.
    """

    total_time: float
    mode: str = "condition_solved"  # "literal" or "condition_solved"
    alpha_start_scale: float = 1.2
    rate: float = 3.5
    offset: float = 0.23
    alpha0: float = 2.4

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if self.mode not in ("literal", "condition_solved"):
            raise ValueError(f"unknown STIRAP mode {self.mode!r}")

    def alpha(self, t: float) -> float:
        if not (0.0 <= t <= self.total_time + 1e-12):
            raise TimeOutOfSegmentError(f"t={t} outside [0, {self.total_time}]")
        T = self.total_time
        x = -(self.rate / T) * (t - T / 2.0)
        if self.mode == "literal":
            val = self.alpha0 * (self.alpha_start_scale * math.tanh(x + self.offset) + 1.0)
        else:
            c1, c2, s = _condition_solved_constants(j0_zero(1), j0_j1_crossing(1), self.rate)
            val = c1 * math.tanh(x + s) + c2
        return max(0.0, val)


def stirap_alpha(profile: StirapProfile, t: float) -> float:
    """Modulation index at segment-local time t."""
    return profile.alpha(t)


@dataclass(frozen=True)
class Static:
    delta0: float = 0.0


@dataclass(frozen=True)
class Ffm:
    params: FfmParams
    delta0: float = 0.0


@dataclass(frozen=True)
class LaserFree:
    pass


@dataclass(frozen=True)
class Stirap:
    profile: StirapProfile
    omega0: float


@dataclass(frozen=True)
class PulseSegment:
    duration: float
    kind: Static | Ffm | LaserFree | Stirap
    rabi_scale: float = 1.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if isinstance(self.kind, LaserFree) and self.rabi_scale != 0.0:
            object.__setattr__(self, "rabi_scale", 0.0)

    @property
    def laser_on(self) -> bool:
        return self.rabi_scale > 0.0

    def modulation_frequency(self) -> float | None:
        """Angular frequency of the fastest drive oscillation, if any."""
        if isinstance(self.kind, Ffm):
            return self.kind.params.modulation_frequency
        if isinstance(self.kind, Stirap):
            return self.kind.omega0
        return None


def _check_local_time(segment: PulseSegment, t: float) -> None:
    if not (0.0 <= t <= segment.duration + 1e-12):
        raise TimeOutOfSegmentError(f"t={t} outside segment of duration {segment.duration}")


def detuning_at(segment: PulseSegment, t: float) -> float:
    """Laser detuning (rad/us) at segment-local time t."""
    _check_local_time(segment, t)
    k = segment.kind
    if isinstance(k, Static):
        return k.delta0
    if isinstance(k, Ffm):
        p = k.params
        return k.delta0 + p.modulation_amplitude * math.sin(p.modulation_frequency * (t - p.phase_origin))
    if isinstance(k, LaserFree):
        return 0.0
    if isinstance(k, Stirap):
        return k.profile.alpha(t) * k.omega0 * math.sin(k.omega0 * t)
    raise TypeError(f"unknown segment kind {k!r}")


def rabi_at(segment: PulseSegment, t: float, rabi: float, ram: RamModel | None = None) -> float:
    """Rabi frequency (rad/us) at segment-local time t.

    RAM perturbs the amplitude only during FFM segments, referenced to the
    segment's modulation phase.
    """
    _check_local_time(segment, t)
    base = rabi * segment.rabi_scale
    if ram is not None and isinstance(segment.kind, Ffm):
        p = segment.kind.params
        base *= ram.factor(p.modulation_frequency, t - p.phase_origin)
    return base


def pi_pulse_duration(lasers: LaserParams, collective: bool = True) -> float:
    """Duration (us) of a resonant pi pulse; the collective variant drives
    the blockaded pair at the sqrt(2)-enhanced Rabi frequency."""
    enhancement = math.sqrt(2.0) if collective else 1.0
    return math.pi / (enhancement * lasers.rabi)


@dataclass(frozen=True)
class Schedule:
    """Contiguous pulse segments; absolute time starts at 0."""

    segments: tuple[PulseSegment, ...]
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        starts, acc = [], 0.0
        for s in self.segments:
            starts.append(acc)
            acc += s.duration
        object.__setattr__(self, "_starts", tuple(starts))

    @property
    def total_duration(self) -> float:
        return self._starts[-1] + self.segments[-1].duration

    def locate(self, t: float) -> tuple[PulseSegment, float]:
        """Segment containing absolute time t and the segment-local time.

        Closed-open: a boundary belongs to the later segment; the schedule
        end belongs to the last segment.
        """
        total = self.total_duration
        if not (0.0 <= t <= total + 1e-9):
            raise TimeOutOfScheduleError(f"t={t} outside [0, {total}]")
        t = min(t, total)
        idx = len(self.segments) - 1
        for i in range(len(self.segments) - 1):
            if self._starts[i] <= t < self._starts[i + 1]:
                idx = i
                break
        return self.segments[idx], t - self._starts[idx]

    def detuning(self, t: float) -> float:
        seg, tl = self.locate(t)
        return detuning_at(seg, tl)

    def rabi(self, t: float, rabi: float, ram: RamModel | None = None) -> float:
        seg, tl = self.locate(t)
        return rabi_at(seg, tl, rabi, ram)


def _bessel_check_values() -> dict[str, float]:
    """Bessel magnitudes the profile conditions rest on (for diagnostics)."""
    z1 = j0_zero(1)
    xc = j0_j1_crossing(1)
    return {"j0_first_zero": z1, "balance_point": xc, "balanced_value": bessel_j(0, xc)}
