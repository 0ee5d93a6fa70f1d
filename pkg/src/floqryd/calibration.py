"""Simulated modulator hardware for the calibration loops.

`AomTransferModel` captures the frequency-dependent diffraction efficiency
as a saturating tanh in the drive amplitude whose four parameters vary
polynomially with RF frequency.  The compensation routine sweeps the
modulated drive through the model, extracts the residual amplitude ripple
harmonic by harmonic, and minimises the ripple with plain finite-difference
gradient descent over the harmonic drive corrections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .schedules import FfmParams
from .system import to_mhz

__all__ = [
    "FrequencyOutOfBandError",
    "TargetUnreachableError",
    "InsufficientSamplesError",
    "NoImprovementError",
    "AomTransferModel",
    "RamSpectrum",
    "simulated_power",
    "drive_for_power",
    "ram_spectrum",
    "compensate_ram",
]


class FrequencyOutOfBandError(ValueError):
    pass


class TargetUnreachableError(ValueError):
    pass


class InsufficientSamplesError(ValueError):
    pass


class NoImprovementError(RuntimeError):
    pass


@dataclass(frozen=True)
class AomTransferModel:
    """P(f, v) = A(f) tanh((v - V0(f)) / sigma(f)) + C(f); coefficients are
    polynomials in the RF frequency (MHz), lowest order first.  The optional
    quadratic pre-correction divides the drive by a(f - f_c)^2 + c before it
    reaches the modulator."""

    a_coeffs: tuple[float, ...]
    v0_coeffs: tuple[float, ...]
    sigma_coeffs: tuple[float, ...]
    c_coeffs: tuple[float, ...]
    band: tuple[float, float]
    precorrection: tuple[float, float, float] | None = None

    def __post_init__(self):
        lo, hi = self.band
        if hi <= lo:
            raise ValueError("band must be an increasing (f_min, f_max) pair")
        for f in np.linspace(lo, hi, 33):
            if npoly.polyval(f, self.sigma_coeffs) <= 0:
                raise ValueError(f"sigma(f) must stay positive over the band (fails at {f:.3g} MHz)")

    def _check_band(self, f: float) -> None:
        lo, hi = self.band
        if not (lo <= f <= hi):
            raise FrequencyOutOfBandError(f"{f:.6g} MHz outside [{lo}, {hi}] MHz")

    def params_at(self, f: float) -> tuple[float, float, float, float]:
        self._check_band(f)
        return (
            float(npoly.polyval(f, self.a_coeffs)),
            float(npoly.polyval(f, self.v0_coeffs)),
            float(npoly.polyval(f, self.sigma_coeffs)),
            float(npoly.polyval(f, self.c_coeffs)),
        )

    def precorrect(self, v: float, f: float) -> float:
        if self.precorrection is None:
            return v
        a, fc, c = self.precorrection
        return v / (a * (f - fc) ** 2 + c)

    @classmethod
    def from_dict(cls, d: dict) -> "AomTransferModel":
        return cls(
            a_coeffs=tuple(d["a_coeffs"]),
            v0_coeffs=tuple(d["v0_coeffs"]),
            sigma_coeffs=tuple(d["sigma_coeffs"]),
            c_coeffs=tuple(d["c_coeffs"]),
            band=tuple(d["band"]),
            precorrection=tuple(d["precorrection"]) if d.get("precorrection") else None,
        )


def simulated_power(model: AomTransferModel, f: float, v: float) -> float:
    a, v0, sigma, c = model.params_at(f)
    return a * math.tanh((v - v0) / sigma) + c


def drive_for_power(model: AomTransferModel, f: float, target: float) -> float:
    """Invert the transfer curve; round-trips with `simulated_power` to 1e-9
    inside the open reachable range (C - A, C + A)."""
    a, v0, sigma, c = model.params_at(f)
    span = abs(a)
    if not (c - span < target < c + span):
        raise TargetUnreachableError(f"target {target:.6g} outside ({c - span:.6g}, {c + span:.6g})")
    return v0 + sigma * math.atanh((target - c) / a)


@dataclass(frozen=True)
class RamSpectrum:
    """Harmonic content (n, A_n, B_n) of a normalised power ripple and the
    half peak-to-peak fraction of the reconstructed envelope."""

    harmonics: tuple[tuple[int, float, float], ...]
    fundamental: float
    peak_to_peak_fraction: float

    def as_ram_model_harmonics(self) -> tuple[tuple[float, float], ...]:
        return tuple((a, b) for _, a, b in self.harmonics)


def ram_spectrum(times, values, omega0: float, n_harmonics: int = 4) -> RamSpectrum:
    """Project a power trace spanning an integer number of modulation
    periods onto sin/cos harmonics of omega0.

    Requires >= 4 periods and >= 32 uniform samples per period.  The ripple
    fraction is half the peak-to-peak excursion of the reconstructed
    envelope relative to the mean level.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    period = 2.0 * math.pi / omega0
    dt = np.diff(t)
    if np.abs(dt - dt[0]).max() > 1e-9 * dt[0]:
        raise InsufficientSamplesError("trace must be uniformly sampled")
    step = float(dt[0])
    # periodic sampling convention: N samples cover N*step of signal; an
    # endpoint-inclusive trace (last point one period after the first phase)
    # is detected and its duplicate endpoint dropped
    n_excl = len(t) * step / period
    n_incl = (len(t) - 1) * step / period
    if abs(n_excl - round(n_excl)) < 1e-6 and round(n_excl) >= 1:
        tt, yy = t, y
        n_periods = round(n_excl)
    elif abs(n_incl - round(n_incl)) < 1e-6 and round(n_incl) >= 1:
        tt, yy = t[:-1], y[:-1]
        n_periods = round(n_incl)
    else:
        raise InsufficientSamplesError("trace must span an integer number of periods")
    if n_periods < 4:
        raise InsufficientSamplesError(f"trace spans {n_periods} periods; need >= 4")
    if len(tt) / n_periods < 32:
        raise InsufficientSamplesError("need >= 32 samples per period")

    mean = yy.mean()
    xx = yy / mean - 1.0
    rows = []
    for n in range(1, n_harmonics + 1):
        a_n = 2.0 * float(np.mean(xx * np.sin(n * omega0 * (tt - t[0]))))
        b_n = 2.0 * float(np.mean(xx * np.cos(n * omega0 * (tt - t[0]))))
        rows.append((n, a_n, b_n))
    grid = np.linspace(0.0, period, 512, endpoint=False)
    env = np.ones_like(grid)
    for n, a_n, b_n in rows:
        env += a_n * np.sin(n * omega0 * grid) + b_n * np.cos(n * omega0 * grid)
    ptp = 0.5 * float(env.max() - env.min())
    return RamSpectrum(harmonics=tuple(rows), fundamental=omega0, peak_to_peak_fraction=ptp)


def _ripple_trace(model, ffm, f_carrier, v_base, coeffs, disturbance=(), n_points=256):
    """Simulated power over one modulation period with harmonic drive
    corrections coeffs = [a1, b1, a2, b2, ...].

    ``disturbance`` lists (a_n, b_n) harmonics of a multiplicative power
    ripple synchronous with the modulation; a static transfer curve alone
    can only generate ripple symmetric in the sine sweep, so asymmetric
    (cosine-quadrature) imperfections enter through this term.
    """
    period = 2.0 * math.pi / ffm.modulation_frequency
    t = np.linspace(0.0, period, n_points, endpoint=False)
    phase = ffm.modulation_frequency * t
    f = f_carrier - to_mhz(ffm.modulation_amplitude) * np.sin(phase)
    v = np.full_like(t, float(v_base))
    for h in range(len(coeffs) // 2):
        v += v_base * (coeffs[2 * h] * np.sin((h + 1) * phase) + coeffs[2 * h + 1] * np.cos((h + 1) * phase))
    p = np.array([simulated_power(model, fi, vi) for fi, vi in zip(f, v)])
    for h, (a_n, b_n) in enumerate(disturbance, start=1):
        p *= 1.0 + a_n * np.sin(h * phase) + b_n * np.cos(h * phase)
    return t, p


def _objective(model, ffm, f_carrier, v_base, coeffs, disturbance=()) -> float:
    _, p = _ripple_trace(model, ffm, f_carrier, v_base, coeffs, disturbance)
    return 0.5 * float(p.max() - p.min()) / float(p.mean())


def compensate_ram(
    model: AomTransferModel,
    ffm: FfmParams,
    n_harmonics: int = 4,
    max_iters: int = 300,
    *,
    f_carrier: float | None = None,
    target_fraction: float = 0.5,
    disturbance: tuple[tuple[float, float], ...] = (),
    on_accept=None,
) -> tuple[np.ndarray, RamSpectrum]:
    """Minimise the power ripple of the swept drive by adding sin/cos
    harmonic corrections to the drive amplitude (finite-difference gradient
    descent with backtracking; accepted objective values never increase).

    Returns the harmonic amplitude coefficients [a1, b1, ...] and the
    residual ripple spectrum of the compensated trace.
    """
    if f_carrier is None:
        f_carrier = 0.5 * (model.band[0] + model.band[1])
    sweep = to_mhz(ffm.modulation_amplitude)
    lo, hi = model.band
    if f_carrier - sweep < lo or f_carrier + sweep > hi:
        raise FrequencyOutOfBandError("modulation sweep leaves the model band")
    a, v0, sigma, c = model.params_at(f_carrier)
    v_base = drive_for_power(model, f_carrier, c + target_fraction * abs(a))

    coeffs = np.zeros(2 * n_harmonics)
    obj = _objective(model, ffm, f_carrier, v_base, coeffs, disturbance)
    if on_accept is not None:
        on_accept(obj)
    fd = 1e-5
    step = 0.25
    history = [obj]
    for _ in range(max_iters):
        grad = np.empty_like(coeffs)
        for i in range(len(coeffs)):
            cp = coeffs.copy()
            cm = coeffs.copy()
            cp[i] += fd
            cm[i] -= fd
            grad[i] = (
                _objective(model, ffm, f_carrier, v_base, cp, disturbance)
                - _objective(model, ffm, f_carrier, v_base, cm, disturbance)
            ) / (2 * fd)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-12:
            if len(history) == 1:
                raise NoImprovementError("ripple objective is flat at the starting point")
            break
        improved = False
        s = step
        for _ in range(30):
            trial = coeffs - s * grad / gnorm
            val = _objective(model, ffm, f_carrier, v_base, trial, disturbance)
            if val < obj:
                coeffs, obj = trial, val
                step = min(s * 1.5, 0.5)
                improved = True
                if on_accept is not None:
                    on_accept(obj)
                break
            s *= 0.5
        if not improved:
            break
        history.append(obj)
        if len(history) > 5 and (history[-6] - obj) < 1e-5 * max(obj, 1e-12):
            break

    t, p = _ripple_trace(model, ffm, f_carrier, v_base, coeffs, disturbance, n_points=256)
    period = 2.0 * math.pi / ffm.modulation_frequency
    reps = 4
    tt = np.concatenate([t + k * period for k in range(reps)])
    pp = np.tile(p, reps)
    spec = ram_spectrum(tt, pp, ffm.modulation_frequency, n_harmonics)
    return coeffs, spec
