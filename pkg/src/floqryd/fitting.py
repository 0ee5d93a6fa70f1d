"""Deterministic nonlinear least squares for the package's fit families.

A small Levenberg-Marquardt core with centrally differenced Jacobians
(relative step 1e-6) drives every family; initial guesses follow fixed
rules (spectrum peak for frequencies, log-linear regression for decays,
unity scale factors), so identical inputs always produce identical fits.
Reported uncertainties are the covariance diagonal scaled by the reduced
chi-square.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j

__all__ = [
    "InsufficientDataError",
    "NoConvergenceError",
    "FitResult",
    "levenberg_marquardt",
    "fit_damped_sinusoid",
    "fit_exponential_decay",
    "fit_bessel_carrier",
    "fit_distance_calibration",
    "fit_tanh_efficiency",
]

_FD_REL_STEP = 1e-6
_MAX_ITER = 200


class InsufficientDataError(ValueError):
    pass


class NoConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitResult:
    parameters: dict[str, float]
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int

    def __getitem__(self, name: str) -> float:
        return self.parameters[name]

    def uncertainty(self, name: str) -> float:
        idx = list(self.parameters).index(name)
        return float(math.sqrt(max(self.covariance[idx, idx], 0.0)))


def _jacobian(model, x, p) -> np.ndarray:
    n = len(x)
    k = len(p)
    jac = np.empty((n, k))
    for i in range(k):
        step = _FD_REL_STEP * max(abs(p[i]), 1.0)
        pp = p.copy()
        pm = p.copy()
        pp[i] += step
        pm[i] -= step
        jac[:, i] = (model(x, pp) - model(x, pm)) / (2.0 * step)
    return jac


def levenberg_marquardt(
    model,
    x,
    y,
    p0,
    names,
    weights=None,
    *,
    max_iter: int = _MAX_ITER,
    on_accept=None,
) -> FitResult:
    """Minimise sum w^2 (model(x, p) - y)^2 over p.

    ``model(x, p) -> values``; ``on_accept(chi2)`` is called after every
    accepted step (used by tests to verify monotone descent).  Raises
    NoConvergenceError when the iteration stalls without meeting the
    convergence test or the problem is rank deficient at the solution.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    k = len(p)
    if len(y) <= k:
        raise InsufficientDataError(f"{len(y)} points cannot constrain {k} parameters")

    def chi2_of(pv):
        r = w * (model(x, pv) - y)
        return float(r @ r), r

    chi2, r = chi2_of(p)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = w[:, None] * _jacobian(model, x, p)
        jtj = jac.T @ jac
        g = jac.T @ r
        if np.max(np.abs(g)) < 1e-14 * max(chi2, 1e-30) + 1e-300:
            converged = True
            break
        accepted = False
        for _ in range(40):
            a = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-300))
            try:
                delta = np.linalg.solve(a, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            chi2_new, r_new = chi2_of(p + delta)
            if chi2_new <= chi2:
                rel = (chi2 - chi2_new) / max(chi2, 1e-300)
                p = p + delta
                chi2, r = chi2_new, r_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if on_accept is not None:
                    on_accept(chi2)
                if rel < 1e-14 or chi2 < 1e-28:
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # damping exhausted: no downhill direction, treat as stationary
            converged = chi2 < 1e-20 or it > 1
            break
        if converged:
            break
    else:
        raise NoConvergenceError(f"no convergence after {max_iter} iterations (chi2={chi2:.3e})")

    jac = w[:, None] * _jacobian(model, x, p)
    jtj = jac.T @ jac
    cond = np.linalg.cond(jtj)
    if not np.isfinite(cond) or cond > 1e13:
        raise NoConvergenceError(
            f"rank-deficient fit: normal-matrix condition number {cond:.2e}; "
            "parameters are not identifiable from these data"
        )
    dof = max(len(y) - k, 1)
    red_chi2 = chi2 / dof
    cov = np.linalg.inv(jtj) * red_chi2
    return FitResult(
        parameters={n: float(v) for n, v in zip(names, p)},
        covariance=cov,
        residual_norm=math.sqrt(chi2),
        converged=bool(converged),
        iterations=it,
    )


def _spectrum_peak_frequency(times: np.ndarray, values: np.ndarray) -> float:
    """Dominant frequency (cycles per time unit) from a uniformly resampled
    periodogram, excluding the zero bin."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    n = max(len(t), 64)
    grid = np.linspace(t[0], t[-1], n)
    res = np.interp(grid, t, v)
    res = res - res.mean()
    spec = np.abs(np.fft.rfft(res))
    freqs = np.fft.rfftfreq(n, d=(grid[-1] - grid[0]) / (n - 1))
    if len(spec) < 3:
        raise InsufficientDataError("too few points for a spectrum estimate")
    idx = 1 + int(np.argmax(spec[1:]))
    return float(freqs[idx])


def fit_damped_sinusoid(times, values, weights=None) -> FitResult:
    """a exp(-t/tau) cos(2 pi f t + phi) + c."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 8:
        raise InsufficientDataError("need at least 8 points")
    f0 = _spectrum_peak_frequency(t, y)
    span = t[-1] - t[0]
    if span * f0 < 1.5:
        raise InsufficientDataError(
            f"data span {span:.3g} covers only {span * f0:.2f} periods of the "
            "estimated oscillation; need at least 1.5"
        )
    c0 = float(y.mean())
    resid = y - c0
    cosp = 2.0 * np.mean(resid * np.cos(2 * np.pi * f0 * t))
    sinp = 2.0 * np.mean(resid * np.sin(2 * np.pi * f0 * t))
    a0 = math.hypot(cosp, sinp)
    phi0 = math.atan2(-sinp, cosp)

    # the decay enters as a rate so that undamped data (rate -> 0) stay
    # well conditioned; decay_time is reported as its inverse
    def model(x, p):
        a, rate, f, phi, c = p
        return a * np.exp(-rate * x) * np.cos(2 * np.pi * f * x + phi) + c

    fit = levenberg_marquardt(
        model, t, y, [a0, 1.0 / span, f0, phi0, c0],
        ["amplitude", "decay_rate", "frequency", "phase", "offset"], weights,
    )
    rate = fit.parameters["decay_rate"]
    params = {
        "amplitude": fit.parameters["amplitude"],
        "decay_time": 1.0 / rate if rate > 1e-300 else math.inf,
        "frequency": fit.parameters["frequency"],
        "phase": fit.parameters["phase"],
        "offset": fit.parameters["offset"],
    }
    cov = fit.covariance.copy()
    if rate > 1e-300 and np.isfinite(1.0 / rate):
        jac = -1.0 / rate**2  # d(tau)/d(rate)
        cov[1, :] *= jac
        cov[:, 1] *= jac
    else:
        cov[1, :] = cov[:, 1] = np.inf
    return FitResult(
        parameters=params,
        covariance=cov,
        residual_norm=fit.residual_norm,
        converged=fit.converged,
        iterations=fit.iterations,
    )


def fit_exponential_decay(times, values) -> FitResult:
    """a exp(-t/tau) + c."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 5:
        raise InsufficientDataError("need at least 5 points")
    c0 = float(y[-1])
    a0 = float(y[0] - c0)
    resid = y - c0
    scale = abs(a0) if a0 != 0 else max(abs(resid).max(), 1e-12)
    sign = 1.0 if a0 >= 0 else -1.0
    pos = sign * resid
    mask = pos > 1e-3 * scale
    if mask.sum() >= 2:
        slope = np.polyfit(t[mask], np.log(pos[mask]), 1)[0]
        tau0 = -1.0 / slope if slope < 0 else (t[-1] - t[0])
    else:
        tau0 = t[-1] - t[0]
    tau0 = float(min(max(tau0, 1e-6), 100 * (t[-1] - t[0] + 1e-12)))

    def model(x, p):
        a, tau, c = p
        return a * np.exp(-x / tau) + c

    return levenberg_marquardt(model, t, y, [a0, tau0, c0], ["amplitude", "decay_time", "offset"])


def fit_bessel_carrier(alphas, carrier_powers) -> FitResult:
    """|J0(alpha / chi)| with a single scale factor between the specified
    and the realised modulation index."""
    a = np.asarray(alphas, dtype=float)
    y = np.asarray(carrier_powers, dtype=float)
    if len(a) < 10:
        raise InsufficientDataError("need at least 10 points")
    if y.min() > 0.5 * y.max():
        raise InsufficientDataError("data do not cover a carrier zero")

    def model(x, p):
        (chi,) = p
        return np.abs(np.array([bessel_j(0, xi / chi) for xi in x]))

    return levenberg_marquardt(model, a, y, [1.0], ["chi"])


def fit_distance_calibration(freq_spacings, resonance_shifts, c6_mhz_um6: float) -> FitResult:
    """shift(f) = C6 / (kappa f)^6 + offset with C6 fixed (ordinary-frequency
    units: MHz and um)."""
    f = np.asarray(freq_spacings, dtype=float)
    y = np.asarray(resonance_shifts, dtype=float)
    if len(f) < 4:
        raise InsufficientDataError("need at least 4 points")
    y0 = max(y[0], 1e-12)
    kappa0 = (c6_mhz_um6 / y0) ** (1.0 / 6.0) / f[0]

    def model(x, p):
        kappa, delta_u = p
        return c6_mhz_um6 / (kappa * x) ** 6 + delta_u

    return levenberg_marquardt(model, f, y, [kappa0, 0.0], ["kappa", "delta_u"])


def fit_tanh_efficiency(drive_amplitudes, powers, frequency: float | None = None) -> FitResult:
    """A tanh((v - V0)/sigma) + C for one frequency slice."""
    v = np.asarray(drive_amplitudes, dtype=float)
    y = np.asarray(powers, dtype=float)
    if len(v) < 8:
        raise InsufficientDataError("need at least 8 points")
    a0 = 0.5 * (y.max() - y.min())
    c0 = 0.5 * (y.max() + y.min())
    v0 = float(v[int(np.argmin(np.abs(y - c0)))])
    s0 = 0.25 * (v.max() - v.min())

    def model(x, p):
        a, vv0, sigma, c = p
        return a * np.tanh((x - vv0) / sigma) + c

    return levenberg_marquardt(model, v, y, [a0, v0, s0, c0], ["A", "V0", "sigma", "C"])
