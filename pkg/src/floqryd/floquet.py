"""One-period propagator, quasi-energy modes and the inverse participation
ratio of the single-excitation symmetric state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel
from .hamiltonian import HamiltonianBuilder, pack
from .linalg import unitary_eig
from .observables import w_state
from .schedules import Ffm, FfmParams, PulseSegment, Schedule
from .system import SystemConfig, interaction_strength

__all__ = [
    "DissipativeScheduleUnsupportedError",
    "ZeroOverlapError",
    "FloquetSpectrum",
    "one_period_propagator",
    "floquet_spectrum",
    "ipr",
    "ipr_map",
]

DEGENERACY_GAP = 1e-8


class DissipativeScheduleUnsupportedError(ValueError):
    pass


class ZeroOverlapError(ValueError):
    pass


def one_period_propagator(h: HamiltonianBuilder, omega0: float, *, dissipators=None, atol: float = 1e-10) -> np.ndarray:
    """Unitary propagator over one modulation period, starting at the phase
    origin of the first frequency-modulated segment (coherent dynamics only).
    """
    if dissipators is not None and any(np.any(op) for op in dissipators.collapse_ops):
        raise DissipativeScheduleUnsupportedError("propagator is defined for coherent evolution only")
    problem = pack(h)
    seg_idx = None
    for i, seg in enumerate(h.schedule.segments):
        if isinstance(seg.kind, Ffm):
            seg_idx = i
            break
    if seg_idx is None:
        raise ValueError("schedule has no frequency-modulated segment")
    seg = h.schedule.segments[seg_idx]
    w = seg.kind.params.modulation_frequency
    if abs(w - omega0) > 1e-9 * max(w, omega0):
        raise ValueError(f"omega0={omega0} does not match the segment modulation frequency {w}")
    period = 2.0 * math.pi / omega0
    t0 = problem.seg_table[seg_idx, 6]  # phase origin (absolute)
    if t0 + period > problem.seg_table[seg_idx, 1] + 1e-9:
        raise ValueError("segment shorter than one modulation period")

    d = problem.dim
    y = np.ascontiguousarray(np.eye(d, dtype=complex).reshape(-1))
    t = t0
    h_carry = min(problem.max_step[seg_idx], period / 50.0)
    h_carry, status, _, _ = kernel.integrate_interval(
        y, t0, t0 + period, atol, h_carry, problem.max_step[seg_idx],
        problem.terms, problem.seg_table[seg_idx], problem.ram_a[seg_idx],
        problem.ram_b[seg_idx], problem.pairs, None, 1, d,
    )
    if status != kernel.STATUS_OK:
        raise RuntimeError("propagator integration failed (step underflow)")
    return y.reshape(d, d)


@dataclass(frozen=True)
class FloquetSpectrum:
    """Quasi-phases (propagator eigenphases) and stroboscopic modes."""

    period: float
    quasi_phases: np.ndarray
    modes: np.ndarray  # columns

    def mode_groups(self) -> list[list[int]]:
        """Indices grouped by (near-)degenerate quasi-phase, including the
        wrap-around at +-pi."""
        n = len(self.quasi_phases)
        order = np.argsort(self.quasi_phases, kind="stable")
        groups: list[list[int]] = [[int(order[0])]]
        for k in order[1:]:
            if self.quasi_phases[k] - self.quasi_phases[groups[-1][-1]] < DEGENERACY_GAP:
                groups[-1].append(int(k))
            else:
                groups.append([int(k)])
        if len(groups) > 1:
            lo = self.quasi_phases[groups[0][0]]
            hi = self.quasi_phases[groups[-1][-1]]
            if (lo + math.pi) + (math.pi - hi) < DEGENERACY_GAP:
                groups[0].extend(groups.pop())
        return groups

    def overlaps(self, reference: np.ndarray) -> np.ndarray:
        """Overlap weights p_k of a normalized reference state, computed on
        degenerate-subspace projectors so they are basis independent."""
        ref = np.asarray(reference, dtype=complex)
        ps = []
        for group in self.mode_groups():
            sub = self.modes[:, group]
            amp = sub.conj().T @ ref
            ps.append(float(np.real(np.vdot(amp, amp))))
        return np.array(ps)


def floquet_spectrum(h: HamiltonianBuilder, omega0: float) -> FloquetSpectrum:
    u = one_period_propagator(h, omega0)
    phases, modes = unitary_eig(u)
    return FloquetSpectrum(period=2.0 * math.pi / omega0, quasi_phases=phases, modes=modes)


def ipr(spectrum: FloquetSpectrum, reference: np.ndarray) -> float:
    """(1 / sum_k p_k^2) - 1; zero when the reference coincides with one
    Floquet mode, larger the more modes participate."""
    ref = np.asarray(reference, dtype=complex)
    nrm = np.linalg.norm(ref)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("reference must be normalized")
    ps = spectrum.overlaps(ref)
    if np.all(ps < 1e-14):
        raise ZeroOverlapError("reference has no overlap with any Floquet mode")
    return float(1.0 / np.sum(ps**2) - 1.0)


def ipr_map(
    config: SystemConfig,
    alpha: float,
    doppler_grid,
    omega0_grid,
    *,
    n_periods_margin: float = 1.05,
) -> np.ndarray:
    """IPR of the symmetric single-excitation state on a grid of modulation
    frequencies (rows) and antisymmetric per-atom detuning offsets (columns,
    +d on atom 0 and -d on atom 1)."""
    doppler_grid = np.asarray(doppler_grid, dtype=float)
    omega0_grid = np.asarray(omega0_grid, dtype=float)
    if doppler_grid.size == 0 or omega0_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if config.array.n_atoms != 2:
        raise ValueError("IPR map is defined for the two-atom configuration")
    wref = w_state((0.0, 0.0))
    out = np.empty((omega0_grid.size, doppler_grid.size))
    for r, w0 in enumerate(omega0_grid):
        period = 2.0 * math.pi / w0
        seg = PulseSegment(n_periods_margin * period, Ffm(FfmParams.from_alpha(alpha, w0)))
        sched = Schedule((seg,))
        for c, dd in enumerate(doppler_grid):
            builder = HamiltonianBuilder(
                config.array,
                config.lasers,
                sched,
                detuning_offsets=(float(dd), float(-dd)),
            )
            out[r, c] = ipr(floquet_spectrum(builder, w0), wref)
    return out
