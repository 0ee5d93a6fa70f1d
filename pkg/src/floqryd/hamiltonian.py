"""N-atom driven Hamiltonian in the product basis, and the Bessel-weighted
effective couplings of the frequency-modulated drive.

The Hamiltonian (hbar = 1, rad/us) is

    H = -sum_i (Delta(t) + Delta_D_i) n_i
        + (Omega(t)/2) sum_i (e^{i phi_i} |e><g|_i + h.c.)
        + sum_{i<j} V_ij(t) n_i n_j

with n_i the Rydberg projector on atom i.  With all drive phases phi_i zero
(the default) the drive term is the plain sum of sigma_x operators.  The
per-atom phases support the lab-frame convention in which each atom sees the
excitation light at its own position; observables are gauge-equivalent
either way.

For integration the Hamiltonian is decomposed into constant matrices with
scalar time-dependent coefficients; `pack()` produces the flat arrays the
compiled kernel consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bessel
from .schedules import Ffm, LaserFree, RamModel, Schedule, Static, Stirap, _condition_solved_constants
from .system import AtomArray, LaserParams, interaction_strength

__all__ = [
    "TruncationTooSmallError",
    "HamiltonianBuilder",
    "EffectiveCouplings",
    "hamiltonian_at",
    "effective_couplings",
    "basis_labels",
    "excitation_counts",
    "number_op",
    "pack",
    "PackedProblem",
]

SEG_COLS = 13  # packed segment row width
FFM_STEP_FRACTION = 20.0  # integrator step cap: modulation period / 20


class TruncationTooSmallError(ValueError):
    pass


def basis_labels(n_atoms: int) -> list[str]:
    """Product-basis labels; atom 0 is the most significant position."""
    return [
        "".join("e" if (i >> (n_atoms - 1 - a)) & 1 else "g" for a in range(n_atoms))
        for i in range(2**n_atoms)
    ]


def excitation_counts(n_atoms: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(2**n_atoms)])


def number_op(i: int, n_atoms: int) -> np.ndarray:
    """Rydberg projector |e><e| on atom i, identity elsewhere."""
    op = np.array([[1.0]])
    pe = np.diag([0.0, 1.0])
    eye = np.eye(2)
    for a in range(n_atoms):
        op = np.kron(op, pe if a == i else eye)
    return op


def _raise_op(i: int, n_atoms: int) -> np.ndarray:
    """|e><g| on atom i."""
    op = np.array([[1.0]])
    up = np.array([[0.0, 0.0], [1.0, 0.0]])
    eye = np.eye(2)
    for a in range(n_atoms):
        op = np.kron(op, up if a == i else eye)
    return op


@dataclass(frozen=True)
class HamiltonianBuilder:
    """Everything needed to evaluate H(t): geometry, drive, schedule, and
    per-shot disorder (detuning offsets, drive phases, velocities)."""

    array: AtomArray
    lasers: LaserParams
    schedule: Schedule
    ram: RamModel | None = None
    detuning_offsets: tuple[float, ...] = ()
    drive_phases: tuple[float, ...] | None = None
    velocities: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        n = self.array.n_atoms
        if self.detuning_offsets and len(self.detuning_offsets) != n:
            raise ValueError("detuning_offsets length must equal atom count")
        if self.drive_phases is not None and len(self.drive_phases) != n:
            raise ValueError("drive_phases length must equal atom count")
        if self.velocities is not None and len(self.velocities) != n:
            raise ValueError("velocities length must equal atom count")

    @property
    def n_atoms(self) -> int:
        return self.array.n_atoms

    @property
    def dim(self) -> int:
        return 2**self.array.n_atoms


@dataclass(frozen=True)
class PackedProblem:
    """Flat-array form of a builder, shared by both integrator backends.

    terms[0] carries the static part (detuning offsets), terms[1] the global
    detuning operator -sum n_i, terms[2] the half drive operator; one term
    per atom pair follows.  Coefficients are [1, Delta(t), Omega(t), V_p(t)].
    """

    dim: int
    terms: np.ndarray  # (K, d, d) complex, C-contiguous
    seg_table: np.ndarray  # (n_seg, SEG_COLS) float
    ram_a: np.ndarray  # (n_seg, n_harm) float
    ram_b: np.ndarray
    pairs: np.ndarray  # (n_pairs, 7): rel pos (3), rel vel (3), c6
    laser_on: tuple[bool, ...]
    max_step: tuple[float, ...]
    total_duration: float = field(default=0.0)


def pack(builder: HamiltonianBuilder) -> PackedProblem:
    n = builder.n_atoms
    d = builder.dim
    n_ops = [number_op(i, n) for i in range(n)]

    const = np.zeros((d, d), dtype=complex)
    for i, off in enumerate(builder.detuning_offsets or ()):
        const -= off * n_ops[i]

    det = -sum(n_ops)

    drive = np.zeros((d, d), dtype=complex)
    phases = builder.drive_phases or (0.0,) * n
    for i, phi in enumerate(phases):
        up = _raise_op(i, n)
        drive += 0.5 * (np.exp(1j * phi) * up + np.exp(-1j * phi) * up.T)

    pair_terms = []
    pair_rows = []
    pos = builder.array.as_array()
    vel = np.asarray(builder.velocities, dtype=float) if builder.velocities is not None else np.zeros((n, 3))
    for i in range(n):
        for j in range(i + 1, n):
            pair_terms.append(n_ops[i] @ n_ops[j])
            rel = np.concatenate([pos[i] - pos[j], vel[i] - vel[j], [builder.array.c6]])
            pair_rows.append(rel)

    terms = np.ascontiguousarray(
        np.stack([const, det.astype(complex), drive] + [p.astype(complex) for p in pair_terms])
    )
    pairs = np.ascontiguousarray(np.asarray(pair_rows, dtype=float).reshape(len(pair_rows), 7))

    n_seg = len(builder.schedule.segments)
    n_harm = len(builder.ram.harmonics) if builder.ram is not None else 0
    seg_table = np.zeros((n_seg, SEG_COLS))
    ram_a = np.zeros((n_seg, max(n_harm, 1)))
    ram_b = np.zeros((n_seg, max(n_harm, 1)))
    laser_on = []
    max_step = []
    t0 = 0.0
    for si, seg in enumerate(builder.schedule.segments):
        t1 = t0 + seg.duration
        row = seg_table[si]
        row[0], row[1] = t0, t1
        row[7] = builder.lasers.rabi * seg.rabi_scale
        k = seg.kind
        if isinstance(k, Static):
            row[2] = 0
            row[3] = k.delta0
        elif isinstance(k, Ffm):
            row[2] = 1
            row[3] = k.delta0
            row[4] = k.params.modulation_amplitude
            row[5] = k.params.modulation_frequency
            row[6] = t0 + k.params.phase_origin
            if builder.ram is not None:
                for h, (a, b) in enumerate(builder.ram.harmonics):
                    ram_a[si, h] = a
                    ram_b[si, h] = b
        elif isinstance(k, LaserFree):
            row[2] = 2
        elif isinstance(k, Stirap):
            row[2] = 3
            row[5] = k.omega0
            row[6] = t0
            prof = k.profile
            T = prof.total_time
            if prof.mode == "literal":
                c1 = prof.alpha0 * prof.alpha_start_scale
                c2 = prof.alpha0
                s = prof.offset
            else:
                c1, c2, s = _condition_solved_constants(
                    bessel.j0_zero(1), bessel.j0_j1_crossing(1), prof.rate
                )
            row[8] = c1
            row[9] = prof.rate / T
            row[10] = s
            row[11] = t0 + T / 2.0
            row[12] = c2
        else:
            raise TypeError(f"unknown segment kind {k!r}")
        laser_on.append(seg.laser_on)
        w = seg.modulation_frequency()
        max_step.append((2 * math.pi / w) / FFM_STEP_FRACTION if w else math.inf)
        t0 = t1

    return PackedProblem(
        dim=d,
        terms=terms,
        seg_table=seg_table,
        ram_a=ram_a,
        ram_b=ram_b,
        pairs=pairs,
        laser_on=tuple(laser_on),
        max_step=tuple(max_step),
        total_duration=builder.schedule.total_duration,
    )


def coefficients_at(problem: PackedProblem, seg_index: int, t: float) -> np.ndarray:
    """Term coefficients [1, Delta(t), Omega(t), V_p(t)...] at absolute t."""
    from . import kernel

    out = np.empty(problem.terms.shape[0])
    kernel.eval_coefficients(
        t,
        problem.seg_table[seg_index],
        problem.ram_a[seg_index],
        problem.ram_b[seg_index],
        problem.pairs,
        out,
    )
    return out


def hamiltonian_at(builder: HamiltonianBuilder, t: float) -> np.ndarray:
    """Dense Hermitian H(t) at absolute time t within the schedule."""
    problem = pack(builder)
    seg_index = _segment_index(problem, t)
    c = coefficients_at(problem, seg_index, t)
    h = np.tensordot(c, problem.terms, axes=1)
    return h


def _segment_index(problem: PackedProblem, t: float) -> int:
    from .schedules import TimeOutOfScheduleError

    tbl = problem.seg_table
    total = problem.total_duration
    if not (0.0 <= t <= total + 1e-9):
        raise TimeOutOfScheduleError(f"t={t} outside [0, {total}]")
    for i in range(len(tbl) - 1):
        if tbl[i, 0] <= t < tbl[i, 1]:
            return i
    return len(tbl) - 1


@dataclass(frozen=True)
class EffectiveCouplings:
    """Harmonic decomposition of the modulated drive couplings.

    ``omega_a`` lists (harmonic m, complex weight, frequency) for the
    ground-pair <-> single-excitation transition, ``omega_b`` the same for
    single <-> double excitation; weights are J_m(alpha) e^{i m pi/2}
    relative to the unmodulated drive.
    """

    omega_a: tuple[tuple[int, complex, float], ...]
    omega_b: tuple[tuple[int, complex, float], ...]
    truncation_order: int

    def dominant_a(self) -> float:
        """Magnitude of the resonant (zero-frequency) pump component."""
        for m, w, f in self.omega_a:
            if m == 0:
                return abs(w)
        return 0.0

    def dominant_b(self) -> float | None:
        """Magnitude of the resonant Stokes component, if a harmonic lands
        on the interaction shift; None otherwise."""
        best = None
        for m, w, f in self.omega_b:
            if abs(f) < 1e-9:
                best = abs(w)
        return best


def effective_couplings(alpha: float, omega0: float, v: float, truncation_order: int) -> EffectiveCouplings:
    if truncation_order < math.ceil(alpha) + 5:
        raise TruncationTooSmallError(
            f"truncation_order {truncation_order} < ceil(alpha)+5 = {math.ceil(alpha) + 5}"
        )
    js = bessel.bessel_j_many(truncation_order, alpha)
    rows_a = []
    rows_b = []
    for m in range(-truncation_order, truncation_order + 1):
        jm = js[abs(m)] * (-1.0 if (m < 0 and abs(m) % 2 == 1) else 1.0)
        w = jm * np.exp(1j * m * math.pi / 2.0)
        rows_a.append((m, complex(w), m * omega0))
        rows_b.append((m, complex(w), m * omega0 + v))
    return EffectiveCouplings(tuple(rows_a), tuple(rows_b), truncation_order)
