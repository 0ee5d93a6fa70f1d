"""Classical Monte Carlo over thermal disorder.

Each sample draws initial positions and velocities from the trap's Gaussian
spreads, converts the beam-axis velocity into a per-atom detuning offset,
and runs one master-equation trajectory.  Interactions are either frozen at
the sampled positions, or refreshed continuously from straight-line motion
(tweezers off during excitation).

Reproducibility: sample j uses a counter-based Philox stream keyed by
(seed, j), so results are bit-identical for a given seed regardless of how
samples are distributed over workers; aggregation always runs in sample
order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import HamiltonianBuilder
from .lindblad import DissipatorSet, TrajectoryResult, build_dissipators, evolve
from .observables import WReference, apply_spam_to_labels, w_fidelity
from .schedules import RamModel, Schedule
from .system import AtomArray, SystemConfig, ThermalEnsemble

__all__ = [
    "SampleFailureError",
    "DisorderSample",
    "EnsembleStats",
    "draw_sample",
    "time_of_flight_distance",
    "run_ensemble",
]


class SampleFailureError(RuntimeError):
    """A trajectory inside an ensemble failed; carries the sample index."""

    def __init__(self, sample_index: int, cause: Exception):
        self.sample_index = sample_index
        super().__init__(f"sample {sample_index}: {cause}")


@dataclass(frozen=True)
class DisorderSample:
    """One Monte Carlo draw: positions (um), velocities (um/us) and the
    per-atom detuning offsets k_eff * v_axis (rad/us)."""

    positions: np.ndarray
    velocities: np.ndarray
    doppler_shifts: np.ndarray

    def __post_init__(self):
        n = self.positions.shape[0]
        if self.velocities.shape[0] != n or self.doppler_shifts.shape[0] != n:
            raise ValueError("per-atom arrays must have equal length")


def draw_sample(
    ensemble: ThermalEnsemble,
    array: AtomArray,
    k_eff: float,
    rng: np.random.Generator,
) -> DisorderSample:
    """Positions ~ Normal(nominal, diag(sr^2, sr^2, sz^2)) per atom,
    velocities ~ Normal(0, sv^2) per component, detuning offsets from the
    beam-axis (y) velocity component."""
    n = array.n_atoms
    nominal = array.as_array()
    sig = np.array([ensemble.sigma_radial, ensemble.sigma_radial, ensemble.sigma_axial])
    positions = nominal + rng.normal(0.0, 1.0, (n, 3)) * sig
    velocities = rng.normal(0.0, ensemble.sigma_velocity, (n, 3))
    doppler = k_eff * velocities[:, 1]
    return DisorderSample(positions=positions, velocities=velocities, doppler_shifts=doppler)


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based substream for one sample."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, sample_index], dtype=np.uint64)))


def time_of_flight_distance(sample: DisorderSample, i: int, j: int, t: float) -> float:
    if i == j:
        from .system import SameAtomError

        raise SameAtomError("i and j must differ")
    ri = sample.positions[i] + sample.velocities[i] * t
    rj = sample.positions[j] + sample.velocities[j] * t
    return float(np.linalg.norm(ri - rj))


@dataclass
class EnsembleStats:
    """Per-time mean and standard deviation of every population label (and
    the symmetric-state fidelity), plus the per-sample maximum-fidelity
    summary used for entanglement-fidelity reporting."""

    times: np.ndarray
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    sample_count: int
    seed: int
    fmax_mean: float = 0.0
    fmax_std: float = 0.0
    fmax_samples: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_trace_drift: float = 0.0
    max_hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0


def _one_sample(args) -> tuple[np.ndarray, dict[str, np.ndarray], np.ndarray, tuple[float, float, float]]:
    (
        config,
        schedule,
        seed,
        index,
        static_interaction,
        sample_times,
        t_span,
        ram,
        spam_forward,
        use_drive_phases,
        atol,
    ) = args
    try:
        return _one_sample_inner(
            config, schedule, seed, index, static_interaction, sample_times,
            t_span, ram, spam_forward, use_drive_phases, atol,
        )
    except Exception as exc:
        raise SampleFailureError(index, exc) from exc


def _one_sample_inner(
    config, schedule, seed, index, static_interaction, sample_times, t_span,
    ram, spam_forward, use_drive_phases, atol,
):
    rng = sample_rng(seed, index)
    sample = draw_sample(config.thermal, config.array, config.lasers.effective_wavevector, rng)
    array = AtomArray(tuple(map(tuple, sample.positions)), config.array.c6)
    phases = tuple(config.lasers.effective_wavevector * sample.positions[:, 1]) if use_drive_phases else None
    builder = HamiltonianBuilder(
        array,
        config.lasers,
        schedule,
        ram=ram,
        detuning_offsets=tuple(sample.doppler_shifts),
        drive_phases=phases,
        velocities=None if static_interaction else tuple(map(tuple, sample.velocities)),
    )
    wref = WReference(phases if phases is not None else (0.0,) * array.n_atoms)
    dis = build_dissipators(config, array.n_atoms, drive_phases=phases)
    res = evolve(
        builder,
        dis,
        None,
        t_span,
        sample_times,
        atol=atol,
        observe=lambda t, rho: {"w_fidelity": w_fidelity(rho, wref)},
    )
    pops = res.populations
    if spam_forward:
        n = array.n_atoms
        per_time = []
        labels = sorted(pops)
        for k in range(len(res.times)):
            snap = {lab: float(pops[lab][k]) for lab in labels}
            per_time.append(apply_spam_to_labels(snap, config.spam, n))
        pops = {lab: np.array([pt[lab] for pt in per_time]) for lab in per_time[0]}
    fid = res.extras["w_fidelity"]
    return (
        res.times,
        {**pops, "w_fidelity": fid},
        fid,
        (res.max_trace_drift, res.max_hermiticity_defect, res.min_eigenvalue),
    )


def run_ensemble(
    config: SystemConfig,
    schedule: Schedule,
    n_samples: int,
    seed: int,
    static_interaction: bool = False,
    *,
    sample_times=None,
    t_span: tuple[float, float] | None = None,
    ram: RamModel | None = None,
    spam_forward: bool = False,
    use_drive_phases: bool = True,
    threads: int = 1,
    atol: float = 1e-9,
) -> EnsembleStats:
    """Monte Carlo ensemble of master-equation trajectories.

    Sample statistics use the n-1 normalisation; the per-sample maximum of
    the symmetric-state fidelity over time is summarised as mean and std in
    ``fmax_mean`` / ``fmax_std``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if t_span is None:
        t_span = (0.0, schedule.total_duration)
    if sample_times is None:
        sample_times = np.linspace(t_span[0], t_span[1], 201)
    sample_times = np.asarray(sample_times, dtype=float)

    arg_list = [
        (
            config,
            schedule,
            seed,
            j,
            static_interaction,
            sample_times,
            t_span,
            ram,
            spam_forward,
            use_drive_phases,
            atol,
        )
        for j in range(n_samples)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one_sample, arg_list, chunksize=max(1, n_samples // (threads * 4))))
    else:
        results = [_one_sample(a) for a in arg_list]

    times = results[0][0]
    labels = sorted(results[0][1])
    stacked = {lab: np.stack([r[1][lab] for r in results]) for lab in labels}
    mean = {lab: stacked[lab].mean(axis=0) for lab in labels}
    std = {lab: stacked[lab].std(axis=0, ddof=1) for lab in labels}
    fmax = np.array([float(r[2].max()) for r in results])
    return EnsembleStats(
        times=times,
        mean=mean,
        std=std,
        sample_count=n_samples,
        seed=seed,
        fmax_mean=float(fmax.mean()),
        fmax_std=float(fmax.std(ddof=1)),
        fmax_samples=fmax,
        max_trace_drift=max(r[3][0] for r in results),
        max_hermiticity_defect=max(r[3][1] for r in results),
        min_eigenvalue=min(r[3][2] for r in results),
    )
