import numpy as np
import pytest
from dataclasses import replace

from floqryd.disorder import (
    DisorderSample,
    draw_sample,
    run_ensemble,
    sample_rng,
    time_of_flight_distance,
)
from floqryd.lindblad import build_dissipators, evolve
from floqryd.hamiltonian import HamiltonianBuilder
from floqryd.schedules import Ffm, FfmParams, PulseSegment, Schedule, Static
from floqryd.system import SameAtomError, ThermalEnsemble, paper_defaults, linear_chain, spacing_for_interaction


@pytest.fixture(scope="module")
def cfg():
    return paper_defaults()


def short_schedule(cfg, alpha=6.9, omega0_over=3.0, duration=0.5):
    return Schedule((PulseSegment(duration, Ffm(FfmParams.from_alpha(alpha, omega0_over * cfg.lasers.rabi))),))


class TestDrawSample:
    def test_degenerate_distribution(self, cfg):
        tight = ThermalEnsemble(
            sigma_radial=1e-12, sigma_axial=1e-12, temperature=1e-12,
            atom_mass=cfg.thermal.atom_mass,
        )
        s = draw_sample(tight, cfg.array, cfg.lasers.effective_wavevector, sample_rng(1, 0))
        assert np.abs(s.positions - cfg.array.as_array()).max() < 1e-9
        assert np.abs(s.velocities).max() < 1e-6
        assert np.abs(s.doppler_shifts).max() < 1e-5

    def test_velocity_scale(self, cfg):
        # statistical check of the sampled per-axis velocity spread
        draws = [
            draw_sample(cfg.thermal, cfg.array, cfg.lasers.effective_wavevector, sample_rng(2, j))
            for j in range(400)
        ]
        v = np.concatenate([d.velocities.ravel() for d in draws])
        assert v.std() == pytest.approx(0.0208, rel=0.08)

    def test_doppler_from_axis_velocity(self, cfg):
        s = draw_sample(cfg.thermal, cfg.array, cfg.lasers.effective_wavevector, sample_rng(3, 5))
        assert np.allclose(s.doppler_shifts, cfg.lasers.effective_wavevector * s.velocities[:, 1])


class TestTimeOfFlight:
    def make_sample(self, v0, v1):
        return DisorderSample(
            positions=np.array([[0.0, 0.0, 0.0], [0.0, 8.0, 0.0]]),
            velocities=np.array([v0, v1], dtype=float),
            doppler_shifts=np.zeros(2),
        )

    def test_zero_velocity_constant(self):
        s = self.make_sample([0, 0, 0], [0, 0, 0])
        assert time_of_flight_distance(s, 0, 1, 3.0) == pytest.approx(8.0)

    def test_common_mode_constant(self):
        s = self.make_sample([0, 0.05, 0], [0, 0.05, 0])
        assert time_of_flight_distance(s, 0, 1, 4.0) == pytest.approx(8.0)

    def test_opposite_axial_velocities(self):
        s = self.make_sample([0, 0.02, 0], [0, -0.02, 0])
        d0 = time_of_flight_distance(s, 0, 1, 0.0)
        d = time_of_flight_distance(s, 0, 1, 2.5)
        assert d0 - d == pytest.approx(0.1)

    def test_same_atom(self):
        s = self.make_sample([0, 0, 0], [0, 0, 0])
        with pytest.raises(SameAtomError):
            time_of_flight_distance(s, 1, 1, 0.0)


class TestRunEnsemble:
    def test_determinism(self, cfg):
        sched = short_schedule(cfg)
        times = np.linspace(0, 0.5, 26)
        a = run_ensemble(cfg, sched, 4, 99, sample_times=times)
        b = run_ensemble(cfg, sched, 4, 99, sample_times=times)
        for lab in a.mean:
            assert np.array_equal(a.mean[lab], b.mean[lab])
            assert np.array_equal(a.std[lab], b.std[lab])
        assert np.array_equal(a.fmax_samples, b.fmax_samples)

    def test_thread_count_invariance(self, cfg):
        sched = short_schedule(cfg)
        times = np.linspace(0, 0.5, 26)
        serial = run_ensemble(cfg, sched, 6, 7, sample_times=times, threads=1)
        parallel = run_ensemble(cfg, sched, 6, 7, sample_times=times, threads=2)
        for lab in serial.mean:
            assert np.array_equal(serial.mean[lab], parallel.mean[lab])

    def test_zero_width_matches_single_trajectory(self, cfg):
        tight = ThermalEnsemble(
            sigma_radial=1e-13, sigma_axial=1e-13, temperature=1e-16,
            atom_mass=cfg.thermal.atom_mass,
        )
        c = replace(cfg, thermal=tight)
        sched = short_schedule(cfg)
        times = np.linspace(0, 0.5, 26)
        stats = run_ensemble(c, sched, 3, 5, sample_times=times)
        builder = HamiltonianBuilder(c.array, c.lasers, sched)
        ref = evolve(builder, build_dissipators(c, 2), None, (0, 0.5), times)
        for lab in ("gg", "ge", "eg", "ee"):
            assert np.abs(stats.mean[lab] - ref.populations[lab]).max() < 1e-7
            assert stats.std[lab].max() < 1e-7

    def test_sample_count_guard(self, cfg):
        with pytest.raises(ValueError):
            run_ensemble(cfg, short_schedule(cfg), 1, 0)

    def test_monte_carlo_convergence_scaling(self, cfg):
        # doubling the sample count moves the time-averaged mean by less
        # than 2/sqrt(n); checked statistically over repetitions
        sched = Schedule((PulseSegment(0.4, Static(0.0)),))
        times = np.linspace(0, 0.4, 9)
        hits = 0
        reps = 6
        for rep in range(reps):
            small = run_ensemble(cfg, sched, 24, 1000 + rep, sample_times=times)
            big = run_ensemble(cfg, sched, 48, 1000 + rep, sample_times=times)
            drift = abs(np.mean(small.mean["gg"]) - np.mean(big.mean["gg"]))
            scale = np.mean(small.std["gg"]) + 1e-12
            if drift <= 2.0 / np.sqrt(24) * scale + 1e-9:
                hits += 1
        assert hits >= reps - 1

    def test_fidelity_gauge_invariance(self, cfg):
        # identical statistics whether the per-shot drive phases are carried
        # explicitly or gauged away
        sched = short_schedule(cfg)
        times = np.linspace(0, 0.5, 26)
        a = run_ensemble(cfg, sched, 4, 11, sample_times=times, use_drive_phases=True)
        b = run_ensemble(cfg, sched, 4, 11, sample_times=times, use_drive_phases=False)
        assert np.abs(a.mean["w_fidelity"] - b.mean["w_fidelity"]).max() < 1e-6
