import math

import pytest
from hypothesis import given, settings, strategies as st

from floqryd.bessel import bessel_j, j0_zero
from floqryd.schedules import (
    Ffm,
    FfmParams,
    LaserFree,
    PulseSegment,
    RamModel,
    Schedule,
    Static,
    Stirap,
    StirapProfile,
    TimeOutOfSegmentError,
    detuning_at,
    pi_pulse_duration,
    rabi_at,
    stirap_alpha,
)
from floqryd.system import TWO_PI, LaserParams, from_mhz


def ffm_segment(alpha=6.0, omega0_mhz=3.0, duration=5.0, delta0=0.0):
    return PulseSegment(duration, Ffm(FfmParams.from_alpha(alpha, from_mhz(omega0_mhz)), delta0))


def test_ffm_detuning_at_phase_origin():
    seg = ffm_segment(delta0=1.7)
    assert detuning_at(seg, 0.0) == pytest.approx(1.7)


def test_ffm_detuning_peak():
    # quarter period after the zero crossing the sine is at its crest
    w0 = from_mhz(3.0)
    seg = ffm_segment(alpha=6.0, omega0_mhz=3.0)
    t_peak = (math.pi / 2) / w0
    assert detuning_at(seg, t_peak) == pytest.approx(from_mhz(18.0), rel=1e-12)


def test_static_half_v():
    v = from_mhz(4.8)
    seg = PulseSegment(3.0, Static(v / 2))
    for t in (0.0, 1.0, 3.0):
        assert detuning_at(seg, t) == v / 2


def test_laser_free_zero():
    seg = PulseSegment(2.0, LaserFree())
    assert detuning_at(seg, 1.0) == 0.0
    assert seg.rabi_scale == 0.0


@settings(max_examples=40, deadline=None)
@given(t=st.floats(min_value=0.0, max_value=4.0), alpha=st.floats(0.1, 8.0))
def test_ffm_periodicity(t, alpha):
    w0 = from_mhz(3.0)
    seg = PulseSegment(10.0, Ffm(FfmParams.from_alpha(alpha, w0)))
    period = 2 * math.pi / w0
    assert abs(detuning_at(seg, t) - detuning_at(seg, t + period)) < 1e-12 * from_mhz(alpha * 3.0) + 1e-12


def test_time_out_of_segment():
    seg = ffm_segment(duration=1.0)
    with pytest.raises(TimeOutOfSegmentError):
        detuning_at(seg, 1.5)


class TestStirapProfile:
    def test_literal_midpoint(self):
        prof = StirapProfile(total_time=4.0, mode="literal")
        assert stirap_alpha(prof, 2.0) == pytest.approx(3.0508, abs=1e-3)

    def test_literal_start(self):
        prof = StirapProfile(total_time=4.0, mode="literal")
        assert stirap_alpha(prof, 0.0) == pytest.approx(5.1723, abs=1e-3)

    def test_literal_end_clamped(self):
        prof = StirapProfile(total_time=4.0, mode="literal")
        # the printed constants evaluate to about -0.217 at the end
        raw = 2.4 * (1.2 * math.tanh(-(3.5 / 4.0) * 2.0 + 0.23) + 1.0)
        assert raw == pytest.approx(-0.217, abs=1e-3)
        assert stirap_alpha(prof, 4.0) == 0.0

    def test_condition_solved_boundary_conditions(self):
        # ramp from the first pump zero to zero Stokes coupling with the
        # couplings balanced at mid-ramp
        prof = StirapProfile(total_time=4.0, mode="condition_solved")
        a0 = stirap_alpha(prof, 0.0)
        aT = stirap_alpha(prof, 4.0)
        amid = stirap_alpha(prof, 2.0)
        assert a0 == pytest.approx(j0_zero(1), abs=1e-9)
        assert abs(bessel_j(0, a0)) < 1e-6
        assert abs(bessel_j(1, aT)) < 1e-6
        assert abs(bessel_j(0, amid) - bessel_j(1, amid)) < 1e-6

    def test_condition_solved_monotone(self):
        prof = StirapProfile(total_time=4.0)
        vals = [stirap_alpha(prof, t) for t in [0.0, 1.0, 2.0, 3.0, 4.0]]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert all(v >= 0 for v in vals)


def test_rabi_at_plain():
    lasers = LaserParams(rabi=TWO_PI)
    seg = ffm_segment()
    assert rabi_at(seg, 0.3, lasers.rabi) == TWO_PI


def test_rabi_at_with_ram():
    ram = RamModel(harmonics=((0.0, 0.022),))
    seg = ffm_segment(omega0_mhz=3.0)
    # cosine quadrature peaks at the phase origin
    assert rabi_at(seg, 0.0, TWO_PI, ram) == pytest.approx(1.022 * TWO_PI)


def test_ram_ignored_off_ffm():
    ram = RamModel(harmonics=((0.5 * 0.0, 0.022),))
    seg = PulseSegment(1.0, Static(0.0))
    assert rabi_at(seg, 0.5, TWO_PI, ram) == TWO_PI
    free = PulseSegment(1.0, LaserFree())
    assert rabi_at(free, 0.5, TWO_PI, ram) == 0.0


def test_ram_model_perturbative_guard():
    with pytest.raises(ValueError):
        RamModel(harmonics=((1.5, 0.0),))


def test_pi_pulse_durations():
    lasers = LaserParams(rabi=TWO_PI)
    assert pi_pulse_duration(lasers, collective=True) == pytest.approx(0.35355, abs=1e-4)
    assert pi_pulse_duration(lasers, collective=False) == pytest.approx(0.5, abs=1e-12)
    ratio = pi_pulse_duration(lasers, True) / pi_pulse_duration(lasers, False)
    assert ratio == pytest.approx(1 / math.sqrt(2))


class TestSchedule:
    def test_tiling_and_boundaries(self):
        segs = (
            PulseSegment(0.5, Static(1.0)),
            PulseSegment(2.0, Ffm(FfmParams.from_alpha(2.0, from_mhz(3.0)), 0.0)),
            PulseSegment(1.5, LaserFree()),
        )
        sched = Schedule(segs)
        assert sched.total_duration == pytest.approx(4.0)
        # boundary belongs to the later segment (closed-open)
        seg, tl = sched.locate(0.5)
        assert seg is segs[1] and tl == 0.0
        seg, tl = sched.locate(2.5)
        assert seg is segs[2] and tl == 0.0
        # schedule end resolves to the last segment
        seg, tl = sched.locate(4.0)
        assert seg is segs[2] and tl == pytest.approx(1.5)

    def test_out_of_schedule(self):
        sched = Schedule((PulseSegment(1.0, Static(0.0)),))
        from floqryd.schedules import TimeOutOfScheduleError

        with pytest.raises(TimeOutOfScheduleError):
            sched.locate(2.0)
