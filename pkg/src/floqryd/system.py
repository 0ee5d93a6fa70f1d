"""Physical configuration: atom array, lasers, noise, SPAM and thermal state.

Unit conventions
----------------
All angular frequencies are stored internally in rad/us, so a drive of
1 MHz (ordinary frequency) is ``2*pi`` rad/us.  Public constructors and the
scenario files speak ordinary MHz, kHz and us; the conversion happens in
exactly one place (`from_mhz` / `to_mhz`).  Lengths are um, times us,
temperatures uK, masses kg.

The numerical constants live in ``defaults.json`` next to this module and
are loaded by `paper_defaults()`; that file is the single source of truth
for them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

__all__ = [
    "TWO_PI",
    "KB",
    "HBAR",
    "SameAtomError",
    "AtomArray",
    "LaserParams",
    "NoiseModel",
    "SpamModel",
    "ThermalEnsemble",
    "SystemConfig",
    "from_mhz",
    "to_mhz",
    "interaction_strength",
    "blockade_radius",
    "spacing_for_interaction",
    "paper_defaults",
    "load_default_constants",
    "linear_chain",
    "cooled_ensemble",
    "enhanced_coherence_noise",
]

TWO_PI = 2.0 * math.pi
KB = 1.380649e-23  # J/K
HBAR = 1.054571817e-34  # J s


class SameAtomError(ValueError):
    pass


def from_mhz(f_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f_mhz


def to_mhz(omega: float) -> float:
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega / TWO_PI


@dataclass(frozen=True)
class AtomArray:
    """Atom positions (um, 3-vectors) and the van der Waals coefficient.

    ``c6`` is angular, rad/us * um^6 (i.e. 2*pi times the GHz um^6 value
    quoted in ordinary-frequency units, after MHz conversion).
    """

    positions: tuple[tuple[float, float, float], ...]
    c6: float

    def __post_init__(self):
        if len(self.positions) < 1:
            raise ValueError("need at least one atom")
        if self.c6 <= 0:
            raise ValueError("c6 must be positive")
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape[1] != 3:
            raise ValueError("positions must be 3-vectors")
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.linalg.norm(pos[i] - pos[j]) <= 0.5:
                    raise ValueError(f"atoms {i} and {j} closer than 0.5 um")

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)


@dataclass(frozen=True)
class LaserParams:
    """Effective two-photon drive: Rabi frequency, static detuning, wavevector.

    ``effective_wavevector`` is signed along the array axis in rad/um; the
    default is the counter-propagating two-photon difference
    2*pi*(1/0.409 - 1/0.589).
    """

    rabi: float
    static_detuning: float = 0.0
    effective_wavevector: float = TWO_PI * (1 / 0.409 - 1 / 0.589)

    def __post_init__(self):
        if self.rabi <= 0:
            raise ValueError("rabi must be positive")


@dataclass(frozen=True)
class NoiseModel:
    """Lindblad rates in rad/us: intermediate-state scattering from the two
    excitation lasers (gamma1, gamma2), Rydberg decay (gamma_r) and global
    laser dephasing (gamma_l)."""

    gamma1: float
    gamma2: float
    gamma_r: float
    gamma_l: float

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma_r", "gamma_l"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.gamma1 == self.gamma2 == self.gamma_r == self.gamma_l == 0.0


@dataclass(frozen=True)
class SpamModel:
    """Readout/preparation error probabilities: false positive (ground atom
    detected as Rydberg), false negative (Rydberg detected as ground) and
    optical-pumping error."""

    false_positive: float
    false_negative: float
    pumping_error: float

    def __post_init__(self):
        for name in ("false_positive", "false_negative", "pumping_error"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must be in [0, 1)")

    @property
    def is_zero(self) -> bool:
        return self.false_positive == self.false_negative == self.pumping_error == 0.0


@dataclass(frozen=True)
class ThermalEnsemble:
    """Gaussian position spreads (um) and temperature (uK) of the trapped
    atoms, plus the atomic mass (kg).  Velocity spreads follow from
    sqrt(kB T / m); an explicit velocity override supports presets whose
    position and velocity widths are not tied by equipartition."""

    sigma_radial: float
    sigma_axial: float
    temperature: float
    atom_mass: float
    sigma_velocity_override: float | None = None

    def __post_init__(self):
        for name in ("sigma_radial", "sigma_axial", "temperature", "atom_mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def sigma_velocity(self) -> float:
        """Per-axis thermal velocity spread, sqrt(kB T / m).  m/s == um/us."""
        if self.sigma_velocity_override is not None:
            return self.sigma_velocity_override
        return math.sqrt(KB * self.temperature * 1e-6 / self.atom_mass)


@dataclass(frozen=True)
class SystemConfig:
    array: AtomArray
    lasers: LaserParams
    noise: NoiseModel
    spam: SpamModel
    thermal: ThermalEnsemble

    def with_spacing(self, spacing_um: float, n_atoms: int | None = None) -> "SystemConfig":
        n = n_atoms if n_atoms is not None else self.array.n_atoms
        return replace(self, array=linear_chain(n, spacing_um, self.array.c6))


def interaction_strength(array: AtomArray, i: int, j: int) -> float:
    """Van der Waals interaction C6 / r_ij^6 in rad/us."""
    n = array.n_atoms
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"atom index out of range (n_atoms={n})")
    if i == j:
        raise SameAtomError("i and j must differ")
    pos = array.as_array()
    r = float(np.linalg.norm(pos[i] - pos[j]))
    return array.c6 / r**6


def blockade_radius(array: AtomArray, lasers: LaserParams) -> float:
    """Distance (um) at which the interaction equals the Rabi frequency."""
    return (array.c6 / lasers.rabi) ** (1.0 / 6.0)


def spacing_for_interaction(c6: float, v: float) -> float:
    """Distance (um) at which C6/r^6 equals the angular frequency ``v``."""
    if v <= 0:
        raise ValueError("interaction must be positive")
    return (c6 / v) ** (1.0 / 6.0)


def linear_chain(n_atoms: int, spacing_um: float, c6: float) -> AtomArray:
    """Equally spaced chain along the array (y) axis."""
    return AtomArray(
        positions=tuple((0.0, k * spacing_um, 0.0) for k in range(n_atoms)),
        c6=c6,
    )


def load_default_constants() -> dict:
    with resources.files("floqryd").joinpath("defaults.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def paper_defaults() -> SystemConfig:
    """Reference parameter set loaded from the checked-in constants file.

    Two atoms in the strongly blockaded geometry (V = 8 * rabi); scenarios
    override the spacing as needed.
    """
    c = load_default_constants()
    c6 = from_mhz(c["c6_ghz_um6"] * 1e3)
    lasers = LaserParams(
        rabi=from_mhz(c["rabi_mhz"]),
        static_detuning=0.0,
        effective_wavevector=TWO_PI * (1 / c["wavelength_down_um"] - 1 / c["wavelength_up_um"]),
    )
    noise = NoiseModel(
        gamma1=from_mhz(c["gamma1_khz"] * 1e-3),
        gamma2=from_mhz(c["gamma2_khz"] * 1e-3),
        gamma_r=1.0 / c["rydberg_lifetime_us"],
        gamma_l=from_mhz(c["gamma_laser_khz"] * 1e-3),
    )
    spam = SpamModel(
        false_positive=c["false_positive"],
        false_negative=c["false_negative"],
        pumping_error=c["pumping_error"],
    )
    thermal = ThermalEnsemble(
        sigma_radial=c["sigma_radial_um"],
        sigma_axial=c["sigma_axial_um"],
        temperature=c["temperature_uk"],
        atom_mass=c["atom_mass_kg"],
    )
    array = linear_chain(2, c["default_spacing_um"], c6)
    return SystemConfig(array=array, lasers=lasers, noise=noise, spam=spam, thermal=thermal)


def cooled_ensemble(
    base: ThermalEnsemble,
    n_radial: float | None = None,
    n_axial: float | None = None,
    trap_depth_ratio: float | None = None,
) -> ThermalEnsemble:
    """Ground-state-cooled preset.

    Trap frequencies at the shallow (ramped-down) depth follow from the
    thermal spreads via classical equipartition, omega_j = sigma_v/sigma_j.
    Cooling and trapped excitation, however, happen at full trap depth, so
    those frequencies are scaled by sqrt(trap_depth_ratio) (default: the
    ratio of the quoted full and ramped-down depths, 1.3 mK / 7 uK).  The
    cooled spreads are then harmonic-oscillator variances at occupation
    n_bar:

        sigma_x^2 = hbar (2 n_bar + 1) / (2 m omega),
        sigma_v^2 = hbar omega (2 n_bar + 1) / (2 m).

    The velocity spread uses the radial trap frequency (the beam axis is
    radial).  Both trap frequencies are derived quantities, not measured
    constants; see README.
    """
    c = load_default_constants()
    if n_radial is None:
        n_radial = c["cooled_occupation_radial"]
    if n_axial is None:
        n_axial = c["cooled_occupation_axial"]
    if trap_depth_ratio is None:
        trap_depth_ratio = c["cooled_trap_depth_ratio"]
    sv = base.sigma_velocity  # m/s
    m = base.atom_mass
    scale = math.sqrt(trap_depth_ratio)
    omega_r = sv / (base.sigma_radial * 1e-6) * scale  # rad/s
    omega_z = sv / (base.sigma_axial * 1e-6) * scale
    sx = math.sqrt(HBAR * (2 * n_radial + 1) / (2 * m * omega_r)) * 1e6  # um
    sz = math.sqrt(HBAR * (2 * n_axial + 1) / (2 * m * omega_z)) * 1e6
    sv_cooled = math.sqrt(HBAR * omega_r * (2 * n_radial + 1) / (2 * m))  # m/s == um/us
    return replace(
        base,
        sigma_radial=sx,
        sigma_axial=sz,
        sigma_velocity_override=sv_cooled,
    )


def enhanced_coherence_noise(coherence_time_us: float | None = None) -> NoiseModel:
    """Idealised noise model: scattering and decay suppressed, all residual
    decoherence lumped into one global dephasing channel whose two-atom
    coherence time is ``coherence_time_us``."""
    if coherence_time_us is None:
        coherence_time_us = load_default_constants()["enhanced_coherence_us"]
    return NoiseModel(gamma1=0.0, gamma2=0.0, gamma_r=0.0, gamma_l=1.0 / coherence_time_us)
