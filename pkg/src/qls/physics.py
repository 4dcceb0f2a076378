"""Physical constants and unit conversions.

Everything downstream works in SI (rad/s, m, kg). Catalog data stays in
spectroscopy units (cm^-1, Dalton, nm) and is converted here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34  # J s
    c_light: float = 2.99792458e8  # m/s
    dalton: float = 1.66053906660e-27  # kg


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
C_LIGHT = CONSTANTS.c_light
DALTON = CONSTANTS.dalton


@dataclass(frozen=True)
class Frequency:
    """Angular frequency in rad/s, with constructors from catalog units."""

    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"frequency must be non-negative, got {self.value!r}")

    @classmethod
    def from_wavenumber(cls, nu_tilde: float) -> "Frequency":
        return cls(2 * math.pi * C_LIGHT * 100.0 * nu_tilde)

    @classmethod
    def from_hz(cls, f: float) -> "Frequency":
        return cls(2 * math.pi * f)

    @classmethod
    def from_wavelength(cls, wavelength: float) -> "Frequency":
        if wavelength <= 0:
            raise ValueError("wavelength must be positive")
        return cls(2 * math.pi * C_LIGHT / wavelength)

    @property
    def hz(self) -> float:
        return self.value / (2 * math.pi)

    @property
    def wavenumber(self) -> float:
        """Value in cm^-1."""
        return self.value / (2 * math.pi * C_LIGHT * 100.0)


def wavenumber_to_wavevector(nu_tilde: float) -> float:
    """Wavevector magnitude k = 2*pi*100*nu (m^-1) for a wavenumber in cm^-1."""
    if nu_tilde < 0:
        raise ValueError(f"wavenumber must be non-negative, got {nu_tilde!r}")
    return 2 * math.pi * 100.0 * nu_tilde


def wavelength_to_wavevector(wavelength: float) -> float:
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    return 2 * math.pi / wavelength


def wavenumber_to_omega(nu_tilde: float) -> float:
    """Angular frequency (rad/s) of a wavenumber given in cm^-1."""
    return Frequency.from_wavenumber(nu_tilde).value


def ground_state_size(total_mass: float, trap_omega: float) -> float:
    """Ground-state wavepacket size sqrt(hbar / (2 m w)) in metres."""
    if total_mass <= 0:
        raise ValueError(f"mass must be positive, got {total_mass!r}")
    if trap_omega <= 0:
        raise ValueError(f"trap frequency must be positive, got {trap_omega!r}")
    return math.sqrt(HBAR / (2 * total_mass * trap_omega))


def lamb_dicke(k: float, total_mass: float, trap_omega: float, theta: float = 0.0) -> float:
    """Lamb-Dicke parameter k * x0 * cos(theta).

    ``total_mass`` is the mass of the whole crystal in kg, ``trap_omega`` the
    motional mode frequency in rad/s and ``theta`` the angle between the beam
    and the mode axis.
    """
    return k * ground_state_size(total_mass, trap_omega) * math.cos(theta)
