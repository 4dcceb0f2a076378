"""Photon-recoil detection with a motional cat state.

A recoil displaces the motion by D(e^{i phi} eta k). Undoing the cat
generation maps the resulting branch phase onto the logic-ion spin; the
spin-flip probability is (1 - C cos 2 theta_g)/2 with theta_g = 2 alpha eta k sin(phi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catgen import CatGenResult
from .dynamics import PropagatorConfig, propagate
from .errors import TruncationOverflow
from .fock import (
    DEFAULT_TAIL_THRESHOLD,
    FockSpace,
    HybridState,
    displacement_matrix,
    guard_dim,
    ideal_cat,
)
from .molecule import IonCrystal, VibrationalMode, eta_probe
from .physics import wavenumber_to_omega
from .sweep import SweepTable

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class RecoilEvent:
    eta_probe: float
    scatter_phase: float = math.pi / 2
    photon_count: int = 1

    def __post_init__(self):
        if self.photon_count < 0 or int(self.photon_count) != self.photon_count:
            raise ValueError("photon_count must be a non-negative integer")

    @property
    def displacement(self) -> complex:
        return np.exp(1j * self.scatter_phase) * self.eta_probe * self.photon_count


@dataclass(frozen=True)
class DetectionOutcome:
    spin_flip_probability: float
    geometric_phase: float
    contrast: float
    background: float

    @property
    def signal(self) -> float:
        """Spin-flip probability above the dephasing background, C sin^2(theta_g)."""
        return self.spin_flip_probability - self.background


class ModePopulations:
    """Photon-number distributions P_j(k), one per vibrational mode."""

    def __init__(self, distributions: Sequence[Sequence[float]]):
        self.distributions = [np.asarray(d, dtype=float) for d in distributions]
        for d in self.distributions:
            if np.any(d < -1e-15):
                raise ValueError("probabilities must be non-negative")
            if abs(d.sum() - 1.0) > 1e-9:
                raise ValueError(f"distribution sums to {d.sum():.12f}, not 1")

    @classmethod
    def coherent(cls, betas: Sequence[complex], k_max: int | None = None) -> "ModePopulations":
        """Poisson distributions with means |beta_j|^2 (harmonic-mode excitation)."""
        dists = []
        for b in betas:
            mean = abs(b) ** 2
            kmax = k_max or max(12, int(mean + 12 * math.sqrt(mean) + 12))
            k = np.arange(kmax + 1)
            logp = -mean + k * math.log(mean) - _lgamma(k + 1) if mean > 0 else None
            p = np.exp(logp) if mean > 0 else np.eye(1, kmax + 1)[0]
            p = p / p.sum()
            dists.append(p)
        return cls(dists)

    @classmethod
    def two_level(cls, excitations: Sequence[float]) -> "ModePopulations":
        return cls([[1.0 - p, p] for p in excitations])

    @classmethod
    def single(cls, k: int) -> "ModePopulations":
        return cls([np.eye(1, k + 1, k)[0]])

    def total(self) -> np.ndarray:
        """Distribution of the summed photon number over all modes."""
        out = np.array([1.0])
        for d in self.distributions:
            out = np.convolve(out, d)
        return out


def _lgamma(x):
    from scipy.special import gammaln
    return gammaln(x)


# --- closed forms -----------------------------------------------------------

def geometric_phase(alpha: float, eta: float, scatter_phase: float) -> float:
    return 2.0 * alpha * eta * math.sin(scatter_phase)


def detect_probability(alpha: float, eta: float, scatter_phase: float = math.pi / 2,
                       contrast: float = 1.0) -> DetectionOutcome:
    if not 0.0 <= contrast <= 1.0:
        raise ValueError(f"contrast must lie in [0, 1], got {contrast!r}")
    theta = geometric_phase(alpha, eta, scatter_phase)
    p = (1.0 - contrast * math.cos(2.0 * theta)) / 2.0
    return DetectionOutcome(p, theta, contrast, (1.0 - contrast) / 2.0)


# --- state-vector protocol --------------------------------------------------

def _displace_motion(state: HybridState, beta: complex) -> HybridState:
    if beta == 0:
        return state
    D = displacement_matrix(beta, state.space)
    blocks = state.blocks() @ D.T
    return HybridState(blocks.reshape(-1), state.dim, state.basis)


def apply_recoil(state: HybridState, event: RecoilEvent,
                 tail_threshold: float = DEFAULT_TAIL_THRESHOLD) -> HybridState:
    """Displace the motion by e^{i phi} eta k; the spin is untouched."""
    out = _displace_motion(state, event.displacement)
    tail = out.tail_population()
    if tail > tail_threshold:
        raise TruncationOverflow(f"recoil pushed {tail:.3e} into the Fock tail")
    return out


def undo_ideal_cat(state: HybridState, alpha: float) -> HybridState:
    """Apply the adjoint of |+><+| D(alpha) + |-><-| D(-alpha)."""
    x = state.to_basis("x").blocks()
    plus = displacement_matrix(-alpha, state.space) @ x[0]
    minus = displacement_matrix(alpha, state.space) @ x[1]
    return HybridState(np.concatenate([plus, minus]), state.dim, "x").to_basis("z")


def ramsey_readout(state: HybridState, contrast: float = 1.0) -> DetectionOutcome:
    """Spin-flip probability after the inverse mapping, with extra dephasing ``contrast``.

    Dephasing scales the coherence <b+|b-> between the x-basis branches;
    this commutes with the branch-diagonal inverse mapping.
    """
    x = state.to_basis("x").blocks()
    cross = complex(np.vdot(x[0], x[1]))
    pops = np.sum(np.abs(x) ** 2, axis=1)
    p = 0.5 * (pops.sum() - 2.0 * contrast * cross.real)
    c_eff = contrast * 2.0 * abs(cross)
    theta = -0.5 * np.angle(cross) if abs(cross) > 0 else 0.0
    return DetectionOutcome(float(p), float(theta), float(c_eff), float((1.0 - c_eff) / 2.0))


def simulate_protocol(gen: CatGenResult, event: RecoilEvent, contrast: float = 1.0,
                      config: PropagatorConfig | None = None) -> DetectionOutcome:
    """Recoil on the generated cat, inverse generation, Ramsey readout."""
    if gen.state is None:
        raise ValueError("generation result carries no state")
    kicked = apply_recoil(gen.state, event)
    if gen.method == "full_dynamics":
        if gen.hamiltonian is None:
            raise ValueError("full-dynamics result carries no Hamiltonian")
        back = propagate(gen.hamiltonian, kicked, gen.duration, 0.0, config)
    else:
        back = undo_ideal_cat(kicked, gen.achieved_alpha)
    return ramsey_readout(back, contrast)


# --- multi-mode traced states -----------------------------------------------

def traced_motional_state(populations: ModePopulations, eta: float, cat_alpha: float,
                          space: FockSpace, scatter_phase: float = math.pi / 2) -> np.ndarray:
    """Hybrid density matrix sum_K P(K) D(e^{i phi} eta K)|cat><cat|D^dag.

    K is the total photon number summed over modes; vibrational states are
    traced out because the readout never addresses them.
    """
    total = populations.total()
    cat = ideal_cat(cat_alpha, space)
    rho = np.zeros((2 * space.dim, 2 * space.dim), dtype=complex)
    unit = np.exp(1j * scatter_phase) * eta
    for k, p in enumerate(total):
        if p < 1e-16:
            continue
        if guard_dim(abs(cat_alpha) + abs(unit) * k) > space.dim and p > 1e-12:
            raise TruncationOverflow(f"photon number {k} displaces the cat beyond the Fock space")
        psi = _displace_motion(cat, unit * k).amplitudes
        rho += p * np.outer(psi, psi.conj())
    return rho


def detect_from_density(rho: np.ndarray, cat_alpha: float, space: FockSpace,
                        contrast: float = 1.0) -> float:
    """Spin-flip probability of a mixed hybrid state after the ideal inverse mapping."""
    w, v = np.linalg.eigh(rho)
    p = 0.0
    for weight, vec in zip(w, v.T):
        if weight < 1e-14:
            continue
        state = HybridState(vec, space.dim, "z")
        p += weight * ramsey_readout(undo_ideal_cat(state, cat_alpha), contrast).spin_flip_probability
    return float(p)


@dataclass(frozen=True)
class MultimodeDetection:
    exact: float
    as_printed: float

    @property
    def difference(self) -> float:
        return self.as_printed - self.exact


def multimode_detection(populations: ModePopulations, eta: float, cat_alpha: float,
                        contrast: float = 1.0, scatter_phase: float = math.pi / 2) -> MultimodeDetection:
    """Spin-flip probability of the traced mixture, plus the amplitude-weighted phase formula.

    ``exact`` averages (1 - C cos 2 theta_g(K))/2 over the total photon
    number K. ``as_printed`` evaluates the phase 2 alpha eta sum_j sum_k k |c_kj|
    with amplitude (not probability) weights, then applies the same contrast.
    """
    total = populations.total()
    k = np.arange(len(total))
    theta = 2.0 * cat_alpha * eta * k * math.sin(scatter_phase)
    exact = float(np.dot(total, (1.0 - contrast * np.cos(2.0 * theta)) / 2.0))
    amp_sum = sum(float(np.dot(np.arange(len(d)), np.sqrt(d))) for d in populations.distributions)
    phase = 2.0 * cat_alpha * eta * amp_sum * math.sin(scatter_phase)
    printed = (1.0 - contrast * math.cos(2.0 * phase)) / 2.0
    return MultimodeDetection(exact, float(printed))


# --- pulses and spectra -----------------------------------------------------

@dataclass(frozen=True)
class PulseSpec:
    duration_fwhm: float = 200e-15  # s, field envelope
    area: float = 1.0

    def __post_init__(self):
        if not self.duration_fwhm > 0:
            raise ValueError("pulse duration must be positive")

    @property
    def sigma_t(self) -> float:
        return self.duration_fwhm * FWHM_TO_SIGMA


def spectral_factor(detuning: float, pulse_duration_fwhm: float) -> float:
    """Gaussian pulse amplitude at angular detuning ``detuning`` relative to resonance."""
    s = pulse_duration_fwhm * FWHM_TO_SIGMA
    return math.exp(-0.5 * (detuning * s) ** 2)


def pulse_excitation(mode: VibrationalMode, pulse_center: float, pulse_duration_fwhm: float,
                     pulse_area: float = 1.0, d_ref: float | None = None) -> float:
    """Excitation left in ``mode`` by a Gaussian pulse centred at ``pulse_center`` cm^-1.

    Harmonic modes return the coherent amplitude beta; two-level modes the
    excited-state probability sin^2(pi/2 * A) of the effective area A.
    """
    if not pulse_duration_fwhm > 0:
        raise ValueError("pulse duration must be positive")
    d_ref = d_ref or mode.transition_moment
    detuning = wavenumber_to_omega(mode.frequency) - wavenumber_to_omega(pulse_center)
    amp = pulse_area * (mode.transition_moment / d_ref) * spectral_factor(detuning, pulse_duration_fwhm)
    if mode.model == "two_level":
        return min(1.0, max(0.0, math.sin(math.pi / 2 * amp) ** 2))
    return amp


def mode_populations(modes: Sequence[VibrationalMode], values: Sequence[float]) -> ModePopulations:
    dists = []
    for mode, v in zip(modes, values):
        if mode.model == "two_level":
            dists.append([1.0 - v, v])
        else:
            dists.append(ModePopulations.coherent([v]).distributions[0])
    return ModePopulations(dists)


@dataclass(frozen=True)
class ProtocolParams:
    alpha: float
    contrast: float
    theta: float = 0.0
    duration: float = 0.0


def spectrum_scan(crystal: IonCrystal, wavenumbers: Sequence[float], pulse: PulseSpec,
                  heating_rate: float, protocol_params: ProtocolParams | None = None,
                  **optimizer_kwargs) -> SweepTable:
    """Spin-flip probability versus pulse centre wavenumber.

    The cat (alpha, contrast) is fixed for the whole scan, chosen by the
    optimizer for the strongest mode unless ``protocol_params`` is given.
    """
    modes = crystal.molecule.modes
    if protocol_params is None:
        from .optimizer import protocol_for_mode
        protocol_params = protocol_for_mode(crystal, crystal.molecule.mode(), heating_rate, **optimizer_kwargs)
    d_ref = max(m.transition_moment for m in modes)
    cols = ["wavenumber_cm1", "spin_flip_probability"] + [f"beta_{m.label}" for m in modes]
    units = ["cm^-1", ""] + ["" for _ in modes]
    table = SweepTable(cols, units, metadata={
        "molecule": crystal.molecule.name,
        "ion": crystal.ion.name,
        "heating_rate_quanta_per_s": heating_rate,
        "pulse_fwhm_s": pulse.duration_fwhm,
        "pulse_area": pulse.area,
        "cat_alpha": protocol_params.alpha,
        "contrast": protocol_params.contrast,
        "control_angle_rad": protocol_params.theta,
        "trap_frequency_rad_s": crystal.trap_frequency,
    })
    for nu in wavenumbers:
        vals = [pulse_excitation(m, nu, pulse.duration_fwhm, pulse.area, d_ref) for m in modes]
        pops = mode_populations(modes, vals)
        eta = eta_probe(crystal, nu)
        p = multimode_detection(pops, eta, protocol_params.alpha, protocol_params.contrast).exact
        table.add_row([float(nu), p] + [float(v) for v in vals])
    return table
