"""Interaction Hamiltonians and a time-dependent Schrodinger propagator.

Hamiltonians are stored as H/hbar in rad/s: a list of sparse operators on
the spin-major hybrid space, each with a coefficient sum_j c_j exp(-i w_j t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import NormDrift, TruncationOverflow
from .fock import (
    DEFAULT_TAIL_THRESHOLD,
    FockSpace,
    HybridState,
    destroy,
    nonlinear_ladder,
    on_hybrid,
    spin_operator,
)


@dataclass(frozen=True)
class DriveTone:
    rabi: float  # rad/s
    detuning: float = 0.0  # rad/s, laser minus atomic transition
    phase: float = 0.0

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("Rabi frequency must be non-negative")


def bichromatic_tones(rabi: float, trap_omega: float) -> list[DriveTone]:
    """Blue and red sideband tones whose RWA limit is (eta Omega/2) sigma_x i(a^dag - a).

    The red tone carries phase pi so that the generated cat lies along the
    real axis of phase space and a recoil at scatter phase pi/2 is orthogonal
    to it.
    """
    return [DriveTone(rabi, trap_omega, 0.0), DriveTone(rabi, -trap_omega, math.pi)]


@dataclass(frozen=True)
class Term:
    op: sp.csr_matrix
    amps: tuple[complex, ...] = (1.0,)
    freqs: tuple[float, ...] = (0.0,)

    def coeff(self, t: float) -> complex:
        return sum(c * np.exp(-1j * w * t) for c, w in zip(self.amps, self.freqs))

    @property
    def constant(self) -> bool:
        return all(w == 0.0 for w in self.freqs)


@dataclass
class Hamiltonian:
    """H(t)/hbar on a hybrid space of Fock dimension ``dim``."""

    dim: int
    terms: list[Term] = field(default_factory=list)

    def __post_init__(self):
        # group by frequency so that H(t) = sum_f e^{-i f t} M_f
        shape = (2 * self.dim, 2 * self.dim)
        groups: dict[float, sp.csr_matrix] = {}
        for term in self.terms:
            for c, w in zip(term.amps, term.freqs):
                groups[w] = groups.get(w, sp.csr_matrix(shape, dtype=complex)) + c * term.op
        static = groups.pop(0.0, None)
        self._static = None if static is None else sp.csr_matrix(static)
        self._freqs = np.array(sorted(groups))
        self._mats = [sp.csr_matrix(groups[w]) for w in self._freqs]
        # one stacked matvec per call instead of one per frequency
        blocks = ([self._static] if self._static is not None else []) + self._mats
        self._stack = sp.vstack(blocks, format="csr") if blocks else None
        self._has_static = self._static is not None

    @property
    def time_independent(self) -> bool:
        return not self._mats

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self._freqs))) if self._mats else 0.0

    def matrix(self, t: float = 0.0) -> sp.csr_matrix:
        out = self._static if self._static is not None else sp.csr_matrix((2 * self.dim, 2 * self.dim), dtype=complex)
        for ph, m in zip(np.exp(-1j * self._freqs * t), self._mats):
            out = out + ph * m
        return sp.csr_matrix(out)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        if self._stack is None:
            return np.zeros_like(psi)
        y = (self._stack @ psi).reshape(-1, psi.shape[0])
        if not self._mats:
            return y[0]
        ph = np.exp(-1j * self._freqs * t)
        if self._has_static:
            return y[0] + ph @ y[1:]
        return ph @ y

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return Hamiltonian(self.dim, list(self.terms) + list(other.terms))

    def expectation(self, state: HybridState, t: float = 0.0) -> float:
        psi = state.amplitudes
        return float(np.real(np.vdot(psi, self.apply(t, psi))))


@dataclass(frozen=True)
class PropagatorConfig:
    max_step: float | None = None  # None: derived from the fastest oscillating term
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    norm_drift_limit: float = 1e-9
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    steps_per_period: int = 50
    method: str = "DOP853"

    def step_cap(self, hamiltonian: Hamiltonian) -> float:
        cap = np.inf
        w = hamiltonian.max_frequency
        if w > 0:
            cap = 2 * math.pi / w / self.steps_per_period
        if self.max_step is not None:
            cap = min(cap, self.max_step)
        return cap


# --- Hamiltonian constructors -----------------------------------------------

def _sideband_hamiltonian(tones: Sequence[DriveTone], eta: float, trap_omega: float,
                          ladder: sp.csr_matrix, dim: int) -> Hamiltonian:
    sp_plus, sp_minus = spin_operator("+"), spin_operator("-")
    lad = sp.csr_matrix(ladder)
    lad_dag = lad.conj().T.tocsr()
    carrier_p, carrier_m, low_p, raise_p, low_m, raise_m = ([], [], [], [], [], [])
    for tone in tones:
        half = tone.rabi / 2
        e = np.exp(1j * tone.phase)
        d, w = tone.detuning, trap_omega
        carrier_p.append((half * e, d))
        low_p.append((half * 1j * eta * e, d + w))  # sigma_+ a e^{-i(D+w)t}
        raise_p.append((half * 1j * eta * e, d - w))  # sigma_+ a^dag e^{-i(D-w)t}
        carrier_m.append((np.conj(half * e), -d))
        raise_m.append((np.conj(half * 1j * eta * e), -(d + w)))
        low_m.append((np.conj(half * 1j * eta * e), -(d - w)))

    def term(spin, motion, pairs):
        amps, freqs = zip(*pairs)
        return Term(on_hybrid(spin, motion, dim), tuple(amps), tuple(freqs))

    terms = [term(sp_plus, None, carrier_p), term(sp_minus, None, carrier_m)]
    if eta != 0.0:
        terms += [
            term(sp_plus, lad, low_p),
            term(sp_plus, lad_dag, raise_p),
            term(sp_minus, lad_dag, raise_m),
            term(sp_minus, lad, low_m),
        ]
    return Hamiltonian(dim, terms)


def hamiltonian_ld(tones: Sequence[DriveTone], eta: float, trap_omega: float,
                   space: FockSpace) -> Hamiltonian:
    """Lamb-Dicke interaction-picture Hamiltonian summed over drive tones."""
    return _sideband_hamiltonian(tones, eta, trap_omega, destroy(space.dim), space.dim)


def hamiltonian_all_orders(tones: Sequence[DriveTone], eta: float, trap_omega: float,
                           space: FockSpace) -> Hamiltonian:
    """As :func:`hamiltonian_ld` with the ladder operator replaced by the all-orders one."""
    if eta == 0.0:
        return _sideband_hamiltonian(tones, 0.0, trap_omega, destroy(space.dim), space.dim)
    return _sideband_hamiltonian(tones, eta, trap_omega, nonlinear_ladder(eta, space), space.dim)


def hamiltonian_bichromatic_rwa(rabi: float, eta: float, space: FockSpace,
                                motional_phase: float = 0.0, all_orders: bool = False) -> Hamiltonian:
    """(eta Omega/2) sigma_x (x) (e^{i phi} L^dag + e^{-i phi} L), time independent.

    ``motional_phase=0`` gives sigma_x (a + a^dag); the tone pair from
    :func:`bichromatic_tones` corresponds to ``motional_phase=pi/2``.
    """
    if all_orders and eta != 0.0:
        lad = nonlinear_ladder(eta, space)
    else:
        lad = destroy(space.dim)
    quad = np.exp(1j * motional_phase) * lad.conj().T + np.exp(-1j * motional_phase) * lad
    op = (eta * rabi / 2) * on_hybrid(spin_operator("x"), quad, space.dim)
    return Hamiltonian(space.dim, [Term(op)])


def hamiltonian_carrier(rabi: float, space: FockSpace, detuning: float = 0.0, phase: float = 0.0) -> Hamiltonian:
    """Pure carrier drive (no motional coupling)."""
    return _sideband_hamiltonian([DriveTone(rabi, detuning, phase)], 0.0, 1.0, destroy(space.dim), space.dim)


# --- propagation ------------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    states: list[HybridState]


def propagate(hamiltonian: Hamiltonian, state: HybridState, t0: float, t1: float,
              config: PropagatorConfig | None = None, t_eval: Sequence[float] | None = None,
              return_trajectory: bool = False):
    """Integrate i d|psi>/dt = H(t)|psi> from t0 to t1 (t1 < t0 runs backwards).

    No renormalisation is applied. Raises NormDrift when the norm moves by
    more than ``config.norm_drift_limit`` and TruncationOverflow when the top
    Fock tail picks up more than ``config.tail_threshold``.
    """
    config = config or PropagatorConfig()
    if state.dim != hamiltonian.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    if state.basis != "z":
        state = state.to_basis("z")
    psi0 = np.asarray(state.amplitudes, dtype=complex)
    if t1 == t0:
        return (state, Trajectory(np.array([t0]), [state])) if return_trajectory else state

    def rhs(t, y):
        return -1j * hamiltonian.apply(t, y)

    sol = solve_ivp(
        rhs, (t0, t1), psi0, method=config.method,
        rtol=config.rel_tol, atol=config.abs_tol,
        max_step=config.step_cap(hamiltonian), t_eval=t_eval,
    )
    if not sol.success:
        raise NormDrift(f"integrator failed: {sol.message}")
    final = sol.y[:, -1] if t_eval is None else _final_point(hamiltonian, psi0, t0, t1, config, sol)
    norm0 = np.linalg.norm(psi0)
    drift = abs(np.linalg.norm(final) - norm0)
    if drift > config.norm_drift_limit:
        raise NormDrift(f"norm drifted by {drift:.3e} (limit {config.norm_drift_limit:.1e})")
    out = HybridState(final, state.dim, "z")
    tail = out.tail_population()
    if tail > config.tail_threshold:
        raise TruncationOverflow(f"tail population {tail:.3e} exceeds {config.tail_threshold:.1e}")
    if return_trajectory:
        states = [HybridState(sol.y[:, i], state.dim, "z") for i in range(sol.y.shape[1])]
        return out, Trajectory(sol.t, states)
    return out


def _final_point(hamiltonian, psi0, t0, t1, config, sol):
    if np.isclose(sol.t[-1], t1, rtol=0, atol=1e-15 * max(1.0, abs(t1))):
        return sol.y[:, -1]
    rest = solve_ivp(lambda t, y: -1j * hamiltonian.apply(t, y), (sol.t[-1], t1), sol.y[:, -1],
                     method=config.method, rtol=config.rel_tol, atol=config.abs_tol,
                     max_step=config.step_cap(hamiltonian))
    return rest.y[:, -1]
