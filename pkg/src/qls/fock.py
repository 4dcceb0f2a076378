"""Truncated Fock-space states and operators.

States are plain complex numpy vectors wrapped in small frozen dataclasses.
Hybrid (spin x oscillator) vectors are ordered spin-major: index s*N + n,
with spin basis (|g>, |e>) or (|+>_x, |->_x) recorded as a tag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import TruncationOverflow

DEFAULT_TAIL_THRESHOLD = 1e-8


@dataclass(frozen=True)
class FockSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"Fock dimension must be an integer >= 2, got {self.dim!r}")

    @property
    def tail_start(self) -> int:
        """First index of the top-eighth tail used for truncation checks."""
        return self.dim - math.ceil(self.dim / 8)

    @property
    def interior(self) -> int:
        return self.tail_start


def guard_dim(alpha: complex) -> int:
    """Smallest dimension satisfying N >= |a|^2 + 6|a| + 9."""
    r = abs(alpha)
    return math.ceil(r * r + 6 * r + 9)


def check_guard(alpha: complex, space: FockSpace) -> None:
    if guard_dim(alpha) > space.dim:
        raise TruncationOverflow(
            f"|alpha|={abs(alpha):.4g} needs N >= {guard_dim(alpha)}, space has {space.dim}"
        )


def reliable_block(alpha: complex, space: FockSpace) -> int:
    """Number of leading Fock levels n whose displaced image D(alpha)|n> fits the space.

    Uses the guard with the amplitude sqrt(n) + |alpha|. On this block a
    truncated matrix exponential is free of edge reflections.
    """
    r = abs(alpha)
    m = 0
    while m < space.dim and guard_dim(math.sqrt(m) + r) <= space.dim:
        m += 1
    return m


def tail_population(amplitudes: np.ndarray, dim: int) -> float:
    """Population in the top eighth of every Fock block of ``amplitudes``."""
    blocks = np.asarray(amplitudes).reshape(-1, dim)
    start = dim - math.ceil(dim / 8)
    return float(np.sum(np.abs(blocks[:, start:]) ** 2))


@dataclass(frozen=True, eq=False)
class MotionalState:
    amplitudes: np.ndarray

    @property
    def space(self) -> FockSpace:
        return FockSpace(len(self.amplitudes))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def mean_number(self) -> float:
        p = np.abs(self.amplitudes) ** 2
        return float(np.dot(np.arange(len(p)), p))

    def tail_population(self) -> float:
        return tail_population(self.amplitudes, len(self.amplitudes))

    def is_truncation_valid(self, threshold: float = DEFAULT_TAIL_THRESHOLD) -> bool:
        return self.tail_population() < threshold


_SPIN_BASES = ("z", "x")
_HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class HybridState:
    """Spin (x) oscillator state; ``basis`` is "z" for (|g>,|e>) or "x" for (|+>,|->)."""

    amplitudes: np.ndarray
    dim: int
    basis: str = "z"

    def __post_init__(self):
        if self.basis not in _SPIN_BASES:
            raise ValueError(f"unknown spin basis {self.basis!r}")
        if len(self.amplitudes) != 2 * self.dim:
            raise ValueError("amplitude vector must have length 2*dim")

    @property
    def space(self) -> FockSpace:
        return FockSpace(self.dim)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def blocks(self) -> np.ndarray:
        """(2, N) view: row s holds the motional amplitudes of spin state s."""
        return self.amplitudes.reshape(2, self.dim)

    def to_basis(self, basis: str) -> "HybridState":
        if basis == self.basis:
            return self
        if basis not in _SPIN_BASES:
            raise ValueError(f"unknown spin basis {basis!r}")
        # the Hadamard matrix is its own inverse, so z->x and x->z are identical
        new = (_HADAMARD @ self.blocks()).reshape(-1)
        return HybridState(new, self.dim, basis)

    def spin_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.blocks()) ** 2, axis=1)

    def reduced_spin(self) -> np.ndarray:
        b = self.blocks()
        return b @ b.conj().T

    def mean_number(self) -> float:
        p = np.sum(np.abs(self.blocks()) ** 2, axis=0)
        return float(np.dot(np.arange(self.dim), p))

    def tail_population(self) -> float:
        return tail_population(self.amplitudes, self.dim)

    def is_truncation_valid(self, threshold: float = DEFAULT_TAIL_THRESHOLD) -> bool:
        return self.tail_population() < threshold

    def overlap(self, other: "HybridState") -> complex:
        if other.basis != self.basis:
            raise ValueError(f"basis mismatch: {self.basis!r} vs {other.basis!r}")
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "HybridState") -> float:
        return abs(self.overlap(other)) ** 2

    @classmethod
    def product(cls, spin: np.ndarray, motion: MotionalState, basis: str = "z") -> "HybridState":
        amps = np.kron(np.asarray(spin, dtype=complex), motion.amplitudes)
        return cls(amps, len(motion.amplitudes), basis)


# --- ladder operators -------------------------------------------------------

@lru_cache(maxsize=64)
def destroy(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim), format="csr").astype(complex)


def create(dim: int) -> sp.csr_matrix:
    return destroy(dim).conj().T.tocsr()


def number(dim: int) -> sp.csr_matrix:
    return sp.diags(np.arange(dim, dtype=float), 0, format="csr").astype(complex)


def basis_state(n: int, space: FockSpace) -> MotionalState:
    v = np.zeros(space.dim, dtype=complex)
    v[n] = 1.0
    return MotionalState(v)


def coherent_state(alpha: complex, space: FockSpace) -> MotionalState:
    check_guard(alpha, space)
    n = np.arange(space.dim)
    if alpha == 0:
        c = np.zeros(space.dim, dtype=complex)
        c[0] = 1.0
        return MotionalState(c)
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    c = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return MotionalState(c / np.linalg.norm(c))


# --- Laguerre polynomials ---------------------------------------------------

def laguerre_assoc(n: int, k: int, x: float) -> float:
    """Generalized Laguerre polynomial L_n^k(x) by three-term recurrence."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    prev, cur = 1.0, 1.0 + k - x
    if n == 0:
        return prev
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    return cur


def laguerre_sequence(k: int, x: float, n_max: int) -> np.ndarray:
    """Array [L_0^k(x), ..., L_{n_max}^k(x)]."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + k - x
    for j in range(1, n_max):
        out[j + 1] = ((2 * j + 1 + k - x) * out[j] - (j + k) * out[j - 1]) / (j + 1)
    return out


def ladder_coupling_F(n, eta: float):
    """All-orders coupling F(n) = exp(-eta^2/2) sqrt(1/(n+1)) L_n^1(eta^2).

    Accepts an integer or an integer array. F(n) is the matrix element
    connecting |n> and |n+1>; at eta -> 0 it reduces to sqrt(n+1).
    """
    x = eta * eta
    n_arr = np.atleast_1d(np.asarray(n, dtype=int))
    if n_arr.size and n_arr.min() < 0:
        raise ValueError("n must be non-negative")
    lag = laguerre_sequence(1, x, int(n_arr.max()) if n_arr.size else 0)[n_arr]
    out = math.exp(-x / 2) * lag / np.sqrt(n_arr + 1.0)
    return float(out[0]) if np.ndim(n) == 0 else out


def nonlinear_ladder(eta: float, space: FockSpace) -> sp.csr_matrix:
    """Lowering operator with A|n+1> = F(n)|n>, so that A^dagger|n> = F(n)|n+1>."""
    band = ladder_coupling_F(np.arange(space.dim - 1), eta)
    return sp.diags(band.astype(complex), 1, shape=(space.dim, space.dim), format="csr")


# --- displacement -----------------------------------------------------------

def _scaled_laguerre_table(x: float, dim: int) -> np.ndarray:
    """S[k, j] = sqrt(j!/(j+k)!) r^k exp(-x/2) L_j^k(x) with r = sqrt(x).

    Built column-wise in j with all offsets k at once. The scaling keeps
    every entry bounded by one, which is what makes N in the thousands safe.
    """
    k = np.arange(dim, dtype=float)
    S = np.zeros((dim, dim))
    if x == 0.0:
        S[0, :] = 1.0
        return S
    log_r = 0.5 * math.log(x)
    S[:, 0] = np.exp(k * log_r - 0.5 * gammaln(k + 1) - x / 2)
    if dim > 1:
        S[:, 1] = S[:, 0] * (1 + k - x) / np.sqrt(k + 1)
    for j in range(1, dim - 1):
        a = (2 * j + 1 + k - x) * np.sqrt((j + 1) / (j + 1 + k))
        b = (j + k) * np.sqrt(j * (j + 1) / ((j + k) * (j + k + 1)))
        S[:, j + 1] = (a * S[:, j] - b * S[:, j - 1]) / (j + 1)
    return S


def displacement_matrix(alpha: complex, space: FockSpace) -> np.ndarray:
    """Dense D(alpha) from the closed-form Laguerre matrix elements.

    <m|D|n> = sqrt(n!/m!) alpha^(m-n) e^{-|a|^2/2} L_n^(m-n)(|a|^2) for m >= n,
    and the mirrored expression with -conj(alpha) above the diagonal.
    """
    dim = space.dim
    x = abs(alpha) ** 2
    phase = np.exp(1j * np.angle(alpha)) if alpha != 0 else 1.0
    S = _scaled_laguerre_table(x, dim)
    D = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for k in range(dim):
        j = idx[: dim - k]
        lower = S[k, : dim - k] * phase**k
        D[j + k, j] = lower
        if k:
            D[j, j + k] = S[k, : dim - k] * (-np.conj(phase)) ** k
    return D


def displacement_matrix_expm(alpha: complex, space: FockSpace) -> np.ndarray:
    """D(alpha) as expm(alpha a^dag - conj(alpha) a) on the truncated space."""
    a = destroy(space.dim).toarray()
    return scipy.linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)


def displace(state: MotionalState, alpha: complex) -> MotionalState:
    D = displacement_matrix(alpha, state.space)
    return MotionalState(D @ state.amplitudes)


# --- cat states -------------------------------------------------------------

PLUS_X = np.array([1, 1]) / math.sqrt(2)
MINUS_X = np.array([1, -1]) / math.sqrt(2)


def ideal_cat(alpha: complex, space: FockSpace) -> HybridState:
    """(|+>_x|alpha> + |->_x|-alpha>)/sqrt(2), returned in the z basis."""
    plus = coherent_state(alpha, space).amplitudes
    minus = coherent_state(-alpha, space).amplitudes
    amps = (np.kron(PLUS_X, plus) + np.kron(MINUS_X, minus)) / math.sqrt(2)
    return HybridState(amps / np.linalg.norm(amps), space.dim, "z")


def ground_hybrid(space: FockSpace) -> HybridState:
    """|g> (x) |0>."""
    v = np.zeros(2 * space.dim, dtype=complex)
    v[0] = 1.0
    return HybridState(v, space.dim, "z")


def spin_operator(name: str) -> np.ndarray:
    """2x2 spin operators in the (|g>, |e>) basis; sigma_+ = |e><g|."""
    ops = {
        "I": np.eye(2),
        "x": np.array([[0, 1], [1, 0]]),
        "y": np.array([[0, 1j], [-1j, 0]]),
        "z": np.array([[-1, 0], [0, 1]]),
        "+": np.array([[0, 0], [1, 0]]),
        "-": np.array([[0, 1], [0, 0]]),
    }
    return np.asarray(ops[name], dtype=complex)


def on_hybrid(spin_op: np.ndarray, motion_op, dim: int) -> sp.csr_matrix:
    """Sparse spin (x) motion operator acting on spin-major hybrid vectors."""
    if motion_op is None:
        motion_op = sp.identity(dim, format="csr")
    return sp.kron(sp.csr_matrix(spin_op), sp.csr_matrix(motion_op), format="csr")
