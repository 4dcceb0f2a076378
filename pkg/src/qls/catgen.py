"""Cat-state generation: analytic, growth-rate surrogate and full dynamics.

Also holds the displacement cap set by the first zero of L_n^1(eta^2) and
the heating-induced dephasing model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    Hamiltonian,
    PropagatorConfig,
    bichromatic_tones,
    hamiltonian_all_orders,
    hamiltonian_bichromatic_rwa,
    propagate,
)
from .errors import StalledGeneration
from .fock import FockSpace, HybridState, check_guard, ground_hybrid, ideal_cat

DEFAULT_RABI_CAP = 2 * math.pi * 300e3
DEFAULT_TRAP_OMEGA = 2 * math.pi * 500e3
STALL_FRACTION = 1e-3
STALL_PERIODS = 10


@dataclass(frozen=True)
class CatGenSpec:
    rabi: float
    eta_control: float
    target_alpha: float | None = None
    target_duration: float | None = None
    space: FockSpace | None = None
    trap_omega: float = DEFAULT_TRAP_OMEGA
    rabi_cap: float = DEFAULT_RABI_CAP

    def __post_init__(self):
        if self.rabi > self.rabi_cap * (1 + 1e-12):
            raise ValueError(f"Rabi frequency {self.rabi:.4g} exceeds the cap {self.rabi_cap:.4g}")
        if self.target_alpha is not None and self.target_duration is not None:
            raise ValueError("give target_alpha or target_duration, not both")

    @property
    def ld_speed(self) -> float:
        """Lamb-Dicke displacement rate eta*Omega/2 (1/s)."""
        return self.eta_control * self.rabi / 2

    @property
    def sideband_period(self) -> float:
        return 2 * math.pi / (self.eta_control * self.rabi)


@dataclass
class CatGenResult:
    achieved_alpha: float
    duration: float
    fidelity_vs_ideal: float
    trajectory: list[tuple[float, float]]
    method: str
    state: HybridState | None = None
    hamiltonian: Hamiltonian | None = field(default=None, repr=False)


# --- displacement cap -------------------------------------------------------

_ZERO_CACHE: dict[float, int] = {}


def first_laguerre_zero(eta: float, n_limit: int | None = None) -> int | None:
    """Smallest n with L_n^1(eta^2) <= 0, or None if it lies beyond ``n_limit``."""
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    if eta in _ZERO_CACHE:
        n = _ZERO_CACHE[eta]
        return n if n_limit is None or n <= n_limit else None
    x = eta * eta
    prev, cur, j = 1.0, 2.0 - x, 1
    if cur <= 0:
        _ZERO_CACHE[eta] = 1
        return 1
    while n_limit is None or j < n_limit:
        prev, cur = cur, ((2 * j + 2 - x) * cur - (j + 1) * prev) / (j + 1)
        j += 1
        if cur <= 0:
            _ZERO_CACHE[eta] = j
            return j
    return None


def max_alpha(eta: float, limit: float | None = None) -> float:
    """Largest cat displacement sqrt(n*) before the sideband coupling vanishes.

    With ``limit`` the scan stops once sqrt(n) exceeds it and ``inf`` is
    returned, which keeps tiny-eta calls cheap when the cap cannot bind.
    """
    n_limit = None if limit is None else int(math.ceil(limit * limit)) + 1
    n = first_laguerre_zero(eta, n_limit)
    return math.inf if n is None else math.sqrt(n)


# --- growth-rate surrogate --------------------------------------------------

class _GrowthProfile:
    """Relative rates g_n = e^{-x/2} L_n^1(x)/(n+1) and cumulative times for one eta."""

    def __init__(self, eta: float):
        self.eta = eta
        self.x = eta * eta
        self.lag = [1.0, 2.0 - self.x]
        self.zero: int | None = None
        self._rebuild()

    def extend(self, n: int) -> None:
        lag, x = self.lag, self.x
        while len(lag) <= n + 1 and self.zero is None:
            j = len(lag) - 1
            lag.append(((2 * j + 2 - x) * lag[j] - (j + 1) * lag[j - 1]) / (j + 1))
        for i, v in enumerate(lag):
            if v <= 0:
                self.zero = i
                break
        self._rebuild()

    def _rebuild(self) -> None:
        lag = np.asarray(self.lag)
        n = np.arange(len(lag))
        self.rate = math.exp(-self.x / 2) * lag / (n + 1)
        with np.errstate(divide="ignore"):
            step = (np.sqrt(n + 1) - np.sqrt(n)) / self.rate
        step[self.rate <= 0] = np.inf
        self.cum = np.concatenate([[0.0], np.cumsum(step)])
        below = np.nonzero(self.rate <= STALL_FRACTION)[0]
        self.stall = int(below[0]) if below.size else None


_PROFILES: dict[float, _GrowthProfile] = {}


def _profile(eta: float, n: int) -> _GrowthProfile:
    prof = _PROFILES.setdefault(eta, _GrowthProfile(eta))
    if len(prof.lag) <= n + 1 and prof.zero is None:
        prof.extend(max(n, 2 * len(prof.lag)))
    return prof


def growth_rate_factor(alpha: float, eta: float) -> float:
    """Slow-down of the displacement rate relative to Lamb-Dicke at phonon index floor(alpha^2)."""
    n = int(math.floor(alpha * alpha))
    prof = _profile(eta, n)
    return float(prof.rate[n]) if n < len(prof.rate) else -1.0


def growth_duration(alpha: float, eta: float, rabi: float) -> float:
    """Time for the surrogate d alpha/dt = (eta Omega/2) g_{floor(alpha^2)} to reach alpha.

    The rate is piecewise constant between sqrt(n) and sqrt(n+1), so the
    integral is exact. Returns inf when alpha lies beyond the stall point.
    """
    if alpha <= 0:
        return 0.0
    n = int(math.floor(alpha * alpha))
    prof = _profile(eta, n)
    if n >= len(prof.rate):
        return math.inf
    if prof.stall is not None and prof.stall <= n:
        return math.inf
    r = prof.rate[n]
    t = prof.cum[n] + (alpha - math.sqrt(n)) / r
    return float(t) * 2 / (eta * rabi)


def ld_duration(alpha: float, eta: float, rabi: float) -> float:
    """Lamb-Dicke generation time 2 alpha / (eta Omega)."""
    return 2 * alpha / (eta * rabi)


def growth_saturation(eta: float) -> float:
    """Displacement at which the surrogate rate drops below the stall threshold."""
    n = 0
    while True:
        prof = _profile(eta, n)
        if prof.stall is not None:
            return math.sqrt(prof.stall)
        n = 2 * len(prof.lag)


# --- generators -------------------------------------------------------------

def generate_cat_ld(spec: CatGenSpec) -> CatGenResult:
    """Analytic Lamb-Dicke cat: alpha = eta Omega t / 2."""
    if spec.target_alpha is not None:
        alpha = float(spec.target_alpha)
        duration = ld_duration(alpha, spec.eta_control, spec.rabi) if alpha else 0.0
    else:
        duration = float(spec.target_duration or 0.0)
        alpha = spec.ld_speed * duration
    state = ideal_cat(alpha, spec.space) if spec.space is not None else None
    traj = [(duration * f, alpha * f) for f in np.linspace(0, 1, 11)]
    return CatGenResult(alpha, duration, 1.0, traj, "ld_analytic", state)


def generate_cat_growth_ode(spec: CatGenSpec) -> CatGenResult:
    """Integrate the all-orders growth-rate surrogate to a target or to its stall point."""
    eta, rabi = spec.eta_control, spec.rabi
    if spec.target_alpha is not None:
        alpha = float(spec.target_alpha)
        duration = growth_duration(alpha, eta, rabi)
        if math.isinf(duration):
            raise StalledGeneration(
                f"surrogate stalls at alpha={growth_saturation(eta):.3f} < target {alpha:.3f}")
        ceiling = alpha
    elif spec.target_duration is not None:
        duration = float(spec.target_duration)
        ceiling = growth_saturation(eta)
        alpha = _alpha_at_time(duration, eta, rabi, ceiling)
    else:
        alpha = ceiling = growth_saturation(eta)
        duration = growth_duration(math.nextafter(alpha, 0.0), eta, rabi)
    ts = np.linspace(0.0, duration, 41)
    traj = [(float(t), _alpha_at_time(t, eta, rabi, ceiling)) for t in ts]
    state = ideal_cat(alpha, spec.space) if spec.space is not None else None
    # the surrogate only times the growth; its state is the ideal cat by construction
    return CatGenResult(alpha, duration, 1.0, traj, "growth_ode", state)


def _alpha_at_time(t: float, eta: float, rabi: float, ceiling: float) -> float:
    """Inverse of growth_duration, clipped at ``ceiling``."""
    if t <= 0:
        return 0.0
    n_top = int(math.floor(ceiling * ceiling))
    prof = _profile(eta, n_top + 1)
    tau = t * eta * rabi / 2
    n = int(np.searchsorted(prof.cum[: n_top + 1], tau, side="right")) - 1
    if n >= n_top and tau >= prof.cum[n_top] + (ceiling - math.sqrt(n_top)) / prof.rate[n_top]:
        return ceiling
    return min(ceiling, math.sqrt(n) + (tau - prof.cum[n]) * prof.rate[n])


def generate_cat_full(spec: CatGenSpec, config: PropagatorConfig | None = None,
                      path: str = "rwa", max_periods: float = 400.0,
                      chunks_per_period: int = 16) -> CatGenResult:
    """Propagate |g>|0> under the all-orders bichromatic drive.

    ``path="rwa"`` uses the time-independent all-orders Hamiltonian obtained
    after dropping terms oscillating at the trap frequency; ``path="time_dependent"``
    keeps them (carrier and 2*w_t terms). The displacement is read off as
    sqrt(<n>). Without a target the run continues until growth stalls and the
    largest displacement reached is reported.
    """
    if spec.space is None:
        raise ValueError("full dynamics needs a Fock space")
    space = spec.space
    if spec.target_alpha is not None:
        check_guard(spec.target_alpha, space)
    if path == "rwa":
        ham = hamiltonian_bichromatic_rwa(spec.rabi, spec.eta_control, space, math.pi / 2, all_orders=True)
    elif path == "time_dependent":
        ham = hamiltonian_all_orders(bichromatic_tones(spec.rabi, spec.trap_omega), spec.eta_control,
                                     spec.trap_omega, space)
    else:
        raise ValueError(f"unknown path {path!r}")
    config = config or PropagatorConfig()

    period = spec.sideband_period
    dt = period / chunks_per_period
    stall_window = STALL_PERIODS * period
    eps = STALL_FRACTION * spec.ld_speed
    t_end = spec.target_duration if spec.target_duration is not None else max_periods * period

    state = ground_hybrid(space)
    t, alpha = 0.0, 0.0
    traj = [(0.0, 0.0)]
    best = (0.0, 0.0, state)
    last_growth_t, last_growth_alpha = 0.0, 0.0
    while t < t_end - 1e-15 * t_end:
        step = min(dt, t_end - t)
        new = propagate(ham, state, t, t + step, config)
        new_alpha = math.sqrt(new.mean_number())
        if spec.target_alpha is not None and new_alpha >= spec.target_alpha:
            frac = (spec.target_alpha - alpha) / (new_alpha - alpha)
            t_hit = t + frac * step
            state = propagate(ham, state, t, t_hit, config)
            t, alpha = t_hit, math.sqrt(state.mean_number())
            traj.append((t, alpha))
            return _full_result(alpha, t, traj, state, ham, space)
        t, state, alpha = t + step, new, new_alpha
        traj.append((t, alpha))
        if alpha > best[0]:
            best = (alpha, t, state)
        if alpha - last_growth_alpha > eps * (t - last_growth_t):
            last_growth_t, last_growth_alpha = t, alpha
        elif t - last_growth_t > stall_window:
            if spec.target_alpha is not None:
                raise StalledGeneration(
                    f"alpha stalled at {best[0]:.3f} before reaching {spec.target_alpha:.3f}")
            break
    if spec.target_duration is not None:
        return _full_result(alpha, t, traj, state, ham, space)
    if spec.target_alpha is not None:
        raise StalledGeneration(f"target alpha {spec.target_alpha} not reached within {t_end:.3g} s")
    alpha_b, t_b, state_b = best
    return _full_result(alpha_b, t_b, traj, state_b, ham, space)


def _full_result(alpha, t, traj, state, ham, space) -> CatGenResult:
    ideal = ideal_cat(alpha, space)
    return CatGenResult(alpha, t, state.fidelity(ideal), traj, "full_dynamics", state, ham)


# --- heating ----------------------------------------------------------------

def heating_phase_variance(rate: float, alpha: float, duration: float) -> float:
    """Phase variance 8 R alpha^2 (2 tau / 3) accumulated by a cat of size alpha."""
    if rate < 0 or alpha < 0 or duration < 0:
        raise ValueError("heating rate, alpha and duration must be non-negative")
    return 8.0 * rate * alpha * alpha * (2.0 * duration / 3.0)


def coherence_factor(phase_variance: float) -> float:
    """Ramsey contrast exp(-<phi^2>/2)."""
    if phase_variance < 0:
        raise ValueError("phase variance must be non-negative")
    return math.exp(-phase_variance / 2.0)
