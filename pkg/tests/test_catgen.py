import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qls.catgen import (
    CatGenSpec,
    coherence_factor,
    first_laguerre_zero,
    generate_cat_full,
    generate_cat_growth_ode,
    generate_cat_ld,
    growth_duration,
    growth_saturation,
    heating_phase_variance,
    ld_duration,
    max_alpha,
)
from qls.errors import StalledGeneration
from qls.fock import FockSpace, guard_dim, ideal_cat

RABI = 2 * math.pi * 300e3
ETA_C3HN = 0.09083


def test_rabi_cap_enforced():
    with pytest.raises(ValueError):
        CatGenSpec(2 * math.pi * 400e3, 0.05)
    with pytest.raises(ValueError):
        CatGenSpec(RABI, 0.05, target_alpha=1.0, target_duration=1e-6)


def test_ld_generation_plugin():
    res = generate_cat_ld(CatGenSpec(RABI, ETA_C3HN, target_duration=116.9e-6))
    assert res.achieved_alpha == pytest.approx(10.00, abs=0.02)
    assert res.achieved_alpha == pytest.approx(10.007254685645421, rel=1e-12)
    assert res.method == "ld_analytic"


def test_ld_generation_zero_time():
    sp = FockSpace(16)
    res = generate_cat_ld(CatGenSpec(RABI, ETA_C3HN, target_duration=0.0, space=sp))
    assert res.achieved_alpha == 0
    assert abs(res.state.amplitudes[0]) == pytest.approx(1.0)


def test_ld_duration_roundtrip():
    res = generate_cat_ld(CatGenSpec(RABI, ETA_C3HN, target_alpha=7.5))
    assert res.duration == pytest.approx(2 * 7.5 / (ETA_C3HN * RABI), rel=1e-14)


def test_first_laguerre_zero_reference():
    # sign scan of L_n^1(eta^2) checked against mpmath
    assert first_laguerre_zero(0.0908) == 445
    assert first_laguerre_zero(ETA_C3HN) == 444
    assert first_laguerre_zero(ETA_C3HN, n_limit=100) is None


def test_max_alpha_reference():
    # sqrt(444); the first Bessel-zero estimate j_{1,1}/(2 eta) gives 21.09
    assert max_alpha(ETA_C3HN) == pytest.approx(math.sqrt(444), rel=1e-15)
    assert max_alpha(ETA_C3HN) == pytest.approx(3.8317059702075125 / (2 * ETA_C3HN), abs=0.05)
    assert max_alpha(0.001, limit=10.0) == math.inf


def test_laguerre_zero_against_scipy():
    from scipy.special import eval_genlaguerre
    for eta in (0.05, 0.0908, 0.2):
        n = first_laguerre_zero(eta)
        assert eval_genlaguerre(n, 1, eta**2) <= 0 < eval_genlaguerre(n - 1, 1, eta**2)


def test_growth_ode_small_eta_matches_ld():
    eta = 1e-3
    res = generate_cat_growth_ode(CatGenSpec(RABI, eta, target_alpha=1.0))
    assert res.duration == pytest.approx(ld_duration(1.0, eta, RABI), rel=5e-3)


def test_growth_ode_reference_duration():
    # exact piecewise integral of the surrogate rate, frozen
    assert growth_duration(10.0, ETA_C3HN, RABI) == pytest.approx(1.3639065206794e-4, rel=1e-9)


def test_growth_ode_stalls_beyond_saturation():
    sat = growth_saturation(ETA_C3HN)
    assert sat <= max_alpha(ETA_C3HN)
    assert sat == pytest.approx(21.05, abs=0.05)
    with pytest.raises(StalledGeneration):
        generate_cat_growth_ode(CatGenSpec(RABI, ETA_C3HN, target_alpha=sat + 0.5))
    assert growth_duration(sat + 0.1, ETA_C3HN, RABI) == math.inf
    res = generate_cat_growth_ode(CatGenSpec(RABI, ETA_C3HN))
    assert res.achieved_alpha == pytest.approx(sat)


def test_growth_ode_duration_target_inverse():
    t = growth_duration(6.3, ETA_C3HN, RABI)
    res = generate_cat_growth_ode(CatGenSpec(RABI, ETA_C3HN, target_duration=t))
    assert res.achieved_alpha == pytest.approx(6.3, abs=1e-9)


def test_full_dynamics_deep_ld():
    res = generate_cat_full(CatGenSpec(RABI, 0.005, target_alpha=1.0, space=FockSpace(30)))
    assert res.duration == pytest.approx(ld_duration(1.0, 0.005, RABI), rel=0.01)
    assert res.fidelity_vs_ideal > 1 - 1e-6


def test_full_dynamics_saturates_below_cap():
    eta = 0.3
    sp = FockSpace(guard_dim(max_alpha(eta) + 1))
    res = generate_cat_full(CatGenSpec(1.0, eta, space=sp, rabi_cap=1.0))
    assert res.achieved_alpha <= max_alpha(eta) + 0.5
    assert res.achieved_alpha > 0.8 * max_alpha(eta)
    alphas = [a for _, a in res.trajectory]
    assert max(alphas) == pytest.approx(res.achieved_alpha)


def test_full_dynamics_matches_ideal_cat_early():
    sp = FockSpace(60)
    res = generate_cat_full(CatGenSpec(RABI, 0.02, target_alpha=2.0, space=sp))
    assert res.state.fidelity(ideal_cat(2.0, sp)) > 1 - 1e-4
    assert res.method == "full_dynamics"


def test_full_dynamics_needs_space():
    with pytest.raises(ValueError):
        generate_cat_full(CatGenSpec(RABI, 0.05, target_alpha=1.0))


def test_time_dependent_path_small_drive():
    # with the drive well below the trap frequency the carrier terms average out
    w = 1.0
    sp = FockSpace(40)
    spec = CatGenSpec(0.02, 0.1, target_duration=2.0 / (0.1 * 0.02), space=sp, trap_omega=w, rabi_cap=0.02)
    res = generate_cat_full(spec, path="time_dependent")
    assert res.achieved_alpha == pytest.approx(1.0, rel=0.02)


def test_heating_reference_values():
    assert heating_phase_variance(0.0, 10, 1e-3) == 0
    assert heating_phase_variance(0.1, 10, 118e-6) == pytest.approx(6.29e-3, abs=1e-5)
    assert heating_phase_variance(10, 20, 1e-3) == pytest.approx(21.33, abs=0.01)
    assert coherence_factor(0.0) == 1.0
    assert coherence_factor(6.29e-3) == pytest.approx(0.996859, abs=1e-6)
    assert coherence_factor(21.33) == pytest.approx(2.33e-5, abs=1e-7)


def test_heating_rejects_negative():
    with pytest.raises(ValueError):
        heating_phase_variance(-1, 1, 1)
    with pytest.raises(ValueError):
        coherence_factor(-0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 15.0), st.floats(0.1, 15.0))
def test_durations_increase_with_alpha(a, b):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-9:
        return
    assert ld_duration(lo, ETA_C3HN, RABI) < ld_duration(hi, ETA_C3HN, RABI)
    assert growth_duration(lo, ETA_C3HN, RABI) < growth_duration(hi, ETA_C3HN, RABI)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.02, 0.1), st.floats(0.02, 0.1))
def test_durations_decrease_with_eta(alpha, e1, e2):
    lo, hi = sorted((e1, e2))
    if hi - lo < 1e-9:
        return
    assert ld_duration(alpha, hi, RABI) < ld_duration(alpha, lo, RABI)
    assert growth_duration(alpha, hi, RABI) < growth_duration(alpha, lo, RABI)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.5, 20), st.floats(1e-6, 1e-3), st.floats(1.01, 3))
def test_coherence_decreasing(rate, alpha, tau, f):
    base = coherence_factor(heating_phase_variance(rate, alpha, tau))
    assert coherence_factor(heating_phase_variance(rate * f, alpha, tau)) < base
    assert coherence_factor(heating_phase_variance(rate, alpha * f, tau)) < base
    assert coherence_factor(heating_phase_variance(rate, alpha, tau * f)) < base
