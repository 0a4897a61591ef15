import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from cusp_torsion import model_formulas as mf
from cusp_torsion import spectral_sim as ss


def test_grid_validation():
    with pytest.raises(ValueError):
        ss.Grid1D(10.0, 50)
    with pytest.raises(ValueError):
        ss.Grid1D(0.0, 200)
    g = ss.grid_for(4.0)
    assert g.L == 36.0 and g.n == 4000


def test_discretize_special_weights():
    g = ss.Grid1D(20.0, 400)
    free = ss.discretize(0.0, g)
    assert np.allclose(free.diag, 2.0 / g.h ** 2)
    shifted = ss.discretize(-1.0, g)
    # a^2 + a = 0: the potential is identically one
    assert np.allclose(shifted.diag - free.diag, 1.0)
    assert np.allclose(shifted.eigenvalues(), free.eigenvalues() + 1.0)


def test_bound_state_at_zero():
    small = ss.discretize(1.0, ss.Grid1D(20.0, 1000)).eigenvalues()[0]
    fine = ss.discretize(1.0, ss.Grid1D(30.0, 4000)).eigenvalues()[0]
    assert abs(fine) < 1e-4 and abs(fine) < abs(small)
    assert ss.kernel_count(1.0) == 1 and ss.kernel_count(-1.0) == 0


def test_free_operator_second_order():
    L = 5.0
    exact = (math.pi / (2 * L)) ** 2
    errs = []
    for n in (199, 399, 799):
        errs.append(abs(ss.discretize(0.0, ss.Grid1D(L, n)).eigenvalues()[0] - exact))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.8 <= p <= 2.2 for p in orders)


def test_relative_heat_trace_values():
    assert ss.relative_heat_trace(0.0, 1.0) == 0.0
    assert abs(ss.relative_heat_trace(1.0, 1.0) - math.erf(1.0)) <= 1e-3
    assert abs(ss.relative_heat_trace(1.0, 9.0) - math.erf(3.0)) <= 1e-3


def test_relative_heat_trace_guard_rails():
    with pytest.raises(ss.GuardRailError):
        ss.relative_heat_trace(1.0, 30.0)
    with pytest.raises(ss.GuardRailError):
        ss.relative_heat_trace(1.0, 0.01)
    with pytest.raises(ss.GuardRailError):
        ss.relative_heat_trace(1.0, 4.0, ss.Grid1D(20.0, 1000))


@settings(max_examples=10)
@given(st.floats(0.1, 2.5), st.floats(0.05, 5.0))
def test_relative_heat_trace_odd(a, t):
    g = ss.Grid1D(8.0 * math.sqrt(t) + 20.0, 800)
    assert abs(ss.relative_heat_trace(a, t, g) + ss.relative_heat_trace(-a, t, g)) <= 1e-6


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_shift_by_one(t):
    g = ss.grid_for(t, 1000)
    lm = ss.discretize(-1.0, g).eigenvalues()
    l0 = ss.discretize(0.0, g).eigenvalues()
    assert abs(np.exp(-t * lm).sum() - math.exp(-t) * np.exp(-t * l0).sum()) <= 1e-8


def test_trace_series():
    ts = [0.1, 0.5, 1.0]
    num = ss.relative_trace_series(1.0, ts)
    ref = ss.closed_trace_series(1.0, ts)
    assert np.abs(num.values - ref.values).max() <= 1e-3
    assert ref.provenance == "closed-form"
    with pytest.raises(ss.SimulationError):
        ss.HeatTraceSeries([1.0, 0.5], [0.0, 0.0])
    with pytest.raises(ss.SimulationError):
        ss.HeatTraceSeries([0.5, 1.0], [0.0, np.nan])


@pytest.mark.parametrize("a,target,tol", [(1.0, -2 * math.log(2), 0.02), (0.5, 0.0, 0.02),
                                          (1.5, -2 * math.log(3), 0.03), (-1.0, 2 * math.log(2), 0.02)])
def test_relative_logdet(a, target, tol):
    assert abs(ss.relative_logdet(a) - target) <= tol
    assert abs(ss.relative_logdet_closed(a) - target) <= tol


def test_relative_logdet_needs_nonzero_weight():
    with pytest.raises(ValueError):
        ss.relative_logdet(0.0)


def test_mellin_on_exact_exponential():
    # g(t) = exp(-t): zeta(s) = 1 for a single eigenvalue one, so log det = 0;
    # the five-term small-t fit limits the accuracy to about 1e-4
    val = ss.mellin_logdet(lambda t: math.exp(-t), 1.0, float(special.exp1(1.0)))
    assert abs(val) < 5e-4


def test_renormalized_volume():
    fit = ss.renorm_volume_fit()
    assert abs(fit.value - 2 * math.log(2)) <= 1e-6
    assert abs(fit.slope + 2.0) < 1e-6
    assert fit.halving_change <= 1e-7
    assert abs(ss.renorm_volume_check() - fit.value) == 0.0


def test_sphere_spectrum():
    spec = ss.neck_spectrum(ss.builtin_surface("sphere"), 1.0, n_eig=16)
    w = spec.eigenvalues
    assert abs(w[0]) < 1e-8
    assert np.allclose(w[1:4], 2.0, atol=1e-6)
    assert np.allclose(w[4:9], 6.0, atol=1e-6)
    assert np.allclose(w[9:16], 12.0, atol=1e-5)


def test_sphere_log_determinant():
    # log det' of the round unit sphere is 1/2 - 4 zeta'(-1)
    import mpmath
    exact = 0.5 - 4.0 * float(mpmath.zeta(-1, derivative=1))
    assert abs(ss.surface_logdet(ss.builtin_surface("sphere"), 1.0).logdet - exact) < 1e-3


def test_small_eigenvalue_counts():
    sym = ss.builtin_surface("symmetric")
    big = ss.neck_spectrum(sym, 1.0, n_eig=8)
    assert ss.count_small(big, ss.gap_scan(big)) == (1, 0)
    small = ss.neck_spectrum(sym, 1e-3, n_eig=8)
    assert ss.count_small(small, ss.gap_scan(small)) == (1, 1)
    handle = ss.neck_spectrum(ss.builtin_surface("handle"), 1e-3, n_eig=8)
    assert ss.count_small(handle, ss.gap_scan(handle)) == (1, 0)


def test_threshold_fixed_across_sweep():
    sym = ss.builtin_surface("symmetric")
    delta = ss.gap_scan(ss.neck_spectrum(sym, 4e-3, n_eig=8))
    for eps in (2e-3, 1e-3):
        assert ss.count_small(ss.neck_spectrum(sym, eps, n_eig=8), delta) == (1, 1)


def test_mode_cutoff_check():
    sym = ss.builtin_surface("symmetric")
    auto = ss.neck_spectrum(sym, 1e-2, n_eig=10)
    fixed = ss.neck_spectrum(sym, 1e-2, k_max=auto.k_max + 1, n_eig=10)
    assert np.allclose(auto.eigenvalues, fixed.eigenvalues, atol=1e-10)
    with pytest.raises(ss.SimulationError):
        ss.neck_spectrum(sym, 1e-2, k_max=0, n_eig=10)
    with pytest.raises(ss.GuardRailError):
        ss.neck_spectrum(sym, 1e-6)


def test_caps_bracketing():
    small = ss.neck_spectrum(ss.NeckSurface("dumbbell", 2.0, 2.0), 1e-2, n_eig=8).eigenvalues
    large = ss.neck_spectrum(ss.NeckSurface("dumbbell", 3.0, 3.0), 1e-2, n_eig=8).eigenvalues
    assert np.all(large[1:] <= small[1:])


@pytest.mark.parametrize("name", ["symmetric", "asymmetric"])
def test_small_eigenvalue_constant(name):
    fit = ss.small_eig_fit(ss.builtin_surface(name), [4e-3, 2e-3, 1e-3])
    assert fit.rel_error <= 0.05
    V1, V2 = fit.volumes
    assert abs(fit.target - (V1 + V2) / (math.pi * V1 * V2)) < 1e-15
    if name == "symmetric":
        assert abs(V1 - V2) < 1e-12


def test_small_eig_fit_needs_separating_neck():
    with pytest.raises(ValueError):
        ss.small_eig_fit(ss.builtin_surface("handle"), [4e-3, 2e-3, 1e-3])


def test_surface_geometry():
    s = ss.builtin_surface("symmetric")
    A1, A2 = s.limit_areas()
    assert abs(s.area(1e-6) - (A1 + A2)) < 1e-3
    assert s.euler_characteristic == 2
    assert ss.builtin_surface("handle").euler_characteristic == 0
    with pytest.raises(ValueError):
        ss.builtin_surface("klein")


def test_thread_count_and_determinism(monkeypatch):
    monkeypatch.setenv("CUSP_TORSION_THREADS", "3")
    assert ss.n_threads() == 3
    par = ss.small_eig_fit(ss.builtin_surface("symmetric"), [4e-3, 2e-3, 1e-3]).ratios
    monkeypatch.setenv("CUSP_TORSION_THREADS", "1")
    seq = ss.small_eig_fit(ss.builtin_surface("symmetric"), [4e-3, 2e-3, 1e-3]).ratios
    assert par == seq
    monkeypatch.setenv("CUSP_TORSION_THREADS", "junk")
    assert ss.n_threads() == 1


def test_logdet_fit_input_checks():
    s = ss.builtin_surface("symmetric")
    with pytest.raises(ValueError):
        ss.logdet_surface_fit(s, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        ss.logdet_surface_fit(s, [0.1, 0.12, 0.14, 0.16, 0.18])


def test_collar_coefficient():
    assert abs(ss.collar_c1() + math.pi / 6) < 1e-15
    assert ss.collar_c1() < mf.wolpert_c1() < 0
