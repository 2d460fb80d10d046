import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpcollapse.dust import (
    CoreBoundary,
    DustSolution,
    F_inv,
    F_of,
    a_of_t,
    adot_of_t,
    collapse_time,
    eulerian_dust_state,
    integrate_free_fall,
    make_core_boundary,
    oracle_collapse_time,
    r_eps_of_t,
    rdot_eps_of_t,
)
from vpcollapse.errors import DomainError, TimeRangeError
from vpcollapse.initial_data import make_initial_data

T1 = math.pi / (2.0 * math.sqrt(2.0))


def core_for(eps, a0=1.0):
    d = make_initial_data(eps, a0)
    return make_core_boundary(eps, d.M_eps, a0)


def test_collapse_time_values():
    assert collapse_time(1.0) == pytest.approx(1.1107207345, abs=1e-10)
    assert collapse_time(4.0) == pytest.approx(8.8857658763, abs=1e-9)
    with pytest.raises(DomainError):
        collapse_time(0.0)


def test_collapse_time_matches_ode_oracle():
    assert oracle_collapse_time(1.0, 1.0, 0.0) == pytest.approx(T1, abs=1e-4)


def test_F_special_values():
    assert F_of(1.0) == 0.0
    assert F_of(0.0) == math.pi / 2
    assert F_of(0.5) == pytest.approx(0.5 + math.pi / 4, abs=1e-15)
    assert F_inv(0.0) == 1.0
    assert F_inv(math.pi / 2) == 0.0
    # F(0.8367) ~ pi/4: independent scalar bisection on F itself
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if F_of(mid) < math.pi / 4 else (mid, hi)
    assert F_inv(math.pi / 4) == pytest.approx(lo, abs=1e-12)
    assert round(F_inv(math.pi / 4), 3) == 0.837


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
def test_F_domain(bad):
    with pytest.raises(DomainError):
        F_of(bad)


@pytest.mark.parametrize("bad", [-1e-3, 2.0, float("inf")])
def test_F_inv_domain(bad):
    with pytest.raises(DomainError):
        F_inv(bad)


def test_F_strictly_decreasing_and_inverse_on_grid():
    r = np.linspace(0.0, 1.0, 10_001)
    F = F_of(r)
    assert np.all(np.diff(F) < 0)
    y = np.linspace(1e-4, math.pi / 2, 10_000)
    assert np.max(np.abs(F_of(F_inv(y)) - y)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-4, max_value=math.pi / 2))
def test_F_of_F_inv_identity(y):
    assert abs(F_of(F_inv(y)) - y) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.999))
def test_F_inv_of_F_identity(r):
    assert abs(F_inv(F_of(r)) - r) < 1e-10


def test_a_values_and_errors():
    dust = DustSolution(1.0)
    assert a_of_t(dust, 0.0) == 1.0
    assert adot_of_t(dust, 0.0) == 0.0
    t_half = (0.5 + math.pi / 4) / math.sqrt(2.0)
    assert t_half == pytest.approx(0.908914, abs=1e-6)
    assert a_of_t(dust, t_half) == pytest.approx(0.5, abs=1e-12)
    assert adot_of_t(dust, t_half) == pytest.approx(-math.sqrt(2.0), abs=1e-10)
    with pytest.raises(TimeRangeError):
        a_of_t(dust, -0.1)
    with pytest.raises(TimeRangeError):
        a_of_t(dust, dust.T)
    with pytest.raises(TimeRangeError):
        a_of_t(dust, 0.9995 * dust.T)
    assert a_of_t(dust, 0.9995 * dust.T, safety=0.9999) > 0


@pytest.mark.parametrize("a0", [1.0, 2.5])
def test_a_matches_rk4_oracle(a0):
    dust = DustSolution(a0)
    dt = 1e-5
    t, r, v = integrate_free_fall(1.0, a0, 0.0, dt=dt, t_max=0.9 * dust.T)
    idx = np.arange(0, len(t), 500)
    assert np.max(np.abs(dust.a(t[idx]) - r[idx])) < 1e-8
    assert np.max(np.abs(dust.adot(t[idx]) - v[idx])) < 1e-7


def test_energy_identity():
    for a0 in (1.0, 3.0):
        dust = DustSolution(a0)
        t = np.linspace(0, 0.99 * dust.T, 1000)
        a, adot = dust.state(t)
        np.testing.assert_allclose(0.5 * adot ** 2 - 1.0 / a, -1.0 / a0, atol=1e-10 / a.min())


def test_adot_finite_difference():
    dust = DustSolution(1.0)
    h = 1e-5
    fd = (dust.a(0.5 + h) - dust.a(0.5 - h)) / (2 * h)
    assert fd == pytest.approx(dust.adot(0.5), abs=1e-6)


def test_core_boundary_examples():
    core = make_core_boundary(0.1, 1.05)
    assert core.C_eps == pytest.approx(1 - 0.01 / 2.1, abs=1e-15)
    assert core.C_eps == pytest.approx(0.9952381, abs=1e-7)
    assert core.T_eps == pytest.approx(oracle_collapse_time(1.05, 1.0, -0.1), abs=1e-4)
    assert r_eps_of_t(core, 0.0) == 1.0
    assert rdot_eps_of_t(core, 0.0) == -0.1


def test_core_boundary_small_eps_limit():
    core = make_core_boundary(1e-6, 1.0 + 1e-9)
    assert core.T_eps == pytest.approx(T1, abs=1e-4)


def test_core_boundary_errors():
    with pytest.raises(DomainError):
        make_core_boundary(0.1, 1.0)
    with pytest.raises(DomainError):
        make_core_boundary(0.1, 0.9)
    with pytest.raises(DomainError):
        make_core_boundary(0.0, 1.2)
    with pytest.raises(DomainError):
        make_core_boundary(1.5, 1.2)
    # with a larger initial scale the unit ball holds less mass
    assert make_core_boundary(0.1, 0.05, a0=4.0).T_eps > 0
    core = make_core_boundary(0.1, 1.05)
    with pytest.raises(TimeRangeError):
        core.r(core.T_eps)


@pytest.mark.parametrize("eps", [0.4, 0.1, 0.025])
def test_core_boundary_matches_rk4(eps):
    core = core_for(eps)
    t, r, v = integrate_free_fall(core.M_eps, 1.0, -eps, dt=1e-5, t_max=0.99 * core.T_eps)
    idx = np.arange(0, len(t), 250)
    assert np.max(np.abs(core.r(t[idx]) - r[idx])) < 1e-8


def test_core_boundary_rdot():
    core = core_for(0.2)
    t = np.linspace(0, 0.999 * core.T_eps, 10_001)[1:]
    assert np.all(core.rdot(t) < -0.2)
    h = 1e-5
    for s in (0.1, 0.4, 0.7):
        fd = (core.r(s + h) - core.r(s - h)) / (2 * h)
        assert fd == pytest.approx(core.rdot(s), abs=1e-6)


@pytest.mark.parametrize("eps", [0.4, 0.2, 0.1, 0.05, 0.025, 1.0])
def test_core_inside_dust_and_gap_increasing(eps):
    dust = DustSolution(1.0)
    core = core_for(eps)
    t = np.linspace(0, 0.999 * core.T_eps, 10_000)
    gap = dust.a(t) - core.r(t)
    assert np.all(gap >= 0)
    assert np.all(np.diff(gap) >= -1e-15)


def test_collapse_time_ordering():
    gaps = [T1 - core_for(e).T_eps for e in (0.4, 0.2, 0.1, 0.05, 0.025)]
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_large_a0_core_collapses_before_dust():
    core4 = make_core_boundary(0.1, 0.05, a0=4.0)
    dust4 = DustSolution(4.0)
    assert core4.T_eps < dust4.T
    assert isinstance(core4, CoreBoundary)


def test_eulerian_dust_state():
    dust = DustSolution(1.0)
    rho, vel = eulerian_dust_state(dust, 0.0, np.zeros(3))
    assert rho == pytest.approx(3 / (4 * math.pi))
    assert np.all(vel == 0)
    rho, vel = eulerian_dust_state(dust, 0.0, np.array([2.0, 0, 0]))
    assert rho == 0.0 and np.all(vel == 0)
    t = 0.5
    a = dust.a(t)
    s = np.linspace(0, 1.5 * a, 200_001)
    x = np.column_stack([s, np.zeros_like(s), np.zeros_like(s)])
    rho, _ = eulerian_dust_state(dust, t, x)
    from scipy.integrate import quad

    mass = quad(lambda r: 4 * math.pi * r * r * eulerian_dust_state(dust, t, [r, 0, 0])[0],
                0, a, epsabs=1e-12, epsrel=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)
