import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from vpcollapse.characteristics import ExactHomogeneousField, PointMassField, integrate_tracers
from vpcollapse.dust import DustSolution
from vpcollapse.errors import DomainError
from vpcollapse.homogeneous import h_eval
from vpcollapse.initial_data import f0_eval, make_initial_data, sample_ensemble
from vpcollapse.kernels import available_backends
from vpcollapse.simulation import (
    FieldHistory,
    ParticleEnsemble,
    RadialField,
    Simulator,
    accel,
    backward_characteristic,
    compute_field,
    eval_mass,
    f_eval_pointwise,
    spherical_coords,
    step_leapfrog,
)


@pytest.fixture(scope="module")
def sampled():
    return sample_ensemble(make_initial_data(0.2), 100_000, seed=0)


def point_history(mass=1.0, times=(0.0, 1.0, 2.0, 3.0)):
    hist = FieldHistory(1, 1.0)
    for t in times:
        hist.append(t, RadialField(radii=np.array([0.0]), cum_mass=np.array([mass])))
    return hist


def kepler_oracle(x, v, t0, t1, M=1.0):
    def rhs(_, y):
        r = np.linalg.norm(y[:3])
        return np.concatenate([y[3:], -M * y[:3] / r ** 3])

    sol = solve_ivp(rhs, (t0, t1), np.concatenate([x, v]), method="DOP853",
                    rtol=1e-13, atol=1e-13)
    return sol.y[:3, -1], sol.y[3:, -1]


def test_single_particle_field():
    ens = ParticleEnsemble(np.array([[0.5, 0, 0]]), np.zeros((1, 3)), np.array([1.0]))
    f = compute_field(ens)
    assert eval_mass(f, 0.49) == 0.0
    assert eval_mass(f, 0.5) == 1.0
    assert eval_mass(f, 7.0) == 1.0


def test_field_matches_r_cubed(sampled):
    f = compute_field(ParticleEnsemble.from_sampled(sampled))
    N, M = len(sampled.weights), sampled.weights.sum()
    assert f.total_mass == pytest.approx(M, rel=1e-15)
    assert eval_mass(f, 1e9) == f.cum_mass[-1]
    for r in (0.25, 0.5, 0.75, 1.0):
        p = r ** 3 / M
        se = M * math.sqrt(p * (1 - p) / N)
        assert abs(eval_mass(f, r) - r ** 3) < 3 * se


def test_ties_are_stable():
    pos = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 0.5]])
    ens = ParticleEnsemble(pos, np.zeros((3, 3)), np.array([1.0, 2.0, 4.0]))
    f = compute_field(ens)
    np.testing.assert_array_equal(f.order, [2, 0, 1])
    np.testing.assert_array_equal(f.cum_mass, [4.0, 5.0, 7.0])
    np.testing.assert_array_equal(f.interior_mass(ens.weights), [4.0, 5.0, 0.0])


def test_accel_examples(sampled):
    f = compute_field(ParticleEnsemble.from_sampled(sampled))
    assert np.all(accel(f, np.zeros(3)) == 0)
    rng = np.random.default_rng(5)
    N, M = len(sampled.weights), sampled.weights.sum()
    for r in (0.3, 0.6, 0.9):
        x = rng.normal(size=3)
        x *= r / np.linalg.norm(x)
        p = r ** 3 / M
        se = M * math.sqrt(p * (1 - p) / N) / r ** 2
        assert abs(np.linalg.norm(accel(f, x)) - r) < 3 * se


def test_two_particle_shell_theorem():
    pos = np.array([[0.3, 0.0, 0.0], [0.0, 2.0, 0.0]])
    ens = ParticleEnsemble(pos, np.zeros((2, 3)), np.array([0.7, 0.4]))
    sim = Simulator(ens)
    np.testing.assert_array_equal(sim.m_enc, [0.0, 0.7])
    dt = 1e-3
    sim.step(dt)
    assert np.all(ens.velocities[0] == 0.0)
    # outer particle: two half kicks with -w_inner x / |x|^3
    assert ens.velocities[1, 1] == pytest.approx(-0.7 * dt / 4.0, rel=1e-5)


def test_straight_line_drift():
    ens = ParticleEnsemble(np.array([[0.1, 0.2, 0.3]]), np.array([[1.0, -2.0, 0.5]]),
                           np.array([1e-300]))
    sim = Simulator(ens)
    for _ in range(100):
        sim.step(0.01)
    np.testing.assert_allclose(ens.positions[0], [1.1, -1.8, 0.8], atol=1e-13)
    np.testing.assert_array_equal(ens.velocities[0], [1.0, -2.0, 0.5])


def test_step_leapfrog_contract():
    ens = ParticleEnsemble(np.array([[1.0, 0, 0]]), np.zeros((1, 3)), np.ones(1))
    out = step_leapfrog(ens, 0.1)
    assert out.t == pytest.approx(0.1) and ens.t == 0.0
    with pytest.raises(DomainError):
        step_leapfrog(ens, 0.0)


def _kepler_run(n_steps, dt=1e-3):
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    vel = np.array([[0.0, 0.0, 0.0], [0.0, 0.9, 0.0]])
    ens = ParticleEnsemble(pos, vel, np.array([1.0, 1e-12]))
    sim = Simulator(ens)
    energy = np.empty(n_steps + 1)

    def e():
        return 0.5 * ens.velocities[1] @ ens.velocities[1] - 1.0 / np.linalg.norm(ens.positions[1])

    energy[0] = e()
    for k in range(n_steps):
        sim.step(dt)
        energy[k + 1] = e()
    return energy


def test_kepler_energy_drift_bounded():
    energy = _kepler_run(10_000)
    rel = np.abs(energy / energy[0] - 1.0)
    assert rel.max() < 1e-6
    # no secular growth: the second half is no worse than the first
    half = len(rel) // 2
    assert rel[half:].max() < 1.5 * rel[:half].max()


def test_mass_and_count_conserved(sampled):
    ens = ParticleEnsemble.from_sampled(sampled)
    m0 = ens.weights.sum()
    sim = Simulator(ens)
    for _ in range(20):
        sim.step(1e-3)
    assert len(ens) == 100_000
    assert ens.weights.sum() == m0


def test_angular_momentum_drift(sampled):
    ens = ParticleEnsemble.from_sampled(sampled)
    L0 = spherical_coords(ens.positions, ens.velocities).L
    sim = Simulator(ens)
    for _ in range(1000):
        sim.step(1e-3)
    L1 = spherical_coords(ens.positions, ens.velocities).L
    keep = L0 > 1e-6
    assert np.max(np.abs(L1[keep] / L0[keep] - 1.0)) < 1e-8


def _multipoles(pos, weights):
    u = pos / np.linalg.norm(pos, axis=1)[:, None]
    w = weights / weights.sum()
    l1 = w @ u
    p2 = 0.5 * (3 * u ** 2 - 1)
    l2 = w @ p2
    return l1, l2


def test_multipoles_vanish(sampled):
    ens = ParticleEnsemble.from_sampled(sampled)
    sim = Simulator(ens)
    N = len(ens)
    se1, se2 = math.sqrt(1 / 3 / N), math.sqrt(0.2 / N)
    for _ in range(3):
        l1, l2 = _multipoles(ens.positions, ens.weights)
        assert np.all(np.abs(l1) < 3 * se1)
        assert np.all(np.abs(l2) < 3 * se2)
        for _ in range(100):
            sim.step(1e-3)


@pytest.mark.parametrize("name", available_backends())
def test_backends_bit_identical(sampled, name):
    ref = ParticleEnsemble.from_sampled(sampled)
    other = ParticleEnsemble.from_sampled(sampled)
    a, b = Simulator(ref, backend="python"), Simulator(other, backend=name)
    for _ in range(5):
        a.step(1e-3)
        b.step(1e-3)
    np.testing.assert_array_equal(ref.positions, other.positions)
    np.testing.assert_array_equal(ref.velocities, other.velocities)


def test_threads_bit_identical(sampled):
    a = ParticleEnsemble.from_sampled(sampled)
    b = ParticleEnsemble.from_sampled(sampled)
    sa, sb = Simulator(a, threads=1), Simulator(b, threads=4)
    for _ in range(5):
        sa.step(1e-3)
        sb.step(1e-3)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(sa.field.cum_mass, sb.field.cum_mass)


def test_field_history_interpolation_and_errors(tmp_path):
    hist = FieldHistory(2, 1.0)
    hist.append(0.0, RadialField(np.array([0.5, 1.0]), np.array([1.0, 2.0])))
    hist.append(1.0, RadialField(np.array([0.25, 2.0]), np.array([3.0, 4.0])))
    assert hist.eval_mass(0.5, 0.6) == pytest.approx(0.5 * 1.0 + 0.5 * 3.0)
    assert hist.eval_mass(0.5, 0.1) == 0.0
    with pytest.raises(DomainError):
        hist.append(1.0, RadialField(np.array([0.5, 1.0]), np.array([1.0, 2.0])))
    with pytest.raises(DomainError):
        hist.eval_mass(1.5, 0.3)
    hist.save(tmp_path)
    back = FieldHistory.load(tmp_path)
    np.testing.assert_array_equal(back.times, hist.times)
    for k in range(2):
        np.testing.assert_array_equal(back.snapshot(k).radii, hist.snapshot(k).radii)
        np.testing.assert_array_equal(back.snapshot(k).cum_mass, hist.snapshot(k).cum_mass)


def test_backtrace_identity_at_zero():
    x, v = np.array([[0.3, 0.1, 0.0]]), np.array([[0.0, 0.05, 0.1]])
    x0, v0 = backward_characteristic(point_history(), 0.0, x, v)
    np.testing.assert_array_equal(x0, x)
    np.testing.assert_array_equal(v0, v)
    d = make_initial_data(0.2)
    assert f_eval_pointwise(point_history(), d, 0.0, x, v) == f0_eval(d, x, v)


def test_backtrace_beyond_history():
    with pytest.raises(DomainError):
        backward_characteristic(point_history(), 3.5, np.ones(3), np.zeros(3))


@pytest.mark.parametrize("name", available_backends())
def test_backtrace_matches_kepler(name):
    x = np.array([1.2, 0.0, 0.3])
    v = np.array([0.1, 0.8, 0.0])
    x0, v0 = backward_characteristic(point_history(), 2.5, x, v, backend=name)
    ox, ov = kepler_oracle(x, v, 2.5, 0.0)
    assert np.max(np.abs(x0 - ox)) < 1e-5
    assert np.max(np.abs(v0 - ov)) < 1e-5


def test_backtrace_round_trip(sampled):
    ens = ParticleEnsemble.from_sampled(sampled)
    sim = Simulator(ens)
    hist = FieldHistory(len(ens), 1e-2)
    hist.append(0.0, sim.field)
    for k in range(1, 201):
        sim.step(1e-3, t_new=k * 1e-3)
        if k % 10 == 0:
            hist.append(k * 1e-3, sim.field)
    rng = np.random.default_rng(9)
    x = rng.uniform(-0.8, 0.8, (50, 3))
    v = rng.normal(size=(50, 3)) * 0.1
    t = hist.last_time
    # forward with the same RK4 rule in the frozen history, then back
    x1, v1 = integrate_tracers(_HistoryAdapter(hist), x, v, 0.0, t, 200)
    x0, v0 = backward_characteristic(hist, t, x1, v1)
    assert np.max(np.abs(x0 - x)) < 1e-5
    assert np.max(np.abs(v0 - v)) < 1e-5


class _HistoryAdapter:
    def __init__(self, hist):
        self.hist = hist

    def accel(self, s, x):
        return self.hist.accel(min(max(s, 0.0), self.hist.last_time), x)


def test_exact_field_backtrace_preserves_h():
    dust = DustSolution(1.0)
    d = make_initial_data(0.2)
    t = 0.5
    a, adot = dust.state(t)
    rng = np.random.default_rng(4)
    x = rng.uniform(-0.3, 0.3, (20, 3))
    v = adot / a * x + rng.normal(size=(20, 3)) * 0.05
    x0, v0 = backward_characteristic(ExactHomogeneousField(dust), t, x, v, dt_char=1e-3)
    np.testing.assert_allclose(f0_eval(d, x0, v0), h_eval(d.homog, t, x, v),
                               atol=1e-6 * d.homog.sup_value)


def test_sqrt_n_scaling():
    d = make_initial_data(0.2)
    r, t, dt = 0.5, 0.1, 1e-3

    def spread(n, seeds):
        vals = []
        for s in seeds:
            ens = ParticleEnsemble.from_sampled(sample_ensemble(d, n, seed=s))
            sim = Simulator(ens)
            for _ in range(round(t / dt)):
                sim.step(dt)
            vals.append(sim.field.eval_mass(r))
        return np.std(vals, ddof=1)

    small = spread(2000, range(100, 250))
    large = spread(8000, range(300, 450))
    # four times the particles halves the standard error
    assert small / large == pytest.approx(2.0, rel=0.2)


def test_point_mass_field_helper():
    f = PointMassField(2.0)
    np.testing.assert_allclose(f.accel(0.0, np.array([[2.0, 0, 0]])), [[-0.5, 0, 0]])
