"""Spherically symmetric particle solver for the Vlasov-Poisson system.

Particles feel the field of the mass strictly inside their own radius
(shell theorem), computed from a sort of the radii and a prefix sum of the
weights.  Time stepping is kick-drift-kick leapfrog.  Field snapshots are
kept in a :class:`FieldHistory` so that ``f`` can later be evaluated
pointwise by tracing characteristics back to ``t = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels_py
from .errors import DomainError
from .kernels import get_backend
from .parallel import for_each_block, prefix_sum

__all__ = [
    "ParticleEnsemble",
    "RadialField",
    "FieldHistory",
    "Simulator",
    "SphericalCoords",
    "spherical_coords",
    "compute_field",
    "eval_mass",
    "accel",
    "step_leapfrog",
    "backward_characteristic",
    "f_eval_pointwise",
]


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float).reshape(-1, 3)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float).reshape(-1, 3)
        self.weights = np.ascontiguousarray(self.weights, dtype=float).reshape(-1)
        n = len(self.weights)
        if self.positions.shape[0] != n or self.velocities.shape[0] != n:
            raise ValueError("positions, velocities and weights must have equal length")

    @classmethod
    def from_sampled(cls, sampled, t=0.0):
        return cls(sampled.positions.copy(), sampled.velocities.copy(),
                   sampled.weights.copy(), t)

    def __len__(self):
        return len(self.weights)

    def copy(self):
        return ParticleEnsemble(self.positions.copy(), self.velocities.copy(),
                                self.weights.copy(), self.t)

    @property
    def total_mass(self):
        return float(prefix_sum(self.weights)[-1]) if len(self) else 0.0


@dataclass(frozen=True)
class SphericalCoords:
    r: np.ndarray
    w: np.ndarray
    L: np.ndarray


def spherical_coords(x, v):
    """Radius, radial velocity and squared angular momentum of 3-vectors."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(r > 0, np.einsum("...i,...i->...", x, v) / r, 0.0)
    c = np.cross(x, v)
    return SphericalCoords(r=r, w=w, L=np.einsum("...i,...i->...", c, c))


@dataclass(frozen=True)
class RadialField:
    """Enclosed mass as a right-continuous step function of the radius.

    ``cum_mass[k]`` is the mass of the particles up to and including rank
    ``k`` in the (stable) radius order ``order``.
    """

    radii: np.ndarray
    cum_mass: np.ndarray
    order: np.ndarray | None = None

    @property
    def total_mass(self):
        return float(self.cum_mass[-1]) if len(self.cum_mass) else 0.0

    def eval_mass(self, r):
        r_arr = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.radii, r_arr, side="right") - 1
        out = np.where(idx >= 0, self.cum_mass[np.maximum(idx, 0)] if len(self.radii) else 0.0,
                       0.0)
        return float(out) if np.ndim(r) == 0 else out

    def accel(self, x, softening=0.0):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 3)
        m = self.eval_mass(np.linalg.norm(flat, axis=1))
        r2 = np.einsum("ij,ij->i", flat, flat) + softening * softening
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(r2 > 0.0, m / (r2 * np.sqrt(r2)), 0.0)
        return (-c[:, None] * flat).reshape(x.shape)

    def interior_mass(self, weights):
        """Per-particle mass strictly inside, i.e. excluding the particle itself.

        Particles at equal radius count as inside in order of their index.
        """
        n = len(self.radii)
        excl_sorted = np.empty(n)
        if n:
            excl_sorted[0] = 0.0
            excl_sorted[1:] = self.cum_mass[:-1]
        out = np.empty(n)
        out[self.order] = excl_sorted
        return out


def compute_field(ensemble, threads=1, backend=None):
    """Sort radii (stable in particle index) and prefix-sum the weights."""
    kern = get_backend(backend) if isinstance(backend, (str, type(None))) else backend
    n = len(ensemble)
    r = np.empty(n)
    pos = ensemble.positions

    def do(s):
        kern.radii(pos[s], r[s])

    for_each_block(do, n, threads)
    order = np.argsort(r, kind="stable")
    cum = prefix_sum(ensemble.weights[order], threads)
    return RadialField(radii=r[order], cum_mass=cum, order=order)


def eval_mass(field, r):
    return field.eval_mass(r)


def accel(field, x, softening=0.0):
    """Acceleration ``-m(|x|) x / |x|^3`` of a test particle at ``x``."""
    return field.accel(x, softening)


class Simulator:
    """In-place kick-drift-kick leapfrog on a :class:`ParticleEnsemble`.

    The interior masses computed at the end of a step are reused for the
    opening half-kick of the next one.
    """

    def __init__(self, ensemble, softening=0.0, threads=1, backend=None):
        self.ensemble = ensemble
        self.softening = float(softening)
        self.threads = int(threads)
        self.kernels = get_backend(backend)
        self.field = compute_field(ensemble, self.threads, self.kernels)
        self.m_enc = self.field.interior_mass(ensemble.weights)
        self.steps = 0

    def _kick(self, h):
        ens, kern = self.ensemble, self.kernels
        pos, vel, m = ens.positions, ens.velocities, self.m_enc

        def do(s):
            kern.kick(vel[s], pos[s], m[s], h, self.softening)

        for_each_block(do, len(ens), self.threads)

    def _drift(self, h):
        ens, kern = self.ensemble, self.kernels
        pos, vel = ens.positions, ens.velocities

        def do(s):
            kern.drift(pos[s], vel[s], h)

        for_each_block(do, len(ens), self.threads)

    def step(self, dt, t_new=None):
        self._kick(0.5 * dt)
        self._drift(dt)
        self.field = compute_field(self.ensemble, self.threads, self.kernels)
        self.m_enc = self.field.interior_mass(self.ensemble.weights)
        self._kick(0.5 * dt)
        self.steps += 1
        self.ensemble.t = self.ensemble.t + dt if t_new is None else t_new
        return self.ensemble


def step_leapfrog(ensemble, dt, softening=0.0, threads=1, backend=None):
    """One kick-drift-kick step; returns a new ensemble at ``t + dt``."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    sim = Simulator(ensemble.copy(), softening=softening, threads=threads, backend=backend)
    return sim.step(dt)


class FieldHistory:
    """Radial field snapshots of a fixed-size ensemble, in time order.

    Between snapshots the enclosed mass is interpolated linearly in time;
    in radius it is the step function of each snapshot.
    """

    def __init__(self, n_particles, dt_hist, capacity=16):
        self.n = int(n_particles)
        self.dt_hist = float(dt_hist)
        self._times = np.empty(capacity)
        self._radii = np.empty((capacity, self.n))
        self._mass = np.empty((capacity, self.n))
        self._count = 0

    def __len__(self):
        return self._count

    def _grow(self):
        cap = 2 * len(self._times)
        for name in ("_radii", "_mass"):
            old = getattr(self, name)
            new = np.empty((cap, self.n))
            new[: self._count] = old[: self._count]
            setattr(self, name, new)
        times = np.empty(cap)
        times[: self._count] = self._times[: self._count]
        self._times = times

    def append(self, t, field):
        if self._count and not t > self._times[self._count - 1]:
            raise DomainError("snapshot times must be strictly increasing")
        if len(field.radii) != self.n:
            raise DomainError("snapshot size does not match the history")
        if self._count == len(self._times):
            self._grow()
        k = self._count
        self._times[k] = t
        self._radii[k] = field.radii
        self._mass[k] = field.cum_mass
        self._count += 1

    @property
    def times(self):
        return self._times[: self._count]

    @property
    def last_time(self):
        return float(self._times[self._count - 1])

    def snapshot(self, k):
        return RadialField(radii=self._radii[k].copy(), cum_mass=self._mass[k].copy())

    def arrays(self):
        """``(times, radii, cum_mass, count)`` views for the kernels."""
        return self._times, self._radii, self._mass, self._count

    def _check(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < -1e-12) or np.any(s_arr > self.last_time * (1 + 1e-12) + 1e-12):
            raise DomainError(f"time outside the recorded history [0, {self.last_time:.17g}]")

    def eval_mass(self, s, r):
        self._check(s)
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = _kernels_py._history_mass(self._times, self._radii, self._mass, self._count,
                                        float(s), r_arr)
        return float(out[0]) if np.ndim(r) == 0 else out

    def accel(self, s, x, softening=0.0):
        x = np.asarray(x, dtype=float)
        flat = np.ascontiguousarray(x.reshape(-1, 3))
        return _kernels_py._history_accel(self._times, self._radii, self._mass, self._count,
                                          float(s), flat, softening).reshape(x.shape)

    def save(self, directory):
        """Write ``times.txt`` and one ``field_XXXXX.csv`` (``r,m``) per snapshot."""
        from .io import write_field_csv, write_times

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_times(directory / "times.txt", self.times)
        for k in range(self._count):
            write_field_csv(directory / f"field_{k:05d}.csv", self._radii[k], self._mass[k])

    @classmethod
    def load(cls, directory, dt_hist=None):
        from .io import read_field_csv, read_times

        directory = Path(directory)
        times = read_times(directory / "times.txt")
        fields = [read_field_csv(directory / f"field_{k:05d}.csv") for k in range(len(times))]
        n = len(fields[0][0])
        if dt_hist is None:
            dt_hist = float(times[1] - times[0]) if len(times) > 1 else 0.0
        hist = cls(n, dt_hist, capacity=max(1, len(times)))
        for t, (r, m) in zip(times, fields):
            hist.append(float(t), RadialField(radii=r, cum_mass=m))
        return hist


def _n_char_steps(t, dt_char):
    return int(math.ceil(t / dt_char - 1e-9)) if t > 0 else 0


def backward_characteristic(field, t, x, v, dt_char=1e-3, softening=0.0, threads=1,
                            backend=None):
    """Trace characteristics from ``(t, x, v)`` back to time 0.

    ``field`` is a :class:`FieldHistory` or any object with a vectorized
    ``accel(s, x)``.  Classical RK4 with the step ``t / ceil(t / dt_char)``.
    Returns ``(x0, v0)`` with the shape of the inputs.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = x.shape
    xs = np.ascontiguousarray(x.reshape(-1, 3)).copy()
    vs = np.ascontiguousarray(v.reshape(-1, 3)).copy()
    if t < 0:
        raise DomainError("t must be nonnegative")
    n_steps = _n_char_steps(t, dt_char)
    if isinstance(field, FieldHistory):
        if t > field.last_time * (1 + 1e-12):
            raise DomainError(f"t = {t!r} beyond the recorded history ({field.last_time!r})")
        kern = get_backend(backend)
        times, radii, mass, count = field.arrays()

        def do(s):
            kern.history_backtrace(times, radii, mass, count, xs[s], vs[s], float(t),
                                   n_steps, float(softening))

        for_each_block(do, len(xs), threads, block=64)
    else:
        from .characteristics import integrate_tracers

        xs, vs = integrate_tracers(field, xs, vs, float(t), 0.0, n_steps)
    return xs.reshape(shape), vs.reshape(shape)


def f_eval_pointwise(field, initial_data, t, x, v, dt_char=1e-3, **kw):
    """``f(t, x, v) = f0(X(0), V(0))`` along the backward characteristic."""
    from .initial_data import f0_eval

    x0, v0 = backward_characteristic(field, t, x, v, dt_char=dt_char, **kw)
    return f0_eval(initial_data, x0, v0)
