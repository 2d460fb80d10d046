"""Analytic radial fields and a vectorized RK4 tracer integrator."""
from __future__ import annotations

import numpy as np

from .dust import DustSolution

__all__ = [
    "ExactHomogeneousField",
    "DustBallField",
    "PointMassField",
    "integrate_tracers",
]


class _TimeCachedField:
    """Field whose time dependence is through ``a(s)``, cached per stage time."""

    def __init__(self, dust: DustSolution, safety=0.999999):
        self.dust = dust
        self.safety = safety
        self._cache = {}

    def prepare(self, times):
        times = np.unique(np.asarray(times, dtype=float))
        times = times[(times >= 0.0) & (times <= self.safety * self.dust.T)]
        a = self.dust.a(times, self.safety)
        self._cache.update(zip(times.tolist(), np.atleast_1d(a).tolist()))

    def scale(self, s):
        s = float(s)
        a = self._cache.get(s)
        if a is None:
            a = self.dust.a(max(s, 0.0), self.safety)
            self._cache[s] = a
        return a


class ExactHomogeneousField(_TimeCachedField):
    """``m(s, r) = r^3 / a(s)^3``: acceleration ``-x / a^3``."""

    def mass(self, s, r):
        return np.asarray(r, dtype=float) ** 3 / self.scale(s) ** 3

    def accel(self, s, x):
        return -np.asarray(x, dtype=float) / self.scale(s) ** 3


class DustBallField(_TimeCachedField):
    """Collapsing dust ball of radius ``a(s)/a0`` and mass ``a0^-3``."""

    def mass(self, s, r):
        a = self.scale(s)
        edge = a / self.dust.a0
        r = np.asarray(r, dtype=float)
        return np.minimum(r, edge) ** 3 / a ** 3

    def accel(self, s, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        m = self.mass(s, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(r > 0.0, m / r ** 3, 0.0)
        return -c[..., None] * x


class PointMassField:
    def __init__(self, mass):
        self.M = float(mass)

    def mass(self, s, r):
        return np.full(np.shape(r), self.M)

    def accel(self, s, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(r > 0.0, self.M / r ** 3, 0.0)
        return -c[..., None] * x


def integrate_tracers(field, x, v, t0, t1, n_steps, record=False):
    """Classical RK4 for ``x' = v, v' = field.accel(s, x)`` from ``t0`` to ``t1``.

    Works in either time direction.  With ``record=True`` also returns the
    node times and the stacked states ``(n_steps + 1, n, 3)``.
    """
    x = np.array(x, dtype=float)
    v = np.array(v, dtype=float)
    if n_steps == 0:
        if record:
            return x, v, np.array([t0]), x[None].copy(), v[None].copy()
        return x, v
    h = (t1 - t0) / n_steps
    nodes = t0 + 0.5 * h * np.arange(2 * n_steps + 1)
    nodes[-1] = t1
    if hasattr(field, "prepare"):
        field.prepare(nodes)
    if record:
        xs = np.empty((n_steps + 1,) + x.shape)
        vs = np.empty_like(xs)
        xs[0], vs[0] = x, v
    for i in range(n_steps):
        s0, sm, s1 = nodes[2 * i], nodes[2 * i + 1], nodes[2 * i + 2]
        k1x, k1v = v, field.accel(s0, x)
        k2x, k2v = v + 0.5 * h * k1v, field.accel(sm, x + 0.5 * h * k1x)
        k3x, k3v = v + 0.5 * h * k2v, field.accel(sm, x + 0.5 * h * k2x)
        k4x, k4v = v + h * k3v, field.accel(s1, x + h * k3x)
        x = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if record:
            xs[i + 1], vs[i + 1] = x, v
    if record:
        return x, v, nodes[::2].copy(), xs, vs
    return x, v
