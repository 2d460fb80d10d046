"""Tracer suites checking the characteristic estimates behind core persistence.

Each suite integrates a batch of tracers with RK4, compares them against the
core boundary ``r_eps`` and counts violations beyond an integrator margin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import ExactHomogeneousField, integrate_tracers
from .homogeneous import comoving_speed_sq

__all__ = [
    "SuiteResult",
    "outside_tracers_stay_outside",
    "crossing_tracers_never_return",
    "core_tracers_came_from_core",
    "comoving_velocity_bound",
    "boundary_comoving_velocity",
    "invariant_drift",
    "run_trajectory_suites",
]

DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True)
class SuiteResult:
    name: str
    n_tracers: int
    n_checked: int
    violations: int
    worst: float
    tolerance: float

    @property
    def passed(self):
        return self.violations == 0 and self.n_checked > 0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.violations} violations over {self.n_checked} "
                f"of {self.n_tracers} tracers (worst {self.worst:.3e}, tol {self.tolerance:.1e})")


def _rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def _directions(rng, n):
    u = rng.standard_normal((n, 3))
    return u / np.linalg.norm(u, axis=1)[:, None]


def _in_ball(rng, n, radius):
    return _directions(rng, n) * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


def _n_steps(span, dt):
    return max(1, int(np.ceil(abs(span) / dt - 1e-9)))


def _horizon(field, core, t_max):
    t = 0.999 * core.T_eps if t_max is None else float(t_max)
    last = getattr(field, "last_time", None)
    return min(t, last) if last is not None else t


def _radius_track(field, x, v, t0, t1, dt):
    _, _, nodes, xs, vs = integrate_tracers(field, x, v, t0, t1, _n_steps(t1 - t0, dt),
                                            record=True)
    return nodes, np.linalg.norm(xs, axis=-1), xs, vs


def outside_tracers_stay_outside(field, core, n=100, seed=0, dt=1e-3, t_max=None,
                                 margin=DEFAULT_MARGIN, r_range=(1.0, 1.5), speed_frac=0.99):
    """Tracers with ``r(0) >= 1`` and ``|v(0)| < eps`` stay strictly outside ``r_eps``.

    Requires a field whose enclosed mass stays below ``M_eps``, such as a
    recorded history of the cut-off data.
    """
    rng = _rng(seed, 10)
    r0 = rng.uniform(*r_range, n)
    x = _directions(rng, n) * r0[:, None]
    v = _directions(rng, n) * (speed_frac * core.epsilon)
    nodes, r, _, _ = _radius_track(field, x, v, 0.0, _horizon(field, core, t_max), dt)
    gap = r[1:] - core.r(nodes[1:])[:, None]
    worst = float(gap.min())
    bad = (gap <= -margin).any(axis=0)
    return SuiteResult("outside tracers stay outside", n, n, int(bad.sum()), worst, margin)


def crossing_tracers_never_return(field, core, n=200, seed=0, dt=1e-3, t_max=None,
                                  margin=DEFAULT_MARGIN, r_range=(0.0, 1.0)):
    """Tracers from ``r(0) <= 1`` that reach ``r_eps`` stay outside afterwards.

    Velocities are uniform in the ball ``|v| < eps / a0``; only tracers that
    actually cross are checked.
    """
    rng = _rng(seed, 11)
    r0 = rng.uniform(*r_range, n)
    x = _directions(rng, n) * r0[:, None]
    v = _in_ball(rng, n, core.epsilon / core.a0)
    nodes, r, _, _ = _radius_track(field, x, v, 0.0, _horizon(field, core, t_max), dt)
    r_eps = core.r(nodes)[:, None]
    gap = r - r_eps
    out = gap >= 0.0
    out[0] = False
    crossed = out.any(axis=0)
    first = np.where(crossed, np.argmax(out, axis=0), len(nodes))
    after = np.arange(len(nodes))[:, None] > first[None, :]
    later = np.where(after, gap, np.inf)
    worst = float(later.min()) if crossed.any() else float("inf")
    bad = (later <= -margin).any(axis=0)
    return SuiteResult("crossing tracers never return", n, int(crossed.sum()), int(bad.sum()),
                       worst, margin)


def _homogeneous_tracers(rng, dust, t, n, radius, eps, w_range=(0.0, 0.999)):
    """Points with ``|x| <= radius`` and co-moving speed ``|a v - a' x|`` in ``eps * w_range``."""
    a, adot = dust.state(t)
    x = _in_ball(rng, n, radius)
    lo, hi = w_range
    speed = eps * (lo ** 3 + (hi ** 3 - lo ** 3) * rng.random(n)) ** (1.0 / 3.0)
    w = _directions(rng, n) * speed[:, None]
    return x, (w + adot * x) / a


def core_tracers_came_from_core(dust, core, n=100, seed=0, t_star_frac=0.7, dt=1e-4,
                                margin=DEFAULT_MARGIN, on_boundary_frac=0.2):
    """Mass-carrying homogeneous tracers inside ``r_eps(t*)`` were inside before ``t*``.

    A share of the tracers starts exactly on ``|x| = r_eps(t*)``.
    """
    rng = _rng(seed, 12)
    t_star = t_star_frac * core.T_eps
    r_star = float(core.r(t_star))
    x, v = _homogeneous_tracers(rng, dust, t_star, n, r_star, core.epsilon)
    k = int(round(on_boundary_frac * n))
    if k:
        x[:k] *= (r_star / np.linalg.norm(x[:k], axis=1))[:, None]
    field = ExactHomogeneousField(dust)
    nodes, r, _, _ = _radius_track(field, x, v, t_star, 0.0, dt)
    gap = r[1:] - core.r(nodes[1:])[:, None]
    worst = float(gap.max())
    bad = (gap >= margin).any(axis=0)
    return SuiteResult("core tracers came from the core", n, n, int(bad.sum()), worst, margin)


def comoving_velocity_bound(dust, epsilon, n=100, seed=0, t_end=None, dt=1e-4):
    """Radial co-moving velocity ``a w - a' r`` stays above ``-eps`` along ``h > 0`` tracers."""
    rng = _rng(seed, 13)
    t_end = 0.9 * dust.T if t_end is None else t_end
    x, v = _homogeneous_tracers(rng, dust, 0.0, n, 1.0, epsilon)
    field = ExactHomogeneousField(dust)
    nodes, r, xs, vs = _radius_track(field, x, v, 0.0, t_end, dt)
    a, adot = dust.state(nodes)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(r > 0, np.einsum("kij,kij->ki", xs, vs) / r, 0.0)
    wt = a[:, None] * w - adot[:, None] * r
    worst = float((wt + epsilon).min())
    bad = (wt <= -epsilon).any(axis=0)
    return SuiteResult("co-moving radial velocity above -eps", n, n, int(bad.sum()), worst, 0.0)


def boundary_comoving_velocity(dust, core, n_points=10_000):
    """``a r_eps' - a' r_eps < -eps`` on a grid of ``(0, 0.999 T_eps]``."""
    s = np.linspace(0.0, 0.999 * core.T_eps, n_points + 1)[1:]
    a, adot = dust.state(s)
    r, rdot = core.state(s)
    wt = a * rdot - adot * r
    worst = float((-core.epsilon - wt).min())
    bad = int((wt >= -core.epsilon).sum())
    return SuiteResult("boundary co-moving velocity below -eps", n_points, n_points, bad,
                       worst, 0.0)


def invariant_drift(dust, epsilon, n=100, seed=0, t_end=None, dt=1e-4, tol=1e-6):
    """Relative drift of ``|a v - a' x|**2`` along tracers in the exact field."""
    rng = _rng(seed, 14)
    t_end = 0.9 * dust.T if t_end is None else t_end
    x, v = _homogeneous_tracers(rng, dust, 0.0, n, 1.0, epsilon, w_range=(0.1, 0.999))
    field = ExactHomogeneousField(dust)
    _, _, nodes, xs, vs = integrate_tracers(field, x, v, 0.0, t_end, _n_steps(t_end, dt),
                                            record=True)
    a, adot = dust.state(nodes)
    q = comoving_speed_sq(a[:, None, None], adot[:, None, None], xs, vs)
    drift = np.abs(q / q[0] - 1.0).max(axis=0)
    return SuiteResult("co-moving speed invariant", n, n, int((drift > tol).sum()),
                       float(drift.max()), tol)


def run_trajectory_suites(history, dust, core, n=100, seed=0, dt_field=1e-3):
    """All suites; the first two use ``history``, the rest the exact homogeneous field."""
    return [
        outside_tracers_stay_outside(history, core, n=n, seed=seed, dt=dt_field),
        crossing_tracers_never_return(history, core, n=2 * n, seed=seed, dt=dt_field),
        core_tracers_came_from_core(dust, core, n=n, seed=seed),
        comoving_velocity_bound(dust, core.epsilon, n=n, seed=seed),
        boundary_comoving_velocity(dust, core),
        invariant_drift(dust, core.epsilon, n=n, seed=seed),
    ]
