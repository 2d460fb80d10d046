"""Free-fall dynamics of the homogeneous dust ball and of the core boundary.

Both radii solve an equation of the form ``r'' = -M / r**2`` started with
``r(0) = r0`` and an inward (or zero) speed.  Energy conservation reduces
the problem to the monotone function

    F(r) = r * sqrt(1/r - 1) + arctan(sqrt(1/r - 1)),    F(0) = pi/2,

whose inverse gives the radius as a function of time.  Writing
``r = cos(theta)**2`` turns ``F`` into ``theta + sin(theta) cos(theta)``,
which is the variable the inverse is bracketed in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, TimeRangeError

__all__ = [
    "DEFAULT_SAFETY",
    "DustSolution",
    "CoreBoundary",
    "collapse_time",
    "F_of",
    "F_inv",
    "a_of_t",
    "adot_of_t",
    "make_core_boundary",
    "r_eps_of_t",
    "rdot_eps_of_t",
    "eulerian_dust_state",
    "integrate_free_fall",
    "oracle_collapse_time",
]

HALF_PI = 0.5 * math.pi
SQRT2 = math.sqrt(2.0)

#: Fraction of the collapse time up to which closed forms are evaluated.
DEFAULT_SAFETY = 0.999


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


def collapse_time(a0):
    """Collapse time of ``a'' = -1/a**2`` started at rest from ``a0``."""
    if not a0 > 0:
        raise DomainError(f"a0 must be positive, got {a0!r}")
    return math.pi / (2.0 * SQRT2) * a0 ** 1.5


def F_of(r):
    """Evaluate ``F`` on ``[0, 1]``; accepts scalars or arrays."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r_arr)) or np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise DomainError("F is defined on [0, 1] only")
    out = np.full(r_arr.shape, HALF_PI)
    pos = r_arr > 0.0
    rp = r_arr[pos]
    # (1 - r) is exact for r in [1/2, 1], which keeps F accurate near r = 1;
    # r * sqrt(1/r - 1) is formed as sqrt(r (1 - r)) so tiny r cannot overflow
    with np.errstate(over="ignore"):
        s = np.sqrt((1.0 - rp) / rp)
    # rounding can push the sum one ulp past pi/2 for tiny r
    out[pos] = np.minimum(np.sqrt(rp * (1.0 - rp)) + np.arctan(s), HALF_PI)
    return _scalar_or_array(out, r)


def _theta_of(y):
    """Solve ``theta + sin(theta) cos(theta) = y`` on ``[0, pi/2]`` by bisection."""
    y = np.asarray(y, dtype=float)
    lo = np.zeros(y.shape)
    hi = np.full(y.shape, HALF_PI)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        # (lo + hi)/2 stops moving once the bracket is one ulp wide
        if np.all((mid <= lo) | (mid >= hi)):
            break
        g = mid + np.sin(mid) * np.cos(mid)
        below = g < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    g_lo = lo + np.sin(lo) * np.cos(lo)
    g_hi = hi + np.sin(hi) * np.cos(hi)
    return np.where(np.abs(g_lo - y) <= np.abs(g_hi - y), lo, hi)


def F_inv(y):
    """Inverse of :func:`F_of`, mapping ``[0, pi/2]`` onto ``[0, 1]``."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(y_arr)) or np.any(y_arr < 0.0) or np.any(y_arr > HALF_PI):
        raise DomainError("F_inv is defined on [0, pi/2] only")
    theta = _theta_of(y_arr)
    r = np.cos(theta) ** 2
    r = np.where(y_arr == 0.0, 1.0, np.where(y_arr == HALF_PI, 0.0, r))
    return _scalar_or_array(r, y)


def _check_times(t, horizon, safety, what):
    t_arr = np.asarray(t, dtype=float)
    if not 0.0 < safety <= 1.0:
        raise DomainError(f"safety factor must lie in (0, 1], got {safety!r}")
    limit = safety * horizon
    bad = ~np.isfinite(t_arr) | (t_arr < 0.0) | (t_arr > limit)
    if safety == 1.0:
        bad |= t_arr >= horizon
    if np.any(bad):
        raise TimeRangeError(
            f"time outside [0, {limit:.17g}] ({what} with collapse at {horizon:.17g})"
        )
    return t_arr


@dataclass(frozen=True)
class DustSolution:
    """Scale factor ``a`` with ``a'' = -1/a**2``, ``a(0) = a0``, ``a'(0) = 0``."""

    a0: float = 1.0
    T: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "T", collapse_time(self.a0))

    def _theta(self, t, safety):
        t_arr = _check_times(t, self.T, safety, "scale factor")
        return _theta_of(SQRT2 * self.a0 ** -1.5 * t_arr)

    def a(self, t, safety=DEFAULT_SAFETY):
        theta = self._theta(t, safety)
        out = self.a0 * np.cos(theta) ** 2
        out = np.where(np.asarray(t) == 0.0, self.a0, out)
        return _scalar_or_array(out, t)

    def adot(self, t, safety=DEFAULT_SAFETY):
        theta = self._theta(t, safety)
        # -sqrt(2) sqrt(1/a - 1/a0) with 1/a - 1/a0 = tan(theta)**2 / a0
        out = -math.sqrt(2.0 / self.a0) * np.tan(theta)
        return _scalar_or_array(out, t)

    def state(self, t, safety=DEFAULT_SAFETY):
        """Return ``(a, adot)`` with a single root solve."""
        theta = self._theta(t, safety)
        a = np.where(np.asarray(t) == 0.0, self.a0, self.a0 * np.cos(theta) ** 2)
        adot = -math.sqrt(2.0 / self.a0) * np.tan(theta)
        return _scalar_or_array(a, t), _scalar_or_array(adot, t)


def a_of_t(dust, t, safety=DEFAULT_SAFETY):
    return dust.a(t, safety)


def adot_of_t(dust, t, safety=DEFAULT_SAFETY):
    return dust.adot(t, safety)


@dataclass(frozen=True)
class CoreBoundary:
    """Radius of a test particle falling onto a point mass ``M_eps``.

    ``r'' = -M_eps / r**2`` with ``r(0) = 1`` and ``r'(0) = -epsilon``.
    ``a0`` is the initial scale of the homogeneous solution the boundary is
    compared against; it only enters the admissibility check on ``M_eps``.
    """

    epsilon: float
    M_eps: float
    C_eps: float
    T_eps: float
    a0: float = 1.0

    @property
    def _rate(self):
        return math.sqrt(2.0 * self.M_eps * self.C_eps ** 3)

    @property
    def _F_C(self):
        return F_of(self.C_eps)

    def _phi(self, t, safety):
        t_arr = _check_times(t, self.T_eps, safety, "core boundary")
        y = np.minimum(self._F_C + self._rate * t_arr, HALF_PI)
        return _theta_of(y)

    def r(self, t, safety=DEFAULT_SAFETY):
        phi = self._phi(t, safety)
        out = np.cos(phi) ** 2 / self.C_eps
        out = np.where(np.asarray(t) == 0.0, 1.0, out)
        return _scalar_or_array(out, t)

    def rdot(self, t, safety=DEFAULT_SAFETY):
        phi = self._phi(t, safety)
        # -sqrt(2M) sqrt(1/r - C) with 1/r - C = C tan(phi)**2
        out = -math.sqrt(2.0 * self.M_eps * self.C_eps) * np.tan(phi)
        out = np.where(np.asarray(t) == 0.0, -self.epsilon, out)
        return _scalar_or_array(out, t)

    def state(self, t, safety=DEFAULT_SAFETY):
        phi = self._phi(t, safety)
        at0 = np.asarray(t) == 0.0
        r = np.where(at0, 1.0, np.cos(phi) ** 2 / self.C_eps)
        rdot = np.where(at0, -self.epsilon,
                        -math.sqrt(2.0 * self.M_eps * self.C_eps) * np.tan(phi))
        return _scalar_or_array(r, t), _scalar_or_array(rdot, t)


def make_core_boundary(epsilon, M_eps, a0=1.0):
    """Build the core boundary from the closed forms.

    Requires ``M_eps`` to exceed the mass ``a0**-3`` of the homogeneous ball
    of radius one, which is what keeps the boundary inside ``a(t)/a0``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    if not a0 > 0:
        raise DomainError(f"a0 must be positive, got {a0!r}")
    if not M_eps > a0 ** -3:
        raise DomainError(
            f"M_eps must exceed the unit-ball mass {a0 ** -3:.17g}, got {M_eps!r}"
        )
    C = 1.0 - epsilon ** 2 / (2.0 * M_eps)
    if not 0.0 < C < 1.0:
        raise DomainError(f"C_eps = {C!r} outside (0, 1)")
    T_eps = (HALF_PI - F_of(C)) / math.sqrt(2.0 * M_eps * C ** 3)
    core = CoreBoundary(epsilon=float(epsilon), M_eps=float(M_eps), C_eps=C,
                        T_eps=T_eps, a0=float(a0))
    if not T_eps < collapse_time(a0):
        raise DomainError("core boundary does not collapse before the dust ball")
    return core


def r_eps_of_t(core, t, safety=DEFAULT_SAFETY):
    return core.r(t, safety)


def rdot_eps_of_t(core, t, safety=DEFAULT_SAFETY):
    return core.rdot(t, safety)


def eulerian_dust_state(dust, t, x, safety=DEFAULT_SAFETY):
    """Density and velocity of the collapsing dust ball at ``(t, x)``.

    ``x`` has shape ``(..., 3)``; returns ``(density, velocity)``.
    """
    a, adot = dust.state(t, safety)
    x = np.asarray(x, dtype=float)
    radius = np.linalg.norm(x, axis=-1)
    density = np.where(radius <= a / dust.a0, 3.0 / (4.0 * math.pi * a ** 3), 0.0)
    velocity = (adot / a) * x
    return _scalar_or_array(density, radius), velocity


def integrate_free_fall(mass, r0, v0, dt=1e-5, t_max=None, stop_radius=1e-6):
    """Fixed-step classical RK4 for ``r'' = -mass / r**2``.

    Runs until ``t_max`` (if given) or until the radius first drops below
    ``stop_radius``.  Returns arrays ``(t, r, rdot)`` including the start.
    This is the independent reference for the closed forms above and never
    calls into them.
    """
    def acc(r):
        return -mass / (r * r)

    n_max = None if t_max is None else int(round(t_max / dt))
    ts, rs, vs = [0.0], [float(r0)], [float(v0)]
    r, v = float(r0), float(v0)
    n = 0
    while True:
        if n_max is not None and n >= n_max:
            break
        k1r, k1v = v, acc(r)
        k2r, k2v = v + 0.5 * dt * k1v, acc(r + 0.5 * dt * k1r)
        k3r, k3v = v + 0.5 * dt * k2v, acc(r + 0.5 * dt * k2r)
        k4r, k4v = v + dt * k3v, acc(r + dt * k3r)
        r = r + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        n += 1
        ts.append(n * dt)
        rs.append(r)
        vs.append(v)
        if not (r >= stop_radius) or not math.isfinite(v):
            break
    return np.array(ts), np.array(rs), np.array(vs)


def oracle_collapse_time(mass, r0, v0, dt=1e-5, stop_radius=1e-6):
    """Time at which the RK4 reference first drops below ``stop_radius``."""
    t, r, _ = integrate_free_fall(mass, r0, v0, dt=dt, stop_radius=stop_radius)
    if r[-1] >= stop_radius:
        raise DomainError("reference trajectory did not collapse")
    return t[-1]
