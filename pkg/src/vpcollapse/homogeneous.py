"""Spatially homogeneous collapsing solutions ``h(t, x, v) = H_eps(|a v - a' x|**2)``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .dust import DEFAULT_SAFETY, DustSolution
from .errors import DomainError, NumericError

__all__ = [
    "TARGET_NORM",
    "IsotropicProfile",
    "ScaledProfile",
    "HomogeneousSolution",
    "make_default_profile",
    "make_profile",
    "profile_scale",
    "velocity_integral",
    "comoving_speed_sq",
    "h_eval",
    "rho_h",
    "m_h",
    "field_h",
    "velocity_support_radius",
]

#: Required value of the velocity integral of H(|v|^2).
TARGET_NORM = 3.0 / (4.0 * math.pi)

#: Closed-form constant for the default bump u^2 (1-u)^2.
DEFAULT_NORM_CONSTANT = 2079.0 / (128.0 * math.pi ** 2)


def _bump(u):
    return u * u * (1.0 - u) ** 2


def velocity_integral(g, radius=1.0, weight_power=2):
    """``4 pi int_0^radius s**weight_power g(s**2) ds`` by adaptive quadrature.

    With ``weight_power=2`` this is the velocity-space integral of the
    isotropic function ``g(|v|**2)`` over the ball of the given radius.
    """
    val, err = integrate.quad(lambda s: s ** weight_power * float(g(s * s)), 0.0, radius,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-10 * max(1.0, abs(val)):
        raise NumericError(f"velocity quadrature did not converge (err={err:.3g})")
    return 4.0 * math.pi * val


@dataclass(frozen=True)
class IsotropicProfile:
    """``H(u) = norm_constant * shape(u)`` on ``[0, 1]``, zero elsewhere."""

    shape: Callable
    norm_constant: float
    sup_value: float
    support_bound: float = 1.0

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        inside = (u_arr >= 0.0) & (u_arr <= self.support_bound)
        uc = np.clip(u_arr, 0.0, self.support_bound)
        out = np.where(inside, self.norm_constant * self.shape(uc), 0.0)
        if np.ndim(u) == 0:
            return float(out)
        return out


def _sup_of_shape(shape):
    grid = np.linspace(0.0, 1.0, 20001)
    vals = shape(grid)
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda u: -float(shape(u)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return max(float(vals[k]), -float(res.fun))


def make_profile(shape):
    """Normalize a nonnegative ``shape`` on ``[0, 1]`` into a profile.

    The constant is fixed by quadrature so that the velocity integral of
    ``H(|v|**2)`` equals ``3 / (4 pi)``.
    """
    raw = velocity_integral(shape)
    if not raw > 0:
        raise DomainError("profile shape must have positive velocity integral")
    c = TARGET_NORM / raw
    return IsotropicProfile(shape=shape, norm_constant=c, sup_value=c * _sup_of_shape(shape))


def make_default_profile():
    """The C^1 bump ``c u^2 (1-u)^2``, normalized numerically."""
    return make_profile(_bump)


@dataclass(frozen=True)
class ScaledProfile:
    """``H_eps(u) = eps**-3 H(u / eps**2)``, supported in ``[0, eps**2]``."""

    profile: IsotropicProfile
    epsilon: float

    def __call__(self, u):
        e = self.epsilon
        return self.profile(np.asarray(u, dtype=float) / (e * e)) / e ** 3

    @property
    def sup_value(self):
        return self.profile.sup_value / self.epsilon ** 3

    @property
    def support(self):
        return self.profile.support_bound * self.epsilon ** 2


def profile_scale(profile, epsilon):
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    return ScaledProfile(profile, float(epsilon))


@dataclass(frozen=True)
class HomogeneousSolution:
    profile: IsotropicProfile
    epsilon: float
    dust: DustSolution

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")

    @property
    def H_eps(self):
        return profile_scale(self.profile, self.epsilon)

    @property
    def sup_value(self):
        return self.H_eps.sup_value


def comoving_speed_sq(a, adot, x, v):
    """``|a v - a' x|**2`` for stacked 3-vectors (last axis)."""
    w = a * np.asarray(v, dtype=float) - adot * np.asarray(x, dtype=float)
    return np.einsum("...i,...i->...", w, w)


def h_eval(hs, t, x, v, safety=DEFAULT_SAFETY):
    a, adot = hs.dust.state(t, safety)
    return hs.H_eps(comoving_speed_sq(a, adot, x, v))


def rho_h(hs, t, safety=DEFAULT_SAFETY):
    a = hs.dust.a(t, safety)
    return 3.0 / (4.0 * math.pi * a ** 3)


def m_h(hs, t, r, safety=DEFAULT_SAFETY):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        raise DomainError("radius must be nonnegative")
    a = hs.dust.a(t, safety)
    out = r_arr ** 3 / a ** 3
    return float(out) if np.ndim(r) == 0 else out


def field_h(hs, t, x, safety=DEFAULT_SAFETY):
    """Gradient of the homogeneous potential, ``x / a**3``.

    The acceleration in the characteristic system is its negative.
    """
    a = hs.dust.a(t, safety)
    return np.asarray(x, dtype=float) / a ** 3


def velocity_support_radius(hs, t, r, safety=DEFAULT_SAFETY):
    """Largest ``|v|`` at radius ``r`` where ``h`` can be positive."""
    a, adot = hs.dust.state(t, safety)
    return (hs.epsilon + abs(adot) * np.asarray(r, dtype=float)) / a
