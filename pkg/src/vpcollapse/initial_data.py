"""Cut-off homogeneous initial data and its particle sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dust import DustSolution
from .errors import ConfigError, DomainError, NumericError
from .homogeneous import (
    HomogeneousSolution,
    IsotropicProfile,
    comoving_speed_sq,
    make_default_profile,
)
from .parallel import map_blocks

__all__ = [
    "CutoffFn",
    "InitialData",
    "SampledEnsemble",
    "cutoff_eval",
    "make_initial_data",
    "f0_eval",
    "compute_masses",
    "sample_ensemble",
    "SAMPLE_BLOCK",
]

#: Particles drawn per independently seeded block.
SAMPLE_BLOCK = 8192

MIN_EFFICIENCY = 1e-4


def _smooth_step(s):
    """``q(s) / (q(s) + q(1-s))`` with ``q(s) = exp(-1/s)`` for ``s > 0``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        q0 = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
        s1 = 1.0 - s
        q1 = np.where(s1 > 0.0, np.exp(-1.0 / np.where(s1 > 0.0, s1, 1.0)), 0.0)
    return q0 / (q0 + q1)


@dataclass(frozen=True)
class CutoffFn:
    """Smooth radial cut-off: 1 on ``[0, 1]``, 0 beyond ``1 + epsilon``."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")

    @property
    def outer_radius(self):
        return 1.0 + self.epsilon

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        e = self.epsilon
        s = np.clip((1.0 + e - r_arr) / e, 0.0, 1.0)
        out = np.where(r_arr <= 1.0, 1.0, np.where(r_arr >= 1.0 + e, 0.0, _smooth_step(s)))
        return float(out) if np.ndim(r) == 0 else out


def cutoff_eval(c, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        raise DomainError("radius must be nonnegative")
    return c(r)


@dataclass(frozen=True)
class InitialData:
    homog: HomogeneousSolution
    cutoff: CutoffFn
    total_mass: float
    M_eps: float

    @property
    def epsilon(self):
        return self.homog.epsilon

    @property
    def a0(self):
        return self.homog.dust.a0

    @property
    def x_max(self):
        return self.cutoff.outer_radius

    @property
    def v_max(self):
        """Velocity support radius ``epsilon / a0``."""
        return self.epsilon / self.a0

    @property
    def sup_value(self):
        return self.homog.sup_value


def compute_masses(homog, cutoff):
    """Total mass of the cut-off data and the strict upper bound ``M_eps``."""
    a0 = homog.dust.a0
    integral, err = integrate.quad(lambda r: r * r * cutoff(r), 0.0, cutoff.outer_radius,
                                   points=[1.0], epsabs=1e-14, epsrel=1e-13, limit=200)
    if not math.isfinite(integral) or err > 1e-10:
        raise NumericError(f"mass quadrature did not converge (err={err:.3g})")
    # rho_h(0) * int phi(|x|) dx with rho_h(0) = 3 / (4 pi a0^3)
    total = 3.0 * integral / a0 ** 3
    return total, total + homog.epsilon


def make_initial_data(epsilon, a0=1.0, profile: IsotropicProfile | None = None):
    if profile is None:
        profile = make_default_profile()
    homog = HomogeneousSolution(profile=profile, epsilon=float(epsilon),
                                dust=DustSolution(float(a0)))
    cutoff = CutoffFn(float(epsilon))
    total, M_eps = compute_masses(homog, cutoff)
    return InitialData(homog=homog, cutoff=cutoff, total_mass=total, M_eps=M_eps)


def f0_eval(d, x, v):
    """``h(0, x, v) * phi(|x|)``; ``x`` and ``v`` stack 3-vectors on the last axis."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    # a'(0) = 0 so h(0, x, v) = H_eps(a0^2 |v|^2)
    h0 = d.homog.H_eps(comoving_speed_sq(d.a0, 0.0, x, v))
    return h0 * d.cutoff(np.linalg.norm(x, axis=-1))


@dataclass(frozen=True)
class SampledEnsemble:
    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray
    seed: int

    def __len__(self):
        return len(self.weights)


def _uniform_ball(rng, n, radius):
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    return direction * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


def _block_rng(seed, block):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def rejection_efficiency(d):
    """Expected acceptance rate of the uniform phase-space envelope."""
    vol_x = 4.0 / 3.0 * math.pi * d.x_max ** 3
    vol_v = 4.0 / 3.0 * math.pi * d.v_max ** 3
    return d.total_mass / (d.sup_value * vol_x * vol_v)


def _sample_block(d, seed, block, n):
    rng = _block_rng(seed, block)
    f_max = d.sup_value
    xs, vs = [], []
    have = 0
    while have < n:
        m = max(64, int(1.3 * (n - have) / rejection_efficiency(d)))
        x = _uniform_ball(rng, m, d.x_max)
        v = _uniform_ball(rng, m, d.v_max)
        u = rng.random(m)
        f = f0_eval(d, x, v)
        keep = (f > 0.0) & (u * f_max < f)
        xs.append(x[keep])
        vs.append(v[keep])
        have += int(keep.sum())
    return np.concatenate(xs)[:n], np.concatenate(vs)[:n]


def sample_ensemble(d, N, seed, threads=1):
    """Draw ``N`` equal-weight particles from ``f0 / total_mass``.

    Particles come in blocks of :data:`SAMPLE_BLOCK`, block ``k`` using the
    stream spawned from ``(seed, k)``, so the result does not depend on
    ``threads``.
    """
    if int(N) != N or N < 1:
        raise ConfigError("N", f"must be a positive integer, got {N!r}")
    N = int(N)
    eff = rejection_efficiency(d)
    if eff < MIN_EFFICIENCY:
        raise ConfigError("epsilon", f"rejection efficiency {eff:.3g} below {MIN_EFFICIENCY}")
    n_blocks = -(-N // SAMPLE_BLOCK)
    sizes = [min(SAMPLE_BLOCK, N - k * SAMPLE_BLOCK) for k in range(n_blocks)]
    parts = map_blocks(lambda k: _sample_block(d, seed, k, sizes[k]), range(n_blocks), threads)
    positions = np.concatenate([p[0] for p in parts])
    velocities = np.concatenate([p[1] for p in parts])
    weights = np.full(N, d.total_mass / N)
    return SampledEnsemble(positions=positions, velocities=velocities, weights=weights,
                           seed=int(seed))
