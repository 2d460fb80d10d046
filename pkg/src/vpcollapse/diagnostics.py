"""Energies, concentration measures and core-agreement diagnostics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .homogeneous import h_eval, velocity_support_radius
from .parallel import block_sum
from .simulation import f_eval_pointwise

__all__ = [
    "DiagnosticsReport",
    "kinetic_energy",
    "potential_energy",
    "pairwise_potential_energy",
    "sup_m_over_r",
    "rho_inf_estimate",
    "shell_densities",
    "core_probes",
    "core_agreement_D",
    "boundary_probes",
    "boundary_vanishing_check",
    "kinetic_energy_bound",
]

SERIES_COLUMNS = ("t", "E_kin", "E_pot", "E_tot", "rho_inf", "sup_m_r", "r_eps", "a", "D_core")


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    E_kin: float
    E_pot: float
    E_tot: float
    rho_inf: float
    sup_m_over_r: float
    r_eps: float
    a: float
    D_core: float

    def row(self):
        d = asdict(self)
        d["sup_m_r"] = d.pop("sup_m_over_r")
        return [d[c] for c in SERIES_COLUMNS]


def kinetic_energy(ensemble, threads=1):
    v = ensemble.velocities
    per = 0.5 * ensemble.weights * (v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1] + v[:, 2] * v[:, 2])
    return float(block_sum(per, threads))


def potential_energy(field, threads=1):
    """Shell-model potential energy ``-sum_{i<j} w_i w_j / max(r_i, r_j)``.

    Each particle pairs with the mass strictly inside it, so this is
    ``-sum_k w_k m(r_k^-) / r_k`` over the sorted radii: the integral of the
    step function ``-m^2 / (2 r^2)`` from the innermost radius outwards,
    minus the self-energy ``w_k^2 / (2 r_k)`` of every shell.  It is the
    energy conserved exactly by the self-excluded shell forces.
    """
    r = field.radii
    m = field.cum_mass
    n = len(r)
    if n < 2:
        return 0.0
    w = np.diff(m)
    inner = m[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(r[1:] > 0.0, w * inner / r[1:], 0.0)
    return -float(block_sum(per, threads))


def pairwise_potential_energy(radii, weights):
    """O(N^2) reference: ``-sum_{i<j} w_i w_j / max(r_i, r_j)``."""
    r = np.asarray(radii, dtype=float)
    w = np.asarray(weights, dtype=float)
    rmax = np.maximum(r[:, None], r[None, :])
    with np.errstate(divide="ignore"):
        pair = np.outer(w, w) / rmax
    np.fill_diagonal(pair, 0.0)
    return -0.5 * float(pair.sum())


def sup_m_over_r(field):
    r = field.radii
    if len(r) == 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(r > 0.0, field.cum_mass / r, 0.0)
    return float(q.max())


def shell_densities(ensemble, bin_width):
    """Mass density in radial shells ``[k d, (k+1) d)``; returns ``(edges, rho, counts)``."""
    if not bin_width > 0:
        raise DomainError(f"bin_width must be positive, got {bin_width!r}")
    r = np.linalg.norm(ensemble.positions, axis=1)
    if len(r) == 0:
        return np.zeros(1), np.zeros(0), np.zeros(0, dtype=int)
    k = np.floor(r / bin_width).astype(np.int64)
    nb = int(k.max()) + 1
    mass = np.bincount(k, weights=ensemble.weights, minlength=nb)
    counts = np.bincount(k, minlength=nb)
    edges = bin_width * np.arange(nb + 1)
    vol = 4.0 / 3.0 * math.pi * (edges[1:] ** 3 - edges[:-1] ** 3)
    return edges, mass / vol, counts


def rho_inf_estimate(ensemble, bin_width):
    """Largest shell-averaged density; 0 for an empty ensemble."""
    _, rho, _ = shell_densities(ensemble, bin_width)
    return float(rho.max()) if len(rho) else 0.0


def kinetic_energy_bound(profile, a0):
    """``(16 pi / 3) 4 pi int_0^1 s^4 H(s^2) ds / a0^5`` bounding ``E_kin(0)``."""
    from .homogeneous import velocity_integral

    return 16.0 * math.pi / 3.0 * velocity_integral(profile, weight_power=4) / a0 ** 5


def _unit_vectors(rng, n):
    u = rng.standard_normal((n, 3))
    return u / np.linalg.norm(u, axis=1)[:, None]


def core_probes(initial_data, core, t, n_samples, seed):
    """Points uniform in ``|x| <= r_eps(t)`` with ``|v|`` up to the support radius."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    r_eps = core.r(t)
    x = _unit_vectors(rng, n_samples) * (r_eps * rng.random(n_samples) ** (1 / 3))[:, None]
    vmax = velocity_support_radius(initial_data.homog, t, np.linalg.norm(x, axis=1))
    v = _unit_vectors(rng, n_samples) * (vmax * rng.random(n_samples) ** (1 / 3))[:, None]
    return x, v


def core_agreement_D(history, initial_data, core, t, n_samples=200, seed=0, dt_char=1e-3,
                     threads=1):
    """Sampled ``max |f - h| / sup H_eps`` over the core ``|x| <= r_eps(t)``.

    ``history`` may be a :class:`FieldHistory` or an analytic field such as
    :class:`~vpcollapse.characteristics.ExactHomogeneousField`.
    """
    if t == 0:
        return 0.0
    if not t < core.T_eps:
        raise DomainError("t must precede the core collapse time")
    x, v = core_probes(initial_data, core, t, n_samples, seed)
    f = f_eval_pointwise(history, initial_data, t, x, v, dt_char=dt_char, threads=threads)
    h = h_eval(initial_data.homog, t, x, v)
    return float(np.max(np.abs(f - h)) / initial_data.sup_value)


def boundary_probes(initial_data, core, t, n_samples, seed, outflow=False):
    """Points on ``|x| = r_eps(t)`` with radial velocity ``w <= r_eps'(t)``.

    With ``outflow=True`` the radial velocity is instead drawn slightly
    above ``r_eps'(t)``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    r_eps, rdot = core.state(t)
    n_hat = _unit_vectors(rng, n_samples)
    x = r_eps * n_hat
    vmax = float(velocity_support_radius(initial_data.homog, t, r_eps))
    vbox = 1.25 * max(vmax, abs(rdot))
    if outflow:
        w = rdot + 0.05 * vmax * rng.random(n_samples)
    else:
        w = rdot - (rdot + vbox) * rng.random(n_samples)
        w[0] = rdot
    tang = rng.standard_normal((n_samples, 3))
    tang -= np.einsum("ij,ij->i", tang, n_hat)[:, None] * n_hat
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    vt = np.sqrt(np.maximum(vbox ** 2 - w ** 2, 0.0) * rng.random(n_samples))
    v = w[:, None] * n_hat + vt[:, None] * tang
    return x, v


def boundary_vanishing_check(history, initial_data, core, t, n_samples=200, seed=0,
                             dt_char=1e-3, outflow=False, threads=1):
    """Largest of ``f`` and ``h`` over inflow points of the core boundary, over sup H_eps."""
    x, v = boundary_probes(initial_data, core, t, n_samples, seed, outflow=outflow)
    f = f_eval_pointwise(history, initial_data, t, x, v, dt_char=dt_char, threads=threads)
    h = h_eval(initial_data.homog, t, x, v)
    return float(max(np.max(f), np.max(h)) / initial_data.sup_value)
