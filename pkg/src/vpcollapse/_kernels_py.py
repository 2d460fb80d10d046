"""Pure numpy implementations of the hot loops.

Signatures mirror the compiled module ``_kernels_c``.  All updates are in
place and elementwise, so results do not depend on how the particle range is
split across calls.
"""
import numpy as np

NAME = "python"


def radii(pos, out):
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    np.sqrt(x * x + y * y + z * z, out=out)


def _inv_r3(pos, m_enc, softening):
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    r2 = x * x + y * y + z * z + softening * softening
    with np.errstate(divide="ignore", invalid="ignore"):
        c = m_enc / (r2 * np.sqrt(r2))
    return np.where(r2 > 0.0, c, 0.0)


def kick(vel, pos, m_enc, h, softening):
    """``v -= h * m_enc * x / |x|^3`` (Plummer-softened if ``softening > 0``)."""
    c = h * _inv_r3(pos, m_enc, softening)
    vel -= c[:, None] * pos


def drift(pos, vel, h):
    pos += h * vel


def _history_mass(times, radii2d, mass2d, n_snap, s, r):
    k = np.searchsorted(times[:n_snap], s, side="right") - 1
    k = min(max(int(k), 0), n_snap - 2) if n_snap > 1 else 0
    out = np.zeros_like(r)
    if n_snap == 1:
        idx = np.searchsorted(radii2d[0], r, side="right") - 1
        return np.where(idx >= 0, mass2d[0][np.maximum(idx, 0)], 0.0)
    t0, t1 = times[k], times[k + 1]
    th = (s - t0) / (t1 - t0)
    for j, wgt in ((k, 1.0 - th), (k + 1, th)):
        idx = np.searchsorted(radii2d[j], r, side="right") - 1
        out += wgt * np.where(idx >= 0, mass2d[j][np.maximum(idx, 0)], 0.0)
    return out


def _history_accel(times, radii2d, mass2d, n_snap, s, x, softening):
    x0, x1, x2 = x[:, 0], x[:, 1], x[:, 2]
    r2 = x0 * x0 + x1 * x1 + x2 * x2
    m = _history_mass(times, radii2d, mass2d, n_snap, s, np.sqrt(r2))
    r2 = r2 + softening * softening
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(r2 > 0.0, m / (r2 * np.sqrt(r2)), 0.0)
    return -c[:, None] * x


def history_backtrace(times, radii2d, mass2d, n_snap, x, v, t, n_steps, softening):
    """RK4 from time ``t`` down to 0 in ``n_steps`` equal steps, in place."""
    if n_steps == 0:
        return
    h = -t / n_steps

    def acc(s, xx):
        return _history_accel(times, radii2d, mass2d, n_snap, s, xx, softening)

    for i in range(n_steps):
        s = t + i * h
        k1x, k1v = v, acc(s, x)
        k2x, k2v = v + 0.5 * h * k1v, acc(s + 0.5 * h, x + 0.5 * h * k1x)
        k3x, k3v = v + 0.5 * h * k2v, acc(s + 0.5 * h, x + 0.5 * h * k2x)
        k4x, k4v = v + h * k3v, acc(s + h, x + h * k3x)
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
