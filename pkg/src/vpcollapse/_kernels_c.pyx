# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the particle kernels in ``_kernels_py``.

Each function releases the GIL, so the block-parallel drivers get real
concurrency.  Arithmetic is elementwise per particle and in the same order
as the numpy fallback.
"""
from libc.math cimport sqrt

NAME = "cython"


def radii(const double[:, ::1] pos, double[::1] out):
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef double x, y, z
    with nogil:
        for i in range(n):
            x = pos[i, 0]
            y = pos[i, 1]
            z = pos[i, 2]
            out[i] = sqrt(x * x + y * y + z * z)


def kick(double[:, ::1] vel, const double[:, ::1] pos, const double[::1] m_enc, double h,
         double softening):
    cdef Py_ssize_t i, n = pos.shape[0]
    cdef double x, y, z, r2, c
    cdef double eps2 = softening * softening
    with nogil:
        for i in range(n):
            x = pos[i, 0]
            y = pos[i, 1]
            z = pos[i, 2]
            r2 = x * x + y * y + z * z + eps2
            if r2 > 0.0:
                c = h * (m_enc[i] / (r2 * sqrt(r2)))
                vel[i, 0] -= c * x
                vel[i, 1] -= c * y
                vel[i, 2] -= c * z


def drift(double[:, ::1] pos, const double[:, ::1] vel, double h):
    cdef Py_ssize_t i, n = pos.shape[0]
    with nogil:
        for i in range(n):
            pos[i, 0] += h * vel[i, 0]
            pos[i, 1] += h * vel[i, 1]
            pos[i, 2] += h * vel[i, 2]


cdef inline Py_ssize_t _upper(const double[::1] a, Py_ssize_t n, double x) noexcept nogil:
    # first index with a[i] > x
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _step_mass(const double[:, ::1] radii2d, const double[:, ::1] mass2d,
                              Py_ssize_t j, Py_ssize_t n, double r) noexcept nogil:
    cdef Py_ssize_t idx = _upper(radii2d[j], n, r) - 1
    if idx < 0:
        return 0.0
    return mass2d[j, idx]


cdef struct Bracket:
    Py_ssize_t k
    double th


cdef inline Bracket _bracket(const double[::1] times, Py_ssize_t n_snap, double s) noexcept nogil:
    cdef Bracket b
    cdef Py_ssize_t k
    if n_snap == 1:
        b.k = 0
        b.th = 0.0
        return b
    k = _upper(times, n_snap, s) - 1
    if k < 0:
        k = 0
    if k > n_snap - 2:
        k = n_snap - 2
    b.k = k
    b.th = (s - times[k]) / (times[k + 1] - times[k])
    return b


cdef inline void _acc(const double[:, ::1] radii2d, const double[:, ::1] mass2d,
                      Py_ssize_t n, Py_ssize_t n_snap, Bracket b, double eps2,
                      double x0, double x1, double x2, double* a) noexcept nogil:
    cdef double r2 = x0 * x0 + x1 * x1 + x2 * x2
    cdef double r = sqrt(r2)
    cdef double m, c
    if n_snap == 1:
        m = _step_mass(radii2d, mass2d, 0, n, r)
    else:
        m = (1.0 - b.th) * _step_mass(radii2d, mass2d, b.k, n, r)
        m += b.th * _step_mass(radii2d, mass2d, b.k + 1, n, r)
    r2 = r2 + eps2
    c = m / (r2 * sqrt(r2)) if r2 > 0.0 else 0.0
    a[0] = -c * x0
    a[1] = -c * x1
    a[2] = -c * x2


def history_backtrace(const double[::1] times, const double[:, ::1] radii2d,
                      const double[:, ::1] mass2d, Py_ssize_t n_snap,
                      double[:, ::1] x, double[:, ::1] v, double t, Py_ssize_t n_steps,
                      double softening):
    """RK4 from time ``t`` down to 0 in ``n_steps`` equal steps, in place."""
    if n_steps == 0:
        return
    cdef Py_ssize_t n = radii2d.shape[1]
    cdef Py_ssize_t p, i, d, n_p = x.shape[0]
    cdef double h = -t / n_steps
    cdef double eps2 = softening * softening
    cdef double s
    cdef Bracket b0, bm, b1
    cdef double px[3]
    cdef double pv[3]
    cdef double k1x[3]
    cdef double k1v[3]
    cdef double k2x[3]
    cdef double k2v[3]
    cdef double k3x[3]
    cdef double k3v[3]
    cdef double k4x[3]
    cdef double k4v[3]
    with nogil:
        for i in range(n_steps):
            s = t + i * h
            b0 = _bracket(times, n_snap, s)
            bm = _bracket(times, n_snap, s + 0.5 * h)
            b1 = _bracket(times, n_snap, s + h)
            for p in range(n_p):
                for d in range(3):
                    px[d] = x[p, d]
                    pv[d] = v[p, d]
                    k1x[d] = pv[d]
                _acc(radii2d, mass2d, n, n_snap, b0, eps2, px[0], px[1], px[2], k1v)
                for d in range(3):
                    k2x[d] = pv[d] + 0.5 * h * k1v[d]
                _acc(radii2d, mass2d, n, n_snap, bm, eps2, px[0] + 0.5 * h * k1x[0],
                     px[1] + 0.5 * h * k1x[1], px[2] + 0.5 * h * k1x[2], k2v)
                for d in range(3):
                    k3x[d] = pv[d] + 0.5 * h * k2v[d]
                _acc(radii2d, mass2d, n, n_snap, bm, eps2, px[0] + 0.5 * h * k2x[0],
                     px[1] + 0.5 * h * k2x[1], px[2] + 0.5 * h * k2x[2], k3v)
                for d in range(3):
                    k4x[d] = pv[d] + h * k3v[d]
                _acc(radii2d, mass2d, n, n_snap, b1, eps2, px[0] + h * k3x[0],
                     px[1] + h * k3x[1], px[2] + h * k3x[2], k4v)
                for d in range(3):
                    x[p, d] = px[d] + h / 6.0 * (k1x[d] + 2.0 * k2x[d] + 2.0 * k3x[d] + k4x[d])
                    v[p, d] = pv[d] + h / 6.0 * (k1v[d] + 2.0 * k2v[d] + 2.0 * k3v[d] + k4v[d])
