# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels.

Mirror of ``_kernels_py.py``, operation-for-operation: both backends must
return bit-identical floats (built with -ffp-contract=off so the residual
arithmetic is not FMA-fused). Keep the two files in sync.
"""

from libc.math cimport fabs, sqrt

NORM_L1 = 0
NORM_L2 = 1

cdef double[8] _DIR_X = [1.0, -1.0, 0.0, 0.0, 1.0, 1.0, -1.0, -1.0]
cdef double[8] _DIR_Y = [0.0, 0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]


cdef inline double _objective(const double[::1] obs_x, const double[::1] obs_y,
                              const double[::1] dist, double px, double py,
                              int norm_code) nogil:
    cdef Py_ssize_t i, n = obs_x.shape[0]
    cdef double acc = 0.0
    cdef double dx, dy, r
    for i in range(n):
        dx = px - obs_x[i]
        dy = py - obs_y[i]
        r = sqrt(dx * dx + dy * dy) - dist[i]
        if norm_code == 0:
            acc += fabs(r)
        else:
            acc += r * r
    return acc / n


def objective_value(const double[::1] obs_x, const double[::1] obs_y,
                    const double[::1] dist, double px, double py, int norm_code):
    """Per-sample-normalized residual norm of point (px, py)."""
    return _objective(obs_x, obs_y, dist, px, py, norm_code)


def solve_pattern(const double[::1] obs_x, const double[::1] obs_y,
                  const double[::1] dist, double x0, double y0,
                  double step_init, double tol, long max_iter, int norm_code):
    """Compass/pattern search with step halving; see the pure-Python twin."""
    cdef double cx = x0
    cdef double cy = y0
    cdef double fc = _objective(obs_x, obs_y, dist, cx, cy, norm_code)
    cdef double step = step_init
    cdef long it = 0
    cdef double bf, bx, by, nx, ny, f
    cdef bint improved
    cdef int k
    with nogil:
        while it < max_iter:
            it += 1
            improved = False
            bf = fc
            bx = cx
            by = cy
            for k in range(8):
                nx = cx + step * _DIR_X[k]
                ny = cy + step * _DIR_Y[k]
                f = _objective(obs_x, obs_y, dist, nx, ny, norm_code)
                if f < bf or (improved and f == bf and (nx < bx or (nx == bx and ny < by))):
                    improved = True
                    bf = f
                    bx = nx
                    by = ny
            if improved:
                cx = bx
                cy = by
                fc = bf
            else:
                step *= 0.5
                if tol > 0.0 and step < tol:
                    break
    return cx, cy, fc, it
