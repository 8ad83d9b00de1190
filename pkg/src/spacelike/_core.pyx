# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the two hot loops; see ``_fallback.py`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot, copysign
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double EPS = np.finfo(float).eps
cdef int QL_MAX_SWEEPS = 60
cdef double NORM_FLOOR = 1e-30


def hermitian_eigvals_batch(h):
    """Eigenvalues of a stack of Hermitian matrices, ascending; see the fallback."""
    cdef double complex[:, :, ::1] src = np.ascontiguousarray(h, dtype=np.complex128)
    cdef Py_ssize_t batch = src.shape[0], n = src.shape[1]
    eigs_arr = np.empty((batch, n))
    failed_arr = np.zeros(batch, dtype=np.int8)
    cdef double[:, ::1] eigs = eigs_arr
    cdef signed char[::1] failed = failed_arr
    cdef double complex[:, ::1] a = np.empty((n, n), dtype=np.complex128)
    cdef double complex[::1] v = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] q = np.empty(n, dtype=np.complex128)
    cdef double[::1] d = np.empty(n)
    cdef double[::1] e = np.empty(n)
    cdef Py_ssize_t b, i, j
    cdef double anorm
    for b in range(batch):
        anorm = 0.0
        for i in range(n):
            for j in range(i + 1):
                a[i, j] = src[b, i, j]
                if i == j:
                    a[i, i] = src[b, i, i].real
                else:
                    a[j, i] = src[b, i, j].conjugate()
                if _abs2(a[i, j]) > anorm * anorm:
                    anorm = sqrt(_abs2(a[i, j]))
        _tridiagonalize(a, v, q, d, e, n)
        failed[b] = 0 if _tql(d, e, n, anorm) else 1
        _insertion_sort(d, n)
        for i in range(n):
            eigs[b, i] = d[i]
    return eigs_arr, failed_arr


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _tridiagonalize(double complex[:, ::1] a, double complex[::1] v, double complex[::1] p,
                          double[::1] d, double[::1] e, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k, i, j
    cdef double sigma, norm, ax0, beta, vnorm2
    cdef double complex x0, phase, kappa, acc
    for k in range(n - 2):
        sigma = 0.0
        for i in range(k + 2, n):
            sigma = sigma + _abs2(a[i, k])
        if sigma == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = sqrt(_abs2(x0))
        norm = sqrt(ax0 * ax0 + sigma)
        phase = x0 / ax0 if ax0 != 0.0 else 1.0
        for i in range(n):
            v[i] = 0.0
        v[k + 1] = x0 + phase * norm
        vnorm2 = _abs2(v[k + 1]) + sigma
        for i in range(k + 2, n):
            v[i] = a[i, k]
        beta = 2.0 / vnorm2
        # p = beta A v on indices k..n-1
        for i in range(k, n):
            acc = 0.0
            for j in range(k + 1, n):
                acc = acc + a[i, j] * v[j]
            p[i] = beta * acc
        acc = 0.0
        for i in range(k + 1, n):
            acc = acc + v[i].conjugate() * p[i]
        kappa = 0.5 * beta * acc
        for i in range(k, n):
            p[i] = p[i] - kappa * v[i]
        for i in range(k, n):
            for j in range(k, n):
                a[i, j] = a[i, j] - v[i] * p[j].conjugate() - p[i] * v[j].conjugate()
    for i in range(n):
        d[i] = a[i, i].real
    for i in range(n - 1):
        e[i] = sqrt(_abs2(a[i + 1, i]))
    if n > 0:
        e[n - 1] = 0.0


cdef bint _tql(double[::1] d, double[::1] e, Py_ssize_t n, double anorm) noexcept nogil:
    cdef Py_ssize_t l, m, i
    cdef int sweeps
    cdef double dd, g, r, s, c, p, f, b
    cdef double floor = NORM_FLOOR * anorm
    cdef bint underflow
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= EPS * dd or fabs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if sweeps == QL_MAX_SWEEPS:
                return False
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


cdef void _insertion_sort(double[::1] d, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = d[i]
        j = i - 1
        while j >= 0 and d[j] > key:
            d[j + 1] = d[j]
            j -= 1
        d[j + 1] = key


def particle_events(cnp.int64_t[:, ::1] state, const int[::1] events,
                    const cnp.int64_t[::1] offsets, int n_levels, bint check=True):
    """Apply clock rings to a batch of interlaced configurations; see the fallback."""
    cdef Py_ssize_t n_particles = state.shape[1]
    cdef int *level = <int *> malloc(n_particles * sizeof(int))
    cdef int *index = <int *> malloc(n_particles * sizeof(int))
    cdef Py_ssize_t r, t, j
    cdef int m, k, mm, ev, col
    cdef cnp.int64_t pos
    cdef long violations = 0
    if level == NULL or index == NULL:
        free(level)
        free(index)
        raise MemoryError()
    col = 0
    for m in range(1, n_levels + 1):
        for k in range(1, m + 1):
            level[col] = m
            index[col] = k
            col += 1
    with nogil:
        for r in range(state.shape[0]):
            for t in range(offsets[r], offsets[r + 1]):
                ev = events[t]
                m = level[ev]
                k = index[ev]
                pos = state[r, ev]
                if k <= m - 1 and pos + 1 == state[r, ev - m + 1]:
                    continue
                state[r, ev] = pos + 1
                j = ev + m + 1
                mm = m + 1
                while mm <= n_levels and state[r, j] == pos:
                    state[r, j] = pos + 1
                    j += mm + 1
                    mm += 1
                if check and not _interlaced(state, r, n_levels):
                    violations += 1
    free(level)
    free(index)
    return violations


cdef bint _interlaced(cnp.int64_t[:, ::1] x, Py_ssize_t r, int n_levels) noexcept nogil:
    cdef int m, k, base, up
    for m in range(1, n_levels):
        base = m * (m - 1) // 2
        up = m * (m + 1) // 2
        for k in range(m):
            if not (x[r, up + k] < x[r, base + k] <= x[r, up + k + 1]):
                return False
    return True
