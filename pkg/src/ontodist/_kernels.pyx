# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Hermitian eigenproblems are solved by cyclic Jacobi on the real symmetric
embedding [[X, -Y], [Y, X]] of H = X + iY, so matrix functions f(H) are read
off the embedding directly and no eigenvector pairing is needed.
Matrices are limited to dimension MAXD.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef enum:
    MAXD = 8
    MAXE = 16   # 2 * MAXD

ctypedef double complex cplx


cdef void _jacobi(double* a, int n, double* w, double* v) noexcept nogil:
    """Eigen-decompose symmetric a (n x n, row-major, destroyed) into w, v[:, k]."""
    cdef int p, q, k, sweep
    cdef double off, tot, apq, theta, t, c, s, x, y
    for p in range(n):
        for q in range(n):
            v[p * n + q] = 1.0 if p == q else 0.0
    for sweep in range(60):
        off = 0.0
        tot = 0.0
        for p in range(n):
            tot += a[p * n + p] * a[p * n + p]
            for q in range(p + 1, n):
                off += a[p * n + q] * a[p * n + q]
        if off == 0.0 or off < 1e-32 * (tot + off):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if fabs(apq) < 1e-300:
                    continue
                theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                elif theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = a[k * n + p]
                    y = a[k * n + q]
                    a[k * n + p] = c * x - s * y
                    a[k * n + q] = s * x + c * y
                for k in range(n):
                    x = a[p * n + k]
                    y = a[q * n + k]
                    a[p * n + k] = c * x - s * y
                    a[q * n + k] = s * x + c * y
                for k in range(n):
                    x = v[k * n + p]
                    y = v[k * n + q]
                    v[k * n + p] = c * x - s * y
                    v[k * n + q] = s * x + c * y
    for p in range(n):
        w[p] = a[p * n + p]


cdef void _embed(const cplx* h, int d, double* e) noexcept nogil:
    cdef int i, j, n = 2 * d
    cdef double re, im
    for i in range(d):
        for j in range(d):
            # Hermitian part only
            re = 0.5 * (h[i * d + j].real + h[j * d + i].real)
            im = 0.5 * (h[i * d + j].imag - h[j * d + i].imag)
            e[i * n + j] = re
            e[(i + d) * n + (j + d)] = re
            e[(i + d) * n + j] = im
            e[i * n + (j + d)] = -im


cdef double _min_eig(const cplx* h, int d) noexcept nogil:
    cdef double e[MAXE * MAXE]
    cdef double w[MAXE]
    cdef double v[MAXE * MAXE]
    cdef int k, n = 2 * d
    cdef double m
    _embed(h, d, e)
    _jacobi(e, n, w, v)
    m = w[0]
    for k in range(1, n):
        if w[k] < m:
            m = w[k]
    return m


cdef int _inv_sqrt(const cplx* h, int d, double eps, cplx* out, cplx* kern) noexcept nogil:
    """out = h^(-1/2) on eigenvalues >= eps; kern = projector on the rest.

    Returns the kernel dimension."""
    cdef double e[MAXE * MAXE]
    cdef double w[MAXE]
    cdef double v[MAXE * MAXE]
    cdef double f[MAXE]
    cdef double g[MAXE]
    cdef int i, j, k, n = 2 * d, nker = 0
    cdef double fr, fi, kr, ki
    _embed(h, d, e)
    _jacobi(e, n, w, v)
    for k in range(n):
        if w[k] >= eps:
            f[k] = 1.0 / sqrt(w[k])
            g[k] = 0.0
        else:
            f[k] = 0.0
            g[k] = 1.0
            nker += 1
    for i in range(d):
        for j in range(d):
            fr = 0.0
            fi = 0.0
            kr = 0.0
            ki = 0.0
            for k in range(n):
                fr += v[i * n + k] * f[k] * v[j * n + k]
                fi += v[(i + d) * n + k] * f[k] * v[j * n + k]
                kr += v[i * n + k] * g[k] * v[j * n + k]
                ki += v[(i + d) * n + k] * g[k] * v[j * n + k]
            out[i * d + j] = fr + 1j * fi
            kern[i * d + j] = kr + 1j * ki
    return nker // 2


cdef inline void _mul(const cplx* a, const cplx* b, cplx* c, int d) noexcept nogil:
    cdef int i, j, k
    cdef cplx acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i * d + k] * b[k * d + j]
            c[i * d + j] = acc


cdef double _value(const cplx* r, const cplx* m, int n, int d) noexcept nogil:
    # sum_x Re Tr(R_x M_x), both Hermitian
    cdef int x, i, j, off
    cdef double v = 0.0
    for x in range(n):
        off = x * d * d
        for i in range(d):
            for j in range(d):
                v += (r[off + i * d + j] * m[off + j * d + i]).real
    return v


cdef double _certificate(const cplx* r, const cplx* m, int n, int d) noexcept nogil:
    cdef cplx y[MAXD * MAXD]
    cdef cplx t[MAXD * MAXD]
    cdef cplx z[MAXD * MAXD]
    cdef int x, i, dd = d * d
    cdef double gap = 0.0, lo
    for i in range(dd):
        y[i] = 0
    for x in range(n):
        _mul(r + x * dd, m + x * dd, t, d)
        for i in range(dd):
            y[i] = y[i] + t[i]
    for x in range(n):
        for i in range(dd):
            z[i] = y[i] - r[x * dd + i]
        lo = _min_eig(z, d)
        if -lo > gap:
            gap = -lo
    return gap


def certificate(cnp.ndarray r_in, cnp.ndarray m_in):
    """Largest violation of Y - R_x >= 0 with Y the Hermitian part of sum_x R_x M_x."""
    cdef cplx[:, :, ::1] r = np.ascontiguousarray(r_in, dtype=np.complex128)
    cdef cplx[:, :, ::1] m = np.ascontiguousarray(m_in, dtype=np.complex128)
    cdef int n = r.shape[0], d = r.shape[1]
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}")
    return _certificate(&r[0, 0, 0], &m[0, 0, 0], n, d)


def eigvalsh(cnp.ndarray h_in):
    """Ascending eigenvalues of a Hermitian matrix (Jacobi)."""
    cdef cplx[:, ::1] h = np.ascontiguousarray(h_in, dtype=np.complex128)
    cdef int d = h.shape[0], k
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}")
    cdef double e[MAXE * MAXE]
    cdef double w[MAXE]
    cdef double v[MAXE * MAXE]
    _embed(&h[0, 0], d, e)
    _jacobi(e, 2 * d, w, v)
    out = np.sort(np.array([w[k] for k in range(2 * d)]))
    return out[::2].copy()


def inv_sqrt(cnp.ndarray h_in, double eps=1e-12):
    """Pseudo-inverse square root of a PSD matrix and the projector on its kernel."""
    cdef cplx[:, ::1] h = np.ascontiguousarray(h_in, dtype=np.complex128)
    cdef int d = h.shape[0]
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}")
    out = np.empty((d, d), dtype=np.complex128)
    kern = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    cdef cplx[:, ::1] k = kern
    _inv_sqrt(&h[0, 0], d, eps, &o[0, 0], &k[0, 0])
    return out, kern


def fixed_point(cnp.ndarray r_in, cnp.ndarray m_in, double tol, double cert_tol,
                int max_iter, double eps, int check_every=8):
    """Iterate M_x <- G^-1/2 R_x M_x R_x G^-1/2 with G = sum_y R_y M_y R_y.

    Stops once the value change is below ``tol`` and the optimality
    certificate is within ``cert_tol``. Returns
    ``(M, value, iterations, gap, converged, regularized, max_decrease)``.
    """
    cdef cplx[:, :, ::1] r = np.ascontiguousarray(r_in, dtype=np.complex128)
    m_arr = np.array(m_in, dtype=np.complex128, order="C", copy=True)
    cdef cplx[:, :, ::1] m = m_arr
    cdef int n = r.shape[0], d = r.shape[1]
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}")
    cdef int dd = d * d, x, x2, i, it = 0, nker, last_check = -check_every
    cdef int converged = 0, regularized = 0
    cdef cplx g[MAXD * MAXD]
    cdef cplx gi[MAXD * MAXD]
    cdef cplx kern[MAXD * MAXD]
    cdef cplx t1[MAXD * MAXD]
    cdef cplx t2[MAXD * MAXD]
    cdef cplx* rp = &r[0, 0, 0]
    cdef cplx* mp = &m[0, 0, 0]
    cdef double value, prev, gap = -1.0, max_dec = 0.0
    with nogil:
        prev = _value(rp, mp, n, d)
        value = prev
        while it < max_iter:
            it += 1
            for i in range(dd):
                g[i] = 0
            for x in range(n):
                _mul(rp + x * dd, mp + x * dd, t1, d)
                _mul(t1, rp + x * dd, t2, d)
                for i in range(dd):
                    g[i] = g[i] + t2[i]
            nker = _inv_sqrt(g, d, eps, gi, kern)
            if nker > 0:
                regularized = 1
            for x in range(n):
                _mul(gi, rp + x * dd, t1, d)
                _mul(t1, mp + x * dd, t2, d)
                _mul(t2, rp + x * dd, t1, d)
                _mul(t1, gi, t2, d)
                for i in range(dd):
                    t1[i] = t2[i]
                # hermitize
                for i in range(d):
                    for x2 in range(d):
                        mp[x * dd + i * d + x2] = 0.5 * (t1[i * d + x2] + t1[x2 * d + i].conjugate())
            if nker > 0:
                for i in range(dd):
                    mp[i] = mp[i] + kern[i]
            value = _value(rp, mp, n, d)
            if prev - value > max_dec:
                max_dec = prev - value
            if fabs(value - prev) < tol and it - last_check >= check_every:
                last_check = it
                gap = _certificate(rp, mp, n, d)
                if gap <= cert_tol:
                    converged = 1
                    break
            prev = value
        if gap < 0.0 or not converged:
            gap = _certificate(rp, mp, n, d)
    return m_arr, value, it, gap, bool(converged), bool(regularized), max_dec


def ks_max_sums(cnp.ndarray points_in, cnp.ndarray axes_in, cnp.ndarray weights_in):
    """Sum and sum of squares over points of max_k sum_i w[i, k] * max(0, a_i . p)."""
    cdef double[:, ::1] pts = np.ascontiguousarray(points_in, dtype=np.float64)
    cdef double[:, ::1] ax = np.ascontiguousarray(axes_in, dtype=np.float64)
    cdef double[:, ::1] w = np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef Py_ssize_t npts = pts.shape[0], j
    cdef int m = ax.shape[0], nk = w.shape[1], i, k
    cdef double s = 0.0, s2 = 0.0, best, acc, dot
    dots_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] dots = dots_arr
    with nogil:
        for j in range(npts):
            for i in range(m):
                dot = ax[i, 0] * pts[j, 0] + ax[i, 1] * pts[j, 1] + ax[i, 2] * pts[j, 2]
                dots[i] = dot if dot > 0.0 else 0.0
            best = 0.0
            for k in range(nk):
                acc = 0.0
                for i in range(m):
                    acc = acc + w[i, k] * dots[i]
                if k == 0 or acc > best:
                    best = acc
            s += best
            s2 += best * best
    return s, s2
