# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the per-atom hot loops.

Signatures and arithmetic mirror core._python; see that module for the
reference semantics.
"""

import numpy as np

from libc.math cimport atan2, cos, sin, M_PI

ctypedef double complex dc

cdef double TWO_PI = 2.0 * M_PI


cdef void _full_t(dc[:, ::1] a, dc[:, ::1] b, dc[::1] eph, dc[:, ::1] t):
    # t = A diag(eph) B, refreshed from scratch
    cdef Py_ssize_t k = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t kk, j, i
    cdef dc ae
    for kk in range(k):
        for j in range(k):
            t[kk, j] = 0
    for kk in range(k):
        for i in range(n):
            ae = a[kk, i] * eph[i]
            for j in range(k):
                t[kk, j] = t[kk, j] + ae * b[i, j]


def sweep_phases(dc[:, ::1] a, dc[:, ::1] b, double alpha, double[::1] theta,
                 bint incremental=False):
    """Gauss-Seidel closed-form phase sweep; updates theta in place."""
    cdef Py_ssize_t k = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t kk, j, idx
    cdef dc[:, ::1] t = np.empty((k, k), dtype=complex)
    cdef dc[::1] eph = np.empty(n, dtype=complex)
    cdef dc ln, ge, hf, old_ph, new_ph
    cdef double x, y, new_theta
    cdef int skipped = 0

    for idx in range(n):
        eph[idx] = cos(theta[idx]) + 1j * sin(theta[idx])
    if incremental:
        _full_t(a, b, eph, t)

    for idx in range(n):
        if not incremental:
            _full_t(a, b, eph, t)
        old_ph = eph[idx]
        ge = 0
        hf = 0
        for kk in range(k):
            hf = hf + a[kk, idx] * b[idx, kk]
            for j in range(k):
                ln = a[kk, idx] * b[idx, j]
                ge = ge + ln.conjugate() * (t[kk, j] - ln * old_ph)
        hf = hf * alpha
        y = ge.imag + hf.imag  # e + f
        x = ge.real - hf.real  # g - h
        if x == 0.0 and y == 0.0:
            skipped += 1
            continue
        new_theta = atan2(y, x) + M_PI
        if new_theta >= TWO_PI:
            new_theta -= TWO_PI
        theta[idx] = new_theta
        new_ph = cos(new_theta) + 1j * sin(new_theta)
        if incremental:
            for kk in range(k):
                for j in range(k):
                    t[kk, j] = t[kk, j] + a[kk, idx] * b[idx, j] * (new_ph - old_ph)
        eph[idx] = new_ph
    return skipped


def shape_grads_film_layer1(dc[:, ::1] h, dc[::1] phi2, dc[:, ::1] w2,
                            dc[::1] phi1, dc[:, ::1] w1,
                            double[:, ::1] dfac12, double[:, ::1] dfac01,
                            double alpha):
    cdef Py_ssize_t k = h.shape[0], n = h.shape[1], m = w1.shape[1]
    cdef Py_ssize_t idx, kk, i, i2, q
    cdef dc[:, ::1] d = np.empty((k, n), dtype=complex)
    cdef dc[:, ::1] ew1 = np.empty((n, m), dtype=complex)
    cdef dc[:, ::1] t1 = np.empty((k, n), dtype=complex)
    cdef dc[:, ::1] c = np.empty((k, m), dtype=complex)
    cdef dc[::1] u = np.empty(k, dtype=complex)
    cdef dc[::1] wc = np.empty(k, dtype=complex)
    cdef double[::1] grads = np.empty(n, dtype=float)
    cdef dc dv, tv, acc, term, dcv, wv
    for kk in range(k):
        for i in range(n):
            d[kk, i] = h[kk, i] * phi2[i]
    for i in range(n):
        for q in range(m):
            ew1[i, q] = phi1[i] * w1[i, q]

    for idx in range(n):
        # rebuild the cascade seen by this atom: t1 = d w2, c = t1 ew1 - alpha I
        for kk in range(k):
            for i2 in range(n):
                t1[kk, i2] = 0
            for i in range(n):
                dv = d[kk, i]
                for i2 in range(n):
                    t1[kk, i2] = t1[kk, i2] + dv * w2[i, i2]
            for q in range(m):
                c[kk, q] = 0
            for i2 in range(n):
                tv = t1[kk, i2]
                for q in range(m):
                    c[kk, q] = c[kk, q] + tv * ew1[i2, q]
        for kk in range(min(k, m)):
            c[kk, kk] = c[kk, kk] - alpha
        # u = d (dW2 column idx), wc = d (w2 column idx) phi1[idx]
        for kk in range(k):
            u[kk] = 0
            wc[kk] = 0
        for i in range(n):
            wv = w2[i, idx]
            dcv = -1j * wv * dfac12[i, idx]
            for kk in range(k):
                u[kk] = u[kk] + d[kk, i] * dcv
                wc[kk] = wc[kk] + d[kk, i] * wv
        for kk in range(k):
            wc[kk] = wc[kk] * phi1[idx]
        term = 0
        for q in range(m):
            acc = 0
            for kk in range(k):
                acc = acc + c[kk, q].conjugate() * u[kk]
            term = term + phi1[idx] * w1[idx, q] * acc
            acc = 0
            for kk in range(k):
                acc = acc + c[kk, q].conjugate() * wc[kk]
            term = term + 1j * w1[idx, q] * dfac01[idx, q] * acc
        grads[idx] = 2.0 * term.real
    return np.asarray(grads)


def shape_grads_film_layer2(dc[:, ::1] h, double[::1] vy, double k_c,
                            dc[::1] phi2, dc[:, ::1] w2,
                            dc[::1] phi1, dc[:, ::1] w1,
                            double[:, ::1] dfac12, double alpha):
    cdef Py_ssize_t k = h.shape[0], n = h.shape[1], m = w1.shape[1]
    cdef Py_ssize_t idx, kk, i, i2, q
    cdef dc[:, ::1] d = np.empty((k, n), dtype=complex)
    cdef dc[:, ::1] ew1 = np.empty((n, m), dtype=complex)
    cdef dc[:, ::1] t1 = np.empty((k, n), dtype=complex)
    cdef dc[:, ::1] c = np.empty((k, m), dtype=complex)
    cdef dc[::1] r = np.empty(m, dtype=complex)
    cdef dc[::1] rowb = np.empty(m, dtype=complex)
    cdef double[::1] grads = np.empty(n, dtype=float)
    cdef dc dv, tv, acc_a, acc_b, term, wv, dwv
    for kk in range(k):
        for i in range(n):
            d[kk, i] = h[kk, i] * phi2[i]
    for i in range(n):
        for q in range(m):
            ew1[i, q] = phi1[i] * w1[i, q]

    for idx in range(n):
        for kk in range(k):
            for i2 in range(n):
                t1[kk, i2] = 0
            for i in range(n):
                dv = d[kk, i]
                for i2 in range(n):
                    t1[kk, i2] = t1[kk, i2] + dv * w2[i, i2]
            for q in range(m):
                c[kk, q] = 0
            for i2 in range(n):
                tv = t1[kk, i2]
                for q in range(m):
                    c[kk, q] = c[kk, q] + tv * ew1[i2, q]
        for kk in range(min(k, m)):
            c[kk, kk] = c[kk, kk] - alpha
        # r = phi2[idx] w2[idx,:] ew1, rowb = (j w2[idx,:] dfac12[idx,:]) ew1
        for q in range(m):
            r[q] = 0
            rowb[q] = 0
        for i in range(n):
            wv = w2[idx, i]
            dwv = 1j * wv * dfac12[idx, i]
            for q in range(m):
                r[q] = r[q] + wv * ew1[i, q]
                rowb[q] = rowb[q] + dwv * ew1[i, q]
        for q in range(m):
            r[q] = r[q] * phi2[idx]
        term = 0
        for q in range(m):
            acc_a = 0
            acc_b = 0
            for kk in range(k):
                acc_a = acc_a + c[kk, q].conjugate() * (1j * k_c * vy[kk] * h[kk, idx])
                acc_b = acc_b + c[kk, q].conjugate() * (phi2[idx] * h[kk, idx])
            term = term + r[q] * acc_a + rowb[q] * acc_b
        grads[idx] = 2.0 * term.real
    return np.asarray(grads)


def shape_grads_fim(dc[:, ::1] h, double[::1] vy, double k_c,
                    dc[::1] phi1, dc[:, ::1] w1, double[:, ::1] dfac01,
                    double alpha):
    cdef Py_ssize_t k = h.shape[0], n = h.shape[1], m = w1.shape[1]
    cdef Py_ssize_t idx, kk, i, q
    cdef dc[:, ::1] dph = np.empty((k, n), dtype=complex)
    cdef dc[:, ::1] c = np.empty((k, m), dtype=complex)
    cdef double[::1] grads = np.empty(n, dtype=float)
    cdef dc dv, acc_a, acc_b, term
    for kk in range(k):
        for i in range(n):
            dph[kk, i] = h[kk, i] * phi1[i]

    for idx in range(n):
        for kk in range(k):
            for q in range(m):
                c[kk, q] = 0
            for i in range(n):
                dv = dph[kk, i]
                for q in range(m):
                    c[kk, q] = c[kk, q] + dv * w1[i, q]
        for kk in range(min(k, m)):
            c[kk, kk] = c[kk, kk] - alpha
        term = 0
        for q in range(m):
            acc_a = 0
            acc_b = 0
            for kk in range(k):
                acc_a = acc_a + c[kk, q].conjugate() * (1j * k_c * vy[kk] * h[kk, idx])
                acc_b = acc_b + c[kk, q].conjugate() * (phi1[idx] * h[kk, idx])
            term = term + phi1[idx] * w1[idx, q] * acc_a \
                 + 1j * w1[idx, q] * dfac01[idx, q] * acc_b
        grads[idx] = 2.0 * term.real
    return np.asarray(grads)
