# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integrator kernel.

Mirrors `_kernels_py` exactly: adaptive Dormand-Prince 5(4) over one smooth
coefficient interval, drive coefficients evaluated inline.  See that module
for the contract; this one only makes the inner loops cheap.
"""
from libc.math cimport sin, cos, tanh, fabs, pow

import numpy as np

BACKEND = "cython"

STATUS_OK = 0
STATUS_UNDERFLOW = 1

cdef double H_MIN = 1e-12

cdef double[7] C_NODES
cdef double[7][6] A_TAB
cdef double[7] E_TAB
C_NODES[0] = 0.0; C_NODES[1] = 1.0/5; C_NODES[2] = 3.0/10; C_NODES[3] = 4.0/5
C_NODES[4] = 8.0/9; C_NODES[5] = 1.0; C_NODES[6] = 1.0
cdef int _i, _j
for _i in range(7):
    for _j in range(6):
        A_TAB[_i][_j] = 0.0
A_TAB[1][0] = 1.0/5
A_TAB[2][0] = 3.0/40;        A_TAB[2][1] = 9.0/40
A_TAB[3][0] = 44.0/45;       A_TAB[3][1] = -56.0/15;      A_TAB[3][2] = 32.0/9
A_TAB[4][0] = 19372.0/6561;  A_TAB[4][1] = -25360.0/2187; A_TAB[4][2] = 64448.0/6561; A_TAB[4][3] = -212.0/729
A_TAB[5][0] = 9017.0/3168;   A_TAB[5][1] = -355.0/33;     A_TAB[5][2] = 46732.0/5247; A_TAB[5][3] = 49.0/176;  A_TAB[5][4] = -5103.0/18656
A_TAB[6][0] = 35.0/384;      A_TAB[6][1] = 0.0;           A_TAB[6][2] = 500.0/1113;   A_TAB[6][3] = 125.0/192; A_TAB[6][4] = -2187.0/6784; A_TAB[6][5] = 11.0/84
E_TAB[0] = 71.0/57600; E_TAB[1] = 0.0; E_TAB[2] = -71.0/16695; E_TAB[3] = 71.0/1920
E_TAB[4] = -17253.0/339200; E_TAB[5] = 22.0/525; E_TAB[6] = -1.0/40


cdef void _eval_coeffs(double t, double[::1] seg, double[::1] ram_a, double[::1] ram_b,
                       double[:, ::1] pairs, double[::1] out) noexcept:
    cdef int kind = <int>seg[2]
    cdef double delta, rabi, ph, factor, alpha
    cdef double rx, ry, rz, r2
    cdef Py_ssize_t h, p
    if kind == 2:
        delta = 0.0
        rabi = 0.0
    elif kind == 0:
        delta = seg[3]
        rabi = seg[7]
    elif kind == 1:
        ph = seg[5] * (t - seg[6])
        delta = seg[3] + seg[4] * sin(ph)
        rabi = seg[7]
        factor = 1.0
        for h in range(ram_a.shape[0]):
            if ram_a[h] != 0.0 or ram_b[h] != 0.0:
                factor += ram_a[h] * sin((h + 1) * ph) + ram_b[h] * cos((h + 1) * ph)
        rabi = rabi * factor
    else:
        alpha = seg[8] * tanh(-seg[9] * (t - seg[11]) + seg[10]) + seg[12]
        if alpha < 0.0:
            alpha = 0.0
        delta = alpha * seg[5] * sin(seg[5] * (t - seg[6]))
        rabi = seg[7]
    out[0] = 1.0
    out[1] = delta
    out[2] = rabi
    for p in range(pairs.shape[0]):
        rx = pairs[p, 0] + pairs[p, 3] * t
        ry = pairs[p, 1] + pairs[p, 4] * t
        rz = pairs[p, 2] + pairs[p, 5] * t
        r2 = rx * rx + ry * ry + rz * rz
        out[3 + p] = pairs[p, 6] / (r2 * r2 * r2)


def eval_coefficients(double t, double[::1] seg, double[::1] ram_a, double[::1] ram_b,
                      double[:, ::1] pairs, double[::1] out):
    _eval_coeffs(t, seg, ram_a, ram_b, pairs, out)
    return np.asarray(out)


cdef void _rhs(double t, double complex[::1] y, double complex[::1] out,
               int dim, int ncols,
               double complex[:, :, ::1] terms, double[::1] seg,
               double[::1] ram_a, double[::1] ram_b, double[:, ::1] pairs,
               double complex[:, ::1] diss, bint has_diss, int mode,
               double[::1] cbuf, double complex[:, ::1] hbuf) noexcept:
    cdef Py_ssize_t k, i, j, n, c
    cdef int nterms = terms.shape[0]
    cdef double complex acc
    cdef double ck
    _eval_coeffs(t, seg, ram_a, ram_b, pairs, cbuf)
    for i in range(dim):
        for j in range(dim):
            acc = 0
            for k in range(nterms):
                ck = cbuf[k]
                if ck != 0.0:
                    acc = acc + ck * terms[k, i, j]
            hbuf[i, j] = acc
    n = y.shape[0]
    if mode == 0:
        # out = -i (H rho - rho H) + D y, rho row-major dim x dim
        for i in range(dim):
            for j in range(dim):
                acc = 0
                for k in range(dim):
                    acc = acc + hbuf[i, k] * y[k * dim + j] - y[i * dim + k] * hbuf[k, j]
                out[i * dim + j] = -1j * acc
        if has_diss:
            for i in range(n):
                acc = 0
                for j in range(n):
                    acc = acc + diss[i, j] * y[j]
                out[i] = out[i] + acc
    else:
        for i in range(dim):
            for c in range(ncols):
                acc = 0
                for k in range(dim):
                    acc = acc + hbuf[i, k] * y[k * ncols + c]
                out[i * ncols + c] = -1j * acc


def integrate_interval(double complex[::1] y, double t0, double t1, double atol,
                       double h0, double max_step,
                       double complex[:, :, ::1] terms, double[::1] seg,
                       double[::1] ram_a, double[::1] ram_b, double[:, ::1] pairs,
                       diss, int mode, int ncols):
    """Advance ``y`` in place from t0 to t1; see `_kernels_py` for semantics."""
    cdef int dim = terms.shape[1]
    cdef Py_ssize_t n = y.shape[0]
    cdef double complex[:, ::1] kbuf = np.empty((7, n), dtype=complex)
    cdef double complex[::1] ytmp = np.empty(n, dtype=complex)
    cdef double complex[:, ::1] hbuf = np.empty((dim, dim), dtype=complex)
    cdef double[::1] cbuf = np.empty(terms.shape[0])
    cdef double complex[:, ::1] dview
    cdef bint has_diss = diss is not None
    if has_diss:
        dview = diss
    else:
        dview = np.zeros((1, 1), dtype=complex)

    cdef double t = t0
    cdef double h = h0
    cdef double err, scale, emag
    cdef double aj
    cdef double complex acc_err
    cdef Py_ssize_t i, j, stage
    cdef long n_steps = 0, n_rhs = 0
    if max_step < h:
        h = max_step
    if t1 - t0 < h:
        h = t1 - t0
    if h <= 0:
        return h0, STATUS_OK, 0, 0

    _rhs(t, y, kbuf[0], dim, ncols, terms, seg, ram_a, ram_b, pairs, dview, has_diss, mode, cbuf, hbuf)
    n_rhs += 1
    while t < t1 - 1e-14:
        if max_step < h:
            h = max_step
        if t1 - t < h:
            h = t1 - t
        if h < H_MIN:
            return h, STATUS_UNDERFLOW, n_steps, n_rhs
        for stage in range(1, 7):
            for i in range(n):
                ytmp[i] = y[i]
            for j in range(stage):
                aj = A_TAB[stage][j]
                if aj != 0.0:
                    for i in range(n):
                        ytmp[i] = ytmp[i] + (h * aj) * kbuf[j, i]
            _rhs(t + C_NODES[stage] * h, ytmp, kbuf[stage], dim, ncols, terms, seg,
                 ram_a, ram_b, pairs, dview, has_diss, mode, cbuf, hbuf)
            n_rhs += 1
        err = 0.0
        for i in range(n):
            acc_err = (h * E_TAB[0]) * kbuf[0, i]
            acc_err = acc_err + (h * E_TAB[2]) * kbuf[2, i]
            acc_err = acc_err + (h * E_TAB[3]) * kbuf[3, i]
            acc_err = acc_err + (h * E_TAB[4]) * kbuf[4, i]
            acc_err = acc_err + (h * E_TAB[5]) * kbuf[5, i]
            acc_err = acc_err + (h * E_TAB[6]) * kbuf[6, i]
            emag = fabs(acc_err.real) + fabs(acc_err.imag)
            if emag > err:
                err = emag
        if err <= atol:
            for i in range(n):
                y[i] = ytmp[i]
                kbuf[0, i] = kbuf[6, i]
            t = t + h
            n_steps += 1
            if err == 0.0:
                scale = 5.0
            else:
                scale = 0.9 * pow(atol / err, 0.2)
                if scale > 5.0:
                    scale = 5.0
                elif scale < 0.2:
                    scale = 0.2
            h = h * scale
        else:
            scale = 0.9 * pow(atol / err, 0.2)
            if scale < 0.1:
                scale = 0.1
            h = h * scale
    return h, STATUS_OK, n_steps, n_rhs
