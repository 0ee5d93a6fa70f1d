"""Pure-NumPy integrator kernel (fallback backend).

Implements the same contract as the compiled `_kernels` extension: an
adaptive embedded Dormand-Prince 5(4) step loop over one smooth coefficient
interval, with the drive coefficients evaluated inline from the packed
segment row.  `floqryd.kernel` picks this module when the extension is not
built (or when FLOQRYD_KERNEL=py).

State layout: row-major flattened complex matrix.  Mode 0 integrates the
master equation on vec(rho) (commutator plus a precomputed dissipator
superoperator); mode 1 integrates the Schrodinger equation column-wise on a
(d x m) matrix, used for propagators.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "numpy"

STATUS_OK = 0
STATUS_UNDERFLOW = 1

_H_MIN = 1e-12

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def eval_coefficients(t, seg, ram_a, ram_b, pairs, out):
    """Fill ``out`` with [1, Delta(t), Omega(t), V_p(t)...] for one segment."""
    kind = int(seg[2])
    if kind == 2:  # laser free
        delta = 0.0
        rabi = 0.0
    elif kind == 0:  # static
        delta = seg[3]
        rabi = seg[7]
    elif kind == 1:  # ffm
        ph = seg[5] * (t - seg[6])
        delta = seg[3] + seg[4] * math.sin(ph)
        rabi = seg[7]
        factor = 1.0
        for h in range(ram_a.shape[0]):
            if ram_a[h] != 0.0 or ram_b[h] != 0.0:
                factor += ram_a[h] * math.sin((h + 1) * ph) + ram_b[h] * math.cos((h + 1) * ph)
        rabi *= factor
    else:  # stirap
        alpha = seg[8] * math.tanh(-seg[9] * (t - seg[11]) + seg[10]) + seg[12]
        if alpha < 0.0:
            alpha = 0.0
        delta = alpha * seg[5] * math.sin(seg[5] * (t - seg[6]))
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
    return out


def _rhs(t, y, out, dim, ncols, terms, seg, ram_a, ram_b, pairs, diss, mode, cbuf):
    eval_coefficients(t, seg, ram_a, ram_b, pairs, cbuf)
    h = np.tensordot(cbuf, terms, axes=1)
    if mode == 0:
        rho = y.reshape(dim, dim)
        comm = h @ rho
        comm -= rho @ h
        np.multiply(comm.reshape(-1), -1j, out=out)
        if diss is not None:
            out += diss @ y
    else:
        psi = y.reshape(dim, ncols)
        np.multiply((h @ psi).reshape(-1), -1j, out=out)
    return out


def integrate_interval(y, t0, t1, atol, h0, max_step, terms, seg, ram_a, ram_b, pairs, diss, mode, ncols):
    """Advance ``y`` in place from t0 to t1 over one smooth interval.

    Returns (suggested next step, status, accepted steps, rhs evaluations).
    """
    dim = terms.shape[1]
    n = y.shape[0]
    k = np.empty((7, n), dtype=complex)
    ytmp = np.empty(n, dtype=complex)
    cbuf = np.empty(terms.shape[0])
    args = (dim, ncols, terms, seg, ram_a, ram_b, pairs, diss, mode, cbuf)

    t = t0
    h = min(h0, max_step, t1 - t0)
    if h <= 0:
        return h0, STATUS_OK, 0, 0
    _rhs(t, y, k[0], *args)
    n_rhs = 1
    n_steps = 0
    while t < t1 - 1e-14:
        h = min(h, max_step, t1 - t)
        if h < _H_MIN:
            return h, STATUS_UNDERFLOW, n_steps, n_rhs
        for stage in range(1, 7):
            np.copyto(ytmp, y)
            a = _A[stage]
            for j in range(stage):
                if a[j] != 0.0:
                    ytmp += (h * a[j]) * k[j]
            _rhs(t + _C[stage] * h, ytmp, k[stage], *args)
            n_rhs += 1
        err_vec = (h * _E[0]) * k[0]
        for j in range(2, 7):
            if _E[j] != 0.0:
                err_vec += (h * _E[j]) * k[j]
        err = float(np.max(np.abs(err_vec.real) + np.abs(err_vec.imag)))
        if err <= atol:
            # ytmp currently holds y7 = y5 (FSAL: last stage evaluated at y5)
            np.copyto(y, ytmp)
            np.copyto(k[0], k[6])
            t += h
            n_steps += 1
            scale = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (atol / err) ** 0.2))
            h *= scale
        else:
            h *= max(0.1, 0.9 * (atol / err) ** 0.2)
    return h, STATUS_OK, n_steps, n_rhs
