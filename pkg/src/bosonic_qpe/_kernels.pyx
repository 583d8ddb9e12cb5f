# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: structured Lindblad RK4 and diagonal-cell bit
sampling.  Semantics mirror bosonic_qpe._kernels_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, pi, sin, sqrt

cnp.import_array()

ctypedef double complex cplx


cdef void _jump_terms(cplx[:, ::1] r, cplx[:, ::1] out,
                      double g1, double g2, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, n, np_, q, qp
    cdef double sn, snp
    if g1 > 0.0:
        for n in range(d):
            for np_ in range(d):
                out[n, np_] = out[n, np_] + g1 * r[d + n, d + np_]
        for i in range(d, 2 * d):
            for j in range(2 * d):
                out[i, j] = out[i, j] - 0.5 * g1 * r[i, j]
        for i in range(2 * d):
            for j in range(d, 2 * d):
                out[i, j] = out[i, j] - 0.5 * g1 * r[i, j]
    if g2 > 0.0:
        for q in range(2):
            for qp in range(2):
                for n in range(d - 1):
                    sn = sqrt(n + 1.0)
                    for np_ in range(d - 1):
                        snp = sqrt(np_ + 1.0)
                        out[q * d + n, qp * d + np_] = out[q * d + n, qp * d + np_] + \
                            g2 * sn * snp * r[q * d + n + 1, qp * d + np_ + 1]
        for i in range(2 * d):
            n = i % d
            for j in range(2 * d):
                np_ = j % d
                out[i, j] = out[i, j] - 0.5 * g2 * (n + np_) * r[i, j]


cdef void _rhs_diag(cplx[:, ::1] r, double[::1] h, double g1, double g2,
                    Py_ssize_t d, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx minus_i = -1j
    for i in range(2 * d):
        for j in range(2 * d):
            out[i, j] = minus_i * (h[i] - h[j]) * r[i, j]
    _jump_terms(r, out, g1, g2, d)


cdef void _rhs_tridiag(cplx[:, ::1] r, cplx[::1] u, double g1, double g2,
                       Py_ssize_t d, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, n, q, row
    cdef double sgn
    cdef cplx minus_i = -1j
    cdef cplx plus_i = 1j
    for i in range(2 * d):
        for j in range(2 * d):
            out[i, j] = 0
    # -i sgn_q (M rho) over mode-row, +i sgn_q' (rho M) over mode-column
    for q in range(2):
        sgn = 1.0 if q == 0 else -1.0
        for n in range(d - 1):
            row = q * d + n
            for j in range(2 * d):
                out[row, j] = out[row, j] + minus_i * sgn * u[n] * r[row + 1, j]
                out[row + 1, j] = out[row + 1, j] + minus_i * sgn * u[n].conjugate() * r[row, j]
    # rho M sweep runs row-major (i outer) so r and out stay cache-resident.
    for i in range(2 * d):
        for q in range(2):
            sgn = 1.0 if q == 0 else -1.0
            for n in range(d - 1):
                row = q * d + n
                out[i, row + 1] = out[i, row + 1] + plus_i * sgn * u[n] * r[i, row]
                out[i, row] = out[i, row] + plus_i * sgn * u[n].conjugate() * r[i, row + 1]
    _jump_terms(r, out, g1, g2, d)


cdef void _rk4_sweep(cplx[:, ::1] rho, double[::1] h, cplx[::1] u, int kind,
                     double g1, double g2, Py_ssize_t d, double dt,
                     Py_ssize_t steps, cplx[:, ::1] k1, cplx[:, ::1] k2,
                     cplx[:, ::1] k3, cplx[:, ::1] k4,
                     cplx[:, ::1] tmp) noexcept nogil:
    cdef Py_ssize_t s, i, j, nn = 2 * d
    cdef cplx acc
    for s in range(steps):
        if kind == 0:
            _rhs_diag(rho, h, g1, g2, d, k1)
        else:
            _rhs_tridiag(rho, u, g1, g2, d, k1)
        for i in range(nn):
            for j in range(nn):
                tmp[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
        if kind == 0:
            _rhs_diag(tmp, h, g1, g2, d, k2)
        else:
            _rhs_tridiag(tmp, u, g1, g2, d, k2)
        for i in range(nn):
            for j in range(nn):
                tmp[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
        if kind == 0:
            _rhs_diag(tmp, h, g1, g2, d, k3)
        else:
            _rhs_tridiag(tmp, u, g1, g2, d, k3)
        for i in range(nn):
            for j in range(nn):
                tmp[i, j] = rho[i, j] + dt * k3[i, j]
        if kind == 0:
            _rhs_diag(tmp, h, g1, g2, d, k4)
        else:
            _rhs_tridiag(tmp, u, g1, g2, d, k4)
        for i in range(nn):
            for j in range(nn):
                rho[i, j] = rho[i, j] + (dt / 6.0) * (
                    k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        # Hermitian symmetrisation
        for i in range(nn):
            for j in range(i, nn):
                acc = 0.5 * (rho[i, j] + rho[j, i].conjugate())
                rho[i, j] = acc
                rho[j, i] = acc.conjugate()


def lindblad_rk4_diag(rho, hdiag, double gamma1, double gamma2, double dt, Py_ssize_t steps):
    """Evolve a (2d x 2d) composite density matrix under a qubit-diagonal
    Hamiltonian (hdiag, length 2d) with relaxation gamma1 and loss gamma2."""
    work = np.array(rho, dtype=np.complex128, order="C")
    # Memoryviews are built here, with the GIL held, not inside the nogil call.
    cdef cplx[:, ::1] work_v = work
    cdef double[::1] h_v = np.ascontiguousarray(hdiag, dtype=np.float64)
    cdef cplx[::1] dummy_v = np.zeros(1, dtype=np.complex128)
    cdef Py_ssize_t d = work_v.shape[0] // 2
    cdef cplx[:, ::1] k1 = np.empty_like(work)
    cdef cplx[:, ::1] k2 = np.empty_like(work)
    cdef cplx[:, ::1] k3 = np.empty_like(work)
    cdef cplx[:, ::1] k4 = np.empty_like(work)
    cdef cplx[:, ::1] tmp = np.empty_like(work)
    with nogil:
        _rk4_sweep(work_v, h_v, dummy_v, 0, gamma1, gamma2, d, dt, steps,
                   k1, k2, k3, k4, tmp)
    return work


def lindblad_rk4_tridiag(rho, upper, double gamma1, double gamma2, double dt, Py_ssize_t steps):
    """Same, for H = sigma_z (x) M with M tridiagonal (upper diagonal given)."""
    work = np.array(rho, dtype=np.complex128, order="C")
    cdef cplx[:, ::1] work_v = work
    cdef cplx[::1] u_v = np.ascontiguousarray(upper, dtype=np.complex128)
    cdef double[::1] dummy_v = np.zeros(1, dtype=np.float64)
    cdef Py_ssize_t d = work_v.shape[0] // 2
    cdef cplx[:, ::1] k1 = np.empty_like(work)
    cdef cplx[:, ::1] k2 = np.empty_like(work)
    cdef cplx[:, ::1] k3 = np.empty_like(work)
    cdef cplx[:, ::1] k4 = np.empty_like(work)
    cdef cplx[:, ::1] tmp = np.empty_like(work)
    with nogil:
        _rk4_sweep(work_v, dummy_v, u_v, 1, gamma1, gamma2, d, dt, steps,
                   k1, k2, k3, k4, tmp)
    return work


def sample_diagonal_bits(cplx[::1] amp, double[::1] wfrac, int m, int form,
                         double[::1] uniforms, cnp.int64_t[::1] bits_out):
    """Walk one adaptive-measurement trajectory on a pure state whose
    per-round branch unitaries are diagonal.  See the numpy twin for the
    parameter contract; returns the joint record probability."""
    cdef Py_ssize_t d = amp.shape[0]
    cdef Py_ssize_t i, n
    cdef double frac = 0.0, prob = 1.0, scale, p0, p1, norm, ang
    cdef cplx phase, u1, h0, h1, b
    cdef int bit
    cdef cnp.ndarray[cplx, ndim=1] buf0 = np.empty(d, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] buf1 = np.empty(d, dtype=np.complex128)
    cdef cplx[::1] b0 = buf0
    cdef cplx[::1] b1 = buf1
    for i in range(1, m + 1):
        scale = 2.0 ** (m - i)
        ang = pi * (1.0 - 2.0 * frac)
        phase = cos(ang) + 1j * sin(ang)
        p0 = 0.0
        for n in range(d):
            if form == 0:
                ang = 2.0 * pi * wfrac[n] * scale
                u1 = cos(ang) + 1j * sin(ang)
                h0 = 0.5 * amp[n]
                h1 = 0.5 * phase * u1 * amp[n]
            else:
                ang = pi * wfrac[n] * scale
                u1 = cos(ang) + 1j * sin(ang)
                h0 = 0.5 * u1.conjugate() * amp[n]
                h1 = 0.5 * phase * u1 * amp[n]
            b0[n] = h0 - h1
            b1[n] = h0 + h1
            p0 = p0 + b0[n].real * b0[n].real + b0[n].imag * b0[n].imag
        if uniforms[i - 1] < p0:
            bit = 0
            prob = prob * p0
            norm = 1.0 / sqrt(p0)
            for n in range(d):
                amp[n] = b0[n] * norm
        else:
            bit = 1
            p1 = 1.0 - p0
            if p1 < 0.0:
                p1 = 0.0
            prob = prob * p1
            norm = 0.0
            for n in range(d):
                norm = norm + b1[n].real * b1[n].real + b1[n].imag * b1[n].imag
            norm = 1.0 / sqrt(norm)
            for n in range(d):
                amp[n] = b1[n] * norm
        bits_out[i - 1] = bit
        frac = 0.25 * bit + 0.5 * frac
    return prob
