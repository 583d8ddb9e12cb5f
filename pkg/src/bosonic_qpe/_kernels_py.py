"""Pure-numpy implementations of the hot kernels.

Same call signatures and semantics as the compiled extension
``bosonic_qpe._kernels``; the selector in :mod:`bosonic_qpe.kernels`
picks whichever is importable.  Kept deliberately close to the C loops
so the two stay easy to diff.

Composite indices are row-major (qubit, mode): entry (q*d + n).
"""

from __future__ import annotations

import numpy as np


def _jump_terms(r, out, g1, g2, d):
    """Add relaxation (qubit) and loss (mode) dissipators to `out`.

    r, out: views of shape (2, d, 2, d).
    """
    if g1 > 0.0:
        out[0, :, 0, :] += g1 * r[1, :, 1, :]
        out[1, :, :, :] -= 0.5 * g1 * r[1, :, :, :]
        out[:, :, 1, :] -= 0.5 * g1 * r[:, :, 1, :]
    if g2 > 0.0:
        s = np.sqrt(np.arange(1, d))
        out[:, : d - 1, :, : d - 1] += (
            g2 * s[None, :, None, None] * s[None, None, None, :] * r[:, 1:, :, 1:]
        )
        ns = np.arange(d, dtype=np.float64)
        out -= 0.5 * g2 * (ns[None, :, None, None] + ns[None, None, None, :]) * r


def _rhs_diag(rho, hdiag, g1, g2, d, out):
    np.multiply(-1j * (hdiag[:, None] - hdiag[None, :]), rho, out=out)
    _jump_terms(rho.reshape(2, d, 2, d), out.reshape(2, d, 2, d), g1, g2, d)
    return out


def _rhs_tridiag(rho, upper, g1, g2, d, out):
    r = rho.reshape(2, d, 2, d)
    o = out.reshape(2, d, 2, d)
    o[:] = 0.0
    uc = upper.conj()
    # H = sz (x) M, M tridiagonal with M[n, n+1] = upper[n].
    for q, sgn in ((0, 1.0), (1, -1.0)):
        # -i sgn (M @ rho_block) over the mode-row index
        o[q, : d - 1] += (-1j * sgn) * upper[:, None, None] * r[q, 1:]
        o[q, 1:] += (-1j * sgn) * uc[:, None, None] * r[q, : d - 1]
    for q, sgn in ((0, 1.0), (1, -1.0)):
        # +i sgn (rho_block @ M) over the mode-column index
        o[:, :, q, 1:] += (1j * sgn) * upper[None, None, :] * r[:, :, q, : d - 1]
        o[:, :, q, : d - 1] += (1j * sgn) * uc[None, None, :] * r[:, :, q, 1:]
    _jump_terms(r, o, g1, g2, d)
    return out


def _rk4(rho, rhs, dt, steps):
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    for _ in range(steps):
        rhs(rho, k1)
        rhs(rho + (0.5 * dt) * k1, k2)
        rhs(rho + (0.5 * dt) * k2, k3)
        rhs(rho + dt * k3, k4)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
    return rho


def lindblad_rk4_diag(rho, hdiag, gamma1, gamma2, dt, steps):
    """Evolve a (2d x 2d) composite density matrix under a qubit-diagonal
    Hamiltonian (hdiag, length 2d) with relaxation gamma1 and loss gamma2."""
    rho = np.array(rho, dtype=np.complex128)
    d = rho.shape[0] // 2
    h = np.asarray(hdiag, dtype=np.float64)
    return _rk4(rho, lambda r, out: _rhs_diag(r, h, gamma1, gamma2, d, out), dt, steps)


def lindblad_rk4_tridiag(rho, upper, gamma1, gamma2, dt, steps):
    """Same, for H = sigma_z (x) M with M tridiagonal (upper diagonal given)."""
    rho = np.array(rho, dtype=np.complex128)
    d = rho.shape[0] // 2
    u = np.asarray(upper, dtype=np.complex128)
    return _rk4(rho, lambda r, out: _rhs_tridiag(r, u, gamma1, gamma2, d, out), dt, steps)


def sample_diagonal_bits(amp, wfrac, m, form, uniforms, bits_out):
    """Walk one adaptive-measurement trajectory on a pure state whose
    per-round branch unitaries are diagonal.

    amp      : complex state vector, modified in place (stays normalised)
    wfrac    : per-level phase fraction (eigenvalue / kappa)
    form     : 0 -> branch pair (1, e^{2 pi i w s}); 1 -> (e^{-i pi w s}, e^{+i pi w s})
    uniforms : m pre-drawn U(0,1) variates deciding the bits
    bits_out : int64 output array, length m

    Returns the joint probability of the realised bit string.
    """
    frac = 0.0  # feedback accumulator: phi_i = pi (1 - 2 frac)
    prob = 1.0
    for i in range(1, m + 1):
        scale = 2.0 ** (m - i)
        phase = np.exp(1j * np.pi * (1.0 - 2.0 * frac))
        if form == 0:
            u1 = np.exp(2j * np.pi * wfrac * scale)
            half0 = 0.5 * amp
            half1 = 0.5 * phase * u1 * amp
        else:
            u1 = np.exp(1j * np.pi * wfrac * scale)
            half0 = 0.5 * np.conj(u1) * amp
            half1 = 0.5 * phase * u1 * amp
        b0 = half0 - half1
        p0 = float(np.vdot(b0, b0).real)
        if uniforms[i - 1] < p0:
            bit = 0
            amp[:] = b0 / np.sqrt(p0)
            prob *= p0
        else:
            bit = 1
            prob *= max(1.0 - p0, 0.0)
            b1 = half0 + half1
            amp[:] = b1 / np.linalg.norm(b1)
        bits_out[i - 1] = bit
        frac = 0.25 * bit + 0.5 * frac
    return prob
