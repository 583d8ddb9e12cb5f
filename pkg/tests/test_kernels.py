import numpy as np
import pytest
import scipy.linalg

from bosonic_qpe.kernels import HAVE_COMPILED, get_implementation

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")


def _random_density(gen, n):
    a = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
    rho = a @ a.conj().T
    return np.ascontiguousarray(rho / np.trace(rho).real)


def _dense_liouvillian(h, jumps):
    n = h.shape[0]
    eye = np.eye(n)
    lio = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in jumps:
        l = np.sqrt(rate) * op
        ld_l = l.conj().T @ l
        lio += np.kron(l, l.conj())
        lio -= 0.5 * (np.kron(ld_l, eye) + np.kron(eye, ld_l.T))
    return lio


def _composite_ops(d):
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    return np.kron(sm, np.eye(d)), np.kron(np.eye(2), a)


def test_rk4_diag_matches_dense_exponential():
    gen = np.random.default_rng(12)
    d = 6
    rho = _random_density(gen, 2 * d)
    hdiag = np.concatenate([np.zeros(d), -4.0 * np.arange(d)])
    g1, g2 = 0.05, 0.01
    t = 0.2
    impl = get_implementation(False)
    got = impl.lindblad_rk4_diag(rho.copy(), hdiag, g1, g2, 1e-3, 200)
    l_qubit, l_mode = _composite_ops(d)
    lio = _dense_liouvillian(np.diag(hdiag).astype(complex),
                             [(l_qubit, g1), (l_mode, g2)])
    want = (scipy.linalg.expm(lio * t) @ rho.reshape(-1)).reshape(2 * d, 2 * d)
    assert np.max(np.abs(got - want)) < 1e-9
    assert np.trace(got).real == pytest.approx(1.0, abs=1e-12)


def test_rk4_tridiag_matches_dense_exponential():
    gen = np.random.default_rng(13)
    d = 6
    rho = _random_density(gen, 2 * d)
    upper = 3.0 * np.sqrt(np.arange(1, d)).astype(complex)
    g1, g2 = 0.02, 0.008
    t = 0.2
    impl = get_implementation(False)
    got = impl.lindblad_rk4_tridiag(rho.copy(), upper, g1, g2, 1e-3, 200)
    mode_h = np.diag(upper, 1) + np.diag(upper.conj(), -1)
    h = np.kron(np.diag([1.0, -1.0]), mode_h).astype(complex)
    l_qubit, l_mode = _composite_ops(d)
    lio = _dense_liouvillian(h, [(l_qubit, g1), (l_mode, g2)])
    want = (scipy.linalg.expm(lio * t) @ rho.reshape(-1)).reshape(2 * d, 2 * d)
    assert np.max(np.abs(got - want)) < 1e-9


def test_rk4_preserves_hermiticity_and_trace():
    gen = np.random.default_rng(14)
    d = 10
    rho = _random_density(gen, 2 * d)
    hdiag = np.concatenate([np.zeros(d), -12.566 * np.arange(d)])
    impl = get_implementation(False)
    out = impl.lindblad_rk4_diag(rho, hdiag, 0.02, 0.001, 1e-3, 50)
    assert np.max(np.abs(out - out.conj().T)) < 1e-13
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)


@needs_compiled
@pytest.mark.parametrize("kind", ["diag", "tridiag"])
def test_compiled_rk4_matches_numpy(kind):
    gen = np.random.default_rng(15)
    d = 24
    rho = _random_density(gen, 2 * d)
    np_impl = get_implementation(False)
    c_impl = get_implementation(True)
    if kind == "diag":
        hdiag = np.concatenate([np.zeros(d), -12.566 * np.arange(d)])
        a = np_impl.lindblad_rk4_diag(rho.copy(), hdiag, 0.02, 0.001, 1e-3, 40)
        b = c_impl.lindblad_rk4_diag(rho.copy(), hdiag, 0.02, 0.001, 1e-3, 40)
    else:
        upper = 135.0 * np.sqrt(np.arange(1, d)).astype(complex)
        a = np_impl.lindblad_rk4_tridiag(rho.copy(), upper, 0.02, 0.001, 1e-5, 40)
        b = c_impl.lindblad_rk4_tridiag(rho.copy(), upper, 0.02, 0.001, 1e-5, 40)
    assert np.max(np.abs(a - b)) < 1e-14


@needs_compiled
@pytest.mark.parametrize("form", [0, 1])
def test_compiled_sampler_matches_numpy(form):
    gen = np.random.default_rng(16)
    d, m = 40, 8
    for trial in range(20):
        amp = gen.normal(size=d) + 1j * gen.normal(size=d)
        amp /= np.linalg.norm(amp)
        wfrac = gen.uniform(0, 4, size=d)
        uniforms = gen.uniform(size=m)
        amp_a, amp_b = amp.copy(), amp.copy()
        bits_a = np.zeros(m, dtype=np.int64)
        bits_b = np.zeros(m, dtype=np.int64)
        p_a = get_implementation(False).sample_diagonal_bits(amp_a, wfrac, m, form, uniforms, bits_a)
        p_b = get_implementation(True).sample_diagonal_bits(amp_b, wfrac, m, form, uniforms, bits_b)
        assert np.array_equal(bits_a, bits_b)
        assert p_a == pytest.approx(p_b, rel=1e-12)
        assert np.max(np.abs(amp_a - amp_b)) < 1e-12


def test_sampler_state_stays_normalized():
    gen = np.random.default_rng(17)
    impl = get_implementation(False)
    amp = gen.normal(size=30) + 1j * gen.normal(size=30)
    amp /= np.linalg.norm(amp)
    bits = np.zeros(6, dtype=np.int64)
    p = impl.sample_diagonal_bits(amp, gen.uniform(0, 3, size=30), 6, 1,
                                  gen.uniform(size=6), bits)
    assert 0.0 < p <= 1.0
    assert np.linalg.norm(amp) == pytest.approx(1.0, abs=1e-12)
    assert set(bits.tolist()) <= {0, 1}
