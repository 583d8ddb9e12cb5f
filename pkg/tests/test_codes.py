import math

import numpy as np
import pytest

from bosonic_qpe import QuantumState, codes, fock
from bosonic_qpe.codes import GkpSpec, RotationCodeSpec
from bosonic_qpe.errors import InsufficientDimensionError


def _rotation(dim, order):
    n = np.arange(dim)
    return np.diag(np.exp(2j * math.pi * n / order))


@pytest.mark.parametrize("order", [2, 3, 4, 5])
def test_cat_plus_is_rotation_eigenstate(order):
    state = codes.cat_plus(order, 2.0, 60)
    rotated = _rotation(60, order) @ state.data
    assert np.allclose(rotated, state.data, atol=1e-10)
    # support restricted to multiples of the order
    pops = state.populations()
    off = sum(pops[n] for n in range(60) if n % order != 0)
    assert off < 1e-20


@pytest.mark.parametrize("mu", [0, 1])
def test_cat_codeword_support(mu):
    # codeword mu of an order-N code lives on n = mu*N mod 2N
    spec = RotationCodeSpec("cat", 3, mu, 60, alpha=2.0)
    state = codes.cat_state(spec)
    pops = state.populations()
    for n in range(60):
        if n % 6 != 3 * mu and pops[n] > 1e-18:
            raise AssertionError(f"population {pops[n]:.2e} outside sector at n={n}")


def test_cat_auto_dim_truncation_is_safe():
    state = codes.cat_plus(3, 3.0)
    assert state.truncation_edge_weight() < 1e-8
    assert state.dim >= 40


def test_binomial_support_and_normalization():
    state = codes.binomial_plus(3, 6)
    assert np.linalg.norm(state.data) == pytest.approx(1.0, abs=1e-12)
    pops = state.populations()
    support = [n for n in range(state.dim) if pops[n] > 1e-16]
    assert all(n % 3 == 0 for n in support)
    # rungs+1 Fock lines carry weight
    assert len(support) == 7


def test_binomial_primitive_matches_plus_after_projection():
    plus = codes.binomial_plus(3, 2, 40)
    prim = codes.binomial_primitive(3, 2, 40)
    proj = fock.modular_projector(40, 3, 0)
    vec = proj @ prim.data
    vec = vec / np.linalg.norm(vec)
    assert abs(np.vdot(vec, plus.data)) == pytest.approx(1.0, abs=1e-10)


def test_squeezed_vacuum_variance():
    r = 0.55
    state = codes.squeezed_vacuum(r, 80)
    q = fock.quadrature_q(80)
    p = fock.quadrature_p(80)
    var_q = state.expectation(q @ q).real - state.expectation(q).real ** 2
    var_p = state.expectation(p @ p).real - state.expectation(p).real ** 2
    assert var_q == pytest.approx(math.exp(-2 * r) / 2, rel=1e-6)
    assert var_p == pytest.approx(math.exp(2 * r) / 2, rel=1e-6)


def test_squeeze_operator_unitary():
    s = codes.squeeze_operator(0.4, 50)
    assert fock.is_unitary(s)


def test_gkp_state_normalized_and_stabilized():
    state = codes.gkp_state(GkpSpec(0.3, 0, 250))
    assert np.linalg.norm(state.data) == pytest.approx(1.0, abs=1e-10)
    # D(alpha) with real alpha shifts q by sqrt(2)*alpha, so this is the
    # 2*sqrt(pi) lattice translation; its expectation damps like exp(-pi*delta^2)
    shift = fock.displacement(math.sqrt(2 * math.pi), 250)
    expect = abs(state.expectation(shift))
    assert expect == pytest.approx(math.exp(-math.pi * 0.09), rel=0.01)


def test_gkp_envelope_monotone_in_delta():
    vals = []
    for delta in (0.45, 0.35, 0.28):
        state = codes.gkp_state(GkpSpec(delta, 0, 300))
        shift = fock.displacement(math.sqrt(2 * math.pi), 300)
        vals.append(abs(state.expectation(shift)))
    assert vals[0] < vals[1] < vals[2]
    # tighter envelope also means more photons
    n_wide = codes.gkp_state(GkpSpec(0.45, 0, 300)).mean_photon()
    n_tight = codes.gkp_state(GkpSpec(0.28, 0, 300)).mean_photon()
    assert n_tight > n_wide


def test_gkp_mu_offsets_are_orthogonalish():
    s0 = codes.gkp_state(GkpSpec(0.3, 0, 250))
    s1 = codes.gkp_state(GkpSpec(0.3, 1, 250))
    assert abs(np.vdot(s0.data, s1.data)) < 0.05


def test_logical_plus_weights():
    state = codes.logical_plus(codes.cat_state, RotationCodeSpec("cat", 2, 0, 60, alpha=2.5),
                               RotationCodeSpec("cat", 2, 1, 60, alpha=2.5))
    assert np.linalg.norm(state.data) == pytest.approx(1.0, abs=1e-12)
    c0 = codes.cat_state(RotationCodeSpec("cat", 2, 0, 60, alpha=2.5))
    overlap = abs(np.vdot(c0.data, state.data))
    assert overlap == pytest.approx(1 / math.sqrt(2), abs=0.01)


def test_coherent_state_mean_photon():
    state = codes.coherent_state(2.0 + 1.0j, 80)
    assert state.mean_photon() == pytest.approx(5.0, rel=1e-8)


def test_insufficient_dimension_raises():
    with pytest.raises(InsufficientDimensionError):
        codes.cat_plus(5, 5.0, 20)
    with pytest.raises(InsufficientDimensionError):
        codes.binomial_plus(4, 6, 10)
