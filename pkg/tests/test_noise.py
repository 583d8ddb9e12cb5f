import math

import numpy as np
import pytest

from bosonic_qpe import QuantumState, noise
from bosonic_qpe.codes import coherent_state
from bosonic_qpe.errors import KrausCutoffError
from bosonic_qpe.noise import CompositeState, LindbladModel, LossChannel


def test_loss_kraus_completeness():
    dim = 30
    total = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        e = noise.loss_kraus_operator(k, 0.2, dim)
        total += e.conj().T @ e
    assert np.allclose(total, np.eye(dim), atol=1e-12)


def test_from_chi_maps_to_gamma():
    ch = LossChannel.from_chi(0.3)
    assert ch.gamma == pytest.approx(1 - math.exp(-0.3))


def test_apply_loss_damps_mean_photon():
    # <n> -> (1 - gamma) <n> exactly, for any input
    state = coherent_state(2.2, 70)
    ch = LossChannel(0.17)
    out = noise.apply_loss(state, ch)
    assert out.density_matrix().trace().real == pytest.approx(1.0, abs=1e-12)
    assert out.mean_photon() == pytest.approx((1 - 0.17) * state.mean_photon(), rel=1e-10)


def test_apply_loss_keeps_coherent_states_coherent():
    alpha = 1.8
    chi = 0.25
    state = coherent_state(alpha, 60)
    out = noise.apply_loss(state, LossChannel.from_chi(chi))
    target = coherent_state(alpha * math.exp(-chi / 2), 60)
    overlap = (target.data.conj() @ out.density_matrix() @ target.data).real
    assert overlap == pytest.approx(1.0, abs=1e-9)


def test_kraus_cutoff_guard():
    state = coherent_state(3.0, 60)
    with pytest.raises(KrausCutoffError):
        noise.apply_loss(state, LossChannel(0.5, kmax=1))


def test_compose_and_qubit_ops():
    sm = noise.qubit_sigma_minus()
    assert sm.shape == (2, 2)
    assert np.allclose(sm, [[0, 1], [0, 0]])
    a, _ = noise.ladder_operators(5)
    op = noise.compose(np.eye(2), a)
    assert op.shape == (10, 10)
    assert np.allclose(op[:5, :5], a)
    assert np.allclose(op[5:, 5:], a)


def test_composite_state_blocks():
    mode = coherent_state(1.0, 12)
    comp = CompositeState.from_mode(mode, qubit_level=0)
    assert comp.mode_dim == 12
    assert comp.trace() == pytest.approx(1.0)
    pops = comp.qubit_populations()
    assert pops[0] == pytest.approx(1.0)
    assert pops[1] == pytest.approx(0.0, abs=1e-14)
    red = comp.mode_density().density_matrix()
    assert np.allclose(red, mode.density_matrix(), atol=1e-12)


def test_lindblad_pure_loss_keeps_coherent_states_pure():
    # a coherent state stays coherent under pure loss, so purity is conserved
    mode = coherent_state(1.5, 40)
    comp = CompositeState.from_mode(mode, qubit_level=0)
    model = noise.default_hardware_model("dispersive", 40, gamma1=0.0, gamma2=5e-3)
    out = noise.lindblad_evolve(comp, model, t=2.0)
    red = out.mode_density().density_matrix()
    purity = np.trace(red @ red).real
    assert purity == pytest.approx(1.0, abs=1e-6)
    want = 1.5 * math.exp(-5e-3 * 2.0 / 2)
    got_n = np.trace(red @ np.diag(np.arange(40))).real
    assert got_n == pytest.approx(want * want, rel=1e-5)


def test_default_step_shrinks_with_rates():
    slow = noise.default_step(chi=1.0)
    fast = noise.default_step(chi=50.0, rates=(0.5,))
    assert 0 < fast < slow


def test_default_hardware_model_shape():
    model = noise.default_hardware_model("dispersive", 20)
    assert model.gamma1 == pytest.approx(2e-2)
    assert model.gamma2 == pytest.approx(1e-3)
    assert model.step > 0
    assert model.hamiltonian.shape == (40, 40)
