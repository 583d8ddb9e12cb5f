import math

import numpy as np
import pytest
import scipy.linalg

from bosonic_qpe import QuantumState, codes, fock, metrics, rng
from bosonic_qpe.codes import GkpSpec
from bosonic_qpe.engine import (
    QpeSchedule,
    fejer_kernel,
    gkp_record_state,
    run_gkp_detection,
    run_noisy_gkp_detection,
    trajectory_superoperator,
)

ROOT_PI = math.sqrt(math.pi)


def test_record_length_validation():
    state = codes.gkp_state(GkpSpec(0.35, 0, 150))
    with pytest.raises(ValueError):
        gkp_record_state(state, 3, (0, 0), (0, 0, 0))


def test_quadrature_record_probability_matches_spectral_form():
    # p(all-zero record) = sum_k w_k F_{2^m}(-x_k/sqrt(pi)) with w_k the
    # position-spectrum weights; checks the sequential cell product against
    # an eigendecomposition that never touches the engine
    dim = 451
    alpha = (ROOT_PI / 2) / math.sqrt(2)
    state = codes.coherent_state(alpha, dim)
    lam, vecs = scipy.linalg.eigh(fock.quadrature_q(dim))
    u = lam / ROOT_PI
    w = np.abs(vecs.conj().T @ state.data) ** 2
    for m in (2, 3, 4):
        p, _ = trajectory_superoperator(state, QpeSchedule.quadrature("q", m), (0,) * m)
        p_pred = float((w * fejer_kernel(2**m, -u)).sum())
        assert p == pytest.approx(p_pred, abs=1e-11)


def test_conditioning_concentrates_on_lattice():
    # an off-lattice coherent state (centred half a period from the grid)
    # gets pulled onto the sqrt(pi) lattice by an all-zero record, more
    # sharply the deeper the schedule
    dim = 451
    alpha = (ROOT_PI / 2) / math.sqrt(2)
    state = codes.coherent_state(alpha, dim)
    lam, vecs = scipy.linalg.eigh(fock.quadrature_q(dim))
    fold = lam - ROOT_PI * np.round(lam / ROOT_PI)
    near = np.abs(fold) < ROOT_PI / 4
    w0 = np.abs(vecs.conj().T @ state.data) ** 2
    start = float(w0[near].sum())
    assert start < 0.6
    masses = []
    for m in (2, 3, 4):
        _, cond = trajectory_superoperator(state, QpeSchedule.quadrature("q", m), (0,) * m)
        amps = vecs.conj().T @ cond.data
        masses.append(float((np.abs(amps[near]) ** 2).sum()))
    assert masses[0] < masses[1] < masses[2]
    assert masses[2] > 0.95


def test_zero_record_is_modal_for_code_state():
    state = codes.gkp_state(GkpSpec(0.35, 0, 200))
    m = 2
    probs = {}
    for jx in range(4):
        for jp in range(4):
            bx = tuple((jx >> k) & 1 for k in range(m))
            bp = tuple((jp >> k) & 1 for k in range(m))
            p, _ = gkp_record_state(state, m, bx, bp)
            probs[(bx, bp)] = p
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9)
    zero = probs[((0,) * m, (0,) * m)]
    assert all(zero >= p for p in probs.values())


def test_run_gkp_detection_reproducible():
    state = codes.gkp_state(GkpSpec(0.35, 0, 200))
    o1 = run_gkp_detection(state, 3, rng.stream(21, 0))
    o2 = run_gkp_detection(state, 3, rng.stream(21, 0))
    assert o1.bits_x == o2.bits_x and o1.bits_p == o2.bits_p
    assert o1.probability == o2.probability
    assert len(o1.bits_x) == 3 and len(o1.bits_p) == 3
    assert o1.theta_x in {j / 8 for j in range(8)}
    assert o1.theta_p in {j / 8 for j in range(8)}
    assert abs(np.linalg.norm(o1.state.data) - 1.0) < 1e-9


def test_outcome_histogram_counts():
    state = codes.gkp_state(GkpSpec(0.35, 0, 200))
    outs = [run_gkp_detection(state, 2, rng.stream(5, i)) for i in range(40)]
    hist = metrics.gkp_outcome_histogram(outs)
    assert sum(hist.values()) == 40
    for (tx, tp), count in hist.items():
        assert count > 0
        assert tx in {j / 4 for j in range(4)}
        assert tp in {j / 4 for j in range(4)}


def test_detection_fidelity_trivial_reference():
    # with no injected error the all-zero record reproduces the reference
    # exactly, so that outcome contributes fidelity 1
    state = codes.gkp_state(GkpSpec(0.35, 0, 200))
    report = metrics.gkp_detection_fidelity(state, 3, samples=40, seed=2)
    assert 0.0 < report.average <= 1.0 + 1e-12
    zero = [s for s in report.outcomes if s.theta_x == 0.0 and s.theta_p == 0.0]
    assert zero and zero[0].fidelity == pytest.approx(1.0, abs=1e-9)


def test_noisy_detection_smoke():
    state = codes.gkp_state(GkpSpec(0.4, 0, 120))
    out = run_noisy_gkp_detection(state, 2, rng.stream(8, 0), gamma1=0.01, gamma2=5e-4)
    assert len(out.bits_x) == 2 and len(out.bits_p) == 2
    assert 0.0 < out.probability <= 1.0
    tr = out.state.density_matrix().trace().real
    assert tr == pytest.approx(1.0, abs=1e-8)


def test_model_chi_roundtrip():
    from bosonic_qpe.noise import default_hardware_model

    model = default_hardware_model("dispersive", 30, chi=7.5)
    assert metrics.model_chi(model) == pytest.approx(7.5)
