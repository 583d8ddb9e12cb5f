import math

import numpy as np
import pytest
import scipy.linalg

from bosonic_qpe import QuantumState, metrics
from bosonic_qpe.codes import cat_plus, coherent_state
from bosonic_qpe.errors import UndefinedReferenceError
from bosonic_qpe.metrics import (
    deduce_rotation_error,
    deduction_infidelity,
    fidelity,
    reference_error_state,
    total_infidelity_noisy,
)
from bosonic_qpe.noise import default_hardware_model


def _random_density(gen, dim):
    mat = gen.normal(size=(dim, dim)) + 1j * gen.normal(size=(dim, dim))
    rho = mat @ mat.conj().T
    return rho / rho.trace().real


def test_fidelity_pure_states_is_squared_overlap():
    gen = np.random.default_rng(5)
    for _ in range(10):
        a = gen.normal(size=12) + 1j * gen.normal(size=12)
        b = gen.normal(size=12) + 1j * gen.normal(size=12)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        f = fidelity(QuantumState.pure(a), QuantumState.pure(b))
        assert f == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-12)


def test_fidelity_against_direct_uhlmann():
    gen = np.random.default_rng(6)
    for _ in range(5):
        rho = _random_density(gen, 8)
        sig = _random_density(gen, 8)
        sq = scipy.linalg.sqrtm(rho)
        inner = scipy.linalg.sqrtm(sq @ sig @ sq)
        want = float(np.trace(inner).real) ** 2
        got = fidelity(QuantumState.density(rho), QuantumState.density(sig))
        assert got == pytest.approx(want, abs=1e-9)
        # symmetry and unit self-fidelity
        assert got == pytest.approx(
            fidelity(QuantumState.density(sig), QuantumState.density(rho)), abs=1e-9
        )
        assert fidelity(QuantumState.density(rho), QuantumState.density(rho)) == pytest.approx(1.0, abs=1e-9)


def test_fidelity_orthogonal_states():
    f = fidelity(QuantumState.fock(0, 10), QuantumState.fock(3, 10))
    assert f == pytest.approx(0.0, abs=1e-12)


def test_deduce_rotation_error_grid():
    assert deduce_rotation_error(0.0, 3) == (0, 0)
    assert deduce_rotation_error(2 / 3, 3) == (2, 1)
    assert deduce_rotation_error(0.6875, 3) == (2, 1)
    assert deduce_rotation_error(0.25, 4) == (1, 3)
    # loss count is the distance back to the codeword sector
    for order in (3, 4, 5):
        for l in range(order):
            sector, lost = deduce_rotation_error(l / order, order)
            assert sector == l
            assert lost == (-l) % order


def test_reference_error_state_projects_and_normalizes():
    state = cat_plus(3, 2.0, 40).to_density()
    from bosonic_qpe.noise import LossChannel, apply_loss

    lossy = apply_loss(state, LossChannel.from_chi(0.2))
    ref = reference_error_state(lossy, 3, 1)
    assert ref.density_matrix().trace().real == pytest.approx(1.0, abs=1e-12)
    pops = ref.populations()
    assert all(pops[n] < 1e-14 for n in range(40) if n % 3 != 1)


def test_reference_error_state_empty_sector_raises():
    state = cat_plus(3, 2.0, 40)  # pure codeword: sector 1 carries nothing
    with pytest.raises(UndefinedReferenceError):
        reference_error_state(state, 3, 1)


def test_deduction_infidelity_report_structure(lossy_cat):
    state = lossy_cat(3)
    report = deduction_infidelity(state, 3, 4)
    assert 0.0 <= report.total <= 1.0
    assert report.order == 3 and report.depth == 4
    assert report.t_total > 0
    assert report.samples is None and report.stderr is None
    assert sum(b.probability for b in report.bins) == pytest.approx(1.0, abs=1e-10)
    for b in report.bins:
        assert 0 <= b.sector < 3
        assert b.loss_count == (-b.sector) % 3


def test_deduction_infidelity_improves_with_depth(lossy_cat):
    state = lossy_cat(3)
    totals = [deduction_infidelity(state, 3, m).total for m in (2, 4, 6)]
    assert totals[0] > totals[1] > totals[2]
    # doubling the depth doubles the schedule length and then some
    t2 = deduction_infidelity(state, 3, 2).t_total
    t4 = deduction_infidelity(state, 3, 4).t_total
    assert t4 > 2 * t2


def test_total_infidelity_noisy_seeded(lossy_cat):
    state = lossy_cat(2, alpha=1.5, dim=25, chi=0.1)
    model = default_hardware_model("dispersive", 25, gamma1=5e-3, gamma2=5e-4)
    r1 = total_infidelity_noisy(state, 2, 2, model, samples=5, seed=42)
    r2 = total_infidelity_noisy(state, 2, 2, model, samples=5, seed=42)
    assert r1.total == r2.total
    assert 0.0 <= r1.total <= 1.0
    assert r1.samples == 5
    assert r1.stderr is not None and r1.stderr >= 0


def test_gkp_fidelity_rejects_bad_sample_count():
    state = coherent_state(1.0, 30)
    with pytest.raises(ValueError):
        metrics.gkp_detection_fidelity(state, 2, samples=0, seed=1)
