import math

import numpy as np
import pytest

from bosonic_qpe import QuantumState, crt, rng
from bosonic_qpe.codes import coherent_state
from bosonic_qpe.crt import CrtPlan, crt_solve, detect_photon_number, generate_fock
from bosonic_qpe.errors import PlanError, SelectionFailureError


def test_crt_solve_against_search():
    gen = np.random.default_rng(0)
    for moduli in ((7, 15), (3, 5, 8), (11, 13)):
        cap = math.prod(moduli)
        for _ in range(25):
            n = int(gen.integers(0, cap))
            residues = tuple(n % q for q in moduli)
            assert crt_solve(residues, moduli) == n


def test_crt_solve_reduces_residues():
    assert crt_solve((9, 2), (7, 15)) == crt_solve((2, 2), (7, 15))


def test_noncoprime_moduli_rejected():
    with pytest.raises(PlanError):
        crt_solve((1, 2), (4, 6))
    with pytest.raises(PlanError):
        CrtPlan((6, 15), 8)


def test_plan_capacity():
    plan = CrtPlan((7, 15), 8)
    assert plan.capacity == 105
    assert plan.moduli == (7, 15)
    assert len(plan.schedules()) == 2


@pytest.mark.parametrize("n", [0, 12, 59, 104])
def test_fock_state_detection_is_exact(n):
    plan = CrtPlan((7, 15), 8)
    state = QuantumState.fock(n, 120)
    rec = detect_photon_number(state, plan, rng.stream(1, n))
    assert rec.value == n
    assert rec.residues == (n % 7, n % 15)
    assert rec.probability > 0


def test_detection_state_is_conditioned():
    # on a Fock eigenstate the conditional equals the input
    plan = CrtPlan((7, 15), 8)
    state = QuantumState.fock(33, 110)
    rec = detect_photon_number(state, plan, rng.stream(4, 0))
    assert rec.value == 33
    assert abs(abs(np.vdot(rec.state.data, state.data)) - 1.0) < 1e-9


def test_generate_fock_exhaustive_small_target():
    plan = CrtPlan((3, 5), 4)
    state = coherent_state(2.5, 60)
    result = generate_fock(state, 7, plan, rng_seed=0, exhaustive=True)
    assert result.target == 7
    assert result.residues == (1, 2)
    pops = result.state.populations()
    assert pops[7] == max(pops)


def test_generate_fock_attempt_budget():
    plan = CrtPlan((7, 15), 8)
    state = coherent_state(9.0, 160)
    with pytest.raises(SelectionFailureError):
        generate_fock(state, 87, plan, rng_seed=123, max_attempts=1)
