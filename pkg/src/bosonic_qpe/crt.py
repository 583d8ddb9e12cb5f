"""Staged photon-number readout via residue arithmetic.

A single rotation run of order N only resolves n mod N.  Running stages
with pairwise-coprime orders N_1, ..., N_s on the *conditioned* state of
the previous stage yields residues that the Chinese remainder theorem
recombines into n mod (N_1 ... N_s).  The same staged runs, post-selected
on the residues of a target level, turn a coherent input into a Fock
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .engine import QpeSchedule, deduce_rotation_error, run_trajectory
from .errors import LowConfidenceOutcomeError, PlanError, SelectionFailureError
from .fock import QuantumState
from .noise import CHI_DEFAULT

TARGET_POPULATION = 0.99
CONFIDENCE_FRACTION = 0.25  # of the residue grid spacing


@dataclass(frozen=True)
class CrtPlan:
    """Stage orders and per-stage depth for a residue readout.

    capacity = product of the orders; photon numbers are resolved mod
    capacity, so inputs should be known to lie below it.
    """

    moduli: tuple[int, ...]
    m: int
    chi: float = CHI_DEFAULT

    def __post_init__(self):
        if len(self.moduli) < 1:
            raise PlanError("need at least one stage")
        if any(n < 2 for n in self.moduli):
            raise PlanError("stage orders must be >= 2")
        for i in range(len(self.moduli)):
            for j in range(i + 1, len(self.moduli)):
                if math.gcd(self.moduli[i], self.moduli[j]) != 1:
                    raise PlanError(
                        f"stage orders must be pairwise coprime; "
                        f"gcd({self.moduli[i]}, {self.moduli[j]}) != 1"
                    )
        if self.m < 1:
            raise PlanError("stage depth m must be >= 1")

    @property
    def capacity(self) -> int:
        return math.prod(self.moduli)

    def schedules(self) -> tuple[QpeSchedule, ...]:
        return tuple(QpeSchedule.rotation(n, self.m, self.chi) for n in self.moduli)


def crt_solve(residues, moduli) -> int:
    """x with x = r_i (mod n_i) for all i, returned in [0, prod n_i)."""
    residues = [int(r) for r in residues]
    moduli = [int(n) for n in moduli]
    if len(residues) != len(moduli):
        raise PlanError("residues and moduli must pair up")
    if any(n < 1 for n in moduli):
        raise PlanError("moduli must be positive")
    for i in range(len(moduli)):
        for j in range(i + 1, len(moduli)):
            if math.gcd(moduli[i], moduli[j]) != 1:
                raise PlanError("moduli must be pairwise coprime")
    total = math.prod(moduli)
    x = 0
    for r, n in zip(residues, moduli):
        partial = total // n
        x += r * partial * pow(partial, -1, n)
    return x % total


@dataclass(frozen=True)
class DetectionRecord:
    value: int
    residues: tuple[int, ...]
    thetas: tuple[float, ...]
    probability: float
    state: QuantumState


def detect_photon_number(
    state: QuantumState, plan: CrtPlan, rng: np.random.Generator
) -> DetectionRecord:
    """Measure n mod capacity by staged runs on the conditioned state.

    Each stage's record must land within a quarter grid spacing of some
    l/N_i; anything farther is ambiguous and raises a low-confidence
    error carrying the raw outcomes."""
    current = state
    residues = []
    thetas = []
    prob = 1.0
    for order, schedule in zip(plan.moduli, plan.schedules()):
        traj = run_trajectory(current, schedule, rng)
        frac = traj.theta * order
        nearest = round(frac)
        if abs(frac - nearest) > CONFIDENCE_FRACTION:
            raise LowConfidenceOutcomeError(
                f"stage record theta={traj.theta:.6f} sits {abs(frac - nearest) / order:.4f} "
                f"from the nearest point of the order-{order} grid",
                outcomes=tuple(thetas) + (traj.theta,),
            )
        residues.append(int(nearest) % order)
        thetas.append(traj.theta)
        prob *= traj.probability
        current = traj.state
    value = crt_solve(residues, plan.moduli)
    return DetectionRecord(value, tuple(residues), tuple(thetas), prob, current)


@dataclass(frozen=True)
class FockGenerationResult:
    state: QuantumState
    target: int
    attempts: int
    accepted: bool
    acceptance_rate: float
    residues: tuple[int, ...]


def generate_fock(
    state: QuantumState,
    target: int,
    plan: CrtPlan,
    rng_seed: int,
    max_attempts: int = 1000,
    exhaustive: bool = False,
) -> FockGenerationResult:
    """Distil |target> from the input by post-selecting staged records.

    An attempt is accepted when every stage's record falls in the
    deduction bin of the target's residue.  Attempt k draws from random
    stream (rng_seed, k), so results do not depend on how attempts are
    scheduled.  With exhaustive=True all max_attempts attempts run (rate
    estimated over the full budget, state taken from the first success);
    otherwise the search stops at the first acceptance.

    The returned state must hold at least 99% population at the target
    level, else the run counts as a selection failure.
    """
    if not 0 <= target < plan.capacity:
        raise PlanError(f"target {target} outside plan capacity {plan.capacity}")
    if target >= state.dim:
        raise PlanError(f"target {target} outside state dimension {state.dim}")
    want = tuple(target % n for n in plan.moduli)
    schedules = plan.schedules()
    accepted_state = None
    accepted_count = 0
    attempts_run = 0
    for attempt in range(max_attempts):
        gen = rng_mod.stream(rng_seed, attempt)
        current = state
        ok = True
        for order, want_res, schedule in zip(plan.moduli, want, schedules):
            traj = run_trajectory(current, schedule, gen)
            sector, _ = deduce_rotation_error(traj.theta, order)
            current = traj.state
            if sector != want_res:
                ok = False
                break
        attempts_run += 1
        if ok:
            accepted_count += 1
            if accepted_state is None:
                accepted_state = current
            if not exhaustive:
                break
    if accepted_state is None:
        raise SelectionFailureError(
            f"no accepted run for target {target} in {attempts_run} attempts",
            attempts=attempts_run,
        )
    population = float(accepted_state.populations()[target])
    if population < TARGET_POPULATION:
        raise SelectionFailureError(
            f"accepted state holds only {population:.4f} population at level "
            f"{target}; raise the stage depth or capacity",
            attempts=attempts_run,
        )
    return FockGenerationResult(
        state=accepted_state,
        target=target,
        attempts=attempts_run,
        accepted=True,
        acceptance_rate=accepted_count / attempts_run,
        residues=want,
    )
