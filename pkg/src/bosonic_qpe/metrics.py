"""Fidelities and detection-infidelity figures of merit.

The central quantity is the deduction infidelity of a depth-m run on an
order-N rotation code,

    delta(m, N) = sum_l sum_{theta in bin l} p_theta [1 - F(rho_theta, rho_l)],

where bin l collects the dyadic records within 1/2N of l/N, rho_theta is
the conditional state of record theta and rho_l the ideal projection of
the input onto rotation sector l.  Its noiseless version is computed
exactly by enumeration; the hardware-noise version Monte-Carlo samples
the exact record tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .engine import (
    GkpOutcome,
    QpeSchedule,
    deduce_rotation_error,
    gkp_record_state,
    noisy_outcome_tree,
    run_gkp_detection,
    run_noisy_gkp_detection,
    trajectory_tree,
)
from .errors import DimensionError, UndefinedReferenceError, UnreachableTrajectoryError
from .fock import QuantumState, displacement, modular_projector
from .noise import CHI_DEFAULT, G_DEFAULT, LindbladModel

ZERO_WEIGHT = 1e-12


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Pure inputs short-circuit to overlaps; the mixed-mixed branch goes
    through Hermitian eigendecompositions with eigenvalue clamping, which
    keeps F within [0, 1] to numerical precision.
    """
    if a.dim != b.dim:
        raise DimensionError("fidelity needs states of equal dimension")
    if a.is_pure and b.is_pure:
        return float(min(1.0, abs(np.vdot(a.data, b.data)) ** 2))
    if a.is_pure or b.is_pure:
        psi, rho = (a, b) if a.is_pure else (b, a)
        val = float(np.real(np.vdot(psi.data, rho.data @ psi.data)))
        return float(min(1.0, max(0.0, val)))
    evals, vecs = np.linalg.eigh(a.data)
    evals = np.clip(evals, 0.0, None)
    sqrt_a = (vecs * np.sqrt(evals)) @ vecs.conj().T
    inner = sqrt_a @ b.data @ sqrt_a
    inner = (inner + inner.conj().T) / 2
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sqrt(w).sum() ** 2))


def reference_error_state(state: QuantumState, order: int, sector: int) -> QuantumState:
    """Normalised projection of the input onto rotation sector l
    (Fock levels n = l mod order)."""
    proj = modular_projector(state.dim, order, sector)
    rho = proj @ state.density_matrix() @ proj
    weight = float(rho.trace().real)
    if weight < ZERO_WEIGHT:
        raise UndefinedReferenceError(
            f"sector {sector} mod {order} carries weight {weight:.2e}; "
            f"no reference state exists there"
        )
    return QuantumState.density(rho)


@dataclass(frozen=True)
class BinReport:
    sector: int
    loss_count: int
    probability: float
    infidelity: float


@dataclass(frozen=True)
class InfidelityReport:
    """delta(m, N) with its per-sector breakdown.

    samples is None for exact enumeration; stderr likewise.
    """

    total: float
    order: int
    depth: int
    t_total: float
    bins: tuple[BinReport, ...]
    samples: int | None = None
    stderr: float | None = None


def deduction_infidelity(
    state: QuantumState, order: int, m: int, chi: float = CHI_DEFAULT
) -> InfidelityReport:
    """Exact noiseless delta(m, N) by full record enumeration."""
    schedule = QpeSchedule.rotation(order, m, chi)
    leaves = trajectory_tree(state, schedule)
    return _tally(state, order, m, schedule.t_total, [
        (bits, p, cond) for bits, p, cond in leaves
    ])


def _tally(state, order, m, t_total, leaves, counts=None, samples=None):
    references: dict[int, QuantumState | None] = {}
    per_bin_p: dict[int, float] = {}
    per_bin_delta: dict[int, float] = {}
    total = 0.0
    sq_total = 0.0
    weight_sum = 0.0
    for idx, (bits, p, cond) in enumerate(leaves):
        weight = p if counts is None else counts[idx]
        if weight <= 0.0 or cond is None:
            continue
        theta = _theta_of(bits)
        sector, _ = deduce_rotation_error(theta, order)
        if sector not in references:
            try:
                references[sector] = reference_error_state(state, order, sector)
            except UndefinedReferenceError:
                references[sector] = None
        ref = references[sector]
        miss = 1.0 if ref is None else 1.0 - fidelity(cond, ref)
        miss = max(0.0, miss)
        total += weight * miss
        sq_total += weight * miss * miss
        weight_sum += weight
        per_bin_p[sector] = per_bin_p.get(sector, 0.0) + weight
        per_bin_delta[sector] = per_bin_delta.get(sector, 0.0) + weight * miss
    if counts is not None and weight_sum > 0:
        total /= weight_sum
        sq_total /= weight_sum
        per_bin_p = {k: v / weight_sum for k, v in per_bin_p.items()}
        per_bin_delta = {k: v / weight_sum for k, v in per_bin_delta.items()}
    stderr = None
    if samples:
        var = max(0.0, sq_total - total * total)
        stderr = math.sqrt(var / samples)
    bins = tuple(
        BinReport(
            sector=l,
            loss_count=(order - l) % order,
            probability=per_bin_p[l],
            infidelity=per_bin_delta[l],
        )
        for l in sorted(per_bin_p)
    )
    return InfidelityReport(
        total=total,
        order=order,
        depth=m,
        t_total=t_total,
        bins=bins,
        samples=samples,
        stderr=stderr,
    )


def _theta_of(bits) -> float:
    m = len(bits)
    return float(sum(b * 2.0 ** -(m - j + 1) for j, b in enumerate(bits, start=1)))


def total_infidelity_noisy(
    state: QuantumState,
    order: int,
    m: int,
    model: LindbladModel,
    samples: int,
    seed: int,
) -> InfidelityReport:
    """Monte-Carlo delta(m, N) under the hardware model.

    The exact record tree is enumerated once (branch states are
    deterministic given the bits) and `samples` records are drawn
    multinomially from the leaf distribution; identical in law to
    sampling independent noisy trajectories."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    schedule = QpeSchedule.rotation(order, m, model_chi(model))
    leaves = noisy_outcome_tree(state, schedule, model)
    probs = np.array([max(p, 0.0) for _, p, _ in leaves])
    norm = probs.sum()
    if not 0.99 < norm < 1.01:
        raise ValueError(f"leaf probabilities sum to {norm:.6f}; tree is inconsistent")
    gen = rng_mod.stream(seed, 0)
    counts = gen.multinomial(samples, probs / norm)
    return _tally(state, order, m, schedule.t_total, leaves, counts=counts, samples=samples)


def model_chi(model: LindbladModel) -> float:
    """Recover the dispersive shift a hardware model was built with."""
    if model.structure is None or model.structure.kind != "diag":
        raise ValueError("model does not carry a dispersive structure")
    h = model.structure.hdiag
    d = len(h) // 2
    if d < 2:
        raise ValueError("mode dimension too small")
    return float(-(h[d + 1] - h[d]))


# ---------------------------------------------------------------------------
# grid-code detection fidelity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GkpOutcomeStat:
    theta_x: float
    theta_p: float
    count: int
    fidelity: float


@dataclass(frozen=True)
class GkpFidelityReport:
    average: float
    stderr: float
    samples: int
    outcomes: tuple[GkpOutcomeStat, ...]


def gkp_detection_fidelity(
    state: QuantumState,
    m: int,
    samples: int,
    seed: int,
    g: float = G_DEFAULT,
    code_state: QuantumState | None = None,
    noise: dict | None = None,
) -> GkpFidelityReport:
    """Average fidelity between conditional states and displaced references.

    Each sampled record (theta_x, theta_p) is compared against
    D(beta) rho0 D(beta)^dag with beta = (delta_x + i delta_p) sqrt(pi/2):
    the ideal post-detection state displaced by exactly the deduced
    shifts.  rho0 is the all-zero-record conditional of the code state,
    i.e. what the detection leaves behind when it finds nothing, so an
    undisplaced input on its own zero branch scores exactly 1.
    code_state defaults to the input; pass the undisplaced codeword when
    the input itself carries an injected error.  noise, when given, is a
    dict with optional keys gamma1, gamma2, step and routes each cell
    through the hardware model (the reference stays noiseless).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    code = code_state if code_state is not None else state
    p_zero, base = gkp_record_state(code, m, (0,) * m, (0,) * m, g=g)
    if base is None:
        raise UnreachableTrajectoryError(
            f"zero record has probability {p_zero:.2e} on the supplied code state"
        )
    cache: dict[tuple[float, float], QuantumState] = {}
    stats: dict[tuple[float, float], list] = {}
    total = 0.0
    sq = 0.0
    for idx in range(samples):
        gen = rng_mod.stream(seed, idx)
        if noise is None:
            out = run_gkp_detection(state, m, gen, g=g)
        else:
            out = run_noisy_gkp_detection(
                state,
                m,
                gen,
                g=g,
                gamma1=noise.get("gamma1"),
                gamma2=noise.get("gamma2"),
                step=noise.get("step"),
            )
        key = (out.theta_x, out.theta_p)
        if key not in cache:
            beta = (out.delta_x + 1j * out.delta_p) * math.sqrt(math.pi / 2.0)
            d_op = displacement(beta, code.dim)
            if base.is_pure:
                cache[key] = QuantumState.pure(d_op @ base.data)
            else:
                cache[key] = QuantumState.density(d_op @ base.data @ d_op.conj().T)
        f = fidelity(out.state, cache[key])
        total += f
        sq += f * f
        rec = stats.setdefault(key, [0, 0.0])
        rec[0] += 1
        rec[1] += f
    mean = total / samples
    var = max(0.0, sq / samples - mean * mean)
    outcomes = tuple(
        GkpOutcomeStat(k[0], k[1], c, s / c) for k, (c, s) in sorted(stats.items())
    )
    return GkpFidelityReport(
        average=mean,
        stderr=math.sqrt(var / samples),
        samples=samples,
        outcomes=outcomes,
    )


def gkp_outcome_histogram(outcomes) -> dict:
    """Bin a list of GkpOutcome records by (theta_x, theta_p)."""
    hist: dict[tuple[float, float], int] = {}
    for out in outcomes:
        if not isinstance(out, GkpOutcome):
            raise TypeError("expected GkpOutcome records")
        key = (out.theta_x, out.theta_p)
        hist[key] = hist.get(key, 0) + 1
    return hist
