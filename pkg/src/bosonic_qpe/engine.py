"""Adaptive phase-estimation engine.

A measurement run is a sequence of m ancilla interrogation cells.  Cell i
entangles the ancilla with the mode through a pair of branch unitaries
(U_0, U_1), applies a feedback phase phi_i determined by the bits already
measured, and reads the ancilla out.  The two measurement operators of a
cell are

    M_alpha = (U_0 - (-1)^alpha e^{i phi} U_1) / 2,      alpha in {0, 1},

and the binary record (alpha_1 ... alpha_m), assembled most-significant-
last into theta = 0.alpha_m ... alpha_1, estimates (eigenvalue / kappa)
mod 1 of the interrogation generator.  Exponentially halving interaction
times plus the standard feedback rule phi_i = pi - 2 pi (0.0 alpha_{i-1}
... alpha_1) make the outcome distribution a Fejer kernel around each
eigenvalue fraction.

Schedules come in three kinds:

* "rotation"  - dispersive ancilla-number coupling; U_0 = 1 and
                U_1 = e^{+i chi n t_i}, theta estimates (n / order) mod 1;
* "quadrature" - symmetric +/- quadrature coupling, theta estimates
                (x / sqrt(pi)) mod 1 on the chosen quadrature axis;
* "custom"    - symmetric coupling to a user-supplied diagonal generator.
"""

from __future__ import annotations

import functools
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DimensionError,
    EnumerationCostError,
    UnreachableTrajectoryError,
)
from .fock import QuantumState, check_dim, quadrature_q
from .noise import (
    CHI_DEFAULT,
    G_DEFAULT,
    GAMMA1_DEFAULT,
    GAMMA2_DEFAULT,
    LindbladModel,
    default_hardware_model,
    lindblad_evolve_matrix,
)

UNREACHABLE_PROB = 1e-14
MAX_ENUMERATION_DEPTH = 12


# ---------------------------------------------------------------------------
# schedules and registers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QpeSchedule:
    """Interaction times and phase bookkeeping for one m-round run.

    times[i-1] = 2^{m-i} pi / kappa, so consecutive rounds halve; kappa is
    the angular scale that maps the generator's spectrum onto the unit
    circle (theta estimates eigenvalue/kappa mod 1).
    """

    kind: str
    m: int
    kappa: float
    times: tuple[float, ...]
    modulus: int | None = None
    coupling: float | None = None
    axis: str | None = None
    eigenvalues: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("rotation", "quadrature", "custom"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("schedule needs at least one round")
        if len(self.times) != self.m:
            raise ValueError("times must have one entry per round")
        if any(t <= 0 for t in self.times):
            raise ValueError("interaction times must be positive")
        for i in range(self.m - 1):
            if not math.isclose(self.times[i], 2 * self.times[i + 1], rel_tol=1e-12):
                raise ValueError("interaction times must halve round to round")
        if self.kind == "rotation" and (self.modulus is None or self.modulus < 1):
            raise ValueError("rotation schedules need a positive modulus")
        if self.kind == "quadrature" and self.axis not in ("q", "p"):
            raise ValueError("quadrature schedules need axis 'q' or 'p'")
        if self.kind == "custom" and self.eigenvalues is None:
            raise ValueError("custom schedules need generator eigenvalues")

    @classmethod
    def rotation(cls, order: int, m: int, chi: float = CHI_DEFAULT) -> "QpeSchedule":
        """Detect the mode's rotation sector: theta -> (n / order) mod 1."""
        if order < 1:
            raise ValueError("order must be >= 1")
        kappa = chi * order / 2.0
        times = tuple(2.0 ** (m - i) * np.pi / kappa for i in range(1, m + 1))
        return cls("rotation", m, kappa, times, modulus=order, coupling=chi)

    @classmethod
    def preparation(cls, order: int, m: int, chi: float = CHI_DEFAULT) -> "QpeSchedule":
        """Codeword preparation doubles the resolved order to 2N so the
        estimate separates the two logical sectors mu N mod 2N."""
        return cls.rotation(2 * order, m, chi)

    @classmethod
    def quadrature(cls, axis: str, m: int, g: float = G_DEFAULT) -> "QpeSchedule":
        """Modular quadrature detection: theta -> (x / sqrt(pi)) mod 1."""
        kappa = g * math.sqrt(2 * math.pi)
        times = tuple(2.0 ** (m - i) * np.pi / kappa for i in range(1, m + 1))
        return cls("quadrature", m, kappa, times, coupling=g, axis=axis)

    @classmethod
    def custom(cls, eigenvalues, kappa: float, m: int) -> "QpeSchedule":
        """Symmetric +/-V coupling to a diagonal generator with the given
        spectrum; theta estimates (v / kappa) mod 1."""
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        times = tuple(2.0 ** (m - i) * np.pi / kappa for i in range(1, m + 1))
        return cls("custom", m, kappa, times, eigenvalues=tuple(float(v) for v in eigenvalues))

    @property
    def t_total(self) -> float:
        return float(sum(self.times))


class FeedbackRegister:
    """Measured bits of one run, oldest first, plus the phase they imply."""

    __slots__ = ("bits",)

    def __init__(self, bits=()):
        self.bits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    def push(self, bit: int) -> None:
        if bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")
        self.bits.append(bit)

    @property
    def phase(self) -> float:
        return feedback_phase(self.bits)

    def theta(self) -> float:
        return theta_from_bits(self.bits)

    def __len__(self) -> int:
        return len(self.bits)


def feedback_phase(bits) -> float:
    """phi = pi - 2 pi (0.0 b_{i-1} ... b_1) for the next round after `bits`."""
    frac = 0.0
    for j, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        frac += b * 2.0 ** -(len(bits) - j + 1)
    return math.pi * (1.0 - 2.0 * frac)


def theta_from_bits(bits) -> float:
    """theta = 0.b_m ... b_1 with the last-measured bit most significant."""
    m = len(bits)
    return float(sum(b * 2.0 ** -(m - j + 1) for j, b in enumerate(bits, start=1)))


def bits_for_theta(theta: float, m: int) -> tuple[int, ...]:
    """Inverse of :func:`theta_from_bits` on the dyadic grid j / 2^m."""
    j = theta * 2.0**m
    rounded = round(j)
    if abs(j - rounded) > 1e-9 or not 0 <= rounded < 2**m:
        raise ValueError(f"theta={theta} is not on the dyadic grid of depth {m}")
    # theta * 2^m in binary reads alpha_m ... alpha_1, so bit j-1 is alpha_j.
    return tuple((rounded >> k) & 1 for k in range(m))


def fejer_kernel(order: int, x) -> np.ndarray:
    """F_order(x) = (sin(order pi x) / (order sin(pi x)))^2, periodised.

    The removable singularities at integer x take the limit value 1.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    wrapped = x - np.round(x)
    near_int = np.abs(wrapped) < 1e-13
    safe = np.where(near_int, 0.25, wrapped)
    ratio = np.sin(order * np.pi * safe) / (order * np.sin(np.pi * safe))
    out = np.where(near_int, 1.0, ratio**2)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# per-round cell data
# ---------------------------------------------------------------------------

RimResult = namedtuple("RimResult", ["p0", "state0", "p1", "state1"])
_Round = namedtuple("_Round", ["transform", "u0", "u1"])


@functools.lru_cache(maxsize=8)
def _quadrature_eigensystem(dim: int):
    """eigh of Q, shared by the P axis via the diagonal gauge i^n."""
    lam, w = np.linalg.eigh(quadrature_q(dim))
    gauge = (1j ** np.arange(dim))[:, None]
    return lam, w, gauge * w


@functools.lru_cache(maxsize=8)
def _lattice_frame_sign(dim: int):
    """Per-axis sign corrections for quadrature conditionals.

    A quadrature cell's two branch unitaries displace the conjugate axis
    by +/- scale * sqrt(pi); over a whole schedule the branches differ
    from the identity frame by an odd half-lattice step, which shows up
    as an alternating sign across the teeth of the conditioned comb.
    The alternation is record-independent, so conditional states are
    reported in the corrected frame: multiply by the diagonal sign
    (-1)^round(lambda / sqrt(pi)) in the axis eigenbasis.  Returns the
    (position, momentum) correction matrices; both are Hermitian
    involutions.
    """
    lam, wq, wp = _quadrature_eigensystem(dim)
    sign = np.where(np.round(lam / math.sqrt(math.pi)).astype(int) % 2 == 0, 1.0, -1.0)
    fq = (wq * sign) @ wq.conj().T
    fp = (wp * sign) @ wp.conj().T
    return fq, fp


def _apply_lattice_frame(state: QuantumState, axes: str) -> QuantumState:
    fq, fp = _lattice_frame_sign(state.dim)
    data = state.data
    for axis in axes:
        f = fq if axis == "q" else fp
        data = f @ data if state.is_pure else f @ data @ f
    return QuantumState.pure(data) if state.is_pure else QuantumState.density(data)


def _phase_fractions(schedule: QpeSchedule, dim: int) -> np.ndarray:
    """Per-level eigenvalue fractions w = v / kappa in the working basis."""
    if schedule.kind == "rotation":
        return np.arange(dim) / schedule.modulus
    if schedule.kind == "custom":
        v = np.asarray(schedule.eigenvalues, dtype=np.float64)
        if len(v) != dim:
            raise DimensionError("eigenvalue list does not match state dimension")
        return v / schedule.kappa
    lam, _, _ = _quadrature_eigensystem(dim)
    return lam / math.sqrt(math.pi)


def _round_data(schedule: QpeSchedule, dim: int, i: int) -> _Round:
    """Branch-unitary diagonals (and basis transform) for round i (1-based)."""
    w = _phase_fractions(schedule, dim)
    scale = 2.0 ** (schedule.m - i)
    if schedule.kind == "rotation":
        return _Round(None, np.ones(dim, dtype=np.complex128), np.exp(2j * np.pi * w * scale))
    u1 = np.exp(1j * np.pi * w * scale)
    if schedule.kind == "custom":
        return _Round(None, u1.conj(), u1)
    _, wq, wp = _quadrature_eigensystem(dim)
    transform = wq if schedule.axis == "q" else wp
    return _Round(transform, u1.conj(), u1)


def rim_cell(state: QuantumState, u0: np.ndarray, u1: np.ndarray, phase: float) -> RimResult:
    """One interrogation cell with explicit branch unitaries.

    Returns both outcome probabilities and the normalised conditional
    states; a branch with probability < 1e-14 is flagged unreachable by a
    None state.
    """
    e = np.exp(1j * phase)
    m0 = (u0 - e * u1) / 2.0
    m1 = (u0 + e * u1) / 2.0
    if state.is_pure:
        b0 = m0 @ state.data
        b1 = m1 @ state.data
        p0 = float(np.vdot(b0, b0).real)
        p1 = float(np.vdot(b1, b1).real)
        s0 = QuantumState.pure(b0) if p0 >= UNREACHABLE_PROB else None
        s1 = QuantumState.pure(b1) if p1 >= UNREACHABLE_PROB else None
    else:
        r0 = m0 @ state.data @ m0.conj().T
        r1 = m1 @ state.data @ m1.conj().T
        p0 = float(r0.trace().real)
        p1 = float(r1.trace().real)
        s0 = QuantumState.density(r0) if p0 >= UNREACHABLE_PROB else None
        s1 = QuantumState.density(r1) if p1 >= UNREACHABLE_PROB else None
    return RimResult(p0, s0, p1, s1)


def _apply_diag_cell(work, rnd: _Round, phase: float, alpha: int):
    """Unnormalised conditional update for a diagonal cell.

    work is a ket vector or a density matrix *in the working basis*; the
    return shares its layout.
    """
    e = np.exp(1j * phase)
    c = (rnd.u0 - (1 - 2 * alpha) * e * rnd.u1) / 2.0
    if work.ndim == 1:
        return c * work
    return (c[:, None] * c.conj()[None, :]) * work


def _branch_weight(work) -> float:
    if work.ndim == 1:
        return float(np.vdot(work, work).real)
    return float(work.trace().real)


def _to_working_basis(state: QuantumState, rnd: _Round):
    if rnd.transform is None:
        return state.data.copy() if state.is_pure else np.array(state.data)
    t = rnd.transform
    if state.is_pure:
        return t.conj().T @ state.data
    return t.conj().T @ state.data @ t


def _from_working_basis(work, rnd: _Round, pure: bool) -> QuantumState:
    if rnd.transform is not None:
        t = rnd.transform
        work = t @ work if pure else t @ work @ t.conj().T
    return QuantumState.pure(work) if pure else QuantumState.density(work)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """One complete measurement record and its conditional state."""

    bits: tuple[int, ...]
    theta: float
    probability: float
    state: QuantumState | None

    @property
    def m(self) -> int:
        return len(self.bits)


def run_trajectory(
    state: QuantumState, schedule: QpeSchedule, rng: np.random.Generator
) -> Trajectory:
    """Sample one adaptive run; bits are drawn from the exact Born rule.

    Pure states on diagonal schedules go through the compiled sampling
    kernel; everything else walks the cells in numpy.  The same m uniform
    variates are consumed either way.
    """
    uniforms = rng.random(schedule.m)
    if state.is_pure and schedule.kind in ("rotation", "custom"):
        amp = np.array(state.data, dtype=np.complex128)
        w = _phase_fractions(schedule, state.dim)
        bits_out = np.zeros(schedule.m, dtype=np.int64)
        form = 0 if schedule.kind == "rotation" else 1
        prob = kernels.sample_diagonal_bits(amp, w, schedule.m, form, uniforms, bits_out)
        bits = tuple(int(b) for b in bits_out)
        return Trajectory(bits, theta_from_bits(bits), float(prob), QuantumState.pure(amp))
    register = FeedbackRegister()
    current = state
    prob = 1.0
    for i in range(1, schedule.m + 1):
        rnd = _round_data(schedule, current.dim, i)
        phase = register.phase
        work = _to_working_basis(current, rnd)
        b0 = _apply_diag_cell(work, rnd, phase, 0)
        p0 = _branch_weight(b0)
        if uniforms[i - 1] < p0:
            alpha, p, branch = 0, p0, b0
        else:
            branch = _apply_diag_cell(work, rnd, phase, 1)
            p = max(_branch_weight(branch), 0.0)
            alpha = 1
        if p < UNREACHABLE_PROB:
            # Numerically dead branch: force the other outcome.
            alpha = 1 - alpha
            branch = _apply_diag_cell(work, rnd, phase, alpha)
            p = _branch_weight(branch)
        register.push(alpha)
        prob *= p
        current = _from_working_basis(branch / (p if not state.is_pure else math.sqrt(p)), rnd, state.is_pure)
    if schedule.kind == "quadrature":
        current = _apply_lattice_frame(current, schedule.axis)
    bits = tuple(register.bits)
    return Trajectory(bits, theta_from_bits(bits), prob, current)


def trajectory_superoperator(
    state: QuantumState, schedule: QpeSchedule, bits
) -> tuple[float, QuantumState | None]:
    """Deterministically replay a bit string: sequential composition of the
    m cell Kraus operators.  Returns (probability, conditional state); the
    state is None when the record is unreachable (probability < 1e-14)."""
    bits = tuple(int(b) for b in bits)
    if len(bits) != schedule.m:
        raise ValueError("bit string length must equal the schedule depth")
    current = state
    prob = 1.0
    register = FeedbackRegister()
    for i, alpha in enumerate(bits, start=1):
        rnd = _round_data(schedule, current.dim, i)
        work = _to_working_basis(current, rnd)
        branch = _apply_diag_cell(work, rnd, register.phase, alpha)
        p = max(_branch_weight(branch), 0.0)
        register.push(alpha)
        prob *= p
        if prob < UNREACHABLE_PROB:
            return prob, None
        current = _from_working_basis(
            branch / (p if not state.is_pure else math.sqrt(p)), rnd, state.is_pure
        )
    if schedule.kind == "quadrature":
        current = _apply_lattice_frame(current, schedule.axis)
    return prob, current


def trajectory_tree(state: QuantumState, schedule: QpeSchedule):
    """All 2^m records with probabilities and conditional states.

    Exact enumeration over diagonal schedules, working with unnormalised
    branches so a leaf's weight is its record probability.  Refuses
    m > 12 (exponential cost); numerically dead records are reported with
    state None so the probabilities still sum to 1.
    """
    if schedule.kind == "quadrature":
        raise ValueError("trajectory_tree supports diagonal schedules only")
    if schedule.m > MAX_ENUMERATION_DEPTH:
        raise EnumerationCostError(
            f"enumeration of 2^{schedule.m} records exceeds the depth cap "
            f"{MAX_ENUMERATION_DEPTH}"
        )
    results = []

    def descend(work, bits, i):
        if i > schedule.m:
            p = _branch_weight(work)
            if p < UNREACHABLE_PROB:
                results.append((bits, max(p, 0.0), None))
            else:
                norm = p if not state.is_pure else math.sqrt(p)
                kind = "pure" if state.is_pure else "density"
                results.append((bits, p, QuantumState(work / norm, kind)))
            return
        rnd = _round_data(schedule, state.dim, i)
        phase = feedback_phase(bits)
        for alpha in (0, 1):
            descend(_apply_diag_cell(work, rnd, phase, alpha), bits + (alpha,), i + 1)

    work0 = state.data.copy() if state.is_pure else np.array(state.data)
    descend(work0, (), 1)
    return results


def outcome_distribution(state: QuantumState, schedule: QpeSchedule):
    """Exact record statistics on the dyadic grid.

    p(theta) = sum_levels pop_level * F_{2^m}(theta - w_level): adaptive
    feedback concentrates each eigenvalue fraction w into a Fejer kernel.
    Returns (thetas, probabilities), both length 2^m.
    """
    dim = state.dim
    w = _phase_fractions(schedule, dim)
    if schedule.kind == "quadrature":
        _, wq, wp = _quadrature_eigensystem(dim)
        t = wq if schedule.axis == "q" else wp
        if state.is_pure:
            pops = np.abs(t.conj().T @ state.data) ** 2
        else:
            pops = np.real(np.diag(t.conj().T @ state.data @ t))
    else:
        pops = state.populations()
    grid = np.arange(2**schedule.m) / 2.0**schedule.m
    probs = np.array(
        [float(np.dot(pops, fejer_kernel(2**schedule.m, th - w))) for th in grid]
    )
    return grid, probs


def closed_form_trajectory_map(
    state: QuantumState,
    sectors,
    m: int,
    theta: float,
    convention: str = "symmetric",
) -> tuple[float, QuantumState | None]:
    """Single-expression form of the m-cell record superoperator.

    sectors: list of (w_k, P_k) pairs, eigenvalue fraction and projector.
    The conditional (unnormalised) map is

        rho -> sum_{k,l} (-1)^{b_kl} sqrt(F(x_k) F(x_l)) P_k rho P_l,

    x = theta - w, F the order-2^m Fejer kernel, and b_kl the floor-sum
    sign floor(x_k) + floor(2^m x_k) + floor(x_l) + floor(2^m x_l).  The
    "rotation" convention adds the commuting-generator phase
    e^{i pi (w_k - w_l)(2^m - 1)} accumulated by the dispersive form.
    """
    rho = state.density_matrix()
    coeffs = []
    for w, proj in sectors:
        x = theta - w
        c = _signed_fejer_amplitude(2**m, x)
        coeffs.append((c, w, proj))
    out = np.zeros_like(rho)
    for ck, wk, pk in coeffs:
        for cl, wl, pl in coeffs:
            term = ck * cl * (pk @ rho @ pl)
            if convention == "rotation":
                term = term * np.exp(1j * np.pi * (wk - wl) * (2**m - 1))
            out += term
    prob = float(out.trace().real)
    if prob < UNREACHABLE_PROB:
        return max(prob, 0.0), None
    return prob, QuantumState.density(out)


def _signed_fejer_amplitude(order: int, x: float) -> float:
    """(-1)^{floor(x) + floor(order x)} sqrt(F_order(x)), which equals
    sin(order pi x) / (order sin(pi x)) including its sign."""
    xi = float(x)
    if abs(xi - round(xi)) < 1e-13:
        return (-1.0) ** (round(xi) % 2) if order % 2 == 0 else 1.0
    sign = (-1.0) ** ((math.floor(xi) + math.floor(order * xi)) % 2)
    return sign * math.sqrt(fejer_kernel(order, xi))


def deduce_rotation_error(theta: float, order: int) -> tuple[int, int]:
    """Nearest rotation sector and the photon-loss count it implies.

    Bins are half-open intervals of width 1/order centred on l/order;
    a code state with support on n = 0 mod order that lost k photons
    sits in sector l = (order - k) mod order.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0.0 <= theta < 1.0:
        theta = theta % 1.0
    sector = int(math.floor(theta * order + 0.5)) % order
    loss = (order - sector) % order
    return sector, loss


# ---------------------------------------------------------------------------
# grid-code (quadrature) detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GkpOutcome:
    """Interleaved two-quadrature record: m cells per axis."""

    bits_x: tuple[int, ...]
    bits_p: tuple[int, ...]
    theta_x: float
    theta_p: float
    probability: float
    state: QuantumState | None

    @property
    def delta_x(self) -> float:
        """Deduced position shift in units of sqrt(pi): theta re-centred
        into [-1/2, 1/2)."""
        return _centered(self.theta_x)

    @property
    def delta_p(self) -> float:
        return _centered(self.theta_p)


def _centered(theta: float) -> float:
    return theta - 1.0 if theta >= 0.5 else theta


def run_gkp_detection(
    state: QuantumState,
    m: int,
    rng: np.random.Generator,
    g: float = G_DEFAULT,
) -> GkpOutcome:
    """Noiseless interleaved modular-quadrature estimation.

    Round i runs a position cell then a momentum cell, both with time
    t_i; the two feedback registers are independent.  theta_x estimates
    (x / sqrt(pi)) mod 1 and theta_p likewise for the conjugate axis.
    """
    sched_x = QpeSchedule.quadrature("q", m, g)
    sched_p = QpeSchedule.quadrature("p", m, g)
    uniforms = rng.random(2 * m)
    reg_x, reg_p = FeedbackRegister(), FeedbackRegister()
    current = state
    prob = 1.0
    for i in range(1, m + 1):
        for sched, reg, u in (
            (sched_x, reg_x, uniforms[2 * i - 2]),
            (sched_p, reg_p, uniforms[2 * i - 1]),
        ):
            rnd = _round_data(sched, current.dim, i)
            work = _to_working_basis(current, rnd)
            b0 = _apply_diag_cell(work, rnd, reg.phase, 0)
            p0 = _branch_weight(b0)
            if u < p0:
                alpha, p, branch = 0, p0, b0
            else:
                branch = _apply_diag_cell(work, rnd, reg.phase, 1)
                p = max(_branch_weight(branch), UNREACHABLE_PROB)
                alpha = 1
            reg.push(alpha)
            prob *= p
            norm = p if not state.is_pure else math.sqrt(p)
            current = _from_working_basis(branch / norm, rnd, state.is_pure)
    current = _apply_lattice_frame(current, "pq")
    return GkpOutcome(
        tuple(reg_x.bits),
        tuple(reg_p.bits),
        reg_x.theta(),
        reg_p.theta(),
        prob,
        current,
    )


def gkp_record_state(
    state: QuantumState,
    m: int,
    bits_x,
    bits_p,
    g: float = G_DEFAULT,
) -> tuple[float, QuantumState | None]:
    """Deterministically replay an interleaved dual-quadrature record.

    Mirrors trajectory_superoperator for the two-axis circuit: returns
    (probability, conditional state), with None for a record whose weight
    falls below the reachability floor.  The all-zero record of an
    undisplaced code state reproduces the state the detection ideally
    leaves behind, which is the natural reference for fidelity reports.
    """
    bits_x = tuple(int(b) for b in bits_x)
    bits_p = tuple(int(b) for b in bits_p)
    if len(bits_x) != m or len(bits_p) != m:
        raise ValueError("both bit strings must have length m")
    sched_x = QpeSchedule.quadrature("q", m, g)
    sched_p = QpeSchedule.quadrature("p", m, g)
    reg_x, reg_p = FeedbackRegister(), FeedbackRegister()
    current = state
    prob = 1.0
    for i in range(1, m + 1):
        for sched, reg, alpha in (
            (sched_x, reg_x, bits_x[i - 1]),
            (sched_p, reg_p, bits_p[i - 1]),
        ):
            rnd = _round_data(sched, current.dim, i)
            work = _to_working_basis(current, rnd)
            branch = _apply_diag_cell(work, rnd, reg.phase, alpha)
            p = max(_branch_weight(branch), 0.0)
            reg.push(alpha)
            prob *= p
            if prob < UNREACHABLE_PROB:
                return prob, None
            norm = p if not state.is_pure else math.sqrt(p)
            current = _from_working_basis(branch / norm, rnd, state.is_pure)
    return prob, _apply_lattice_frame(current, "pq")


# ---------------------------------------------------------------------------
# projection-based preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreparationResult:
    state: QuantumState
    probability: float
    bits: tuple[int, ...]
    theta: float


def prepare_by_projection(
    primitive: QuantumState,
    order: int,
    mu: int,
    m: int,
    chi: float = CHI_DEFAULT,
) -> PreparationResult:
    """Project a primitive state onto the mu codeword sector of an order-N
    rotation code by post-selecting the record theta = mu/2 of a depth-m
    preparation run (all-zero bits for mu=0; leading bit set for mu=1)."""
    if mu not in (0, 1):
        raise ValueError("mu must be 0 or 1")
    schedule = QpeSchedule.preparation(order, m, chi)
    bits = (0,) * (m - 1) + (mu,)
    prob, state = trajectory_superoperator(primitive, schedule, bits)
    if state is None or prob < 1e-12:
        raise UnreachableTrajectoryError(
            f"target record has probability {prob:.2e}; the primitive carries "
            f"no weight in the mu={mu} sector"
        )
    return PreparationResult(state, prob, bits, theta_from_bits(bits))


# ---------------------------------------------------------------------------
# noisy (hardware-model) runs
# ---------------------------------------------------------------------------


def _ancilla_rotation(phase: float) -> np.ndarray:
    """R_phi = exp(-i (pi/4)(cos phi sx + sin phi sy)) = (1 - i sigma_phi)/sqrt(2)."""
    return np.array(
        [[1.0, -1j * np.exp(-1j * phase)], [-1j * np.exp(1j * phase), 1.0]],
        dtype=np.complex128,
    ) / np.sqrt(2.0)


def _noisy_cell_children(
    mode_rho: np.ndarray, phase: float, t: float, model: LindbladModel
) -> tuple[np.ndarray, np.ndarray]:
    """One physically-simulated cell: ancilla reset to |0>, pi/2 rotation,
    joint Lindblad evolution for t, closing rotation R_{-phi}, ancilla
    measurement.  Returns the two unnormalised mode branches.

    The closing rotation uses -phi so that at zero noise the cell equals
    the Kraus pair M_alpha = (U_0 - (-1)^alpha e^{i phi} U_1)/2 exactly.
    """
    d = mode_rho.shape[0]
    r_open = _ancilla_rotation(0.0)
    r_close = _ancilla_rotation(-phase)
    # composite after reset + opening rotation: blocks R[a,0] rho R[b,0]^*
    col = r_open[:, 0]
    comp = np.empty((2 * d, 2 * d), dtype=np.complex128)
    for a in range(2):
        for b in range(2):
            comp[a * d : (a + 1) * d, b * d : (b + 1) * d] = (col[a] * np.conj(col[b])) * mode_rho
    comp = lindblad_evolve_matrix(comp, model, t)
    # closing rotation on the ancilla only: 2x2 block mixing
    blocks = [[comp[a * d : (a + 1) * d, b * d : (b + 1) * d] for b in range(2)] for a in range(2)]
    out = []
    for alpha in range(2):
        acc = np.zeros((d, d), dtype=np.complex128)
        for a in range(2):
            for b in range(2):
                acc += r_close[alpha, a] * np.conj(r_close[alpha, b]) * blocks[a][b]
        out.append(acc)
    return out[0], out[1]


def run_noisy_trajectory(
    state: QuantumState,
    schedule: QpeSchedule,
    model: LindbladModel,
    rng: np.random.Generator,
) -> Trajectory:
    """Sample one run with the interrogation physically simulated under the
    hardware model (ancilla relaxation + cavity loss during the cells).

    The model must match the schedule's Hamiltonian (dispersive for
    rotation schedules, quadrature for quadrature schedules)."""
    uniforms = rng.random(schedule.m)
    rho = state.density_matrix().astype(np.complex128)
    register = FeedbackRegister()
    prob = 1.0
    for i in range(1, schedule.m + 1):
        r0, r1 = _noisy_cell_children(rho, register.phase, schedule.times[i - 1], model)
        p0 = float(r0.trace().real)
        if uniforms[i - 1] < p0:
            alpha, p, branch = 0, p0, r0
        else:
            p1 = float(r1.trace().real)
            alpha, p, branch = 1, p1, r1
        if p < UNREACHABLE_PROB:
            alpha = 1 - alpha
            branch = r0 if alpha == 0 else r1
            p = float(branch.trace().real)
        register.push(alpha)
        prob *= p
        rho = branch / p
    bits = tuple(register.bits)
    return Trajectory(bits, theta_from_bits(bits), prob, QuantumState.density(rho))


def noisy_outcome_tree(state: QuantumState, schedule: QpeSchedule, model: LindbladModel):
    """Exact enumeration of all 2^m noisy records.

    Branch states are deterministic given the bits, so one sweep of the
    binary tree yields every leaf probability and conditional mode state;
    sampling from the returned distribution is equivalent in law to
    repeated run_noisy_trajectory calls."""
    if schedule.m > MAX_ENUMERATION_DEPTH:
        raise EnumerationCostError(
            f"enumeration of 2^{schedule.m} noisy records exceeds the depth cap"
        )
    leaves = []

    def descend(rho, bits, i):
        if i > schedule.m:
            p = float(rho.trace().real)
            if p < UNREACHABLE_PROB:
                leaves.append((bits, max(p, 0.0), None))
            else:
                leaves.append((bits, p, QuantumState.density(rho / p)))
            return
        r0, r1 = _noisy_cell_children(rho, feedback_phase(bits), schedule.times[i - 1], model)
        for alpha, branch in ((0, r0), (1, r1)):
            if float(branch.trace().real) < UNREACHABLE_PROB:
                leaves.append((bits + (alpha,) + (0,) * (schedule.m - i), 0.0, None))
            else:
                descend(branch, bits + (alpha,), i + 1)

    descend(state.density_matrix().astype(np.complex128), (), 1)
    return leaves


def run_noisy_gkp_detection(
    state: QuantumState,
    m: int,
    rng: np.random.Generator,
    g: float = G_DEFAULT,
    gamma1: float | None = None,
    gamma2: float | None = None,
    step: float | None = None,
) -> GkpOutcome:
    """Interleaved quadrature detection with the hardware model active.

    Builds one quadrature model per axis (theta = 0 for position, pi/2
    for momentum) and alternates cells exactly like the noiseless runner.
    """
    g1 = GAMMA1_DEFAULT if gamma1 is None else gamma1
    g2 = GAMMA2_DEFAULT if gamma2 is None else gamma2
    dim = state.dim
    model_x = default_hardware_model("quadrature", dim, g=g, theta=0.0, gamma1=g1, gamma2=g2, step=step)
    model_p = default_hardware_model(
        "quadrature", dim, g=g, theta=math.pi / 2, gamma1=g1, gamma2=g2, step=step
    )
    sched = QpeSchedule.quadrature("q", m, g)
    uniforms = rng.random(2 * m)
    reg_x, reg_p = FeedbackRegister(), FeedbackRegister()
    rho = state.density_matrix().astype(np.complex128)
    prob = 1.0
    for i in range(1, m + 1):
        for model, reg, u in ((model_x, reg_x, uniforms[2 * i - 2]), (model_p, reg_p, uniforms[2 * i - 1])):
            r0, r1 = _noisy_cell_children(rho, reg.phase, sched.times[i - 1], model)
            p0 = float(r0.trace().real)
            if u < p0:
                alpha, p, branch = 0, p0, r0
            else:
                alpha, p, branch = 1, float(r1.trace().real), r1
            if p < UNREACHABLE_PROB:
                alpha = 1 - alpha
                branch = r0 if alpha == 0 else r1
                p = float(branch.trace().real)
            reg.push(alpha)
            prob *= p
            rho = branch / p
    final = _apply_lattice_frame(QuantumState.density(rho), "pq")
    return GkpOutcome(
        tuple(reg_x.bits),
        tuple(reg_p.bits),
        reg_x.theta(),
        reg_p.theta(),
        prob,
        final,
    )
