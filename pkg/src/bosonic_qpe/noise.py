"""Noise channels and open-system evolution.

Two noise descriptions are used side by side and cross-checked in tests:

* a discrete photon-loss channel with Kraus operators
  ``E_k = gamma^{k/2} (1-gamma)^{n/2} sqrt(C(n+k, k))`` mapping
  ``|n+k> -> |n>`` (equivalently ``(1/sqrt k!) gamma^{k/2} (1-gamma)^{n_op/2} a^k``),
* continuous Lindblad evolution of the ancilla-plus-mode composite with
  qubit relaxation (rate gamma1) and cavity loss (rate gamma2), integrated
  with fixed-step RK4 and Hermitian symmetrisation after every step.

Default hardware numbers: chi/2pi = 2 MHz dispersive shift,
g/2pi = 21.5 MHz quadrature coupling, gamma1 = 2e-2/us, gamma2 = 1e-3/us.
Times are microseconds, angular frequencies rad/us throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import kernels
from .errors import DimensionError, IntegratorError, KrausCutoffError
from .fock import QuantumState, check_dim, ladder_operators, number_operator

CHI_DEFAULT = 2 * np.pi * 2.0  # rad/us
G_DEFAULT = 2 * np.pi * 21.5  # rad/us
GAMMA1_DEFAULT = 2e-2  # 1/us
GAMMA2_DEFAULT = 1e-3  # 1/us

KRAUS_TAIL_TOL = 1e-10
KRAUS_DEFECT_TOL = 1e-6
TRACE_DRIFT_PER_STEP = 1e-6


# ---------------------------------------------------------------------------
# photon-loss channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LossChannel:
    """Photon loss of strength gamma = 1 - e^{-chi}.

    Either parameterisation can be given; kmax (highest Kraus order kept)
    defaults to a per-state policy in :func:`apply_loss`.
    """

    gamma: float
    kmax: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"loss strength gamma must lie in [0, 1), got {self.gamma}")
        if self.kmax is not None and self.kmax < 0:
            raise ValueError("kmax must be non-negative")

    @classmethod
    def from_chi(cls, chi: float, kmax: int | None = None) -> "LossChannel":
        if chi < 0:
            raise ValueError("chi must be non-negative")
        return cls(gamma=1.0 - math.exp(-chi), kmax=kmax)

    @property
    def chi(self) -> float:
        return -math.log(1.0 - self.gamma)


def _resolve_kmax(populations: np.ndarray, gamma: float) -> int:
    """Smallest kmax whose neglected multi-photon tail is < 1e-10."""
    populated = np.flatnonzero(populations > 1e-12)
    if len(populated) == 0 or gamma == 0.0:
        return 0
    n_top = int(populated[-1])
    kmax = max(1, int(math.ceil(gamma * n_top)))
    while kmax < n_top and stats.binom.sf(kmax, n_top, gamma) >= KRAUS_TAIL_TOL:
        kmax += 1
    return kmax


def loss_kraus_operator(k: int, gamma: float, dim: int) -> np.ndarray:
    """Dense matrix of the k-photon-loss Kraus operator."""
    dim = check_dim(dim)
    op = np.zeros((dim, dim), dtype=np.complex128)
    if k >= dim:
        return op
    if gamma == 0.0:
        if k == 0:
            np.fill_diagonal(op, 1.0)
        return op
    ns = np.arange(dim - k)
    log_coef = 0.5 * (
        k * math.log(gamma)
        + ns * math.log1p(-gamma)
        + np.array([math.lgamma(n + k + 1) - math.lgamma(n + 1) - math.lgamma(k + 1) for n in ns])
    )
    op[ns, ns + k] = np.exp(log_coef)
    return op


def apply_loss(state: QuantumState, channel: LossChannel) -> QuantumState:
    """Push a state through the loss channel; always returns a density state."""
    rho = state.density_matrix()
    dim = rho.shape[0]
    pops = state.populations()
    kmax = channel.kmax if channel.kmax is not None else _resolve_kmax(pops, channel.gamma)
    kmax = min(kmax, dim - 1)
    if channel.kmax is not None and channel.gamma > 0.0:
        populated = np.flatnonzero(pops > 1e-12)
        if len(populated):
            defect = float(
                np.dot(pops[populated], stats.binom.sf(kmax, populated, channel.gamma))
            )
            if defect > KRAUS_DEFECT_TOL:
                raise KrausCutoffError(
                    f"kmax={kmax} leaves completeness defect {defect:.2e} on the "
                    f"populated block (levels up to {populated[-1]})"
                )
    if channel.gamma == 0.0:
        return state.to_density()
    out = np.zeros_like(rho)
    log_gamma = math.log(channel.gamma)
    log_keep = math.log1p(-channel.gamma)
    lgam = np.array([math.lgamma(n + 1) for n in range(dim + 1)])
    for k in range(kmax + 1):
        ns = np.arange(dim - k)
        if len(ns) == 0:
            break
        if k == 0:
            log_c = 0.5 * ns * log_keep
        else:
            log_c = 0.5 * (
                k * log_gamma + ns * log_keep + lgam[ns + k] - lgam[ns] - lgam[k]
            )
        c = np.exp(log_c)
        out[: dim - k, : dim - k] += c[:, None] * c[None, :] * rho[k:, k:]
    return QuantumState.density(out)


# ---------------------------------------------------------------------------
# composite qubit (x) mode states
# ---------------------------------------------------------------------------


def qubit_sigma_minus() -> np.ndarray:
    """|0><1| on the ancilla (true relaxation)."""
    return np.array([[0, 1], [0, 0]], dtype=np.complex128)


def compose(qubit_op: np.ndarray, mode_op: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(qubit_op, dtype=np.complex128), mode_op)


class CompositeState:
    """Density matrix of ancilla-qubit (x) mode, indexed (q*dim + n)."""

    __slots__ = ("matrix", "mode_dim")

    def __init__(self, matrix: np.ndarray, mode_dim: int):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2 * mode_dim, 2 * mode_dim):
            raise DimensionError("composite matrix must be (2 dim) x (2 dim)")
        self.matrix = matrix
        self.mode_dim = mode_dim

    @classmethod
    def from_mode(cls, mode: QuantumState, qubit_level: int = 0) -> "CompositeState":
        d = mode.dim
        mat = np.zeros((2 * d, 2 * d), dtype=np.complex128)
        block = slice(qubit_level * d, (qubit_level + 1) * d)
        mat[block, block] = mode.density_matrix()
        return cls(mat, d)

    def block(self, q: int, qp: int) -> np.ndarray:
        d = self.mode_dim
        return self.matrix[q * d : (q + 1) * d, qp * d : (qp + 1) * d]

    def mode_density(self) -> QuantumState:
        return QuantumState.density(self.block(0, 0) + self.block(1, 1))

    def qubit_populations(self) -> np.ndarray:
        return np.array([self.block(0, 0).trace().real, self.block(1, 1).trace().real])

    def trace(self) -> float:
        return float(self.matrix.trace().real)


# ---------------------------------------------------------------------------
# Lindblad models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _HardwareStructure:
    """Shape hints that route integration through the fast kernels."""

    kind: str  # "diag" | "tridiag"
    hdiag: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian + jump operators + integrator step for the composite.

    jump_ops is a tuple of (operator, rate) pairs on the full composite
    space.  `structure` is set by :func:`default_hardware_model` for the
    two hardware Hamiltonian shapes the kernels handle; hand-built models
    without it integrate through the generic dense path.
    """

    hamiltonian: np.ndarray | None
    jump_ops: tuple[tuple[np.ndarray, float], ...]
    step: float
    structure: _HardwareStructure | None = None
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("integrator step must be positive")


def default_step(chi: float | None = None, g: float | None = None, rates=()) -> float:
    """Default step policy: resolve each rotation scale to 1% and the
    fastest decay to 1e-2 of its time constant."""
    candidates = []
    if chi:
        candidates.append(0.01 / chi)
    if g:
        candidates.append(0.01 / g)
    rates = [r for r in rates if r > 0]
    if rates:
        candidates.append(1.0 / (100.0 * max(rates)))
    if not candidates:
        return 0.01
    return min(candidates)


def default_hardware_model(
    kind: str,
    dim: int,
    chi: float = CHI_DEFAULT,
    g: float = G_DEFAULT,
    theta: float = 0.0,
    gamma1: float = GAMMA1_DEFAULT,
    gamma2: float = GAMMA2_DEFAULT,
    step: float | None = None,
) -> LindbladModel:
    """Model for the two interrogation Hamiltonians.

    kind "dispersive": H = -chi |1><1| (x) n_op.
    kind "quadrature": H = g sigma_z (x) (a e^{-i theta} + a^dag e^{i theta}).
    kind "idle": no Hamiltonian (decay only).
    """
    dim = check_dim(dim)
    a, adag = ladder_operators(dim)
    eye = np.eye(dim, dtype=np.complex128)
    jumps = []
    if gamma1 > 0:
        jumps.append((compose(qubit_sigma_minus(), eye), gamma1))
    if gamma2 > 0:
        jumps.append((compose(np.eye(2), a), gamma2))
    if kind == "dispersive":
        h_mode = number_operator(dim)
        ham = compose(np.diag([0.0, -chi]), h_mode)
        structure = _HardwareStructure(
            "diag", hdiag=np.concatenate([np.zeros(dim), -chi * np.arange(dim)])
        )
        if step is None:
            step = default_step(chi=chi, rates=(gamma1, gamma2))
    elif kind == "quadrature":
        m_mode = g * (a * np.exp(-1j * theta) + adag * np.exp(1j * theta))
        ham = compose(np.diag([1.0, -1.0]), m_mode)
        structure = _HardwareStructure(
            "tridiag", upper=g * np.exp(-1j * theta) * np.sqrt(np.arange(1, dim))
        )
        if step is None:
            step = default_step(g=g, rates=(gamma1, gamma2))
    elif kind == "idle":
        ham = None
        structure = _HardwareStructure("diag", hdiag=np.zeros(2 * dim))
        if step is None:
            step = default_step(rates=(gamma1, gamma2))
    else:
        raise ValueError(f"unknown hardware kind {kind!r}")
    return LindbladModel(
        hamiltonian=ham,
        jump_ops=tuple(jumps),
        step=step,
        structure=structure,
        gamma1=gamma1,
        gamma2=gamma2,
    )


def _generic_rhs(rho: np.ndarray, ham, jumps) -> np.ndarray:
    out = np.zeros_like(rho)
    if ham is not None:
        out += -1j * (ham @ rho - rho @ ham)
    for op, rate in jumps:
        n_op = op.conj().T @ op
        out += rate * (op @ rho @ op.conj().T - 0.5 * (n_op @ rho + rho @ n_op))
    return out


def lindblad_evolve_matrix(rho: np.ndarray, model: LindbladModel, t: float) -> np.ndarray:
    """Integrate the master equation for time t on a raw density matrix."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if t == 0:
        return np.array(rho, dtype=np.complex128)
    steps = max(1, int(math.ceil(t / model.step)))
    dt = t / steps
    trace_in = float(np.trace(rho).real)
    if model.structure is not None:
        if model.structure.kind == "diag":
            out = kernels.lindblad_rk4_diag(
                rho, model.structure.hdiag, model.gamma1, model.gamma2, dt, steps
            )
        else:
            out = kernels.lindblad_rk4_tridiag(
                rho, model.structure.upper, model.gamma1, model.gamma2, dt, steps
            )
    else:
        out = np.array(rho, dtype=np.complex128)
        for _ in range(steps):
            k1 = _generic_rhs(out, model.hamiltonian, model.jump_ops)
            k2 = _generic_rhs(out + 0.5 * dt * k1, model.hamiltonian, model.jump_ops)
            k3 = _generic_rhs(out + 0.5 * dt * k2, model.hamiltonian, model.jump_ops)
            k4 = _generic_rhs(out + dt * k3, model.hamiltonian, model.jump_ops)
            out = out + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out = 0.5 * (out + out.conj().T)
    drift = abs(float(np.trace(out).real) - trace_in)
    if drift > TRACE_DRIFT_PER_STEP * steps:
        raise IntegratorError(
            f"trace drifted by {drift:.2e} over {steps} steps (dt={dt:.3e}); "
            f"reduce the integrator step"
        )
    return out


def lindblad_evolve(state: CompositeState, model: LindbladModel, t: float) -> CompositeState:
    """Composite-state wrapper around :func:`lindblad_evolve_matrix`."""
    return CompositeState(lindblad_evolve_matrix(state.matrix, model, t), state.mode_dim)
