"""Bosonic code states in the truncated Fock basis.

Rotation-symmetric families (cat and binomial codewords live on the
Fock grid n = mu*N mod 2N) and square-lattice grid states built from
position combs with a finite-energy envelope.  Constructors validate
that the requested state actually fits the cutoff and raise
:class:`~bosonic_qpe.errors.InsufficientDimensionError` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientDimensionError
from .fock import (
    QuantumState,
    check_dim,
    position_comb,
    squeeze_operator,
)

TRUNCATION_LEAK_TOL = 1e-8
GKP_COMB_DROP_TOL = 1e-6
DEFAULT_GKP_DIM = 701


@dataclass(frozen=True)
class RotationCodeSpec:
    """Parameters of an order-N rotation code codeword.

    family is "cat" (amplitude alpha) or "binomial" (K+1 ladder rungs).
    mu in {0, 1} picks the logical codeword.  dim defaults to a cutoff
    comfortably above the populated levels.
    """

    family: str
    order: int
    mu: int
    dim: int
    alpha: complex | None = None
    rungs: int | None = None

    def __post_init__(self):
        if self.family not in ("cat", "binomial"):
            raise ValueError(f"unknown rotation code family {self.family!r}")
        if self.order < 1:
            raise ValueError("rotation order must be >= 1")
        if self.mu not in (0, 1):
            raise ValueError("mu must be 0 or 1")
        check_dim(self.dim)
        if self.family == "cat" and self.alpha is None:
            raise ValueError("cat codes need an amplitude alpha")
        if self.family == "binomial":
            if self.rungs is None or self.rungs < 1:
                raise ValueError("binomial codes need rungs >= 1")

    @classmethod
    def cat(cls, order: int, alpha: complex, mu: int = 0, dim: int | None = None) -> "RotationCodeSpec":
        if dim is None:
            # mean photon number |alpha|^2; keep several Poisson widths.
            dim = max(16, int(abs(alpha) ** 2 + 8 * abs(alpha) + 10))
        return cls("cat", order, mu, dim, alpha=complex(alpha))

    @classmethod
    def binomial(cls, order: int, rungs: int, mu: int = 0, dim: int | None = None) -> "RotationCodeSpec":
        if dim is None:
            dim = max(16, rungs * order + 2)
        return cls("binomial", order, mu, dim, rungs=rungs)


@dataclass(frozen=True)
class GkpSpec:
    """Finite-energy square-lattice grid state.

    delta sets the energy envelope exp(-delta^2 n); k_range the number of
    comb teeth on each side of the origin (None picks the smallest range
    whose dropped teeth carry < 1e-8 envelope weight).
    """

    delta: float
    mu: int = 0
    dim: int = DEFAULT_GKP_DIM
    k_range: int | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mu not in (0, 1):
            raise ValueError("mu must be 0 or 1")
        check_dim(self.dim)

    def resolved_k_range(self) -> int:
        if self.k_range is not None:
            if self.k_range < 1:
                raise ValueError("k_range must be >= 1")
            return self.k_range
        k = 1
        # Peak at position q ~ 2k sqrt(pi) carries envelope weight
        # ~ exp(-delta^2 q^2) = exp(-delta^2 pi (2k)^2).
        while math.exp(-self.delta**2 * math.pi * (2 * k) ** 2) >= 1e-8:
            k += 1
        return k


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def coherent_state(alpha: complex, dim: int) -> QuantumState:
    """|alpha> with an explicit truncation-leak check.

    The weight of the discarded tail sum_{n>=dim} e^{-|a|^2}|a|^{2n}/n!
    must stay below 1e-8 or the cutoff is rejected.
    """
    dim = check_dim(dim)
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amp2 = abs(alpha) ** 2
    if amp2 == 0:
        return QuantumState.fock(0, dim)
    log_weights = -amp2 + n * math.log(amp2) - log_fact
    kept = float(np.exp(log_weights).sum())
    leaked = max(0.0, 1.0 - kept)
    if leaked > TRUNCATION_LEAK_TOL:
        raise InsufficientDimensionError(
            f"coherent amplitude |alpha|={abs(alpha):.3g} leaks {leaked:.2e} "
            f"past dim={dim}; raise the cutoff",
            leaked_weight=leaked,
        )
    phases = np.exp(1j * n * np.angle(alpha)) if alpha != 0 else np.ones(dim)
    vec = np.exp(log_weights / 2) * phases
    return QuantumState.pure(vec)


def cat_state(spec: RotationCodeSpec) -> QuantumState:
    """Codeword as a sum of 2N rotated coherent states with signs (-1)^(mu j).

    Support lands on Fock levels n = mu N (mod 2N).
    """
    if spec.family != "cat":
        raise ValueError("cat_state needs a cat spec")
    two_n = 2 * spec.order
    vec = np.zeros(spec.dim, dtype=np.complex128)
    for j in range(two_n):
        rotated = coherent_state(spec.alpha * np.exp(1j * j * np.pi / spec.order), spec.dim)
        vec += (-1.0) ** (spec.mu * j) * rotated.data
    state = QuantumState.pure(vec)
    _check_rotation_support(state, spec)
    return state


def binomial_state(spec: RotationCodeSpec) -> QuantumState:
    """Codeword sum_k sqrt(2^{1-K} C(K, 2k+mu)) |(2k+mu) N>."""
    if spec.family != "binomial":
        raise ValueError("binomial_state needs a binomial spec")
    K, N = spec.rungs, spec.order
    top = K * N
    if top >= spec.dim:
        raise InsufficientDimensionError(
            f"binomial codeword occupies level {top} >= dim {spec.dim}"
        )
    vec = np.zeros(spec.dim, dtype=np.complex128)
    for j in range(spec.mu, K + 1, 2):
        vec[j * N] = math.sqrt(2.0 ** (1 - K) * math.comb(K, j))
    state = QuantumState.pure(vec)
    _check_rotation_support(state, spec)
    return state


def binomial_primitive(order: int, rungs: int, dim: int) -> QuantumState:
    """Ladder over every multiple of N up to K*N with sqrt-binomial weights.

    Projecting this onto n = mu N (mod 2N) reproduces the mu codeword, so
    it serves as the input of measurement-based codeword preparation.
    """
    dim = check_dim(dim)
    if rungs < 1 or order < 1:
        raise ValueError("order and rungs must be >= 1")
    top = rungs * order
    if top >= dim:
        raise InsufficientDimensionError(
            f"primitive occupies level {top} >= dim {dim}"
        )
    vec = np.zeros(dim, dtype=np.complex128)
    for j in range(rungs + 1):
        vec[j * order] = math.sqrt(2.0 ** (1 - rungs) * math.comb(rungs, j))
    return QuantumState.pure(vec)


def squeezed_vacuum(r: float, dim: int) -> QuantumState:
    """S(r)|0> for real r; r < 0 squeezes P (Var P = e^{2r}/2 < 1/2).

    Populations sit on even levels only, with p2/p0 = tanh(r)^2/2.
    """
    dim = check_dim(dim)
    if abs(r) > 3:
        raise ValueError("squeezing beyond |r|=3 is not resolvable at sane cutoffs")
    state = QuantumState.pure(squeeze_operator(r, dim) @ QuantumState.fock(0, dim).data)
    edge = state.truncation_edge_weight()
    if edge > TRUNCATION_LEAK_TOL:
        raise InsufficientDimensionError(
            f"squeezed vacuum r={r} keeps weight {edge:.2e} at the truncation edge",
            leaked_weight=edge,
        )
    return state


def gkp_state(spec: GkpSpec) -> QuantumState:
    """Finite-energy grid codeword: envelope e^{-delta^2 n} on a position comb.

    The ideal comb has spikes at q = (2k + mu) sqrt(pi); the envelope damps
    high-|q| teeth, and the construction verifies that teeth dropped by the
    finite k_range carry < 1e-6 weight.
    """
    k_range = spec.resolved_k_range()
    period = 2 * math.sqrt(math.pi)
    center = spec.mu * math.sqrt(math.pi)
    comb = position_comb(center, period, k_range, spec.dim)
    envelope = np.exp(-spec.delta**2 * np.arange(spec.dim))
    vec = envelope * comb
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        raise InsufficientDimensionError("grid comb vanished; dim too small for delta")
    # Weight the next tooth out would have contributed, relative to the kept state.
    next_q = center + (k_range + 1) * period
    dropped = math.exp(-spec.delta**2 * next_q**2)
    if dropped > GKP_COMB_DROP_TOL:
        raise ValueError(
            f"k_range={k_range} drops comb weight {dropped:.2e} > {GKP_COMB_DROP_TOL}"
        )
    state = QuantumState.pure(vec)
    edge = state.truncation_edge_weight()
    if edge > TRUNCATION_LEAK_TOL:
        raise InsufficientDimensionError(
            f"grid state delta={spec.delta} keeps weight {edge:.2e} at the "
            f"truncation edge of dim={spec.dim}",
            leaked_weight=edge,
        )
    return state


def logical_plus(make_codeword, spec0, spec1=None) -> QuantumState:
    """(|0_L> + |1_L>)/sqrt(2) from a codeword constructor and mu-specs."""
    s0 = make_codeword(spec0)
    s1 = make_codeword(spec1 if spec1 is not None else spec0)
    if s0.dim != s1.dim:
        raise DimensionError("codeword dimensions differ")
    return QuantumState.pure(s0.data + s1.data)


def cat_plus(order: int, alpha: complex, dim: int | None = None) -> QuantumState:
    spec0 = RotationCodeSpec.cat(order, alpha, mu=0, dim=dim)
    spec1 = RotationCodeSpec.cat(order, alpha, mu=1, dim=spec0.dim)
    return QuantumState.pure(cat_state(spec0).data + cat_state(spec1).data)


def binomial_plus(order: int, rungs: int, dim: int | None = None) -> QuantumState:
    spec0 = RotationCodeSpec.binomial(order, rungs, mu=0, dim=dim)
    spec1 = RotationCodeSpec.binomial(order, rungs, mu=1, dim=spec0.dim)
    return QuantumState.pure(binomial_state(spec0).data + binomial_state(spec1).data)


def _check_rotation_support(state: QuantumState, spec: RotationCodeSpec) -> None:
    """Codewords must live on n = mu N (mod 2N); anything else is a bug
    or a truncation artefact worth failing loudly on."""
    pops = state.populations()
    mask = (np.arange(state.dim) % (2 * spec.order)) == (spec.mu * spec.order) % (2 * spec.order)
    off_support = float(pops[~mask].sum())
    if off_support > 1e-10:
        raise InsufficientDimensionError(
            f"codeword has weight {off_support:.2e} off its Fock grid "
            f"(cutoff too tight for |alpha|={spec.alpha})",
            leaked_weight=off_support,
        )
    edge = state.truncation_edge_weight()
    if edge > TRUNCATION_LEAK_TOL:
        raise InsufficientDimensionError(
            f"codeword keeps weight {edge:.2e} at the truncation edge",
            leaked_weight=edge,
        )
