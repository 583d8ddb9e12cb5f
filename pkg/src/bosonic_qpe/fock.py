"""Linear algebra on a truncated Fock space.

Everything downstream (codes, channels, the estimation engine) works with
plain complex ndarrays in the number basis ``{|0>, ..., |dim-1>}`` of a
single bosonic mode, wrapped in a small :class:`QuantumState` container
that knows whether it holds a ket or a density matrix.  Quadratures use
the convention ``Q = (a + a^dag)/sqrt(2)``, ``P = -i(a - a^dag)/sqrt(2)``,
so ``[Q, P] = i`` and a coherent state |alpha> sits at
``(x, p) = sqrt(2) (Re alpha, Im alpha)`` in phase space.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionError

# Tolerances used by state validation and operator predicates.
STATE_ATOL = 1e-10
HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-9

# Fraction of the top Fock levels treated as the "truncation edge" when a
# routine needs to decide whether a state still fits the cutoff.
EDGE_FRACTION = 0.05


def check_dim(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise DimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


class QuantumState:
    """A pure ket or a density matrix on one truncated mode.

    Instances are immutable: the stored array is marked read-only, and all
    operations return new objects.  Construction normalizes (unit norm for
    kets, unit trace for density matrices) and then validates.
    """

    __slots__ = ("data", "kind")

    def __init__(self, data: np.ndarray, kind: str):
        if kind not in ("pure", "density"):
            raise ValueError(f"kind must be 'pure' or 'density', got {kind!r}")
        arr = np.array(data, dtype=np.complex128)
        if kind == "pure":
            if arr.ndim != 1:
                raise DimensionError("pure state data must be a 1-d array")
            norm = np.linalg.norm(arr)
            if norm < 1e-14:
                raise ValueError("cannot normalize a zero vector")
            arr = arr / norm
        else:
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise DimensionError("density data must be a square matrix")
            if np.abs(arr - arr.conj().T).max() > 1e-8:
                raise ValueError("density matrix is not Hermitian")
            arr = (arr + arr.conj().T) / 2
            tr = arr.trace().real
            if tr < 1e-14:
                raise ValueError("cannot normalize a zero-trace matrix")
            arr = arr / tr
        check_dim(arr.shape[0])
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def pure(cls, vec) -> "QuantumState":
        return cls(vec, "pure")

    @classmethod
    def density(cls, mat) -> "QuantumState":
        return cls(mat, "density")

    @classmethod
    def fock(cls, n: int, dim: int) -> "QuantumState":
        dim = check_dim(dim)
        if not 0 <= n < dim:
            raise DimensionError(f"Fock level {n} outside dimension {dim}")
        vec = np.zeros(dim, dtype=np.complex128)
        vec[n] = 1.0
        return cls(vec, "pure")

    # -- basic queries ------------------------------------------------

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def to_density(self) -> "QuantumState":
        if self.kind == "density":
            return self
        return QuantumState.density(np.outer(self.data, self.data.conj()))

    def density_matrix(self) -> np.ndarray:
        """The density matrix as a plain array (outer product for kets)."""
        if self.kind == "density":
            return self.data
        return np.outer(self.data, self.data.conj())

    def populations(self) -> np.ndarray:
        if self.kind == "pure":
            return np.abs(self.data) ** 2
        return self.data.diagonal().real.copy()

    def mean_photon(self) -> float:
        return float(np.dot(np.arange(self.dim), self.populations()))

    def expectation(self, op: np.ndarray) -> complex:
        if op.shape != (self.dim, self.dim):
            raise DimensionError("operator dimension mismatch")
        if self.kind == "pure":
            return complex(np.vdot(self.data, op @ self.data))
        return complex(np.trace(op @ self.data))

    def overlap(self, other: "QuantumState") -> complex:
        """<self|other> for two kets."""
        if not (self.is_pure and other.is_pure):
            raise ValueError("overlap is defined for pure states; use metrics.fidelity")
        if self.dim != other.dim:
            raise DimensionError("state dimension mismatch")
        return complex(np.vdot(self.data, other.data))

    def apply_unitary(self, u: np.ndarray) -> "QuantumState":
        if u.shape != (self.dim, self.dim):
            raise DimensionError("unitary dimension mismatch")
        if self.kind == "pure":
            return QuantumState.pure(u @ self.data)
        return QuantumState.density(u @ self.data @ u.conj().T)

    def validate(self, atol: float = STATE_ATOL) -> None:
        """Raise if the stored array no longer satisfies the state axioms."""
        if not np.all(np.isfinite(self.data.view(np.float64))):
            raise ValueError("state contains non-finite entries")
        if self.kind == "pure":
            if abs(np.linalg.norm(self.data) - 1.0) > atol:
                raise ValueError("ket norm drifted from 1")
        else:
            if np.abs(self.data - self.data.conj().T).max() > atol:
                raise ValueError("density matrix not Hermitian")
            if abs(self.data.trace().real - 1.0) > atol:
                raise ValueError("density trace drifted from 1")
            evals = np.linalg.eigvalsh(self.data)
            if evals.min() < -1e-9:
                raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")

    def truncation_edge_weight(self) -> float:
        """Population in the top EDGE_FRACTION of Fock levels."""
        edge = max(1, int(np.ceil(self.dim * EDGE_FRACTION)))
        return float(self.populations()[self.dim - edge :].sum())

    def __repr__(self) -> str:
        return f"QuantumState(kind={self.kind!r}, dim={self.dim})"


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def ladder_operators(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices (a, a^dag) at the given cutoff."""
    dim = check_dim(dim)
    a = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    return a, a.conj().T


def number_operator(dim: int) -> np.ndarray:
    dim = check_dim(dim)
    return np.diag(np.arange(dim, dtype=np.complex128))


def quadrature_q(dim: int) -> np.ndarray:
    a, adag = ladder_operators(dim)
    return (a + adag) / np.sqrt(2)


def quadrature_p(dim: int) -> np.ndarray:
    a, adag = ladder_operators(dim)
    return -1j * (a - adag) / np.sqrt(2)


def parity_operator(dim: int) -> np.ndarray:
    dim = check_dim(dim)
    return np.diag((-1.0 + 0j) ** np.arange(dim))


def modular_projector(dim: int, modulus: int, residue: int) -> np.ndarray:
    """Projector onto Fock levels with n = residue (mod modulus)."""
    dim = check_dim(dim)
    if modulus < 1:
        raise ValueError("modulus must be positive")
    mask = (np.arange(dim) % modulus) == (residue % modulus)
    return np.diag(mask.astype(np.complex128))


def is_hermitian(op: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.abs(op - op.conj().T).max() <= atol


def is_unitary(op: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    eye = np.eye(op.shape[0])
    return np.abs(op.conj().T @ op - eye).max() <= atol


def matrix_exp(op: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * op), specialised by structure.

    Diagonal matrices exponentiate entrywise and Hermitian matrices go
    through an eigendecomposition (these two cover every hot path in the
    package: number operators, quadratures, displacement and squeeze
    generators).  Anything else falls back to ``scipy.linalg.expm``.
    """
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError("matrix_exp expects a square matrix")
    if not np.all(np.isfinite(op)):
        raise ValueError("matrix_exp input has non-finite entries")
    off = op - np.diag(op.diagonal())
    if np.abs(off).max() == 0.0:
        return np.diag(np.exp(scale * op.diagonal()))
    if is_hermitian(op):
        evals, vecs = np.linalg.eigh(op)
        return (vecs * np.exp(scale * evals)) @ vecs.conj().T
    return scipy.linalg.expm(scale * np.asarray(op, dtype=np.complex128))


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """D(alpha) = exp(alpha a^dag - alpha* a)."""
    a, adag = ladder_operators(dim)
    # alpha a^dag - alpha* a = -i H with H Hermitian; route through eigh.
    h = 1j * (alpha * adag - np.conj(alpha) * a)
    return matrix_exp(h, -1j)


def squeeze_operator(zeta: complex, dim: int) -> np.ndarray:
    """S(zeta) = exp((zeta* a^2 - zeta a^dag^2)/2)."""
    a, adag = ladder_operators(dim)
    h = 1j * (np.conj(zeta) * (a @ a) - zeta * (adag @ adag)) / 2
    return matrix_exp(h, -1j)


# ---------------------------------------------------------------------------
# position representation
# ---------------------------------------------------------------------------


def position_eigenvector(q: float, dim: int) -> np.ndarray:
    """Fock coefficients <n|q> of the (improper) position eigenstate.

    Uses the stable upward recursion of the Hermite functions
    psi_{n+1}(q) = sqrt(2/(n+1)) q psi_n(q) - sqrt(n/(n+1)) psi_{n-1}(q)
    seeded by psi_0(q) = pi^{-1/4} exp(-q^2/2).  Delta-normalised:
    <q|q'> = delta(q - q'), so combs built from these need explicit
    renormalisation after truncation.
    """
    dim = check_dim(dim)
    out = np.zeros(dim, dtype=np.float64)
    out[0] = np.pi ** -0.25 * np.exp(-(q**2) / 2)
    if dim > 1:
        out[1] = np.sqrt(2.0) * q * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * q * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out.astype(np.complex128)


def position_comb(center: float, period: float, k_range: int, dim: int) -> np.ndarray:
    """Unnormalised superposition of position spikes at center + k*period.

    k runs over -k_range..k_range inclusive.  Building block for
    grid-code states; callers apply an energy envelope and normalise.
    """
    vec = np.zeros(dim, dtype=np.complex128)
    for k in range(-k_range, k_range + 1):
        vec += position_eigenvector(center + k * period, dim)
    return vec


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------


def wigner(state: QuantumState, points: np.ndarray) -> np.ndarray:
    """W(x, p) at a list of phase-space points, shape (k, 2) -> (k,).

    Iterative Clenshaw summation over the diagonals of the density
    matrix; each diagonal contributes an associated-Laguerre series
    evaluated without building the (dim x dim x points) tensor.  Values
    lie in [-1/pi, 1/pi] and integrate to 1 over the plane.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (k, 2)")
    rho = state.density_matrix()
    m = rho.shape[0]
    # Scaled phase-space coordinate; the sqrt(2) matches the Q/P convention
    # (coherent |alpha> peaks at x = sqrt(2) Re alpha).
    a2 = np.sqrt(2.0) * (pts[:, 0] + 1j * pts[:, 1])
    b = np.abs(a2) ** 2
    # Double the off-diagonals once: W = sum_d 2 Re(series_d) for d > 0.
    rho2 = rho * (2.0 - np.eye(m))
    w0 = np.full(a2.shape, rho2[0, -1], dtype=np.complex128)
    for diag in range(m - 2, -1, -1):
        c = np.diagonal(rho2, offset=diag).copy()
        w0 = _laguerre_series(diag, b, c) + w0 * a2 * (diag + 1) ** -0.5
    return np.real(w0) * np.exp(-b / 2) / np.pi


def _laguerre_series(offset: int, b: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Clenshaw evaluation of sum_n coeffs[n] L_n^{offset}(b) (scaled).

    The generalised-Laguerre recursion is folded into the running pair
    (y0, y1); the sqrt factors keep the series matched to the Fock-basis
    matrix elements of the displaced parity operator.
    """
    n = len(coeffs)
    if n == 0:
        return np.zeros_like(b, dtype=np.complex128)
    if n == 1:
        y0 = coeffs[0] * np.ones_like(b, dtype=np.complex128)
        y1 = np.zeros_like(b, dtype=np.complex128)
    elif n == 2:
        y0 = coeffs[0] * np.ones_like(b, dtype=np.complex128)
        y1 = coeffs[1] * np.ones_like(b, dtype=np.complex128)
    else:
        k = n
        y0 = coeffs[-2] * np.ones_like(b, dtype=np.complex128)
        y1 = coeffs[-1] * np.ones_like(b, dtype=np.complex128)
        for i in range(3, n + 1):
            k -= 1
            y0, y1 = (
                coeffs[-i] - y1 * np.sqrt((k - 1.0) * (offset + k - 1.0) / ((offset + k) * k)),
                y0 - y1 * (offset + 2.0 * k - 1 - b) * ((offset + k) * k) ** -0.5,
            )
    return y0 - y1 * (offset + 1 - b) * (offset + 1.0) ** -0.5


def wigner_grid(state: QuantumState, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """W on a Cartesian grid, returned with shape (len(ps), len(xs))."""
    gx, gp = np.meshgrid(np.asarray(xs, float), np.asarray(ps, float))
    pts = np.column_stack([gx.ravel(), gp.ravel()])
    return wigner(state, pts).reshape(gx.shape)
