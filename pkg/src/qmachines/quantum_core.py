"""Finite-dimensional operator algebra shared by every other module.

Operators and density matrices are plain ``numpy`` arrays; the helpers here
validate them and provide the spectral tools (entropies, matrix functions,
Gibbs states) the thermodynamic modules build on.  Units: hbar = k_B = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
SUPPORT_TOL = 1e-14


class InvalidSpaceError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class NonHermitianError(ValueError):
    pass


class DivergentRelativeEntropyError(ValueError):
    """Raised when supp(rho) is not contained in supp(sigma)."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class HilbertSpace:
    """Finite Hilbert space; ``dim = N_max + 1`` for a Fock-truncated mode."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidSpaceError(f"dimension must be an integer >= 2, got {self.dim}")

    @classmethod
    def fock(cls, n_max: int) -> "HilbertSpace":
        return cls(n_max + 1)

    @property
    def n_max(self) -> int:
        return self.dim - 1


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _as_space(space) -> HilbertSpace:
    return space if isinstance(space, HilbertSpace) else HilbertSpace(int(space))


def dag(op: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(op))


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.max(np.abs(op - dag(op)), initial=0.0) <= tol


def check_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise NonHermitianError(f"{name} must be a square matrix, got shape {op.shape}")
    if not is_hermitian(op, tol):
        err = np.max(np.abs(op - dag(op)))
        raise NonHermitianError(f"{name} is not Hermitian (max deviation {err:.3e})")
    return op


def check_density(rho: np.ndarray, name: str = "state", hermitian_tol: float = HERMITIAN_TOL,
                  trace_tol: float = TRACE_TOL, positivity_tol: float = POSITIVITY_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises :class:`InvalidStateError` on any violation of Hermiticity, unit
    trace or positivity at the given tolerances.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
        raise InvalidStateError(f"{name} must be a square matrix of size >= 2, got {rho.shape}")
    herm_err = np.max(np.abs(rho - dag(rho)))
    if herm_err > hermitian_tol:
        raise InvalidStateError(f"{name} is not Hermitian (max deviation {herm_err:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidStateError(f"{name} has trace {tr!r}")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -positivity_tol:
        raise InvalidStateError(f"{name} has negative eigenvalue {lam_min:.3e}")
    return rho


def spectral_decomposition(op: np.ndarray) -> SpectralDecomposition:
    op = check_hermitian(op)
    w, v = np.linalg.eigh(op)
    return SpectralDecomposition(w, v)


def fock_annihilation(space) -> np.ndarray:
    """Truncated annihilation operator with ``a[n-1, n] = sqrt(n)``."""
    space = _as_space(space)
    return np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), k=1).astype(complex)


def fock_number(space) -> np.ndarray:
    space = _as_space(space)
    return np.diag(np.arange(space.dim, dtype=float)).astype(complex)


def pauli_z() -> np.ndarray:
    """sigma_Z in the basis (|0>, |1>) = (ground, excited); ground has energy -1."""
    return np.diag([-1.0, 1.0]).astype(complex)


def pauli_x() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=complex)


def basis_state(space, n: int) -> np.ndarray:
    space = _as_space(space)
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    # Tr[rho op] without forming the product
    return complex(np.sum(rho * np.transpose(op)))


def _clamped_eigenvalues(rho: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(rho)
    if lam[0] < -POSITIVITY_TOL:
        raise InvalidStateError(f"negative eigenvalue {lam[0]:.3e} below clamping window")
    return np.clip(lam, 0.0, None)


def entropy_of_populations(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(max(-np.sum(nz * np.log(nz)), 0.0))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr[rho ln rho] in units of k_B, with 0 ln 0 = 0."""
    rho = check_density(rho)
    return entropy_of_populations(_clamped_eigenvalues(rho))


def bose_entropy(n: float) -> float:
    """Entropy of a thermal mode with mean occupation ``n``."""
    if n <= 0:
        return 0.0
    return float((n + 1) * np.log1p(n) - n * np.log(n))


def matrix_function(op: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply the scalar function ``f`` to a Hermitian operator spectrally."""
    dec = spectral_decomposition(op)
    fw = np.asarray(f(dec.eigenvalues))
    v = dec.eigenvectors
    return (v * fw) @ v.conj().T


def matrix_log(rho: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a full-rank positive operator."""
    rho = check_hermitian(rho, tol=1e-10)
    w, v = np.linalg.eigh(rho)
    if w[0] <= 0:
        raise DivergentRelativeEntropyError(f"operator is not full rank (min eigenvalue {w[0]:.3e})")
    return (v * np.log(w)) @ v.conj().T


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """S(rho || sigma) = Tr[rho (ln rho - ln sigma)].

    sigma may be rank deficient as long as rho has no weight outside the
    subspace where sigma's eigenvalues exceed ``SUPPORT_TOL``.
    """
    rho = check_density(rho, "rho")
    sigma = check_density(sigma, "sigma")
    lam_r, vec_r = np.linalg.eigh(rho)
    if lam_r[0] < -POSITIVITY_TOL:
        raise InvalidStateError("rho has a negative eigenvalue")
    lam_r = np.clip(lam_r, 0.0, None)
    lam_s, vec_s = np.linalg.eigh(sigma)
    # |<r_i|s_j>|^2 overlaps between the two eigenbases
    overlap = np.abs(vec_r.conj().T @ vec_s) ** 2
    weight = lam_r @ overlap  # weight of rho on each sigma eigenvector
    outside = lam_s <= SUPPORT_TOL
    if np.any(weight[outside] > 1e-12):
        raise DivergentRelativeEntropyError(
            f"rho has weight {weight[outside].sum():.3e} outside the support of sigma")
    log_s = np.where(outside, 0.0, np.log(np.where(outside, 1.0, lam_s)))
    neg_entropy = -entropy_of_populations(lam_r)
    cross = float(weight @ log_s)
    return max(neg_entropy - cross, 0.0)


def bose_occupation(omega: float, T: float) -> float:
    """Thermal occupation 1/(exp(omega/T) - 1); zero at T = 0."""
    if T < 0:
        raise DomainError(f"temperature must be non-negative, got {T}")
    if omega <= 0:
        raise DomainError(f"frequency must be positive, got {omega}")
    if T == 0 or omega / T > 700.0:  # exp overflows; the occupation is below 1e-304 anyway
        return 0.0
    return float(1.0 / np.expm1(omega / T))


def temperature_from_occupation(omega: float, n: float) -> float:
    """Invert the Bose function; occupations below 1e-12 map to T = 0."""
    if n < 1e-12:
        return 0.0
    return float(omega / np.log1p(1.0 / n))


def gibbs_state(H: np.ndarray, T: float) -> np.ndarray:
    """exp(-H/T)/Z.  For ``T >= 1e6 * ||H||`` the maximally mixed state is returned."""
    H = check_hermitian(H)
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")
    w, v = np.linalg.eigh(H)
    scale = np.max(np.abs(w))
    if T >= 1e6 * scale:
        return np.eye(H.shape[0], dtype=complex) / H.shape[0]
    p = np.exp(-(w - w[0]) / T)
    p /= p.sum()
    rho = (v * p) @ v.conj().T
    return 0.5 * (rho + dag(rho))


def thermal_state(space, n_bar: float) -> np.ndarray:
    """Truncated Gibbs state of a mode with mean occupation ``n_bar`` (n_bar = 0 gives vacuum)."""
    space = _as_space(space)
    if n_bar < 0:
        raise DomainError("occupation must be non-negative")
    if n_bar == 0:
        return basis_state(space, 0)
    q = n_bar / (n_bar + 1.0)
    p = q ** np.arange(space.dim)
    return np.diag(p / p.sum()).astype(complex)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dag(g)
    rho /= np.trace(rho).real
    return 0.5 * (rho + dag(rho))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + dag(g))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def project_density(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Nearest density matrix for a numerically perturbed state.

    Eigenvalues down to ``-tol`` are clipped and the trace restored; anything
    more negative is a genuine error.
    """
    rho = 0.5 * (np.asarray(rho, dtype=complex) + dag(np.asarray(rho, dtype=complex)))
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise InvalidStateError(f"negative eigenvalue {w[0]:.3e} beyond projection tolerance")
    if w[0] >= 0 and abs(w.sum() - 1.0) <= TRACE_TOL:
        return rho
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    out = (v * w) @ dag(v)
    return 0.5 * (out + dag(out))
