"""Markovian master equations: generator assembly, integration, steady states.

The dissipator convention is ``D(A, B)[rho] = 2 A rho B - B A rho - rho B A``.
Liouvillian superoperators use column stacking, ``vec(A rho B) = (B^T kron A) vec(rho)``.

Bath generators for oscillator working fluids are written in the frame
rotating with the mode frequency (the bath squeezing phase is fixed in that
frame), so by default the free Hamiltonian only enters the energy bookkeeping
and not the coherent part of the evolution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .passivity import Trajectory
from .quantum_core import (
    HilbertSpace,
    InvalidStateError,
    bose_occupation,
    check_density,
    fock_annihilation,
    trace_distance,
    fock_number,
    pauli_z,
)

log = logging.getLogger(__name__)

CP_TOL = 1e-12
TRUNCATION_TOL = 1e-6


class IntegrationError(RuntimeError):
    pass


class TruncationError(IntegrationError):
    """Population leaked into the top of a truncated Fock space."""


class TraceDriftError(IntegrationError):
    pass


class SteadyStateError(RuntimeError):
    pass


class GeneratorError(ValueError):
    pass


def _at(value, t: float):
    return value(t) if callable(value) else value


@dataclass(frozen=True)
class DissipatorSpec:
    """Term ``rate * D(A, B)``; ``rate`` may be a function of time."""

    A: np.ndarray
    B: np.ndarray
    rate: float | Callable[[float], float]

    def rate_at(self, t: float) -> float:
        return float(_at(self.rate, t))


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    store_every: float | None = None
    method: str = "RK45"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.store_every is not None and not self.store_every > 0:
            raise ValueError("store_every must be positive")


@dataclass(frozen=True)
class GeneratorSpec:
    """A (possibly time-dependent) Lindblad generator.

    ``hamiltonian`` is the system energy operator H(t) used for all energy
    bookkeeping.  It drives coherent evolution only when ``rotating_frame`` is
    false.  ``drive`` is an additional coherent term (e.g. a pump written in
    the rotating frame) that is not counted as system energy.
    """

    hamiltonian: np.ndarray | Callable[[float], np.ndarray]
    dissipators: tuple[DissipatorSpec, ...] = ()
    label: str = "generator"
    drive: np.ndarray | Callable[[float], np.ndarray] | None = None
    rotating_frame: bool = False
    fock: bool = False
    kappa: float = 1.0
    params: dict = field(default_factory=dict)
    counterpart: Callable[[], "GeneratorSpec"] | None = None

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        d = np.asarray(self.H(0.0)).shape[0]
        eye = sp.identity(d, format="csr", dtype=complex)
        superops = []
        for spec in self.dissipators:
            A, B = sp.csr_matrix(spec.A), sp.csr_matrix(spec.B)
            BA = (B @ A).tocsr()
            superops.append((2.0 * sp.kron(B.T, A) - sp.kron(eye, BA) - sp.kron(BA.T, eye)).tocsr())
        object.__setattr__(self, "_superops", superops)
        object.__setattr__(self, "_eye", eye)
        static_coherent = None
        if not (callable(self.hamiltonian) and not self.rotating_frame) and not callable(self.drive):
            static_coherent = self._coherent_superop(0.0)
        object.__setattr__(self, "_static_coherent", static_coherent)

    @property
    def dim(self) -> int:
        return np.asarray(self.H(0.0)).shape[0]

    @property
    def time_dependent(self) -> bool:
        return (callable(self.hamiltonian) or callable(self.drive)
                or any(callable(d.rate) for d in self.dissipators))

    def H(self, t: float) -> np.ndarray:
        return np.asarray(_at(self.hamiltonian, t), dtype=complex)

    def coherent(self, t: float) -> np.ndarray | None:
        parts = []
        if not self.rotating_frame:
            parts.append(self.H(t))
        if self.drive is not None:
            parts.append(np.asarray(_at(self.drive, t), dtype=complex))
        if not parts:
            return None
        return sum(parts)

    def _coherent_superop(self, t: float):
        Hc = self.coherent(t)
        if Hc is None:
            return None
        Hs = sp.csr_matrix(Hc)
        return (-1j * (sp.kron(self._eye, Hs) - sp.kron(Hs.T, self._eye))).tocsr()

    def apply_vec(self, v: np.ndarray, t: float = 0.0) -> np.ndarray:
        """L(t) acting on column-stacked vec(rho)."""
        coh = self._static_coherent if self._static_coherent is not None else self._coherent_superop(t)
        out = coh @ v if coh is not None else np.zeros_like(v, dtype=complex)
        for spec, S in zip(self.dissipators, self._superops):
            g = spec.rate_at(t)
            if g != 0.0:
                out = out + g * (S @ v)
        return out

    def apply(self, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
        """L(t) rho."""
        return unvec(self.apply_vec(vec(rho), t))

    def liouvillian(self, t: float = 0.0) -> sp.csr_matrix:
        """Sparse superoperator acting on column-stacked vec(rho)."""
        d = self.dim
        L = sp.csr_matrix((d * d, d * d), dtype=complex)
        coh = self._static_coherent if self._static_coherent is not None else self._coherent_superop(t)
        if coh is not None:
            L = L + coh
        for spec, S in zip(self.dissipators, self._superops):
            g = spec.rate_at(t)
            if g != 0.0:
                L = L + g * S
        return L.tocsr()

    def sparsity_pattern(self) -> sp.csr_matrix | None:
        """Structural non-zeros of L(t) for every t, or None if a time-dependent coherent part hides them."""
        if self._static_coherent is None and self.coherent(0.0) is not None:
            return None
        n = self.dim ** 2
        P = sp.csr_matrix((n, n), dtype=float)
        if self._static_coherent is not None:
            P = P + abs(self._static_coherent)
        for S in self._superops:
            P = P + abs(S)
        return (P > 0).astype(float).tocsr()

    def thermal_counterpart(self) -> "GeneratorSpec":
        if self.counterpart is None:
            raise GeneratorError(f"generator {self.label!r} has no thermal counterpart")
        return self.counterpart()


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape((d, d), order="F")


def squeezed_coefficients(n_bar: float, r: float) -> tuple[float, float]:
    """(N, M) of the squeezed thermal bath with zero squeezing phase."""
    ch, sh = np.cosh(r), np.sinh(r)
    N = n_bar * (ch ** 2 + sh ** 2) + sh ** 2
    M = -ch * sh * (2 * n_bar + 1)
    return float(N), float(M)


def excess_occupation(n_bar: float, r: float) -> float:
    """Squeezing-induced excess excitation (2 n + 1) sinh^2 r."""
    return float((2 * n_bar + 1) * np.sinh(r) ** 2)


def _check_cp(N: float, M: float):
    if N * (N + 1) - M * M < -CP_TOL * max(1.0, N * (N + 1)):
        raise GeneratorError(f"coefficients violate complete positivity: N={N}, M={M}")


def _squeezed_terms(kappa, a, coeffs: Callable[[float], tuple[float, float]] | tuple[float, float]):
    ad = a.conj().T
    if callable(coeffs):
        def rate(which):
            def g(t):
                N, M = coeffs(t)
                return {"down": kappa * (N + 1), "up": kappa * N, "cross": -kappa * M}[which]
            return g
        down, up, cross = rate("down"), rate("up"), rate("cross")
    else:
        N, M = coeffs
        down, up, cross = kappa * (N + 1), kappa * N, -kappa * M
    terms = [DissipatorSpec(a, ad, down), DissipatorSpec(ad, a, up)]
    if callable(coeffs) or cross != 0.0:
        terms += [DissipatorSpec(a, a, cross), DissipatorSpec(ad, ad, cross)]
    return tuple(terms)


def squeezed_bath_generator(kappa: float, n_bar: float, r: float, omega: float, space,
                            rotating_frame: bool = True) -> GeneratorSpec:
    """Mode of frequency ``omega`` damped at rate ``kappa`` by a squeezed thermal bath."""
    space = space if isinstance(space, HilbertSpace) else HilbertSpace(int(space))
    if kappa <= 0 or omega <= 0 or n_bar < 0 or r < 0:
        raise GeneratorError("need kappa > 0, omega > 0, n_bar >= 0, r >= 0")
    N, M = squeezed_coefficients(n_bar, r)
    _check_cp(N, M)
    occupation = n_bar + excess_occupation(n_bar, r)
    if space.n_max < 10 * occupation:
        raise TruncationError(
            f"N_max={space.n_max} too small for steady occupation {occupation:.4g} (need >= {10 * occupation:.4g})")
    a = fock_annihilation(space)
    H = omega * fock_number(space)
    label = f"squeezed-bath(kappa={kappa:g}, n={n_bar:g}, r={r:g}, omega={omega:g}, dim={space.dim})"
    params = dict(kind="squeezed-bath", kappa=kappa, n_bar=n_bar, r=r, omega=omega, dim=space.dim)

    def thermal():
        return squeezed_bath_generator(kappa, n_bar, 0.0, omega, space, rotating_frame)

    return GeneratorSpec(H, _squeezed_terms(kappa, a, (N, M)), label, None, rotating_frame, True, kappa,
                         params, thermal)


def thermal_generator(kappa: float, n_bar: float, omega: float, space, rotating_frame: bool = True) -> GeneratorSpec:
    return squeezed_bath_generator(kappa, n_bar, 0.0, omega, space, rotating_frame)


def ramped_squeezed_bath_generator(kappa: float, T: float, r: float, omega_of_t: Callable[[float], float],
                                   space, label: str = "ramp", rotating_frame: bool = True) -> GeneratorSpec:
    """Squeezed bath at temperature T acting on a mode whose frequency follows ``omega_of_t``.

    The bath occupation is re-evaluated at the instantaneous frequency (the
    generator follows the Hamiltonian adiabatically).
    """
    space = space if isinstance(space, HilbertSpace) else HilbertSpace(int(space))
    if T < 0 or r < 0 or kappa <= 0:
        raise GeneratorError("need T >= 0, r >= 0, kappa > 0")
    a = fock_annihilation(space)
    num = fock_number(space)

    def coeffs(t):
        N, M = squeezed_coefficients(bose_occupation(omega_of_t(t), T), r)
        return N, M

    _check_cp(*coeffs(0.0))
    gen_label = f"ramped-squeezed-bath(kappa={kappa:g}, T={T:g}, r={r:g}, {label}, dim={space.dim})"
    params = dict(kind="ramped-squeezed-bath", kappa=kappa, T=T, r=r, dim=space.dim, ramp=label)

    def thermal():
        return ramped_squeezed_bath_generator(kappa, T, 0.0, omega_of_t, space, label, rotating_frame)

    return GeneratorSpec(lambda t: omega_of_t(t) * num, _squeezed_terms(kappa, a, coeffs), gen_label, None,
                         rotating_frame, True, kappa, params, thermal)


def qubit_thermal_generator(kappa: float, T: float, omega0: float) -> GeneratorSpec:
    """Two-level system H = (omega0/2) sigma_Z relaxing in a thermal bath (lab frame)."""
    n = bose_occupation(omega0, T)
    sm = fock_annihilation(2)
    H = 0.5 * omega0 * pauli_z()
    terms = (DissipatorSpec(sm, sm.conj().T, kappa * (n + 1)), DissipatorSpec(sm.conj().T, sm, kappa * n))
    return GeneratorSpec(H, terms, f"qubit-thermal(kappa={kappa:g}, T={T:g}, omega0={omega0:g})", kappa=kappa,
                         params=dict(kind="qubit-thermal", kappa=kappa, T=T, omega0=omega0))


def unitary_generator(H: np.ndarray | Callable[[float], np.ndarray], label: str = "unitary") -> GeneratorSpec:
    return GeneratorSpec(H, (), label)


def top_population(rho: np.ndarray, levels: int = 2) -> float:
    return float(np.real(np.trace(rho[-levels:, -levels:])))


def _validate_stored(gen: GeneratorSpec, times, states):
    for t, rho in zip(times, states):
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-8:
            raise TraceDriftError(f"trace drifted to {tr!r} at t={t:.6g}")
        if gen.fock:
            top = top_population(rho)
            if top >= TRUNCATION_TOL:
                raise TruncationError(
                    f"population {top:.3e} in the top two Fock levels at t={t:.6g}; increase N_max")
        herm = 0.5 * (rho + rho.conj().T)
        lam = np.linalg.eigvalsh(herm)[0]
        if lam < -1e-8:
            raise InvalidStateError(f"positivity lost (eigenvalue {lam:.3e}) at t={t:.6g}")


def _slow_driving_flags(gen: GeneratorSpec, times) -> list[str]:
    if not callable(gen.hamiltonian) or len(times) < 2:
        return []
    worst = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        H0, H1 = gen.H(t0), gen.H(t1)
        nrm = max(np.linalg.norm(H0, 2), 1e-300)
        worst = max(worst, np.linalg.norm(H1 - H0, 2) / (t1 - t0) / nrm)
    if worst > 0.1 * gen.kappa:
        return [f"slow-driving violated: max |dH/dt|/|H| = {worst:.3g} > 0.1 kappa"]
    return []


def reachable_support(gen: GeneratorSpec, y0: np.ndarray) -> np.ndarray:
    """Indices of vec(rho) that the generator can ever populate starting from ``y0``.

    The ODE is exactly confined to this set (e.g. the diagonal for a thermal
    bath acting on a diagonal state), so integrating only there is lossless.
    """
    pattern = gen.sparsity_pattern()
    if pattern is None:
        return np.arange(y0.size)
    mask = np.abs(y0) > 0
    while True:
        grown = mask | (pattern @ mask.astype(float) > 0)
        if np.array_equal(grown, mask):
            return np.nonzero(mask)[0]
        mask = grown


def _restricted_rhs(gen: GeneratorSpec, idx: np.ndarray, t0: float):
    full = len(idx) == gen.dim ** 2
    if not gen.time_dependent:
        L = gen.liouvillian(t0)
        if not full:
            L = L[idx][:, idx].tocsr()
        return lambda t, y: L @ y
    if full:
        return lambda t, y: gen.apply_vec(y, t)
    sub = [S[idx][:, idx].tocsr() for S in gen._superops]
    static_coh = None if gen._static_coherent is None else gen._static_coherent[idx][:, idx].tocsr()

    def rhs(t, y):
        coh = static_coh
        if coh is None:
            c = gen._coherent_superop(t)
            coh = None if c is None else c[idx][:, idx]
        out = coh @ y if coh is not None else np.zeros_like(y)
        for spec, S in zip(gen.dissipators, sub):
            g = spec.rate_at(t)
            if g != 0.0:
                out = out + g * (S @ y)
        return out

    return rhs


def integrate(gen: GeneratorSpec, rho0: np.ndarray, t_span: Sequence[float],
              cfg: IntegrationConfig | None = None, t_eval: Sequence[float] | None = None) -> Trajectory:
    """Integrate rho' = L(t) rho with an adaptive explicit Runge-Kutta scheme.

    States are stored on ``t_eval`` (or every ``cfg.store_every``) through the
    solver's dense output.  Every stored state is re-validated; the trace is
    never renormalized.
    """
    cfg = cfg or IntegrationConfig()
    rho0 = check_density(rho0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    d = rho0.shape[0]
    if t_eval is None:
        if cfg.store_every is None:
            t_eval = np.linspace(t0, t1, 201)
        else:
            n = int(np.ceil((t1 - t0) / cfg.store_every - 1e-9))
            t_eval = np.linspace(t0, t1, n + 1)
    t_eval = np.asarray(t_eval, dtype=float)

    y0 = vec(rho0).astype(complex)
    idx = reachable_support(gen, y0)
    rhs = _restricted_rhs(gen, idx, t0)
    sol = solve_ivp(rhs, (t0, t1), y0[idx], method=cfg.method, t_eval=t_eval,
                    rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step)
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}")
    y = np.zeros((d * d, len(sol.t)), dtype=complex)
    y[idx] = sol.y
    states = np.transpose(y.T.reshape(-1, d, d), (0, 2, 1))
    _validate_stored(gen, sol.t, states)
    states = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    hams = np.array([gen.H(t) for t in sol.t])
    flags = _slow_driving_flags(gen, sol.t)
    for f in flags:
        log.warning(f)
    return Trajectory(sol.t, states, hams, gen.label, flags)


def _nullity_dense(L: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(L, compute_uv=False)
    return int(np.sum(s <= tol * max(s[0], 1e-300)))


def _second_smallest_eig(L: sp.csr_matrix, scale: float) -> float:
    vals = spla.eigs(L.tocsc(), k=2, sigma=1e-2 * scale, which="LM", return_eigenvectors=False, tol=1e-10)
    return float(np.sort(np.abs(vals))[-1])


def steady_state(gen: GeneratorSpec, t: float = 0.0, rank_tol: float = 1e-9) -> np.ndarray:
    """Unique stationary state of L(t), from the null space of the Liouvillian."""
    L = gen.liouvillian(t)
    d = gen.dim
    scale = max(abs(L).max(), 1e-300)
    if d * d <= 900:
        if _nullity_dense(L.toarray(), rank_tol) != 1:
            raise SteadyStateError("Liouvillian null space is not one-dimensional")
    else:
        if _second_smallest_eig(L, scale) <= rank_tol * scale:
            raise SteadyStateError("Liouvillian null space is not one-dimensional")
    # rows of vec(rho) diagonal entries sum to zero, so one of them can carry the trace condition
    trace_row = sp.csr_matrix(vec(np.eye(d)).reshape(1, -1))
    A = sp.vstack([trace_row, L[1:]]).tocsc()
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    x = spla.spsolve(A, b)
    rho = unvec(x)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    if not np.all(np.isfinite(rho)):
        raise SteadyStateError("steady-state solve produced non-finite entries")
    return check_density(rho, "steady state", hermitian_tol=1e-10, trace_tol=1e-10, positivity_tol=1e-9)


def residual(gen: GeneratorSpec, rho: np.ndarray, t: float = 0.0) -> float:
    """Max-norm of L(t) rho."""
    return float(np.max(np.abs(gen.apply(rho, t))))


def stationarity_change(traj: Trajectory, kappa: float = 1.0) -> float:
    """Trace distance between the last state and the state one 1/kappa earlier."""
    t_back = traj.times[-1] - 1.0 / kappa
    k = int(np.searchsorted(traj.times, t_back - 1e-12))
    if k >= len(traj.times) - 1 or traj.times[k] > t_back + 1e-9:
        raise IntegrationError("trajectory too short or too coarse to judge stationarity")
    return trace_distance(traj.states[-1], traj.states[k])


def relax_to_steady(gen: GeneratorSpec, rho0: np.ndarray, t_max: float, cfg: IntegrationConfig | None = None,
                    tol: float = 1e-7, n_store: int = 201) -> Trajectory:
    """Integrate a static generator for ``t_max`` and require stationarity at the end.

    Stationary means the trace distance moved by less than ``tol`` over the
    last 1/kappa.
    """
    grid = np.union1d(np.linspace(0.0, t_max, n_store), [t_max - 1.0 / gen.kappa])
    grid = grid[grid >= 0.0]
    traj = integrate(gen, rho0, (0.0, t_max), cfg, t_eval=grid)
    change = stationarity_change(traj, gen.kappa)
    if change > tol:
        raise IntegrationError(
            f"steady state not reached after t={t_max:g} (change {change:.2e} per 1/kappa); use a longer stroke time")
    return traj
