"""Ergotropy, passive states and the work/heat/ergotropy energy ledger.

Path integrals are evaluated on the stored time grid.  Each interval
contributes ``Tr[avg(rho) dH] + Tr[d rho avg(H)]``, a trapezoid form whose two
pieces add up to the exact energy difference across the interval, so the
first law closes to round-off whatever the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum_core import (
    check_density,
    check_hermitian,
    entropy_of_populations,
    project_density,
)


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class PassiveDecomposition:
    passive_state: np.ndarray
    extraction_unitary: np.ndarray
    total_energy: float
    passive_energy: float
    ergotropy: float
    entropy: float


@dataclass
class Trajectory:
    """Time-resolved states and Hamiltonian snapshots of one stroke."""

    times: np.ndarray
    states: np.ndarray  # (n, d, d)
    hamiltonians: np.ndarray  # (n, d, d)
    generator_label: str = ""
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        self.hamiltonians = np.asarray(self.hamiltonians, dtype=complex)
        n = len(self.times)
        if self.states.shape[0] != n or self.hamiltonians.shape[0] != n:
            raise TrajectoryError("times, states and hamiltonians must have equal length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise TrajectoryError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def validate(self) -> "Trajectory":
        for k, (rho, H) in enumerate(zip(self.states, self.hamiltonians)):
            check_density(rho, f"state[{k}]", trace_tol=1e-8, positivity_tol=1e-8, hermitian_tol=1e-10)
            check_hermitian(H, name=f"hamiltonian[{k}]")
        return self

    def energies(self) -> np.ndarray:
        return np.einsum("kij,kji->k", self.states, self.hamiltonians).real

    def is_constant_hamiltonian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.hamiltonians - self.hamiltonians[0]), initial=0.0) <= tol)

    def slice(self, start: int, stop: int | None = None) -> "Trajectory":
        return Trajectory(self.times[start:stop], self.states[start:stop],
                          self.hamiltonians[start:stop], self.generator_label, list(self.flags))


@dataclass(frozen=True)
class EnergyLedger:
    work: float
    dissipative_energy: float
    heat: float
    dissipative_ergotropy: float
    delta_energy: float
    flags: tuple = ()

    def closure_error(self) -> float:
        return abs(self.delta_energy - self.work - self.dissipative_energy)

    def split_error(self) -> float:
        return abs(self.dissipative_energy - self.heat - self.dissipative_ergotropy)


def passive_state(rho: np.ndarray, H: np.ndarray) -> PassiveDecomposition:
    """Passive counterpart of ``rho`` w.r.t. ``H`` and the work it hides.

    Populations (eigenvalues of rho, descending) are placed on the energy
    levels of H in ascending order.  Ties in H are broken by a stable sort.
    """
    rho = check_density(rho)
    H = check_hermitian(H)
    p, r_vec = np.linalg.eigh(rho)
    e, h_vec = np.linalg.eigh(H)
    order_p = np.argsort(-p, kind="stable")
    order_e = np.argsort(e, kind="stable")
    p_desc = np.clip(p[order_p], 0.0, None)
    e_asc = e[order_e]
    r_vec = r_vec[:, order_p]
    h_vec = h_vec[:, order_e]
    pi = (h_vec * p_desc) @ h_vec.conj().T
    pi = 0.5 * (pi + pi.conj().T)
    V = h_vec @ r_vec.conj().T
    total = float(np.sum(rho * H.T).real)
    passive = float(np.dot(p_desc, e_asc))
    return PassiveDecomposition(pi, V, total, passive, total - passive, entropy_of_populations(p_desc))


def passive_energy_bruteforce(p: np.ndarray, e: np.ndarray) -> float:
    """Minimum of sum_i p[perm[i]] * e_asc[i] over all permutations (small dims only)."""
    from itertools import permutations

    p_desc_first = np.asarray(p, dtype=float)
    e_asc = np.sort(np.asarray(e, dtype=float), kind="stable")
    return min(float(np.dot(p_desc_first[list(perm)], e_asc)) for perm in permutations(range(len(p))))


def ergotropy(rho: np.ndarray, H: np.ndarray) -> float:
    return passive_state(rho, H).ergotropy


def _require_points(traj: Trajectory):
    if len(traj) < 2:
        raise TrajectoryError("a trajectory needs at least two points")


def _pair_traces(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Tr[A_k B_k] for stacks of matrices
    return np.einsum("kij,kji->k", A, B).real


def work_along(traj: Trajectory) -> float:
    """W = int Tr[rho dH/dt] dt on the stored grid; exactly 0 for constant H."""
    _require_points(traj)
    rho_mid = 0.5 * (traj.states[1:] + traj.states[:-1])
    dH = np.diff(traj.hamiltonians, axis=0)
    return float(np.sum(_pair_traces(rho_mid, dH)))


def dissipative_energy_along(traj: Trajectory) -> float:
    """E_d = int Tr[d rho/dt H] dt on the stored grid."""
    _require_points(traj)
    drho = np.diff(traj.states, axis=0)
    H_mid = 0.5 * (traj.hamiltonians[1:] + traj.hamiltonians[:-1])
    return float(np.sum(_pair_traces(drho, H_mid)))


def passive_states_along(traj: Trajectory) -> np.ndarray:
    return np.array([passive_state(project_density(rho), H).passive_state
                     for rho, H in zip(traj.states, traj.hamiltonians)])


def heat_along(traj: Trajectory, passive: np.ndarray | None = None) -> float:
    """Q = int Tr[d pi/dt H] dt with pi(t) the passive state at each grid point."""
    _require_points(traj)
    pis = passive_states_along(traj) if passive is None else passive
    dpi = np.diff(pis, axis=0)
    H_mid = 0.5 * (traj.hamiltonians[1:] + traj.hamiltonians[:-1])
    return float(np.sum(_pair_traces(dpi, H_mid)))


def dissipative_ergotropy_along(traj: Trajectory, passive: np.ndarray | None = None) -> float:
    pis = passive_states_along(traj) if passive is None else passive
    return dissipative_energy_along(traj) - heat_along(traj, pis)


def coarse_step_flags(traj: Trajectory, passive: np.ndarray, rel: float = 1e-3) -> list[str]:
    """Flag grid intervals where the passive energy jumps by more than ``rel`` x energy scale."""
    e_pas = _pair_traces(passive, traj.hamiltonians)
    scale = max(np.max(np.abs(traj.energies())), np.max(np.abs(e_pas)), 1e-300)
    jumps = np.abs(np.diff(e_pas))
    bad = np.nonzero(jumps > rel * scale)[0]
    if len(bad):
        return [f"coarse-grid: passive energy jump > {rel:g} x scale on {len(bad)} interval(s), first at t={traj.times[bad[0]]:.6g}"]
    return []


def ledger_for_stroke(traj: Trajectory) -> EnergyLedger:
    """Work, dissipated energy, heat and dissipated ergotropy for one stroke."""
    _require_points(traj)
    pis = passive_states_along(traj)
    W = work_along(traj)
    Ed = dissipative_energy_along(traj)
    Q = heat_along(traj, pis)
    E = traj.energies()
    flags = tuple(traj.flags) + tuple(coarse_step_flags(traj, pis))
    return EnergyLedger(W, Ed, Q, Ed - Q, float(E[-1] - E[0]), flags)


def unitary_stroke_ledger(rho0: np.ndarray, rho1: np.ndarray, H0: np.ndarray, H1: np.ndarray | None = None) -> EnergyLedger:
    """Ledger of a stroke without bath contact: every energy change is work."""
    H1 = H0 if H1 is None else H1
    dE = float(np.sum(rho1 * np.transpose(H1)).real - np.sum(rho0 * np.transpose(H0)).real)
    return EnergyLedger(dE, 0.0, 0.0, 0.0, dE)
