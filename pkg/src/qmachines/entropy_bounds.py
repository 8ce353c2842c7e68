"""Entropy production and lower bounds on the entropy change of a working fluid.

Three bounds are compared for a stroke in contact with a bath at temperature T:

* the second-law bound, the integrated Spohn production term
  ``-int Tr[L rho ln rho_ss(t)] dt``.  For a thermal bath this is ``E_d / T``;
  for a squeezed bath it is ``E~_d / T`` with E~_d the energy dissipated with
  respect to the squeezed Hamiltonian ``S H S^dag`` whose Gibbs state is rho_ss;
* the tight bound ``Q / T`` (constant H), with Q the change in passive energy;
* its time-dependent form ``Q' / T``, where Q' is the energy exchanged along an
  auxiliary path that starts from the passive state and relaxes in the thermal
  counterpart of the bath.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .lindblad import (
    GeneratorError,
    GeneratorSpec,
    IntegrationConfig,
    integrate,
    stationarity_change,
    steady_state,
)
from .passivity import (
    Trajectory,
    TrajectoryError,
    passive_state,
)
from .quantum_core import (
    DivergentRelativeEntropyError,
    DomainError,
    check_hermitian,
    fock_annihilation,
    project_density,
    relative_entropy,
    von_neumann_entropy,
)

ZERO_T = 1e-9
FINALITY_TOL = 1e-6


@dataclass
class BoundReport:
    delta_S: float
    bound_second_law: float
    bound_tight: float
    sigma_trace: list = field(default_factory=list)
    satisfied: dict = field(default_factory=dict)
    slack: dict = field(default_factory=dict)
    flags: tuple = ()
    # running curves on the trajectory grid
    times: np.ndarray | None = None
    delta_S_curve: np.ndarray | None = None
    second_law_curve: np.ndarray | None = None
    tight_curve: np.ndarray | None = None
    dissipated_energy_over_T: float | None = None
    dissipated_curve: np.ndarray | None = None


def _safe_log(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return (v * np.log(np.clip(w, 1e-300, None))) @ v.conj().T


def spohn_rate(rho: np.ndarray, rho_ss: np.ndarray, rho_dot: np.ndarray) -> float:
    """sigma = -Tr[rho_dot (ln rho - ln rho_ss)].

    ``rho_ss`` must be full rank.  Zero eigenvalues of ``rho`` are floored so a
    rank-deficient state gives a large but finite rate.
    """
    rho_dot = check_hermitian(rho_dot, tol=1e-9, name="rho_dot")
    w_ss = np.linalg.eigvalsh(rho_ss)
    if w_ss[0] <= 0:
        raise DivergentRelativeEntropyError(f"reference state is not full rank (min eigenvalue {w_ss[0]:.3e})")
    diff = _safe_log(rho) - _safe_log(rho_ss)
    return float(-np.sum(rho_dot * diff.T).real)


def entropy_production_total(rho0: np.ndarray, rho_ss: np.ndarray) -> float:
    """Total production of a full relaxation, S(rho0 || rho_ss)."""
    return relative_entropy(rho0, rho_ss)


def passive_pair_inequality(pi0: np.ndarray, pi_ss: np.ndarray) -> float:
    """S(pi0 || pi_ss), the smallest production compatible with the passive endpoints."""
    return relative_entropy(pi0, pi_ss)


def sigma_along(traj: Trajectory, gen: GeneratorSpec) -> list[tuple[float, float]]:
    """(t, sigma(t)) at every stored point, with rho_dot = L(t) rho(t)."""
    static = not gen.time_dependent
    rho_ss = steady_state(gen) if static else None
    out = []
    for t, rho in zip(traj.times, traj.states):
        ss = rho_ss if static else steady_state(gen, t)
        out.append((float(t), spohn_rate(rho, ss, gen.apply(rho, t))))
    return out


def integrated_sigma(sigma_trace: list[tuple[float, float]]) -> float:
    t, s = np.array(sigma_trace).T
    return float(simpson(s, x=t))


def squeezed_number_operator(dim: int, r: float) -> np.ndarray:
    """S a^dag a S^dag for S = exp((r a^2 - r a^dag^2)/2), written algebraically in the truncated space."""
    a = fock_annihilation(dim)
    ad = a.conj().T
    c, s = np.cosh(r), np.sinh(r)
    K = c * c * (ad @ a) + s * s * (a @ ad) + c * s * (a @ a + ad @ ad)
    return 0.5 * (K + K.conj().T)


def bath_hamiltonians(traj: Trajectory, gen: GeneratorSpec | None) -> np.ndarray:
    """Hamiltonians whose Gibbs states are the bath's stationary states along ``traj``."""
    r = 0.0 if gen is None else float(gen.params.get("r", 0.0))
    if r == 0.0:
        return traj.hamiltonians
    if not gen.fock:
        raise GeneratorError("squeezed reference Hamiltonian needs an oscillator generator")
    K = squeezed_number_operator(traj.states.shape[1], r)
    d = traj.states.shape[1]
    n_op = np.diag(np.arange(d, dtype=float))
    # frequency from the diagonal of the stored H = omega a^dag a
    omegas = np.array([np.real(H[1, 1]) for H in traj.hamiltonians])
    if np.max(np.abs(traj.hamiltonians - omegas[:, None, None] * n_op)) > 1e-9 * max(omegas.max(), 1.0):
        raise GeneratorError("squeezed reference Hamiltonian needs H = omega a^dag a")
    return omegas[:, None, None] * K


def _running_energy_flow(states: np.ndarray, hams: np.ndarray) -> np.ndarray:
    """Cumulative int Tr[rho_dot H] dt with the interval-midpoint Hamiltonian."""
    drho = np.diff(states, axis=0)
    H_mid = 0.5 * (hams[1:] + hams[:-1])
    steps = np.einsum("kij,kji->k", drho, H_mid).real
    return np.concatenate([[0.0], np.cumsum(steps)])


def _entropy_curve(traj: Trajectory) -> np.ndarray:
    S = np.array([von_neumann_entropy(_clean(rho)) for rho in traj.states])
    return S - S[0]


def _clean(rho: np.ndarray) -> np.ndarray:
    return project_density(rho)


def _check_T(T: float) -> bool:
    """True when T is in the zero-temperature sentinel range."""
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")
    return T < ZERO_T


def _finalize(report: BoundReport, tol: float = 1e-8) -> BoundReport:
    for name, value in (("second_law", report.bound_second_law), ("tight", report.bound_tight)):
        if np.isnan(value):
            continue
        report.slack[name] = float(report.delta_S - value)
        report.satisfied[name] = bool(report.delta_S >= value - tol)
    return report


def _check_final(traj: Trajectory, gen: GeneratorSpec | None, waive_finality: bool):
    if waive_finality:
        return
    kappa = gen.kappa if gen is not None else 1.0
    try:
        change = stationarity_change(traj, kappa)
    except Exception as exc:  # too short to tell
        raise TrajectoryError(f"cannot confirm the trajectory ends stationary: {exc}") from exc
    if change > FINALITY_TOL:
        raise TrajectoryError(
            f"trajectory is not stationary at its end (moved {change:.2e} over 1/kappa); pass waive_finality=True")


def second_law_bound(traj: Trajectory, T: float, generator: GeneratorSpec | None = None,
                     waive_finality: bool = False, with_sigma: bool = False) -> BoundReport:
    """Delta S against the integrated Spohn term (E_d/T, or E~_d/T for a squeezed bath).

    Without a generator the bath is taken to be thermal.
    """
    zero_T = _check_T(T)
    _check_final(traj, generator, waive_finality)
    dS = _entropy_curve(traj)
    ed_curve = _running_energy_flow(traj.states, traj.hamiltonians)
    if zero_T:
        sentinel = float(np.sign(ed_curve[-1]) * np.inf) if ed_curve[-1] else 0.0
        return BoundReport(float(dS[-1]), sentinel, np.nan,
                           flags=("zero-temperature: 1/T bound reported as sentinel",), times=traj.times,
                           delta_S_curve=dS)
    ref_curve = _running_energy_flow(traj.states, bath_hamiltonians(traj, generator)) / T
    sigma = sigma_along(traj, generator) if (with_sigma and generator is not None) else []
    report = BoundReport(float(dS[-1]), float(ref_curve[-1]), np.nan, sigma, times=traj.times,
                         delta_S_curve=dS, second_law_curve=ref_curve, flags=tuple(traj.flags),
                         dissipated_energy_over_T=float(ed_curve[-1] / T), dissipated_curve=ed_curve / T)
    return _finalize(report)


def tight_bound_constant_H(traj: Trajectory, T: float, generator: GeneratorSpec | None = None,
                           waive_finality: bool = False) -> BoundReport:
    """Delta S against Q/T with Q the change of passive energy (fixed Hamiltonian)."""
    if not traj.is_constant_hamiltonian():
        raise TrajectoryError("Hamiltonian varies along the trajectory; use tight_bound_time_dependent")
    report = second_law_bound(traj, T, generator, waive_finality)
    H = traj.hamiltonians[0]
    e_pas = np.array([passive_state(_clean(rho), H).passive_energy for rho in traj.states])
    if _check_T(T):
        report.bound_tight = np.inf if e_pas[-1] > e_pas[0] else -np.inf
        return report
    report.tight_curve = (e_pas - e_pas[0]) / T
    report.bound_tight = float(report.tight_curve[-1])
    return _finalize(report)


def auxiliary_passive_path(traj: Trajectory, generator: GeneratorSpec,
                           cfg: IntegrationConfig | None = None) -> Trajectory:
    """Path starting from the passive state of rho(0) in the bath's thermal counterpart."""
    pi0 = passive_state(_clean(traj.states[0]), traj.hamiltonians[0]).passive_state
    aux_gen = generator.thermal_counterpart() if generator.params.get("r", 0.0) else generator
    return integrate(aux_gen, pi0, (traj.times[0], traj.times[-1]), cfg, t_eval=traj.times)


def tight_bound_time_dependent(traj: Trajectory, T: float, generator: GeneratorSpec,
                               cfg: IntegrationConfig | None = None, waive_finality: bool = True) -> BoundReport:
    """Delta S against Q'/T, Q' = int Tr[varrho_dot H] dt on the auxiliary passive path."""
    if generator.label != traj.generator_label:
        raise GeneratorError(
            f"trajectory was produced by {traj.generator_label!r}, not by the supplied {generator.label!r}")
    report = second_law_bound(traj, T, generator, waive_finality)
    if _check_T(T):
        return report
    aux = auxiliary_passive_path(traj, generator, cfg)
    report.tight_curve = _running_energy_flow(aux.states, aux.hamiltonians) / T
    report.bound_tight = float(report.tight_curve[-1])
    report.flags = report.flags + tuple(aux.flags)
    return _finalize(report)
