import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmachines.entropy_bounds import (
    entropy_production_total,
    integrated_sigma,
    second_law_bound,
    sigma_along,
    spohn_rate,
    squeezed_number_operator,
    tight_bound_constant_H,
    tight_bound_time_dependent,
)
from qmachines.gaussian import bath_steady_state, to_fock
from qmachines.lindblad import (
    GeneratorError,
    integrate,
    qubit_thermal_generator,
    relax_to_steady,
    squeezed_bath_generator,
    steady_state,
    thermal_generator,
)
from qmachines.passivity import Trajectory, TrajectoryError
from qmachines.quantum_core import (
    DivergentRelativeEntropyError,
    DomainError,
    basis_state,
    random_density,
    relative_entropy,
    thermal_state,
)


def _qubit_relaxation(rho0, T=1.0, t_max=25.0, n=501):
    gen = qubit_thermal_generator(1.0, T, 1.0)
    return gen, relax_to_steady(gen, rho0, t_max, n_store=n)


def test_spohn_rate_nonnegative(rng):
    gen = qubit_thermal_generator(0.7, 0.8, 1.3)
    ss = steady_state(gen)
    for _ in range(20):
        rho = random_density(2, rng)
        assert spohn_rate(rho, ss, gen.apply(rho)) >= -1e-12


def test_spohn_rate_zero_at_steady_state():
    gen = thermal_generator(1.0, 0.4, 1.0, 16)
    ss = steady_state(gen)
    assert abs(spohn_rate(ss, ss, gen.apply(ss))) < 1e-9


def test_spohn_rate_needs_full_rank_reference():
    rho = np.diag([0.5, 0.5]).astype(complex)
    with pytest.raises(DivergentRelativeEntropyError):
        spohn_rate(rho, basis_state(2, 0), np.zeros((2, 2)))


def test_integrated_sigma_equals_relative_entropy(rng):
    rho0 = random_density(2, rng)
    gen = qubit_thermal_generator(1.0, 1.0, 1.0)
    # sigma is sharply peaked at t = 0 for a nearly pure start
    grid = np.union1d(np.linspace(0.0, 25.0, 501), np.geomspace(1e-4, 1.0, 300))
    traj = integrate(gen, rho0, (0.0, 25.0), t_eval=grid)
    total = integrated_sigma(sigma_along(traj, gen))
    assert total == pytest.approx(entropy_production_total(rho0, steady_state(gen)), rel=1e-3, abs=1e-6)


def test_thermal_slack_is_relative_entropy_drop(rng):
    # Delta S - E_d/T = S(rho0||gamma) - S(rho_t||gamma) for any thermal relaxation
    rho0 = random_density(2, rng)
    gen, traj = _qubit_relaxation(rho0, T=0.6)
    rep = second_law_bound(traj, 0.6, gen)
    gamma = steady_state(gen)
    expected = relative_entropy(rho0, gamma) - relative_entropy(traj.states[-1], gamma)
    assert rep.delta_S - rep.bound_second_law == pytest.approx(expected, abs=1e-9)
    assert rep.satisfied["second_law"]


def test_tight_bound_between_entropy_and_second_law():
    # excited qubit is non-passive: the bath destroys ergotropy, so Q > E_d
    gen, traj = _qubit_relaxation(basis_state(2, 1))
    rep = tight_bound_constant_H(traj, 1.0, gen)
    assert rep.satisfied["tight"] and rep.satisfied["second_law"]
    assert rep.bound_tight > rep.bound_second_law + 1e-3
    assert rep.delta_S >= rep.bound_tight - 1e-8


def test_bounds_coincide_for_passive_start():
    rho0 = np.diag([0.95, 0.05]).astype(complex)
    gen, traj = _qubit_relaxation(rho0)
    rep = tight_bound_constant_H(traj, 1.0, gen)
    assert rep.bound_tight == pytest.approx(rep.bound_second_law, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 1.0), st.floats(0.0, 2 * np.pi))
def test_qubit_bounds_hold(T, p, phase):
    c = np.sqrt(p * (1 - p)) * np.exp(1j * phase)
    rho0 = np.array([[1 - p, c], [np.conj(c), p]])
    gen = qubit_thermal_generator(1.0, T, 1.0)
    traj = integrate(gen, rho0, (0.0, 8.0), t_eval=np.linspace(0, 8, 81))
    rep = tight_bound_constant_H(traj, T, gen, waive_finality=True)
    assert rep.satisfied["tight"] and rep.satisfied["second_law"]
    assert rep.bound_tight >= rep.bound_second_law - 1e-9


def test_non_positive_temperature_rejected():
    gen, traj = _qubit_relaxation(basis_state(2, 1))
    for T in (0.0, -1.0):
        with pytest.raises(DomainError):
            second_law_bound(traj, T, gen)


def test_zero_temperature_sentinel():
    gen, traj = _qubit_relaxation(basis_state(2, 1))
    rep = second_law_bound(traj, 1e-12, gen)
    assert rep.bound_second_law == -np.inf
    assert rep.flags


def test_unfinished_trajectory_rejected():
    gen = qubit_thermal_generator(1.0, 1.0, 1.0)
    traj = integrate(gen, basis_state(2, 1), (0.0, 2.0))
    with pytest.raises(TrajectoryError):
        second_law_bound(traj, 1.0, gen)
    second_law_bound(traj, 1.0, gen, waive_finality=True)


def test_tight_constant_H_rejects_driven_stroke():
    H = np.array([np.diag([0.0, w]) for w in (1.0, 1.1, 1.2)], dtype=complex)
    traj = Trajectory([0, 1, 2], [np.eye(2) / 2] * 3, H)
    with pytest.raises(TrajectoryError):
        tight_bound_constant_H(traj, 1.0, waive_finality=True)


def test_label_mismatch_rejected():
    gen = thermal_generator(1.0, 0.2, 1.0, 12)
    other = thermal_generator(1.0, 0.3, 1.0, 12)
    traj = integrate(gen, thermal_state(12, 0.0), (0.0, 1.0))
    with pytest.raises(GeneratorError):
        tight_bound_time_dependent(traj, 1.0, other)


def test_squeezed_number_operator_spectrum():
    # S n S^dag is unitarily equivalent to n on the low levels
    K = squeezed_number_operator(120, 0.3)
    w = np.linalg.eigvalsh(K)
    assert np.allclose(w[:5], np.arange(5), atol=1e-8)


def test_squeezed_bath_second_law():
    T, omega, r = 1.0, 1.0, 0.4
    n_bar = 1 / np.expm1(omega / T)
    gen = squeezed_bath_generator(1.0, n_bar, r, omega, 40)
    traj = relax_to_steady(gen, thermal_state(40, n_bar), 25.0, n_store=401)
    rep = tight_bound_time_dependent(traj, T, gen, waive_finality=False)
    assert rep.satisfied["second_law"] and rep.satisfied["tight"]
    # the second-law term equals the relative-entropy drop against the squeezed Gibbs state
    ss = steady_state(gen)
    drop = relative_entropy(traj.states[0], ss) - relative_entropy(traj.states[-1], ss)
    # K = S n S^dag is cut at the Fock edge, so its Gibbs state is only close to rho_ss
    assert rep.delta_S - rep.bound_second_law == pytest.approx(drop, abs=1e-3)
    # the plain dissipated energy does not bound the entropy change here
    assert rep.dissipated_energy_over_T > rep.delta_S


def test_squeezed_steady_state_matches_gaussian():
    gen = squeezed_bath_generator(1.0, 0.3, 0.3, 1.0, 40)
    assert np.max(np.abs(steady_state(gen) - to_fock(bath_steady_state(0.3, 0.3), 40))) < 1e-8


def test_time_dependent_bound_saturates_slow_isotherm():
    from qmachines.cycles import hot_isotherm_bounds

    rep = hot_isotherm_bounds(duration=20.0, fock_dim=41, n_store=41)
    k = np.searchsorted(rep.times, 10.0)
    for i in (k, -1):
        gap = abs(rep.delta_S_curve[i] - rep.tight_curve[i]) / abs(rep.delta_S_curve[i])
        assert gap < 0.02
        assert rep.delta_S_curve[i] >= rep.tight_curve[i] >= rep.second_law_curve[i]

