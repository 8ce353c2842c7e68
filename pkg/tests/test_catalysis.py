import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmachines.catalysis import (
    BathSpectrum,
    CatalysisConfig,
    CatalysisConfigError,
    SpectrumError,
    drift_diffusion,
    efficiency_curve,
    engine_point,
    evolve_piston,
    fig7_config,
    heat_flux_hot,
    linear_efficiency_limit,
    linear_pump_work,
    max_power,
    optimal_spectra,
    passive_rate,
    passive_rate_closed_form,
    piston_drive,
    piston_generator,
    resolve_qubit_populations,
    unpumped_efficiency,
)
from qmachines.gaussian import GaussianBathDrive, GaussianState, evolve, to_fock
from qmachines.lindblad import integrate
from qmachines.quantum_core import fock_annihilation

KINDS = ("none", "quadratic", "linear")


def _cfg(kind):
    return fig7_config("none", kappa_ratio=0.0) if kind == "none" else fig7_config(kind)


def _flat(omega0, nu, T, g=1.0):
    return BathSpectrum.from_positive({omega0 + nu: g, omega0 - nu: g, omega0: g}, T)


def test_kms_violation_rejected():
    with pytest.raises(SpectrumError):
        BathSpectrum({1.0: 1.0, -1.0: 1.0}, 1.0)
    with pytest.raises(SpectrumError):
        BathSpectrum({1.0: 1.0}, 0.0)
    with pytest.raises(SpectrumError):
        BathSpectrum({1.0: -1.0}, 1.0)


def test_spectrum_lookup():
    s = BathSpectrum.from_positive({2.0: 0.5}, 1.0)
    assert s.G(-2.0) == pytest.approx(0.5 * np.exp(-2.0))
    with pytest.raises(SpectrumError):
        s.G(1.0)


def test_config_validation():
    hot, cold = optimal_spectra(3.0, 0.5, 1.0, 0.6)
    with pytest.raises(CatalysisConfigError):
        CatalysisConfig(3.0, 0.5, 0.2, hot, cold)  # g/nu too large
    with pytest.raises(CatalysisConfigError):
        CatalysisConfig(3.0, 0.5, 0.05, cold, hot)  # baths swapped
    with pytest.raises(CatalysisConfigError):
        CatalysisConfig(3.0, 0.5, 0.05, hot, cold, "none", 0.1)
    with pytest.raises(CatalysisConfigError):
        CatalysisConfig(3.0, 0.5, 0.05, hot, cold, qubit_populations=(0.7, 0.4))
    hot9, cold9 = optimal_spectra(3.0, 2.9, 1.0, 0.9)
    with pytest.raises(CatalysisConfigError):
        CatalysisConfig(3.0, 2.9, 0.1, hot9, cold9)  # nu/omega_+ above Carnot


def test_single_bath_gives_gibbs_populations_and_damping():
    T = 0.8
    cfg = CatalysisConfig(3.0, 0.5, 0.05, _flat(3.0, 0.5, T), _flat(3.0, 0.5, 0.5, g=0.0))
    p0, p1 = resolve_qubit_populations(cfg)
    assert p1 / p0 == pytest.approx(np.exp(-3.0 / T))
    Gamma, D = drift_diffusion(cfg)
    assert Gamma > 0 and D > 0
    pts = evolve_piston(cfg, GaussianState.coherent(1.0), [0.0, 1.0])
    assert all(any(f.startswith("no gain") for f in p.flags) for p in pts)


def test_missing_qubit_drive_needs_explicit_populations():
    hot = BathSpectrum.from_positive({3.5: 1.0, 2.5: 0.0, 3.0: 0.0}, 1.0)
    cold = BathSpectrum.from_positive({3.5: 0.0, 2.5: 0.0, 3.0: 0.0}, 0.6)
    cfg = CatalysisConfig(3.0, 0.5, 0.05, hot, cold)
    with pytest.raises(CatalysisConfigError):
        drift_diffusion(cfg)
    explicit = CatalysisConfig(3.0, 0.5, 0.05, hot, cold, qubit_populations=(0.9, 0.1))
    Gamma, D = drift_diffusion(explicit)
    c = (0.05 / 0.5) ** 2
    assert Gamma == pytest.approx(c * (1.0 * 0.1 - np.exp(-3.5) * 0.9))
    assert D == pytest.approx(c * np.exp(-3.5) * 0.9)


def test_optimal_spectra_give_gain():
    Gamma, D = drift_diffusion(_cfg("none"))
    assert Gamma < 0
    assert D / abs(Gamma) == pytest.approx(1.2872169, rel=1e-6)


@pytest.mark.parametrize("kind", KINDS)
def test_power_identity_and_heat_forms(kind):
    cfg = _cfg(kind)
    drive = piston_drive(cfg)
    G = abs(drive.Gamma)
    for t in np.array([0.0, 0.5, 3.0, 20.0]) / G:
        state = evolve(GaussianState.coherent(0.7 + 0.3j), drive, t)
        pt = engine_point(cfg, drive, state, t)
        assert pt.identity_residual <= 1e-8
        assert pt.power_max == pytest.approx(max_power(state, drive, cfg.nu, cfg.omega_plus), rel=1e-12)
        assert pt.heat_flux_h == pytest.approx(heat_flux_hot(state, drive, cfg.omega_plus))
        assert pt.eta <= cfg.eta_max + 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_passive_rate_matches_closed_form(kind):
    drive = piston_drive(_cfg(kind))
    for t in (0.0, 1e3, 1e4):
        state = evolve(GaussianState.coherent(1.0), drive, t)
        assert passive_rate(state, drive) == pytest.approx(passive_rate_closed_form(state, drive), rel=1e-9,
                                                           abs=1e-15)


def test_unpumped_efficiency_is_constant():
    cfg = _cfg("none")
    G = abs(drift_diffusion(cfg)[0])
    pts = evolve_piston(cfg, GaussianState.coherent(1.0), np.linspace(0, 30, 16) / G)
    eta0 = unpumped_efficiency(cfg, 1.0)
    assert eta0 == pytest.approx(cfg.eta_max / (1 + 1.2872169), rel=1e-6)
    assert np.allclose([p.eta for p in pts], eta0, rtol=1e-9)


def test_unpumped_efficiency_half_of_max_at_unit_ratio():
    hot, cold = optimal_spectra(3.0, 0.5, 1.0, 0.6)
    cfg = CatalysisConfig(3.0, 0.5, 0.05, hot, cold)
    Gamma, D = drift_diffusion(cfg)
    alpha0 = np.sqrt(D / abs(Gamma))
    assert unpumped_efficiency(cfg, alpha0) == pytest.approx(cfg.eta_max / 2)


def test_pumped_efficiency_ordering_and_limits():
    G = abs(drift_diffusion(_cfg("none"))[0])
    grid = np.array([0.0, 1.0, 10.0, 100.0]) / G
    curves = {k: efficiency_curve(evolve_piston(_cfg(k), GaussianState.coherent(1.0), grid), _cfg(k), 1.0)
              for k in KINDS}
    eta0 = curves["none"]["eta_unpumped"]
    for k in KINDS:
        assert curves[k]["eta"][0] == pytest.approx(eta0)
    last = {k: curves[k]["eta"][-1] for k in KINDS}
    assert last["none"] < last["linear"] < last["quadratic"] <= _cfg("none").eta_max + 1e-12
    assert last["quadratic"] == pytest.approx(_cfg("none").eta_max, rel=1e-6)
    assert last["linear"] == pytest.approx(linear_efficiency_limit(_cfg("linear"), 1.0), rel=1e-6)
    assert np.all(np.diff(curves["quadratic"]["eta"]) > 0)


def test_horizon_flag():
    cfg = _cfg("quadratic")
    G = abs(drift_diffusion(cfg)[0])
    pts = evolve_piston(cfg, GaussianState.coherent(1.0), np.array([0.0, 100.0, 200.0]) / G)
    assert len(pts) == 2 and any(f.startswith("horizon") for f in pts[-1].flags)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_efficiency_grows_with_squeezing(x1, x2, excess, r):
    # only holds where the reduced model does, n_pas >> D/|Gamma|
    cfg = _cfg("none")
    drive = piston_drive(cfg)
    n_pas = 10 * drive.D / abs(drive.Gamma) * (1 + 4 * excess)

    def eta(rr):
        f = (n_pas + 0.5) / 2
        st_ = GaussianState(x1, x2, f * np.exp(2 * rr), f * np.exp(-2 * rr), np.pi / 2)
        return engine_point(cfg, drive, st_, 0.0).eta

    assert eta(r + 0.05) >= eta(r) - 1e-12


def test_linear_pump_work():
    cfg = _cfg("linear")
    Gamma, _ = drift_diffusion(cfg)
    s0 = GaussianState.coherent(1.0)
    assert linear_pump_work(cfg, s0, 0.0) == pytest.approx(cfg.nu)
    free = cfg.with_pump("linear", 0.0)
    t = 3.0 / abs(Gamma)
    assert linear_pump_work(free, s0, t) == pytest.approx(cfg.nu * np.exp(-Gamma * t))
    assert linear_pump_work(cfg, s0, t) > linear_pump_work(free, s0, t)
    with pytest.raises(CatalysisConfigError):
        linear_pump_work(_cfg("quadratic"), s0, t)


def _fock_moments(rho):
    a = fock_annihilation(rho.shape[0])
    n = np.trace(rho @ a.conj().T @ a).real
    a2 = np.trace(rho @ a @ a)
    alpha = np.trace(rho @ a)
    return np.array([n, a2.real, a2.imag, alpha.real, alpha.imag])


@pytest.mark.parametrize("drive", [
    GaussianBathDrive(-1.0, 1.2, 0.2, "quadratic"),
    GaussianBathDrive(-1.0, 1.2, 0.2, "linear"),
    GaussianBathDrive(1.0, 0.5),
    GaussianBathDrive(-0.5, 0.8),
])
def test_fock_piston_matches_gaussian(drive):
    dim = 81
    s0 = GaussianState.coherent(0.6 + 0.2j)
    gen = piston_generator(drive, 0.5, dim)
    traj = integrate(gen, to_fock(s0, dim), (0.0, 1.0), t_eval=[0.0, 0.5, 1.0])
    for t, rho in zip(traj.times, traj.states):
        exact = evolve(s0, drive, float(t))
        expected = np.array([exact.mean_occupation, exact.a2.real, exact.a2.imag, exact.alpha.real,
                             exact.alpha.imag])
        assert np.max(np.abs(_fock_moments(rho) - expected)) < 1e-6 * max(1.0, exact.mean_occupation)
