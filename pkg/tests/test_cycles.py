import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmachines.cycles import (
    CarnotConfig,
    OttoConfig,
    RegimeError,
    classify_regime,
    eta_max_general,
    eta_sigma_general,
    otto_efficiencies,
    run_equivalent_hybrid,
    run_modified_carnot,
    run_modified_otto,
    second_kind_temperature,
    squeeze_state,
    zero_temperature_work,
)
from qmachines.gaussian import bath_steady_state, to_fock
from qmachines.lindblad import TruncationError
from qmachines.passivity import EnergyLedger
from qmachines.quantum_core import bose_occupation, thermal_state

BASE = dict(omega_c=0.6, omega_h=1.0, T_c=2 / 3, T_h=2.0, r=0.3)


def _effs(omega_c, omega_h, Tc, Th, r):
    n_c, n_h = bose_occupation(omega_c, Tc), bose_occupation(omega_h, Th)
    dn = (2 * n_h + 1) * np.sinh(r) ** 2
    return n_c, n_h, otto_efficiencies(n_c, n_h, dn, omega_c, omega_h, Tc, Th)


def test_unsqueezed_otto_reduces_to_textbook():
    eta, eta_max, eta_sigma = _effs(0.4, 1.0, 0.3, 1.0, 0.0)[2]
    assert eta == pytest.approx(0.6)
    assert eta_max == pytest.approx(0.7)
    assert eta_sigma == pytest.approx(0.7)


def test_zero_temperature_efficiencies():
    eta, eta_max, eta_sigma = otto_efficiencies(0.0, 0.0, np.sinh(0.5) ** 2, 0.5, 1.0, 0.0, 0.0)
    assert eta == pytest.approx(1.0)
    assert eta_max == eta_sigma == 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 3.0), st.floats(0.05, 1.0), st.floats(0.0, 1.5))
def test_efficiency_hierarchy(w_ratio, Th, T_ratio, r):
    try:
        n_c, n_h, (eta, eta_max, eta_sigma) = _effs(w_ratio, 1.0, T_ratio * Th, Th, r)
    except RegimeError:
        return
    assert eta <= eta_max + 1e-12
    assert eta_max <= eta_sigma + 1e-12
    if n_h >= n_c:
        assert eta_max <= 1.0 + 1e-12


def test_no_output_raises():
    with pytest.raises(RegimeError):
        otto_efficiencies(2.0, 0.5, 0.1, 0.1, 1.0, 1.0, 1.0)


def test_eta_general_validation():
    with pytest.raises(RegimeError):
        eta_max_general(0.5, 1.0, 0.1, 0.0)
    with pytest.raises(RegimeError):
        eta_max_general(0.5, 1.0, 2.0, 1.0)
    assert eta_sigma_general(1.0, 1.0, -1.0, 1.0).unphysical


def test_zero_temperature_work():
    assert zero_temperature_work(0.5, 1.0, 0.5) == pytest.approx(-0.5 * np.sinh(0.5) ** 2)
    assert zero_temperature_work(0.5, 1.0, 0.5, extract_ergotropy=True) == pytest.approx(-np.sinh(0.5) ** 2)


def test_second_kind_temperature_increases_with_squeezing():
    n = bose_occupation(1.0, 1.0)
    assert second_kind_temperature(1.0, n, 0.0) == pytest.approx(1.0)
    assert second_kind_temperature(1.0, n, 0.3) > 1.0


def _ledger(work, e_d, heat=None):
    heat = e_d if heat is None else heat
    return EnergyLedger(delta_energy=work + e_d, work=work, dissipative_energy=e_d, heat=heat,
                        dissipative_ergotropy=e_d - heat)


def test_classify_regimes():
    hot, cold = _ledger(0.0, 1.0), _ledger(0.0, -0.6)
    comp, exp_ = _ledger(0.1, 0.0), _ledger(-0.5, 0.0)
    regime, eta, _ = classify_regime(dict(hot=hot, cold=cold, compression=comp, expansion=exp_), 1, 2)
    assert regime == "engine" and eta == pytest.approx(0.4)
    # cold bath receives energy from the fluid (E_d,c > 0): refrigeration
    regime, eta, _ = classify_regime(
        dict(hot=_ledger(0.0, 1.0), cold=_ledger(0.0, 0.2), expansion=_ledger(-1.2, 0.0)), 1, 2)
    assert regime == "engine_and_refrigerator" and eta == 1.0
    regime, eta, _ = classify_regime(dict(hot=_ledger(0.0, 0.5), cold=_ledger(0.0, -0.5)), 1, 2)
    assert regime == "no_engine" and np.isnan(eta)


def test_classify_rejects_open_cycle():
    with pytest.raises(RegimeError):
        classify_regime(dict(hot=_ledger(0.0, 1.0), cold=_ledger(0.0, -0.2)), 1, 2)
    with pytest.raises(RegimeError):
        classify_regime(dict(hot=_ledger(0.0, 1.0)), 1, 2)


def test_gaussian_otto_matches_closed_form():
    res = run_modified_otto(OttoConfig(**BASE, method="gaussian", stroke_time=40.0))
    assert res.regime == "engine"
    assert res.efficiency == pytest.approx(res.analytic["eta"], abs=1e-9)
    assert res.eta_max == pytest.approx(res.analytic["eta_max"], abs=1e-9)
    assert res.eta_sigma == pytest.approx(res.analytic["eta_sigma"], abs=1e-9)
    assert res.cyclicity_error() < 1e-9


def test_fock_otto_matches_closed_form():
    res = run_modified_otto(OttoConfig(omega_c=0.6, omega_h=1.0, T_c=0.3, T_h=1.0, r=0.3, fock_dim=31,
                                       stroke_time=12.0))
    assert res.efficiency == pytest.approx(res.analytic["eta"], abs=1e-4)
    assert res.cyclicity_error() < 1e-6


def test_hybrid_equivalent_to_squeezed_bath():
    cfg = OttoConfig(**BASE, method="gaussian", stroke_time=40.0)
    bath, hybrid = run_modified_otto(cfg), run_equivalent_hybrid(cfg)
    assert hybrid.net_work == pytest.approx(bath.net_work, abs=1e-9)
    assert hybrid.external_work > 0
    assert hybrid.ledger("external_squeeze").work == pytest.approx(bath.ledger("hot").dissipative_energy
                                                                   - hybrid.ledger("hot").dissipative_energy,
                                                                   abs=1e-9)
    assert hybrid.efficiency == pytest.approx(bath.efficiency, abs=1e-9)


def test_zero_temperature_cycle_work():
    cfg = OttoConfig(omega_c=0.5, omega_h=1.0, T_c=0.0, T_h=0.0, r=0.5, method="gaussian", stroke_time=40.0)
    res = run_modified_otto(cfg)
    assert res.net_work == pytest.approx(zero_temperature_work(0.5, 1.0, 0.5, extract_ergotropy=True), abs=1e-9)
    plain = run_modified_otto(OttoConfig(**{**cfg.__dict__, "extract_ergotropy": False}))
    assert plain.net_work == pytest.approx(zero_temperature_work(0.5, 1.0, 0.5), abs=1e-9)


def test_second_kind_below_real_carnot():
    cfg = OttoConfig(**BASE, method="gaussian", stroke_time=40.0, bath_kind="second_kind")
    res = run_modified_otto(cfg)
    assert res.regime == "second_kind"
    assert res.efficiency <= res.extras["carnot_real"] + 1e-12


def test_squeezing_raises_otto_efficiency():
    etas = [run_modified_otto(OttoConfig(**{**BASE, "r": r}, method="gaussian", stroke_time=40.0)).efficiency
            for r in (0.0, 0.2, 0.4)]
    assert etas[0] < etas[1] < etas[2]


def test_squeeze_state_matches_gaussian():
    rho = squeeze_state(thermal_state(40, 0.2), 0.3)
    assert np.max(np.abs(rho - to_fock(bath_steady_state(0.2, 0.3), 40))) < 1e-8


def test_squeeze_state_truncation():
    with pytest.raises(TruncationError):
        squeeze_state(thermal_state(8, 1.0), 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        OttoConfig(omega_c=1.2, omega_h=1.0, T_c=0.1, T_h=1.0)
    with pytest.raises(ValueError):
        OttoConfig(omega_c=0.5, omega_h=1.0, T_c=2.0, T_h=1.0)
    with pytest.raises(ValueError):
        CarnotConfig(omega_c=1.0, omega_h=5.0, T_c=1.0, T_h=2.0)


def test_unsqueezed_carnot_near_carnot_efficiency():
    cfg = CarnotConfig(omega_c=1.0, omega_h=1.5, T_c=1.0, T_h=2.0, r=0.0, ramp_rate=0.05, fock_dim=21,
                       hold_time=10.0, n_store=201)
    res = run_modified_carnot(cfg)
    assert res.regime == "engine"
    assert res.efficiency <= res.eta_carnot + 1e-9
    assert res.efficiency == pytest.approx(0.5, abs=0.03)
