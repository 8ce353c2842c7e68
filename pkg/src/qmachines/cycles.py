"""Engine cycles driven by squeezed thermal baths, and their efficiency bounds.

Oscillator working fluid with H = omega a^dag a.  Adiabatic strokes keep the
Fock populations and only rescale the frequency, isochores relax the mode to
the bath's steady state, and the ergotropy-extraction stroke is the unitary
that maps the state onto its passive counterpart.

Two backends evaluate the same stroke sequence: ``"fock"`` integrates the
master equation in a truncated Fock space, ``"gaussian"`` uses the closed-form
Gaussian relaxation.  Work is negative when delivered to the piston.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy.linalg import expm

from . import gaussian as gs
from .entropy_bounds import squeezed_number_operator, tight_bound_time_dependent
from .lindblad import (
    IntegrationConfig,
    IntegrationError,
    TRUNCATION_TOL,
    TruncationError,
    integrate,
    ramped_squeezed_bath_generator,
    relax_to_steady,
    squeezed_bath_generator,
    stationarity_change,
)
from .passivity import EnergyLedger, ledger_for_stroke, passive_state, unitary_stroke_ledger
from .quantum_core import (
    HilbertSpace,
    bose_occupation,
    expectation,
    fock_annihilation,
    fock_number,
    project_density,
    temperature_from_occupation,
    thermal_state,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

STATIONARY_TOL = 1e-7
REGIMES = ("engine", "engine_and_refrigerator", "second_kind", "no_engine")


class RegimeError(ValueError):
    pass


class SlowDrivingError(RuntimeError):
    pass


class EtaSigma(NamedTuple):
    value: float
    unphysical: bool


def _ratio(Tc: float, Th: float) -> float:
    # T_c/T_h with the zero-temperature convention 0/0 = 0
    if Tc == 0:
        return 0.0
    if Th <= 0:
        raise RegimeError("T_h must be positive when T_c is")
    return Tc / Th


# analytic bounds -----------------------------------------------------------------


def eta_max_general(Tc: float, Th: float, Q_prime_h: float, E_dh: float) -> float:
    """1 - (T_c/T_h) Q'_h / E_d,h."""
    if not E_dh > 0:
        raise RegimeError(f"E_d,h must be positive (hot bath supplies energy), got {E_dh}")
    if Q_prime_h < -1e-12 * E_dh:
        raise RegimeError(f"Q'_h must be non-negative, got {Q_prime_h}")
    if Q_prime_h > E_dh * (1 + 1e-12):
        raise RegimeError(f"Q'_h ({Q_prime_h}) exceeds E_d,h ({E_dh}): the bath removed ergotropy")
    return 1.0 - _ratio(Tc, Th) * max(Q_prime_h, 0.0) / E_dh


def eta_sigma_general(Tc: float, Th: float, E_tilde_dh: float, E_dh: float) -> EtaSigma:
    """1 - (T_c/T_h) E~_d,h / E_d,h; values above one are flagged as unphysical."""
    if not E_dh > 0:
        raise RegimeError(f"E_d,h must be positive, got {E_dh}")
    value = 1.0 - _ratio(Tc, Th) * E_tilde_dh / E_dh
    return EtaSigma(value, bool(value > 1.0))


def excess_occupation(n_bar: float, r: float) -> float:
    """(2n+1) sinh^2 r: extra quanta of a squeezed thermal state."""
    return (2 * n_bar + 1) * np.sinh(r) ** 2


def otto_efficiencies(n_c: float, n_h: float, delta_n_h: float, omega_c: float, omega_h: float,
                      Tc: float, Th: float, delta_n_c: float | None = None) -> tuple[float, float, float]:
    """(eta, eta_max, eta_sigma) of the modified Otto cycle.

    ``delta_n_c`` defaults to (2 n_c + 1) sinh^2 r, the excess energy of the
    cold thermal state measured in the squeezed frame of the hot bath (with
    sinh^2 r recovered from ``delta_n_h``).  When n_h < n_c the cold bath is
    refrigerated and eta = eta_max = 1.
    """
    denom = n_h + delta_n_h - n_c
    if not denom > 0:
        raise RegimeError(f"no work output: n_h + delta_n_h - n_c = {denom:.6g} <= 0")
    if delta_n_c is None:
        delta_n_c = (2 * n_c + 1) * delta_n_h / (2 * n_h + 1)
    ratio = _ratio(Tc, Th)
    eta_sigma = 1.0 - ratio * (n_h - n_c - delta_n_c) / denom
    if n_h < n_c:
        return 1.0, 1.0, eta_sigma
    eta = 1.0 - (n_h - n_c) * omega_c / (denom * omega_h)
    eta_max = 1.0 - ratio * (n_h - n_c) / denom
    return eta, eta_max, eta_sigma


def zero_temperature_work(omega_c: float, omega_h: float, r: float, extract_ergotropy: bool = False) -> float:
    """Net work per cycle with both baths at T = 0.

    Without the extraction stroke the squeezed state itself is expanded and
    W = -(omega_h - omega_c) sinh^2 r; extracting the ergotropy at omega_h
    instead yields W = -omega_h sinh^2 r.
    """
    dn = np.sinh(r) ** 2
    return -omega_h * dn if extract_ergotropy else -(omega_h - omega_c) * dn


def second_kind_temperature(omega_h: float, n_h: float, delta_n_h: float) -> float:
    """Temperature of a thermal state with the excitation n_h + delta_n_h."""
    return temperature_from_occupation(omega_h, n_h + delta_n_h)


# configs and results -----------------------------------------------------------------


@dataclass(frozen=True)
class OttoConfig:
    """Modified Otto cycle.  ``fock_dim`` is the Fock-space dimension (N_max + 1)."""

    omega_c: float
    omega_h: float
    T_c: float
    T_h: float
    r: float = 0.0
    kappa: float = 1.0
    stroke_time: float = 10.0
    fock_dim: int = 41
    delta_n_c: float | None = None
    method: str = "fock"
    extract_ergotropy: bool = True
    bath_kind: str = "squeezed"  # or "second_kind": thermal bath at T_h(real)

    def __post_init__(self):
        if not (0 < self.omega_c <= self.omega_h):
            raise ValueError("need 0 < omega_c <= omega_h")
        if not (0 <= self.T_c <= self.T_h):
            raise ValueError("need 0 <= T_c <= T_h")
        if self.r < 0 or self.kappa <= 0 or self.stroke_time <= 0:
            raise ValueError("need r >= 0, kappa > 0, stroke_time > 0")
        if self.method not in ("fock", "gaussian"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.bath_kind not in ("squeezed", "second_kind"):
            raise ValueError(f"unknown bath kind {self.bath_kind!r}")
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ValueError("fock_dim must be an integer >= 2")

    @property
    def n_c(self) -> float:
        return bose_occupation(self.omega_c, self.T_c)

    @property
    def n_h(self) -> float:
        return bose_occupation(self.omega_h, self.T_h)

    @property
    def delta_n_h(self) -> float:
        return excess_occupation(self.n_h, self.r)


@dataclass(frozen=True)
class CarnotConfig:
    omega_c: float
    omega_h: float
    T_c: float
    T_h: float
    r: float = 0.0
    kappa: float = 1.0
    ramp_rate: float = 0.05
    fock_dim: int = 31
    hold_time: float = 10.0
    n_store: int = 401

    def __post_init__(self):
        if not (0 < self.T_c < self.T_h):
            raise ValueError("need 0 < T_c < T_h")
        if not (0 < self.omega_c and 0 < self.omega_h <= self.omega_2):
            raise ValueError(f"need 0 < omega_h <= omega_2 = {self.omega_2:g}")
        if self.ramp_rate <= 0 or self.kappa <= 0 or self.r < 0 or self.hold_time < 0:
            raise ValueError("need ramp_rate > 0, kappa > 0, r >= 0, hold_time >= 0")

    @property
    def omega_2(self) -> float:
        return self.omega_c * self.T_h / self.T_c

    @property
    def omega_1(self) -> float:
        return self.omega_h * self.T_c / self.T_h


@dataclass
class CycleResult:
    stroke_names: list
    stroke_ledgers: list
    net_work: float
    efficiency: float
    eta_max: float
    eta_sigma: float
    eta_carnot: float
    regime: str
    external_work: float = 0.0
    analytic: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def ledger(self, name: str) -> EnergyLedger:
        return self.stroke_ledgers[self.stroke_names.index(name)]

    def cyclicity_error(self) -> float:
        return abs(sum(l.delta_energy for l in self.stroke_ledgers))


def classify_regime(ledgers: Mapping[str, EnergyLedger], Tc: float, Th: float, bath_kind: str = "squeezed",
                    external: tuple[str, ...] = (), omega_h: float | None = None,
                    n_h_real: float | None = None) -> tuple[str, float, dict]:
    """Regime label and efficiency from a complete set of stroke ledgers.

    ``ledgers`` must contain the keys "hot" and "cold" (the bath strokes);
    strokes listed in ``external`` are driven by a work source other than the
    piston and count as energy input.
    """
    if "hot" not in ledgers or "cold" not in ledgers:
        raise RegimeError("ledgers need 'hot' and 'cold' entries")
    total_dE = sum(l.delta_energy for l in ledgers.values())
    scale = max(max(abs(l.delta_energy) for l in ledgers.values()), 1e-300)
    if abs(total_dE) > 1e-6 * max(scale, 1.0):
        raise RegimeError(f"ledgers do not close: sum of energy changes {total_dE:.3e}")
    W = sum(l.work for k, l in ledgers.items() if k not in external)
    W_ext = sum(l.work for k, l in ledgers.items() if k in external)
    E_dh = ledgers["hot"].dissipative_energy
    E_dc = ledgers["cold"].dissipative_energy
    info = dict(work=W, external_work=W_ext, E_dh=E_dh, E_dc=E_dc)
    energy_in = E_dh + W_ext
    if W >= 0 or energy_in <= 0:
        return "no_engine", float("nan"), info
    if bath_kind == "second_kind":
        if omega_h is None or n_h_real is None:
            raise RegimeError("second-kind classification needs omega_h and the real excitation n_h_real")
        T_real = temperature_from_occupation(omega_h, n_h_real)
        info["T_h_real"] = T_real
        info["carnot_real"] = 1.0 - _ratio(Tc, T_real)
        return "second_kind", -W / energy_in, info
    if E_dc > 0:
        return "engine_and_refrigerator", 1.0, info
    return "engine", -W / energy_in, info


# backends -------------------------------------------------------------------------------


def squeeze_state(rho: np.ndarray, r: float, pad: int | None = None) -> np.ndarray:
    """S rho S^dag with S = exp((r a^2 - r a^dag^2)/2), applied in an enlarged space."""
    d = rho.shape[0]
    big = d + (pad if pad is not None else max(40, d))
    a = fock_annihilation(big)
    S = expm(0.5 * r * (a @ a - a.conj().T @ a.conj().T))
    R = np.zeros((big, big), dtype=complex)
    R[:d, :d] = rho
    out = (S @ R @ S.conj().T)[:d, :d]
    lost = 1.0 - np.trace(out).real
    if lost > TRUNCATION_TOL:
        raise TruncationError(f"squeezed state leaks {lost:.2e} out of dim={d}")
    out = 0.5 * (out + out.conj().T)
    return out / np.trace(out).real


class _FockWF:
    """Working fluid in a truncated Fock space."""

    def __init__(self, dim: int, kappa: float, stroke_time: float):
        self.space = HilbertSpace(dim)
        self.kappa = kappa
        self.stroke_time = stroke_time
        self.num = fock_number(self.space)
        self.a = fock_annihilation(self.space)
        self.flags: list[str] = []

    def thermal(self, n: float):
        return thermal_state(self.space, n)

    def H(self, omega):
        return omega * self.num

    def energy(self, state, omega):
        return float(expectation(state, self.H(omega)).real)

    def adiabatic(self, state, omega_a, omega_b):
        return state, unitary_stroke_ledger(state, state, self.H(omega_a), self.H(omega_b))

    def isochore(self, state, omega, n_bar, r):
        gen = squeezed_bath_generator(self.kappa, n_bar, r, omega, self.space)
        traj = relax_to_steady(gen, state, self.stroke_time, IntegrationConfig(), tol=STATIONARY_TOL, n_store=101)
        self.flags.extend(traj.flags)
        return project_density(traj.states[-1]), ledger_for_stroke(traj)

    def extract(self, state, omega):
        pi = passive_state(project_density(state), self.H(omega)).passive_state
        return pi, unitary_stroke_ledger(state, pi, self.H(omega))

    def squeeze(self, state, omega, r):
        new = squeeze_state(state, r)
        return new, unitary_stroke_ledger(state, new, self.H(omega))

    def squeezed_frame_occupation(self, state, r):
        return float(expectation(state, squeezed_number_operator(self.space.dim, r)).real)


class _GaussianWF:
    """Working fluid as a closed-form Gaussian state."""

    def __init__(self, kappa: float, stroke_time: float):
        self.kappa = kappa
        self.stroke_time = stroke_time
        self.flags: list[str] = []

    def thermal(self, n: float):
        return gs.GaussianState.thermal(n)

    def energy(self, state, omega):
        return omega * state.mean_occupation

    def _ledger(self, s0, s1, omega_a, omega_b, bath: bool):
        E0, E1 = self.energy(s0, omega_a), self.energy(s1, omega_b)
        if not bath:
            return EnergyLedger(E1 - E0, 0.0, 0.0, 0.0, E1 - E0)
        Q = omega_a * (gs.n_passive(s1)[0] - gs.n_passive(s0)[0])
        return EnergyLedger(0.0, E1 - E0, Q, E1 - E0 - Q, E1 - E0)

    def adiabatic(self, state, omega_a, omega_b):
        return state, self._ledger(state, state, omega_a, omega_b, False)

    def isochore(self, state, omega, n_bar, r):
        t = self.stroke_time
        new = gs.evolve_squeezed_bath(state, self.kappa, n_bar, r, t)
        earlier = gs.evolve_squeezed_bath(state, self.kappa, n_bar, r, max(t - 1.0 / self.kappa, 0.0))
        change = abs(new.mean_occupation - earlier.mean_occupation) / max(new.mean_occupation, 1.0)
        if change > STATIONARY_TOL:
            raise IntegrationError(f"steady state not reached after t={t:g}; use a longer stroke time")
        return new, self._ledger(state, new, omega, omega, True)

    def extract(self, state, omega):
        new = gs.GaussianState.thermal(gs.n_passive(state)[0])
        return new, self._ledger(state, new, omega, omega, False)

    def squeeze(self, state, omega, r):
        new = gs.GaussianState.squeezed_thermal(gs.n_passive(state)[0], r, axis_phase=np.pi / 2)
        return new, self._ledger(state, new, omega, omega, False)

    def squeezed_frame_occupation(self, state, r):
        return _squeezed_frame_occupation(state.mean_occupation, state.a2, r)


def _squeezed_frame_occupation(n: float, a2: complex, r: float) -> float:
    c, s = np.cosh(r), np.sinh(r)
    return c * c * n + s * s * (n + 1) + 2 * c * s * np.real(a2)


def _backend(cfg: OttoConfig):
    if cfg.method == "gaussian":
        return _GaussianWF(cfg.kappa, cfg.stroke_time)
    return _FockWF(int(cfg.fock_dim), cfg.kappa, cfg.stroke_time)


def _assemble(cfg, names, ledgers, wf, E_tilde_dh, external=(), bath_kind="squeezed", n_h_real=None):
    role = {"hot": names.index("hot"), "cold": names.index("cold")}
    by_name = dict(zip(names, ledgers))
    regime, eta, info = classify_regime(by_name, cfg.T_c, cfg.T_h, bath_kind, external, cfg.omega_h, n_h_real)
    E_in = info["E_dh"] + info["external_work"]
    Q_h = ledgers[role["hot"]].heat
    if regime == "engine_and_refrigerator":
        eta_max = 1.0
    elif E_in > 0:
        eta_max = eta_max_general(cfg.T_c, cfg.T_h, min(max(Q_h, 0.0), E_in), E_in)
    else:
        eta_max = float("nan")
    if external:
        eta_sigma = eta_max  # thermal hot bath: the Spohn bound on heat is the same statement
    elif info["E_dh"] > 0:
        eta_sigma = eta_sigma_general(cfg.T_c, cfg.T_h, E_tilde_dh, info["E_dh"]).value
    else:
        eta_sigma = float("nan")
    carnot = 1.0 - _ratio(cfg.T_c, cfg.T_h) if cfg.T_h > 0 else float("nan")
    result = CycleResult(list(names), list(ledgers), info["work"], eta, eta_max, eta_sigma, carnot, regime,
                         info["external_work"], flags=list(wf.flags))
    result.extras.update(info)
    if result.cyclicity_error() > 1e-6 * cfg.omega_h:
        result.flags.append(f"cycle not closed: sum dE = {result.cyclicity_error():.3e}")
    return result


def _otto_analytic(cfg: OttoConfig) -> dict:
    out = dict(n_c=cfg.n_c, n_h=cfg.n_h, delta_n_h=cfg.delta_n_h)
    try:
        eta, eta_max, eta_sigma = otto_efficiencies(cfg.n_c, cfg.n_h, cfg.delta_n_h, cfg.omega_c, cfg.omega_h,
                                                    cfg.T_c, cfg.T_h, cfg.delta_n_c)
        out.update(eta=eta, eta_max=eta_max, eta_sigma=eta_sigma)
    except RegimeError as exc:
        out["error"] = str(exc)
    return out


def run_modified_otto(cfg: OttoConfig) -> CycleResult:
    """Compression, hot isochore, ergotropy extraction, expansion, cold isochore.

    With ``extract_ergotropy=False`` the extraction stroke is skipped and the
    non-passive state is expanded directly (the plain four-stroke cycle).  With
    ``bath_kind="second_kind"`` the hot bath is thermal at the temperature
    that gives the same excitation n_h + delta_n_h, and nothing is extracted.
    """
    wf = _backend(cfg)
    second_kind = cfg.bath_kind == "second_kind"
    n_hot, r_hot = (cfg.n_h + cfg.delta_n_h, 0.0) if second_kind else (cfg.n_h, cfg.r)
    state = wf.thermal(cfg.n_c)
    names, ledgers = [], []

    state, led = wf.adiabatic(state, cfg.omega_c, cfg.omega_h)
    names.append("compression"), ledgers.append(led)
    k_before = wf.squeezed_frame_occupation(state, cfg.r)
    state, led = wf.isochore(state, cfg.omega_h, n_hot, r_hot)
    k_after = wf.squeezed_frame_occupation(state, cfg.r)
    names.append("hot"), ledgers.append(led)
    if cfg.extract_ergotropy and not second_kind:
        state, led = wf.extract(state, cfg.omega_h)
        names.append("extraction"), ledgers.append(led)
    state, led = wf.adiabatic(state, cfg.omega_h, cfg.omega_c)
    names.append("expansion"), ledgers.append(led)
    state, led = wf.isochore(state, cfg.omega_c, cfg.n_c, 0.0)
    names.append("cold"), ledgers.append(led)

    E_tilde = cfg.omega_h * (k_after - k_before)
    result = _assemble(cfg, names, ledgers, wf, E_tilde, bath_kind=cfg.bath_kind,
                       n_h_real=cfg.n_h + cfg.delta_n_h)
    result.analytic = _otto_analytic(cfg)
    result.extras["final_state"] = state
    return result


def run_equivalent_hybrid(cfg: OttoConfig) -> CycleResult:
    """Thermal hot bath followed by an external squeeze of the working fluid.

    The squeeze (work W_ext from a battery, not the piston) prepares the same
    non-passive state the squeezed bath would have produced; the remaining
    strokes are those of the modified Otto cycle.
    """
    wf = _backend(cfg)
    state = wf.thermal(cfg.n_c)
    names, ledgers = [], []
    state, led = wf.adiabatic(state, cfg.omega_c, cfg.omega_h)
    names.append("compression"), ledgers.append(led)
    state, led = wf.isochore(state, cfg.omega_h, cfg.n_h, 0.0)
    names.append("hot"), ledgers.append(led)
    state, led = wf.squeeze(state, cfg.omega_h, cfg.r)
    names.append("external_squeeze"), ledgers.append(led)
    state, led = wf.extract(state, cfg.omega_h)
    names.append("extraction"), ledgers.append(led)
    state, led = wf.adiabatic(state, cfg.omega_h, cfg.omega_c)
    names.append("expansion"), ledgers.append(led)
    state, led = wf.isochore(state, cfg.omega_c, cfg.n_c, 0.0)
    names.append("cold"), ledgers.append(led)
    result = _assemble(cfg, names, ledgers, wf, 0.0, external=("external_squeeze",))
    result.analytic = _otto_analytic(cfg)
    return result


# Carnot ------------------------------------------------------------------------------------


def _ramp(omega_start: float, omega_end: float, rate: float):
    duration = abs(omega_end - omega_start) / rate
    sign = np.sign(omega_end - omega_start)

    def omega(t):
        return omega_start + sign * rate * min(t, duration)

    return omega, duration


def _isothermal(space, state, kappa, T, r, omega_start, omega_end, rate, hold, n_store, label):
    omega, duration = _ramp(omega_start, omega_end, rate)
    gen = ramped_squeezed_bath_generator(kappa, T, r, omega, space, label)
    t_end = duration + hold
    grid = np.union1d(np.linspace(0.0, t_end, n_store), [duration, t_end - 1.0 / kappa])
    grid = grid[grid >= 0]
    traj = integrate(gen, state, (0.0, t_end), IntegrationConfig(), t_eval=grid)
    if any(f.startswith("slow-driving") for f in traj.flags):
        raise SlowDrivingError(f"{label}: {traj.flags[0]}; lower ramp_rate")
    change = stationarity_change(traj, kappa)
    if change > STATIONARY_TOL:
        raise IntegrationError(f"{label}: not stationary after the hold (change {change:.2e}); increase hold_time")
    return gen, traj


def run_modified_carnot(cfg: CarnotConfig) -> CycleResult:
    """Adiabat to omega_2, squeezed isotherm down to omega_h, extraction, adiabat to omega_1, cold isotherm."""
    space = HilbertSpace(int(cfg.fock_dim))
    num = fock_number(space)
    H = lambda w: w * num  # noqa: E731
    state = thermal_state(space, bose_occupation(cfg.omega_c, cfg.T_c))
    names, ledgers = [], []

    names.append("compression"), ledgers.append(unitary_stroke_ledger(state, state, H(cfg.omega_c), H(cfg.omega_2)))
    gen_h, traj_h = _isothermal(space, state, cfg.kappa, cfg.T_h, cfg.r, cfg.omega_2, cfg.omega_h, cfg.ramp_rate,
                                cfg.hold_time, cfg.n_store, "hot-isotherm")
    names.append("hot"), ledgers.append(ledger_for_stroke(traj_h))
    bounds = tight_bound_time_dependent(traj_h, cfg.T_h, gen_h)
    state = project_density(traj_h.states[-1])
    pi = passive_state(state, H(cfg.omega_h)).passive_state
    names.append("extraction"), ledgers.append(unitary_stroke_ledger(state, pi, H(cfg.omega_h)))
    state = pi
    names.append("expansion"), ledgers.append(unitary_stroke_ledger(state, state, H(cfg.omega_h), H(cfg.omega_1)))
    _, traj_c = _isothermal(space, state, cfg.kappa, cfg.T_c, 0.0, cfg.omega_1, cfg.omega_c, cfg.ramp_rate,
                            cfg.hold_time, cfg.n_store, "cold-isotherm")
    names.append("cold"), ledgers.append(ledger_for_stroke(traj_c))

    by_name = dict(zip(names, ledgers))
    regime, eta, info = classify_regime(by_name, cfg.T_c, cfg.T_h)
    E_dh = info["E_dh"]
    Q_prime = bounds.bound_tight * cfg.T_h
    eta_max = eta_max_general(cfg.T_c, cfg.T_h, Q_prime, E_dh) if E_dh > 0 else float("nan")
    E_tilde = bounds.bound_second_law * cfg.T_h
    eta_sigma = eta_sigma_general(cfg.T_c, cfg.T_h, E_tilde, E_dh).value if E_dh > 0 else float("nan")
    result = CycleResult(names, ledgers, info["work"], eta, eta_max, eta_sigma, 1.0 - cfg.T_c / cfg.T_h, regime,
                         flags=list(traj_h.flags) + list(traj_c.flags))
    result.extras.update(info, Q_prime_h=Q_prime, delta_S_h=bounds.delta_S, hot_bounds=bounds,
                         delta_S_c=_entropy_change(traj_c), omega_1=cfg.omega_1, omega_2=cfg.omega_2)
    if result.cyclicity_error() > 1e-6 * cfg.omega_2:
        result.flags.append(f"cycle not closed: sum dE = {result.cyclicity_error():.3e}")
    return result


def _entropy_change(traj) -> float:
    return von_neumann_entropy(project_density(traj.states[-1])) - von_neumann_entropy(
        project_density(traj.states[0]))


def hot_isotherm_bounds(omega_start: float = 25.0, ramp_rate: float = 0.05, T: float = 5.0, r: float = 0.2,
                        duration: float = 60.0, kappa: float = 1.0, fock_dim: int = 41, n_store: int = 301):
    """Entropy change and its bounds along a squeezed isotherm with omega(t) = omega_start - ramp_rate t.

    The mode starts thermal at (omega_start, T), as it does after the compression
    adiabat of the Carnot-type cycle.
    """
    if duration <= 0 or ramp_rate < 0 or omega_start - ramp_rate * duration <= 0:
        raise ValueError("frequency must stay positive over the stroke")
    space = HilbertSpace(int(fock_dim))
    state = thermal_state(space, bose_occupation(omega_start, T))
    omega = lambda t: omega_start - ramp_rate * t  # noqa: E731
    gen = ramped_squeezed_bath_generator(kappa, T, r, omega, space, f"linear ramp {omega_start:g}-{ramp_rate:g}t")
    grid = np.linspace(0.0, duration, n_store)
    traj = integrate(gen, state, (0.0, duration), IntegrationConfig(), t_eval=grid)
    return tight_bound_time_dependent(traj, T, gen)
