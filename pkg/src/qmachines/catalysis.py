"""Heat engine with a qubit working fluid and a pumped harmonic piston.

The qubit (frequency omega0) couples dispersively to the piston (frequency
nu) and to a hot and a cold bath.  Eliminating the qubit leaves a Gaussian
master equation for the dressed piston mode with drift Gamma and diffusion D;
an optional pump acts on the piston linearly or quadratically (parametric
amplification).  All quantities are evaluated in closed form on the Gaussian
piston state; ``piston_generator`` gives the same dynamics in Fock space for
cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    GaussianBathDrive,
    GaussianState,
    PumpKind,
    evolve,
    gaussian_energy_ergotropy,
    gaussian_entropy,
    linear_pump_displacement,
    n_passive,
    passive_temperature,
    time_derivatives,
)
from .lindblad import DissipatorSpec, GeneratorSpec
from .quantum_core import HilbertSpace, fock_annihilation, fock_number

KMS_TOL = 1e-9
IDENTITY_TOL = 1e-8
OCCUPATION_CAP = 1e6
MAX_COUPLING = 0.2


class SpectrumError(ValueError):
    pass


class CatalysisConfigError(ValueError):
    pass


class IdentityError(AssertionError):
    pass


def _key(omega: float) -> float:
    return round(float(omega), 12)


@dataclass(frozen=True)
class BathSpectrum:
    """Point values G(omega) of one bath's response spectrum at temperature T."""

    values: dict
    temperature: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise SpectrumError("bath temperature must be positive")
        vals = {_key(w): float(g) for w, g in self.values.items()}
        if any(g < 0 for g in vals.values()):
            raise SpectrumError("spectral values must be non-negative")
        for w, g in vals.items():
            if w > 0 and -w in vals:
                expect = np.exp(w / self.temperature) * vals[-w]
                if abs(g - expect) > KMS_TOL * max(g, expect, 1e-300):
                    raise SpectrumError(f"KMS violated at omega={w}: G(w)={g}, e^(w/T) G(-w)={expect}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_positive(cls, positive: dict, temperature: float) -> "BathSpectrum":
        """Fill in G(-omega) = e^(-omega/T) G(omega)."""
        vals = {}
        for w, g in positive.items():
            if w <= 0:
                raise SpectrumError("from_positive takes positive frequencies only")
            vals[w] = g
            vals[-w] = g * np.exp(-w / temperature)
        return cls(vals, temperature)

    def G(self, omega: float) -> float:
        try:
            return self.values[_key(omega)]
        except KeyError:
            raise SpectrumError(f"spectrum has no value at omega={omega}") from None


@dataclass(frozen=True)
class CatalysisConfig:
    omega0: float
    nu: float
    g: float
    hot: BathSpectrum
    cold: BathSpectrum
    pump_kind: str = "none"
    kappa_pump: float = 0.0
    qubit_populations: tuple | None = None  # None: derive from the spectra

    def __post_init__(self):
        object.__setattr__(self, "pump_kind", PumpKind(self.pump_kind).value)
        if self.nu <= 0 or self.omega0 <= self.nu:
            raise CatalysisConfigError("need 0 < nu < omega0 so that omega0 - nu > 0")
        if not 0 < self.g <= MAX_COUPLING * self.nu:
            raise CatalysisConfigError(f"dispersive coupling needs 0 < g/nu <= {MAX_COUPLING}")
        if self.cold.temperature > self.hot.temperature:
            raise CatalysisConfigError("cold bath is hotter than the hot bath")
        carnot = 1.0 - self.cold.temperature / self.hot.temperature
        if self.nu / self.omega_plus > carnot + 1e-12:
            raise CatalysisConfigError(f"nu/omega_+ = {self.nu / self.omega_plus:.4g} exceeds Carnot {carnot:.4g}")
        if self.kappa_pump < 0:
            raise CatalysisConfigError("pump rate is |kappa| >= 0")
        if self.pump_kind == "none" and self.kappa_pump != 0:
            raise CatalysisConfigError("pump rate given with pump_kind='none'")
        if self.qubit_populations is not None:
            p0, p1 = self.qubit_populations
            if min(p0, p1) < 0 or abs(p0 + p1 - 1) > 1e-12:
                raise CatalysisConfigError("qubit populations must be non-negative and sum to 1")

    @property
    def omega_plus(self) -> float:
        return self.omega0 + self.nu

    @property
    def omega_minus(self) -> float:
        return self.omega0 - self.nu

    @property
    def eta_max(self) -> float:
        return self.nu / self.omega_plus

    @property
    def eta_carnot(self) -> float:
        return 1.0 - self.cold.temperature / self.hot.temperature

    def G(self, omega: float) -> float:
        return self.hot.G(omega) + self.cold.G(omega)

    def with_pump(self, pump_kind: str, kappa_pump: float) -> "CatalysisConfig":
        return CatalysisConfig(self.omega0, self.nu, self.g, self.hot, self.cold, pump_kind,
                               kappa_pump if pump_kind != "none" else 0.0, self.qubit_populations)


def optimal_spectra(omega0: float, nu: float, T_h: float, T_c: float, G_hot: float = 1.0,
                    G_cold: float = 1.0) -> tuple[BathSpectrum, BathSpectrum]:
    """Non-overlapping spectra: hot bath only at omega0 + nu, cold bath only at omega0, nothing at omega0 - nu."""
    wp, wm = omega0 + nu, omega0 - nu
    hot = BathSpectrum.from_positive({wp: G_hot, wm: 0.0, omega0: 0.0}, T_h)
    cold = BathSpectrum.from_positive({wp: 0.0, wm: 0.0, omega0: G_cold}, T_c)
    return hot, cold


FIG7 = dict(omega0=3.0, nu=0.5, g=0.05, T_h=1.0, T_c=0.6, kappa_ratio=0.1, alpha0=1.0)


def fig7_config(pump_kind: str = "quadratic", nu: float | None = None, kappa_ratio: float | None = None,
                **overrides) -> CatalysisConfig:
    """Optimal-spectrum configuration with T_c = 0.6 T_h and |kappa| = kappa_ratio |Gamma|."""
    p = dict(FIG7, **overrides)
    if nu is not None:
        p["nu"] = nu
    ratio = p["kappa_ratio"] if kappa_ratio is None else kappa_ratio
    hot, cold = optimal_spectra(p["omega0"], p["nu"], p["T_h"], p["T_c"])
    base = CatalysisConfig(p["omega0"], p["nu"], p["g"], hot, cold)
    Gamma, _ = drift_diffusion(base)
    return base.with_pump(pump_kind, ratio * abs(Gamma))


def resolve_qubit_populations(cfg: CatalysisConfig) -> tuple[float, float]:
    """(rho00, rho11): explicit values, or the stationary ratio G(-omega0)/G(omega0) of both baths."""
    if cfg.qubit_populations is not None:
        return tuple(float(p) for p in cfg.qubit_populations)
    up = cfg.G(cfg.omega0)
    if up <= 0:
        raise CatalysisConfigError("G(omega0) = 0: qubit populations must be given explicitly")
    ratio = cfg.G(-cfg.omega0) / up
    return 1.0 / (1.0 + ratio), ratio / (1.0 + ratio)


def drift_diffusion(cfg: CatalysisConfig) -> tuple[float, float]:
    """(Gamma, D) of the reduced piston dynamics."""
    p0, p1 = resolve_qubit_populations(cfg)
    c = (cfg.g / cfg.nu) ** 2
    wp, wm = cfg.omega_plus, cfg.omega_minus
    Gamma = c * ((cfg.G(wp) - cfg.G(wm)) * p1 + (cfg.G(-wm) - cfg.G(-wp)) * p0)
    D = c * (cfg.G(wm) * p1 + cfg.G(-wp) * p0)
    if D + Gamma < -1e-12 * max(abs(D), abs(Gamma), 1e-300):
        raise CatalysisConfigError(f"D + Gamma < 0 (D={D}, Gamma={Gamma}): inconsistent spectra")
    return float(Gamma), float(D)


def piston_drive(cfg: CatalysisConfig) -> GaussianBathDrive:
    Gamma, D = drift_diffusion(cfg)
    return GaussianBathDrive(Gamma, max(D, 0.0), cfg.kappa_pump, cfg.pump_kind)


# per-point analytics ----------------------------------------------------------------------


def pump_power(state: GaussianState, drive: GaussianBathDrive, nu: float) -> float:
    """Rate of work done by the pump, Tr[rho dH_pump/dt]."""
    if drive.pump_kind is PumpKind.QUADRATIC:
        return 2 * nu * drive.kappa_pump * float(np.real(state.a2))
    if drive.pump_kind is PumpKind.LINEAR:
        return 2 * nu * drive.kappa_pump * state.x1_mean
    return 0.0


def passive_rate(state: GaussianState, drive: GaussianBathDrive) -> float:
    """d n_pas/dt from the covariance equations (d(2 sqrt(det V))/dt)."""
    V = state.covariance()
    d = time_derivatives(state, drive)
    det = V[0, 0] * V[1, 1] - V[0, 1] ** 2
    ddet = d["dV11"] * V[1, 1] + V[0, 0] * d["dV22"] - 2 * V[0, 1] * d["dV12"]
    return float(ddet / np.sqrt(det))


def passive_rate_closed_form(state: GaussianState, drive: GaussianBathDrive) -> float:
    """-Gamma (n_pas + 1/2) + (D + Gamma/2) cosh 2r."""
    n_pas, r = n_passive(state)
    return -drive.Gamma * (n_pas + 0.5) + drive.diffusion * np.cosh(2 * r)


def heat_flux_hot(state: GaussianState, drive: GaussianBathDrive, omega_plus: float) -> float:
    """Heat current from the hot bath into qubit and piston; both closed forms are evaluated and compared."""
    direct = omega_plus * (-drive.Gamma * state.mean_occupation + drive.D)
    n_pas, r = n_passive(state)
    expanded = omega_plus * drive.diffusion - omega_plus * drive.Gamma * (
        (n_pas + 0.5) * np.cosh(2 * r) + state.x1_mean ** 2 + state.x2_mean ** 2)
    if abs(direct - expanded) > IDENTITY_TOL * max(abs(direct), abs(expanded), omega_plus * drive.D, 1e-300):
        raise IdentityError(f"heat-flux forms disagree: {direct} vs {expanded}")
    return float(direct)


def max_power(state: GaussianState, drive: GaussianBathDrive, nu: float, omega_plus: float) -> float:
    """d<H_P>/dt - T_P dS_P/dt - W_pump_dot, using T_P dS_P/dt = nu dn_pas/dt."""
    dH = nu * time_derivatives(state, drive)["dn"]
    return float(dH - nu * passive_rate(state, drive) - pump_power(state, drive, nu))


@dataclass
class EnginePoint:
    time: float
    piston: GaussianState
    power_max: float
    pump_power: float
    heat_flux_h: float
    eta: float
    ergotropy: float
    n_pas: float
    energy: float = 0.0
    entropy: float = 0.0
    T_P: float = 0.0
    dH_dt: float = 0.0
    identity_residual: float = 0.0
    eta_approx: float = float("nan")
    flags: list = field(default_factory=list)


def engine_point(cfg: CatalysisConfig, drive: GaussianBathDrive, state: GaussianState, t: float) -> EnginePoint:
    nu, wp = cfg.nu, cfg.omega_plus
    dH = nu * time_derivatives(state, drive)["dn"]
    Wp = pump_power(state, drive, nu)
    Q = heat_flux_hot(state, drive, wp)
    lhs, rhs = dH - Wp, nu / wp * Q
    residual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    if residual > IDENTITY_TOL:
        raise IdentityError(f"power identity violated at t={t}: {lhs} vs {rhs}")
    P = dH - nu * passive_rate(state, drive) - Wp
    energy, _, erg = gaussian_energy_ergotropy(state, nu)
    n_pas, r = n_passive(state)
    flags = []
    if Q > 0:
        eta = P / Q
        denom = (n_pas + 0.5) * np.cosh(2 * r) + state.x1_mean ** 2 + state.x2_mean ** 2
        eta_approx = cfg.eta_max * (1 - (n_pas + 0.5) / denom)
        if drive.Gamma < 0 and n_pas < 10 * drive.D / abs(drive.Gamma):
            flags.append("approximation: n_pas not >> D/|Gamma|")
    else:
        eta, eta_approx = float("nan"), float("nan")
        flags.append("non-engine: heat flux <= 0")
    return EnginePoint(float(t), state, float(P), float(Wp), float(Q), float(eta), float(erg), float(n_pas),
                       float(energy), gaussian_entropy(state), passive_temperature(state, nu), float(dH),
                       float(residual), float(eta_approx), flags)


def evolve_piston(cfg: CatalysisConfig, state0: GaussianState, t_grid) -> list[EnginePoint]:
    """Closed-form piston evolution sampled on ``t_grid``.

    Evaluation stops (with a flag on the last point) once the occupation
    exceeds 1e6: the linear gain model has no saturation.  Without gain
    (Gamma >= 0) every point is flagged.
    """
    drive = piston_drive(cfg)
    points = []
    for t in np.asarray(t_grid, dtype=float):
        state = evolve(state0, drive, float(t))
        pt = engine_point(cfg, drive, state, t)
        if drive.Gamma >= 0:
            pt.flags.append("no gain: Gamma >= 0, the piston is damped")
        points.append(pt)
        if state.mean_occupation > OCCUPATION_CAP:
            pt.flags.append(f"horizon: occupation above {OCCUPATION_CAP:g}, later points dropped")
            break
    return points


def unpumped_efficiency(cfg: CatalysisConfig, alpha0: complex) -> float:
    """eta_0 = (nu/omega_+) / (1 + D/(|Gamma| |alpha0|^2)) in the gain regime."""
    Gamma, D = drift_diffusion(cfg)
    if Gamma >= 0:
        raise CatalysisConfigError("unpumped efficiency needs gain (Gamma < 0)")
    return cfg.eta_max / (1 + D / (abs(Gamma) * abs(alpha0) ** 2))


def linear_efficiency_limit(cfg: CatalysisConfig, alpha0: complex, n_pas0: float = 0.0) -> float:
    """Late-time efficiency under linear pumping (gain regime)."""
    Gamma, D = drift_diffusion(cfg)
    if Gamma >= 0:
        raise CatalysisConfigError("needs gain (Gamma < 0)")
    A = abs(alpha0 + 2 * cfg.kappa_pump / abs(Gamma)) ** 2
    return cfg.eta_max * A / (A + n_pas0 + D / abs(Gamma))


def efficiency_curve(points: list[EnginePoint], cfg: CatalysisConfig, alpha0: complex | None = None) -> dict:
    """Exact and approximate eta(t) with the reference values nu/omega_+ and eta_0."""
    out = dict(
        t=np.array([p.time for p in points]),
        eta=np.array([p.eta for p in points]),
        eta_approx=np.array([p.eta_approx for p in points]),
        eta_max=cfg.eta_max,
        eta_carnot=cfg.eta_carnot,
        flags=[list(p.flags) for p in points],
    )
    if alpha0 is not None and drift_diffusion(cfg)[0] < 0 and alpha0 != 0:
        out["eta_unpumped"] = unpumped_efficiency(cfg, alpha0)
    return out


def linear_pump_work(cfg: CatalysisConfig, state0: GaussianState, t: float) -> float:
    """nu |alpha(t)|^2, the work stored in the displacement under linear pumping."""
    if cfg.pump_kind != "linear":
        raise CatalysisConfigError("linear_pump_work needs pump_kind='linear'")
    Gamma, _ = drift_diffusion(cfg)
    return cfg.nu * abs(linear_pump_displacement(state0.alpha, Gamma, cfg.kappa_pump, t)) ** 2


# Fock-space counterpart ----------------------------------------------------------------


def piston_generator(drive: GaussianBathDrive, nu: float, space) -> GeneratorSpec:
    """Reduced piston master equation in a truncated Fock space (frame rotating at nu)."""
    space = space if isinstance(space, HilbertSpace) else HilbertSpace(int(space))
    b = fock_annihilation(space)
    bd = b.conj().T
    terms = (DissipatorSpec(b, bd, 0.5 * (drive.Gamma + drive.D)), DissipatorSpec(bd, b, 0.5 * drive.D))
    k = drive.kappa_pump
    if drive.pump_kind is PumpKind.QUADRATIC:
        pump = 0.5j * k * (bd @ bd - b @ b)
    elif drive.pump_kind is PumpKind.LINEAR:
        pump = 1j * k * (bd - b)
    else:
        pump = None
    label = f"piston(Gamma={drive.Gamma:g}, D={drive.D:g}, pump={drive.pump_kind.value}:{k:g}, dim={space.dim})"
    return GeneratorSpec(nu * fock_number(space), terms, label, pump, rotating_frame=True, fock=True,
                         kappa=max(abs(drive.Gamma), drive.D, 1e-12),
                         params=dict(kind="piston", Gamma=drive.Gamma, D=drive.D, pump=drive.pump_kind.value,
                                     kappa_pump=k))
