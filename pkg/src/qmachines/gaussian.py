"""Single-mode Gaussian states in closed form.

Quadratures are x1 = (b + b^dag)/2 and x2 = (b - b^dag)/(2i), so the vacuum has
width 1/4 along every axis and

    <b^dag b> = f_plus + f_minus - 1/2 + x1^2 + x2^2.

States are stored in the pump-aligned frame: ``axis_phase`` is the angle of
the major (f_plus) axis measured from the x1 axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

from .quantum_core import (
    HilbertSpace,
    bose_entropy,
    fock_annihilation,
    temperature_from_occupation,
    thermal_state,
)

WIDTH_FLOOR = 1e-12
UNCERTAINTY_TOL = 1e-9


class GaussianStateError(ValueError):
    pass


class PumpKind(str, Enum):
    NONE = "none"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class GaussianState:
    x1_mean: float = 0.0
    x2_mean: float = 0.0
    f_plus: float = 0.25
    f_minus: float = 0.25
    axis_phase: float = 0.0

    def __post_init__(self):
        if self.f_minus < WIDTH_FLOOR or self.f_plus < self.f_minus * (1 - 1e-12):
            raise GaussianStateError(f"need f_plus >= f_minus >= {WIDTH_FLOOR}, got {self.f_plus}, {self.f_minus}")
        if 4.0 * np.sqrt(self.f_plus * self.f_minus) < 1.0 - UNCERTAINTY_TOL:
            raise GaussianStateError("widths violate the uncertainty relation")

    # constructors -----------------------------------------------------------

    @classmethod
    def vacuum(cls) -> "GaussianState":
        return cls()

    @classmethod
    def coherent(cls, alpha: complex) -> "GaussianState":
        return cls(float(np.real(alpha)), float(np.imag(alpha)))

    @classmethod
    def thermal(cls, n: float, alpha: complex = 0.0) -> "GaussianState":
        f = (n + 0.5) / 2.0
        return cls(float(np.real(alpha)), float(np.imag(alpha)), f, f)

    @classmethod
    def squeezed_thermal(cls, n: float, r: float, axis_phase: float = 0.0, alpha: complex = 0.0) -> "GaussianState":
        """Thermal occupation ``n`` squeezed by ``r``; the anti-squeezed axis sits at ``axis_phase``."""
        base = (n + 0.5) / 2.0
        return cls(float(np.real(alpha)), float(np.imag(alpha)), float(base * np.exp(2 * r)), float(base * np.exp(-2 * r)),
                   axis_phase)

    @classmethod
    def from_covariance(cls, x1: float, x2: float, V: np.ndarray) -> "GaussianState":
        V = np.asarray(V, dtype=float)
        V = 0.5 * (V + V.T)
        w, v = np.linalg.eigh(V)
        f_minus, f_plus = float(w[0]), float(w[1])
        major = v[:, 1]
        phase = float(np.arctan2(major[1], major[0]))
        # an axis, not a direction: fold into (-pi/2, pi/2]
        if phase <= -np.pi / 2:
            phase += np.pi
        elif phase > np.pi / 2:
            phase -= np.pi
        if abs(f_plus - f_minus) <= 1e-15 * max(f_plus, 1.0):
            phase = 0.0
        return cls(float(x1), float(x2), f_plus, max(f_minus, WIDTH_FLOOR), phase)

    @classmethod
    def from_moments(cls, alpha: complex, n: float, a2: complex) -> "GaussianState":
        """From <b>, <b^dag b>, <b^2>."""
        nc = n - abs(alpha) ** 2
        a2c = a2 - alpha ** 2
        V = np.array([[(2 * nc + 1 + 2 * a2c.real) / 4, a2c.imag / 2],
                      [a2c.imag / 2, (2 * nc + 1 - 2 * a2c.real) / 4]])
        return cls.from_covariance(np.real(alpha), np.imag(alpha), V)

    # derived quantities ------------------------------------------------------

    def covariance(self) -> np.ndarray:
        c, s = np.cos(self.axis_phase), np.sin(self.axis_phase)
        R = np.array([[c, -s], [s, c]])
        return R @ np.diag([self.f_plus, self.f_minus]) @ R.T

    @property
    def alpha(self) -> complex:
        return complex(self.x1_mean, self.x2_mean)

    @property
    def mean_occupation(self) -> float:
        return self.f_plus + self.f_minus - 0.5 + self.x1_mean ** 2 + self.x2_mean ** 2

    @property
    def a2(self) -> complex:
        """<b^2> including the displacement."""
        return (self.f_plus - self.f_minus) * np.exp(2j * self.axis_phase) + self.alpha ** 2


def moments_from_fock(rho: np.ndarray) -> tuple[complex, float, complex]:
    """(<b>, <b^dag b>, <b^2>) of a Fock-space density matrix."""
    a = fock_annihilation(rho.shape[0])
    tr = lambda op: complex(np.sum(rho * op.T))  # noqa: E731
    return tr(a), tr(a.conj().T @ a).real, tr(a @ a)


def gaussian_from_fock(rho: np.ndarray) -> GaussianState:
    return GaussianState.from_moments(*moments_from_fock(rho))


def bath_steady_state(n_bar: float, r: float) -> GaussianState:
    """Steady state of the squeezed-bath master equation (zero squeezing phase): x1 is squeezed."""
    return GaussianState.squeezed_thermal(n_bar, r, axis_phase=np.pi / 2)


# drives ------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBathDrive:
    """Drift Gamma, diffusion D and pump rate of the reduced piston dynamics."""

    Gamma: float
    D: float
    kappa_pump: float = 0.0
    pump_kind: PumpKind = PumpKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "pump_kind", PumpKind(self.pump_kind))
        if self.D < 0:
            raise ValueError("diffusion D must be non-negative")
        if self.D + self.Gamma < -1e-12 * max(abs(self.D), abs(self.Gamma), 1.0):
            raise ValueError(f"D + Gamma must be >= 0 (got D={self.D}, Gamma={self.Gamma})")
        if self.pump_kind is PumpKind.NONE and self.kappa_pump != 0.0:
            raise ValueError("pump rate given without a pump")

    @property
    def quadratic_rate(self) -> float:
        return abs(self.kappa_pump) if self.pump_kind is PumpKind.QUADRATIC else 0.0

    @property
    def Gamma_plus(self) -> float:
        return -self.Gamma / 2 + self.quadratic_rate

    @property
    def Gamma_minus(self) -> float:
        return -self.Gamma / 2 - self.quadratic_rate

    @property
    def diffusion(self) -> float:
        """D + Gamma/2, the Wigner-function diffusion coefficient."""
        return self.D + self.Gamma / 2


def _growth(rate: float, t: float) -> tuple[float, float]:
    """(exp(2 rate t), (exp(2 rate t) - 1) / (4 rate)) with the rate -> 0 limit t/2."""
    e = np.exp(2 * rate * t)
    if abs(rate * t) < 1e-12:
        return e, t / 2.0
    return e, np.expm1(2 * rate * t) / (4 * rate)


def _width_at(f0: float, rate: float, diffusion: float, t: float) -> float:
    e, g = _growth(rate, t)
    return f0 * e + diffusion * g


def widths_at(drive: GaussianBathDrive, t: float) -> tuple[float, float]:
    """Widths (along x1, along x2) at time t for an initially coherent state."""
    return (_width_at(0.25, drive.Gamma_plus, drive.diffusion, t),
            _width_at(0.25, drive.Gamma_minus, drive.diffusion, t))


def linear_pump_displacement(alpha0: complex, Gamma: float, kappa: float, t: float) -> complex:
    """alpha(t) = alpha0 e^{-Gamma t/2} + (2 kappa/Gamma)(1 - e^{-Gamma t/2})."""
    decay = np.exp(-Gamma * t / 2)
    if abs(Gamma * t) < 1e-12:
        return alpha0 * decay + kappa * t
    return alpha0 * decay - (2 * kappa / Gamma) * np.expm1(-Gamma * t / 2)


def means_at(state0: GaussianState, drive: GaussianBathDrive, t: float) -> tuple[float, float]:
    if drive.pump_kind is PumpKind.LINEAR:
        a = linear_pump_displacement(state0.alpha, drive.Gamma, drive.kappa_pump, t)
        return float(a.real), float(a.imag)
    return (state0.x1_mean * np.exp(drive.Gamma_plus * t), state0.x2_mean * np.exp(drive.Gamma_minus * t))


def evolve(state0: GaussianState, drive: GaussianBathDrive, t: float) -> GaussianState:
    """Closed-form solution of the reduced piston master equation."""
    if t < 0:
        raise ValueError("t must be non-negative")
    V0 = state0.covariance()
    c = drive.diffusion
    V = np.array([
        [_width_at(V0[0, 0], drive.Gamma_plus, c, t), V0[0, 1] * np.exp(-drive.Gamma * t)],
        [V0[1, 0] * np.exp(-drive.Gamma * t), _width_at(V0[1, 1], drive.Gamma_minus, c, t)],
    ])
    x1, x2 = means_at(state0, drive, t)
    return GaussianState.from_covariance(x1, x2, V)


def time_derivatives(state: GaussianState, drive: GaussianBathDrive) -> dict:
    """Right-hand side of the moment equations evaluated at ``state``."""
    V = state.covariance()
    c = drive.diffusion
    dV11 = 2 * drive.Gamma_plus * V[0, 0] + c / 2
    dV22 = 2 * drive.Gamma_minus * V[1, 1] + c / 2
    dV12 = -drive.Gamma * V[0, 1]
    if drive.pump_kind is PumpKind.LINEAR:
        dalpha = -drive.Gamma / 2 * state.alpha + drive.kappa_pump
        dx1, dx2 = dalpha.real, dalpha.imag
    else:
        dx1 = drive.Gamma_plus * state.x1_mean
        dx2 = drive.Gamma_minus * state.x2_mean
    dn = dV11 + dV22 + 2 * state.x1_mean * dx1 + 2 * state.x2_mean * dx2
    return dict(dx1=dx1, dx2=dx2, dV11=dV11, dV22=dV22, dV12=dV12, dn=dn)


def evolve_squeezed_bath(state0: GaussianState, kappa: float, n_bar: float, r: float, t: float) -> GaussianState:
    """Relaxation in a squeezed thermal bath (frame rotating with the mode)."""
    V_ss = bath_steady_state(n_bar, r).covariance()
    decay = np.exp(-2 * kappa * t)
    V = V_ss + (state0.covariance() - V_ss) * decay
    m = np.exp(-kappa * t)
    return GaussianState.from_covariance(state0.x1_mean * m, state0.x2_mean * m, V)


# thermodynamic functionals ---------------------------------------------------------


def n_passive(state: GaussianState) -> tuple[float, float]:
    """Occupation of the passive (thermal) counterpart and the squeezing parameter r."""
    prod = state.f_plus * state.f_minus
    root = np.sqrt(prod)
    if 4 * root < 1 - UNCERTAINTY_TOL:
        raise GaussianStateError("widths below the vacuum floor")
    n_pas = max(2.0 * root - 0.5, 0.0)
    r = 0.25 * np.log(state.f_plus / state.f_minus)
    return float(n_pas), float(r)


def passive_temperature(state: GaussianState, nu: float) -> float:
    return temperature_from_occupation(nu, n_passive(state)[0])


def gaussian_energy_ergotropy(state: GaussianState, nu: float) -> tuple[float, float, float]:
    """(energy, passive energy, ergotropy) for H = nu b^dag b."""
    n_pas, _ = n_passive(state)
    energy = nu * state.mean_occupation
    passive = nu * n_pas
    return energy, passive, energy - passive


def gaussian_entropy(state: GaussianState) -> float:
    return bose_entropy(n_passive(state)[0])


def is_nonclassical(state: GaussianState) -> bool:
    """Negative P-function test: some quadrature fluctuates below the vacuum level."""
    return state.f_minus < 0.25 * (1 - 1e-12)


def to_fock(state: GaussianState, space, pad: int | None = None) -> np.ndarray:
    """Density matrix of ``state`` in a truncated Fock space.

    Squeezing and displacement are applied in an enlarged space and the
    result truncated; the discarded weight must stay below 1e-10.
    """
    space = space if isinstance(space, HilbertSpace) else HilbertSpace(int(space))
    big = space.dim + (pad if pad is not None else max(40, space.dim))
    n_pas, r = n_passive(state)
    rho = thermal_state(big, n_pas)
    a = fock_annihilation(big)
    ad = a.conj().T
    if r > 0:
        xi = -r * np.exp(2j * state.axis_phase)
        S = expm(0.5 * (np.conj(xi) * (a @ a) - xi * (ad @ ad)))
        rho = S @ rho @ S.conj().T
    if state.alpha != 0:
        Dm = expm(state.alpha * ad - np.conj(state.alpha) * a)
        rho = Dm @ rho @ Dm.conj().T
    out = rho[: space.dim, : space.dim]
    lost = 1.0 - np.trace(out).real
    edge = np.real(np.trace(rho[-2:, -2:]))  # weight piled up at the edge of the enlarged space
    if lost > 1e-10 or edge > 1e-10:
        from .lindblad import TruncationError

        raise TruncationError(f"state does not fit into dim={space.dim} (discarded weight {max(lost, edge):.2e})")
    out = 0.5 * (out + out.conj().T)
    return out / np.trace(out).real
