"""Unit system, domain types, and thermal-state helpers.

Everything in the package works in atomic-style units with hbar = k_B = 1
and (by default) unit mass.  The Gaussian state of the oscillator is carried
around as the four-component moment vector

    v = (<H>, <L>, <C>, <I>)

where H is the instantaneous Hamiltonian, L the Lagrangian
(P^2/2m - m w^2 Q^2 / 2), C the frequency-scaled position-momentum
correlation (w/2)(QP + PQ) and I the identity.  All stroke generators are
linear on this vector, so states are plain 4-vectors and propagators are
4x4 matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError, UnphysicalState

HBAR = 1.0
KB = 1.0

#: Reporting frequency floor: cycle times are quoted in units of 2*pi/OMEGA_MIN.
OMEGA_MIN = 5.0
TIME_UNIT = 2.0 * math.pi / OMEGA_MIN


def cycle_time_to_atomic(tau_units: float) -> float:
    """Convert a cycle time in 2*pi/omega_min units to atomic time."""
    return tau_units * TIME_UNIT


def cycle_time_from_atomic(tau_atomic: float) -> float:
    """Convert an atomic-unit duration to 2*pi/omega_min units."""
    return tau_atomic / TIME_UNIT


@dataclass(frozen=True)
class UnitSystem:
    """Fixed atomic-style unit system; only the mass is adjustable."""

    hbar: float = 1.0
    k_boltzmann: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar != 1.0 or self.k_boltzmann != 1.0:
            raise DomainError("unit system is fixed to hbar = k_B = 1")
        if self.mass <= 0:
            raise DomainError("mass must be positive")


def thermal_population(omega: float, temperature: float) -> float:
    """Bose occupation 1/(exp(hbar*omega/kT) - 1).

    Raises DomainError for non-positive frequency or temperature.
    """
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if temperature <= 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    x = HBAR * omega / (KB * temperature)
    if x > 45.0:  # expm1 overflows near 710; the tail is exp(-x) anyway
        return math.exp(-x)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class ObservableVector:
    """Moment vector (<H>, <L>, <C>, <I>) of a Gaussian oscillator state."""

    h: float
    l: float
    c: float
    id: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.l, self.c, self.id], dtype=float)

    @classmethod
    def from_array(cls, v) -> "ObservableVector":
        v = np.asarray(v, dtype=float)
        return cls(h=float(v[0]), l=float(v[1]), c=float(v[2]), id=float(v[3]))

    def coherence(self, omega: float) -> float:
        """Off-diagonality in the instantaneous energy basis, sqrt(l^2+c^2)/(hbar*w)."""
        return math.hypot(self.l, self.c) / (HBAR * omega)

    def casimir(self) -> float:
        """h^2 - l^2 - c^2; conserved (after /w^2 scaling) by unitary strokes."""
        return self.h**2 - self.l**2 - self.c**2

    def check_physical(self, omega: Optional[float] = None, rtol: float = 1e-9) -> None:
        """Raise UnphysicalState unless h >= sqrt(l^2+c^2) and, when a
        frequency is given, h^2 - l^2 - c^2 >= (hbar*w/2)^2."""
        if abs(self.id - 1.0) > rtol:
            raise UnphysicalState(f"identity component must be 1, got {self.id}")
        slack = rtol * max(abs(self.h), 1.0)
        if self.h + slack < math.hypot(self.l, self.c):
            raise UnphysicalState(
                f"h={self.h} below coherence magnitude {math.hypot(self.l, self.c)}"
            )
        if omega is not None:
            bound = (HBAR * omega / 2.0) ** 2
            if self.casimir() < bound * (1.0 - 1e-9) - slack:
                raise UnphysicalState(
                    f"Casimir {self.casimir()} below ground-state bound {bound}"
                )


def thermal_observable_vector(omega: float, temperature: float) -> ObservableVector:
    """Moment vector of the Gibbs state at (omega, temperature)."""
    n = thermal_population(omega, temperature)
    return ObservableVector(h=HBAR * omega * (n + 0.5), l=0.0, c=0.0)


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath: temperature and the dimensionless dipole coupling constant."""

    temperature: float
    coupling: float = 0.05

    def __post_init__(self):
        if self.temperature <= 0:
            raise DomainError(f"bath temperature must be positive, got {self.temperature}")
        if self.coupling <= 0:
            raise DomainError(f"bath coupling must be positive, got {self.coupling}")


class _ConstantFn:
    """Picklable constant callable (protocols must survive process pools)."""

    def __init__(self, value):
        self.value = value

    def __call__(self, t):
        return self.value + 0.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class FrequencyProtocol:
    """The control omega(t) and its derivative over one stroke.

    Holds either closed-form callables or a dense grid with cubic
    interpolation.  Instances are immutable; callables must be pure.
    """

    duration: float
    kind: str  # "closed-form" or "grid"
    meta: Mapping = field(default_factory=dict, compare=False)
    _omega_fn: Callable = field(default=None, repr=False, compare=False)
    _omega_dot_fn: Callable = field(default=None, repr=False, compare=False)
    grid_times: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    grid_omega: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    grid_omega_dot: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_callables(cls, duration, omega_fn, omega_dot_fn, meta=None, kind="closed-form"):
        if duration < 0:
            raise DomainError("protocol duration must be non-negative")
        return cls(duration=float(duration), kind=kind, meta=dict(meta or {}),
                   _omega_fn=omega_fn, _omega_dot_fn=omega_dot_fn)

    @classmethod
    def from_grid(cls, times, omega, omega_dot, meta=None):
        times = np.asarray(times, dtype=float)
        omega = np.asarray(omega, dtype=float)
        omega_dot = np.asarray(omega_dot, dtype=float)
        if times.ndim != 1 or len(times) < 4:
            raise DomainError("grid protocol needs at least 4 samples")
        if np.any(np.diff(times) <= 0):
            raise DomainError("grid times must be strictly increasing")
        if np.any(omega <= 0):
            raise DomainError("omega must stay positive along the protocol")
        w_spl = CubicSpline(times, omega)
        wd_spl = CubicSpline(times, omega_dot)
        return cls(duration=float(times[-1] - times[0]), kind="grid",
                   meta=dict(meta or {}), _omega_fn=w_spl, _omega_dot_fn=wd_spl,
                   grid_times=times, grid_omega=omega, grid_omega_dot=omega_dot)

    @classmethod
    def constant(cls, omega, duration, meta=None):
        return cls.from_callables(duration, _ConstantFn(omega), _ConstantFn(0.0),
                                  meta={"family": "constant", **(meta or {})})

    def _clamp(self, t):
        return np.clip(np.asarray(t, dtype=float), 0.0, self.duration)

    def omega(self, t):
        return self._omega_fn(self._clamp(t))

    def omega_dot(self, t):
        return self._omega_dot_fn(self._clamp(t))

    def mu(self, t):
        """Adiabatic parameter omega_dot / omega^2."""
        w = self.omega(t)
        return self.omega_dot(t) / w**2

    def sample(self, n: int = 2001):
        t = np.linspace(0.0, self.duration, n)
        w = np.atleast_1d(self.omega(t))
        wd = np.atleast_1d(self.omega_dot(t))
        return t, w, wd, wd / w**2

    def check_consistency(self, rtol: float = 1e-6, n: int = 8001) -> float:
        """Verify central differences of omega match omega_dot.

        Returns the worst mismatch relative to the derivative scale; raises
        InvalidProtocol beyond ``rtol``.  Grid protocols are checked on their
        native grid, closed forms on ``n`` uniform samples.
        """
        from .errors import InvalidProtocol

        if self.duration == 0.0:
            return 0.0
        if self.grid_times is not None:
            t, w, wd = self.grid_times, self.grid_omega, self.grid_omega_dot
        else:
            t, w, wd, _ = self.sample(n)
        if np.any(w <= 0):
            raise InvalidProtocol("omega must stay positive along the protocol")
        cd = (w[2:] - w[:-2]) / (t[2:] - t[:-2])
        scale = max(np.max(np.abs(wd)), 1e-12 * np.max(w) / max(self.duration, 1e-300))
        err = float(np.max(np.abs(cd - wd[1:-1])) / scale)
        # central differences are themselves O(dt^2) approximations
        dt = np.max(np.diff(t))
        wscale = np.max(np.abs(w))
        fd_floor = (dt**2 / 6.0) * wscale * (2.0 / max(self.duration, dt)) ** 3
        if err > rtol and err * scale > 100.0 * fd_floor:
            raise InvalidProtocol(f"omega_dot inconsistent with omega: rel error {err:.3e}")
        return err


@dataclass(frozen=True)
class GeneralizedGibbsState:
    """Exponential (generalized Gibbs) state exp(beta * b^dag b) in the
    dressed-mode basis labelled by the adiabatic parameter mu."""

    beta: float
    mu: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if self.beta >= 0:
            raise DomainError("beta must be negative for a bounded state")
        if abs(self.mu) >= 2.0:
            raise DomainError("|mu| must be below 2")
        if self.omega <= 0:
            raise DomainError("omega must be positive")

    @property
    def occupation(self) -> float:
        return 1.0 / math.expm1(-self.beta)

    def to_observable_vector(self) -> ObservableVector:
        kappa = math.sqrt(4.0 - self.mu**2)
        amp = HBAR * self.omega * (2.0 * self.occupation + 1.0) / kappa
        return ObservableVector(h=amp, l=0.0, c=-0.5 * self.mu * amp)

    @classmethod
    def from_observable_vector(cls, v: ObservableVector, omega: float,
                               atol: float = 1e-9) -> "GeneralizedGibbsState":
        if abs(v.l) > atol * max(abs(v.h), 1.0):
            raise DomainError("state is not diagonal in the dressed basis (l != 0)")
        mu = -2.0 * v.c / v.h
        kappa = math.sqrt(4.0 - mu**2)
        n = 0.5 * (kappa * v.h / (HBAR * omega) - 1.0)
        if n <= 0:
            raise DomainError("state is at or below the ground state; beta undefined")
        beta = -math.log1p(1.0 / n)
        return cls(beta=beta, mu=mu, omega=omega)


class CycleKind(str, Enum):
    CARNOT_SHORTCUT = "carnot-shortcut"
    ENDO_SHORTCUT = "endo-shortcut"
    ENDO_GLOBAL = "endo-global"


@dataclass(frozen=True)
class CycleSpec:
    """Corner frequencies, bath temperatures, and timing: one engine.

    Shortcut kinds carry ``open_stroke_duration`` and ``adiabat_duration``;
    the global kind carries ``mu_magnitude`` instead.  The endo-shortcut kind
    additionally carries the internal corner temperatures.
    """

    kind: CycleKind
    omega1: float
    omega2: float
    omega3: float
    omega4: float
    t_hot_bath: float
    t_cold_bath: float
    coupling: float = 0.05
    open_stroke_duration: Optional[float] = None
    adiabat_duration: Optional[float] = None
    mu_magnitude: Optional[float] = None
    t_hot_internal: Optional[float] = None
    t_cold_internal: Optional[float] = None
    gamma_dephasing: float = 0.0
    name: str = ""

    def __post_init__(self):
        for label, w in (("omega1", self.omega1), ("omega2", self.omega2),
                         ("omega3", self.omega3), ("omega4", self.omega4)):
            if w <= 0:
                raise ConfigError(f"{label} must be positive, got {w}")
        if not (self.omega1 > self.omega2 > self.omega3):
            raise ConfigError("need omega1 > omega2 > omega3 (expansion ordering)")
        if not (self.omega1 > self.omega4 > self.omega3):
            raise ConfigError("need omega1 > omega4 > omega3 (compression ordering)")
        if self.t_hot_bath <= 0 or self.t_cold_bath <= 0:
            raise ConfigError("bath temperatures must be positive")
        if self.t_hot_bath <= self.t_cold_bath:
            raise ConfigError("hot bath must be hotter than cold bath")
        if self.coupling <= 0:
            raise ConfigError("coupling must be positive")
        if self.gamma_dephasing < 0:
            raise ConfigError("dephasing strength must be non-negative")
        if self.kind is CycleKind.ENDO_GLOBAL:
            if self.mu_magnitude is None or self.mu_magnitude <= 0:
                raise ConfigError("endo-global cycles need mu_magnitude > 0")
            if self.mu_magnitude >= 2:
                raise ConfigError("|mu| must be below 2")
        else:
            if self.open_stroke_duration is None or self.open_stroke_duration <= 0:
                raise ConfigError(f"{self.kind.value} cycles need open_stroke_duration > 0")
            if self.adiabat_duration is None or self.adiabat_duration <= 0:
                raise ConfigError(f"{self.kind.value} cycles need adiabat_duration > 0")
        if self.kind is CycleKind.ENDO_SHORTCUT:
            if self.t_hot_internal is None or self.t_cold_internal is None:
                raise ConfigError("endo-shortcut cycles need internal temperatures")
            if self.t_hot_internal <= 0 or self.t_cold_internal <= 0:
                raise ConfigError("internal temperatures must be positive")

    # -- timing ------------------------------------------------------------

    @property
    def inv_frequency_span(self) -> float:
        """Sum of |1/w_i - 1/w_f| over the four strokes; fixes the
        mu <-> cycle-time map for the global kind."""
        ws = [self.omega1, self.omega2, self.omega3, self.omega4, self.omega1]
        return float(sum(abs(1.0 / a - 1.0 / b) for a, b in zip(ws[:-1], ws[1:])))

    @property
    def cycle_time_atomic(self) -> float:
        if self.kind is CycleKind.ENDO_GLOBAL:
            return self.inv_frequency_span / self.mu_magnitude
        return 2.0 * self.open_stroke_duration + 2.0 * self.adiabat_duration

    @property
    def cycle_time_units(self) -> float:
        return cycle_time_from_atomic(self.cycle_time_atomic)

    def with_cycle_time(self, tau_units: float) -> "CycleSpec":
        """Return a copy retimed to the given total cycle time (2*pi/w_min units)."""
        tau = cycle_time_to_atomic(tau_units)
        if self.kind is CycleKind.ENDO_GLOBAL:
            if tau <= 0:
                raise ConfigError("cycle time must be positive")
            return replace(self, mu_magnitude=self.inv_frequency_span / tau)
        open_dur = 0.5 * (tau - 2.0 * self.adiabat_duration)
        if open_dur <= 0:
            raise ConfigError(
                f"cycle time {tau_units} (= {tau:.4g} atomic) does not exceed the "
                f"fixed adiabat budget {2 * self.adiabat_duration:.4g}"
            )
        return replace(self, open_stroke_duration=open_dur)

    # -- geometry ----------------------------------------------------------

    def geometry_warnings(self, tol: float = 1e-12) -> list[str]:
        """Consistency report for the corner construction (used by `validate`)."""
        out = []
        tc, th = self.t_cold_bath, self.t_hot_bath
        if self.kind is CycleKind.ENDO_SHORTCUT:
            tc, th = self.t_cold_internal, self.t_hot_internal
        r = tc / th
        if abs(self.omega3 / self.omega2 - r) > tol * max(1.0, r):
            out.append(
                f"omega3/omega2 = {self.omega3 / self.omega2:.6g} differs from "
                f"T_cold/T_hot = {r:.6g}: adiabats will not match populations"
            )
        if abs(self.omega4 / self.omega1 - r) > tol * max(1.0, r):
            out.append(
                f"omega4/omega1 = {self.omega4 / self.omega1:.6g} differs from "
                f"T_cold/T_hot = {r:.6g}: adiabats will not match populations"
            )
        if self.omega1 / self.omega3 <= th / tc:
            out.append(
                f"compression ratio {self.omega1 / self.omega3:.6g} does not exceed "
                f"T_hot/T_cold = {th / tc:.6g}: zero-work geometry"
            )
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "omega1": self.omega1, "omega2": self.omega2,
             "omega3": self.omega3, "omega4": self.omega4,
             "t_hot_bath": self.t_hot_bath, "t_cold_bath": self.t_cold_bath,
             "coupling": self.coupling, "gamma_dephasing": self.gamma_dephasing,
             "name": self.name}
        for k in ("open_stroke_duration", "adiabat_duration", "mu_magnitude",
                  "t_hot_internal", "t_cold_internal"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        return d

    def config_hash(self) -> str:
        import hashlib

        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
