"""Frequency-protocol synthesis for all stroke types.

Four families are built here:

* transitionless unitary ramps from the oscillator scaling-function equation
  (``build_sta_protocol``),
* open-stroke ramps that steer the exponential-state parameter between two
  Gibbs states by inverting the rate equation for the drive frequency
  (``build_ste_protocol`` and its non-stationary-endpoint variant),
* constant adiabatic-speed drives with the closed form
  w(t) = w_i / (1 - mu w_i t) (``build_constant_mu_protocol``).

The open-stroke inversion works on a dense uniform grid: at each instant the
target (beta, beta_dot) pair fixes the required dressed-mode occupation,
hence the modified frequency alpha; the relation alpha = w*sqrt(1 - mu^2/4)
then pins |w_dot|.  We solve the resulting implicit system by fixed-point
iteration on the mu profile with a vectorized Newton root-find per grid
point, which lands the endpoint frequency to machine precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core import HBAR, KB, BathSpec, FrequencyProtocol, thermal_population
from .errors import (DomainError, InfeasibleStroke, InvalidProtocol,
                     ProtocolInversionFailure)

DEFAULT_GRID_POINTS = 4001


# ---------------------------------------------------------------------------
# polynomial boundary-value helpers (in scaled time s = t / t_f)
# ---------------------------------------------------------------------------

def _quintic(y0, y1, dy0, dy1, d2y0, d2y1):
    """Fifth-degree polynomial in s from values/derivatives at s = 0, 1."""
    a = np.zeros(6)
    a[0], a[1], a[2] = y0, dy0, 0.5 * d2y0
    rhs = np.array([
        y1 - (a[0] + a[1] + a[2]),
        dy1 - (a[1] + 2 * a[2]),
        d2y1 - 2 * a[2],
    ])
    m = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
    a[3:] = np.linalg.solve(m, rhs)
    return Polynomial(a)


def _smoothstep(y0, y1):
    """Quintic with vanishing first and second derivatives at both ends."""
    return _quintic(y0, y1, 0.0, 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# shortcut-to-adiabaticity (unitary) strokes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErmakovSolution:
    """Scaling function rho(t) and derivatives for a transitionless ramp."""

    rho: Callable
    rho_dot: Callable
    rho_ddot: Callable
    t_f: float
    omega_initial: float
    omega_final: float
    mass: float = 1.0
    omega: Callable = field(default=None, repr=False)


class _PolyRho:
    """rho(t) backed by a quintic in s = t/t_f (picklable)."""

    def __init__(self, poly, t_f, order):
        self.poly = poly.deriv(order) if order else poly
        self.t_f = t_f
        self.scale = t_f ** (-order) if order else 1.0

    def __call__(self, t):
        s = np.asarray(t, dtype=float) / self.t_f
        return self.poly(s) * self.scale


class _StaOmega:
    def __init__(self, poly, t_f, mass, order=0):
        self.r = _PolyRho(poly, t_f, 0)
        self.r1 = _PolyRho(poly, t_f, 1)
        self.r2 = _PolyRho(poly, t_f, 2)
        self.r3 = _PolyRho(poly, t_f, 3)
        self.mass = mass
        self.order = order

    def omega_sq(self, t):
        r, r2 = self.r(t), self.r2(t)
        return 1.0 / (self.mass**2 * r**4) - r2 / r

    def __call__(self, t):
        w2 = self.omega_sq(t)
        if self.order == 0:
            return np.sqrt(w2)
        r, r1, r2, r3 = self.r(t), self.r1(t), self.r2(t), self.r3(t)
        dw2 = -4.0 * r1 / (self.mass**2 * r**5) - (r3 * r - r2 * r1) / r**2
        return dw2 / (2.0 * np.sqrt(w2))


def build_sta_protocol(omega_initial: float, omega_final: float, t_f: float,
                       mass: float = 1.0, grid_points: int = DEFAULT_GRID_POINTS):
    """Transitionless ramp between two trap frequencies.

    Returns ``(FrequencyProtocol, ErmakovSolution)``.  The scaling function is
    the unique quintic satisfying the six stationarity conditions at the
    endpoints; the control frequency follows from
    w^2 = 1/(m^2 rho^4) - rho_ddot/rho.  If the required w^2 turns negative
    anywhere (the trap would have to become repulsive) the ramp is refused
    with ``InvalidProtocol`` carrying the first violating time.
    """
    if omega_initial <= 0 or omega_final <= 0:
        raise DomainError("frequencies must be positive")
    if t_f <= 0:
        raise DomainError("stroke duration must be positive")

    rho0 = 1.0 / math.sqrt(mass * omega_initial)
    rho1 = rho0 * math.sqrt(omega_initial / omega_final)
    poly = _smoothstep(rho0, rho1)

    omega_fn = _StaOmega(poly, t_f, mass, order=0)
    omega_dot_fn = _StaOmega(poly, t_f, mass, order=1)

    t_dense = np.linspace(0.0, t_f, grid_points)
    w2 = omega_fn.omega_sq(t_dense)
    if np.any(w2 <= 0):
        t_bad = float(t_dense[np.argmax(w2 <= 0)])
        raise InvalidProtocol(
            f"trap frequency squared turns negative at t={t_bad:.6g}; "
            "retry with a longer stroke", time=t_bad)

    protocol = FrequencyProtocol.from_callables(
        t_f, omega_fn, omega_dot_fn,
        meta={"family": "sta", "omega_initial": omega_initial,
              "omega_final": omega_final, "t_f": t_f, "mass": mass})
    ermakov = ErmakovSolution(
        rho=_PolyRho(poly, t_f, 0), rho_dot=_PolyRho(poly, t_f, 1),
        rho_ddot=_PolyRho(poly, t_f, 2), t_f=t_f,
        omega_initial=omega_initial, omega_final=omega_final, mass=mass,
        omega=omega_fn)
    return protocol, ermakov


def sta_expectation_values(ermakov: ErmakovSolution, omega_start: float,
                           temperature: float, t):
    """Closed-form moment vector along a transitionless ramp started thermal.

    Valid for 0 <= t <= t_f; returns an ObservableVector (scalar t) or the
    stacked (n, 4) array for array input.
    """
    from .core import ObservableVector

    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > ermakov.t_f * (1 + 1e-12)):
        raise DomainError("t outside the stroke")
    m = ermakov.mass
    r = ermakov.rho(t_arr)
    rd = ermakov.rho_dot(t_arr)
    w = ermakov.omega(t_arr)
    cfac = 0.5 / math.tanh(HBAR * omega_start / (2.0 * KB * temperature))
    h = 0.5 * HBAR * (m * rd**2 + 1.0 / (m * r**2) + m * w**2 * r**2) * cfac
    l = 0.5 * HBAR * (m * rd**2 + 1.0 / (m * r**2) - m * w**2 * r**2) * cfac
    c = HBAR * w * m * rd * r * cfac
    if t_arr.ndim == 0:
        return ObservableVector(h=float(h), l=float(l), c=float(c))
    return np.stack([h, l, c, np.ones_like(h)], axis=1)


# ---------------------------------------------------------------------------
# constant adiabatic-speed strokes
# ---------------------------------------------------------------------------

class _ConstMuOmega:
    def __init__(self, omega_i, mu, order=0):
        self.omega_i = omega_i
        self.mu = mu
        self.order = order

    def __call__(self, t):
        w = self.omega_i / (1.0 - self.mu * self.omega_i * np.asarray(t, dtype=float))
        return w if self.order == 0 else self.mu * w**2


def constant_mu_duration(omega_initial: float, omega_final: float, mu: float) -> float:
    """Stroke duration (w_f - w_i) / (mu w_f w_i) of a constant-mu drive."""
    return (omega_final - omega_initial) / (mu * omega_final * omega_initial)


def build_constant_mu_protocol(omega_initial: float, omega_final: float,
                               mu: float) -> FrequencyProtocol:
    """Closed-form drive w(t) = w_i/(1 - mu w_i t) ending exactly at w_f."""
    if omega_initial <= 0 or omega_final <= 0:
        raise DomainError("frequencies must be positive")
    if omega_initial == omega_final:
        return FrequencyProtocol.constant(
            omega_initial, 0.0, meta={"family": "constant_mu", "mu": 0.0,
                                      "omega_initial": omega_initial,
                                      "omega_final": omega_final})
    if mu == 0:
        raise DomainError("mu must be nonzero for a frequency-changing stroke")
    if abs(mu) >= 2:
        raise DomainError("|mu| must be below 2")
    t_f = constant_mu_duration(omega_initial, omega_final, mu)
    if t_f <= 0:
        raise DomainError(
            f"mu={mu} has the wrong sign for {omega_initial} -> {omega_final}: "
            "the drive runs into its pole")
    return FrequencyProtocol.from_callables(
        t_f, _ConstMuOmega(omega_initial, mu, 0), _ConstMuOmega(omega_initial, mu, 1),
        meta={"family": "constant_mu", "mu": mu, "omega_initial": omega_initial,
              "omega_final": omega_final})


# ---------------------------------------------------------------------------
# shortcut-to-equilibration (open) strokes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteSolution:
    """Designed open-stroke solution: y = exp(beta) polynomial, the matching
    modified frequency, and the synthesized protocol."""

    y: Callable
    beta: Callable
    beta_dot: Callable
    alpha_grid: np.ndarray
    times: np.ndarray
    protocol: FrequencyProtocol
    coefficients: np.ndarray
    bath: BathSpec
    target_initial: float  # beta(0)
    target_final: float    # beta(t_f)


class _PolyEval:
    def __init__(self, poly, t_f, order=0, log=False):
        self.poly = poly.deriv(order) if order else poly
        self.t_f = t_f
        self.scale = t_f ** (-order) if order else 1.0
        self.log = log

    def __call__(self, t):
        v = self.poly(np.asarray(t, dtype=float) / self.t_f) * self.scale
        return np.log(v) if self.log else v


def _static_beta_dot(omega: float, beta: float, bath: BathSpec) -> float:
    """Rate-equation slope at a frozen drive (w_dot = 0, alpha = w)."""
    n = thermal_population(omega, bath.temperature)
    k_down = 0.5 * bath.coupling * omega * (1.0 + n)
    k_up = 0.5 * bath.coupling * omega * n
    return k_down * math.expm1(beta) + k_up * math.expm1(-beta)


def _invert_frequency(times, beta, beta_dot, bath, omega_initial, omega_final,
                      max_iter=80, tol=1e-12):
    """Solve for the drive w(t) whose rate equation reproduces (beta, beta_dot).

    Fixed-point iteration on the adiabatic-speed profile: given mu(t) from the
    previous iterate, each grid instant needs
        w * sqrt(1 - mu^2/4) = alpha*(w, t),
    where alpha* follows from the occupation the rate equation demands.  The
    per-point root is found with a vectorized, safeguarded Newton iteration.
    Returns (omega, omega_dot, alpha) grids.
    """
    temp = bath.temperature
    g = bath.coupling
    exp_b = np.exp(beta)
    phi = exp_b + np.exp(-beta) - 2.0
    n_eq = 1.0 / np.expm1(-beta)
    # occupation demanded at drive w:  N*(w) = n_eq + dcoef / w
    dcoef = 2.0 * beta_dot / (g * phi)

    def alpha_star(w):
        nstar = n_eq + dcoef / w
        with np.errstate(divide="ignore", invalid="ignore"):
            a = KB * temp / HBAR * np.log1p(1.0 / nstar)
        a[nstar <= 0] = np.nan
        return a, nstar

    def newton(ck, w):
        w = w.copy()
        for _ in range(60):
            a, nstar = alpha_star(w)
            bad = ~np.isfinite(a)
            if np.any(bad):
                # cooling instants require w above the zero-occupation point
                w_floor = -dcoef / np.maximum(n_eq, 1e-300)
                w[bad] = 1.5 * np.abs(w_floor[bad]) + 1e-9
                continue
            f = w * ck - a
            dalpha = (KB * temp / HBAR) * dcoef / (w**2 * nstar * (nstar + 1.0))
            fp = ck - dalpha
            step = f / np.where(np.abs(fp) > 1e-14, fp, 1e-14)
            step = np.clip(step, -0.5 * w, 0.5 * w)
            w_new = w - step
            if np.max(np.abs(w_new - w) / w) < 1e-14:
                return w_new
            w = w_new
        return w

    scale = max(omega_initial, omega_final)
    omega = -beta * KB * temp / HBAR  # quasi-static initial guess
    omega = np.clip(omega, 1e-3 * scale, 50.0 * scale)
    mu = np.zeros_like(omega)
    t_f = times[-1]

    for it in range(max_iter):
        ck = np.sqrt(np.maximum(1.0 - 0.25 * mu**2, 0.0))
        if np.any(ck == 0.0):
            t_bad = float(times[np.argmax(ck == 0.0)])
            raise InfeasibleStroke(
                f"|mu| reached 2 at t={t_bad:.6g}; stroke too fast", time=t_bad)
        omega_new = newton(ck, omega)
        a, nstar = alpha_star(omega_new)
        resid = np.abs(omega_new * ck - a)
        bad = ~np.isfinite(resid) | (resid > 1e-8 * scale)
        for i in np.flatnonzero(bad):
            omega_new[i] = _scalar_root(ck[i], n_eq[i], dcoef[i], temp, omega[i],
                                        scale, times[i])
        change = np.max(np.abs(omega_new - omega) / scale)
        omega = omega_new if it < 10 else 0.5 * (omega + omega_new)
        spline = CubicSpline(times, omega)
        mu = spline(times, 1) / omega**2
        # the construction imposes stationary drive endpoints
        mu[0] = 0.0
        mu[-1] = 0.0
        if change < tol:
            break
    else:
        raise ProtocolInversionFailure(
            f"frequency inversion did not converge (last change {change:.3e})")

    omega_dot = CubicSpline(times, omega)(times, 1)
    alpha, _ = alpha_star(omega)
    if not np.all(np.isfinite(alpha)):
        t_bad = float(times[np.argmax(~np.isfinite(alpha))])
        raise InfeasibleStroke(
            f"required emission rate is negative at t={t_bad:.6g}", time=t_bad)
    if abs(omega[-1] - omega_final) / omega_final > 1e-3:
        raise ProtocolInversionFailure(
            f"endpoint mismatch: w(t_f)={omega[-1]:.6g} vs target {omega_final:.6g}")
    return omega, omega_dot, alpha


def _scalar_root(ck, n_eq, dcoef, temp, w_prev, scale, t):
    """Bracketed fallback for grid points where Newton stalls."""

    def f(w):
        nstar = n_eq + dcoef / w
        if nstar <= 0:
            return np.inf
        return w * ck - KB * temp / HBAR * math.log1p(1.0 / nstar)

    lo_limit = -dcoef / n_eq if dcoef < 0 else 1e-6 * scale
    lo_limit = max(lo_limit * (1 + 1e-12), 1e-9)
    grid = np.geomspace(max(lo_limit, 1e-6 * scale), 50.0 * scale, 400)
    vals = np.array([f(w) for w in grid])
    finite = np.isfinite(vals)
    sign_change = np.flatnonzero(np.diff(np.sign(vals[finite])) != 0)
    if len(sign_change) == 0:
        raise InfeasibleStroke(
            f"no drive frequency satisfies the rate equation at t={t:.6g}", time=t)
    gf = grid[finite]
    # prefer the branch nearest the previous iterate (continuity)
    idx = sign_change[np.argmin(np.abs(gf[sign_change] - w_prev))]
    return brentq(f, gf[idx], gf[idx + 1], xtol=1e-14, rtol=1e-15)


def _build_ste(omega_initial, omega_final, t_f, bath, beta0, beta1, dy0, dy1,
               grid_points, family, extra_meta=None):
    if omega_initial <= 0 or omega_final <= 0:
        raise DomainError("frequencies must be positive")
    if t_f <= 0:
        raise DomainError("stroke duration must be positive")

    y0, y1 = math.exp(beta0), math.exp(beta1)
    poly = _quintic(y0, y1, dy0 * t_f, dy1 * t_f, 0.0, 0.0)

    times = np.linspace(0.0, t_f, grid_points)
    s = times / t_f
    y = poly(s)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        t_bad = float(times[np.argmax((y <= 0.0) | (y >= 1.0))])
        raise InfeasibleStroke(
            f"designed state parameter leaves (0, 1) at t={t_bad:.6g}; "
            "the endpoint disequilibrium cannot be held this long", time=t_bad)
    ydot = poly.deriv()(s) / t_f
    beta = np.log(y)
    beta_dot = ydot / y

    if omega_initial == omega_final and abs(beta0 - beta1) < 1e-15 \
            and dy0 == 0.0 and dy1 == 0.0:
        omega = np.full_like(times, float(omega_initial))
        omega_dot = np.zeros_like(times)
        alpha = omega.copy()
    else:
        omega, omega_dot, alpha = _invert_frequency(
            times, beta, beta_dot, bath, omega_initial, omega_final)

    protocol = FrequencyProtocol.from_grid(
        times, omega, omega_dot,
        meta={"family": family, "omega_initial": omega_initial,
              "omega_final": omega_final, "t_f": t_f,
              "bath_temperature": bath.temperature, "coupling": bath.coupling,
              **(extra_meta or {})})
    solution = SteSolution(
        y=_PolyEval(poly, t_f), beta=_PolyEval(poly, t_f, log=True),
        beta_dot=_BetaDot(poly, t_f), alpha_grid=alpha, times=times,
        protocol=protocol, coefficients=poly.coef.copy(), bath=bath,
        target_initial=beta0, target_final=beta1)
    return protocol, solution


class _BetaDot:
    def __init__(self, poly, t_f):
        self.y = _PolyEval(poly, t_f)
        self.yd = _PolyEval(poly, t_f, order=1)

    def __call__(self, t):
        return self.yd(t) / self.y(t)


def build_ste_protocol(omega_initial: float, omega_final: float, t_f: float,
                       bath: BathSpec, grid_points: int = DEFAULT_GRID_POINTS):
    """Open-stroke drive between Gibbs states at the bath temperature.

    The state parameter y = exp(beta) follows the quintic fixed by stationary
    endpoints; the drive frequency is recovered by inverting the rate
    equation.  Returns ``(FrequencyProtocol, SteSolution)``.
    """
    temp = bath.temperature
    beta0 = -HBAR * omega_initial / (KB * temp)
    beta1 = -HBAR * omega_final / (KB * temp)
    return _build_ste(omega_initial, omega_final, t_f, bath, beta0, beta1,
                      0.0, 0.0, grid_points, "ste")


def build_ste_nonthermal_protocol(omega_initial: float, omega_final: float,
                                  t_f: float, internal_temperature: float,
                                  bath: BathSpec,
                                  grid_points: int = DEFAULT_GRID_POINTS):
    """Open-stroke drive between Gibbs states at an internal temperature that
    may differ from the bath's.

    The endpoints are then non-stationary: the boundary slopes of
    y = exp(beta) are fixed by the static rate equation evaluated at the
    endpoint frequencies against the actual bath.
    """
    if internal_temperature <= 0:
        raise DomainError("internal temperature must be positive")
    beta0 = -HBAR * omega_initial / (KB * internal_temperature)
    beta1 = -HBAR * omega_final / (KB * internal_temperature)
    bd0 = _static_beta_dot(omega_initial, beta0, bath)
    bd1 = _static_beta_dot(omega_final, beta1, bath)
    dy0 = bd0 * math.exp(beta0)
    dy1 = bd1 * math.exp(beta1)
    return _build_ste(omega_initial, omega_final, t_f, bath, beta0, beta1,
                      dy0, dy1, grid_points, "ste-nonthermal",
                      extra_meta={"internal_temperature": internal_temperature})


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_protocol(protocol: FrequencyProtocol, csv_path, json_path=None,
                  n: int = DEFAULT_GRID_POINTS) -> None:
    """Write the protocol as a CSV table (t, omega, omega_dot, mu) plus a JSON
    header with the builder metadata.  Doubles round-trip bit-exactly."""
    if protocol.grid_times is not None:
        t, w, wd = protocol.grid_times, protocol.grid_omega, protocol.grid_omega_dot
    elif protocol.duration == 0.0:
        t = np.array([0.0])
        w = np.atleast_1d(protocol.omega(0.0))
        wd = np.atleast_1d(protocol.omega_dot(0.0))
    else:
        t, w, wd, _ = protocol.sample(n)
    mu = np.where(w > 0, wd / w**2, 0.0)
    lines = ["t,omega,omega_dot,mu"]
    for row in zip(t, w, wd, mu):
        lines.append(",".join(f"{x:.17g}" for x in row))
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    header = {"kind": protocol.kind, "duration": protocol.duration,
              "meta": dict(protocol.meta), "samples": int(len(t))}
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_protocol(csv_path, json_path=None) -> FrequencyProtocol:
    """Reload a serialized protocol as a grid protocol over the stored samples."""
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    meta = {}
    if json_path is not None:
        with open(json_path) as fh:
            meta = json.load(fh).get("meta", {})
    t = np.atleast_1d(data["t"])
    w = np.atleast_1d(data["omega"])
    wd = np.atleast_1d(data["omega_dot"])
    if len(t) == 1:
        return FrequencyProtocol.constant(float(w[0]), 0.0, meta=meta)
    return FrequencyProtocol.from_grid(t, w, wd, meta=meta)
