"""Work, heat, power, efficiency, coherence, entropy, and sweep analyses.

Sign convention: work and heat are positive when they flow *into* the
working medium, so an engine has total_work < 0 and q_hot > 0, the power
-W/tau is then positive, and the efficiency is -W/q_hot.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .core import (HBAR, KB, CycleKind, CycleSpec, ObservableVector,
                   cycle_time_from_atomic, thermal_population)
from .cycle_engine import (CornerGeometry, CycleResult, carnot_corner_frequencies,
                           run_to_limit_cycle)
from .dynamics import Trajectory
from .errors import CarnotLabError, ConfigError, DomainError, UnphysicalState


def carnot_efficiency(t_cold: float, t_hot: float) -> float:
    return 1.0 - t_cold / t_hot


def curzon_ahlborn_efficiency(t_cold: float, t_hot: float) -> float:
    return 1.0 - math.sqrt(t_cold / t_hot)


def stroke_work(traj: Trajectory) -> float:
    """Work performed on the medium over one stroke.

    The propagators accumulate integral (w_dot/w)(h - l) dt as an auxiliary
    ODE component, so this is already at integrator accuracy; a Simpson
    evaluation over the stored grid is used as a consistency guard.
    """
    if traj.work_trace is None:
        if len(traj.times) < 3:
            return 0.0
        integrand = (traj.omega_dots / traj.omegas) * \
            (traj.vectors[:, 0] - traj.vectors[:, 1])
        return float(simpson(integrand, x=traj.times))
    return traj.work


def stroke_work_quadrature(traj: Trajectory) -> float:
    """Simpson quadrature of the work integrand over the stored grid."""
    if len(traj.times) < 3:
        return 0.0
    integrand = (traj.omega_dots / traj.omegas) * \
        (traj.vectors[:, 0] - traj.vectors[:, 1])
    return float(simpson(integrand, x=traj.times))


def stroke_heat(traj: Trajectory, work: Optional[float] = None) -> float:
    """First-law heat Q = dE - W for one stroke."""
    w = stroke_work(traj) if work is None else work
    return traj.energy_change - w


def coherence(v: ObservableVector, omega: float) -> float:
    """sqrt(l^2 + c^2) / (hbar w)."""
    if omega <= 0:
        raise DomainError("omega must be positive")
    return v.coherence(omega)


def von_neumann_entropy(v: ObservableVector, omega: float) -> float:
    """Entropy of the Gaussian state through its symplectic invariant.

    The effective excitation is x = sqrt(h^2 - l^2 - c^2)/(hbar w) = n + 1/2;
    S = (n+1) ln(n+1) - n ln n, zero for the ground state.
    """
    if omega <= 0:
        raise DomainError("omega must be positive")
    cas = v.casimir()
    x = math.sqrt(max(cas, 0.0)) / (HBAR * omega)
    if x < 0.5 - 1e-9:
        raise UnphysicalState(f"effective excitation {x} below the ground-state floor")
    n = max(x - 0.5, 0.0)
    if n <= 0.0:
        return 0.0
    return (n + 1.0) * math.log(n + 1.0) - n * math.log(n)


def ideal_carnot_work(geometry: CornerGeometry, t_cold: float, t_hot: float) -> float:
    """Reversible-limit work of the four-corner cycle (negative for an engine)."""
    if t_hot == t_cold:
        warnings.warn("degenerate geometry: equal bath temperatures give zero work")
    n1 = thermal_population(geometry.omega1, t_hot)
    n2 = thermal_population(geometry.omega2, t_hot)
    return (HBAR * (geometry.omega3 - geometry.omega2) * (n2 + 1.0)
            + HBAR * (geometry.omega1 - geometry.omega4) * (n1 + 1.0)
            + KB * (t_hot - t_cold) * math.log(n1 / n2))


def friction_action_fit(samples: Sequence[tuple]) -> tuple:
    """Least-squares fit of W(tau) = W_inf + F / tau.

    ``samples`` holds (cycle_time, total_work) pairs; at least three are
    required and they must span a factor of four in cycle time.  Returns
    (w_infinity, friction_action, rms_residual).
    """
    pts = [(float(t), float(w)) for t, w in samples]
    if len(pts) < 3:
        raise DomainError("need at least 3 samples")
    taus = np.array([p[0] for p in pts])
    works = np.array([p[1] for p in pts])
    if taus.min() <= 0:
        raise DomainError("cycle times must be positive")
    if taus.max() / taus.min() < 4.0:
        raise DomainError("samples must span at least a factor 4 in cycle time")
    a = np.column_stack([np.ones_like(taus), 1.0 / taus])
    coef, *_ = np.linalg.lstsq(a, works, rcond=None)
    if not np.all(np.isfinite(coef)):
        raise DomainError("rank-deficient sample set")
    resid = float(np.sqrt(np.mean((a @ coef - works) ** 2)))
    return float(coef[0]), float(coef[1]), resid


# ---------------------------------------------------------------------------
# cycle ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleLedger:
    """Per-stroke and whole-cycle energy bookkeeping at the limit cycle."""

    work_per_stroke: tuple
    heat_per_stroke: tuple
    total_work: float
    q_hot: float
    q_cold: float
    power: float
    efficiency: float
    cycle_time: float          # atomic units
    cycle_time_units: float    # units of 2*pi/omega_min
    operational_mode: str      # "Engine" | "Dissipator" | "Other"
    eta_carnot: float
    bath_entropy_production: float
    energy_closure: float      # |sum of stroke energy changes| over the cycle
    unitary_heat_residual: float
    corner_coherences: tuple

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "total_work", "q_hot", "q_cold", "power", "efficiency",
            "cycle_time", "cycle_time_units", "operational_mode", "eta_carnot",
            "bath_entropy_production", "energy_closure", "unitary_heat_residual")}
        d["work_per_stroke"] = list(self.work_per_stroke)
        d["heat_per_stroke"] = list(self.heat_per_stroke)
        d["corner_coherences"] = list(self.corner_coherences)
        return d


def analyze_cycle(result: CycleResult, spec: Optional[CycleSpec] = None) -> CycleLedger:
    """Fill the thermodynamic ledger for a converged limit cycle."""
    if not result.converged:
        raise DomainError("cannot analyze a non-converged cycle")
    spec = spec or result.spec
    works = tuple(t.work for t in result.trajectories)
    heats = tuple(t.heat for t in result.trajectories)
    total_work = float(sum(works))

    q_hot = q_cold = 0.0
    unitary_heat = 0.0
    for stroke, traj in zip(result.strokes, result.trajectories):
        if stroke.kind == "open" and stroke.bath is not None:
            if stroke.bath.temperature == spec.t_hot_bath:
                q_hot += traj.heat
            else:
                q_cold += traj.heat
        elif stroke.kind == "unitary":
            unitary_heat = max(unitary_heat, abs(traj.heat))

    tau = result.cycle_time_atomic
    power = -total_work / tau
    efficiency = float("nan") if q_hot == 0.0 else -total_work / q_hot
    if total_work < 0 and q_hot > 0:
        mode = "Engine"
    elif total_work > 0 and q_cold < 0:
        mode = "Dissipator"
    else:
        mode = "Other"
    sigma = -(q_hot / spec.t_hot_bath + q_cold / spec.t_cold_bath)
    closure = abs(sum(t.energy_change for t in result.trajectories))
    return CycleLedger(
        work_per_stroke=works, heat_per_stroke=heats, total_work=total_work,
        q_hot=q_hot, q_cold=q_cold, power=power, efficiency=efficiency,
        cycle_time=tau, cycle_time_units=cycle_time_from_atomic(tau),
        operational_mode=mode,
        eta_carnot=carnot_efficiency(spec.t_cold_bath, spec.t_hot_bath),
        bath_entropy_production=sigma, energy_closure=closure,
        unitary_heat_residual=unitary_heat,
        corner_coherences=tuple(result.corner_coherences()))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("cycle_time", "dephasing", "compression_ratio")


def spec_for_sweep_value(template: CycleSpec, axis: str, value: float) -> CycleSpec:
    """Instantiate the template at one sweep-axis value."""
    if axis == "cycle_time":
        return template.with_cycle_time(value)
    if axis == "dephasing":
        if value < 0:
            raise ConfigError("dephasing strength must be non-negative")
        from dataclasses import replace

        return replace(template, gamma_dephasing=value)
    if axis == "compression_ratio":
        if template.kind is not CycleKind.CARNOT_SHORTCUT:
            raise ConfigError("compression-ratio sweeps apply to the carnot-shortcut kind")
        geom = carnot_corner_frequencies(template.omega3, value,
                                         template.t_cold_bath, template.t_hot_bath)
        from dataclasses import replace

        return replace(template, omega1=geom.omega1, omega2=geom.omega2,
                       omega4=geom.omega4)
    raise ConfigError(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")


@dataclass
class SweepRow:
    value: float
    ledger: Optional[CycleLedger] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.ledger is not None


@dataclass
class SweepTable:
    axis: str
    rows: List[SweepRow]
    template: CycleSpec

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r.ledger, name) if r.ok else np.nan
                         for r in self.rows])

    def ok_rows(self) -> List[SweepRow]:
        return [r for r in self.rows if r.ok]

    def to_csv(self, path) -> None:
        cols = ["value", "status", "cycle_time", "cycle_time_units", "total_work",
                "q_hot", "q_cold", "power", "efficiency", "operational_mode",
                "bath_entropy_production", "max_corner_coherence", "error"]
        lines = [",".join(cols)]
        for r in self.rows:
            if r.ok:
                led = r.ledger
                vals = [f"{r.value:.17g}", "ok", f"{led.cycle_time:.17g}",
                        f"{led.cycle_time_units:.17g}", f"{led.total_work:.17g}",
                        f"{led.q_hot:.17g}", f"{led.q_cold:.17g}",
                        f"{led.power:.17g}", f"{led.efficiency:.17g}",
                        led.operational_mode,
                        f"{led.bath_entropy_production:.17g}",
                        f"{max(led.corner_coherences):.17g}", ""]
            else:
                vals = [f"{r.value:.17g}", "error"] + [""] * 10 + \
                    [r.error.replace(",", ";").replace("\n", " ")]
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def metadata(self) -> dict:
        return {"axis": self.axis,
                "values": [r.value for r in self.rows],
                "template": self.template.to_dict(),
                "config_hash": _dict_hash({"axis": self.axis,
                                           "values": [r.value for r in self.rows],
                                           "template": self.template.to_dict()})}


def _dict_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _sweep_point(args):
    template, axis, value, tol, max_cycles = args
    try:
        spec = spec_for_sweep_value(template, axis, value)
        result = run_to_limit_cycle(spec, tol=tol, max_cycles=max_cycles)
        return SweepRow(value=value, ledger=analyze_cycle(result, spec))
    except CarnotLabError as err:
        return SweepRow(value=value, error=f"{type(err).__name__}: {err}")


def sweep(spec_template: CycleSpec, axis: str, values: Iterable[float],
          tol: float = 1e-9, max_cycles: int = 500, jobs: int = 1) -> SweepTable:
    """Run one converged limit cycle per axis value.

    Failures are recorded per point without aborting the sweep; rows come
    back in input order regardless of execution order.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    args = [(spec_template, axis, v, tol, max_cycles) for v in values]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, args))
    else:
        rows = [_sweep_point(a) for a in args]
    return SweepTable(axis=axis, rows=rows, template=spec_template)


def export_sweep(table: SweepTable, csv_path, meta_path=None) -> None:
    table.to_csv(csv_path)
    if meta_path is None:
        meta_path = os.path.splitext(csv_path)[0] + ".meta.json"
    with open(meta_path, "w") as fh:
        json.dump(table.metadata(), fh, indent=2, sort_keys=True)
        fh.write("\n")
