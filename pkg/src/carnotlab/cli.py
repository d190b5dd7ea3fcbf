"""Batch command-line front end.

Five subcommands: ``protocol`` (synthesize one stroke), ``cycle`` (one limit
cycle to a result directory), ``sweep`` (one ledger per axis value),
``compare`` (joined sweep across presets), ``validate`` (geometry checks).
All outputs are deterministic CSV/JSON; there is no plotting dependency.

Exit codes: 0 success, 1 compute error (builder/convergence/numerics),
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .config import RunConfig, load_config
from .core import BathSpec
from .cycle_engine import export_cycle_result, run_to_limit_cycle
from .errors import CarnotLabError, ConfigError
from .presets import PRESET_NAMES, get_preset
from .protocols import (build_constant_mu_protocol, build_sta_protocol,
                        build_ste_nonthermal_protocol, build_ste_protocol,
                        save_protocol)
from .thermo import analyze_cycle, export_sweep, sweep

OUTPUT_ROOT_ENV = "CARNOTLAB_OUT"


def _default_out(sub: str) -> str:
    root = os.environ.get(OUTPUT_ROOT_ENV, ".")
    return os.path.join(root, f"carnotlab-{sub}")


def _write_manifest(outdir: str, payload: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    payload = {"code_version": __version__, **payload}
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_from_args(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    if getattr(args, "preset", None):
        cfg.preset = args.preset
    if getattr(args, "cycle_time", None) is not None:
        cfg.cycle_time = args.cycle_time
    if getattr(args, "axis", None):
        cfg.axis = args.axis
    if getattr(args, "values", None):
        cfg.values = [float(v) for v in args.values.split(",") if v.strip()]
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "jobs", None):
        cfg.jobs = args.jobs
    if getattr(args, "tol", None):
        cfg.tol = args.tol
    return cfg


def _cmd_protocol(args) -> int:
    kind = args.kind
    if kind == "sta":
        if args.t_f is None:
            raise ConfigError("sta protocols need --t-f")
        protocol, _ = build_sta_protocol(args.omega_initial, args.omega_final,
                                         args.t_f)
    elif kind == "ste":
        if args.t_f is None:
            raise ConfigError("ste protocols need --t-f")
        bath = BathSpec(args.bath_temperature, args.coupling)
        if args.internal_temperature is not None:
            protocol, _ = build_ste_nonthermal_protocol(
                args.omega_initial, args.omega_final, args.t_f,
                args.internal_temperature, bath)
        else:
            protocol, _ = build_ste_protocol(args.omega_initial,
                                             args.omega_final, args.t_f, bath)
    elif kind == "constmu":
        if args.mu is None:
            raise ConfigError("constmu protocols need --mu")
        protocol = build_constant_mu_protocol(args.omega_initial,
                                              args.omega_final, args.mu)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown protocol kind {kind}")
    out = args.out or _default_out("protocol")
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, f"{kind}_protocol.csv")
    save_protocol(protocol, csv_path, os.path.join(out, f"{kind}_protocol.json"))
    _write_manifest(out, {"command": "protocol", "kind": kind,
                          "arguments": {k: getattr(args, k) for k in
                                        ("omega_initial", "omega_final", "t_f",
                                         "mu", "bath_temperature", "coupling",
                                         "internal_temperature")}})
    print(csv_path)
    return 0


def _cmd_cycle(args) -> int:
    cfg = _config_from_args(args)
    spec = cfg.build_spec()
    result = run_to_limit_cycle(spec, tol=cfg.tol, max_cycles=cfg.max_cycles)
    ledger = analyze_cycle(result, spec)
    out = cfg.out or _default_out("cycle")
    export_cycle_result(result, out, manifest_extra={"ledger": ledger.as_dict()})
    _write_manifest(out, {"command": "cycle", "config": cfg.to_dict(),
                          "spec": spec.to_dict(), "tolerances": {"tol": cfg.tol}})
    print(json.dumps(ledger.as_dict(), indent=2, sort_keys=True))
    print(out)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.axis or not cfg.values:
        raise ConfigError("sweep needs --axis and --values")
    spec = cfg.build_spec()
    table = sweep(spec, cfg.axis, cfg.values, tol=cfg.tol,
                  max_cycles=cfg.max_cycles, jobs=cfg.jobs)
    out = cfg.out or _default_out("sweep")
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "sweep.csv")
    export_sweep(table, csv_path, os.path.join(out, "sweep.meta.json"))
    _write_manifest(out, {"command": "sweep", "config": cfg.to_dict(),
                          "spec": spec.to_dict(), "tolerances": {"tol": cfg.tol}})
    n_bad = sum(1 for r in table.rows if not r.ok)
    print(csv_path)
    if n_bad:
        print(f"{n_bad} point(s) failed; see the status column", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    if not presets:
        raise ConfigError("compare needs --presets")
    axis = cfg.axis or "cycle_time"
    values = cfg.values or [cfg.cycle_time if cfg.cycle_time else 250.0]
    out = cfg.out or _default_out("compare")
    os.makedirs(out, exist_ok=True)
    lines = ["preset,value,status,total_work,power,efficiency,operational_mode,error"]
    for name in presets:
        spec = get_preset(name, cycle_time=cfg.cycle_time or 250.0)
        table = sweep(spec, axis, values, tol=cfg.tol,
                      max_cycles=cfg.max_cycles, jobs=cfg.jobs)
        for r in table.rows:
            if r.ok:
                lines.append(
                    f"{name},{r.value:.17g},ok,{r.ledger.total_work:.17g},"
                    f"{r.ledger.power:.17g},{r.ledger.efficiency:.17g},"
                    f"{r.ledger.operational_mode},")
            else:
                err = r.error.replace(",", ";")
                lines.append(f"{name},{r.value:.17g},error,,,,,{err}")
    csv_path = os.path.join(out, "compare.csv")
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(out, {"command": "compare", "presets": presets,
                          "axis": axis, "values": values,
                          "tolerances": {"tol": cfg.tol}})
    print(csv_path)
    return 0


def _cmd_validate(args) -> int:
    cfg = _config_from_args(args)
    spec = cfg.build_spec()
    warnings = spec.geometry_warnings()
    report = {"spec": spec.to_dict(), "warnings": warnings,
              "cycle_time_units": spec.cycle_time_units,
              "config_hash": spec.config_hash()}
    print(json.dumps(report, indent=2, sort_keys=True))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carnotlab",
        description="Finite-time oscillator heat-engine cycles: protocols, "
                    "limit cycles, and thermodynamic sweeps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protocol", help="synthesize one stroke protocol")
    p.add_argument("kind", choices=["sta", "ste", "constmu"])
    p.add_argument("omega_initial", type=float)
    p.add_argument("omega_final", type=float)
    p.add_argument("t_f", type=float, nargs="?", default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--bath-temperature", type=float, default=8.0)
    p.add_argument("--coupling", type=float, default=0.05)
    p.add_argument("--internal-temperature", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_protocol)

    common = dict(preset=(["--preset"], {"choices": list(PRESET_NAMES)}),
                  config=(["--config"], {}),
                  cycle_time=(["--cycle-time"], {"type": float}),
                  out=(["--out"], {}),
                  tol=(["--tol"], {"type": float}),
                  jobs=(["--jobs"], {"type": int}))

    def add_common(sp, keys):
        for k in keys:
            flags, kw = common[k]
            sp.add_argument(*flags, default=None, **kw)

    p = sub.add_parser("cycle", help="run one cycle to its limit cycle")
    add_common(p, ("preset", "config", "cycle_time", "out", "tol"))
    p.set_defaults(func=_cmd_cycle)

    p = sub.add_parser("sweep", help="one converged ledger per axis value")
    add_common(p, ("preset", "config", "cycle_time", "out", "tol", "jobs"))
    p.add_argument("--axis", choices=["cycle_time", "dephasing",
                                      "compression_ratio"], default=None)
    p.add_argument("--values", default=None,
                   help="comma-separated axis values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="joined table across presets")
    p.add_argument("--presets", required=True,
                   help=f"comma-separated names from: {', '.join(PRESET_NAMES)}")
    add_common(p, ("config", "cycle_time", "out", "tol", "jobs"))
    p.add_argument("--axis", choices=["cycle_time", "dephasing",
                                      "compression_ratio"], default=None)
    p.add_argument("--values", default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("validate", help="check a configuration's geometry")
    add_common(p, ("preset", "config", "cycle_time", "tol"))
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"ConfigError: {err}", file=sys.stderr)
        return 2
    except CarnotLabError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
