"""Command-line front end: analysis tables, simulations, scans, sweeps.

Configuration files are flat INI text (``[section]`` headers, ``key=value``
lines, no interpolation).  Unknown sections or keys are rejected.  Every
key has a default except the system kind and the fluid parameters.  All
emitted numbers use ``%.17g`` so the CSV output round-trips exactly and
identical configurations produce byte-identical files.

Exit codes: 0 success, 1 domain or configuration error, 2 oracle
disagreement, 64 usage.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import modes, sim1d
from .errors import (
    ConfigError,
    DomainError,
    HyperbolicityError,
    InternalInconsistencyError,
)
from .models import KINDS, FluidParams, build_system

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_ORACLE = 2
EXIT_USAGE = 64

_FIELD_DEFAULTS = {"rho": 1.0, "u": 0.0, "theta": 1.0, "sigma": 0.0,
                   "q": 0.0, "tau": 1.0}

_RUN_KEYS = ("ball_radius", "cfl", "t_end", "blowup_slope_factor",
             "output_stride", "n_cells", "domain_widths", "center",
             "source_enabled", "max_snapshots", "mode_branch")
_SCAN_KEYS = ("type", "mode", "branch", "taus", "thetas", "tol")
_SWEEP_KEYS = ("amplitudes", "threads")


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def _fmt4(x) -> str:
    out = f"{float(x):.4f}".rstrip("0").rstrip(".")
    return out if out else "0"


class _Parser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit code for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- configuration files ------------------------------------------------------


_SECTION_KEYS = {
    "system": ("kind", "r", "c", "eta", "eps", "delta", "chi"),
    "reference": tuple(_FIELD_DEFAULTS),
    "perturbation": ("amplitude", "width", "shape"),
    "run": _RUN_KEYS,
    "scan": _SCAN_KEYS,
    "sweep": _SWEEP_KEYS,
}


def _read_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}")
    except configparser.Error as err:
        raise ConfigError(f"malformed config {path!r}: {err}")
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        _check_keys(parser, section, _SECTION_KEYS[section])
    return parser


def _check_keys(parser: configparser.ConfigParser, section: str,
                allowed: Sequence[str]) -> None:
    if not parser.has_section(section):
        return
    for key in parser[section]:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _get(parser, section, key, default, convert, what):
    if parser is None or not parser.has_section(section) \
            or key not in parser[section]:
        return default
    raw = parser[section][key]
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be {what}, got {raw!r}")


def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def _parse_grid(raw: str) -> np.ndarray:
    """Either a comma list of values or a start:stop:count range."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:count, got {raw!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"bad range {raw!r}")
        if count < 1:
            raise ConfigError(f"range count must be >= 1 in {raw!r}")
        return np.linspace(lo, hi, count)
    try:
        return np.array([float(tok) for tok in raw.split(",") if tok.strip()])
    except ValueError:
        raise ConfigError(f"bad value list {raw!r}")


def _params_from_config(parser, overrides: Dict[str, Optional[float]]):
    def pick(name, default=None):
        value = overrides.get(name)
        if value is not None:
            return value
        return _get(parser, "system", name.lower(), default, float, "a number")

    kind = overrides.get("kind")
    if kind is None and parser is not None:
        kind = _get(parser, "system", "kind", None, str, "a kind")
    if kind is None:
        raise ConfigError("system kind is required (flag --kind or [system] kind)")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    required = {"R": pick("R"), "c": pick("c"), "eps": pick("eps")}
    missing = [name for name, value in required.items() if value is None]
    if missing:
        raise ConfigError(f"missing fluid parameters: {', '.join(missing)}")
    params = FluidParams(R=required["R"], c=required["c"],
                         eta=pick("eta", 1.0), eps=required["eps"],
                         delta=pick("delta"), chi=pick("chi"))
    return kind, params


def _reference_from_config(parser, kind: str, params) -> tuple:
    system = build_system(kind, params)
    _check_keys(parser, "reference", system.fields)
    return tuple(_get(parser, "reference", name, _FIELD_DEFAULTS[name],
                      float, "a number")
                 for name in system.fields)


def _runconfig_from_config(parser, args) -> sim1d.RunConfig:
    kind, params = _params_from_config(parser, {"kind": None})
    reference = _reference_from_config(parser, kind, params)
    _check_keys(parser, "perturbation", ("amplitude", "width", "shape"))
    _check_keys(parser, "run", _RUN_KEYS)
    amplitude = args.amplitude if args.amplitude is not None else _get(
        parser, "perturbation", "amplitude", 0.1, float, "a number")
    pert = sim1d.Perturbation(
        amplitude=amplitude,
        width=_get(parser, "perturbation", "width", 0.4, float, "a number"),
        shape=_get(parser, "perturbation", "shape", "bump", str, "a shape"))
    n_cells = args.n_cells if args.n_cells is not None else _get(
        parser, "run", "n_cells", 512, int, "an integer")
    t_end = args.t_end if args.t_end is not None else _get(
        parser, "run", "t_end", 2.0, float, "a number")
    return sim1d.RunConfig(
        kind=kind, params=params, reference=reference,
        ball_radius=_get(parser, "run", "ball_radius", 0.5, float, "a number"),
        perturbation=pert,
        mode_branch=_get(parser, "run", "mode_branch", "fast+", str, "a label"),
        cfl=_get(parser, "run", "cfl", 0.4, float, "a number"),
        t_end=t_end,
        blowup_slope_factor=_get(parser, "run", "blowup_slope_factor", 50.0,
                                 float, "a number"),
        output_stride=_get(parser, "run", "output_stride", 4, int,
                           "an integer"),
        n_cells=n_cells,
        domain_widths=_get(parser, "run", "domain_widths", 20.0, float,
                           "a number"),
        center=_get(parser, "run", "center", None, float, "a number"),
        source_enabled=_get(parser, "run", "source_enabled", True, _to_bool,
                            "a boolean"),
        max_snapshots=_get(parser, "run", "max_snapshots", 64, int,
                           "an integer"),
    )


# -- output helpers -----------------------------------------------------------


def _write_csv(path: str, header: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell)
                             for cell in row])


def _series_rows(result: sim1d.RunResult) -> List[List]:
    totals = {label: result.conserved_totals[i]
              for i, label in enumerate(result.conserved_labels)}
    rows = []
    for j, t in enumerate(result.times):
        rows.append([
            t, result.max_slope_u[j], result.max_slope_all[j],
            totals["mass"][j], totals["momentum"][j],
            totals["energy"][j] if "energy" in totals else float("nan"),
            result.ball_dist[j],
        ])
    return rows


# -- analyze ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    if args.kind is None and args.config is None:
        args.parser_ref.error("--kind is required when no --config is given")
    parser = _read_config(args.config) if args.config else None
    overrides = {"kind": args.kind, "R": args.R, "c": args.c, "eta": args.eta,
                 "eps": args.eps, "delta": args.delta, "chi": args.chi}
    kind, params = _params_from_config(parser, overrides)
    system = build_system(kind, params)
    if parser is not None:
        _check_keys(parser, "reference", system.fields)
    state = []
    for name in system.fields:
        value = getattr(args, name, None)
        if value is None:
            value = _get(parser, "reference", name, _FIELD_DEFAULTS[name],
                         float, "a number")
        state.append(value)
    V = np.asarray(state, dtype=float)
    result = modes.analyze(system, V, fd_gnl=not args.no_fd)

    print(f"kind={kind} state=({', '.join(_fmt(v) for v in V)})")
    has_mu = kind != "l5"
    head = f"{'mode':<9}{'lam':>22}"
    if has_mu:
        head += f"{'mu':>22}"
    head += f"{'gnl':>22}{'residual':>12}"
    print(head)
    for mode in result.reports:
        line = f"{mode.label:<9}{mode.lam:>22.12e}"
        if has_mu:
            line += f"{mode.mu:>22.12e}" if mode.mu is not None else " " * 22
        line += (f"{mode.gnl:>22.12e}" if mode.gnl is not None else
                 f"{'-':>22}")
        line += f"{mode.residual:>12.2e}"
        print(line)
        print(f"  r = [{', '.join(_fmt(c) for c in mode.r)}]")

    if kind == "l5" and system.is_equilibrium(V):
        rep = modes.pi0_report(params, V[0], V[2])
        ordered = (0.0 < rep.roots[0] < rep.lam_star_sq
                   < rep.lam_2star_sq < rep.roots[1])
        print(f"0 < {_fmt4(rep.roots[0])} < {_fmt4(rep.lam_star_sq)} < "
              f"{_fmt4(rep.lam_2star_sq)} < {_fmt4(rep.roots[1])} "
              f"{'OK' if ordered else 'VIOLATED'}")

    checks = (
        ("max_residual", result.max_residual, args.residual_tol),
        ("speed_mismatch", result.speed_mismatch, args.speed_tol),
        ("eigvec_mismatch", result.eigvec_mismatch, args.eigvec_tol),
        ("gnl_mismatch", result.gnl_mismatch, args.gnl_tol),
    )
    failed = []
    for name, value, tol in checks:
        shown = "not-checked" if value is None else f"{value:.3e}"
        print(f"{name}={shown} (tol {tol:g})")
        if value is not None and value > tol:
            failed.append(name)

    if args.csv:
        header = (["mode", "lam", "mu", "gnl", "residual"]
                  + [f"r_{name}" for name in system.fields])
        rows = []
        for mode in result.reports:
            rows.append([mode.label, mode.lam,
                         mode.mu if mode.mu is not None else float("nan"),
                         mode.gnl if mode.gnl is not None else float("nan"),
                         mode.residual] + list(mode.r))
        _write_csv(args.csv, header, rows)

    if failed:
        print(f"oracle disagreement: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    parser = _read_config(args.config)
    config = _runconfig_from_config(parser, args)
    result = sim1d.run(config)
    os.makedirs(args.out, exist_ok=True)

    header = ["t", "max_slope_u", "max_slope_all", "mass", "momentum",
              "energy", "ball_dist"]
    _write_csv(os.path.join(args.out, "series.csv"), header,
               _series_rows(result))

    system = config.make_system()
    x = config.make_grid().centers()
    for t, V in result.snapshots:
        name = f"snapshot_{t:.6f}.csv"
        rows = [[x[i]] + [V[f, i] for f in range(system.n)]
                for i in range(x.size)]
        _write_csv(os.path.join(args.out, name),
                   ["x"] + list(system.fields), rows)

    t_end_reached = result.t_final >= config.t_end * (1.0 - 1e-9)
    summary_lines = [
        f"status={result.status}",
        f"t_blowup_estimate={_fmt(result.t_blowup_estimate)}",
        f"max_ball_dist={_fmt(result.max_ball_dist)}",
        f"n_cells={config.n_cells}",
        f"t_end_reached={'true' if t_end_reached else 'false'}",
    ]
    with open(os.path.join(args.out, "summary"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    for line in summary_lines:
        print(line)
    if result.detail:
        print(f"detail={result.detail}", file=sys.stderr)

    if args.plot:
        from . import report
        report.render_series(result, os.path.join(args.out, "series.png"))
        report.render_snapshots(result.snapshots, x, system.fields,
                                os.path.join(args.out, "snapshots.png"))
    return EXIT_OK


# -- scan ---------------------------------------------------------------------


def cmd_scan(args) -> int:
    parser = _read_config(args.config)
    kind, params = _params_from_config(parser, {"kind": None})
    if kind != "l5":
        raise ConfigError("scan requires kind = l5 (Lagrangian analysis)")
    _check_keys(parser, "scan", _SCAN_KEYS)
    scan_type = _get(parser, "scan", "type", "degeneracy", str, "a type")
    mode = _get(parser, "scan", "mode", "fast", str, "a mode")
    branch = _get(parser, "scan", "branch", "+", str, "a branch")
    thetas = _parse_grid(_get(parser, "scan", "thetas", "1.0", str, "a grid"))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "scan.csv")

    if scan_type == "threshold":
        tol = _get(parser, "scan", "tol", 1e-9, float, "a number")
        rows = []
        for theta in thetas:
            closed = modes.find_tau_threshold(params, float(theta))
            bisect = modes.find_tau_threshold_bisect(params, float(theta),
                                                     tol=tol)
            rows.append([float(theta), closed, bisect])
            print(f"theta={_fmt(theta)} tau_max_closed={_fmt(closed)} "
                  f"tau_max_bisect={_fmt(bisect)}")
        _write_csv(out_path, ["theta", "tau_max_closed", "tau_max_bisect"],
                   rows)
        return EXIT_OK

    if scan_type != "degeneracy":
        raise ConfigError(
            f"scan type must be degeneracy or threshold, got {scan_type!r}")
    default_taus = "0.05:0.75:15"
    taus = _parse_grid(_get(parser, "scan", "taus", default_taus, str,
                            "a grid"))
    scan = modes.degeneracy_scan(params, taus, thetas, mode, branch)
    rows = []
    for i, theta in enumerate(thetas):
        for j, tau in enumerate(taus):
            rep = modes.pi0_report(params, float(tau), float(theta))
            rows.append([float(tau), float(theta),
                         float(np.sqrt(rep.roots[0])),
                         float(np.sqrt(rep.roots[1])),
                         rep.N_slow, rep.N_fast,
                         str(int(scan.signs[i, j]))])
    _write_csv(out_path,
               ["tau", "theta", "lam_slow", "lam_fast", "N_slow", "N_fast",
                "sign"], rows)
    print(f"grid points: {len(rows)}; sign crossings: {len(scan.crossings)}")
    for cross in scan.crossings:
        print(f"crossing theta={_fmt(cross.theta)} tau_zero="
              f"{_fmt(cross.tau_zero)} bracket=[{_fmt(cross.tau_lo)}, "
              f"{_fmt(cross.tau_hi)}]")
    if args.plot:
        from . import report
        report.render_scan(taus, thetas, scan.values,
                           os.path.join(args.out, "scan.png"), mode=mode)
    return EXIT_OK


# -- sweep --------------------------------------------------------------------


def cmd_sweep(args) -> int:
    parser = _read_config(args.config)
    config = _runconfig_from_config(parser, args)
    _check_keys(parser, "sweep", _SWEEP_KEYS)
    amplitudes = _parse_grid(_get(parser, "sweep", "amplitudes",
                                  "0.02,0.05,0.1,0.2", str, "a grid"))
    threads = args.threads if args.threads is not None else _get(
        parser, "sweep", "threads", None, int, "an integer")
    sweep = sim1d.amplitude_sweep(config, amplitudes, threads=threads)
    os.makedirs(args.out, exist_ok=True)
    rows = [[a, status, tb if tb is not None else float("nan")]
            for a, status, tb in zip(sweep.amplitudes, sweep.statuses,
                                     sweep.t_blowup_estimates)]
    _write_csv(os.path.join(args.out, "sweep.csv"),
               ["amplitude", "status", "t_blowup_estimate"], rows)
    if sweep.bracket is not None:
        print(f"bracket={_fmt(sweep.bracket[0])},{_fmt(sweep.bracket[1])}")
    else:
        print("bracket=none")
    print(f"monotone={'true' if sweep.monotone else 'false'}")
    for a, status in zip(sweep.amplitudes, sweep.statuses):
        print(f"amplitude={_fmt(a)} status={status}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="ruggeri",
                     description="Characteristic analysis and 1D simulation "
                                 "of stress / heat-flux relaxation fluids.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    analyze = sub.add_parser("analyze", help="per-mode table for one state")
    analyze.add_argument("--kind", choices=KINDS)
    analyze.add_argument("--config")
    for name in ("R", "c", "eta", "eps", "delta", "chi"):
        analyze.add_argument(f"--{name}", type=float)
    for name in _FIELD_DEFAULTS:
        analyze.add_argument(f"--{name}", type=float)
    analyze.add_argument("--csv", help="also write the table to this CSV file")
    analyze.add_argument("--no-fd", action="store_true",
                         help="skip finite-difference nonlinearity oracles")
    analyze.add_argument("--speed-tol", type=float, default=1e-9)
    analyze.add_argument("--residual-tol", type=float, default=1e-9)
    analyze.add_argument("--eigvec-tol", type=float, default=1e-8)
    analyze.add_argument("--gnl-tol", type=float, default=1e-5)
    analyze.set_defaults(func=cmd_analyze, parser_ref=analyze)

    simulate = sub.add_parser("simulate", help="integrate one configured run")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--out", default=".")
    simulate.add_argument("--n-cells", type=int, dest="n_cells")
    simulate.add_argument("--amplitude", type=float)
    simulate.add_argument("--t-end", type=float, dest="t_end")
    simulate.add_argument("--no-plot", dest="plot", action="store_false")
    simulate.set_defaults(func=cmd_simulate, plot=True)

    scan = sub.add_parser("scan", help="nonlinearity sign grid or thresholds")
    scan.add_argument("--config", required=True)
    scan.add_argument("--out", default=".")
    scan.add_argument("--no-plot", dest="plot", action="store_false")
    scan.set_defaults(func=cmd_scan, plot=True)

    sweep = sub.add_parser("sweep", help="amplitude sweep of one scenario")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=".")
    sweep.add_argument("--threads", type=int)
    sweep.add_argument("--n-cells", type=int, dest="n_cells")
    sweep.add_argument("--amplitude", type=float, help=argparse.SUPPRESS)
    sweep.add_argument("--t-end", type=float, dest="t_end")
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, HyperbolicityError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except InternalInconsistencyError as err:
        print(f"oracle failure: {err}", file=sys.stderr)
        return EXIT_ORACLE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
