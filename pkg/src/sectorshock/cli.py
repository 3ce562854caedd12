"""Command-line entry point.

Settings come from an optional ``key = value`` file (``--config``) and
are overridden by flags of the same name.  Every output is written to a
temporary file and renamed into place only after the whole run
succeeded, so a failed run leaves the output directory untouched.

Exit codes: 0 success, 2 solver did not converge, 3 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import fields
from typing import Callable

import numpy as np

from .background import (EntranceData, NozzleGeom, exit_pressure_bounds, profile_for_shock,
                         shock_from_exit_pressure)
from .driver import SolverConfig, solve_for_exit_pressure, stability_sweep
from .errors import (InvalidInputError, PressureOutOfRangeError, SolverError)
from .upstream import PerturbationSpec

EXIT_OK, EXIT_NONCONVERGED, EXIT_INVALID = 0, 2, 3
MODES = ("background", "solve", "sweep", "p-map")

# key -> (type, default, help)
SCHEMA: dict[str, tuple[Callable, object, str]] = {
    "mode": (str, None, "one of background, solve, sweep, p-map"),
    "out": (str, ".", "output directory"),
    "gamma": (float, 1.4, "ratio of specific heats"),
    "r_en": (float, 1.0, "entrance radius"),
    "r_ex": (float, 3.0, "exit radius"),
    "phi0": (float, math.pi / 6, "sector half-angle"),
    "rho_en": (float, 1.0, "entrance density"),
    "u_en": (float, 2.0, "entrance radial velocity"),
    "p_en": (float, 0.5, "entrance pressure"),
    "r_sh": (float, None, "background shock radius (solve, sweep)"),
    "p_c": (float, None, "background exit pressure; sets r_sh when given"),
    "sigma": (float, 0.0, "perturbation amplitude"),
    "a_phi": (float, 0.2, "potential mode coefficient"),
    "a_psi": (float, 0.05, "stream mode coefficient"),
    "a_lam": (float, 0.0, "swirl coefficient"),
    "a_S": (float, 0.25, "entropy mode coefficient"),
    "a_ex0": (float, 0.0, "uniform exit-pressure coefficient"),
    "a_ex1": (float, 0.25, "exit-pressure mode coefficient"),
    "sigmas": (str, "0.01,0.005,0.0025", "comma-separated amplitudes (sweep)"),
    "workers": (int, 1, "threads for sweep mode"),
    "n_p": (int, 9, "number of pressures (p-map)"),
    "pressures": (str, "", "comma-separated pressures (p-map), overrides n_p"),
    "n_r": (int, 65, "radial nodes"),
    "n_phi": (int, 33, "angular cells"),
    "max_outer": (int, 30, "exit-pressure iterations"),
    "max_picard": (int, 80, "Picard sweeps per inner solve"),
    "max_newton": (int, 4, "Newton steps per sweep"),
    "tol_front": (float, 1e-10, "front update tolerance"),
    "tol_field": (float, 1e-9, "field update tolerance"),
    "tol_pressure": (float, 1e-9, "relative exit-pressure tolerance"),
    "omega": (float, 0.7, "Newton damping"),
    "alpha": (float, 0.6, "Hoelder exponent of the diagnostic norm"),
    "sigma_max": (float, 5e-2, "largest admissible sigma"),
}


class ConfigError(InvalidInputError):
    pass


# -- configuration -------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SCHEMA:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = val
    return out


def _coerce(key: str, val):
    typ = SCHEMA[key][0]
    if val is None:
        return None
    try:
        v = typ(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {val!r}") from exc
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sectorshock",
                                 description="Transonic shocks in spherical-sector nozzles.")
    ap.add_argument("--config", help="key = value settings file")
    for key, (_, default, text) in SCHEMA.items():
        ap.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                        help=f"{text} (default {default})")
    return ap


def resolve(argv) -> dict:
    args = build_parser().parse_args(argv)
    settings = {k: d for k, (_, d, _) in SCHEMA.items()}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        settings.update(parse_config_text(text))
    for key in SCHEMA:
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    settings = {k: _coerce(k, v) for k, v in settings.items()}
    if settings["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}")
    return settings


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _solver_config(s: dict) -> SolverConfig:
    names = [f.name for f in fields(SolverConfig)]
    return SolverConfig(**{k: s[k] for k in names})


def _perturbation(s: dict) -> PerturbationSpec:
    return PerturbationSpec(s["sigma"], s["a_phi"], s["a_psi"], s["a_lam"], s["a_S"],
                            s["a_ex0"], s["a_ex1"])


def _problem(s: dict):
    geom = NozzleGeom(s["r_en"], s["r_ex"], s["phi0"])
    ent = EntranceData(s["rho_en"], s["u_en"], s["p_en"])
    return geom, ent


def _shock_radius(s, geom, ent) -> float:
    if s["p_c"] is not None:
        return shock_from_exit_pressure(geom, ent, s["p_c"], s["gamma"])
    if s["r_sh"] is None:
        raise ConfigError("solve and sweep need r_sh or p_c")
    return s["r_sh"]


# -- output staging ------------------------------------------------------------------

class Outputs:
    """Collect file contents in memory and publish them atomically."""

    def __init__(self, directory: str):
        self.dir = directory
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def add_csv(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self.add(name, buf.getvalue())

    def publish(self) -> list[str]:
        os.makedirs(self.dir, exist_ok=True)
        staged = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(dir=self.dir, prefix="." + name, suffix=".tmp")
                with os.fdopen(fd, "w", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, os.path.join(self.dir, name)))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, dst in staged:
            os.replace(tmp, dst)
        return [dst for _, dst in staged]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


GNUPLOT = """# gnuplot script written by sectorshock
set datafile separator ','
set terminal pngcairo size 900,600
set output 'front.png'
set xlabel 'phi'; set ylabel 'f(phi)'
plot 'front.csv' using 1:2 every ::1 with linespoints title 'front'
set output 'mach.png'
set xlabel 'r sin(phi)'; set ylabel 'r cos(phi)'
set view map; set size ratio -1
splot 'fields.csv' using ($3*sin($4)):($3*cos($4)):10 every ::1 with points palette pt 5 ps 0.6 title 'Mach'
set output 'history.png'
unset view; set size noratio; set logscale y
set xlabel 'sweep'; set ylabel 'residual'
plot 'history.csv' using 1:8 every ::1 with lines title 'RH residual', \\
     '' using 1:2 every ::1 with lines title 'largest update'
"""


# -- modes ---------------------------------------------------------------------------

def run_background(s, out: Outputs):
    geom, ent = _problem(s)
    if s["p_c"] is None and s["r_sh"] is None:
        r_sh = 0.5 * (geom.r_en + geom.r_ex)
    else:
        r_sh = _shock_radius(s, geom, ent)
    prof = profile_for_shock(geom, ent, r_sh, s["gamma"])
    p_min, p_max = exit_pressure_bounds(geom, ent, s["gamma"])
    out.add_csv("background.csv", ["r", "rho", "u", "p", "mach", "S"], prof.to_rows())
    rep = {"r_sh": r_sh, "p_min": p_min, "p_max": p_max, "mass_flux": prof.m,
           "S_minus": prof.S_minus, "S_plus": prof.S_plus, "b0": prof.gas.b0,
           "k0": prof.gas.k0, "exit_pressure": prof.exit_pressure(),
           "shock_minus": list(map(float, prof.shock_minus)),
           "shock_plus": list(map(float, prof.shock_plus))}
    out.add("background.json", json.dumps(rep, indent=2, sort_keys=True) + "\n")


def run_pmap(s, out: Outputs):
    geom, ent = _problem(s)
    p_min, p_max = exit_pressure_bounds(geom, ent, s["gamma"])
    if s["pressures"]:
        ps = _floats(s["pressures"])
    else:
        if s["n_p"] < 1:
            raise ConfigError("n_p must be positive")
        ps = list(np.linspace(p_min, p_max, s["n_p"] + 2)[1:-1])
    rows = [(p, shock_from_exit_pressure(geom, ent, p, s["gamma"])) for p in ps]
    out.add_csv("pmap.csv", ["p_c", "r_c"], rows)


def run_solve(s, out: Outputs):
    geom, ent = _problem(s)
    prof = profile_for_shock(geom, ent, _shock_radius(s, geom, ent), s["gamma"])
    st, ff, rep = solve_for_exit_pressure(prof, _perturbation(s), None, _solver_config(s))
    rep_d = rep.to_dict()
    rep_d.pop("elapsed")  # keep reruns byte-identical
    out.add("report.json", json.dumps(rep_d, indent=2, sort_keys=True) + "\n")
    out.add_csv("fields.csv", ff.CSV_HEADER, ff.rows())
    out.add_csv("front.csv", ["phi", "f", "df"],
                zip(st.front.phi, st.front.values, st.front.deriv(st.front.phi)))
    out.add_csv("front_history.csv", ["iter", "phi", "f"],
                ((k, p, v) for k, vals in enumerate(rep.front_history, 1)
                 for p, v in zip(st.front.phi, vals)))
    hist = [h for h in rep.history if "sweep" in h]
    keys = ("front", "chi", "psi", "S", "lam")
    out.add_csv("history.csv", ["sweep", "update", *keys, "rh"],
                ((h["sweep"], max(h[k] for k in keys), *(h[k] for k in keys), h["rh"])
                 for h in hist))
    out.add("plot.gp", GNUPLOT)


def run_sweep(s, out: Outputs):
    geom, ent = _problem(s)
    prof = profile_for_shock(geom, ent, _shock_radius(s, geom, ent), s["gamma"])
    sigmas = _floats(s["sigmas"])
    if not sigmas:
        raise ConfigError("sigmas is empty")
    rows, spread, linear = stability_sweep(prof, _perturbation(s), sigmas, _solver_config(s),
                                           workers=max(1, s["workers"]))
    out.add_csv("stability.csv", ["sigma", "deviation", "ratio", "converged"],
                ((r.sigma, r.deviation, r.ratio, r.converged) for r in rows))
    out.add("stability.json", json.dumps({"spread": spread, "linear": linear}, indent=2) + "\n")
    if not all(r.converged for r in rows):
        raise _Unconverged("at least one sweep entry did not converge")


class _Unconverged(SolverError):
    pass


RUNNERS = {"background": run_background, "p-map": run_pmap, "solve": run_solve,
           "sweep": run_sweep}


def run(argv=None) -> int:
    """Execute one run; returns the process exit code."""
    try:
        s = resolve(argv)
        out = Outputs(s["out"])
        RUNNERS[s["mode"]](s, out)
        out.publish()
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INVALID if exc.code else EXIT_OK
    except (InvalidInputError, PressureOutOfRangeError, ValueError) as exc:
        print(f"sectorshock: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"sectorshock: solver failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"sectorshock: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":  # pragma: no cover
    main()
