"""Command-line interface.

Every command writes CSV files whose ``#`` header lines carry parameters and
units, plus one ``<stem>.manifest.json`` describing the run.  CSV bodies are
deterministic; the timestamp and wall time live only in the manifest.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure,
4 infeasible solve under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constants import CONSTANTS_VERSION, EV, SOLAR_TEMPERATURE
from .gaussian_mixture import (
    DEFAULT_GRID_POINTS,
    DEFAULT_GRID_SPAN,
    FEASIBILITY_THRESHOLD,
    default_grid,
    feasibility_sweep,
    fwhm_thz_to_sigma,
    sigma_to_fwhm_thz,
    solve_weights,
)
from .numerics import QuadratureError
from .nnls import NNLSError
from .thermal_field import (
    SPECTRAL_SPEC,
    ThermalEnvironment,
    energy_density,
    g1_thermal,
    g1_thermal_closed_form_zero,
    photon_density,
)
from .thermal_pulse import (
    FIELD_INNER_SPEC,
    FIELD_OUTER_SPEC,
    R_MAX_KT,
    AngularProfile,
    OutOfRangeError,
    ProfileKind,
    ThermalPulseSpec,
    field_line,
    intensity_profile,
    mixture_density_constraint,
    moment_report,
    momentum_mean_erf,
    thread_count,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4


class UsageError(ValueError):
    pass


class Infeasible(RuntimeError):
    pass


# --- output helpers -------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    return str(v)


def write_csv(path: Path, meta: dict, columns, rows):
    """``# key: value`` metadata lines, a column header, then data rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {_fmt(value)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _sha256(path: Path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(out: Path, command, parameters, tolerances, outputs, started, extra=None):
    """One manifest per run, next to the primary output."""
    doc = {
        "command": command,
        "package_version": __version__,
        "parameters": parameters,
        "constants_version": CONSTANTS_VERSION,
        "tolerances": tolerances,
        "outputs": [{"file": p.name, "sha256": _sha256(p)} for p in outputs],
        "results": extra or {},
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    mp = manifest_path(out)
    mp.write_text(json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n")
    return mp


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _param(value, unit):
    return {"value": value, "unit": unit}


def _spec_tol(spec):
    return {"relative": spec.relative_tolerance, "absolute": spec.absolute_tolerance}


# --- commands ---------------------------------------------------------------------

def cmd_thermal_g1(args):
    started = time.perf_counter()
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not args.tau_max > args.tau_min:
        raise UsageError("--tau-max must exceed --tau-min")
    env = ThermalEnvironment(args.temperature)
    taus = np.linspace(args.tau_min, args.tau_max, args.points)
    g0 = g1_thermal(0.0, env).value.real
    rows = []
    for tau_fs in taus:
        v = g1_thermal(tau_fs * 1e-15, env).value
        rows.append((tau_fs, v.real, v.imag, abs(v), abs(v) / g0))
    out = Path(args.out)
    meta = {
        "quantity": "delta_ij coefficient of the thermal first-order correlation G1(tau)",
        "temperature_K": args.temperature,
        "units": "tau_fs [fs]; re, im, abs [V^2/m^2]; abs_normalized [1]",
        "G1_zero_closed_form_V2_m2": g1_thermal_closed_form_zero(env),
    }
    write_csv(out, meta, ["tau_fs", "re", "im", "abs", "abs_normalized"], rows)
    params = {
        "temperature": _param(args.temperature, "K"),
        "tau_min": _param(args.tau_min, "fs"),
        "tau_max": _param(args.tau_max, "fs"),
        "points": _param(args.points, "1"),
    }
    write_manifest(out, "thermal-g1", params, {"spectral": _spec_tol(SPECTRAL_SPEC)}, [out], started,
                   {"G1_zero_V2_m2": g0})
    return EXIT_OK


def _sigma_from(args):
    if args.sigma is not None:
        if not args.sigma > 0:
            raise UsageError("--sigma must be positive")
        return args.sigma
    if not args.fwhm_thz > 0:
        raise UsageError("--fwhm-thz must be positive")
    return fwhm_thz_to_sigma(args.fwhm_thz)


def _grid_params(env, n):
    if n < 2:
        raise UsageError("--grid-points must be at least 2")
    return default_grid(env, n)


def cmd_gaussian_solve(args):
    started = time.perf_counter()
    env = ThermalEnvironment(args.temperature)
    sigma = _sigma_from(args)
    grid = _grid_params(env, args.grid_points)
    sol = solve_weights(env, sigma, k_grid=grid, k_o_grid=grid, threshold=args.threshold)
    out = Path(args.out)
    meta = {
        "quantity": "nonnegative weight density p(k_o) of the Gaussian-pulse mixture (|alpha|^2 = 1)",
        "temperature_K": args.temperature,
        "sigma_per_m": sigma,
        "fwhm_THz": sigma_to_fwhm_thz(sigma),
        "relative_residual": sol.relative_residual,
        "feasible": sol.feasible,
        "units": "k_o_per_m [1/m]; k_o_over_kT [1]; p_value [1] (cell average; A p = occupancy with the reduced kernel)",
    }
    rows = [(k, k / env.k_T, p) for k, p in zip(sol.k_o_grid, sol.p_values)]
    write_csv(out, meta, ["k_o_per_m", "k_o_over_kT", "p_value"], rows)
    params = {
        "temperature": _param(args.temperature, "K"),
        "sigma": _param(sigma, "1/m"),
        "fwhm": _param(sigma_to_fwhm_thz(sigma), "THz"),
        "grid_points": _param(args.grid_points, "1"),
        "grid_span": _param(list(DEFAULT_GRID_SPAN), "k_T"),
        "grid_spacing": _param("geometric; k grid equals k_o node grid; first k_o cell starts at 0", ""),
        "threshold": _param(args.threshold, "relative residual"),
        "strict": _param(bool(args.strict), ""),
    }
    write_manifest(out, "gaussian-solve", params, {"feasibility_threshold": args.threshold}, [out], started,
                   {"relative_residual": sol.relative_residual, "feasible": sol.feasible})
    print(f"sigma={sigma:.6e} 1/m  fwhm={sigma_to_fwhm_thz(sigma):.6g} THz  "
          f"residual={sol.relative_residual:.3e}  feasible={sol.feasible}")
    if args.strict and not sol.feasible:
        raise Infeasible(f"no nonnegative solution at residual threshold {args.threshold:g}")
    return EXIT_OK


def cmd_gaussian_sweep(args):
    started = time.perf_counter()
    env = ThermalEnvironment(args.temperature)
    if any(not f > 0 for f in args.fwhm_thz):
        raise UsageError("--fwhm-thz values must be positive")
    grid = _grid_params(env, args.grid_points)
    sigmas = [fwhm_thz_to_sigma(f) for f in args.fwhm_thz]
    rows = feasibility_sweep(env, sigmas, k_grid=grid, k_o_grid=grid, threshold=args.threshold)
    out = Path(args.out)
    meta = {
        "quantity": "feasibility of the nonnegative Gaussian-mixture inversion versus spectral width",
        "temperature_K": args.temperature,
        "threshold": args.threshold,
        "units": "fwhm_thz [THz]; sigma_per_m [1/m]; relative_residual [1]",
    }
    write_csv(out, meta, ["fwhm_thz", "sigma_per_m", "relative_residual", "feasible", "error"],
              [(r.fwhm_thz, r.sigma, r.relative_residual, r.feasible, r.error) for r in rows])
    params = {
        "temperature": _param(args.temperature, "K"),
        "fwhm": _param(list(args.fwhm_thz), "THz"),
        "grid_points": _param(args.grid_points, "1"),
        "grid_span": _param(list(DEFAULT_GRID_SPAN), "k_T"),
        "threshold": _param(args.threshold, "relative residual"),
    }
    write_manifest(out, "gaussian-sweep", params, {"feasibility_threshold": args.threshold}, [out], started,
                   {"feasible": {_fmt(r.fwhm_thz): r.feasible for r in rows}})
    for r in rows:
        print(f"fwhm={r.fwhm_thz:g} THz  residual={r.relative_residual:.3e}  feasible={r.feasible}"
              + (f"  error={r.error}" if r.error else ""))
    if any(r.error for r in rows):
        raise ArithmeticError("one or more solves failed")
    if args.strict and not all(r.feasible for r in rows):
        raise Infeasible("at least one width is infeasible")
    return EXIT_OK


def _profile(args):
    if args.profile == ProfileKind.TRUNCATED_GAUSSIAN.value and not args.gamma > 0:
        raise UsageError("--gamma must be positive")
    return AngularProfile.from_name(args.profile, args.gamma)


def _pulse(args):
    return ThermalPulseSpec(ThermalEnvironment(args.temperature), _profile(args))


def cmd_pulse_moments(args):
    started = time.perf_counter()
    spec = _pulse(args)
    rep = moment_report(spec, "closed_form", args.convention)
    quad = moment_report(spec, "quadrature", args.convention)
    p_m, p_n, p_u = rep.momentum_mean_mnu()
    v_m, v_n, v_u = rep.variance_mnu()
    s_m, s_n, s_u = rep.std_mnu()
    erf_form = (momentum_mean_erf(spec.profile.gamma, spec.env)
                if spec.profile.kind is ProfileKind.TRUNCATED_GAUSSIAN else float("nan"))
    columns = ["energy_mean_eV", "energy_std_eV", "p_mean_m_eV_c", "p_mean_n_eV_c", "p_mean_u_eV_c",
               "p_var_mm_eV2_c2", "p_var_nn_eV2_c2", "p_var_uu_eV2_c2",
               "p_std_mm_eV_c", "p_std_nn_eV_c", "p_std_uu_eV_c",
               "energy_mean_quad_eV", "energy_std_quad_eV", "p_mean_m_quad_eV_c", "p_mean_m_erf_eV_c"]
    row = [rep.energy_mean, rep.energy_std, p_m, p_n, p_u, v_m, v_n, v_u, s_m, s_n, s_u,
           quad.energy_mean, quad.energy_std, quad.momentum_mean_mnu()[0], erf_form]
    out = Path(args.out)
    meta = {
        "quantity": "energy and momentum statistics of one thermal pulse",
        "temperature_K": args.temperature,
        "profile": spec.profile.label,
        "variance_convention": args.convention,
        "C0..C4": " ".join(_fmt(c) for c in spec.profile.C),
        "units": "energies [eV] per |alpha|^2 (std per |alpha|); momenta [eV/c]; variances [(eV/c)^2]; "
                 "components along (m, n, u)",
    }
    write_csv(out, meta, columns, [row])
    params = {
        "temperature": _param(args.temperature, "K"),
        "profile": _param(args.profile, ""),
        "gamma": _param(args.gamma, "1"),
        "convention": _param(args.convention, ""),
    }
    write_manifest(out, "pulse-moments", params, {"spectral": _spec_tol(SPECTRAL_SPEC)}, [out], started,
                   dict(zip(columns, row)))
    return EXIT_OK


_AXES = {
    # (Theta, Phi) for the positive and negative half of each axis
    "m": ((0.0, 0.0), (math.pi, 0.0)),
    "n": ((math.pi / 2, 0.0), (math.pi / 2, math.pi)),
    "u": ((math.pi / 2, math.pi / 2), (math.pi / 2, -math.pi / 2)),
}


def _check_r_max(r_max_kt):
    if not 0 < r_max_kt <= R_MAX_KT:
        raise UsageError(f"--r-max-kt must be in (0, {R_MAX_KT:g}]")


def cmd_pulse_field(args):
    started = time.perf_counter()
    _check_r_max(args.r_max_kt)
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    spec = _pulse(args)
    kT = spec.env.k_T
    signed = np.linspace(-args.r_max_kt, args.r_max_kt, args.points)
    pts = []
    for s in signed:
        th, ph = _AXES[args.axis][0 if s >= 0 else 1]
        pts.append((abs(s) / kT, th, ph))
    samples = field_line(spec, pts, t=args.time_fs * 1e-15)
    imax = max(f.intensity for f in samples)
    rows = [(s, f.Theta, f.Phi, args.axis, f.E_u.real, f.E_u.imag, f.E_m.real, f.E_m.imag,
             f.intensity, f.intensity / imax) for s, f in zip(signed, samples)]
    out = Path(args.out)
    meta = {
        "quantity": f"positive-frequency field of one thermal pulse along the {args.axis} axis (alpha = 1)",
        "temperature_K": args.temperature,
        "profile": spec.profile.label,
        "time_fs": args.time_fs,
        "units": "kT_R [1] (signed position along the axis); Theta, Phi [rad]; Re/Im E [V/m]; I [V^2/m^2]",
        "frame": "m = propagation axis, n = no field component, u = m x n",
    }
    cols = ["kT_R", "Theta", "Phi", "axis", "ReEu", "ImEu", "ReEm", "ImEm", "I", "I_over_Imax"]
    write_csv(out, meta, cols, rows)
    params = {
        "temperature": _param(args.temperature, "K"),
        "profile": _param(args.profile, ""),
        "gamma": _param(args.gamma, "1"),
        "axis": _param(args.axis, ""),
        "r_max": _param(args.r_max_kt, "1/k_T"),
        "points": _param(args.points, "1"),
        "time": _param(args.time_fs, "fs"),
        "threads": _param(thread_count(), "1"),
    }
    write_manifest(out, "pulse-field", params,
                   {"inner": _spec_tol(FIELD_INNER_SPEC), "outer": _spec_tol(FIELD_OUTER_SPEC),
                    "note": "tolerances are relative to the pulse's field scale"},
                   [out], started, {"I_max_V2_m2": imax})
    return EXIT_OK


def cmd_pulse_intensity(args):
    started = time.perf_counter()
    _check_r_max(args.r_max_kt)
    if min(args.r_points, args.theta_points) < 2 or args.phi_points < 1:
        raise UsageError("need at least 2 R and Theta points and 1 Phi point")
    spec = _pulse(args)
    R = np.linspace(0.0, args.r_max_kt, args.r_points)
    Theta = np.linspace(0.0, math.pi, args.theta_points)
    Phi = np.linspace(0.0, 2 * math.pi, args.phi_points, endpoint=False)
    grid = intensity_profile(spec, R, Theta, Phi, t=args.time_fs * 1e-15)
    I = grid.intensity
    imax = grid.max
    out = Path(args.out)
    half = out.with_name(out.stem + "_halfmax" + out.suffix)
    meta = {
        "quantity": "intensity |E_u|^2 + |E_m|^2 of one thermal pulse on a spherical grid (alpha = 1)",
        "temperature_K": args.temperature,
        "profile": spec.profile.label,
        "time_fs": args.time_fs,
        "I_max_V2_m2": imax,
        "units": "kT_R [1]; Theta, Phi [rad]; I [V^2/m^2]; I_over_Imax [1]",
    }
    rows = []
    for i, r in enumerate(R):
        for j, th in enumerate(Theta):
            for k, ph in enumerate(Phi):
                rows.append((r, th, ph, I[i, j, k], I[i, j, k] / imax))
    write_csv(out, meta, ["kT_R", "Theta", "Phi", "I", "I_over_Imax"], rows)
    pts = grid.half_max_region()
    write_csv(half, {
        "quantity": "grid points on the half-maximum boundary of the intensity",
        "units": "x_kT, y_kT, z_kT [1/k_T] along (n, u, m)",
    }, ["x_kT", "y_kT", "z_kT"], pts.tolist())
    params = {
        "temperature": _param(args.temperature, "K"),
        "profile": _param(args.profile, ""),
        "gamma": _param(args.gamma, "1"),
        "r_max": _param(args.r_max_kt, "1/k_T"),
        "grid": _param([args.r_points, args.theta_points, args.phi_points], "R, Theta, Phi points"),
        "time": _param(args.time_fs, "fs"),
        "threads": _param(thread_count(), "1"),
    }
    write_manifest(out, "pulse-intensity", params,
                   {"inner": _spec_tol(FIELD_INNER_SPEC), "outer": _spec_tol(FIELD_OUTER_SPEC),
                    "note": "tolerances are relative to the pulse's field scale"},
                   [out, half], started,
                   {"I_max_V2_m2": imax, "half_max_points": int(len(pts)),
                    "half_max_extent_kT": float(np.linalg.norm(pts, axis=1).max()) if len(pts) else 0.0})
    return EXIT_OK


def constants_table(temperature):
    env = ThermalEnvironment(temperature)
    mix = mixture_density_constraint(env)
    return {
        "temperature_K": temperature,
        "kBT_eV": env.kT / EV,
        "k_T_per_m": env.k_T,
        "coherence_time_fs": env.coherence_time * 1e15,
        "p_alpha_sq_per_m3": mix.p_alpha_sq,
        "p_alpha_sq_alternative_closed_form_per_m3": mix.p_alpha_sq_alternative_closed_form,
        "photon_density_per_m3": photon_density(env),
        "energy_density_J_per_m3": energy_density(env),
        "constants_version": CONSTANTS_VERSION,
    }


def cmd_constants(args):
    started = time.perf_counter()
    table = constants_table(args.temperature)
    for key, value in table.items():
        print(f"{key} = {_fmt(value)}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(table, indent=2) + "\n")
        write_manifest(out, "constants", {"temperature": _param(args.temperature, "K")},
                       {"spectral": _spec_tol(SPECTRAL_SPEC)}, [out], started)
    else:
        print(json.dumps(table, sort_keys=False))
    return EXIT_OK


def cmd_reproduce_paper(args):
    """All computations into one directory, each with its own manifest."""
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    root = Path(args.out_dir) if args.out_dir else Path(f"lumen_mix_run_{stamp}")
    root.mkdir(parents=True, exist_ok=True)
    T = args.temperature
    field_pts = 21 if args.quick else 41
    runs = [
        ["constants", "--temperature", T, "--out", root / "constants.json"],
        ["thermal-g1", "--temperature", T, "--out", root / "thermal_g1.csv"],
        ["gaussian-sweep", "--temperature", T, "--out", root / "gaussian_sweep.csv"],
        ["gaussian-solve", "--temperature", T, "--fwhm-thz", 1, "--out", root / "gaussian_1THz.csv"],
        ["gaussian-solve", "--temperature", T, "--fwhm-thz", 100, "--out", root / "gaussian_100THz.csv"],
        ["pulse-moments", "--temperature", T, "--out", root / "pulse_moments.csv"],
    ]
    for axis in "mnu":
        runs.append(["pulse-field", "--temperature", T, "--axis", axis, "--r-max-kt", 5,
                     "--points", field_pts, "--out", root / f"pulse_field_{axis}.csv"])
    runs.append(["pulse-intensity", "--temperature", T, "--r-max-kt", 1.5,
                 "--r-points", 7 if args.quick else 13, "--theta-points", 7 if args.quick else 13,
                 "--phi-points", 16, "--out", root / "pulse_intensity.csv"])
    for argv in runs:
        argv = [str(a) for a in argv]
        print("lumen-mix " + " ".join(argv), flush=True)
        code = main(argv)
        if code != EXIT_OK:
            return code
    print(f"outputs in {root}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------

def _add_temperature(p):
    p.add_argument("--temperature", type=float, default=SOLAR_TEMPERATURE, help="kelvin (default 5777)")


def _add_profile(p):
    p.add_argument("--profile", choices=[k.value for k in ProfileKind], default=ProfileKind.TRUNCATED_GAUSSIAN.value)
    p.add_argument("--gamma", type=float, default=0.1, help="width of the truncated Gaussian profile")


def build_parser():
    parser = argparse.ArgumentParser(prog="lumen-mix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thermal-g1", help="thermal first-order correlation versus delay")
    _add_temperature(p)
    p.add_argument("--tau-min", type=float, default=-5.0, help="fs")
    p.add_argument("--tau-max", type=float, default=5.0, help="fs")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default="thermal_g1.csv")
    p.set_defaults(func=cmd_thermal_g1)

    p = sub.add_parser("gaussian-solve", help="nonnegative weights for a Gaussian-pulse mixture")
    _add_temperature(p)
    width = p.add_mutually_exclusive_group(required=True)
    width.add_argument("--sigma", type=float, help="Gaussian width in 1/m")
    width.add_argument("--fwhm-thz", type=float, help="spectral intensity FWHM in THz")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--threshold", type=float, default=FEASIBILITY_THRESHOLD)
    p.add_argument("--strict", action="store_true", help="exit with status 4 when infeasible")
    p.add_argument("--out", default="gaussian_weights.csv")
    p.set_defaults(func=cmd_gaussian_solve)

    p = sub.add_parser("gaussian-sweep", help="feasibility across spectral widths")
    _add_temperature(p)
    p.add_argument("--fwhm-thz", type=float, nargs="+", default=[0.1, 1.0, 10.0, 100.0])
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--threshold", type=float, default=FEASIBILITY_THRESHOLD)
    p.add_argument("--strict", action="store_true", help="exit with status 4 if any width is infeasible")
    p.add_argument("--out", default="gaussian_sweep.csv")
    p.set_defaults(func=cmd_gaussian_sweep)

    p = sub.add_parser("pulse-moments", help="energy and momentum statistics of a thermal pulse")
    _add_temperature(p)
    _add_profile(p)
    p.add_argument("--convention", choices=["reduced", "direct"], default="reduced",
                   help="m-axis coefficient of the momentum variance (see README)")
    p.add_argument("--out", default="pulse_moments.csv")
    p.set_defaults(func=cmd_pulse_moments)

    p = sub.add_parser("pulse-field", help="field of a thermal pulse along a frame axis")
    _add_temperature(p)
    _add_profile(p)
    p.add_argument("--axis", choices=["m", "n", "u"], default="m")
    p.add_argument("--r-max-kt", type=float, default=5.0)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--time-fs", type=float, default=0.0)
    p.add_argument("--out", default="pulse_field.csv")
    p.set_defaults(func=cmd_pulse_field)

    p = sub.add_parser("pulse-intensity", help="intensity on a spherical grid and its half-max region")
    _add_temperature(p)
    _add_profile(p)
    p.add_argument("--r-max-kt", type=float, default=1.5)
    p.add_argument("--r-points", type=int, default=13)
    p.add_argument("--theta-points", type=int, default=13)
    p.add_argument("--phi-points", type=int, default=16)
    p.add_argument("--time-fs", type=float, default=0.0)
    p.add_argument("--out", default="pulse_intensity.csv")
    p.set_defaults(func=cmd_pulse_intensity)

    p = sub.add_parser("constants", help="derived thermal constants")
    _add_temperature(p)
    p.add_argument("--out", help="write the table as JSON here")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("reproduce-paper", help="run every computation into one directory")
    _add_temperature(p)
    p.add_argument("--out-dir", help="default: lumen_mix_run_<UTC timestamp>")
    p.add_argument("--quick", action="store_true", help="coarser field grids")
    p.set_defaults(func=cmd_reproduce_paper)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "temperature") and not (args.temperature > 0 and math.isfinite(args.temperature)):
            raise UsageError("--temperature must be positive and finite")
        thread_count()  # validates LUMEN_MIX_THREADS
        return args.func(args)
    except Infeasible as exc:
        print(f"lumen-mix: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (QuadratureError, NNLSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lumen-mix: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, OutOfRangeError, ValueError) as exc:
        print(f"lumen-mix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lumen-mix: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
