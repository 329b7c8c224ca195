"""``bo`` command-line entry point.

    bo spectrum|evolve|resolve|xcheck|identities --config FILE --out DIR [--seed N]

Exit codes: 0 when every check passes, 1 on a numerical check failure or a
hard numerical error, 2 on invalid input.  Outputs are written only after
the scenario has been validated and the run has finished.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from importlib import resources

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .evolution import (
    log_time_grid,
    omega_bound,
    pi_u,
    pole_dynamics,
    resolution_residual,
    trajectory_rows,
    u_field,
)
from .exceptions import BOError, IntegrationError, ParameterError, UnsupportedMultiplicityError
from .lax_spectrum import (
    LaxSystem,
    build_system,
    g_orthonormality_defect,
    hermitian_defect,
    impinfty_residuals,
    lax_matrix_by_projection,
    lax_matrix_closed_form,
    monotonicity_violation,
    solve_spectrum,
    spectrum_rows,
    verify_xstarphi,
    wu_residuals,
)
from .outputs import COLUMNS, FORMAT_VERSION, OutputSet
from .pde_xcheck import (
    PeriodicGrid,
    SolverConfig,
    compare_to_explicit,
    integrate,
    load,
    drift_self_test,
)
from .rational_hardy import l2_norm_sq
from .soliton_model import SolitonParams, cauchy_tail, pi_profile, profile_eval

log = logging.getLogger("bolab")

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2
COMMANDS = ("spectrum", "evolve", "resolve", "xcheck", "identities")
IDENTITY_TOL = 1e-9
CAUCHY_TOL = 1e-10
DRIFT_TOL = 0.01
CONSERVATION_TOL = 1e-8


class InputError(Exception):
    """Invalid command line or scenario; maps to exit code 2."""


def schema() -> dict:
    return json.loads(resources.files("bolab").joinpath("scenario.schema.json").read_text())


def _field_path(err) -> str:
    out = ""
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def read_scenario(path) -> tuple[dict, str]:
    """Parse and validate a scenario file; returns ``(scenario, sha256 of the raw bytes)``."""
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text") from exc
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{path}: {_field_path(e)}: {e.message}" for e in errors]
        raise InputError("\n".join(lines))
    return data, hashlib.sha256(raw).hexdigest()


def _check(name, value, tol, passed=None):
    value = float(value)
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": value, "tolerance": float(tol), "passed": ok}


def _params(scn) -> SolitonParams:
    return SolitonParams.from_dict(scn["params"])


def _spectral_checks(sys: LaxSystem, spec, label=""):
    lhs = float(np.sum(2 * np.pi * np.abs(spec.lambdas)))
    rhs = float(sys.norm_sq().real)
    tag = f"[N={sys.N}]" if label else ""
    return [
        _check(f"plancherel{tag}", abs(lhs - rhs) / rhs, IDENTITY_TOL),
        _check(f"wu{tag}", np.max(wu_residuals(spec)), IDENTITY_TOL),
        _check(f"im_p_infty{tag}", np.max(impinfty_residuals(spec)), IDENTITY_TOL),
    ]


def cmd_spectrum(scn, out: OutputSet, rng):
    opts = scn.get("spectrum", {})
    params = _params(scn)
    sweep = sorted(set(opts.get("n_sweep", [params.N])))
    if sweep[-1] > params.N:
        raise InputError(f"spectrum.n_sweep entry {sweep[-1]} exceeds N = {params.N}")
    precision = opts.get("precision", "auto")
    rows, checks = [], []
    for n in sweep:
        sub = params.truncate(n)
        sys = build_system(sub)
        spec = solve_spectrum(sys, precision)
        rows += spectrum_rows(sys, spec)
        checks += _spectral_checks(sys, spec, label=len(sweep) > 1)
    out.csv("spectrum.csv", "spectrum", rows)
    mono = []
    for n1, n2 in zip(sweep, sweep[1:]):
        v = monotonicity_violation(params, n1, n2)
        mono.append({"N1": n1, "N2": n2, "max_increase": v, "monotone": v <= 1e-10})
        checks.append(_check(f"monotonicity[{n1}->{n2}]", max(v, 0.0), 1e-10))
    out.csv("monotonicity.csv", "monotonicity", mono)
    return checks, {"sweep": sweep}


def _x_grid(opts, spec, t_max):
    lo = opts.get("x_min", -20.0)
    hi = opts.get("x_max", 20.0 + float(spec.velocities.max()) * t_max)
    if not hi > lo:
        raise InputError("evolve.x_max must exceed evolve.x_min")
    return np.linspace(lo, hi, opts.get("x_points", 2001))


def cmd_evolve(scn, out: OutputSet, rng):
    opts = scn.get("evolve", {})
    params = _params(scn)
    sys = build_system(params)
    spec = solve_spectrum(sys)
    times = sorted(set(opts.get("times", [0.0, 1.0, 2.0, 5.0, 10.0])))
    snaps = sorted(set(opts.get("snapshot_times", times)))
    x = _x_grid(opts, spec, max(snaps))
    index = {}
    for i, t in enumerate(snaps):
        name = f"snapshots/u_{i:03d}.csv"
        u = profile_eval(params, x) if t == 0 else u_field(sys, t, x)
        out.csv(name, "field", [{"x": a, "u": b} for a, b in zip(x, u)])
        index[name] = t
    states = [pole_dynamics(sys, t) for t in times]
    out.csv("trajectory.csv", "trajectory", trajectory_rows(states))
    unavailable = [st.t for st in states if not st.available]

    n = opts.get("omega_samples", 1000)
    ts = rng.uniform(0, opts.get("omega_t_max", 1e4), n)
    zs = rng.uniform(-50, 50, n) + 1j * opts.get("omega_im_z_max", 10.0) * (1 - rng.uniform(0, 1, n))
    vals = np.array([abs(pi_u(sys, t, z)) for t, z in zip(ts, zs)])
    bound = omega_bound(sys, zs) if n else np.array([])
    out.csv(
        "omega_audit.csv",
        "omega_audit",
        [{"t": t, "re_z": z.real, "im_z": z.imag, "abs_pi_u": v, "bound": b} for t, z, v, b in zip(ts, zs, vals, bound)],
    )
    violations = int(np.sum(vals - bound > 1e-12))
    checks = [_check("omega_bound_violations", violations, 0)]
    info = {"snapshots": index, "pole_decomposition_unavailable": unavailable}
    if n:
        info["omega_max_ratio"] = float(np.max(vals / bound))
    return checks, info


def cmd_resolve(scn, out: OutputSet, rng):
    opts = scn.get("resolve", {})
    params = _params(scn)
    sys = build_system(params)
    spec = solve_spectrum(sys)
    times = sorted(set(opts.get("times", log_time_grid().tolist())))
    n_sols = sorted(set(opts.get("n_sol", [params.N])))
    if n_sols[-1] > params.N:
        raise InputError(f"resolve.n_sol entry {n_sols[-1]} exceeds N = {params.N}")
    s_values = sorted(set(opts.get("s", [])))
    rows, last, fallback = [], {}, set()
    for k in n_sols:
        for t in times:
            rep = resolution_residual(sys, spec, k, t, s_values)
            if rep.fallback:
                fallback.add(t)
            base = {
                "t": t,
                "N_sol": k,
                "l2_residual_sq_pi": rep.l2_residual_sq,
                "tail_sum_pi": rep.tail_sum,
                "linf_residual": rep.linf_residual,
            }
            if s_values:
                rows += [dict(base, s=s, hs_residual=rep.hs_residual[float(s)]) for s in s_values]
            else:
                rows.append(dict(base, s="", hs_residual=""))
            last[k] = rep
    out.csv("residuals.csv", "residuals", rows)
    norm = float(sys.norm_sq().real)
    table = []
    for k, rep in last.items():
        # with nothing left in the tail the residual is compared to ||Pi u0||^2
        ref = rep.tail_sum if rep.tail_sum > 0 else norm
        table.append(
            {"N_sol": k, "t": rep.t, "l2_residual_sq_pi": rep.l2_residual_sq, "tail_sum_pi": rep.tail_sum, "ratio": rep.l2_residual_sq / ref}
        )
    out.csv("resolution_table.csv", "resolution_table", table)
    return [], {"final_time": times[-1], "norm_sq_pi_u0": norm, "fallback_times": sorted(fallback)}


def _self_convergence(params, grid, base_dt, t_end):
    """Temporal self-convergence order from runs at dt, dt/2, dt/4."""
    if t_end <= 0:
        return None
    uh0 = load(grid, profile_eval(params, grid.x))
    finals = []
    for level in range(3):
        cfg = SolverConfig(t_end / max(1, round(t_end / (base_dt / 2**level))), t_end)
        res = integrate(uh0, grid, cfg, [t_end])
        finals.append(np.fft.ifft(res[max(res)]).real)
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    if e2 == 0 or e1 == 0:
        return float("nan")
    return float(np.log2(e1 / e2))


def cmd_xcheck(scn, out: OutputSet, rng):
    opts = scn.get("xcheck", {})
    params = _params(scn)
    grid = PeriodicGrid(opts.get("period", 400.0), opts.get("modes", 4096))
    t_end = opts.get("t_end", 5.0)
    dealias = opts.get("dealias", True)
    if "dt" in opts:
        cfg = SolverConfig(opts["dt"], t_end, dealias)
    else:
        cfg = SolverConfig.for_grid(grid, t_end, opts.get("dt_fraction", 0.25), dealias=dealias)
    cfg.check(grid)
    checkpoints = opts.get("checkpoints")
    if checkpoints is not None and max(checkpoints, default=0) > t_end:
        raise InputError("xcheck.checkpoints must not exceed t_end")

    drift = drift_self_test()
    checks = [_check("one_soliton_drift", abs(drift - 0.5), DRIFT_TOL)]
    res = compare_to_explicit(params, grid, cfg, checkpoints)
    tol = opts.get("tolerance", 1e-3 if params.N == 1 else 5e-3)
    checks += [
        _check("max_rel_l2_error", res.max_error, tol),
        _check("mass_drift", res.mass_drift, CONSERVATION_TOL),
        _check("l2_drift", res.l2_drift, CONSERVATION_TOL),
    ]
    out.csv("errors.csv", "xcheck_errors", [{"t": t, "rel_l2_error": e} for t, e in zip(res.times, res.errors)])
    index = {}
    for i, t in enumerate(res.times):
        u_num, u_exp = res.snapshots[t]
        name = f"snapshots/xcheck_{i:03d}.csv"
        out.csv(
            name,
            "xcheck_snapshot",
            [{"x": a, "u_numeric": b, "u_explicit": c, "diff": b - c} for a, b, c in zip(grid.x, u_num, u_exp)],
        )
        index[name] = t
    order = _self_convergence(params, grid, cfg.dt * 4, opts.get("convergence_t_end", 0.5))
    summary = {
        "period": grid.period,
        "modes": grid.modes,
        "dt": cfg.dt,
        "t_end": t_end,
        "dealias": dealias,
        "errors": [{"t": t, "rel_l2_error": e} for t, e in zip(res.times, res.errors)],
        "max_rel_l2_error": res.max_error,
        "mass_drift": res.mass_drift,
        "l2_drift": res.l2_drift,
        "drift_self_test_displacement": drift,
        "temporal_convergence_order": order,
        "snapshots": index,
    }
    out.json("summary.json", summary)
    return checks, {"snapshots": index}


def _corrupt(sys: LaxSystem) -> LaxSystem:
    B = sys.B.copy()
    if sys.N > 1:
        B[0, 1] += 1e-3
    else:
        B[0, 0] += 1e-3j
    return LaxSystem(sys.params, sys.G, B, sys.D, sys.ones)


def cmd_identities(scn, out: OutputSet, rng):
    opts = scn.get("identities", {})
    params = _params(scn)
    sys = build_system(params)
    mode = opts.get("test_mode", "none")
    if mode == "corrupt_lax":
        sys = _corrupt(sys)
    checks = [_check("gb_hermitian", hermitian_defect(sys), 1e-10)]
    if mode == "none":
        B2 = lax_matrix_by_projection(params)
        B1 = lax_matrix_closed_form(params)
        checks.append(_check("lax_projection_vs_closed_form", np.abs(B1 - B2).max() / np.abs(B1).max(), 1e-10))
    pairs = [(m, n) for n in range(1, params.N + 1) for m in range(n)]
    k = min(opts.get("cauchy_pairs", 20), len(pairs))
    worst = 0.0
    for i in rng.choice(len(pairs), size=k, replace=False) if k else []:
        m, n = pairs[i]
        diff = pi_profile(params.truncate(n))
        if m:
            diff = diff - pi_profile(params.truncate(m))
        direct = l2_norm_sq(diff)
        closed = cauchy_tail(params, m, n)
        worst = max(worst, abs(direct - closed) / abs(closed))
    checks.append(_check("cauchy", worst, CAUCHY_TOL))
    if not checks[0]["passed"]:
        # a non-Hermitian G B has no self-adjoint spectrum to test
        return checks, {"test_mode": mode}
    spec = solve_spectrum(sys)
    checks += _spectral_checks(sys, spec)
    xs = max(verify_xstarphi(sys, spec, j) for j in range(spec.N))
    checks.append(_check("xstarphi", xs, IDENTITY_TOL))
    checks.append(_check("g_orthonormality", g_orthonormality_defect(sys, spec), IDENTITY_TOL))
    out.csv("spectrum.csv", "spectrum", spectrum_rows(sys, spec))
    return checks, {"test_mode": mode}


HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "resolve": cmd_resolve,
    "xcheck": cmd_xcheck,
    "identities": cmd_identities,
}


def _threads() -> int | None:
    raw = os.environ.get("BO_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InputError(f"BO_THREADS must be a positive integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bo", description="Benjamin-Ono multisoliton lab")
    ap.add_argument("command", choices=COMMANDS + ("schema",))
    ap.add_argument("--config", help="scenario JSON file")
    ap.add_argument("--out", help="output directory (defaults to the scenario's output_dir)")
    ap.add_argument("--seed", type=int, help="seed for randomized samples (overrides the scenario)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="bo: %(message)s")
    if args.command == "schema":
        sys.stdout.write(json.dumps(schema(), indent=2) + "\n")
        return EXIT_OK
    try:
        if not args.config:
            raise InputError("--config is required")
        scn, digest = read_scenario(args.config)
        out_dir = args.out or scn.get("output_dir")
        if not out_dir:
            raise InputError("--out is required when the scenario has no output_dir")
        if args.seed is not None and args.seed < 0:
            raise InputError("--seed must be nonnegative")
        seed = args.seed if args.seed is not None else scn.get("seed", 0)
        threads = _threads()
        _params(scn)
    except (InputError, ParameterError, UnsupportedMultiplicityError) as exc:
        print(f"bo: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    outputs = OutputSet()
    started = datetime.now(timezone.utc).isoformat()
    clock = time.perf_counter()
    manifest = {
        "tool": "bo",
        "version": __version__,
        "format_version": FORMAT_VERSION,
        "command": args.command,
        "scenario": scn.get("name", ""),
        "scenario_sha256": digest,
        "seed": seed,
        "threads": threads,
        "started": started,
    }
    error = None
    try:
        with threadpool_limits(limits=threads):
            checks, info = HANDLERS[args.command](scn, outputs, np.random.default_rng(seed))
    except (InputError, ParameterError, UnsupportedMultiplicityError) as exc:
        print(f"bo: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrationError as exc:
        error = f"{type(exc).__name__}: {exc} (last valid time {exc.last_valid_time})"
    except (BOError, np.linalg.LinAlgError, FloatingPointError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    if error is not None:
        outputs = OutputSet()
        checks, info = [], {}
    manifest["wall_clock_s"] = time.perf_counter() - clock
    manifest["error"] = error
    manifest["checks"] = checks
    manifest["info"] = info
    manifest["files"] = {
        name: {"kind": _kind(name), "columns": COLUMNS.get(_kind(name))} for name in sorted(outputs.files)
    }
    passed = error is None and all(c["passed"] for c in checks)
    manifest["status"] = "pass" if passed else "fail"
    outputs.json("manifest.json", manifest)
    outputs.commit(out_dir)
    for c in checks:
        log.info("%s %s: %.3e (tol %.1e)", "PASS" if c["passed"] else "FAIL", c["name"], c["value"], c["tolerance"])
    if not passed:
        failed = [c["name"] for c in checks if not c["passed"]]
        print(f"bo: numerical failure: {error or ', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _kind(name: str) -> str:
    if name.startswith("snapshots/u_"):
        return "field"
    if name.startswith("snapshots/xcheck_"):
        return "xcheck_snapshot"
    return {
        "spectrum.csv": "spectrum",
        "monotonicity.csv": "monotonicity",
        "trajectory.csv": "trajectory",
        "omega_audit.csv": "omega_audit",
        "residuals.csv": "residuals",
        "resolution_table.csv": "resolution_table",
        "errors.csv": "xcheck_errors",
    }.get(name, "json")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
