"""``kolmo`` command line.

Exit codes: 0 success, 2 bad config or input, 3 the solver produced NaN/inf,
4 a tolerance or pass/fail check failed.
"""

import argparse
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import io
from .diagnostics import (
    SWEEP_GRID,
    _alpha_sq,
    counterexample_check,
    enhanced_damping_sweep,
    exact_solution_error,
    rage_time_average,
)
from .errors import InvalidConfig, KolmoError, NonFinite
from .exact import RemarkCounterexample, eval_exact, exact_from_dict, validate
from .integrator import StepperConfig, integrate
from .models import ModelSpec
from .spectral import TorusConfig, to_physical

EXIT_OK, EXIT_CONFIG, EXIT_NONFINITE, EXIT_TOLERANCE = 0, 2, 3, 4

EXACT_TOL = 1e-6
STATIONARY_TOL = 1e-10


class _Run:
    """Collects output files and writes the manifest at the end."""

    def __init__(self, command, out, config, seed):
        self.command, self.out, self.config, self.seed = command, Path(out), config, seed
        self.files = []
        self.started = _now()
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, *parts):
        return self.out.joinpath(*parts)

    def add(self, p):
        self.files.append(Path(p))
        return p

    def finish(self):
        return io.write_manifest(self.out, self.command, self.config, self.seed,
                                 self.started, _now(), self.files, __version__)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _out(args, name):
    return Path(args.out) if args.out else io.default_out_dir(name)


def _config(args, parse):
    """Load ``--config`` and run ``parse`` on it, anchoring errors to the file."""
    data, text = io.load_json(args.config)
    try:
        return data, parse(data)
    except (KolmoError, ValueError, TypeError, Warning) as exc:
        raise io.anchored(args.config, text, exc) from None


def _write_traj_series(run, name, series):
    run.add(io.write_timeseries(run.path(name), series["t"], series["l2"], series["x"],
                                series["gradx2"]))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    data, cfg = _config(args, lambda d: io.parse_simulation(d, args.seed))
    run = _Run("simulate", _out(args, "simulate"), data, cfg.seed)
    traj = integrate(cfg.model, cfg.initial, cfg.stepper, checkpoints=cfg.snapshots)
    run.add(io.write_timeseries(run.path("timeseries.csv"), traj.track_t, traj.l2, traj.x,
                                traj.gradx2))
    for t in cfg.snapshots:
        w = traj.state_at(t)
        run.add(io.write_field(run.path("fields", io.time_label(t) + ".csv"), w))
    summary = {
        "model": cfg.model.to_dict(),
        "grid": cfg.grid.to_dict(),
        "dt": cfg.stepper.dt,
        "t_end": cfg.stepper.t_end,
        "steps": traj.steps,
        "snapshots": list(cfg.snapshots),
        "final_l2": float(traj.l2[-1]),
    }
    if cfg.exact is not None:
        errs = {}
        for t in cfg.snapshots:
            ref = to_physical(eval_exact(cfg.exact, t, cfg.grid)).values
            got = to_physical(traj.state_at(t)).values
            errs[io.time_label(t)] = float(abs(got - ref).max())
        summary["exact"] = cfg.exact.to_dict()
        summary["snapshot_max_abs_error"] = errs
    run.add(io.write_json(run.path("summary.json"), summary))
    run.finish()
    print(f"simulate: {traj.steps} steps to t={cfg.stepper.t_end}, outputs in {run.out}")
    return EXIT_OK


def _parse_exact_doc(d):
    body = d.get("exact", None)
    if body is None:
        body = {k: v for k, v in d.items() if k not in ("schema_version", "grid", "dt", "t_end")}
    spec = exact_from_dict(body)
    problems = validate(spec)
    if problems:
        p = problems[0]
        raise InvalidConfig(p.code, p.message)
    g = io._only(d.get("grid") or {}, {"nx", "ny"}, "grid")
    grid = spec.grid(io._number(g, "nx", 128, int), io._number(g, "ny", 128, int))
    return spec, grid, io._number(d, "dt", 0.01), d.get("t_end")


def cmd_verify_exact(args):
    data, (spec, grid, dt, t_cfg) = _config(args, _parse_exact_doc)
    t_end = args.t_end if args.t_end is not None else (t_cfg if t_cfg is not None else 50.0)
    try:
        StepperConfig(dt, t_end)
    except InvalidConfig as exc:
        print(f"verify-exact: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = _Run("verify-exact", _out(args, "verify-exact"), data, None)
    rep = exact_solution_error(spec, t_end, grid, dt)
    tr = rep.trajectory
    run.add(io.write_timeseries(run.path("timeseries.csv"), tr.track_t, tr.l2, tr.x, tr.gradx2))
    ok = rep.max_rel_error < EXACT_TOL and rep.stationarity < STATIONARY_TOL
    report = dict(rep.to_dict(), spec=spec.to_dict(), grid=grid.to_dict(),
                  tolerances={"error": EXACT_TOL, "stationarity": STATIONARY_TOL}, passed=ok)
    run.add(io.write_json(run.path("report.json"), report))
    run.finish()
    print(f"max relative L2 error {rep.max_rel_error:.3e} (at t={rep.worst_time:g}), "
          f"stationarity residual {rep.stationarity:.3e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_TOLERANCE


_SWEEP_KEYS = {"schema_version", "variant", "a", "tau", "delta", "nus", "seed", "alpha", "grid",
               "dt", "nonlinear_amp_rule", "k2_max", "scale"}


def _parse_sweep(d, seed):
    io._only(d, _SWEEP_KEYS, "config")
    nus = d.get("nus")
    if not (isinstance(nus, list) and nus and all(isinstance(v, (int, float)) and v > 0 for v in nus)):
        raise InvalidConfig("nus", "must be a nonempty list of positive viscosities")
    if any(b >= a for a, b in zip(nus, nus[1:])):
        raise InvalidConfig("nus", "must be strictly decreasing")
    alpha = io._number(d, "alpha", 2.0)
    g = io._only(d.get("grid") or {}, {"nx", "ny"}, "grid")
    grid = TorusConfig(alpha=alpha, nx=io._number(g, "nx", SWEEP_GRID["nx"], int),
                       ny=io._number(g, "ny", SWEEP_GRID["ny"], int))
    variant = d.get("variant")
    a = io._number(d, "a", 0, int)
    ModelSpec(variant, a=a, nu=nus[0])
    dt = d.get("dt")
    return dict(
        variant=variant, a=a, tau=io._number(d, "tau", 1.0), delta=io._number(d, "delta", 0.5),
        nus=[float(v) for v in nus],
        seed=int(seed if seed is not None else io._number(d, "seed", 0, int)),
        nonlinear_amp_rule=bool(d.get("nonlinear_amp_rule", True)),
        grid=grid, dt=None if dt is None else io._number(d, "dt"),
        k2_max=io._number(d, "k2_max", 16.0), scale=io._number(d, "scale", 1.0),
    )


def cmd_sweep(args):
    data, kw = _config(args, lambda d: _parse_sweep(d, args.seed))
    run = _Run("sweep", _out(args, "sweep"), data, kw["seed"])
    rep = enhanced_damping_sweep(**kw, workers=args.workers, keep_series=True)
    for nu, series in zip(rep.nus, rep.series):
        _write_traj_series(run, f"runs/nu_{nu:.10g}.csv", series)
    run.add(io.write_json(run.path("report.json"), rep.to_dict()))
    run.finish()
    for nu, r in zip(rep.nus, rep.ratios):
        print(f"nu={nu:<10g} ratio={r:.6e}")
    print(f"monotone={rep.monotone} below_delta={rep.below_delta}")
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def _parse_counterexample(args):
    d = {}
    if args.config:
        d, _ = io.load_json(args.config)
        io._only(d, {"schema_version", "d", "alpha", "tau", "nus", "grid", "dt"}, "config")
    nus = args.nu or d.get("nus") or [1e-2]
    g = d.get("grid") or {}
    return dict(
        d=args.d if args.d is not None else float(d.get("d", 1.0)),
        alpha=args.alpha if args.alpha is not None else float(d.get("alpha", 2.0)),
        tau=args.tau if args.tau is not None else float(d.get("tau", 1.0)),
        nus=[float(v) for v in nus],
        grid=(int(g.get("nx", 16)), int(g.get("ny", 16))),
        dt=float(d.get("dt", 0.01)),
    ), d


def cmd_counterexample(args):
    try:
        kw, data = _parse_counterexample(args)
    except (KolmoError, ValueError, TypeError) as exc:
        print(f"counterexample: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = _Run("counterexample", _out(args, "counterexample"), dict(kw, grid=list(kw["grid"])), None)
    reports = []
    for nu in kw["nus"]:
        spec = RemarkCounterexample(nu=nu, alpha_sq=_alpha_sq(kw["alpha"]), d=kw["d"])
        rep = counterexample_check(kw["d"], kw["alpha"], kw["tau"], nu,
                                   grid=spec.grid(*kw["grid"]), dt=kw["dt"])
        reports.append(rep)
        _write_traj_series(run, f"runs/nu_{nu:.10g}.csv", rep.series)
        print(f"nu={nu:g} measured={rep.measured_ratio:.10e} predicted={rep.predicted_ratio:.10e} "
              + " ".join(f"{k}={v}" for k, v in rep.checks.items() if v is not None))
    ok = all(r.passed for r in reports)
    run.add(io.write_json(run.path("report.json"),
                          {"runs": [r.to_dict() for r in reports], "passed": ok}))
    run.finish()
    return EXIT_OK if ok else EXIT_TOLERANCE


def _parse_rage(d, seed):
    io._only(d, {"schema_version", "grid", "initial", "lambda_cut", "T", "a", "dt", "seed"}, "config")
    g = io._only(d.get("grid") or {}, {"alpha", "nx", "ny"}, "grid")
    grid = TorusConfig(alpha=io._number(g, "alpha", 2.0), nx=io._number(g, "nx", 32, int),
                          ny=io._number(g, "ny", 32, int))
    if seed is None:
        seed = d.get("seed")
    w0 = io.initial_from(d.get("initial") or {"random": {}}, grid, seed=seed)
    T = d.get("T", [1.0])
    T = T if isinstance(T, list) else [T]
    for v in T:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            raise InvalidConfig("T", f"must be nonnegative times, got {v!r}")
    return dict(w0=w0, lambda_cut=io._number(d, "lambda_cut"), Ts=[float(v) for v in T],
                a=io._number(d, "a", 0, int), dt=io._number(d, "dt", 0.01), seed=seed)


def cmd_rage(args):
    data, kw = _config(args, lambda d: _parse_rage(d, args.seed))
    run = _Run("rage", _out(args, "rage"), data, kw["seed"])
    values = []
    for T in kw["Ts"]:
        v, series = rage_time_average(kw["w0"], kw["lambda_cut"], T, kw["a"], kw["dt"],
                                      return_series=True)
        values.append(v)
        run.add(io.write_csv(run.path(f"runs/T_{T:.10g}.csv"), ("t", "fraction"),
                             zip(series["t"], series["fraction"])))
        print(f"T={T:g} average low-mode fraction {v:.6e}")
    run.add(io.write_json(run.path("report.json"), {
        "lambda_cut": kw["lambda_cut"], "T": kw["Ts"], "a": kw["a"], "dt": kw["dt"],
        "values": values, "grid": kw["w0"].config.to_dict(),
    }))
    run.finish()
    return EXIT_OK


def _parse_export(d):
    io._only(d, {"schema_version", "exact", "grid", "times"}, "config")
    spec = exact_from_dict(d.get("exact") or {})
    problems = validate(spec)
    if problems:
        raise InvalidConfig(problems[0].code, problems[0].message)
    g = io._only(d.get("grid") or {}, {"nx", "ny"}, "grid")
    grid = spec.grid(io._number(g, "nx", 128, int), io._number(g, "ny", 128, int))
    times = d.get("times", [0.0])
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) and t >= 0 for t in times):
        raise InvalidConfig("times", "must be a list of nonnegative times")
    return spec, grid, [float(t) for t in times]


def cmd_export(args):
    data, (spec, grid, times) = _config(args, _parse_export)
    run = _Run("export", _out(args, "export"), data, None)
    for t in times:
        run.add(io.write_field(run.path("fields", io.time_label(t) + ".csv"),
                               eval_exact(spec, t, grid)))
    run.finish()
    print(f"export: {len(times)} analytic snapshots in {run.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="kolmo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kolmo {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON config file")
        sp.add_argument("--out", help="output directory (default $KOLMO_OUT_DIR/<command>)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--strict", action="store_true", help="treat warnings as errors")
        return sp

    common(sub.add_parser("simulate", help="integrate a configured model")).set_defaults(fn=cmd_simulate)
    v = common(sub.add_parser("verify-exact", help="solver against an exact solution"))
    v.add_argument("--t-end", type=float, default=None)
    v.set_defaults(fn=cmd_verify_exact)
    common(sub.add_parser("sweep", help="damping ratio across viscosities")).set_defaults(fn=cmd_sweep)
    c = common(sub.add_parser("counterexample", help="single tilted wave check"), False)
    c.add_argument("--d", type=float, default=None)
    c.add_argument("--alpha", type=float, default=None)
    c.add_argument("--tau", type=float, default=None)
    c.add_argument("--nu", type=float, action="append", default=None)
    c.set_defaults(fn=cmd_counterexample)
    common(sub.add_parser("rage", help="time-averaged low-mode fraction")).set_defaults(fn=cmd_rage)
    common(sub.add_parser("export", help="analytic snapshots of an exact solution")).set_defaults(fn=cmd_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error")
        try:
            code = args.fn(args)
        except io.ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except NonFinite as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            return EXIT_NONFINITE
        except Warning as exc:
            print(f"strict mode: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (KolmoError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    print(f"({time.perf_counter() - t0:.1f} s)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
