"""Command-line entry point.

    pulseforge <build-pt|simulate|grad-check|optimize|sweep|landscape|benchmark>
               --config <path-or-bundled-name> [--workers N] [--seed S] [--out DIR]

Outputs go to the run directory as JSON results and CSV data files; every
file embeds the config hash and the process-tensor hash.  Logs go to stderr.
Exit codes: 0 success, 2 validation error, 3 numerical error, 4 threshold
failure (grad-check).
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, tables
from .bath import QuadratureError
from .config import ConfigError, RunConfig, load_config
from ._linalg import CapacityError
from .contraction import (EvaluationContext, expectation, fidelity_adjoint,
                          propagate, reverse_gradient)
from .objective import CostSpec, total_cost, zpl_overlap
from .optimize import (Bounds, OptimizerConfig, differential_evolution,
                       lbfgs_box, random_search)
from .process_tensor import (NumericalError, PTCompatibilityError, PTFormatError,
                             build_process_tensor, pt_deserialize, pt_diagnostics,
                             pt_serialize, _build_hash)
from .system import build_propagator_sequence

log = logging.getLogger("pulseforge")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_THRESHOLD = 4

CSV_FORMAT = "pulseforge-csv v1"

# Shared state for forked worker processes (Linux fork start method).
_SHARED: dict = {}


# -- output helpers -----------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_csv(path: Path, kind: str, columns: list, rows: list,
              config_hash: str, pt_hash: str, attrs: dict | None = None) -> None:
    extra = "".join(f" {k}={v}" for k, v in (attrs or {}).items())
    with open(path, "w") as fh:
        fh.write(f"# {CSV_FORMAT} kind={kind} config={config_hash} "
                 f"pt={pt_hash}{extra}\n")
        fh.write(f"# columns: {','.join(columns)}\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    log.info("wrote %s", path)


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    log.info("wrote %s", path)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _provenance(cfg: RunConfig, pt_hash: str) -> dict:
    return {"config_hash": cfg.config_hash(), "pt_hash": pt_hash,
            "config_path": cfg.path, "version": __version__}


# -- process-tensor cache -----------------------------------------------------

def ensure_process_tensor(cfg: RunConfig, cache_dir: Path, force: bool = False):
    """Build the PT for this config or reuse a cache file with matching hash."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    build_cfg = cfg.pt_build_config()
    kernel = cfg.influence_kernel()
    want_hash = _build_hash(kernel, build_cfg)
    path = cache_dir / f"pt_{want_hash:016x}.ptc"
    if path.exists() and not force:
        pt = pt_deserialize(path)
        if pt.build_hash != want_hash:
            raise PTCompatibilityError(
                f"cache file {path} carries hash {pt.build_hash:016x}, "
                f"expected {want_hash:016x}")
        log.info("cache hit: %s", path)
        return pt, path, True
    t0 = time.monotonic()
    pt = build_process_tensor(kernel, build_cfg)
    pt_serialize(pt, path)
    log.info("built process tensor in %.1fs -> %s", time.monotonic() - t0, path)
    return pt, path, False


def _pt_hash_str(pt) -> str:
    return f"{pt.build_hash:016x}"


# -- evaluation helpers ---------------------------------------------------------

def _initial_rho(dim: int) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _evaluate(cfg: RunConfig, pt, seq=None, with_grad=False, free_params=None):
    grid = cfg.time_grid()
    ctx = EvaluationContext(pt=pt, rho0=_initial_rho(cfg.dim), grid=grid)
    seq = cfg.pulse_sequence() if seq is None else seq
    return total_cost(seq, cfg.system_spec(), ctx, cfg.cost_spec(),
                      free_params=free_params, with_grad=with_grad)


def _parallel_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- subcommands ----------------------------------------------------------------

def cmd_build_pt(cfg: RunConfig, args) -> int:
    pt, path, hit = ensure_process_tensor(cfg, args.cache_dir, force=args.force)
    diag = pt_diagnostics(pt)
    diag.update(_provenance(cfg, _pt_hash_str(pt)))
    diag["cache_hit"] = hit
    diag["cache_path"] = str(path)
    write_json(args.out_dir / f"pt_diagnostics_{cfg.config_hash()[:8]}.json", diag)
    print(path)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    grid = cfg.time_grid()
    ctx = EvaluationContext(pt=pt, rho0=_initial_rho(cfg.dim), grid=grid)
    seq = cfg.pulse_sequence()
    props = build_propagator_sequence(cfg.system_spec(), seq, grid, [])
    want_traj = bool(cfg.raw.get("output", {}).get("trajectory", False)) \
        or args.trajectory
    res = propagate(ctx, props, record_trajectory=want_traj)
    cost = cfg.cost_spec()
    fid = expectation(res.rho_final, cost.target)
    overlaps = [zpl_overlap(p, cost.overlap_policy, seq.chirp_enabled)
                for p in seq.pulses]
    payload = {
        "fidelity": fid,
        "populations": np.real(np.diag(res.rho_final)).tolist(),
        "zpl_overlaps": overlaps,
        "target": cfg.target_name,
        "temperature": cfg.temperature,
        **_provenance(cfg, _pt_hash_str(pt)),
    }
    out = args.out_dir / f"simulate_{cfg.config_hash()[:8]}.json"
    write_json(out, payload)
    if want_traj:
        d = cfg.dim
        cols = (["t"] + [f"pop_{i}" for i in range(d)]
                + [f"abs_coh_{i}{j}" for i in range(d) for j in range(i + 1, d)])
        rows = []
        for t, rho in zip(res.times, res.trajectory):
            row = [t] + [rho[i, i].real for i in range(d)]
            row += [abs(rho[i, j]) for i in range(d) for j in range(i + 1, d)]
            rows.append(row)
        write_csv(args.out_dir / f"trajectory_{cfg.config_hash()[:8]}.csv",
                  "trajectory", cols, rows, cfg.config_hash(), _pt_hash_str(pt))
    print(json.dumps({"fidelity": fid}))
    return EXIT_OK


def cmd_grad_check(cfg: RunConfig, args) -> int:
    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    grid = cfg.time_grid()
    ctx = EvaluationContext(pt=pt, rho0=_initial_rho(cfg.dim), grid=grid)
    seq = cfg.pulse_sequence()
    free = seq.free_parameters()
    sys_spec = cfg.system_spec()
    cost = cfg.cost_spec()
    props = build_propagator_sequence(sys_spec, seq, grid, free)
    rec = reverse_gradient(ctx, props, fidelity_adjoint(cost.target))
    x0 = seq.parameter_vector(free)

    def fwd(x):
        p = build_propagator_sequence(sys_spec, seq.with_values(free, x), grid, [])
        return expectation(propagate(ctx, p).rho_final, cost.target)

    rows = []
    n_fail = 0
    for a, (j, name) in enumerate(free):
        eps = args.fd_step * max(1.0, abs(x0[a]))
        xp, xm = x0.copy(), x0.copy()
        xp[a] += eps
        xm[a] -= eps
        fd = (fwd(xp) - fwd(xm)) / (2.0 * eps)
        near_zero = abs(fd) < 1e-8 and abs(rec.grad[a]) < 1e-8
        rel = abs(rec.grad[a] - fd) / max(abs(fd), 1e-8)
        status = "near-zero" if near_zero else (
            "ok" if rel <= args.threshold else "FAIL")
        if status == "FAIL":
            n_fail += 1
        rows.append([f"p{j + 1}.{name}", rec.grad[a], fd, rel, status])
        print(f"p{j + 1}.{name:14s} ad={rec.grad[a]:+.9e} fd={fd:+.9e} "
              f"rel={rel:.3e} {status}")
    write_csv(args.out_dir / f"grad_check_{cfg.config_hash()[:8]}.csv",
              "grad_check", ["parameter", "adjoint", "finite_difference",
                             "rel_err", "status"],
              rows, cfg.config_hash(), _pt_hash_str(pt),
              attrs={"threshold": args.threshold, "n_params": len(free)})
    print(f"{len(free)} parameters, {n_fail} failures")
    return EXIT_OK if n_fail == 0 else EXIT_THRESHOLD


def _optimize_once(cfg: RunConfig, pt, seed: int):
    grid = cfg.time_grid()
    ctx = EvaluationContext(pt=pt, rho0=_initial_rho(cfg.dim), grid=grid)
    seq0 = cfg.pulse_sequence()
    free = seq0.free_parameters()
    sys_spec = cfg.system_spec()
    cost_spec = cfg.cost_spec()
    bounds = cfg.bounds(seq0)
    ocfg = cfg.optimizer_config()

    def value_only(x):
        r = total_cost(seq0.with_values(free, x), sys_spec, ctx, cost_spec,
                       free_params=[], with_grad=False)
        return r.value

    def value_and_grad(x):
        r = total_cost(seq0.with_values(free, x), sys_spec, ctx, cost_spec,
                       free_params=free, with_grad=True)
        return r.value, r.grad

    if ocfg.warmup_kind == "random":
        warm = random_search(value_only, bounds, ocfg.warmup_random_budget, seed)
    elif ocfg.warmup_kind == "de":
        warm = differential_evolution(value_only, bounds, ocfg, seed)
    elif ocfg.warmup_kind == "none":
        warm = None
    else:
        raise ConfigError(f"unknown warmup kind {ocfg.warmup_kind!r}")
    x0 = warm.best_params if warm is not None \
        else seq0.parameter_vector(free)
    run = lbfgs_box(value_and_grad, x0, bounds, ocfg)
    final = total_cost(seq0.with_values(free, run.best_params), sys_spec, ctx,
                       cost_spec, free_params=[], with_grad=False)
    return warm, run, final, free, seq0


def cmd_optimize(cfg: RunConfig, args) -> int:
    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    seeds = [cfg.seed + 1000 * i for i in range(args.repeat)]
    results = []
    for seed in seeds:
        t0 = time.monotonic()
        warm, run, final, free, seq0 = _optimize_once(cfg, pt, seed)
        wall = time.monotonic() - t0
        params = {f"p{j + 1}.{name}": v for (j, name), v
                  in zip(free, run.best_params)}
        results.append({
            "seed": seed,
            "best_value": run.best_value,
            "fidelity": final.fidelity,
            "zpl_overlaps": final.overlaps,
            "penalty_total": final.penalty_total,
            "gradient_norm": run.gradient_norm_at_best,
            "warmup_best": None if warm is None else warm.best_value,
            "n_evaluations": run.n_evaluations
            + (0 if warm is None else warm.n_evaluations),
            "n_gradient_evaluations": run.n_gradient_evaluations,
            "wall_seconds": wall,
            "status": run.status,
            "best_params": params,
        })
        trace_rows = [[it["iteration"], it["value"], it["grad_norm"]]
                      for it in run.trace]
        write_csv(args.out_dir / f"optimize_trace_{cfg.config_hash()[:8]}"
                  f"_s{seed}.csv", "trace",
                  ["iteration", "value", "grad_norm"], trace_rows,
                  cfg.config_hash(), _pt_hash_str(pt), attrs={"seed": seed})
        log.info("seed %d: value %.6f (fidelity %.6f) in %.0fs",
                 seed, run.best_value, final.fidelity, wall)
    values = [r["fidelity"] for r in results]
    payload = {
        "runs": results,
        "mean_fidelity": statistics.fmean(values),
        "std_fidelity": statistics.pstdev(values) if len(values) > 1 else 0.0,
        "best_fidelity": max(values),
        **_provenance(cfg, _pt_hash_str(pt)),
    }
    write_json(args.out_dir / f"optimize_{cfg.config_hash()[:8]}.json", payload)
    print(json.dumps({"best_fidelity": max(values)}))
    return EXIT_OK


def _sweep_temperature(cfg: RunConfig, args):
    sweep = cfg.raw.get("sweep", {})
    values = sweep.get("values", list(tables.TEMPERATURES))
    params_from = sweep.get("params_from")
    species = cfg.target_name
    rows = []
    for temp in values:
        updates = {"bath": {"temperature": float(temp)}}
        if params_from in ("table2", "table3"):
            chirped = params_from == "table3"
            pulses = tables.two_pulse_row(species, int(temp), chirped=chirped)
            updates["pulses"] = pulses
            updates["chirp_enabled"] = chirped
        sub = cfg.with_updates(updates)
        pt, _, _ = ensure_process_tensor(sub, args.cache_dir)
        res = _evaluate(sub, pt)
        rows.append([temp, res.fidelity, 1.0 - res.fidelity, _pt_hash_str(pt)])
        log.info("T=%s K: fidelity %.6f", temp, res.fidelity)
    return ("temperature", ["temperature_K", "fidelity", "infidelity", "pt_hash"],
            rows, {"params_from": params_from or "config"})


def _sweep_phase(cfg: RunConfig, args):
    sweep = cfg.raw.get("sweep", {})
    n_points = int(sweep.get("points", 64))
    pulse_index = int(sweep.get("pulse_index", 2))
    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    base = cfg.pulses_raw()
    if not 1 <= pulse_index <= len(base):
        raise ConfigError(f"sweep.pulse_index {pulse_index} out of range")
    phis = 2.0 * np.pi * np.arange(n_points) / n_points

    def one(phi: float):
        pulses = [dict(p) for p in base]
        pulses[pulse_index - 1]["phase_phi"] = float(phi)
        res = _evaluate(cfg.with_updates({"pulses": pulses}), pt)
        return [phi, res.fidelity, 1.0 - res.fidelity]

    rows = _parallel_map(one, list(phis), args.workers)
    return ("phase", ["phi_rad", "fidelity", "infidelity"], rows,
            {"pulse_index": pulse_index, "pt": _pt_hash_str(pt)})


def _sweep_pulse_count(cfg: RunConfig, args):
    sweep = cfg.raw.get("sweep", {})
    values = [int(v) for v in sweep.get("values", [2, 3, 4, 5, 6])]
    species = cfg.target_name
    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    rows = []
    for n in values:
        pulses = tables.multipulse_row(species, n)
        res = _evaluate(cfg.with_updates({"pulses": pulses}), pt)
        rows.append([n, 4 * n - 1, res.fidelity, 1.0 - res.fidelity])
        log.info("N_p=%d: fidelity %.6f", n, res.fidelity)
    return ("pulse_count", ["n_pulses", "n_params", "fidelity", "infidelity"],
            rows, {"pt": _pt_hash_str(pt)})


def cmd_sweep(cfg: RunConfig, args) -> int:
    axis = args.axis or cfg.raw.get("sweep", {}).get("axis")
    if axis not in ("temperature", "phase", "pulse_count"):
        raise ConfigError(f"sweep axis must be temperature|phase|pulse_count, "
                          f"got {axis!r}")
    runner = {"temperature": _sweep_temperature, "phase": _sweep_phase,
              "pulse_count": _sweep_pulse_count}[axis]
    kind, columns, rows, attrs = runner(cfg, args)
    out = args.out_dir / f"sweep_{axis}_{cfg.config_hash()[:8]}.csv"
    write_csv(out, f"sweep_{kind}", columns, rows, cfg.config_hash(),
              attrs.pop("pt", "-"), attrs=attrs)
    print(out)
    return EXIT_OK


def _landscape_point(xy):
    """Worker body: evaluates one landscape grid point via fork-shared state."""
    cfg = _SHARED["cfg"]
    pt = _SHARED["pt"]
    (jx, fx), (jy, fy) = _SHARED["fields"]
    x, y = xy
    pulses = [dict(p) for p in cfg.pulses_raw()]
    pulses[jx][fx] = float(x)
    pulses[jy][fy] = float(y)
    res = _evaluate(cfg.with_updates({"pulses": pulses}), pt)
    return [x, y, res.fidelity]


def _parse_param_ref(ref: str, n_pulses: int):
    try:
        pulse, fieldname = ref.split(".")
        idx = int(pulse.lstrip("p")) - 1
    except ValueError as e:
        raise ConfigError(f"bad parameter reference {ref!r} "
                          f"(expected e.g. 'p2.theta_pi')") from e
    if not 0 <= idx < n_pulses:
        raise ConfigError(f"parameter reference {ref!r} out of range")
    if fieldname not in ("theta_pi", "sigma0", "delta0", "tau", "chirp_lambda",
                         "phase_phi"):
        raise ConfigError(f"unknown pulse field in {ref!r}")
    return idx, fieldname


def cmd_landscape(cfg: RunConfig, args) -> int:
    land = cfg.raw.get("landscape", {})
    ref_x = args.param_x or land.get("param_x", "p2.theta_pi")
    ref_y = args.param_y or land.get("param_y", "p2.delta0")
    nx = args.nx or int(land.get("nx", 21))
    ny = args.ny or int(land.get("ny", 21))
    n_pulses = len(cfg.pulses_raw())
    fx = _parse_param_ref(ref_x, n_pulses)
    fy = _parse_param_ref(ref_y, n_pulses)

    species = cfg.target_name

    def axis_range(fieldname, key):
        rng = land.get(key)
        if rng:
            return float(rng[0]), float(rng[1])
        from .config import SPECIES_BOUNDS
        sb = SPECIES_BOUNDS[species]
        if fieldname == "delta0" and species == "biexciton":
            return sb["delta0_red"]
        if fieldname in sb:
            return sb[fieldname]
        raise ConfigError(f"no default range for {fieldname}; set landscape.{key}")

    x_lo, x_hi = axis_range(fx[1], "range_x")
    y_lo, y_hi = axis_range(fy[1], "range_y")
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)

    pt, _, _ = ensure_process_tensor(cfg, args.cache_dir)
    _SHARED.update({"cfg": cfg, "pt": pt, "fields": (fx, fy)})
    points = [(float(x), float(y)) for x in xs for y in ys]
    rows = _parallel_map(_landscape_point, points, args.workers)
    out = args.out_dir / f"landscape_{cfg.config_hash()[:8]}.csv"
    write_csv(out, "landscape", ["x", "y", "fidelity"], rows,
              cfg.config_hash(), _pt_hash_str(pt),
              attrs={"param_x": ref_x, "param_y": ref_y, "nx": nx, "ny": ny})
    print(out)
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, args) -> int:
    bench = cfg.raw.get("benchmark", {})
    alphas = args.alphas or bench.get("alphas", [0.0027, 0.027, 0.27])
    repeats = int(bench.get("repeats", 5))
    rows = []
    for alpha in alphas:
        sub = cfg.with_updates({"bath": {"alpha": float(alpha)}})
        pt, _, _ = ensure_process_tensor(sub, args.cache_dir)
        grid = sub.time_grid()
        ctx = EvaluationContext(pt=pt, rho0=_initial_rho(sub.dim), grid=grid)
        seq = sub.pulse_sequence()
        free = seq.free_parameters()
        sys_spec = sub.system_spec()
        target = sub.cost_spec().target

        def time_median(fn):
            ts = []
            for _ in range(repeats):
                t0 = time.monotonic()
                fn()
                ts.append(time.monotonic() - t0)
            return statistics.median(ts)

        props = build_propagator_sequence(sys_spec, seq, grid, free)
        t_fwd = time_median(lambda: propagate(ctx, props))
        t_rev = time_median(
            lambda: reverse_gradient(ctx, props, fidelity_adjoint(target)))
        x0 = seq.parameter_vector(free)
        t0 = time.monotonic()
        for a in range(len(free)):
            for sgn in (1.0, -1.0):
                x = x0.copy()
                x[a] += sgn * 1e-5 * max(1.0, abs(x0[a]))
                p = build_propagator_sequence(sys_spec, seq.with_values(free, x),
                                              grid, [])
                propagate(ctx, p)
        t_fd = time.monotonic() - t0
        rows.append([alpha, t_fwd, t_rev, t_fd, max(pt.bonds)])
        log.info("alpha=%g: fwd %.3fs, reverse %.3fs, FD %.3fs, bond %d",
                 alpha, t_fwd, t_rev, t_fd, max(pt.bonds))
    out = args.out_dir / f"benchmark_{cfg.config_hash()[:8]}.csv"
    write_csv(out, "benchmark",
              ["alpha", "forward_s", "reverse_grad_s", "fd_grad_s", "max_bond"],
              rows, cfg.config_hash(), "-",
              attrs={"repeats": repeats, "n_params": len(cfg.pulses_raw()) * 4 - 1})
    print(out)
    return EXIT_OK


# -- driver -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulseforge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="config file path or bundled config name")
        p.add_argument("--out", dest="out_dir", type=Path, default=None,
                       help="output directory (default: config output.directory)")
        p.add_argument("--cache-dir", type=Path, default=None,
                       help="process-tensor cache directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p = sub.add_parser("build-pt", help="build and cache the process tensor")
    common(p)
    p.add_argument("--force", action="store_true", help="rebuild even on cache hit")

    p = sub.add_parser("simulate", help="propagate the configured pulse sequence")
    common(p)
    p.add_argument("--trajectory", action="store_true",
                   help="also write the per-step trajectory CSV")

    p = sub.add_parser("grad-check", help="adjoint gradient vs finite differences")
    common(p)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--fd-step", type=float, default=1e-5)

    p = sub.add_parser("optimize", help="warm-up plus box-constrained L-BFGS")
    common(p)
    p.add_argument("--repeat", type=int, default=1,
                   help="independent seeded repeats with summary statistics")

    p = sub.add_parser("sweep", help="sweep temperature, phase, or pulse count")
    common(p)
    p.add_argument("--axis", choices=["temperature", "phase", "pulse_count"],
                   default=None)

    p = sub.add_parser("landscape", help="2-D fidelity landscape grid")
    common(p)
    p.add_argument("--param-x", dest="param_x", default=None)
    p.add_argument("--param-y", dest="param_y", default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--ny", type=int, default=None)

    p = sub.add_parser("benchmark", help="forward/adjoint/finite-difference timing")
    common(p)
    p.add_argument("--alphas", type=float, nargs="*", default=None)
    return ap


COMMANDS = {
    "build-pt": cmd_build_pt,
    "simulate": cmd_simulate,
    "grad-check": cmd_grad_check,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "landscape": cmd_landscape,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_updates({"seed": int(args.seed)})
        out_section = cfg.raw.get("output", {})
        if args.out_dir is None:
            args.out_dir = Path(out_section.get("directory", "runs"))
        if args.cache_dir is None:
            args.cache_dir = Path(out_section.get("pt_cache", "pt_cache"))
        args.out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ValueError, PTCompatibilityError, PTFormatError,
            FileNotFoundError) as e:
        log.error("%s", e)
        return EXIT_VALIDATION
    except (NumericalError, QuadratureError, CapacityError,
            FloatingPointError) as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
