"""``fracrom`` command-line interface.

Subcommands
-----------
offline  train a ROM from a JSON config; writes ``rom.from``, ``report.json``
         and ``singular_values.csv`` to the config's ``output_dir``
online   evaluate a ROM at one ``(mu, alpha)``; writes a flat little-endian
         f64 file plus a ``.json`` sidecar
fom      full-order solve at one ``(mu, alpha)``; same outputs as ``online``
sweep    ROM vs full-order errors over the config's test set (``errors.csv``)
bench    wall-clock comparison of the offline/online stages (``timings.csv``)

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.
Worker threads are capped by ``--threads`` or, failing that, the
``FRACROM_THREADS`` environment variable.
"""
import argparse
import csv
import json
import logging
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import ConfigError, load_config
from .linalg import thin_svd
from .problems import gp_alpha
from .quadrature import training_rule
from .rom import (
    NAIVE_MAX_ENTRIES,
    ConvergenceError,
    TrainingPlan,
    fom_solve,
    naive_snapshots,
    offline_train,
    online_solve,
)
from .romfile import RomFileError, read_rom, write_rom

logger = logging.getLogger("fracrom")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

ROM_NAME = "rom.from"
ERRORS_HEADER = ["problem", "alpha", "mu_i", "rel_l2_error", "online_time_s", "fom_time_s"]
TIMINGS_HEADER = ["metric", "value", "unit"]

SKETCH_SPEEDUP_WARN = 3.0
ONLINE_SPEEDUP_WARN = 10.0


class NumericFailure(RuntimeError):
    pass


def _fmt(x):
    return repr(float(x))


def _ms(t):
    return round(float(t), 3)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_mu(text):
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=np.float64)
    except ValueError as exc:
        raise ConfigError("mu", f"expected comma-separated numbers, got {text!r}") from exc


def _alpha_from_args(args):
    if args.alpha is not None:
        alpha = args.alpha
    elif args.nu is not None:
        alpha = gp_alpha(args.nu, args.dim)
    else:
        raise ConfigError("alpha", "give --alpha or --nu")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha", f"must lie in (0, 1), got {alpha}")
    return alpha


def _output_dir(cfg, override=None):
    out = Path(override if override is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plan(cfg, problem):
    return TrainingPlan(
        problem_id=cfg.problem, samples=cfg.training_samples(problem), rank=cfg.rank, h=cfg.h,
        sketch_seed=cfg.sketch_seed, tol=cfg.tol, taus=cfg.taus, max_iter=cfg.max_iter,
        snapshot=cfg.snapshot,
    )


def _check_mu(mu, n_params):
    if mu.shape != (n_params,):
        raise ConfigError("mu", f"problem takes {n_params} parameter(s), got {mu.size}")


def _check_rom_matches(rom, cfg):
    meta = rom.meta
    for key, want in (("problem", cfg.problem), ("nx", cfg.nx), ("ny", cfg.ny)):
        if meta.get(key) != want:
            raise ConfigError(key, f"ROM was trained with {key}={meta.get(key)!r}, config has {want!r}")
    if cfg.problem == "gp":
        opts = meta.get("options", {})
        if opts.get("rhs") != cfg.rhs_mode or opts.get("seed") != cfg.rhs_seed:
            raise ConfigError("rhs", "ROM load vector was built with different rhs settings")


def _write_solution(out, y, sidecar):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.asarray(y, dtype="<f8").tofile(out)
    _write_json(out.with_suffix(out.suffix + ".json"), sidecar)


# -- commands --------------------------------------------------------------


def cmd_offline(args):
    cfg = load_config(args.config)
    problem = cfg.build_problem()
    plan = _plan(cfg, problem)
    out = _output_dir(cfg, args.out_dir)
    t0 = time.perf_counter()
    rom, report = offline_train(plan, problem)
    total = time.perf_counter() - t0
    if cfg.created is not None:
        rom.meta["created"] = cfg.created
    write_rom(out / ROM_NAME, rom)
    rep = report.to_dict()
    rep["timings"] = {k: _ms(v) for k, v in rep["timings"].items()}
    rep["timings"]["total_s"] = _ms(total)
    rep["rank"] = rom.rank
    rep["orthonormality_error"] = rom.orthonormality_error()
    _write_json(out / "report.json", rep)
    _write_csv(out / "singular_values.csv", ["index", "sigma"],
               [[i, _fmt(s)] for i, s in enumerate(report.singular_values)])
    print(f"wrote {out / ROM_NAME} (K={rom.rank}, {len(report.samples)} samples, {total:.3f} s)")
    return EXIT_OK


def cmd_online(args):
    rom = read_rom(args.rom)
    mu = _parse_mu(args.mu)
    _check_mu(mu, rom.meta["n_params"])
    alpha = _alpha_from_args(args)
    t0 = time.perf_counter()
    y = online_solve(rom, mu, alpha, h=args.h)
    dt = time.perf_counter() - t0
    if not np.all(np.isfinite(y)):
        raise NumericFailure("online solution is not finite")
    meta = rom.meta
    _write_solution(args.out, y, {
        "problem": meta["problem"],
        "grid": {"nx": meta["nx"], "ny": meta["ny"], "domain": meta["domain"],
                 "bc": meta["bc"], "n_dofs": meta["n_dofs"]},
        "mu": mu.tolist(),
        "alpha": alpha,
        "h": rom.h if args.h is None else args.h,
        "rank": rom.rank,
        "timing": {"online_s": max(_ms(dt), 0.001)},
    })
    print(f"wrote {args.out} ({y.size} values, {dt * 1e3:.1f} ms)")
    return EXIT_OK


def cmd_fom(args):
    cfg = load_config(args.config)
    problem = cfg.build_problem()
    mu = _parse_mu(args.mu)
    _check_mu(mu, problem.n_params)
    alpha = _alpha_from_args(args)
    h = args.h if args.h is not None else cfg.h
    t0 = time.perf_counter()
    y, res = fom_solve(problem, mu, alpha, h=h, tol=cfg.fom_tol, taus=cfg.taus,
                       max_iter=cfg.max_iter, full_output=True)
    dt = time.perf_counter() - t0
    mesh = problem.mesh
    _write_solution(args.out, y, {
        "problem": cfg.problem,
        "grid": {"nx": mesh.nx, "ny": mesh.ny, "domain": [mesh.ax, mesh.bx, mesh.ay, mesh.by],
                 "bc": problem.bc.value, "n_dofs": problem.n_dofs},
        "mu": mu.tolist(),
        "alpha": alpha,
        "h": mesh.h if h is None else h,
        "iterations": None if res is None else res.iterations,
        "timing": {"fom_s": max(_ms(dt), 0.001)},
    })
    print(f"wrote {args.out} ({y.size} values, {dt:.3f} s)")
    return EXIT_OK


def sweep_rows(rom, cfg, problem, test_mu, alphas):
    """One ``(row, error)`` pair per ``(mu, alpha)`` in alpha-major order."""
    out = []
    for alpha in alphas:
        for i, mu in enumerate(test_mu):
            t0 = time.perf_counter()
            y_rom = online_solve(rom, mu, alpha)
            t1 = time.perf_counter()
            y_fom = fom_solve(problem, mu, alpha, h=rom.h, tol=cfg.fom_tol, taus=cfg.taus,
                              max_iter=cfg.max_iter)
            t2 = time.perf_counter()
            nrm = np.linalg.norm(y_fom)
            err = np.linalg.norm(y_rom - y_fom) / nrm if nrm > 0 else np.linalg.norm(y_rom)
            if not np.isfinite(err):
                raise NumericFailure(f"non-finite error at alpha={alpha}, mu={mu.tolist()}")
            out.append((alpha, i, mu, float(err), t1 - t0, t2 - t1))
    return out


def cmd_sweep(args):
    cfg = load_config(args.config)
    rom = read_rom(args.rom)
    _check_rom_matches(rom, cfg)
    problem = cfg.build_problem()
    test_mu = cfg.test_set(problem)
    out = _output_dir(cfg, args.out_dir)
    results = sweep_rows(rom, cfg, problem, test_mu, cfg.alphas)
    p = problem.n_params
    header = ERRORS_HEADER if p == 1 else (
        ERRORS_HEADER[:2] + [f"mu_{k + 1}" for k in range(p)] + ERRORS_HEADER[3:])
    rows = []
    for alpha, _, mu, err, t_on, t_fom in results:
        rows.append([cfg.problem, _fmt(alpha)] + [_fmt(m) for m in mu]
                    + [_fmt(err), f"{t_on:.3f}", f"{t_fom:.3f}"])
    summary = {"problem": cfg.problem, "n_queries": len(results), "per_alpha": []}
    if results:
        errs = np.array([r[3] for r in results])
        rows.append(["summary", ""] + [""] * p
                    + [_fmt(errs.max()), f"{np.mean([r[4] for r in results]):.3f}",
                       f"{np.mean([r[5] for r in results]):.3f}"])
        summary.update(max_error=float(errs.max()), mean_error=float(errs.mean()))
        for alpha in cfg.alphas:
            e = np.array([r[3] for r in results if r[0] == alpha])
            summary["per_alpha"].append({"alpha": alpha, "max_error": float(e.max()),
                                         "mean_error": float(e.mean())})
    _write_csv(out / "errors.csv", header, rows)
    _write_json(out / "errors_summary.json", summary)
    if results:
        print(f"wrote {out / 'errors.csv'}: {len(results)} queries, max error {summary['max_error']:.3e}")
    else:
        print(f"wrote {out / 'errors.csv'}: no queries")
    return EXIT_OK


def bench_timings(cfg, n_queries=3):
    """Measured wall-clock timings; returns a list of ``(metric, value, unit)``."""
    problem = cfg.build_problem()
    plan = _plan(cfg, problem)
    rows = []
    t0 = time.perf_counter()
    rom, report = offline_train(plan, problem, keep_snapshots=True)
    rows.append(("offline_total", time.perf_counter() - t0, "s"))
    tm = report.timings
    rows.append(("snapshot_build", tm["snapshot_s"], "s"))
    t_sketch = tm["sketch_update_s"] + tm["compression_s"]
    rows.append(("sketch_compression", t_sketch, "s"))
    S = np.hstack(report.snapshots)
    report.snapshots = None
    t0 = time.perf_counter()
    thin_svd(S)
    t_svd = time.perf_counter() - t0
    del S
    rows.append(("svd_compression", t_svd, "s"))
    rows.append(("compression_speedup", t_svd / max(t_sketch, 1e-12), "x"))

    try:
        test_mu = cfg.test_set(problem)
    except ConfigError:
        test_mu = plan.samples
    test_mu = test_mu[:n_queries]
    alphas = cfg.alphas[:1] or [0.5]
    t_on, t_fom = [], []
    for mu in test_mu:
        for alpha in alphas:
            online_solve(rom, mu, alpha)  # warm-up
            t0 = time.perf_counter()
            online_solve(rom, mu, alpha)
            t_on.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            fom_solve(problem, mu, alpha, h=rom.h, tol=cfg.fom_tol, taus=cfg.taus,
                      max_iter=cfg.max_iter)
            t_fom.append(time.perf_counter() - t0)
    rows.append(("online_query", float(np.mean(t_on)), "s"))
    rows.append(("fom_query", float(np.mean(t_fom)), "s"))
    rows.append(("online_speedup", float(np.mean(t_fom)) / max(float(np.mean(t_on)), 1e-12), "x"))
    rows.append(("online_faster_all_queries", float(all(a <= b for a, b in zip(t_on, t_fom))), "bool"))

    n_shifts = len(training_rule(rom.h))
    if problem.n_dofs * n_shifts <= NAIVE_MAX_ENTRIES:
        t0 = time.perf_counter()
        naive_snapshots(problem, plan.samples[:1], rom.h)
        rows.append(("naive_per_sample", time.perf_counter() - t0, "s"))
    return rows


def cmd_bench(args):
    cfg = load_config(args.config)
    out = _output_dir(cfg, args.out_dir)
    rows = bench_timings(cfg, args.queries)
    values = {m: v for m, v, _ in rows}
    if values["compression_speedup"] < SKETCH_SPEEDUP_WARN:
        logger.warning("sketch compression only %.1fx faster than the SVD baseline (expected >= %gx)",
                       values["compression_speedup"], SKETCH_SPEEDUP_WARN)
    if values["online_speedup"] < ONLINE_SPEEDUP_WARN:
        logger.warning("online query only %.1fx faster than the full-order solve (expected >= %gx)",
                       values["online_speedup"], ONLINE_SPEEDUP_WARN)
    _write_csv(out / "timings.csv", TIMINGS_HEADER,
               [[m, f"{v:.3f}" if u == "s" else f"{v:.2f}", u] for m, v, u in rows])
    for m, v, u in rows:
        print(f"{m:28s} {v:12.4f} {u}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def _threads(value):
    if value is None:
        env = os.environ.get("FRACROM_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError("FRACROM_THREADS", f"expected an integer, got {env!r}") from None
    if value is not None and value < 1:
        raise ConfigError("threads", "must be >= 1")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/LAPACK worker threads (default: $FRACROM_THREADS)")
    common.add_argument("-v", "--verbose", action="store_true")

    def alpha_args(p):
        p.add_argument("--mu", required=True, help="comma-separated parameter values")
        p.add_argument("--alpha", type=float, help="fractional exponent in (0, 1)")
        p.add_argument("--nu", type=float, help="Matern smoothness; alpha = (nu + dim/2) / 2")
        p.add_argument("--dim", type=int, default=2)
        p.add_argument("--h", type=float, default=None, help="quadrature step override")

    parser = argparse.ArgumentParser(prog="fracrom", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offline", parents=[common], help="train a ROM")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None, help="override config output_dir")
    p.set_defaults(func=cmd_offline)

    p = sub.add_parser("online", parents=[common], help="evaluate a ROM")
    p.add_argument("--rom", required=True)
    alpha_args(p)
    p.add_argument("--out", default="online.f64")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("fom", parents=[common], help="full-order solve")
    p.add_argument("--config", required=True)
    alpha_args(p)
    p.add_argument("--out", default="fom.f64")
    p.set_defaults(func=cmd_fom)

    p = sub.add_parser("sweep", parents=[common], help="ROM error sweep over the test set")
    p.add_argument("--rom", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", parents=[common], help="offline/online timings")
    p.add_argument("--config", required=True)
    p.add_argument("--queries", type=int, default=3)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        limiter = threadpool_limits(limits=threads) if threads else nullcontext()
        with limiter:
            return args.func(args)
    except ConfigError as exc:
        print(f"fracrom: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RomFileError, OSError) as exc:
        print(f"fracrom: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericFailure, ConvergenceError, np.linalg.LinAlgError, FloatingPointError,
            ValueError, MemoryError) as exc:
        print(f"fracrom: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
