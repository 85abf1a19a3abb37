"""Command-line entry point: ``levypassage {simulate,check,table,meander-table}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error
(including unknown check ids and unsupported model/regime combinations),
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from . import asymptotics as A
from . import passage_sim as ps
from .config import KNOWN_CHECKS, ConfigError, ExperimentConfig, ModelBlock, load
from .levy_models import ConfigurationError, UnsupportedModelError, get_model
from .runner import DEFAULT_MODEL, THEOREM_MAP, RunContext, check_seed, run_check, stable_probe_model
from .stable_core import (StableParams, UnsupportedRegimeError, estimate_meander_densities,
                          positivity_from_beta)

log = logging.getLogger("levypassage")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
ALPHA_CHECKS = ("bridge", "meander_conv", "eq22")


class UsageError(Exception):
    pass


def _load_config(args):
    cfg = load(args.config) if args.config else ExperimentConfig()
    sim = cfg.sim
    if args.seed is not None:
        sim = replace(sim, master_seed=args.seed)
    if getattr(args, "workers", None):
        sim = replace(sim, worker_count=args.workers)
    out = cfg.output
    if args.out:
        out = replace(out, directory=args.out)
    return replace(cfg, sim=sim, output=out)


def _seed_entropy(ss):
    return {"entropy": [int(v) for v in np.atleast_1d(ss.entropy)], "spawn_key": list(ss.spawn_key)}


def _write_manifest(path, cfg, started, command, extra):
    man = {
        "command": command,
        "config_hash": cfg.hash(),
        "version": __version__,
        "master_seed": cfg.sim.master_seed,
        "worker_count": cfg.sim.worker_count,
        "wall_clock_s": round(time.time() - started, 3),
        "config": cfg.to_text(),
    }
    man.update(extra)
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    cfg = _load_config(args)
    m = get_model(args.model) if args.model else cfg.model.build()
    s = cfg.sim
    os.makedirs(cfg.output.directory, exist_ok=True)
    started = time.time()
    seeds = np.random.SeedSequence(s.master_seed).spawn(2)
    b = ps.simulate_passages(m, s.start_x, s.horizon, s.dt, s.n_paths, seeds[0],
                             probe_times=s.probe_times, kappa=s.epsilon, workers=s.worker_count)
    pass_path = os.path.join(cfg.output.directory, "passages.csv")
    b.to_csv(pass_path)
    files = [pass_path]
    summary = {"n_paths": b.n_paths, "fraction_crossed": b.fraction_crossed()}
    if s.n_excursions > 0:
        ex = ps.harvest_excursions(m, s.horizon, s.dt, s.probe_times, seeds[1],
                                   n_excursions=s.n_excursions, theta=s.theta, kappa=s.epsilon,
                                   workers=s.worker_count)
        ex_path = os.path.join(cfg.output.directory, "excursions.csv")
        ex.to_csv(ex_path)
        files.append(ex_path)
        summary["n_excursions"] = s.n_excursions
    _write_manifest(os.path.join(cfg.output.directory, "manifest.json"), cfg, started, "simulate",
                    {"model": m.name, "seeds": [_seed_entropy(x) for x in seeds], "files": files,
                     "summary": summary})
    print(f"wrote {', '.join(files)}")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# check


def _model_for(cid, args, cfg, have_config_model):
    if args.alpha is not None:
        if cid not in ALPHA_CHECKS:
            raise UsageError(f"--alpha applies to {ALPHA_CHECKS} only")
        return stable_probe_model(args.alpha, args.beta)
    if args.model:
        return get_model(args.model)
    if have_config_model:
        return cfg.model.build()
    return get_model(DEFAULT_MODEL[cid])


def _summary_table(reports):
    lines = [f"{'check':<14} {'model':<18} {'t':>8} {'x':>8} {'statistic':>12} {'target':>12} "
             f"{'ci':>10}  result"]
    for r in reports:
        lines.append(f"{r.check_id:<14} {r.model:<18} {_num(r.t):>8} {_num(r.x):>8} "
                     f"{_num(r.statistic):>12} {_num(r.target):>12} {_num(r.ci):>10}  "
                     f"{'pass' if r.passed else 'FAIL'}")
    return "\n".join(lines)


def _num(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.5g}"


def _tolerance(r):
    if not math.isnan(r.tolerance):
        return r.tolerance
    return A.N_SIGMA * r.ci / A.Z95 if not math.isnan(r.ci) else math.nan


def _json_num(v):
    return None if v is None or math.isnan(v) else float(v)


def cmd_check(args):
    cfg = _load_config(args)
    ids = list(args.id) if args.id else [c.id for c in cfg.checks]
    if not ids:
        raise UsageError("no check ids given (use --id or checks.ids)")
    for cid in ids:
        if cid not in KNOWN_CHECKS:
            raise UsageError(f"unknown check id {cid!r}; known: {', '.join(KNOWN_CHECKS)}")
    have_model = bool(args.config) and cfg.model != ModelBlock()
    ctx = RunContext(master_seed=cfg.sim.master_seed, workers=cfg.sim.worker_count,
                     scale=args.scale)
    os.makedirs(cfg.output.directory, exist_ok=True)
    started = time.time()
    reports, per_check = [], []
    for cid in ids:
        m = _model_for(cid, args, cfg, have_model)
        t0 = time.time()
        reps = run_check(cid, m, cfg.check(cid), ctx)
        reports += reps
        per_check.append({"id": cid, "model": m.name, "seed": _seed_entropy(
            check_seed(cfg.sim.master_seed, cid)), "rows": len(reps),
            "passed": all(r.passed for r in reps), "wall_clock_s": round(time.time() - t0, 3)})
    path = os.path.join(cfg.output.directory, "checks.csv")
    A.write_reports(reports, path)
    rows = [{"check_id": r.check_id, "passed": r.passed, "tolerance": _json_num(_tolerance(r)),
             "note": r.note} for r in reports]
    _write_manifest(os.path.join(cfg.output.directory, "manifest.json"), cfg, started, "check",
                    {"checks": per_check, "rows": rows, "files": [path]})
    print(_summary_table(reports))
    ok = all(r.passed for r in reports)
    print(f"\n{sum(r.passed for r in reports)}/{len(reports)} rows pass; wrote {path}")
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# table


def base_id(check_id):
    """Map a row id such as ``TS.7.shape`` or ``T2.6.flat`` to its check id."""
    best = ""
    for k in KNOWN_CHECKS:
        if (check_id == k or check_id.startswith(k + ".")) and len(k) > len(best):
            best = k
    return best or check_id


def theorem_table(reports, tolerances=None):
    """Rows (check, theorem, n_rows, result, details) in check-id order."""
    tolerances = tolerances or [None] * len(reports)
    groups = {}
    for r, tol in zip(reports, tolerances):
        groups.setdefault(base_id(r.check_id), []).append((r, tol))
    order = {k: i for i, k in enumerate(KNOWN_CHECKS)}
    out = []
    for cid in sorted(groups, key=lambda k: order.get(k, len(order))):
        rows = groups[cid]
        fails = []
        for r, tol in rows:
            if not r.passed:
                tol = _tolerance(r) if tol is None else tol
                fails.append(f"{r.check_id} t={_num(r.t)} x={_num(r.x)}: "
                             f"|stat-target|={_num(abs(r.statistic - r.target))} tol={_num(tol)}")
        out.append((cid, THEOREM_MAP.get(cid, ""), len(rows), "fail" if fails else "pass",
                    "; ".join(fails)))
    return out


def _table_markdown(rows):
    lines = ["| check | result | rows | theorem | failing rows |", "|---|---|---|---|---|"]
    for cid, thm, n, res, det in rows:
        lines.append(f"| {cid} | {res} | {n} | {thm} | {det} |")
    return "\n".join(lines) + "\n"


def cmd_table(args):
    cfg = _load_config(args)
    src = args.input or os.path.join(cfg.output.directory, "checks.csv")
    reports = A.read_reports(src) if os.path.exists(src) and os.path.getsize(src) else []
    tolerances = None
    man = os.path.join(os.path.dirname(src) or ".", "manifest.json")
    if os.path.exists(man):
        with open(man) as fh:
            data = json.load(fh)
        rows = data.get("rows", [])
        if len(rows) == len(reports):
            tolerances = [row.get("tolerance") for row in rows]
    table = theorem_table(reports, tolerances)
    out_dir = args.out or os.path.dirname(src) or "."
    os.makedirs(out_dir, exist_ok=True)
    md = _table_markdown(table)
    with open(os.path.join(out_dir, "theorem_table.md"), "w") as fh:
        fh.write(md)
    with open(os.path.join(out_dir, "theorem_table.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "theorem", "rows", "result", "failing_rows"])
        w.writerows([[c, t, n, r, d] for c, t, n, r, d in table])
    print(md, end="")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# meander-table


def cmd_meander_table(args):
    cfg = _load_config(args)
    if args.model:
        p = get_model(args.model).limit
    elif args.alpha is not None:
        p = StableParams(args.alpha, positivity_from_beta(args.alpha, args.beta))
    else:
        p = cfg.model.build().limit
    if p.alpha == 2.0:
        raise UsageError("alpha = 2 has the closed-form Rayleigh meander; no table needed")
    os.makedirs(cfg.output.directory, exist_ok=True)
    started = time.time()
    ss = np.random.SeedSequence(cfg.sim.master_seed)
    table = estimate_meander_densities(p, n_steps=args.n_steps, n_paths=args.n_paths,
                                       rng=np.random.default_rng(ss))
    path = os.path.join(cfg.output.directory, f"meander_a{p.alpha:g}_rho{p.rho:.6g}.csv")
    table.to_csv(path)
    _write_manifest(os.path.join(cfg.output.directory, "manifest.json"), cfg, started,
                    "meander-table", {"alpha": p.alpha, "rho": p.rho, "n_paths": args.n_paths,
                                      "n_steps": args.n_steps, "seeds": [_seed_entropy(ss)],
                                      "files": [path]})
    print(f"wrote {path}")
    return EXIT_PASS


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="levypassage", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI experiment file")
        p.add_argument("--model", help="registry model name (overrides the config model)")
        p.add_argument("--seed", type=int, help="master seed (overrides sim.master_seed)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        return p

    p = common(sub.add_parser("simulate", help="write raw passage and excursion records"))
    p.add_argument("--workers", type=int)
    p.set_defaults(fn=cmd_simulate)

    p = common(sub.add_parser("check", help="run checks and write checks.csv"))
    p.add_argument("--id", action="append", help="check id (repeatable)")
    p.add_argument("--alpha", type=float, help=f"stable index for {', '.join(ALPHA_CHECKS)}")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--workers", type=int)
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on default sample sizes")
    p.set_defaults(fn=cmd_check)

    p = common(sub.add_parser("table", help="theorem-to-result table from a check CSV"))
    p.add_argument("--in", dest="input", help="check CSV (default <out>/checks.csv)")
    p.set_defaults(fn=cmd_table)

    p = common(sub.add_parser("meander-table", help="estimate g, g* for a stable law"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--n-paths", type=int, default=1_000_000)
    p.add_argument("--n-steps", type=int, default=512)
    p.set_defaults(fn=cmd_meander_table)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnsupportedModelError, UnsupportedRegimeError) as exc:
        print(f"error: unsupported regime: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
