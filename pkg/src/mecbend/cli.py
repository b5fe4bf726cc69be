"""Command-line front end.

Subcommands cover the whole workflow: ``generate`` writes a seeded scenario
instance, ``solve`` runs the decomposition or a baseline on it, ``simulate``
replays a solution through the event-driven queue simulator, ``bench`` sweeps
(topology size, seed, method) grids, and ``report`` condenses a bench
directory into tables plus gnuplot-ready data files.

Every command records a manifest (command name, flag values, seeds, output
names, tool version) in the output directory, and each artifact embeds the
manifest hash so a result can be traced back to the exact invocation.  All
commands are deterministic given their flags: repeated runs produce
byte-identical artifacts except for measured wall-clock columns (the
``wall_ms`` column of trace and bench CSVs), which are the only fields that
may vary.  ``bench`` parallelizes across (seed, method) cells with the
worker count capped by ``MECBEND_THREADS``.

Exit codes: 0 converged, 2 usage error (bad flags, missing or invalid
files), 3 stopped at the iteration limit, 4 infeasible.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import click
import numpy as np

from mecbend import __version__
from mecbend import gbd
from mecbend.baselines import BASELINES, solve_nc
from mecbend.formulation import (
    hit_ratio,
    mean_delay_s,
    solution_from_report,
    solution_report,
)
from mecbend.model import (
    MS,
    Instance,
    load_instance,
    to_json_dict,
    validate,
)
from mecbend.queuesim import simulate as _simulate
from mecbend.scenario import desk_config, generate as _generate, paper_config

PRESETS = {"paper": paper_config, "desk": desk_config}
METHODS = ("gbd", "nc", "ao", "rr")
BENCH_FIELDS = ("name", "seed", "E", "S", "profit", "hit_ratio",
                "mean_delay_ms", "wall_ms")
SIM_FIELDS = ("queue", "analytic_ms", "simulated_ms", "stderr_ms", "samples")
TRACE_FIELDS = ("iter", "lb", "ub", "gap", "inner_status", "cut_kind",
                "wall_ms")

EXIT_ITERATION_LIMIT = 3
EXIT_INFEASIBLE = 4


# ---------------------------------------------------------------------------
# manifests and artifact writers
# ---------------------------------------------------------------------------


def _canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """What was run: enough to reproduce every artifact in the directory."""

    command: str
    config: dict
    seeds: tuple
    outputs: tuple
    version: str = __version__

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(_canonical(self.config).encode()).hexdigest()

    @property
    def hash(self) -> str:
        doc = {"command": self.command, "config_hash": self.config_hash,
               "seeds": list(self.seeds), "outputs": list(self.outputs),
               "version": self.version}
        return hashlib.sha256(_canonical(doc).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config,
                "config_hash": self.config_hash, "seeds": list(self.seeds),
                "outputs": list(self.outputs), "version": self.version,
                "hash": self.hash}


def _write_manifest(manifest: RunManifest, out_dir: str) -> str:
    path = os.path.join(out_dir, f"manifest_{manifest.command}.json")
    _write_json(path, manifest.to_dict())
    return path


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, fieldnames, rows, manifest_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest_hash}\n")
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _read_csv(path: str) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _worker_cap() -> int:
    raw = os.environ.get("MECBEND_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        cap = int(raw)
    except ValueError:
        raise click.UsageError(
            f"MECBEND_THREADS must be an integer, got {raw!r}")
    return max(1, cap)


def _override_params(instance: Instance, alpha: Optional[float],
                     epsilon: Optional[float],
                     max_iter: Optional[int]) -> Instance:
    changes = {}
    if alpha is not None:
        changes["alpha"] = alpha
    if epsilon is not None:
        changes["epsilon"] = epsilon
    if max_iter is not None:
        changes["max_iterations"] = max_iter
    if not changes:
        return instance
    params = dataclasses.replace(instance.params, **changes)
    return dataclasses.replace(instance, params=params)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"{flag} expects comma-separated integers, "
                               f"got {text!r}")
    if not values:
        raise click.UsageError(f"{flag} must name at least one value")
    return values


# ---------------------------------------------------------------------------
# command group
# ---------------------------------------------------------------------------


@click.group()
@click.version_option(version=__version__, prog_name="mecbend")
def main() -> None:
    """Service placement planner: generate, solve, simulate, bench, report."""


@main.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="desk",
              show_default=True, help="Scenario family to draw from.")
@click.option("--bs", type=int, default=None,
              help="Number of base stations (preset default if omitted).")
@click.option("--services", type=int, default=None,
              help="Catalog size (preset default if omitted).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", type=float, default=None,
              help="Share of the delay budget granted to remote computation.")
@click.option("--epsilon", type=float, default=None,
              help="Absolute convergence gap stored with the instance.")
@click.option("--max-iter", type=int, default=None,
              help="Iteration cap stored with the instance.")
@click.option("--out", type=click.Path(file_okay=False), default=".",
              show_default=True)
def generate(preset, bs, services, seed, alpha, epsilon, max_iter, out):
    """Write a seeded scenario instance as JSON."""
    overrides = {"seed": seed}
    if bs is not None:
        overrides["num_bs"] = bs
    if services is not None:
        overrides["num_services"] = services
    if alpha is not None:
        overrides["alpha"] = alpha
    if epsilon is not None:
        overrides["epsilon"] = epsilon
    if max_iter is not None:
        overrides["max_iterations"] = max_iter
    try:
        config = PRESETS[preset](**overrides)
        instance = _generate(config)
    except (TypeError, ValueError) as exc:
        raise click.UsageError(str(exc))
    name = (f"instance_{preset}_e{instance.num_bs}"
            f"_s{instance.num_services}_seed{seed}.json")
    manifest = RunManifest("generate", {"preset": preset, **overrides},
                           (seed,), (name,))
    os.makedirs(out, exist_ok=True)
    doc = to_json_dict(instance)
    doc["manifest_hash"] = manifest.hash
    path = os.path.join(out, name)
    _write_json(path, doc)
    _write_manifest(manifest, out)
    click.echo(f"wrote {path}")


def _run_method(instance: Instance, method: str,
                master_nodes: Optional[int]):
    """Uniform (status, value, solution, trace_rows) across solvers."""
    if method == "gbd":
        res = gbd.solve(instance, master_node_limit=master_nodes)
        return res.status, res.value, res.solution, res.trace_rows()
    if method == "nc":
        rep = solve_nc(instance, master_node_limit=master_nodes)
    else:
        rep = BASELINES[method](instance)
    rows = [{"iter": 1, "lb": rep.profit, "ub": rep.profit, "gap": 0.0,
             "inner_status": "optimal", "cut_kind": "",
             "wall_ms": rep.wall_ms}]
    return gbd.CONVERGED, rep.profit, rep.solution, rows


@main.command()
@click.argument("instance_path",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(METHODS), default="gbd",
              show_default=True)
@click.option("--alpha", type=float, default=None,
              help="Override the instance's delay split.")
@click.option("--epsilon", type=float, default=None,
              help="Override the convergence gap.")
@click.option("--max-iter", type=int, default=None,
              help="Override the iteration cap.")
@click.option("--master-nodes", type=int, default=None,
              help="Branch-and-bound node budget per master solve; bounds "
                   "stay valid but the search may stop at the incumbent.")
@click.option("--out", type=click.Path(file_okay=False), default=".",
              show_default=True)
@click.pass_context
def solve(ctx, instance_path, method, alpha, epsilon, max_iter,
          master_nodes, out):
    """Solve an instance; write the solution JSON and an iteration trace."""
    instance = _load_checked(instance_path)
    instance = _override_params(instance, alpha, epsilon, max_iter)
    sol_name = f"solution_{method}.json"
    trace_name = f"trace_{method}.csv"
    manifest = RunManifest(
        "solve",
        {"instance": os.path.basename(instance_path), "method": method,
         "alpha": alpha, "epsilon": epsilon, "max_iter": max_iter,
         "master_nodes": master_nodes},
        (), (sol_name, trace_name))
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    try:
        status, value, solution, trace = _run_method(instance, method,
                                                     master_nodes)
    except gbd.GbdCycleError as exc:
        click.echo(f"stopped without converging: {exc}", err=True)
        ctx.exit(EXIT_ITERATION_LIMIT)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except RuntimeError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        ctx.exit(EXIT_INFEASIBLE)
    wall_ms = (time.perf_counter() - t0) * 1e3
    doc = {
        "method": method,
        "status": status,
        "profit_per_s": value,
        "iterations": len(trace),
        "manifest_hash": manifest.hash,
        "solution": solution_report(instance, solution),
    }
    _write_json(os.path.join(out, sol_name), doc)
    _write_csv(os.path.join(out, trace_name), TRACE_FIELDS, trace,
               manifest.hash)
    _write_manifest(manifest, out)
    click.echo(f"{method}: status={status} profit={value:.6g}/s "
               f"iters={len(trace)} wall={wall_ms:.0f}ms -> "
               f"{os.path.join(out, sol_name)}")
    if status != gbd.CONVERGED:
        ctx.exit(EXIT_ITERATION_LIMIT)


def _load_checked(instance_path: str) -> Instance:
    try:
        instance = load_instance(instance_path)
    except (KeyError, TypeError, ValueError) as exc:
        raise click.UsageError(f"unreadable instance file: {exc}")
    problems = validate(instance)
    if problems:
        raise click.UsageError("invalid instance: " + "; ".join(problems))
    return instance


@main.command()
@click.argument("instance_path",
                type=click.Path(exists=True, dir_okay=False))
@click.argument("solution_path",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--arrivals", type=int, default=100_000, show_default=True,
              help="Total Poisson arrivals to replay.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=".",
              show_default=True)
@click.pass_context
def simulate(ctx, instance_path, solution_path, arrivals, seed, out):
    """Replay a solved routing through the queue simulator."""
    instance = _load_checked(instance_path)
    with open(solution_path) as fh:
        sdoc = json.load(fh)
    try:
        solution = solution_from_report(instance, sdoc.get("solution", sdoc))
    except (KeyError, TypeError, ValueError) as exc:
        raise click.UsageError(f"unreadable solution file: {exc}")
    try:
        report = _simulate(instance, solution, horizon_arrivals=arrivals,
                           seed=seed)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        ctx.exit(EXIT_INFEASIBLE)
    manifest = RunManifest(
        "simulate",
        {"instance": os.path.basename(instance_path),
         "solution": os.path.basename(solution_path), "arrivals": arrivals,
         "seed": seed},
        (seed,), ("sim.csv",))
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "sim.csv"), SIM_FIELDS, report.rows(),
               manifest.hash)
    _write_manifest(manifest, out)
    mixed = [q.queue for q in report.links if q.mixed_beta]
    if mixed:
        click.echo("links sharing mixed packet sizes (analytic value is the "
                   "admitted-rate mean): " + ", ".join(mixed))
    click.echo(f"simulated {arrivals} arrivals over "
               f"{len(report.servers)} server queues, "
               f"{len(report.links)} link queues, "
               f"{len(report.flows)} flows -> "
               f"{os.path.join(out, 'sim.csv')}")


def _bench_cell(task: dict) -> dict:
    config = PRESETS[task["preset"]](**task["overrides"])
    instance = _generate(config)
    t0 = time.perf_counter()
    status, value, solution, _ = _run_method(instance, task["method"],
                                             task["master_nodes"])
    wall_ms = (time.perf_counter() - t0) * 1e3
    return {
        "name": task["method"],
        "seed": task["overrides"]["seed"],
        "E": instance.num_bs,
        "S": instance.num_services,
        "profit": value,
        "hit_ratio": hit_ratio(instance, solution),
        "mean_delay_ms": mean_delay_s(instance, solution) / MS,
        "wall_ms": wall_ms,
    }


@main.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="desk",
              show_default=True)
@click.option("--bs", "bs_list", default=None,
              help="Comma-separated BS counts to sweep, e.g. 2,3,4 "
                   "(preset default if omitted).")
@click.option("--services", type=int, default=None)
@click.option("--seeds", default="0", show_default=True,
              help="Comma-separated seeds; one row per (size, seed, method).")
@click.option("--methods", default="gbd,nc,ao,rr", show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--master-nodes", type=int, default=300, show_default=True,
              help="Node budget per master solve (0 for exhaustive).")
@click.option("--out", type=click.Path(file_okay=False), default="bench",
              show_default=True)
def bench(preset, bs_list, services, seeds, methods, alpha, epsilon,
          max_iter, master_nodes, out):
    """Sweep sizes x seeds x methods; write one metrics row per run."""
    seed_values = _parse_int_list(seeds, "--seeds")
    sizes = ([None] if bs_list is None
             else _parse_int_list(bs_list, "--bs"))
    method_names = [m.strip() for m in methods.split(",") if m.strip()]
    for m in method_names:
        if m not in METHODS:
            raise click.UsageError(
                f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if not method_names:
        raise click.UsageError("--methods must name at least one method")
    budget = None if master_nodes == 0 else master_nodes
    tasks = []
    for num_bs in sizes:
        for seed in seed_values:
            overrides = {"seed": seed}
            if num_bs is not None:
                overrides["num_bs"] = num_bs
            if services is not None:
                overrides["num_services"] = services
            if alpha is not None:
                overrides["alpha"] = alpha
            if epsilon is not None:
                overrides["epsilon"] = epsilon
            if max_iter is not None:
                overrides["max_iterations"] = max_iter
            for method in method_names:
                tasks.append({"preset": preset, "overrides": overrides,
                              "method": method, "master_nodes": budget})
    cap = min(_worker_cap(), len(tasks))
    if cap > 1:
        with ProcessPoolExecutor(max_workers=cap) as pool:
            rows = list(pool.map(_bench_cell, tasks))
    else:
        rows = [_bench_cell(task) for task in tasks]
    rows.sort(key=lambda r: (r["E"], r["seed"], method_names.index(r["name"])))
    manifest = RunManifest(
        "bench",
        {"preset": preset, "bs": bs_list, "services": services,
         "methods": method_names, "alpha": alpha, "epsilon": epsilon,
         "max_iter": max_iter, "master_nodes": master_nodes},
        tuple(seed_values), ("bench.csv",))
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "bench.csv"), BENCH_FIELDS, rows,
               manifest.hash)
    _write_manifest(manifest, out)
    for row in rows:
        click.echo(f"E={row['E']} seed={row['seed']} {row['name']:>3}: "
                   f"profit={row['profit']:.6g}/s "
                   f"hit={row['hit_ratio']:.3f} "
                   f"delay={row['mean_delay_ms']:.2f}ms "
                   f"wall={row['wall_ms']:.0f}ms")
    click.echo(f"wrote {os.path.join(out, 'bench.csv')} ({len(rows)} rows)")


@main.command()
@click.argument("bench_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Where to write summary and plot data "
                   "[default: BENCH_DIR].")
def report(bench_dir, out):
    """Summarize a bench directory into tables and gnuplot data files."""
    path = os.path.join(bench_dir, "bench.csv")
    if not os.path.exists(path):
        raise click.UsageError(f"no bench.csv under {bench_dir}")
    rows = _read_csv(path)
    if not rows:
        raise click.UsageError(f"{path} has no data rows")
    out = bench_dir if out is None else out
    os.makedirs(out, exist_ok=True)

    def method_order(name: str):
        return (METHODS.index(name), "") if name in METHODS else \
            (len(METHODS), name)

    methods = sorted({r["name"] for r in rows}, key=method_order)
    sizes = sorted({int(r["E"]) for r in rows})
    metrics = ("profit", "hit_ratio", "mean_delay_ms", "wall_ms")
    means: dict = {}
    for row in rows:
        key = (int(row["E"]), row["name"])
        bucket = means.setdefault(key, {m: [] for m in metrics})
        for m in metrics:
            bucket[m].append(float(row[m]))

    seeds = sorted({int(r["seed"]) for r in rows})
    dat_names = [f"{m}_vs_e.dat" for m in metrics]
    manifest = RunManifest("report", {"bench_dir": os.path.abspath(bench_dir)},
                           tuple(seeds),
                           tuple(dat_names) + ("summary.txt",))

    for metric, dat in zip(metrics, dat_names):
        with open(os.path.join(out, dat), "w") as fh:
            fh.write(f"# manifest: {manifest.hash}\n")
            fh.write("# E " + " ".join(methods) + "\n")
            for E in sizes:
                cells = []
                for m in methods:
                    vals = means.get((E, m), {}).get(metric, [])
                    cells.append(f"{np.mean(vals):.9g}" if vals else "nan")
                fh.write(f"{E} " + " ".join(cells) + "\n")

    lines = [f"# manifest: {manifest.hash}",
             f"runs: {len(rows)}  sizes: {sizes}  seeds: {seeds}",
             "",
             f"{'method':>6} {'E':>3} {'runs':>4} {'profit/s':>12} "
             f"{'hit_ratio':>9} {'delay_ms':>9} {'wall_ms':>9}"]
    for E in sizes:
        for m in methods:
            vals = means.get((E, m))
            if vals is None:
                continue
            lines.append(
                f"{m:>6} {E:>3} {len(vals['profit']):>4} "
                f"{np.mean(vals['profit']):>12.6g} "
                f"{np.mean(vals['hit_ratio']):>9.3f} "
                f"{np.mean(vals['mean_delay_ms']):>9.2f} "
                f"{np.mean(vals['wall_ms']):>9.0f}")
    summary = "\n".join(lines) + "\n"
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(summary)
    _write_manifest(manifest, out)
    click.echo(summary, nl=False)


if __name__ == "__main__":
    sys.exit(main())
