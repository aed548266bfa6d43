"""Benchmark command line: run solvers, tabulate threshold crossings.

Subcommands:

* ``run``: load a PGM image, add seeded Gaussian noise, build the TV or H1
  denoising problem, run the requested solvers, and write one CSV log per
  solver (schema ``iter,wall_seconds,gap_db,target_db,value_db``) plus a
  JSON sidecar with the full configuration.
* ``make-target``: compute and cache a long-run reference solution, keyed by
  a hash of the problem configuration.
* ``table``: report, per log and threshold, the first iteration (rounded up
  to a multiple of 10) and wall time at which the metric crosses.

All randomness is seeded; reruns with the same seed give byte-identical CSVs
except for the wall_seconds column.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .baselines import BaselineConfig, dual_fb_run, pdhgm_run
from .imaging import DenoiseProblem, add_gaussian_noise, metrics
from .pedi import StepConfig, pedi_run
from .pgm import read_pgm

SOLVERS = ("pedi-general", "pedi-soc", "pdhgm", "dual-fb")


def _problem_key(image_path: Path, variant: str, alpha: float, sigma: float, seed: int) -> dict:
    """Canonical problem identity: image content hash + noise/model config."""
    digest = hashlib.sha256(image_path.read_bytes()).hexdigest()[:16]
    return {
        "image_sha256_16": digest,
        "variant": variant,
        "alpha": alpha,
        "sigma": sigma,
        "seed": seed,
    }


def _key_hash(key: dict) -> str:
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:12]


def _build(image, variant, alpha, sigma, seed):
    grid = read_pgm(image)
    noisy = add_gaussian_noise(grid, sigma, seed)
    return DenoiseProblem(noisy, alpha, variant)


def _target_path(out: Path, key_hash: str) -> Path:
    return out / f"target_{key_hash}.npz"


def _compute_target(problem: DenoiseProblem, iters: int) -> np.ndarray:
    # gamma = 0.3 keeps the step sizes from decaying too fast, which on these
    # problems gives a much sharper tail than the benchmark default
    cfg = BaselineConfig.default_for(problem, max_iters=iters, gamma=0.3)
    res = pdhgm_run(problem, cfg)
    gap0 = 0.5 * float(np.sum(problem.z.flat() ** 2))
    gap = problem.duality_gap(res.x, res.p)
    if gap > 1e-8 * gap0:
        raise click.ClickException(
            f"reference solution fails quality gate: gap {gap:g} > 1e-8*gap0 {1e-8 * gap0:g}; "
            f"increase --target-iters"
        )
    return res.x


def _load_target(out: Path, key: dict):
    path = _target_path(out, _key_hash(key))
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as npz:
        stored_key = json.loads(str(npz["config"]))
        if stored_key != key:
            raise click.ClickException(
                f"target cache collision at {path}: stored config {stored_key} "
                f"does not match requested {key}; remove the file or change --out"
            )
        return npz["x"]


def _atomic_write_bytes(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_solver(solver, problem, iters, step_rule, tau0_override, gamma, zeta, theta, target_x, gap0):
    """Run one solver, collecting an IterationRecord per iteration."""
    records = []
    t0 = time.perf_counter()

    if solver in ("pedi-general", "pedi-soc"):
        sp = problem.saddle_problem()
        kwargs = {"opnorm_K": sp.opnorm_K, "b0": problem.alpha, "gamma": gamma}
        if zeta is not None:
            kwargs["zeta"] = zeta
        if theta is not None:
            kwargs["theta"] = theta
        cfg = StepConfig(**kwargs)
        if tau0_override is not None:
            cfg = cfg.with_tau0(tau0_override)
        rule = step_rule if solver == "pedi-general" else "soc"

        def cb(i, x, y, state, info):
            p = problem.unlifted_dual(y)
            records.append(metrics(x, p, problem, target_x, gap0, iter=i, wall_seconds=time.perf_counter() - t0))

        pedi_run(sp, cfg, iters, step_rule=rule, callback=cb)
        opnorm = sp.opnorm_K
    elif solver == "pdhgm":
        cfg = BaselineConfig.default_for(problem, max_iters=iters, gamma=gamma)

        def cb(i, x, p, info):
            records.append(metrics(x, p, problem, target_x, gap0, iter=i, wall_seconds=time.perf_counter() - t0))

        pdhgm_run(problem, cfg, callback=cb)
        opnorm = problem.opnorm_D
    elif solver == "dual-fb":

        def cb(i, x, p, info):
            records.append(metrics(x, p, problem, target_x, gap0, iter=i, wall_seconds=time.perf_counter() - t0))

        dual_fb_run(problem, iters, callback=cb)
        opnorm = problem.opnorm_D
    else:
        raise click.ClickException(f"unknown solver {solver!r}")
    return records, opnorm


def _write_csv(path: Path, records):
    buf = ["iter,wall_seconds,gap_db,target_db,value_db"]
    for r in records:
        buf.append(f"{r.iter},{r.wall_seconds:.6f},{r.gap_db:.6f},{r.target_db:.6f},{r.value_db:.6f}")
    _atomic_write_bytes(path, ("\n".join(buf) + "\n").encode())


@click.group()
@click.version_option(__version__)
def main():
    """Denoising solver benchmark harness."""


def _common_problem_options(fn):
    fn = click.option("--image", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))(fn)
    fn = click.option("--variant", required=True, type=click.Choice(["tv", "h1"]))(fn)
    fn = click.option("--alpha", required=True, type=float)(fn)
    fn = click.option("--sigma", default=0.0, type=float, show_default=True)(fn)
    fn = click.option("--seed", required=True, type=int)(fn)
    fn = click.option("--out", default=Path("."), type=click.Path(file_okay=False, path_type=Path), show_default=True)(fn)
    return fn


@main.command()
@_common_problem_options
@click.option("--solvers", default="pedi-general", show_default=True, help="Comma-separated subset of " + ",".join(SOLVERS))
@click.option("--iters", default=1000, type=int, show_default=True)
@click.option("--step-rule", default="general", type=click.Choice(["general", "soc"]), show_default=True)
@click.option("--tau0-override", default=None, type=float)
@click.option("--gamma", default=0.9, type=float, show_default=True)
@click.option("--zeta", default=None, type=float)
@click.option("--theta", default=None, type=float)
@click.option("--target", "target_policy", default="compute", type=click.Choice(["load", "compute"]), show_default=True)
@click.option("--target-iters", default=100000, type=int, show_default=True)
def run(image, variant, alpha, sigma, seed, out, solvers, iters, step_rule, tau0_override, gamma, zeta, theta, target_policy, target_iters):
    """Run solver(s) and write one CSV log per solver."""
    solver_list = [s.strip() for s in solvers.split(",") if s.strip()]
    if not solver_list:
        raise click.ClickException("solver list is empty")
    for s in solver_list:
        if s not in SOLVERS:
            raise click.ClickException(f"unknown solver {s!r}; choose from {', '.join(SOLVERS)}")
    if iters < 1:
        raise click.ClickException("--iters must be >= 1")
    out.mkdir(parents=True, exist_ok=True)

    problem = _build(image, variant, alpha, sigma, seed)
    key = _problem_key(image, variant, alpha, sigma, seed)
    if target_policy == "load":
        target_x = _load_target(out, key)
        if target_x is None:
            raise click.ClickException(
                f"no cached target for this configuration in {out}; run make-target first"
            )
    else:
        target_x = _compute_target(problem, target_iters)
    if not np.any(target_x):
        raise click.ClickException("degenerate reference solution (all zero)")
    gap0 = 0.5 * float(np.sum(problem.z.flat() ** 2))

    for solver in solver_list:
        records, opnorm = _run_solver(
            solver, problem, iters, step_rule, tau0_override, gamma, zeta, theta, target_x, gap0
        )
        csv_path = out / f"{solver}.csv"
        _write_csv(csv_path, records)
        sidecar = {
            "solver": solver,
            "problem": key,
            "iters": iters,
            "step_rule": step_rule if solver == "pedi-general" else ("soc" if solver == "pedi-soc" else None),
            "tau0_override": tau0_override,
            "gamma": gamma,
            "zeta": zeta,
            "theta": theta,
            "opnorm": opnorm,
            "gap0": gap0,
            "version": __version__,
        }
        _atomic_write_bytes(out / f"{solver}.meta.json", (json.dumps(sidecar, indent=2, sort_keys=True) + "\n").encode())
        click.echo(f"wrote {csv_path}")


@main.command("make-target")
@_common_problem_options
@click.option("--target-iters", default=100000, type=int, show_default=True)
def make_target(image, variant, alpha, sigma, seed, out, target_iters):
    """Compute and cache a long-run reference solution for a configuration."""
    out.mkdir(parents=True, exist_ok=True)
    key = _problem_key(image, variant, alpha, sigma, seed)
    path = _target_path(out, _key_hash(key))
    cached = _load_target(out, key)
    if cached is not None:
        click.echo(f"cache hit: {path}")
        return
    problem = _build(image, variant, alpha, sigma, seed)
    x = _compute_target(problem, target_iters)
    fd, tmp = tempfile.mkstemp(dir=out, suffix=".tmp")
    os.close(fd)
    try:
        np.savez(tmp, x=x, config=json.dumps(key, sort_keys=True))
        # np.savez appends .npz to names without it
        src = tmp if tmp.endswith(".npz") else tmp + ".npz"
        os.replace(src, path)
    finally:
        for leftover in (tmp, tmp + ".npz"):
            if os.path.exists(leftover):
                os.unlink(leftover)
    click.echo(f"wrote {path}")


def _parse_threshold(spec: str):
    try:
        metric, val = spec.split(":")
        metric = metric.strip()
        val = float(val)
    except ValueError:
        raise click.ClickException(f"bad threshold {spec!r}; expected metric:db, e.g. gap:-150")
    if metric not in ("gap", "target", "value"):
        raise click.ClickException(f"unknown metric {metric!r}; choose gap, target or value")
    return metric, val


def _read_log(path: Path):
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        expected = ["iter", "wall_seconds", "gap_db", "target_db", "value_db"]
        if reader.fieldnames != expected:
            raise click.ClickException(f"{path}: bad header {reader.fieldnames}, expected {expected}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(
                    (int(row["iter"]), float(row["wall_seconds"]),
                     float(row["gap_db"]), float(row["target_db"]), float(row["value_db"]))
                )
            except (TypeError, ValueError) as exc:
                raise click.ClickException(f"{path}:{lineno}: malformed row: {exc}")
    return rows


def _first_crossing(rows, metric: str, threshold: float):
    """First logged iteration at which the metric is <= threshold, reported
    at a resolution of 10 iterations (rounded up to the next multiple)."""
    col = {"gap": 2, "target": 3, "value": 4}[metric]
    for row in rows:
        if row[col] <= threshold:
            it = row[0]
            return ((it + 9) // 10) * 10, row[1]
    return None


@main.command()
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--threshold", "thresholds", multiple=True, help="metric:db, e.g. gap:-150 (repeatable)")
def table(logs, thresholds):
    """Tabulate first-crossing iterations and wall times for each log."""
    specs = [_parse_threshold(t) for t in thresholds]
    header = ["log"] + [f"{m}<={v:g}dB iters" for m, v in specs] + [f"{m}<={v:g}dB seconds" for m, v in specs]
    widths = [max(18, len(h)) for h in header]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for log in logs:
        rows = _read_log(log)
        iter_cells, time_cells = [], []
        for metric, val in specs:
            hit = _first_crossing(rows, metric, val)
            if hit is None:
                iter_cells.append("--")
                time_cells.append("--")
            else:
                iter_cells.append(str(hit[0]))
                time_cells.append(f"{hit[1]:.3f}")
        cells = [log.stem] + iter_cells + time_cells
        lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    click.echo("\n".join(lines))


if __name__ == "__main__":
    main()
