"""Command-line interface.

Subcommands: gen, reorder, eval, bench, grid-threshold, dupli, plot.
Exit codes: 0 success, 2 malformed input (message names the offending line),
3 disconnected similarity graph (message lists component sizes), 4 solver
failure.  All randomness flows from ``--seed``; timing is reported in JSON
summaries but never written into CSV results unless explicitly requested,
so result files are byte-deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from .core import (
    Huber,
    R2Sum,
    SimilarityMatrix,
    TwoSum,
    estimate_bandwidth,
    kendall_tau,
    loss,
)
from .duplication import alt_proj_dupli, mean_assignment_distance
from .generators import gen_banded, gen_dupli_instance
from .io import (
    ParseError,
    read_assignment,
    read_counts,
    read_permutation,
    read_similarity,
    write_assignment,
    write_counts,
    write_permutation,
    write_similarity,
)
from .projections import DiagonalBounds, dist_to_strong_r
from .solvers import HuberB, TruncatedB, TwoSumB, eta_spectral, faq, fwtb, ubi
from .spectral import ConvergenceError, DisconnectedError, spectral_order
from ._svg import svg_heatmap, svg_scatter

SOLVER_NAMES = (
    "spectral",
    "eta-spectral",
    "ubi",
    "h-ubi",
    "faq",
    "r-faq",
    "h-faq",
    "fwtb",
    "fwtb-i",
    "h-fwtb",
    "h-fwtb-i",
)

METRIC_NAMES = ("kendall_tau", "two_sum", "r2sum", "huber")


def solve_named(name, A):
    """Run the registry solver ``name`` on A and return its SolverReport.

    The h-/r- prefixed variants derive delta/lambda from the bandwidth
    estimate of the input matrix.
    """
    if name == "spectral":
        return spectral_order(A)
    if name == "eta-spectral":
        return eta_spectral(A)
    if name == "ubi":
        return ubi(A, kind=TwoSum())
    if name == "h-ubi":
        return ubi(A)
    if name == "faq":
        return faq(A, TwoSumB())
    if name == "r-faq":
        return faq(A, TruncatedB(float(estimate_bandwidth(A).lam_hat)))
    if name == "h-faq":
        return faq(A, HuberB(float(estimate_bandwidth(A).delta_hat)))
    if name == "fwtb":
        return fwtb(A, TwoSum(), tiebreak="naive")
    if name == "fwtb-i":
        return fwtb(A, TwoSum(), tiebreak="spectral")
    if name == "h-fwtb":
        return fwtb(A, Huber(float(estimate_bandwidth(A).delta_hat)), tiebreak="naive")
    if name == "h-fwtb-i":
        return fwtb(
            A, Huber(float(estimate_bandwidth(A).delta_hat)), tiebreak="spectral"
        )
    raise ValueError(f"unknown solver: {name!r}")


def _fail(code, message):
    click.echo(message, err=True)
    sys.exit(code)


def _load(reader, path):
    try:
        return reader(path)
    except ParseError as exc:
        _fail(2, str(exc))
    except OSError as exc:
        _fail(2, f"{path}: {exc.strerror or exc}")


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DisconnectedError as exc:
        _fail(3, str(exc))
    except (ConvergenceError, RuntimeError, np.linalg.LinAlgError) as exc:
        _fail(4, f"solver failure: {exc}")


def _write_csv(path, header, rows):
    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)

    if path == "-":
        dump(sys.stdout)
    else:
        with open(path, "w", encoding="ascii", newline="") as fh:
            dump(fh)


def _metric_values(A, bw, perm, truth=None):
    vals = {
        "two_sum": loss(A, perm, TwoSum()),
        "r2sum": loss(A, perm, R2Sum(float(bw.lam_hat))),
        "huber": loss(A, perm, Huber(float(bw.delta_hat))),
    }
    vals["kendall_tau"] = (
        kendall_tau(perm, truth, flip_invariant=True) if truth is not None else ""
    )
    return vals


def align_positions(rec, true):
    """Circular-shift + flip alignment maximizing exact positional agreement.

    Ties prefer no flip, then the smallest shift.  Returns (aligned
    positions, shift, flipped).
    """
    rec = np.asarray(rec, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    n = rec.shape[0]
    best = None
    for flipped, r in ((False, rec), (True, (n - 1) - rec)):
        agree_by_shift = np.bincount((true - r) % n, minlength=n)
        k = int(np.argmax(agree_by_shift))
        agree = int(agree_by_shift[k])
        if best is None or agree > best[0]:
            best = (agree, k, flipped, (r + k) % n)
    return best[3], best[1], best[2]


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master random seed.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for the benchmark grid.")
@click.option("--quiet", is_flag=True, help="Suppress informational output.")
@click.pass_context
def main(ctx, seed, threads, quiet):
    """Seriation toolbox: reorder noisy similarity matrices."""
    ctx.obj = {"seed": seed, "threads": max(1, threads), "quiet": quiet}


def _echo(ctx, payload):
    if not ctx.obj["quiet"]:
        click.echo(json.dumps(payload))


# ---------------------------------------------------------------------------
# gen


@main.command("gen")
@click.option("--kind", type=click.Choice(["banded", "dupli-banded", "dupli-powerlaw"]),
              default="banded", show_default=True)
@click.option("--n", type=int, required=True,
              help="Matrix size (expanded size N for dupli kinds).")
@click.option("--delta", type=int, default=None, help="Band half-width.")
@click.option("--s-ratio", type=float, default=0.0, show_default=True,
              help="Out-of-band pairs as a multiple of n-delta-1 (banded).")
@click.option("--s", type=int, default=0, show_default=True,
              help="Out-of-band pairs in the hidden matrix (dupli-banded).")
@click.option("--gamma", type=float, default=0.5, show_default=True,
              help="Power-law exponent (dupli-powerlaw).")
@click.option("--ratio", type=float, default=1.33, show_default=True,
              help="Duplication ratio N/n (dupli kinds).")
@click.option("--noise-prop", type=float, default=0.0, show_default=True)
@click.option("--out", required=True, help="Output basename.")
@click.pass_context
def cmd_gen(ctx, kind, n, delta, s_ratio, s, gamma, ratio, noise_prop, out):
    """Generate a synthetic instance plus ground-truth sidecar files."""
    seed = ctx.obj["seed"]
    files = {}
    if kind == "banded":
        if delta is None:
            _fail(2, "--delta is required for banded instances")
        inst = gen_banded(n, delta, s_ratio, seed)
        write_similarity(out + ".sim", inst.A)
        write_permutation(out + ".true.perm", inst.perm_true)
        files = {"sim": out + ".sim", "truth": out + ".true.perm", "s": inst.s}
    else:
        s_kind = ("powerlaw", gamma) if kind == "dupli-powerlaw" else (
            "banded", delta if delta is not None else max(1, n // 5), s)
        inst = gen_dupli_instance(n, ratio, s_kind, noise_prop, seed)
        write_similarity(out + ".sim", SimilarityMatrix.from_dense(inst.A))
        write_counts(out + ".counts", inst.counts)
        write_assignment(out + ".true.assign", inst.Z_true)
        write_similarity(out + ".true.sim", SimilarityMatrix.from_dense(inst.S_true))
        files = {
            "sim": out + ".sim",
            "counts": out + ".counts",
            "truth": out + ".true.assign",
            "truth_sim": out + ".true.sim",
        }
    _echo(ctx, files)


# ---------------------------------------------------------------------------
# reorder / eval


@main.command("reorder")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.option("--solver", type=click.Choice(SOLVER_NAMES), default="spectral",
              show_default=True)
@click.option("--out", required=True, help="Output permutation file (positions).")
@click.pass_context
def cmd_reorder(ctx, matrix, solver, out):
    """Reorder a similarity matrix; print a one-line JSON summary."""
    A = _load(read_similarity, matrix)
    report = _guard(solve_named, solver, A)
    write_permutation(out, report.permutation)
    for w in report.warnings:
        if not ctx.obj["quiet"]:
            click.echo(f"warning: {w}", err=True)
    click.echo(json.dumps({
        "objective": report.objective,
        "iterations": report.iterations,
        "elapsed_s": report.elapsed,
        "delta_hat": int(estimate_bandwidth(A).delta_hat),
    }))


@main.command("eval")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.argument("perm", type=click.Path(dir_okay=False))
@click.option("--truth", type=click.Path(dir_okay=False), default=None,
              help="Ground-truth permutation file.")
@click.option("--dist2r", is_flag=True,
              help="Also compute the Frobenius distance to the strong-R cone "
                   "of the reordered matrix (expensive).")
@click.option("--out", default="-", show_default=True, help="CSV path or '-'.")
def cmd_eval(matrix, perm, truth, dist2r, out):
    """Score a permutation against a similarity matrix (CSV row)."""
    A = _load(read_similarity, matrix)
    p = _load(read_permutation, perm)
    if p.n != A.n:
        _fail(2, f"{perm}:1: permutation length {p.n} != matrix size {A.n}")
    t = None
    if truth is not None:
        t = _load(read_permutation, truth)
        if t.n != A.n:
            _fail(2, f"{truth}:1: permutation length {t.n} != matrix size {A.n}")
    bw = estimate_bandwidth(A)
    vals = _metric_values(A, bw, p, t)
    vals["dist2r"] = dist_to_strong_r(p.apply_to(A.dense())) if dist2r else ""
    header = ["n", "delta_hat", "kendall_tau", "two_sum", "r2sum", "huber", "dist2r"]
    row = [A.n, bw.delta_hat, vals["kendall_tau"], vals["two_sum"],
           vals["r2sum"], vals["huber"], vals["dist2r"]]
    _write_csv(out, header, [row])


# ---------------------------------------------------------------------------
# bench


def _resolve_delta(rule, n):
    if isinstance(rule, int):
        return rule
    if isinstance(rule, str) and rule.startswith("n/"):
        try:
            div = float(rule[2:])
        except ValueError:
            raise ValueError(f"bad delta rule {rule!r}") from None
        return max(1, int(round(n / div)))
    raise ValueError(f"bad delta rule {rule!r}")


_LONG_HEADER = ("n", "delta", "s_ratio", "rep", "seed", "solver",
                "kendall_tau", "two_sum", "r2sum", "huber", "elapsed_s", "error")


def _bench_task(task):
    """One instance solved by every requested solver; returns long-CSV rows."""
    n, delta, s_ratio, rep, seed, solver_names, timings = task
    inst = gen_banded(n, delta, s_ratio, seed)
    bw = estimate_bandwidth(inst.A)
    rows = []
    for name in solver_names:
        base = [n, delta, s_ratio, rep, seed, name]
        try:
            report = solve_named(name, inst.A)
        except Exception as exc:  # noqa: BLE001 - cell failures become rows
            rows.append(base + ["", "", "", "", "", f"{type(exc).__name__}: {exc}"])
            continue
        vals = _metric_values(inst.A, bw, report.permutation, inst.perm_true)
        elapsed = repr(report.elapsed) if timings else ""
        rows.append(base + [vals["kendall_tau"], vals["two_sum"], vals["r2sum"],
                            vals["huber"], elapsed, ""])
    return rows


@main.command("bench")
@click.argument("spec", type=click.Path(dir_okay=False))
@click.option("--out-dir", required=True)
@click.option("--timings", is_flag=True,
              help="Fill the elapsed_s column (breaks byte determinism).")
@click.pass_context
def cmd_bench(ctx, spec, out_dir, timings):
    """Run a benchmark grid from a JSON spec; write long + aggregated CSVs.

    Spec keys: n (list of int), delta (list of int or "n/K" rules), s_ratio
    (list of float), solvers (list of registry names), reps (int >= 1),
    seed (optional, overrides --seed).
    """
    try:
        with open(spec, "r", encoding="ascii") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(2, f"{spec}: {exc}")
    try:
        ns = [int(v) for v in cfg["n"]]
        deltas = list(cfg["delta"])
        s_ratios = [float(v) for v in cfg["s_ratio"]]
        solvers = list(cfg["solvers"])
        reps = int(cfg["reps"])
        master = int(cfg.get("seed", ctx.obj["seed"]))
    except (KeyError, TypeError, ValueError) as exc:
        _fail(2, f"{spec}: invalid benchmark spec ({exc})")
    if reps < 1:
        _fail(2, f"{spec}: reps must be >= 1")
    for name in solvers:
        if name not in SOLVER_NAMES:
            _fail(2, f"{spec}: unknown solver {name!r}")

    cells = list(itertools.product(ns, deltas, s_ratios))
    tasks = []
    try:
        for cell_idx, (n, drule, s_ratio) in enumerate(cells):
            delta = _resolve_delta(drule, n)
            for rep in range(reps):
                ss = np.random.SeedSequence(master, spawn_key=(cell_idx, rep))
                seed = int(ss.generate_state(1, dtype=np.uint64)[0])
                tasks.append((n, delta, s_ratio, rep, seed, tuple(solvers), timings))
    except ValueError as exc:
        _fail(2, f"{spec}: {exc}")

    if ctx.obj["threads"] > 1:
        with ProcessPoolExecutor(max_workers=ctx.obj["threads"]) as pool:
            results = list(pool.map(_bench_task, tasks))
    else:
        results = [_bench_task(t) for t in tasks]

    os.makedirs(out_dir, exist_ok=True)
    long_rows = [row for rows in results for row in rows]
    _write_csv(os.path.join(out_dir, "bench_long.csv"), _LONG_HEADER, long_rows)

    agg_rows = []
    by_key = {}
    for row in long_rows:
        by_key.setdefault((row[0], row[1], row[2], row[5]), []).append(row)
    for key in by_key:
        group = [r for r in by_key[key] if r[11] == ""]
        out = list(key) + [len(group), len(by_key[key]) - len(group)]
        for col in (6, 7, 8, 9):
            if group:
                data = np.array([float(r[col]) for r in group])
                out += [float(data.mean()), float(data.std())]
            else:
                out += ["", ""]
        agg_rows.append(out)
    agg_header = ["n", "delta", "s_ratio", "solver", "n_ok", "n_failed",
                  "kendall_tau_mean", "kendall_tau_std", "two_sum_mean",
                  "two_sum_std", "r2sum_mean", "r2sum_std", "huber_mean",
                  "huber_std"]
    _write_csv(os.path.join(out_dir, "bench_agg.csv"), agg_header, agg_rows)
    _echo(ctx, {"instances": len(tasks), "rows": len(long_rows),
                "out_dir": out_dir})


# ---------------------------------------------------------------------------
# grid-threshold


@main.command("grid-threshold")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.option("--lo", type=float, required=True)
@click.option("--hi", type=float, required=True)
@click.option("--count", type=int, default=24, show_default=True)
@click.option("--solver", type=click.Choice(SOLVER_NAMES), default="spectral",
              show_default=True)
@click.option("--out-csv", required=True)
@click.option("--out-perm", required=True,
              help="Permutation of the best-scoring threshold.")
@click.pass_context
def cmd_grid_threshold(ctx, matrix, lo, hi, count, solver, out_csv, out_perm):
    """Threshold sweep: drop entries below tau, reorder, score R2SUM."""
    if not lo < hi:
        _fail(2, "--lo must be strictly below --hi")
    if count < 1:
        _fail(2, "--count must be >= 1")
    A = _load(read_similarity, matrix)
    taus = np.linspace(lo, hi, count)
    rows = []
    best = None
    any_failed = False
    for tau in taus:
        keep = A.val >= tau
        if not keep.any():
            rows.append([repr(float(tau)), 0, "", "", "empty"])
            continue
        At = SimilarityMatrix(A.n, A.row[keep], A.col[keep], A.val[keep])
        try:
            report = solve_named(solver, At)
        except DisconnectedError:
            rows.append([repr(float(tau)), At.n_stored, "", "", "disconnected"])
            continue
        except (ConvergenceError, RuntimeError) as exc:
            any_failed = True
            rows.append([repr(float(tau)), At.n_stored, "", "",
                         f"failed: {type(exc).__name__}"])
            continue
        bw = estimate_bandwidth(At)
        score = loss(At, report.permutation, R2Sum(float(bw.lam_hat)))
        rows.append([repr(float(tau)), At.n_stored, bw.delta_hat, score, "ok"])
        if best is None or score < best[0]:
            best = (score, float(tau), report.permutation)
    _write_csv(out_csv, ["threshold", "n_stored", "delta_hat", "r2sum", "status"],
               rows)
    if best is None:
        _fail(4 if any_failed else 3,
              "no threshold produced a connected, solvable matrix")
    write_permutation(out_perm, best[2])
    _echo(ctx, {"best_threshold": best[1], "best_r2sum": best[0]})


# ---------------------------------------------------------------------------
# dupli


@main.command("dupli")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.argument("counts", type=click.Path(dir_okay=False))
@click.option("--inner", type=click.Choice(["spectral", "eta-spectral", "h-ubi"]),
              default="eta-spectral", show_default=True)
@click.option("--t-max", type=int, default=100, show_default=True)
@click.option("--bounds-gamma", type=float, default=None,
              help="Diagonal bounds d^(-gamma) (power-law prior).")
@click.option("--out-assign", required=True)
@click.option("--out-sim", required=True, help="Recovered expanded matrix file.")
@click.option("--truth-assign", type=click.Path(dir_okay=False), default=None)
@click.option("--truth-sim", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def cmd_dupli(ctx, matrix, counts, inner, t_max, bounds_gamma, out_assign,
              out_sim, truth_assign, truth_sim):
    """Recover an expanded ordering under duplication counts."""
    A = _load(read_similarity, matrix)
    c = _load(read_counts, counts)
    if c.n != A.n:
        _fail(2, f"{counts}:1: counts length {c.n} != matrix size {A.n}")
    bounds = None
    if bounds_gamma is not None:
        bounds = DiagonalBounds.powerlaw(c.total, bounds_gamma)
    report = _guard(alt_proj_dupli, A, c, inner=inner, T=t_max, bounds=bounds)
    write_assignment(out_assign, report.assignment)
    write_similarity(out_sim, SimilarityMatrix.from_dense(report.S))
    summary = {
        "residual": report.feasibility_residual,
        "iterations": report.iterations,
        "converged_by": report.converged_by,
        "elapsed_s": report.elapsed,
    }
    if truth_assign is not None:
        Zt = _load(read_assignment, truth_assign)
        cands = [mean_assignment_distance(Zt, report.assignment),
                 mean_assignment_distance(Zt, report.assignment.flip())]
        md = min(cands, key=lambda m: m[0])
        summary["mean_dist"], summary["std_dist"], summary["median_dist"] = md
    if truth_sim is not None:
        St = _load(read_similarity, truth_sim).dense()
        if St.shape != report.S.shape:
            _fail(2, f"{truth_sim}:1: size {St.shape[0]} != expanded size "
                     f"{report.S.shape[0]}")
        d2s = min(float(np.linalg.norm(St - report.S)),
                  float(np.linalg.norm(St - report.S[::-1, ::-1])))
        summary["d2s"] = d2s / float(np.linalg.norm(St))
    click.echo(json.dumps(summary))


# ---------------------------------------------------------------------------
# plot


@main.group("plot")
def plot():
    """Deterministic SVG emission."""


@plot.command("scatter")
@click.argument("perm", type=click.Path(dir_okay=False))
@click.argument("truth", type=click.Path(dir_okay=False))
@click.option("--align/--no-align", default=True, show_default=True,
              help="Apply circular-shift + flip alignment before plotting.")
@click.option("--out", required=True)
@click.pass_context
def plot_scatter(ctx, perm, truth, align, out):
    """Recovered position vs true position."""
    p = _load(read_permutation, perm)
    t = _load(read_permutation, truth)
    if p.n != t.n:
        _fail(2, f"{perm}:1: permutation sizes differ ({p.n} vs {t.n})")
    rec = p.positions
    shift, flipped = 0, False
    if align:
        rec, shift, flipped = align_positions(p.positions, t.positions)
    svg = svg_scatter(t.positions, rec, title="recovered vs true position")
    with open(out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(svg)
    _echo(ctx, {"shift": shift, "flipped": flipped, "out": out})


@plot.command("heatmap")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.option("--perm", type=click.Path(dir_okay=False), default=None,
              help="Reorder by this permutation before rasterizing.")
@click.option("--out", required=True)
@click.pass_context
def plot_heatmap(ctx, matrix, perm, out):
    """Grayscale raster of the (optionally reordered) matrix."""
    A = _load(read_similarity, matrix)
    M = A.dense()
    if perm is not None:
        p = _load(read_permutation, perm)
        if p.n != A.n:
            _fail(2, f"{perm}:1: permutation length {p.n} != matrix size {A.n}")
        M = p.apply_to(M)
    with open(out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(svg_heatmap(M))
    _echo(ctx, {"out": out})


if __name__ == "__main__":
    main()
