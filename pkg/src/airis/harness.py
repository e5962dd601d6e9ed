"""Batch experiment driver behind the ``airis`` command.

Every (algorithm, seed, sweep point) run is independent and may go to a
worker process; rows are sorted before writing so the CSV bytes do not depend
on scheduling.  Wall times live in a separate ``timings.csv`` for the same
reason.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import run_fixed_beta, run_no_irs, run_passive_irs, run_random_phase
from .cffp import run_max_ar_cffp
from .channel import generate
from .config import AlgorithmSpec, ExperimentConfig
from .max_snr_pa import initial_pa_state, run_max_snr_pa
from .pa_beta import (
    RegressionConfig,
    eval_f_beta,
    fit_polynomial,
    pa_coefficients,
    sample_betas,
)
from .svg import line_plot

FIT_GRID = 1001
FIT_SETTINGS = ((101, 2), (201, 2), (101, 3), (201, 3))


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    variant: str
    seed: int
    n_elements: int
    p_max_dbm: float
    ar_bits: float
    iterations: int
    p_bs_w: float
    p_irs_w: float
    converged: bool
    status: str

    @classmethod
    def header(cls) -> list:
        return [f.name for f in fields(cls)]

    def sort_key(self):
        return (self.algorithm, self.variant, self.seed, self.n_elements, self.p_max_dbm)


def fmt(value) -> str:
    """CSV cell text; floats get 17 significant digits."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def _row_values(row: ResultRow) -> list:
    return [getattr(row, name) for name in ResultRow.header()]


def run_one(spec: AlgorithmSpec, cfg: ExperimentConfig, seed: int, point, overrides=None):
    """Run one scheme on one channel draw; returns ``(row, ar_trace, wall_ms)``.

    ``overrides`` replaces scenario fields (config units).  Solver errors are
    caught and reported in ``row.status``.
    """
    scn = cfg.scenario_at(point, **(overrides or {}))
    t0 = time.perf_counter()
    o = spec.options
    p_dbm = float(cfg.scenario_fields_at(point, **(overrides or {}))["p_max_dbm"])
    try:
        ch = generate(scn, seed)
        if spec.family == "max_snr_pa":
            st, tr = run_max_snr_pa(scn, ch, eps=o["eps"], max_iters=o["max_iters"], xi=o["xi"],
                                    max_inner=o["max_inner"], reg=cfg.regression)
            p_bs, p_irs = tr.iterates[-1].p_bs, tr.iterates[-1].p_irs
        elif spec.family == "fixed_beta":
            st, tr = run_fixed_beta(scn, ch, o["beta"], eps=o["eps"], max_iters=o["max_iters"], xi=o["xi"],
                                    max_inner=o["max_inner"])
            p_bs, p_irs = tr.iterates[-1].p_bs, tr.iterates[-1].p_irs
        elif spec.family == "max_ar_cffp":
            st, tr = run_max_ar_cffp(scn, ch, variant=o["variant"], zeta=o["zeta"], max_iters=o["max_iters"])
            p_bs = float(np.vdot(st.v1, st.v1).real)
            p_irs = tr.iterates[-1].total_power - p_bs
        elif spec.family == "passive_irs":
            st, tr = run_passive_irs(scn, ch, o["iters"])
            p_bs, p_irs = tr.p_bs, tr.p_irs
        elif spec.family == "random_phase":
            st, tr = run_random_phase(scn, ch, seed, o["rounds"], cfg.regression)
            p_bs, p_irs = tr.p_bs, tr.p_irs
        else:
            st, tr = run_no_irs(scn, ch)
            p_bs, p_irs = tr.p_bs, tr.p_irs
        ar = list(map(float, tr.ar))
        status = "ok"
        if spec.family == "max_ar_cffp" and tr.meta.get("stopped"):
            status = f"stopped:{tr.meta['stopped']}"
        row = ResultRow(spec.id, spec.variant, seed, scn.n_elements, p_dbm, ar[-1], tr.iterations,
                        float(p_bs), float(p_irs), bool(tr.converged), status)
    except Exception as exc:  # a failed run is flagged, the batch goes on
        ar = []
        row = ResultRow(spec.id, spec.variant, seed, scn.n_elements, p_dbm, 0.0, 0, 0.0, 0.0, False,
                        f"failed:{type(exc).__name__}")
    return row, ar, (time.perf_counter() - t0) * 1e3


def _run_task(args):
    return run_one(*args)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("AIRIS_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def run_batch(cfg: ExperimentConfig, threads: int = 1):
    """All (algorithm, seed, point) runs, sorted; returns a list of results."""
    tasks = [(spec, cfg, seed, point) for spec in cfg.algorithms for seed in cfg.seeds for point in cfg.points()]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_run_task(t) for t in tasks]
    results.sort(key=lambda r: r[0].sort_key())
    return results


def write_manifest(cfg: ExperimentConfig, out: Path, command: str) -> None:
    doc = {"command": command, "version": __version__, "config_hash": cfg.digest(), "config": cfg.to_dict()}
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_results(results, out: Path) -> list:
    rows = [r[0] for r in results]
    write_csv(out / "results.csv", ResultRow.header(), map(_row_values, rows))
    write_csv(
        out / "timings.csv",
        ["algorithm", "variant", "seed", "n_elements", "p_max_dbm", "wall_ms"],
        ([r.algorithm, r.variant, r.seed, r.n_elements, r.p_max_dbm, ms] for r, _, ms in results),
    )
    return rows


def _trace_name(row: ResultRow) -> str:
    alg = f"{row.algorithm}_{row.variant}" if row.variant else row.algorithm
    return f"{alg}_N{row.n_elements}_P{row.p_max_dbm:g}_s{row.seed}.csv"


def cmd_run(cfg: ExperimentConfig, out, threads: int = 1) -> list:
    """results.csv, timings.csv, per-run traces and manifest.json."""
    out = Path(out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    results = run_batch(cfg, threads)
    rows = _write_results(results, out)
    for row, ar, _ in results:
        write_csv(out / "traces" / _trace_name(row), ["iteration", "ar_bits"], enumerate(ar))
    write_manifest(cfg, out, "run")
    return rows


def read_results(out) -> list:
    """Rows of a results.csv written by :func:`cmd_run` or :func:`cmd_sweep`."""
    with open(Path(out) / "results.csv", newline="", encoding="utf-8") as fh:
        rows = []
        for d in csv.DictReader(fh):
            rows.append(ResultRow(
                d["algorithm"], d["variant"], int(d["seed"]), int(d["n_elements"]), float(d["p_max_dbm"]),
                float(d["ar_bits"]), int(d["iterations"]), float(d["p_bs_w"]), float(d["p_irs_w"]),
                d["converged"] == "1", d["status"],
            ))
    return rows


def summarize(rows, axis: str) -> list:
    """Mean and standard error of the rate per (algorithm, variant, axis value)."""
    groups: dict = {}
    for r in rows:
        if r.status.startswith("failed"):
            continue
        x = r.n_elements if axis == "n_elements" else r.p_max_dbm
        groups.setdefault((r.algorithm, r.variant, x), []).append(r.ar_bits)
    out = []
    for (alg, var, x), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        out.append((alg, var, x, arr.size, float(arr.mean()), se))
    return out


def cmd_sweep(cfg: ExperimentConfig, out, threads: int = 1) -> list:
    """results.csv plus summary.csv (mean and stderr per point) and sweep.svg."""
    if cfg.sweep_axis == "none" or not cfg.sweep_values:
        raise ValueError("sweep needs a sweep axis with at least one value")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = _write_results(run_batch(cfg, threads), out)
    summary = summarize(rows, cfg.sweep_axis)
    write_csv(out / "summary.csv", ["algorithm", "variant", cfg.sweep_axis, "n_seeds", "mean_ar_bits", "stderr_ar_bits"],
              summary)
    series: dict = {}
    for alg, var, x, _, mean, _ in summary:
        xs, ys = series.setdefault(f"{alg} ({var})" if var else alg, ([], []))
        xs.append(float(x))
        ys.append(mean)
    xlabel = "N (IRS elements)" if cfg.sweep_axis == "n_elements" else "P_max (dBm)"
    line_plot(series, out / "sweep.svg", "Mean achievable rate", xlabel, "AR (bit/s/Hz)")
    write_manifest(cfg, out, "sweep")
    return summary


def fit_curves(cfg: ExperimentConfig, seed: int):
    """True and fitted ``log2(1 + f(beta))`` on a fine grid.

    Returns ``(grid, true_ar, {(J, Q): fitted_ar}, {(J, Q): max_abs_err})``;
    the error is measured on ``f`` itself, in SNR units.
    """
    scn = cfg.scenario_at(None)
    ch = generate(scn, seed)
    st0 = initial_pa_state(scn, ch)
    co = pa_coefficients(scn, ch, st0.theta_dir, st0.v)
    grid = np.linspace(0.0, 1.0, FIT_GRID)
    true_f = eval_f_beta(co, grid)
    fitted, errs = {}, {}
    for j, q in FIT_SETTINGS:
        reg = RegressionConfig(q_order=q, j_samples=j)
        betas = sample_betas(reg.j_samples)
        vals = eval_f_beta(co, betas)
        scale = max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
        coeffs, _ = fit_polynomial(betas, vals / scale, q)
        poly = np.polynomial.polynomial.polyval(grid, coeffs) * scale
        errs[(j, q)] = float(np.max(np.abs(poly - true_f)))
        fitted[(j, q)] = np.log2(1.0 + np.clip(poly, 0.0, None))
    return grid, np.log2(1.0 + true_f), fitted, errs


def cmd_fit_beta(cfg: ExperimentConfig, out, seed: int | None = None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.fit_beta_seed if seed is None else seed
    grid, true_ar, fitted, errs = fit_curves(cfg, seed)
    rows = [("true", 0, 0, b, y) for b, y in zip(grid, true_ar)]
    for (j, q), ys in fitted.items():
        rows.extend((f"fit_J{j}_Q{q}", j, q, b, y) for b, y in zip(grid, ys))
    write_csv(out / "fit_beta.csv", ["curve", "j_samples", "q_order", "beta", "ar_bits"], rows)
    write_csv(out / "fit_errors.csv", ["j_samples", "q_order", "max_abs_err_snr"],
              [(j, q, e) for (j, q), e in errs.items()])
    series = {"true": (grid, true_ar)}
    series.update({f"J={j}, Q={q}": (grid, ys) for (j, q), ys in fitted.items()})
    line_plot(series, out / "fit_beta.svg", f"Rate vs PA factor (seed {seed})", "beta", "AR (bit/s/Hz)")
    write_manifest(cfg, out, "fit-beta")
    return errs


def _conv_task(args):
    spec, cfg, seed, n = args
    row, ar, _ = run_one(spec, cfg, seed, None, {"n_elements": n})
    return row, ar


def cmd_convergence(cfg: ExperimentConfig, out, threads: int = 1):
    """Per-iteration rate for each algorithm, N in ``convergence_n`` and seed."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(spec, cfg, seed, n) for spec in cfg.algorithms for n in cfg.convergence_n for seed in cfg.seeds]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_conv_task, tasks))
    else:
        results = [_conv_task(t) for t in tasks]
    results.sort(key=lambda r: r[0].sort_key())
    trace_rows = [
        (r.algorithm, r.variant, r.n_elements, r.seed, k, a) for r, ar in results for k, a in enumerate(ar)
    ]
    write_csv(out / "convergence.csv", ["algorithm", "variant", "n_elements", "seed", "iteration", "ar_bits"],
              trace_rows)
    # mean trace per (algorithm, N); finished runs hold their final value
    series = {}
    groups: dict = {}
    for r, ar in results:
        if ar:
            label = f"{r.algorithm} ({r.variant})" if r.variant else r.algorithm
            groups.setdefault((label, r.n_elements), []).append(ar)
    for (alg, n), traces in sorted(groups.items()):
        length = max(map(len, traces))
        padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces])
        series[f"{alg} N={n}"] = (np.arange(length), padded.mean(axis=0))
    if series:
        line_plot(series, out / "convergence.svg", "Convergence", "iteration", "AR (bit/s/Hz)")
    write_manifest(cfg, out, "convergence")
    return results
