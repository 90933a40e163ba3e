"""Factorial simulation study: generate, fit, score, summarise.

Every (cell, replicate) pair owns a seed derived from the master seed, so
replicates are independent, individually re-runnable, and produce the same
rows whatever the worker count. Wall times go to ``timings.csv`` so that
``results.csv`` stays byte-reproducible.
"""

from __future__ import annotations

import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import storage
from .evaluate import score_sequence, score_static
from .evolve import EvoConfig, run_evolution
from .optim import fit_ecr, fit_static
from .simgen import make_dataset, stream_seed

log = logging.getLogger(__name__)


def replicate_seed(master_seed, cell, replicate):
    return stream_seed(master_seed, cell.cell_id, replicate)


def _fit_seeds(seed):
    # Child streams: optimiser init and evolution.
    init_ss, evo_ss = np.random.SeedSequence(seed).spawn(2)
    return int(init_ss.generate_state(1)[0]), int(evo_ss.generate_state(1)[0])


def run_method(method, ts, gt, hp, evo_cfg, seed):
    """Fit one method on one dataset. Returns ``(graphs, report, score, extra)``."""
    init_seed, evo_seed = _fit_seeds(seed)
    extra = {}
    if method == "static":
        w, report = fit_static(ts, hp, seed=init_seed)
        return w, report, score_static(gt, w, hp.tau), extra
    gs, report = fit_ecr(ts, hp, seed=init_seed)
    if method == "ecr+evolve":
        cfg = EvoConfig(**{**vars(evo_cfg), "seed": evo_seed})
        gs, history = run_evolution(ts, hp, cfg, gs)
        extra["history"] = history
        report.final_loss = history[-1]["best_ever"]
    elif method != "ecr":
        raise ValueError(f"unknown method {method!r}")
    return gs.graphs, report, score_sequence(gt, gs, hp.tau), extra


def run_replicate(cfg, cell, replicate):
    """Generate one dataset and fit every configured method on it.

    Returns ``(result_rows, timing_rows, evolution_rows)``; failures become
    rows with a non-empty ``error`` column.
    """
    seed = replicate_seed(cfg.master_seed, cell, replicate)
    base = {
        "cell_id": cell.cell_id,
        "d": cell.d,
        "K": cell.K,
        "samples_per_regime": cell.samples_per_regime,
        "replicate": replicate,
        "seed": seed,
    }
    rows, timings, evo_rows = [], [], []
    try:
        gt, ts = make_dataset(cfg.gen_config(cell), seed)
    except Exception as exc:  # recorded per row, the study continues
        for method in cfg.methods:
            rows.append({**base, "method": method, "error": f"generate: {exc}"})
        return rows, timings, evo_rows
    for method in cfg.methods:
        start = time.perf_counter()
        try:
            _, report, card, extra = run_method(method, ts, gt, cfg.hp, cfg.evo, seed)
        except Exception as exc:
            rows.append({**base, "method": method, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rows.append(
            {
                **base,
                "method": method,
                "total_shd": card.total_shd,
                "per_regime_shd": ";".join(str(s) for s in card.per_regime_shd),
                "final_loss": repr(float(report.final_loss)),
                "iterations": report.iterations,
                "stop_reason": report.stop_reason,
                "error": "",
            }
        )
        timings.append(
            {
                "cell_id": cell.cell_id,
                "replicate": replicate,
                "method": method,
                "wall_ms": round(1000 * (time.perf_counter() - start), 1),
            }
        )
        for h in extra.get("history", []):
            evo_rows.append({"cell_id": cell.cell_id, "replicate": replicate, **h})
    return rows, timings, evo_rows


def _task(args):
    return run_replicate(*args)


def sort_key(row):
    return (int(row["d"]), int(row["K"]), int(row["samples_per_regime"]), int(row["replicate"]), row["method"])


def run_experiment(cfg, out_dir, parallel=1):
    """Run every (cell, replicate) and write the result tables.

    Returns ``(results, summary)`` as lists of dicts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, cell, r) for cell in cfg.cells() for r in range(cfg.replicates)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outputs = list(pool.map(_task, tasks))
    else:
        outputs = [_task(t) for t in tasks]

    results = sorted((r for o in outputs for r in o[0]), key=sort_key)
    timings = sorted((r for o in outputs for r in o[1]), key=lambda r: (r["cell_id"], r["replicate"], r["method"]))
    evo_rows = sorted(
        (r for o in outputs for r in o[2]), key=lambda r: (r["cell_id"], r["replicate"], r["generation"])
    )
    storage.write_rows(out / "results.csv", results, storage.RESULT_FIELDS)
    storage.write_rows(out / "timings.csv", timings, storage.TIMING_FIELDS)
    if evo_rows:
        storage.write_rows(out / "evolution.csv", evo_rows, list(evo_rows[0]))
    summary = summarize(results)
    write_summary(out, results, summary)
    return results, summary


# ---------------------------------------------------------------------------
# summaries


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    # Population standard deviation: a single replicate has spread 0.
    return float(values.mean()), float(values.std())


def _fmt(x):
    return repr(round(float(x), 12))


def ok_rows(rows):
    return [r for r in rows if not r.get("error") and r.get("total_shd", "") != ""]


def summarize(rows):
    """Mean and standard deviation of total SHD per (cell, method)."""
    groups = defaultdict(list)
    meta = {}
    for r in ok_rows(rows):
        key = (int(r["d"]), int(r["K"]), int(r["samples_per_regime"]), r["method"])
        groups[key].append(float(r["total_shd"]))
        meta[key] = r["cell_id"]
    summary = []
    for key in sorted(groups):
        d, K, n, method = key
        mean, std = _mean_std(groups[key])
        summary.append(
            {
                "cell_id": meta[key],
                "d": d,
                "K": K,
                "samples_per_regime": n,
                "method": method,
                "mean_total_shd": _fmt(mean),
                "std_total_shd": _fmt(std),
                "replicates": len(groups[key]),
            }
        )
    return summary


def advantage_table(summary, baseline="static", method="ecr"):
    """``mean(baseline) - mean(method)`` per (d, K), averaged over sample sizes."""
    by_cell = defaultdict(dict)
    for s in summary:
        by_cell[(int(s["d"]), int(s["K"]), int(s["samples_per_regime"]))][s["method"]] = float(s["mean_total_shd"])
    per_dk = defaultdict(list)
    for (d, K, _), means in by_cell.items():
        if baseline in means and method in means:
            per_dk[(d, K)].append(means[baseline] - means[method])
    return [
        {"d": d, "K": K, "advantage": _fmt(np.mean(v)), "sample_levels": len(v)} for (d, K), v in sorted(per_dk.items())
    ]


def _pooled(rows, keys):
    groups = defaultdict(list)
    for r in ok_rows(rows):
        groups[tuple(int(r[k]) for k in keys) + (r["method"],)].append(float(r["total_shd"]))
    out = []
    for key in sorted(groups):
        mean, std = _mean_std(groups[key])
        row = dict(zip(keys + ["method"], key))
        row.update({"mean_total_shd": _fmt(mean), "std_total_shd": _fmt(std), "runs": len(groups[key])})
        out.append(row)
    return out


def plot_tables(rows, summary):
    """Plot-ready tables keyed by figure name."""
    return {
        "fig1_shd_vs_K": _pooled(rows, ["d", "K"]),
        "fig2_by_d": _pooled(rows, ["d"]),
        "fig3_by_K": _pooled(rows, ["K"]),
        "fig4_advantage": advantage_table(summary),
        "fig5_sample_size": _pooled(rows, ["d", "K", "samples_per_regime"]),
    }


def write_summary(out, rows, summary=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(rows) if summary is None else summary
    storage.write_rows(out / "summary.csv", summary, storage.SUMMARY_FIELDS)
    for name, table in plot_tables(rows, summary).items():
        if table:
            storage.write_rows(out / f"{name}.csv", table, list(table[0]))
    return summary


# ---------------------------------------------------------------------------
# acceptance bounds on a finished study


def check_bounds(summary):
    """Desk-scale targets the study should meet. Returns violation messages."""
    means = {
        (int(s["d"]), int(s["K"]), int(s["samples_per_regime"]), s["method"]): float(s["mean_total_shd"])
        for s in summary
    }
    problems = []
    easy = (5, 3, 2000)
    if easy + ("ecr",) in means and easy + ("static",) in means:
        e, s = means[easy + ("ecr",)], means[easy + ("static",)]
        if e > 3:
            problems.append(f"d=5,K=3: ECR mean SHD {e} > 3")
        if s < e + 2:
            problems.append(f"d=5,K=3: static mean SHD {s} < ECR mean + 2 ({e + 2})")
    stress = (5, 10, 2000)
    if stress + ("ecr",) in means and stress + ("static",) in means:
        gap = means[stress + ("static",)] - means[stress + ("ecr",)]
        if gap < 10:
            problems.append(f"d=5,K=10: static - ECR gap {gap} < 10")

    cells = sorted({k[:3] for k in means if k[3] == "ecr" and k[:3] + ("static",) in means})
    if cells:
        wins = sum(means[c + ("ecr",)] < means[c + ("static",)] for c in cells)
        need = math.ceil(len(cells) * 8 / 9)
        if wins < need:
            problems.append(f"ECR beats static in {wins}/{len(cells)} cells, need {need}")
        for d in sorted({c[0] for c in cells}):
            for n in sorted({c[2] for c in cells if c[0] == d}):
                seq = [means[c + ("static",)] for c in cells if c[0] == d and c[2] == n]
                drops = sum(b < a for a, b in zip(seq, seq[1:]))
                if drops > 1:
                    problems.append(f"d={d}, n={n}: static SHD decreases in K {drops} times (1 allowed)")
    return problems
