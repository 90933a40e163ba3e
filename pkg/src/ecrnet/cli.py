"""Command-line entry point: ``ecrnet {simulate,fit,score,experiment,summarize}``.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
3 acceptance-bound violation under ``experiment --check``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import experiment as exp
from . import storage
from .config import METHODS, ConfigError, ExperimentConfig, load_config, parse_overrides
from .evaluate import score_sequence, score_static
from .model import HyperParams
from .simgen import make_dataset

OUT_ENV = "ECRNET_OUT"

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_root(args, cfg=None):
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path(cfg.out if cfg is not None else "runs")


def _load(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "full", False):
        cfg.expand_full()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    return cfg


def cmd_simulate(args):
    cfg = _load(args)
    root = _out_root(args, cfg) / "data"
    jobs = [(cell, r) for cell in cfg.cells() for r in range(cfg.replicates)]
    if args.dry_run:
        for cell, r in jobs:
            print(f"{cell.cell_id}\treplicate={r}\tT={cell.T}\tseed={exp.replicate_seed(cfg.master_seed, cell, r)}")
        return EXIT_OK
    for cell, r in jobs:
        seed = exp.replicate_seed(cfg.master_seed, cell, r)
        gt, ts = make_dataset(cfg.gen_config(cell), seed)
        target = root / cell.cell_id / f"rep{r}"
        storage.write_dataset(
            target,
            gt,
            ts,
            extra={"cell_id": cell.cell_id, "replicate": r, "master_seed": cfg.master_seed,
                   "samples_per_regime": cell.samples_per_regime},
        )
        print(target)
    return EXIT_OK


def _hyperparams(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    hp, evo = cfg.hp, cfg.evo
    if args.hp:
        values = {k.split(".", 1)[1]: v for k, v in parse_overrides(args.hp).items()}
        hp = hp.replace(**values)
    return hp, evo


def cmd_fit(args):
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    hp, evo = _hyperparams(args)
    gt, ts, meta = storage.read_dataset(args.dataset)
    seed = args.seed if args.seed is not None else (meta.get("seed") or 0)
    graphs, report, card, extra = exp.run_method(args.method, ts, gt, hp, evo, seed)
    out = Path(args.out) if args.out else Path(args.dataset) / f"model_{args.method.replace('+', '_')}"
    storage.write_model(out, args.method, graphs, report, hp, extra={"dataset": str(args.dataset), "seed": seed})
    if "history" in extra:
        storage.write_rows(out / "evolution.csv", extra["history"], list(extra["history"][0]))
    print(f"model: {out}")
    print(f"stop: {report.stop_reason} after {report.iterations} iterations, loss {report.final_loss:.6g}")
    return EXIT_OK


def cmd_score(args):
    method, graphs, info = storage.read_model(args.model)
    gt, _, meta = storage.read_dataset(args.truth)
    tau = args.tau if args.tau is not None else info.get("hyperparams", {}).get("tau", HyperParams().tau)
    K, d = gt.graphs.K, gt.graphs.d
    if graphs.shape[1:] != (d, d) or graphs.shape[0] not in (1, K) or (method != "static" and graphs.shape[0] != K):
        raise ValueError(f"model graphs have shape {graphs.shape}, truth has shape {(K, d, d)}")
    card = score_static(gt, graphs[0], tau) if method == "static" else score_sequence(gt, graphs, tau)
    report = info.get("report") or {}
    row = {
        "cell_id": meta.get("cell_id", ""),
        "d": d,
        "K": K,
        "samples_per_regime": meta.get("samples_per_regime", ""),
        "replicate": meta.get("replicate", ""),
        "seed": meta.get("seed", ""),
        "method": method,
        "total_shd": card.total_shd,
        "per_regime_shd": ";".join(str(s) for s in card.per_regime_shd),
        "final_loss": repr(float(report["final_loss"])) if "final_loss" in report else "",
        "iterations": report.get("iterations", ""),
        "stop_reason": report.get("stop_reason", ""),
        "error": "",
    }
    if args.csv:
        writer = csv.DictWriter(sys.stdout, fieldnames=storage.RESULT_FIELDS, lineterminator="\n")
        writer.writerow(row)
    else:
        for k, s in enumerate(card.per_regime_shd):
            print(f"regime {k}: SHD {s}")
        print(f"total SHD {card.total_shd} (tau={tau})")
    if args.results:
        storage.append_row(args.results, row, storage.RESULT_FIELDS)
    return EXIT_OK


def cmd_experiment(args):
    cfg = _load(args)
    out = _out_root(args, cfg)
    if args.dry_run:
        for cell in cfg.cells():
            print(f"{cell.cell_id}\td={cell.d}\tK={cell.K}\tT={cell.T}\treplicates={cfg.replicates}")
        return EXIT_OK
    results, summary = exp.run_experiment(cfg, out, parallel=args.parallel)
    for s in summary:
        print(f"{s['cell_id']:<18} {s['method']:<11} {float(s['mean_total_shd']):8.2f} +- {float(s['std_total_shd']):.2f}")
    failed = [r for r in results if r.get("error")]
    if failed:
        print(f"{len(failed)} row(s) failed; see {out / 'results.csv'}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.check:
        problems = exp.check_bounds(summary)
        for p in problems:
            print(f"CHECK FAILED: {p}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
    return EXIT_OK


def cmd_summarize(args):
    rows = _read_results(args.results)
    out = Path(args.out) if args.out else Path(args.results).parent
    summary = exp.write_summary(out, rows)
    for a in exp.advantage_table(summary):
        print(f"d={a['d']:<3} K={a['K']:<3} advantage {float(a['advantage']):8.2f}")
    return EXIT_OK


def _read_results(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"d", "K", "samples_per_regime", "method", "total_shd"} - set(reader.fieldnames or [])
        if missing:
            raise UsageError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if row.get("error"):
                rows.append(row)
                continue
            try:
                int(row["d"]), int(row["K"]), int(row["samples_per_regime"]), float(row["total_shd"])
            except (TypeError, ValueError):
                raise UsageError(f"{path}: malformed row at line {lineno}") from None
            rows.append(row)
    return rows


def build_parser():
    p = _Parser(prog="ecrnet", description="Regime-specific causal graph discovery for piecewise VAR(1) series.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate datasets for every cell and replicate")
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--full", action="store_true", help="expand to the full 36-cell design")
    s.add_argument("--dry-run", action="store_true")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a model to one dataset")
    f.add_argument("dataset")
    f.add_argument("--method", default="ecr")
    f.add_argument("--hp", nargs="*", default=[], metavar="KEY=VALUE")
    f.add_argument("--config")
    f.add_argument("--out")
    f.add_argument("--seed", type=int)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("score", help="score a fitted model against a dataset's truth")
    c.add_argument("model")
    c.add_argument("truth")
    c.add_argument("--tau", type=float)
    c.add_argument("--csv", action="store_true", help="emit one results-schema CSV row")
    c.add_argument("--results", help="append the row to this results file")
    c.set_defaults(func=cmd_score)

    e = sub.add_parser("experiment", help="run the factorial study")
    e.add_argument("--config")
    e.add_argument("--out")
    e.add_argument("--seed", type=int)
    e.add_argument("--parallel", type=int, default=1)
    e.add_argument("--full", action="store_true")
    e.add_argument("--dry-run", action="store_true")
    e.add_argument("--check", action="store_true", help="exit 3 if desk-scale targets are missed")
    e.set_defaults(func=cmd_experiment)

    m = sub.add_parser("summarize", help="recompute summary and plot tables from results.csv")
    m.add_argument("results")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if getattr(args, "parallel", 1) < 1:
            raise UsageError("--parallel must be >= 1")
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"ecrnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"ecrnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"ecrnet: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
