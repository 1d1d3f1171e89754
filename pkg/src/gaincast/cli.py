"""Command-line front end: data generation, training, audits, benchmarks.

Verbs: generate, train, audit-params, sweep-n, bench, report.
Exit codes: 0 success, 1 validation error, 2 numeric failure,
3 audit mismatch.
"""
from __future__ import annotations

import argparse
import csv
import sys
import traceback
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autoencoder import AeModel, compression_ratio, reconstruction_metrics
from .checkpoint import load_tensors, save_tensors
from .config import ConfigError, ExperimentConfig, load_config
from .data import flatten_windows, generate_trajectories
from .dataio import load_dataset, save_dataset
from .pipeline import bench_predictor
from .predictor import (PredictorConfig, PredictorModel, SEPlacement,
                        complexity_audit, param_count, param_reduction)
from .stats import diversity_report
from .training import (DivergenceError, TrainPlan, run_strategy, train_ae,
                       delta_rmse_pct)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_AUDIT = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_metrics_row(path: Path, row: dict):
    exists = path.exists()
    with path.open("a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(row))
        if not exists:
            writer.writeheader()
        writer.writerow(row)


# -- generate -----------------------------------------------------------


def cmd_generate(args):
    cfg = load_config(args.config, seed=args.seed)
    if args.n is not None:
        cfg.data["n_trajectories"] = args.n
    gen = cfg.generator_config()
    ds = generate_trajectories(gen, window=cfg.window)
    out = _out_dir(args)
    path = out / "dataset.ldat"
    save_dataset(path, ds)
    rep = diversity_report(ds, pair_budget=args.pair_budget, seed=cfg.seed)
    print(f"wrote {path} ({gen.n_trajectories} trajectories, T={gen.steps}, "
          f"n_ap={gen.n_ap}, W={cfg.window})")
    print(f"train/val split: {len(ds.train_ids)}/{len(ds.val_ids)}")
    print(f"pearson diversity: mean={rep.mean:.3f} std={rep.std:.3f} "
          f"median={rep.median:.3f} over {rep.n_pairs} pairs")
    curve_path = out / "stepwise_correlation.csv"
    with curve_path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "mean_correlation"])
        for i, v in enumerate(rep.stepwise, start=2):
            w.writerow([i, f"{v:.6f}"])
    print(f"wrote {curve_path}")
    return EXIT_OK


# -- train --------------------------------------------------------------


def cmd_train(args):
    cfg = load_config(args.config, seed=args.seed)
    ds_path = Path(args.dataset)
    if not ds_path.exists():
        raise CliError(
            f"dataset not found: {ds_path} (run `gaincast generate` first)")
    ds = load_dataset(ds_path)
    plan = cfg.train_plan(args.strategy)
    dtype = np.float64 if args.precision == "f64" else np.float32
    pred_cfg = cfg.predictor_config()
    predictor = PredictorModel(pred_cfg, seed=cfg.seed, dtype=dtype)

    ae = None
    if plan.strategy != "baseline-no-ae":
        ae = AeModel(seed=cfg.seed, dtype=dtype)
        if plan.strategy == "compression-aware":
            if not args.ae_checkpoint:
                raise CliError(
                    "compression-aware training needs --ae-checkpoint pointing at "
                    "a trained autoencoder (train one with --strategy independent "
                    "or a dedicated AE run first)")
            ae.load_state(load_tensors(args.ae_checkpoint))
        elif args.ae_checkpoint:
            ae.load_state(load_tensors(args.ae_checkpoint))

    out = _out_dir(args)
    run_dir = out / f"run-{plan.strategy}-{cfg.digest()}"
    run_dir.mkdir(parents=True, exist_ok=True)

    try:
        ae, predictor, report = run_strategy(plan.strategy, ds, plan, ae, predictor)
    except (DivergenceError, FloatingPointError) as e:
        raise CliError(f"training diverged: {e}", EXIT_NUMERIC) from e

    if ae is not None:
        save_tensors(run_dir / "ae.ckpt", ae.state())
    save_tensors(run_dir / "predictor.ckpt", predictor.state())
    (run_dir / "config.digest").write_text(cfg.digest() + "\n")
    _write_report(run_dir / "report.txt", report, cfg, pred_cfg)
    _write_metrics_row(out / "metrics.csv", {
        "strategy": plan.strategy,
        "f": pred_cfg.forward_hidden,
        "b": pred_cfg.backward_hidden,
        "placement": pred_cfg.placement.value,
        "seed": plan.seed,
        "rmse": f"{report.rmse:.6f}",
        "delta_pct": "" if report.delta_pct is None else f"{report.delta_pct:.2f}",
        "params": param_count(pred_cfg),
        "wall_clock_s": f"{report.wall_clock_s:.2f}",
    })
    print(f"{plan.strategy}: validation RMSE {report.rmse:.4f} "
          f"after {report.iterations} iterations "
          f"({'early stop' if report.stopped_early else 'budget'})")
    print(f"artifacts in {run_dir}")
    return EXIT_OK


def _write_report(path: Path, report, cfg: ExperimentConfig, pred_cfg):
    lines = [
        "[run]",
        f"strategy = {report.strategy}",
        f"rmse = {report.rmse:.6f}",
        f"delta_pct = {report.delta_pct if report.delta_pct is not None else ''}",
        f"iterations = {report.iterations}",
        f"stopped_early = {report.stopped_early}",
        f"wall_clock_s = {report.wall_clock_s:.2f}",
        f"config_digest = {cfg.digest()}",
        f"predictor = ({pred_cfg.forward_hidden},{pred_cfg.backward_hidden})"
        f"/{pred_cfg.placement.value}",
        "",
        "[history]",
    ]
    lines += [f"iter_{it} = train={tr:.6f} val={vl:.6f}"
              for it, tr, vl in report.history]
    path.write_text("\n".join(lines) + "\n")


# -- audit-params -------------------------------------------------------


def cmd_audit_params(args):
    report = complexity_audit()
    header = (f"{'(f,b)':>10} | {'placement':>9} | {'params':>8} "
              f"{'ok':>3} | {'red %':>7} {'ok':>3}")
    print(header)
    print("-" * len(header))
    for cell in report.cells:
        cfg = cell.config
        print(f"({cfg.forward_hidden:>3},{cfg.backward_hidden:>3}) | "
              f"{cfg.placement.value:>9} | {cell.computed_params:>8} "
              f"{'OK' if cell.params_ok else 'BAD':>3} | "
              f"{cell.computed_reduction:>7.2f} "
              f"{'OK' if cell.reduction_ok else 'BAD':>3}")
    if not report.passed:
        print(f"AUDIT FAILED: {len(report.mismatches)} mismatching cells")
        for cell in report.mismatches:
            print(f"  ({cell.config.forward_hidden},{cell.config.backward_hidden})"
                  f"/{cell.config.placement.value}: expected "
                  f"{cell.expected_params}/{cell.expected_reduction}, got "
                  f"{cell.computed_params}/{cell.computed_reduction}")
        return EXIT_AUDIT
    retained, reduction = compression_ratio()
    print(f"all {len(report.cells)} cells match; compressor retains "
          f"{retained:.4f} of features ({reduction:.2f}% payload reduction)")
    return EXIT_OK


# -- sweep-n ------------------------------------------------------------

SWEEP_PREDICTORS = [
    ("baseline-no-ae", PredictorConfig(64, 128, SEPlacement.BEFORE)),
    ("baseline-no-ae", PredictorConfig(64, 128, SEPlacement.NONE)),
    ("independent", PredictorConfig(64, 128, SEPlacement.NONE)),
    ("independent", PredictorConfig(64, 128, SEPlacement.BEFORE)),
    ("compression-aware", PredictorConfig(64, 128, SEPlacement.BEFORE)),
    ("end-to-end", PredictorConfig(64, 128, SEPlacement.BEFORE)),
]


def cmd_sweep_n(args):
    cfg = load_config(args.config, seed=args.seed)
    sizes = [int(v) for v in args.sizes.split(",")]
    if not sizes:
        raise CliError("empty N list")
    if any(n < 2 for n in sizes):
        raise CliError("dataset size must be >= 2 (diversity undefined below that)")
    out = _out_dir(args)
    rows = []
    for n in sizes:
        try:
            rows.append(_sweep_one(cfg, n, args))
        except Exception as e:  # isolate per-N failures, keep sweeping
            print(f"N={n} FAILED: {e}", file=sys.stderr)
            if args.debug:
                traceback.print_exc()
    if not rows:
        raise CliError("every sweep point failed", EXIT_NUMERIC)
    fieldnames = list(rows[0])
    path = out / "sweep_n.csv"
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames)
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {path}")
    for row in rows:
        print("  " + " ".join(f"{k}={v}" for k, v in row.items()))
    return EXIT_OK


def _sweep_one(cfg: ExperimentConfig, n: int, args) -> dict:
    gen = cfg.generator_config()
    gen.n_trajectories = n
    ds = generate_trajectories(gen, window=cfg.window)
    div = diversity_report(ds, pair_budget=args.pair_budget, seed=cfg.seed)
    plan = cfg.train_plan("independent")
    ae = AeModel(seed=cfg.seed)
    train_ae(ae, ds, plan)
    x_val, _ = ds.windows("val")
    metrics = reconstruction_metrics(ae, flatten_windows(x_val))
    row = {
        "N": n,
        "pearson_mean": f"{div.mean:.3f}",
        "pearson_std": f"{div.std:.3f}",
        "pearson_median": f"{div.median:.3f}",
        "ae_mse": f"{metrics.mse:.4f}",
        "ae_rmse": f"{metrics.rmse:.4f}",
        "ae_r2": f"{metrics.r2:.4f}",
    }
    if args.ae_only:
        return row
    for strategy, pred_cfg in SWEEP_PREDICTORS:
        predictor = PredictorModel(pred_cfg, seed=cfg.seed)
        plan_s = cfg.train_plan(strategy)
        _, _, report = run_strategy(strategy, ds, plan_s,
                                    None if strategy == "baseline-no-ae" else ae,
                                    predictor)
        tag = f"{strategy}:{pred_cfg.placement.value}"
        row[f"rmse[{tag}]"] = f"{report.rmse:.4f}"
    return row


# -- bench --------------------------------------------------------------


def cmd_bench(args):
    cfg = load_config(args.config, seed=args.seed)
    batch = cfg.bench.get("batch", args.batch)
    reps = cfg.bench.get("repetitions", args.repetitions)
    window = cfg.window

    def build(name, pred_cfg, ckpt):
        model = PredictorModel(pred_cfg, seed=cfg.seed)
        if ckpt:
            p = Path(ckpt)
            if not p.exists():
                raise CliError(f"checkpoint not found: {p} "
                               "(train one or omit the flag to bench seeded weights)")
            model.load_state(load_tensors(p))
        return name, model

    models = [
        build("bilstm", PredictorConfig(256, 256, SEPlacement.NONE),
              args.bilstm_checkpoint),
        build("se-bilstm", PredictorConfig(64, 128, SEPlacement.BEFORE),
              args.se_checkpoint),
    ]
    results = []
    reference = None
    for name, model in models:
        for optimized in (False, True):
            r = bench_predictor(model, window, optimized, batch=batch,
                                repetitions=reps, seed=cfg.seed, label=name)
            if reference is None:
                reference = r
            r.with_reference(reference)
            results.append(r)

    out = _out_dir(args)
    path = out / "bench.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "optimized", "batch", "ls_ms", "qps",
                    "improvement_pct"])
        for r in results:
            w.writerow([r.label.rsplit("/", 1)[0],
                        r.label.endswith("optimized"), r.batch,
                        f"{r.latency_ms:.6f}", f"{r.qps:.1f}",
                        f"{r.improvement_pct:.1f}"])
    print(f"{'model':>22} {'batch':>6} {'ls(ms)':>10} {'qps':>12} {'imp%':>8}")
    for r in results:
        print(f"{r.label:>22} {r.batch:>6} {r.latency_ms:>10.5f} "
              f"{r.qps:>12.1f} {r.improvement_pct:>8.1f}")
    print(f"wrote {path}")
    return EXIT_OK


# -- report -------------------------------------------------------------


def cmd_report(args):
    out = Path(args.out_dir)
    found = False
    for name in ("metrics.csv", "sweep_n.csv", "bench.csv"):
        p = out / name
        if not p.exists():
            continue
        found = True
        print(f"== {name} ==")
        with p.open() as f:
            for line in f:
                print("  " + line.rstrip())
    if not found:
        raise CliError(f"no logged artifacts under {out}")
    return EXIT_OK


# -- entry point --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaincast",
                                description="Compressed gain-window transport "
                                            "and short-horizon prediction")
    p.add_argument("--config", default=None, help="experiment INI file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--precision", choices=("f32", "f64"), default="f32")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--n", type=int, default=None, help="trajectory count override")
    g.add_argument("--pair-budget", type=int, default=300)
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train one strategy")
    t.add_argument("--dataset", required=True)
    t.add_argument("--strategy", required=True,
                   choices=("baseline-no-ae", "independent",
                            "compression-aware", "end-to-end"))
    t.add_argument("--ae-checkpoint", default=None)
    t.set_defaults(fn=cmd_train)

    a = sub.add_parser("audit-params", help="verify the complexity table")
    a.set_defaults(fn=cmd_audit_params)

    s = sub.add_parser("sweep-n", help="dataset-size sweep")
    s.add_argument("--sizes", default="200,1000,2500")
    s.add_argument("--pair-budget", type=int, default=300)
    s.add_argument("--ae-only", action="store_true",
                   help="skip predictor training, report AE + diversity only")
    s.add_argument("--debug", action="store_true")
    s.set_defaults(fn=cmd_sweep_n)

    b = sub.add_parser("bench", help="latency/throughput benchmark")
    b.add_argument("--batch", type=int, default=250)
    b.add_argument("--repetitions", type=int, default=10)
    b.add_argument("--bilstm-checkpoint", default=None)
    b.add_argument("--se-checkpoint", default=None)
    b.set_defaults(fn=cmd_bench)

    r = sub.add_parser("report", help="re-print logged tables")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DivergenceError, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
