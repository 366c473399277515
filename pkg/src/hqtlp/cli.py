"""Command-line entry point: ``hqtlp {generate,train,predict,bench,heatmap}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
See :mod:`hqtlp.runconfig` for the config file layout and the ``HQTLP_``
environment overrides.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import MFForecaster, RNNForecaster
from .checkpoint import load_checkpoint, save_checkpoint
from .datagen import EdgeListError, PRESETS, gen_synthetic, load_edgelist, save_edgelist, summarize
from .dyngraph import ConfigurationError, DynamicNetwork, history_at, scale_weights, unscale
from .heatmap import write_heatmap
from .metrics import aggregate
from .runconfig import METHODS, RunConfig, build, method_seed
from .training import HQTLPForecaster, check_split, predict_online, pretrain, run_online

log = logging.getLogger("hqtlp")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def write_records(path, records) -> None:
    write_csv(path, ("t", "rmse", "ew_kl", "mr"), ((r.t, r.rmse, r.ew_kl, r.mr) for r in records))


def write_log(path, rows) -> None:
    write_csv(path, ("epoch", "window", "loss_g", "loss_d"), rows)


# --------------------------------------------------------------------------
# Shared plumbing
# --------------------------------------------------------------------------

def load_dataset(cfg: RunConfig) -> DynamicNetwork:
    if cfg.dataset is None:
        return gen_synthetic(cfg.synth_config())
    try:
        return load_edgelist(cfg.dataset)
    except FileNotFoundError:
        raise UsageError(f"dataset not found: {cfg.dataset}") from None


def split_for(cfg: RunConfig, T: int) -> int:
    L = cfg.train_config().L
    if T <= L + cfg.test_steps:
        raise ConfigurationError(f"dataset has T={T} snapshots; need T > L + test_steps = "
                                 f"{L} + {cfg.test_steps}")
    split_t = T - cfg.test_steps
    check_split(T, split_t, L)
    return split_t


def make_forecaster(method: str, n: int, cfg: RunConfig, seed: int):
    train = cfg.train_config(seed)
    if method == "hqtlp":
        return HQTLPForecaster(n, train)
    if method in ("lstm", "gru"):
        return RNNForecaster(method, n, train)
    return MFForecaster(method, n, cfg.collapse_config(seed))


def run_method(method: str, net: DynamicNetwork, split_t: int, cfg: RunConfig):
    """One method through the shared split and metrics path."""
    seed = method_seed(cfg.seed, method)
    forecaster = make_forecaster(method, net.n, cfg, seed)
    log_rows: list = []
    start = time.perf_counter()
    records = run_online(net, split_t, forecaster, cfg.train_config(seed), log_rows)
    return records, log_rows, time.perf_counter() - start


def _out_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# --------------------------------------------------------------------------
# Verbs
# --------------------------------------------------------------------------

def cmd_generate(cfg: RunConfig, args) -> int:
    if not args.out:
        raise UsageError("generate needs -o/--out PATH")
    net = gen_synthetic(cfg.synth_config())
    save_edgelist(net, args.out)
    s = summarize(net)
    print(f"n={s['n']} T={s['T']} sparsity={s['sparsity']:.4f} "
          f"weights=[{s['w_min']:.6g}, {s['w_max']:.6g}] -> {args.out}")
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    net = load_dataset(cfg)
    split_t = split_for(cfg, net.T)
    out = _out_dir(cfg.out)
    if args.parallel and len(cfg.methods) > 1:
        with ProcessPoolExecutor(max_workers=len(cfg.methods)) as pool:
            futures = [pool.submit(run_method, m, net, split_t, cfg) for m in cfg.methods]
            results = [f.result() for f in futures]
    else:
        results = []
        for m in cfg.methods:
            log.info("running %s", m)
            results.append(run_method(m, net, split_t, cfg))
    summary = []
    for method, (records, log_rows, seconds) in zip(cfg.methods, results):
        write_records(os.path.join(out, f"{method}.csv"), records)
        if log_rows:
            write_log(os.path.join(out, f"{method}_train_log.csv"), log_rows)
        armse, aew_kl, amr = aggregate(records)
        summary.append((method, armse, aew_kl, amr, seconds))
        print(f"{method:7s} ARMSE={armse:.6g} AEW-KL={aew_kl:.6g} AMR={amr:.6g} ({seconds:.1f}s)")
    write_csv(os.path.join(out, "summary.csv"), ("method", "armse", "aew_kl", "amr", "wall_seconds"),
              summary)
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    net = load_dataset(cfg)
    split_t = split_for(cfg, net.T)
    out = _out_dir(cfg.out)
    train = cfg.train_config()
    forecaster = HQTLPForecaster(net.n, train)
    log_rows: list = []
    pretrain(forecaster, scale_weights(net, split_t), split_t, train, log_rows)
    path = args.checkpoint or os.path.join(out, "model.npz")
    save_checkpoint(path, forecaster, net.with_train_split(split_t).w_max, split_t)
    write_log(os.path.join(out, "train_log.csv"), log_rows)
    print(f"trained on {split_t} snapshots ({len(log_rows)} updates) -> {path}")
    return EXIT_OK


def _load_model(args, net: DynamicNetwork):
    if not args.checkpoint:
        raise UsageError("--checkpoint PATH is required")
    forecaster, meta = load_checkpoint(args.checkpoint)
    if forecaster.dims.n != net.n:
        raise ConfigurationError(f"checkpoint is for n={forecaster.dims.n}, dataset has n={net.n}")
    return forecaster, meta


def cmd_predict(cfg: RunConfig, args) -> int:
    net = load_dataset(cfg)
    forecaster, meta = _load_model(args, net)
    split_t = meta["train_steps"]
    if net.T <= split_t:
        raise ConfigurationError(f"dataset has no snapshots after the {split_t} used in training")
    if net.with_train_split(split_t).w_max != meta["w_max"]:
        raise ConfigurationError("dataset training portion does not match the checkpoint")
    out = _out_dir(cfg.out)
    log_rows: list = []
    records = predict_online(net, split_t, forecaster, forecaster.config, log_rows)
    write_records(os.path.join(out, "hqtlp.csv"), records)
    write_log(os.path.join(out, "online_log.csv"), log_rows)
    preds = DynamicNetwork.from_arrays([r.pred for r in records], validate=False)
    save_edgelist(preds, os.path.join(out, "predictions.tsv"))
    armse, aew_kl, amr = aggregate(records)
    print(f"predicted t={split_t}..{net.T - 1}: ARMSE={armse:.6g} AEW-KL={aew_kl:.6g} AMR={amr:.6g}")
    return EXIT_OK


def cmd_heatmap(cfg: RunConfig, args) -> int:
    if not args.out:
        raise UsageError("heatmap needs -o/--out PATH")
    if args.prediction:
        try:
            net = load_edgelist(args.prediction)
        except FileNotFoundError:
            raise UsageError(f"prediction file not found: {args.prediction}") from None
    else:
        net = load_dataset(cfg)
    t = args.t
    if args.checkpoint:
        forecaster, meta = _load_model(args, net)
        L = forecaster.config.L
        if not L <= t <= net.T:
            raise UsageError(f"t={t} needs {L} preceding snapshots; choose t in [{L}, {net.T}]")
        scaled = scale_weights(net, meta["train_steps"])
        adj = unscale(forecaster.predict(history_at(scaled, t, L)), meta["w_max"])
    else:
        if not 0 <= t < net.T:
            raise UsageError(f"t={t} out of range [0, {net.T - 1}]")
        adj = net[t]
    write_heatmap(args.out, adj, args.w_max)
    print(f"{adj.shape[0]}x{adj.shape[1]} heatmap of t={t} -> {args.out}")
    return EXIT_OK


VERBS = {"generate": cmd_generate, "train": cmd_train, "predict": cmd_predict,
         "bench": cmd_bench, "heatmap": cmd_heatmap}


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def _methods(text: str) -> list[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run config")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--preset", choices=sorted(PRESETS), help="synthetic preset")
    common.add_argument("--data", metavar="PATH", help="edge-list dataset (default: synthesise)")
    common.add_argument("--window", type=int, metavar="L")
    common.add_argument("--test-steps", type=int, metavar="K")
    common.add_argument("-o", "--out", metavar="PATH", help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hqtlp", description="Weighted temporal link prediction toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic edge-list dataset")
    p = sub.add_parser("bench", parents=[common], help="compare methods on one split")
    p.add_argument("--methods", type=_methods, metavar="LIST", help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--parallel", action="store_true", help="run methods in separate processes")
    p = sub.add_parser("train", parents=[common], help="pretrain the adversarial model")
    p.add_argument("--checkpoint", metavar="PATH", help="checkpoint path (default OUT/model.npz)")
    p = sub.add_parser("predict", parents=[common], help="online prediction from a checkpoint")
    p.add_argument("--checkpoint", metavar="PATH", required=True)
    p = sub.add_parser("heatmap", parents=[common], help="render a snapshot as a PPM image")
    p.add_argument("--t", type=int, required=True, help="snapshot index")
    p.add_argument("--prediction", metavar="PATH", help="edge list written by predict")
    p.add_argument("--checkpoint", metavar="PATH", help="render the model's prediction for t")
    p.add_argument("--w-max", type=float, help="weight mapped to white (default: snapshot max)")
    return parser


def _cli_overrides(args) -> dict:
    out: dict = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.preset is not None:
        out["preset"] = args.preset
    if args.data is not None:
        out["dataset"] = args.data
    if args.test_steps is not None:
        out["test_steps"] = args.test_steps
    if args.window is not None:
        out["train"] = {"L": args.window}
    if getattr(args, "methods", None) is not None:
        out["methods"] = args.methods
    # generate and heatmap treat -o as a file, the others as a directory
    if args.out is not None and args.verb in ("bench", "train", "predict"):
        out["out"] = args.out
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build(args.config, _cli_overrides(args))
        return VERBS[args.verb](cfg, args)
    except (UsageError, ConfigurationError, EdgeListError) as exc:
        print(f"hqtlp {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("failure", exc_info=True)
        print(f"hqtlp {args.verb}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
