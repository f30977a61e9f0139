"""Command-line entry point.

Subcommands: generate, train, ablate (train with modules disabled),
baseline, eval, dynamics. Configuration precedence is built-in defaults,
then the --config JSON document, then individual flags; the effective
merged configuration is always dumped next to the outputs. All artifacts
except the sidecar run.log are byte-deterministic given config and seed.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .baselines import deepwalk_baseline, majority_vote, mlp_baseline
from .errors import GenerationInfeasibleError, TrainingDivergedError
from .evaluation import atypical_node_report, evaluate, export_dynamics, import_dynamics
from .graph import make_splits
from .io import load_dataset, save_dataset, write_probability_csv, read_probability_csv
from .model import ModelConfig, compute_representations, predict, save_model, train
from .positional import load_embedding_csv, save_embedding_csv
from .synthgen import SynthSpec, generate_dataset


def default_config() -> dict:
    return {
        "model": asdict(ModelConfig()),
        "synth": asdict(SynthSpec()),
        "data": {},
        "out": "runs/out",
        "n_splits": 3,
        "seeds": None,
        "train_frac": 0.6,
        "val_frac": 0.2,
    }


def _deep_update(base: dict, overlay: dict) -> dict:
    for k, v in overlay.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def _parse_set(value: str):
    key, _, raw = value.partition("=")
    if not _:
        raise argparse.ArgumentTypeError(f"--set expects key=value, got {value!r}")
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError:
        parsed = raw
    return key, parsed


def build_config(args) -> dict:
    cfg = default_config()
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            _deep_update(cfg, json.load(fh))
    if getattr(args, "out", None):
        cfg["out"] = args.out
    if getattr(args, "seed", None) is not None:
        cfg["model"]["seed"] = args.seed
        cfg["synth"]["seed"] = args.seed
    if getattr(args, "homophily", None) is not None:
        cfg["synth"]["target_homophily"] = args.homophily
    if getattr(args, "feat_quality", None) is not None:
        cfg["synth"]["r_ori_feat"] = args.feat_quality
    if getattr(args, "variant", None):
        cfg["model"]["variant"] = args.variant
    if getattr(args, "n_splits", None) is not None:
        cfg["n_splits"] = args.n_splits
    if getattr(args, "data", None):
        cfg["data"] = {"dir": args.data}
    for key, value in getattr(args, "set", None) or []:
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    if getattr(args, "ablate", None):
        flag = {"no-fr": "enable_fr", "no-lr": "enable_lr", "no-pe": "enable_pe"}[args.ablate]
        cfg["model"][flag] = False
    return cfg


def _resolve_seeds(cfg) -> list[int]:
    if cfg["seeds"]:
        seeds = [int(s) for s in cfg["seeds"]]
        if len(seeds) != cfg["n_splits"]:
            raise ValueError(f"seed list has {len(seeds)} entries for n_splits={cfg['n_splits']}")
        return seeds
    base = int(cfg["model"]["seed"])
    return [base + i for i in range(cfg["n_splits"])]


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _sidecar_log(outdir: Path, message: str):
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(outdir / "run.log", "a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {message}\n")


def _load_data(cfg):
    data = cfg.get("data") or {}
    if "dir" in data:
        d = Path(data["dir"])
        features = None
        for cand in ("features.csv", "features.bin"):
            if (d / cand).exists():
                features = d / cand
                break
        splits = d / "splits.tsv" if (d / "splits.tsv").exists() else None
        return load_dataset(d / "edges.tsv", d / "labels.tsv", features, splits)
    if "edges" in data and "labels" in data:
        return load_dataset(
            data["edges"], data["labels"], data.get("features"), data.get("splits")
        )
    raise ValueError("no dataset configured: pass --data DIR or a data section in --config")


def cmd_generate(cfg) -> int:
    spec = SynthSpec(**cfg["synth"])
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    dataset, meta = generate_dataset(spec)
    feature_path = outdir / "features.csv" if dataset.features is not None else None
    save_dataset(dataset, outdir / "edges.tsv", outdir / "labels.tsv", feature_path)
    _dump_json(meta, outdir / "meta.json")
    _dump_json(cfg, outdir / "effective_config.json")
    _sidecar_log(outdir, "generate finished")
    print(
        f"generated n={dataset.n} achieved_homophily={meta['achieved_homophily']:.4f} "
        f"achieved_avg_degree={meta['achieved_avg_degree']:.2f}"
    )
    return 0


def _split_for_run(dataset, cfg, seed):
    if dataset.train_mask.any():
        return dataset
    return make_splits(dataset, cfg["train_frac"], cfg["val_frac"], seed)


def _cached_embedding(cfg, dataset, run_cfg, split_index):
    """Walk embedding for one split, cached under cfg['pe_cache'] if set."""
    if not run_cfg.enable_pe:
        return None
    cache_dir = cfg.get("pe_cache")
    cache = Path(cache_dir) / f"embedding_split_{split_index}.csv" if cache_dir else None
    if cache is not None and cache.exists():
        return load_embedding_csv(cache)
    _, _, pe, _ = compute_representations(dataset, run_cfg)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        save_embedding_csv(pe, cache)
    return pe


def cmd_train(cfg) -> int:
    dataset = _load_data(cfg)
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json(cfg, outdir / "effective_config.json")
    seeds = _resolve_seeds(cfg)
    per_split = []
    for i, seed in enumerate(seeds):
        split_dir = outdir / f"split_{i}"
        split_dir.mkdir(exist_ok=True)
        run_cfg = replace(ModelConfig(**cfg["model"]), seed=seed)
        ds = _split_for_run(dataset, cfg, seed)
        try:
            pe = _cached_embedding(cfg, ds, run_cfg, i)
            model, log, best_val_ap = train(
                ds, run_cfg, pe=pe, metrics_path=split_dir / "metrics.jsonl"
            )
        except TrainingDivergedError as err:
            print(f"split {i}: {err}", file=sys.stderr)
            return 1
        probs = predict(model, ds, pe=pe)
        report = {
            "best_val_ap": best_val_ap,
            "val": evaluate(probs, ds, "val").to_dict(),
            "test": evaluate(probs, ds, "test").to_dict(),
            "seed": seed,
        }
        _dump_json(report, split_dir / "report.json")
        save_model(model, split_dir / "model.ckpt")
        export_dynamics(log, split_dir / "dynamics.csv")
        write_probability_csv(probs, split_dir / "probs.csv")
        per_split.append(report)
        print(f"split {i}: test samples-AP {report['test']['ap_samples']:.4f}")
    summary = _summarize(per_split)
    _dump_json(summary, outdir / "summary.json")
    _sidecar_log(outdir, f"train finished ({len(seeds)} splits)")
    print(f"mean test samples-AP {summary['test']['ap_samples']['mean']:.4f}")
    return 0


def _summarize(per_split) -> dict:
    out = {"n_splits": len(per_split), "splits": per_split}
    for split_name in ("val", "test"):
        block = {}
        for mode in ("ap_micro", "ap_macro", "ap_samples"):
            vals = [r[split_name][mode] for r in per_split]
            block[mode] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
        out[split_name] = block
    return out


def cmd_baseline(cfg, method: str) -> int:
    dataset = _load_data(cfg)
    if method == "mlp" and dataset.features is None and cfg["model"]["feature_policy"] == "none":
        print("mlp baseline needs features or a substitution policy", file=sys.stderr)
        return 1
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json(cfg, outdir / "effective_config.json")
    seeds = _resolve_seeds(cfg)
    per_split = []
    for i, seed in enumerate(seeds):
        split_dir = outdir / f"split_{i}"
        split_dir.mkdir(exist_ok=True)
        ds = _split_for_run(dataset, cfg, seed)
        run_cfg = replace(ModelConfig(**cfg["model"]), seed=seed)
        if method == "majority_vote":
            result = majority_vote(ds)
        elif method == "mlp":
            result = mlp_baseline(ds, run_cfg)
        elif method == "deepwalk":
            result = deepwalk_baseline(ds, run_cfg)
        else:
            raise ValueError(f"unknown baseline {method!r}")
        report = {
            "method": method,
            "seed": seed,
            "val": evaluate(result.probs, ds, "val").to_dict(),
            "test": evaluate(result.probs, ds, "test").to_dict(),
        }
        if result.coverage is not None:
            report["coverage"] = result.coverage
        _dump_json(report, split_dir / "report.json")
        write_probability_csv(result.probs, split_dir / "probs.csv")
        per_split.append(report)
        print(f"split {i}: test samples-AP {report['test']['ap_samples']:.4f}")
    summary = _summarize(per_split)
    summary["method"] = method
    _dump_json(summary, outdir / "summary.json")
    _sidecar_log(outdir, f"baseline {method} finished")
    print(f"mean test samples-AP {summary['test']['ap_samples']['mean']:.4f}")
    return 0


def cmd_eval(cfg, probs_path, split: str) -> int:
    dataset = _load_data(cfg)
    if not dataset.train_mask.any():
        dataset = make_splits(dataset, cfg["train_frac"], cfg["val_frac"], cfg["model"]["seed"])
    probs = read_probability_csv(probs_path)
    report = evaluate(probs, dataset, split)
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json(report.to_dict(), outdir / f"eval_{split}.json")
    print(f"{split} samples-AP {report.ap_samples:.4f} (micro {report.ap_micro:.4f}, macro {report.ap_macro:.4f})")
    return 0


def cmd_dynamics(cfg, run_dir, k: int) -> int:
    run = Path(run_dir) if run_dir else Path(cfg["out"])
    if not run.exists():
        if cfg.get("data"):
            rc = cmd_train(cfg)
            if rc != 0:
                return rc
            run = Path(cfg["out"])
        else:
            print(f"run directory {run} does not exist", file=sys.stderr)
            return 1
    csvs = sorted(run.glob("split_*/dynamics.csv")) or ([run / "dynamics.csv"] if (run / "dynamics.csv").exists() else [])
    if not csvs:
        print(f"no dynamics.csv found under {run}", file=sys.stderr)
        return 1
    for csv in csvs:
        log = import_dynamics(csv)
        k_eff = min(k, len(log.node_ids))
        report = atypical_node_report(log, k_eff)
        out = csv.with_name("atypical_nodes.csv")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("node_id,final_loss,slope\n")
            for rec in report:
                fh.write(f"{rec.node_id},{repr(rec.final_loss)},{repr(rec.slope)}\n")
        print(f"{csv}: {log.n_checkpoints} checkpoints, top atypical node {report[0].node_id}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmfx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--set", type=_parse_set, action="append", metavar="KEY=VALUE",
                       help="override any config key, e.g. model.max_epochs=50")

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--homophily", type=float, help="target label homophily")
    p.add_argument("--feat-quality", type=float, dest="feat_quality",
                   help="fraction of label-informative feature columns")

    for name in ("train", "ablate"):
        p = sub.add_parser(name, help="train the model over the configured splits")
        common(p)
        p.add_argument("--data", help="dataset directory")
        p.add_argument("--variant", choices=("linear", "mlp1", "mlp3"))
        p.add_argument("--ablate", choices=("no-fr", "no-lr", "no-pe"),
                       required=(name == "ablate"))
        p.add_argument("--n-splits", type=int, dest="n_splits")

    p = sub.add_parser("baseline", help="run a reference predictor")
    common(p)
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--method", required=True, choices=("majority_vote", "mlp", "deepwalk"))
    p.add_argument("--variant", choices=("linear", "mlp1", "mlp3"))
    p.add_argument("--n-splits", type=int, dest="n_splits")

    p = sub.add_parser("eval", help="evaluate a stored probability CSV")
    common(p)
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--probs", required=True)
    p.add_argument("--split", default="test", choices=("val", "test"))

    p = sub.add_parser("dynamics", help="export atypical-node reports from a run")
    common(p)
    p.add_argument("--data", help="dataset directory (to trigger training if needed)")
    p.add_argument("--run", help="existing training run directory")
    p.add_argument("--k", type=int, default=20)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    cfg = build_config(args)
    try:
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command in ("train", "ablate"):
            return cmd_train(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg, args.method)
        if args.command == "eval":
            return cmd_eval(cfg, args.probs, args.split)
        if args.command == "dynamics":
            return cmd_dynamics(cfg, args.run, args.k)
    except GenerationInfeasibleError as err:
        print(f"generation infeasible: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
