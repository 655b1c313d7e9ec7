"""Command-line surface: gen-data, train, eval, ablate, predict."""

import argparse
import json
from pathlib import Path

from .config import RunConfig, parse_config
from .data import generate_dataset, read_dataset
from .metrics import evaluate_pair_dir, write_report
from .train import ablate, format_ablation_table, predict_files, run_training


def _load_config(path) -> RunConfig:
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    return parse_config(path)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="camograph",
        description="Depth-prompted camouflaged-object segmentation at desk "
                    "scale: synthetic data, training, evaluation, ablations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True)

    p = sub.add_parser("ablate", help="train and score a list of variants")
    p.add_argument("--variants", required=True,
                   help="comma-separated variant names")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="run a checkpoint on one image")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--depth", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--sides", action="store_true",
                   help="also write the side predictions")

    args = parser.parse_args(argv)

    if args.command == "gen-data":
        generate_dataset(args.out, args.count, size=args.size, seed=args.seed)
        print(f"wrote {args.count} samples to {args.out}")
    elif args.command == "train":
        cfg = _load_config(args.config)
        _, history = run_training(cfg, args.data, args.out)
        print(f"final loss {history[-1]['loss']:.4f} after "
              f"{history[-1]['step']} steps; artifacts in {args.out}")
    elif args.command == "eval":
        report = evaluate_pair_dir(args.pred, args.gt)
        write_report(report, args.report)
        agg = report["aggregate"]
        if agg:
            print("mae %.4f  wfm %.4f  em %.4f  sm %.4f  (%d images)"
                  % (agg["mae"], agg["wfm"], agg["em"], agg["sm"],
                     len(report["per_image"])))
        for err in report["errors"]:
            print("error:", err)
    elif args.command == "ablate":
        cfg = _load_config(args.config)
        samples = read_dataset(args.data)
        names = [v.strip() for v in args.variants.split(",") if v.strip()]
        rows = ablate(names, cfg, samples, log=print)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.json").write_text(
            json.dumps({"rows": rows}, indent=2) + "\n")
        table = format_ablation_table(rows)
        (out_dir / "ablation.txt").write_text(table + "\n")
        print(table)
    elif args.command == "predict":
        out = predict_files(args.ckpt, args.image, args.depth, args.out,
                            sides=args.sides)
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
