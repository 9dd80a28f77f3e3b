"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import CONFIG_TEMPLATE, PipelineConfig
from .errors import ConfigError, DataError, PipelineError, StageError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_STAGE = 0, 1, 2, 3

log = logging.getLogger("nidspipe")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline YAML config (defaults if omitted)")
    common.add_argument("--seed", type=_seed, help="override the config seed")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="nidspipe",
        description="Flow-record anomaly detection: preprocessing, MI ranking, PCA, "
                    "balancing, six classifiers, embeddings.")
    parser.add_argument("--init-config", nargs="?", const="-", metavar="PATH",
                        help="write the documented default config to PATH (stdout if omitted)")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("generate", parents=[common], help="write a synthetic replica CSV")
    sub.add_parser("embed", parents=[common], help="PCA / t-SNE / UMAP embeddings and scatter plots")
    sub.add_parser("run", parents=[common], help="full pipeline with report, models and plots")
    ev = sub.add_parser("evaluate", parents=[common], help="score saved models on a CSV")
    ev.add_argument("--models", nargs="+", type=Path, help="model files (default: OUT/models/*.json)")
    ev.add_argument("--data", type=Path, help="CSV to evaluate (default: OUT/splits/test.csv)")
    rp = sub.add_parser("report", parents=[common], help="pretty-print a run report")
    rp.add_argument("report", nargs="?", type=Path, help="run directory or run_report.json")
    return parser


def _config(args) -> PipelineConfig:
    if args.config is not None:
        return PipelineConfig.load(args.config, seed=args.seed, out=args.out)
    cfg = PipelineConfig.from_dict()
    if args.seed is not None:
        cfg.data["seed"] = args.seed
    if args.out is not None:
        cfg.data["output"]["dir"] = args.out
    cfg.validate()
    return cfg


def _dispatch(args) -> int:
    from . import pipeline

    if args.command == "report":
        target = args.report or Path(args.out or "out")
        print(pipeline.cmd_report(target))
        return EXIT_OK
    if args.command == "evaluate":
        cfg = _config(args) if args.config is not None else None
        run_dir = cfg.output_dir if cfg else Path(args.out or "out")
        result = pipeline.cmd_evaluate(run_dir, args.models, args.data,
                                       taxonomy_cfg=cfg["taxonomy"] if cfg else None)
        pipeline.dump_json(result, run_dir / "evaluate_metrics.json")
    else:
        cfg = _config(args)
        out_dir = cfg.output_dir
        if args.command == "generate":
            result = pipeline.cmd_generate(cfg, out_dir)
        elif args.command == "embed":
            result = pipeline.cmd_embed(cfg, out_dir)
        else:
            report = pipeline.cmd_run(cfg, out_dir)
            print(pipeline.format_metrics_table(report["metrics"]))
            print(f"report: {out_dir / pipeline.REPORT_NAME}")
            return EXIT_OK
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.init_config is not None:
        if args.init_config == "-":
            sys.stdout.write(CONFIG_TEMPLATE)
        else:
            Path(args.init_config).write_text(CONFIG_TEMPLATE)
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.stage in ("load", "split") and isinstance(exc.cause, (DataError, OSError)):
            return EXIT_DATA
        return EXIT_STAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
