"""``forestz`` command line: ``report``, ``kl`` and ``sweep``.

Exit codes: 0 success, 1 usage or input-format error, 2 I/O error,
3 enumeration cap exceeded (a sweep writes its CSV first, skipped rows marked).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import FAMILIES, ExperimentConfig, ModelConfig, TempGrid
from .errors import CapExceededError, ConfigError
from .experiments import cmd_forest_sweep, cmd_kl_experiment, cmd_report
from .graph import GraphFormatError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CAP = 3

SWEEP_DEFAULT_SIZES = (3, 4, 5, 6, 7, 8, 9)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _betas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _temps(text: str) -> TempGrid:
    try:
        return TempGrid.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="forestz", description="Forest expansions of pairwise partition functions.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    rep = sub.add_parser("report", help="summarize a graph and model")
    rep.add_argument("--graph", help="edge-list file (default: the model config's graph entry)")
    rep.add_argument("--config", help="model config (model, J, half_factor, beta, graph, tables)")
    rep.add_argument("--threshold", type=float, default=0.5, help="density threshold")
    rep.add_argument("--out", help="write the report here instead of stdout")

    for name, help_text in (("kl", "tree vs loopy BP KL experiment"), ("sweep", "partition-function sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--out")
        p.add_argument("--samples", type=int)
        p.add_argument("--sizes", type=_sizes)
        p.add_argument("--temps", type=_temps, help="min:max:count:log|lin")
        p.add_argument("--betas", type=_betas)
        p.add_argument("--family", choices=FAMILIES)
        p.add_argument("--threshold", type=float)
        p.add_argument("--workers", type=int)
    return parser


def _experiment_config(args, command: str) -> ExperimentConfig:
    base = ExperimentConfig()
    if command == "sweep":
        base = base.replace(sizes=SWEEP_DEFAULT_SIZES, j=1.0, half_factor=False)
    cfg = ExperimentConfig.load(args.config, base) if args.config else base
    overrides = {
        "seed": args.seed,
        "out_path": args.out,
        "samples": args.samples,
        "sizes": args.sizes,
        "temps": args.temps,
        "betas": args.betas,
        "family": args.family,
        "threshold": args.threshold,
        "workers": args.workers,
    }
    return cfg.replace(**{k: v for k, v in overrides.items() if v is not None})


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "report":
            model_cfg = ModelConfig.load(args.config) if args.config else ModelConfig()
            text = cmd_report(args.graph, model_cfg, args.threshold)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
        elif args.command == "kl":
            cmd_kl_experiment(_experiment_config(args, "kl"))
        else:
            cmd_forest_sweep(_experiment_config(args, "sweep"))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except CapExceededError as exc:
        print(f"forestz: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, GraphFormatError, ValueError) as exc:
        print(f"forestz: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"forestz: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
