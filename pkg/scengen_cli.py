#!/usr/bin/env python3
"""
Scengen CLI
Load scenario generation from your terminal.

Usage:
    # Synthetic hourly data (writes data.csv and data.targets.yaml)
    python scengen_cli.py synth --days 365 -o data.csv

    # Train auto-encoder + generator
    python scengen_cli.py train --data data.csv --output-dir runs/demo

    # Generate 2000 scenarios
    python scengen_cli.py generate runs/demo/model.json -o scenarios.csv

    # Compare against the held-out days
    python scengen_cli.py evaluate runs/demo/model.json --real data.csv --generated scenarios.csv
"""

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

# Fix Windows console encoding for Unicode
if sys.platform == "win32":
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8', errors='replace')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8', errors='replace')

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from scengen import __version__
from scengen.config import get_settings, load_run_config
from scengen.dataset import LoadClass
from scengen.errors import ConfigError, ScengenError
from scengen.pipeline import (
    DEFAULT_GENERATE_COUNT,
    SWEEP_ARCHITECTURES,
    SWEEP_LATENT_DIMS,
    SWEEP_LEARNING_RATES,
    SWEEP_OPTIMIZERS,
    cmd_evaluate,
    cmd_generate,
    cmd_sweep,
    cmd_train,
)
from scengen.synthetic import make_synthetic_dataset

logger = logging.getLogger("scengen.cli")

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"

# Flags that override keys of the run config file
RUN_CONFIG_FLAGS = (
    "data_path", "seed", "split_fraction", "output_dir", "log_every",
    "ae_epochs", "ae_batch_size", "ae_lr", "ae_latent_dim",
    "gen_epochs", "gen_batch_size", "gen_lr", "gen_noise_dim", "gen_bandwidth",
    "gen_architecture", "gen_optimizer", "gen_consistency",
    "eval_bins", "eval_max_lag", "eval_match_count",
)

# ==================== Aesthetic ====================

BANNER = rf"""
    ╔═══════════════════════════════════════════════════════╗
    ║                                                       ║
    ║    ┌─┐┌─┐┌─┐┌┐┌┌─┐┌─┐┌┐┌   cooling · heating · power    ║
    ║    └─┐│  ├┤ │││├ ┬├┤ │││   daily load scenarios         ║
    ║    └─┘└─┘└─┘┘└┘└─┘└─┘┘└┘   v{__version__:<27}║
    ║                                                       ║
    ╚═══════════════════════════════════════════════════════╝
"""


# ANSI Colors
class C:
    BLUE = "\033[38;5;33m"       # Cooling
    RED = "\033[38;5;160m"       # Heating
    GOLD = "\033[38;5;220m"      # Power
    DIM = "\033[2m"
    BOLD = "\033[1m"
    RESET = "\033[0m"


def print_banner():
    print(f"{C.BLUE}{BANNER}{C.RESET}")


def print_status(msg: str, symbol: str = "│"):
    print(f"  {C.DIM}{symbol}{C.RESET} {msg}")


def print_success(msg: str):
    print(f"  {C.GOLD}◆{C.RESET} {msg}")


def print_error(msg: str):
    print(f"  {C.RED}✗{C.RESET} {msg}")


def print_info(msg: str):
    print(f"  {C.BLUE}≈{C.RESET} {msg}")


def print_header(msg: str):
    print(f"\n  {C.BOLD}{C.GOLD}{msg}{C.RESET}")
    print(f"  {C.DIM}{'═' * len(msg)}{C.RESET}")


def print_result_box(title: str, items: list[tuple[str, str]]):
    """Print a titled two-column table, keys left-aligned and values right-aligned."""
    key_width = max((len(k) for k, _ in items), default=0)
    value_width = max((len(v) for _, v in items), default=0)
    inner = max(len(title), key_width + value_width + 3)
    rule = "─" * (inner + 2)
    print(f"\n  {C.BLUE}┌{rule}┐{C.RESET}")
    print(f"  {C.BLUE}│{C.RESET} {C.BOLD}{C.GOLD}{title.ljust(inner)}{C.RESET} {C.BLUE}│{C.RESET}")
    print(f"  {C.BLUE}├{rule}┤{C.RESET}")
    for key, value in items:
        gap = inner - key_width - len(value)
        print(f"  {C.BLUE}│{C.RESET} {C.DIM}{key.ljust(key_width)}{C.RESET}{' ' * gap}{C.GOLD}{value}{C.RESET} {C.BLUE}│{C.RESET}")
    print(f"  {C.BLUE}└{rule}┘{C.RESET}")


def file_url(path: Path) -> str:
    return f"file:///{Path(path).absolute().as_posix()}"


# ==================== Commands ====================

def _run_config(args):
    overrides = {key: getattr(args, key) for key in RUN_CONFIG_FLAGS if hasattr(args, key)}
    return load_run_config(args.config, overrides)


def run_synth(args) -> int:
    """Synthetic dataset command."""
    print_header("SYNTHETIC DATA")
    print_status(f"Days: {C.GOLD}{args.days}{C.RESET} · seed {args.seed}")

    dataset = make_synthetic_dataset(args.days, args.seed, args.output)

    print_success(f"Wrote {args.days * 24} hourly rows")
    print_result_box("SYNTH", [
        *((f"corr {pair}", f"{value:+.3f}") for pair, value in dataset.realized_corr.items()),
        *((f"lag-1 {name}", f"{value:.3f}") for name, value in dataset.lag1_autocorr.items()),
        ("Output", file_url(args.output)),
    ])
    return 0


def run_train(args) -> int:
    """Train command."""
    config = _run_config(args)

    print_header("TRAINING")
    print_status(f"Data: {C.DIM}{config.data_path}{C.RESET}")
    print_status(f"Auto-encoder: {config.ae.epochs} epochs · batch {config.ae.batch_size} · lr {config.ae.lr}")
    print_status(f"Generator: {config.gen.epochs} epochs · batch {config.gen.batch_size} · lr {config.gen.lr}")
    print_info("Training; this may take a while...")

    result = cmd_train(config)
    summary = result.to_dict()

    print_success("Models trained")
    print_result_box("TRAINED", [
        ("Train / test days", f"{summary['train_days']} / {summary['test_days']}"),
        ("AE final MSE", f"{summary['ae_final_mse']:.6f}"),
        ("Generator final MMD²", f"{summary['gen_final_mmd2']:.6f}"),
        ("Digest", summary["digest"][:16]),
        ("Archive", file_url(result.paths[0])),
    ])
    return 0


def run_generate(args) -> int:
    """Generate command."""
    print_header("GENERATION")
    print_status(f"Archive: {C.DIM}{args.archive}{C.RESET}")
    print_status(f"Scenarios: {C.GOLD}{args.count}{C.RESET} · seed {args.seed}")

    path, scenarios = cmd_generate(args.archive, args.count, args.seed, args.output)

    items = [("Scenarios", str(scenarios.shape[0]))]
    if scenarios.shape[0]:
        for load_class in LoadClass:
            daily = scenarios[:, load_class.hours].sum(axis=1).mean()
            items.append((f"Mean daily {load_class.value}", f"{daily:.1f}"))
    items.append(("Output", file_url(path)))

    print_success("Scenarios written")
    print_result_box("GENERATED", items)
    return 0


def run_evaluate(args) -> int:
    """Evaluate command."""
    config = load_run_config(args.config, {
        key: getattr(args, key) for key in ("eval_bins", "eval_max_lag", "eval_match_count")
    })

    print_header("EVALUATION")
    print_status(f"Real: {C.DIM}{args.real}{C.RESET} (test split only)")
    print_status(f"Generated: {C.DIM}{args.generated}{C.RESET}")

    report, _ = cmd_evaluate(
        args.archive, args.real, args.generated, args.output_dir,
        bins=config.eval.bins, max_lag=config.eval.max_lag, match_count=config.eval.match_count,
    )

    print()
    for line in report.summary_text().splitlines():
        print(f"    {line}")

    print_result_box("EVALUATED", [
        ("Max cross-load error", f"{report.max_cross_error:.3f}"),
        *((f"PDF distance {c.value}", f"{report.pdf_distance[c]:.4f}") for c in LoadClass),
        ("Report", file_url(Path(args.output_dir))),
    ])
    return 0


def run_sweep(args) -> int:
    """Hyperparameter sweep command."""
    config = _run_config(args)

    print_header("SWEEP")
    print_status(f"Learning rates: {', '.join(str(v) for v in args.learning_rates)}")
    print_status(f"Latent dims: {', '.join(str(v) for v in args.latent_dims)}")
    print_status(f"Optimizers: {', '.join(args.optimizers) or '-'}")
    print_status(f"Architectures: {', '.join(args.architectures) or '-'}")
    print_info("Every point retrains the generator...")

    frame = cmd_sweep(
        config, args.learning_rates, args.latent_dims, args.output,
        optimizers=args.optimizers, architectures=args.architectures,
    )

    print_result_box("SWEPT", [
        *((f"{row.kind} {row.value}", f"final {row.final_loss:.5f} · sample {row.sample_mmd:.5f}")
          for row in frame.itertuples()),
        ("Output", file_url(args.output)),
    ])
    return 0


COMMANDS = {
    "synth": run_synth,
    "train": run_train,
    "generate": run_generate,
    "evaluate": run_evaluate,
    "sweep": run_sweep,
}


# ==================== Main ====================

class ScengenParser(argparse.ArgumentParser):
    """Argument errors are usage errors (exit code 1)."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Flat key=value run config (default: $SCENGEN_CONFIG)")
    parser.add_argument("--data", dest="data_path", help="Hourly load CSV")
    parser.add_argument("--seed", type=int, help="Run seed (default: 0)")
    parser.add_argument("--split-fraction", dest="split_fraction", type=float, help="Training share (default: 0.8)")
    parser.add_argument("--output-dir", dest="output_dir", help="Artifact directory (default: runs/latest)")
    parser.add_argument("--log-every", dest="log_every", type=int, help="Epochs between progress logs")

    ae = parser.add_argument_group("auto-encoder")
    ae.add_argument("--ae-epochs", dest="ae_epochs", type=int)
    ae.add_argument("--ae-batch-size", dest="ae_batch_size", type=int)
    ae.add_argument("--ae-lr", dest="ae_lr", type=float)
    ae.add_argument("--ae-latent-dim", dest="ae_latent_dim", type=int)

    gen = parser.add_argument_group("generator")
    gen.add_argument("--gen-epochs", dest="gen_epochs", type=int)
    gen.add_argument("--gen-batch-size", dest="gen_batch_size", type=int)
    gen.add_argument("--gen-lr", dest="gen_lr", type=float)
    gen.add_argument("--gen-noise-dim", dest="gen_noise_dim", type=int)
    gen.add_argument("--gen-bandwidth", dest="gen_bandwidth", help="'auto' (median heuristic) or a positive float")
    gen.add_argument("--gen-architecture", dest="gen_architecture", choices=SWEEP_ARCHITECTURES,
                     help="Generator layer stack (default: tconv3)")
    gen.add_argument("--gen-optimizer", dest="gen_optimizer", choices=SWEEP_OPTIMIZERS,
                     help="Generator update rule (default: adam)")
    gen.add_argument("--gen-consistency", dest="gen_consistency", type=float,
                     help="Reconstruction-consistency weight; 0 = latent MMD only (default: 1.0)")


def _add_eval_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("evaluation")
    group.add_argument("--bins", dest="eval_bins", type=int, help="PDF bins (default: 50)")
    group.add_argument("--max-lag", dest="eval_max_lag", type=int, help="Autocorrelation lags (default: 23)")
    group.add_argument("--match-count", dest="eval_match_count", type=int, help="Nearest-real matches reported (default: 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = ScengenParser(
        prog="scengen",
        description="Scengen - Joint cooling/heating/power load scenario generation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  scengen synth --days 365 -o data.csv                 # Synthetic hourly data
  scengen train --data data.csv --output-dir runs/a    # Train both networks
  scengen generate runs/a/model.json --count 2000      # 2000 scenarios
  scengen evaluate runs/a/model.json --real data.csv --generated scenarios.csv
  scengen sweep --data data.csv -o sweep.csv           # Hyperparameter study

Exit codes:
  0 success · 1 usage/config error · 2 data error · 3 training diverged

Environment:
  LOG_LEVEL          Logging level (default: INFO)
  SCENGEN_CONFIG     Default run config file
        """
    )
    parser.add_argument("--no-banner", action="store_true", help="Skip banner")
    parser.add_argument("--log-level", help="Logging level (overrides LOG_LEVEL)")

    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ScengenParser)

    # synth command
    synth = subparsers.add_parser("synth", help="Write a synthetic hourly dataset")
    synth.add_argument("--days", type=int, default=365, help="Number of days (>= 64, default: 365)")
    synth.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
    synth.add_argument("-o", "--output", type=Path, default=Path("data/synthetic.csv"), help="Output CSV")

    # train command
    train = subparsers.add_parser("train", help="Train auto-encoder and generator")
    _add_run_flags(train)

    # generate command
    generate = subparsers.add_parser("generate", help="Generate scenarios from a trained archive")
    generate.add_argument("archive", help="Model archive (model.json)")
    generate.add_argument("-n", "--count", type=int, default=DEFAULT_GENERATE_COUNT,
                          help=f"Number of scenarios (default: {DEFAULT_GENERATE_COUNT})")
    generate.add_argument("--seed", type=int, default=0, help="Noise seed (default: 0)")
    generate.add_argument("-o", "--output", type=Path, default=Path("scenarios.csv"), help="Output CSV")

    # evaluate command
    evaluate = subparsers.add_parser("evaluate", help="Compare generated scenarios with held-out days")
    evaluate.add_argument("archive", help="Model archive (model.json)")
    evaluate.add_argument("--real", required=True, help="Hourly load CSV the archive was trained from")
    evaluate.add_argument("--generated", required=True, help="Scenario CSV from 'generate'")
    evaluate.add_argument("-d", "--output-dir", default="report", help="Report directory (default: report)")
    evaluate.add_argument("--config", help="Run config supplying eval_* keys")
    _add_eval_flags(evaluate)

    # sweep command
    sweep = subparsers.add_parser("sweep", help="Learning-rate, latent-dimension, optimizer and architecture study")
    _add_run_flags(sweep)
    sweep.add_argument("--learning-rates", type=_float_list, default=list(SWEEP_LEARNING_RATES),
                       help="Comma-separated generator learning rates")
    sweep.add_argument("--latent-dims", type=_int_list, default=list(SWEEP_LATENT_DIMS),
                       help="Comma-separated auto-encoder latent dimensions")
    sweep.add_argument("--optimizers", type=_name_list, default=list(SWEEP_OPTIMIZERS),
                       help="Comma-separated generator update rules")
    sweep.add_argument("--architectures", type=_name_list, default=list(SWEEP_ARCHITECTURES),
                       help="Comma-separated generator architectures")
    sweep.add_argument("-o", "--output", type=Path, default=Path("sweep.csv"), help="Output CSV")

    return parser


def setup_logging(level: Optional[str] = None):
    level = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print_error(str(e))
        return e.exit_code

    setup_logging(args.log_level)
    if not args.no_banner:
        print_banner()

    try:
        exit_code = COMMANDS[args.command](args)
    except ScengenError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print_error(str(e))
        exit_code = e.exit_code

    print()
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
