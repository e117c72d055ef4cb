"""
Command-line entry point: ``python -m cli {train,verify,bench,serve}``.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from pydantic import ValidationError

from core.config import settings
from core.exceptions import SubsplitException
from core.logger import configure_logging
from cli.schemas import DEFAULT_HIDDEN_WIDTHS, BenchConfig, BlobsParams, DatasetName, Method, RunConfig
from cli.services import BenchService, TrainingService, VerifyService
from network.schemas import LossKind
from optimizers.schemas import Hyperparams, InnerOptimizer, Sampling
from verify.services import SUITE_CHECKS

logger = logging.getLogger("cli")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got '{text}'")


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]

# =============================================================================
# PARSER
# =============================================================================

def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    model_group = parser.add_argument_group("model")
    model_group.add_argument("--widths", type=_int_list, default=None, help="Hidden-layer widths, comma separated (default 9×512)")
    model_group.add_argument("--preset", choices=["mnist-mlp"], default=None, help="mnist-mlp: 9×512 ReLU MLP on MNIST, α=ρ=1, τ1=τ2=100, batch 120, 100 epochs")
    model_group.add_argument("--loss", choices=[kind.value for kind in LossKind], default=LossKind.SOFTMAX_CROSS_ENTROPY.value)

    data_group = parser.add_argument_group("data")
    data_group.add_argument("--dataset", choices=[name.value for name in DatasetName], default=None)
    data_group.add_argument("--data-root", default=None, help="IDX root; SUBSPLIT_DATA overrides it")
    data_group.add_argument("--blobs-classes", type=int, default=4)
    data_group.add_argument("--blobs-dim", type=int, default=20)
    data_group.add_argument("--blobs-per-class", type=int, default=500)
    data_group.add_argument("--blobs-separation", type=float, default=4.0)
    data_group.add_argument("--test-fraction", type=float, default=0.2)

    training_group = parser.add_argument_group("training")
    training_group.add_argument("--seed", type=int, default=0)
    training_group.add_argument("--alpha", type=float, default=1.0)
    training_group.add_argument("--rho", type=float, default=1.0)
    training_group.add_argument("--tau1", type=float, default=100.0)
    training_group.add_argument("--tau2", type=float, default=100.0)
    training_group.add_argument("--batch", type=int, default=120)
    training_group.add_argument("--inner-opt", choices=[opt.value for opt in InnerOptimizer], default=InnerOptimizer.SGD.value)
    training_group.add_argument("--sampling", choices=[mode.value for mode in Sampling], default=Sampling.SINGLE.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsplit", description="Subnetwork-splitting training (gsADMM / gsAM)")
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train one configuration and write a metrics CSV")
    train.add_argument("--method", choices=[method.value for method in Method], default=Method.GSADMM.value)
    train.add_argument("--splits", type=int, default=1)
    train.add_argument("--split-at", type=_int_list, default=None, help="Layer boundaries, comma separated")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--workers", type=int, default=None)
    train.add_argument("--out", default=None, help="Metrics CSV path")
    _add_model_arguments(train)

    verify = commands.add_parser("verify", help="Run the oracle suite")
    verify.add_argument("--only", type=_name_list, default=None, help=f"Comma list from {','.join(SUITE_CHECKS)}; empty runs nothing")
    verify.add_argument("--seed", type=int, default=0)

    bench = commands.add_parser("bench", help="Compare epoch times across methods, splits and workers")
    bench.add_argument("--methods", type=_name_list, default=[Method.GSADMM.value])
    bench.add_argument("--splits", type=_int_list, default=[1, 2])
    bench.add_argument("--workers", type=_int_list, default=[1])
    bench.add_argument("--epochs", type=int, default=20, help="Timed epochs per config (>= 20)")
    bench.add_argument("--warmup", type=int, default=3)
    bench.add_argument("--out", default=None, help="Bench CSV path")
    _add_model_arguments(bench)

    serve = commands.add_parser("serve", help="Serve the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser

# =============================================================================
# CONFIG ASSEMBLY
# =============================================================================

def run_config_from_args(args: argparse.Namespace, **overrides) -> RunConfig:
    """Shared model/data/training flags; ``overrides`` carries the command-specific fields"""
    preset = args.preset == "mnist-mlp"
    dataset = args.dataset or (DatasetName.MNIST.value if preset else DatasetName.BLOBS.value)
    hyperparams = Hyperparams(
        alpha=args.alpha,
        rho=args.rho,
        tau1=args.tau1,
        tau2=args.tau2,
        batch_size=args.batch,
        inner_opt=args.inner_opt,
        sampling=args.sampling
    )
    fields = dict(
        widths=args.widths or list(DEFAULT_HIDDEN_WIDTHS),
        dataset=dataset,
        blobs=BlobsParams(
            classes=args.blobs_classes,
            dim=args.blobs_dim,
            per_class=args.blobs_per_class,
            separation=args.blobs_separation
        ),
        data_root=args.data_root,
        seed=args.seed,
        hyperparams=hyperparams,
        loss=args.loss,
        test_fraction=args.test_fraction
    )
    fields.update({key: value for key, value in overrides.items() if value is not None})
    return RunConfig(**fields)

# =============================================================================
# COMMANDS
# =============================================================================

def cmd_train(args: argparse.Namespace) -> int:
    cfg = run_config_from_args(
        args,
        method=args.method,
        splits=args.splits,
        split_at=args.split_at,
        epochs=args.epochs,
        workers=args.workers,
        out=args.out
    )
    result = TrainingService().run_train(cfg)
    summary = ", ".join(f"{key}={value:.6g}" for key, value in result.summary.items())
    print(f"trained {cfg.method.value} (n={cfg.splits}) for {len(result.rows)} epochs: {summary}")
    if cfg.out:
        print(f"metrics written to {cfg.out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    report = VerifyService().run_verify(args.only, seed=args.seed)
    print(report.as_table())
    return 0 if report.passed else 1


def cmd_bench(args: argparse.Namespace) -> int:
    bench = BenchConfig(
        base=run_config_from_args(args),
        methods=args.methods,
        splits=args.splits,
        workers=args.workers,
        epochs=args.epochs,
        warmup=args.warmup,
        out=args.out
    )
    rows = BenchService().run_bench(bench)
    print(f"{'config':<24} {'mean_s':>10} {'std_s':>10} {'ratio':>8}  digest")
    for row in rows:
        print(f"{row.label:<24} {row.mean_epoch_s:>10.4f} {row.std_epoch_s:>10.4f} {row.time_ratio:>8.3f}  {row.digest}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("main:app", host=args.host, port=args.port, log_level=(args.log_level or settings.LOG_LEVEL).lower())
    return 0


COMMANDS = {
    "train": cmd_train,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return 2
    except SubsplitException as e:
        logger.error("%s [%s] %s", e.message, e.error_code, e.details or "")
        return 2


if __name__ == "__main__":
    sys.exit(main())
