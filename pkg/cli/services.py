import csv
import logging
import os
import threading
import uuid
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import Settings, settings
from core.exceptions import ConfigException, NotFoundException, SubsplitException
from cli.metrics import MetricsLogger, format_value, numeric_digest
from cli.schemas import (
    BenchConfig,
    BenchRow,
    DatasetName,
    Method,
    MetricsRow,
    RunConfig,
    RunRecord,
    RunStatus,
    RunSummary,
    TrainResult,
)
from dataio.schemas import Dataset
from dataio.services import dataset_paths, load_named_dataset, synthetic_blobs, train_test_split
from network.schemas import NetworkSpec
from network.services import build_network
from optimizers.schemas import AuxMode, AuxState, InnerOptimizer, TrainState
from optimizers.services import (
    baseline_epoch,
    constraint_residual,
    evaluate,
    full_objective,
    gsadmm_epoch,
    gsam_epoch,
    init_aux,
)
from runtime.schemas import PhaseTimings
from runtime.services import PhaseRuntime
from tensor.schemas import RngState
from verify.schemas import VerifyReport
from verify.services import run_suite

logger = logging.getLogger(__name__)

DATA_STREAM = 1
INIT_STREAM = 2
BENCH_HEADER = ["label", "method", "splits", "workers", "epochs", "mean_epoch_s", "std_epoch_s", "time_ratio", "digest"]
# fields a bench may vary between configs
BENCH_VARIABLE_FIELDS = {"method", "splits", "split_at", "workers", "out", "epochs"}

EpochOutcome = Tuple[NetworkSpec, Optional[AuxState], TrainState]


class TrainingService:
    """Runs one configured training job and records its metrics"""

    def __init__(self, app_settings: Optional[Settings] = None):
        self.settings = app_settings or settings

    # =============================================================================
    # SETUP
    # =============================================================================

    def load_data(self, cfg: RunConfig) -> Tuple[Dataset, Dataset]:
        """Train and test sets; IDX test files are used when present, otherwise a seeded split"""
        rng = RngState(cfg.seed).spawn(DATA_STREAM)
        if cfg.dataset is DatasetName.BLOBS:
            blobs = cfg.blobs
            data = synthetic_blobs(blobs.classes, blobs.dim, blobs.per_class, blobs.separation, rng)
            return train_test_split(data, 1.0 - cfg.test_fraction, rng)
        root = self.settings.resolve_data_root(cfg.data_root)
        train = load_named_dataset(cfg.dataset.value, root, "train")
        if all(os.path.exists(path) for path in dataset_paths(root, cfg.dataset.value, "test")):
            return train, load_named_dataset(cfg.dataset.value, root, "test")
        return train_test_split(train, 1.0 - cfg.test_fraction, rng)

    def build_network(self, cfg: RunConfig, train: Dataset) -> NetworkSpec:
        widths = [train.features] + list(cfg.widths) + [train.classes]
        return build_network(
            widths,
            RngState(cfg.seed).spawn(INIT_STREAM),
            splits=cfg.splits,
            split_points=cfg.split_at,
            loss=cfg.loss
        )

    # =============================================================================
    # TRAINING
    # =============================================================================

    @staticmethod
    def _epoch(
        cfg: RunConfig,
        net: NetworkSpec,
        aux: Optional[AuxState],
        state: TrainState,
        train: Dataset,
        runtime: PhaseRuntime
    ) -> EpochOutcome:
        hp = cfg.hyperparams
        if cfg.method is Method.GSADMM:
            return gsadmm_epoch(net, aux, hp, state, train, runtime)
        if cfg.method is Method.GSAM:
            return gsam_epoch(net, aux, hp, state, train, runtime)
        opt = InnerOptimizer.ADAM if cfg.method is Method.ADAM else InnerOptimizer.SGD
        net, state = baseline_epoch(net, hp, state, train, opt, runtime=runtime)
        return net, None, state

    @staticmethod
    def _metrics_row(
        epoch: int,
        timings: PhaseTimings,
        net: NetworkSpec,
        aux: Optional[AuxState],
        cfg: RunConfig,
        train: Dataset,
        test: Dataset
    ) -> MetricsRow:
        train_loss, train_acc = evaluate(net, train.inputs, train.labels_onehot)
        _, test_acc = evaluate(net, test.inputs, test.labels_onehot)
        if aux is not None:
            residual = constraint_residual(net, aux)
            objective = full_objective(net, aux, cfg.hyperparams, train.labels_onehot)
        else:
            residual, objective = 0.0, train_loss
        return MetricsRow(
            epoch=epoch,
            wall_s=timings.epoch_seconds,
            train_loss=train_loss,
            train_acc=train_acc,
            test_acc=test_acc,
            residual=residual,
            objective=objective,
            phase_w_s=timings.phase("w"),
            phase_p_s=timings.phase("p"),
            phase_q_s=timings.phase("q"),
            phase_u_s=timings.phase("u")
        )

    @staticmethod
    def summarize(rows: Sequence[MetricsRow]) -> Dict[str, float]:
        """Final-epoch figures; wall time is left out so the line is reproducible"""
        last = rows[-1]
        return {
            "epochs": last.epoch,
            "final_train_loss": last.train_loss,
            "final_train_acc": last.train_acc,
            "final_test_acc": last.test_acc,
            "best_train_acc": max(row.train_acc for row in rows),
            "final_residual": last.residual,
        }

    def run_train(self, cfg: RunConfig, on_row: Optional[Callable[[MetricsRow], None]] = None) -> TrainResult:
        """Train for ``cfg.epochs`` epochs, one MetricsRow per epoch"""
        train, test = self.load_data(cfg)
        net = self.build_network(cfg, train)
        state = TrainState.start(cfg.seed, net.n)
        aux = init_aux(net, train.inputs, AuxMode(cfg.method.value)) if cfg.method.is_split else None
        workers = self.settings.resolve_workers(net.n, cfg.workers)
        logger.info(
            "Training %s on %s: %d samples, %d subnetworks, %d workers, %d epochs",
            cfg.method.value, train.name, train.samples, net.n, workers, cfg.epochs
        )

        rows: List[MetricsRow] = []
        metrics = MetricsLogger(cfg.out) if cfg.out else None
        try:
            with PhaseRuntime(workers) as runtime:
                for _ in range(cfg.epochs):
                    timed = runtime.timed(lambda: self._epoch(cfg, net, aux, state, train, runtime))
                    net, aux, state = timed.result
                    row = self._metrics_row(state.k, timed.timings, net, aux, cfg, train, test)
                    rows.append(row)
                    if metrics is not None:
                        metrics.log(row)
                    if on_row is not None:
                        on_row(row)
                    logger.info(
                        "epoch %d: loss=%.6f train_acc=%.4f test_acc=%.4f residual=%.3e (%.3fs)",
                        row.epoch, row.train_loss, row.train_acc, row.test_acc, row.residual, row.wall_s
                    )
            summary = self.summarize(rows)
            if metrics is not None:
                metrics.write_summary(summary)
        finally:
            if metrics is not None:
                metrics.close()
        return TrainResult(config=cfg, rows=rows, net=net, aux=aux, summary=summary)


class VerifyService:
    """Runs the oracle suite"""

    def run_verify(self, checks: Optional[Sequence[str]] = None, seed: int = 0) -> VerifyReport:
        report = run_suite(checks, seed=seed)
        logger.info("Verification %s (%d checks)", "passed" if report.passed else "failed", len(report.checks))
        return report


class BenchService:
    """Epoch-time comparison of configs that differ only in method, splits and workers"""

    def __init__(self, training: Optional[TrainingService] = None):
        self.training = training or TrainingService()

    @staticmethod
    def expand(bench: BenchConfig) -> List[RunConfig]:
        lengths = {len(bench.methods), len(bench.splits), len(bench.workers)} - {1}
        if len(lengths) > 1:
            raise ConfigException(
                "Bench lists must share one length (or have length 1)",
                details={"methods": len(bench.methods), "splits": len(bench.splits), "workers": len(bench.workers)}
            )
        count = lengths.pop() if lengths else 1

        def _pick(values: list, i: int):
            return values[0] if len(values) == 1 else values[i]

        configs = []
        for i in range(count):
            configs.append(bench.base.model_copy(update={
                "method": _pick(bench.methods, i),
                "splits": _pick(bench.splits, i),
                "split_at": None,
                "workers": _pick(bench.workers, i),
                "epochs": bench.warmup + bench.epochs,
                "out": None,
            }))
        # re-run the validators on the merged fields
        return [RunConfig(**cfg.model_dump()) for cfg in configs]

    @staticmethod
    def check_comparable(configs: Sequence[RunConfig]) -> None:
        if len(configs) < 2:
            raise ConfigException("A bench needs at least two configs", details={"configs": len(configs)})
        reference = configs[0].model_dump(exclude=BENCH_VARIABLE_FIELDS)
        for i, cfg in enumerate(configs[1:], start=1):
            fields = cfg.model_dump(exclude=BENCH_VARIABLE_FIELDS)
            differing = sorted(key for key in reference if reference[key] != fields[key])
            if differing:
                raise ConfigException(
                    f"Config {i} differs from config 0 in {differing}; only method, splits and workers may vary",
                    error_code="INCOMPARABLE_CONFIGS",
                    details={"fields": differing}
                )

    def compare(self, configs: Sequence[RunConfig], warmup: int = 3) -> List[BenchRow]:
        self.check_comparable(configs)
        rows: List[BenchRow] = []
        first_mean = None
        for cfg in configs:
            result = self.training.run_train(cfg)
            times = np.array([row.wall_s for row in result.rows[warmup:]])
            mean = float(times.mean())
            std = float(times.std(ddof=1)) if times.size > 1 else 0.0
            first_mean = mean if first_mean is None else first_mean
            workers = self.training.settings.resolve_workers(cfg.splits, cfg.workers)
            label = f"{cfg.method.value}/n={cfg.splits}/w={workers}"
            rows.append(BenchRow(
                label=label,
                method=cfg.method,
                splits=cfg.splits,
                workers=workers,
                epochs=times.size,
                mean_epoch_s=mean,
                std_epoch_s=std,
                time_ratio=mean / first_mean if first_mean > 0 else 1.0,
                digest=numeric_digest(result.rows)
            ))
            logger.info("bench %s: %.4fs ± %.4fs per epoch", label, mean, std)
        return rows

    def run_bench(self, bench: BenchConfig) -> List[BenchRow]:
        rows = self.compare(self.expand(bench), warmup=bench.warmup)
        if bench.out:
            write_bench(bench.out, rows)
        return rows


def write_bench(path: str, rows: Sequence[BenchRow]) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for row in rows:
            data = row.model_dump(mode="json")
            writer.writerow([
                data[column] if isinstance(data[column], str) else format_value(data[column])
                for column in BENCH_HEADER
            ])

# =============================================================================
# RUN REGISTRY (HTTP SURFACE)
# =============================================================================

class RunRegistry:
    """In-memory record of runs started over HTTP"""

    def __init__(self, training: Optional[TrainingService] = None):
        self.training = training or TrainingService()
        self._records: Dict[str, RunRecord] = {}
        self._lock = threading.Lock()

    def create(self, cfg: RunConfig) -> RunRecord:
        run_id = uuid.uuid4().hex[:12]
        if cfg.out is None:
            cfg = cfg.model_copy(update={"out": os.path.join(self.training.settings.RUNS_DIR, f"{run_id}.csv")})
        record = RunRecord(run_id=run_id, config=cfg)
        with self._lock:
            self._records[run_id] = record
        return record

    def get(self, run_id: str) -> RunRecord:
        with self._lock:
            record = self._records.get(run_id)
            if record is None:
                raise NotFoundException(f"Run {run_id} not found", error_code="RUN_NOT_FOUND")
            return record.model_copy(deep=True)

    def list(self) -> List[RunSummary]:
        with self._lock:
            return [
                RunSummary(
                    run_id=record.run_id,
                    status=record.status,
                    method=record.config.method,
                    splits=record.config.splits,
                    epochs_done=len(record.rows),
                    created_at=record.created_at
                )
                for record in self._records.values()
            ]

    def _update(self, run_id: str, **fields) -> None:
        with self._lock:
            record = self._records[run_id]
            for key, value in fields.items():
                setattr(record, key, value)

    def _append(self, run_id: str, row: MetricsRow) -> None:
        with self._lock:
            self._records[run_id].rows.append(row)

    def execute(self, run_id: str) -> None:
        """Run a registered config to completion, recording rows as they arrive"""
        cfg = self.get(run_id).config
        self._update(run_id, status=RunStatus.RUNNING)
        try:
            result = self.training.run_train(cfg, on_row=lambda row: self._append(run_id, row))
        except SubsplitException as error:
            logger.error("Run %s failed: %s", run_id, error.message)
            self._update(run_id, status=RunStatus.FAILED, error=error.message, error_code=error.error_code, finished_at=datetime.now(timezone.utc))
            return
        except Exception as error:
            logger.exception("Run %s crashed", run_id)
            self._update(run_id, status=RunStatus.FAILED, error=str(error), error_code="INTERNAL_ERROR", finished_at=datetime.now(timezone.utc))
            return
        self._update(run_id, status=RunStatus.COMPLETED, summary=result.summary, finished_at=datetime.now(timezone.utc))


registry = RunRegistry()
