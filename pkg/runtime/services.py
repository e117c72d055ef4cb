"""
Phase-parallel execution of per-subnetwork tasks.

Each phase runs its tasks on a thread pool and returns only after every task
finished (the barrier). Tasks read the pre-phase snapshot and return their new
state slice; results are collected by task index, so the outcome never depends
on which worker ran what. numpy releases the GIL inside matrix products, which
is where the speedup comes from.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor, wait
from time import perf_counter
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from core.exceptions import PhaseException
from runtime.schemas import PhasePlan, PhaseTask, PhaseTimings, TaskSpan, TimedResult

logger = logging.getLogger(__name__)


class PhaseRuntime:
    """Owns the worker pool; use as a context manager"""

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self._executor: Optional[ThreadPoolExecutor] = None
        if workers > 1:
            self._executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="subsplit-worker")
        self._current: Optional[PhaseTimings] = None

    def __enter__(self) -> "PhaseRuntime":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    # =============================================================================
    # PHASES
    # =============================================================================

    def plan(self, name: str, tasks: Sequence[Tuple[int, Callable[[], Any]]]) -> PhasePlan:
        return PhasePlan(
            name=name,
            tasks=[PhaseTask(index=index, fn=fn) for index, fn in tasks],
            workers=self.workers
        )

    def run(self, name: str, tasks: Sequence[Tuple[int, Callable[[], Any]]]) -> Dict[int, Any]:
        """Build, execute and return the results of a phase"""
        plan = self.plan(name, tasks)
        self.run_phase(plan)
        return plan.results

    def run_phase(self, plan: PhasePlan) -> PhaseTimings:
        start = perf_counter()
        outcomes: List[Tuple[PhaseTask, Any, Optional[TaskSpan], Optional[BaseException]]] = []
        if self._executor is None or len(plan.tasks) <= 1:
            for task in sorted(plan.tasks, key=lambda t: t.index):
                outcomes.append((task, *self._execute(plan.name, task)))
                if outcomes[-1][3] is not None:
                    break
        else:
            futures = [(task, self._executor.submit(self._execute, plan.name, task)) for task in plan.tasks]
            wait([future for _, future in futures])
            outcomes = [(task, *future.result()) for task, future in futures]
        end = perf_counter()

        failures = sorted((task.index, error) for task, _, _, error in outcomes if error is not None)
        if failures:
            index, error = failures[0]
            logger.error("Phase %s failed on subnetwork %d: %s", plan.name, index, error)
            raise PhaseException(plan.name, index, error) from error

        timings = PhaseTimings(
            phases={plan.name: end - start},
            phase_order=[plan.name],
            phase_windows=[[start, end]]
        )
        for task, value, span, _ in outcomes:
            plan.results[task.index] = value
            timings.spans.append(span)
            timings.worker_busy[span.worker] = timings.worker_busy.get(span.worker, 0.0) + (span.end - span.start)
        if self._current is not None:
            self._current.merge(timings)
        logger.debug("Phase %s: %d tasks in %.6fs", plan.name, len(plan.tasks), end - start)
        return timings

    @staticmethod
    def _execute(phase: str, task: PhaseTask) -> Tuple[Any, Optional[TaskSpan], Optional[BaseException]]:
        worker = threading.current_thread().name
        t0 = perf_counter()
        try:
            value = task.fn()
        except Exception as error:
            return None, None, error
        t1 = perf_counter()
        return value, TaskSpan(phase=phase, index=task.index, worker=worker, start=t0, end=t1), None

    # =============================================================================
    # EPOCH TIMING
    # =============================================================================

    def timed(self, fn: Callable[[], Any]) -> TimedResult:
        """Run ``fn`` and aggregate the timings of every phase it executes"""
        previous = self._current
        timings = PhaseTimings()
        self._current = timings
        start = perf_counter()
        try:
            result = fn()
        finally:
            timings.epoch_seconds = max(0.0, perf_counter() - start)
            self._current = previous
        return TimedResult(result=result, timings=timings)

    def epoch_timer(self, fn: Callable[[], Any]) -> PhaseTimings:
        return self.timed(fn).timings


def run_phase(plan: PhasePlan) -> PhaseTimings:
    """Execute one plan on a transient pool of ``plan.workers`` workers"""
    with PhaseRuntime(plan.workers) as runtime:
        return runtime.run_phase(plan)


def epoch_timer(fn: Callable[[], Any], runtime: Optional[PhaseRuntime] = None) -> PhaseTimings:
    if runtime is not None:
        return runtime.epoch_timer(fn)
    with PhaseRuntime(1) as transient:
        return transient.epoch_timer(fn)
