# Runtime Package
# Barrier-synchronous phase execution across worker threads with wall-clock accounting

from .schemas import (
    PhaseTask,
    PhasePlan,
    PhaseTimings,
    TaskSpan,
    TimedResult,
)

from .services import PhaseRuntime, run_phase, epoch_timer

__all__ = [
    # Schemas
    "PhaseTask",
    "PhasePlan",
    "PhaseTimings",
    "TaskSpan",
    "TimedResult",

    # Services
    "PhaseRuntime",
    "run_phase",
    "epoch_timer",
]
