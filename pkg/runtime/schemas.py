from typing import Any, Callable, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class PhaseTask(BaseModel):
    """Work for one subnetwork index inside a phase"""
    index: int = Field(..., ge=0, description="Subnetwork index owning this task's state slice")
    fn: Callable[[], Any] = Field(..., description="Reads the pre-phase snapshot, returns the new slice")

class PhasePlan(BaseModel):
    """Independent tasks separated from the next phase by a barrier"""
    name: str
    tasks: List[PhaseTask] = Field(default_factory=list)
    workers: int = Field(1, ge=1)
    results: Dict[int, Any] = Field(default_factory=dict, description="Filled by run_phase, keyed by task index")

    @model_validator(mode="after")
    def _disjoint(self):
        indices = [task.index for task in self.tasks]
        if len(set(indices)) != len(indices):
            raise ValueError(f"phase '{self.name}' has tasks sharing a state slice: {indices}")
        return self

class TaskSpan(BaseModel):
    """Monotonic start/end stamps of one task"""
    phase: str
    index: int
    worker: str
    start: float
    end: float

class PhaseTimings(BaseModel):
    """Wall-clock accounting of one epoch (or one isolated phase)"""
    phases: Dict[str, float] = Field(default_factory=dict, description="Seconds per phase name, summed over iterations")
    epoch_seconds: float = Field(0.0, ge=0)
    worker_busy: Dict[str, float] = Field(default_factory=dict, description="Busy seconds per worker")
    spans: List[TaskSpan] = Field(default_factory=list)
    phase_order: List[str] = Field(default_factory=list, description="Phases in execution order")
    phase_windows: List[List[float]] = Field(default_factory=list, description="[start, end] per executed phase")

    def phase(self, name: str) -> float:
        return self.phases.get(name, 0.0)

    def merge(self, other: "PhaseTimings") -> None:
        for name, seconds in other.phases.items():
            self.phases[name] = self.phases.get(name, 0.0) + seconds
        for worker, seconds in other.worker_busy.items():
            self.worker_busy[worker] = self.worker_busy.get(worker, 0.0) + seconds
        self.spans.extend(other.spans)
        self.phase_order.extend(other.phase_order)
        self.phase_windows.extend(other.phase_windows)

class TimedResult(BaseModel):
    """Return value of a timed callable together with its timings"""
    result: Optional[Any] = None
    timings: PhaseTimings
