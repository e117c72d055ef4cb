from fastapi import APIRouter, BackgroundTasks, HTTPException, Path, status

from core.exceptions import ParameterException, SubsplitException
from core.responses import SuccessResponse, success_response
from cli.schemas import RunConfig, VerifyRequest
from cli.services import VerifyService, registry

# Create router
router = APIRouter(prefix="/api", tags=["Runs"])

# =============================================================================
# TRAINING RUNS
# =============================================================================

@router.post("/runs", response_model=SuccessResponse, status_code=status.HTTP_202_ACCEPTED)
async def start_run(config: RunConfig, background_tasks: BackgroundTasks):
    """
    Start a training run

    The run executes in the background; poll ``GET /api/runs/{run_id}`` for
    its status and metric rows.
    """
    record = registry.create(config)
    background_tasks.add_task(registry.execute, record.run_id)
    return success_response(
        data={"run_id": record.run_id, "status": record.status.value, "out": record.config.out},
        message="Run scheduled"
    )

@router.get("/runs", response_model=SuccessResponse)
async def list_runs():
    """List every run started since the server came up"""
    runs = [summary.model_dump(mode="json") for summary in registry.list()]
    return success_response(data=runs, message=f"{len(runs)} runs")

@router.get("/runs/{run_id}", response_model=SuccessResponse)
async def get_run(run_id: str = Path(..., description="ID returned when the run was started")):
    record = registry.get(run_id)
    return success_response(data=record.model_dump(mode="json"), message=f"Run {run_id} is {record.status.value}")

# =============================================================================
# VERIFICATION
# =============================================================================

@router.post("/verify", response_model=SuccessResponse)
def run_verification(request: VerifyRequest):
    """
    Run the oracle suite synchronously

    ``checks`` selects a subset; an empty list runs nothing and passes.
    """
    try:
        report = VerifyService().run_verify(request.checks, seed=request.seed)
    except ParameterException:
        raise
    except SubsplitException as e:
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=e.message)
    data = report.model_dump(mode="json")
    data["passed"] = report.passed
    return success_response(data=data, message="All checks passed" if report.passed else "Some checks failed")
