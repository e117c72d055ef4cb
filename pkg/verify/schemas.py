from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class BoundReport(BaseModel):
    """Approximation-error bound check for one network / auxiliary state"""
    lhs: float = Field(..., description="|R(composed network) − R(W_n, p_n; y)|")
    rhs: float = Field(..., ge=0, description="H_n Σ ‖r_l‖ Π H_j")
    residual_norms: List[float] = Field(default_factory=list, description="‖r_l‖ per boundary")
    lipschitz_factors: List[float] = Field(default_factory=list, description="H_l per subnetwork, H_n last")
    coupling_residuals: List[float] = Field(default_factory=list, description="‖p_{l+1} − q_l‖ (gsADMM state only)")
    holds: bool

class CheckResult(BaseModel):
    """Outcome of one oracle in the verification suite"""
    name: str
    max_error: float
    tolerance: float
    passed: bool
    seconds: float = Field(..., ge=0)
    instances: int = 0
    detail: Optional[str] = None

class VerifyReport(BaseModel):
    """All requested checks; passed only if every check passed"""
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def as_table(self) -> str:
        header = f"{'check':<16} {'max_error':>12} {'tolerance':>12} {'instances':>9} {'seconds':>9}  status"
        lines = [header, "-" * len(header)]
        for check in self.checks:
            lines.append(
                f"{check.name:<16} {check.max_error:>12.3e} {check.tolerance:>12.1e} "
                f"{check.instances:>9d} {check.seconds:>9.3f}  {'PASS' if check.passed else 'FAIL'}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def summary(self) -> Dict[str, bool]:
        return {check.name: check.passed for check in self.checks}
