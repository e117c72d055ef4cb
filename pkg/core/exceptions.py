from fastapi import status
from typing import Optional, Dict, Any


class SubsplitException(Exception):
    """Base exception for the subsplit library"""
    status_code: int = status.HTTP_400_BAD_REQUEST

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        status_code: Optional[int] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        if status_code is not None:
            self.status_code = status_code

# =============================================================================
# TENSOR / NETWORK ERRORS
# =============================================================================

class DimensionException(SubsplitException):
    """Shape mismatch between operands"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Dimension mismatch", error_code: str = "DIMENSION_MISMATCH", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=error_code, details=details)

class IndexRangeException(SubsplitException):
    """Row index outside [0, M)"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Index out of range", error_code: str = "INDEX_OUT_OF_RANGE"):
        super().__init__(message=message, error_code=error_code)

class AmbiguityException(SubsplitException):
    """Duplicate index in a scatter"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Duplicate row index", error_code: str = "DUPLICATE_INDEX"):
        super().__init__(message=message, error_code=error_code)

class NonFiniteException(SubsplitException):
    """NaN or Inf produced or supplied"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Non-finite value", error_code: str = "NON_FINITE"):
        super().__init__(message=message, error_code=error_code)

class ValidationException(SubsplitException):
    """Validation related exceptions"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Validation failed", error_code: str = "VALIDATION_FAILED", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=error_code, details=details)

class ParameterException(ValidationException):
    """Parameter outside its admissible range"""
    def __init__(self, message: str = "Invalid parameter", error_code: str = "INVALID_PARAMETER"):
        super().__init__(message=message, error_code=error_code)

# =============================================================================
# OPTIMIZER ERRORS
# =============================================================================

class ModeException(SubsplitException):
    """Operation not available for the auxiliary-state mode"""
    status_code = status.HTTP_409_CONFLICT

    def __init__(self, message: str = "Operation requires gsADMM auxiliary state", error_code: str = "WRONG_MODE"):
        super().__init__(message=message, error_code=error_code)

class ContractViolationException(SubsplitException):
    """Caller broke an operation contract"""
    status_code = status.HTTP_409_CONFLICT

    def __init__(self, message: str = "Contract violation", error_code: str = "CONTRACT_VIOLATION"):
        super().__init__(message=message, error_code=error_code)

class PhaseException(SubsplitException):
    """A task inside a parallel phase failed"""
    status_code = status.HTTP_500_INTERNAL_SERVER_ERROR

    def __init__(self, phase: str, index: int, cause: BaseException):
        super().__init__(
            message=f"Phase '{phase}' failed on subnetwork {index}: {cause}",
            error_code="PHASE_FAILED",
            details={"phase": phase, "index": index}
        )
        self.phase = phase
        self.index = index
        self.cause = cause

class EvaluationException(SubsplitException):
    """Objective evaluated to a non-finite value"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Objective is not finite", error_code: str = "EVALUATION_FAILED"):
        super().__init__(message=message, error_code=error_code)

# =============================================================================
# DATA / CONFIG ERRORS
# =============================================================================

class FormatException(SubsplitException):
    """Bad IDX magic number"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Unrecognised file format", error_code: str = "BAD_FORMAT"):
        super().__init__(message=message, error_code=error_code)

class LengthException(SubsplitException):
    """Truncated IDX payload"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "File is truncated", error_code: str = "TRUNCATED"):
        super().__init__(message=message, error_code=error_code)

class ConsistencyException(SubsplitException):
    """Image and label counts disagree"""
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY

    def __init__(self, message: str = "Image and label counts differ", error_code: str = "COUNT_MISMATCH"):
        super().__init__(message=message, error_code=error_code)

class ConfigException(ValidationException):
    """Invalid run configuration"""
    def __init__(self, message: str = "Invalid configuration", error_code: str = "INVALID_CONFIG", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=error_code, details=details)

class DatasetNotFoundException(SubsplitException):
    """Dataset files missing on disk"""
    status_code = status.HTTP_404_NOT_FOUND

    def __init__(self, path: str):
        super().__init__(
            message=f"Dataset file not found: {path}",
            error_code="DATASET_NOT_FOUND",
            details={"expected_path": path}
        )
        self.path = path

class NotFoundException(SubsplitException):
    """Resource not found exceptions"""
    status_code = status.HTTP_404_NOT_FOUND

    def __init__(self, message: str = "Resource not found", error_code: str = "NOT_FOUND"):
        super().__init__(message=message, error_code=error_code)
