import os
from typing import Optional
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "Subsplit"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    ENVIRONMENT: str = "development"

    # Datasets
    DATA_ROOT: str = "data"
    SUBSPLIT_DATA: Optional[str] = None  # overrides --data-root when set

    # Runs started through the HTTP surface
    RUNS_DIR: str = "runs"

    # Parallel runtime
    DEFAULT_WORKERS: Optional[int] = None

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # CORS
    CORS_ORIGINS: list = ["*"]
    CORS_ALLOW_CREDENTIALS: bool = True
    CORS_ALLOW_METHODS: list = ["*"]
    CORS_ALLOW_HEADERS: list = ["*"]

    class Config:
        env_file = ".env"
        case_sensitive = True

    def resolve_data_root(self, flag_value: Optional[str] = None) -> str:
        """Dataset root: SUBSPLIT_DATA wins over the flag, the flag over DATA_ROOT"""
        if self.SUBSPLIT_DATA:
            return self.SUBSPLIT_DATA
        return flag_value or self.DATA_ROOT

    def resolve_workers(self, subnetworks: int, requested: Optional[int] = None) -> int:
        """Worker count: explicit request, then DEFAULT_WORKERS, then min(n, cores)"""
        if requested is not None:
            return max(1, requested)
        if self.DEFAULT_WORKERS is not None:
            return max(1, self.DEFAULT_WORKERS)
        return max(1, min(subnetworks, os.cpu_count() or 1))


# Global settings instance
settings = Settings()
