import logging
from typing import Optional

from core.config import settings

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """Install the root handler once; later calls only adjust the level"""
    global _configured
    resolved = (level or settings.LOG_LEVEL).upper()
    if not _configured:
        logging.basicConfig(level=resolved, format=settings.LOG_FORMAT)
        _configured = True
    logging.getLogger().setLevel(resolved)
