"""
Application configuration loaded from environment variables.
"""
import logging
from typing import Optional

from pydantic_settings import BaseSettings

from optiq import __version__


class Settings(BaseSettings):
    # Solver defaults used by the CLI
    DEFAULT_ETA: float = 1e-12  # tolerance on the squared gradient norm
    DEFAULT_MAX_ITERATIONS: int = 10000

    # Suite runner
    OPTIQ_THREADS: Optional[int] = None  # caps --parallel when set
    TRACE_DIR: str = "data/traces"

    # Reports
    ARTIFACT_VERSION: str = __version__

    # Application
    LOG_LEVEL: str = "WARNING"

    class Config:
        env_file = ".env"
        case_sensitive = False


settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Attach a stderr handler to the ``optiq`` logger hierarchy."""
    logger = logging.getLogger("optiq")
    logger.setLevel((level or settings.LOG_LEVEL).upper())
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
