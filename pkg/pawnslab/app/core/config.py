"""
pawnslab Configuration
"""
import os
from pathlib import Path
from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    """Checker and interpreter settings loaded from environment variables"""

    # Diagnostics
    max_errors: int = 50
    deny_warnings: bool = False

    # Interpreter
    oracle: bool = False
    int_bits: int = 64
    max_call_depth: int = 5000

    # Sources
    source_extension: str = ".pawns"

    # Logging
    log_level: str = "WARNING"

    model_config = {
        "env_prefix": "PAWNS_",
        "env_file": os.path.join(Path(__file__).parent.parent.parent.parent, ".env"),
        "extra": "ignore",
        "case_sensitive": False
    }


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
