from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):

    model_config = SettingsConfigDict(
        env_prefix="TCLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    output_dir: Path = Field(
        default=Path("results"),
        description="Default directory for CLI outputs"
    )

    workers: int = Field(
        default=1,
        description="Worker processes used by Reynolds sweeps"
    )
    float_digits: int = Field(
        default=17,
        description="Significant digits for serialized floats"
    )

    debug: bool = Field(default=False, description="Debug mode")
    log_level: str = Field(default="WARNING", description="Logging level")

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:

        if v < 1:
            raise ValueError("At least one worker is required")
        return v

    @field_validator("float_digits")
    @classmethod
    def validate_float_digits(cls, v: int) -> int:

        if not 1 <= v <= 17:
            raise ValueError("float_digits must lie in 1..17")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:

        level = v.upper()
        if level not in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level

@lru_cache()
def get_settings() -> Settings:

    return Settings()
