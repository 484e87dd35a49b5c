from typing import List

from pydantic_settings import BaseSettings, SettingsConfigDict
class Settings(BaseSettings):

    # Application Configuration
    log_level: str = "INFO"
    output_root: str = "runs"
    jobs: int = 1
    write_telemetry: bool = True

    # Dormancy measurement
    scoring_batch_size: int = 64
    default_taus: List[float] = [0.0, 0.025, 0.1]

    # Recycling (ReDo)
    recycle_period: int = 1000
    redo_tau: float = 0.1
    default_setting_tau: float = 0.025

    # Statistics
    bootstrap_resamples: int = 2000
    bootstrap_alpha: float = 0.05
    effective_rank_delta: float = 0.01
    final_window_episodes: int = 100

    # Demo
    demo_seconds: float = 60.0

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="DORMANT_",
        case_sensitive=False,
        extra="ignore",
    )

# Global settings instance
settings = Settings()
