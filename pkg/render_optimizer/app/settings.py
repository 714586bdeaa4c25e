# app/settings.py

import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Load .env from project root (2 levels up from this file)
env_path = os.path.join(os.path.dirname(__file__), '..', '..', '.env')
load_dotenv(env_path)


@dataclass(frozen=True)
class Settings:
    """Process-level knobs read from the environment"""
    log_level: str = "INFO"
    workers: int = 1
    bench_seed: int = 1234


def get_settings() -> Settings:
    """Read settings from environment variables, falling back to defaults"""
    workers = int(os.getenv("RENDER_OPT_WORKERS", "1"))
    return Settings(
        log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
        workers=max(1, workers),
        bench_seed=int(os.getenv("RENDER_OPT_BENCH_SEED", "1234")),
    )
