# app/utils/reporting.py

import logging
import os
from typing import Any, Dict, List

import pandas as pd

logger = logging.getLogger(__name__)


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def write_report(frames: pd.DataFrame, summary: Dict[str, Any], out_dir: str) -> Dict[str, str]:
    """Write frames.csv and summary.csv into out_dir"""
    paths = {
        "frames": os.path.join(out_dir, "frames.csv"),
        "summary": os.path.join(out_dir, "summary.csv"),
    }
    _write_csv(frames, paths["frames"])
    _write_csv(pd.DataFrame([summary]), paths["summary"])
    logger.info(f"SUCCESS Wrote {len(frames)} frame records to {out_dir}")
    return paths


def write_sweep(rows: List[Dict[str, Any]], path: str) -> None:
    _write_csv(pd.DataFrame(rows), path)
    logger.info(f"SUCCESS Wrote {len(rows)} sweep rows to {path}")
