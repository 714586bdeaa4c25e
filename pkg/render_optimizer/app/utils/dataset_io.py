# app/utils/dataset_io.py

import json
import logging
import os
from typing import List, Tuple

import pandas as pd

from app.models.domain import Dataset, LodSet, ParameterSpace
from app.models.errors import ValidationError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["frame", "cpu_freq_mhz", "gpu_freq_mhz"]


def meta_path(csv_path: str) -> str:
    return f"{csv_path}.meta.json"


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write the dataset CSV (UTF-8, LF) plus its metadata sidecar"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    dataset.frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    meta = {
        "seed": dataset.seed,
        "rows": len(dataset),
        "dimensions": {d.name: d.count for d in dataset.space.dimensions},
        "lod_count": len(dataset.lods),
        "cpu_freq_range": list(dataset.cpu_freq_range),
        "gpu_freq_range": list(dataset.gpu_freq_range),
    }
    with open(meta_path(path), "w", encoding="utf-8", newline="\n") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"SUCCESS Saved {len(dataset)} samples to {path}")


def load_dataset(path: str, space: ParameterSpace, lods: LodSet) -> Dataset:
    """
    Read a dataset CSV and check it against the configured space

    Raises:
        ValidationError: when columns, metadata or values do not match
        OSError: when the file is missing
    """
    frame = pd.read_csv(path, encoding="utf-8")
    seed = 0
    cpu_range: Tuple[float, float] = (float(frame["cpu_freq_mhz"].min()), float(frame["cpu_freq_mhz"].max()))
    gpu_range: Tuple[float, float] = (float(frame["gpu_freq_mhz"].min()), float(frame["gpu_freq_mhz"].max()))

    if os.path.exists(meta_path(path)):
        with open(meta_path(path), encoding="utf-8") as f:
            meta = json.load(f)
        expected = {d.name: d.count for d in space.dimensions}
        if meta.get("dimensions") != expected:
            raise ValidationError(f"Dataset {path} was generated for dimensions {meta.get('dimensions')}, config has {expected}")
        if meta.get("lod_count") != len(lods):
            raise ValidationError(f"Dataset {path} has {meta.get('lod_count')} LODs, config has {len(lods)}")
        seed = int(meta["seed"])
        cpu_range = tuple(meta["cpu_freq_range"])
        gpu_range = tuple(meta["gpu_freq_range"])
    else:
        logger.warning(f"No metadata sidecar for {path}; frequency bounds taken from the data")

    return Dataset(space=space, lods=lods, cpu_freq_range=cpu_range, gpu_freq_range=gpu_range, seed=seed, frame=frame)


def load_trace(path: str) -> List[Tuple[float, float]]:
    """Read a `frame,cpu_freq_mhz,gpu_freq_mhz` trace, ordered by frame"""
    frame = pd.read_csv(path, encoding="utf-8")
    if list(frame.columns) != TRACE_COLUMNS:
        raise ValidationError(f"Trace {path} must have columns {TRACE_COLUMNS}, got {list(frame.columns)}")
    if frame.empty:
        raise ValidationError(f"Trace {path} is empty")
    frame = frame.sort_values("frame", kind="stable")
    if (frame["cpu_freq_mhz"] <= 0).any() or (frame["gpu_freq_mhz"] <= 0).any():
        raise ValidationError(f"Trace {path} contains non-positive frequencies")
    return list(zip(frame["cpu_freq_mhz"].astype(float), frame["gpu_freq_mhz"].astype(float)))
