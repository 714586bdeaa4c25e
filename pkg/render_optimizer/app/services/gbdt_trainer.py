# app/services/gbdt_trainer.py

"""
Gradient Boosted Regression Trees
Squared-error boosting with depth selection by validation MAE
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from app.models.domain import (
    CPU_COLUMN, GPU_COLUMN, LOD_COLUMN, SSIM_COLUMN, TIME_COLUMN, Dataset, ParameterSpace, param_column,
)
from app.models.errors import ConfigError, ModelFormatError, TrainingError, ValidationError
from app.services.regression_tree import FeatureBins, RegressionTree, fit_tree

logger = logging.getLogger(__name__)

TARGETS = (SSIM_COLUMN, TIME_COLUMN)
MIN_DATASET_ROWS = 10


@dataclass(frozen=True)
class TrainConfig:
    n_estimators: int = 100
    learning_rate: float = 0.1
    depth_range: Tuple[int, int] = (1, 30)
    split_ratio: Tuple[int, int] = (7, 3)
    min_samples_leaf: int = 5
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ConfigError("n_estimators must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if min(self.split_ratio) <= 0:
            raise ConfigError("split_ratio parts must be positive")

    @property
    def depths(self) -> List[int]:
        lo, hi = self.depth_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"Depth search range {self.depth_range} is empty")
        return list(range(lo, hi + 1))


@dataclass(frozen=True)
class FeatureMatrix:
    """Model inputs (levels, LOD, cpu, gpu) and a parallel target column"""
    features: np.ndarray
    target: np.ndarray
    feature_names: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.target)


@dataclass
class GbdtModel:
    trees: List[RegressionTree]
    base_prediction: float
    learning_rate: float
    max_depth: int
    target_name: str
    feature_names: Tuple[str, ...]
    validation_mae: Optional[float] = None
    depth_scores: Dict[int, float] = field(default_factory=dict)
    train_loss: List[float] = field(default_factory=list)

    @property
    def n_estimators(self) -> int:
        return len(self.trees)

    @property
    def width(self) -> int:
        return len(self.feature_names)


def feature_names(space: ParameterSpace) -> Tuple[str, ...]:
    return tuple(param_column(n) for n in space.names) + (LOD_COLUMN, CPU_COLUMN, GPU_COLUMN)


def to_feature_matrix(frame: pd.DataFrame, space: ParameterSpace, target: str) -> FeatureMatrix:
    if target not in TARGETS:
        raise ValidationError(f"Unknown target '{target}', expected one of {TARGETS}")
    names = feature_names(space)
    return FeatureMatrix(
        features=frame[list(names)].to_numpy(dtype=np.float64),
        target=frame[target].to_numpy(dtype=np.float64),
        feature_names=names,
    )


def split_dataset(data: Dataset, cfg: TrainConfig, target: str = TIME_COLUMN) -> Tuple[FeatureMatrix, FeatureMatrix]:
    """
    Seeded shuffled split; the train share (rounded down) goes to training

    Raises:
        TrainingError: fewer than 10 rows, or an empty partition
    """
    n = len(data)
    if n < MIN_DATASET_ROWS:
        raise TrainingError(f"Dataset has {n} samples, need at least {MIN_DATASET_ROWS}")
    train_part, valid_part = cfg.split_ratio
    n_train = n * train_part // (train_part + valid_part)
    if n_train == 0 or n_train == n:
        raise TrainingError(f"Split {cfg.split_ratio} of {n} samples leaves an empty partition")

    train_frame, valid_frame = train_test_split(data.frame, train_size=n_train, random_state=cfg.seed, shuffle=True)
    return to_feature_matrix(train_frame, data.space, target), to_feature_matrix(valid_frame, data.space, target)


def boost(train: FeatureMatrix, target: str, max_depth: int, cfg: TrainConfig,
          bins: Optional[FeatureBins] = None) -> GbdtModel:
    """
    Fit n_estimators trees on squared-error residuals at a fixed depth

    Records the training SSE before each round and after the last one.
    """
    if bins is None:
        bins = FeatureBins.from_features(train.features)
    y = train.target
    base = float(y.mean())
    current = np.full(len(y), base)
    trees: List[RegressionTree] = []
    losses: List[float] = []

    for _ in range(cfg.n_estimators):
        residuals = y - current
        losses.append(float(residuals @ residuals))
        tree = fit_tree(train.features, residuals, max_depth, cfg.min_samples_leaf, bins=bins)
        current = current + cfg.learning_rate * tree.predict(train.features)
        trees.append(tree)
    residuals = y - current
    losses.append(float(residuals @ residuals))

    return GbdtModel(
        trees=trees,
        base_prediction=base,
        learning_rate=cfg.learning_rate,
        max_depth=max_depth,
        target_name=target,
        feature_names=train.feature_names,
        train_loss=losses,
    )


def predict(model: GbdtModel, features: Union[np.ndarray, FeatureMatrix]) -> np.ndarray:
    """base_prediction + learning_rate * sum of tree outputs, per row"""
    if isinstance(features, FeatureMatrix):
        features = features.features
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.width:
        raise ValidationError(f"Feature width {features.shape[-1]} does not match model width {model.width}")
    total = np.zeros(features.shape[0])
    for tree in model.trees:
        total += tree.predict(features)
    return model.base_prediction + model.learning_rate * total


def mean_absolute_error(model: GbdtModel, data: FeatureMatrix) -> float:
    return float(np.mean(np.abs(predict(model, data) - data.target)))


def _score_depth(args) -> Tuple[int, float, GbdtModel]:
    train_set, valid_set, target, depth, cfg = args
    model = boost(train_set, target, depth, cfg)
    return depth, mean_absolute_error(model, valid_set), model


def train(data: Dataset, target: str, cfg: TrainConfig, workers: int = 1) -> GbdtModel:
    """
    Train one predictor with the depth search

    Args:
        data: Dataset
        target: "ssim" or "time_ms"
        cfg: TrainConfig
        workers: processes used to evaluate candidate depths

    Returns:
        GbdtModel at the depth with the lowest validation MAE (ties to the
        smaller depth), with validation_mae and depth_scores filled in
    """
    if target not in TARGETS:
        raise ValidationError(f"Unknown target '{target}', expected one of {TARGETS}")
    depths = cfg.depths
    train_set, valid_set = split_dataset(data, cfg, target)
    logger.info(f"Training {target}: {len(train_set)} train / {len(valid_set)} valid, depths {depths[0]}..{depths[-1]}")

    jobs = [(train_set, valid_set, target, depth, cfg) for depth in depths]
    scores: Dict[int, float] = {}
    best: Optional[GbdtModel] = None
    best_mae = float("inf")

    def consider(result):
        nonlocal best, best_mae
        depth, mae, model = result
        scores[depth] = mae
        logger.info(f"  depth={depth:2d} validation MAE={mae:.6g}")
        if mae < best_mae:
            best, best_mae = model, mae

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_score_depth, jobs):
                consider(result)
    else:
        for job in jobs:
            consider(_score_depth(job))

    best.validation_mae = best_mae
    best.depth_scores = scores
    logger.info(f"SUCCESS {target}: selected depth {best.max_depth}, validation MAE {best_mae:.6g}")
    return best


def model_to_dict(model: GbdtModel) -> Dict:
    return {
        "target": model.target_name,
        "base_prediction": model.base_prediction,
        "learning_rate": model.learning_rate,
        "max_depth": model.max_depth,
        "n_estimators": model.n_estimators,
        "validation_mae": model.validation_mae,
        "feature_names": list(model.feature_names),
        "depth_scores": {str(d): s for d, s in sorted(model.depth_scores.items())},
        "train_loss": model.train_loss,
        "trees": [tree.to_dict() for tree in model.trees],
    }


def dumps_model(model: GbdtModel) -> bytes:
    """Canonical JSON bytes of a model"""
    return (json.dumps(model_to_dict(model), separators=(",", ":")) + "\n").encode("utf-8")


def model_fingerprint(model: GbdtModel) -> int:
    return int.from_bytes(hashlib.blake2b(dumps_model(model), digest_size=8).digest(), "little")


def save_model(model: GbdtModel, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(dumps_model(model))
    logger.info(f"SUCCESS Saved {model.target_name} model ({model.n_estimators} trees, depth {model.max_depth}) to {path}")


def loads_model(text: Union[str, bytes]) -> GbdtModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Malformed model JSON: {e.msg}", line=e.lineno, column=e.colno) from e
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"Model file is not UTF-8: {e}") from e
    try:
        max_depth = int(data["max_depth"])
        target = data["target"]
        if target not in TARGETS:
            raise ModelFormatError(f"Unknown model target '{target}'")
        return GbdtModel(
            trees=[RegressionTree.from_dict(t, max_depth) for t in data["trees"]],
            base_prediction=float(data["base_prediction"]),
            learning_rate=float(data["learning_rate"]),
            max_depth=max_depth,
            target_name=target,
            feature_names=tuple(data.get("feature_names", ())),
            validation_mae=data.get("validation_mae"),
            depth_scores={int(d): float(s) for d, s in data.get("depth_scores", {}).items()},
            train_loss=[float(v) for v in data.get("train_loss", [])],
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ModelFormatError(f"Model JSON is missing or has invalid fields: {e}") from e


def load_model(path: str) -> GbdtModel:
    with open(path, "rb") as f:
        return loads_model(f.read())
