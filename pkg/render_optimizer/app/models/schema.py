# app/models/schema.py

import math
import os
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from pydantic import ValidationError as PydanticValidationError

from app.models.domain import HardwareGrid, LodSet, ParameterDimension, ParameterSpace
from app.models.errors import ConfigError, ValidationError
from app.services.evaluation_service import Scenario, lod_schedule
from app.services.frequency_sources import create_frequency_source
from app.services.gbdt_trainer import TrainConfig
from app.services.oracle import OracleConfig
from app.utils.dataset_io import load_trace


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DimensionSpec(StrictModel):
    name: str
    values: Optional[List[float]] = None
    labels: Optional[List[str]] = None  # categorical, ordinal-coded 0..n-1
    best_quality: Union[float, str]

    @model_validator(mode="after")
    def one_kind_of_levels(self):
        if (self.values is None) == (self.labels is None):
            raise ValueError("give exactly one of 'values' or 'labels'")
        return self

    def to_dimension(self) -> ParameterDimension:
        if self.labels is not None:
            return ParameterDimension.categorical(self.name, self.labels)
        return ParameterDimension(name=self.name, values=tuple(self.values))

    def best_index(self) -> int:
        if self.labels is not None:
            if self.best_quality not in self.labels:
                raise ValidationError(f"best_quality '{self.best_quality}' is not one of {self.labels}")
            return self.labels.index(self.best_quality)
        if isinstance(self.best_quality, str):
            raise ValidationError(f"best_quality of numeric dimension '{self.name}' must be a number")
        for i, value in enumerate(self.values):
            if math.isclose(value, self.best_quality, rel_tol=1e-9, abs_tol=1e-9):
                return i
        raise ValidationError(f"best_quality {self.best_quality} is not a level of '{self.name}'")


class SpaceSpec(StrictModel):
    dimensions: List[DimensionSpec] = Field(min_length=1)


class LodSpec(StrictModel):
    name: str
    area_threshold: float


class BinRange(StrictModel):
    """Evenly spaced bins rounded to whole MHz"""
    min: float = Field(gt=0)
    max: float = Field(gt=0)
    count: int = Field(ge=1)

    def to_bins(self) -> List[int]:
        if self.count == 1:
            return [int(round(self.min))]
        return [int(f) for f in np.rint(np.linspace(self.min, self.max, self.count))]


class HardwareGridSpec(StrictModel):
    cpu_bins: Union[List[int], BinRange]
    gpu_bins: Union[List[int], BinRange]

    @staticmethod
    def _bins(spec: Union[List[int], BinRange]) -> List[int]:
        return spec.to_bins() if isinstance(spec, BinRange) else list(spec)

    def to_grid(self) -> HardwareGrid:
        return HardwareGrid(cpu_bins=tuple(self._bins(self.cpu_bins)), gpu_bins=tuple(self._bins(self.gpu_bins)))


class OracleSpec(StrictModel):
    cost_weights: Optional[List[float]] = None
    quality_weights: Optional[List[float]] = None
    interaction_strength: float = 0.5
    noise_std_time: float = 0.03
    noise_std_ssim: float = 0.002
    seed: int = 0
    cpu_freq_range: Tuple[float, float]
    gpu_freq_range: Tuple[float, float]


class TrainSpec(StrictModel):
    n_estimators: int = 100
    learning_rate: float = 0.1
    depth_range: Tuple[int, int] = (1, 30)
    split: Tuple[int, int] = (7, 3)
    min_samples_leaf: int = 5
    seed: int = 42


class LutSpec(StrictModel):
    time_percentile: float = 0.2


class FixedSourceSpec(StrictModel):
    kind: Literal["fixed"]
    cpu_freq: float
    gpu_freq: float


class ScriptedSourceSpec(StrictModel):
    kind: Literal["scripted"]
    trace: str


class RandomWalkSourceSpec(StrictModel):
    kind: Literal["random_walk"]
    start: Optional[Tuple[float, float]] = None
    max_step: Tuple[float, float] = (50.0, 50.0)
    seed: int = 0


SourceSpec = Annotated[
    Union[FixedSourceSpec, ScriptedSourceSpec, RandomWalkSourceSpec],
    Field(discriminator="kind"),
]


class ScenarioSpec(StrictModel):
    frames: int = Field(default=1000, ge=1)
    lod_schedule: Optional[List[int]] = None  # levels to cycle through; all LODs by default
    lod_period: int = Field(default=1, ge=1)
    source: SourceSpec = Field(default_factory=lambda: RandomWalkSourceSpec(kind="random_walk"))


class SweepSpec(StrictModel):
    cpu_freq: Optional[float] = None
    lod_schedule: Optional[List[int]] = None


class PathsSpec(StrictModel):
    dataset: str = "out/dataset.csv"
    phi: str = "out/phi.json"
    psi: str = "out/psi.json"
    lut: str = "out/table.lut"
    report_dir: str = "out/report"
    sweep: str = "out/sweep.csv"


class PipelineConfig(StrictModel):
    space: SpaceSpec
    lods: List[LodSpec] = Field(min_length=1)
    hardware_grid: HardwareGridSpec
    oracle: OracleSpec
    train: TrainSpec = Field(default_factory=TrainSpec)
    lut: LutSpec = Field(default_factory=LutSpec)
    scenario: ScenarioSpec = Field(default_factory=ScenarioSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    paths: PathsSpec = Field(default_factory=PathsSpec)

    _base_dir: str = PrivateAttr(default=".")

    def resolve(self, path: str) -> str:
        """Paths in the config are relative to the config file's directory"""
        return path if os.path.isabs(path) else os.path.normpath(os.path.join(self._base_dir, path))

    def to_space(self) -> ParameterSpace:
        dims = self.space.dimensions
        return ParameterSpace(
            dimensions=tuple(d.to_dimension() for d in dims),
            best_quality_index=tuple(d.best_index() for d in dims),
        )

    def to_lods(self) -> LodSet:
        return LodSet(thresholds=tuple(l.area_threshold for l in self.lods), names=tuple(l.name for l in self.lods))

    def to_grid(self) -> HardwareGrid:
        return self.hardware_grid.to_grid()

    def to_oracle(self) -> OracleConfig:
        o = self.oracle
        return OracleConfig.with_defaults(
            self.to_space(),
            self.to_lods(),
            o.cpu_freq_range,
            o.gpu_freq_range,
            cost_weights=o.cost_weights,
            quality_weights=o.quality_weights,
            interaction_strength=o.interaction_strength,
            noise_std_time=o.noise_std_time,
            noise_std_ssim=o.noise_std_ssim,
            seed=o.seed,
        )

    def to_train(self) -> TrainConfig:
        t = self.train
        return TrainConfig(
            n_estimators=t.n_estimators,
            learning_rate=t.learning_rate,
            depth_range=t.depth_range,
            split_ratio=t.split,
            min_samples_leaf=t.min_samples_leaf,
            seed=t.seed,
        )

    def schedule_levels(self, levels: Optional[List[int]]) -> List[int]:
        lods = self.to_lods()
        levels = list(range(len(lods))) if levels is None else levels
        for lod in levels:
            lods.check(lod)
        return levels

    def build_scenario(self) -> Scenario:
        """Materialize the configured frame schedule and clock readings"""
        spec = self.scenario
        schedule = lod_schedule(self.schedule_levels(spec.lod_schedule), spec.frames, spec.lod_period)
        source = spec.source
        if isinstance(source, FixedSourceSpec):
            reader = create_frequency_source("fixed", cpu_freq=source.cpu_freq, gpu_freq=source.gpu_freq)
        elif isinstance(source, ScriptedSourceSpec):
            reader = create_frequency_source("scripted", trace=load_trace(self.resolve(source.trace)))
        else:
            reader = create_frequency_source(
                "random_walk",
                cpu_range=self.oracle.cpu_freq_range,
                gpu_range=self.oracle.gpu_freq_range,
                max_step=source.max_step,
                seed=source.seed,
                start=source.start,
            )
        return Scenario.from_source(reader, schedule)


def _location(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_pipeline_config(text: Union[str, bytes], base_dir: str = ".") -> PipelineConfig:
    """
    Validate a JSON config document and check that it builds valid domain objects

    Raises:
        ConfigError: with the location of the first offending field
    """
    try:
        config = PipelineConfig.model_validate_json(text)
    except PydanticValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], _location(first["loc"])) from None
    config._base_dir = base_dir

    checks = (
        ("space", config.to_space),
        ("lods", config.to_lods),
        ("hardware_grid", config.to_grid),
        ("oracle", config.to_oracle),
        ("train", lambda: config.to_train().depths),
        ("scenario.lod_schedule", lambda: config.schedule_levels(config.scenario.lod_schedule)),
        ("sweep.lod_schedule", lambda: config.schedule_levels(config.sweep.lod_schedule)),
    )
    for section, build in checks:
        try:
            build()
        except (ValidationError, ConfigError) as e:
            raise ConfigError(str(e), section) from None
    if not 0.0 < config.lut.time_percentile <= 1.0:
        raise ConfigError(f"must lie in (0, 1], got {config.lut.time_percentile}", "lut.time_percentile")
    return config


def load_pipeline_config(path: str) -> PipelineConfig:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_pipeline_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
