import pytest

from app.models.domain import HardwareGrid, LodSet, ParameterDimension, ParameterSpace
from app.services.gbdt_trainer import TrainConfig, train
from app.services.lut_builder import LutBuildConfig, build_lut, build_reference_lut
from app.services.oracle import OracleConfig, generate_dataset



def make_sss_space() -> ParameterSpace:
    return ParameterSpace(
        dimensions=(
            ParameterDimension("radius", tuple(round(0.1 * i, 1) for i in range(21))),
            ParameterDimension("samples", (13, 19, 27)),
            ParameterDimension.categorical("resolution", ["half", "full"]),
            ParameterDimension.categorical("quality", ["low", "high"]),
        ),
        best_quality_index=(10, 2, 1, 1),
    )


def make_ao_space() -> ParameterSpace:
    return ParameterSpace(
        dimensions=(
            ParameterDimension("ssao_intensity", (0.6, 0.8, 1.0)),
            ParameterDimension("ssao_bias", (0, 5, 10)),
            ParameterDimension("ssao_quality", (60, 80, 100)),
            ParameterDimension("rtao_intensity", (0.6, 0.8, 1.0)),
            ParameterDimension("rtao_samples", (1, 2, 4)),
        ),
        best_quality_index=(2, 0, 2, 2, 2),
    )


@pytest.fixture(scope="session")
def sss_space():
    return make_sss_space()


@pytest.fixture(scope="session")
def ao_space():
    return make_ao_space()


@pytest.fixture(scope="session")
def lods():
    return LodSet(thresholds=(1.0, 0.5, 0.3), names=("near", "mid", "far"))


@pytest.fixture(scope="session")
def small_space():
    """24 codes; small enough to train on in a few seconds"""
    return ParameterSpace(
        dimensions=(
            ParameterDimension("radius", (0.0, 0.5, 1.0)),
            ParameterDimension("samples", (4, 8, 16, 32)),
            ParameterDimension.categorical("resolution", ["half", "full"]),
        ),
        best_quality_index=(2, 3, 1),
    )


@pytest.fixture(scope="session")
def small_grid():
    return HardwareGrid(cpu_bins=(1200, 2400, 3600), gpu_bins=(1000, 2000, 3000, 4000))


@pytest.fixture(scope="session")
def small_oracle(small_space, lods):
    return OracleConfig.with_defaults(small_space, lods, (1200, 3600), (1000, 4000), seed=3)


@pytest.fixture(scope="session")
def sss_oracle(sss_space, lods):
    return OracleConfig.with_defaults(
        sss_space, lods, (1200, 3600), (1000, 4000),
        cost_weights=(0.35, 0.3, 0.25, 0.1), quality_weights=(0.3, 0.3, 0.25, 0.15), seed=11,
    )


@pytest.fixture(scope="session")
def small_dataset(small_oracle):
    return generate_dataset(small_oracle, 1500)


@pytest.fixture(scope="session")
def small_train_cfg():
    return TrainConfig(n_estimators=60, learning_rate=0.1, depth_range=(2, 4), seed=5)


@pytest.fixture(scope="session")
def trained_pair(small_dataset, small_train_cfg):
    phi = train(small_dataset, "ssim", small_train_cfg)
    psi = train(small_dataset, "time_ms", small_train_cfg)
    return phi, psi


@pytest.fixture(scope="session")
def small_lut(small_space, lods, small_grid, trained_pair):
    phi, psi = trained_pair
    return build_lut(LutBuildConfig(space=small_space, lods=lods, grid=small_grid, phi=phi, psi=psi))


@pytest.fixture(scope="session")
def sss_reference_lut(sss_oracle):
    grid = HardwareGrid(cpu_bins=(1200, 2000, 2800, 3600), gpu_bins=tuple(range(1000, 4001, 75))[:40])
    return build_reference_lut(sss_oracle, grid, 0.2)
