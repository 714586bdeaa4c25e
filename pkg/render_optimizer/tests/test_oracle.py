import itertools

import numpy as np
import pytest

from app.models.domain import ConfigPoint, ParameterVector
from app.models.errors import ValidationError
from app.services.discretization import level_matrix
from app.services.oracle import (
    BASE_TIME_MS, CPU_OVERHEAD_MS, OracleConfig, generate_dataset, ground_truth, oracle_evaluate,
)
from app.utils.dataset_io import load_dataset, save_dataset


def test_default_weights_are_uniform(small_oracle):
    assert small_oracle.cost_weights == pytest.approx((1 / 3,) * 3)
    assert small_oracle.quality_weights == pytest.approx((1 / 3,) * 3)
    assert small_oracle.interaction_pair == (0, 1)


def test_interaction_pair_uses_two_most_expensive_dimensions(sss_oracle):
    assert sss_oracle.interaction_pair == (0, 1)


def test_best_quality_has_perfect_ssim(sss_oracle, sss_space):
    for lod in range(3):
        outcome = oracle_evaluate(sss_oracle, ConfigPoint(sss_space.best_quality, lod, 2000, 2500))
        assert outcome.ssim == 1.0


def test_doubling_gpu_frequency_halves_gpu_term(sss_oracle):
    params = ParameterVector((5, 1, 0, 1))
    slow = oracle_evaluate(sss_oracle, ConfigPoint(params, 1, 2400, 1500)).time_ms
    fast = oracle_evaluate(sss_oracle, ConfigPoint(params, 1, 2400, 3000)).time_ms
    cpu_term = CPU_OVERHEAD_MS * sss_oracle.cpu_ref / 2400
    assert fast - cpu_term == pytest.approx((slow - cpu_term) / 2)


def test_minimum_config_time_at_reference_clocks(small_oracle):
    point = ConfigPoint(ParameterVector((0, 0, 0)), 0, small_oracle.cpu_ref, small_oracle.gpu_ref)
    outcome = oracle_evaluate(small_oracle, point)
    assert outcome.time_ms == pytest.approx(BASE_TIME_MS * 0.25 + CPU_OVERHEAD_MS)


def test_quality_drops_below_best_and_lod_scales_it(sss_oracle):
    params = ParameterVector((0, 0, 0, 0))
    near = oracle_evaluate(sss_oracle, ConfigPoint(params, 0, 2400, 2500)).ssim
    far = oracle_evaluate(sss_oracle, ConfigPoint(params, 2, 2400, 2500)).ssim
    assert near < far < 1.0


def test_noise_is_keyed_by_point(sss_oracle):
    point = ConfigPoint(ParameterVector((3, 1, 1, 0)), 2, 1800, 2200)
    first = oracle_evaluate(sss_oracle, point, noisy=True)
    second = oracle_evaluate(sss_oracle, point, noisy=True)
    clean = oracle_evaluate(sss_oracle, point)
    assert first == second
    assert first.time_ms != clean.time_ms


def test_evaluate_rejects_points_outside_domain(sss_oracle):
    with pytest.raises(ValidationError):
        oracle_evaluate(sss_oracle, ConfigPoint(ParameterVector((0, 0, 0, 0)), 3, 2000, 2000))
    with pytest.raises(ValidationError):
        oracle_evaluate(sss_oracle, ConfigPoint(ParameterVector((0, 0, 0, 0)), 0, 9000, 2000))
    with pytest.raises(ValidationError):
        oracle_evaluate(sss_oracle, ConfigPoint(ParameterVector((0, 0, 0, 9)), 0, 2000, 2000))


def test_config_rejects_bad_weights(sss_space, lods):
    with pytest.raises(ValidationError):
        OracleConfig.with_defaults(sss_space, lods, (1200, 3600), (1000, 4000), cost_weights=(1.0, 1.0))
    with pytest.raises(ValidationError):
        OracleConfig.with_defaults(sss_space, lods, (3600, 1200), (1000, 4000))


def test_generate_dataset_rows_are_valid(sss_oracle):
    dataset = generate_dataset(sss_oracle, 4096)
    frame = dataset.frame
    assert len(dataset) == 4096
    assert frame["lod"].between(0, 2).all()
    assert frame["cpu_freq_mhz"].between(1200, 3600).all()
    assert frame["gpu_freq_mhz"].between(1000, 4000).all()
    assert frame["ssim"].between(0.0, 1.0).all()
    assert (frame["time_ms"] > 0).all()
    assert (frame["cpu_freq_mhz"] == np.rint(frame["cpu_freq_mhz"])).all()


def test_generate_dataset_rejects_zero_samples(sss_oracle):
    with pytest.raises(ValidationError):
        generate_dataset(sss_oracle, 0)


def test_same_seed_gives_identical_csv(sss_oracle, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    save_dataset(generate_dataset(sss_oracle, 500), str(first))
    save_dataset(generate_dataset(sss_oracle, 500), str(second))
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()


def test_dataset_csv_round_trip(sss_oracle, sss_space, lods, tmp_path):
    path = str(tmp_path / "data.csv")
    original = generate_dataset(sss_oracle, 200)
    save_dataset(original, path)
    loaded = load_dataset(path, sss_space, lods)
    assert loaded.seed == original.seed
    assert loaded.cpu_freq_range == original.cpu_freq_range
    assert np.allclose(loaded.frame.to_numpy(dtype=float), original.frame.to_numpy(dtype=float))


def test_load_dataset_rejects_other_space(sss_oracle, small_space, lods, tmp_path):
    path = str(tmp_path / "data.csv")
    save_dataset(generate_dataset(sss_oracle, 50), path)
    with pytest.raises(ValidationError):
        load_dataset(path, small_space, lods)


GRID_CPU = (1200, 1800, 2400, 3600)
GRID_GPU = (1000, 1750, 2500, 4000)


def _grid_oracles(sss_space, ao_space, lods):
    return [
        OracleConfig.with_defaults(sss_space, lods, (1200, 3600), (1000, 4000),
                                   cost_weights=(0.35, 0.3, 0.25, 0.1), quality_weights=(0.3, 0.3, 0.25, 0.15)),
        OracleConfig.with_defaults(ao_space, lods, (1200, 3600), (1000, 4000)),
        OracleConfig.with_defaults(ao_space, lods, (1200, 3600), (1000, 4000),
                                   cost_weights=(0.05, 0.1, 0.3, 0.15, 0.4), interaction_strength=2.0),
    ]


def _evaluate_at(cfg, levels, lod, cpu, gpu):
    n = len(levels)
    return ground_truth(cfg, levels, np.full(n, lod), np.full(n, float(cpu)), np.full(n, float(gpu)))


def test_cost_never_drops_when_a_level_rises(sss_space, ao_space, lods):
    for cfg in _grid_oracles(sss_space, ao_space, lods):
        levels = level_matrix(cfg.space)
        for lod, cpu, gpu in itertools.product(range(len(lods)), GRID_CPU, GRID_GPU):
            _, base_time = _evaluate_at(cfg, levels, lod, cpu, gpu)
            for d, radix in enumerate(cfg.space.radices):
                rows = np.flatnonzero(levels[:, d] < radix - 1)
                raised = levels[rows].copy()
                raised[:, d] += 1
                _, raised_time = _evaluate_at(cfg, raised, lod, cpu, gpu)
                assert (raised_time >= base_time[rows]).all(), (cfg.space.names[d], lod, cpu, gpu)


def test_quality_never_drops_moving_toward_best(sss_space, ao_space, lods):
    for cfg in _grid_oracles(sss_space, ao_space, lods):
        levels = level_matrix(cfg.space)
        best = np.array(cfg.space.best_quality_index)
        for lod, cpu, gpu in itertools.product(range(len(lods)), GRID_CPU, GRID_GPU):
            base_ssim, _ = _evaluate_at(cfg, levels, lod, cpu, gpu)
            for d in range(len(best)):
                moved = levels.copy()
                moved[:, d] += np.sign(best[d] - levels[:, d])
                moved_ssim, _ = _evaluate_at(cfg, moved, lod, cpu, gpu)
                assert (moved_ssim >= base_ssim).all(), (cfg.space.names[d], lod, cpu, gpu)


def test_best_quality_is_perfect_over_grid(sss_space, ao_space, lods):
    for cfg in _grid_oracles(sss_space, ao_space, lods):
        best = np.array([cfg.space.best_quality_index])
        for lod, cpu, gpu in itertools.product(range(len(lods)), GRID_CPU, GRID_GPU):
            ssim, _ = _evaluate_at(cfg, best, lod, cpu, gpu)
            assert ssim[0] == 1.0
            outcome = oracle_evaluate(cfg, ConfigPoint(cfg.space.best_quality, lod, cpu, gpu))
            assert outcome.ssim == 1.0


def test_noiseless_calls_are_bit_identical(sss_space, ao_space, lods):
    for cfg in _grid_oracles(sss_space, ao_space, lods):
        levels = level_matrix(cfg.space)
        for lod, cpu, gpu in itertools.product(range(len(lods)), GRID_CPU, GRID_GPU):
            first = _evaluate_at(cfg, levels, lod, cpu, gpu)
            second = _evaluate_at(cfg, levels, lod, cpu, gpu)
            assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
            point = ConfigPoint(ParameterVector(tuple(int(i) for i in levels[-1])), lod, cpu, gpu)
            assert oracle_evaluate(cfg, point) == oracle_evaluate(cfg, point)
