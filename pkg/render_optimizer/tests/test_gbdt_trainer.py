import numpy as np
import pytest

from app.models.domain import Dataset
from app.models.errors import ConfigError, ModelFormatError, TrainingError, ValidationError
from app.services.discretization import level_matrix
from app.services.gbdt_trainer import (
    FeatureMatrix, GbdtModel, TrainConfig, boost, dumps_model, feature_names, load_model,
    loads_model, mean_absolute_error, model_fingerprint, predict, save_model, split_dataset, train,
)
from app.services.lut_builder import cell_features
from app.services.oracle import OracleConfig, generate_dataset


def _subset(dataset: Dataset, n: int) -> Dataset:
    return Dataset(
        space=dataset.space, lods=dataset.lods, cpu_freq_range=dataset.cpu_freq_range,
        gpu_freq_range=dataset.gpu_freq_range, seed=dataset.seed,
        frame=dataset.frame.iloc[:n].reset_index(drop=True),
    )


@pytest.mark.parametrize("n, n_train, n_valid", [(1500, 1050, 450), (10, 7, 3), (1000, 700, 300)])
def test_split_sizes(small_dataset, n, n_train, n_valid):
    train_set, valid_set = split_dataset(_subset(small_dataset, n), TrainConfig())
    assert (len(train_set), len(valid_set)) == (n_train, n_valid)


def test_split_is_deterministic(small_dataset):
    a, _ = split_dataset(small_dataset, TrainConfig(seed=9))
    b, _ = split_dataset(small_dataset, TrainConfig(seed=9))
    c, _ = split_dataset(small_dataset, TrainConfig(seed=10))
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)


def test_split_rejects_tiny_dataset(small_dataset):
    with pytest.raises(TrainingError):
        split_dataset(_subset(small_dataset, 9), TrainConfig())


def test_empty_depth_range_is_config_error():
    with pytest.raises(ConfigError):
        TrainConfig(depth_range=(5, 4)).depths


def test_training_loss_never_increases(trained_pair):
    for model in trained_pair:
        losses = np.array(model.train_loss)
        assert len(losses) == model.n_estimators + 1
        assert np.all(np.diff(losses) <= 1e-9 * losses[0])


def test_selected_depth_has_lowest_validation_mae(trained_pair):
    for model in trained_pair:
        assert set(model.depth_scores) == {2, 3, 4}
        best = min(model.depth_scores.values())
        assert model.validation_mae == best
        assert model.max_depth == min(d for d, s in model.depth_scores.items() if s == best)


def test_models_learn_the_oracle(trained_pair, small_dataset):
    phi, psi = trained_pair
    assert phi.target_name == "ssim" and psi.target_name == "time_ms"
    time_spread = small_dataset.frame["time_ms"].std()
    assert psi.validation_mae < 0.5 * time_spread
    assert phi.validation_mae < 0.5 * small_dataset.frame["ssim"].std()


def test_every_searched_depth_trains_monotonically_and_reproduces_selection(small_dataset):
    cfg = TrainConfig(n_estimators=30, depth_range=(1, 8), seed=5)
    train_set, valid_set = split_dataset(small_dataset, cfg, "time_ms")
    train_mae, valid_mae = {}, {}
    for depth in cfg.depths:
        model = boost(train_set, "time_ms", depth, cfg)
        losses = np.array(model.train_loss)
        assert len(losses) == cfg.n_estimators + 1
        assert np.all(np.diff(losses) <= 1e-9 * losses[0]), depth
        train_mae[depth] = mean_absolute_error(model, train_set)
        valid_mae[depth] = mean_absolute_error(model, valid_set)

    assert train_mae[8] <= train_mae[1]

    selected = train(small_dataset, "time_ms", cfg)
    assert selected.depth_scores == valid_mae
    best = min(valid_mae.values())
    assert selected.max_depth == min(d for d, s in valid_mae.items() if s == best)
    assert selected.validation_mae == best


def test_degenerate_depth_range(small_dataset):
    model = train(small_dataset, "time_ms", TrainConfig(n_estimators=5, depth_range=(3, 3)))
    assert model.max_depth == 3
    assert list(model.depth_scores) == [3]


def test_constant_target_is_predicted_exactly(small_dataset):
    frame = small_dataset.frame.copy()
    frame["ssim"] = 0.9
    data = Dataset(small_dataset.space, small_dataset.lods, small_dataset.cpu_freq_range,
                   small_dataset.gpu_freq_range, small_dataset.seed, frame)
    model = train(data, "ssim", TrainConfig(n_estimators=5, depth_range=(1, 2)))
    assert model.validation_mae == pytest.approx(0.0, abs=1e-12)


def test_zero_tree_model_predicts_base(small_space):
    model = GbdtModel(trees=[], base_prediction=1.5, learning_rate=0.1, max_depth=1,
                      target_name="time_ms", feature_names=feature_names(small_space))
    out = predict(model, np.zeros((4, len(feature_names(small_space)))))
    assert np.array_equal(out, np.full(4, 1.5))


def test_predict_checks_feature_width(trained_pair):
    with pytest.raises(ValidationError):
        predict(trained_pair[0], np.zeros((3, 2)))


def test_predict_covers_every_code_at_a_cell(trained_pair, small_space):
    phi, _ = trained_pair
    features = cell_features(level_matrix(small_space), 1, 2400, 3000)
    out = predict(phi, features)
    assert out.shape == (small_space.total,)
    assert np.array_equal(out, predict(phi, features))


def test_unknown_target_rejected(small_dataset):
    with pytest.raises(ValidationError):
        train(small_dataset, "fps", TrainConfig(n_estimators=1, depth_range=(1, 1)))


def test_parallel_depth_search_matches_serial(small_dataset):
    cfg = TrainConfig(n_estimators=5, depth_range=(1, 3))
    serial = train(small_dataset, "time_ms", cfg, workers=1)
    parallel = train(small_dataset, "time_ms", cfg, workers=2)
    assert dumps_model(serial) == dumps_model(parallel)


def test_model_file_round_trip(trained_pair, small_space, tmp_path):
    phi, _ = trained_pair
    path = str(tmp_path / "phi.json")
    save_model(phi, path)
    restored = load_model(path)
    assert dumps_model(restored) == dumps_model(phi)
    assert model_fingerprint(restored) == model_fingerprint(phi)
    rng = np.random.default_rng(4)
    n = 1000
    X = np.column_stack(
        [rng.integers(0, radix, size=n) for radix in small_space.radices]
        + [rng.integers(0, 3, size=n), rng.uniform(1200, 3600, size=n), rng.uniform(1000, 4000, size=n)]
    ).astype(np.float64)
    assert np.array_equal(predict(restored, X), predict(phi, X))


def test_retraining_gives_identical_model_file(small_dataset):
    cfg = TrainConfig(n_estimators=8, depth_range=(2, 3))
    assert dumps_model(train(small_dataset, "ssim", cfg)) == dumps_model(train(small_dataset, "ssim", cfg))


def test_malformed_model_json_reports_position():
    with pytest.raises(ModelFormatError) as info:
        loads_model('{"target": "ssim",\n  "trees": [')
    assert info.value.line == 2


def test_model_json_missing_fields():
    with pytest.raises(ModelFormatError):
        loads_model('{"target": "ssim"}')
    with pytest.raises(ModelFormatError):
        loads_model('{"target": "fps", "max_depth": 1, "trees": [], "base_prediction": 0, "learning_rate": 0.1}')


def test_boost_on_linear_target_reduces_loss():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(300, 2))
    y = 3 * X[:, 0] + X[:, 1]
    model = boost(FeatureMatrix(X, y, ("a", "b")), "time_ms", 3, TrainConfig(n_estimators=40, min_samples_leaf=2))
    assert model.train_loss[-1] < 0.1 * model.train_loss[0]


@pytest.mark.slow
def test_noiseless_sss_accuracy(sss_space, lods):
    oracle = OracleConfig.with_defaults(
        sss_space, lods, (1200, 3600), (1000, 4000),
        cost_weights=(0.35, 0.3, 0.25, 0.1), noise_std_time=0.0, noise_std_ssim=0.0, seed=1,
    )
    data = generate_dataset(oracle, 20000)
    psi = train(data, "time_ms", TrainConfig())
    phi = train(data, "ssim", TrainConfig())
    assert psi.validation_mae <= 0.05
    assert phi.validation_mae <= 0.005
    for model in (phi, psi):
        assert np.all(np.diff(model.train_loss) <= 1e-9 * model.train_loss[0])
