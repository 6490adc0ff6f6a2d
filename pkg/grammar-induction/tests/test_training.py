import numpy as np
import pytest

from autodiff.engine import backward
from autodiff.optim import Adam
from calculus import Combinator, PrimitiveType, fn, viable_actions
from coherence.anchors import AnchorTable
from corpus import DatasetRecord, generate_synthetic
from training import (
    Model,
    correlations,
    interpreter_objective,
    kfold_evaluate,
    normalization_audit,
    run_gradient_checks,
    run_selftest,
    train_interpreter,
    train_parser,
    train_type_grammar,
    type_grammar_metrics,
)
from training.checks import check_k_best, check_symbolic_charts
from training.type_stage import autoencoder_loss, controller_targets, train_type_autoencoder
from typegrammar import encode_types
from utils.errors import ConfigError, DatasetError, StageOrderError, ThresholdError, UntrainedModelError

E, S, T = PrimitiveType("e"), PrimitiveType("s"), PrimitiveType("t")
PRIMITIVES = (E, S, T)


def _scored(n):
    return [DatasetRecord("v", "f", ("w", str(i)), float(i)) for i in range(n)]


def test_correlations_need_variance():
    assert correlations(np.ones(5), np.arange(5.0)) == (None, None)
    assert correlations(np.array([1.0]), np.array([2.0])) == (None, None)
    pearson, spearman = correlations(np.arange(5.0), 2 * np.arange(5.0) + 1)
    assert pearson == pytest.approx(1.0)
    assert spearman == pytest.approx(1.0)


def test_kfold_with_perfect_predictor(tiny_config):
    records = _scored(12)
    report = kfold_evaluate(records, tiny_config, fit=lambda train: (lambda r: r.acceptability))
    assert report.k == 2 and report.n == 12
    assert report.pearson == pytest.approx(1.0)
    assert report.error is None
    low, high = report.pearson_ci
    assert low <= report.pearson <= high
    assert len(report.fold_pearson) == 2


def test_kfold_with_constant_predictor(tiny_config):
    report = kfold_evaluate(_scored(8), tiny_config, fit=lambda train: (lambda r: 0.5))
    assert report.pearson is None
    assert report.error
    assert report.pearson_ci is None


def test_kfold_folds_never_leak(tiny_config):
    records = _scored(9)
    seen = []

    def fit(train):
        seen.append({r.tokens for r in train})
        return lambda r: 0.0 if r.tokens in seen[-1] else r.acceptability

    report = kfold_evaluate(records, tiny_config, fit=fit)
    assert report.pearson == pytest.approx(1.0)


def test_kfold_needs_enough_records(tiny_config):
    with pytest.raises(DatasetError):
        kfold_evaluate(_scored(1), tiny_config, fit=lambda train: (lambda r: 0.0))


def test_kfold_is_seeded(tiny_config):
    fit = lambda train: (lambda r: r.acceptability + len(train))  # noqa: E731
    a = kfold_evaluate(_scored(10), tiny_config, fit=fit)
    b = kfold_evaluate(_scored(10), tiny_config, fit=fit)
    assert a.model_dump(exclude={"runtime_seconds"}) == b.model_dump(exclude={"runtime_seconds"})


def test_controller_targets_prefer_unraised_actions():
    targets = controller_targets(viable_actions(fn(E, T), E, PRIMITIVES), PRIMITIVES)
    assert targets["action"][0] == pytest.approx(1.0)
    assert not targets["left"].any() and not targets["right"].any()


def test_controller_targets_when_raising_is_needed():
    # only <<e,t>,t> composed with <t,s> succeeds
    targets = controller_targets(viable_actions(E, fn(T, S), PRIMITIVES), PRIMITIVES)
    np.testing.assert_allclose(targets["action"], [0, 0, 0, 0, 1, 0])
    np.testing.assert_allclose(targets["left"], [0, 0, 1])
    assert not targets["right"].any()


def test_stage_order(tiny_config):
    records = generate_synthetic(2, 10)
    model = Model.for_records(tiny_config, records)
    with pytest.raises(StageOrderError):
        train_interpreter(model, records)
    model.stages["parser"] = True
    with pytest.raises(StageOrderError, match="types"):
        train_interpreter(model, records)


def test_parser_needs_records(tiny_config):
    with pytest.raises(DatasetError):
        train_parser(Model(tiny_config), [])


def test_model_save_and_load(tmp_path, tiny_config):
    records = generate_synthetic(2, 10)
    model = Model.for_records(tiny_config, records)
    model.stages["parser"] = True
    model.save(tmp_path)
    loaded = Model.load(tmp_path)
    assert loaded.stages == {"parser": True, "types": False, "interpreter": False}
    assert loaded.embeddings.vocabulary == model.embeddings.vocabulary
    for (name, a), (_, b) in zip(model.named_parameters(), loaded.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    assert loaded.predict(records[0].tokens) == model.predict(records[0].tokens)


def test_parser_retraining_keeps_the_type_grammar(tiny_config):
    records = generate_synthetic(2, 10)
    previous = Model.for_records(tiny_config, records)
    previous.stages.update(parser=True, types=True, interpreter=True)
    model = Model.for_records(tiny_config, records)
    model.keep_type_grammar(previous)
    assert model.types is previous.types
    assert model.stages == {"parser": False, "types": True, "interpreter": False}
    train_parser(model, records)
    model.require("parser", "types")


def test_parser_retraining_rejects_a_different_type_grammar(tiny_config):
    previous = Model(tiny_config)
    previous.stages["types"] = True
    with pytest.raises(ConfigError, match="decoder_depth"):
        Model(tiny_config.model_copy(update={"decoder_depth": 2})).keep_type_grammar(previous)


def test_loading_without_checkpoint(tmp_path):
    with pytest.raises(UntrainedModelError):
        Model.load(tmp_path)


def test_parser_training_reduces_error(tiny_config):
    config = tiny_config.model_copy(update={"parser": tiny_config.parser.model_copy(update={"epochs": 10})})
    records = generate_synthetic(4, 12)
    model = Model.for_records(config, records)
    history = train_parser(model, records)
    assert len(history) == 10
    assert history[-1] < history[0]
    assert model.stages["parser"]


@pytest.mark.slow
def test_parser_memorizes_a_small_dataset(tiny_config):
    config = tiny_config.model_copy(update={"parser": tiny_config.parser.model_copy(update={"epochs": 200})})
    records = generate_synthetic(4, 10)
    model = Model.for_records(config, records)
    train_parser(model, records)
    predictions = np.array([model.predict(r.tokens) for r in records])
    targets = np.array([r.acceptability for r in records])
    assert correlations(predictions, targets)[0] > 0.9


def test_three_stages_end_to_end(tiny_config):
    records = generate_synthetic(5, 20)
    model = Model.for_records(tiny_config, records)
    train_parser(model, records)
    history = train_type_grammar(model)
    assert set(history) == {"autoencoder", "decoders", "controller"}
    metrics = type_grammar_metrics(model, samples=20)
    assert all(0.0 <= value <= 1.0 for value in metrics.values())

    before = [p.data.copy() for p in model.types.parameters()]
    losses = train_interpreter(model, records)
    assert len(losses) == 1 and np.isfinite(losses[0])
    for old, p in zip(before, model.types.parameters()):
        np.testing.assert_array_equal(old, p.data)
    assert all(model.stages.values())

    audit = normalization_audit(model, records, limit=5)
    assert max(audit.values()) < 1e-9


def test_interpreter_objective_is_finite(tiny_config):
    records = generate_synthetic(5, 10)
    model = Model.for_records(tiny_config, records)
    value = interpreter_objective(model, records[0].tokens, AnchorTable.default()).item()
    assert np.isfinite(value) and value > 0


def test_interpreter_threshold_needs_records(tiny_config):
    model = Model(tiny_config)
    model.stages.update(parser=True, types=True)
    with pytest.raises(ThresholdError):
        train_interpreter(model, [])


def test_gradient_checks_pass(tiny_config):
    results = run_gradient_checks(tiny_config, max_entries=4)
    assert [r.name for r in results] == ["mlp", "attention", "encoder", "decoder", "sentence_loss"]
    assert all(r.passed for r in results), [r.to_json() for r in results]


def test_symbolic_chart_check():
    result = check_symbolic_charts(7, sentences=30)
    assert result.passed, result.to_json()


def test_k_best_check(tiny_config):
    assert check_k_best(tiny_config, distributions=3).passed


@pytest.mark.slow
def test_full_selftest(tiny_config):
    results = run_selftest(tiny_config, sentences=50, pairs=100, distributions=5)
    assert all(r.passed for r in results), [r.to_json() for r in results]
    deep = next(r for r in results if r.name == "cross_entropy_depth_3")
    assert deep.detail["pairs"] == 100


def test_selftest_checks_depth_three_as_often_as_depth_two(tiny_config):
    results = {r.name: r for r in run_selftest(tiny_config, sentences=5, pairs=2, distributions=1)}
    assert results["cross_entropy_depth_3"].detail["pairs"] == 2
    assert results["cross_entropy_depth_3"].detail["types"] == 21612
    assert results["cross_entropy_depth_3"].passed


def test_gradient_check_mlp_shape(tiny_config):
    [mlp] = [r for r in run_gradient_checks(tiny_config, max_entries=8) if r.name == "mlp"]
    # W2, b2, W1, b1 of an 8 -> 8 block each hold at least 8 entries
    assert mlp.detail["entries"] == 4 * 8
    assert mlp.passed


def _lstm(config):
    return config.model_copy(update={"type_cell": "lstm", "encoder_layers": 2})


def test_lstm_model_round_trip(tmp_path, tiny_config):
    records = generate_synthetic(2, 10)
    model = Model.for_records(_lstm(tiny_config), records)
    train_type_autoencoder(model)
    model.save(tmp_path)
    loaded = Model.load(tmp_path)
    assert loaded.types.cell == "lstm"
    for (name, a), (_, b) in zip(model.named_parameters(), loaded.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    types = model.calculus.enumerate_types(1)
    np.testing.assert_array_equal(encode_types(model.types, types).data, encode_types(loaded.types, types).data)


def test_lstm_autoencoder_fits_a_fixed_batch(tiny_config):
    model = Model(_lstm(tiny_config))
    batch = model.calculus.enumerate_types(1)
    params = model.types.encoder_parameters() + model.types.decoder(Combinator.IDENTITY).parameters()
    optimizer = Adam(params, lr=1e-2)
    before = autoencoder_loss(model, batch).item()
    for _ in range(30):
        backward(autoencoder_loss(model, batch))
        optimizer.step()
    assert autoencoder_loss(model, batch).item() < before


def test_lstm_gradient_checks_pass(tiny_config):
    results = run_gradient_checks(_lstm(tiny_config), max_entries=4)
    assert all(r.passed for r in results), [r.to_json() for r in results]
