import numpy as np
import pytest

from autodiff import engine as F
from autodiff.checkpoint import load_checkpoint, read_manifest, save_checkpoint
from autodiff.engine import Tensor, backward, no_grad
from autodiff.gradcheck import gradient_check
from autodiff.layers import AttentionBlock, LEAKY_SLOPE, MlpBlock, Parameter, attend, frozen
from autodiff.optim import Adam, adam_step
from utils.errors import ContractError, EmptyCandidatesError, ShapeError


def _straight_line_mlp(block: MlpBlock, x: np.ndarray) -> np.ndarray:
    hidden = x @ block.W2.data + block.b2.data
    hidden = np.where(hidden > 0, hidden, LEAKY_SLOPE * hidden)
    return hidden @ block.W1.data + block.b1.data


def test_mlp_zero_weights(rng):
    block = MlpBlock(4, 3, rng)
    for p in block.parameters():
        p.data[...] = 0.0
    assert np.all(block(Tensor(rng.normal(size=4))).data == 0.0)


def test_mlp_identity_on_positive_inputs(rng):
    block = MlpBlock(4, 4, rng)
    block.W1.data = np.eye(4)
    block.W2.data = np.eye(4)
    block.b1.data[...] = 0.0
    block.b2.data[...] = 0.0
    x = np.array([0.5, 1.0, 2.0, 3.5])
    np.testing.assert_array_equal(block(Tensor(x)).data, x)


def test_mlp_matches_formula(rng):
    block = MlpBlock(5, 3, rng)
    x = rng.normal(size=(7, 5))
    np.testing.assert_allclose(block(Tensor(x)).data, _straight_line_mlp(block, x), atol=1e-12)


def test_mlp_rejects_wrong_width(rng):
    with pytest.raises(ShapeError):
        MlpBlock(4, 3, rng)(Tensor(np.ones(5)))


def test_attend_singleton(rng):
    np.testing.assert_allclose(attend(AttentionBlock(3, rng), Tensor(rng.normal(size=(1, 3)))).data, [1.0])


def test_attend_identical_rows_uniform(rng):
    X = np.tile(rng.normal(size=(1, 3)), (4, 1))
    np.testing.assert_allclose(attend(AttentionBlock(3, rng), Tensor(X)).data, np.full(4, 0.25))


def test_attend_zero_scorer_uniform(rng):
    block = AttentionBlock(3, rng)
    block.v.data[...] = 0.0
    np.testing.assert_allclose(block(Tensor(rng.normal(size=(5, 3)))).data, np.full(5, 0.2))


def test_attend_rejects_no_candidates(rng):
    with pytest.raises(EmptyCandidatesError):
        attend(AttentionBlock(3, rng), Tensor(np.zeros((0, 3))))


def test_backward_sum_gives_ones():
    p = Parameter(np.array([1.0, -2.0, 3.0]))
    backward(F.tsum(p))
    np.testing.assert_array_equal(p.grad, np.ones(3))


def test_backward_half_square_gives_value():
    p = Parameter(np.array([1.5, -0.5]))
    backward(F.tsum(p * p) / 2.0)
    np.testing.assert_allclose(p.grad, p.data)


def test_backward_accumulates_shared_paths():
    p = Parameter(np.array(2.0))
    backward(p * p + p)
    assert p.grad == pytest.approx(5.0)


def test_backward_needs_scalar():
    with pytest.raises(ContractError):
        backward(Parameter(np.ones(2)) * 2.0)


def test_no_grad_records_nothing():
    p = Parameter(np.ones(3))
    with no_grad():
        out = F.tsum(p * 3.0)
    assert not out.requires_grad
    backward(out)
    assert p.grad is None


def test_frozen_params_get_no_gradient():
    a, b = Parameter(np.ones(2)), Parameter(np.ones(2))
    with frozen([a]):
        backward(F.tsum(a * b))
    assert a.grad is None
    np.testing.assert_array_equal(b.grad, np.ones(2))
    assert a.requires_grad


def test_segment_sum_and_take_gradients():
    p = Parameter(np.arange(4.0))
    picked = F.take(p, [0, 0, 3], axis=0)
    out = F.segment_sum(picked, [1, 1, 0], 2)
    np.testing.assert_array_equal(out.data, [3.0, 0.0])
    backward(F.tsum(out * Tensor([10.0, 1.0])))
    np.testing.assert_array_equal(p.grad, [2.0, 0.0, 0.0, 10.0])


def test_log_softmax_matches_softmax(rng):
    x = Tensor(rng.normal(size=(3, 5)))
    np.testing.assert_allclose(np.exp(F.log_softmax(x).data), F.softmax(x).data, atol=1e-12)


def test_adam_zero_gradient_leaves_params():
    p = Parameter(np.array([1.0, 2.0]))
    p.grad = np.zeros(2)
    adam_step([p], 1, lr=0.1)
    np.testing.assert_array_equal(p.data, [1.0, 2.0])


@pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
def test_adam_first_step_is_lr(scale):
    p = Parameter(np.array([0.0]))
    p.grad = np.array([scale])
    adam_step([p], 1, lr=0.01)
    assert p.data[0] == pytest.approx(-0.01, rel=1e-3)


def test_adam_converges_on_quadratic():
    p = Parameter(np.array(0.0))
    optimizer = Adam([p], lr=1e-2)
    for _ in range(2000):
        backward((p - 3.0) * (p - 3.0))
        optimizer.step()
    assert abs(p.data - 3.0) < 1e-3


def test_seeded_training_is_bit_identical():
    def run():
        rng = np.random.default_rng(5)
        block = MlpBlock(3, 2, rng)
        x = Tensor(rng.normal(size=(4, 3)))
        optimizer = Adam(block.parameters(), lr=0.05)
        for _ in range(20):
            backward(F.tsum(F.tanh(block(x))))
            optimizer.step()
        return [p.data.copy() for p in block.parameters()]

    for a, b in zip(run(), run()):
        np.testing.assert_array_equal(a, b)


def test_gradient_check_mlp(rng):
    block = MlpBlock(8, 8, rng)
    x = Tensor(rng.normal(size=(3, 8)))
    report = gradient_check(lambda: F.tsum(F.tanh(block(x))), block.parameters(), max_entries=None)
    assert report.passed(1e-4)
    assert report.checked_entries == sum(p.size for p in block.parameters())


def test_gradient_check_attention(rng):
    block = AttentionBlock(4, rng)
    X = Tensor(rng.normal(size=(5, 4)))
    mix = Tensor(rng.normal(size=5))
    report = gradient_check(lambda: F.tsum(attend(block, X) * mix), block.parameters(), max_entries=None)
    assert report.passed(1e-4)


def test_gradient_check_catches_a_wrong_gradient():
    p = Parameter(np.array([0.7]), name="p")

    def loss():
        out = F.tsum(p * p)
        if out.requires_grad:
            # double the recorded gradient
            return out + F.tsum(p * p)
        return out

    report = gradient_check(loss, [p], max_entries=None)
    assert not report.passed(1e-2)


def test_checkpoint_restores_values(tmp_path, rng):
    block = MlpBlock(3, 2, rng)
    named = list(block.named_parameters())
    save_checkpoint(tmp_path, named, {"stages": {"parser": True}})
    original = [p.data.copy() for _, p in named]
    for _, p in named:
        p.data = np.zeros_like(p.data)
    load_checkpoint(tmp_path, named)
    for (_, p), value in zip(named, original):
        np.testing.assert_array_equal(p.data, value)
    manifest = read_manifest(tmp_path)
    assert manifest["stages"] == {"parser": True}
    assert manifest["parameters"]["W2"] == [3, 2]


def test_checkpoint_shape_mismatch(tmp_path, rng):
    save_checkpoint(tmp_path, MlpBlock(3, 2, rng).named_parameters(), {})
    with pytest.raises(ContractError):
        load_checkpoint(tmp_path, MlpBlock(4, 2, rng).named_parameters())
