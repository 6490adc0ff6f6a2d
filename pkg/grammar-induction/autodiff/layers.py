from contextlib import contextmanager
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from utils.errors import EmptyCandidatesError, ShapeError

from . import engine as F
from .engine import Tensor

LEAKY_SLOPE = 0.01


class Parameter(Tensor):
    """a trainable leaf with adam moment estimates"""

    __slots__ = ("name", "m", "v")

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.shape})"


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: Tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Module:
    """anything owning parameters; parameters are yielded in declaration order"""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, dict):
                for key, item in value.items():
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{key}.")
                    elif isinstance(item, Parameter):
                        yield f"{name}.{key}", item

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {prefix + name: p.data for name, p in self.named_parameters()}


class MlpBlock(Module):
    """MLP(x) = W1 leaky_relu(W2 x + b2) + b1, hidden width = output width.

    weights are stored input-major so a batch of row vectors multiplies on the right.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        hidden = out_dim
        self.W2 = Parameter(glorot(rng, in_dim, hidden, (in_dim, hidden)))
        self.b2 = Parameter(np.zeros(hidden))
        self.W1 = Parameter(glorot(rng, hidden, out_dim, (hidden, out_dim)))
        self.b1 = Parameter(np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        return mlp_forward(self, x)


def mlp_forward(block: MlpBlock, x: Tensor) -> Tensor:
    x = F.as_tensor(x)
    if x.shape[-1] != block.in_dim:
        raise ShapeError("mlp input width mismatch", x.shape, block.W2.shape)
    hidden = F.leaky_relu(x @ block.W2 + block.b2, LEAKY_SLOPE)
    return hidden @ block.W1 + block.b1


class AttentionBlock(Module):
    """additive attention: softmax(v . tanh(X W)) over the rows of X"""

    def __init__(self, in_dim: int, rng: np.random.Generator, att_dim: Optional[int] = None):
        att_dim = att_dim or in_dim
        self.in_dim = in_dim
        self.W = Parameter(glorot(rng, in_dim, att_dim, (in_dim, att_dim)))
        self.v = Parameter(glorot(rng, att_dim, 1, (att_dim,)))

    def scores(self, X: Tensor) -> Tensor:
        X = F.as_tensor(X)
        if X.shape[-1] != self.in_dim:
            raise ShapeError("attention input width mismatch", X.shape, self.W.shape)
        return F.matmul(F.tanh(X @ self.W), F.reshape(self.v, (-1, 1))).reshape(X.shape[:-1])

    def __call__(self, X: Tensor) -> Tensor:
        return attend(self, X)


def attend(block: AttentionBlock, X: Tensor) -> Tensor:
    X = F.as_tensor(X)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyCandidatesError(f"attention needs at least one candidate row, got shape {X.shape}")
    return F.softmax(block.scores(X))


@contextmanager
def frozen(params: Iterable[Parameter]) -> Iterator[None]:
    """treat params as constants while the block runs"""
    params = list(params)
    previous = [p.requires_grad for p in params]
    for p in params:
        p.requires_grad = False
    try:
        yield
    finally:
        for p, flag in zip(params, previous):
            p.requires_grad = flag


def _gates(z: Tensor, count: int, width: int) -> List[Tensor]:
    return [F.take(z, np.arange(k * width, (k + 1) * width), axis=1) for k in range(count)]


class TreeLstmCell(Module):
    """binary tree lstm node: input, output and update gates plus one forget gate per child.

    states are (h, c) pairs of shape (B, hidden).
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.hidden = hidden
        fan_in = in_dim + 2 * hidden
        self.W = Parameter(glorot(rng, fan_in, 5 * hidden, (fan_in, 5 * hidden)))
        self.b = Parameter(np.zeros(5 * hidden))

    def __call__(self, x: Tensor, left: Tuple[Tensor, Tensor], right: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
        x = F.as_tensor(x)
        if x.shape[-1] != self.in_dim:
            raise ShapeError("tree lstm input width mismatch", x.shape, (self.in_dim,))
        (h_left, c_left), (h_right, c_right) = left, right
        z = F.concat([x, h_left, h_right], axis=1) @ self.W + self.b
        i, f_left, f_right, o, u = _gates(z, 5, self.hidden)
        c = F.sigmoid(i) * F.tanh(u) + F.sigmoid(f_left) * c_left + F.sigmoid(f_right) * c_right
        return F.sigmoid(o) * F.tanh(c), c


class LstmCell(Module):
    """one step of a plain lstm, (h, c) -> (h', c') given input x"""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.hidden = hidden
        fan_in = in_dim + hidden
        self.W = Parameter(glorot(rng, fan_in, 4 * hidden, (fan_in, 4 * hidden)))
        self.b = Parameter(np.zeros(4 * hidden))

    def __call__(self, x: Tensor, state: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
        x = F.as_tensor(x)
        if x.shape[-1] != self.in_dim:
            raise ShapeError("lstm input width mismatch", x.shape, (self.in_dim,))
        h, c = state
        z = F.concat([x, h], axis=1) @ self.W + self.b
        i, f, o, u = _gates(z, 4, self.hidden)
        c = F.sigmoid(f) * c + F.sigmoid(i) * F.tanh(u)
        return F.sigmoid(o) * F.tanh(c), c
