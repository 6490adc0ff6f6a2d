from typing import Dict, List, Tuple

import numpy as np

from autodiff import engine as F
from autodiff.engine import Tensor
from autodiff.layers import LstmCell, MlpBlock, Module, Parameter, TreeLstmCell, glorot
from calculus.combinators import ACTIONS, Combinator
from calculus.universe import TypeCalculus

CELLS = ("mlp", "lstm")


def _columns(state: Tensor, start: int, width: int) -> Tensor:
    return F.take(state, np.arange(start, start + width), axis=1)


class MlpTypeEncoder(Module):
    """WRAP at the leaves, CONSTRUCT at constructor nodes; a node's state is its embedding"""

    def __init__(self, m_type: int, rng: np.random.Generator):
        self.m_type = m_type
        self.state_dim = m_type
        self.wrap = MlpBlock(m_type, m_type, rng)
        # x_d, tau_left, tau_right
        self.construct = MlpBlock(3 * m_type, m_type, rng)

    def leaves(self, x: Tensor) -> Tensor:
        return self.wrap(x)

    def node(self, x_d: Tensor, left: Tensor, right: Tensor) -> Tensor:
        return self.construct(F.concat([x_d, left, right], axis=1))

    def embedding(self, state: Tensor) -> Tensor:
        return state

    def lift(self, tau: Tensor) -> Tensor:
        return tau


class TreeLstmTypeEncoder(Module):
    """stacked binary tree lstm run bottom-up.

    a node's state holds (h, c) for every layer side by side; layer k + 1
    reads layer k's h at the same node as its input. the embedding is the
    top layer's h.
    """

    def __init__(self, m_type: int, layers: int, rng: np.random.Generator):
        self.m_type = m_type
        self.layers = layers
        self.state_dim = 2 * layers * m_type
        self.cells: Dict[str, TreeLstmCell] = {str(k): TreeLstmCell(m_type, m_type, rng) for k in range(layers)}

    def _layer(self, state: Tensor, k: int) -> Tuple[Tensor, Tensor]:
        m = self.m_type
        return _columns(state, 2 * k * m, m), _columns(state, (2 * k + 1) * m, m)

    def node(self, x: Tensor, left: Tensor, right: Tensor) -> Tensor:
        parts: List[Tensor] = []
        for k in range(self.layers):
            h, c = self.cells[str(k)](x, self._layer(left, k), self._layer(right, k))
            parts += [h, c]
            x = h
        return F.concat(parts, axis=1)

    def leaves(self, x: Tensor) -> Tensor:
        empty = Tensor(np.zeros((x.shape[0], self.state_dim)))
        return self.node(x, empty, empty)

    def embedding(self, state: Tensor) -> Tensor:
        return self._layer(state, self.layers - 1)[0]

    def lift(self, tau: Tensor) -> Tensor:
        # an embedding from outside the encoder seeds every layer's h with an empty cell
        empty = Tensor(np.zeros(tau.shape))
        return F.concat([tau, empty] * self.layers, axis=1)


class DecoderBlocks(Module):
    """STRUCTURE, PRIMITIVE and FACTOR for one combinator's decoder.

    with the mlp cell FACTOR is one block producing both child states; with
    the lstm cell a node state is (h, c) and each child is one lstm step fed
    a left or right marker. STRUCTURE and PRIMITIVE read h.
    """

    def __init__(self, start_dim: int, num_primitives: int, rng: np.random.Generator, cell: str = "mlp"):
        self.cell = cell
        self.start_dim = start_dim
        self.state_dim = start_dim if cell == "mlp" else 2 * start_dim
        self.structure = MlpBlock(start_dim, 1, rng)
        self.primitive = MlpBlock(start_dim, num_primitives, rng)
        if cell == "mlp":
            # both child states at once
            self.factor = MlpBlock(start_dim, 2 * start_dim, rng)
        else:
            self.step = LstmCell(2, start_dim, rng)

    def initial(self, start: Tensor) -> Tensor:
        if self.cell == "mlp":
            return start
        return F.concat([start, Tensor(np.zeros(start.shape))], axis=1)

    def readout(self, state: Tensor) -> Tensor:
        return state if self.cell == "mlp" else _columns(state, 0, self.start_dim)

    def children(self, state: Tensor) -> Tensor:
        """(N, state_dim) -> (2N, state_dim); row r splits into rows 2r and 2r + 1"""
        n = state.shape[0]
        if self.cell == "mlp":
            return F.reshape(self.factor(state), (2 * n, self.state_dim))
        h, c = self.readout(state), _columns(state, self.start_dim, self.start_dim)
        sides = []
        for side in range(2):
            marker = Tensor(np.tile(np.eye(2)[side], (n, 1)))
            sides.append(F.concat(list(self.step(marker, (h, c))), axis=1))
        return F.reshape(F.stack(sides, axis=1), (2 * n, self.state_dim))


class TypeGrammarWeights(Module):
    def __init__(
        self,
        calculus: TypeCalculus,
        m_type: int,
        m_interp: int,
        rng: np.random.Generator,
        decoder_depth: int = 4,
        cell: str = "mlp",
        encoder_layers: int = 2,
    ):
        if cell not in CELLS:
            raise ValueError(f"unknown type grammar cell {cell!r}, expected one of {CELLS}")
        self.calculus = calculus
        self.m_type = m_type
        self.m_interp = m_interp
        self.decoder_depth = decoder_depth
        self.cell = cell
        num_primitives = len(calculus)

        self.primitive_embeddings = Parameter(glorot(rng, num_primitives, m_type, (num_primitives, m_type)))
        self.constructor_embeddings = Parameter(
            glorot(rng, calculus.num_constructors, m_type, (calculus.num_constructors, m_type))
        )
        if cell == "mlp":
            self.encoder = MlpTypeEncoder(m_type, rng)
        else:
            self.encoder = TreeLstmTypeEncoder(m_type, encoder_layers, rng)

        self.decoders: Dict[str, DecoderBlocks] = {
            Combinator.IDENTITY.value: DecoderBlocks(m_interp, num_primitives, rng, cell),
            Combinator.APPLY.value: DecoderBlocks(2 * m_interp, num_primitives, rng, cell),
            Combinator.COMPOSE.value: DecoderBlocks(2 * m_interp, num_primitives, rng, cell),
        }
        self.action = MlpBlock(2 * m_interp, len(ACTIONS), rng)
        self.raise_head = MlpBlock(m_interp, num_primitives, rng)

    def decoder(self, combinator: Combinator) -> DecoderBlocks:
        return self.decoders[Combinator(combinator).value]

    def encoder_parameters(self):
        return [self.primitive_embeddings, self.constructor_embeddings] + self.encoder.parameters()

    def controller_parameters(self):
        return self.action.parameters() + self.raise_head.parameters()
