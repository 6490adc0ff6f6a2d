from typing import Iterable, List

import numpy as np

from .layers import Parameter


def adam_step(
    params: Iterable[Parameter],
    step: int,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """one bias-corrected adam update (step counts from 1); clears gradients"""
    for p in params:
        if p.grad is None:
            g = np.zeros_like(p.data)
        else:
            g = p.grad
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / (1.0 - beta1 ** step)
        v_hat = p.v / (1.0 - beta2 ** step)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        p.grad = None


class Adam:
    def __init__(self, params: Iterable[Parameter], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0

    def step(self) -> None:
        self.steps += 1
        adam_step(self.params, self.steps, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
