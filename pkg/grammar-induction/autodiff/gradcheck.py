import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .engine import Tensor, backward, no_grad
from .layers import Parameter

logger = logging.getLogger(__name__)


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_parameter: Dict[str, float] = field(default_factory=dict)
    checked_entries: int = 0

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error <= tolerance


def gradient_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    step: float = 1e-5,
    floor: float = 1e-5,
    max_entries: Optional[int] = 24,
    seed: int = 0,
) -> GradCheckReport:
    """compare backward() against central finite differences.

    relative error is |a - n| / max(|a|, |n|, floor). with max_entries set, a
    seeded subset of entries is probed in each parameter.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    backward(loss)
    analytic = {id(p): (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for p in params}

    rng = np.random.default_rng(seed)
    report = GradCheckReport(max_rel_error=0.0)
    for index, p in enumerate(params):
        name = p.name or f"param{index}"
        flat = p.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))

        worst = 0.0
        for entry in entries:
            original = flat[entry]
            flat[entry] = original + step
            with no_grad():
                up = loss_fn().item()
            flat[entry] = original - step
            with no_grad():
                down = loss_fn().item()
            flat[entry] = original

            numeric = (up - down) / (2.0 * step)
            exact = analytic[id(p)].reshape(-1)[entry]
            rel = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
            worst = max(worst, rel)
            report.checked_entries += 1

        report.per_parameter[name] = worst
        report.max_rel_error = max(report.max_rel_error, worst)

    for p in params:
        p.grad = None
    logger.debug("gradient check: max rel error %.3e over %d entries", report.max_rel_error, report.checked_entries)
    return report
