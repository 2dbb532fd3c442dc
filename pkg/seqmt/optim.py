"""Adam optimizer over :class:`seqmt.autodiff.Tensor` parameters."""

# Standard Library Imports
from __future__ import annotations

import logging
from typing import Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt.autodiff import Tensor
from seqmt.errors import ContractError

logger = logging.getLogger(__name__)


class AdamState:
    """Moment accumulators and hyper-parameters of an Adam run.

    Bias correction counts the updates of each parameter separately, so a
    parameter that receives no gradient for a while is corrected as if its
    first update were the run's first.

    Args:
        shapes (Sequence[tuple[int, ...]]): Shapes of the optimised parameters.
        lr (float): Learning rate.
        beta1 (float): Decay rate of the first moment.
        beta2 (float): Decay rate of the second moment.
        eps (float): Denominator offset.
    """

    def __init__(
        self,
        shapes: Sequence[tuple[int, ...]],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        if lr <= 0:
            raise ContractError(f"lr should be > 0, not {lr}")
        for name, value in (("beta1", beta1), ("beta2", beta2)):
            if not 0.0 <= value < 1.0:
                raise ContractError(f"{name} should be in [0, 1), not {value}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.steps = [0 for _ in shapes]
        self.first_moments = [np.zeros(shape) for shape in shapes]
        self.second_moments = [np.zeros(shape) for shape in shapes]


class Adam:
    """Adam with bias correction.

    Args:
        params (Sequence[Tensor]): The parameters to update in place.
        lr (float): Learning rate. Default is 1e-3.
        beta1 (float): Default is 0.9.
        beta2 (float): Default is 0.999.
        eps (float): Default is 1e-8.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.state = AdamState(
            [p.shape for p in self.params], lr=lr, beta1=beta1, beta2=beta2, eps=eps
        )

    def zero_grad(self) -> None:
        """Drop the gradients of all parameters."""
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        """Apply one update using the gradients stored on the parameters.

        Parameters the last backward pass did not reach are skipped.
        """
        adam_step(
            self.state, self.params, [p.grad for p in self.params], skip_missing=True
        )


def adam_step(
    state: AdamState,
    params: Sequence[Tensor],
    grads: Sequence[None | np.ndarray],
    skip_missing: bool = False,
) -> None:
    """Apply one Adam update in place.

    Args:
        state (AdamState): The optimizer state, updated in place.
        params (Sequence[Tensor]): The parameters, updated in place.
        grads (Sequence[None | np.ndarray]): One gradient per parameter.
        skip_missing (bool): Leave parameters without a gradient (and their
            moments) untouched instead of raising.

    Raises:
        ContractError: A gradient is missing or does not match its parameter.
    """
    if len(grads) != len(params) or len(params) != len(state.first_moments):
        raise ContractError(
            f"adam_step: got {len(params)} parameters and {len(grads)} gradients "
            f"for a state of {len(state.first_moments)}"
        )
    for p, g in zip(params, grads):
        if g is None:
            if skip_missing:
                continue
            raise ContractError(f"adam_step: parameter '{p.name}' has no gradient")
        if g.shape != p.shape:
            raise ContractError(
                f"adam_step: gradient shape {g.shape} does not match "
                f"parameter '{p.name}' of shape {p.shape}"
            )

    state.step_count += 1
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            continue
        state.steps[i] += 1
        t = state.steps[i]
        m = state.first_moments[i]
        v = state.second_moments[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
