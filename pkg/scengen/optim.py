"""
Gradient-descent update rules.

Seven pure step functions share one state type: SGD, Adagrad, RMSprop,
Adadelta, Adam, Adamax and Nadam. `adam_step` is the default rule;
`Optimizer` owns one state per parameter of a layer list and writes the
updated arrays back onto the layers.

State slots by rule:
    first_moment   momentum (Adam, Adamax, Nadam), squared-update average (Adadelta)
    second_moment  squared-gradient average or sum, infinity norm for Adamax
    beta2          decay rho for RMSprop and Adadelta
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import TrainingDivergence
from .layers import DTYPE, Layer, as_tensor

logger = logging.getLogger(__name__)


class UpdateRule(str, Enum):
    SGD = "sgd"
    ADAGRAD = "adagrad"
    RMSPROP = "rmsprop"
    ADADELTA = "adadelta"
    ADAM = "adam"
    ADAMAX = "adamax"
    NADAM = "nadam"


# Hyperparameters that differ from the Adam defaults
RULE_DEFAULTS = {
    UpdateRule.RMSPROP: {"beta2": 0.9},
    UpdateRule.ADADELTA: {"beta2": 0.95, "epsilon": 1e-6},
}


@dataclass(frozen=True)
class OptimizerState:
    """Accumulators and hyperparameters for one parameter tensor."""
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, param: np.ndarray, learning_rate: float = 0.001, **kwargs) -> "OptimizerState":
        return cls(
            first_moment=np.zeros_like(param, dtype=DTYPE),
            second_moment=np.zeros_like(param, dtype=DTYPE),
            learning_rate=learning_rate,
            **kwargs
        )


AdamState = OptimizerState


def _checked(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, np.ndarray]:
    param = as_tensor(param)
    grad = as_tensor(grad)
    if not (param.shape == grad.shape == state.first_moment.shape == state.second_moment.shape):
        raise ValueError(
            f"Optimizer shape mismatch: param {param.shape}, grad {grad.shape}, "
            f"moments {state.first_moment.shape}/{state.second_moment.shape}"
        )

    finite = np.isfinite(grad)
    if not finite.all():
        bad = int((~finite).sum())
        raise TrainingDivergence(f"Non-finite gradient: {bad} of {grad.size} entries are NaN/Inf")
    return param, grad


def adam_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    """
    One bias-corrected Adam update.

    Args:
        param: Current parameter values
        grad: Gradient of the loss w.r.t. `param`
        state: Moments and hyperparameters for `param`

    Returns:
        (updated parameter, updated state). Inputs are not modified.
    """
    param, grad = _checked(param, grad, state)

    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)

    updated = param - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return updated, replace(state, first_moment=m, second_moment=v, step_count=t)


def sgd_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    param, grad = _checked(param, grad, state)
    return param - state.learning_rate * grad, replace(state, step_count=state.step_count + 1)


def adagrad_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    param, grad = _checked(param, grad, state)
    v = state.second_moment + grad * grad
    updated = param - state.learning_rate * grad / (np.sqrt(v) + state.epsilon)
    return updated, replace(state, second_moment=v, step_count=state.step_count + 1)


def rmsprop_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    param, grad = _checked(param, grad, state)
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    updated = param - state.learning_rate * grad / (np.sqrt(v) + state.epsilon)
    return updated, replace(state, second_moment=v, step_count=state.step_count + 1)


def adadelta_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    """Adadelta; the learning rate scales the unit-corrected step."""
    param, grad = _checked(param, grad, state)
    rho, eps = state.beta2, state.epsilon
    v = rho * state.second_moment + (1.0 - rho) * grad * grad
    delta = np.sqrt(state.first_moment + eps) / np.sqrt(v + eps) * grad
    u = rho * state.first_moment + (1.0 - rho) * delta * delta
    updated = param - state.learning_rate * delta
    return updated, replace(state, first_moment=u, second_moment=v, step_count=state.step_count + 1)


def adamax_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    param, grad = _checked(param, grad, state)
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    u = np.maximum(state.beta2 * state.second_moment, np.abs(grad))
    step = state.learning_rate / (1.0 - state.beta1 ** t)
    updated = param - step * m / (u + state.epsilon)
    return updated, replace(state, first_moment=m, second_moment=u, step_count=t)


def nadam_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    """Adam with a Nesterov look-ahead on the first moment."""
    param, grad = _checked(param, grad, state)
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m = b1 * state.first_moment + (1.0 - b1) * grad
    v = b2 * state.second_moment + (1.0 - b2) * grad * grad
    m_bar = b1 * m / (1.0 - b1 ** (t + 1)) + (1.0 - b1) * grad / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)

    updated = param - state.learning_rate * m_bar / (np.sqrt(v_hat) + state.epsilon)
    return updated, replace(state, first_moment=m, second_moment=v, step_count=t)


StepFunction = Callable[[np.ndarray, np.ndarray, OptimizerState], tuple[np.ndarray, OptimizerState]]

STEP_FUNCTIONS: dict[UpdateRule, StepFunction] = {
    UpdateRule.SGD: sgd_step,
    UpdateRule.ADAGRAD: adagrad_step,
    UpdateRule.RMSPROP: rmsprop_step,
    UpdateRule.ADADELTA: adadelta_step,
    UpdateRule.ADAM: adam_step,
    UpdateRule.ADAMAX: adamax_step,
    UpdateRule.NADAM: nadam_step,
}


class Optimizer:
    """One update rule applied to every parameter of an ordered layer list."""

    def __init__(
        self,
        layers: Sequence[Layer],
        learning_rate: float = 0.001,
        rule: UpdateRule = UpdateRule.ADAM,
        **kwargs
    ):
        self.layers = list(layers)
        self.learning_rate = learning_rate
        self.rule = UpdateRule(rule)
        self._step = STEP_FUNCTIONS[self.rule]
        self._state_kwargs = {**RULE_DEFAULTS.get(self.rule, {}), **kwargs}
        self.states: dict[str, OptimizerState] = {}

    def step(self, grads: Sequence[dict[str, np.ndarray]]) -> None:
        """Apply one update given per-layer gradient dicts aligned with `self.layers`."""
        if len(grads) != len(self.layers):
            raise ValueError(f"Got gradients for {len(grads)} layers, optimizer owns {len(self.layers)}")

        for i, (layer, layer_grads) in enumerate(zip(self.layers, grads)):
            for name in layer.param_names:
                key = f"{i}.{name}"
                param = getattr(layer, name)
                state = self.states.get(key)
                if state is None:
                    state = OptimizerState.zeros_like(param, self.learning_rate, **self._state_kwargs)
                try:
                    updated, self.states[key] = self._step(param, layer_grads[name], state)
                except TrainingDivergence as e:
                    raise TrainingDivergence(f"Parameter {key} ({layer.kind}): {e}") from e
                setattr(layer, name, updated)


class Adam(Optimizer):
    """Adam over every parameter of an ordered layer list."""

    def __init__(self, layers: Sequence[Layer], learning_rate: float = 0.001, **kwargs):
        super().__init__(layers, learning_rate, UpdateRule.ADAM, **kwargs)
