"""Plain gradient-descent optimizers with explicit state."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PreconditionError


@dataclass
class OptimizerState:
    """Optimizer configuration plus Adam moments.

    ``m`` and ``v`` are created lazily with the shape of the first gradient.
    """

    kind: str = "adam"
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)
    t: int = 0

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise PreconditionError(f"unknown optimizer {self.kind!r}")
        if self.learning_rate <= 0:
            raise PreconditionError("learning rate must be positive")

    def update(self, params, grad):
        if self.kind == "sgd":
            return sgd_step(self, params, grad)
        return adam_step(self, params, grad)


def _check(params, grad):
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape:
        raise DimensionError(f"gradient shape {grad.shape} differs from parameters {params.shape}")
    return params, grad


def sgd_step(state, params, grad):
    params, grad = _check(params, grad)
    state.t += 1
    return params - state.learning_rate * grad


def adam_step(state, params, grad):
    """One Adam update with bias correction."""
    params, grad = _check(params, grad)
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise DimensionError("moment shape differs from parameters")
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    mhat = state.m / (1 - state.beta1 ** state.t)
    vhat = state.v / (1 - state.beta2 ** state.t)
    return params - state.learning_rate * mhat / (np.sqrt(vhat) + state.eps)


def make_optimizer(kind="adam", learning_rate=1e-2, **kw):
    return OptimizerState(kind=kind, learning_rate=learning_rate, **kw)
