"""Two-feature binary classifier trained with squared loss.

Features are angle-encoded with ``rx`` on two qubits, followed by trainable
ladder layers. The prediction is ``yp = (1 - <Z0>) / 2`` and the loss per
sample is ``(yp - y)**2``.
"""

import numpy as np

from .. import diff, gates
from ..batch import BatchSpec, vmap_apply
from ..optim import OptimizerState
from ..rng import StatusSource
from .ansatz import ladder_ansatz, ladder_param_count

N_QUBITS = 2
READOUT = [(gates.Z, [0])]


def synthetic_dataset(size, seed=0):
    """Points in ``[0, pi)^2`` labelled 1 above the anti-diagonal ``x0 + x1 = pi``."""
    x = np.pi * StatusSource(seed).uniform((int(size), 2))
    y = (x.sum(axis=1) > np.pi).astype(np.float64)
    return x, y


def encoded_circuit(x, params, layers):
    inputs = np.kron(gates.rx(x[0]) @ [1, 0], gates.rx(x[1]) @ [1, 0])
    return ladder_ansatz(N_QUBITS, layers, params, inputs=inputs)


def predict(x, params, layers=2):
    """``yp`` for every row of ``x``."""
    def one(row):
        z = diff.Observable(READOUT, N_QUBITS).expectation(
            encoded_circuit(row, params, layers).wavefunction()).real
        return (1 - z) / 2

    return np.asarray(vmap_apply(one, BatchSpec((0,)), np.asarray(x)), dtype=np.float64)


def loss_and_grad(x, y, params, layers=2):
    """Mean squared loss over the batch and its parameter gradient."""
    def one(row):
        r = diff.value_and_grad(lambda p: (encoded_circuit(row, p, layers), READOUT), params)
        return r.value, r.grad

    z, dz = vmap_apply(one, BatchSpec((0,)), np.asarray(x))
    yp = (1 - np.asarray(z)) / 2
    resid = yp - y
    loss = float(np.mean(resid ** 2))
    # d loss / d z = 2 (yp - y) * (-1/2) per sample
    grad = np.mean(-resid[:, None] * np.asarray(dz), axis=0)
    return loss, grad


def train_classifier(size=64, layers=2, steps=100, learning_rate=0.1, seed=0):
    """Adam training on the synthetic set; returns a JSON-serializable report."""
    x, y = synthetic_dataset(size, seed)
    params = 0.1 * StatusSource(seed).substream(1).normal(ladder_param_count(N_QUBITS, layers))
    opt = OptimizerState("adam", learning_rate)
    losses = []
    for _ in range(int(steps)):
        loss, grad = loss_and_grad(x, y, params, layers)
        losses.append(loss)
        params = opt.update(params, grad)
    acc = float(np.mean((predict(x, params, layers) > 0.5) == (y > 0.5)))
    return {"size": int(size), "layers": int(layers), "steps": int(steps),
            "losses": losses, "accuracy": acc, "params": params.tolist()}
