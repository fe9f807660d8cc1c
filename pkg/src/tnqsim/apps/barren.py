"""Gradient variance of random layered circuits."""

import numpy as np

from .. import diff, gates
from ..batch import BatchSpec, vmap_apply
from ..circuit import Circuit, GateSpec
from ..rng import StatusSource

OBSERVABLE = [(gates.Z, [0]), (gates.Z, [1])]


def random_rotation_circuit(params, seeds):
    """Random ``rx``/``ry``/``rz`` layer picked by ``seeds`` then a CZ ladder, per layer.

    All qubits start with ``ry(pi/4)`` so that no rotation axis is
    preferred by the input state.

    ``params`` and ``seeds`` have shape ``(n_qubits, n_layers)``; a seed below
    1/3 selects ``rx``, below 2/3 ``ry`` and otherwise ``rz``.
    """
    n, layers = np.shape(seeds)
    c = Circuit(n)
    for i in range(n):
        c.ry(i, theta=np.pi / 4)
    third = 1.0 / 3.0
    for l in range(layers):
        for i in range(n):
            p = params[i, l]
            c.unitary_kraus([GateSpec("rx", {"theta": p}), GateSpec("ry", {"theta": p}),
                             GateSpec("rz", {"theta": p})], i, probs=[third] * 3,
                            status=float(seeds[i, l]))
        for i in range(n - 1):
            c.cz(i, i + 1)
    return c


def circuit_gradient(params, seeds):
    """Gradient of ``<Z0 Z1>`` with respect to every angle, by the adjoint method."""
    g = diff.value_and_grad(lambda p: (random_rotation_circuit(p, seeds), OBSERVABLE), params)
    return np.asarray(g.grad, dtype=np.float64)


def corner_gradient(params, seeds):
    """``d <Z0 Z1> / d params[0, 0]``."""
    return float(circuit_gradient(params, seeds)[0, 0])


def barren_plateau_experiment(n_qubits, n_layers, n_circuits, seed=0, workers=1):
    """Gradient variance over random angles and gate choices.

    Angles are uniform in ``[0, 2 pi)`` and gate-choice seeds uniform in
    ``[0, 1)``; both come from one seeded stream with a leading batch axis.
    ``variance`` is the across-circuit variance of each partial derivative,
    averaged over all angles; ``corner_variance`` is the same quantity for
    ``params[0, 0]`` alone.
    """
    from ..errors import PreconditionError

    if min(n_qubits, n_layers, n_circuits) < 1:
        raise PreconditionError("qubit, layer and circuit counts must be at least 1")
    src = StatusSource(seed)
    shape = (int(n_circuits), int(n_qubits), int(n_layers))
    params = 2 * np.pi * src.substream(0).uniform(shape)
    seeds = src.substream(1).uniform(shape)
    grads = vmap_apply(circuit_gradient, BatchSpec((0, 1), (), False, workers), params, seeds)
    grads = np.asarray(grads, dtype=np.float64)
    per_param = grads.var(axis=0)
    return {
        "n_qubits": int(n_qubits),
        "n_layers": int(n_layers),
        "n_circuits": int(n_circuits),
        "seed": int(seed),
        "mean": float(np.mean(grads)),
        "variance": float(per_param.mean()),
        "corner_mean": float(grads[:, 0, 0].mean()),
        "corner_variance": float(per_param[0, 0]),
    }


def barren_plateau_scan(qubit_counts, n_layers=10, n_circuits=200, seed=0):
    return [barren_plateau_experiment(n, n_layers, n_circuits, seed) for n in qubit_counts]
