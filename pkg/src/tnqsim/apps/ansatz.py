"""Parameterized circuit families used by the experiment drivers."""

import numpy as np

from .. import gates
from ..circuit import Circuit
from ..errors import DimensionError


def ladder_param_count(n, k):
    return k * (3 * n - 1)


def ladder_ansatz(n, k, params, inputs=None):
    """Layered ansatz: per layer an ``exp1(XX)`` ladder, then ``rz`` and ``rx`` on every qubit.

    Layer ``j`` uses ``params[j*(3n-1) + i]`` for the ``XX`` gate on
    ``(i, i+1)``, offset ``n - 1 + i`` for ``rz`` on qubit ``i`` and offset
    ``2n - 1 + i`` for ``rx``.
    """
    params = np.asarray(params).reshape(-1) if not isinstance(params, np.ndarray) \
        else params.reshape(-1)
    if params.size != ladder_param_count(n, k):
        raise DimensionError(f"expected {ladder_param_count(n, k)} parameters, got {params.size}")
    c = Circuit(n, inputs=inputs)
    for j in range(k):
        base = j * (3 * n - 1)
        for i in range(n - 1):
            c.exp1(i, i + 1, theta=params[base + i], unitary=gates.XX)
        for i in range(n):
            c.rz(i, theta=params[base + n - 1 + i])
            c.rx(i, theta=params[base + 2 * n - 1 + i])
    return c


def example_block(c, params, nlayers, split=None):
    """Append ``nlayers`` of an ``exp1(ZZ)`` ladder followed by ``rx`` on every qubit.

    ``params`` has shape ``(2 * nlayers, n)``: row ``2j`` holds the ladder
    angles of layer ``j`` and row ``2j + 1`` the ``rx`` angles. ``split``
    is passed to every two-qubit gate.
    """
    n = c.n
    params = params if isinstance(params, np.ndarray) else np.asarray(params)
    if params.shape[0] < 2 * nlayers or params.shape[1] < n:
        raise DimensionError(f"params must have shape at least ({2 * nlayers}, {n})")
    for j in range(nlayers):
        for i in range(n - 1):
            c.exp1(i, i + 1, theta=params[2 * j, i], unitary=gates.ZZ, split=split)
        for i in range(n):
            c.rx(i, theta=params[2 * j + 1, i])
    return c


def testbed_circuit(n=40, d=6, params=None, max_singular_values=2):
    """``example_block`` on ``n`` qubits with SVD-split two-qubit gates (all angles 1 by default)."""
    if params is None:
        params = np.ones((2 * d, n))
    c = Circuit(n)
    return example_block(c, params, d, split={"max_singular_values": max_singular_values})


def rx_layers(n, nlayers, thetas):
    """``rx(thetas[j])`` on every qubit followed by a CNOT ladder, per layer."""
    c = Circuit(n)
    for j in range(nlayers):
        for i in range(n):
            c.rx(i, theta=thetas[j])
        for i in range(n - 1):
            c.cnot(i, i + 1)
    return c
