"""Teleportation of one qubit with mid-circuit measurement and classical control."""

import numpy as np

from .. import gates
from ..circuit import Circuit
from ..rng import StatusSource


def teleport_circuit(a, b=None, rng=None):
    """Teleport ``a|0> + b|1>`` from qubit 0 to qubit 2.

    ``b`` defaults to ``sqrt(1 - |a|^2)``. Returns the circuit and the two
    classical bit handles ``(z, x)``.
    """
    if b is None:
        b = np.sqrt(1 - abs(a) ** 2)
    src = rng if isinstance(rng, StatusSource) else StatusSource(rng or 0)
    c = Circuit(3, inputs=np.kron([a, b], [1, 0, 0, 0]))
    c.h(2)
    c.cnot(2, 1)
    c.cnot(0, 1)
    c.h(0)
    z = c.cond_measure(0, rng=src)
    x = c.cond_measure(1, rng=src)
    c.conditional_gate(x, [gates.I2, gates.X], 2)
    c.conditional_gate(z, [gates.I2, gates.Z], 2)
    return c, (z, x)


def teleported_state(c, handles):
    """State of qubit 2 given the measured bits of qubits 0 and 1."""
    z, x = handles
    psi = c.state().reshape(2, 2, 2)
    return psi[c.bit_value(z), c.bit_value(x)].copy()


def teleport_fidelity(a, b=None, rng=None):
    """``|<input|output>|^2`` for the normalized input and teleported states."""
    if b is None:
        b = np.sqrt(1 - abs(a) ** 2)
    target = np.array([a, b], dtype=np.complex128)
    target /= np.linalg.norm(target)
    c, handles = teleport_circuit(target[0], target[1], rng)
    out = teleported_state(c, handles)
    return float(abs(np.vdot(target, out)) ** 2 / np.vdot(out, out).real)
