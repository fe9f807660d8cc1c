"""Dense state-vector evolution used by trajectories and gradients."""

import numpy as np

from . import kernels

DENSE_CAP = 26


def zero_state(n, batch=1):
    psi = np.zeros((batch, 1 << n), dtype=np.complex128)
    psi[:, 0] = 1.0
    return psi


def as_batch(psi):
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    return psi.reshape(1, -1) if psi.ndim == 1 else psi


def apply_ops(psi, ops, n, start=0, stop=None):
    """Apply ``ops[start:stop]`` (objects with ``matrix`` and ``qubits``)."""
    for op in ops[start:stop]:
        psi = kernels.apply_matrix(psi, op.matrix, op.qubits, n)
    return psi


def apply_adjoint(psi, op, n):
    return kernels.apply_matrix(psi, op.matrix.conj().T, op.qubits, n)


def bit_probabilities(psi, qubit, n):
    """Unnormalized weights of outcomes 0 and 1 of ``qubit``."""
    t = np.abs(np.asarray(psi).reshape((2,) * n)) ** 2
    axes = tuple(a for a in range(n) if a != qubit)
    w = t.sum(axis=axes) if axes else t
    return float(w[0]), float(w[1])


def marginal(psi, qubits, n):
    """Unnormalized joint distribution over ``qubits`` (first qubit most significant)."""
    t = np.abs(np.asarray(psi).reshape((2,) * n)) ** 2
    rest = tuple(a for a in range(n) if a not in qubits)
    w = t.sum(axis=rest) if rest else t
    order = sorted(qubits)
    w = np.transpose(w, [order.index(q) for q in qubits])
    return w.reshape(-1)
