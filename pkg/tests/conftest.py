"""Shared helpers: an index-loop dense simulator used as an independent oracle."""

import numpy as np
import pytest
from scipy.linalg import expm

from tnqsim import gates
from tnqsim.circuit import Circuit


def embed(mat, qubits, n):
    """Full ``2**n`` matrix of ``mat`` acting on ``qubits`` (first listed = MSB), by index loops."""
    mat = np.asarray(mat, dtype=np.complex128)
    k = len(qubits)
    dim = 1 << n
    full = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for q in qubits:
            sub_in = (sub_in << 1) | bits[q]
        for sub_out in range(1 << k):
            amp = mat[sub_out, sub_in]
            if amp == 0:
                continue
            out_bits = list(bits)
            for j, q in enumerate(qubits):
                out_bits[q] = (sub_out >> (k - 1 - j)) & 1
            row = 0
            for b in out_bits:
                row = (row << 1) | b
            full[row, col] += amp
    return full


def dense_run(n, gate_list, psi0=None):
    """Apply ``[(matrix, qubits), ...]`` with explicit full matrices."""
    psi = np.zeros(1 << n, dtype=np.complex128)
    if psi0 is None:
        psi[0] = 1.0
    else:
        psi = np.asarray(psi0, dtype=np.complex128).copy()
    for mat, qubits in gate_list:
        psi = embed(mat, qubits, n) @ psi
    return psi


def rot_oracle(axis, theta):
    """Rotation matrix from the matrix exponential, independent of the closed forms."""
    p = {"x": gates.X, "y": gates.Y, "z": gates.Z}[axis]
    return expm(-0.5j * theta * p)


def random_rotation_circuit(rng, n, depth, with_entanglers=True):
    """Random circuit of rx/ry/rz layers with CNOT/CZ entanglers.

    Returns ``(builder, num_params, gate_list_fn)``; ``builder(theta)`` gives
    the Circuit and ``gate_list_fn(theta)`` the oracle gate list.
    """
    plan = []
    k = 0
    for _ in range(depth):
        for q in range(n):
            plan.append(("rot", rng.choice(["x", "y", "z"]), q, k))
            k += 1
        if with_entanglers and n > 1:
            for q in range(n - 1):
                if rng.uniform() < 0.7:
                    plan.append(("ent", rng.choice(["cnot", "cz"]), (q, q + 1), None))

    def builder(theta):
        c = Circuit(n)
        for kind, name, q, idx in plan:
            if kind == "rot":
                c.apply_gate("r" + name, q, theta=theta[idx])
            else:
                c.apply_gate(name, *q)
        return c

    def gate_list(theta):
        out = []
        for kind, name, q, idx in plan:
            if kind == "rot":
                out.append((rot_oracle(name, theta[idx]), [q]))
            else:
                out.append((gates.CNOT if name == "cnot" else gates.CZ, list(q)))
        return out

    return builder, k, gate_list


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
