"""Kraus channels, density-matrix simulation and trajectory sampling.

A density matrix on ``n`` qubits is stored as a ``2n``-qubit vector:
row bits are qubits ``0..n-1`` and column bits are qubits ``n..2n-1``.
A matrix ``U`` on qubit ``q`` therefore acts as ``U`` on qubit ``q`` and
``conj(U)`` on qubit ``q + n``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import gates, kernels
from .errors import CapExceededError, DimensionError, PreconditionError
from .tensor import as_tensor

DM_CAP = 13


@dataclass(frozen=True)
class KrausChannel:
    """List of Kraus operators on ``arity`` qubits."""

    operators: tuple
    name: str = "kraus"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ops = tuple(as_tensor(k) for k in self.operators)
        if not ops:
            raise PreconditionError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise DimensionError("Kraus operators must share one square shape")
        if 1 << (d.bit_length() - 1) != d:
            raise DimensionError("Kraus dimension must be a power of two")
        object.__setattr__(self, "operators", ops)

    @property
    def arity(self):
        return self.operators[0].shape[0].bit_length() - 1

    def completeness_error(self):
        d = self.operators[0].shape[0]
        acc = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(acc - np.eye(d))))

    def is_cptp(self, atol=1e-10):
        return self.completeness_error() <= atol

    def apply_to_density(self, rho):
        """``sum_i K_i rho K_i^dagger`` for a matrix acting on all qubits."""
        return sum(k @ rho @ k.conj().T for k in self.operators)


def _check_prob(name, p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"{name} must lie in [0, 1], got {p}")
    return p


def amplitude_damping(gamma):
    g = _check_prob("gamma", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=np.complex128)
    k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=np.complex128)
    return KrausChannel((k0, k1), "amplitude_damping", {"gamma": g})


def phase_damping(gamma):
    g = _check_prob("gamma", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=np.complex128)
    k1 = np.array([[0, 0], [0, np.sqrt(g)]], dtype=np.complex128)
    return KrausChannel((k0, k1), "phase_damping", {"gamma": g})


def depolarizing(px, py, pz):
    """Pauli channel with Kraus operators ``sqrt(p) P``."""
    px, py, pz = (_check_prob(n, v) for n, v in (("px", px), ("py", py), ("pz", pz)))
    p0 = 1.0 - px - py - pz
    if p0 < -1e-12:
        raise PreconditionError("px + py + pz must not exceed 1")
    p0 = max(p0, 0.0)
    ops = (np.sqrt(p0) * gates.I2, np.sqrt(px) * gates.X, np.sqrt(py) * gates.Y,
           np.sqrt(pz) * gates.Z)
    return KrausChannel(ops, "depolarizing", {"px": px, "py": py, "pz": pz})


def reset():
    k0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    k1 = np.array([[0, 1], [0, 0]], dtype=np.complex128)
    return KrausChannel((k0, k1), "reset", {})


CHANNELS = {
    "amplitude_damping": (amplitude_damping, ("gamma",)),
    "phase_damping": (phase_damping, ("gamma",)),
    "depolarizing": (depolarizing, ("px", "py", "pz")),
    "reset": (reset, ()),
}


def make_channel(name, params):
    if name not in CHANNELS:
        raise PreconditionError(f"unknown channel {name!r}")
    fn, names = CHANNELS[name]
    missing = [p for p in names if p not in params]
    if missing:
        raise PreconditionError(f"channel {name!r} missing parameters {missing}")
    return fn(*(params[p] for p in names))


def unitary_scales(operators):
    """Probabilities ``tr(K^dagger K) / d`` of operators that are unitary up to scale."""
    d = operators[0].shape[0]
    return np.array([np.real(np.trace(k.conj().T @ k)) / d for k in operators])


def select_branch(cumulative, status):
    """Index of the interval of ``[0, 1)`` that contains ``status``."""
    i = min(int(np.searchsorted(cumulative, status, side="right")), len(cumulative) - 1)
    # status at (or rounding past) the top end must not land on an empty interval
    while i > 0 and cumulative[i] <= cumulative[i - 1]:
        i -= 1
    return i


# ---------------------------------------------------------------------------
# density-matrix circuits
# ---------------------------------------------------------------------------


class DMCircuit:
    """Noisy circuit evolving a full density matrix.

    Parameters
    ----------
    n : int
    dminputs : array, optional
        Initial ``2**n x 2**n`` density matrix (Hermitian, trace 1, PSD).
    inputs : array, optional
        Initial pure state vector.
    """

    def __init__(self, n, dminputs=None, inputs=None):
        if n > DM_CAP:
            raise CapExceededError(f"density-matrix simulation is capped at {DM_CAP} qubits")
        self.n = int(n)
        dim = 1 << self.n
        if dminputs is not None:
            rho = as_tensor(dminputs)
            if rho.shape != (dim, dim):
                raise DimensionError(f"density matrix must be {dim}x{dim}")
            if not np.allclose(rho, rho.conj().T, atol=1e-10):
                raise PreconditionError("density matrix must be Hermitian")
            if abs(np.trace(rho) - 1) > 1e-10:
                raise PreconditionError("density matrix must have unit trace")
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise PreconditionError("density matrix must be positive semidefinite")
        elif inputs is not None:
            psi = as_tensor(inputs).reshape(-1)
            if psi.size != dim:
                raise DimensionError(f"input state must have {dim} entries")
            rho = np.outer(psi, psi.conj())
        else:
            rho = np.zeros((dim, dim), dtype=np.complex128)
            rho[0, 0] = 1.0
        self._vec = np.ascontiguousarray(rho, dtype=np.complex128).reshape(1, -1)

    def _check_qubits(self, qubits):
        qubits = [int(q) for q in qubits]
        if len(set(qubits)) != len(qubits) or any(q < 0 or q >= self.n for q in qubits):
            raise PreconditionError(f"invalid qubits {qubits} for {self.n} qubits")
        return qubits

    def _sandwich(self, vec, mat, qubits):
        out = kernels.apply_matrix(vec, mat, qubits, 2 * self.n)
        return kernels.apply_matrix(out, mat.conj(), [q + self.n for q in qubits], 2 * self.n)

    def unitary(self, qubits, matrix):
        """``rho <- U rho U^dagger`` on ``qubits``."""
        qubits = self._check_qubits(qubits)
        m = as_tensor(matrix)
        if m.shape != (1 << len(qubits),) * 2:
            raise DimensionError("matrix size does not match the number of qubits")
        self._vec = self._sandwich(self._vec, m, qubits)
        return self

    def apply_gate(self, name, *qubits, **params):
        generator = params.pop("unitary", None)
        m = gates.gate_matrix(name, params, generator)
        return self.unitary(qubits, m)

    def apply_kraus(self, channel, qubits):
        """``rho <- sum_i K_i rho K_i^dagger`` on ``qubits``."""
        if not isinstance(channel, KrausChannel):
            channel = KrausChannel(tuple(channel))
        qubits = self._check_qubits(qubits)
        if channel.arity != len(qubits):
            raise DimensionError(
                f"channel acts on {channel.arity} qubits but {len(qubits)} were given"
            )
        acc = None
        for k in channel.operators:
            term = self._sandwich(self._vec, k, qubits)
            acc = term if acc is None else acc + term
        self._vec = acc
        return self

    def state(self):
        """The density matrix as a ``2**n x 2**n`` array."""
        dim = 1 << self.n
        return self._vec.reshape(dim, dim).copy()

    def expectation(self, *terms):
        """``tr(rho O)`` with ``O`` the product of ``(matrix, qubits)`` terms."""
        vec = self._vec
        used = set()
        for mat, qubits in terms:
            qubits = self._check_qubits(qubits)
            if used & set(qubits):
                raise PreconditionError("term qubit sets must be disjoint")
            used |= set(qubits)
            vec = kernels.apply_matrix(vec, as_tensor(mat), qubits, 2 * self.n)
        dim = 1 << self.n
        return complex(np.trace(vec.reshape(dim, dim)))

    def expectation_ps(self, x=(), y=(), z=()):
        terms = [(gates.X, [q]) for q in x] + [(gates.Y, [q]) for q in y]
        terms += [(gates.Z, [q]) for q in z]
        return self.expectation(*terms)

    def operator_expectation(self, matrix):
        m = as_tensor(matrix)
        return complex(np.trace(self.state() @ m))


def _dm_gate_method(name):
    def method(self, *qubits, **params):
        return self.apply_gate(name, *qubits, **params)

    method.__name__ = name
    method.__doc__ = f"Apply the ``{name}`` gate."
    return method


for _name in list(gates.REGISTRY) + ["exp1", "exp"]:
    setattr(DMCircuit, _name, _dm_gate_method(_name))


def dm_expectation(d, *terms):
    return d.expectation(*terms)


def dm_state(d):
    return d.state()


def mc_general_kraus(c, channel, qubits, status):
    """Append a state-dependent Kraus trajectory step and return its branch."""
    return c.general_kraus(channel, qubits, status=status)


def mc_unitary_kraus(c, operators, probs, qubits, status):
    """Append a fixed-probability unitary mixture step and return its branch."""
    return c.unitary_kraus(operators, qubits, probs=probs, status=status)
