"""Gate matrices: the named registry plus parameterized gates.

Multi-qubit matrices are indexed with the first listed qubit as the most
significant bit. Rotations follow ``R_a(theta) = exp(-i theta sigma_a / 2)``;
:func:`exp1_gate` and :func:`exp_gate` implement ``exp(+i theta G)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PreconditionError
from .tensor import as_tensor

SQ2 = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) * SQ2
S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)
PAULIS = (I2, X, Y, Z)

ZZ = np.kron(Z, Z)
XX = np.kron(X, X)
YY = np.kron(Y, Y)

for _m in (I2, X, Y, Z, H, S, T, CNOT, CZ, SWAP, ZZ, XX, YY):
    _m.setflags(write=False)


def rotation_gate(axis, theta):
    """``exp(-i theta sigma_axis / 2)`` for ``axis`` in ``{"x", "y", "z"}``."""
    theta = float(theta)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "z":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=np.complex128)
    raise PreconditionError(f"unknown rotation axis {axis!r}")


def rx(theta):
    return rotation_gate("x", theta)


def ry(theta):
    return rotation_gate("y", theta)


def rz(theta):
    return rotation_gate("z", theta)


def _square(g, label):
    g = as_tensor(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError(f"{label} must be a square matrix, got shape {g.shape}")
    return g


def exp1_gate(theta, generator, atol=1e-8):
    """``cos(theta) I + i sin(theta) G`` for a generator with ``G @ G = I``.

    Raises
    ------
    PreconditionError
        If ``G @ G`` differs from the identity by more than ``atol``; use
        :func:`exp_gate` for such generators.
    """
    g = _square(generator, "generator")
    eye = np.eye(g.shape[0], dtype=np.complex128)
    if np.max(np.abs(g @ g - eye), initial=0.0) > atol:
        raise PreconditionError("exp1 needs G @ G = I; use exp_gate for general generators")
    theta = float(theta)
    return np.cos(theta) * eye + 1j * np.sin(theta) * g


def _is_hermitian(g, atol=1e-12):
    return np.allclose(g, g.conj().T, atol=atol, rtol=0)


def exp_gate(theta, generator):
    """``exp(i theta G)`` through an eigendecomposition of ``G``."""
    g = _square(generator, "generator")
    theta = float(theta)
    if _is_hermitian(g):
        w, v = np.linalg.eigh(g)
        return (v * np.exp(1j * theta * w)) @ v.conj().T
    w, v = np.linalg.eig(g)
    return (v * np.exp(1j * theta * w)) @ np.linalg.inv(v)


@dataclass(frozen=True)
class GateDef:
    """Registry entry: ``matrix_fn(**params)`` returns a ``2**arity`` square matrix."""

    name: str
    arity: int
    param_names: tuple = ()
    matrix_fn: object = field(default=None, repr=False)
    # generator of d/dtheta as U'(theta) = coeff * G @ U(theta), if any
    generator: object = field(default=None, repr=False)
    coeff: complex = 0


def _fixed(m):
    return lambda: m.copy()


REGISTRY = {
    "i": GateDef("i", 1, (), _fixed(I2)),
    "x": GateDef("x", 1, (), _fixed(X)),
    "y": GateDef("y", 1, (), _fixed(Y)),
    "z": GateDef("z", 1, (), _fixed(Z)),
    "h": GateDef("h", 1, (), _fixed(H)),
    "s": GateDef("s", 1, (), _fixed(S)),
    "t": GateDef("t", 1, (), _fixed(T)),
    "cnot": GateDef("cnot", 2, (), _fixed(CNOT)),
    "cz": GateDef("cz", 2, (), _fixed(CZ)),
    "swap": GateDef("swap", 2, (), _fixed(SWAP)),
    "rx": GateDef("rx", 1, ("theta",), rx, X, -0.5j),
    "ry": GateDef("ry", 1, ("theta",), ry, Y, -0.5j),
    "rz": GateDef("rz", 1, ("theta",), rz, Z, -0.5j),
}

STANDARD_NAMES = ("h", "x", "y", "z", "i", "s", "t", "cnot", "cz", "swap")
ROTATIONS = ("rx", "ry", "rz")


def standard_gate(name):
    """Matrix of a fixed (parameter-free) gate from the registry."""
    key = str(name).lower()
    if key not in STANDARD_NAMES:
        raise PreconditionError(f"unknown standard gate {name!r}")
    return REGISTRY[key].matrix_fn()


def gate_matrix(name, params=None, generator=None):
    """Matrix of any gate the circuit understands.

    ``exp1``/``exp`` take ``params["theta"]`` and ``generator``; ``unitary``
    takes the matrix itself as ``generator``.
    """
    params = params or {}
    if name in REGISTRY:
        d = REGISTRY[name]
        missing = [p for p in d.param_names if p not in params]
        if missing:
            raise PreconditionError(f"gate {name!r} missing parameters {missing}")
        return d.matrix_fn(**{p: params[p] for p in d.param_names})
    if name == "exp1":
        return exp1_gate(params["theta"], generator)
    if name == "exp":
        return exp_gate(params["theta"], generator)
    if name == "unitary":
        return _square(generator, "unitary").copy()
    raise PreconditionError(f"unknown gate {name!r}")


def pauli_string_matrix(codes):
    """Dense matrix of the Pauli string with codes 0=I, 1=X, 2=Y, 3=Z."""
    m = np.ones((1, 1), dtype=np.complex128)
    for c in codes:
        m = np.kron(m, PAULIS[int(c)])
    return m


def multicontrol_mpo(ctrl_states, target_unitary):
    """MPO of a gate applying ``target_unitary`` iff every control matches.

    Sites follow the order ``controls..., target``. The operator is
    ``I + P_1 (x) ... (x) P_m (x) (U - I)`` with ``P_j = |c_j><c_j|``, which
    has bond dimension 2 along the control chain. A multi-qubit target is
    decomposed into further sites by SVD.

    Returns
    -------
    MPOOperator
    """
    from .quop import MPOOperator, mpo_from_dense

    u = _square(target_unitary, "target_unitary")
    k = u.shape[0].bit_length() - 1
    if 1 << k != u.shape[0] or k < 1:
        raise DimensionError("target must be 2**k x 2**k with k >= 1")
    ctrl = [int(c) for c in ctrl_states]
    if any(c not in (0, 1) for c in ctrl):
        raise PreconditionError("control states must be 0 or 1")
    if not ctrl:
        return mpo_from_dense(u, k)
    sites = []
    for j, c in enumerate(ctrl):
        proj = np.zeros((2, 2), dtype=np.complex128)
        proj[c, c] = 1.0
        if j == 0:
            w = np.zeros((1, 2, 2, 2), dtype=np.complex128)
            w[0, :, :, 0] = I2
            w[0, :, :, 1] = proj
        else:
            w = np.zeros((2, 2, 2, 2), dtype=np.complex128)
            w[0, :, :, 0] = I2
            w[1, :, :, 1] = proj
        sites.append(w)
    eye = np.eye(u.shape[0], dtype=np.complex128)
    if k == 1:
        w = np.zeros((2, 2, 2, 1), dtype=np.complex128)
        w[0, :, :, 0] = I2
        w[1, :, :, 0] = u - eye
        sites.append(w)
        return MPOOperator(sites)
    # target block carries the incoming bond; split it site by site
    block = np.stack([eye, u - eye])  # bond, out, in
    t = block.reshape((2,) + (2,) * (2 * k))
    perm = [0] + [x for j in range(k) for x in (1 + j, 1 + k + j)]
    rest = np.transpose(t, perm).reshape(2, -1)
    bond = 2
    for j in range(k - 1):
        rest = rest.reshape(bond * 4, -1)
        uu, s, vh = np.linalg.svd(rest, full_matrices=False)
        keep = max(1, int(np.count_nonzero(s > 1e-13 * s[0])))
        sites.append(uu[:, :keep].reshape(bond, 2, 2, keep))
        rest = s[:keep, None] * vh[:keep]
        bond = keep
    sites.append(rest.reshape(bond, 2, 2, 1))
    return MPOOperator(sites)
