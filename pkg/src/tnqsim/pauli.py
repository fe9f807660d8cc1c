"""Pauli-sum Hamiltonians in dense, sparse-COO and MPO form.

A Pauli structure is an integer vector with one code per qubit
(0=I, 1=X, 2=Y, 3=Z). Every Pauli string has exactly one nonzero entry per
row: row ``r`` pairs with column ``r ^ xmask``, where ``xmask`` collects the
X and Y positions, and the entry is ``(-i)**nY * (-1)**popcount(r & yzmask)``.
"""

from dataclasses import dataclass

import numpy as np

from . import gates, kernels
from .errors import CapExceededError, DimensionError, PreconditionError
from .quop import MPOOperator, QuOperator
from .tensor import as_tensor

DENSE_SUM_CAP = 12
COO_SUM_CAP = 24


def check_structure(codes, n=None):
    """Validate a Pauli structure and return it as a tuple of ints."""
    codes = tuple(int(c) for c in np.asarray(codes).reshape(-1))
    if any(c not in (0, 1, 2, 3) for c in codes):
        raise PreconditionError(f"Pauli codes must be in {{0,1,2,3}}, got {codes}")
    if n is not None and len(codes) != n:
        raise DimensionError(f"structure has length {len(codes)}, expected {n}")
    return codes


def structure_to_lists(codes):
    """``(x, y, z)`` index lists of a structure, as used by ``expectation_ps``."""
    codes = check_structure(codes)
    return tuple([q for q, c in enumerate(codes) if c == k] for k in (1, 2, 3))


class WeightedPauliSum:
    """``sum_j w_j P_j`` over ``n`` qubits; duplicate structures are allowed.

    Parameters
    ----------
    structures : array-like, shape (m, n)
    weights : array-like, shape (m,), optional
        Defaults to all ones.
    n : int, optional
        Required when ``structures`` is empty.
    """

    def __init__(self, structures, weights=None, n=None):
        structures = [check_structure(s) for s in structures]
        if n is None:
            if not structures:
                raise PreconditionError("n is required for an empty sum")
            n = len(structures[0])
        self.n = int(n)
        for s in structures:
            if len(s) != self.n:
                raise DimensionError("all structures must have length n")
        self.structures = np.array(structures, dtype=np.int64).reshape(len(structures), self.n)
        if weights is None:
            weights = np.ones(len(structures))
        self.weights = np.asarray(weights, dtype=np.complex128).reshape(-1)
        if self.weights.size != len(structures):
            raise DimensionError("need one weight per structure")

    def __len__(self):
        return len(self.weights)

    def terms(self):
        return [(tuple(int(c) for c in s), complex(w)) for s, w in zip(self.structures, self.weights)]

    def is_hermitian(self, atol=1e-12):
        return bool(np.all(np.abs(self.weights.imag) <= atol))

    def to_dense(self):
        return sum_to_dense(self)

    def to_coo(self):
        return sum_to_coo(self)

    def to_json(self):
        return {"n": self.n, "terms": [{"structure": list(s), "weight": [w.real, w.imag]}
                                       for s, w in self.terms()]}

    @classmethod
    def from_json(cls, doc):
        from .errors import SchemaError

        if not isinstance(doc, dict) or "n" not in doc or "terms" not in doc:
            raise SchemaError("Hamiltonian needs 'n' and 'terms'", "$")
        structs, weights = [], []
        for i, t in enumerate(doc["terms"]):
            try:
                structs.append(check_structure(t["structure"], doc["n"]))
                w = t.get("weight", [1.0, 0.0])
                weights.append(complex(w[0], w[1]) if isinstance(w, list) else complex(w))
            except (KeyError, TypeError, IndexError, ValueError) as exc:
                raise SchemaError(str(exc), f"terms[{i}]") from exc
        return cls(structs, weights, n=int(doc["n"]))


@dataclass(frozen=True)
class SparseCOO:
    """Sparse matrix in coordinate form, canonically sorted by ``(row, col)``."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    dim: int

    @classmethod
    def canonical(cls, rows, cols, values, dim):
        """Sort by ``(row, col)``, merge duplicates and drop exact zeros."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.complex128)
        if not rows.shape == cols.shape == values.shape:
            raise DimensionError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= dim):
            raise DimensionError("indices out of range")
        if rows.size == 0:
            return cls(rows, cols, values, int(dim))
        key = rows * dim + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        vals = np.add.reduceat(values[order], start)
        key = key[start]
        keep = vals != 0
        key, vals = key[keep], vals[keep]
        return cls(key // dim, key % dim, vals, int(dim))

    @property
    def nnz(self):
        return int(self.values.size)

    def matvec(self, vec):
        return kernels.coo_matvec(self.rows, self.cols, self.values, vec, self.dim)

    def to_dense(self):
        m = np.zeros((self.dim, self.dim), dtype=np.complex128)
        np.add.at(m, (self.rows, self.cols), self.values)
        return m

    def to_scipy(self):
        from scipy import sparse

        return sparse.coo_matrix((self.values, (self.rows, self.cols)), shape=(self.dim, self.dim))


def sum_to_dense(h):
    """Dense ``2**n x 2**n`` matrix of a :class:`WeightedPauliSum`."""
    if h.n > DENSE_SUM_CAP:
        raise CapExceededError(f"dense Pauli sums are capped at {DENSE_SUM_CAP} qubits")
    return sum_to_coo(h).to_dense()


def sum_to_coo(h):
    """Sparse COO matrix of a :class:`WeightedPauliSum` (one nonzero per row per term)."""
    if h.n > COO_SUM_CAP:
        raise CapExceededError(f"sparse Pauli sums are capped at {COO_SUM_CAP} qubits")
    dim = 1 << h.n
    if len(h) == 0:
        return SparseCOO.canonical([], [], [], dim)
    rows = np.arange(dim, dtype=np.int64)
    all_rows, all_cols, all_vals = [], [], []
    for s, w in zip(h.structures, h.weights):
        cols, vals = kernels.pauli_row_values(s, w)
        all_rows.append(rows)
        all_cols.append(cols)
        all_vals.append(vals)
    return SparseCOO.canonical(np.concatenate(all_rows), np.concatenate(all_cols),
                               np.concatenate(all_vals), dim)


def _tfim_args(n, J, h):
    n = int(n)
    if n < 2:
        raise PreconditionError("the TFIM chain needs n >= 2")
    J = np.broadcast_to(np.asarray(J, dtype=np.float64), (n - 1,)) if np.ndim(J) == 0 \
        else np.asarray(J, dtype=np.float64)
    h = np.broadcast_to(np.asarray(h, dtype=np.float64), (n,)) if np.ndim(h) == 0 \
        else np.asarray(h, dtype=np.float64)
    if J.shape != (n - 1,) or h.shape != (n,):
        raise DimensionError(f"need len(J) = {n - 1} and len(h) = {n}")
    return n, J, h


def tfim_hamiltonian(n, J, h):
    """``sum_i J_i X_i X_{i+1} - sum_i h_i Z_i`` on an open chain.

    Scalars broadcast; the sum has ``2n - 1`` terms.
    """
    n, J, h = _tfim_args(n, J, h)
    structs, weights = [], []
    for i in range(n - 1):
        s = [0] * n
        s[i] = s[i + 1] = 1
        structs.append(s)
        weights.append(J[i])
    for i in range(n):
        s = [0] * n
        s[i] = 3
        structs.append(s)
        weights.append(-h[i])
    return WeightedPauliSum(structs, weights, n=n)


def tfim_mpo(n, J, h):
    """Bond-3 MPO of the open-chain TFIM Hamiltonian.

    Site tensors have shape ``(bond_left, out, in, bond_right)``. The left
    boundary takes row 2 of the bulk tensor and the right boundary column 0.
    """
    n, J, h = _tfim_args(n, J, h)
    sites = []
    for i in range(n):
        w = np.zeros((3, 2, 2, 3), dtype=np.complex128)
        w[0, :, :, 0] = gates.I2
        w[1, :, :, 0] = gates.X
        w[2, :, :, 0] = -h[i] * gates.Z
        if i < n - 1:
            w[2, :, :, 1] = J[i] * gates.X
        w[2, :, :, 2] = gates.I2
        if i == 0:
            w = w[2:3]
        if i == n - 1:
            w = w[..., 0:1]
        sites.append(np.ascontiguousarray(w))
    return MPOOperator(sites)


# ---------------------------------------------------------------------------
# expectations
# ---------------------------------------------------------------------------


def _state(c):
    return np.asarray(c.state(), dtype=np.complex128).reshape(-1)


def operator_expectation(c, op, return_imag=False):
    """``Re <psi|O|psi>`` for the output of circuit ``c``.

    ``op`` may be a dense matrix, a :class:`SparseCOO`, a
    :class:`WeightedPauliSum` or a QuOperator (MPOs included). QuOperators
    are contracted together with the circuit network, so no dense state is
    formed. With ``return_imag`` the imaginary part is returned as well.
    """
    dim = 1 << c.n
    if isinstance(op, QuOperator):
        if op.shape != (dim, dim):
            raise DimensionError(f"operator shape {op.shape} does not match {c.n} qubits")
        val = c.operator_expectation_network(op)
    elif isinstance(op, WeightedPauliSum):
        if op.n != c.n:
            raise DimensionError("Hamiltonian size does not match the circuit")
        psi = _state(c)
        val = sum(w * kernels.pauli_expectation(psi, s) for s, w in zip(op.structures, op.weights))
        val = complex(val)
    elif isinstance(op, SparseCOO):
        if op.dim != dim:
            raise DimensionError(f"operator dimension {op.dim} does not match {c.n} qubits")
        psi = _state(c)
        val = complex(np.vdot(psi, op.matvec(psi)))
    else:
        m = as_tensor(op)
        if m.shape != (dim, dim):
            raise DimensionError(f"operator shape {m.shape} does not match {c.n} qubits")
        psi = _state(c)
        val = complex(np.vdot(psi, m @ psi))
    if return_imag:
        return val.real, val.imag
    return val.real


def mpo_expectation(c, mpo):
    """Expectation of a QuOperator by one network contraction."""
    return operator_expectation(c, mpo)


def parameterized_measurement(c, structure):
    """Real expectation of the single Pauli string ``structure``."""
    codes = check_structure(structure, c.n)
    return kernels.pauli_expectation(_state(c), codes).real


def tfim_energy_loop(c, J, h):
    """TFIM energy by one ``expectation_ps`` call per term."""
    n, J, h = _tfim_args(c.n, J, h)
    e = 0.0
    for i in range(n - 1):
        e += J[i] * c.expectation_ps(x=[i, i + 1]).real
    for i in range(n):
        e -= h[i] * c.expectation_ps(z=[i]).real
    return e


def pauli_sum_loop(c, h):
    """Expectation of a :class:`WeightedPauliSum`, one ``expectation_ps`` per term."""
    e = 0j
    for s, w in h.terms():
        x, y, z = structure_to_lists(s)
        e += w * c.expectation_ps(x=x, y=y, z=z)
    return e.real


def observable_matrix(obs, n):
    """Dense matrix of an observable in any supported form (small ``n`` only)."""
    dim = 1 << n
    if isinstance(obs, WeightedPauliSum):
        return sum_to_dense(obs)
    if isinstance(obs, SparseCOO):
        return obs.to_dense()
    if isinstance(obs, QuOperator):
        return obs.eval_matrix()
    m = as_tensor(obs)
    if m.shape != (dim, dim):
        raise DimensionError(f"observable shape {m.shape} does not match {n} qubits")
    return m
