"""Gradients, Jacobians and the quantum Fisher information of circuits.

A differentiable objective is described by a *builder*: a function mapping a
parameter array ``theta`` to a :class:`~tnqsim.circuit.Circuit` (state
functions) or to ``(circuit, observable)`` (energy functions). To see how
gate angles depend on ``theta`` the builder is called once with a traced
array whose entries are :class:`ParamRef` floats. A ParamRef remembers its
affine dependence on ``theta``, so gate angles such as ``2 * theta[3] + 1``
are differentiated exactly. Non-affine functions of ``theta`` (``np.cos``)
produce plain floats and are treated as constants; use finite differences
for such builders.

Reverse-mode gradients cache the state before every parameterized op and
sweep ``lambda = O psi`` backwards through the adjoint ops. This works for
any linear op, including post-selection and fixed-status unitary mixtures.
Ops whose effect depends on the state norm (state-dependent Kraus sampling
and collapsing measurement) are rejected.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import gates, kernels, statevec
from .errors import DimensionError, PreconditionError, UnsupportedOperationError
from .pauli import SparseCOO, WeightedPauliSum, sum_to_coo
from .quop import QuOperator
from .tensor import as_tensor, svd_split

FD_STEP = 1e-4
HESSIAN_STEP = 1e-4
NG_REGULARIZATION = 1e-6
_REJECTED = ("kraus", "cond_measure")


# ---------------------------------------------------------------------------
# traced parameters
# ---------------------------------------------------------------------------


class ParamRef(float):
    """A float that records its affine dependence on the parameter vector.

    ``coeffs`` maps flat parameter indices to ``d value / d theta_k``.
    """

    def __new__(cls, value, coeffs=None):
        obj = float.__new__(cls, value)
        obj.coeffs = dict(coeffs or {})
        return obj

    def _lift(self, other):
        if isinstance(other, ParamRef):
            return other.coeffs
        if isinstance(other, (int, float, np.integer, np.floating)):
            return {}
        return None

    def _merge(self, c2, s):
        out = dict(self.coeffs)
        for k, v in c2.items():
            out[k] = out.get(k, 0.0) + s * v
        return out

    def __add__(self, other):
        c2 = self._lift(other)
        if c2 is None:
            return NotImplemented
        return ParamRef(float(self) + float(other), self._merge(c2, 1.0))

    __radd__ = __add__

    def __sub__(self, other):
        c2 = self._lift(other)
        if c2 is None:
            return NotImplemented
        return ParamRef(float(self) - float(other), self._merge(c2, -1.0))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return ParamRef(-float(self), {k: -v for k, v in self.coeffs.items()})

    def __pos__(self):
        return self

    def __mul__(self, other):
        c2 = self._lift(other)
        if c2 is None:
            return NotImplemented
        if c2 and self.coeffs:
            raise UnsupportedOperationError("products of parameters are not affine")
        if c2:
            return other.__mul__(float(self))
        s = float(other)
        return ParamRef(float(self) * s, {k: s * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamRef) and other.coeffs:
            raise UnsupportedOperationError("division by a parameter is not affine")
        s = float(other)
        return ParamRef(float(self) / s, {k: v / s for k, v in self.coeffs.items()})

    def __reduce__(self):
        return (ParamRef, (float(self), self.coeffs))

    def __repr__(self):
        return f"ParamRef({float(self)!r}, {self.coeffs!r})"


def traced(theta, offset=0):
    """Object array shaped like ``theta`` with one ParamRef per entry.

    Entry ``k`` (flat order) is tagged with index ``offset + k``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    out = np.empty(theta.shape, dtype=object)
    flat = out.reshape(-1)
    for k, v in enumerate(theta.reshape(-1)):
        flat[k] = ParamRef(v, {offset + k: 1.0})
    return out


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


class Observable:
    """Uniform wrapper applying ``O`` or ``O^dagger`` to state vectors.

    Accepts a list of ``(matrix, qubits)`` terms (their product), a
    :class:`WeightedPauliSum`, a :class:`SparseCOO`, a QuOperator (densified)
    or a dense ``2**n x 2**n`` matrix.
    """

    def __init__(self, obs, n):
        self.n = int(n)
        dim = 1 << self.n
        self.kind = None
        if isinstance(obs, Observable):
            self.__dict__.update(obs.__dict__)
            return
        if isinstance(obs, WeightedPauliSum):
            if obs.n != self.n:
                raise DimensionError("Hamiltonian size does not match the circuit")
            obs = sum_to_coo(obs)
        if isinstance(obs, SparseCOO):
            if obs.dim != dim:
                raise DimensionError("observable dimension does not match the circuit")
            self.kind, self.coo = "coo", obs
            self._coo_h = None
        elif isinstance(obs, QuOperator):
            self.kind, self.matrix = "dense", obs.eval_matrix()
        elif isinstance(obs, (list, tuple)) and (len(obs) == 0 or isinstance(obs[0], (list, tuple))):
            terms = []
            used = set()
            for mat, qubits in obs:
                qubits = [int(q) for q in qubits]
                m = as_tensor(mat)
                if m.shape != (1 << len(qubits),) * 2:
                    raise DimensionError("term matrix does not match its qubits")
                if used & set(qubits) or any(not 0 <= q < self.n for q in qubits):
                    raise PreconditionError("term qubits must be in range and disjoint")
                used |= set(qubits)
                terms.append((m, qubits))
            self.kind, self.terms = "terms", terms
        else:
            m = as_tensor(obs)
            if m.shape != (dim, dim):
                raise DimensionError(f"observable shape {m.shape} does not match {n} qubits")
            self.kind, self.matrix = "dense", m

    def is_hermitian(self, atol=1e-10):
        if self.kind == "terms":
            return all(np.allclose(m, m.conj().T, atol=atol, rtol=0) for m, _ in self.terms)
        if self.kind == "coo":
            return _coo_hermitian(self.coo, atol)
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol, rtol=0))

    def apply(self, psi):
        """``O psi`` for a ``(batch, 2**n)`` or flat state."""
        flat = np.ndim(psi) == 1
        psi = statevec.as_batch(psi)
        if self.kind == "terms":
            out = psi
            for m, qubits in self.terms:
                out = kernels.apply_matrix(out, m, qubits, self.n)
            if out is psi:
                out = psi.copy()
        elif self.kind == "coo":
            out = np.stack([self.coo.matvec(v) for v in psi])
        else:
            out = psi @ self.matrix.T
        return out[0] if flat else out

    def apply_adjoint(self, psi):
        if self.kind == "terms":
            return Observable([(m.conj().T, q) for m, q in self.terms], self.n).apply(psi)
        if self.kind == "coo":
            if self._coo_h is None:
                c = self.coo
                self._coo_h = SparseCOO.canonical(c.cols, c.rows, c.values.conj(), c.dim)
            return Observable(self._coo_h, self.n).apply(psi)
        return Observable(self.matrix.conj().T, self.n).apply(psi)

    def expectation(self, psi):
        psi = np.asarray(psi).reshape(-1)
        return complex(np.vdot(psi, self.apply(psi)))


def _coo_hermitian(coo, atol):
    h = SparseCOO.canonical(coo.cols, coo.rows, coo.values.conj(), coo.dim)
    if h.nnz != coo.nnz:
        diff = SparseCOO.canonical(np.r_[coo.rows, h.rows], np.r_[coo.cols, h.cols],
                                   np.r_[coo.values, -h.values], coo.dim)
        return bool(diff.nnz == 0 or np.max(np.abs(diff.values)) <= atol)
    if np.any(h.rows != coo.rows) or np.any(h.cols != coo.cols):
        return False
    return bool(np.max(np.abs(h.values - coo.values), initial=0.0) <= atol)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


@dataclass
class GradientResult:
    value: float
    grad: np.ndarray

    def __iter__(self):
        return iter((self.value, self.grad))


class Objective:
    """Energy function ``theta -> Re <psi(theta)|O|psi(theta)>``.

    Parameters
    ----------
    build : callable
        ``build(theta)`` returns a Circuit, or ``(circuit, observable)``.
    observable : optional
        Used when ``build`` returns a bare circuit.
    """

    def __init__(self, build, observable=None):
        if isinstance(build, Objective):
            build, observable = build.build, observable or build.observable
        self.build = build
        self.observable = observable
        self._obs_cache = None

    def circuit(self, theta):
        out = self.build(theta)
        if isinstance(out, tuple):
            c, obs = out[0], out[1]
        else:
            c, obs = out, self.observable
        if obs is None:
            raise PreconditionError("no observable given")
        return c, obs

    def _observable(self, obs, n):
        # reuse the wrapped operator (e.g. a COO conversion) across calls
        if self._obs_cache is not None and self._obs_cache[0] is obs:
            return self._obs_cache[1]
        o = Observable(obs, n)
        self._obs_cache = (obs, o)
        return o

    def __call__(self, theta):
        return self.value(theta)

    def value(self, theta):
        c, obs = self.circuit(np.asarray(theta, dtype=np.float64))
        return self._observable(obs, c.n).expectation(c.wavefunction()).real

    def value_and_grad(self, theta):
        return value_and_grad(self, theta)


def as_objective(f, observable=None):
    return f if isinstance(f, Objective) and observable is None else Objective(f, observable)


def _state_builder(psi_fn, theta):
    c = psi_fn(theta)
    if isinstance(c, tuple):
        c = c[0]
    return c


# ---------------------------------------------------------------------------
# tape: resolved ops with derivative information
# ---------------------------------------------------------------------------


@dataclass
class _TapeOp:
    lin: object
    coeffs: dict  # flat parameter index -> d angle / d theta_k
    dmatrix: np.ndarray = None


def _derivative_matrix(lin):
    """``dU / d angle`` of a resolved parameterized gate."""
    g = lin.gate
    theta = float(g.params["theta"])
    if lin.split is not None and lin.split.truncation_error > 1e-14:
        # truncated split: differentiate the reconstructed matrix numerically
        k = lin.split.bond_dimension
        h = 1e-6

        def rec(t):
            m = gates.gate_matrix(g.name, dict(g.params, theta=t), g.matrix)
            return svd_split(m, k).reconstruct().reshape(4, 4)

        return (rec(theta + h) - rec(theta - h)) / (2 * h)
    u = gates.gate_matrix(g.name, {"theta": theta}, g.matrix)
    if g.name in gates.ROTATIONS:
        d = gates.REGISTRY[g.name]
        return d.coeff * (d.generator @ u)
    gen = as_tensor(g.matrix)
    return 1j * (gen @ u)


def _tape(c, num_params):
    for i, op in enumerate(c.ops):
        if op.kind in _REJECTED:
            raise UnsupportedOperationError(
                f"op {i} ({op.kind}) depends on the state norm and cannot be differentiated")
    tape = []
    for lin in c.linear_ops():
        coeffs = {}
        if lin.gate is not None:
            for name, v in lin.gate.params.items():
                if isinstance(v, ParamRef) and v.coeffs:
                    if name != "theta" or lin.gate.name not in ("rx", "ry", "rz", "exp1", "exp"):
                        raise UnsupportedOperationError(
                            f"op {lin.index}: parameter {name!r} of {lin.gate.name!r} "
                            "is not differentiable")
                    coeffs = {k: a for k, a in v.coeffs.items() if a != 0.0}
        for k in coeffs:
            if not 0 <= k < num_params:
                raise PreconditionError("traced parameter index out of range")
        t = _TapeOp(lin, coeffs)
        if coeffs:
            t.dmatrix = _derivative_matrix(lin)
        tape.append(t)
    return tape


def _trace(builder, theta):
    theta = np.asarray(theta, dtype=np.float64)
    out = builder(traced(theta))
    return theta, out


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def value_and_grad(f, theta, observable=None):
    """Energy and its gradient by reverse-mode (adjoint) differentiation.

    Parameters
    ----------
    f : Objective or callable
        See :class:`Objective`.
    theta : array-like
        Any shape; the gradient has the same shape.

    Returns
    -------
    GradientResult
    """
    f = as_objective(f, observable)
    theta, out = _trace(f.build, theta)
    c, obs = (out[0], out[1]) if isinstance(out, tuple) else (out, f.observable)
    if obs is None:
        raise PreconditionError("no observable given")
    value, grad = adjoint_gradient(c, f._observable(obs, c.n), theta.size)
    return GradientResult(value, grad.reshape(theta.shape))


def adjoint_gradient(c, o, num_params):
    """Value and flat gradient for a circuit built from traced parameters.

    ``o`` is an :class:`Observable`; ``num_params`` bounds the traced indices.
    """
    if not o.is_hermitian():
        raise PreconditionError("the observable must be Hermitian")
    tape = _tape(c, num_params)
    n = c.n
    psi = statevec.as_batch(c.input_vector())
    saved = {}
    for j, t in enumerate(tape):
        if t.coeffs:
            saved[j] = psi
        psi = kernels.apply_matrix(psi, t.lin.matrix, t.lin.qubits, n)
    lam = o.apply(psi)
    value = float(np.vdot(psi[0], lam[0]).real)
    grad = np.zeros(num_params)
    for j in range(len(tape) - 1, -1, -1):
        t = tape[j]
        if t.coeffs:
            dpsi = kernels.apply_matrix(saved.pop(j), t.dmatrix, t.lin.qubits, n)
            g = 2.0 * np.vdot(lam[0], dpsi[0]).real
            for k, a in t.coeffs.items():
                grad[k] += a * g
        if j > 0:
            lam = statevec.apply_adjoint(lam, t.lin, n)
    return value, grad


def grad(f, theta, observable=None):
    return value_and_grad(f, theta, observable).grad


def grad_parameter_shift(f, theta, observable=None):
    """Gradient from the two-term shift rule, applied to each rotation occurrence.

    Raises
    ------
    UnsupportedOperationError
        If a parameter enters a gate other than ``rx``/``ry``/``rz``.
    """
    f = as_objective(f, observable)
    theta, out = _trace(f.build, theta)
    c, obs = (out[0], out[1]) if isinstance(out, tuple) else (out, f.observable)
    o = f._observable(obs, c.n)
    tape = _tape(c, theta.size)
    n = c.n
    for t in tape:
        if t.coeffs and t.lin.gate.name not in gates.ROTATIONS:
            raise UnsupportedOperationError(
                f"op {t.lin.index}: the shift rule needs a rotation gate, got {t.lin.gate.name!r}")
    psi0 = statevec.as_batch(c.input_vector())
    lins = [t.lin for t in tape]

    def energy(ops):
        psi = statevec.apply_ops(psi0, ops, n)[0]
        return o.expectation(psi).real

    grad = np.zeros(theta.size)
    for j, t in enumerate(tape):
        if not t.coeffs:
            continue
        ang = float(t.lin.gate.params["theta"])
        vals = []
        for s in (np.pi / 2, -np.pi / 2):
            ops = list(lins)
            ops[j] = _Shifted(gates.gate_matrix(t.lin.gate.name, {"theta": ang + s}), t.lin.qubits)
            vals.append(energy(ops))
        d = 0.5 * (vals[0] - vals[1])
        for k, a in t.coeffs.items():
            grad[k] += a * d
    return grad.reshape(theta.shape)


@dataclass
class _Shifted:
    matrix: np.ndarray
    qubits: tuple


def finite_difference_grad(f, theta, h=FD_STEP, observable=None):
    """Central differences of ``f`` (an Objective or plain ``theta -> float``)."""
    if h <= 0:
        raise PreconditionError("step must be positive")
    if isinstance(f, Objective) or observable is not None:
        fun = as_objective(f, observable).value
    else:
        fun = f
    theta = np.asarray(theta, dtype=np.float64)
    g = np.zeros(theta.size)
    flat = theta.reshape(-1)
    for k in range(theta.size):
        tp = flat.copy()
        tm = flat.copy()
        tp[k] += h
        tm[k] -= h
        g[k] = (fun(tp.reshape(theta.shape)) - fun(tm.reshape(theta.shape))) / (2 * h)
    return g.reshape(theta.shape)


def hessian(f, theta, observable=None, h=HESSIAN_STEP):
    """Symmetrized central differences of adjoint gradients."""
    f = as_objective(f, observable)
    theta = np.asarray(theta, dtype=np.float64)
    p = theta.size
    flat = theta.reshape(-1)
    hess = np.zeros((p, p))
    for k in range(p):
        tp = flat.copy()
        tm = flat.copy()
        tp[k] += h
        tm[k] -= h
        gp = value_and_grad(f, tp.reshape(theta.shape)).grad.reshape(-1)
        gm = value_and_grad(f, tm.reshape(theta.shape)).grad.reshape(-1)
        hess[k] = (gp - gm) / (2 * h)
    return 0.5 * (hess + hess.T)


# ---------------------------------------------------------------------------
# state Jacobians
# ---------------------------------------------------------------------------


def _state_tape(psi_fn, theta):
    theta, out = _trace(psi_fn, theta)
    c = out[0] if isinstance(out, tuple) else out
    return theta, c, _tape(c, theta.size)


def jacobian_state(psi_fn, theta, mode="forward", block=64):
    """``d psi / d theta`` as a ``2**n x p`` matrix.

    ``mode="forward"`` propagates one tangent per parameter alongside the
    state; ``mode="reverse"`` sweeps blocks of output basis vectors backwards.
    """
    theta, c, tape = _state_tape(psi_fn, theta)
    n, p = c.n, theta.size
    dim = 1 << n
    if p == 0:
        return np.zeros((dim, 0), dtype=np.complex128)
    psi0 = statevec.as_batch(c.input_vector())
    if mode == "forward":
        batch = np.zeros((p + 1, dim), dtype=np.complex128)
        batch[0] = psi0[0]
        for t in tape:
            prev = batch[0:1]
            if t.coeffs:
                dpsi = kernels.apply_matrix(prev, t.dmatrix, t.lin.qubits, n)[0]
            batch = kernels.apply_matrix(batch, t.lin.matrix, t.lin.qubits, n)
            for k, a in t.coeffs.items():
                batch[k + 1] += a * dpsi
        return batch[1:].T.copy()
    if mode != "reverse":
        raise PreconditionError("mode must be 'forward' or 'reverse'")
    psi = psi0
    saved = {}
    for j, t in enumerate(tape):
        if t.coeffs:
            saved[j] = kernels.apply_matrix(psi, t.dmatrix, t.lin.qubits, n)[0]
        psi = kernels.apply_matrix(psi, t.lin.matrix, t.lin.qubits, n)
    jac = np.zeros((dim, p), dtype=np.complex128)
    for lo in range(0, dim, block):
        hi = min(dim, lo + block)
        lam = np.zeros((hi - lo, dim), dtype=np.complex128)
        lam[np.arange(hi - lo), np.arange(lo, hi)] = 1.0
        for j in range(len(tape) - 1, -1, -1):
            t = tape[j]
            if t.coeffs:
                col = lam.conj() @ saved[j]
                for k, a in t.coeffs.items():
                    jac[lo:hi, k] += a * col
            lam = statevec.apply_adjoint(lam, t.lin, n)
    return jac


def jvp(psi_fn, theta, v):
    """``(psi(theta), J v)`` from one forward pass with a single tangent."""
    theta, c, tape = _state_tape(psi_fn, theta)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != theta.size:
        raise DimensionError(f"tangent has length {v.size}, expected {theta.size}")
    n = c.n
    batch = np.zeros((2, 1 << n), dtype=np.complex128)
    batch[0] = c.input_vector()
    for t in tape:
        if t.coeffs:
            w = sum(a * v[k] for k, a in t.coeffs.items())
            dpsi = kernels.apply_matrix(batch[0:1], t.dmatrix, t.lin.qubits, n)[0]
        batch = kernels.apply_matrix(batch, t.lin.matrix, t.lin.qubits, n)
        if t.coeffs:
            batch[1] += w * dpsi
    return batch[0].copy(), batch[1].copy()


def state_of(psi_fn, theta):
    return _state_builder(psi_fn, np.asarray(theta, dtype=np.float64)).wavefunction()


def qfi(psi_fn, theta):
    """Quantum Fisher information ``Re[J^dagger J - (J^dagger psi)(psi^dagger J)]``."""
    theta = np.asarray(theta, dtype=np.float64)
    jac = jacobian_state(psi_fn, theta)
    if jac.shape[1] == 0:
        return np.zeros((0, 0))
    psi = state_of(psi_fn, theta)
    jp = jac.conj().T @ psi
    m = (jac.conj().T @ jac - np.outer(jp, jp.conj())).real
    return 0.5 * (m + m.T)


def natural_gradient_solve(metric, grad, regularization=NG_REGULARIZATION):
    """Solve ``(M + eps I) x = grad`` with a symmetric solver."""
    if regularization < 0:
        raise PreconditionError("regularization must be non-negative")
    m = np.atleast_2d(np.asarray(metric, dtype=np.float64))
    g = np.asarray(grad, dtype=np.float64).reshape(-1)
    if m.shape != (g.size, g.size):
        raise DimensionError("metric and gradient sizes differ")
    try:
        return scipy.linalg.solve(m + regularization * np.eye(g.size), g, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise PreconditionError(f"metric is singular: {exc}") from exc


def braket_h_dpsi(psi_fn, op, theta):
    """``<psi|H|d_k psi>`` for every parameter, with ``H^dagger psi`` held fixed."""
    theta = np.asarray(theta, dtype=np.float64)
    jac = jacobian_state(psi_fn, theta)
    if jac.shape[1] == 0:
        return np.zeros(0, dtype=np.complex128)
    psi = state_of(psi_fn, theta)
    o = Observable(op, psi.size.bit_length() - 1)
    bra = o.apply_adjoint(psi)
    return bra.conj() @ jac


def param_layout(builder, theta):
    """For every flat parameter, the ``(op index, parameter name, coefficient)`` uses."""
    theta, out = _trace(builder, theta)
    c = out[0] if isinstance(out, tuple) else out
    layout = [[] for _ in range(theta.size)]
    for i, op in enumerate(c.ops):
        specs = [(op.name, op.params)] + [(g.name, g.params) for g in op.choices]
        for _, params in specs:
            for name, v in params.items():
                if isinstance(v, ParamRef):
                    for k, a in v.coeffs.items():
                        layout[k].append((i, name, a))
    return layout
