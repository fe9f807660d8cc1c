"""Pure-state circuits evaluated by tensor-network contraction.

A :class:`Circuit` is an append-only list of :class:`CircuitOp` records.
Every record is resolved into a concrete linear map (a :class:`LinearOp`)
before evaluation: Kraus trajectories and mid-circuit measurements pick their
branch from the stored ``status`` value, conditional gates read the resolved
classical bit, and post-selection becomes an unnormalized projector.

Two engines consume the resolved maps. ``state``, ``amplitude``,
``full_unitary``, ``expectation(reuse=False)`` and ``quvector`` build and
contract a tensor network; sampling, trajectory branch choice and gradients
use the dense state-vector kernels.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import gates, kernels, statevec
from .channels import KrausChannel, make_channel, select_branch, unitary_scales
from .errors import (
    CapExceededError,
    DimensionError,
    PreconditionError,
    UnsupportedOperationError,
)
from .network import Network, TensorNode, contract, preprocess_absorb
from .quop import MPOOperator, QuOperator, QuVector, fresh_edge
from .rng import StatusSource
from .tensor import as_tensor, svd_split

DENSE_CAP = statevec.DENSE_CAP
UNITARY_CAP = 13
GATE_KINDS = ("gate", "kraus", "unitary_kraus", "cond_measure", "conditional_gate",
              "post_select", "mpo")
PARAM_GATES = ("rx", "ry", "rz", "exp1", "exp")
MATRIX_GATES = ("exp1", "exp", "unitary")


@dataclass(frozen=True)
class GateSpec:
    """A gate by name with its parameters and, if needed, a matrix payload."""

    name: str
    params: dict = field(default_factory=dict)
    matrix: object = None

    def build(self):
        return gates.gate_matrix(self.name, self.params, self.matrix)


@dataclass
class CircuitOp:
    """One circuit record. Which fields are used depends on ``kind``."""

    kind: str
    qubits: tuple
    name: str = ""
    params: dict = field(default_factory=dict)
    matrix: object = None
    split: dict = None
    status: float = None
    keep: int = None
    channel: KrausChannel = None
    choices: tuple = ()
    probs: tuple = None
    ctrl: tuple = ()
    bit: int = None
    outcome: int = None
    mpo: MPOOperator = None


@dataclass
class LinearOp:
    """Resolved linear map: ``matrix`` on ``qubits`` (first qubit most significant)."""

    qubits: tuple
    matrix: np.ndarray
    index: int
    kind: str
    gate: GateSpec = None
    split: object = None
    mpo: MPOOperator = None
    branch: int = None


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome bit of one measured qubit and the probability of the joint outcome."""

    qubit: int
    outcome: int
    probability: float


def _pauli_terms(x=(), y=(), z=()):
    lists = [list(x), list(y), list(z)]
    flat = [q for lst in lists for q in lst]
    if len(set(flat)) != len(flat):
        raise PreconditionError("x, y and z index lists must be pairwise disjoint")
    terms = [(gates.X, [q]) for q in lists[0]] + [(gates.Y, [q]) for q in lists[1]]
    return terms + [(gates.Z, [q]) for q in lists[2]]


class Circuit:
    """Quantum circuit on ``n`` qubits.

    Parameters
    ----------
    n : int
    inputs : array, optional
        Dense input state with ``2**n`` entries (not renormalized).
    mps_inputs : QuVector, optional
        Input state as a tensor network with ``n`` dangling edges of size 2.
    split : dict, optional
        ``{"max_singular_values": k}`` splits every two-qubit gate into two
        tensors by SVD. Gate-level ``split=`` arguments override it.
    rng : StatusSource or int, optional
        Source for statuses of stochastic ops created without one.
    """

    def __init__(self, n, inputs=None, mps_inputs=None, split=None, rng=None):
        n = int(n)
        if n < 1:
            raise PreconditionError("a circuit needs at least one qubit")
        self.n = n
        self.ops = []
        self.split = dict(split) if split else None
        self._rng = rng if isinstance(rng, StatusSource) else StatusSource(rng or 0)
        self._resolved = None
        self._progress = None
        self._nbits = 0
        self.inputs = None
        self.mps_inputs = None
        if inputs is not None and mps_inputs is not None:
            raise PreconditionError("give either inputs or mps_inputs, not both")
        if inputs is not None:
            psi = as_tensor(inputs).reshape(-1)
            if psi.size != 1 << n:
                raise DimensionError(f"input state must have {1 << n} entries")
            self.inputs = psi.copy()
        if mps_inputs is not None:
            if not isinstance(mps_inputs, QuOperator) or mps_inputs.in_edges:
                raise PreconditionError("mps_inputs must be a QuVector")
            if mps_inputs.out_dims != (2,) * n:
                raise DimensionError(f"mps_inputs must have {n} dangling edges of size 2")
            self.mps_inputs = mps_inputs

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    def _check_qubits(self, qubits):
        qubits = tuple(int(q) for q in qubits)
        if len(set(qubits)) != len(qubits):
            raise PreconditionError(f"qubits must be distinct, got {qubits}")
        for q in qubits:
            if not 0 <= q < self.n:
                raise PreconditionError(f"qubit {q} out of range for {self.n} qubits")
        return qubits

    def _append(self, op):
        self.ops.append(op)
        self._resolved = None
        return op

    def _split_conf(self, split, k):
        conf = split if split is not None else self.split
        if not conf or k != 2:
            return None
        if not conf.get("apply_to_two_qubit_gates", True):
            return None
        return {"max_singular_values": int(conf.get("max_singular_values", 4))}

    def apply_gate(self, name, *qubits, split=None, **params):
        """Append a named gate.

        ``exp1``/``exp`` take ``theta`` and ``unitary`` (the generator);
        ``unitary`` takes ``unitary`` (the matrix).
        """
        name = str(name).lower()
        qubits = self._check_qubits(qubits)
        matrix = params.pop("unitary", None)
        if name in gates.REGISTRY:
            arity = gates.REGISTRY[name].arity
            extra = set(params) - set(gates.REGISTRY[name].param_names)
            if extra:
                raise PreconditionError(f"gate {name!r} got unexpected parameters {sorted(extra)}")
        elif name in MATRIX_GATES:
            if matrix is None:
                raise PreconditionError(f"gate {name!r} needs a unitary= matrix")
            matrix = as_tensor(matrix)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise DimensionError("gate matrix must be square")
            arity = matrix.shape[0].bit_length() - 1
            if 1 << arity != matrix.shape[0]:
                raise DimensionError("gate matrix size must be a power of two")
        else:
            raise PreconditionError(f"unknown gate {name!r}")
        if len(qubits) != arity:
            raise PreconditionError(f"gate {name!r} acts on {arity} qubits, got {len(qubits)}")
        if name in ("exp1", "exp") and "theta" not in params:
            raise PreconditionError(f"gate {name!r} needs theta")
        op = CircuitOp("gate", qubits, name=name, params=dict(params), matrix=matrix,
                       split=self._split_conf(split, len(qubits)))
        if name == "exp1":
            gates.exp1_gate(0.0, matrix)  # validates G @ G = I up front
        self._append(op)
        return self

    def unitary(self, *qubits, unitary, split=None):
        """Append an arbitrary matrix; it need not be unitary."""
        return self.apply_gate("unitary", *qubits, unitary=unitary, split=split)

    any = unitary

    def apply_unitary(self, qubits, matrix):
        return self.unitary(*qubits, unitary=matrix)

    def mpo(self, *qubits, mpo):
        """Apply an MPO gate whose sites map to ``qubits`` in order."""
        qubits = self._check_qubits(qubits)
        if not isinstance(mpo, MPOOperator):
            raise PreconditionError("mpo must be an MPOOperator")
        if mpo.n_sites != len(qubits) or mpo.out_dims != (2,) * len(qubits) \
                or mpo.in_dims != (2,) * len(qubits):
            raise DimensionError("MPO sites must match the qubits and have dimension 2")
        self._append(CircuitOp("mpo", qubits, name="mpo", mpo=mpo))
        return self

    def multicontrol(self, *qubits, ctrl, unitary):
        """Controlled gate: the last ``k`` qubits are targets of a ``2**k`` unitary."""
        m = gates.multicontrol_mpo(ctrl, unitary)
        qubits = self._check_qubits(qubits)
        if m.n_sites != len(qubits):
            raise PreconditionError("number of qubits must equal controls plus target qubits")
        op = CircuitOp("mpo", qubits, name="multicontrol", mpo=m, ctrl=tuple(int(c) for c in ctrl),
                       matrix=as_tensor(unitary))
        self._append(op)
        return self

    def _draw_status(self, status, rng):
        if status is not None:
            status = float(status)
            if not 0.0 <= status <= 1.0:
                raise PreconditionError("status must lie in [0, 1]")
            return status
        src = rng if isinstance(rng, StatusSource) else (
            StatusSource(rng) if rng is not None else self._rng)
        return float(src.uniform())

    def general_kraus(self, channel, *qubits, status=None, rng=None):
        """Monte Carlo step of a general Kraus channel; returns the branch index.

        Branch ``i`` has weight ``<psi|K_i^dagger K_i|psi>`` and the state
        becomes ``K_i psi / sqrt(p_i)`` with ``p_i`` the normalized weight.
        """
        if len(qubits) == 1 and isinstance(qubits[0], (list, tuple)):
            qubits = tuple(qubits[0])
        if not isinstance(channel, KrausChannel):
            channel = KrausChannel(tuple(channel))
        qubits = self._check_qubits(qubits)
        if channel.arity != len(qubits):
            raise DimensionError("channel arity does not match the qubits")
        op = CircuitOp("kraus", qubits, name=channel.name, params=dict(channel.params),
                       channel=channel, status=self._draw_status(status, rng))
        self._append(op)
        return self._resolve()[0][-1].branch

    kraus = general_kraus

    def unitary_kraus(self, operators, *qubits, probs=None, prob=None, status=None, rng=None):
        """Pick one of ``operators`` with fixed probabilities; returns the index.

        ``operators`` may be matrices, :class:`GateSpec` objects or a
        :class:`KrausChannel` whose operators are unitary up to scale. The
        chosen operator is rescaled to be unitary. Without ``probs`` the
        probabilities are the operators' scales ``tr(K^dagger K) / d``.
        """
        if len(qubits) == 1 and isinstance(qubits[0], (list, tuple)):
            qubits = tuple(qubits[0])
        if prob is not None and probs is None:
            probs = prob
        if isinstance(operators, KrausChannel):
            operators = operators.operators
        choices = tuple(c if isinstance(c, GateSpec) else GateSpec("unitary", {}, as_tensor(c))
                        for c in operators)
        qubits = self._check_qubits(qubits)
        mats = [c.build() for c in choices]
        for m in mats:
            if m.shape != (1 << len(qubits),) * 2:
                raise DimensionError("operator size does not match the qubits")
        if probs is None:
            p = unitary_scales(mats)
        else:
            p = np.asarray([float(x) for x in probs])
            if len(p) != len(mats):
                raise PreconditionError("probs must have one entry per operator")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise PreconditionError(f"probabilities must be non-negative and sum to 1, got {p.sum()}")
        op = CircuitOp("unitary_kraus", qubits, name="unitary_kraus", choices=choices,
                       probs=tuple(float(x) for x in p), status=self._draw_status(status, rng))
        self._append(op)
        return self._branch_of(op)

    @staticmethod
    def _branch_of(op):
        return select_branch(np.cumsum(op.probs), op.status)

    def cond_measure(self, qubit, rng=None, status=None, outcome=None):
        """Collapsing Z measurement; returns a classical bit handle.

        The outcome is 0 when ``status`` falls below the Born probability of
        0 and 1 otherwise; ``outcome`` forces a branch instead.
        """
        (qubit,) = self._check_qubits([qubit])
        if outcome is not None and int(outcome) not in (0, 1):
            raise PreconditionError("forced outcome must be 0 or 1")
        handle = self._nbits
        self._nbits += 1
        st = None if outcome is not None else self._draw_status(status, rng)
        self._append(CircuitOp("cond_measure", (qubit,), name="cond_measure", status=st,
                               bit=handle, outcome=None if outcome is None else int(outcome)))
        return handle

    def bit_value(self, handle):
        """Resolved value of a classical bit handle."""
        bits = self._resolve()[1]
        if handle not in bits:
            raise PreconditionError(f"unknown bit handle {handle}")
        return bits[handle]

    def conditional_gate(self, bit, gate_choices, qubit):
        """Apply ``gate_choices[value of bit]`` to ``qubit``."""
        if not isinstance(bit, (int, np.integer)) or not 0 <= bit < self._nbits:
            raise PreconditionError(f"unknown or stale bit handle {bit!r}")
        if len(gate_choices) < 2:
            raise PreconditionError("conditional_gate needs at least two choices")
        qubits = self._check_qubits([qubit])
        choices = tuple(c if isinstance(c, GateSpec) else GateSpec("unitary", {}, as_tensor(c))
                        for c in gate_choices)
        for c in choices:
            if c.build().shape != (2, 2):
                raise DimensionError("conditional gate choices must be 2x2")
        self._append(CircuitOp("conditional_gate", qubits, name="conditional_gate",
                               choices=choices, bit=int(bit)))
        return self

    def post_select(self, qubit, keep):
        """Project ``qubit`` onto ``keep`` without renormalizing."""
        (qubit,) = self._check_qubits([qubit])
        if int(keep) not in (0, 1):
            raise PreconditionError("keep must be 0 or 1")
        self._append(CircuitOp("post_select", (qubit,), name="post_select", keep=int(keep)))
        return self

    def append(self, other):
        """New circuit applying ``self`` then ``other``; inputs come from ``self``."""
        if other.n != self.n:
            raise PreconditionError("circuits must have the same number of qubits")
        if other.inputs is not None or other.mps_inputs is not None:
            raise PreconditionError("the appended circuit must use the default input")
        c = self.copy()
        shift = c._nbits
        for op in other.ops:
            op = replace(op)
            if op.bit is not None:
                op.bit += shift
            c.ops.append(op)
        c._nbits += other._nbits
        c._resolved = None
        c._progress = None
        return c

    def copy(self):
        c = Circuit.__new__(Circuit)
        c.__dict__.update(self.__dict__)
        c.ops = [replace(op) for op in self.ops]
        c.split = dict(self.split) if self.split else None
        c._resolved = None
        c._progress = None
        return c

    # ------------------------------------------------------------------
    # resolution to linear maps
    # ------------------------------------------------------------------
    def input_vector(self):
        if self.inputs is not None:
            return self.inputs.copy()
        if self.mps_inputs is not None:
            return self.mps_inputs.eval().reshape(-1)
        return statevec.zero_state(self.n)[0]

    def _gate_linear(self, op, idx):
        spec = GateSpec(op.name, dict(op.params), op.matrix)
        m = spec.build()
        split = None
        if op.split:
            split = svd_split(m, op.split["max_singular_values"])
            m = split.reconstruct().reshape(4, 4)
        return LinearOp(op.qubits, m, idx, "gate", gate=spec, split=split)

    def _resolve(self):
        """Return ``(linear ops, bit values)``, cached until the next append."""
        if self._resolved is not None:
            return self._resolved
        # ops are only ever appended, so resume after the last resolved op
        if self._progress is not None:
            lin, bits, psi, applied, start = self._progress
            lin, bits = list(lin), dict(bits)
        else:
            lin, bits, psi, applied, start = [], {}, None, 0, 0

        def prefix():
            nonlocal psi, applied
            if psi is None:
                if self.n > DENSE_CAP:
                    raise CapExceededError("state-dependent ops need a dense prefix state")
                psi = statevec.as_batch(self.input_vector())
            psi = statevec.apply_ops(psi, lin, self.n, applied)
            applied = len(lin)
            return psi[0]

        for idx in range(start, len(self.ops)):
            op = self.ops[idx]
            if op.kind == "gate":
                lin.append(self._gate_linear(op, idx))
            elif op.kind == "mpo":
                lin.append(LinearOp(op.qubits, op.mpo.to_dense(), idx, "mpo", mpo=op.mpo))
            elif op.kind == "post_select":
                proj = np.zeros((2, 2), dtype=np.complex128)
                proj[op.keep, op.keep] = 1.0
                lin.append(LinearOp(op.qubits, proj, idx, "post_select"))
            elif op.kind == "unitary_kraus":
                b = self._branch_of(op)
                spec = op.choices[b]
                m = spec.build()
                scale = np.sqrt(np.real(np.trace(m.conj().T @ m)) / m.shape[0])
                if scale == 0:
                    raise PreconditionError(f"op {idx}: selected operator is zero")
                if abs(scale - 1.0) > 1e-15:
                    spec = GateSpec("unitary", {}, m / scale)
                    m = m / scale
                lin.append(LinearOp(op.qubits, m, idx, "unitary_kraus", gate=spec, branch=b))
            elif op.kind == "conditional_gate":
                if op.bit not in bits:
                    raise PreconditionError(f"op {idx}: bit {op.bit} is not yet measured")
                spec = op.choices[bits[op.bit]]
                lin.append(LinearOp(op.qubits, spec.build(), idx, "conditional_gate",
                                    gate=spec, branch=bits[op.bit]))
            elif op.kind == "cond_measure":
                state = prefix()
                w0, w1 = statevec.bit_probabilities(state, op.qubits[0], self.n)
                tot = w0 + w1
                if tot <= 0:
                    raise PreconditionError(f"op {idx}: cannot measure a zero state")
                p0 = w0 / tot
                if op.outcome is not None:
                    b = op.outcome
                else:
                    b = 0 if op.status < p0 else 1
                p = p0 if b == 0 else 1.0 - p0
                if p <= 1e-15:
                    raise PreconditionError(f"op {idx}: outcome {b} has zero probability")
                proj = np.zeros((2, 2), dtype=np.complex128)
                proj[b, b] = 1.0 / np.sqrt(p)
                bits[op.bit] = b
                lin.append(LinearOp(op.qubits, proj, idx, "cond_measure", branch=b))
            elif op.kind == "kraus":
                state = statevec.as_batch(prefix())
                nrm = float(np.real(np.vdot(state[0], state[0])))
                if nrm <= 0:
                    raise PreconditionError(f"op {idx}: cannot apply a channel to a zero state")
                weights = []
                for k in op.channel.operators:
                    v = kernels.apply_matrix(state, k, op.qubits, self.n)[0]
                    weights.append(float(np.real(np.vdot(v, v))) / nrm)
                weights = np.asarray(weights)
                if weights.sum() <= 0:
                    raise PreconditionError(f"op {idx}: all branch probabilities vanish")
                cum = np.cumsum(weights) / weights.sum()
                b = select_branch(cum, op.status)
                p = weights[b] / weights.sum()
                m = op.channel.operators[b] / np.sqrt(p)
                lin.append(LinearOp(op.qubits, m, idx, "kraus", branch=b))
            else:  # pragma: no cover - guarded by constructors
                raise PreconditionError(f"unknown op kind {op.kind!r}")
        self._resolved = (lin, bits)
        self._progress = (tuple(lin), dict(bits), psi, applied, len(self.ops))
        return self._resolved

    def linear_ops(self):
        return list(self._resolve()[0])

    def branches(self):
        """Selected branch of every stochastic or conditional op, by op index."""
        return {op.index: op.branch for op in self._resolve()[0] if op.branch is not None}

    # ------------------------------------------------------------------
    # tensor networks
    # ------------------------------------------------------------------
    def _ket_nodes(self, ids, edges, open_inputs=False):
        """Nodes of the circuit network and the output edge of every wire."""
        nodes = []
        wires = []
        in_edges = []
        if open_inputs:
            wires = [edges() for _ in range(self.n)]
            in_edges = list(wires)
        elif self.inputs is not None:
            wires = [edges() for _ in range(self.n)]
            t = self.inputs.reshape((2,) * self.n)
            nodes.append(TensorNode(ids(), t, tuple(wires), tuple(range(self.n)), -1, False))
        elif self.mps_inputs is not None:
            frag = self.mps_inputs
            remap = {}
            for t, es in frag.nodes:
                local = tuple(remap.setdefault(e, edges()) for e in es)
                nodes.append(TensorNode(ids(), t, local, (), -1, False))
            wires = [remap[e] for e in frag.out_edges]
        else:
            for q in range(self.n):
                e = edges()
                t = np.array([1.0, 0.0], dtype=np.complex128)
                nodes.append(TensorNode(ids(), t, (e,), (q,), -1, True))
                wires.append(e)
        for op in self._resolve()[0]:
            qs = op.qubits
            k = len(qs)
            if op.mpo is not None:
                frag = op.mpo
                remap = {e_in: wires[q] for e_in, q in zip(frag.in_edges, qs)}
                outs = {}
                for e_out, q in zip(frag.out_edges, qs):
                    outs[e_out] = remap[e_out] = edges()
                single = len(frag.nodes) == 1 and k == 1
                for t, es in frag.nodes:
                    local = tuple(remap.setdefault(e, edges()) for e in es)
                    nodes.append(TensorNode(ids(), t, local, qs, op.index, single))
                for e_out, q in zip(frag.out_edges, qs):
                    wires[q] = outs[e_out]
            elif op.split is not None:
                sp = op.split
                o0, o1, bond = edges(), edges(), edges()
                q0, q1 = qs
                nodes.append(TensorNode(ids(), sp.left, (o0, wires[q0], bond), (q0,), op.index, False))
                nodes.append(TensorNode(ids(), sp.right, (bond, o1, wires[q1]), (q1,), op.index, False))
                wires[q0], wires[q1] = o0, o1
            else:
                outs = [edges() for _ in qs]
                t = op.matrix.reshape((2,) * (2 * k))
                nodes.append(TensorNode(ids(), t, tuple(outs) + tuple(wires[q] for q in qs),
                                        qs, op.index, k == 1))
                for q, e in zip(qs, outs):
                    wires[q] = e
        return nodes, wires, in_edges

    @staticmethod
    def _counters():
        state = {"id": 0, "edge": 0}

        def ids():
            state["id"] += 1
            return state["id"] - 1

        def edges():
            state["edge"] += 1
            return state["edge"] - 1

        return ids, edges

    @staticmethod
    def _wire_major(nodes):
        """Renumber nodes by (lowest wire, circuit order).

        Greedy search breaks ties by node id, so this numbering makes it
        sweep along the qubit axis, which keeps intermediates small for
        circuits of nearest-neighbour gates.
        """
        ranked = sorted(nodes, key=lambda nd: (min(nd.wires) if nd.wires else -1, nd.order, nd.id))
        return [TensorNode(i, nd.tensor, nd.edges, nd.wires, nd.order, nd.absorbable)
                for i, nd in enumerate(ranked)]

    def _contract(self, nodes, dangling, preprocess=True):
        net = Network(self._wire_major(nodes), dangling)
        if preprocess:
            net = preprocess_absorb(net)
        return contract(net)

    def network(self, kind="state", bitstring=None, operator=None, preprocess=False):
        """The tensor network used by an evaluation method (for inspection).

        ``kind`` is ``state``, ``amplitude``, ``unitary`` or ``expectation``;
        ``operator`` is a list of ``(matrix, qubits)`` terms or a QuOperator.
        """
        ids, edges = self._counters()
        if kind == "state":
            nodes, wires, _ = self._ket_nodes(ids, edges)
            net = Network(nodes, wires)
        elif kind == "unitary":
            nodes, wires, ins = self._ket_nodes(ids, edges, open_inputs=True)
            net = Network(nodes, wires + ins)
        elif kind == "amplitude":
            nodes, wires, _ = self._ket_nodes(ids, edges)
            for q, b in enumerate(self._parse_bits(bitstring)):
                t = np.zeros(2, dtype=np.complex128)
                t[b] = 1.0
                nodes.append(TensorNode(ids(), t, (wires[q],), (q,), len(self.ops), True))
            net = Network(nodes, [])
        elif kind == "expectation":
            nodes = self._sandwich_nodes(ids, edges, operator)
            net = Network(nodes, [])
        else:
            raise PreconditionError(f"unknown network kind {kind!r}")
        net = Network(self._wire_major(net.nodes.values()), net.dangling)
        return preprocess_absorb(net) if preprocess else net

    def _sandwich_nodes(self, ids, edges, operator):
        ket, wires, _ = self._ket_nodes(ids, edges)
        bra_wire = {}
        op_nodes = []
        order = len(self.ops)
        if isinstance(operator, QuOperator):
            if operator.out_dims != (2,) * self.n or operator.in_dims != (2,) * self.n:
                raise DimensionError("operator must act on all qubits with dimension 2")
            remap = {e: wires[q] for q, e in enumerate(operator.in_edges)}
            for q, e in enumerate(operator.out_edges):
                remap[e] = bra_wire[q] = edges()
            for t, es in operator.nodes:
                local = tuple(remap.setdefault(e, edges()) for e in es)
                op_nodes.append(TensorNode(ids(), t, local, (), order, False))
        else:
            used = set()
            for mat, qubits in operator or ():
                qubits = self._check_qubits(qubits)
                if used & set(qubits):
                    raise PreconditionError("term qubit sets must be disjoint")
                used |= set(qubits)
                m = as_tensor(mat)
                k = len(qubits)
                if m.shape != (1 << k, 1 << k):
                    raise DimensionError("term matrix does not match its qubits")
                outs = [edges() for _ in qubits]
                for q, e in zip(qubits, outs):
                    bra_wire[q] = e
                op_nodes.append(TensorNode(ids(), m.reshape((2,) * (2 * k)),
                                           tuple(outs) + tuple(wires[q] for q in qubits),
                                           qubits, order, k == 1))
        wire_set = {e: q for q, e in enumerate(wires)}
        rename = {}
        for q, e in enumerate(wires):
            rename[e] = bra_wire.get(q, e)
        bra = []
        for nd in ket:
            es = tuple(rename.setdefault(e, edges()) if e not in wire_set else rename[e]
                       for e in nd.edges)
            bra.append(TensorNode(ids(), nd.tensor.conj(), es, nd.wires, nd.order, nd.absorbable))
        return ket + op_nodes + bra

    # ------------------------------------------------------------------
    # outputs
    # ------------------------------------------------------------------
    def state(self):
        """Output state vector from contracting the circuit network."""
        if self.n > DENSE_CAP:
            raise CapExceededError(f"dense state capped at {DENSE_CAP} qubits")
        ids, edges = self._counters()
        nodes, wires, _ = self._ket_nodes(ids, edges)
        return self._contract(nodes, wires).reshape(-1)

    def wavefunction(self):
        """Output state from the dense state-vector engine."""
        if self.n > DENSE_CAP:
            raise CapExceededError(f"dense state capped at {DENSE_CAP} qubits")
        psi = statevec.as_batch(self.input_vector())
        return statevec.apply_ops(psi, self._resolve()[0], self.n)[0]

    def _parse_bits(self, bitstring):
        s = str(bitstring)
        if len(s) != self.n or any(ch not in "01" for ch in s):
            raise PreconditionError(f"bitstring must be {self.n} characters of 0/1")
        return [int(ch) for ch in s]

    def amplitude(self, bitstring):
        """``<bitstring|psi>`` by closing every output wire; no dense state is formed."""
        ids, edges = self._counters()
        bits = self._parse_bits(bitstring)
        nodes, wires, _ = self._ket_nodes(ids, edges)
        for q, b in enumerate(bits):
            t = np.zeros(2, dtype=np.complex128)
            t[b] = 1.0
            nodes.append(TensorNode(ids(), t, (wires[q],), (q,), len(self.ops), True))
        return complex(self._contract(nodes, []))

    def full_unitary(self):
        """Matrix of the whole circuit (input wires left open)."""
        if self.n > UNITARY_CAP:
            raise CapExceededError(f"full unitary capped at {UNITARY_CAP} qubits")
        for idx, op in enumerate(self.ops):
            if op.kind not in ("gate", "mpo"):
                raise UnsupportedOperationError(
                    f"op {idx} ({op.kind}) has no circuit-independent matrix")
        ids, edges = self._counters()
        nodes, wires, ins = self._ket_nodes(ids, edges, open_inputs=True)
        d = 1 << self.n
        return self._contract(nodes, wires + ins).reshape(d, d)

    def quvector(self):
        """The circuit output as a lazy :class:`QuVector`."""
        ids, edges = self._counters()
        nodes, wires, _ = self._ket_nodes(ids, edges)
        remap = {}
        frag = []
        for nd in nodes:
            frag.append((nd.tensor, tuple(remap.setdefault(e, fresh_edge()) for e in nd.edges)))
        return QuVector([remap[w] for w in wires], frag)

    def expectation(self, *terms, reuse=True):
        """``<psi| O |psi>`` for ``O`` the product of ``(matrix, qubits)`` terms.

        With ``reuse=False`` the bra, operator and ket form one network.
        """
        if len(terms) == 1 and isinstance(terms[0], list):
            terms = tuple(terms[0])
        if not reuse:
            ids, edges = self._counters()
            nodes = self._sandwich_nodes(ids, edges, list(terms))
            return complex(self._contract(nodes, []))
        used = set()
        for _, qubits in terms:
            q = set(self._check_qubits(qubits))
            if used & q:
                raise PreconditionError("term qubit sets must be disjoint")
            used |= q
        psi = self.state()
        return _apply_expectation(psi, terms, self.n)

    def expectation_ps(self, x=(), y=(), z=(), reuse=True):
        """Expectation of a Pauli string given by index lists."""
        terms = _pauli_terms(x, y, z)
        return self.expectation(*terms, reuse=reuse)

    def operator_expectation_network(self, operator):
        """``<psi|O|psi>`` for a QuOperator ``O`` as one contraction."""
        ids, edges = self._counters()
        nodes = self._sandwich_nodes(ids, edges, operator)
        return complex(self._contract(nodes, []))

    def sample(self, rng=None):
        """Draw a bitstring from the Born distribution without collapsing.

        Returns ``(bitstring, probability)`` where ``probability`` is the
        Born probability of the normalized state.
        """
        src = rng if isinstance(rng, StatusSource) else StatusSource(rng or 0)
        psi = self.wavefunction()
        w = np.abs(psi) ** 2
        tot = w.sum()
        if tot <= 0:
            raise PreconditionError("cannot sample from a zero state")
        cum = np.cumsum(w) / tot
        idx = select_branch(cum, src.uniform())
        while w[idx] == 0:  # guard against landing on a zero-weight entry at the edge
            idx -= 1
        return format(idx, f"0{self.n}b"), float(w[idx] / tot)

    def measure(self, *qubits, rng=None):
        """Non-collapsing joint Z measurement of ``qubits``.

        Returns one :class:`MeasurementRecord` per qubit; ``probability`` is
        the marginal probability of the joint outcome.
        """
        if len(qubits) == 1 and isinstance(qubits[0], (list, tuple)):
            qubits = tuple(qubits[0])
        qubits = self._check_qubits(qubits)
        src = rng if isinstance(rng, StatusSource) else StatusSource(rng or 0)
        w = statevec.marginal(self.wavefunction(), qubits, self.n)
        tot = w.sum()
        if tot <= 0:
            raise PreconditionError("cannot measure a zero state")
        idx = select_branch(np.cumsum(w) / tot, src.uniform())
        while w[idx] == 0:
            idx -= 1
        p = float(w[idx] / tot)
        k = len(qubits)
        return [MeasurementRecord(q, (idx >> (k - 1 - j)) & 1, p) for j, q in enumerate(qubits)]

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def to_ir(self):
        from .ir import circuit_to_ir

        return circuit_to_ir(self)

    @staticmethod
    def from_ir(doc):
        from .ir import circuit_from_ir

        return circuit_from_ir(doc)

    def diagram(self):
        """Plain-text wire diagram, one line per qubit and one column per op.

        The op name is written on its first qubit, ``*`` marks its other
        qubits and ``|`` marks wires the op spans without touching.
        """
        labels = {"cond_measure": "M", "post_select": "P"}
        lines = [[f"q{q}: "] for q in range(self.n)]
        width = max(len(line[0]) for line in lines)
        for line in lines:
            line[0] = line[0].ljust(width)
        for op in self.ops:
            label = labels.get(op.kind, op.name)
            if op.kind == "post_select":
                label += str(op.keep)
            lo, hi = min(op.qubits), max(op.qubits)
            w = len(label) + 2
            for q in range(self.n):
                if q == op.qubits[0]:
                    cell = label
                elif q in op.qubits:
                    cell = "*"
                elif lo < q < hi:
                    cell = "|"
                else:
                    cell = ""
                lines[q].append(cell.center(w, "-"))
        return "\n".join("".join(line).rstrip() for line in lines)

    def __repr__(self):
        return f"Circuit(n={self.n}, ops={len(self.ops)})"


def _apply_expectation(psi, terms, n):
    vec = statevec.as_batch(psi)
    for mat, qubits in terms:
        m = as_tensor(mat)
        if m.shape != (1 << len(qubits),) * 2:
            raise DimensionError("term matrix does not match its qubits")
        vec = kernels.apply_matrix(vec, m, list(qubits), n)
    return complex(np.vdot(np.asarray(psi).reshape(-1), vec[0]))


def _gate_method(name):
    def method(self, *qubits, **params):
        return self.apply_gate(name, *qubits, **params)

    method.__name__ = name
    method.__doc__ = f"Append the ``{name}`` gate."
    return method


for _name in list(gates.REGISTRY) + ["exp1", "exp"]:
    setattr(Circuit, _name, _gate_method(_name))
for _name in list(gates.REGISTRY):
    setattr(Circuit, _name.upper(), _gate_method(_name))
Circuit.CNOT = Circuit.cx = _gate_method("cnot")


def channel_from_spec(name, params=None, operators=None):
    if operators is not None:
        return KrausChannel(tuple(as_tensor(k) for k in operators))
    return make_channel(name, params or {})
