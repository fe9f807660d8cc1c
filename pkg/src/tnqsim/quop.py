"""Matrix- and vector-like tensor networks (MPO/MPS and friends).

A :class:`QuOperator` is a tensor-network fragment with two ordered lists of
dangling edges: ``out_edges`` index rows and ``in_edges`` index columns.
:class:`QuVector` has no ``in_edges`` and :class:`QuAdjointVector` has no
``out_edges``. Algebra (``@``, ``|``, scalar ``*``, adjoint, partial trace)
copies fragments with fresh edge ids and never contracts anything; only
:meth:`QuOperator.eval` and :meth:`QuOperator.eval_matrix` do.

The small builder below mirrors the usual node/edge workflow::

    n1, n2 = Node(np.ones([2, 2])), Node(np.ones([2]))
    n1[1] ^ n2[0]
    v = QuVector([n1[0]])
"""

import itertools

import numpy as np

from .errors import CapExceededError, DimensionError, PreconditionError
from .network import Network, TensorNode, greedy_path, contract_with_path
from .tensor import as_tensor, svd_split  # noqa: F401  (svd_split re-exported for MPO users)

EVAL_CAP = 1 << 26

_edge_counter = itertools.count(1)


def fresh_edge():
    return next(_edge_counter)


# ---------------------------------------------------------------------------
# node / edge builder
# ---------------------------------------------------------------------------


class EdgeRef:
    """Axis ``axis`` of ``node``; ``a ^ b`` connects two axes."""

    __slots__ = ("node", "axis")

    def __init__(self, node, axis):
        self.node = node
        self.axis = axis

    @property
    def id(self):
        return self.node.edge_ids[self.axis]

    @property
    def dim(self):
        return self.node.tensor.shape[self.axis]

    def __xor__(self, other):
        if self.dim != other.dim:
            raise DimensionError(f"cannot connect axes of length {self.dim} and {other.dim}")
        other.node.edge_ids[other.axis] = self.id
        self.node.links.add(other.node)
        other.node.links.add(self.node)
        return self


class Node:
    """A tensor whose axes get fresh edge ids until connected."""

    def __init__(self, tensor):
        self.tensor = as_tensor(tensor)
        self.edge_ids = [fresh_edge() for _ in range(self.tensor.ndim)]
        self.links = set()

    def __getitem__(self, axis):
        if not -self.tensor.ndim <= axis < self.tensor.ndim:
            raise IndexError(f"axis {axis} out of range")
        return EdgeRef(self, axis % self.tensor.ndim)

    __hash__ = object.__hash__


def _collect(edge_refs):
    seen = []
    stack = [r.node for r in edge_refs]
    while stack:
        nd = stack.pop()
        if any(nd is s for s in seen):
            continue
        seen.append(nd)
        stack.extend(nd.links)
    return tuple((nd.tensor, tuple(nd.edge_ids)) for nd in seen)


# ---------------------------------------------------------------------------
# fragments
# ---------------------------------------------------------------------------


def _edge_dims(nodes):
    dims = {}
    for t, edges in nodes:
        for e, d in zip(edges, t.shape):
            dims[e] = d
    return dims


class QuOperator:
    """Tensor network behaving as a matrix.

    Parameters
    ----------
    out_edges, in_edges : sequences
        Either :class:`EdgeRef` objects (the fragment is discovered from the
        connected nodes) or raw edge ids when ``nodes`` is given.
    nodes : sequence of ``(tensor, edge_ids)``, optional
    """

    def __init__(self, out_edges, in_edges=(), nodes=None):
        out_edges = list(out_edges)
        in_edges = list(in_edges)
        if nodes is None:
            refs = out_edges + in_edges
            nodes = _collect(refs)
            out_edges = [r.id for r in out_edges]
            in_edges = [r.id for r in in_edges]
        self.nodes = tuple((as_tensor(t), tuple(e)) for t, e in nodes)
        self.out_edges = tuple(out_edges)
        self.in_edges = tuple(in_edges)
        self._check()

    def _check(self):
        dims = _edge_dims(self.nodes)
        count = {}
        for _, edges in self.nodes:
            for e in edges:
                count[e] = count.get(e, 0) + 1
        open_edges = self.out_edges + self.in_edges
        if len(set(open_edges)) != len(open_edges):
            raise PreconditionError("an edge is listed twice among out/in edges")
        for e in open_edges:
            if count.get(e) != 1:
                raise PreconditionError(f"edge {e} is not a dangling edge of the fragment")
        for e, c in count.items():
            if c == 1 and e not in open_edges:
                raise PreconditionError(f"edge {e} dangles but is neither out nor in")
        self._dims = dims

    # -- shape -------------------------------------------------------------
    @property
    def out_dims(self):
        return tuple(self._dims[e] for e in self.out_edges)

    @property
    def in_dims(self):
        return tuple(self._dims[e] for e in self.in_edges)

    @property
    def shape(self):
        return (int(np.prod(self.out_dims, dtype=np.int64)), int(np.prod(self.in_dims, dtype=np.int64)))

    @property
    def node_count(self):
        return len(self.nodes)

    def element_count(self):
        return sum(t.size for t, _ in self.nodes)

    # -- construction helpers ---------------------------------------------
    @classmethod
    def _make(cls, nodes, out_edges, in_edges):
        if out_edges and in_edges:
            kind = QuOperator
        elif out_edges:
            kind = QuVector
        elif in_edges:
            kind = QuAdjointVector
        else:
            kind = QuScalar
        obj = QuOperator.__new__(kind)
        QuOperator.__init__(obj, out_edges, in_edges, nodes)
        return obj

    def copy(self):
        """Same fragment with fresh edge ids (tensor storage is shared)."""
        mapping = {}

        def m(e):
            if e not in mapping:
                mapping[e] = fresh_edge()
            return mapping[e]

        nodes = tuple((t, tuple(m(e) for e in edges)) for t, edges in self.nodes)
        return QuOperator._make(
            nodes, [m(e) for e in self.out_edges], [m(e) for e in self.in_edges]
        )

    @classmethod
    def identity(cls, dims):
        """Identity operator built from one ``eye`` node per site."""
        nodes, outs, ins = [], [], []
        for d in dims:
            o, i = fresh_edge(), fresh_edge()
            nodes.append((np.eye(d, dtype=np.complex128), (o, i)))
            outs.append(o)
            ins.append(i)
        return QuOperator._make(nodes, outs, ins)

    @classmethod
    def from_tensor(cls, tensor, n_out):
        """Single-node operator whose first ``n_out`` axes are outputs."""
        t = as_tensor(tensor)
        edges = tuple(fresh_edge() for _ in range(t.ndim))
        return QuOperator._make([(t, edges)], edges[:n_out], edges[n_out:])

    # -- algebra -------------------------------------------------------------
    def adjoint(self):
        """Conjugate transpose: conjugated tensors, out and in swapped."""
        c = self.copy()
        nodes = tuple((t.conj(), e) for t, e in c.nodes)
        return QuOperator._make(nodes, c.in_edges, c.out_edges)

    def __matmul__(self, other):
        if not isinstance(other, QuOperator):
            return NotImplemented
        if self.in_dims != other.out_dims:
            raise DimensionError(
                f"cannot multiply: in dims {self.in_dims} vs out dims {other.out_dims}"
            )
        a = self.copy()
        b = other.copy()
        rename = dict(zip(b.out_edges, a.in_edges))
        b_nodes = tuple((t, tuple(rename.get(e, e) for e in edges)) for t, edges in b.nodes)
        return QuOperator._make(a.nodes + b_nodes, a.out_edges, b.in_edges)

    def __mul__(self, s):
        if isinstance(s, QuOperator):
            return NotImplemented
        c = self.copy()
        scalar = np.asarray(complex(s), dtype=np.complex128).reshape(())
        return QuOperator._make(c.nodes + ((scalar, ()),), c.out_edges, c.in_edges)

    __rmul__ = __mul__

    def tensor_product(self, other):
        a = self.copy()
        b = other.copy()
        return QuOperator._make(
            a.nodes + b.nodes, a.out_edges + b.out_edges, a.in_edges + b.in_edges
        )

    def __or__(self, other):
        if not isinstance(other, QuOperator):
            return NotImplemented
        return self.tensor_product(other)

    def partial_trace(self, sites):
        """Trace out the listed sites (positions in ``out_edges``/``in_edges``)."""
        sites = sorted({int(s) for s in sites})
        nsite = len(self.out_edges)
        if len(self.in_edges) != nsite:
            raise PreconditionError("partial trace needs equally many out and in edges")
        for s in sites:
            if not 0 <= s < nsite:
                raise PreconditionError(f"site {s} out of range")
            if self.out_dims[s] != self.in_dims[s]:
                raise DimensionError(f"site {s} is not square")
        c = self.copy()
        rename = {c.in_edges[s]: c.out_edges[s] for s in sites}
        nodes = tuple((t, tuple(rename.get(e, e) for e in edges)) for t, edges in c.nodes)
        keep = [s for s in range(nsite) if s not in sites]
        return QuOperator._make(
            nodes, [c.out_edges[s] for s in keep], [c.in_edges[s] for s in keep]
        )

    # -- evaluation ------------------------------------------------------------
    def to_network(self, id_offset=0):
        nodes = [TensorNode(id_offset + k, t, e) for k, (t, e) in enumerate(self.nodes)]
        return Network(nodes, list(self.out_edges) + list(self.in_edges))

    def eval(self):
        """Contract the fragment; axes are out edges then in edges."""
        total = int(np.prod(self.out_dims + self.in_dims, dtype=np.int64))
        if total > EVAL_CAP:
            raise CapExceededError(f"dense form has {total} elements (cap {EVAL_CAP})")
        if not self.nodes:
            return np.ones((), dtype=np.complex128)
        net = self.to_network()
        return contract_with_path(net, greedy_path(net))

    def eval_matrix(self):
        """Contract and reshape to ``(prod out dims, prod in dims)``."""
        return self.eval().reshape(self.shape)

    def __repr__(self):
        return (f"{type(self).__name__}(out_dims={self.out_dims}, in_dims={self.in_dims}, "
                f"nodes={self.node_count})")


class QuVector(QuOperator):
    """Column vector: only ``out_edges``."""

    def __init__(self, edges, nodes=None):
        super().__init__(edges, (), nodes)


class QuAdjointVector(QuOperator):
    """Row vector: only ``in_edges``."""

    def __init__(self, edges, nodes=None):
        super().__init__((), edges, nodes)


class QuScalar(QuOperator):
    """Fully contracted network."""

    def __init__(self, nodes=()):
        super().__init__((), (), nodes)


# ---------------------------------------------------------------------------
# MPO / MPS
# ---------------------------------------------------------------------------


class MPOOperator(QuOperator):
    """Matrix product operator from site tensors ``(bond_left, out, in, bond_right)``.

    The boundary bonds must have dimension 1; they are squeezed away inside
    the network fragment but kept in :attr:`site_tensors`.
    """

    def __init__(self, site_tensors):
        tensors = [as_tensor(w) for w in site_tensors]
        if not tensors:
            raise PreconditionError("an MPO needs at least one site")
        for k, w in enumerate(tensors):
            if w.ndim != 4:
                raise DimensionError(f"site {k} must have rank 4, got {w.ndim}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise DimensionError("boundary bonds of an MPO must have dimension 1")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[3] != tensors[k + 1].shape[0]:
                raise DimensionError(f"bond between sites {k} and {k + 1} mismatches")
        self.site_tensors = tuple(tensors)
        bonds = [fresh_edge() for _ in range(len(tensors) + 1)]
        nodes, outs, ins = [], [], []
        for k, w in enumerate(tensors):
            o, i = fresh_edge(), fresh_edge()
            t, edges = w, [bonds[k], o, i, bonds[k + 1]]
            if k == len(tensors) - 1:
                t, edges = t[..., 0], edges[:3]
            if k == 0:
                t, edges = t[0], edges[1:]
            nodes.append((np.ascontiguousarray(t), tuple(edges)))
            outs.append(o)
            ins.append(i)
        super().__init__(outs, ins, nodes)

    @property
    def n_sites(self):
        return len(self.site_tensors)

    def bond_dimensions(self):
        return [w.shape[3] for w in self.site_tensors[:-1]]

    def storage(self):
        """Number of stored complex elements over all site tensors."""
        return sum(w.size for w in self.site_tensors)

    def to_dense(self):
        return self.eval_matrix()


def mps_vector(site_tensors):
    """:class:`QuVector` from MPS site tensors ``(bond_left, phys, bond_right)``.

    Rank-1 tensors are accepted as product-state sites.
    """
    tensors = []
    for w in site_tensors:
        w = as_tensor(w)
        if w.ndim == 1:
            w = w.reshape(1, -1, 1)
        if w.ndim != 3:
            raise DimensionError("MPS sites must have rank 1 or 3")
        tensors.append(w)
    if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
        raise DimensionError("boundary bonds of an MPS must have dimension 1")
    bonds = [fresh_edge() for _ in range(len(tensors) + 1)]
    nodes, outs = [], []
    for k, w in enumerate(tensors):
        if k + 1 < len(tensors) and w.shape[2] != tensors[k + 1].shape[0]:
            raise DimensionError(f"bond between sites {k} and {k + 1} mismatches")
        p = fresh_edge()
        t, edges = w, [bonds[k], p, bonds[k + 1]]
        if k == len(tensors) - 1:
            t, edges = t[..., 0], edges[:2]
        if k == 0:
            t, edges = t[0], edges[1:]
        nodes.append((np.ascontiguousarray(t), tuple(edges)))
        outs.append(p)
    vec = QuVector(outs, nodes)
    vec.site_tensors = tuple(tensors)
    return vec


def mpo_from_dense(matrix, n_sites, max_bond=None, cutoff=1e-13):
    """Exact (or truncated) MPO of a ``2**n x 2**n`` matrix by sequential SVD."""
    m = as_tensor(matrix)
    d = 1 << n_sites
    if m.shape != (d, d):
        raise DimensionError(f"expected a {d}x{d} matrix")
    t = m.reshape((2,) * (2 * n_sites))
    # interleave (o0, i0, o1, i1, ...)
    perm = [x for k in range(n_sites) for x in (k, n_sites + k)]
    rest = np.transpose(t, perm).reshape(1, -1)
    sites = []
    bond = 1
    for k in range(n_sites - 1):
        rest = rest.reshape(bond * 4, -1)
        u, s, vh = np.linalg.svd(rest, full_matrices=False)
        keep = max(1, int(np.count_nonzero(s > cutoff * max(s[0], 1e-300))))
        if max_bond is not None:
            keep = min(keep, int(max_bond))
        sites.append(u[:, :keep].reshape(bond, 2, 2, keep))
        rest = s[:keep, None] * vh[:keep]
        bond = keep
    sites.append(rest.reshape(bond, 2, 2, 1))
    return MPOOperator(sites)


def reduced_density_matrix(state, cut):
    """Partial trace of ``|state><state|`` over the qubits listed in ``cut``.

    The trace of the result equals the squared norm of ``state``.
    """
    psi = as_tensor(state).reshape(-1)
    n = psi.size.bit_length() - 1
    if 1 << n != psi.size:
        raise DimensionError("state length must be a power of two")
    cut = sorted({int(q) for q in cut})
    if any(q < 0 or q >= n for q in cut):
        raise PreconditionError(f"cut indices must lie in [0, {n})")
    if len(cut) >= n:
        raise PreconditionError("cannot trace out every qubit")
    keep = [q for q in range(n) if q not in cut]
    t = psi.reshape((2,) * n)
    t = np.transpose(t, keep + cut).reshape(1 << len(keep), 1 << len(cut))
    return t @ t.conj().T
