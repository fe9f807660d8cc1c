"""Tensor-network graphs, contraction-path search, cost metrics and execution.

A :class:`Network` holds nodes whose axes are labelled by integer edge ids.
An edge shared by two nodes is contracted; an edge carried by a single node is
dangling. A :class:`ContractionPath` lists pairwise contractions; the node
produced by step ``k`` receives id ``path.start_id + k``.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PathError, PreconditionError
from .kernels import METRIC_CODES, subtree_optimal_order
from .tensor import as_tensor


@dataclass
class TensorNode:
    """A tensor with one edge id per axis.

    ``wires`` names the circuit wires the node acts on and ``order`` its
    position in circuit order; both only matter for :func:`preprocess_absorb`.
    Nodes carrying a bond edge (split halves, MPO sites) are never absorbed.
    """

    id: int
    tensor: np.ndarray
    edges: tuple
    wires: tuple = ()
    order: int = 0
    absorbable: bool = False


def _trace_self_loops(tensor, edges):
    edges = list(edges)
    while True:
        seen = {}
        pair = None
        for ax, e in enumerate(edges):
            if e in seen:
                pair = (seen[e], ax)
                break
            seen[e] = ax
        if pair is None:
            return tensor, tuple(edges)
        i, j = pair
        if tensor.shape[i] != tensor.shape[j]:
            raise DimensionError(f"self-loop edge {edges[i]} joins axes of unequal length")
        tensor = np.trace(tensor, axis1=i, axis2=j)
        edges = [e for ax, e in enumerate(edges) if ax not in (i, j)]


class Network:
    """Graph of tensor nodes connected by shared edges.

    Parameters
    ----------
    nodes : iterable of TensorNode
    dangling : sequence of edge ids, optional
        Output axis order of the contracted network. Defaults to the order in
        which dangling edges first appear among nodes sorted by id.
    """

    def __init__(self, nodes, dangling=None):
        self.nodes = {}
        self.edge_dims = {}
        count = {}
        for nd in nodes:
            t = as_tensor(nd.tensor)
            if t.ndim != len(nd.edges):
                raise DimensionError(
                    f"node {nd.id}: tensor rank {t.ndim} but {len(nd.edges)} edges"
                )
            t, edges = _trace_self_loops(t, nd.edges)
            if nd.id in self.nodes:
                raise PreconditionError(f"duplicate node id {nd.id}")
            for e, d in zip(edges, t.shape):
                if self.edge_dims.setdefault(e, d) != d:
                    raise DimensionError(
                        f"edge {e} has dimension {self.edge_dims[e]} and {d}"
                    )
                count[e] = count.get(e, 0) + 1
                if count[e] > 2:
                    raise PreconditionError(f"edge {e} appears on more than two nodes")
            self.nodes[nd.id] = TensorNode(
                nd.id, t, edges, tuple(nd.wires), nd.order, nd.absorbable
            )
        auto = []
        for nid in sorted(self.nodes):
            for e in self.nodes[nid].edges:
                if count[e] == 1:
                    auto.append(e)
        if dangling is None:
            self.dangling = auto
        else:
            dangling = list(dangling)
            if len(set(dangling)) != len(dangling):
                raise PreconditionError("dangling list contains duplicates")
            if set(dangling) != set(auto):
                raise PreconditionError("dangling list does not match the open edges")
            self.dangling = dangling

    def __len__(self):
        return len(self.nodes)

    def copy(self):
        return Network(list(self.nodes.values()), self.dangling)

    def node_edge_sets(self):
        return {nid: nd.edges for nid, nd in self.nodes.items()}

    def signature(self):
        """Hashable structure of the network (edges, dims, output order)."""
        items = tuple(
            (nid, nd.edges, tuple(nd.tensor.shape)) for nid, nd in sorted(self.nodes.items())
        )
        return items, tuple(self.dangling)


@dataclass(frozen=True)
class ContractionPath:
    """Ordered pairwise contractions; step ``k`` creates node ``start_id + k``."""

    steps: tuple
    start_id: int

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class PathMetrics:
    log10_flops: float
    log2_size: float
    log2_write: float
    flops: int = 0
    write: int = 0
    size: int = 0

    def as_dict(self):
        return {
            "log10_flops": self.log10_flops,
            "log2_size": self.log2_size,
            "log2_write": self.log2_write,
        }


def _size(edges, dims):
    s = 1
    for e in edges:
        s *= dims[e]
    return s


def _merge_edges(ea, eb):
    sb = set(eb)
    sa = set(ea)
    return tuple(e for e in ea if e not in sb) + tuple(e for e in eb if e not in sa)


def greedy_path(net):
    """Greedy pairwise contraction order.

    At each step the connected pair minimizing ``size(result) - size(a) -
    size(b)`` is contracted; ties go to the lexicographically lowest id pair.
    Disconnected components are finally combined by outer products in id
    order.
    """
    if len(net.nodes) == 0:
        raise PreconditionError("cannot find a path for an empty network")
    dims = net.edge_dims
    edges = {nid: nd.edges for nid, nd in net.nodes.items()}
    sizes = {nid: _size(e, dims) for nid, e in edges.items()}
    owners = {}
    for nid, es in edges.items():
        for e in es:
            owners.setdefault(e, set()).add(nid)
    next_id = max(net.nodes) + 1
    start = next_id
    heap = []

    def push(a, b):
        if a > b:
            a, b = b, a
        out = _merge_edges(edges[a], edges[b])
        cost = _size(out, dims) - sizes[a] - sizes[b]
        heapq.heappush(heap, (cost, a, b))

    seen = set()
    for e, own in owners.items():
        if len(own) == 2:
            a, b = sorted(own)
            if (a, b) not in seen:
                seen.add((a, b))
                push(a, b)
    steps = []
    while heap:
        cost, a, b = heapq.heappop(heap)
        if a not in edges or b not in edges:
            continue
        out = _merge_edges(edges[a], edges[b])
        new = next_id
        next_id += 1
        steps.append((a, b))
        for nid in (a, b):
            for e in edges[nid]:
                owners[e].discard(nid)
            del edges[nid]
            del sizes[nid]
        edges[new] = out
        sizes[new] = _size(out, dims)
        neigh = set()
        for e in out:
            neigh |= owners[e]
            owners[e].add(new)
        for m in sorted(neigh):
            push(m, new)
    rest = sorted(edges)
    if len(rest) > 1:
        acc = rest[0]
        for nid in rest[1:]:
            steps.append((acc, nid))
            acc = next_id
            next_id += 1
    return ContractionPath(tuple(steps), start)


def _replay(net, path):
    """Yield ``(edges_a, edges_b, edges_out)`` for every step, validating it."""
    edges = {nid: nd.edges for nid, nd in net.nodes.items()}
    if path.start_id <= max(net.nodes, default=-1):
        raise PathError("path start_id collides with existing node ids")
    for k, (a, b) in enumerate(path.steps):
        if a == b or a not in edges or b not in edges:
            raise PathError(f"step {k} references a dead or unknown node ({a}, {b})")
        ea, eb = edges.pop(a), edges.pop(b)
        out = _merge_edges(ea, eb)
        edges[path.start_id + k] = out
        yield ea, eb, out
    if len(edges) != 1:
        raise PathError(f"path leaves {len(edges)} nodes instead of one")


def path_metrics(net, path):
    """FLOPs, WRITE and SIZE of contracting ``net`` along ``path``.

    FLOPs counts, per step, the product of all distinct edge dimensions
    touched by the pair. WRITE sums the element counts of every produced
    intermediate and SIZE is the largest of them. Logs are taken of
    ``max(1, value)`` so a step-free path reports zeros.
    """
    dims = net.edge_dims
    flops = write = size = 0
    for ea, eb, out in _replay(net, path):
        flops += _size(set(ea) | set(eb), dims)
        s = _size(out, dims)
        write += s
        size = max(size, s)
    return PathMetrics(
        log10_flops=math.log10(max(flops, 1)),
        log2_size=math.log2(max(size, 1)),
        log2_write=math.log2(max(write, 1)),
        flops=flops,
        write=write,
        size=size,
    )


def contract_with_path(net, path):
    """Contract ``net`` along ``path``; result axes follow ``net.dangling``."""
    tensors = {nid: (nd.tensor, nd.edges) for nid, nd in net.nodes.items()}
    for k, (ea, eb, out) in enumerate(_replay(net, path)):
        a, b = path.steps[k]
        ta, _ = tensors.pop(a)
        tb, _ = tensors.pop(b)
        sb = set(eb)
        shared = [e for e in ea if e in sb]
        ax_a = [ea.index(e) for e in shared]
        ax_b = [eb.index(e) for e in shared]
        tensors[path.start_id + k] = (np.tensordot(ta, tb, axes=(ax_a, ax_b)), out)
    (t, edges), = tensors.values()
    if set(edges) != set(net.dangling):
        raise DimensionError("final tensor edges differ from the dangling list")
    perm = [edges.index(e) for e in net.dangling]
    return np.ascontiguousarray(np.transpose(t, perm)) if perm else t.reshape(())


_PATH_CACHE = {}
_PATH_CACHE_LIMIT = 256


def contract(net, path=None, use_cache=True):
    """Contract ``net`` with ``path`` or a cached greedy path."""
    if path is None:
        if use_cache:
            key = net.signature()
            path = _PATH_CACHE.get(key)
            if path is None:
                path = greedy_path(net)
                if len(_PATH_CACHE) >= _PATH_CACHE_LIMIT:
                    _PATH_CACHE.pop(next(iter(_PATH_CACHE)))
                _PATH_CACHE[key] = path
        else:
            path = greedy_path(net)
    return contract_with_path(net, path)


def _neighbours(edges_of, owners, nid):
    out = set()
    for e in edges_of[nid]:
        out |= owners[e]
    out.discard(nid)
    return out


def preprocess_absorb(net):
    """Absorb every single-wire node into an adjacent node.

    A node marked ``absorbable`` (it acts on exactly one wire and carries no
    bond) is contracted into a neighbouring anchor node, preferring the
    nearest later one in circuit order and otherwise the nearest earlier one.
    Absorbable nodes with no anchor neighbour merge with each other in the
    same preference order. The surviving node keeps its id and circuit position.
    """
    nodes = {nid: TensorNode(nd.id, nd.tensor, nd.edges, nd.wires, nd.order, nd.absorbable)
             for nid, nd in net.nodes.items()}
    owners = {}
    for nid, nd in nodes.items():
        for e in nd.edges:
            owners.setdefault(e, set()).add(nid)
    edges_of = {nid: nd.edges for nid, nd in nodes.items()}

    def pick(src, cands):
        later = [c for c in cands if nodes[c].order > src.order]
        if later:
            return min(later, key=lambda c: (nodes[c].order, c))
        return max(cands, key=lambda c: (nodes[c].order, -c))

    changed = True
    while changed:
        changed = False
        for nid in sorted(nodes, key=lambda i: (nodes[i].order, i)):
            if nid not in nodes or not nodes[nid].absorbable:
                continue
            neigh = _neighbours(edges_of, owners, nid)
            if not neigh:
                continue
            anchors = [m for m in neigh if not nodes[m].absorbable]
            target = pick(nodes[nid], anchors if anchors else list(neigh))
            src, dst = nodes.pop(nid), nodes[target]
            shared = [e for e in dst.edges if e in set(src.edges)]
            t = np.tensordot(
                dst.tensor,
                src.tensor,
                axes=([dst.edges.index(e) for e in shared], [src.edges.index(e) for e in shared]),
            )
            new_edges = _merge_edges(dst.edges, src.edges)
            for e in src.edges:
                owners[e].discard(nid)
            for e in shared:
                owners[e].discard(target)
            for e in new_edges:
                owners[e].add(target)
            del edges_of[nid]
            edges_of[target] = new_edges
            nodes[target] = TensorNode(
                target, t, new_edges, dst.wires, dst.order, dst.absorbable
            )
            changed = True
    return Network(list(nodes.values()), net.dangling)


# ---------------------------------------------------------------------------
# subtree reconfiguration
# ---------------------------------------------------------------------------


@dataclass
class _Tree:
    children: dict = field(default_factory=dict)  # internal id -> (left, right)
    edges: dict = field(default_factory=dict)  # node id -> frozenset of edges
    leaves: tuple = ()
    root: int = -1
    next_id: int = 0


def _tree_from_path(net, path):
    tree = _Tree()
    tree.leaves = tuple(sorted(net.nodes))
    for nid, nd in net.nodes.items():
        tree.edges[nid] = frozenset(nd.edges)
    nid = tree.leaves[-1]
    for k, (a, b) in enumerate(path.steps):
        nid = path.start_id + k
        tree.children[nid] = (a, b)
        tree.edges[nid] = tree.edges[a] ^ tree.edges[b]
    tree.root = nid
    tree.next_id = path.start_id + len(path.steps)
    return tree


def _path_from_tree(tree, start_id):
    steps = []
    remap = {leaf: leaf for leaf in tree.leaves}
    minleaf = {}

    def low(nid):
        if nid in minleaf:
            return minleaf[nid]
        if nid not in tree.children:
            minleaf[nid] = nid
        else:
            a, b = tree.children[nid]
            minleaf[nid] = min(low(a), low(b))
        return minleaf[nid]

    stack = [(tree.root, False)]
    while stack:
        nid, done = stack.pop()
        if nid not in tree.children:
            continue
        a, b = tree.children[nid]
        if done:
            steps.append((remap[a], remap[b]))
            remap[nid] = start_id + len(steps) - 1
        else:
            first, second = sorted((a, b), key=low)
            stack.append((nid, True))
            stack.append((second, False))
            stack.append((first, False))
    return ContractionPath(tuple(steps), start_id)


def _step_cost(ea, eb, out, dims, metric):
    s = _size(out, dims)
    if metric == "size":
        return s
    f = _size(ea | eb, dims)
    if metric == "flops":
        return f
    if metric == "write":
        return s
    return f + 64 * s


def _local_cost(tree, internal, dims, metric):
    vals = []
    for nid in internal:
        a, b = tree.children[nid]
        vals.append(_step_cost(tree.edges[a], tree.edges[b], tree.edges[nid], dims, metric))
    if metric == "size":
        return max(vals)
    return sum(vals)


def path_cost(net, path, metric):
    """Scalar value of ``metric`` for ``path`` (exact integer arithmetic)."""
    if metric not in METRIC_CODES:
        raise PreconditionError(f"unknown metric {metric!r}")
    m = path_metrics(net, path)
    return {"flops": m.flops, "write": m.write, "size": m.size,
            "combo": m.flops + 64 * m.write}[metric]


def _grow_subtree(tree, root, max_leaves, dims, rng):
    frontier = list(tree.children[root])
    internal = [root]
    while len(frontier) < max_leaves:
        expandable = [x for x in frontier if x in tree.children]
        if not expandable:
            break
        weights = np.array([_size(tree.edges[x], dims) for x in expandable], dtype=float)
        best = np.flatnonzero(weights == weights.max())
        pick = expandable[int(best[rng.integers(len(best))])]
        frontier.remove(pick)
        frontier.extend(tree.children[pick])
        internal.append(pick)
    return frontier, internal


def _optimal_local(tree, frontier, dims, metric):
    local_edges = sorted(set().union(*(tree.edges[f] for f in frontier)))
    index = {e: i for i, e in enumerate(local_edges)}
    words = max(1, (len(local_edges) + 63) // 64)
    masks = np.zeros((len(frontier), words), dtype=np.uint64)
    for r, f in enumerate(frontier):
        for e in tree.edges[f]:
            i = index[e]
            masks[r, i // 64] |= np.uint64(1) << np.uint64(i % 64)
    log2dims = np.zeros(words * 64)
    for e, i in index.items():
        log2dims[i] = math.log2(dims[e])
    return subtree_optimal_order(masks, log2dims, metric)


def _install(tree, frontier, best, internal):
    for nid in internal:
        del tree.children[nid]
        if nid != internal[0]:
            del tree.edges[nid]
    root = internal[0]
    full = (1 << len(frontier)) - 1

    def build(mask, nid):
        if mask & (mask - 1) == 0:
            return frontier[mask.bit_length() - 1]
        left = int(best[mask])
        right = mask ^ left
        if nid is None:
            nid = tree.next_id
            tree.next_id += 1
        a = build(left, None)
        b = build(right, None)
        tree.children[nid] = (a, b)
        tree.edges[nid] = tree.edges[a] ^ tree.edges[b]
        return nid

    build(full, root)


def subtree_reconfigure(net, path, subtree_size=8, rounds=1, minimize="combo", seed=0,
                        max_time=None):
    """Locally re-optimize a contraction path.

    Every pass visits the internal nodes of the contraction tree in a seeded
    random order, grows a subtree of at most ``subtree_size`` leaves below
    each one (always expanding the largest intermediate) and replaces it with
    the exhaustive optimum of ``minimize`` if that is strictly cheaper. The
    minimized metric therefore never increases.

    Parameters
    ----------
    minimize : {"flops", "write", "size", "combo"}
        ``combo`` is ``flops + 64 * write``.
    max_time : float, optional
        Wall-clock budget in seconds; the search stops early once exceeded.
    """
    import time

    if minimize not in METRIC_CODES:
        raise PreconditionError(f"unknown metric {minimize!r}")
    if not 3 <= int(subtree_size) <= 10:
        raise PreconditionError("subtree_size must lie in [3, 10]")
    if rounds <= 0 or len(path.steps) < 2:
        return path
    t0 = time.perf_counter()
    dims = net.edge_dims
    tree = _tree_from_path(net, path)
    rng = np.random.default_rng(seed)
    for _ in range(int(rounds)):
        order = list(tree.children)
        rng.shuffle(order)
        for nid in order:
            if nid not in tree.children:
                continue
            if max_time is not None and time.perf_counter() - t0 > max_time:
                break
            frontier, internal = _grow_subtree(tree, nid, subtree_size, dims, rng)
            if len(frontier) < 3:
                continue
            current = _local_cost(tree, internal, dims, minimize)
            cost, best = _optimal_local(tree, frontier, dims, minimize)
            if cost < current * (1 - 1e-9):
                _install(tree, frontier, best, internal)
    new = _path_from_tree(tree, path.start_id)
    # guard against float round-off in the local search
    if path_cost(net, new, minimize) > path_cost(net, path, minimize):
        return path
    return new
