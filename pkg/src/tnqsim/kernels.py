"""Hot numeric kernels with a numba and a pure-numpy implementation each.

Every public kernel here dispatches to the numba version when
:data:`tnqsim._accel.USE_NUMBA` is true, otherwise to the numpy version.
Both implementations stay importable (``*_nb`` / ``*_np``) so they can be
cross-checked and benchmarked against each other.

Conventions: a batch of state vectors is a C-contiguous ``(batch, 2**n)``
complex128 array; qubit ``q`` of an ``n``-qubit register lives on bit
``n - 1 - q`` of the basis index (qubit 0 is the most significant bit).
"""

import numpy as np

from ._accel import USE_NUMBA, njit


def bit_position(qubit, n):
    return n - 1 - qubit


# ---------------------------------------------------------------------------
# applying a dense 2**k x 2**k matrix to k qubits of a batch of states
# ---------------------------------------------------------------------------


@njit
def _apply_1q_nb(states, mat, pos):
    nb, dim = states.shape
    out = np.empty_like(states)
    step = 1 << pos
    lowmask = step - 1
    m00 = mat[0, 0]
    m01 = mat[0, 1]
    m10 = mat[1, 0]
    m11 = mat[1, 1]
    for b in range(nb):
        for t in range(dim >> 1):
            i = ((t >> pos) << (pos + 1)) | (t & lowmask)
            j = i | step
            a0 = states[b, i]
            a1 = states[b, j]
            out[b, i] = m00 * a0 + m01 * a1
            out[b, j] = m10 * a0 + m11 * a1
    return out


@njit
def _apply_2q_nb(states, mat, pos_hi, pos_lo):
    # pos_hi: bit of the qubit that is most significant in the matrix index
    nb, dim = states.shape
    out = np.empty_like(states)
    s_hi = 1 << pos_hi
    s_lo = 1 << pos_lo
    p1 = min(pos_hi, pos_lo)
    p2 = max(pos_hi, pos_lo)
    buf = np.empty(4, np.complex128)
    for b in range(nb):
        for t in range(dim >> 2):
            base = ((t >> p1) << (p1 + 1)) | (t & ((1 << p1) - 1))
            base = ((base >> p2) << (p2 + 1)) | (base & ((1 << p2) - 1))
            i0 = base
            i1 = base | s_lo
            i2 = base | s_hi
            i3 = base | s_hi | s_lo
            buf[0] = states[b, i0]
            buf[1] = states[b, i1]
            buf[2] = states[b, i2]
            buf[3] = states[b, i3]
            for r in range(4):
                acc = mat[r, 0] * buf[0] + mat[r, 1] * buf[1]
                acc += mat[r, 2] * buf[2] + mat[r, 3] * buf[3]
                if r == 0:
                    out[b, i0] = acc
                elif r == 1:
                    out[b, i1] = acc
                elif r == 2:
                    out[b, i2] = acc
                else:
                    out[b, i3] = acc
    return out


@njit
def _apply_kq_nb(states, mat, positions):
    nb, dim = states.shape
    k = positions.shape[0]
    m = 1 << k
    offs = np.zeros(m, np.int64)
    for loc in range(m):
        o = 0
        for j in range(k):
            if (loc >> (k - 1 - j)) & 1:
                o |= 1 << positions[j]
        offs[loc] = o
    sorted_pos = np.sort(positions)
    out = np.empty_like(states)
    buf = np.empty(m, np.complex128)
    for b in range(nb):
        for t in range(dim >> k):
            base = t
            for p in sorted_pos:
                base = ((base >> p) << (p + 1)) | (base & ((1 << p) - 1))
            for c in range(m):
                buf[c] = states[b, base + offs[c]]
            for r in range(m):
                acc = 0j
                for c in range(m):
                    acc += mat[r, c] * buf[c]
                out[b, base + offs[r]] = acc
    return out


def apply_matrix_nb(states, mat, qubits, n):
    mat = np.ascontiguousarray(mat, dtype=np.complex128)
    states = np.ascontiguousarray(states, dtype=np.complex128)
    pos = [bit_position(q, n) for q in qubits]
    if len(pos) == 1:
        return _apply_1q_nb(states, mat, pos[0])
    if len(pos) == 2:
        return _apply_2q_nb(states, mat, pos[0], pos[1])
    return _apply_kq_nb(states, mat, np.asarray(pos, dtype=np.int64))


def apply_matrix_np(states, mat, qubits, n):
    nb = states.shape[0]
    k = len(qubits)
    psi = np.asarray(states, dtype=np.complex128).reshape((nb,) + (2,) * n)
    gate = np.asarray(mat, dtype=np.complex128).reshape((2,) * (2 * k))
    axes = [1 + q for q in qubits]
    res = np.tensordot(psi, gate, axes=(axes, list(range(k, 2 * k))))
    res = np.moveaxis(res, list(range(res.ndim - k, res.ndim)), axes)
    return np.ascontiguousarray(res.reshape(nb, -1))


def apply_matrix(states, mat, qubits, n):
    """Return ``mat`` applied to ``qubits`` of every row of ``states``.

    ``mat`` is indexed with ``qubits[0]`` as its most significant bit.
    The input array is never modified.
    """
    if not qubits:
        return np.array(states, dtype=np.complex128) * np.asarray(mat).reshape(())
    if USE_NUMBA:
        return apply_matrix_nb(states, mat, qubits, n)
    return apply_matrix_np(states, mat, qubits, n)


# ---------------------------------------------------------------------------
# Pauli strings
# ---------------------------------------------------------------------------


@njit
def _popcount_parity(x):
    p = 0
    while x:
        x &= x - 1
        p ^= 1
    return p


@njit
def _pauli_expectation_nb(psi, xmask, yzmask):
    acc = 0j
    for r in range(psi.shape[0]):
        v = np.conj(psi[r]) * psi[r ^ xmask]
        if _popcount_parity(r & yzmask):
            acc -= v
        else:
            acc += v
    return acc


def _parity_np(x):
    return np.bitwise_count(x).astype(np.int64) & 1


def _pauli_expectation_np(psi, xmask, yzmask):
    r = np.arange(psi.shape[0], dtype=np.int64)
    sign = 1 - 2 * _parity_np(r & yzmask)
    return complex(np.sum(np.conj(psi) * psi[r ^ xmask] * sign))


def pauli_masks(codes):
    """Bit masks ``(xmask, yzmask, ny)`` of a Pauli structure (0=I,1=X,2=Y,3=Z)."""
    n = len(codes)
    xmask = yzmask = 0
    ny = 0
    for q, c in enumerate(codes):
        bit = 1 << bit_position(q, n)
        if c in (1, 2):
            xmask |= bit
        if c in (2, 3):
            yzmask |= bit
        if c == 2:
            ny += 1
    return xmask, yzmask, ny


def pauli_expectation(psi, codes):
    """``<psi|P|psi>`` for the Pauli string with structure ``codes``."""
    xmask, yzmask, ny = pauli_masks(codes)
    psi = np.ascontiguousarray(psi, dtype=np.complex128).reshape(-1)
    if USE_NUMBA:
        val = _pauli_expectation_nb(psi, np.int64(xmask), np.int64(yzmask))
    else:
        val = _pauli_expectation_np(psi, xmask, yzmask)
    return complex(val) * (-1j) ** ny


def pauli_row_values(codes, weight=1.0):
    """Column index and value of the single nonzero entry in every row."""
    xmask, yzmask, ny = pauli_masks(codes)
    r = np.arange(1 << len(codes), dtype=np.int64)
    sign = 1 - 2 * _parity_np(r & yzmask)
    return r ^ xmask, (weight * (-1j) ** ny) * sign.astype(np.complex128)


# ---------------------------------------------------------------------------
# sparse COO matrix-vector product
# ---------------------------------------------------------------------------


@njit
def _coo_matvec_nb(rows, cols, vals, vec, dim):
    out = np.zeros(dim, np.complex128)
    for k in range(rows.shape[0]):
        out[rows[k]] += vals[k] * vec[cols[k]]
    return out


def _coo_matvec_np(rows, cols, vals, vec, dim):
    prod = vals * vec[cols]
    re = np.bincount(rows, weights=prod.real, minlength=dim)
    im = np.bincount(rows, weights=prod.imag, minlength=dim)
    return re + 1j * im


def coo_matvec(rows, cols, vals, vec, dim):
    vec = np.ascontiguousarray(vec, dtype=np.complex128)
    if USE_NUMBA:
        return _coo_matvec_nb(rows, cols, vals, vec, dim)
    return _coo_matvec_np(rows, cols, vals, vec, dim)


# ---------------------------------------------------------------------------
# exhaustive contraction order of a small set of tensors (subset DP)
# ---------------------------------------------------------------------------

METRIC_CODES = {"flops": 0, "write": 1, "size": 2, "combo": 3}


def _subtree_dp_py(leaf_masks, log2dims, metric):
    k, nwords = leaf_masks.shape
    nsub = 1 << k
    masks = np.zeros((nsub, nwords), np.uint64)
    logsize = np.zeros(nsub)
    for s in range(1, nsub):
        low = s & -s
        i = 0
        while (low >> i) != 1:
            i += 1
        prev = s ^ low
        total = 0.0
        for w in range(nwords):
            m = masks[prev, w] ^ leaf_masks[i, w]
            masks[s, w] = m
            for bit in range(64):
                if (m >> np.uint64(bit)) & np.uint64(1):
                    total += log2dims[w * 64 + bit]
        logsize[s] = total
    cost = np.full(nsub, np.inf)
    best = np.zeros(nsub, np.int64)
    for i in range(k):
        cost[1 << i] = 0.0
    for s in range(1, nsub):
        if s & (s - 1) == 0:
            continue
        low = s & -s
        rest = s ^ low
        out_size = 2.0 ** logsize[s]
        sub = rest
        while True:
            a = low | sub
            if a != s:
                b = s ^ a
                flops = 2.0 ** (0.5 * (logsize[a] + logsize[b] + logsize[s]))
                if metric == 0:
                    c = cost[a] + cost[b] + flops
                elif metric == 1:
                    c = cost[a] + cost[b] + out_size
                elif metric == 2:
                    c = max(cost[a], cost[b], out_size)
                else:
                    c = cost[a] + cost[b] + flops + 64.0 * out_size
                if c < cost[s]:
                    cost[s] = c
                    best[s] = a
            if sub == 0:
                break
            sub = (sub - 1) & rest
    return cost[nsub - 1], best


_subtree_dp_nb = njit(_subtree_dp_py)


def subtree_optimal_order(leaf_masks, log2dims, metric):
    """Optimal pairwise order for ``k`` tensors under ``metric``.

    Parameters
    ----------
    leaf_masks : (k, words) uint64 array
        Bit set of the edges carried by each tensor.
    log2dims : (words * 64,) float array
        ``log2`` of every edge dimension, indexed by bit.
    metric : str
        One of ``flops``, ``write``, ``size``, ``combo``.

    Returns
    -------
    cost : float
        Optimal cost of the subtree (inputs are free).
    best : (2**k,) int array
        For each subset, the left child subset of its optimal split.
    """
    code = METRIC_CODES[metric]
    leaf_masks = np.ascontiguousarray(leaf_masks, dtype=np.uint64)
    log2dims = np.ascontiguousarray(log2dims, dtype=np.float64)
    if USE_NUMBA:
        return _subtree_dp_nb(leaf_masks, log2dims, code)
    return _subtree_dp_py(leaf_masks, log2dims, code)
