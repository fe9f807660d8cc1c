"""Dense complex tensor primitives.

Tensors are plain ``numpy.ndarray`` objects of dtype complex128 in row-major
layout; :func:`as_tensor` converts and validates inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError


def as_tensor(x):
    """Return ``x`` as a complex128 array with every axis length >= 1."""
    t = np.asarray(x, dtype=np.complex128)
    if any(d < 1 for d in t.shape):
        raise DimensionError(f"axis lengths must be >= 1, got shape {t.shape}")
    return t


def contract_pair(a, a_axes, b, b_axes):
    """Generalized tensordot of ``a`` and ``b`` over paired axes.

    The result carries the free axes of ``a`` in order, then those of ``b``.

    Raises
    ------
    DimensionError
        If the axis lists differ in length, repeat an axis, point outside the
        tensor rank, or pair axes of unequal length.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    a_axes = [int(x) for x in a_axes]
    b_axes = [int(x) for x in b_axes]
    if len(a_axes) != len(b_axes):
        raise DimensionError("a_axes and b_axes must have equal length")
    for axes, t, label in ((a_axes, a, "a"), (b_axes, b, "b")):
        if len(set(axes)) != len(axes):
            raise DimensionError(f"repeated axis in {label}_axes")
        if any(ax < 0 or ax >= t.ndim for ax in axes):
            raise DimensionError(f"{label}_axes out of range for rank {t.ndim}")
    for x, y in zip(a_axes, b_axes):
        if a.shape[x] != b.shape[y]:
            raise DimensionError(
                f"axis {x} of a has length {a.shape[x]} but axis {y} of b has {b.shape[y]}"
            )
    return np.tensordot(a, b, axes=(a_axes, b_axes))


def transpose_reshape(t, perm, new_shape):
    """Permute the axes of ``t`` by ``perm`` and reinterpret as ``new_shape``."""
    t = as_tensor(t)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(t.ndim)):
        raise DimensionError(f"{perm} is not a permutation of {t.ndim} axes")
    new_shape = tuple(int(s) for s in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != t.size or any(s < 1 for s in new_shape):
        raise DimensionError(f"cannot reshape {t.size} elements to {new_shape}")
    return np.ascontiguousarray(np.transpose(t, perm)).reshape(new_shape)


def kron(a, b):
    """Kronecker product of two matrices."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("kron expects two rank-2 tensors")
    return np.kron(a, b)


@dataclass(frozen=True)
class SvdSplit:
    """Two rank-3 factors of a two-qubit gate.

    ``left`` has axes ``(out0, in0, bond)`` and ``right`` has axes
    ``(bond, out1, in1)``.
    """

    left: np.ndarray
    right: np.ndarray
    bond_dimension: int
    truncation_error: float
    singular_values: np.ndarray

    def reconstruct(self):
        """Recombine to a ``(2, 2, 2, 2)`` gate tensor with axes (o0, o1, i0, i1)."""
        t = np.tensordot(self.left, self.right, axes=([2], [0]))  # o0 i0 o1 i1
        return np.ascontiguousarray(t.transpose(0, 2, 1, 3))


def _fix_phases(u, vh):
    # make the largest-magnitude entry of every left vector real positive;
    # argmax already returns the lowest index among ties
    for k in range(u.shape[1]):
        col = u[:, k]
        mags = np.abs(col)
        j = int(np.argmax(mags >= mags.max() * (1 - 1e-12)))
        if mags[j] == 0:
            continue
        ph = col[j] / mags[j]
        u[:, k] = col / ph
        vh[k, :] = vh[k, :] * ph
    return u, vh


def svd_split(gate, max_singular_values):
    """Split a two-qubit gate into two tensors joined by a bond.

    Parameters
    ----------
    gate : array
        Either a ``(2, 2, 2, 2)`` tensor with axes ``(out0, out1, in0, in1)``
        or the equivalent ``4 x 4`` matrix.
    max_singular_values : int
        Largest bond dimension to keep.

    Returns
    -------
    SvdSplit
        ``truncation_error`` is the Frobenius norm of the discarded singular
        values, so the reconstruction error never exceeds it.
    """
    g = as_tensor(gate)
    if g.shape == (4, 4):
        g = g.reshape(2, 2, 2, 2)
    if g.shape != (2, 2, 2, 2):
        raise DimensionError(f"svd_split expects a (2,2,2,2) gate, got {g.shape}")
    max_sv = int(max_singular_values)
    if max_sv < 1:
        raise PreconditionError("max_singular_values must be >= 1")
    m = transpose_reshape(g, [0, 2, 1, 3], [4, 4])
    u, s, vh = np.linalg.svd(m)
    u, vh = _fix_phases(u, vh)
    tol = 1e-14 * max(s[0], 1e-300)
    rank = int(np.count_nonzero(s > tol))
    bond = max(1, min(max_sv, rank))
    err = float(np.sqrt(np.sum(s[bond:] ** 2)))
    sq = np.sqrt(s[:bond])
    left = (u[:, :bond] * sq).reshape(2, 2, bond)
    right = (sq[:, None] * vh[:bond, :]).reshape(bond, 2, 2)
    return SvdSplit(
        left=np.ascontiguousarray(left),
        right=np.ascontiguousarray(right),
        bond_dimension=bond,
        truncation_error=err,
        singular_values=s.copy(),
    )
