"""Batched evaluation with exact loop semantics.

Every helper here is defined as "loop over the leading axis of the
vectorized arguments and stack the results". Elements may run on a thread
pool, but results are collected in input order and each element receives
its own random substream, so the output never depends on scheduling.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import diff, kernels
from .errors import DimensionError, PreconditionError
from .pauli import check_structure
from .rng import StatusSource


def _as_tuple(x):
    if x is None:
        return ()
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(i) for i in x)


@dataclass(frozen=True)
class BatchSpec:
    """Batched and differentiated argument positions of a batched call."""

    vectorized_argnums: tuple = (0,)
    argnums: tuple = (0,)
    has_aux: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "vectorized_argnums", _as_tuple(self.vectorized_argnums))
        object.__setattr__(self, "argnums", _as_tuple(self.argnums))
        if int(self.workers) < 1:
            raise PreconditionError("workers must be at least 1")


def batch_size(spec, args):
    """Common leading-axis length of the vectorized arguments."""
    sizes = set()
    for i in spec.vectorized_argnums:
        if i >= len(args):
            raise PreconditionError(f"vectorized argument {i} not supplied")
        sizes.add(len(args[i]))
    if len(sizes) > 1:
        raise DimensionError(f"vectorized arguments have ragged leading axes {sorted(sizes)}")
    if not sizes:
        raise PreconditionError("no vectorized arguments")
    return sizes.pop()


def _element_args(spec, args, i):
    return tuple(a[i] if j in spec.vectorized_argnums else a for j, a in enumerate(args))


def _run(fn, count, workers):
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _stack(results):
    first = results[0]
    if isinstance(first, tuple):
        return tuple(_stack([r[k] for r in results]) for k in range(len(first)))
    try:
        return np.stack([np.asarray(r) for r in results])
    except ValueError:
        return list(results)


def vmap_apply(f, spec, *args, rng=None):
    """``stack([f(*args_i) for i in range(batch)])``.

    With ``rng`` (a StatusSource or seed), element ``i`` is called with the
    keyword ``rng=rng.substream(i)``.
    """
    if not isinstance(spec, BatchSpec):
        spec = BatchSpec(vectorized_argnums=spec)
    b = batch_size(spec, args)
    src = None if rng is None else (rng if isinstance(rng, StatusSource) else StatusSource(rng))

    def one(i):
        a = _element_args(spec, args, i)
        if src is None:
            return f(*a)
        return f(*a, rng=src.substream(i))

    return _stack(_run(one, b, spec.workers))


def vmap(f, vectorized_argnums=0, workers=1):
    """Function form of :func:`vmap_apply`."""
    spec = BatchSpec(vectorized_argnums=vectorized_argnums, workers=workers)

    def mapped(*args, rng=None):
        return vmap_apply(f, spec, *args, rng=rng)

    return mapped


# ---------------------------------------------------------------------------
# gradients of batched objectives
# ---------------------------------------------------------------------------


class CircuitObjective:
    """Objective given by ``build(*args) -> (circuit, observable[, aux])``.

    Gradients come from the adjoint method with every differentiated
    argument traced (see :mod:`tnqsim.diff`).
    """

    def __init__(self, build):
        self.build = build
        self._obs = None

    def _observable(self, obs, n):
        if self._obs is not None and self._obs[0] is obs:
            return self._obs[1]
        o = diff.Observable(obs, n)
        self._obs = (obs, o)
        return o

    def __call__(self, *args):
        out = self.build(*args)
        c, obs = out[0], out[1]
        val = self._observable(obs, c.n).expectation(c.wavefunction()).real
        return (val, out[2]) if len(out) > 2 else val

    def value_and_grad(self, args, argnums):
        args = list(args)
        shapes, offset = [], 0
        for k in argnums:
            a = np.asarray(args[k], dtype=np.float64)
            shapes.append((offset, a.shape))
            args[k] = diff.traced(a, offset)
            offset += a.size
        out = self.build(*args)
        c, obs = out[0], out[1]
        value, g = diff.adjoint_gradient(c, self._observable(obs, c.n), offset)
        grads = tuple(g[o:o + int(np.prod(s, dtype=np.int64))].reshape(s) for o, s in shapes)
        aux = out[2] if len(out) > 2 else None
        return value, grads, aux


def _fd_value_and_grad(f, args, argnums, has_aux, h=diff.FD_STEP):
    out = f(*args)
    if has_aux and not isinstance(out, tuple):
        raise PreconditionError("has_aux requires f to return (value, aux)")
    value, aux = (out[0], out[1]) if has_aux else (out, None)
    grads = []
    for k in argnums:
        a = np.asarray(args[k], dtype=np.float64)
        flat = a.reshape(-1)
        g = np.zeros(a.size)
        for j in range(a.size):
            vals = []
            for s in (h, -h):
                t = flat.copy()
                t[j] += s
                shifted = list(args)
                shifted[k] = t.reshape(a.shape)
                o = f(*shifted)
                vals.append(o[0] if has_aux else o)
            g[j] = (vals[0] - vals[1]) / (2 * h)
        grads.append(g.reshape(a.shape))
    return float(np.real(value)), tuple(grads), aux


def _element_value_and_grad(f, args, argnums, has_aux):
    if isinstance(f, CircuitObjective):
        value, grads, aux = f.value_and_grad(args, argnums)
        if has_aux and aux is None:
            raise PreconditionError("has_aux requires build to return (circuit, observable, aux)")
        return value, grads, aux
    return _fd_value_and_grad(f, args, argnums, has_aux)


def vectorized_value_and_grad(f, argnums=0, vectorized_argnums=0, has_aux=False, workers=1):
    """Batched values with gradients.

    For a differentiated argument that is also vectorized the result holds
    one gradient row per element; otherwise the per-element gradients are
    summed over the batch. ``f`` is a :class:`CircuitObjective` (adjoint
    gradients) or a plain function returning a float (central differences).

    Returns a function giving ``(values, grad)``, or ``((values, aux), grad)``
    with ``has_aux``. ``grad`` is a tuple when ``argnums`` is a sequence.
    """
    single = isinstance(argnums, (int, np.integer))
    spec = BatchSpec(vectorized_argnums, argnums, has_aux, workers)

    def wrapped(*args):
        b = batch_size(spec, args)

        def one(i):
            return _element_value_and_grad(f, _element_args(spec, args, i), spec.argnums, has_aux)

        res = _run(one, b, spec.workers)
        values = np.array([r[0] for r in res])
        grads = []
        for j, k in enumerate(spec.argnums):
            rows = [r[1][j] for r in res]
            if k in spec.vectorized_argnums:
                grads.append(np.stack(rows))
            else:
                acc = np.zeros_like(rows[0])
                for g in rows:  # fixed order keeps the sum reproducible
                    acc = acc + g
                grads.append(acc)
        grads = grads[0] if single else tuple(grads)
        if has_aux:
            return (values, _stack([r[2] for r in res])), grads
        return values, grads

    return wrapped


vvag = vectorized_value_and_grad


# ---------------------------------------------------------------------------
# scenario helpers
# ---------------------------------------------------------------------------


def batched_states(f, states, params, *rest, workers=1):
    """Values per input state and the parameter gradient summed over states.

    ``f(state, params, *rest)`` is a CircuitObjective or plain function.
    """
    return vectorized_value_and_grad(f, argnums=1, vectorized_argnums=0,
                                     workers=workers)(states, params, *rest)


def batched_circuit_params(f, param_rows, *rest, workers=1):
    """Independent value and gradient for every row of ``param_rows``."""
    return vectorized_value_and_grad(f, argnums=0, vectorized_argnums=0,
                                     workers=workers)(param_rows, *rest)


def batched_structures(c, structures, workers=1):
    """Expectation of each Pauli structure on the output of circuit ``c``."""
    psi = np.asarray(c.state()).reshape(-1)

    def one(s):
        return kernels.pauli_expectation(psi, check_structure(s, c.n)).real

    return vmap_apply(one, BatchSpec((0,), (), False, workers), np.asarray(structures))


def batched_mc_status(f, statuses, *rest, workers=1):
    """``f(status_i, *rest)`` for every leading slice of ``statuses``."""
    return vmap_apply(f, BatchSpec((0,), (), False, workers), np.asarray(statuses), *rest)
