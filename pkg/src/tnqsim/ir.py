"""JSON intermediate representation of circuits.

Documents look like::

    {"version": "1", "n": 2,
     "input": {"kind": "dense", "data": [[re, im], ...]},
     "ops": [{"kind": "gate", "name": "rx", "qubits": [1], "params": {"theta": 0.2}}]}

Complex numbers are ``[re, im]`` pairs and square matrices are flat
row-major lists of pairs. ``input`` is omitted for the all-zero state.
Python's float repr round-trips IEEE-754 doubles, so a document written with
:func:`json.dumps` reproduces parameters bit for bit.
"""

import json
import math

import numpy as np

from . import gates
from .channels import CHANNELS, KrausChannel, make_channel
from .errors import SchemaError, TnqsimError
from .quop import MPOOperator, QuVector

VERSION = "1"
OP_KINDS = ("gate", "kraus_general", "kraus_unitary", "cond_measure", "conditional_gate",
            "post_select", "mpo")
_KIND_TO_IR = {"gate": "gate", "kraus": "kraus_general", "unitary_kraus": "kraus_unitary",
               "cond_measure": "cond_measure", "conditional_gate": "conditional_gate",
               "post_select": "post_select", "mpo": "mpo"}


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def _pairs(a):
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in a]


def _tensor(t):
    t = np.asarray(t, dtype=np.complex128)
    return {"shape": list(t.shape), "data": _pairs(t)}


def _spec(g):
    d = {"name": g.name, "params": {k: float(v) for k, v in g.params.items()}}
    if g.matrix is not None:
        d["matrix"] = _pairs(g.matrix)
    return d


def _input_doc(c):
    if c.inputs is not None:
        return {"kind": "dense", "data": _pairs(c.inputs)}
    if c.mps_inputs is not None:
        v = c.mps_inputs
        return {"kind": "mps",
                "tensors": [dict(_tensor(t), edges=[int(e) for e in es]) for t, es in v.nodes],
                "out_edges": [int(e) for e in v.out_edges]}
    return None


def _op_doc(op):
    d = {"kind": _KIND_TO_IR[op.kind], "name": op.name, "qubits": list(op.qubits),
         "params": {k: float(v) for k, v in op.params.items()}}
    if op.kind == "gate":
        if op.matrix is not None:
            d["matrix"] = _pairs(op.matrix)
        if op.split:
            d["split"] = {"max_singular_values": int(op.split["max_singular_values"])}
    elif op.kind == "kraus":
        if op.name not in CHANNELS:
            d["operators"] = [_pairs(k) for k in op.channel.operators]
        d["status"] = float(op.status)
    elif op.kind == "unitary_kraus":
        d["choices"] = [_spec(g) for g in op.choices]
        d["probs"] = [float(p) for p in op.probs]
        d["status"] = float(op.status)
    elif op.kind == "cond_measure":
        d["bit"] = int(op.bit)
        if op.outcome is not None:
            d["outcome"] = int(op.outcome)
        else:
            d["status"] = float(op.status)
    elif op.kind == "conditional_gate":
        d["bit"] = int(op.bit)
        d["choices"] = [_spec(g) for g in op.choices]
    elif op.kind == "post_select":
        d["keep"] = int(op.keep)
    elif op.kind == "mpo":
        d["sites"] = [_tensor(w) for w in op.mpo.site_tensors]
        if op.name == "multicontrol":
            d["ctrl"] = list(op.ctrl)
            d["matrix"] = _pairs(op.matrix)
    return d


def circuit_to_ir(c):
    """Serialize a circuit to a JSON-compatible dict."""
    doc = {"version": VERSION, "n": c.n}
    inp = _input_doc(c)
    if inp is not None:
        doc["input"] = inp
    if c.split:
        doc["split"] = {"max_singular_values": int(c.split.get("max_singular_values", 4))}
    doc["ops"] = [_op_doc(op) for op in c.ops]
    return doc


def dumps(c, **kw):
    return json.dumps(circuit_to_ir(c), **kw)


# ---------------------------------------------------------------------------
# decoding with validation
# ---------------------------------------------------------------------------


def _need(d, key, path, kinds):
    if not isinstance(d, dict):
        raise SchemaError("expected an object", path)
    if key not in d:
        raise SchemaError(f"missing field {key!r}", path)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, kinds):
        raise SchemaError(f"field has wrong type {type(v).__name__}", f"{path}.{key}")
    return v


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError("expected an integer", path)
    return v


def _float(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError("expected a finite number", path)
    return float(v)


def _complex_list(v, path):
    if not isinstance(v, list):
        raise SchemaError("expected a list of [re, im] pairs", path)
    out = np.empty(len(v), dtype=np.complex128)
    for i, z in enumerate(v):
        if not isinstance(z, list) or len(z) != 2:
            raise SchemaError("expected an [re, im] pair", f"{path}[{i}]")
        out[i] = complex(_float(z[0], f"{path}[{i}][0]"), _float(z[1], f"{path}[{i}][1]"))
    return out


def _matrix(v, path):
    a = _complex_list(v, path)
    d = math.isqrt(a.size)
    if d * d != a.size or d == 0:
        raise SchemaError("matrix data must have a square number of entries", path)
    return a.reshape(d, d)


def _tensor_in(v, path):
    shape = _need(v, "shape", path, list)
    shape = tuple(_int(s, f"{path}.shape[{i}]") for i, s in enumerate(shape))
    data = _complex_list(_need(v, "data", path, list), f"{path}.data")
    if data.size != int(np.prod(shape, dtype=np.int64)):
        raise SchemaError("data length does not match shape", f"{path}.data")
    return data.reshape(shape)


def _params(d, path):
    p = d.get("params", {})
    if not isinstance(p, dict):
        raise SchemaError("params must be an object", f"{path}.params")
    return {str(k): _float(v, f"{path}.params.{k}") for k, v in p.items()}


def _spec_in(v, path):
    from .circuit import GateSpec

    name = _need(v, "name", path, str)
    params = _params(v, path)
    mat = _matrix(v["matrix"], f"{path}.matrix") if "matrix" in v else None
    if name not in gates.REGISTRY and name not in ("unitary", "exp", "exp1"):
        raise SchemaError(f"unknown gate {name!r}", f"{path}.name")
    return GateSpec(name, params, mat)


def _qubits(d, path, n):
    qs = _need(d, "qubits", path, list)
    out = []
    for i, q in enumerate(qs):
        q = _int(q, f"{path}.qubits[{i}]")
        if not 0 <= q < n:
            raise SchemaError(f"qubit {q} out of range", f"{path}.qubits[{i}]")
        out.append(q)
    return out


def circuit_from_ir(doc):
    """Rebuild a circuit from :func:`circuit_to_ir` output (dict or JSON string).

    Raises
    ------
    SchemaError
        With ``.path`` naming the offending field, e.g. ``ops[2].name``.
    """
    from .circuit import Circuit

    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", "$") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document must be an object", "$")
    if "version" in doc and doc["version"] != VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}", "version")
    n = _int(_need(doc, "n", "$", int), "n")
    if n < 1:
        raise SchemaError("n must be positive", "n")
    ops = _need(doc, "ops", "$", list)
    inputs = mps = None
    if "input" in doc:
        inp = doc["input"]
        kind = _need(inp, "kind", "input", str)
        if kind == "dense":
            inputs = _complex_list(_need(inp, "data", "input", list), "input.data")
            if inputs.size != 1 << n:
                raise SchemaError(f"dense input must have {1 << n} entries", "input.data")
        elif kind == "mps":
            tens = _need(inp, "tensors", "input", list)
            nodes = []
            for i, t in enumerate(tens):
                arr = _tensor_in(t, f"input.tensors[{i}]")
                es = [_int(e, f"input.tensors[{i}].edges") for e in
                      _need(t, "edges", f"input.tensors[{i}]", list)]
                nodes.append((arr, tuple(es)))
            outs = [_int(e, "input.out_edges") for e in _need(inp, "out_edges", "input", list)]
            try:
                mps = QuVector(outs, nodes)
            except TnqsimError as exc:
                raise SchemaError(str(exc), "input") from exc
        elif kind != "zeros":
            raise SchemaError(f"unknown input kind {kind!r}", "input.kind")
    split = None
    if "split" in doc:
        k = _int(_need(doc["split"], "max_singular_values", "split", int),
                 "split.max_singular_values")
        split = {"max_singular_values": k}
    c = Circuit(n, inputs=inputs, mps_inputs=mps, split=split)
    c.split = split
    for i, d in enumerate(ops):
        path = f"ops[{i}]"
        try:
            _add_op(c, d, path, n)
        except SchemaError:
            raise
        except (TnqsimError, ValueError, KeyError, TypeError) as exc:
            raise SchemaError(str(exc), path) from exc
    return c


def _add_op(c, d, path, n):
    kind = _need(d, "kind", path, str)
    if kind == "kraus":
        # short form {"kind": "kraus", "channel": NAME, ...}
        kind = "kraus_general"
        d = dict(d, name=d.get("channel", d.get("name", "")))
    if kind not in OP_KINDS:
        raise SchemaError(f"unknown op kind {kind!r}", f"{path}.kind")
    qs = _qubits(d, path, n)
    params = _params(d, path)
    name = d.get("name", "")
    if kind == "gate":
        if name not in gates.REGISTRY and name not in ("unitary", "exp", "exp1"):
            raise SchemaError(f"unknown gate {name!r}", f"{path}.name")
        if "matrix" in d:
            params["unitary"] = _matrix(d["matrix"], f"{path}.matrix")
        split = None
        if "split" in d:
            split = {"max_singular_values": _int(d["split"].get("max_singular_values"),
                                                 f"{path}.split.max_singular_values")}
        c.apply_gate(name, *qs, split=split or {}, **params)
    elif kind == "kraus_general":
        status = _float(_need(d, "status", path, (int, float)), f"{path}.status")
        if "operators" in d:
            ch = KrausChannel(tuple(_matrix(m, f"{path}.operators[{j}]")
                                    for j, m in enumerate(d["operators"])), name or "kraus")
        else:
            if name not in CHANNELS:
                raise SchemaError(f"unknown channel {name!r}", f"{path}.name")
            ch = make_channel(name, params)
        c.general_kraus(ch, *qs, status=status)
    elif kind == "kraus_unitary":
        choices = [_spec_in(g, f"{path}.choices[{j}]")
                   for j, g in enumerate(_need(d, "choices", path, list))]
        probs = [_float(p, f"{path}.probs") for p in _need(d, "probs", path, list)]
        status = _float(_need(d, "status", path, (int, float)), f"{path}.status")
        c.unitary_kraus(choices, *qs, probs=probs, status=status)
    elif kind == "cond_measure":
        if len(qs) != 1:
            raise SchemaError("cond_measure takes one qubit", f"{path}.qubits")
        bit = _int(_need(d, "bit", path, int), f"{path}.bit")
        if bit != c._nbits:
            raise SchemaError("bit handles must be numbered in order", f"{path}.bit")
        if "outcome" in d:
            c.cond_measure(qs[0], outcome=_int(d["outcome"], f"{path}.outcome"))
        else:
            c.cond_measure(qs[0], status=_float(_need(d, "status", path, (int, float)),
                                                f"{path}.status"))
    elif kind == "conditional_gate":
        if len(qs) != 1:
            raise SchemaError("conditional_gate takes one qubit", f"{path}.qubits")
        choices = [_spec_in(g, f"{path}.choices[{j}]")
                   for j, g in enumerate(_need(d, "choices", path, list))]
        c.conditional_gate(_int(_need(d, "bit", path, int), f"{path}.bit"), choices, qs[0])
    elif kind == "post_select":
        if len(qs) != 1:
            raise SchemaError("post_select takes one qubit", f"{path}.qubits")
        c.post_select(qs[0], _int(_need(d, "keep", path, int), f"{path}.keep"))
    elif kind == "mpo":
        sites = [_tensor_in(t, f"{path}.sites[{j}]")
                 for j, t in enumerate(_need(d, "sites", path, list))]
        c.mpo(*qs, mpo=MPOOperator(sites))
        if name == "multicontrol":
            op = c.ops[-1]
            op.name = "multicontrol"
            op.ctrl = tuple(_int(x, f"{path}.ctrl") for x in d.get("ctrl", []))
            op.matrix = _matrix(d["matrix"], f"{path}.matrix") if "matrix" in d else None
