"""Contraction-path benchmark on the layered ZZ/Rx testbed."""

import time

from .. import gates
from ..network import contract_with_path, greedy_path, path_metrics, subtree_reconfigure
from .ansatz import testbed_circuit

MAX_N = 60
MAX_D = 8


def _metrics(net, path, seconds):
    d = path_metrics(net, path).as_dict()
    return {"log10_flops": d["log10_flops"], "log2_size": d["log2_size"],
            "log2_write": d["log2_write"], "search_seconds": seconds}


def contraction_benchmark(n=40, d=6, minimize="combo", max_time=None, reconfigure=True,
                          subtree_size=8, rounds=1, seed=0, evaluate=True):
    """Greedy path, optional subtree reconfiguration and ``<Z_{n/2}>`` on the testbed.

    The network is the single bra-operator-ket contraction with SVD-split
    two-qubit gates and absorbed single-qubit gates. ``max_time`` bounds the
    whole run; when exceeded the report has ``"timed_out": true`` and holds
    the metrics gathered so far.
    """
    from ..errors import PreconditionError

    if not (2 <= n <= MAX_N and 1 <= d <= MAX_D):
        raise PreconditionError(f"need 2 <= n <= {MAX_N} and 1 <= d <= {MAX_D}")
    t0 = time.perf_counter()
    report = {"n": n, "d": d, "minimize": minimize, "seed": seed, "timed_out": False}
    c = testbed_circuit(n, d)
    net = c.network("expectation", operator=[(gates.Z, [n // 2])], preprocess=True)
    report["nodes"] = len(net.nodes)
    t = time.perf_counter()
    path = greedy_path(net)
    report["greedy"] = _metrics(net, path, time.perf_counter() - t)

    def over():
        return max_time is not None and time.perf_counter() - t0 > max_time

    if reconfigure:
        if over():
            report["timed_out"] = True
            return report
        budget = None if max_time is None else max_time - (time.perf_counter() - t0)
        t = time.perf_counter()
        path = subtree_reconfigure(net, path, subtree_size, rounds, minimize, seed, budget)
        report["reconfigured"] = _metrics(net, path, time.perf_counter() - t)
    if evaluate:
        if over():
            report["timed_out"] = True
            return report
        t = time.perf_counter()
        val = complex(contract_with_path(net, path))
        report["value"] = [val.real, val.imag]
        report["contract_seconds"] = time.perf_counter() - t
    report["timed_out"] = over()
    return report
