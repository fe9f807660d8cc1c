"""``qsim`` command-line interface.

Every subcommand prints one JSON report on stdout (or writes it with
``--out``). Exit codes: 0 on success, 2 on schema errors, 3 on timeout,
1 on any other package error.
"""

import argparse
import json
import sys
import time

import numpy as np

from .errors import SchemaError, TnqsimError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCHEMA = 2
EXIT_TIMEOUT = 3

# above this many qubits `run` omits the full probability vector
PROBS_CAP = 10


class Timeout(Exception):
    def __init__(self, report):
        self.report = report
        super().__init__("time limit exceeded")


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {what}: {exc.msg}", "$") from exc


def _bits(index, n):
    return format(int(index), f"0{n}b")


def cmd_run(args):
    from .circuit import Circuit
    from .rng import StatusSource

    c = Circuit.from_ir(_load_json(args.circuit, "circuit"))
    psi = c.wavefunction()
    probs = np.abs(psi) ** 2
    norm = float(probs.sum())
    probs = probs / norm
    report = {"n": c.n, "ops": len(c.ops), "norm": norm}
    if c.n <= PROBS_CAP:
        report["probabilities"] = {_bits(i, c.n): float(p) for i, p in enumerate(probs) if p > 1e-15}
    if args.shots:
        u = StatusSource(args.seed).uniform(args.shots)
        idx = np.minimum(np.searchsorted(np.cumsum(probs), u, side="right"), probs.size - 1)
        counts = {}
        for i in idx:
            key = _bits(i, c.n)
            counts[key] = counts.get(key, 0) + 1
        report["shots"] = args.shots
        report["seed"] = args.seed
        report["counts"] = dict(sorted(counts.items()))
    return report


def cmd_draw(args):
    from .circuit import Circuit

    c = Circuit.from_ir(_load_json(args.circuit, "circuit"))
    return {"n": c.n, "ops": len(c.ops), "diagram": c.diagram()}


def _hamiltonian_expectation(c, ham, rep):
    from . import pauli
    from .quop import mpo_from_dense

    if rep == "dense":
        return pauli.operator_expectation(c, pauli.sum_to_dense(ham))
    if rep == "sparse":
        return pauli.operator_expectation(c, pauli.sum_to_coo(ham))
    if rep == "mpo":
        return pauli.operator_expectation(c, mpo_from_dense(pauli.sum_to_dense(ham), ham.n))
    return pauli.pauli_sum_loop(c, ham)


def cmd_expect(args):
    from .circuit import Circuit
    from .pauli import WeightedPauliSum

    c = Circuit.from_ir(_load_json(args.circuit, "circuit"))
    ham = WeightedPauliSum.from_json(_load_json(args.hamiltonian, "Hamiltonian"))
    if ham.n != c.n:
        raise SchemaError(f"Hamiltonian acts on {ham.n} qubits, circuit on {c.n}", "n")
    t = time.perf_counter()
    value = _hamiltonian_expectation(c, ham, args.repr)
    return {"n": c.n, "terms": len(ham), "repr": args.repr, "value": float(value),
            "seconds": time.perf_counter() - t}


def _strip_timings(report):
    """Drop wall-clock fields so reports for a fixed seed are byte-identical."""
    if isinstance(report, dict):
        return {k: _strip_timings(v) for k, v in report.items() if not k.endswith("seconds")}
    if isinstance(report, list):
        return [_strip_timings(v) for v in report]
    return report


def cmd_vqe(args):
    from .apps.vqe import VQEConfig, vqe_run

    cfg = VQEConfig(n=args.n, k=args.layers, J=args.J, h=args.h, optimizer=args.optimizer,
                    learning_rate=args.lr, steps=args.steps, restarts=args.restarts,
                    seed=args.seed, schedule=args.schedule)
    return vqe_run(cfg)


def cmd_bp(args):
    from .apps.barren import barren_plateau_experiment

    return barren_plateau_experiment(args.qubits, args.layers, args.circuits, args.seed,
                                     workers=args.workers)


def cmd_bench(args):
    from .apps.bench import contraction_benchmark

    report = contraction_benchmark(args.n, args.depth, args.minimize, args.max_time,
                                   reconfigure=not args.no_reconfigure, seed=args.seed,
                                   evaluate=not args.no_evaluate)
    if report["timed_out"]:
        raise Timeout(report)
    return report


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="write the JSON report to this file instead of stdout")
    common.add_argument("--timings", action="store_true", default=argparse.SUPPRESS,
                        help="include wall-clock fields in the report")
    p = argparse.ArgumentParser(prog="qsim", parents=[common],
                                description="Tensor-network quantum circuit simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate a circuit IR document")
    r.add_argument("circuit")
    r.add_argument("--shots", type=int, default=0)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("draw", parents=[common], help="plain-text wire diagram of a circuit")
    d.add_argument("circuit")
    d.set_defaults(func=cmd_draw)

    e = sub.add_parser("expect", parents=[common], help="expectation of a Pauli-sum Hamiltonian")
    e.add_argument("circuit")
    e.add_argument("hamiltonian")
    e.add_argument("--repr", choices=["dense", "sparse", "mpo", "loop"], default="sparse")
    e.set_defaults(func=cmd_expect)

    v = sub.add_parser("vqe", parents=[common], help="TFIM ground state search")
    v.add_argument("--n", type=int, default=6)
    v.add_argument("--layers", type=int, default=2)
    v.add_argument("--steps", type=int, default=500)
    v.add_argument("--optimizer", choices=["sgd", "adam"], default="adam")
    v.add_argument("--lr", type=float, default=0.05)
    v.add_argument("--restarts", type=int, default=4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--J", type=float, default=1.0)
    v.add_argument("--h", type=float, default=1.0)
    v.add_argument("--schedule", default=None, help="adam-sgd:STEP switches optimizer at STEP")
    v.set_defaults(func=cmd_vqe)

    b = sub.add_parser("bp", parents=[common], help="gradient variance of random circuits")
    b.add_argument("--qubits", type=int, default=4)
    b.add_argument("--layers", type=int, default=10)
    b.add_argument("--circuits", type=int, default=200)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_bp)

    c = sub.add_parser("bench", parents=[common], help="contraction path benchmark")
    c.add_argument("--n", type=int, default=40)
    c.add_argument("--depth", type=int, default=6)
    c.add_argument("--minimize", choices=["flops", "write", "size", "combo"], default="combo")
    c.add_argument("--max-time", type=float, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--no-reconfigure", action="store_true")
    c.add_argument("--no-evaluate", action="store_true")
    c.set_defaults(func=cmd_bench)
    return p


def _emit(report, out):
    text = json.dumps(report, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = getattr(args, "out", None)
    try:
        report = args.func(args)
        code = EXIT_OK
    except Timeout as exc:
        report, code = exc.report, EXIT_TIMEOUT
    except SchemaError as exc:
        report, code = {"error": "schema", "path": exc.path, "message": str(exc)}, EXIT_SCHEMA
    except (TnqsimError, OSError) as exc:
        report, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_ERROR
    if not getattr(args, "timings", False):
        report = _strip_timings(report)
    _emit(report, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
