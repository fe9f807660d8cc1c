"""Compare the numba kernels against the pure-numpy fallback.

Two measurements:

* kernel level, in one process: both variants of each kernel are timed on
  the same inputs (numba variants are warmed up first so compile time is
  excluded);
* end to end: a small VQE-style workload runs in two subprocesses, one with
  ``TNQSIM_DISABLE_NUMBA=1``.

Usage::

    python benchmarks/bench_kernels.py [--n 16] [--repeat 5] [--json out.json]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from tnqsim import kernels
from tnqsim._accel import DISABLE_ENV, HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_timings(n, repeat):
    rng = np.random.default_rng(0)
    dim = 1 << n
    psi = rng.normal(size=(1, dim)) + 1j * rng.normal(size=(1, dim))
    psi /= np.linalg.norm(psi)
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u2 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    codes = rng.integers(0, 4, n)
    xm, yzm, _ = kernels.pauli_masks(codes)
    cols, vals = kernels.pauli_row_values(codes)
    rows = np.arange(dim, dtype=np.int64)
    flat = np.ascontiguousarray(psi[0])

    cases = {
        "apply_1q": (lambda: kernels.apply_matrix_nb(psi, u1, [n // 2], n),
                     lambda: kernels.apply_matrix_np(psi, u1, [n // 2], n)),
        "apply_2q": (lambda: kernels.apply_matrix_nb(psi, u2, [1, n - 2], n),
                     lambda: kernels.apply_matrix_np(psi, u2, [1, n - 2], n)),
        "pauli_expectation": (lambda: kernels._pauli_expectation_nb(flat, np.int64(xm), np.int64(yzm)),
                              lambda: kernels._pauli_expectation_np(flat, xm, yzm)),
        "coo_matvec": (lambda: kernels._coo_matvec_nb(rows, cols, vals, flat, dim),
                       lambda: kernels._coo_matvec_np(rows, cols, vals, flat, dim)),
    }
    out = {}
    for name, (fast, slow) in cases.items():
        np.testing.assert_allclose(np.asarray(fast()), np.asarray(slow()), atol=1e-10)
        t_nb = best_of(fast, repeat)
        t_np = best_of(slow, repeat)
        out[name] = {"numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb}
    return out


WORKLOAD = """
import json, time
import numpy as np
import tnqsim
from tnqsim.apps.ansatz import ladder_ansatz, ladder_param_count
from tnqsim.pauli import sum_to_coo, tfim_hamiltonian
n = {n}
obs = sum_to_coo(tfim_hamiltonian(n, 1.0, 1.0))
theta = 0.1 * np.arange(ladder_param_count(n, 2))
tnqsim.value_and_grad(lambda p: (ladder_ansatz(n, 2, p), obs), theta)  # warm up
t = time.perf_counter()
for _ in range({repeat}):
    r = tnqsim.value_and_grad(lambda p: (ladder_ansatz(n, 2, p), obs), theta)
print(json.dumps({{"backend": tnqsim.backend_name(), "seconds": time.perf_counter() - t,
                  "value": float(r.value)}}))
"""


def end_to_end(n, repeat):
    results = {}
    for disabled in (False, True):
        env = dict(os.environ)
        env.pop(DISABLE_ENV, None)
        if disabled:
            env[DISABLE_ENV] = "1"
        proc = subprocess.run([sys.executable, "-c", WORKLOAD.format(n=n, repeat=repeat)],
                              env=env, capture_output=True, text=True, check=True)
        rep = json.loads(proc.stdout.strip().splitlines()[-1])
        results[rep["backend"]] = rep
    if len(results) == 2:
        assert abs(results["numba"]["value"] - results["numpy"]["value"]) < 1e-9
        results["speedup"] = results["numpy"]["seconds"] / results["numba"]["seconds"]
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16, help="qubits for the kernel timings")
    ap.add_argument("--vqe-n", type=int, default=10, help="qubits for the end-to-end workload")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    report = {"n": args.n, "kernels": kernel_timings(args.n, args.repeat),
              "end_to_end": end_to_end(args.vqe_n, args.repeat)}
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, r in report["kernels"].items():
        print(f"{name:<20}{1e3 * r['numba_s']:>12.3f}{1e3 * r['numpy_s']:>12.3f}{r['speedup']:>10.2f}")
    e = report["end_to_end"]
    if "speedup" in e:
        print(f"value_and_grad n={args.vqe_n}: numba {e['numba']['seconds']:.3f}s, "
              f"numpy {e['numpy']['seconds']:.3f}s, speedup {e['speedup']:.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
