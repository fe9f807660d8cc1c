"""Variational ground-state search for the transverse-field Ising chain."""

from dataclasses import asdict, dataclass

import numpy as np

from ..batch import CircuitObjective, batched_circuit_params
from ..errors import PreconditionError
from ..optim import OptimizerState
from ..pauli import sum_to_coo, tfim_hamiltonian
from ..rng import StatusSource
from .ansatz import ladder_ansatz, ladder_param_count

EXACT_CAP = 12


@dataclass
class VQEConfig:
    """Settings of a batched VQE run.

    ``schedule`` of the form ``"adam-sgd:STEP"`` switches from Adam to SGD
    (same learning rate) after ``STEP`` steps.
    """

    n: int = 6
    k: int = 2
    J: float = 1.0
    h: float = 1.0
    optimizer: str = "adam"
    learning_rate: float = 0.05
    steps: int = 500
    restarts: int = 4
    seed: int = 0
    init_scale: float = 0.1
    schedule: str = None

    def __post_init__(self):
        if self.n < 2 or self.k < 1 or self.restarts < 1 or self.steps < 0:
            raise PreconditionError("need n >= 2, k >= 1, restarts >= 1 and steps >= 0")


def exact_ground_energy(h_sum):
    """Lowest eigenvalue of a Pauli sum by dense diagonalization."""
    if h_sum.n > EXACT_CAP:
        raise PreconditionError(f"exact diagonalization is capped at {EXACT_CAP} qubits")
    return float(np.linalg.eigvalsh(sum_to_coo(h_sum).to_dense())[0])


def _switch_step(schedule):
    if not schedule:
        return None
    kind, _, step = schedule.partition(":")
    if kind != "adam-sgd" or not step.isdigit():
        raise PreconditionError(f"unknown schedule {schedule!r}")
    return int(step)


def vqe_run(cfg):
    """Optimize ``cfg.restarts`` parameter rows jointly; rows never interact.

    Returns a JSON-serializable report with the energy trace of every row,
    the best final energy and the exact ground energy.
    """
    ham = tfim_hamiltonian(cfg.n, cfg.J, cfg.h)
    obs = sum_to_coo(ham)
    p = ladder_param_count(cfg.n, cfg.k)
    objective = CircuitObjective(lambda theta: (ladder_ansatz(cfg.n, cfg.k, theta), obs))
    params = cfg.init_scale * StatusSource(cfg.seed).normal((cfg.restarts, p))
    switch = _switch_step(cfg.schedule)
    opt = OptimizerState(cfg.optimizer, cfg.learning_rate)
    trace = []
    values = None
    for step in range(cfg.steps + 1):
        values, grads = batched_circuit_params(objective, params)
        trace.append([float(v) for v in values])
        if step == cfg.steps:
            break
        if switch is not None and step == switch:
            opt = OptimizerState("sgd", cfg.learning_rate)
        params = opt.update(params, grads)
    exact = exact_ground_energy(ham)
    best = float(np.min(values))
    return {
        "config": asdict(cfg),
        "num_params": p,
        "energies": trace,
        "final_energies": [float(v) for v in values],
        "best_energy": best,
        "exact_energy": exact,
        "relative_error": abs(best - exact) / abs(exact),
        "best_params": params[int(np.argmin(values))].tolist(),
    }
