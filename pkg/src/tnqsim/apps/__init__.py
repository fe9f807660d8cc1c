"""Experiment drivers built on the simulator."""

from .ansatz import example_block, ladder_ansatz, ladder_param_count, rx_layers, testbed_circuit
from .barren import barren_plateau_experiment, barren_plateau_scan, random_rotation_circuit
from .bench import contraction_benchmark
from .classify import predict, synthetic_dataset, train_classifier
from .teleport import teleport_circuit, teleport_fidelity, teleported_state
from .vqe import VQEConfig, exact_ground_energy, vqe_run

__all__ = [
    "VQEConfig",
    "barren_plateau_experiment",
    "barren_plateau_scan",
    "contraction_benchmark",
    "exact_ground_energy",
    "example_block",
    "ladder_ansatz",
    "ladder_param_count",
    "predict",
    "random_rotation_circuit",
    "rx_layers",
    "synthetic_dataset",
    "teleport_circuit",
    "teleport_fidelity",
    "teleported_state",
    "testbed_circuit",
    "train_classifier",
    "vqe_run",
]
