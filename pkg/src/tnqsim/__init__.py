"""Tensor-network quantum circuit simulation.

Circuits are built as tensor networks and contracted along greedy or
reconfigured paths. A dense state-vector engine serves the operations
that need the whole state at once, such as sampling and gradients.
"""

from . import batch, channels, diff, gates, kernels, network, pauli, quop, tensor
from ._accel import USE_NUMBA, backend_name
from .batch import vectorized_value_and_grad, vmap, vvag
from .channels import DMCircuit, KrausChannel, make_channel
from .circuit import Circuit, GateSpec, MeasurementRecord
from .diff import (
    Observable,
    adjoint_gradient,
    finite_difference_grad,
    grad,
    hessian,
    jacobian_state,
    qfi,
    value_and_grad,
)
from .errors import (
    CapExceededError,
    DimensionError,
    PathError,
    PreconditionError,
    SchemaError,
    TnqsimError,
    UnsupportedOperationError,
)
from .network import Network, PathMetrics, TensorNode, contract, greedy_path, path_metrics
from .optim import OptimizerState
from .pauli import SparseCOO, WeightedPauliSum, operator_expectation, tfim_hamiltonian, tfim_mpo
from .quop import MPOOperator, QuOperator, QuVector, mpo_from_dense, mps_vector
from .rng import StatusSource, implicit_randn, implicit_randu
from .tensor import svd_split

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "Circuit",
    "DMCircuit",
    "DimensionError",
    "GateSpec",
    "KrausChannel",
    "MPOOperator",
    "MeasurementRecord",
    "Network",
    "Observable",
    "OptimizerState",
    "PathError",
    "PathMetrics",
    "PreconditionError",
    "QuOperator",
    "QuVector",
    "SchemaError",
    "SparseCOO",
    "StatusSource",
    "TensorNode",
    "TnqsimError",
    "USE_NUMBA",
    "UnsupportedOperationError",
    "WeightedPauliSum",
    "adjoint_gradient",
    "backend_name",
    "batch",
    "channels",
    "contract",
    "diff",
    "finite_difference_grad",
    "gates",
    "grad",
    "greedy_path",
    "hessian",
    "implicit_randn",
    "implicit_randu",
    "jacobian_state",
    "kernels",
    "make_channel",
    "mpo_from_dense",
    "mps_vector",
    "network",
    "operator_expectation",
    "path_metrics",
    "pauli",
    "qfi",
    "quop",
    "svd_split",
    "tensor",
    "tfim_hamiltonian",
    "tfim_mpo",
    "value_and_grad",
    "vectorized_value_and_grad",
    "vmap",
    "vvag",
]
