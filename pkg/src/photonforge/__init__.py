"""Linear-optical gate toolkit.

Photon-number-resolving Fock bases, multi-photon transfer matrices of passive interferometers,
heralded Kraus operators built from an ancilla state and a detection pattern, and a search
for the CNOT sub-operations C1 to C4 together with their nonlocal CNOT schedules.
"""

from .fock_basis import Basis, StateVector, enumerate_basis, hilbert_dim
from .gates import GateTable, builtin_table, cnot_schedule, targets_from_table
from .kraus import AncillaSpec, KrausOperator, ProjectorSpec, assemble_paula, fidelity, success
from .optim import OptimizationResult, ProblemSpec, merit, optimize, sweep
from .transfer import compose_circuit, render_transfer

__version__ = "0.1.0"

__all__ = [
    "AncillaSpec",
    "Basis",
    "GateTable",
    "KrausOperator",
    "OptimizationResult",
    "ProblemSpec",
    "ProjectorSpec",
    "StateVector",
    "assemble_paula",
    "builtin_table",
    "cnot_schedule",
    "compose_circuit",
    "enumerate_basis",
    "fidelity",
    "hilbert_dim",
    "merit",
    "optimize",
    "render_transfer",
    "success",
    "sweep",
    "targets_from_table",
]
