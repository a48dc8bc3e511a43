"""Operational distinguishability versus ontological distinctness.

Quantum discrimination tools, the Kochen-Specker qubit model, checks of
the bounded-distinctness propositions, communication tasks and campaign
helpers. ``BACKEND`` reports whether the compiled kernels are in use.
"""

from ._backend import BACKEND
from .bodcheck import (
    PropositionReport,
    check_prop1,
    check_prop2,
    check_prop3,
    quadruple_states,
    trine_states,
    trine_unitaries,
)
from .commtask import (
    ClassicalStrategy,
    CommTask,
    Distinguishability,
    Leakage,
    QuantumStrategy,
    check_prop4,
    classical_optimize,
    eval_classical,
    eval_quantum,
    fig4_protocol,
    parity_protocol,
    parity_task,
    task1,
    task2,
)
from .discrim import (
    DiscriminationResult,
    discriminate,
    helstrom_pair,
    measurement_distinguishability,
    pairwise_avg,
)
from .expharness import CampaignConfig, run_quadruplet_campaign, run_triplet_campaign, theta_sweep
from .ksmodel import KsEnsemble, McEstimate, OnticPoint, ks_distinctness, ks_measurement_distinctness
from .quantcore import (
    BlochVector,
    DensityMatrix,
    Ensemble,
    Povm,
    Unitary,
    ValidationError,
    density_from_bloch,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlochVector",
    "CampaignConfig",
    "ClassicalStrategy",
    "CommTask",
    "DensityMatrix",
    "DiscriminationResult",
    "Distinguishability",
    "Ensemble",
    "KsEnsemble",
    "Leakage",
    "McEstimate",
    "OnticPoint",
    "Povm",
    "PropositionReport",
    "QuantumStrategy",
    "Unitary",
    "ValidationError",
    "check_prop1",
    "check_prop2",
    "check_prop3",
    "check_prop4",
    "classical_optimize",
    "density_from_bloch",
    "discriminate",
    "eval_classical",
    "eval_quantum",
    "fig4_protocol",
    "helstrom_pair",
    "ks_distinctness",
    "ks_measurement_distinctness",
    "measurement_distinguishability",
    "pairwise_avg",
    "parity_protocol",
    "parity_task",
    "quadruple_states",
    "run_quadruplet_campaign",
    "run_triplet_campaign",
    "task1",
    "task2",
    "theta_sweep",
    "trine_states",
    "trine_unitaries",
]
