"""Rate regions and capacity bounds for quantum broadcast channels whose
receivers cooperate over a one-way conferencing link."""
from __future__ import annotations

__version__ = "0.1.0"

from .channels import (
    BroadcastChannel,
    DegradedResult,
    QuantumChannel,
    bundled,
    bundled_names,
    check_degraded,
    classical_broadcast,
    hadamard,
    stinespring,
)
from .codesim import Codebook, SimReport, build_codebook, simulate_classical, simulate_cq
from .entanglement import concurrence, entanglement_of_formation
from .regions import (
    InputEnsemble,
    QuantumInputState,
    RateRegion,
    classical_region,
    no_conferencing_region,
    quantum_inner_region,
    quantum_outer_region_single_letter,
)
from .relay import (
    ConferencingLink,
    RelayBounds,
    cutset,
    decode_forward,
    decode_forward_value,
    eof_lower,
    relay_bounds,
    repeater_chain,
    superdense_convert,
    teleport_convert,
)
from .states import (
    DensityOperator,
    PureState,
    coherent_information,
    conditional_mutual_information,
    entropy,
    mutual_information,
)

__all__ = [
    "BroadcastChannel",
    "DegradedResult",
    "QuantumChannel",
    "bundled",
    "bundled_names",
    "check_degraded",
    "classical_broadcast",
    "hadamard",
    "stinespring",
    "InputEnsemble",
    "QuantumInputState",
    "RateRegion",
    "classical_region",
    "no_conferencing_region",
    "quantum_inner_region",
    "quantum_outer_region_single_letter",
    "ConferencingLink",
    "RelayBounds",
    "cutset",
    "decode_forward",
    "decode_forward_value",
    "eof_lower",
    "relay_bounds",
    "repeater_chain",
    "superdense_convert",
    "teleport_convert",
    "DensityOperator",
    "PureState",
    "coherent_information",
    "conditional_mutual_information",
    "entropy",
    "mutual_information",
]
