"""Measurement sampling, parity-readout estimation, deferred measurement."""
from .deferred import (
    DeferredCircuit,
    DeferredReport,
    coherent_operators,
    coherent_unitaries,
    controlled_evolution,
    random_deferred_circuit,
    sequential_operators,
    verify_deferred,
)
from .measurement import (
    MeasurementSpec,
    born_probabilities,
    born_sample,
    local_basis_probabilities,
    sample_indices,
)
from .protocol import (
    EstimationConfig,
    EstimationReport,
    Protocol,
    batch_rng,
    cat_protocol_distribution,
    default_window,
    mle_estimate,
    mle_estimates,
    operating_point,
    pm_basis,
    run_monte_carlo,
)

__all__ = [
    "DeferredCircuit",
    "DeferredReport",
    "EstimationConfig",
    "EstimationReport",
    "MeasurementSpec",
    "Protocol",
    "batch_rng",
    "born_probabilities",
    "born_sample",
    "cat_protocol_distribution",
    "coherent_operators",
    "coherent_unitaries",
    "controlled_evolution",
    "default_window",
    "local_basis_probabilities",
    "mle_estimate",
    "mle_estimates",
    "operating_point",
    "pm_basis",
    "random_deferred_circuit",
    "run_monte_carlo",
    "sample_indices",
    "sequential_operators",
    "verify_deferred",
]
