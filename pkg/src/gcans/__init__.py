"""Shot-frugal stochastic gradient descent for variational quantum eigensolvers."""

from .estimator import (
    AllocationStrategy,
    GradientEstimate,
    VQEProblem,
    allocate_wds,
    allocate_wrs,
    estimate_expectation,
    exact_gradient,
    ievaluate,
)
from .optimizers import (
    OptimizationTrace,
    OptimizerConfig,
    run_adam,
    run_gcans,
    run_icans,
    run_optimizer,
    run_sgd_ds,
    shots_rule_gcans,
    shots_rule_icans,
)
from .pauli import Observable, PauliString, lipschitz_bound, one_norm, parse_observable, tfim
from .statevector import (
    AnsatzCircuit,
    build_ansatz,
    exact_expectation,
    ground_energy_dense,
    prepare_state,
)

__version__ = "0.1.0"
