from .config import (
    DataConfig,
    EvalConfig,
    OptimizerConfig,
    RunConfig,
    RunSection,
    StrategyConfig,
    load_run_config,
)
from .enumeration import (
    MAX_ENUM_VISIBLE,
    all_masks,
    elbo_for_distribution,
    elbo_surrogate,
    enumerated_posterior,
    exact_elbo,
    exact_marginal,
    factorized_log_mass,
    mask_logp_table,
    renormalized_log_masses,
)
from .estimator import (
    EstimatorRun,
    exact_phi_gradient,
    phi_gradient_estimate,
    posterior_jacobian,
    sample_masks_batch,
    score_vectors,
)
from .heuristic import heuristic_labels
from .loop import PreparedExample, TrainResult, prepare_examples, train_run
from .objectives import (
    LossBreakdown,
    bottom_up_loss,
    cmi_penalty,
    control_variate,
    max_prob_penalty,
    ratio_penalty,
    reinforce_loss,
    sampled_elbo,
    sampled_prior_bound,
    selector_bce,
    soft_select_loss,
    vrs_loss,
)
from .optimizer import Adam

__all__ = [
    "Adam",
    "DataConfig",
    "EstimatorRun",
    "EvalConfig",
    "LossBreakdown",
    "MAX_ENUM_VISIBLE",
    "OptimizerConfig",
    "PreparedExample",
    "RunConfig",
    "RunSection",
    "StrategyConfig",
    "TrainResult",
    "all_masks",
    "bottom_up_loss",
    "cmi_penalty",
    "control_variate",
    "elbo_for_distribution",
    "elbo_surrogate",
    "enumerated_posterior",
    "exact_elbo",
    "exact_marginal",
    "exact_phi_gradient",
    "factorized_log_mass",
    "heuristic_labels",
    "load_run_config",
    "mask_logp_table",
    "max_prob_penalty",
    "phi_gradient_estimate",
    "posterior_jacobian",
    "prepare_examples",
    "ratio_penalty",
    "reinforce_loss",
    "renormalized_log_masses",
    "sample_masks_batch",
    "sampled_elbo",
    "sampled_prior_bound",
    "score_vectors",
    "selector_bce",
    "soft_select_loss",
    "train_run",
    "vrs_loss",
]
