"""prodex: sampling from products of heterogeneous expert models.

Generative experts (flow velocity fields, tabular autoregressive models) and
discriminative reward experts jointly define a product distribution; the
sampler anneals a particle population from noise to data, refining each stage
with MCMC and steering the population with reward-weighted resampling.
"""

__version__ = "0.1.0"

from .annealing import StageTrace, run_chain, run_stage
from .ar import (
    PrefixState,
    append_kernel,
    exact_product_enumeration,
    gibbs_kernel,
)
from .conditional import ConditioningGraph, blur_mask, conditional_velocity, zero_pad_region
from .core import (
    AnnealSchedule,
    ContinuousSample,
    DiscreteSample,
    RngHandle,
    Sample,
    make_schedule,
    sample_initial,
    sample_initial_discrete,
)
from .estimator import ProductSampler
from .experts import (
    ARExpert,
    FlowExpert,
    RewardExpert,
    gaussian_flow_expert,
    gmm_flow_expert,
    linear_reward,
    quadratic_reward,
    random_ar_tables,
    region_indicator_reward,
    tabular_ar_expert,
    velocity_field_expert,
)
from .flowmath import (
    ScoreEval,
    VelocityEval,
    compose_fields,
    endpoint_predict,
    euler_step,
    langevin_step,
    velocity_to_score,
)
from .oracle import (
    GaussianDensity,
    GridDensity,
    MixtureDensity,
    TableDensity,
    gaussian_product,
    grid_product,
    rejection_sample,
    tv_distance,
)
from .smc import ParticleSet, SmcResult, intermediate_reward, resample, run_smc

__all__ = [
    "__version__",
    "AnnealSchedule",
    "ARExpert",
    "ConditioningGraph",
    "ContinuousSample",
    "DiscreteSample",
    "FlowExpert",
    "GaussianDensity",
    "GridDensity",
    "MixtureDensity",
    "ParticleSet",
    "PrefixState",
    "ProductSampler",
    "RewardExpert",
    "RngHandle",
    "Sample",
    "ScoreEval",
    "SmcResult",
    "StageTrace",
    "TableDensity",
    "VelocityEval",
    "append_kernel",
    "blur_mask",
    "compose_fields",
    "conditional_velocity",
    "endpoint_predict",
    "euler_step",
    "exact_product_enumeration",
    "gaussian_flow_expert",
    "gaussian_product",
    "gibbs_kernel",
    "gmm_flow_expert",
    "grid_product",
    "intermediate_reward",
    "langevin_step",
    "linear_reward",
    "make_schedule",
    "quadratic_reward",
    "random_ar_tables",
    "region_indicator_reward",
    "rejection_sample",
    "resample",
    "run_chain",
    "run_smc",
    "run_stage",
    "sample_initial",
    "sample_initial_discrete",
    "tabular_ar_expert",
    "tv_distance",
    "velocity_field_expert",
    "velocity_to_score",
    "zero_pad_region",
]
