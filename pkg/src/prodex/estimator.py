"""Scikit-learn-compatible front end.

``ProductSampler`` follows the estimator conventions — constructor stores
hyperparameters verbatim, ``get_params``/``set_params`` work for grid
composition, ``fit`` validates and freezes the schedule — and exposes
``sample(n_samples, random_state)`` in the style of mixture and KDE
estimators.  The sampler draws from the product of its experts; when reward
experts are present each returned row is the selected output of one
independent particle run.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state

from .conditional import ConditioningGraph
from .core import make_schedule
from .experts import ARExpert, FlowExpert, RewardExpert
from .smc import run_smc


class ProductSampler(BaseEstimator):
    """Draw samples from a product of expert models.

    Parameters
    ----------
    experts : list of FlowExpert or list of ARExpert
        Generative experts defining the product.
    reward_experts : list of RewardExpert, default=()
        Discriminative experts; steer the population through resampling and
        final selection.
    num_steps : int, default=100
        Annealing stages.
    schedule_kind : {"uniform", "cosine"}, default="uniform"
    mcmc_steps : int, default=1
        MCMC applications per stage.
    step_scale, step_floor : float
        Langevin step rule ``scale * sigma_t + floor``.
    num_particles : int, default=1
        Particles per run when reward experts are present.
    resample_policy : {"every", "ess", "never", "checkpoint"}, default="ess"
    weight_mode : {"full", "incremental"}, default="full"
    correction_rate : float, default=0.0
        Conditional-update learning rate; 0 disables corrections.
    num_corrections : int, default=2
    random_state : int or None
        Seed for ``sample`` when none is passed there.
    """

    def __init__(
        self,
        experts=(),
        reward_experts=(),
        num_steps=100,
        schedule_kind="uniform",
        mcmc_steps=1,
        step_scale=0.5,
        step_floor=1e-3,
        num_particles=1,
        resample_policy="ess",
        weight_mode="full",
        correction_rate=0.0,
        num_corrections=2,
        random_state=None,
    ):
        self.experts = experts
        self.reward_experts = reward_experts
        self.num_steps = num_steps
        self.schedule_kind = schedule_kind
        self.mcmc_steps = mcmc_steps
        self.step_scale = step_scale
        self.step_floor = step_floor
        self.num_particles = num_particles
        self.resample_policy = resample_policy
        self.weight_mode = weight_mode
        self.correction_rate = correction_rate
        self.num_corrections = num_corrections
        self.random_state = random_state

    def fit(self, X=None, y=None):
        """Validate the expert product and freeze the schedule.

        The sampler is training-free; ``fit`` exists so the estimator slots
        into pipelines and parameter searches.
        """
        experts = list(self.experts)
        if not experts:
            raise ValueError("ProductSampler requires at least one expert")
        if not all(isinstance(e, (FlowExpert, ARExpert)) for e in experts):
            raise TypeError("experts must be FlowExpert or ARExpert instances")
        if not all(isinstance(r, RewardExpert) for r in self.reward_experts):
            raise TypeError("reward_experts must be RewardExpert instances")
        self.schedule_ = make_schedule(
            self.num_steps,
            kind=self.schedule_kind,
            step_rule=(self.step_scale, self.step_floor),
            mcmc_steps=self.mcmc_steps,
        )
        if isinstance(experts[0], FlowExpert):
            parents = {e.name or f"expert{i}": tuple(e.parents) for i, e in enumerate(experts)}
            self.graph_ = ConditioningGraph(
                parents=parents, rate=self.correction_rate, num_updates=self.num_corrections
            )
            self.n_features_in_ = experts[0].dim
        else:
            self.graph_ = None
            self.n_features_in_ = experts[0].num_slices
        return self

    def sample(self, n_samples: int = 1, random_state=None):
        """Draw ``n_samples`` product samples; returns shape (n, d).

        Without reward experts this runs ``n_samples`` independent annealed
        chains in one batch; with reward experts it runs ``n_samples``
        particle populations and returns each selected output.
        """
        if not hasattr(self, "schedule_"):
            self.fit()
        rs = check_random_state(random_state if random_state is not None else self.random_state)
        base_seed = int(rs.randint(0, 2**31 - 1))
        experts = list(self.experts)
        rewards = list(self.reward_experts)
        if not rewards:
            res = run_smc(
                experts, [], self.schedule_,
                num_particles=n_samples, seed=base_seed,
                graph=self.graph_, resample_policy="never",
            )
            return np.asarray(res.final_states, dtype=np.float64)
        rows = []
        for i in range(n_samples):
            res = run_smc(
                experts, rewards, self.schedule_,
                num_particles=self.num_particles, seed=base_seed + i,
                graph=self.graph_,
                resample_policy=self.resample_policy,
                weight_mode=self.weight_mode,
            )
            rows.append(np.asarray(res.final_states[res.selected_index], dtype=np.float64))
        return np.stack(rows)
