"""Gaussian MLP policy, value function, GAE and the PPO clipped update."""
from hybridwalk.policy.gaussian import GaussianPolicy, ValueFn, digest, gaussian_log_prob, log_prob, policy_forward
from hybridwalk.policy.mlp import MLP
from hybridwalk.policy.ppo import (
    Adam,
    PPOConfig,
    SampleBatch,
    UpdateResult,
    compute_gae,
    gae_advantages,
    normalize_advantages,
    ppo_surrogate,
    safe_ratio,
    update_policy,
    value_loss,
    value_update,
)
