"""Data augmentation: append the mirror image of every sample to a batch."""
from __future__ import annotations

from dataclasses import fields

import numpy as np

from hybridwalk.symmetry.transform import MirrorTransform


def augment_batch(batch, tr: MirrorTransform, pol, theta_old):
    """Return a batch of twice the size with the mirrored half appended.

    Rewards, terminals and advantages are copied unchanged. The mirrored
    half's ``logp_old`` is recomputed under the snapshot ``theta_old`` so
    the importance ratio refers to the policy that would have produced it.
    Mirror arrays for the symmetry losses are dropped.
    """
    from hybridwalk.policy.ppo import SampleBatch

    if len(batch) == 0:
        return batch
    m_obs = tr.state(batch.obs)
    m_act = tr.action(batch.obs, batch.act)
    kw = {}
    for f in fields(SampleBatch):
        v = getattr(batch, f.name)
        if f.name.startswith(("mirror", "logp_old_mirror")) or v is None:
            kw[f.name] = None
        elif f.name == "obs":
            kw[f.name] = np.concatenate([v, m_obs])
        elif f.name == "act":
            kw[f.name] = np.concatenate([v, m_act])
        elif f.name == "logp_old":
            kw[f.name] = np.concatenate([v, pol.log_prob(theta_old, m_obs, m_act)])
        else:
            kw[f.name] = np.concatenate([v, v])
    return SampleBatch(**kw)
