"""Symmetry losses: the Mirror Symmetry Loss and the Proximal Symmetry Loss."""
from hybridwalk.losses.symmetry import (
    REGIMES,
    PSLDiagnostics,
    SymLossConfig,
    attach_mirror_data,
    classify_regimes,
    generalized_psl,
    msl_loss,
    psl_loss,
    psl_per_sample,
    symmetric_mean_action,
    symmetrize_policy,
    symmetry_deficit,
    symmetry_loss,
)
