"""MDP symmetry: tabular checkers, mirror transforms and batch augmentation."""
from hybridwalk.symmetry.tabular import (
    AutomorphismReport,
    TabularMDP,
    TabularTransform,
    check_automorphism,
    check_homomorphism,
    mirrored_chain,
)
from hybridwalk.symmetry.transform import MirrorTransform, biped_mirror, mirror_action, mirror_state
from hybridwalk.symmetry.augment import augment_batch
