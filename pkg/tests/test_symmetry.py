import itertools

import numpy as np
import pytest

from hybridwalk import layout
from hybridwalk.policy import GaussianPolicy, PPOConfig, SampleBatch, ppo_surrogate
from hybridwalk.symmetry import (
    MirrorTransform,
    TabularMDP,
    TabularTransform,
    biped_mirror,
    check_automorphism,
    check_homomorphism,
    mirror_action,
    mirror_state,
    mirrored_chain,
)
from hybridwalk.symmetry.augment import augment_batch
from hybridwalk.losses import symmetrize_policy


def random_mdp(rng, n_s=4, n_a=2):
    P = rng.random((n_s, n_a, n_s))
    P /= P.sum(axis=2, keepdims=True)
    return TabularMDP(P, rng.normal(size=(n_s, n_a)))


def symmetric_from_transform(rng, tr, n_s=4, n_a=2):
    """Average a random MDP over the transform's orbit so equality holds by construction."""
    mdp = random_mdp(rng, n_s, n_a)
    P, R = mdp.P.copy(), mdp.R.copy()
    for s, a in itertools.product(range(n_s), range(n_a)):
        fs, ga = tr.f[s], tr.g[s, a]
        avg = 0.5 * (mdp.P[s, a] + mdp.P[fs, ga, tr.f])
        P[s, a] = avg
        P[fs, ga, tr.f] = avg
        R[s, a] = R[fs, ga] = 0.5 * (mdp.R[s, a] + mdp.R[fs, ga])
    return TabularMDP(P, R)


# -- tabular -----------------------------------------------------------------------

def test_identity_is_automorphism():
    mdp = random_mdp(np.random.default_rng(0))
    rep = check_automorphism(mdp, TabularTransform.identity(4, 2))
    assert rep.is_automorphism and rep.max_transition_violation == 0 and rep.max_reward_violation == 0


def test_mirrored_chain_passes():
    mdp, tr = mirrored_chain()
    rep = check_automorphism(mdp, tr)
    assert rep.is_automorphism and rep.witness is None


def test_constructed_symmetric_mdp_passes():
    _, tr = mirrored_chain()
    mdp = symmetric_from_transform(np.random.default_rng(1), tr)
    assert check_automorphism(mdp, tr, tol=1e-12).is_automorphism


def test_perturbation_detected_with_witness():
    mdp, tr = mirrored_chain()
    P = mdp.P.copy()
    # move 0.05 of probability mass between two successors of (s=1, a=0)
    P[1, 0, 0] -= 0.05
    P[1, 0, 1] += 0.05
    rep = check_automorphism(TabularMDP(P, mdp.R), tr)
    assert not rep.is_automorphism
    assert rep.max_transition_violation == pytest.approx(0.05)
    s, a, s2 = rep.witness
    mirror_of = {(1, 0, 0), (1, 0, 1), (tr.f[1], tr.g[1, 0], tr.f[0]), (tr.f[1], tr.g[1, 0], tr.f[1])}
    assert (s, a, s2) in mirror_of


def test_reward_perturbation_witness():
    mdp, tr = mirrored_chain()
    R = mdp.R.copy()
    R[2, 1] += 0.3
    rep = check_automorphism(TabularMDP(mdp.P, R), tr)
    assert not rep.is_automorphism
    assert rep.max_reward_violation == pytest.approx(0.3)
    assert rep.witness[:2] in ((2, 1), (int(tr.f[2]), int(tr.g[2, 1])))


def test_non_bijective_transform_rejected():
    mdp, _ = mirrored_chain()
    with pytest.raises(ValueError):
        check_automorphism(mdp, TabularTransform([0, 0, 1, 2], np.tile([1, 0], (4, 1))))
    with pytest.raises(ValueError):
        check_automorphism(mdp, TabularTransform([3, 2, 1, 0], np.tile([1, 1], (4, 1))))


def test_transform_inverse_composes_to_identity():
    _, tr = mirrored_chain()
    inv = tr.inverse()
    for s in range(4):
        assert inv.f[tr.f[s]] == s
        for a in range(2):
            assert inv.g[tr.f[s], tr.g[s, a]] == a


def test_exhaustive_single_entry_perturbations():
    """Every single-entry perturbation of at least tol is caught (mass moved within a row)."""
    mdp, tr = mirrored_chain(p_stay=0.3)
    tol = 1e-6
    for s, a, s1, s2 in itertools.product(range(4), range(2), range(4), range(4)):
        if s1 == s2 or mdp.P[s, a, s1] < 0.01:
            continue
        P = mdp.P.copy()
        P[s, a, s1] -= 0.01
        P[s, a, s2] += 0.01
        rep = check_automorphism(TabularMDP(P, mdp.R), tr, tol)
        assert not rep.is_automorphism
        assert rep.max_transition_violation >= 0.01 - 1e-12


def test_tabular_mdp_validation():
    with pytest.raises(ValueError):
        TabularMDP(np.full((2, 1, 2), 0.7), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        TabularMDP(np.full((2, 1, 2), 0.5), np.zeros((3, 1)))


def test_trivial_homomorphism():
    mdp = random_mdp(np.random.default_rng(2))
    rep = check_homomorphism(mdp, mdp, np.arange(4), np.tile(np.arange(2), (4, 1)), [[0], [1], [2], [3]])
    assert rep.is_automorphism


def collapsed_chain():
    mdp, tr = mirrored_chain()
    # abstract states: outer (L2/R2) and inner (L1/R1); abstract actions: outward, inward
    f = np.array([0, 1, 1, 0])
    LEFT, RIGHT = 0, 1
    OUT, IN = 0, 1
    g = np.array([[OUT, IN], [OUT, IN], [IN, OUT], [IN, OUT]])
    partition = [[0, 3], [1, 2]]
    Pa = np.zeros((2, 2, 2))
    Ra = np.zeros((2, 2))
    for s in (0, 1):  # left half representatives
        for a in (LEFT, RIGHT):
            for block in partition:
                Pa[f[s], g[s, a], f[block[0]]] = mdp.P[s, a, block].sum()
            Ra[f[s], g[s, a]] = mdp.R[s, a]
    return mdp, TabularMDP(Pa, Ra), f, g, partition


def test_collapsed_chain_homomorphism():
    mdp, abstract, f, g, partition = collapsed_chain()
    rep = check_homomorphism(mdp, abstract, f, g, partition)
    assert rep.is_automorphism
    # manual block sum: from L1 moving left reaches the outer block with probability 1 - p_stay
    assert abstract.P[1, 0, 0] == pytest.approx(0.8)


def test_wrong_block_assignment_fails():
    mdp, abstract, f, g, _ = collapsed_chain()
    g_bad = g.copy()
    g_bad[1] = g_bad[1][::-1]
    rep = check_homomorphism(mdp, abstract, f, g_bad, [[0, 3], [1, 2]])
    assert not rep.is_automorphism
    assert rep.witness[0] == 1


def test_malformed_partition():
    mdp, abstract, f, g, _ = collapsed_chain()
    with pytest.raises(ValueError):
        check_homomorphism(mdp, abstract, f, g, [[0, 3], [1]])
    with pytest.raises(ValueError):
        check_homomorphism(mdp, abstract, f, g, [[0, 1], [2, 3]])


# -- continuous mirror --------------------------------------------------------------

def test_mirror_state_involution():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = rng.normal(size=layout.OBS_DIM)
        assert np.array_equal(mirror_state(mirror_state(s)), s)


def test_mirror_state_phase_shift_at_symmetric_configuration():
    idx = layout.OBS_INDEX
    s = np.zeros(layout.OBS_DIM)
    s[idx["phase_sin"]], s[idx["phase_cos"]] = 0.0, 1.0  # cycle phase 0
    for side, y in (("left", 0.05), ("right", -0.05)):
        s[idx[f"{side}_y"]] = y
    s[idx["cmd_wt"]], s[idx["cmd_cz"]] = 0.5, 0.5
    m = mirror_state(s)
    expected = s.copy()
    expected[idx["phase_cos"]] = -1.0  # phase pi
    assert np.allclose(m, expected)


def test_mirror_state_index_oracle():
    rng = np.random.default_rng(4)
    s = rng.normal(size=layout.OBS_DIM)
    m = mirror_state(s)
    names = layout.OBS_NAMES
    v = dict(zip(names, s))
    out = dict(zip(names, m))
    assert out["roll"] == -v["roll"] and out["pitch"] == v["pitch"]
    assert out["left_x"] == v["right_x"] and out["left_y"] == -v["right_y"]
    assert out["right_theta"] == -v["left_theta"]
    assert out["obj_y"] == -v["obj_y"] and out["obj_cos"] == v["obj_cos"]
    assert out["phase_sin"] == -v["phase_sin"] and out["phase_cos"] == -v["phase_cos"]
    assert out["res_lf_dy"] == -v["res_rf_dy"]


def test_mirror_action_tables():
    rng = np.random.default_rng(5)
    s = rng.normal(size=layout.OBS_DIM)
    a = rng.normal(size=layout.ACTION_DIM)
    m = mirror_action(s, a)
    i = layout.ACTION_INDEX
    for name in ("d_wx", "d_comz", "d_wt", "d_kphi", "d_kphidot"):
        assert m[i[name]] == a[i[name]]
    assert m[i["d_wy"]] == -a[i["d_wy"]] and m[i["d_wtheta"]] == -a[i["d_wtheta"]]
    assert m[i["lf_dx"]] == a[i["rf_dx"]] and m[i["lf_dy"]] == -a[i["rf_dy"]]
    assert np.array_equal(mirror_action(mirror_state(s), m), a)
    fwd = np.zeros(layout.ACTION_DIM)
    fwd[i["d_wx"]] = 0.7
    assert np.array_equal(mirror_action(s, fwd), fwd)


def test_mirror_length_errors():
    with pytest.raises(ValueError):
        mirror_state(np.zeros(3))
    with pytest.raises(ValueError):
        mirror_action(np.zeros(layout.OBS_DIM), np.zeros(3))
    with pytest.raises(ValueError):
        mirror_action(np.zeros(3), np.zeros(layout.ACTION_DIM))


def test_transform_serialization_round_trip():
    tr = biped_mirror()
    back = MirrorTransform.from_dict(tr.to_dict())
    assert np.array_equal(back.state_perm, tr.state_perm) and np.array_equal(back.action_sign, tr.action_sign)
    with pytest.raises(ValueError):
        MirrorTransform.from_dict({**tr.to_dict(), "extra": 1})
    with pytest.raises(ValueError):
        MirrorTransform([0, 0], [1, 1], [0], [1])


# -- augmentation ---------------------------------------------------------------------

def tiny_batch(rng, pol, theta, n):
    obs = rng.normal(size=(n, pol.obs_dim))
    act, logp = pol.sample(theta, obs, rng)
    z = np.zeros(n)
    return SampleBatch(obs=obs, act=act, logp_old=logp, rew=rng.normal(size=n), done=z.astype(bool),
                       val=z, next_val=z, adv=rng.normal(size=n), ret=z)


def test_augment_empty_and_sizes():
    tr = biped_mirror()
    rng = np.random.default_rng(6)
    pol = GaussianPolicy(tr.state_dim, tr.action_dim, (8,))
    theta = pol.init(rng)
    empty = tiny_batch(rng, pol, theta, 0)
    assert len(augment_batch(empty, tr, pol, theta)) == 0
    b = tiny_batch(rng, pol, theta, 5)
    aug = augment_batch(b, tr, pol, theta)
    assert len(aug) == 10
    assert np.array_equal(aug.obs[5:], tr.state(b.obs))
    assert np.array_equal(aug.act[5:], tr.action(b.obs, b.act))
    assert np.array_equal(aug.rew[5:], b.rew)
    assert np.allclose(aug.logp_old[5:], pol.log_prob(theta, aug.obs[5:], aug.act[5:]))


def test_augmented_gradient_two_pass_oracle():
    tr = biped_mirror()
    rng = np.random.default_rng(7)
    pol = GaussianPolicy(tr.state_dim, tr.action_dim, (6, 6))
    theta = pol.init(rng)
    theta[: pol.net.n_params] = rng.normal(scale=0.3, size=pol.net.n_params)
    theta = symmetrize_policy(pol, theta, tr)
    b = tiny_batch(rng, pol, theta, 16)
    aug = augment_batch(b, tr, pol, theta)
    cfg = PPOConfig()
    theta_new = theta + rng.normal(scale=0.01, size=len(theta))
    _, g_aug, _ = ppo_surrogate(pol, theta_new, aug, cfg)
    _, g_orig, _ = ppo_surrogate(pol, theta_new, b, cfg)
    _, g_mirror, _ = ppo_surrogate(pol, theta_new, aug.subset(np.arange(16, 32)), cfg)
    assert np.allclose(g_aug, 0.5 * (g_orig + g_mirror), atol=1e-12)
