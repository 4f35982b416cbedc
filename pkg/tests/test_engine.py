import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridwalk.engine import (
    FitError,
    FootstepPlan,
    GaitPhase,
    GaitState,
    LIPMParams,
    OscillatorBank,
    PFSOscillator,
    Side,
    StabilizerGains,
    StrideLimits,
    TorsoState,
    UnreachableTarget,
    WalkCommand,
    eval_pfs,
    export_trajectory_csv,
    filter_command,
    fit_oscillators,
    fit_stride,
    leg_fk,
    leg_ik,
    plan_footsteps,
    reference_targets,
    simulate_walk,
    stabilizer_correction,
    standing_seed,
    step_state_machine,
    zmp_from_com,
)
from hybridwalk.engine.fitting import VALUE, Knot, fit_channel


def random_bank(rng, w_t=None):
    w_t = w_t if w_t is not None else rng.uniform(0.3, 1.2)
    cmd = WalkCommand(rng.uniform(-0.2, 0.2), rng.uniform(-0.08, 0.08), rng.uniform(0.0, 0.1),
                      rng.uniform(-0.5, 0.5), w_t)
    lipm = LIPMParams(9.81, rng.uniform(0.3, 0.9))
    plan = plan_footsteps(cmd, standing_seed(0.1), 4)
    return fit_oscillators(plan, cmd, lipm), cmd


# -- command filter -----------------------------------------------------------

def test_filter_fixed_point_and_no_filtering():
    prev = WalkCommand(0.1, 0.02, 0.04, 0.1, 0.6)
    assert filter_command(prev, prev, 0.3) == prev
    raw = WalkCommand(0.2, -0.03, 0.05, 0.0, 0.5)
    assert filter_command(raw, prev, 1.0) == raw


def test_filter_lag_arithmetic():
    out = filter_command(WalkCommand(w_x=0.2), WalkCommand(w_x=0.0), 0.25)
    assert out.w_x == pytest.approx(0.05, abs=1e-15)


def test_filter_converges_geometrically():
    raw, cmd = WalkCommand(w_x=0.2, w_t=0.8), WalkCommand()
    gaps = []
    for _ in range(10):
        cmd = filter_command(raw, cmd, 0.25)
        gaps.append(raw.w_x - cmd.w_x)
    ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
    assert np.allclose(ratios, 0.75, atol=1e-9)


def test_filter_rejects_bad_alpha():
    with pytest.raises(ValueError):
        filter_command(WalkCommand(), WalkCommand(), 0.0)
    with pytest.raises(ValueError):
        filter_command(WalkCommand(), WalkCommand(), 1.5)


def test_command_invariants():
    with pytest.raises(ValueError):
        WalkCommand(w_t=0.0)
    with pytest.raises(ValueError):
        WalkCommand(w_z=-0.01)


# -- footstep planning --------------------------------------------------------

def test_plan_in_place_alternates_at_hip_width():
    plan = plan_footsteps(WalkCommand(w_z=0.0), standing_seed(0.1), 4)
    sides = [s.side for s in plan]
    assert sides == [Side.LEFT, Side.RIGHT, Side.LEFT, Side.RIGHT]
    assert np.allclose(plan.positions()[:, 0], 0.0)
    assert np.allclose(plan.positions()[:, 1], [0.05, -0.05, 0.05, -0.05])


def test_plan_forward_progression():
    cmd = WalkCommand(w_x=0.2 * 1.0, w_t=1.0)
    plan = plan_footsteps(cmd, standing_seed(0.1), 4)
    assert np.allclose(np.diff(plan.positions()[:, 0]), 0.2)
    assert plan[0].x == pytest.approx(0.2)


def test_plan_heading_cumulative_sum():
    plan = plan_footsteps(WalkCommand(w_theta=0.1), standing_seed(0.1), 4)
    assert np.allclose(plan.headings(), np.cumsum([0.1] * 4))


def test_plan_rejects_limits():
    with pytest.raises(ValueError):
        plan_footsteps(WalkCommand(w_x=0.5), standing_seed(0.1), 2)
    with pytest.raises(ValueError):
        plan_footsteps(WalkCommand(), standing_seed(0.1), 0)
    with pytest.raises(ValueError):
        StrideLimits().check(WalkCommand(w_t=5.0))


# -- PFS and ZMP ---------------------------------------------------------------

def test_eval_pfs_trivial_cases():
    assert eval_pfs(PFSOscillator([0, 1], [0, 0], 2 * math.pi), 0.0) == 0.0
    const = PFSOscillator([0.5], [math.pi / 2], 1.0)
    for t in (0.0, 0.3, 17.0):
        assert const(t) == pytest.approx(0.5, abs=1e-15)


def test_eval_pfs_matches_summation():
    osc = PFSOscillator([0, 1, 0.3], [0, 0, math.pi / 4], math.pi)
    t = 0.5
    expected = sum(a * math.sin(n * math.pi * t + p) for n, (a, p) in enumerate(zip([0, 1, 0.3], [0, 0, math.pi / 4])))
    assert eval_pfs(osc, t) == pytest.approx(expected, abs=1e-15)


def test_pfs_validation():
    with pytest.raises(ValueError):
        PFSOscillator([0, 1], [0], 1.0)
    with pytest.raises(ValueError):
        PFSOscillator([0, 1], [0, 0], 0.0)


@given(
    amps=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
    beta=st.floats(0.1, 20),
    t=st.floats(-10, 10),
)
@settings(max_examples=60, deadline=None)
def test_pfs_derivatives_match_finite_differences(amps, beta, t):
    rng = np.random.default_rng(len(amps))
    osc = PFSOscillator(amps, rng.uniform(-math.pi, math.pi, len(amps)), beta)
    h = 1e-5
    fd1 = (osc(t + h) - osc(t - h)) / (2 * h)
    scale = sum(abs(a) for a in amps) * (len(amps) * beta) ** 2 + 1
    assert osc.derivative(t, 1) == pytest.approx(fd1, abs=1e-6 * scale)
    fd2 = (osc.derivative(t + h, 1) - osc.derivative(t - h, 1)) / (2 * h)
    assert osc.derivative(t, 2) == pytest.approx(fd2, abs=1e-6 * scale * len(amps) * beta)


def test_zmp_constant_term_unscaled():
    com = PFSOscillator([0.3], [math.pi / 2], 2.0)
    assert zmp_from_com(com, LIPMParams(), 1.234) == pytest.approx(0.3)


def test_zmp_unit_frequency_ratio_doubles():
    lipm = LIPMParams(9.81, 0.5)
    com = PFSOscillator([0.0, 0.7], [0.0, 0.2], lipm.omega0)
    for t in np.linspace(0, 2, 7):
        assert zmp_from_com(com, lipm, t) == pytest.approx(2 * com(t), abs=1e-14)


def test_lipm_identity_on_fitted_banks():
    rng = np.random.default_rng(3)
    for _ in range(10):
        bank, _ = random_bank(rng)
        w0sq = bank.lipm.omega0**2
        for name in ("COMx", "COMy"):
            osc = bank.channels[name]
            for t in np.linspace(0, bank.period, 50):
                err = osc.derivative(t, 2) - w0sq * (osc(t) - zmp_from_com(osc, bank.lipm, t))
                assert abs(err) < 1e-9


def test_lipm_params():
    lipm = LIPMParams(9.81, 0.5)
    assert lipm.omega0 == math.sqrt(9.81 / 0.5)
    with pytest.raises(ValueError):
        LIPMParams(9.81, 0.0)


# -- fitting --------------------------------------------------------------------

def test_fit_zero_stride_is_in_place_sway():
    cmd = WalkCommand(w_z=0.04, w_t=0.5)
    bank = fit_oscillators(plan_footsteps(cmd, standing_seed(0.1), 4), cmd, LIPMParams())
    assert np.max(np.abs(bank.channels["X"].amplitudes)) < 1e-12
    t = np.linspace(0, bank.period, 400)
    comy = bank.channels["COMy"].sample(t)
    # pure oscillation between the foot centres: zero mean, symmetric extremes inside the hip width
    assert abs(comy.mean()) < 1e-12
    shifted = bank.channels["COMy"].sample(t + cmd.w_t)
    assert np.allclose(shifted, -comy, atol=1e-12)
    assert 0 < comy.max() < 0.05


def test_fit_residual_small_on_random_plans():
    rng = np.random.default_rng(11)
    for _ in range(20):
        bank, _ = random_bank(rng)
        assert bank.relative_residual < 1e-3
        for name, knots in bank.knots.items():
            osc = bank.channels[name]
            for k in knots:
                value = 0.0
                for t, kind, coef in k.terms:
                    if kind == 2:
                        value += coef * zmp_from_com(osc, bank.lipm, t)
                    elif kind == 0:
                        value += coef * osc(t)
                    else:
                        value += coef * osc.derivative(t, kind if kind == 1 else 2)
                scale = max(abs(kk.target) for kk in knots) or 1.0
                assert abs(value - k.target) < 1e-3 * scale + 1e-12


def test_fit_zmp_inside_support_at_knots():
    cmd = WalkCommand(0.1, 0.02, 0.04, 0.0, 0.6)
    bank = fit_oscillators(plan_footsteps(cmd, standing_seed(0.1), 4), cmd, LIPMParams())
    tm = 0.5 * (0.15 + 0.65) * cmd.w_t
    _, zy = bank.zmp(tm)
    # left swings first, so the ZMP sits under the right foot (y = -hip/2)
    assert zy == pytest.approx(-0.05, abs=1e-9)
    _, zy = bank.zmp(tm + cmd.w_t)
    assert zy == pytest.approx(0.05, abs=1e-9)


def test_fit_validates_inputs():
    cmd = WalkCommand()
    with pytest.raises(ValueError):
        fit_oscillators(FootstepPlan((standing_seed(0.1)[0],)), cmd, LIPMParams())
    with pytest.raises(ValueError):
        fit_oscillators(plan_footsteps(cmd, standing_seed(0.1), 4), cmd, LIPMParams(), {"Z": 1})


def test_fit_reports_non_convergence():
    # inconsistent constraints on a one-term channel cannot be met; a zero budget must fail loudly
    knots = [Knot(((0.1, VALUE, 1.0),), 1.0), Knot(((0.1, VALUE, 1.0),), -1.0), Knot(((0.4, VALUE, 1.0),), 3.0)]
    with pytest.raises(FitError):
        fit_channel(knots, 1, math.pi, 4.0, warm_start=False, max_iter=0)


def test_bank_rejects_mismatched_beta():
    osc = PFSOscillator([0, 1], [0, 0], math.pi)
    other = PFSOscillator([0, 1], [0, 0], 2 * math.pi)
    with pytest.raises(ValueError):
        OscillatorBank({"X": osc, "Y": other}, LIPMParams(), 1.0)
    with pytest.raises(ValueError):
        OscillatorBank({"X": osc}, LIPMParams(), 0.5)


def test_fit_is_mirror_equivariant():
    cmd = WalkCommand(0.15, 0.04, 0.04, 0.2, 0.5)
    lipm = LIPMParams()
    a = fit_stride((cmd.w_x, cmd.w_y, cmd.w_theta), cmd, lipm)
    m = cmd.mirrored()
    b = fit_stride((m.w_x, m.w_y, m.w_theta), m, lipm)
    t = np.linspace(0, a.period, 50)
    for name in ("X", "Z", "Arm", "COMx"):
        assert np.allclose(a.channels[name].sample(t), b.channels[name].sample(t), atol=1e-12)
    for name in ("Y", "Theta"):
        assert np.allclose(a.channels[name].sample(t), -b.channels[name].sample(t), atol=1e-12)
    assert np.allclose(a.channels["COMy"].sample(t), -b.channels["COMy"].sample(t + cmd.w_t), atol=1e-12)


# -- gait state machine ---------------------------------------------------------

def test_idle_absorbing_without_command():
    s = GaitState()
    for dt in (0.01, 1.0, 10.0):
        assert step_state_machine(s, dt, False)[0] == s


def test_double_support_to_idle_without_pending():
    s = GaitState(GaitPhase.DOUBLE_SUPPORT, timer=0.01, cycle_phase=math.pi * 0.99, w_t=1.0)
    out, entered = step_state_machine(s, 0.02, False)
    assert out.phase == GaitPhase.IDLE
    assert entered == [GaitPhase.IDLE]


def test_full_cycle_visits_states_in_order():
    s = GaitState(w_t=1.0)
    visited = []
    for _ in range(100):
        s, entered = step_state_machine(s, 0.01, True, w_t=1.0)
        visited.extend(entered)
    expected = [GaitPhase.INIT_SINGLE_SUPPORT, GaitPhase.SINGLE_SUPPORT,
                GaitPhase.INIT_DOUBLE_SUPPORT, GaitPhase.DOUBLE_SUPPORT]
    assert visited[:4] == expected
    assert visited[4] == GaitPhase.INIT_SINGLE_SUPPORT


def test_cycle_phase_advances_and_wraps():
    s = GaitState(w_t=0.5)
    s, _ = step_state_machine(s, 1e-9, True, w_t=0.5)
    for _ in range(25):
        s, _ = step_state_machine(s, 0.01, True, w_t=0.5)
    assert s.cycle_phase == pytest.approx(math.pi * (0.25 + 1e-9) / 0.5, abs=1e-9)
    for _ in range(75):
        s, _ = step_state_machine(s, 0.01, True, w_t=0.5)
    assert 0 <= s.cycle_phase < 2 * math.pi
    assert s.cycle_phase == pytest.approx(0.0, abs=1e-6) or s.cycle_phase == pytest.approx(2 * math.pi, abs=1e-6)


def test_liveness_and_return_to_idle():
    s = GaitState(w_t=0.5)
    seen = set()
    for _ in range(200):
        s, entered = step_state_machine(s, 0.01, True, w_t=0.5)
        seen.update(entered)
    assert seen == {GaitPhase.INIT_SINGLE_SUPPORT, GaitPhase.SINGLE_SUPPORT,
                    GaitPhase.INIT_DOUBLE_SUPPORT, GaitPhase.DOUBLE_SUPPORT}
    for _ in range(100):
        s, _ = step_state_machine(s, 0.01, False)
    assert s.phase == GaitPhase.IDLE


def test_early_transition_expires_timer():
    s = GaitState(GaitPhase.SINGLE_SUPPORT, timer=0.3, cycle_phase=0.5, w_t=1.0)
    out, entered = step_state_machine(s, 0.001, True, early_transition=True)
    assert entered[0] == GaitPhase.INIT_DOUBLE_SUPPORT


def test_state_machine_rejects_bad_dt():
    with pytest.raises(ValueError):
        step_state_machine(GaitState(), 0.0, True)


# -- stabilizer -------------------------------------------------------------------

def test_stabilizer_equilibrium_and_proportional():
    t = TorsoState(0.05, -0.02, 0.1, 0.0)
    c = stabilizer_correction(t, t, StabilizerGains())
    assert np.all(c.total == 0) and c.arm == 0
    c = stabilizer_correction(TorsoState(roll=0.1), TorsoState(), StabilizerGains(k_phi=(1, 1), k_phidot=(0, 0)))
    assert c.total[0] == pytest.approx(-0.1)


def test_stabilizer_matches_pd_law():
    rng = np.random.default_rng(5)
    gains = StabilizerGains(k_phi=(1.5, 2.5), k_phidot=(0.2, 0.1))
    for _ in range(20):
        a, d = (TorsoState(*rng.normal(size=4)) for _ in range(2))
        c = stabilizer_correction(a, d, gains)
        expected = -np.array(gains.k_phi) * (a.angles - d.angles) - np.array(gains.k_phidot) * (a.rates - d.rates)
        assert np.allclose(c.total, expected)
        assert np.allclose(c.ankle + c.hip + c.torso, expected)
        assert c.arm == pytest.approx(gains.arm_gain * expected[1])


def test_stabilizer_validation():
    with pytest.raises(ValueError):
        StabilizerGains(k_phi=(-1, 1))
    with pytest.raises(ValueError):
        TorsoState(roll=float("nan"))


# -- reference targets ---------------------------------------------------------------

def test_half_period_swap():
    rng = np.random.default_rng(7)
    bank, cmd = random_bank(rng)
    state = GaitState(GaitPhase.SINGLE_SUPPORT, 0.1, 0.0, cmd.w_t)
    h = bank.hip_width / 2
    for t in np.linspace(0, bank.period, 13):
        a = reference_targets(bank, state, t)
        b = reference_targets(bank, state, t + bank.w_t)
        # left at t + w_t is the right foot at t with the hip offset mirrored
        assert b.left[0] == a.right[0] and b.left[2] == a.right[2] and b.left[3] == a.right[3]
        assert b.left[1] - h == pytest.approx(a.right[1] + h, abs=1e-15)
        assert b.arm_left == a.arm_right


def test_idle_targets_static():
    bank, _ = random_bank(np.random.default_rng(1))
    tg = reference_targets(bank, GaitState(), 0.3)
    assert tg.left == (0.0, 0.05, 0.0, 0.0) and tg.right == (0.0, -0.05, 0.0, 0.0)


def test_targets_match_channel_oracle():
    bank, cmd = random_bank(np.random.default_rng(2))
    state = GaitState(GaitPhase.SINGLE_SUPPORT, 0.1, 0.0, cmd.w_t)
    for t in np.linspace(0, bank.period, 9):
        tg = reference_targets(bank, state, t)
        ch = bank.channels
        assert tg.left[0] == pytest.approx(eval_pfs(ch["X"], t), abs=1e-14)
        assert tg.right[2] == pytest.approx(eval_pfs(ch["Z"], t + cmd.w_t), abs=1e-14)
        assert tg.com[1] == pytest.approx(eval_pfs(ch["COMy"], t), abs=1e-14)


def test_trajectory_export(tmp_path):
    path = tmp_path / "traj.csv"
    n = export_trajectory_csv(path, WalkCommand(0.2, 0.05, 0.04, 0.0, 1.0), 2, rate_hz=100)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "channel", "value"]
    assert len(rows) - 1 == n
    times = sorted({float(r[0]) for r in rows[1:]})
    assert np.allclose(np.diff(times), 0.01, atol=1e-6)


def test_simulated_swing_apex_equals_height():
    data = simulate_walk(WalkCommand(0.1, 0.0, 0.05, 0.0, 0.5), 4, 0.005)
    assert data["left_z"].max() == pytest.approx(0.05, rel=1e-3)
    assert data["left_z"].min() > -1e-9


# -- leg IK -------------------------------------------------------------------------------

def test_ik_full_extension():
    hip, knee = leg_ik((0.0, -0.5), 0.25, 0.25)
    assert knee == pytest.approx(0.0, abs=1e-7)
    assert hip == pytest.approx(0.0, abs=1e-7)


def test_ik_law_of_cosines():
    _, knee = leg_ik((0.0, -0.25), 0.25, 0.25)
    assert knee == pytest.approx(2 * math.pi / 3, abs=1e-12)


@given(r=st.floats(0.05, 0.549), ang=st.floats(-2.5, 2.5), l1=st.floats(0.2, 0.3))
@settings(max_examples=200, deadline=None)
def test_ik_round_trip(r, ang, l1):
    l2 = 0.55 - l1
    lo = abs(l1 - l2) + 1e-6
    r = max(r, lo)
    target = (r * math.sin(ang), -r * math.cos(ang))
    hip, knee = leg_ik(target, l1, l2)
    x, z = leg_fk(hip, knee, l1, l2)
    assert math.hypot(x - target[0], z - target[1]) < 1e-9
    assert knee >= 0


def test_ik_unreachable_carries_nearest():
    with pytest.raises(UnreachableTarget) as info:
        leg_ik((0.0, -0.8), 0.25, 0.25)
    hip, knee = info.value.nearest
    assert knee == pytest.approx(0.0, abs=1e-7)
    assert leg_fk(hip, knee, 0.25, 0.25)[1] == pytest.approx(-0.5)
