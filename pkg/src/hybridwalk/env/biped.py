"""Desk-scale biped driven by the walk engine.

The body frame travels with the walk engine's average stride velocity.
The COM deviation ``e`` from the engine's reference obeys the LIPM,
``e'' = omega0^2 (e - u)``, where the ZMP offset ``u`` comes from the PD
stabilizer and is limited by the support polygon of the current stance.
Disturbances enter as COM velocity kicks: stride-velocity changes,
per-footfall terrain offsets and pushes.
"""
from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from hybridwalk import kernels, layout
from hybridwalk.engine.command import WalkCommand, filter_command
from hybridwalk.engine.gait import GaitPhase, GaitState, GaitTiming, step_state_machine
from hybridwalk.engine.targets import EngineConfig, fit_for_command, reference_targets, stance_targets
from hybridwalk.env.scenario import ScenarioConfig

TWO_PI = 2.0 * math.pi
K1, K2 = 2.0, 3.5
TILT_LIMIT = 0.6
ZMP_MARGIN = 0.02
N_DRAWS = 64

A = layout.ACTION_INDEX
_ACTION_PERM, _ACTION_SIGN = (np.array(v) for v in layout.tables(layout.ACTION_FIELDS))


@dataclass(frozen=True)
class RobotParams:
    """Nominal walk-engine and body constants plus the residual ranges (one unit of action)."""

    g: float = 9.81
    c_z: float = 0.5
    w_t: float = 0.5
    w_z: float = 0.04
    hip_width: float = 0.1
    foot_half_length: float = 0.06
    foot_half_width: float = 0.03
    k_phi: float = 2.0
    k_phidot: float = 0.15
    terrain_gain: float = 2.0
    scale_wx: float = 0.2
    scale_wy: float = 0.08
    scale_wtheta: float = 0.4
    scale_comz: float = 0.05
    scale_wt: float = 0.15
    scale_gain: float = 0.5
    scale_foot: float = 0.03


@dataclass
class EnvState:
    """Complete, copyable environment state.

    ``objective`` is ``(q_x, q_y, q_theta)`` in the world frame;
    ``objective_draws`` are the pre-drawn ``(radius, bearing, heading)``
    triples for later objectives and ``push_angles`` the per-window push
    directions (body frame), so the state alone fixes the future.
    """

    time: float
    body: np.ndarray  # world (x, y, heading)
    e: np.ndarray  # COM deviation from the reference, body frame
    edot: np.ndarray
    gait: GaitState
    cmd: WalkCommand
    c_z: float
    residual: np.ndarray
    objective: np.ndarray
    conquer_timer: float
    terrain: np.ndarray
    footfall: int
    push_angles: np.ndarray
    objective_draws: np.ndarray
    draw_index: int
    done: bool = False
    fell: bool = False
    zmp: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def copy(self) -> "EnvState":
        return copy.deepcopy(self)

    def mirrored(self) -> "EnvState":
        """Reflect the whole world in the robot's sagittal plane.

        World ``y`` and every heading flip sign, lateral quantities flip,
        the gait advances half a cycle so the other leg takes the same
        role, and the pre-drawn future is mirrored alongside.
        """
        flip = np.array([1.0, -1.0])
        draws = self.objective_draws * np.array([1.0, -1.0, -1.0])
        return replace(
            self,
            body=self.body * np.array([1.0, -1.0, -1.0]),
            e=self.e * flip,
            edot=self.edot * flip,
            gait=replace(self.gait, cycle_phase=(self.gait.cycle_phase + math.pi) % TWO_PI),
            cmd=self.cmd.mirrored(),
            residual=self.residual[_ACTION_PERM] * _ACTION_SIGN,
            objective=self.objective * np.array([1.0, -1.0, -1.0]),
            terrain=self.terrain.copy(),
            push_angles=-self.push_angles,
            objective_draws=draws,
            zmp=self.zmp * flip,
        )


def state_difference(a: EnvState, b: EnvState) -> float:
    """Largest absolute difference over every numeric field; angles compared modulo 2 pi."""
    if (a.gait.phase, a.footfall, a.draw_index, a.done, a.fell) != (b.gait.phase, b.footfall, b.draw_index, b.done, b.fell):
        return math.inf

    def ang(x, y):
        return abs(math.remainder(x - y, TWO_PI))

    diffs = [
        abs(a.time - b.time), abs(a.gait.timer - b.gait.timer), ang(a.gait.cycle_phase, b.gait.cycle_phase),
        abs(a.gait.w_t - b.gait.w_t), abs(a.c_z - b.c_z), abs(a.conquer_timer - b.conquer_timer),
        ang(a.body[2], b.body[2]), ang(a.objective[2], b.objective[2]),
    ]
    ca, cb = a.cmd, b.cmd
    diffs += [abs(x - y) for x, y in zip((ca.w_x, ca.w_y, ca.w_z, ca.w_theta, ca.w_t),
                                         (cb.w_x, cb.w_y, cb.w_z, cb.w_theta, cb.w_t))]
    for x, y in ((a.body[:2], b.body[:2]), (a.objective[:2], b.objective[:2]), (a.e, b.e), (a.edot, b.edot),
                 (a.residual, b.residual), (a.terrain, b.terrain), (a.zmp, b.zmp),
                 (np.cos(a.push_angles), np.cos(b.push_angles)), (np.sin(a.push_angles), np.sin(b.push_angles)),
                 (a.objective_draws, b.objective_draws)):
        diffs.append(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) if np.size(x) else 0.0)
    return max(diffs)

def wrap_angle(a: float) -> float:
    """Map to ``(-pi, pi]``."""
    return math.pi - (math.pi - a) % TWO_PI


def objective_errors(body, objective) -> tuple:
    """Distance ``d`` to the objective and absolute heading error ``alpha``."""
    d = math.hypot(objective[0] - body[0], objective[1] - body[1])
    return d, abs(wrap_angle(objective[2] - body[2]))


def compute_reward(prev: EnvState, cur: EnvState, k1: float = K1, k2: float = K2) -> float:
    """``k1 (d_prev - d_cur) + k2 (alpha_prev - alpha_cur)`` against the previous objective."""
    d0, a0 = objective_errors(prev.body, prev.objective)
    d1, a1 = objective_errors(cur.body, prev.objective)
    return k1 * (d0 - d1) + k2 * (a0 - a1)


def draw_objectives(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` triples ``(radius fraction, bearing, heading)``; uniform over the disc and circle.

    Bearing and heading are drawn in ``(-pi, pi]``, a mirror-invariant law.
    """
    u = rng.random((n, 3))
    return np.column_stack([np.sqrt(u[:, 0]), math.pi - TWO_PI * u[:, 1], math.pi - TWO_PI * u[:, 2]])


def generate_objective(body, draw, objective_range: float) -> np.ndarray:
    """Place an objective from a pre-drawn triple relative to the current pose."""
    r = objective_range * draw[0]
    bearing = body[2] + draw[1]
    return np.array([body[0] + r * math.cos(bearing), body[1] + r * math.sin(bearing), wrap_angle(body[2] + draw[2])])


def check_conquer(inside, dt: float, conquer_time: float) -> bool:
    """True once the trace has been inside continuously for ``conquer_time``.

    ``inside`` is the per-step history of "within radius" flags; the final
    run of consecutive ``True`` values is what counts, boundary inclusive.
    """
    run = 0
    for flag in inside:
        run = run + 1 if flag else 0
    return run * dt >= conquer_time - 1e-9


@dataclass(frozen=True)
class PushSchedule:
    force: float = 300.0
    period: float = 4.0
    duration: float = 0.025
    mass: float = 30.0
    enabled: bool = True

    def overlap(self, t0: float, t1: float) -> tuple:
        """``(window index, seconds of [t0, t1] inside a push window)``; windows start at ``k * period``, k >= 1."""
        k = max(1, int(math.floor(t1 / self.period)))
        start = k * self.period
        lo, hi = max(t0, start), min(t1, start + self.duration)
        return k, max(0.0, hi - lo)


def apply_push(state: EnvState, schedule: PushSchedule, dt: float, rng: np.random.Generator | None = None) -> EnvState:
    """Add ``F / m`` times the in-window time of ``[t, t + dt]`` to the COM velocity.

    The direction comes from ``rng`` when given, otherwise from the state's
    pre-drawn per-window angles.
    """
    if not schedule.enabled:
        return state
    k, seconds = schedule.overlap(state.time, state.time + dt)
    if seconds <= 0.0:
        return state
    if rng is not None:
        angle = rng.uniform(0.0, TWO_PI)
    else:
        angle = state.push_angles[(k - 1) % len(state.push_angles)]
    dv = schedule.force * seconds / schedule.mass
    return replace(state, edot=state.edot + dv * np.array([math.cos(angle), math.sin(angle)]))


def add_observation_noise(obs, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """Multiply each component by an independent ``U(1 - amplitude, 1 + amplitude)`` factor."""
    obs = np.asarray(obs, dtype=np.float64)
    if not 0 <= amplitude < 1:
        raise ValueError("noise amplitude must be in [0, 1)")
    if amplitude == 0:
        return obs.copy()
    return obs * rng.uniform(1.0 - amplitude, 1.0 + amplitude, size=obs.shape)


class EpisodeFinished(RuntimeError):
    """Raised when stepping an environment whose episode has ended."""


class BipedEnv:
    """Gym-like environment: ``reset(seed)`` then ``step(action)``."""

    obs_dim = layout.OBS_DIM
    act_dim = layout.ACTION_DIM

    def __init__(self, scenario: ScenarioConfig | None = None, robot: RobotParams | None = None, record: bool = False):
        self.scenario = scenario or ScenarioConfig()
        self.robot = robot or RobotParams()
        r = self.robot
        self.engine_cfg = EngineConfig(hip_width=r.hip_width, filter_alpha=self.scenario.command_alpha)
        self.timing = GaitTiming()
        self.pushes = PushSchedule(
            self.scenario.push_force, self.scenario.push_period, self.scenario.push_duration,
            self.scenario.mass, self.scenario.push,
        )
        self.state: EnvState | None = None
        self.bank = None
        self.rng = np.random.default_rng()
        self.noise_rng = np.random.default_rng()
        self.record = record
        self.history = []

    # -- state handling -------------------------------------------------
    def reset(self, seed=None) -> np.ndarray:
        """Start at the map centre in stance with a fresh objective."""
        if seed is not None:
            ss = np.random.SeedSequence(seed)
            world, noise = ss.spawn(2)
            self.rng = np.random.default_rng(world)
            self.noise_rng = np.random.default_rng(noise)
        sc, r = self.scenario, self.robot
        n_terrain = int(sc.episode_cap / r.w_t * 2) + 64
        if sc.terrain == "uneven":
            terrain = self.rng.uniform(-sc.terrain_amplitude, sc.terrain_amplitude, n_terrain)
        else:
            terrain = np.zeros(n_terrain)
        n_push = int(sc.episode_cap / sc.push_period) + 2
        push_angles = self.rng.uniform(0.0, TWO_PI, n_push)
        draws = draw_objectives(self.rng, N_DRAWS)
        body = np.zeros(3)
        state = EnvState(
            time=0.0,
            body=body,
            e=np.zeros(2),
            edot=np.zeros(2),
            gait=GaitState(w_t=r.w_t),
            cmd=WalkCommand(0.0, 0.0, r.w_z, 0.0, r.w_t),
            c_z=r.c_z,
            residual=np.zeros(self.act_dim),
            objective=generate_objective(body, draws[0], sc.objective_range),
            conquer_timer=0.0,
            terrain=terrain,
            footfall=0,
            push_angles=push_angles,
            objective_draws=draws,
            draw_index=1,
        )
        self.set_state(state)
        self.history = []
        return self.observe(noise=True)

    def get_state(self) -> EnvState:
        return self.state.copy()

    def set_state(self, state: EnvState) -> None:
        self.state = state.copy()
        self.bank = self._bank_for(self.state) if self.state.gait.phase != GaitPhase.IDLE else None

    def _bank_for(self, state):
        return fit_for_command(state.cmd, self.engine_cfg, c_z=state.c_z)

    # -- observation ------------------------------------------------------
    def observe(self, noise: bool = False) -> np.ndarray:
        s, r = self.state, self.robot
        cz = s.c_z
        ex, ey = s.e
        vx, vy = s.edot
        if self.bank is not None:
            bvx, bvy, _ = self.bank.velocity
            tg = reference_targets(self.bank, s.gait)
        else:
            bvx = bvy = 0.0
            tg = stance_targets(r.hip_width)
        res = s.residual
        obs = np.empty(self.obs_dim)
        obs[0] = math.sin(s.gait.cycle_phase)
        obs[1] = math.cos(s.gait.cycle_phase)
        obs[2] = math.atan2(ey, cz)
        obs[3] = math.atan2(ex, cz)
        obs[4] = vy * cz / (cz * cz + ey * ey)
        obs[5] = vx * cz / (cz * cz + ex * ex)
        obs[6] = bvx + vx
        obs[7] = bvy + vy
        for k, foot, fx, fy in ((8, tg.left, A["lf_dx"], A["lf_dy"]), (12, tg.right, A["rf_dx"], A["rf_dy"])):
            obs[k] = foot[0] + r.scale_foot * res[fx] - ex
            obs[k + 1] = foot[1] + r.scale_foot * res[fy] - ey
            obs[k + 2] = foot[2]
            obs[k + 3] = foot[3]
        obs[16] = s.cmd.w_x
        obs[17] = s.cmd.w_y
        obs[18] = s.cmd.w_theta
        obs[19] = s.cmd.w_t
        obs[20] = cz
        bx, by, h = s.body
        dx, dy = s.objective[0] - bx, s.objective[1] - by
        c, sn = math.cos(h), math.sin(h)
        obs[21] = c * dx + sn * dy
        obs[22] = -sn * dx + c * dy
        rel = s.objective[2] - h
        obs[23] = math.sin(rel)
        obs[24] = math.cos(rel)
        obs[25] = s.conquer_timer / self.scenario.conquer_time
        obs[26:] = res
        if noise and self.scenario.noise > 0:
            obs = add_observation_noise(obs, self.scenario.noise, self.noise_rng)
        return obs

    # -- dynamics ---------------------------------------------------------
    def _raw_command(self, res):
        r = self.robot
        cmd = WalkCommand(
            r.scale_wx * res[A["d_wx"]],
            r.scale_wy * res[A["d_wy"]],
            r.w_z,
            r.scale_wtheta * res[A["d_wtheta"]],
            r.w_t + r.scale_wt * res[A["d_wt"]],
        )
        return cmd, r.c_z + r.scale_comz * res[A["d_comz"]]

    def _support_bounds(self, gait: GaitState, res):
        """ZMP offset limits ``(lo, hi)`` per axis, body frame, shifted by the foot residuals."""
        r = self.robot
        sf = r.scale_foot
        lx, ly = sf * res[A["lf_dx"]], sf * res[A["lf_dy"]]
        rx, ry = sf * res[A["rf_dx"]], sf * res[A["rf_dy"]]
        single = gait.phase in (GaitPhase.SINGLE_SUPPORT, GaitPhase.INIT_DOUBLE_SUPPORT)
        hl, hw = r.foot_half_length, r.foot_half_width
        if single:
            # the left foot swings during the first half of the cycle
            fx, fy = (rx, ry) if gait.cycle_phase < math.pi else (lx, ly)
            return (fx - hl, fy - hw), (fx + hl, fy + hw)
        half = r.hip_width / 2 + hw
        return (min(lx, rx) - hl, ry - half), (max(lx, rx) + hl, ly + half)

    def step(self, action, dt: float | None = None):
        """Advance one control period; returns ``(obs, reward, done, info)``."""
        s = self.state
        if s is None:
            raise EpisodeFinished("call reset() before step()")
        if s.done:
            raise EpisodeFinished("episode has finished; call reset()")
        sc, r = self.scenario, self.robot
        dt = sc.dt if dt is None else dt
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        if a.shape != (self.act_dim,):
            raise ValueError(f"action must have shape ({self.act_dim},)")
        prev = s
        res = s.residual + sc.residual_alpha * (a - s.residual)
        raw, cz_raw = self._raw_command(res)
        candidate = filter_command(raw, s.cmd, sc.command_alpha)
        cz = s.c_z
        cz_candidate = cz + sc.command_alpha * (cz_raw - cz)
        phase_before = s.gait.cycle_phase
        gait, entered = step_state_machine(s.gait, dt, True, False, self.timing, w_t=candidate.w_t)

        edot = s.edot.copy()
        cmd, bank = s.cmd, self.bank
        events = []
        if GaitPhase.DOUBLE_SUPPORT in entered:
            # touch-down of the foot that was swinging
            side = 1.0 if phase_before < math.pi else -1.0
            h = s.terrain[s.footfall % len(s.terrain)]
            edot[1] += side * h * r.terrain_gain
            edot[0] -= abs(h) * r.terrain_gain
            s = replace(s, footfall=s.footfall + 1)
            events.append("touchdown")
        if GaitPhase.INIT_SINGLE_SUPPORT in entered:
            old_v = bank.velocity if bank is not None else (0.0, 0.0, 0.0)
            cmd, cz = candidate, cz_candidate
            bank = fit_for_command(cmd, self.engine_cfg, c_z=cz)
            # the COM keeps its velocity while the reference frame speeds up
            edot[0] -= bank.velocity[0] - old_v[0]
            edot[1] -= bank.velocity[1] - old_v[1]
        if bank is not None and gait.phase == GaitPhase.IDLE:
            bank = None

        pushed = apply_push(replace(s, edot=edot), self.pushes, dt)
        if pushed.edot is not edot:
            events.append("push")
        edot = pushed.edot

        # body frame advance at the stride's average velocity
        bx, by, h = s.body
        if bank is not None:
            vx, vy, vth = bank.velocity
            c, sn = math.cos(h), math.sin(h)
            bx += (c * vx - sn * vy) * dt
            by += (sn * vx + c * vy) * dt
            h = wrap_angle(h + vth * dt)

        # PD stabilizer as a ZMP offset, limited by the support polygon
        k_phi = r.k_phi * (1.0 + r.scale_gain * res[A["d_kphi"]])
        k_phidot = r.k_phidot * (1.0 + r.scale_gain * res[A["d_kphidot"]])
        lo, hi = self._support_bounds(gait, res)
        omega0 = math.sqrt(r.g / cz)
        e_new, edot_new, u = np.empty(2), np.empty(2), np.empty(2)
        fell = False
        for i in range(2):
            want = k_phi * s.e[i] + k_phidot * edot[i]
            u[i] = min(max(want, lo[i]), hi[i])
            if want < lo[i] - ZMP_MARGIN or want > hi[i] + ZMP_MARGIN:
                fell = True
            e_new[i], edot_new[i] = kernels.lipm_propagate(s.e[i], edot[i], u[i], omega0, dt)
        if abs(math.atan2(e_new[0], cz)) > TILT_LIMIT or abs(math.atan2(e_new[1], cz)) > TILT_LIMIT:
            fell = True

        cur = replace(
            s, time=s.time + dt, body=np.array([bx, by, h]), e=e_new, edot=edot_new, gait=gait,
            cmd=cmd, c_z=cz, residual=res, zmp=u, fell=fell,
        )
        reward = compute_reward(prev, cur)

        d, _ = objective_errors(cur.body, cur.objective)
        timer = cur.conquer_timer + dt if d <= sc.conquer_radius else 0.0
        if timer >= sc.conquer_time - 1e-9:
            draw = cur.objective_draws[cur.draw_index % len(cur.objective_draws)]
            cur = replace(cur, objective=generate_objective(cur.body, draw, sc.objective_range),
                          draw_index=cur.draw_index + 1)
            timer = 0.0
            events.append("conquer")
        truncated = cur.time >= sc.episode_cap - 1e-9
        cur = replace(cur, conquer_timer=timer, done=fell or truncated)
        if fell:
            events.append("fall")
        self.state, self.bank = cur, bank
        if self.record:
            self.history.append((cur.time, bx, by, h, math.atan2(e_new[1], cz), math.atan2(e_new[0], cz),
                                 reward, "|".join(events)))
        info = {"fell": fell, "truncated": truncated and not fell, "events": events}
        return self.observe(noise=True), reward, cur.done, info

    def dump_trajectory(self, path) -> None:
        """Write the recorded episode as ``t,com_x,com_y,heading,roll,pitch,reward,event``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "com_x", "com_y", "heading", "roll", "pitch", "reward", "event"])
            for row in self.history:
                w.writerow([repr(float(v)) if not isinstance(v, str) else v for v in row])
