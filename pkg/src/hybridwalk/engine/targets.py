"""Reference targets from a fitted bank, and a stateful walk engine driver."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from hybridwalk.engine.command import StrideLimits, WalkCommand, filter_command
from hybridwalk.engine.fitting import DEFAULT_TERMS, fit_stride
from hybridwalk.engine.gait import GaitPhase, GaitState, GaitTiming, step_state_machine
from hybridwalk.engine.oscillator import LIPMParams, OscillatorBank
from hybridwalk.engine.stabilizer import StabilizerGains


@dataclass(frozen=True)
class ReferenceTargets:
    """Cartesian targets in the body frame.

    Feet are ``(x, y, z, theta)``; arms are sagittal offsets; ``com`` and
    ``zmp`` are ``(x, y)``.
    """

    left: tuple
    right: tuple
    arm_left: float
    arm_right: float
    com: tuple
    zmp: tuple


def stance_targets(hip_width: float) -> ReferenceTargets:
    h = hip_width / 2
    return ReferenceTargets((0.0, h, 0.0, 0.0), (0.0, -h, 0.0, 0.0), 0.0, 0.0, (0.0, 0.0), (0.0, 0.0))


def reference_targets(bank: OscillatorBank | None, state: GaitState, t: float | None = None) -> ReferenceTargets:
    """Evaluate the bank for both sides; the right side runs half a period behind.

    ``t`` is the time inside the gait cycle; when omitted it is derived
    from ``state.cycle_phase``.
    """
    if bank is None or state.phase == GaitPhase.IDLE:
        return stance_targets(bank.hip_width if bank is not None else 0.1)
    if t is None:
        t = state.cycle_phase / bank.beta
    h = bank.hip_width / 2
    left = bank.evaluate(t)
    right = bank.evaluate(t + bank.w_t)
    ch = {name: i for i, name in enumerate(bank.packed()[3])}
    zx, zy = bank.zmp(t)
    return ReferenceTargets(
        left=(left[ch["X"]], h + left[ch["Y"]], left[ch["Z"]], left[ch["Theta"]]),
        right=(right[ch["X"]], -h + right[ch["Y"]], right[ch["Z"]], right[ch["Theta"]]),
        arm_left=left[ch["Arm"]],
        arm_right=right[ch["Arm"]],
        com=(left[ch["COMx"]], left[ch["COMy"]]),
        zmp=(zx, zy),
    )


@dataclass(frozen=True)
class EngineConfig:
    lipm: LIPMParams = LIPMParams()
    timing: GaitTiming = GaitTiming()
    hip_width: float = 0.1
    filter_alpha: float = 0.25
    limits: StrideLimits = StrideLimits()
    gains: StabilizerGains = StabilizerGains()
    term_counts: tuple = tuple(sorted(DEFAULT_TERMS.items()))


@lru_cache(maxsize=512)
def _cached_fit(stride, cmd, c_z, g, timing, hip_width, term_counts):
    return fit_stride(stride, cmd, LIPMParams(g, c_z), dict(term_counts), timing, hip_width)


def fit_for_command(cmd: WalkCommand, config: EngineConfig, c_z: float | None = None) -> OscillatorBank:
    """Steady-state bank for a constant command (memoised on the exact inputs)."""
    cz = config.lipm.c_z if c_z is None else c_z
    return _cached_fit(
        (cmd.w_x, cmd.w_y, cmd.w_theta), cmd, cz, config.lipm.g, config.timing, config.hip_width, config.term_counts
    )


@dataclass
class WalkEngine:
    """Gait machine + command filter + per-stride refit."""

    config: EngineConfig = field(default_factory=EngineConfig)
    state: GaitState = field(default_factory=GaitState)
    command: WalkCommand = field(default_factory=WalkCommand)
    bank: OscillatorBank | None = None

    def step(self, raw: WalkCommand | None, dt: float, early_transition: bool = False) -> list:
        """Advance by ``dt``; ``raw=None`` means no further steps are requested."""
        pending = raw is not None
        if pending:
            self.config.limits.check(raw)
        prev_phase = self.state.phase
        new_cmd = self.command
        if pending and (prev_phase in (GaitPhase.IDLE, GaitPhase.DOUBLE_SUPPORT)):
            new_cmd = filter_command(raw, self.command, self.config.filter_alpha)
        self.state, entered = step_state_machine(
            self.state, dt, pending, early_transition, self.config.timing, w_t=new_cmd.w_t
        )
        if GaitPhase.INIT_SINGLE_SUPPORT in entered:
            self.command = new_cmd
            self.bank = fit_for_command(self.command, self.config)
        return entered

    def targets(self, t: float | None = None) -> ReferenceTargets:
        return reference_targets(self.bank, self.state, t)


def simulate_walk(cmd: WalkCommand, n_strides: int, dt: float = 0.01, config: EngineConfig | None = None):
    """Run the engine with a constant command and return world-frame samples.

    Returns a dict of arrays keyed by channel name plus ``t``. The command
    filter is bypassed so every stride uses ``cmd`` exactly.
    """
    config = config or EngineConfig(filter_alpha=1.0)
    engine = WalkEngine(config=config, command=cmd)
    rows = {k: [] for k in (
        "t", "phase", "left_x", "left_y", "left_z", "left_theta", "right_x", "right_y", "right_z",
        "right_theta", "arm_left", "arm_right", "com_x", "com_y", "zmp_x", "zmp_y", "body_x", "body_y",
        "heading",
    )}
    bx = by = heading = 0.0
    t = 0.0
    total = n_strides * cmd.w_t
    engine.step(cmd, 1e-12)
    while t < total - 1e-9:
        engine.step(cmd, dt)
        t += dt
        vx, vy, vth = engine.bank.velocity
        c, s = math.cos(heading), math.sin(heading)
        bx += (c * vx - s * vy) * dt
        by += (s * vx + c * vy) * dt
        heading += vth * dt
        tg = engine.targets()
        c, s = math.cos(heading), math.sin(heading)

        def world(p):
            return bx + c * p[0] - s * p[1], by + s * p[0] + c * p[1]

        rows["t"].append(t)
        rows["phase"].append(int(engine.state.phase))
        for side, foot in (("left", tg.left), ("right", tg.right)):
            wx, wy = world(foot)
            rows[f"{side}_x"].append(wx)
            rows[f"{side}_y"].append(wy)
            rows[f"{side}_z"].append(foot[2])
            rows[f"{side}_theta"].append(heading + foot[3])
        rows["arm_left"].append(tg.arm_left)
        rows["arm_right"].append(tg.arm_right)
        for key, p in (("com", tg.com), ("zmp", tg.zmp)):
            wx, wy = world(p)
            rows[f"{key}_x"].append(wx)
            rows[f"{key}_y"].append(wy)
        rows["body_x"].append(bx)
        rows["body_y"].append(by)
        rows["heading"].append(heading)
    return {k: np.asarray(v) for k, v in rows.items()}


def export_trajectory_csv(path, cmd: WalkCommand, n_strides: int, rate_hz: float = 100.0,
                          config: EngineConfig | None = None) -> int:
    """Write a long-format ``t,channel,value`` CSV; returns the number of data rows."""
    data = simulate_walk(cmd, n_strides, 1.0 / rate_hz, config)
    channels = [k for k in data if k not in ("t", "phase")]
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "channel", "value"])
        for i, t in enumerate(data["t"]):
            for ch in channels:
                w.writerow([f"{t:.6f}", ch, repr(float(data[ch][i]))])
                n += 1
    return n
