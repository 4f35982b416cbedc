"""Five-state walking state machine."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from hybridwalk.engine.command import Side

TWO_PI = 2.0 * math.pi


class GaitPhase(enum.IntEnum):
    IDLE = 0
    INIT_SINGLE_SUPPORT = 1
    SINGLE_SUPPORT = 2
    INIT_DOUBLE_SUPPORT = 3
    DOUBLE_SUPPORT = 4


_NEXT = {
    GaitPhase.INIT_SINGLE_SUPPORT: GaitPhase.SINGLE_SUPPORT,
    GaitPhase.SINGLE_SUPPORT: GaitPhase.INIT_DOUBLE_SUPPORT,
    GaitPhase.INIT_DOUBLE_SUPPORT: GaitPhase.DOUBLE_SUPPORT,
}


@dataclass(frozen=True)
class GaitTiming:
    """Share of the stride duration spent in each walking state.

    The swing foot lifts off when single support begins and touches down
    when init double support ends.
    """

    init_single: float = 0.15
    single: float = 0.35
    init_double: float = 0.15
    double: float = 0.35

    def __post_init__(self):
        parts = (self.init_single, self.single, self.init_double, self.double)
        if min(parts) < 0 or not math.isclose(sum(parts), 1.0, abs_tol=1e-12):
            raise ValueError("state fractions must be non-negative and sum to 1")

    def fraction(self, phase: GaitPhase) -> float:
        return {
            GaitPhase.INIT_SINGLE_SUPPORT: self.init_single,
            GaitPhase.SINGLE_SUPPORT: self.single,
            GaitPhase.INIT_DOUBLE_SUPPORT: self.init_double,
            GaitPhase.DOUBLE_SUPPORT: self.double,
        }.get(phase, 0.0)

    @property
    def lift_off(self) -> float:
        return self.init_single

    @property
    def touch_down(self) -> float:
        return self.init_single + self.single + self.init_double


@dataclass(frozen=True)
class GaitState:
    phase: GaitPhase = GaitPhase.IDLE
    timer: float = 0.0
    cycle_phase: float = 0.0
    w_t: float = 0.5

    def __post_init__(self):
        if self.timer < 0:
            raise ValueError("timer must be non-negative")

    @property
    def support_side(self) -> Side:
        """The left foot swings during the first half of the cycle."""
        return Side.RIGHT if self.cycle_phase < math.pi else Side.LEFT

    @property
    def walking(self) -> bool:
        return self.phase != GaitPhase.IDLE


def step_state_machine(
    state: GaitState,
    dt: float,
    step_pending: bool,
    early_transition: bool = False,
    timing: GaitTiming = GaitTiming(),
    w_t: float | None = None,
) -> tuple:
    """Advance the machine by ``dt``.

    Returns ``(new_state, entered)`` where ``entered`` lists the phases
    entered during this call, in order. ``w_t`` is the stride duration to
    use for a stride that starts during this call (the filtered command
    is applied only on entry to init single support).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    entered = []
    phase, timer, cyc, stride = state.phase, state.timer, state.cycle_phase, state.w_t

    if phase == GaitPhase.IDLE:
        if not step_pending:
            return state, entered
        stride = w_t if w_t is not None else stride
        phase, timer = GaitPhase.INIT_SINGLE_SUPPORT, timing.init_single * stride
        entered.append(phase)
        # first stride starts from a neutral, left-swing phase
        cyc = 0.0 if cyc < math.pi else math.pi

    remaining = dt
    if early_transition:
        timer = 0.0
    while True:
        if timer > remaining:
            timer -= remaining
            cyc = (cyc + math.pi * remaining / stride) % TWO_PI
            break
        # the current state expires inside this step
        remaining -= timer
        cyc = (cyc + math.pi * timer / stride) % TWO_PI
        if phase in _NEXT:
            phase = _NEXT[phase]
            timer = timing.fraction(phase) * stride
        elif phase == GaitPhase.DOUBLE_SUPPORT:
            # snap to the exact stride boundary to keep rounding from accumulating
            cyc = round(cyc / math.pi) * math.pi % TWO_PI
            if step_pending:
                stride = w_t if w_t is not None else stride
                phase = GaitPhase.INIT_SINGLE_SUPPORT
                timer = timing.init_single * stride
            else:
                phase, timer = GaitPhase.IDLE, 0.0
                entered.append(phase)
                break
        entered.append(phase)
        if remaining <= 0.0:
            break
    return replace(state, phase=phase, timer=max(timer, 0.0), cycle_phase=cyc, w_t=stride), entered
