"""CPG-ZMP walk engine: PFS oscillators under the LIPM, gait machine, stabilizer."""
from hybridwalk.engine.command import (
    Footstep,
    FootstepPlan,
    Side,
    StrideLimits,
    WalkCommand,
    filter_command,
    plan_footsteps,
    standing_seed,
)
from hybridwalk.engine.fitting import DEFAULT_TERMS, FitError, fit_channel, fit_oscillators, fit_stride
from hybridwalk.engine.gait import GaitPhase, GaitState, GaitTiming, step_state_machine
from hybridwalk.engine.ik import UnreachableTarget, leg_fk, leg_ik
from hybridwalk.engine.oscillator import (
    CHANNELS,
    LIPMParams,
    OscillatorBank,
    PFSOscillator,
    eval_pfs,
    zmp_from_com,
    zmp_oscillator,
    zmp_scales,
)
from hybridwalk.engine.stabilizer import StabilizerGains, TorsoState, stabilizer_correction
from hybridwalk.engine.targets import (
    EngineConfig,
    ReferenceTargets,
    WalkEngine,
    export_trajectory_csv,
    fit_for_command,
    reference_targets,
    simulate_walk,
)
