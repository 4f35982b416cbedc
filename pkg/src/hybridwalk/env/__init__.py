"""Desk-scale biped environment on top of the walk engine."""
from hybridwalk.env.biped import (
    K1,
    K2,
    BipedEnv,
    EnvState,
    EpisodeFinished,
    PushSchedule,
    RobotParams,
    add_observation_noise,
    apply_push,
    check_conquer,
    compute_reward,
    draw_objectives,
    generate_objective,
    objective_errors,
    state_difference,
    wrap_angle,
)
from hybridwalk.env.scenario import SCENARIOS, ScenarioConfig, get_scenario
