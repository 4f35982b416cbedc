"""Observation and action layouts of the biped environment with their mirror rules.

Each entry is ``(name, partner, sign)``: mirroring writes
``sign * value[partner]`` into slot ``name``. Lateral, roll and yaw
quantities flip sign; left and right foot blocks trade places; the gait
phase advances by half a cycle, which negates both its sine and cosine.
"""
from __future__ import annotations

ACTION_FIELDS = (
    ("d_wx", "d_wx", 1.0),
    ("d_wy", "d_wy", -1.0),
    ("d_wtheta", "d_wtheta", -1.0),
    ("d_comz", "d_comz", 1.0),
    ("d_wt", "d_wt", 1.0),
    ("d_kphi", "d_kphi", 1.0),
    ("d_kphidot", "d_kphidot", 1.0),
    ("lf_dx", "rf_dx", 1.0),
    ("lf_dy", "rf_dy", -1.0),
    ("rf_dx", "lf_dx", 1.0),
    ("rf_dy", "lf_dy", -1.0),
)


def _foot_block(side, other):
    return (
        (f"{side}_x", f"{other}_x", 1.0),
        (f"{side}_y", f"{other}_y", -1.0),
        (f"{side}_z", f"{other}_z", 1.0),
        (f"{side}_theta", f"{other}_theta", -1.0),
    )


OBS_FIELDS = (
    ("phase_sin", "phase_sin", -1.0),
    ("phase_cos", "phase_cos", -1.0),
    ("roll", "roll", -1.0),
    ("pitch", "pitch", 1.0),
    ("roll_rate", "roll_rate", -1.0),
    ("pitch_rate", "pitch_rate", 1.0),
    ("com_vx", "com_vx", 1.0),
    ("com_vy", "com_vy", -1.0),
    *_foot_block("left", "right"),
    *_foot_block("right", "left"),
    ("cmd_wx", "cmd_wx", 1.0),
    ("cmd_wy", "cmd_wy", -1.0),
    ("cmd_wtheta", "cmd_wtheta", -1.0),
    ("cmd_wt", "cmd_wt", 1.0),
    ("cmd_cz", "cmd_cz", 1.0),
    ("obj_x", "obj_x", 1.0),
    ("obj_y", "obj_y", -1.0),
    ("obj_sin", "obj_sin", -1.0),
    ("obj_cos", "obj_cos", 1.0),
    ("conquer", "conquer", 1.0),
    *((f"res_{n}", f"res_{p}", s) for n, p, s in ACTION_FIELDS),
)

OBS_NAMES = tuple(f[0] for f in OBS_FIELDS)
ACTION_NAMES = tuple(f[0] for f in ACTION_FIELDS)
OBS_INDEX = {n: i for i, n in enumerate(OBS_NAMES)}
ACTION_INDEX = {n: i for i, n in enumerate(ACTION_NAMES)}
OBS_DIM = len(OBS_FIELDS)
ACTION_DIM = len(ACTION_FIELDS)


def tables(fields):
    """``(perm, sign)`` lists for a field table."""
    index = {f[0]: i for i, f in enumerate(fields)}
    return [index[p] for _, p, _ in fields], [s for _, _, s in fields]
