"""Sign/permutation mirror transforms on state and action vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hybridwalk import layout


def _check_signed_perm(perm, sign, what):
    n = len(perm)
    if sign.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"{what} map is not a bijection")
    if not np.all(np.isin(sign, (-1.0, 1.0))):
        raise ValueError(f"{what} signs must be +1 or -1")


@dataclass(frozen=True)
class MirrorTransform:
    """``f(s)[i] = state_sign[i] * s[state_perm[i]]``, likewise for ``g`` on actions.

    Actions here do not depend on the state, so ``g_s`` is the same map for
    every ``s``; the state argument is kept for the general signature.
    """

    state_perm: np.ndarray
    state_sign: np.ndarray
    action_perm: np.ndarray
    action_sign: np.ndarray
    name: str = "mirror"

    def __post_init__(self):
        for attr, dtype in (("state_perm", np.int64), ("state_sign", np.float64),
                            ("action_perm", np.int64), ("action_sign", np.float64)):
            arr = np.array(getattr(self, attr), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        _check_signed_perm(self.state_perm, self.state_sign, "state")
        _check_signed_perm(self.action_perm, self.action_sign, "action")

    @property
    def state_dim(self) -> int:
        return len(self.state_perm)

    @property
    def action_dim(self) -> int:
        return len(self.action_perm)

    def state(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if s.shape[-1] != self.state_dim:
            raise ValueError(f"state vector has length {s.shape[-1]}, expected {self.state_dim}")
        return s[..., self.state_perm] * self.state_sign

    def action(self, s, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        if a.shape[-1] != self.action_dim:
            raise ValueError(f"action vector has length {a.shape[-1]}, expected {self.action_dim}")
        return a[..., self.action_perm] * self.action_sign

    def action_transpose(self, s, v) -> np.ndarray:
        """Apply the transpose of the action map (its inverse, since it is orthogonal)."""
        v = np.asarray(v, dtype=np.float64)
        out = np.zeros_like(v)
        out[..., self.action_perm] = v * self.action_sign
        return out

    def state_matrix(self) -> np.ndarray:
        m = np.zeros((self.state_dim, self.state_dim))
        m[np.arange(self.state_dim), self.state_perm] = self.state_sign
        return m

    def action_matrix(self) -> np.ndarray:
        m = np.zeros((self.action_dim, self.action_dim))
        m[np.arange(self.action_dim), self.action_perm] = self.action_sign
        return m

    def is_involution(self) -> bool:
        s = self.state_sign[self.state_perm] * self.state_sign
        a = self.action_sign[self.action_perm] * self.action_sign
        return (
            np.array_equal(self.state_perm[self.state_perm], np.arange(self.state_dim))
            and np.all(s == 1.0)
            and np.array_equal(self.action_perm[self.action_perm], np.arange(self.action_dim))
            and np.all(a == 1.0)
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "state_perm": self.state_perm.tolist(),
            "state_sign": self.state_sign.tolist(),
            "action_perm": self.action_perm.tolist(),
            "action_sign": self.action_sign.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MirrorTransform":
        keys = {"name", "state_perm", "state_sign", "action_perm", "action_sign"}
        unknown = set(d) - keys
        if unknown:
            raise ValueError(f"unknown transform keys: {sorted(unknown)}")
        return cls(d["state_perm"], d["state_sign"], d["action_perm"], d["action_sign"], d.get("name", "mirror"))


def biped_mirror() -> MirrorTransform:
    """Sagittal mirror for the biped environment's observation and action layouts."""
    sp, ss = layout.tables(layout.OBS_FIELDS)
    ap, asg = layout.tables(layout.ACTION_FIELDS)
    return MirrorTransform(sp, ss, ap, asg, name="sagittal")


_BIPED = biped_mirror()


def mirror_state(s, tr: MirrorTransform | None = None) -> np.ndarray:
    return (tr or _BIPED).state(s)


def mirror_action(s, a, tr: MirrorTransform | None = None) -> np.ndarray:
    tr = tr or _BIPED
    if np.shape(s)[-1] != tr.state_dim:
        raise ValueError(f"state vector has length {np.shape(s)[-1]}, expected {tr.state_dim}")
    return tr.action(s, a)
