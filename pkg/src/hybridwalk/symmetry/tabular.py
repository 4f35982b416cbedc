"""Tabular MDPs and checkers for automorphisms and homomorphisms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TabularMDP:
    """``<S, A, Psi, p, r>`` with integer-indexed states and actions.

    ``P[s, a, s']`` is the transition probability and ``R[s, a]`` the
    reward. ``valid`` marks the admissible pairs (all pairs by default).
    """

    P: np.ndarray
    R: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        n_s, n_a, n_s2 = self.P.shape
        if n_s != n_s2 or self.R.shape != (n_s, n_a):
            raise ValueError("P must be (S, A, S) and R must be (S, A)")
        if self.valid is None:
            self.valid = np.ones((n_s, n_a), dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.valid.shape != (n_s, n_a):
            raise ValueError("valid mask must be (S, A)")
        if np.any(self.P < 0) or np.any(self.P > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        sums = self.P.sum(axis=2)[self.valid]
        if not np.allclose(sums, 1.0, atol=1e-12):
            raise ValueError("transition rows of valid pairs must sum to 1")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def valid_pairs(self):
        return [tuple(p) for p in np.argwhere(self.valid)]


def _is_permutation(arr, n):
    arr = np.asarray(arr)
    return arr.shape == (n,) and np.array_equal(np.sort(arr), np.arange(n))


@dataclass(frozen=True)
class TabularTransform:
    """``h = <f, {g_s}>``: ``f[s]`` maps states, ``g[s, a]`` maps actions of state ``s``."""

    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=np.int64))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=np.int64))

    @classmethod
    def identity(cls, n_states, n_actions):
        return cls(np.arange(n_states), np.tile(np.arange(n_actions), (n_states, 1)))

    def check_bijective(self, n_states, n_actions):
        if not _is_permutation(self.f, n_states):
            raise ValueError("state map f is not a bijection")
        if self.g.shape != (n_states, n_actions):
            raise ValueError("action map g must be (S, A)")
        for s in range(n_states):
            if not _is_permutation(self.g[s], n_actions):
                raise ValueError(f"action map g_s is not a bijection for s={s}")

    def inverse(self) -> "TabularTransform":
        f_inv = np.argsort(self.f)
        g_inv = np.empty_like(self.g)
        for s in range(len(self.f)):
            # g_inv at f(s) undoes g_s
            g_inv[self.f[s]] = np.argsort(self.g[s])
        return TabularTransform(f_inv, g_inv)


@dataclass(frozen=True)
class AutomorphismReport:
    is_automorphism: bool
    max_transition_violation: float
    max_reward_violation: float
    witness: tuple | None  # (s, a, s') for transitions, (s, a, None) for rewards


def _within(violation, tol):
    """A violation of ``tol`` or more counts; exact equality always passes."""
    return violation == 0.0 or violation < tol


def check_automorphism(mdp: TabularMDP, tr: TabularTransform, tol: float = 1e-12) -> AutomorphismReport:
    """Check ``p(f(s), g_s(a), f(s')) = p(s, a, s')`` and ``r(f(s), g_s(a)) = r(s, a)``."""
    tr.check_bijective(mdp.n_states, mdp.n_actions)
    f, g = tr.f, tr.g
    worst_p, worst_r = 0.0, 0.0
    witness_p = witness_r = None
    for s, a in mdp.valid_pairs():
        fs, ga = f[s], g[s, a]
        if not mdp.valid[fs, ga]:
            # an image outside Psi breaks the symmetry outright
            return AutomorphismReport(False, 1.0, float("inf"), (int(s), int(a), None))
        dp = np.abs(mdp.P[fs, ga, f] - mdp.P[s, a])
        k = int(np.argmax(dp))
        if dp[k] > worst_p:
            worst_p, witness_p = float(dp[k]), (int(s), int(a), k)
        dr = abs(mdp.R[fs, ga] - mdp.R[s, a])
        if dr > worst_r:
            worst_r, witness_r = float(dr), (int(s), int(a), None)
    ok = _within(worst_p, tol) and _within(worst_r, tol)
    witness = None
    if not ok:
        witness = witness_p if not _within(worst_p, tol) else witness_r
    return AutomorphismReport(ok, worst_p, worst_r, witness)


def _check_partition(partition, n_states):
    seen = np.zeros(n_states, dtype=int)
    for block in partition:
        if len(block) == 0:
            raise ValueError("partition blocks must be nonempty")
        for s in block:
            if not 0 <= s < n_states:
                raise ValueError(f"state {s} outside the state set")
            seen[s] += 1
    if np.any(seen != 1):
        raise ValueError("partition must cover every state exactly once")


def check_homomorphism(
    mdp: TabularMDP,
    abstract: TabularMDP,
    f,
    g,
    partition,
    tol: float = 1e-12,
) -> AutomorphismReport:
    """Check the block-sum condition ``p_bar(f(s), g_s(a), f(s')) = sum_{s'' in [s']} p(s, a, s'')``.

    ``f`` maps states of ``mdp`` onto abstract states, ``g[s, a]`` maps
    actions, and ``partition`` lists the blocks of ``B``. The report's
    ``is_automorphism`` field reads as "is homomorphism" here.
    """
    f = np.asarray(f, dtype=np.int64)
    g = np.asarray(g, dtype=np.int64)
    _check_partition(partition, mdp.n_states)
    for block in partition:
        if len({int(f[s]) for s in block}) != 1:
            raise ValueError("f must be constant on every block of the partition")
    if f.shape != (mdp.n_states,) or g.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("f must be (S,) and g must be (S, A)")
    if set(f.tolist()) != set(range(abstract.n_states)):
        raise ValueError("f must be a surjection onto the abstract states")

    worst_p, worst_r = 0.0, 0.0
    witness_p = witness_r = None
    for s, a in mdp.valid_pairs():
        fs, ga = f[s], g[s, a]
        for block in partition:
            rep = block[0]
            mass = mdp.P[s, a, list(block)].sum()
            d = abs(abstract.P[fs, ga, f[rep]] - mass)
            if d > worst_p:
                worst_p, witness_p = float(d), (int(s), int(a), int(rep))
        dr = abs(abstract.R[fs, ga] - mdp.R[s, a])
        if dr > worst_r:
            worst_r, witness_r = float(dr), (int(s), int(a), None)
    ok = _within(worst_p, tol) and _within(worst_r, tol)
    witness = None
    if not ok:
        witness = witness_p if not _within(worst_p, tol) else witness_r
    return AutomorphismReport(ok, worst_p, worst_r, witness)


def mirrored_chain(p_stay: float = 0.2, r_outer: float = 1.0) -> tuple:
    """Four-state chain ``L2, L1, R1, R2`` with moves ``left``/``right``.

    Returns ``(mdp, transform)`` where the transform swaps L and R states
    and the two moves; the MDP is built symmetric so the transform is an
    automorphism.
    """
    n_s, n_a = 4, 2
    LEFT, RIGHT = 0, 1
    P = np.zeros((n_s, n_a, n_s))
    R = np.zeros((n_s, n_a))
    for s in range(n_s):
        for a, step in ((LEFT, -1), (RIGHT, 1)):
            nxt = min(max(s + step, 0), n_s - 1)
            P[s, a, nxt] += 1 - p_stay
            P[s, a, s] += p_stay
            if nxt in (0, n_s - 1) and nxt != s:
                R[s, a] = r_outer
    f = np.array([3, 2, 1, 0])
    g = np.tile([RIGHT, LEFT], (n_s, 1))
    return TabularMDP(P, R), TabularTransform(f, g)
