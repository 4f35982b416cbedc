"""Collect-update training loop, checkpoints and deterministic evaluation."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from hybridwalk.env import BipedEnv
from hybridwalk.harness.config import ExperimentConfig, dump_config
from hybridwalk.losses import attach_mirror_data, classify_regimes, symmetry_deficit
from hybridwalk.policy import (
    Adam,
    GaussianPolicy,
    SampleBatch,
    ValueFn,
    compute_gae,
    normalize_advantages,
    update_policy,
)

CHECKPOINT_VERSION = 1
METRIC_COLUMNS = (
    "update", "steps", "avg_ep_reward", "avg_ep_len", "clip_frac", "sym_deficit",
    "mean_ratio", "value_loss", "sym_loss", "z_below_1", "z_in_trust", "z_above", "episodes",
)
N_PROBES = 256


class CheckpointError(RuntimeError):
    pass


@dataclass
class RunRecord:
    rows: list = field(default_factory=list)
    checkpoint: str | None = None
    metrics_path: str | None = None
    timings: dict = field(default_factory=dict)


@dataclass
class TrainState:
    """Everything a resumed run needs: parameters, optimiser moments, counters and RNG states."""

    theta: np.ndarray
    omega: np.ndarray
    pi_opt: Adam
    v_opt: Adam
    update: int
    steps: int
    rng: np.random.Generator
    worker_rngs: list


def _rng_state(rng) -> str:
    return json.dumps(rng.bit_generator.state)


def _rng_from(state: str) -> np.random.Generator:
    st = json.loads(state)
    bg = getattr(np.random, st["bit_generator"])()
    bg.state = st
    return np.random.Generator(bg)


def save_checkpoint(path, cfg: ExperimentConfig, ts: TrainState) -> None:
    tmp = str(path) + ".tmp.npz"
    pi, vo = ts.pi_opt.state(), ts.v_opt.state()
    np.savez(
        tmp,
        version=CHECKPOINT_VERSION,
        obs_dim=BipedEnv.obs_dim,
        act_dim=BipedEnv.act_dim,
        hidden=np.array(cfg.hidden),
        theta=ts.theta,
        omega=ts.omega,
        pi_m=pi["m"], pi_v=pi["v"], pi_t=pi["t"],
        v_m=vo["m"], v_v=vo["v"], v_t=vo["t"],
        update=ts.update,
        steps=ts.steps,
        rng=_rng_state(ts.rng),
        worker_rngs=json.dumps([_rng_state(r) for r in ts.worker_rngs]),
        config=json.dumps(cfg.to_dict()),
    )
    os.replace(tmp, path)


def load_checkpoint(path) -> dict:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    version = int(data["version"]) if "version" in data else -1
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})")
    return {k: data[k] for k in data.files}


def _policy_from_ckpt(ck):
    pol = GaussianPolicy(int(ck["obs_dim"]), int(ck["act_dim"]), tuple(int(h) for h in ck["hidden"]))
    if len(ck["theta"]) != pol.n_params:
        raise CheckpointError("checkpoint parameters do not match its recorded architecture")
    return pol, ck["theta"]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _init_state(cfg: ExperimentConfig, pol, vf) -> TrainState:
    root = np.random.SeedSequence(cfg.seed)
    init_ss, main_ss, worker_ss = root.spawn(3)
    init_rng = np.random.default_rng(init_ss)
    return TrainState(
        theta=pol.init(init_rng, cfg.log_std_init),
        omega=vf.init(init_rng),
        pi_opt=Adam(cfg.ppo.lr),
        v_opt=Adam(cfg.ppo.value_lr),
        update=0,
        steps=0,
        rng=np.random.default_rng(main_ss),
        worker_rngs=[np.random.default_rng(s) for s in worker_ss.spawn(cfg.workers)],
    )


def _resume_state(cfg: ExperimentConfig, path) -> TrainState:
    ck = load_checkpoint(path)
    pi_opt, v_opt = Adam(cfg.ppo.lr), Adam(cfg.ppo.value_lr)
    pi_opt.load({"m": ck["pi_m"], "v": ck["pi_v"], "t": ck["pi_t"]})
    v_opt.load({"m": ck["v_m"], "v": ck["v_v"], "t": ck["v_t"]})
    workers = [_rng_from(s) for s in json.loads(str(ck["worker_rngs"]))]
    if len(workers) != cfg.workers:
        raise CheckpointError("worker count differs from the checkpointed run")
    return TrainState(
        theta=ck["theta"].copy(), omega=ck["omega"].copy(), pi_opt=pi_opt, v_opt=v_opt,
        update=int(ck["update"]), steps=int(ck["steps"]), rng=_rng_from(str(ck["rng"])), worker_rngs=workers,
    )


class Rollout:
    """Workers stepped in lockstep; policy inference is batched across them."""

    def __init__(self, cfg: ExperimentConfig, ts: TrainState):
        self.cfg = cfg
        self.envs = [BipedEnv(cfg.scenario_config()) for _ in range(cfg.workers)]
        self.ts = ts
        self.obs = np.stack([self._reset(i) for i in range(cfg.workers)])
        self.ep_ret = np.zeros(cfg.workers)
        self.ep_len = np.zeros(cfg.workers, dtype=np.int64)

    def _reset(self, i):
        seed = int(self.ts.worker_rngs[i].integers(2**62))
        return self.envs[i].reset(seed)

    def collect(self, pol, theta, vf, omega, horizon):
        W, d = len(self.envs), BipedEnv.obs_dim
        obs = np.empty((W, horizon, d))
        next_obs = np.empty((W, horizon, d))
        act = np.empty((W, horizon, BipedEnv.act_dim))
        logp = np.empty((W, horizon))
        rew = np.empty((W, horizon))
        done = np.zeros((W, horizon), dtype=bool)
        end = np.zeros((W, horizon), dtype=bool)
        finished = []
        for t in range(horizon):
            a, lp = pol.sample(theta, self.obs, self.ts.rng)
            obs[:, t], act[:, t], logp[:, t] = self.obs, a, lp
            for i, env in enumerate(self.envs):
                o, r, dn, info = env.step(a[i])
                rew[i, t] = r
                next_obs[i, t] = o
                self.ep_ret[i] += r
                self.ep_len[i] += 1
                if dn:
                    done[i, t] = info["fell"]
                    end[i, t] = True
                    finished.append((self.ep_ret[i], self.ep_len[i]))
                    self.ep_ret[i], self.ep_len[i] = 0.0, 0
                    o = self._reset(i)
                self.obs[i] = o
        end[:, -1] = True
        flat = lambda x: x.reshape(W * horizon, *x.shape[2:])  # noqa: E731
        val = vf(omega, flat(obs))
        next_val = vf(omega, flat(next_obs))
        batch = SampleBatch(
            obs=flat(obs), act=flat(act), logp_old=flat(logp), rew=flat(rew),
            done=flat(done), val=val, next_val=next_val, end=flat(end),
        )
        return batch, finished


def train(cfg: ExperimentConfig, out_dir=None, resume=None, quiet=True) -> RunRecord:
    """Run collect/update rounds until ``total_steps``; metrics append to ``metrics.csv``."""
    out_dir = str(out_dir or cfg.out)
    os.makedirs(out_dir, exist_ok=True)
    pol = GaussianPolicy(BipedEnv.obs_dim, BipedEnv.act_dim, cfg.hidden)
    vf = ValueFn(BipedEnv.obs_dim, cfg.hidden)
    ts = _resume_state(cfg, resume) if resume else _init_state(cfg, pol, vf)
    sym = cfg.sym_config()
    tr = cfg.transforms[0]
    metrics_path = os.path.join(out_dir, "metrics.csv")
    if not resume:
        dump_config(cfg, os.path.join(out_dir, "config.yaml"))
        with open(metrics_path, "w", newline="") as fh:
            csv.writer(fh).writerow(METRIC_COLUMNS)
    record = RunRecord(metrics_path=metrics_path)
    rollout = Rollout(cfg, ts)
    per_update = cfg.batch * cfg.workers
    last_reward, last_len = math.nan, math.nan
    t_collect = t_update = 0.0
    ckpt = os.path.join(out_dir, "checkpoint.npz")
    while ts.steps + per_update <= cfg.total_steps:
        t0 = time.perf_counter()
        batch, finished = rollout.collect(pol, ts.theta, vf, ts.omega, cfg.batch)
        batch = compute_gae(batch, cfg.ppo.gamma, cfg.ppo.lam)
        batch = normalize_advantages(batch)
        batch = attach_mirror_data(pol, ts.theta, batch, cfg.transforms)
        regimes = classify_regimes(pol, ts.theta, batch, cfg.ppo.epsilon).fractions()
        t1 = time.perf_counter()
        result = update_policy(pol, vf, ts.theta, ts.omega, batch, cfg.ppo, ts.rng, sym, ts.pi_opt, ts.v_opt)
        t_collect += t1 - t0
        t_update += time.perf_counter() - t1
        ts.theta, ts.omega = result.theta, result.omega
        ts.update += 1
        ts.steps += per_update
        if finished:
            last_reward = float(np.mean([f[0] for f in finished]))
            last_len = float(np.mean([f[1] for f in finished]))
        probes = batch.obs[:: max(1, len(batch) // N_PROBES)]
        row = {
            "update": ts.update,
            "steps": ts.steps,
            "avg_ep_reward": last_reward,
            "avg_ep_len": last_len,
            "clip_frac": result.metrics["clip_frac"],
            "sym_deficit": symmetry_deficit(pol, ts.theta, tr, probes),
            "mean_ratio": result.metrics["mean_ratio"],
            "value_loss": result.metrics["value_loss"],
            "sym_loss": result.metrics["sym_loss"],
            "z_below_1": regimes["z_below_1"],
            "z_in_trust": regimes["z_in_trust"],
            "z_above": regimes["z_above"],
            "episodes": len(finished),
        }
        with open(metrics_path, "a", newline="") as fh:
            csv.writer(fh).writerow([_fmt(row[c]) for c in METRIC_COLUMNS])
        record.rows.append(row)
        if not quiet:
            print(f"update {ts.update:4d} steps {ts.steps:8d} reward {last_reward:8.3f} "
                  f"deficit {row['sym_deficit']:.4f}", flush=True)
        if ts.update % cfg.checkpoint_every == 0:
            save_checkpoint(ckpt, cfg, ts)
    save_checkpoint(ckpt, cfg, ts)
    record.checkpoint = ckpt
    record.timings = {"collect_s": t_collect, "update_s": t_update}
    return record


def read_metrics(path) -> dict:
    """Metrics CSV as a dict of float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in (rows[0].keys() if rows else METRIC_COLUMNS)}


@dataclass(frozen=True)
class EvalSummary:
    episodes: int
    avg_duration: float
    avg_reward: float
    reward_per_second: float
    falls: int


def evaluate(checkpoint, scenario, episodes: int, seed: int = 0, policy=None) -> EvalSummary:
    """Roll out the deterministic (mean) policy; ``policy`` may replace the checkpoint with a callable."""
    if episodes < 1:
        raise ValueError("evaluation needs at least one episode")
    if policy is None:
        pol, theta = _policy_from_ckpt(load_checkpoint(checkpoint))

        def policy(o):
            return pol.mean(theta, o)[0]

    env = BipedEnv(scenario)
    rng = np.random.default_rng(seed)
    durations, rewards, falls = [], [], 0
    for _ in range(episodes):
        o = env.reset(int(rng.integers(2**62)))
        total = 0.0
        while True:
            o, r, done, info = env.step(policy(o))
            total += r
            if done:
                falls += info["fell"]
                break
        durations.append(env.state.time)
        rewards.append(total)
    dur = float(np.mean(durations))
    rew = float(np.mean(rewards))
    return EvalSummary(episodes, dur, rew, float(np.mean(np.array(rewards) / np.array(durations))), falls)


def checkpoint_deficit(checkpoint, probes, transform=None) -> float:
    """``symmetry_deficit`` for the policy stored in a checkpoint."""
    from hybridwalk.symmetry import biped_mirror

    pol, theta = _policy_from_ckpt(load_checkpoint(checkpoint))
    return symmetry_deficit(pol, theta, transform or biped_mirror(), probes)
