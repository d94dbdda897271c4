"""Desk-scale on-policy training: tiny MLP actor/critic with analytic gradients and clipped-surrogate updates.

The policy is a tanh MLP with a Gaussian action head (state-independent log
standard deviations) and a separate tanh MLP value head. Rollouts are collected
single-threaded for reproducibility, advantages use the exponentially weighted
temporal-difference estimator, and parameters are updated with Adam. Actions
are sampled unsquashed; the environment's own clamping maps them to control
inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .envcore import Env, EpisodeStats
from .fileio import atomic_write_text
from .vehicle import Action

VALUE_LOSS_COEF = 0.5
MAX_GRAD_NORM = 0.5     # global gradient-norm clip applied before each Adam step
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PolicyParams:
    """Weights for the policy and value MLPs; `layers`/`value_layers` are (W, b) pairs."""

    obs_dim: int
    hidden: tuple[int, ...]
    act_dim: int
    layers: list[tuple[np.ndarray, np.ndarray]]
    value_layers: list[tuple[np.ndarray, np.ndarray]]
    log_std: np.ndarray

    def __post_init__(self):
        if self.act_dim != 2:
            raise ValueError("act_dim must be 2 (throttle, steering)")
        for w, b in self.layers + self.value_layers:
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("non-finite parameter")
        if not np.all(np.isfinite(self.log_std)):
            raise ValueError("non-finite log_std")

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            obs_dim=self.obs_dim, hidden=tuple(self.hidden), act_dim=self.act_dim,
            layers=[(w.copy(), b.copy()) for w, b in self.layers],
            value_layers=[(w.copy(), b.copy()) for w, b in self.value_layers],
            log_std=self.log_std.copy())


def _stack_dims(obs_dim, hidden, out_dim):
    dims = [obs_dim] + list(hidden) + [out_dim]
    return list(zip(dims[:-1], dims[1:]))


def init_policy(obs_dim: int, hidden=(64, 64), rng=None, log_std_init: float = -1.0,
                act_dim: int = 2) -> PolicyParams:
    """Seeded initialization: scaled-normal hidden layers, small action head."""
    rng = rng if rng is not None else np.random.default_rng(0)
    layers, value_layers = [], []
    for i, (fan_in, fan_out) in enumerate(_stack_dims(obs_dim, hidden, act_dim)):
        scale = 0.01 if i == len(hidden) else math.sqrt(1.0 / fan_in)
        layers.append((rng.normal(0.0, scale, (fan_in, fan_out)), np.zeros(fan_out)))
    for fan_in, fan_out in _stack_dims(obs_dim, hidden, 1):
        value_layers.append((rng.normal(0.0, math.sqrt(1.0 / fan_in), (fan_in, fan_out)),
                             np.zeros(fan_out)))
    return PolicyParams(obs_dim=obs_dim, hidden=tuple(hidden), act_dim=act_dim,
                        layers=layers, value_layers=value_layers,
                        log_std=np.full(act_dim, float(log_std_init)))


def _mlp_forward(layers, x):
    """Returns (output, activations); tanh on every layer but the last."""
    acts = [x]
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w + b
        acts.append(np.tanh(z) if i < len(layers) - 1 else z)
    return acts[-1], acts

def _mlp_backward(layers, acts, d_out):
    """Gradients for every (W, b) given the upstream gradient on the output."""
    grads = [None] * len(layers)
    d = d_out
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = (acts[i].T @ d, d.sum(axis=0))
        if i > 0:
            d = (d @ w.T) * (1.0 - acts[i] ** 2)
    return grads


def policy_forward(p: PolicyParams, obs):
    """(action mean, log_std, value) for a single observation or a batch."""
    x = np.asarray(obs, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != p.obs_dim:
        raise ValueError(f"observation dim {x.shape[1]} != policy obs_dim {p.obs_dim}")
    mean, _ = _mlp_forward(p.layers, x)
    value, _ = _mlp_forward(p.value_layers, x)
    value = value[:, 0]
    if single:
        return mean[0], p.log_std.copy(), float(value[0])
    return mean, p.log_std.copy(), value


def gaussian_logp(mean, log_std, actions):
    z = (actions - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * _LOG_2PI * mean.shape[-1]


def entropy(log_std) -> float:
    return float(np.sum(0.5 * (1.0 + _LOG_2PI) + log_std))


# --- advantages -------------------------------------------------------------


def gae(rewards, values, bootstrap_value, gamma, lam, terminal_flags):
    """Exponentially weighted TD advantages and value targets.

    delta_t = r_t + gamma*V_{t+1}*(1-flag_t) - V_t with V after the last step
    equal to bootstrap_value; A_t = delta_t + gamma*lam*(1-flag_t)*A_{t+1};
    returns = A + V. A set flag cuts both the bootstrap and the recursion.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    flags = np.asarray(terminal_flags, dtype=np.float64)
    n = rewards.shape[0]
    if values.shape[0] != n or flags.shape[0] != n:
        raise ValueError("rewards, values, and flags must have equal lengths")
    adv = np.zeros(n)
    next_v = float(bootstrap_value)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        cont = 1.0 - flags[t]
        delta = rewards[t] + gamma * next_v * cont - values[t]
        acc = delta + gamma * lam * cont * acc
        adv[t] = acc
        next_v = values[t]
    return adv, adv + values


# --- rollouts ----------------------------------------------------------------


class RolloutBuffer:
    """Fixed-capacity on-policy storage; advantages are computed only when full."""

    def __init__(self, horizon: int, obs_dim: int, act_dim: int = 2):
        self.horizon = horizon
        self.obs = np.zeros((horizon, obs_dim))
        self.actions = np.zeros((horizon, act_dim))
        self.logp = np.zeros(horizon)
        self.rewards = np.zeros(horizon)
        self.values = np.zeros(horizon)
        self.terminated = np.zeros(horizon, dtype=bool)
        self.truncated = np.zeros(horizon, dtype=bool)
        self.advantages = None
        self.returns = None
        self.ptr = 0

    @property
    def full(self) -> bool:
        return self.ptr == self.horizon

    def add(self, obs, action, logp, reward, value, terminated, truncated):
        if self.full:
            raise RuntimeError("rollout buffer is full")
        i = self.ptr
        self.obs[i] = obs
        self.actions[i] = action
        self.logp[i] = logp
        self.rewards[i] = reward
        self.values[i] = value
        self.terminated[i] = terminated
        self.truncated[i] = truncated
        self.ptr += 1

    def compute_advantages(self, bootstrap_value, gamma, lam):
        if not self.full:
            raise RuntimeError("advantages are computed only when the buffer is full")
        flags = self.terminated | self.truncated
        self.advantages, self.returns = gae(
            self.rewards, self.values, bootstrap_value, gamma, lam, flags)

    def reset(self):
        self.ptr = 0
        self.advantages = None
        self.returns = None


# --- PPO ----------------------------------------------------------------------


@dataclass(frozen=True)
class PpoConfig:
    total_steps: int
    horizon: int = 2048
    minibatch: int = 64
    epochs: int = 10
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    lr: float = 3e-4
    ent_coef: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("need 0 < gamma <= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("need 0 <= lam <= 1")
        if not self.clip_eps > 0:
            raise ValueError("clip_eps must be > 0")
        if self.horizon < 1 or self.minibatch < 1 or self.epochs < 1:
            raise ValueError("horizon, minibatch, and epochs must be >= 1")
        if self.total_steps < self.horizon:
            raise ValueError("total_steps must be at least one horizon")


def params_to_vector(p: PolicyParams) -> np.ndarray:
    parts = []
    for w, b in p.layers + p.value_layers:
        parts.extend([w.ravel(), b.ravel()])
    parts.append(p.log_std.ravel())
    return np.concatenate(parts)


def vector_to_params(vec, template: PolicyParams) -> PolicyParams:
    out = template.copy()
    i = 0
    for pair_list in (out.layers, out.value_layers):
        for k, (w, b) in enumerate(pair_list):
            nw = vec[i:i + w.size].reshape(w.shape); i += w.size
            nb = vec[i:i + b.size].reshape(b.shape); i += b.size
            pair_list[k] = (nw, nb)
    out.log_std = vec[i:i + out.log_std.size].copy()
    return out


def ppo_loss(p: PolicyParams, obs, actions, logp_old, advantages, returns,
             clip_eps, ent_coef):
    """Clipped-surrogate total loss with analytic gradients.

    Returns (loss, grad_vector, diagnostics). The gradient is exact for the
    piecewise-smooth objective; at the measure-zero clip boundary the
    unclipped branch is used.
    """
    batch = obs.shape[0]
    mean, acts_p = _mlp_forward(p.layers, obs)
    value, acts_v = _mlp_forward(p.value_layers, obs)
    value = value[:, 0]
    std = np.exp(p.log_std)
    z = (actions - mean) / std
    logp_new = gaussian_logp(mean, p.log_std, actions)
    ratio = np.exp(logp_new - logp_old)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    surr = np.minimum(unclipped, clipped)
    policy_loss = -float(np.mean(surr))
    value_err = value - returns
    value_loss = float(np.mean(value_err ** 2))
    ent = entropy(p.log_std)
    loss = policy_loss + VALUE_LOSS_COEF * value_loss - ent_coef * ent

    # d(loss)/d(logp_new); the clipped branch has zero gradient in ratio
    use_unclipped = unclipped <= clipped
    d_logp = -(advantages * ratio * use_unclipped) / batch
    d_mean = d_logp[:, None] * (actions - mean) / (std ** 2)
    d_log_std = np.sum(d_logp[:, None] * (z * z - 1.0), axis=0) - ent_coef * 1.0
    d_value = (VALUE_LOSS_COEF * 2.0 * value_err / batch)[:, None]

    g_policy = _mlp_backward(p.layers, acts_p, d_mean)
    g_value = _mlp_backward(p.value_layers, acts_v, d_value)
    parts = []
    for gw, gb in g_policy + g_value:
        parts.extend([gw.ravel(), gb.ravel()])
    parts.append(d_log_std.ravel())
    grad = np.concatenate(parts)

    diag = {
        "policy_loss": policy_loss, "value_loss": value_loss, "entropy": ent,
        "total_loss": float(loss),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip_eps)),
        "approx_kl": float(np.mean(logp_old - logp_new)),
    }
    return float(loss), grad, diag


class Adam:
    """Adaptive-moment update over the flat parameter vector."""

    def __init__(self, size: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, vec, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        mh = self.m / (1.0 - self.beta1 ** self.t)
        vh = self.v / (1.0 - self.beta2 ** self.t)
        return vec - self.lr * mh / (np.sqrt(vh) + self.eps)


def normalize_advantages(adv):
    """Zero-mean unit-variance scaling; a zero-variance batch passes through centered."""
    std = float(np.std(adv))
    centered = adv - float(np.mean(adv))
    return centered / (std + 1e-8) if std > 0 else centered


def ppo_update(buffer: RolloutBuffer, p: PolicyParams, cfg: PpoConfig,
               opt: Adam | None = None, rng=None):
    """Epochs of shuffled minibatch updates; returns (params, diagnostics of the last minibatch).

    The behavior policy's log-probabilities are evaluated from a snapshot of
    the entry parameters through the same batched forward as the new policy,
    so all ratios equal 1 exactly before the first optimizer step.
    """
    if not buffer.full or buffer.advantages is None:
        raise RuntimeError("buffer must be full with advantages computed")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    vec = params_to_vector(p)
    opt = opt if opt is not None else Adam(vec.size, cfg.lr)
    params = p
    old = p.copy()
    diag = {}
    for _ in range(cfg.epochs):
        order = rng.permutation(buffer.horizon)
        for start in range(0, buffer.horizon, cfg.minibatch):
            mb = order[start:start + cfg.minibatch]
            adv = normalize_advantages(buffer.advantages[mb])
            mean_old, _ = _mlp_forward(old.layers, buffer.obs[mb])
            logp_old = gaussian_logp(mean_old, old.log_std, buffer.actions[mb])
            loss, grad, diag = ppo_loss(
                params, buffer.obs[mb], buffer.actions[mb], logp_old,
                adv, buffer.returns[mb], cfg.clip_eps, cfg.ent_coef)
            if not math.isfinite(loss):
                raise RuntimeError(f"non-finite PPO loss: {diag}")
            norm = float(np.sqrt(np.sum(grad * grad)))
            if norm > MAX_GRAD_NORM:
                grad = grad * (MAX_GRAD_NORM / norm)
            vec = opt.step(vec, grad)
            params = vector_to_params(vec, params)
    return params, diag


# --- training loop -------------------------------------------------------------


def moving_average(series, order: int):
    """Trailing-window mean; element i averages the last min(i+1, order) values."""
    if order < 1:
        raise ValueError("order must be >= 1")
    series = list(series)
    out = []
    acc = 0.0
    for i, v in enumerate(series):
        acc += v
        if i >= order:
            acc -= series[i - order]
        out.append(acc / min(i + 1, order))
    return out


@dataclass
class TrainLog:
    """Per-episode returns/lengths plus the order-N moving-average return series."""

    episodes: list[EpisodeStats] = field(default_factory=list)
    ma_order: int = 100

    @property
    def returns(self):
        return [e.ep_return for e in self.episodes]

    @property
    def moving_avg(self):
        return moving_average(self.returns, self.ma_order)

    def to_csv(self) -> str:
        lines = ["episode,steps,return,moving_avg"]
        ma = self.moving_avg
        for i, e in enumerate(self.episodes):
            lines.append(f"{i},{e.length},{e.ep_return!r},{ma[i]!r}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def train(env_factory, cfg: PpoConfig, hidden=(64, 64), log_std_init: float = -1.0,
          ma_order: int = 100):
    """Alternate rollout collection and PPO updates; reproducible per seed.

    Rounds the step budget up to whole horizons (total_steps == horizon runs
    exactly one update). Returns (PolicyParams, TrainLog).
    """
    ss = np.random.SeedSequence(cfg.seed)
    init_rng, action_rng, shuffle_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    env: Env = env_factory()
    params = init_policy(env.obs_dim, hidden, init_rng, log_std_init)
    opt = Adam(params_to_vector(params).size, cfg.lr)
    buffer = RolloutBuffer(cfg.horizon, env.obs_dim)
    log = TrainLog(ma_order=ma_order)

    obs = env.reset().vector()
    ep_return, ep_len = 0.0, 0
    n_updates = -(-cfg.total_steps // cfg.horizon)  # ceil
    for _ in range(n_updates):
        buffer.reset()
        while not buffer.full:
            mean, log_std, value = policy_forward(params, obs)
            action = mean + np.exp(log_std) * action_rng.standard_normal(params.act_dim)
            logp = float(gaussian_logp(mean, log_std, action))
            result = env.step(Action(float(action[0]), float(action[1])))
            buffer.add(obs, action, logp, result.reward, value,
                       result.terminated, result.truncated)
            ep_return += result.reward
            ep_len += 1
            if result.terminated or result.truncated:
                log.episodes.append(EpisodeStats(ep_return=ep_return, length=ep_len,
                                                 collided=result.terminated))
                ep_return, ep_len = 0.0, 0
                obs = env.reset().vector()
            else:
                obs = result.observation.vector()
        _, _, boot = policy_forward(params, obs)
        buffer.compute_advantages(boot, cfg.gamma, cfg.lam)
        params, _ = ppo_update(buffer, params, cfg, opt, shuffle_rng)
    return params, log


def greedy_action(params: PolicyParams, obs_vector) -> Action:
    """Deterministic mean action for evaluation rollouts."""
    mean, _, _ = policy_forward(params, obs_vector)
    return Action(float(mean[0]), float(mean[1]))


# --- policy file -----------------------------------------------------------------


def save_policy(path, p: PolicyParams) -> None:
    doc = {
        "version": 1,
        "arch": {"obs_dim": p.obs_dim, "hidden": list(p.hidden), "act_dim": p.act_dim},
        "log_std": p.log_std.tolist(),
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in p.layers],
        "value_layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in p.value_layers],
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


def load_policy(path) -> PolicyParams:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != 1:
        raise ValueError(f"unsupported policy file version {doc.get('version')!r}")
    arch = doc["arch"]
    return PolicyParams(
        obs_dim=int(arch["obs_dim"]), hidden=tuple(arch["hidden"]),
        act_dim=int(arch["act_dim"]),
        layers=[(np.array(l["w"], dtype=np.float64), np.array(l["b"], dtype=np.float64))
                for l in doc["layers"]],
        value_layers=[(np.array(l["w"], dtype=np.float64), np.array(l["b"], dtype=np.float64))
                      for l in doc["value_layers"]],
        log_std=np.array(doc["log_std"], dtype=np.float64))
