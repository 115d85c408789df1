"""Twin-delayed deep deterministic policy gradient, written directly in numpy.

Networks are plain fully connected stacks with hand-written backprop; the
learner keeps the actor, two critics and their three target copies, a FIFO
replay buffer and one Adam state per trained network.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TrainingError
from .rng import RngStreams

OBS_DIM = 13
ACT_DIM = 3


@dataclass(frozen=True)
class LearnerConfig:
    hidden: tuple = (400, 400, 400, 300)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    gamma: float = 0.99
    batch_size: int = 100
    policy_delay: int = 2
    tau: float = 5e-4
    warmup_steps: int = 100
    sigma_warmup: float = 1.0
    sigma: float = 0.1
    target_sigma: float = 0.2
    target_clip: float = 0.5
    noise_off_distance: float = 10.0
    buffer_capacity: int = 1_000_000
    # learn iterations after each real stroke; None -> number of transitions inserted
    learn_per_stroke: int | None = None
    dtype: str = "float32"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        pos = ("actor_lr", "critic_lr", "batch_size", "policy_delay", "tau", "sigma_warmup",
               "sigma", "target_sigma", "target_clip", "buffer_capacity", "noise_off_distance")
        for name in pos:
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not 0 <= self.gamma <= 1:
            raise ParameterError("gamma must lie in [0, 1]")
        if self.tau > 1:
            raise ParameterError("tau must be <= 1")
        if self.policy_delay < 1:
            raise ParameterError("policy_delay must be >= 1")
        if self.learn_per_stroke is not None and (isinstance(self.learn_per_stroke, bool) or not
                                                  isinstance(self.learn_per_stroke, int)
                                                  or self.learn_per_stroke < 0):
            raise ParameterError("learn_per_stroke must be None or a non-negative integer")
        if self.dtype not in ("float32", "float64"):
            raise ParameterError("dtype must be float32 or float64")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ParameterError("hidden widths must be positive")


# ----------------------------------------------------------------------------
# networks
# ----------------------------------------------------------------------------

class MLP:
    """ReLU hidden layers; output is ``tanh`` (actor) or linear (critic)."""

    def __init__(self, sizes, out_act="linear", rng=None, dtype=np.float64):
        self.sizes = tuple(int(s) for s in sizes)
        self.out_act = out_act
        self.dtype = np.dtype(dtype)
        self.W = []
        self.b = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            lim = 1.0 / np.sqrt(fan_in)
            if rng is None:
                W = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                W = rng.uniform(-lim, lim, size=(fan_in, fan_out))
                b = rng.uniform(-lim, lim, size=fan_out)
            self.W.append(W.astype(self.dtype))
            self.b.append(b.astype(self.dtype))

    @property
    def params(self):
        out = []
        for W, b in zip(self.W, self.b):
            out += [W, b]
        return out

    def set_params(self, arrays):
        arrays = list(arrays)
        if len(arrays) != 2 * len(self.W):
            raise ParameterError("parameter list does not match the network layout")
        for k in range(len(self.W)):
            W, b = arrays[2 * k], arrays[2 * k + 1]
            if W.shape != self.W[k].shape or b.shape != self.b[k].shape:
                raise ParameterError(f"layer {k} shape mismatch")
            self.W[k] = np.array(W, dtype=self.dtype)
            self.b[k] = np.array(b, dtype=self.dtype)

    def copy(self):
        net = MLP(self.sizes, self.out_act, None, self.dtype)
        net.set_params([p.copy() for p in self.params])
        return net

    def forward(self, x, keep=False):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ParameterError(f"input must have shape (n, {self.sizes[0]}), got {x.shape}")
        acts = [x]
        h = x
        last = len(self.W) - 1
        for k, (W, b) in enumerate(zip(self.W, self.b)):
            h = h @ W + b
            if k < last:
                h = np.maximum(h, 0)
            elif self.out_act == "tanh":
                h = np.tanh(h)
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts, grad_out):
        """Gradients of ``sum(grad_out * output)``: ``(param grads, input grad)``."""
        g = np.asarray(grad_out, dtype=self.dtype)
        if self.out_act == "tanh":
            g = g * (1.0 - acts[-1] ** 2)
        grads = [None] * (2 * len(self.W))
        for k in range(len(self.W) - 1, -1, -1):
            grads[2 * k] = acts[k].T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.W[k].T
            if k > 0:
                g = g * (acts[k] > 0)
        return grads, g


def soft_update(target: MLP, source: MLP, tau):
    for k in range(len(target.W)):
        target.W[k] += tau * (source.W[k] - target.W[k])
        target.b[k] += tau * (source.b[k] - target.b[k])


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        """In-place Adam update of ``params``."""
        for g in grads:
            if not np.all(np.isfinite(g)):
                bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
                raise TrainingError(f"non-finite gradient ({bad} entries) at Adam step {self.t + 1}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ----------------------------------------------------------------------------
# replay
# ----------------------------------------------------------------------------

class ReplayBuffer:
    """FIFO ring of transitions stored column-wise."""

    def __init__(self, capacity, obs_dim=OBS_DIM, act_dim=ACT_DIM, dtype=np.float32):
        self.capacity = int(capacity)
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self.dtype = np.dtype(dtype)
        self._alloc = 0
        self.s = self.a = self.r = self.s2 = self.d = None
        self.size = 0
        self.ptr = 0
        self.total = 0

    def _grow(self, need):
        # allocate lazily in chunks so small runs stay small
        if need <= self._alloc:
            return
        new = min(self.capacity, max(need, 2 * self._alloc, 4096))
        def grow(arr, width):
            out = np.zeros((new, width), dtype=self.dtype)
            if arr is not None:
                out[:self._alloc] = arr
            return out
        self.s = grow(self.s, self.obs_dim)
        self.a = grow(self.a, self.act_dim)
        self.r = grow(self.r, 1)
        self.s2 = grow(self.s2, self.obs_dim)
        self.d = grow(self.d, 1)
        self._alloc = new

    def __len__(self):
        return self.size

    def add_batch(self, s, a, r, s2, done):
        s = np.atleast_2d(s)
        n = len(s)
        a = np.broadcast_to(np.atleast_2d(a), (n, self.act_dim))
        r = np.broadcast_to(np.asarray(r, dtype=float).reshape(-1, 1), (n, 1))
        d = np.broadcast_to(np.asarray(done, dtype=float).reshape(-1, 1), (n, 1))
        s2 = np.atleast_2d(s2)
        if n > self.capacity:
            s, a, r, s2, d = (x[-self.capacity:] for x in (s, a, r, s2, d))
            n = self.capacity
        self._grow(min(self.capacity, self.size + n))
        idx = (self.ptr + np.arange(n)) % self.capacity
        self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.d[idx] = s, a, r, s2, d
        self.ptr = int((self.ptr + n) % self.capacity)
        self.size = min(self.capacity, self.size + n)
        self.total += n

    def add(self, s, a, r, s2, done):
        self.add_batch(np.asarray(s)[None], np.asarray(a)[None], [r], np.asarray(s2)[None], [done])

    def ordered(self):
        """Stored rows from oldest to newest."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = (self.ptr + np.arange(self.capacity)) % self.capacity
        return self.s[idx], self.a[idx], self.r[idx, 0], self.s2[idx], self.d[idx, 0]

    def sample(self, rng: np.random.Generator, n):
        idx = rng.integers(0, self.size, size=n)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.d[idx]


# ----------------------------------------------------------------------------
# learner
# ----------------------------------------------------------------------------

NET_NAMES = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")


class TD3:
    def __init__(self, cfg: LearnerConfig = LearnerConfig(), seed=0, obs_dim=OBS_DIM,
                 act_dim=ACT_DIM, rngs: RngStreams | None = None):
        self.cfg = cfg
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self.rngs = rngs or RngStreams(seed)
        dt = np.dtype(cfg.dtype)
        init = self.rngs["init"]
        h = list(cfg.hidden)
        self.actor = MLP([obs_dim] + h + [act_dim], "tanh", init, dt)
        self.critic1 = MLP([obs_dim + act_dim] + h + [1], "linear", init, dt)
        self.critic2 = MLP([obs_dim + act_dim] + h + [1], "linear", init, dt)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        ad = dict(beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        self.actor_opt = Adam(self.actor.params, cfg.actor_lr, **ad)
        self.critic1_opt = Adam(self.critic1.params, cfg.critic_lr, **ad)
        self.critic2_opt = Adam(self.critic2.params, cfg.critic_lr, **ad)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim, act_dim, dt)
        self.iteration = 0      # learn iterations, drives the policy delay
        self.env_steps = 0      # real strokes, drives the exploration schedule

    # -- acting ---------------------------------------------------------------
    def policy(self, obs):
        obs = np.asarray(obs)
        out = self.actor.forward(np.atleast_2d(obs))
        return out[0] if obs.ndim == 1 else out

    def exploration_sigma(self, step):
        return self.cfg.sigma_warmup if step < self.cfg.warmup_steps else self.cfg.sigma

    def select_action(self, obs, step=None, distance=np.inf, explore=True):
        """``clip(pi(s) + eps, -1, 1)``; no noise close to the goal or when not exploring."""
        a = np.asarray(self.policy(obs), dtype=np.float64)
        step = self.env_steps if step is None else step
        if explore and distance >= self.cfg.noise_off_distance:
            eps = self.rngs["exploration"].normal(0.0, self.exploration_sigma(step), size=a.shape)
            a = np.clip(a + eps, -1.0, 1.0)
        return a

    # -- learning --------------------------------------------------------------
    def critic_targets(self, r, s2, done, noise):
        a2 = self.actor_target.forward(s2)
        a2 = np.clip(a2 + noise, -1.0, 1.0)
        x2 = np.concatenate([s2, a2], axis=1)
        q1 = self.critic1_target.forward(x2)
        q2 = self.critic2_target.forward(x2)
        return r + self.cfg.gamma * (1.0 - done) * np.minimum(q1, q2), q1, q2

    def target_noise(self, shape):
        c = self.cfg
        n = self.rngs["target_noise"].normal(0.0, c.target_sigma, size=shape)
        return np.clip(n, -c.target_clip, c.target_clip).astype(self.actor.dtype)

    @staticmethod
    def critic_loss_grads(critic: MLP, x, y):
        q, acts = critic.forward(x, keep=True)
        diff = q - y
        loss = float(np.mean(diff ** 2))
        grads, _ = critic.backward(acts, 2.0 * diff / len(x))
        return loss, grads

    def actor_loss_grads(self, s):
        a, acts_a = self.actor.forward(s, keep=True)
        x = np.concatenate([s, a], axis=1)
        q, acts_q = self.critic1.forward(x, keep=True)
        loss = -float(np.mean(q))
        _, gx = self.critic1.backward(acts_q, -np.ones_like(q) / len(s))
        grads, _ = self.actor.backward(acts_a, gx[:, self.obs_dim:])
        return loss, grads

    def learn_iteration(self):
        """One Algorithm-1 iteration; returns ``None`` while the buffer is underfull."""
        c = self.cfg
        if len(self.buffer) < c.batch_size:
            return None
        s, a, r, s2, d = self.buffer.sample(self.rngs["sampling"], c.batch_size)
        noise = self.target_noise((c.batch_size, self.act_dim))
        y, _, _ = self.critic_targets(r, s2, d, noise)
        x = np.concatenate([s, a], axis=1)
        l1, g1 = self.critic_loss_grads(self.critic1, x, y)
        l2, g2 = self.critic_loss_grads(self.critic2, x, y)
        self.critic1_opt.step(self.critic1.params, g1)
        self.critic2_opt.step(self.critic2.params, g2)
        self.iteration += 1
        out = {"critic1_loss": l1, "critic2_loss": l2, "actor_loss": None}
        if self.iteration % c.policy_delay == 0:
            la, ga = self.actor_loss_grads(s)
            self.actor_opt.step(self.actor.params, ga)
            soft_update(self.actor_target, self.actor, c.tau)
            soft_update(self.critic1_target, self.critic1, c.tau)
            soft_update(self.critic2_target, self.critic2, c.tau)
            out["actor_loss"] = la
        for net in (self.actor, self.critic1, self.critic2):
            if not all(np.all(np.isfinite(p)) for p in net.params):
                raise TrainingError("non-finite parameters after update")
        return out

    def learn(self, n):
        last = None
        for _ in range(int(n)):
            res = self.learn_iteration()
            if res is None:
                break
            last = res
        return last

    # -- state ----------------------------------------------------------------
    def networks(self):
        return {n: getattr(self, n) for n in NET_NAMES}

    def optimizers(self):
        return {"actor": self.actor_opt, "critic1": self.critic1_opt, "critic2": self.critic2_opt}
