"""Double deep Q-learning for maneuver selection, in plain numpy.

The value network is a ReLU multilayer perceptron with hand-written
backpropagation, trained with Adam on the mean squared error between
``Q(s, a)`` and the double-Q target

    y = r + gamma * (1 - done) * Q_target(s', argmax_a Q_online(s', a))

Note the exploration convention used throughout: ``epsilon`` is the
probability of acting *greedily*, so ``epsilon = 1`` is pure exploitation.
"""

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import DogfightEnv, EpisodeConfig
from .engagement import Outcome
from .errors import CheckpointError, NonFiniteLossError

CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------- network

class QNetwork:
    """Fully connected ReLU network; ``params`` is ``[W0, b0, W1, b1, ...]``.

    Weights are stored as (fan_in, fan_out) so a batch forward pass is
    ``x @ W + b``.
    """

    def __init__(self, sizes=(12, 512, 256, 8), rng=None, dtype=np.float32):
        self.sizes = tuple(int(s) for s in sizes)
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng()
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(self.dtype))
            self.params.append(rng.uniform(-bound, bound, fan_out).astype(self.dtype))

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def forward(self, x):
        """Action values for a single observation or a batch."""
        return self.forward_cache(x)[0]

    def forward_cache(self, x):
        h = np.asarray(x, dtype=self.dtype)
        acts = [h]
        for k in range(self.n_layers):
            h = h @ self.params[2 * k] + self.params[2 * k + 1]
            if k < self.n_layers - 1:
                h = np.maximum(h, 0)
            acts.append(h)
        return h, acts

    def backward(self, acts, grad_out):
        """Gradients of a scalar loss given ``dloss/doutput``; same order as ``params``."""
        grads = [None] * len(self.params)
        g = grad_out
        for k in reversed(range(self.n_layers)):
            a_in = acts[k]
            if a_in.ndim == 1:
                grads[2 * k] = np.outer(a_in, g)
                grads[2 * k + 1] = g.copy()
            else:
                grads[2 * k] = a_in.T @ g
                grads[2 * k + 1] = g.sum(axis=0)
            if k > 0:
                g = (g @ self.params[2 * k].T) * (acts[k] > 0)
        return grads

    def copy(self):
        net = QNetwork.__new__(QNetwork)
        net.sizes = self.sizes
        net.dtype = self.dtype
        net.params = [p.copy() for p in self.params]
        return net

    def copy_from(self, other):
        for dst, src in zip(self.params, other.params):
            dst[...] = src
        return self

    def save(self, path):
        arrays = {f"p{i}": p for i, p in enumerate(self.params)}
        np.savez(path, version=CHECKPOINT_VERSION, sizes=np.array(self.sizes), **arrays)

    @classmethod
    def load(cls, path):
        """Load a checkpoint written by :meth:`save` (layer sizes plus W/b in layer order)."""
        try:
            with np.load(path) as data:
                if int(data["version"]) != CHECKPOINT_VERSION:
                    raise CheckpointError(f"{path}: unsupported checkpoint version {int(data['version'])}")
                sizes = tuple(int(s) for s in data["sizes"])
                params = [data[f"p{i}"] for i in range(2 * (len(sizes) - 1))]
        except CheckpointError:
            raise
        except (OSError, KeyError, ValueError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
        net = cls.__new__(cls)
        net.sizes = sizes
        net.dtype = params[0].dtype
        for k, (fi, fo) in enumerate(zip(sizes[:-1], sizes[1:])):
            if params[2 * k].shape != (fi, fo) or params[2 * k + 1].shape != (fo,):
                raise CheckpointError(f"{path}: layer {k} shape does not match sizes {sizes}")
        net.params = params
        return net


class Adam:
    """Adaptive moment estimation with bias correction."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * math.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= (scale * m / (np.sqrt(v) + self.eps)).astype(p.dtype)


# ---------------------------------------------------------------- replay

@dataclass
class Transition:
    s: np.ndarray
    a: int
    s_next: np.ndarray
    r: float
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity=100_000, obs_size=12, dtype=np.float32):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, obs_size), dtype=dtype)
        self.s_next = np.zeros((capacity, obs_size), dtype=dtype)
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity, dtype=dtype)
        self.done = np.zeros(capacity, dtype=bool)
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, s, a, r, s_next, done):
        if not 0 <= int(a) < 8:
            raise ValueError(f"action {a} outside 0..7")
        if not math.isfinite(r):
            raise ValueError("reward must be finite")
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s_next[i], self.done[i] = s, a, r, s_next, done
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, n, rng):
        return rng.integers(0, self.size, size=n)

    def sample(self, n, rng):
        """Arrays (s, a, r, s_next, done) for ``n`` uniform draws with replacement."""
        idx = self.sample_indices(n, rng)
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx], self.done[idx]


# ---------------------------------------------------------------- learning

@dataclass
class TrainConfig:
    gamma: float = 0.95
    epsilon: float = 0.95  # probability of the greedy action while training
    eval_epsilon: float = 1.0
    target_sync: int = 512  # training steps between hard target copies
    lr: float = 1e-4
    batch: int = 512
    buffer: int = 100_000
    steps: int = 500_000  # environment decision steps
    hidden: tuple = (512, 256)
    checkpoint_every: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.gamma <= 1 and 0 < self.epsilon <= 1):
            raise ValueError("gamma and epsilon must be in (0, 1]")
        if self.batch > self.buffer:
            raise ValueError("batch larger than the replay buffer")


def act_epsilon_greedy(net, obs, epsilon, rng):
    """Greedy action with probability ``epsilon``, otherwise uniform over the 8 maneuvers."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if rng.random() < epsilon:
        return int(np.argmax(net.forward(obs)))
    return int(rng.integers(net.sizes[-1]))


def td_targets(batch, net, target_net, gamma):
    """Double-Q targets for arrays ``(s, a, r, s_next, done)`` or a list of Transitions."""
    if isinstance(batch, (list, tuple)) and batch and isinstance(batch[0], Transition):
        batch = (np.array([t.s for t in batch]), np.array([t.a for t in batch]),
                 np.array([t.r for t in batch]), np.array([t.s_next for t in batch]),
                 np.array([t.done for t in batch]))
    _, _, r, s_next, done = batch
    best = np.argmax(net.forward(s_next), axis=1)
    q_next = target_net.forward(s_next)[np.arange(len(best)), best]
    return np.asarray(r, dtype=q_next.dtype) + gamma * (1.0 - np.asarray(done, dtype=q_next.dtype)) * q_next


def loss_and_grads(net, s, a, targets):
    """Mean squared TD error and its gradient w.r.t. the online parameters."""
    q, acts = net.forward_cache(s)
    rows = np.arange(len(a))
    diff = q[rows, a] - targets
    loss = float(np.mean(diff * diff))
    dq = np.zeros_like(q)
    dq[rows, a] = 2.0 * diff / len(a)
    return loss, net.backward(acts, dq)


def train_step(buffer, net, target_net, optimizer, config, rng):
    """Sample a batch, take one Adam step and return the loss."""
    s, a, r, s_next, done = buffer.sample(config.batch, rng)
    targets = td_targets((s, a, r, s_next, done), net, target_net, config.gamma)
    loss, grads = loss_and_grads(net, s, a, targets)
    if not math.isfinite(loss):
        raise NonFiniteLossError(f"loss became {loss} after {optimizer.t} updates")
    optimizer.step(grads)
    return loss


def sync_target(net, target_net):
    return target_net.copy_from(net)


def _streams(seed):
    env_seq, agent_seq, init_seq = np.random.SeedSequence(seed).spawn(3)
    return (int(env_seq.generate_state(1)[0]), np.random.default_rng(agent_seq),
            np.random.default_rng(init_seq))


@dataclass
class TrainResult:
    net: QNetwork
    log: list  # rows (step, episode, loss, epsilon, outcome)
    outcomes: list  # per finished episode: (episode, step, outcome name)
    updates: int
    syncs: list  # update counts at which the target was synced
    buffer_size: int
    seconds: float

    def cumulative(self):
        """Rows (episode, step, wins, losses, ties) of running outcome counts."""
        w = l = t = 0
        rows = []
        for ep, step, name in self.outcomes:
            w += name == "win"
            l += name == "loss"
            t += name == "tie"
            rows.append((ep, step, w, l, t))
        return rows


OUTCOME_NAMES = {Outcome.BlueWin: "win", Outcome.RedWin: "loss", Outcome.Tie: "tie"}


def train(env_config=None, config=None, out_dir=None, progress=None, env_kwargs=None):
    """Run the learning loop for ``config.steps`` decision steps.

    Writes ``train_log.csv``, ``outcomes.csv`` and periodic checkpoints into
    ``out_dir`` when given.  ``progress`` is an optional callable taking
    (step, result-so-far stats dict).  ``env_kwargs`` go to :class:`DogfightEnv`
    (aircraft, tables, controller bank, guidance parameters).
    """
    config = config or TrainConfig()
    env_seed, rng, init_rng = _streams(config.seed)
    env_config = env_config or EpisodeConfig()
    env_config = EpisodeConfig(**{**asdict_shallow(env_config), "seed": env_seed})
    env = DogfightEnv(env_config, **(env_kwargs or {}))
    net = QNetwork((env.obs_size, *config.hidden, env.n_actions), rng=init_rng)
    target = net.copy()
    opt = Adam(net.params, lr=config.lr)
    buf = ReplayBuffer(config.buffer, env.obs_size)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    log, outcomes, syncs = [], [], []
    updates = 0
    episode = 0
    obs = env.reset()
    for step in range(1, config.steps + 1):
        a = act_epsilon_greedy(net, obs, config.epsilon, rng)
        res = env.step(a)
        buf.add(obs, a, res.reward, res.obs, res.done)
        loss = float("nan")
        if len(buf) >= config.batch:
            loss = train_step(buf, net, target, opt, config, rng)
            updates += 1
            if updates % config.target_sync == 0:
                sync_target(net, target)
                syncs.append(updates)
        name = OUTCOME_NAMES.get(res.outcome, "")
        log.append((step, episode, loss, config.epsilon, name))
        if res.done:
            outcomes.append((episode, step, name))
            episode += 1
            obs = env.reset()
        else:
            obs = res.obs
        if out is not None and config.checkpoint_every and step % config.checkpoint_every == 0:
            net.save(out / f"checkpoint_{step}.npz")
        if progress is not None and step % 1000 == 0:
            progress(step, {"episodes": episode, "updates": updates, "loss": loss,
                            "seconds": time.time() - t0})

    result = TrainResult(net, log, outcomes, updates, syncs, len(buf), time.time() - t0)
    if out is not None:
        net.save(out / "checkpoint_final.npz")
        write_train_log(result, out / "train_log.csv")
        write_outcomes(result, out / "outcomes.csv")
    return result


def asdict_shallow(dc):
    return {k: getattr(dc, k) for k in dc.__dataclass_fields__}


def write_train_log(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "episode", "loss", "epsilon", "outcome"))
        for step, ep, loss, eps, name in result.log:
            w.writerow((step, ep, repr(loss), eps, name))


def write_outcomes(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("episode", "step", "wins", "losses", "ties"))
        w.writerows(result.cumulative())


def evaluate(net, options, n_episodes, seed=0, env_config=None, epsilon=1.0, policy=None,
             env_kwargs=None):
    """Percentages (win, loss, tie) over ``n_episodes`` against a decision-tree variant.

    ``policy`` replaces the network with any callable ``(env, obs) -> action``.
    """
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    base = env_config or EpisodeConfig()
    env = DogfightEnv(EpisodeConfig(**{**asdict_shallow(base), "red_options": options,
                                        "seed": seed}), **(env_kwargs or {}))
    rng = np.random.default_rng(seed)
    counts = {"win": 0, "loss": 0, "tie": 0}
    for _ in range(n_episodes):
        obs = env.reset()
        while True:
            if policy is not None:
                a = policy(env, obs)
            else:
                a = act_epsilon_greedy(net, obs, epsilon, rng)
            res = env.step(a)
            obs = res.obs
            if res.done:
                counts[OUTCOME_NAMES[res.outcome]] += 1
                break
    return tuple(100.0 * counts[k] / n_episodes for k in ("win", "loss", "tie"))


def write_report(rows, path):
    """JSON evaluation report: one record per strategy."""
    with open(path, "w") as fh:
        json.dump([{"strategy": s, "win": w, "loss": l, "tie": t} for s, w, l, t in rows], fh, indent=2)
