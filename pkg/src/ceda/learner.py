"""Deep Q-learning built on numpy: feed-forward Q-network, uniform replay
buffer, Adam, epsilon schedule, target synchronization, the full training
loop, and text checkpoints.

Everything runs in float64 so identical (config, seed) pairs reproduce
training logs bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .config import RunConfig
from .sensing import observation_length, observe
from .world import N_ACTIONS, World

CHECKPOINT_MAGIC = "CEDA-CKPT v1"


class CheckpointError(Exception):
    """Raised for malformed, truncated, or mismatched checkpoint files."""


class QNetwork:
    """Fully connected ReLU network with a linear output head.

    ``dims`` lists layer widths input-to-output; weight matrices are stored
    (fan_in, fan_out). With ``rng`` given, weights draw from a fan-in scaled
    uniform range (Kaiming style) and biases start at zero; without it, all
    parameters are zero.
    """

    def __init__(self, dims: list[int], rng: np.random.Generator | None = None):
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"invalid layer dims {dims}")
        self.dims = [int(d) for d in dims]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                bound = math.sqrt(6.0 / fan_in)
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(np.asarray(w, dtype=np.float64))
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    def parameters(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def clone(self) -> "QNetwork":
        out = QNetwork(self.dims)
        out.weights = [w.copy() for w in self.weights]
        out.biases = [b.copy() for b in self.biases]
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Action values for one input vector or a batch of rows."""
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        h = arr.reshape(1, -1) if single else arr
        if h.shape[1] != self.input_dim:
            raise ValueError(f"input dim {h.shape[1]} != network input {self.input_dim}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h[0] if single else h

    def _forward_cached(self, x: np.ndarray):
        """Forward pass keeping pre-activations and activations for backprop."""
        pre = []
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0) if i < last else z
            acts.append(h)
        return pre, acts


def select_action(net: QNetwork, x: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy over the network's action values; ties pick the lowest
    index. No randomness is consumed when epsilon is zero."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(net.forward(x)))


class ReplayBuffer:
    """FIFO ring of joint transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._size = 0
        self._next = 0
        self._arrays: dict[str, np.ndarray] | None = None

    def __len__(self) -> int:
        return self._size

    def _allocate(self, obs_dim: int) -> None:
        n = self.capacity
        self._arrays = {
            "o0": np.zeros((n, obs_dim)), "o1": np.zeros((n, obs_dim)),
            "n0": np.zeros((n, obs_dim)), "n1": np.zeros((n, obs_dim)),
            "a0": np.zeros(n, dtype=np.int64), "a1": np.zeros(n, dtype=np.int64),
            "r0": np.zeros(n), "r1": np.zeros(n),
            "terminal": np.zeros(n, dtype=bool),
        }

    def push(self, o0, o1, a0, a1, r0, r1, n0, n1, terminal: bool) -> None:
        if self._arrays is None:
            self._allocate(len(o0))
        arr = self._arrays
        i = self._next
        arr["o0"][i] = o0
        arr["o1"][i] = o1
        arr["n0"][i] = n0
        arr["n1"][i] = n1
        arr["a0"][i] = a0
        arr["a1"][i] = a1
        arr["r0"][i] = r0
        arr["r1"][i] = r1
        arr["terminal"][i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        arr = self._arrays
        return {k: v[idx] for k, v in arr.items()}


class Adam:
    """Per-parameter adaptive moment optimizer (in-place updates)."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def compute_loss_and_grads(policy: QNetwork, target: QNetwork,
                           batch: dict[str, np.ndarray], gamma: float):
    """TD loss over both agents' perspectives plus analytic parameter gradients.

    Each transition contributes two squared TD errors, one per agent, with the
    partner's observation concatenated after the agent's own. The loss is the
    batch mean of that two-agent sum.
    """
    b = batch["a0"].shape[0]
    x = np.concatenate([
        np.hstack([batch["o0"], batch["o1"]]),
        np.hstack([batch["o1"], batch["o0"]]),
    ])
    x_next = np.concatenate([
        np.hstack([batch["n0"], batch["n1"]]),
        np.hstack([batch["n1"], batch["n0"]]),
    ])
    actions = np.concatenate([batch["a0"], batch["a1"]])
    rewards = np.concatenate([batch["r0"], batch["r1"]])
    cont = 1.0 - np.concatenate([batch["terminal"], batch["terminal"]]).astype(np.float64)

    targets = rewards + gamma * cont * target.forward(x_next).max(axis=1)
    pre, acts = policy._forward_cached(x)
    rows = np.arange(2 * b)
    delta = targets - acts[-1][rows, actions]
    loss = float(np.sum(delta * delta) / b)

    g_out = np.zeros_like(acts[-1])
    g_out[rows, actions] = -2.0 * delta / b
    n_layers = len(policy.weights)
    grads_w: list[np.ndarray] = [np.empty(0)] * n_layers
    grads_b: list[np.ndarray] = [np.empty(0)] * n_layers
    gz = g_out
    for layer in range(n_layers - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ gz
        grads_b[layer] = gz.sum(axis=0)
        if layer > 0:
            gz = (gz @ policy.weights[layer].T) * (pre[layer - 1] > 0.0)
    return loss, grads_w + grads_b


def clip_gradients(grads: list[np.ndarray], max_norm: float = 1.0) -> float:
    """Rescale all gradients in place to a global L2 norm of at most
    ``max_norm``; returns the pre-clip norm."""
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def td_update(policy: QNetwork, target: QNetwork, batch: dict[str, np.ndarray],
              gamma: float, optimizer: Adam) -> float:
    loss, grads = compute_loss_and_grads(policy, target, batch, gamma)
    clip_gradients(grads, 1.0)
    optimizer.step(policy.parameters(), grads)
    return loss


def sync_target(policy: QNetwork, target: QNetwork) -> None:
    """Hard-copy policy parameters into the target network."""
    for dst, src in zip(target.parameters(), policy.parameters()):
        np.copyto(dst, src)


def epsilon_schedule(episode: int, total_episodes: int, start: float,
                     floor: float, decay_fraction: float) -> float:
    """Multiplicative anneal from ``start`` to ``floor`` across the first
    ``decay_fraction`` of episodes, flat at the floor afterwards."""
    horizon = max(1, round(decay_fraction * total_episodes))
    x = min(episode, horizon) / horizon
    return max(floor, start * (floor / start) ** x)


# --- checkpoints ------------------------------------------------------------

def save_checkpoint(net: QNetwork, path) -> None:
    """Text checkpoint: magic line, layer dims, then per layer the weight rows
    followed by the bias vector, one full-precision decimal per token."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CHECKPOINT_MAGIC + "\n")
            fh.write(" ".join(str(d) for d in net.dims) + "\n")
            for w, b in zip(net.weights, net.biases):
                for row in w:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
                fh.write(" ".join(repr(float(v)) for v in b) + "\n")
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> QNetwork:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != CHECKPOINT_MAGIC:
        found = lines[0].strip() if lines else "<empty file>"
        raise CheckpointError(f"{path}: bad header {found!r}, expected {CHECKPOINT_MAGIC!r}")
    if len(lines) < 2:
        raise CheckpointError(f"{path}: missing layer dimension line")
    try:
        dims = [int(tok) for tok in lines[1].split()]
    except ValueError as exc:
        raise CheckpointError(f"{path}: malformed dimension line {lines[1]!r}") from exc
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise CheckpointError(f"{path}: invalid layer dims {dims}")
    tokens = "\n".join(lines[2:]).split()
    expected = sum(i * o + o for i, o in zip(dims[:-1], dims[1:]))
    if len(tokens) != expected:
        raise CheckpointError(
            f"{path}: expected {expected} parameter values for dims {dims}, found {len(tokens)}")
    try:
        values = np.array([float(tok) for tok in tokens], dtype=np.float64)
    except ValueError as exc:
        raise CheckpointError(f"{path}: non-numeric parameter token") from exc
    net = QNetwork(dims)
    pos = 0
    for layer, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        n = fan_in * fan_out
        net.weights[layer] = values[pos:pos + n].reshape(fan_in, fan_out).copy()
        pos += n
        net.biases[layer] = values[pos:pos + fan_out].copy()
        pos += fan_out
    return net


# --- training log -----------------------------------------------------------

@dataclass
class EpisodeRow:
    episode: int
    steps: int
    epsilon: float
    reward0: float
    reward1: float
    reward_total: float
    delivered: int
    expired: int
    spawned: int
    landed0: int
    landed1: int
    both_landed: int
    collisions: int
    battery0: float
    battery1: float
    d_w1: int
    d_w2: int
    d_w3: int
    u_w1: int
    u_w2: int
    u_w3: int
    a_w1: int          # still active at episode end (horizon cuts)
    a_w2: int
    a_w3: int
    updates: int
    loss_mean: float


TRAINING_LOG_FIELDS = [f.name for f in fields(EpisodeRow)]


class TrainingLog:
    """Per-episode outcome ledger; one row per training episode."""

    def __init__(self, rows: list[EpisodeRow] | None = None):
        self.rows: list[EpisodeRow] = rows if rows is not None else []

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrainingLog) and self.rows == other.rows

    @staticmethod
    def _format(value) -> str:
        return repr(value) if isinstance(value, float) else str(value)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAINING_LOG_FIELDS)
            for row in self.rows:
                writer.writerow([self._format(getattr(row, name))
                                 for name in TRAINING_LOG_FIELDS])

    @classmethod
    def read_csv(cls, path) -> "TrainingLog":
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                kwargs = {}
                for f in fields(EpisodeRow):
                    raw = rec[f.name]
                    kwargs[f.name] = float(raw) if f.type == "float" else int(raw)
                rows.append(EpisodeRow(**kwargs))
        return cls(rows)


def _episode_class_counts(world: World) -> tuple[list[int], list[int], list[int]]:
    from .triage import current_weight

    delivered = [0, 0, 0]
    expired = [0, 0, 0]
    active = [0, 0, 0]
    for p in world.pool.patients:
        if p.delivered:
            delivered[p.terminal_weight - 1] += 1
        elif p.expired:
            expired[p.terminal_weight - 1] += 1
        else:
            active[current_weight(p, world.clock - p.spawn_time) - 1] += 1
    return delivered, expired, active


def train(cfg: RunConfig, seed: int, out_dir=None, progress=None
          ) -> tuple[QNetwork, TrainingLog]:
    """Run the full training loop and return the final policy network and log.

    Per episode the world is rebuilt with fresh patients and hazards, both
    actions come from the shared network queried with swapped observation
    blocks, the joint transition is stored, and one gradient update runs per
    environment step once the buffer holds a full batch. The target network
    hard-syncs every ``target_sync`` episodes. With ``out_dir`` set, the log
    streams to ``training_log.csv`` and checkpoints are written at every
    ``checkpoint_interval`` episodes and at the end.
    """
    from .world import AgentCollision, ObstacleCollision  # event classes

    lp = cfg.learner
    root = np.random.SeedSequence(seed)
    net_ss, action_ss, world_ss, replay_ss = root.spawn(4)
    rng_action = np.random.default_rng(action_ss)
    rng_replay = np.random.default_rng(replay_ss)
    rng_worlds = np.random.default_rng(world_ss)

    obs_len = observation_length(cfg.triage.max_patients)
    dims = [2 * obs_len, *lp.hidden, N_ACTIONS]
    policy = QNetwork(dims, np.random.default_rng(net_ss))
    target = policy.clone()
    optimizer = Adam(policy.parameters(), lp.learning_rate)
    buffer = ReplayBuffer(lp.buffer_capacity)
    log = TrainingLog()

    out_path = Path(out_dir) if out_dir is not None else None
    log_fh = None
    log_writer = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_path / "training_log.csv", "w", encoding="utf-8", newline="")
        log_writer = csv.writer(log_fh)
        log_writer.writerow(TRAINING_LOG_FIELDS)

    try:
        for episode in range(lp.episodes):
            eps = epsilon_schedule(episode, lp.episodes, lp.epsilon_start,
                                   lp.epsilon_min, lp.epsilon_decay_fraction)
            world = World(cfg, int(rng_worlds.integers(0, 2 ** 63 - 1)))
            obs0 = observe(world, 0)
            obs1 = observe(world, 1)
            totals = [0.0, 0.0]
            collisions = 0
            updates = 0
            loss_sum = 0.0
            steps = 0
            while True:
                a0 = select_action(policy, np.concatenate([obs0, obs1]), eps, rng_action)
                a1 = select_action(policy, np.concatenate([obs1, obs0]), eps, rng_action)
                outcome = world.step((a0, a1))
                next0 = observe(world, 0)
                next1 = observe(world, 1)
                # A horizon cut is not an environment terminal: bootstrap it.
                buffer.push(obs0, obs1, a0, a1, outcome.rewards[0], outcome.rewards[1],
                            next0, next1, outcome.terminal and not outcome.truncated)
                if len(buffer) >= lp.batch_size:
                    loss_sum += td_update(policy, target,
                                          buffer.sample(lp.batch_size, rng_replay),
                                          lp.gamma, optimizer)
                    updates += 1
                totals[0] += outcome.rewards[0]
                totals[1] += outcome.rewards[1]
                collisions += sum(1 for ev in outcome.events
                                  if isinstance(ev, (ObstacleCollision, AgentCollision)))
                obs0, obs1 = next0, next1
                steps += 1
                if outcome.terminal:
                    break

            if (episode + 1) % lp.target_sync == 0:
                sync_target(policy, target)

            d_classes, u_classes, a_classes = _episode_class_counts(world)
            row = EpisodeRow(
                episode=episode,
                steps=steps,
                epsilon=eps,
                reward0=totals[0],
                reward1=totals[1],
                reward_total=totals[0] + totals[1],
                delivered=sum(d_classes),
                expired=sum(u_classes),
                spawned=len(world.pool.patients),
                landed0=int(world.drones[0].landed),
                landed1=int(world.drones[1].landed),
                both_landed=int(world.drones[0].landed and world.drones[1].landed),
                collisions=collisions,
                battery0=world.drones[0].battery,
                battery1=world.drones[1].battery,
                d_w1=d_classes[0], d_w2=d_classes[1], d_w3=d_classes[2],
                u_w1=u_classes[0], u_w2=u_classes[1], u_w3=u_classes[2],
                a_w1=a_classes[0], a_w2=a_classes[1], a_w3=a_classes[2],
                updates=updates,
                loss_mean=loss_sum / updates if updates else 0.0,
            )
            log.rows.append(row)
            if log_writer is not None:
                log_writer.writerow([TrainingLog._format(getattr(row, name))
                                     for name in TRAINING_LOG_FIELDS])
                log_fh.flush()
            if progress is not None:
                progress(row)
            if out_path is not None and (episode + 1) % lp.checkpoint_interval == 0:
                save_checkpoint(policy, out_path / f"checkpoint_ep{episode + 1:06d}.ckpt")
    finally:
        if log_fh is not None:
            log_fh.close()

    if out_path is not None:
        save_checkpoint(policy, out_path / "checkpoint.ckpt")
    return policy, log
