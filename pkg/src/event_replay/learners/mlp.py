"""Minimal double-DQN on a hand-differentiated feedforward value net.

Everything is float64 numpy: forward pass, backward pass, Adam, and the
Polyak target refresh are written out explicitly so gradients can be
checked against finite differences.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..buffer import SampledBatch

GRAD_CLIP_NORM = 10.0
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class MLPValueNet:
    """Input -> ReLU hidden layers -> linear action values, plus a target copy."""

    def __init__(
        self,
        input_dim: int,
        num_actions: int,
        hidden: Sequence[int] = (256,),
        rng: Optional[np.random.Generator] = None,
    ):
        if input_dim < 1 or num_actions < 1:
            raise ValueError("input_dim and num_actions must be >= 1")
        if not hidden or not all(h >= 1 for h in hidden):
            raise ValueError("hidden must be a non-empty sequence of widths >= 1")
        if len(hidden) > 2:
            raise ValueError("at most two hidden layers are supported")
        rng = rng or np.random.default_rng()
        self.input_dim = int(input_dim)
        self.num_actions = int(num_actions)
        sizes = [self.input_dim, *hidden, self.num_actions]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.target_weights = [w.copy() for w in self.weights]
        self.target_biases = [b.copy() for b in self.biases]
        self._adam_m = [np.zeros_like(p) for p in self._params()]
        self._adam_v = [np.zeros_like(p) for p in self._params()]
        self._adam_t = 0

    # -- parameter plumbing

    def _params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self._params())

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self._params()])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters")
        offset = 0
        for p in self._params():
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    # -- forward passes

    def _forward(self, x: np.ndarray, weights, biases, keep: bool = False):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        pre = []
        act = [x]
        h = x
        last = len(weights) - 1
        for i, (w, b) in enumerate(zip(weights, biases)):
            z = h @ w + b
            if i < last:
                h = np.maximum(z, 0.0)
            else:
                h = z
            if keep:
                pre.append(z)
                act.append(h)
        return (h, pre, act) if keep else h

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Online action values, shape (batch, num_actions)."""
        return self._forward(x, self.weights, self.biases)

    def forward_target(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x, self.target_weights, self.target_biases)


def loss_and_grads(
    net: MLPValueNet,
    states: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    weights: np.ndarray,
    gamma: float,
):
    """Importance-weighted squared-TD loss and its parameter gradients.

    Targets follow the double-DQN rule: the online net picks the argmax
    action at s', the target net evaluates it.  Terminal transitions
    bootstrap with 0 regardless of the nets.  Returns
    ``(loss, td_errors, grads)`` where grads mirrors the parameter list
    (W0, b0, W1, b1, ...); nothing is applied to the net.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    next_states = np.atleast_2d(np.asarray(next_states, dtype=np.float64))
    actions = np.asarray(actions, dtype=np.int64)
    rewards = np.asarray(rewards, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    batch = states.shape[0]
    rows = np.arange(batch)

    online_next = net.forward(next_states)
    best_next = online_next.argmax(axis=1)
    target_next = net.forward_target(next_states)[rows, best_next]
    targets = rewards + gamma * (1.0 - dones) * target_next

    q_all, pre, act = net._forward(states, net.weights, net.biases, keep=True)
    td = q_all[rows, actions] - targets
    loss = float(np.mean(weights * td ** 2))
    if not np.isfinite(loss):
        raise RuntimeError(
            "non-finite DDQN loss: "
            f"td range [{np.nanmin(td):.3g}, {np.nanmax(td):.3g}], "
            f"param norm {np.linalg.norm(net.get_flat_params()):.3g}"
        )

    # d loss / d q(s, a_i); other action columns receive zero
    dout = np.zeros_like(q_all)
    dout[rows, actions] = 2.0 * weights * td / batch

    grads: list[np.ndarray] = []
    dz = dout
    for i in range(len(net.weights) - 1, -1, -1):
        grads.append(dz.sum(axis=0))          # bias
        grads.append(act[i].T @ dz)           # weight
        if i > 0:
            da = dz @ net.weights[i].T
            dz = da * (pre[i - 1] > 0)
    grads.reverse()
    return loss, td, grads


def _adam_apply(net: MLPValueNet, grads: list[np.ndarray], lr: float) -> None:
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if norm > GRAD_CLIP_NORM:
        scale = GRAD_CLIP_NORM / norm
        grads = [g * scale for g in grads]
    net._adam_t += 1
    t = net._adam_t
    for p, m, v, g in zip(net._params(), net._adam_m, net._adam_v, grads):
        m[...] = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v[...] = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        m_hat = m / (1 - ADAM_BETA1 ** t)
        v_hat = v / (1 - ADAM_BETA2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def ddqn_step(
    net: MLPValueNet,
    batch: SampledBatch,
    gamma: float,
    learning_rate: float,
    encoder: Optional[Callable] = None,
):
    """One Adam step on a sampled batch; returns (loss, per-item |TD error|).

    ``encoder`` maps stored states to feature vectors; omit it when the
    buffer already holds numeric arrays.
    """
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    enc = encoder if encoder is not None else (lambda s: s)
    ts = batch.transitions()
    states = np.stack([np.asarray(enc(t.state), dtype=np.float64) for t in ts])
    next_states = np.stack([np.asarray(enc(t.next_state), dtype=np.float64) for t in ts])
    actions = np.array([t.action for t in ts])
    rewards = np.array([t.reward for t in ts])
    dones = np.array([t.done for t in ts], dtype=np.float64)
    weights = np.asarray(batch.weights(), dtype=np.float64)
    loss, td, grads = loss_and_grads(
        net, states, actions, rewards, next_states, dones, weights, gamma
    )
    _adam_apply(net, grads, learning_rate)
    return loss, np.abs(td)


def refresh_target(net: MLPValueNet, rate: float) -> None:
    """Polyak update target <- (1 - rate) * target + rate * online."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must be in (0, 1]")
    for tw, w in zip(net.target_weights, net.weights):
        tw[...] = (1.0 - rate) * tw + rate * w
    for tb, b in zip(net.target_biases, net.biases):
        tb[...] = (1.0 - rate) * tb + rate * b
