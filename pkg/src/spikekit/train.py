"""BPTT training: two-layer spiking MLP, losses, Adam, and the epoch loop.

The network follows the classic 784 -> hidden (spiking) -> 10 (spiking,
no reset) design: the output layer accumulates membrane potential and
classification reads the argmax of the final membrane state.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import arraycore as ac
from .arraycore import Rng, Tape, Tensor, backward
from .data import Dataset, batches
from .encode import SpikeTrain, rate_encode
from .errors import ContractError, RangeError
from .neurons import NeuronConfig, init_state, learnable_beta_value, step
from .surrogate import SurrogateSpec

__all__ = ["SpikingMLP", "AdamState", "ExperimentConfig", "PRESETS", "preset",
           "bptt_forward", "softmax_cross_entropy", "membrane_loss",
           "rate_count_loss", "mse_count_loss", "adam_step", "train_epoch",
           "evaluate", "run_experiment", "EVAL_SEED"]

# evaluation always re-encodes the test set from this stream, so accuracy
# is reproducible and independent of training progress
EVAL_SEED = 987654321

LOSS_KINDS = ("membrane", "rate_count", "mse_count")


@dataclass
class ExperimentConfig:
    """Hyperparameters for one MNIST run."""

    beta: float = 0.9
    hidden: int = 128
    lr: float = 1e-3
    batch: int = 128
    num_steps: int = 25
    epochs: int = 25
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    loss: str = "membrane"
    seed: int = 0
    data_dir: str = "data/mnist"

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise RangeError(f"unknown loss kind {self.loss!r}")


# the five benchmark configurations; everything else stays at defaults
PRESETS = {
    "C1": dict(beta=0.85, hidden=256, lr=1e-3, batch=128, epochs=25),
    "C2": dict(beta=0.9, hidden=256, lr=1e-3, batch=128, epochs=25),
    "C3": dict(beta=0.9, hidden=256, lr=1e-3, batch=256, epochs=25),
    "C4": dict(beta=0.9, hidden=128, lr=1e-3, batch=128, epochs=25),
    "C5": dict(beta=0.95, hidden=128, lr=2e-3, batch=128, epochs=15),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise RangeError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return ExperimentConfig(**PRESETS[name])


class SpikingMLP:
    """linear -> spiking hidden -> linear -> spiking output, unrolled in time.

    Weights start uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases at
    zero. The output layer must not reset so its membrane can accumulate.
    """

    def __init__(self, in_features: int = 784, hidden: int = 128,
                 out_features: int = 10, num_steps: int = 25,
                 hidden_cfg: Optional[NeuronConfig] = None,
                 out_cfg: Optional[NeuronConfig] = None,
                 rng: Optional[Rng] = None):
        self.in_features = in_features
        self.hidden = hidden
        self.out_features = out_features
        self.num_steps = num_steps
        self.hidden_cfg = hidden_cfg if hidden_cfg is not None else NeuronConfig()
        self.out_cfg = out_cfg if out_cfg is not None else NeuronConfig(reset="none")
        rng = rng if rng is not None else Rng(0)

        def linear_init(fan_in, fan_out):
            bound = 1.0 / math.sqrt(fan_in)
            u = rng.uniform((fan_in, fan_out)).data
            return ac.lift((u * 2.0 - 1.0) * bound, requires_grad=True)

        self.params: dict[str, Tensor] = {
            "w1": linear_init(in_features, hidden),
            "b1": ac.lift(np.zeros(hidden), requires_grad=True),
            "w2": linear_init(hidden, out_features),
            "b2": ac.lift(np.zeros(out_features), requires_grad=True),
        }
        for tag, cfg in (("1", self.hidden_cfg), ("2", self.out_cfg)):
            if cfg.learnable_beta:
                if not cfg.beta < 1.0:
                    raise RangeError("learnable beta needs beta < 1")
                raw = math.log(cfg.beta / (1.0 - cfg.beta))
                self.params[f"raw_beta{tag}"] = ac.lift(np.asarray(raw),
                                                        requires_grad=True)

    def set_params(self, new: dict[str, Tensor]) -> None:
        if new.keys() != self.params.keys():
            raise ContractError("parameter names changed")
        self.params = new

    def _layer_beta(self, tag: str, cfg: NeuronConfig):
        if cfg.learnable_beta:
            return learnable_beta_value(self.params[f"raw_beta{tag}"])
        return None

    def forward(self, spikes_in: SpikeTrain):
        """Unroll over time; returns (spikes [T,B,out], final membrane [B,out])."""
        if spikes_in.num_steps != self.num_steps:
            raise ContractError(f"spike train has {spikes_in.num_steps} steps, "
                                f"model expects {self.num_steps}")
        batch = spikes_in.data.shape[1]
        s1 = init_state(self.hidden_cfg, batch, self.hidden)
        s2 = init_state(self.out_cfg, batch, self.out_features)
        beta1 = self._layer_beta("1", self.hidden_cfg)
        beta2 = self._layer_beta("2", self.out_cfg)
        p = self.params
        out_spikes = []
        for t in range(self.num_steps):
            x = ac.add(ac.matmul(spikes_in[t], p["w1"]), p["b1"])
            spk1, s1 = step(self.hidden_cfg, x, s1, beta=beta1)
            y = ac.add(ac.matmul(spk1, p["w2"]), p["b2"])
            spk2, s2 = step(self.out_cfg, y, s2, beta=beta2)
            out_spikes.append(spk2)
        return ac.stack0(out_spikes), s2["mem"]


def bptt_forward(model: SpikingMLP, spikes_in: SpikeTrain):
    """Unrolled forward pass: (recorded output spikes, final output membrane)."""
    return model.forward(spikes_in)


def _check_targets(targets, num_classes: int) -> np.ndarray:
    t = np.asarray(targets)
    if t.size and (t.min() < 0 or t.max() >= num_classes):
        raise RangeError(f"targets must lie in 0..{num_classes - 1}; "
                         f"got range [{t.min()}, {t.max()}]")
    return t.astype(np.int64)


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean softmax cross-entropy, fused forward/backward for stability."""
    if logits.ndim != 2:
        raise ContractError(f"logits must be [batch, classes]; got {logits.shape}")
    n, c = logits.shape
    t = _check_targets(targets, c)
    z = logits.data
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    se = e.sum(axis=1, keepdims=True)
    logp = (z - m) - np.log(se)
    out = ac.lift(np.asarray(-logp[np.arange(n), t].mean()), logits.requires_grad)
    prob = e / se

    def rule(g):
        gz = prob.copy()
        gz[np.arange(n), t] -= 1.0
        return (gz * (g / n),)

    return ac.record(out, (logits,), rule)


def membrane_loss(mem_final: Tensor, targets) -> Tensor:
    """Cross-entropy on the final-step output membrane."""
    return softmax_cross_entropy(mem_final, targets)


def rate_count_loss(spk_rec: Tensor, targets) -> Tensor:
    """Cross-entropy on spike counts summed over time."""
    return softmax_cross_entropy(ac.sum(spk_rec, axis=0), targets)


def mse_count_loss(spk_rec: Tensor, targets, correct_rate: float = 0.8,
                   incorrect_rate: float = 0.2) -> Tensor:
    """Squared error between spike counts and rate-scaled target counts."""
    if not (0.0 <= correct_rate <= 1.0 and 0.0 <= incorrect_rate <= 1.0):
        raise RangeError("target rates must lie in [0, 1]")
    if spk_rec.ndim != 3:
        raise ContractError(f"spike record must be [T, batch, classes]; "
                            f"got {spk_rec.shape}")
    num_steps, n, c = spk_rec.shape
    t = _check_targets(targets, c)
    counts = ac.sum(spk_rec, axis=0)
    want = np.full((n, c), incorrect_rate * num_steps)
    want[np.arange(n), t] = correct_rate * num_steps
    diff = ac.sub(counts, ac.lift(want))
    return ac.mean(ac.mul(diff, diff))


@dataclass
class AdamState:
    """Adam with bias correction; moments are kept per parameter name."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict[str, Tensor],
              grads: dict[str, Tensor]) -> dict[str, Tensor]:
    """One update; returns the new parameter dict."""
    if grads.keys() != params.keys():
        raise ContractError("gradient names do not match parameter names")
    state.count += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.count
    bc2 = 1.0 - b2 ** state.count
    new = {}
    for name, p in params.items():
        g = grads[name].data
        if g.shape != p.shape:
            raise ContractError(f"gradient shape {g.shape} != parameter "
                                f"shape {p.shape} for {name!r}")
        m = state.m.get(name)
        if m is None:
            m = np.zeros(p.shape)
            v = np.zeros(p.shape)
        else:
            v = state.v[name]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name] = m
        state.v[name] = v
        stepped = p.data - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new[name] = ac.lift(stepped, requires_grad=True)
    return new


def compute_loss(kind: str, spk_rec: Tensor, mem_final: Tensor, targets) -> Tensor:
    if kind == "membrane":
        return membrane_loss(mem_final, targets)
    if kind == "rate_count":
        return rate_count_loss(spk_rec, targets)
    if kind == "mse_count":
        return mse_count_loss(spk_rec, targets)
    raise RangeError(f"unknown loss kind {kind!r}")


def train_epoch(model: SpikingMLP, opt: AdamState, config: ExperimentConfig,
                dataset: Dataset, rng: Rng) -> dict:
    """One pass over the data: shuffle, re-encode, descend. Returns metrics."""
    if len(dataset) == 0:
        raise ContractError("cannot train on an empty dataset")
    t0 = time.perf_counter()
    losses = []
    for xb, yb in batches(dataset, config.batch, rng, shuffle=True):
        spikes = rate_encode(xb, config.num_steps, rng)
        with Tape() as tape:
            spk_rec, mem_final = model.forward(spikes)
            loss = compute_loss(config.loss, spk_rec, mem_final, yb)
        grads = backward(tape, loss)
        gdict = {name: grads[p] for name, p in model.params.items()}
        model.set_params(adam_step(opt, model.params, gdict))
        losses.append(loss.item())
    return {
        "train_loss": float(np.mean(losses)),
        "median_loss": float(np.median(losses)),
        "batch_losses": losses,
        "seconds": time.perf_counter() - t0,
    }


def evaluate(model: SpikingMLP, dataset: Dataset, batch_size: int = 500,
             seed: int = EVAL_SEED) -> float:
    """Fraction of samples whose final-membrane argmax matches the label."""
    rng = Rng(seed)
    correct = 0
    for xb, yb in batches(dataset, batch_size):
        spikes = rate_encode(xb, model.num_steps, rng)
        _, mem_final = model.forward(spikes)
        pred = ac.argmax_lastaxis(mem_final)
        correct += int((pred == yb).sum())
    return correct / len(dataset)


def build_model(config: ExperimentConfig, rng: Rng,
                in_features: int = 784, out_features: int = 10) -> SpikingMLP:
    """The benchmark architecture for a config: hidden resets, output does not."""
    hidden_cfg = NeuronConfig(beta=config.beta, surrogate=config.surrogate)
    out_cfg = NeuronConfig(beta=config.beta, reset="none", surrogate=config.surrogate)
    return SpikingMLP(in_features=in_features, hidden=config.hidden,
                      out_features=out_features, num_steps=config.num_steps,
                      hidden_cfg=hidden_cfg, out_cfg=out_cfg, rng=rng)


def run_experiment(config: ExperimentConfig, train_ds: Dataset, test_ds: Dataset,
                   on_epoch: Optional[Callable[[dict], None]] = None):
    """Train for config.epochs epochs, evaluating after each.

    Returns (model, rows, best_acc) where rows hold one dict per epoch:
    epoch, train_loss, test_acc, epoch_time_s. With zero epochs the rows
    are empty and best_acc is the untrained accuracy.
    """
    rng = Rng(config.seed)
    model = build_model(config, rng, in_features=train_ds.images.shape[1])
    opt = AdamState(lr=config.lr)
    rows = []
    for epoch in range(1, config.epochs + 1):
        stats = train_epoch(model, opt, config, train_ds, rng)
        acc = evaluate(model, test_ds)
        row = {"epoch": epoch, "train_loss": stats["train_loss"],
               "test_acc": acc, "epoch_time_s": stats["seconds"],
               "median_loss": stats["median_loss"]}
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row)
    if rows:
        best_acc = max(r["test_acc"] for r in rows)
    else:
        best_acc = evaluate(model, test_ds)
    return model, rows, best_acc
