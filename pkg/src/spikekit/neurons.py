"""Spiking neuron models with explicit, immutable state records.

Every model is a pure step function ``(cfg, x, state) -> (spikes, state')``
over ``[batch, features]`` tensors. State is a plain dict keyed by short
names (``mem``, plus model-specific entries, plus ``spk`` for the spikes
emitted on the previous step). Step functions never mutate their inputs,
so BPTT is just running them inside a tape.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import arraycore as ac
from .arraycore import Tensor
from .errors import DimensionError, RangeError
from .surrogate import SurrogateSpec, ste_spike

__all__ = ["NeuronConfig", "NeuronState", "IZHIKEVICH_PRESETS", "init_state",
           "step", "lif_step", "izhikevich_step", "alif_step",
           "synaptic_step", "alpha_step", "fire", "learnable_beta_value"]

NeuronState = dict  # keyed record of per-neuron state tensors

MODELS = ("lif", "if", "izhikevich", "alif", "synaptic", "alpha")
RESETS = ("subtract", "zero", "none")

# a, b, c, d for the four classic firing patterns
IZHIKEVICH_PRESETS = {
    "rs": (0.02, 0.2, -65.0, 8.0),
    "ib": (0.02, 0.2, -55.0, 4.0),
    "ch": (0.02, 0.2, -50.0, 2.0),
    "fs": (0.1, 0.2, -65.0, 2.0),
}

IZHIKEVICH_PEAK = 30.0  # mV; spike and reset when the membrane reaches this


@dataclass
class NeuronConfig:
    """Parameters for one neuron layer.

    ``beta`` is the membrane decay per step (forced to 1 for the "if"
    model, which integrates perfectly). ``alpha`` is the synaptic current
    decay used by the synaptic and alpha models; ``rho``/``b_adapt``
    drive threshold adaptation for alif; ``a``..``dt`` parameterize the
    izhikevich dynamics.
    """

    model: str = "lif"
    beta: float = 0.9
    threshold: float = 1.0
    reset: str = "subtract"
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    learnable_beta: bool = False
    alpha: float = 0.5
    rho: float = 0.9
    b_adapt: float = 0.1
    a: float = 0.02
    b: float = 0.2
    c: float = -65.0
    d: float = 8.0
    dt: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise RangeError(f"unknown neuron model {self.model!r}")
        if self.reset not in RESETS:
            raise RangeError(f"unknown reset mechanism {self.reset!r}")
        if self.model == "if":
            self.beta = 1.0
        if not 0.0 < self.beta <= 1.0:
            raise RangeError(f"beta={self.beta} must lie in (0, 1]")
        # alpha=0 is allowed: it degenerates synaptic/alpha to plain lif
        if not 0.0 <= self.alpha < 1.0:
            raise RangeError(f"alpha={self.alpha} must lie in [0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise RangeError(f"rho={self.rho} must lie in (0, 1)")
        if self.b_adapt < 0.0:
            raise RangeError(f"b_adapt={self.b_adapt} must be nonnegative")
        if self.threshold <= 0.0:
            raise RangeError(f"threshold={self.threshold} must be positive")
        if self.dt <= 0.0:
            raise RangeError(f"dt={self.dt} must be positive")

    @classmethod
    def izhikevich(cls, preset: str = "rs", **overrides) -> "NeuronConfig":
        if preset not in IZHIKEVICH_PRESETS:
            raise RangeError(f"unknown izhikevich preset {preset!r}; "
                             f"expected one of {sorted(IZHIKEVICH_PRESETS)}")
        a, b, c, d = IZHIKEVICH_PRESETS[preset]
        return cls(model="izhikevich", a=a, b=b, c=c, d=d, **overrides)


def init_state(cfg: NeuronConfig, batch: int, features: int) -> NeuronState:
    """Fresh zeroed state; izhikevich rests at v=c, u=b*c."""
    if batch < 1 or features < 1:
        raise DimensionError(f"state dims ({batch}, {features}) must be positive")
    shape = (batch, features)

    def const(v):
        return ac.lift(np.full(shape, float(v)))

    st = {"mem": const(0.0), "spk": const(0.0)}
    if cfg.model == "izhikevich":
        st["mem"] = const(cfg.c)
        st["u"] = const(cfg.b * cfg.c)
    elif cfg.model == "alif":
        st["adapt"] = const(0.0)
    elif cfg.model == "synaptic":
        st["syn"] = const(0.0)
    elif cfg.model == "alpha":
        st["exc"] = const(0.0)
        st["inh"] = const(0.0)
    return st


def fire(cfg: NeuronConfig, mem_minus_threshold: Tensor, include_zero: bool = False) -> Tensor:
    """Spike via the layer's surrogate; shared by all models."""
    return ste_spike(cfg.surrogate, mem_minus_threshold, include_zero=include_zero)


def learnable_beta_value(raw: Tensor) -> Tensor:
    """Map an unconstrained scalar parameter to a decay in (0, 1)."""
    return ac.logistic(raw)


def _check_shapes(x: Tensor, st: NeuronState) -> None:
    if x.shape != st["mem"].shape:
        raise DimensionError(f"input shape {x.shape} does not match "
                             f"state shape {st['mem'].shape}")


def _decay_and_reset(cfg: NeuronConfig, mem: Tensor, drive: Tensor,
                     spk_prev: Tensor, beta) -> Tensor:
    """Membrane update U' = beta*U + drive, minus the reset for last step's spikes."""
    if cfg.reset == "subtract":
        return mem * beta + drive - spk_prev * cfg.threshold
    if cfg.reset == "zero":
        return mem * (1.0 - spk_prev) * beta + drive
    return mem * beta + drive


def _beta_of(cfg: NeuronConfig, beta) -> object:
    return cfg.beta if beta is None else beta


def lif_step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
             beta: Optional[Tensor] = None):
    """Leaky integrate-and-fire; with beta=1 this is the perfect integrator (IF)."""
    _check_shapes(x, st)
    mem = _decay_and_reset(cfg, st["mem"], x, st["spk"], _beta_of(cfg, beta))
    spk = fire(cfg, mem - cfg.threshold)
    return spk, {"mem": mem, "spk": spk}


def alif_step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
              beta: Optional[Tensor] = None):
    """LIF plus spike-frequency adaptation: recent firing raises the threshold."""
    _check_shapes(x, st)
    mem = _decay_and_reset(cfg, st["mem"], x, st["spk"], _beta_of(cfg, beta))
    adapt = st["adapt"] * cfg.rho + st["spk"]
    v_eff = adapt * cfg.b_adapt + cfg.threshold
    spk = fire(cfg, mem - v_eff)
    return spk, {"mem": mem, "adapt": adapt, "spk": spk}


def synaptic_step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
                  beta: Optional[Tensor] = None):
    """Input is first filtered into a decaying synaptic current."""
    _check_shapes(x, st)
    syn = st["syn"] * cfg.alpha + x
    mem = _decay_and_reset(cfg, st["mem"], syn, st["spk"], _beta_of(cfg, beta))
    spk = fire(cfg, mem - cfg.threshold)
    return spk, {"mem": mem, "syn": syn, "spk": spk}


def alpha_step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
               beta: Optional[Tensor] = None):
    """Two cascaded current filters give a rise-then-decay drive profile."""
    _check_shapes(x, st)
    exc = st["exc"] * cfg.alpha + x
    inh = st["inh"] * cfg.alpha + exc
    mem = _decay_and_reset(cfg, st["mem"], inh, st["spk"], _beta_of(cfg, beta))
    spk = fire(cfg, mem - cfg.threshold)
    return spk, {"mem": mem, "exc": exc, "inh": inh, "spk": spk}


def izhikevich_step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
                    beta: Optional[Tensor] = None):
    """One forward-Euler step of the two-variable izhikevich dynamics.

    Spiking and reset happen in the same step (v >= 30 mV), unlike the
    one-step-delayed reset of the LIF family. The spike argument is
    normalized by the 30 mV peak so surrogate slopes tuned for unit
    thresholds keep sensible magnitudes.
    """
    _check_shapes(x, st)
    v, u = st["mem"], st["u"]
    dv = v * v * 0.04 + v * 5.0 + 140.0 - u + x
    v1 = v + dv * cfg.dt
    u1 = u + (v * cfg.b - u) * (cfg.a * cfg.dt)
    spk = fire(cfg, (v1 - IZHIKEVICH_PEAK) * (1.0 / IZHIKEVICH_PEAK),
               include_zero=True)
    v2 = v1 + spk * (cfg.c - v1)
    u2 = u1 + spk * cfg.d
    return spk, {"mem": v2, "u": u2, "spk": spk}


_STEP_FNS = {
    "lif": lif_step,
    "if": lif_step,
    "izhikevich": izhikevich_step,
    "alif": alif_step,
    "synaptic": synaptic_step,
    "alpha": alpha_step,
}


def step(cfg: NeuronConfig, x: Tensor, st: NeuronState,
         beta: Optional[Tensor] = None):
    """Dispatch to the step function for cfg.model."""
    return _STEP_FNS[cfg.model](cfg, x, st, beta=beta)