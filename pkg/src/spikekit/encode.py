"""Spike encoders: analog values in, time-first binary spike trains out.

All encoders return a :class:`SpikeTrain` whose data has time as the
leading axis, ``[T, ...]``, and whose entries are exactly 0 or 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import arraycore as ac
from .arraycore import Rng, Tensor
from .errors import RangeError

__all__ = ["SpikeTrain", "rate_encode", "latency_encode", "delta_encode",
           "eeg_encode"]


@dataclass(frozen=True)
class SpikeTrain:
    """Binary tensor of shape [T, ...] with time first."""

    data: Tensor
    num_steps: int

    def __post_init__(self):
        if self.data.ndim < 1 or self.data.shape[0] != self.num_steps:
            raise RangeError(f"spike train shape {self.data.shape} does not "
                             f"start with num_steps={self.num_steps}")

    def __len__(self) -> int:
        return self.num_steps

    def __getitem__(self, t: int) -> Tensor:
        return ac.lift(self.data.data[t])


def _values_in_unit_interval(x: np.ndarray, who: str) -> None:
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise RangeError(f"{who} expects values in [0, 1]; "
                         f"got range [{x.min()}, {x.max()}]")


def rate_encode(x: Tensor, num_steps: int, rng: Rng) -> SpikeTrain:
    """Bernoulli spikes: each value is a fresh firing probability per step."""
    if num_steps < 0:
        raise RangeError(f"num_steps={num_steps} must be nonnegative")
    _values_in_unit_interval(x.data, "rate_encode")
    if num_steps == 0:
        return SpikeTrain(ac.lift(np.zeros((0,) + x.shape)), 0)
    u = rng.uniform((num_steps,) + x.shape)
    spikes = (u.data < x.data).astype(np.float64)
    return SpikeTrain(ac.lift(spikes), num_steps)


def latency_encode(x: Tensor, num_steps: int, mapping: str = "linear",
                   tau: float | None = None) -> SpikeTrain:
    """One spike per element; larger values fire earlier.

    linear: t* = round((1 - x) * (T - 1)).
    exponential: t* = round(tau * ln(1 / max(x, 1/T))), clamped to [0, T-1];
    tau defaults to (T - 1) / ln(T) so that x <= 1/T lands on the last step.
    """
    if num_steps < 1:
        raise RangeError(f"num_steps={num_steps} must be at least 1")
    _values_in_unit_interval(x.data, "latency_encode")
    if mapping == "linear":
        t_star = np.rint((1.0 - x.data) * (num_steps - 1)).astype(np.int64)
    elif mapping == "exponential":
        eps = 1.0 / num_steps
        if tau is None:
            tau = (num_steps - 1) / np.log(num_steps) if num_steps > 1 else 1.0
        if tau <= 0:
            raise RangeError(f"tau={tau} must be positive")
        t_star = np.rint(tau * np.log(1.0 / np.maximum(x.data, eps))).astype(np.int64)
        t_star = np.clip(t_star, 0, num_steps - 1)
    else:
        raise RangeError(f"unknown latency mapping {mapping!r}")
    spikes = np.zeros((num_steps,) + x.shape)
    grid = np.indices(x.shape)
    spikes[(t_star,) + tuple(grid)] = 1.0
    return SpikeTrain(ac.lift(spikes), num_steps)


def delta_encode(x: Tensor, threshold: float, signed: bool = False) -> SpikeTrain:
    """Spike where the signal moves more than ``threshold`` since the last step.

    The reference starts at x[0], so t=0 never spikes. With ``signed``,
    upward and downward changes land on two separate leading channels,
    shaped [T, 2, ...].
    """
    if threshold <= 0:
        raise RangeError(f"threshold={threshold} must be positive")
    xd = x.data
    if xd.ndim < 1 or xd.shape[0] < 1:
        raise RangeError("delta_encode needs a leading time axis")
    num_steps = xd.shape[0]
    diff = np.zeros_like(xd)
    if num_steps > 1:
        diff[1:] = xd[1:] - xd[:-1]
    if signed:
        pos = (diff > threshold).astype(np.float64)
        neg = (diff < -threshold).astype(np.float64)
        spikes = np.stack([pos, neg], axis=1)
    else:
        spikes = (np.abs(diff) > threshold).astype(np.float64)
    return SpikeTrain(ac.lift(spikes), num_steps)


def eeg_encode(x: Tensor, method: str = "threshold_crossing",
               rng: Rng | None = None, threshold: float = 0.1,
               gain: float = 1.0) -> SpikeTrain:
    """Encode a multi-channel temporal signal of shape [T, channels].

    rate: min-max normalize each channel over the window, then Bernoulli
    per timestep (needs ``rng``). delta: per-channel delta modulation with
    ``threshold``. threshold_crossing: spike at upward crossings of the
    per-channel level mean + gain*std; a flat channel never crosses.
    """
    xd = x.data
    if xd.ndim != 2 or xd.shape[0] < 1 or xd.shape[1] < 1:
        raise RangeError(f"eeg_encode expects [T, channels]; got {x.shape}")
    num_steps = xd.shape[0]
    if method == "rate":
        if rng is None:
            raise RangeError("eeg_encode(method='rate') needs an rng")
        lo = xd.min(axis=0)
        span = xd.max(axis=0) - lo
        safe = np.where(span > 0, span, 1.0)
        p = np.where(span > 0, (xd - lo) / safe, 0.0)
        u = rng.uniform(xd.shape)
        return SpikeTrain(ac.lift((u.data < p).astype(np.float64)), num_steps)
    if method == "delta":
        return delta_encode(x, threshold, signed=False)
    if method == "threshold_crossing":
        level = xd.mean(axis=0) + gain * xd.std(axis=0)
        above = xd > level
        spikes = np.zeros_like(xd)
        if num_steps > 1:
            spikes[1:] = (above[1:] & ~above[:-1]).astype(np.float64)
        return SpikeTrain(ac.lift(spikes), num_steps)
    raise RangeError(f"unknown eeg method {method!r}")
