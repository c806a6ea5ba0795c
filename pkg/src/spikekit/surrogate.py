"""Surrogate gradient functions and the straight-through spike operation.

Spike generation is a hard binary step in the forward pass; during
backpropagation its zero-almost-everywhere derivative is replaced by the
derivative of a smooth stand-in. Three stand-ins are built in, and
:func:`custom_surrogate` wraps any (value, derivative) pair the same way.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import arraycore as ac
from .errors import RangeError

__all__ = ["SurrogateSpec", "custom_surrogate", "smooth_forward",
           "smooth_gradient", "ste_spike"]

_KINDS = ("fast_sigmoid", "arctan", "straight_through", "custom")


@dataclass(frozen=True)
class SurrogateSpec:
    """Selects a surrogate and its shape parameters.

    ``smooth`` is a testing hook: when set, :func:`ste_spike` returns the
    smooth value itself instead of the binary step, which gives gradient
    checks a finite-differentiable forward path.
    """

    kind: str = "fast_sigmoid"
    k: float = 25.0
    alpha: float = 2.0
    s: float = 1.0
    custom_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    custom_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smooth: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise RangeError(f"unknown surrogate kind {self.kind!r}")
        if self.k <= 0 or self.alpha <= 0 or self.s <= 0:
            raise RangeError("surrogate slope parameters must be positive")
        if self.kind == "custom" and (self.custom_fn is None or self.custom_grad is None):
            raise RangeError("custom surrogate needs both value and derivative functions")


def custom_surrogate(fn: Callable[[np.ndarray], np.ndarray],
                     grad_fn: Callable[[np.ndarray], np.ndarray]) -> SurrogateSpec:
    """Wrap a user-supplied smooth function and its derivative.

    The derivative is trusted as given; it is not verified symbolically.
    """
    return SurrogateSpec(kind="custom", custom_fn=fn, custom_grad=grad_fn)


def _sigma(spec: SurrogateSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == "fast_sigmoid":
        return spec.k * x / (2.0 * (1.0 + spec.k * np.abs(x))) + 0.5
    if spec.kind == "arctan":
        return np.arctan(spec.alpha * x) / np.pi + 0.5
    if spec.kind == "straight_through":
        return np.clip(spec.s * x + 0.5, 0.0, 1.0)
    return spec.custom_fn(x)


def _dsigma(spec: SurrogateSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == "fast_sigmoid":
        q = 1.0 + spec.k * np.abs(x)
        return spec.k / (2.0 * q * q)
    if spec.kind == "arctan":
        ax = spec.alpha * x
        return spec.alpha / (np.pi * (1.0 + ax * ax))
    if spec.kind == "straight_through":
        # window is open: the subgradient at the clip kinks is 0
        z = spec.s * x + 0.5
        return np.where((z > 0.0) & (z < 1.0), spec.s, 0.0)
    return spec.custom_grad(x)


def smooth_forward(spec: SurrogateSpec, x: ac.Tensor) -> ac.Tensor:
    """The smooth stand-in value, recorded with its closed-form derivative."""
    out = ac.lift(_sigma(spec, x.data), x.requires_grad)
    xd = x.data
    return ac.record(out, (x,), lambda g: (g * _dsigma(spec, xd),))


def smooth_gradient(spec: SurrogateSpec, x: ac.Tensor) -> ac.Tensor:
    """Closed-form derivative of :func:`smooth_forward` (not recorded)."""
    return ac.Tensor(_dsigma(spec, x.data))


def ste_spike(spec: SurrogateSpec, x: ac.Tensor, include_zero: bool = False) -> ac.Tensor:
    """Binary spike with surrogate backward: stop_grad(step(x) - smooth(x)) + smooth(x).

    The forward value is bit-exactly the step function: with smooth values
    in [0, 1] sitting on the same side of 0.5 as the step, step - smooth is
    exact (Sterbenz) and adding smooth back reproduces the step exactly.
    """
    sm = smooth_forward(spec, x)
    if spec.smooth:
        return sm
    hard = ac.heaviside(x, include_zero=include_zero)
    return ac.add(ac.stop_gradient(ac.sub(hard, sm)), sm)
