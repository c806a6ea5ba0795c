"""Small spiking networks used by gradient-oracle tests.

Gradient checks run the network in smooth-surrogate mode: the hard step
forward is replaced by the surrogate itself, so central differences see
the same function the backward pass differentiates.
"""
import numpy as np

from spikekit import arraycore as ac
from spikekit.encode import rate_encode
from spikekit.neurons import NeuronConfig
from spikekit.surrogate import SurrogateSpec
from spikekit.train import SpikingMLP, membrane_loss

TOY_IN, TOY_HIDDEN, TOY_OUT, TOY_STEPS = 4, 2, 3, 3


def toy_config(model: str, smooth: bool) -> NeuronConfig:
    spec = SurrogateSpec(kind="fast_sigmoid", k=5.0, smooth=smooth)
    if model == "izhikevich":
        return NeuronConfig.izhikevich("rs", surrogate=spec)
    return NeuronConfig(model=model, surrogate=spec)


def build_toy(model: str, seed: int, smooth: bool = True):
    """Returns (mlp, spikes_in, targets, loss_fn over a params dict)."""
    rng = ac.Rng(seed)
    out_spec = SurrogateSpec(kind="fast_sigmoid", k=5.0, smooth=smooth)
    mlp = SpikingMLP(in_features=TOY_IN, hidden=TOY_HIDDEN, out_features=TOY_OUT,
                     num_steps=TOY_STEPS, hidden_cfg=toy_config(model, smooth),
                     out_cfg=NeuronConfig(reset="none", surrogate=out_spec),
                     rng=rng)
    x = rng.uniform((2, TOY_IN))
    spikes = rate_encode(x, TOY_STEPS, rng)
    targets = np.array([seed % TOY_OUT, (seed + 1) % TOY_OUT])

    def loss_fn(params):
        mlp.set_params(params)
        _, mem_final = mlp.forward(spikes)
        return membrane_loss(mem_final, targets)

    return mlp, spikes, targets, loss_fn
