"""spikekit: spiking neural networks on a self-contained float64 autodiff tape."""

from .arraycore import (Gradients, Rng, Tape, Tensor, backward, matmul,
                        stop_gradient)
from .data import Dataset, batches, load_idx_images, load_idx_labels, load_mnist
from .encode import SpikeTrain, delta_encode, eeg_encode, latency_encode, rate_encode
from .errors import (ContractError, DimensionError, FormatError, RangeError,
                     SpikekitError)
from .neurons import (IZHIKEVICH_PRESETS, NeuronConfig, NeuronState, alif_step,
                      alpha_step, fire, init_state, izhikevich_step,
                      learnable_beta_value, lif_step, step, synaptic_step)
from .surrogate import (SurrogateSpec, custom_surrogate, smooth_forward,
                        smooth_gradient, ste_spike)
from .train import (AdamState, ExperimentConfig, PRESETS, SpikingMLP, adam_step,
                    bptt_forward, evaluate, membrane_loss, mse_count_loss,
                    preset, rate_count_loss, run_experiment, softmax_cross_entropy,
                    train_epoch)

__version__ = "0.1.0"
