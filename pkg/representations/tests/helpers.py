import numpy as np

from representations.encoder import EncoderConfig
from representations.losses import TaskConfig
from representations.trep import TRep


def numeric_grad(fn, array, eps=1e-6):
    """Central differences of the scalar ``fn()`` w.r.t. ``array`` (perturbed in place)."""
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + eps
        plus = fn()
        array[idx] = original - eps
        minus = fn()
        array[idx] = original
        grad[idx] = (plus - minus) / (2.0 * eps)
    return grad


def tiny_model(input_dims=1, seed=0, time_scale=32.0, head_hidden=16, **encoder):
    options = {"output_dims": 8, "hidden_dims": 8, "te_dims": 4, "depth": 2, **encoder}
    return TRep(
        EncoderConfig(input_dims=input_dims, **options),
        TaskConfig(head_hidden=head_hidden),
        time_scale=time_scale,
        seed=seed,
    )
