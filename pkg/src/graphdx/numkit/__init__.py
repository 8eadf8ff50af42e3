"""Dense numeric core: network parameters, forward ops, analytic gradients,
SGD, and checkpoint I/O. Hot kernels run under numba by default with a
pure-numpy fallback (see backend.BACKEND_ENV).
"""

from .backend import BACKEND_ENV, active_backend, kernels, numba_available, set_backend
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .network import MODE_BASELINE, MODE_GRAPH, MODES, NetDims, PARAM_NAMES, QNetwork
from .ops import (
    NumericError,
    action_values,
    backward_and_step,
    batch_loss,
    gcn_forward,
    huber_loss,
    loss_and_grads,
    mlp_forward,
    q_values,
)

__all__ = [
    "BACKEND_ENV",
    "Checkpoint",
    "CheckpointError",
    "MODES",
    "MODE_BASELINE",
    "MODE_GRAPH",
    "NetDims",
    "NumericError",
    "PARAM_NAMES",
    "QNetwork",
    "action_values",
    "active_backend",
    "backward_and_step",
    "batch_loss",
    "gcn_forward",
    "huber_loss",
    "kernels",
    "load_checkpoint",
    "loss_and_grads",
    "mlp_forward",
    "numba_available",
    "q_values",
    "save_checkpoint",
    "set_backend",
]
