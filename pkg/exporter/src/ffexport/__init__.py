"""Convert externally trained feedforward checkpoints to analysis-ready JSON.

The target formats are the weight and dataset files consumed by the
specmargin command-line tool.  Only pure linear/ReLU chains are exported;
anything that would change the computed function (biases, convolutions,
normalization layers, other activations) is rejected by name rather than
approximated, because every norm in the downstream bounds would silently
change otherwise.
"""

from .serialize import ExportError
from .manifest import ExportManifest
from .checkpoint import export_weights, layers_from_module, layers_from_state_dict
from .datasets import export_dataset, load_dataset_arrays

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportManifest",
    "export_weights",
    "export_dataset",
    "layers_from_module",
    "layers_from_state_dict",
    "load_dataset_arrays",
    "__version__",
]
