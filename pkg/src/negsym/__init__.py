"""Negational symmetry of readout-coupled quantum neural networks.

Dense statevector simulation, XX/ZZ parity-layer QNNs, parameter-shift
training, the MNIST binary-pattern pipeline, an MLP baseline and numerical
symmetry checks.
"""

from .data import LabeledDataset, negate
from .qnn import ArchitectureSpec, QnnModel, features, forward, predict
from .symmetry import PairStats, SymmetryReport
from .train import TrainConfig

__all__ = [
    "ArchitectureSpec",
    "LabeledDataset",
    "PairStats",
    "QnnModel",
    "SymmetryReport",
    "TrainConfig",
    "features",
    "forward",
    "negate",
    "predict",
]
__version__ = "0.1.0"
