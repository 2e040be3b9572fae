"""Simulator for MZI-mesh silicon-photonic neural networks under
fabrication and thermal parameter variations.

The package maps trained complex-valued weight matrices onto rectangular
MZI meshes (via SVD and a Clements-style decomposition), injects
Gaussian uncertainty into phase shifters and beam splitters, and
quantifies the damage at the device level (relative-variation distance)
and the system level (MNIST classification accuracy, Monte Carlo).
"""

__version__ = "0.1.0"

from .devices import (
    MZIParams,
    ThermoOpticParams,
    bes_matrix,
    mzi_transfer,
    mzi_transfer_imperfect,
    phase_from_temperature,
    phs_matrix,
)
from .linalg import dagger, haar_random_unitary, is_unitary, matmul, rvd, svd
from .mesh import (
    DecomposedUnitary,
    PhotonicLinearLayer,
    clements_decompose,
    clements_layout,
    layer_from_weights,
    layer_transfer,
    reconstruct,
    synthesize_diagonal,
)
from .network import (
    PhotonicSPNN,
    SPNNModel,
    TrainConfig,
    accuracy,
    forward_ideal,
    forward_photonic,
    load_model,
    save_model,
    train,
)
from .uncertainty import PerturbationSpec, Zone, sample_perturbed, zone_partition
