"""Newton-Raphson model-predictive control over small learned forward models.

A portable control engine built from flat-array linear algebra, a tiny
network runtime with finite-difference derivatives, and a Newton solver,
plus the simulation pieces needed to benchmark it: a mass-spring-damper
plant, a PID baseline, reference-path generators, a data pipeline, and a
dense-MLP trainer.
"""

from . import bench, cli, datapipe, linalg, metrics, mpc, nn, paths, plant, trainer
from .errors import (
    ArgumentError,
    BarrierDomainError,
    DataError,
    DimensionError,
    ModelFormatError,
    ModelShapeError,
    NormalizationWarning,
    NumericsError,
    SingularMatrix,
    TrainingError,
)

__version__ = "0.1.0"

__all__ = [
    "bench",
    "cli",
    "datapipe",
    "linalg",
    "metrics",
    "mpc",
    "nn",
    "paths",
    "plant",
    "trainer",
    "ArgumentError",
    "BarrierDomainError",
    "DataError",
    "DimensionError",
    "ModelFormatError",
    "ModelShapeError",
    "NormalizationWarning",
    "NumericsError",
    "SingularMatrix",
    "TrainingError",
    "__version__",
]
