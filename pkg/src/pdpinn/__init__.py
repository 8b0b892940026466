"""Dictionary-fused physics-informed networks with elliptic error bounds."""

from .diffgraph import Jet2, ParamStore
from .dictionaries import DictionarySpec
from .problems import PROBLEMS, ProblemSpec, get
from .training import TrainRecord, TrainSettings, train

__version__ = "0.1.0"

__all__ = [
    "Jet2", "ParamStore", "DictionarySpec", "PROBLEMS", "ProblemSpec",
    "get", "TrainRecord", "TrainSettings", "train", "__version__",
]
