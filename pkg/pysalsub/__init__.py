"""Moving object detection in video streams, with an incrementally tracked background subspace, a connectivity prior and saliency maps."""

from .block import DataBlock, SectionBlock
from .config import ConfigBlock, RunConfig, ConfigError
from .imagegrid import ImageGrid, ImageError, FrameSequence
from .difference import DifferenceOperator, SolverError
from .subspace import SubspaceState, SubspaceError, init_subspace
from .optimizer import SolverParams, AblationMode, ParameterError, StreamSolver, process_frame
from .parameters import TrainingStats, derive_params, update_beta
from .evaluation import ConfusionCounts, EvaluationError, confusion, f1_score, roc_sweep
from .module import BaseModule
from .pipeline import StreamPipeline
from .utils import setup_logging
from . import section_names

from ._version import __version__
