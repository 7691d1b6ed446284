"""Event-segmenting sensorimotor prediction.

A numpy library that learns sparsely changing latent codes over scripted
manipulation episodes, extracts event boundaries from its own gate
openings, trains a temporally abstract predictor of boundary observations,
and reproduces goal-predictive attention shifts by minimizing predicted
uncertainty.
"""

from .cells import GRUCell, SparseGatedCell, gate_open_rate, gate_regularizer
from .config import ExperimentConfig
from .events import SkipSample, build_skip_dataset, extract_boundaries, next_boundary
from .gaze import GazeTrace, UncertaintyConfig, run_gaze_episodes, select_attention, uncertainty
from .model import Rollout, SensorimotorModel
from .nn import ConfigError, NumericError, ParamTensor, beta_nll, elu_plus_one, retanh
from .optim import Adam
from .pipeline import export_metrics, run_pipeline, segmentation_report
from .scripted import (Episode, SceneConfig, apply_attention_mask, generate_dataset,
                       generate_episode, sample_scene)
from .skipnet import SkipNetwork
from .training import train_fim, train_skip

__version__ = "0.1.0"
