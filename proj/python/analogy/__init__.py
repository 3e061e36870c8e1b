"""Structural analogies between two images, trained from the pair alone.

Images are ``(H, W, 3)`` float arrays with values in ``[-1, 1]``.
"""

import json

from . import _analogy
from ._analogy import (
    LossReport,
    Model,
    NonFiniteError,
    TrainOutput,
    frechet_distance,
    injection_sweep,
    load_image,
    load_model,
    preview_grid,
    random_analogy,
    refine,
    resize,
    save_image,
    schedule_sizes,
    sifid,
    translate,
    translate_video,
)

__all__ = [
    "LossReport",
    "Model",
    "NonFiniteError",
    "TrainOutput",
    "config",
    "frechet_distance",
    "injection_sweep",
    "load_image",
    "load_model",
    "model_config",
    "preview_grid",
    "random_analogy",
    "refine",
    "resize",
    "resume_training",
    "save_image",
    "schedule_sizes",
    "sifid",
    "train_pair",
    "train_refinement",
    "train_video",
    "translate",
    "translate_video",
]


def config(**overrides):
    """Default training configuration with ``overrides`` applied and validated."""
    c = json.loads(_analogy.default_config_json())
    c.update(overrides)
    return json.loads(_analogy.validate_config_json(json.dumps(c)))


def model_config(model):
    return json.loads(model.config_json)


def _config_text(cfg):
    return json.dumps(config() if cfg is None else cfg)


def train_pair(a, b, cfg=None, checkpoint_dir="", stop_after_scale=-1):
    return _analogy.train_pair(a, b, _config_text(cfg), str(checkpoint_dir), stop_after_scale)


def train_video(frames, b, cfg=None, checkpoint_dir=""):
    return _analogy.train_video(list(frames), b, _config_text(cfg), str(checkpoint_dir))


def train_refinement(target, cfg=None, checkpoint_dir=""):
    return _analogy.train_refinement(target, _config_text(cfg), str(checkpoint_dir))


def resume_training(checkpoint_dir):
    return _analogy.resume_training(str(checkpoint_dir))
