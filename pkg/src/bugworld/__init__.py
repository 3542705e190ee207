"""Headless 3D simulator with injectable, pixel-labelled video-game bugs."""

from .envs import BEHAVIOURS, ENV_IDS, Env, EnvConfig, Observation, StepInfo, make
from .errors import BugWorldError
from .tags import NO_BUG, TagRegistry, tag_color

__version__ = "0.1.0"

__all__ = [
    "BEHAVIOURS",
    "BugWorldError",
    "ENV_IDS",
    "Env",
    "EnvConfig",
    "NO_BUG",
    "Observation",
    "StepInfo",
    "TagRegistry",
    "make",
    "tag_color",
    "__version__",
]
