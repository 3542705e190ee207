"""Thin client for the bugworld simulator.

RemoteEnv wraps the binary socket protocol one-to-one; load_dataset gives
random access to a generated dataset directory.
"""

from .client import RemoteEnv, RemoteError, gym_id, register_gym_envs
from .data import Dataset, load_dataset

__all__ = ["RemoteEnv", "RemoteError", "Dataset", "load_dataset",
           "gym_id", "register_gym_envs"]
__version__ = "0.1.0"
