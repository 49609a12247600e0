"""Python front end for the hyforest C++ core.

Configs are plain dicts with the same keys as the JSON config files.
"""

import json

import numpy as np

from . import _hyforest
from ._hyforest import (
    HyforestError,
    IoError,
    Model,
    NumericError,
    SceneBundle,
    ValidationError,
    height_of_ambiguity,
    load_model,
    mae,
    r2,
    read_bundle,
    rmse,
    select_acquisitions,
    vertical_wavenumber,
    volume_coherence,
)

__all__ = [
    "HyforestError",
    "IoError",
    "Model",
    "NumericError",
    "SceneBundle",
    "ValidationError",
    "generate_ambiguity_benchmark",
    "generate_scene",
    "height_of_ambiguity",
    "invert_profile",
    "invert_scene",
    "invert_scene_oracle",
    "load_model",
    "mae",
    "r2",
    "read_bundle",
    "rmse",
    "select_acquisitions",
    "train",
    "valid_heights",
    "vertical_wavenumber",
    "volume_coherence",
]


def _dump(cfg):
    return "" if cfg is None else json.dumps(cfg)


def generate_scene(spec=None, threads=1):
    return _hyforest.generate_scene(_dump(spec), threads)


def generate_ambiguity_benchmark(spec=None, n_pairs=0):
    """Returns (bundle, pairs)."""
    return _hyforest.generate_ambiguity_benchmark(_dump(spec), n_pairs)


def train(scenes, config=None):
    if isinstance(scenes, SceneBundle):
        scenes = [scenes]
    return _hyforest.train(list(scenes), _dump(config))


def invert_profile(coeffs, kz, coh, inversion=None):
    return _hyforest.invert_profile(list(coeffs), kz, coh, _dump(inversion))


def invert_scene(model, scene, acq=0, inversion=None, threads=1):
    return _hyforest.invert_scene(model, scene, acq, _dump(inversion), threads)


def invert_scene_oracle(scene, acq=0, inversion=None, threads=1):
    return _hyforest.invert_scene_oracle(scene, acq, _dump(inversion), threads)


def valid_heights(result):
    """h_v as a float array with nodata replaced by NaN."""
    h = result.band("h_v").astype(np.float64)
    h[result.band("valid") == 0] = np.nan
    return h
