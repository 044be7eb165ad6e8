import os
import shutil
from typing import Any, Dict

import numpy as np

from wavemask.config import ExperimentConfig
from wavemask.context import ExperimentContext


def get_res_demo_dir() -> str:
    return os.path.normpath(os.path.join(os.path.dirname(__file__), '..', 'wavemask', 'res', 'demo'))


def get_test_output_dir(name: str) -> str:
    return os.path.normpath(os.path.join(os.path.dirname(__file__), '..', 'test-out', name))


def remove_dir(path: str):
    if os.path.isdir(path):
        shutil.rmtree(path, ignore_errors=True)


def new_test_config(kind: str, output_dir: str, **fields: Any) -> ExperimentConfig:
    config: Dict[str, Any] = dict(kind=kind, seed=12345, output_dir=output_dir)
    config.update(fields)
    return ExperimentConfig.from_dict(config)


def new_test_context(kind: str, output_dir: str, max_workers: int = 1, **fields: Any) -> ExperimentContext:
    return ExperimentContext(new_test_config(kind, output_dir, **fields), max_workers=max_workers)


def new_rng(seed: int = 42) -> np.random.Generator:
    return np.random.default_rng(seed)


def direct_circular_convolution(scene: np.ndarray, psf: np.ndarray) -> np.ndarray:
    """Spatial-domain circular convolution with a centered PSF, O(N^4)."""
    height, width = scene.shape
    cy, cx = height // 2, width // 2
    out = np.zeros_like(scene, dtype=np.float64)
    for y in range(height):
        for x in range(width):
            total = 0.0
            for v in range(height):
                for u in range(width):
                    total += scene[v, u] * psf[(y - v + cy) % height, (x - u + cx) % width]
            out[y, x] = total
    return out
