import math

import numpy as np
import pytest

from seamstitch.synth import SceneSpec


def rotation_about(angle_deg: float, cx: float, cy: float,
                   dx: float = 0.0, dy: float = 0.0) -> np.ndarray:
    """Rotation about (cx, cy) followed by a translation."""
    rad = math.radians(angle_deg)
    c, s = math.cos(rad), math.sin(rad)
    return np.array([
        [c, -s, dx + cx - c * cx + s * cy],
        [s, c, dy + cy - s * cx - c * cy],
        [0.0, 0.0, 1.0],
    ])


def translation(dx: float, dy: float) -> np.ndarray:
    t = np.eye(3)
    t[0, 2] = dx
    t[1, 2] = dy
    return t


@pytest.fixture
def identity_scene() -> SceneSpec:
    return SceneSpec(base_dims=(320, 240), texture_seed=7)


@pytest.fixture
def translation_scene() -> SceneSpec:
    return SceneSpec(base_dims=(320, 240), affine=translation(40.0, -6.0), texture_seed=11)
