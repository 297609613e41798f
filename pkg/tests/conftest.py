import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_ball_vector(rng, radius=None):
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    if radius is None:
        radius = rng.random() ** (1.0 / 3.0)
    return radius * direction
