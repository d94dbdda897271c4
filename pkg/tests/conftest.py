import math

import numpy as np
import pytest

from agvsim.scenegraph import Obstacle, Scene


def random_scene(rng, n_cyl=6, n_box=5, half=12.0, name="random"):
    """Assemble a random mixed scene (plus the synthesized boundary walls)."""
    obstacles = []
    oid = 1
    for _ in range(n_cyl):
        obstacles.append(Obstacle(
            id=oid, kind="cylinder",
            center=(float(rng.uniform(-half, half)), float(rng.uniform(-half, half))),
            radius=float(rng.uniform(0.2, 1.5)), height=float(rng.uniform(0.5, 3.0))))
        oid += 1
    for _ in range(n_box):
        obstacles.append(Obstacle(
            id=oid, kind="box",
            center=(float(rng.uniform(-half, half)), float(rng.uniform(-half, half))),
            half_extents=(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.2, 2.0))),
            yaw=float(rng.uniform(0.0, math.tau)), height=float(rng.uniform(0.5, 3.0))))
        oid += 1
    return Scene.assemble(name, (-half - 2, half + 2, -half - 2, half + 2), obstacles)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
