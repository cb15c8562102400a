"""Random cells of each mesh family for property tests."""

import numpy as np

from wgiface.mesh import Cell

SHAPES = {
    "uniform_triangle": np.array([[0, 0], [1, 0], [1, 1]], float),
    "uniform_square": np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float),
    "zigzag_hexagon": np.array([[0, 0], [6, 0], [6, 2], [6, 4], [3, 4], [3, 2], [0, 2]], float) / 6.0,
}


def random_cell(family, rng, jitter=0.04):
    """Scaled, shifted and slightly perturbed copy of the family's cell with random edge signs."""
    xy = SHAPES[family].copy()
    xy += rng.uniform(-jitter, jitter, xy.shape)
    xy = xy * rng.uniform(0.3, 1.5) + rng.uniform(-2, 2, 2)
    signs = rng.choice([-1, 1], len(xy))
    return Cell(xy, region=1, index=0, edge_signs=signs)
