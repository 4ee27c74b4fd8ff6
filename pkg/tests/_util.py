"""Shared helpers for the test modules."""

import numpy as np

from nonlocal_distill.boxes import extremal_boxes, mix


def random_box(rng: np.random.Generator, sparse: bool = False):
    """Random no-signalling box as a Dirichlet mixture of the 24 vertices."""
    boxes = extremal_boxes()
    w = rng.dirichlet(np.full(len(boxes), 0.3 if sparse else 1.0))
    return mix(boxes, w)
