"""Seeded random instances for verification sweeps.

Every generator takes ``(seed, index)`` so that instance ``i`` is the same
whether it is produced alone, in a batch, or in a worker process.
"""

import numpy as np

from .hopflax import MaxAffineFunction
from .measures import DiscreteMeasure

DEFAULT_SEED = 0xC0FFEE


def instance_rng(seed, index, stream=0):
    return np.random.default_rng([int(seed), int(stream), int(index)])


def random_max_affine(rng, dimension=1, max_pieces=4, slope_cap=None):
    """Max-affine function with 1..max_pieces pieces.

    Slopes have a log-uniform scale in [0.1, 10]; with ``slope_cap`` they are
    rescaled so the largest slope norm is a uniform fraction of the cap.
    """
    k = int(rng.integers(1, max_pieces + 1))
    A = rng.normal(size=(k, dimension)) * 10 ** rng.uniform(-1, 1)
    b = rng.normal(size=k)
    if slope_cap is not None:
        top = float(np.linalg.norm(A, axis=1).max())
        if top > 0:
            A *= slope_cap * rng.uniform(0.05, 1.0) / top
    return MaxAffineFunction(A, b)


def random_reweighting(rng, mu):
    """Measure on the support of ``mu`` with Dirichlet weights (sometimes a Dirac)."""
    m = len(mu.weights)
    if m > 1 and rng.random() < 0.1:
        return DiscreteMeasure(mu.points[[int(rng.integers(m))]])
    w = rng.dirichlet(np.full(m, rng.choice([0.2, 1.0, 5.0])))
    return DiscreteMeasure(mu.points, w)


def random_discrete_measure(rng, n_atoms, dimension=1, scale=1.0):
    X = rng.normal(scale=scale, size=(n_atoms, dimension))
    return DiscreteMeasure(X, rng.dirichlet(np.ones(n_atoms)))


def function_family(seed, n, dimension=1, slope_cap=None, stream=0):
    return [random_max_affine(instance_rng(seed, i, stream), dimension, slope_cap=slope_cap)
            for i in range(n)]


def measure_family(seed, n, mu, stream=1):
    return [random_reweighting(instance_rng(seed, i, stream), mu) for i in range(n)]
