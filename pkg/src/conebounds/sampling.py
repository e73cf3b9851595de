"""Seeded random draws.

Every stream is keyed by a tuple of integers (base seed, m, trial, tag), so
a draw never depends on what else was drawn before it or in which order
cells of an experiment run.
"""

import numpy as np

from .exceptions import DomainError
from .geometry.models import StructureModel, max_complexity

# stream tags
MATRIX = 0
SIGNAL = 1
NOISE = 2
WIDTH = 3
TAU = 4
RESTARTS = 5
CORRELATION = 6


def stream(*keys) -> np.random.Generator:
    keys = [int(k) for k in keys]
    if any(k < 0 for k in keys):
        raise DomainError(f"seed keys must be non-negative, got {keys}")
    return np.random.default_rng(np.random.SeedSequence(keys))


def gaussian_matrix(m, n, rng) -> np.ndarray:
    """``m x n`` matrix with independent N(0, 1/m) entries."""
    return rng.standard_normal((m, n)) / np.sqrt(m)


def gaussian_noise(m, sigma, rng) -> np.ndarray:
    return sigma * rng.standard_normal(m)


def random_signal(model: StructureModel, complexity: int, rng) -> np.ndarray:
    """Unit-norm signal with the given sparsity, block sparsity, or rank.

    The support (blocks, or rank factors) is chosen uniformly and nonzero
    values are standard normal before normalization; for ``non_negative``
    the nonzeros are absolute values of standard normals.
    """
    k = int(complexity)
    if k < 1 or k > max_complexity(model):
        raise DomainError(f"complexity {complexity} out of range for {model.kind} (max {max_complexity(model)})")
    x = np.zeros(model.n)
    if model.kind in ("sparse", "non_negative"):
        support = np.sort(rng.choice(model.n, size=k, replace=False))
        vals = rng.standard_normal(k)
        x[support] = np.abs(vals) if model.kind == "non_negative" else vals
    elif model.kind == "block_sparse":
        blocks = np.sort(rng.choice(model.q, size=k, replace=False))
        x = x.reshape(model.q, model.b)
        x[blocks] = rng.standard_normal((k, model.b))
        x = x.ravel()
    else:
        d = model.d
        x = (rng.standard_normal((d, k)) @ rng.standard_normal((k, d))).ravel()
    return x / np.linalg.norm(x)
