"""Restricted minimum singular values and projections onto cone images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError
from ..optim import fista, spectral_norm_sq


@dataclass
class RestrictedSingularInfo:
    value: float
    iterations: int
    converged: bool
    restarts: int
    per_restart: np.ndarray


def restricted_min_singular(A, cone, restarts=50, seed=0, max_iter=500, tol=1e-10, full_output=False):
    """Heuristic ``min ||A v||`` over unit vectors ``v`` in ``cone``.

    Projected gradient on ``||A v||^2`` with renormalization, run from
    ``restarts`` random starts at once; the best value found is returned.
    The problem is nonconvex, so this is an upper estimate of the true
    restricted minimum singular value.
    """
    A = np.asarray(A, dtype=float)
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    if A.shape[1] != cone.n:
        raise DomainError(f"A has {A.shape[1]} columns but the cone lives in R^{cone.n}")
    rng = np.random.default_rng(seed)
    L = spectral_norm_sq(A)
    if L == 0.0:
        info = RestrictedSingularInfo(0.0, 0, True, restarts, np.zeros(restarts))
        return (0.0, info) if full_output else 0.0
    step = 1.0 / L
    V = _unit_rows(cone.project(rng.standard_normal((restarts, cone.n))), rng, cone)
    vals = np.linalg.norm(V @ A.T, axis=1)
    best = vals.copy()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        W = cone.project(V - step * (V @ A.T) @ A)
        norms = np.linalg.norm(W, axis=1)
        ok = norms > 1e-14
        V = np.where(ok[:, None], W / np.where(ok, norms, 1.0)[:, None], V)
        new = np.linalg.norm(V @ A.T, axis=1)
        change = np.abs(vals - new).max()
        vals = new
        best = np.minimum(best, vals)
        if change <= tol * max(1.0, best.min()):
            converged = True
            break
    value = float(best.min())
    if full_output:
        return value, RestrictedSingularInfo(value, it, converged, restarts, best)
    return value


def _unit_rows(W, rng, cone, attempts=20):
    norms = np.linalg.norm(W, axis=1)
    for _ in range(attempts):
        bad = norms <= 1e-14
        if not bad.any():
            break
        W[bad] = cone.project(rng.standard_normal((int(bad.sum()), cone.n)))
        norms = np.linalg.norm(W, axis=1)
    return W / norms[:, None]


@dataclass
class ConeImageProjection:
    point: np.ndarray
    preimage: np.ndarray
    iterations: int
    converged: bool
    grad_map_norm: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.point))


def project_cone_image(z, A, cone, tol=1e-10, max_iter=20000, full_output=False):
    """Projection of ``z`` onto the cone ``{A v : v in cone}``.

    Solves ``min_{w in cone} ||z - A w||`` by accelerated projected gradient
    and returns ``A w*``.
    """
    z = np.asarray(z, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.shape != (z.size, cone.n):
        raise DomainError(f"A has shape {A.shape}, expected ({z.size}, {cone.n})")
    scale = max(float(np.linalg.norm(A.T @ z)), 1e-300)
    w, info = fista(
        A, z,
        prox=lambda v, _step: cone.project(v),
        h=lambda v: 0.0,
        tol=tol * scale,
        max_iter=max_iter,
    )
    res = ConeImageProjection(A @ w, w, info.iterations, info.converged, info.grad_map_norm)
    return res if full_output else res.point
