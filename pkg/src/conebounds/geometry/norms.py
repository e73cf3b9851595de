"""Regularizers, their norm-ball projections and proximal operators."""

import numpy as np

from ..exceptions import DomainError, NumericalError, UnsupportedModelError


def _check_radius(radius):
    if not np.isscalar(radius) or not np.isfinite(radius) or radius < 0:
        raise DomainError(f"radius must be a finite non-negative scalar, got {radius!r}")


def project_simplex(v, radius=1.0):
    """Project a non-negative vector onto ``{u >= 0 : sum(u) <= radius}``.

    Sort-based exact threshold. Ties share the threshold, so the result does
    not depend on the order ties come out of the sort.
    """
    v = np.asarray(v, dtype=float)
    _check_radius(radius)
    if v.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u * ind > cssv)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_l1_ball(v, radius=1.0):
    """Euclidean projection onto ``{u : ||u||_1 <= radius}``."""
    v = np.asarray(v, dtype=float)
    _check_radius(radius)
    if np.abs(v).sum() <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(np.abs(v), radius)


def project_l12_ball(v, q, b, radius=1.0):
    """Projection onto the l1,2 ball over ``q`` contiguous blocks of size ``b``."""
    v = np.asarray(v, dtype=float)
    _check_radius(radius)
    if v.ndim != 1 or v.size != q * b:
        raise DomainError(f"len(v) = {v.size} does not match q*b = {q * b}")
    blocks = v.reshape(q, b)
    norms = np.linalg.norm(blocks, axis=1)
    if norms.sum() <= radius:
        return v.copy()
    target = project_simplex(norms, radius)
    scale = np.divide(target, norms, out=np.zeros_like(norms), where=norms > 0)
    return (blocks * scale[:, None]).ravel()


def _svd(mat):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "SVD did not converge",
            {"shape": mat.shape, "finite": bool(np.all(np.isfinite(mat))), "reason": str(exc)},
        ) from exc


def project_nuclear_ball(V, radius=1.0):
    """Projection of a square matrix onto the nuclear-norm ball."""
    V = np.asarray(V, dtype=float)
    _check_radius(radius)
    u, s, vt = _svd(V)
    if s.sum() <= radius:
        return V.copy()
    return (u * project_simplex(s, radius)) @ vt


def soft_threshold(v, lam):
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def block_soft_threshold(v, q, b, lam):
    blocks = np.asarray(v, dtype=float).reshape(q, b)
    norms = np.linalg.norm(blocks, axis=1)
    shrink = np.maximum(1.0 - np.divide(lam, norms, out=np.full_like(norms, np.inf), where=norms > 0), 0.0)
    return (blocks * shrink[:, None]).ravel()


def singular_value_threshold(V, lam):
    u, s, vt = _svd(np.asarray(V, dtype=float))
    return (u * np.maximum(s - lam, 0.0)) @ vt


def regularizer(model, x):
    """Value of the model's structure-inducing function at ``x``."""
    x = model.check_vector(x)
    if model.kind == "sparse":
        return float(np.abs(x).sum())
    if model.kind == "block_sparse":
        return float(np.linalg.norm(x.reshape(model.q, model.b), axis=1).sum())
    if model.kind == "low_rank":
        return float(np.linalg.svd(x.reshape(model.d, model.d), compute_uv=False).sum())
    return 0.0 if np.all(x >= 0) else float("inf")


def project_ball(model, v, radius):
    """Projection onto the sublevel set ``{x : f(x) <= radius}``.

    For ``non_negative`` the sublevel set of the indicator is the orthant for
    any ``radius >= 0``.
    """
    v = model.check_vector(v)
    if model.kind == "sparse":
        return project_l1_ball(v, radius)
    if model.kind == "block_sparse":
        return project_l12_ball(v, model.q, model.b, radius)
    if model.kind == "low_rank":
        d = model.d
        return project_nuclear_ball(v.reshape(d, d), radius).ravel()
    _check_radius(radius)
    return np.maximum(v, 0.0)


def prox(model, v, lam):
    """Proximal operator of ``lam * f``."""
    v = model.check_vector(v)
    if model.kind == "sparse":
        return soft_threshold(v, lam)
    if model.kind == "block_sparse":
        return block_soft_threshold(v, model.q, model.b, lam)
    if model.kind == "low_rank":
        d = model.d
        return singular_value_threshold(v.reshape(d, d), lam).ravel()
    if model.kind == "non_negative":
        return np.maximum(v, 0.0)
    raise UnsupportedModelError(model.kind)


def dual_norm(model, v):
    """Dual norm of ``v``; ``||A^T y||_dual <= lam`` iff zero solves the penalized problem."""
    v = model.check_vector(v)
    if model.kind == "sparse":
        return float(np.abs(v).max())
    if model.kind == "block_sparse":
        return float(np.linalg.norm(v.reshape(model.q, model.b), axis=1).max())
    if model.kind == "low_rank":
        return float(np.linalg.norm(v.reshape(model.d, model.d), 2))
    raise UnsupportedModelError(f"{model.kind} is not a norm")
