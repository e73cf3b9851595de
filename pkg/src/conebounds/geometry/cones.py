"""Tangent cones, their polars, and Euclidean projections onto both.

For a norm ``f`` and ``x0 != 0`` the polar of the tangent cone is the closed
conic hull of the subdifferential, ``{tau * u : tau >= 0, u in df(x0)}``.
Every supported norm splits space into an "on-support" part where the
subdifferential is a single point ``E`` (the sign pattern, the active block
directions, or ``U V^T``) and an "off-support" part where it is a unit dual
ball.  For a vector ``v`` this gives

    dist(v, tau * df(x0))^2 = ||v_on||^2 - 2 tau <E, v> + s tau^2
                              + sum_j max(c_j - tau, 0)^2

with ``s = ||E||^2`` and ``c_j`` the off-support magnitudes (absolute
entries, block norms, or singular values of the compressed complement).
The objective is a convex piecewise quadratic in ``tau`` and is minimized
exactly after sorting ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError, UnsupportedModelError
from .models import SignalDescriptor

TANGENT = "tangent"
POLAR = "polar"


def fit_scale(a, s, c):
    """Exact minimizer over ``tau >= 0`` of ``s tau^2 - 2 a tau + sum (c - tau)_+^2``.

    ``a`` has shape ``(N,)``, ``c`` shape ``(N, p)`` with non-negative entries
    and ``s > 0``.  Returns ``tau`` with shape ``(N,)``.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if s <= 0:
        raise DomainError("fit_scale needs a positive on-support weight")
    if c.shape[1] == 0:
        return np.maximum(a / s, 0.0)
    cs = -np.sort(-c, axis=1)
    j = np.arange(1, cs.shape[1] + 1)
    tau_j = (a[:, None] + np.cumsum(cs, axis=1)) / (s + j)
    # c_(j) > tau* exactly when c_(j) > tau_j; the set of such j is a prefix
    count = np.count_nonzero(cs > tau_j, axis=1)
    rows = np.arange(cs.shape[0])
    tau = np.where(count == 0, a / s, tau_j[rows, np.maximum(count - 1, 0)])
    return np.maximum(tau, 0.0)


@dataclass(frozen=True)
class Profile:
    """Per-sample quantities that determine ``dist(v, tau * df(x0))``."""

    on_sq: np.ndarray  # ||v_on||^2
    inner: np.ndarray  # <E, v>
    weight: float  # ||E||^2
    off: np.ndarray  # off-support magnitudes, shape (N, p)

    def dist_sq(self, tau):
        tau = np.asarray(tau, dtype=float)
        excess = np.maximum(self.off - tau.reshape(-1, 1), 0.0)
        return self.on_sq - 2 * tau * self.inner + self.weight * tau**2 + (excess**2).sum(axis=-1)


def _as_batch(v, n):
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = v[None, :] if single else v
    if V.ndim != 2 or V.shape[1] != n:
        raise DomainError(f"expected vectors of length {n}, got shape {v.shape}")
    return V, single


def _low_rank_pieces(anchor, V):
    d = anchor.model.d
    M = V.reshape(-1, d, d)
    comp = anchor.left_perp.T @ M @ anchor.right_perp
    return M, comp


def profile(anchor: SignalDescriptor, v) -> Profile:
    """Decompose vectors against the subdifferential of ``f`` at the anchor."""
    anchor.require_nondegenerate()
    model = anchor.model
    if not model.is_norm:
        raise UnsupportedModelError("profile is defined for norm regularizers only")
    V, _ = _as_batch(v, model.n)
    total = np.einsum("ij,ij->i", V, V)
    inner = V @ anchor.pattern
    if model.kind == "sparse":
        off = np.abs(V[:, ~anchor.support])
    elif model.kind == "block_sparse":
        blocks = V.reshape(V.shape[0], model.q, model.b)
        off = np.linalg.norm(blocks[:, ~anchor.support], axis=2)
    else:
        _, comp = _low_rank_pieces(anchor, V)
        if comp.shape[1] == 0:
            off = np.zeros((V.shape[0], 0))
        else:
            off = np.linalg.svd(comp, compute_uv=False)
    off_sq = (off**2).sum(axis=1)
    return Profile(total - off_sq, inner, float(anchor.complexity), off)


def _polar_from_scale(anchor, V, tau):
    model = anchor.model
    out = np.empty_like(V)
    if model.kind == "sparse":
        s = anchor.support
        out[:, s] = tau[:, None] * anchor.pattern[s]
        out[:, ~s] = np.clip(V[:, ~s], -tau[:, None], tau[:, None])
        return out
    if model.kind == "block_sparse":
        q, b = model.q, model.b
        blocks = V.reshape(-1, q, b)
        pat = anchor.pattern.reshape(q, b)
        res = np.empty_like(blocks)
        s = anchor.support
        res[:, s] = tau[:, None, None] * pat[s]
        off = blocks[:, ~s]
        norms = np.linalg.norm(off, axis=2)
        scale = np.minimum(1.0, np.divide(tau[:, None], norms, out=np.ones_like(norms), where=norms > tau[:, None]))
        res[:, ~s] = off * scale[:, :, None]
        return res.reshape(V.shape)
    d = model.d
    E = anchor.pattern.reshape(d, d)
    _, comp = _low_rank_pieces(anchor, V)
    res = tau[:, None, None] * E
    if comp.shape[1]:
        u, sv, vt = np.linalg.svd(comp, full_matrices=False)
        clipped = (u * np.minimum(sv, tau[:, None])[:, None, :]) @ vt
        res = res + anchor.left_perp @ clipped @ anchor.right_perp.T
    return res.reshape(V.shape)


def project_polar(anchor: SignalDescriptor, v):
    """Closest point of ``cl cone(df(x0))`` (the tangent cone's polar) to ``v``."""
    model = anchor.model
    V, single = _as_batch(v, model.n)
    if model.kind == "non_negative":
        out = np.where(anchor.support, 0.0, np.minimum(V, 0.0))
    else:
        prof = profile(anchor, V)
        tau = fit_scale(prof.inner, prof.weight, prof.off)
        out = _polar_from_scale(anchor, V, tau)
    return out[0] if single else out


def polar_scale(anchor: SignalDescriptor, v):
    """The optimal ``tau`` in the polar projection of ``v``."""
    prof = profile(anchor, v)
    tau = fit_scale(prof.inner, prof.weight, prof.off)
    return tau[0] if np.ndim(v) == 1 else tau


def project_tangent(anchor: SignalDescriptor, v):
    """Projection onto the tangent cone via Moreau: ``v - Proj(v, polar)``."""
    v = np.asarray(v, dtype=float)
    return v - project_polar(anchor, v)


class ConeHandle:
    """A tangent cone ``T_f(x0)`` or its polar, anchored at a signal.

    ``allow_degenerate`` admits ``x0 = 0`` for a norm, in which case the
    tangent cone is the whole space and the polar is ``{0}``.
    """

    def __init__(self, anchor: SignalDescriptor, which: str = TANGENT, allow_degenerate: bool = False):
        if which not in (TANGENT, POLAR):
            raise DomainError(f"which must be {TANGENT!r} or {POLAR!r}")
        self.anchor = anchor
        self.which = which
        self.allow_degenerate = allow_degenerate
        self.degenerate = anchor.model.is_norm and anchor.is_zero
        if self.degenerate and not allow_degenerate:
            anchor.require_nondegenerate()

    @property
    def model(self):
        return self.anchor.model

    @property
    def n(self) -> int:
        return self.anchor.model.n

    def polar(self) -> "ConeHandle":
        return ConeHandle(self.anchor, POLAR if self.which == TANGENT else TANGENT, self.allow_degenerate)

    def project(self, v):
        v = np.asarray(v, dtype=float)
        if self.degenerate:
            return v.copy() if self.which == TANGENT else np.zeros_like(v)
        if self.which == TANGENT:
            return project_tangent(self.anchor, v)
        return project_polar(self.anchor, v)

    def __repr__(self):
        return f"ConeHandle({self.which}, kind={self.model.kind}, n={self.n}, complexity={self.anchor.complexity})"


def tangent_cone(model, x0, allow_degenerate=False) -> ConeHandle:
    return ConeHandle(SignalDescriptor(model, np.asarray(x0, dtype=float)), TANGENT, allow_degenerate)


def polar_cone(model, x0) -> ConeHandle:
    return ConeHandle(SignalDescriptor(model, np.asarray(x0, dtype=float)), POLAR)


class FullSpace:
    """All of ``R^n``; used for unconstrained reference computations."""

    def __init__(self, n: int):
        self.n = int(n)

    def project(self, v):
        return np.array(v, dtype=float)


class Ray:
    """The half-line ``{c * direction : c >= 0}``."""

    def __init__(self, direction):
        direction = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise DomainError("ray direction must be nonzero")
        self.direction = direction / norm
        self.n = direction.size

    def project(self, v):
        v = np.asarray(v, dtype=float)
        coef = np.maximum(v @ self.direction, 0.0)
        return np.multiply.outer(coef, self.direction)
