"""Accelerated proximal gradient for ``1/2 ||b - A x||^2 + h(x)``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def spectral_norm_sq(A, iters: int = 100, seed: int = 0) -> float:
    """``||A||_2^2`` by power iteration on ``A^T A`` (a slight underestimate)."""
    A = np.asarray(A, dtype=float)
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est


@dataclass
class FistaInfo:
    iterations: int = 0
    converged: bool = False
    grad_map_norm: float = float("inf")
    lipschitz: float = 0.0
    restarts: int = 0
    objective: list = field(default_factory=list)


def fista(A, b, prox, h, x_init=None, L=None, tol=1e-8, max_iter=20000, track=False):
    """Monotone FISTA with backtracking and function-value restart.

    ``prox(v, step)`` is the proximal map of ``step * h`` and ``h(x)`` its
    value (0 on the feasible set for constrained problems).  Stops when the
    gradient-mapping norm ``L ||y - prox(y - grad/L)||`` drops below ``tol``.
    Every accepted iterate has objective no larger than the previous one.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    if L is None:
        L = spectral_norm_sq(A)
    L = max(float(L), 1e-12)
    x = np.zeros(n) if x_init is None else np.array(x_init, dtype=float)
    Ax = A @ x
    fx = 0.5 * float(np.sum((b - Ax) ** 2)) + h(x)
    y, Ay, t = x, Ax, 1.0
    info = FistaInfo(lipschitz=L)
    if track:
        info.objective.append(fx)
    for it in range(1, max_iter + 1):
        ry = Ay - b
        grad = A.T @ ry
        smooth_y = 0.5 * float(ry @ ry)
        while True:
            x_new = prox(y - grad / L, 1.0 / L)
            step = x_new - y
            Ax_new = A @ x_new
            r_new = Ax_new - b
            smooth_new = 0.5 * float(r_new @ r_new)
            if smooth_new <= smooth_y + float(grad @ step) + 0.5 * L * float(step @ step) + 1e-12 * max(1.0, smooth_y):
                break
            L *= 2.0
        info.grad_map_norm = L * float(np.linalg.norm(step))
        f_new = smooth_new + h(x_new)
        if f_new > fx + 1e-12 * max(1.0, abs(fx)) and y is not x:
            # momentum overshot: restart from the last accepted iterate
            y, Ay, t = x, Ax, 1.0
            info.restarts += 1
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        y = x_new + beta * (x_new - x)
        Ay = Ax_new + beta * (Ax_new - Ax)
        x, Ax, fx, t = x_new, Ax_new, f_new, t_new
        if track:
            info.objective.append(fx)
        info.iterations = it
        if info.grad_map_norm <= tol:
            info.converged = True
            break
    info.lipschitz = L
    return x, info
