"""Estimators for ``y = A x0 + z``: constrained Lasso, SOCP, penalized Lasso
and least squares, plus the penalty rule for the penalized Lasso."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import sampling
from .exceptions import DomainError, InfeasibleError, UnsupportedModelError
from .geometry.cones import fit_scale, profile
from .geometry.models import SignalDescriptor, StructureModel
from .geometry.norms import dual_norm, project_ball, prox, regularizer
from .geometry.width import WidthEstimate
from .optim import fista, spectral_norm_sq

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20000
METHODS = ("lasso_constrained", "socp", "lasso_penalized", "least_squares")


@dataclass
class ProblemInstance:
    """Observations ``y = A x0 + z``; ``y`` is always derived, never stored independently."""

    A: np.ndarray
    x0: np.ndarray
    z: np.ndarray
    model: StructureModel
    seed: Optional[int] = None
    sigma: Optional[float] = None
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] < 1 or self.A.shape[1] < 1:
            raise DomainError(f"A must be a non-empty matrix, got shape {self.A.shape}")
        m, n = self.A.shape
        if self.x0.shape != (n,) or self.z.shape != (m,):
            raise DomainError(
                f"shape mismatch: A {self.A.shape}, x0 {self.x0.shape}, z {self.z.shape}"
            )
        if self.model.n != n:
            raise DomainError(f"model dimension {self.model.n} does not match A's {n} columns")
        self.y = self.A @ self.x0 + self.z

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def z_norm(self) -> float:
        return float(np.linalg.norm(self.z))

    def anchor(self) -> SignalDescriptor:
        return SignalDescriptor(self.model, self.x0)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "model": self.model.to_dict(),
            "seed": self.seed,
            "sigma": self.sigma,
            "A": self.A.tolist(),
            "x0": self.x0.tolist(),
            "z": self.z.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        """Build an instance from explicit arrays or seeded generator specs.

        ``A`` may be ``{"generator": "gaussian", "seed": s}`` (N(0, 1/m)
        entries), ``x0`` may be ``{"generator": "structured", "complexity": k,
        "seed": s}`` and ``z`` may be ``{"generator": "gaussian", "sigma": v,
        "seed": s}``.  Generator seeds default to the top-level ``seed``.
        """
        try:
            model = StructureModel.from_dict(data["model"])
            m = int(data["m"])
            n = int(data.get("n", model.n))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed problem instance: {exc}") from exc
        if n != model.n:
            raise DomainError(f"n = {n} does not match model dimension {model.n}")
        seed = data.get("seed")
        sigma = data.get("sigma")

        def spec_rng(spec, tag):
            s = spec.get("seed", seed)
            if s is None:
                raise DomainError("generator spec needs a seed (inline or top-level)")
            return sampling.stream(s, tag)

        A = data.get("A")
        if isinstance(A, dict):
            if A.get("generator") != "gaussian":
                raise DomainError(f"unknown matrix generator {A.get('generator')!r}")
            A = sampling.gaussian_matrix(m, n, spec_rng(A, sampling.MATRIX))
        x0 = data.get("x0")
        if isinstance(x0, dict):
            if x0.get("generator") != "structured":
                raise DomainError(f"unknown signal generator {x0.get('generator')!r}")
            x0 = sampling.random_signal(model, int(x0["complexity"]), spec_rng(x0, sampling.SIGNAL))
        z = data.get("z")
        if isinstance(z, dict):
            if z.get("generator") != "gaussian":
                raise DomainError(f"unknown noise generator {z.get('generator')!r}")
            z_sigma = float(z.get("sigma", sigma if sigma is not None else 0.0))
            sigma = z_sigma if sigma is None else sigma
            z = sampling.gaussian_noise(m, z_sigma, spec_rng(z, sampling.NOISE))
        if A is None or x0 is None or z is None:
            raise DomainError("problem instance needs A, x0 and z")
        A = np.asarray(A, dtype=float)
        if A.shape != (m, n):
            raise DomainError(f"A has shape {A.shape}, expected ({m}, {n})")
        return cls(A, x0, z, model, seed=seed, sigma=sigma)


@dataclass
class SolverResult:
    x_star: np.ndarray
    residual_norm: float
    f_value: float
    error_norm: float
    iterations: int
    converged: bool
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "x_star": self.x_star.tolist(),
            "residual_norm": self.residual_norm,
            "f_value": self.f_value,
            "error_norm": self.error_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


def _result(inst, x, iterations, converged, method, **diagnostics):
    return SolverResult(
        x_star=x,
        residual_norm=float(np.linalg.norm(inst.y - inst.A @ x)),
        f_value=regularizer(inst.model, x),
        error_norm=float(np.linalg.norm(x - inst.x0)),
        iterations=int(iterations),
        converged=bool(converged),
        method=method,
        diagnostics=diagnostics,
    )


def _lipschitz(inst):
    return spectral_norm_sq(inst.A)


def solve_constrained_lasso(inst: ProblemInstance, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, x_init=None):
    """``argmin 1/2 ||y - A x||^2`` subject to ``f(x) <= f(x0)``.

    Accelerated projected gradient onto the sublevel set.  Convergence is
    declared when the gradient-mapping norm is at most ``tol * (1 + ||y||)``.
    """
    radius = regularizer(inst.model, inst.x0)
    if not np.isfinite(radius):
        raise DomainError("x0 is infeasible for its own regularizer")
    x, info = fista(
        inst.A, inst.y,
        prox=lambda v, _step: project_ball(inst.model, v, radius),
        h=lambda v: 0.0,
        x_init=x_init,
        L=_lipschitz(inst),
        tol=tol * (1.0 + float(np.linalg.norm(inst.y))),
        max_iter=max_iter,
    )
    return _result(
        inst, x, info.iterations, info.converged, "lasso_constrained",
        radius=radius, grad_map_norm=info.grad_map_norm, restarts=info.restarts,
    )


def solve_penalized_lasso(inst: ProblemInstance, lam, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, x_init=None, L=None):
    """``argmin lam f(x) + 1/2 ||y - A x||^2`` by accelerated proximal gradient."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    model = inst.model
    h = (lambda v: lam * regularizer(model, v)) if model.is_norm else (lambda v: 0.0)
    x, info = fista(
        inst.A, inst.y,
        prox=lambda v, step: prox(model, v, lam * step),
        h=h,
        x_init=x_init,
        L=_lipschitz(inst) if L is None else L,
        tol=tol * (1.0 + float(np.linalg.norm(inst.y))),
        max_iter=max_iter,
    )
    return _result(
        inst, x, info.iterations, info.converged, "lasso_penalized",
        lam=float(lam), grad_map_norm=info.grad_map_norm, restarts=info.restarts,
    )


def solve_socp(inst: ProblemInstance, delta=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, lam_floor=1e-10):
    """``argmin f(x)`` subject to ``||y - A x|| <= delta`` (default ``delta = ||z||``).

    Walks down the penalized-Lasso path from ``lam = ||A^T y||_dual`` (where
    the solution is zero) by factors of 4 until the residual drops to
    ``delta``, then refines ``lam`` by Illinois regula falsi in ``log lam``
    on the monotone residual curve.  The returned point is the feasible end
    of the final bracket.
    """
    model = inst.model
    if not model.is_norm:
        raise UnsupportedModelError("SOCP needs a norm regularizer")
    delta = inst.z_norm if delta is None else float(delta)
    if delta < 0:
        raise DomainError("delta must be non-negative")
    y_norm = float(np.linalg.norm(inst.y))
    if delta >= y_norm:
        return _result(inst, np.zeros(inst.n), 0, True, "socp", delta=delta, lam=None, note="zero is feasible")

    L = _lipschitz(inst)
    sub_tol = tol * 1e-2
    r_tol = max(tol * (1.0 + y_norm), 1e-12 * delta)
    total_iters = 0

    def solve_at(lam, warm):
        nonlocal total_iters
        res = solve_penalized_lasso(inst, lam, tol=sub_tol, max_iter=max_iter, x_init=warm, L=L)
        total_iters += res.iterations
        return res

    lam_hi = dual_norm(model, inst.A.T @ inst.y)
    r_hi, x_hi = y_norm, np.zeros(inst.n)
    lam, warm = lam_hi, x_hi
    while True:
        lam /= 4.0
        if lam < lam_floor:
            raise InfeasibleError(
                f"residual stays above delta={delta:.6g} down to lambda={lam_floor:g}; "
                "delta is below the smallest achievable residual"
            )
        res = solve_at(lam, warm)
        warm = res.x_star
        if res.residual_norm <= delta:
            lam_lo, lo = lam, res
            break
        lam_hi, r_hi, x_hi = lam, res.residual_norm, res.x_star

    s_lo, s_hi = math.log(lam_lo), math.log(lam_hi)
    g_lo, g_hi = lo.residual_norm - delta, r_hi - delta
    side = 0
    steps = 0
    while abs(g_lo) > r_tol and s_hi - s_lo > 1e-13:
        steps += 1
        s = (s_lo * g_hi - s_hi * g_lo) / (g_hi - g_lo)
        if not (s_lo < s < s_hi):
            s = 0.5 * (s_lo + s_hi)
        res = solve_at(math.exp(s), lo.x_star)
        g = res.residual_norm - delta
        if g <= 0:
            s_lo, g_lo, lo = s, g, res
            if side == -1:
                g_hi *= 0.5
            side = -1
        else:
            s_hi, g_hi = s, g
            if side == 1:
                g_lo *= 0.5
            side = 1
        if steps > 200:
            break
    x = lo.x_star
    return _result(
        inst, x, total_iters, lo.converged and abs(lo.residual_norm - delta) <= r_tol, "socp",
        delta=delta, lam=math.exp(s_lo), refinement_steps=steps,
        log_lambda_bracket=s_hi - s_lo, residual_gap=lo.residual_norm - delta,
    )


def solve_least_squares(inst: ProblemInstance):
    """``argmin ||y - A x||`` through a QR factorization (needs ``m >= n``, full column rank)."""
    A = inst.A
    m, n = A.shape
    if m < n:
        raise DomainError(f"least squares needs m >= n, got m={m}, n={n}")
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > diag.max() * max(m, n) * np.finfo(float).eps))
    if rank < n:
        raise DomainError(f"A is rank deficient: numerical rank {rank} < n = {n}")
    x = scipy.linalg.solve_triangular(R, Q.T @ inst.y)
    # ||x - x0||^2 = z^T A (A^T A)^{-2} A^T z, evaluated via the normal equations
    w = scipy.linalg.solve(A.T @ A, A.T @ inst.z, assume_a="pos")
    err_sq = float(np.sum((x - inst.x0) ** 2))
    identity_sq = float(w @ w)
    rel = abs(err_sq - identity_sq) / max(identity_sq, 1e-300) if identity_sq > 0 else err_sq
    if rel > 1e-8:
        warnings.warn(f"least-squares error identity off by {rel:.3g} (relative); A may be ill-conditioned")
    return _result(inst, x, 1, True, "least_squares", identity_error_sq=identity_sq, identity_rel_err=rel)


def compute_tau_star(anchor: SignalDescriptor, samples=2000, seed=0) -> float:
    """Minimizer over ``tau >= 0`` of the Monte Carlo average of ``dist(g, tau df(x0))^2``.

    The sample average is a convex piecewise quadratic in ``tau``; pooling
    every sample's breakpoints gives its exact minimizer.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    anchor.require_nondegenerate()
    G = np.random.default_rng(seed).standard_normal((int(samples), anchor.model.n))
    prof = profile(anchor, G)
    tau = fit_scale(np.array([prof.inner.sum()]), prof.weight * samples, prof.off.reshape(1, -1))
    return float(tau[0])


def expected_dist_sq(anchor: SignalDescriptor, taus, samples=2000, seed=0) -> np.ndarray:
    """Monte Carlo ``E dist(g, tau df(x0))^2`` on a grid of ``tau`` values (same draws as ``compute_tau_star``)."""
    G = np.random.default_rng(seed).standard_normal((int(samples), anchor.model.n))
    prof = profile(anchor, G)
    return np.array([prof.dist_sq(t).mean() for t in np.atleast_1d(taus)])


def lambda_best(inst: ProblemInstance, width, tau_star: float, use_closed_form=False) -> float:
    """Penalty ``(||z|| / sqrt(m)) tau* sqrt(1 - width^2 / m)``."""
    if isinstance(width, WidthEstimate):
        w = width.closed_form_bound if use_closed_form or width.mc_estimate is None else width.mc_estimate
    else:
        w = float(width)
    m = inst.m
    if w * w >= m:
        raise DomainError(f"width^2 = {w * w:.6g} >= m = {m}: below the phase transition")
    z_norm = inst.z_norm
    if z_norm <= 0:
        raise DomainError("lambda rule needs a nonzero noise norm")
    return z_norm / math.sqrt(m) * tau_star * math.sqrt(1.0 - w * w / m)


def solve(inst: ProblemInstance, method: str, **kwargs) -> SolverResult:
    aliases = {"lasso": "lasso_constrained", "penalized": "lasso_penalized", "ls": "least_squares"}
    method = aliases.get(method, method)
    if method == "lasso_constrained":
        return solve_constrained_lasso(inst, **kwargs)
    if method == "socp":
        return solve_socp(inst, **kwargs)
    if method == "lasso_penalized":
        return solve_penalized_lasso(inst, **kwargs)
    if method == "least_squares":
        return solve_least_squares(inst)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
