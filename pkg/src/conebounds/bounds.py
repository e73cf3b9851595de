"""Closed-form error bounds, comparison formulas and checks of the scalar
inequalities behind them.

``width`` below always means the Gaussian width of the tangent cone
intersected with the unit ball, ``t`` the deviation parameter and
``z_norm`` the noise norm.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import sampling
from .exceptions import DomainError
from .geometry.restricted import project_cone_image, restricted_min_singular
from .geometry.width import gamma_d


def _check_m(m):
    if int(m) != m or m < 2:
        raise DomainError(f"m must be an integer >= 2, got {m!r}")


def _check_t(t):
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t!r}")


def regime_margin(m, width, t) -> float:
    """``gamma_m - width - t``; the main bounds need this to be positive."""
    return gamma_d(m) - width - t


@dataclass(frozen=True)
class BoundParams:
    m: int
    width: float
    t: float
    z_norm: float = 1.0

    def __post_init__(self):
        _check_m(self.m)
        _check_t(self.t)
        if self.width < 0 or self.z_norm < 0:
            raise DomainError("width and z_norm must be non-negative")

    @property
    def valid(self) -> bool:
        return regime_margin(self.m, self.width, self.t) > 0


def eta(m, width, t) -> float:
    """Error amplification ``sqrt(m)/gamma_{m-1} * (width + t)/(gamma_m - width - t)``.

    Needs ``m >= 2`` and ``0 <= t < gamma_m - width``.
    """
    _check_m(m)
    _check_t(t)
    margin = regime_margin(m, width, t)
    if margin <= 0:
        raise DomainError(
            f"bound needs 0 <= t < gamma_m - width; got t={t:.6g}, "
            f"gamma_m - width = {gamma_d(m) - width:.6g}"
        )
    return math.sqrt(m) / gamma_d(m - 1) * (width + t) / margin


def eta_remark1(m, width, t) -> float:
    """Relaxation ``sqrt(m)/sqrt(m-1) * (width + t)/(sqrt(m-1) - width - t)`` of ``eta``."""
    _check_m(m)
    _check_t(t)
    margin = math.sqrt(m - 1) - width - t
    if margin <= 0:
        raise DomainError(
            f"relaxed bound needs t < sqrt(m-1) - width; got t={t:.6g}, "
            f"sqrt(m-1) - width = {math.sqrt(m - 1) - width:.6g}"
        )
    return math.sqrt(m) / math.sqrt(m - 1) * (width + t) / margin


def success_probability(t) -> float:
    """``max(0, 1 - 6 exp(-t^2/26))``; the guarantee is vacuous below t ≈ 6.94."""
    _check_t(t)
    return max(0.0, 1.0 - 6.0 * math.exp(-t * t / 26.0))


def gordon_lower_bound(m, width, t) -> float:
    """Lower bound ``(gamma_m - width - t)/sqrt(m)`` on the restricted minimum
    singular value of an ``m x n`` matrix with N(0, 1/m) entries."""
    _check_m(m)
    _check_t(t)
    margin = regime_margin(m, width, t)
    if margin < 0:
        raise DomainError(
            f"need t <= gamma_m - width (got margin {margin:.6g}); with fewer measurements "
            "than the squared width no noise robustness can be expected"
        )
    return margin / math.sqrt(m)


@dataclass(frozen=True)
class AdversarialBounds:
    lower: float
    upper: Optional[float]

    @property
    def upper_defined(self) -> bool:
        return self.upper is not None


def adversarial_bounds(m, width, t, z_norm) -> AdversarialBounds:
    """Worst-case error bounds over noise chosen with knowledge of ``A``.

    ``lower = sqrt(m)/(gamma_m + t) * z_norm`` is attained by some noise
    vector; ``upper = 2 sqrt(m) z_norm/(gamma_m - width - t)`` holds for all
    noise vectors at once and is ``None`` outside ``t < gamma_m - width``.
    """
    _check_m(m)
    _check_t(t)
    g = gamma_d(m)
    lower = math.sqrt(m) / (g + t) * z_norm
    margin = g - width - t
    upper = 2.0 * math.sqrt(m) * z_norm / margin if margin > 0 else None
    return AdversarialBounds(lower, upper)


def epsilon_ratio(eps) -> float:
    """``sqrt(2/eps + 1)``: how much larger ``sqrt(m - w^2)`` is than ``sqrt(m) - w`` at ``m = (1+eps)^2 w^2``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    return math.sqrt(2.0 / eps + 1.0)


def comparison_ratios(m, width, z_norm, t=0.0) -> dict:
    """Error bounds from related analyses, side by side.

    ``cha_bound``: ``2 sqrt(m) z_norm/(gamma_m - width - t)``.
    ``oym_style``: ``z_norm * width/sqrt(m - width^2)`` (asymptotic, i.i.d. noise).
    ``informal_lasso``: ``z_norm * width/(sqrt(m) - width)`` (informal; never gated).
    Entries outside their regime are ``None`` and listed under ``violations``.
    """
    _check_m(m)
    _check_t(t)
    report = {"m": m, "width": width, "z_norm": z_norm, "t": t, "violations": []}
    margin = regime_margin(m, width, t)
    if margin > 0:
        report["cha_bound"] = 2.0 * math.sqrt(m) * z_norm / margin
    else:
        report["cha_bound"] = None
        report["violations"].append("cha_bound: needs t < gamma_m - width")
    if width * width < m:
        report["oym_style"] = z_norm * width / math.sqrt(m - width * width)
        report["informal_lasso"] = z_norm * width / (math.sqrt(m) - width)
        report["denominator_ratio"] = math.sqrt(m - width * width) / (math.sqrt(m) - width)
        if width > 0:
            eps = math.sqrt(m) / width - 1.0
            report["epsilon"] = eps
            report["epsilon_ratio"] = epsilon_ratio(eps)
        else:
            report["epsilon"] = None
            report["epsilon_ratio"] = None
    else:
        for key in ("oym_style", "informal_lasso", "denominator_ratio", "epsilon", "epsilon_ratio"):
            report[key] = None
        report["violations"].append("oym_style: needs m > width^2")
    return report


@dataclass(frozen=True)
class BoundReport:
    eta: float
    eta_remark1: Optional[float]
    lasso_bound: float
    socp_bound: float
    success_prob: float
    gordon_sigma_lower: float
    adversarial_lower: float
    adversarial_upper: Optional[float]
    cha_bound: Optional[float]
    oym_style_bound: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(params: BoundParams) -> BoundReport:
    m, w, t, zn = params.m, params.width, params.t, params.z_norm
    e = eta(m, w, t)
    try:
        e1 = eta_remark1(m, w, t)
    except DomainError:
        e1 = None
    adv = adversarial_bounds(m, w, t, zn)
    comp = comparison_ratios(m, w, zn, t)
    return BoundReport(
        eta=e,
        eta_remark1=e1,
        lasso_bound=e * zn,
        socp_bound=2.0 * e * zn,
        success_prob=success_probability(t),
        gordon_sigma_lower=gordon_lower_bound(m, w, t),
        adversarial_lower=adv.lower,
        adversarial_upper=adv.upper,
        cha_bound=comp["cha_bound"],
        oym_style_bound=comp["oym_style"],
    )


def kappa_hat(alpha_hat, beta):
    return alpha_hat * np.sqrt(1.0 - beta**2) - beta * np.sqrt(1.0 + alpha_hat**2 - 2.0 * alpha_hat * beta)


def kappa_lower(alpha_hat, beta):
    return np.sqrt((1.0 - beta) / 2.0) * (alpha_hat - beta)


@dataclass(frozen=True)
class KappaCheck:
    kappa: float
    lower_bound: float
    holds: bool


def kappa_hat_check(alpha_hat, beta, margin=1e-12) -> KappaCheck:
    """Check ``kappa_hat(alpha) >= sqrt((1 - beta)/2) (alpha - beta)`` for ``0 <= beta <= alpha <= 1``, ``beta < 1``."""
    if not (0.0 <= beta <= alpha_hat <= 1.0) or beta >= 1.0:
        raise DomainError(f"need 0 <= beta <= alpha_hat <= 1 and beta < 1, got beta={beta}, alpha_hat={alpha_hat}")
    k = float(kappa_hat(alpha_hat, beta))
    lb = float(kappa_lower(alpha_hat, beta))
    return KappaCheck(k, lb, k - lb >= -margin)


def cubic_slack(beta):
    """``(1 + beta)(1 - beta^2)``; at most 32/27 on [0, 1], attained at beta = 1/3."""
    return (1.0 + beta) * (1.0 - beta**2)


@dataclass
class CorrelationCheck:
    alpha: float
    trials: int
    failures: int
    projection_norms: np.ndarray

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0


def restricted_correlation_check(inst, cone, alpha, trials, seed, tol=1e-10) -> CorrelationCheck:
    """Fraction of fresh Gaussian ``A`` for which ``||Proj(z, A C)|| > alpha``.

    ``z`` is taken from ``inst`` and held fixed; each trial draws ``A`` with
    N(0, 1/m) entries from its own stream keyed by ``(seed, trial)``.
    """
    z = np.asarray(inst.z, dtype=float)
    m, n = z.size, cone.n
    norms = np.empty(int(trials))
    for i in range(int(trials)):
        A = sampling.gaussian_matrix(m, n, sampling.stream(seed, i, sampling.CORRELATION))
        norms[i] = np.linalg.norm(project_cone_image(z, A, cone, tol=tol))
    failures = int(np.count_nonzero(norms > alpha))
    return CorrelationCheck(float(alpha), int(trials), failures, norms)


@dataclass(frozen=True)
class DeterministicBound:
    projection_norm: float
    sigma_hat: float
    lasso_bound: float
    socp_bound: float


def deterministic_error_bound(inst, cone, restarts=50, seed=0) -> DeterministicBound:
    """``||Proj(z, A T)|| / sigma_min(A, T ∩ S)`` and twice that for the SOCP.

    ``sigma_hat`` comes from the restarted projected-gradient heuristic and
    may overestimate the true restricted singular value, which can make
    the returned bounds too small.
    """
    p = float(np.linalg.norm(project_cone_image(inst.z, inst.A, cone)))
    s = restricted_min_singular(inst.A, cone, restarts=restarts, seed=seed)
    bound = p / s if s > 0 else math.inf
    return DeterministicBound(p, s, bound, 2.0 * bound)


def binomial_slack(p, trials, sigmas=3.0) -> float:
    return sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / trials)
