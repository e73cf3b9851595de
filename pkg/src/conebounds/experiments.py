"""Instance generation, sweeps over the number of measurements, and Monte
Carlo validators that compare solver output with the closed-form bounds."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import bounds, sampling
from .exceptions import DomainError
from .geometry.cones import ConeHandle
from .geometry.models import SignalDescriptor, StructureModel, max_complexity
from .geometry.restricted import restricted_min_singular
from .geometry.width import gamma_d, width_closed_form, width_monte_carlo
from .solvers import ProblemInstance, solve_constrained_lasso, solve_socp

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "m", "trial", "seed", "z_norm", "err_lasso", "err_socp", "eta_bound", "remark1_bound",
    "width_cf", "width_mc", "gamma_m", "within_bound", "phase_side",
)


@dataclass
class SweepConfig:
    """Parameters of a sweep over ``m``.

    ``sigma = None`` sets the per-entry noise level to ``0.1/sqrt(m)`` so
    that ``||z||`` is close to 0.1 at every ``m``.
    """

    n: int = 500
    complexity: int = 5
    kind: str = "sparse"
    q: Optional[int] = None
    b: Optional[int] = None
    d: Optional[int] = None
    m_values: List[int] = field(default_factory=lambda: [120, 160, 200, 240, 280, 320, 360])
    trials_per_m: int = 50
    sigma: Optional[float] = None
    t: float = 10.0
    base_seed: int = 0
    tol: float = 1e-8
    max_iter: int = 20000
    width_mc_samples: int = 200
    width_source: str = "closed_form"
    run_socp: bool = True

    def __post_init__(self):
        self.m_values = [int(m) for m in self.m_values]
        if self.m_values != sorted(self.m_values) or any(m < 2 for m in self.m_values):
            raise DomainError("m_values must be sorted ascending with every m >= 2")
        if self.trials_per_m < 1:
            raise DomainError("trials_per_m must be >= 1")
        if self.width_source not in ("closed_form", "mc"):
            raise DomainError("width_source must be 'closed_form' or 'mc'")
        if self.t < 0:
            raise DomainError("t must be >= 0")
        if self.kind == "block_sparse" and self.q is not None and self.b is not None:
            self.n = self.q * self.b
        if self.kind == "low_rank" and self.d is not None:
            self.n = self.d * self.d
        model = self.model
        if not 1 <= self.complexity <= max_complexity(model):
            raise DomainError(f"complexity {self.complexity} out of range for {model.kind}")

    @property
    def model(self) -> StructureModel:
        if self.kind == "block_sparse":
            return StructureModel.block_sparse(self.q, self.b)
        if self.kind == "low_rank":
            return StructureModel.low_rank(self.d)
        return StructureModel(self.kind, self.n)

    def noise_sigma(self, m: int) -> float:
        return self.sigma if self.sigma is not None else 0.1 / math.sqrt(m)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**data)


def generate_instance(config: SweepConfig, m: int, trial: int) -> ProblemInstance:
    """Random instance for cell ``(m, trial)``; a pure function of ``(base_seed, m, trial)``."""
    model = config.model
    key = (config.base_seed, m, trial)
    A = sampling.gaussian_matrix(m, model.n, sampling.stream(*key, sampling.MATRIX))
    x0 = sampling.random_signal(model, config.complexity, sampling.stream(*key, sampling.SIGNAL))
    sigma = config.noise_sigma(m)
    z = sampling.gaussian_noise(m, sigma, sampling.stream(*key, sampling.NOISE))
    return ProblemInstance(A, x0, z, model, seed=config.base_seed, sigma=sigma)


def adversarial_instance(config: SweepConfig, m: int, trial: int) -> ProblemInstance:
    """Same ``A`` and ``x0`` as ``generate_instance`` but with ``z = A(0 - x0)``.

    Then ``y = 0``, so zero (the minimizer of any norm) is an exact
    constrained-Lasso optimum and the error equals ``||x0||``.
    """
    base = generate_instance(config, m, trial)
    if not config.model.is_norm:
        raise DomainError("adversarial construction needs a norm regularizer")
    z = -(base.A @ base.x0)
    return ProblemInstance(base.A, base.x0, z, base.model, seed=base.seed, sigma=None)


@dataclass
class SweepRecord:
    m: int
    trial: int
    seed: int
    z_norm: float
    err_lasso: float
    err_socp: float
    eta_bound: float
    remark1_bound: float
    width_cf: float
    width_mc: float
    gamma_m: float
    within_bound: bool
    phase_side: str
    # not part of the CSV
    width_used: float = float("nan")
    socp_within: bool = False
    lasso_converged: bool = True
    socp_converged: bool = True
    note: str = ""

    @property
    def bound_defined(self) -> bool:
        return math.isfinite(self.eta_bound)

    @property
    def gated(self) -> bool:
        return self.phase_side == "above" and self.bound_defined

    def csv_row(self) -> list:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except DomainError:
        return float("nan")


def run_trial(config: SweepConfig, m: int, trial: int) -> SweepRecord:
    inst = generate_instance(config, m, trial)
    anchor = SignalDescriptor(inst.model, inst.x0)
    try:
        width_cf = width_closed_form(inst.model, anchor.complexity)
    except DomainError:
        width_cf = float("nan")
    if config.width_mc_samples > 0:
        cone = ConeHandle(anchor)
        est = width_monte_carlo(
            cone, config.width_mc_samples,
            sampling.stream(config.base_seed, m, trial, sampling.WIDTH).integers(2**63),
        )
        width_mc = est.mc_estimate
    else:
        width_mc = float("nan")
    width = width_cf if config.width_source == "closed_form" else width_mc
    z_norm = inst.z_norm
    notes = []

    lasso = solve_constrained_lasso(inst, tol=config.tol, max_iter=config.max_iter)
    if config.run_socp:
        try:
            socp = solve_socp(inst, tol=config.tol, max_iter=config.max_iter)
            err_socp, socp_ok = socp.error_norm, socp.converged
        except Exception as exc:  # recorded in the row, not fatal
            err_socp, socp_ok = float("nan"), False
            notes.append(f"socp failed: {exc}")
    else:
        err_socp, socp_ok = float("nan"), True
    if not lasso.converged:
        notes.append("lasso hit iteration cap")

    eta_b = _safe(bounds.eta, m, width, config.t)
    r1_b = _safe(bounds.eta_remark1, m, width, config.t)
    return SweepRecord(
        m=m,
        trial=trial,
        seed=config.base_seed,
        z_norm=z_norm,
        err_lasso=lasso.error_norm,
        err_socp=err_socp,
        eta_bound=eta_b,
        remark1_bound=r1_b,
        width_cf=width_cf,
        width_mc=width_mc,
        gamma_m=gamma_d(m),
        within_bound=bool(lasso.error_norm <= eta_b * z_norm),
        phase_side="above" if m > width * width else "below",
        width_used=width,
        socp_within=bool(err_socp <= 2.0 * eta_b * z_norm),
        lasso_converged=lasso.converged,
        socp_converged=socp_ok,
        note="; ".join(notes),
    )


def _run_cell(args):
    config, m, trial = args
    return run_trial(config, m, trial)


@dataclass
class SweepResult:
    config: SweepConfig
    records: List[SweepRecord]
    summary: dict


def run_sweep(config: SweepConfig, jobs: int = 1) -> SweepResult:
    """Run every ``(m, trial)`` cell; output is independent of ``jobs`` and scheduling."""
    cells = [(config, m, trial) for m in config.m_values for trial in range(config.trials_per_m)]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        records = []
        for cell in cells:
            records.append(_run_cell(cell))
            log.info("cell m=%d trial=%d done", cell[1], cell[2])
    records.sort(key=lambda r: (r.m, r.trial))
    return SweepResult(config, records, summarize(records, config.t))


def _stats(values) -> dict:
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return {"mean": None, "median": None, "q10": None, "q90": None}
    return {
        "mean": float(v.mean()),
        "median": float(np.median(v)),
        "q10": float(np.quantile(v, 0.1)),
        "q90": float(np.quantile(v, 0.9)),
    }


def summarize(records: List[SweepRecord], t: float) -> dict:
    """Per-``m`` aggregates plus the bound gate for each ``m``."""
    p = bounds.success_probability(t)
    per_m = {}
    for m in sorted({r.m for r in records}):
        rows = [r for r in records if r.m == m]
        n_rows = len(rows)
        gated = all(r.gated for r in rows)
        entry = {
            "m": m,
            "trials": n_rows,
            "gated": gated,
            "phase_side": rows[0].phase_side,
            "bound_defined": rows[0].bound_defined,
            "success_probability": p,
            "err_lasso": _stats(r.err_lasso for r in rows),
            "err_socp": _stats(r.err_socp for r in rows),
            "lasso_bound_mean": None,
            "median_ratio": None,
            "fraction_within_lasso": None,
            "fraction_within_socp": None,
            "required_fraction": None,
            "gate_passed": None,
            "nonconverged": sum(not (r.lasso_converged and r.socp_converged) for r in rows),
        }
        if gated:
            required = p - bounds.binomial_slack(p, n_rows)
            frac_l = sum(r.within_bound for r in rows) / n_rows
            frac_s = sum(r.socp_within for r in rows) / n_rows
            ratios = [r.eta_bound * r.z_norm / r.err_lasso for r in rows if r.err_lasso > 0]
            entry.update(
                lasso_bound_mean=float(np.mean([r.eta_bound * r.z_norm for r in rows])),
                median_ratio=float(np.median(ratios)) if ratios else None,
                fraction_within_lasso=frac_l,
                fraction_within_socp=frac_s,
                required_fraction=required,
                gate_passed=bool(frac_l >= required and frac_s >= required),
            )
        per_m[str(m)] = entry
    gated_ms = [e for e in per_m.values() if e["gated"] and e["median_ratio"] is not None]
    ratios = [e["median_ratio"] for e in gated_ms]
    return {
        "t": t,
        "success_probability": p,
        "per_m": per_m,
        "gated_m": [e["m"] for e in gated_ms],
        "all_gates_passed": all(e["gate_passed"] for e in gated_ms),
        "ratio_nonincreasing": all(b <= a for a, b in zip(ratios, ratios[1:])),
    }


def records_to_csv(records: List[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def write_csv(records: List[SweepRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class ValidationResult:
    check: str
    trials: int
    failures: int
    allowed_rate: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["failure_rate"] = self.failure_rate
        return out


def reference_width(config: SweepConfig, m: int, t: float, source: str = "auto", samples: int = 20000) -> dict:
    """Width to plug into the bounds for a validator.

    ``auto`` takes the closed-form upper bound when it leaves
    ``t < gamma_m - width`` and otherwise falls back to ``mc``: a Monte Carlo
    estimate of the tangent-cone width at the trial-0 signal (every
    support/sign pattern gives the same width by symmetry).
    """
    if source not in ("auto", "mc", "closed_form"):
        raise DomainError(f"unknown width source {source!r}")
    inst = generate_instance(config, m, 0)
    anchor = SignalDescriptor(inst.model, inst.x0)
    cf = width_closed_form(inst.model, anchor.complexity)
    if source == "closed_form" or (source == "auto" and bounds.regime_margin(m, cf, t) > 0):
        return {"width": cf, "source": "closed_form", "closed_form": cf}
    est = width_monte_carlo(ConeHandle(anchor), samples, sampling.stream(config.base_seed, m, sampling.WIDTH).integers(2**63))
    return {"width": est.mc_estimate, "source": "mc", "closed_form": cf,
            "mc_std_error": est.mc_std_error, "mc_samples": samples}


def validate_gordon(config: SweepConfig, m: int, trials: int, t: float, width: Optional[float] = None,
                    restarts: int = 50, max_iter: int = 500) -> ValidationResult:
    """Failure rate of ``sigma_hat(A, T ∩ S) >= (gamma_m - width - t)/sqrt(m)`` over fresh ``A``.

    Allowed: ``exp(-t^2/2)`` plus three binomial standard deviations.
    ``sigma_hat`` overestimates, so a failure here is a genuine violation.
    """
    ref = reference_width(config, m, t) if width is None else {"width": width, "source": "given"}
    w = ref["width"]
    bound = bounds.gordon_lower_bound(m, w, t)
    p0 = math.exp(-t * t / 2.0)
    allowed = p0 + bounds.binomial_slack(p0, trials)
    values = np.empty(trials)
    for i in range(trials):
        inst = generate_instance(config, m, i)
        cone = ConeHandle(SignalDescriptor(inst.model, inst.x0))
        values[i] = restricted_min_singular(
            inst.A, cone, restarts=restarts, max_iter=max_iter,
            seed=sampling.stream(config.base_seed, m, i, sampling.RESTARTS).integers(2**63),
        )
    failures = int(np.count_nonzero(values < bound))
    return ValidationResult(
        "gordon", trials, failures, p0, allowed, failures / trials <= allowed,
        {"bound": bound, "width": ref, "sigma_hat_min": float(values.min()),
         "sigma_hat_median": float(np.median(values))},
    )


def validate_correlation(config: SweepConfig, m: int, trials: int, t: float,
                         width: Optional[float] = None) -> ValidationResult:
    """Failure rate of ``||Proj(z, A T)|| <= (width + t)/gamma_{m-1} ||z||`` over fresh ``A``.

    ``z`` and the cone come from the trial-0 instance and stay fixed; the
    width defaults to a Monte Carlo estimate.
    Allowed: ``min(1, 5 exp(-t^2/26))`` plus three binomial standard deviations.
    """
    ref = reference_width(config, m, t, "mc") if width is None else {"width": width, "source": "given"}
    w = ref["width"]
    inst = generate_instance(config, m, 0)
    cone = ConeHandle(SignalDescriptor(inst.model, inst.x0))
    alpha = (w + t) / gamma_d(m - 1) * inst.z_norm
    check = bounds.restricted_correlation_check(inst, cone, alpha, trials, seed=config.base_seed)
    p0 = min(1.0, 5.0 * math.exp(-t * t / 26.0))
    allowed = p0 + bounds.binomial_slack(p0, trials)
    return ValidationResult(
        "correlation", trials, check.failures, p0, allowed, check.failure_rate <= allowed,
        {"alpha": alpha, "z_norm": inst.z_norm, "width": ref,
         "max_projection_norm": float(check.projection_norms.max()),
         "median_projection_norm": float(np.median(check.projection_norms))},
    )


def validate_adversarial(config: SweepConfig, m: int, trials: int, t: float,
                         width: Optional[float] = None) -> ValidationResult:
    """Adversarial noise: error must reach ``sqrt(m)/(gamma_m + t) ||z||`` in at least
    ``1 - exp(-t^2/2)`` (minus three binomial standard deviations) of trials,
    and never exceed ``2 sqrt(m) ||z||/(gamma_m - width - t)`` where that is defined.
    """
    ref = reference_width(config, m, t) if width is None else {"width": width, "source": "given"}
    w = ref["width"]
    p_ok = 1.0 - math.exp(-t * t / 2.0)
    required = p_ok - bounds.binomial_slack(p_ok, trials)
    below_lower = 0
    above_upper = 0
    upper_checked = 0
    errs = np.empty(trials)
    for i in range(trials):
        inst = adversarial_instance(config, m, i)
        adv = bounds.adversarial_bounds(m, w, t, inst.z_norm)
        lasso = solve_constrained_lasso(inst, tol=config.tol, max_iter=config.max_iter)
        socp = solve_socp(inst, tol=config.tol, max_iter=config.max_iter)
        errs[i] = lasso.error_norm
        if lasso.error_norm < adv.lower:
            below_lower += 1
        if adv.upper is not None:
            upper_checked += 1
            if max(lasso.error_norm, socp.error_norm) > adv.upper:
                above_upper += 1
    frac_ok = 1.0 - below_lower / trials
    passed = frac_ok >= required and above_upper == 0
    return ValidationResult(
        "adversarial", trials, below_lower, 1.0 - p_ok, 1.0 - required, passed,
        {"fraction_reaching_lower": frac_ok, "required_fraction": required,
         "upper_checked": upper_checked, "upper_violations": above_upper,
         "width": ref, "median_error": float(np.median(errs))},
    )


VALIDATORS = {
    "gordon": validate_gordon,
    "correlation": validate_correlation,
    "adversarial": validate_adversarial,
}


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)
