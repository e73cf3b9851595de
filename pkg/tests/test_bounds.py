import math

import numpy as np
import pytest

from conebounds import DomainError
from conebounds.bounds import (
    BoundParams,
    adversarial_bounds,
    binomial_slack,
    bound_report,
    comparison_ratios,
    cubic_slack,
    deterministic_error_bound,
    epsilon_ratio,
    eta,
    eta_remark1,
    gordon_lower_bound,
    kappa_hat,
    kappa_hat_check,
    kappa_lower,
    restricted_correlation_check,
    success_probability,
)
from conebounds.geometry import ConeHandle, SignalDescriptor, StructureModel, gamma_d
from conebounds.solvers import ProblemInstance, solve_constrained_lasso

W = 7.2789


def test_eta_examples():
    assert eta(10, 0.0, 0.0) == 0.0
    expected = math.sqrt(101) / gamma_d(100) * W / (gamma_d(101) - W)
    assert eta(101, W, 0.0) == pytest.approx(expected, rel=1e-14)


def test_eta_domain():
    with pytest.raises(DomainError, match="gamma_m - width"):
        eta(100, W, 5.0)
    with pytest.raises(DomainError):
        eta(1, 0.0, 0.0)
    with pytest.raises(DomainError):
        eta(100, W, -1.0)


def test_eta_increasing_in_t_and_width():
    ts = np.linspace(0, 2, 9)
    vals = [eta(360, W, t) for t in ts]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert eta(360, 6.0, 1.0) < eta(360, 7.0, 1.0)


def test_eta_remark1_relaxes_eta():
    for m in (50, 200, 1000):
        assert eta_remark1(m, 3.0, 1.0) >= eta(m, 3.0, 1.0)
    assert eta_remark1(10, 0.0, 0.0) == 0.0
    m = 10**6
    assert eta_remark1(m, W, 2.0) / ((W + 2.0) / math.sqrt(m)) == pytest.approx(1.0, abs=1e-2)


def test_success_probability():
    assert success_probability(0.0) == 0.0
    assert success_probability(10.0) == pytest.approx(1 - 6 * math.exp(-100 / 26), rel=1e-14)
    assert success_probability(10.0) == pytest.approx(0.8717, abs=2e-4)
    ts = np.linspace(7, 30, 50)
    vals = [success_probability(t) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_gordon_lower_bound():
    assert gordon_lower_bound(10**6, 0.0, 0.0) == pytest.approx(1.0, abs=1e-6)
    assert gordon_lower_bound(100, W, 2.0) == pytest.approx((gamma_d(100) - 9.2789) / 10, rel=1e-14)
    with pytest.raises(DomainError, match="noise robustness"):
        gordon_lower_bound(20, W, 2.0)


def test_adversarial_bounds():
    m = 50
    b = adversarial_bounds(m, 0.0, 0.0, 1.0)
    assert b.lower == pytest.approx(math.sqrt(m) / gamma_d(m))
    assert b.upper == pytest.approx(2 * math.sqrt(m) / gamma_d(m))
    assert b.lower <= b.upper
    zero = adversarial_bounds(m, 1.0, 1.0, 0.0)
    assert (zero.lower, zero.upper) == (0.0, 0.0)
    out = adversarial_bounds(m, W, 5.0, 1.0)
    assert out.upper is None and not out.upper_defined and out.lower > 0


def test_epsilon_ratio():
    assert epsilon_ratio(2.0) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert epsilon_ratio(1e12) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        epsilon_ratio(0.0)


def test_comparison_ratios():
    w = 5.0
    m = int((1 + 2.0) ** 2 * w * w)
    r = comparison_ratios(m, w, 1.0)
    assert r["epsilon"] == pytest.approx(2.0)
    assert r["denominator_ratio"] == pytest.approx(epsilon_ratio(2.0), rel=1e-12)
    assert r["informal_lasso"] >= r["oym_style"]
    low = comparison_ratios(20, 5.0, 1.0)
    assert low["oym_style"] is None and low["cha_bound"] is None and len(low["violations"]) == 2


def test_bound_report():
    rep = bound_report(BoundParams(360, W, 10.0, 0.1))
    assert rep.lasso_bound == pytest.approx(eta(360, W, 10.0) * 0.1)
    assert rep.socp_bound == pytest.approx(2 * rep.lasso_bound)
    assert rep.success_prob == pytest.approx(success_probability(10.0))
    zero = bound_report(BoundParams(360, W, 2.0, 0.0))
    assert zero.lasso_bound == zero.socp_bound == zero.adversarial_upper == 0.0
    with pytest.raises(DomainError):
        bound_report(BoundParams(100, W, 10.0, 0.1))
    assert BoundParams(360, W, 10.0).valid and not BoundParams(100, W, 10.0).valid


def test_kappa_examples():
    c = kappa_hat_check(1.0, 0.0)
    assert c.kappa == pytest.approx(1.0) and c.lower_bound == pytest.approx(math.sqrt(0.5)) and c.holds
    for beta in (0.0, 0.3, 0.9):
        assert kappa_hat(beta, beta) == pytest.approx(0.0, abs=1e-15)
        assert kappa_lower(beta, beta) == 0.0
    with pytest.raises(DomainError):
        kappa_hat_check(0.2, 0.5)


def test_kappa_grid():
    beta, alpha = np.meshgrid(np.linspace(0, 0.999, 100), np.linspace(0, 1, 100))
    mask = alpha >= beta
    gap = kappa_hat(alpha, beta) - kappa_lower(alpha, beta)
    assert gap[mask].min() >= -1e-12


def test_cubic_slack_maximum():
    beta = np.linspace(0, 1, 100001)
    vals = cubic_slack(beta)
    assert vals.max() <= 32 / 27 + 1e-15
    assert beta[np.argmax(vals)] == pytest.approx(1 / 3, abs=1e-3)
    assert cubic_slack(1 / 3) == pytest.approx(32 / 27, rel=1e-15)


def test_binomial_slack():
    assert binomial_slack(0.5, 100) == pytest.approx(0.15)
    assert binomial_slack(1.0, 100) == 0.0


def test_correlation_check_zero_noise():
    model = StructureModel.sparse(10)
    x0 = np.zeros(10)
    x0[0] = 1.0
    inst = ProblemInstance(np.ones((5, 10)), x0, np.zeros(5), model)
    cone = ConeHandle(SignalDescriptor(model, x0))
    check = restricted_correlation_check(inst, cone, 0.0, trials=5, seed=0)
    assert check.failures == 0 and check.failure_rate == 0.0


def test_deterministic_bound_holds():
    rng = np.random.default_rng(0)
    model = StructureModel.sparse(40)
    A = rng.standard_normal((30, 40)) / math.sqrt(30)
    x0 = np.zeros(40)
    x0[:2] = [1.0, -0.5]
    inst = ProblemInstance(A, x0, 0.05 * rng.standard_normal(30), model)
    cone = ConeHandle(SignalDescriptor(model, x0))
    db = deterministic_error_bound(inst, cone, restarts=30, seed=1)
    assert solve_constrained_lasso(inst, tol=1e-10).error_norm <= db.lasso_bound * (1 + 1e-6)
    assert db.socp_bound == pytest.approx(2 * db.lasso_bound)
