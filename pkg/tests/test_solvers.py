import json
import math

import numpy as np
import pytest
import scipy.optimize
from scipy.stats import norm

from conebounds import DomainError, InfeasibleError, UnsupportedModelError
from conebounds.bounds import eta
from conebounds.experiments import SweepConfig, generate_instance
from conebounds.geometry import SignalDescriptor, StructureModel, WidthEstimate, project_l1_ball, width_closed_form
from conebounds.sampling import gaussian_matrix, random_signal
from conebounds.solvers import (
    ProblemInstance,
    compute_tau_star,
    expected_dist_sq,
    lambda_best,
    solve,
    solve_constrained_lasso,
    solve_least_squares,
    solve_penalized_lasso,
    solve_socp,
)


def make_instance(m, n, k, sigma, seed, kind="sparse"):
    rng = np.random.default_rng(seed)
    model = StructureModel(kind, n)
    A = gaussian_matrix(m, n, rng)
    x0 = random_signal(model, k, rng)
    z = sigma * rng.standard_normal(m)
    return ProblemInstance(A, x0, z, model)


def identity_instance(n, k, sigma, seed):
    rng = np.random.default_rng(seed)
    model = StructureModel.sparse(n)
    x0 = random_signal(model, k, rng)
    return ProblemInstance(np.eye(n), x0, sigma * rng.standard_normal(n), model)


def soft_threshold_socp_oracle(y, delta):
    # threshold theta with ||y - S_theta(y)|| = delta, found by a 1-D root find
    def gap(theta):
        return np.sqrt(np.sum(np.minimum(np.abs(y), theta) ** 2)) - delta
    theta = scipy.optimize.brentq(gap, 0.0, np.abs(y).max(), xtol=1e-15, rtol=1e-15)
    return np.sign(y) * np.maximum(np.abs(y) - theta, 0)


def test_y_is_derived():
    inst = make_instance(5, 8, 2, 0.1, 0)
    np.testing.assert_array_equal(inst.y, inst.A @ inst.x0 + inst.z)


def test_instance_shape_checks():
    model = StructureModel.sparse(3)
    with pytest.raises(DomainError):
        ProblemInstance(np.ones((2, 3)), np.ones(4), np.ones(2), model)
    with pytest.raises(DomainError):
        ProblemInstance(np.ones((2, 4)), np.ones(4), np.ones(2), model)


@pytest.mark.parametrize("seed", range(3))
def test_constrained_lasso_identity_is_ball_projection(seed):
    inst = identity_instance(40, 4, 0.3, seed)
    res = solve_constrained_lasso(inst, tol=1e-12)
    ref = project_l1_ball(inst.y, np.abs(inst.x0).sum())
    assert np.max(np.abs(res.x_star - ref)) <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_socp_identity_matches_threshold_oracle(seed):
    inst = identity_instance(40, 4, 0.3, seed)
    res = solve_socp(inst, tol=1e-10)
    ref = soft_threshold_socp_oracle(inst.y, inst.z_norm)
    assert np.max(np.abs(res.x_star - ref)) <= 1e-6


def test_noiseless_recovery():
    inst = make_instance(30, 20, 3, 0.0, 1)
    res = solve_constrained_lasso(inst, tol=1e-10)
    assert res.converged
    assert res.error_norm <= 1e-8


def test_noiseless_sparse_recovery_above_transition():
    inst = make_instance(80, 100, 3, 0.0, 2)
    res = solve_constrained_lasso(inst, tol=1e-12, max_iter=100000)
    assert res.error_norm <= 1e-6


def test_constrained_lasso_is_feasible():
    inst = make_instance(40, 60, 4, 0.05, 3)
    res = solve_constrained_lasso(inst)
    assert res.f_value <= np.abs(inst.x0).sum() * (1 + 1e-12)


def test_penalized_large_lambda_gives_zero():
    inst = make_instance(20, 30, 3, 0.1, 4)
    lam = np.abs(inst.A.T @ inst.y).max()
    res = solve_penalized_lasso(inst, lam)
    np.testing.assert_array_equal(res.x_star, np.zeros(30))


def test_penalized_small_lambda_approaches_least_squares():
    inst = make_instance(40, 10, 3, 0.1, 5)
    ls = solve_least_squares(inst)
    pen = solve_penalized_lasso(inst, 1e-8, tol=1e-13, max_iter=200000)
    assert np.max(np.abs(pen.x_star - ls.x_star)) <= 1e-6


def test_penalized_rejects_bad_lambda():
    inst = make_instance(10, 10, 2, 0.1, 0)
    with pytest.raises(DomainError):
        solve_penalized_lasso(inst, 0.0)


def test_socp_residual_matches_delta():
    inst = make_instance(60, 100, 4, 0.05, 6)
    res = solve_socp(inst)
    assert res.residual_norm <= inst.z_norm * (1 + 1e-12)
    assert res.residual_norm == pytest.approx(inst.z_norm, abs=1e-6)
    # a delta above ||y|| makes zero feasible
    assert solve_socp(inst, delta=2 * np.linalg.norm(inst.y)).f_value == 0.0


def test_socp_infeasible_delta():
    inst = make_instance(40, 10, 3, 0.1, 7)
    ls = solve_least_squares(inst)
    with pytest.raises(InfeasibleError):
        solve_socp(inst, delta=0.5 * ls.residual_norm, lam_floor=1e-6)


def test_socp_needs_norm():
    inst = make_instance(10, 10, 2, 0.1, 0, kind="non_negative")
    with pytest.raises(UnsupportedModelError):
        solve_socp(inst)


def test_penalized_residual_monotone_in_lambda():
    inst = make_instance(40, 60, 4, 0.05, 8)
    lams = [0.2, 0.05, 0.01, 0.002]
    res = [solve_penalized_lasso(inst, lam, tol=1e-12).residual_norm for lam in lams]
    assert all(b <= a + 1e-10 for a, b in zip(res, res[1:]))


def test_least_squares_cases():
    inst = make_instance(30, 10, 3, 0.0, 9)
    np.testing.assert_allclose(solve_least_squares(inst).x_star, inst.x0, atol=1e-12)
    eye = identity_instance(10, 2, 0.2, 0)
    np.testing.assert_allclose(solve_least_squares(eye).x_star, eye.y, atol=1e-14)


def test_least_squares_error_identity():
    inst = make_instance(50, 20, 3, 0.1, 10)
    res = solve_least_squares(inst)
    ref = np.linalg.norm(np.linalg.pinv(inst.A) @ inst.z)
    assert res.error_norm == pytest.approx(ref, rel=1e-8)
    assert res.diagnostics["identity_rel_err"] <= 1e-8


def test_least_squares_rejects_rank_deficiency():
    model = StructureModel.sparse(3)
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
    A[:, 2] = A[:, 0] + A[:, 1]
    with pytest.raises(DomainError, match="rank"):
        solve_least_squares(ProblemInstance(A, np.ones(3), np.zeros(4), model))
    with pytest.raises(DomainError):
        solve_least_squares(make_instance(5, 10, 2, 0.1, 0))


def test_solver_methods_on_other_models():
    rng = np.random.default_rng(12)
    for model, k in [(StructureModel.block_sparse(10, 3), 2), (StructureModel.low_rank(5), 1)]:
        A = gaussian_matrix(25, model.n, rng)
        x0 = random_signal(model, k, rng)
        inst = ProblemInstance(A, x0, np.zeros(25), model)
        assert solve_constrained_lasso(inst, tol=1e-11, max_iter=100000).error_norm <= 1e-5


def test_nonnegative_constrained_lasso():
    inst = make_instance(30, 20, 3, 0.0, 13, kind="non_negative")
    res = solve_constrained_lasso(inst, tol=1e-12)
    assert res.x_star.min() >= 0
    assert res.error_norm <= 1e-8


def test_solve_dispatch():
    inst = make_instance(20, 10, 2, 0.01, 14)
    assert solve(inst, "ls").method == "least_squares"
    assert solve(inst, "lasso").method == "lasso_constrained"
    with pytest.raises(DomainError):
        solve(inst, "newton")


# tau* and the penalty rule

def folded_tail(tau):
    # E (|g| - tau)_+^2 for standard normal g
    return 2 * ((1 + tau**2) * norm.sf(tau) - tau * norm.pdf(tau))


def test_tau_star_against_normal_expectation():
    anchor = SignalDescriptor(StructureModel.sparse(2), np.array([1.0, 0.0]))
    objective = lambda t: 1 + t**2 + folded_tail(t)
    ref = scipy.optimize.minimize_scalar(objective, bounds=(0, 5), method="bounded", options={"xatol": 1e-10}).x
    tau = compute_tau_star(anchor, samples=200000, seed=1)
    assert tau == pytest.approx(ref, abs=0.01)
    vals = expected_dist_sq(anchor, [0.3, 1.0], samples=200000, seed=1)
    np.testing.assert_allclose(vals, [objective(0.3), objective(1.0)], rtol=0.01)


def test_tau_objective_full_support_at_zero():
    n = 6
    anchor = SignalDescriptor(StructureModel.sparse(n), np.linspace(1, 2, n))
    samples = 20000
    val = expected_dist_sq(anchor, [0.0], samples=samples, seed=3)[0]
    g = np.random.default_rng(3).standard_normal((samples, n))
    assert val == pytest.approx(np.mean(np.sum(g**2, axis=1)), rel=1e-12)
    assert abs(val - n) <= 4 * math.sqrt(2 * n / samples)
    assert compute_tau_star(anchor, samples=2000, seed=0) > 0


def test_tau_star_is_minimizer():
    model = StructureModel.sparse(50)
    anchor = SignalDescriptor(model, random_signal(model, 4, np.random.default_rng(0)))
    tau = compute_tau_star(anchor, samples=500, seed=2)
    around = expected_dist_sq(anchor, [tau - 1e-3, tau, tau + 1e-3], samples=500, seed=2)
    assert around[1] <= around[0] and around[1] <= around[2]


def test_lambda_best_arithmetic():
    rng = np.random.default_rng(0)
    model = StructureModel.sparse(500)
    z = rng.standard_normal(360)
    z /= np.linalg.norm(z)
    inst = ProblemInstance(np.zeros((360, 500)), random_signal(model, 5, rng), z, model)
    t0 = 1.7
    w = math.sqrt(10 * math.log(200))
    expected = 1 / math.sqrt(360) * t0 * math.sqrt(1 - w * w / 360)
    assert lambda_best(inst, w, t0) == pytest.approx(expected, rel=1e-14)
    assert lambda_best(inst, 0.0, t0) == pytest.approx(t0 / math.sqrt(360), rel=1e-14)
    est = WidthEstimate(w, 5.0, 100, 0.1)
    assert lambda_best(inst, est, t0) == pytest.approx(t0 / math.sqrt(360) * math.sqrt(1 - 25 / 360))
    assert lambda_best(inst, est, t0, use_closed_form=True) == pytest.approx(expected)
    with pytest.raises(DomainError):
        lambda_best(inst, 19.0, t0)


# serialization

def test_instance_json_round_trip():
    inst = make_instance(6, 9, 2, 0.1, 15)
    back = ProblemInstance.from_dict(json.loads(json.dumps(inst.to_dict())))
    np.testing.assert_array_equal(back.A, inst.A)
    np.testing.assert_array_equal(back.y, inst.y)
    assert back.model == inst.model


def test_instance_generator_spec_is_deterministic():
    spec = {"m": 8, "model": {"kind": "sparse", "n": 12}, "seed": 4,
            "A": {"generator": "gaussian"}, "x0": {"generator": "structured", "complexity": 2},
            "z": {"generator": "gaussian", "sigma": 0.1}}
    a, b = ProblemInstance.from_dict(spec), ProblemInstance.from_dict(spec)
    assert a.A.tobytes() == b.A.tobytes() and a.z.tobytes() == b.z.tobytes()
    assert np.count_nonzero(a.x0) == 2
    with pytest.raises(DomainError):
        ProblemInstance.from_dict({"m": 8, "model": {"kind": "sparse", "n": 12}})


def test_bound_holds_on_random_instances():
    cfg = SweepConfig(n=500, complexity=5, sigma=1e-2)
    m, t = 360, 2.0
    e = eta(m, width_closed_form(cfg.model, 5), t)
    lasso_ok = socp_ok = 0
    for seed in range(100):
        inst = generate_instance(cfg, m, seed)
        lasso_ok += solve_constrained_lasso(inst).error_norm <= e * inst.z_norm
        socp_ok += solve_socp(inst).error_norm <= 2 * e * inst.z_norm
    assert lasso_ok >= 95 and socp_ok >= 95
