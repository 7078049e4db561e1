"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import zokit


def test_rng_determinism():
    a, b = zokit.Rng(7), zokit.Rng(7)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    assert 0.0 <= zokit.Rng(1).uniform() < 1.0


def test_sphere_sample_is_unit_norm():
    rng = zokit.Rng(3)
    u = zokit.sample_unit_sphere(rng, 8)
    assert abs(np.linalg.norm(u) - 1.0) < 1e-12


def test_coord_estimator_exact_on_quadratic():
    obj = zokit.Objective(1, 3, lambda i, x: 0.5 * float(np.dot(x, x)))
    x = np.array([1.0, -2.0, 0.5])
    est = zokit.estimate_component(zokit.EstimatorSpec.coord(1e-3, 3), obj, 0, x, zokit.Rng(1))
    assert np.allclose(est.grad, x, atol=1e-9)
    assert est.queries == 6
    assert obj.queries == 6


def test_python_objective_and_zo_svrg_run():
    prob = zokit.QuadraticSumProblem.shared_hessian(5, 6, 4)
    obj = prob.objective()
    cfg = zokit.RunConfig()
    cfg.T = 20
    cfg.m = 5
    cfg.eta = [0.05]
    cfg.b = 2
    cfg.mode = zokit.SamplingMode.WithoutReplacement
    cfg.estimator = zokit.EstimatorSpec.rand(1e-3)
    cfg.x0 = np.zeros(4)
    cfg.seed = 11
    trace = zokit.run_zo_svrg(cfg, obj)
    assert len(trace) == 20
    assert trace.total_queries == zokit.closed_form_queries(
        zokit.Algorithm.ZoSvrg, cfg.estimator, 6, 4, 20, 5, 2
    )
    assert not trace.diverged
    assert len(trace.losses) == 20


def test_run_is_deterministic_per_seed():
    prob = zokit.QuadraticSumProblem.shared_hessian(5, 6, 4)
    cfg = zokit.RunConfig()
    cfg.T = 10
    cfg.m = 5
    cfg.eta = [0.05]
    cfg.b = 2
    cfg.estimator = zokit.EstimatorSpec.avg_rand(1e-3, 3)
    cfg.x0 = np.zeros(4)
    cfg.seed = 42
    t1 = zokit.run_zo_svrg(cfg, prob.objective())
    t2 = zokit.run_zo_svrg(cfg, prob.objective())
    assert t1.losses == t2.losses
    assert np.array_equal(t1.output_point, t2.output_point)


def test_theory_coefficients_and_bound():
    tp = zokit.theory.TheoryParams()
    tp.variant = zokit.theory.Variant.Rand
    tp.d, tp.b, tp.n, tp.m, tp.T = 4, 2, 10, 5, 20
    tp.mode = zokit.SamplingMode.WithReplacement
    tp.mu = 1e-4
    tp.eta = [1e-3]
    tp.beta = [1.0]
    smooth = zokit.theory.SmoothnessParams(1.0, 0.1)
    tr = zokit.theory.coefficients(tp, smooth)
    assert tr.c[-1] == 0.0
    assert tr.gamma_positive
    assert zokit.theory.convergence_bound(tp, tr, 1.0, smooth) > 0.0


def test_control_variate_identity():
    rng = np.random.default_rng(0)
    g0 = [rng.normal(size=3) for _ in range(200)]
    c = [g + 0.3 * rng.normal(size=3) for g in g0]
    rep = zokit.theory.control_variate_analysis(g0, c)
    assert rep.variance_ratio == pytest.approx(1.0 - rep.rho_corr**2, abs=1e-12)


def test_attack_problem_box_and_distortion():
    p = zokit.AttackProblem.toy(9, 4, 6, 3)
    h = p.adversarial_example(0, np.ones(6) * 3.0)
    assert np.all(np.abs(h) <= 0.5)
    assert p.mean_distortion(np.zeros(6)) == pytest.approx(0.0, abs=1e-12)


def test_bad_config_raises():
    with pytest.raises(ValueError):
        zokit.EstimatorSpec.rand(0.0)  # mu = 0 rejected at validation...
        obj = zokit.Objective(1, 2, lambda i, x: 0.0)
        zokit.estimate_component(zokit.EstimatorSpec.rand(0.0), obj, 0, np.zeros(2), zokit.Rng(1))
