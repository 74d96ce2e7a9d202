import math

import numpy as np
import pytest

from conftest import random_hermitian
from entroposep import lbfgs
from entroposep.bipartite import (NoCertificate, SeparabilityCertificate, SolveConfig,
                                  default_accept_threshold, draw_pool, dual_objective,
                                  dual_value_and_grad, grad_bi_mc, k_bi_mc, product_warm_start,
                                  solve_bipartite, validation_estimate, verify_certificate)
from entroposep.errors import DomainError, RangeError, UsageError
from entroposep.hermitian import as_density
from entroposep.kfunctional import grad_k_operator, k_value
from entroposep.states import maximally_mixed, werner

PRODUCT = np.kron(np.diag([0.7, 0.3]), np.diag([0.6, 0.4]))
FAST = SolveConfig(pool_size=50_000, refresh_epochs=3, validate_size=200_000, seed=3)


@pytest.fixture(scope="module")
def pool():
    return draw_pool(2, 2, 50_000, [99, 1])


@pytest.fixture(scope="module")
def product_cert():
    return solve_bipartite(as_density(PRODUCT, dims=(2, 2)), SolveConfig(seed=7))


def test_pool_shapes_and_determinism(pool):
    assert pool.size == 50_000 and pool.dims == (2, 2)
    np.testing.assert_allclose(np.linalg.norm(pool.vectors, axis=1), 1, atol=1e-12)
    again = draw_pool(2, 2, 50_000, [99, 1], threads=3)
    assert np.array_equal(pool.vectors, again.vectors)
    other = draw_pool(2, 2, 50_000, [99, 2])
    assert not np.array_equal(pool.vectors, other.vectors)


def test_k_bi_at_zero_and_multiples_of_identity(pool):
    mu, se = k_bi_mc(np.zeros((4, 4)), pool)
    assert mu == 1.0 and se == 0.0
    mu, se = k_bi_mc(0.7 * np.eye(4), pool)
    assert math.isclose(mu, math.exp(0.7), rel_tol=1e-13)
    assert se <= 1e-12


def test_k_bi_factorizes_for_local_operators(pool):
    xa, xb = np.diag([0.8, -0.4]), np.array([[0.1, 0.5j], [-0.5j, -0.3]])
    x = np.kron(xa, np.eye(2)) + np.kron(np.eye(2), xb)
    mu, se = k_bi_mc(x, pool)
    expected = k_value(np.linalg.eigvalsh(xa)) * k_value(np.linalg.eigvalsh(xb))
    assert abs(mu - expected) <= 4 * se
    est = grad_bi_mc(x, pool)
    assert est.within(np.kron(grad_k_operator(xa), grad_k_operator(xb)), 4)


def test_gradient_trace_equals_value(pool, rng):
    x = random_hermitian(4, rng, 0.5)
    mu, _ = k_bi_mc(x, pool)
    assert math.isclose(np.trace(grad_bi_mc(x, pool).mean).real, mu, rel_tol=1e-12)


def test_gauge_shift(pool, rng):
    x = random_hermitian(4, rng, 0.5)
    mu, _ = k_bi_mc(x, pool)
    mu2, _ = k_bi_mc(x + 0.3 * np.eye(4), pool)
    assert math.isclose(mu2, math.exp(0.3) * mu, rel_tol=1e-12)
    g, g2 = grad_bi_mc(x, pool).mean, grad_bi_mc(x + 0.3 * np.eye(4), pool).mean
    np.testing.assert_allclose(g2 / np.trace(g2), g / np.trace(g), atol=1e-12)


def test_dual_objective_at_zero(pool):
    assert dual_objective(np.zeros((4, 4)), maximally_mixed(4, (2, 2)), pool) == 1.0


def test_dual_gradient_direction(pool, rng):
    rho = werner(0.2).matrix
    x = random_hermitian(4, rng, 0.4)
    h = random_hermitian(4, rng, 1.0)
    f, g = dual_value_and_grad(x, rho, pool)
    assert math.isclose(f, dual_objective(x, rho, pool), rel_tol=1e-13)
    t = 1e-6
    fd = (dual_value_and_grad(x + t * h, rho, pool)[0] - dual_value_and_grad(x - t * h, rho, pool)[0]) / (2 * t)
    assert math.isclose(fd, np.vdot(g, h).real, rel_tol=1e-6, abs_tol=1e-9)


def test_surrogate_midpoint_convexity(pool, rng):
    rho = werner(0.5).matrix
    for _ in range(10):
        a, b = random_hermitian(4, rng, 1.0), random_hermitian(4, rng, 1.0)
        fa, fb = dual_objective(a, rho, pool), dual_objective(b, rho, pool)
        assert dual_objective((a + b) / 2, rho, pool) <= 0.5 * (fa + fb) + 1e-12


def test_overflow_is_infinite_value(pool):
    big = 800 * np.eye(4)
    f, _ = dual_value_and_grad(big, np.eye(4) / 4, pool)
    assert f == np.inf
    with pytest.raises(RangeError):
        k_bi_mc(big, pool)
    with pytest.raises(UsageError):
        k_bi_mc(np.zeros((3, 3)), pool)


def test_lbfgs_on_quadratic():
    a = np.diag([1.0, 10.0, 100.0])
    res = lbfgs.minimize(lambda x: (0.5 * x @ a @ x - x.sum(), a @ x - 1), np.zeros(3), gtol=1e-10)
    assert res.converged
    np.testing.assert_allclose(res.x, 1 / np.diag(a), rtol=1e-8)
    assert all(b <= a_ for a_, b in zip(res.values, res.values[1:]))


def test_lbfgs_keeps_hermitian_iterates(pool, rng):
    rho = werner(0.2).matrix
    seen = []
    lbfgs.minimize(lambda z: dual_value_and_grad(z, rho, pool), random_hermitian(4, rng, 0.3),
                   max_iterations=20, callback=lambda z, f, g: seen.append(z.copy()))
    assert seen
    for z in seen:
        assert np.array_equal(z, z.conj().T)


def test_warm_start_is_exact_for_product_states():
    rho = as_density(PRODUCT, dims=(2, 2))
    x = product_warm_start(rho)
    est = validation_estimate(x, 2, 2, 10**6, [5, 2])
    assert est.within(PRODUCT, 4)


def test_product_state_soundness(product_cert):
    cert = product_cert
    assert isinstance(cert, SeparabilityCertificate) and cert.issued
    assert np.array_equal(cert.X, cert.X.conj().T)
    for ep in cert.trace:
        assert all(b <= a for a, b in zip(ep.values, ep.values[1:]))
    est = cert.validation
    assert est.within(PRODUCT, 4)
    m = est.mean.reshape(2, 2, 2, 2)
    s = est.std_err.reshape(2, 2, 2, 2)
    # the standard error of a sum is at most the sum of the standard errors
    for spec, target in (("ijkj->ik", np.diag([0.7, 0.3])), ("ijil->jl", np.diag([0.6, 0.4]))):
        marg, se = np.einsum(spec, m), np.einsum(spec, s)
        assert np.all(np.abs(marg.real - target) <= 4 * se)
        assert np.all(np.abs(marg.imag) <= 4 * se)
    assert abs(np.trace(est.mean).real - 1) <= 4 * est.trace_std_err


def test_verify_accepts_and_rejects(product_cert):
    rho = as_density(PRODUCT, dims=(2, 2))
    rep = verify_certificate(rho, product_cert.X, 500_000, seed=11)
    assert rep.passed and rep.max_sigma <= 4
    bad = product_cert.X.copy()
    bad[0, 0] += 0.5
    assert not verify_certificate(rho, bad, 500_000, seed=11).passed
    again = verify_certificate(rho, product_cert.X, 500_000, seed=11, threads=3)
    assert again.residual == rep.residual and np.array_equal(again.std_err, rep.std_err)


def test_maximally_mixed_certificate():
    res = solve_bipartite(maximally_mixed(4, (2, 2)), SolveConfig(seed=3))
    assert res.issued
    assert np.linalg.norm(res.X) <= 0.05
    assert res.residual <= default_accept_threshold(2, 2)


def test_werner_high_is_refused():
    res = solve_bipartite(werner(0.9), FAST)
    assert isinstance(res, NoCertificate) and not res.issued
    assert res.reason == "divergence"
    assert res.ppt_min_eigenvalue < -0.05
    assert np.linalg.norm(res.X) > FAST.diverge_norm


def test_stall_is_refused_with_tight_threshold():
    cfg = SolveConfig(pool_size=5_000, refresh_epochs=1, validate_size=50_000,
                      accept_threshold=1e-9, seed=4)
    res = solve_bipartite(werner(0.2), cfg)
    assert not res.issued and res.reason == "stall"
    assert res.residual > 1e-9


def test_solver_determinism_across_threads():
    a = solve_bipartite(werner(0.2), FAST)
    b = solve_bipartite(werner(0.2), SolveConfig(**{**FAST.__dict__, "threads": 3}))
    assert np.array_equal(a.X, b.X) and a.residual == b.residual


def test_threshold_scaling():
    assert default_accept_threshold(2, 2) == 5e-3
    assert math.isclose(default_accept_threshold(3, 3), 5e-3 * 1.5)


def test_config_and_domain_errors():
    for bad in (dict(pool_size=10), dict(diverge_norm=0), dict(refresh_epochs=0),
                dict(max_iterations=0), dict(validate_size=1), dict(accept_threshold=-1.0)):
        with pytest.raises(UsageError):
            solve_bipartite(werner(0.2), SolveConfig(**bad))
    pure = np.zeros((4, 4))
    pure[0, 0] = 1
    with pytest.raises(DomainError):
        solve_bipartite(as_density(pure, dims=(2, 2)), FAST)
    with pytest.raises(UsageError):
        solve_bipartite(np.eye(4) / 4, FAST)


def test_unequal_dimensions():
    rho = as_density(np.kron(np.diag([0.6, 0.4]), np.diag([0.5, 0.3, 0.2])), dims=(2, 3))
    res = solve_bipartite(rho, SolveConfig(seed=3))
    assert res.issued and res.dims == (2, 3)
    assert res.accept_threshold == default_accept_threshold(2, 3)
    assert verify_certificate(rho, res.X, 500_000, seed=9).passed
