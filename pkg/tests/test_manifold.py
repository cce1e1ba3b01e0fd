import numpy as np
import pytest

from rismaestro import ManifoldProblem, rcg_unit_modulus


def _random_problem(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U = A @ A.conj().T / n
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    theta0 = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    return ManifoldProblem(Umat=U, v=v, theta0=theta0)


def _random_unit(n, count, rng):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, (count, n)))


def test_alignment_case(rng):
    # Umat proportional to the identity: the quadratic term is constant on
    # the manifold, so each entry aligns with v
    n = 6
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    prob = ManifoldProblem(Umat=2.5 * np.eye(n), v=v,
                           theta0=np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    res = rcg_unit_modulus(prob, tol=1e-12, max_iters=2000)
    np.testing.assert_allclose(res.theta, v / np.abs(v), atol=1e-8)


def test_zero_v_identity_terminates_immediately(rng):
    n = 4
    prob = ManifoldProblem(Umat=np.eye(n), v=np.zeros(n, dtype=complex),
                           theta0=np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    res = rcg_unit_modulus(prob)
    assert res.iterations == 0
    assert res.converged
    assert res.objective == pytest.approx(n)


def test_beats_random_sampling(rng):
    # objective must not exceed the best of 1e5 random unit-modulus points
    for trial in range(5):
        prob = _random_problem(4, np.random.default_rng(500 + trial))
        res = rcg_unit_modulus(prob, tol=1e-10, max_iters=1000,
                               n_candidates=512)
        pts = _random_unit(4, 100_000, np.random.default_rng(trial))
        vals = np.einsum("si,ij,sj->s", pts.conj(), prob.Umat, pts).real \
            - 2 * (pts.conj() * prob.v[None, :]).sum(axis=1).real
        assert res.objective <= vals.min() + 1e-6


def test_multistart_still_descends_from_theta0(rng):
    prob = _random_problem(6, rng)
    res = rcg_unit_modulus(prob, n_candidates=64)
    assert res.objective <= prob.objective(prob.theta0) + 1e-12


def test_descent_and_feasibility(rng):
    prob = _random_problem(12, rng)
    res = rcg_unit_modulus(prob)
    assert res.objective <= prob.objective(prob.theta0) + 1e-12
    np.testing.assert_allclose(np.abs(res.theta), 1.0, atol=1e-12)


def test_gradient_norm_at_convergence(rng):
    prob = _random_problem(8, rng)
    res = rcg_unit_modulus(prob, tol=1e-8, max_iters=5000)
    assert res.converged
    assert res.grad_norm <= 1e-8
