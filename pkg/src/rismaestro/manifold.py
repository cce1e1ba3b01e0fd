"""Riemannian conjugate gradient for unit-modulus quadratic programs.

Solves min_theta theta^H U theta - 2 Re{theta^H v} with |theta_n| = 1 for
every entry, on the product-of-circles manifold: Euclidean gradient
2(U theta - v), tangent projection removes the per-element radial component,
retraction renormalizes each entry, Polak-Ribiere+ directions with restart on
non-descent, Armijo backtracking line search seeded with the exact ambient
quadratic minimizer along the search direction.

The torus landscape is multimodal, so `rcg_unit_modulus` optionally screens
a deterministic candidate set (the start point, a v-aligned point, two
regularized relaxations, quasi-random fills) and polishes the best few; the
start point is always polished too, which preserves the descent guarantee
from theta0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ManifoldProblem:
    Umat: np.ndarray    # (n, n) Hermitian PSD
    v: np.ndarray       # (n,)
    theta0: np.ndarray  # (n,) unit modulus start point

    def objective(self, theta: np.ndarray) -> float:
        return float(np.real(theta.conj() @ (self.Umat @ theta))
                     - 2.0 * np.real(theta.conj() @ self.v))


@dataclass
class RcgResult:
    theta: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    line_search_failed: bool


def _project(theta: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Remove the radial component Re{g_n theta_n^*} theta_n per element."""
    return g - np.real(g * theta.conj()) * theta


def _retract(theta: np.ndarray) -> np.ndarray:
    mag = np.abs(theta)
    mag = np.where(mag < 1e-300, 1.0, mag)
    return theta / mag


def _phases(w: np.ndarray) -> np.ndarray:
    w = np.where(np.abs(w) > 0, w, 1.0)
    return w / np.abs(w)


def _rcg_single(problem: ManifoldProblem, theta0: np.ndarray, tol: float,
                max_iters: int) -> RcgResult:
    U, v = problem.Umat, problem.v
    theta = _retract(theta0.astype(complex))
    f = problem.objective(theta)
    egrad = 2.0 * (U @ theta - v)
    rgrad = _project(theta, egrad)
    gnorm2 = float(np.real(rgrad.conj() @ rgrad))
    direction = -rgrad
    stalled = False

    it = 0
    for it in range(max_iters):
        if np.sqrt(gnorm2) <= tol:
            return RcgResult(theta, f, np.sqrt(gnorm2), it, True, False)

        slope = float(np.real(rgrad.conj() @ direction))
        if slope >= 0.0:  # restart on a non-descent direction
            direction = -rgrad
            slope = -gnorm2

        # exact minimizer of the ambient quadratic along the direction
        dUd = float(np.real(direction.conj() @ (U @ direction)))
        dg = float(np.real(direction.conj() @ egrad))
        t = -dg / (2.0 * dUd) if dUd > 1e-300 else 1.0 / max(np.sqrt(-slope), 1e-300)

        accepted = False
        for _ in range(30):
            cand = _retract(theta + t * direction)
            f_cand = problem.objective(cand)
            if f_cand <= f + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            stalled = True
            break  # stalled at float resolution; hand over to the polish

        theta, f = cand, f_cand
        egrad = 2.0 * (U @ theta - v)
        rgrad_new = _project(theta, egrad)
        gnorm2_new = float(np.real(rgrad_new.conj() @ rgrad_new))
        # Polak-Ribiere+ with tangent transport of the previous direction
        if gnorm2 > 0:
            beta = max(0.0, float(np.real(
                rgrad_new.conj() @ (rgrad_new - _project(theta, rgrad)))) / gnorm2)
        else:
            beta = 0.0
        direction = -rgrad_new + beta * _project(theta, direction)
        rgrad, gnorm2 = rgrad_new, gnorm2_new

    if np.sqrt(gnorm2) > tol:
        polished = _coordinate_polish(U, v, theta, tol, max_sweeps=max_iters)
        f_pol = problem.objective(polished)
        rg_pol = _project(polished, 2.0 * (U @ polished - v))
        g2_pol = float(np.real(rg_pol.conj() @ rg_pol))
        # accept on descent, or within objective rounding noise when the
        # gradient strictly improves (the polish reaches the optimum whose
        # objective can evaluate a few ulps above the stalled iterate)
        noise = 8.0 * np.finfo(float).eps * (1.0 + abs(f))
        if f_pol <= f or (f_pol <= f + noise and g2_pol < gnorm2):
            theta, f = polished, min(f_pol, f)
            gnorm2 = g2_pol
    gnorm = float(np.sqrt(gnorm2))
    return RcgResult(theta, f, gnorm, it + 1, gnorm <= tol,
                     stalled and gnorm > tol)


def _coordinate_polish(U: np.ndarray, v: np.ndarray, theta: np.ndarray,
                       tol: float, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic exact minimization over single phases.

    The objective restricted to theta_n is 2 Re{theta_n^* w_n} + const with
    w_n = (U theta)_n - U_nn theta_n - v_n, minimized by theta_n = -w_n/|w_n|.
    Each step is closed form, so the tail converges past the floating-point
    barrier that stops objective-based line searches near the optimum.
    """
    theta = theta.copy()
    n = len(theta)
    for _ in range(max_sweeps):
        Utheta = U @ theta
        moved = 0.0
        for i in range(n):
            w = Utheta[i] - U[i, i] * theta[i] - v[i]
            if abs(w) < 1e-300:
                continue
            new = -w / abs(w)
            delta = new - theta[i]
            if delta != 0:
                Utheta += U[:, i] * delta
                theta[i] = new
                moved = max(moved, abs(delta))
        rgrad = _project(theta, 2.0 * (U @ theta - v))
        if np.linalg.norm(rgrad) <= tol or moved == 0.0:
            break
    return theta


def _candidates(problem: ManifoldProblem, count: int) -> np.ndarray:
    """Deterministic start set: theta0, v-aligned, regularized relaxations,
    then fixed quasi-random phases."""
    n = len(problem.v)
    cands = [_retract(problem.theta0.astype(complex)), _phases(problem.v)]
    tr = max(np.trace(problem.Umat).real / n, 1e-300)
    for lam in (0.1 * tr, tr):
        try:
            w = np.linalg.solve(problem.Umat + lam * np.eye(n), problem.v)
            cands.append(_phases(w))
        except np.linalg.LinAlgError:
            pass
    fill = count - len(cands)
    if fill > 0:
        srng = np.random.default_rng(20210914)
        cands.append(np.exp(1j * srng.uniform(0, 2 * np.pi, (fill, n))))
        return np.vstack([np.array(cands[:-1]), cands[-1]])
    return np.array(cands[:count])


def rcg_unit_modulus(problem: ManifoldProblem, tol: float = 1e-6,
                     max_iters: int = 200, n_candidates: int = 1,
                     n_polish: int = 4) -> RcgResult:
    """Minimize the quadratic on the unit-modulus manifold.

    With n_candidates == 1 this is a single descent run from problem.theta0.
    With n_candidates > 1 the candidate set is screened by objective value
    and the best n_polish (always including theta0) are polished; the best
    polished result is returned. Either way the returned objective never
    exceeds the objective at theta0.
    """
    if n_candidates <= 1:
        return _rcg_single(problem, problem.theta0, tol, max_iters)

    C = _candidates(problem, n_candidates)
    vals = np.einsum("si,ij,sj->s", C.conj(), problem.Umat, C).real \
        - 2.0 * np.real(C.conj() @ problem.v)
    order = np.argsort(vals)[:n_polish]
    picks = sorted(set(order.tolist()) | {0})
    best: RcgResult | None = None
    for i in picks:
        res = _rcg_single(problem, C[i], tol, max_iters)
        if best is None or res.objective < best.objective:
            best = res
    return best
