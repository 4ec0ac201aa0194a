"""ADMM-family comparison solvers.

Three baselines share the block-solver machinery with the decomposition
engines:

* variable-splitting ADMM on the lifted constraint, whose ``w``-update is the
  closed-form projection onto the zero-sum subspace;
* proximal Jacobian ADMM, which updates all blocks in parallel against the
  previous sweep and damps the multiplier step;
* the classic two-block ADMM for the lasso with over-relaxation.

All runners emit the same trace schema as the decomposition engines; the
G-norm delta column is not defined for these iterations and is recorded as
NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ada import StepMetrics, Trace, check_stop
from .block_solvers import (CachedQuadSolver, build_penalized_solvers,
                            soft_threshold)
from .inexact import spectral_norm
from .model import Problem, constraint_residual, objective, project_onto_W


@dataclass(frozen=True)
class BaselineParams:
    """Penalty, damping, and proximal weights for the baseline solvers."""

    beta: float = 1.0
    gamma_damp: float = 1.0
    prox_weights: Optional[tuple] = None
    admm_step: float = 1.618

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.gamma_damp <= 0:
            raise ValueError("gamma_damp must be positive")
        if self.prox_weights is not None:
            pw = tuple(float(t) for t in self.prox_weights)
            if any(t <= 0 for t in pw):
                raise ValueError("prox_weights must be positive")
            object.__setattr__(self, "prox_weights", pw)


def default_prox_weights(problem: Problem, params: BaselineParams) -> tuple:
    """Sufficient-condition weights ``tau_k = beta (K/(2-gamma) - 1) ||E_k||^2 + 0.1``.

    This guarantees convergence of the Jacobian iteration for damping
    ``gamma < 2``; the additive margin keeps every weight strictly positive.
    """
    K = problem.num_blocks
    if params.gamma_damp >= 2.0:
        raise ValueError("damping must satisfy gamma < 2 for the default weights")
    factor = params.beta * (K / (2.0 - params.gamma_damp) - 1.0)
    return tuple(factor * spectral_norm(blk.E) ** 2 + 0.1 for blk in problem.blocks)


def _metrics(nu, problem, x_new, x_prev_stacked, certs) -> StepMetrics:
    resid = constraint_residual(x_new, problem)
    resid_norm = float(np.linalg.norm(resid))
    dx = float(np.linalg.norm(np.concatenate(x_new) - x_prev_stacked))
    q_norm = float(np.linalg.norm(problem.q))
    return StepMetrics(
        iter=nu,
        objective=objective(x_new, problem),
        constraint_residual_norm=resid_norm,
        delta_g_norm_sq=float("nan"),
        x_rel_change=dx / max(1.0, float(np.linalg.norm(x_prev_stacked))),
        feas_rel=resid_norm / max(1.0, q_norm),
        per_block_cert=certs,
    )


# ---------------------------------------------------------------------------
# Variable-splitting ADMM


def vsadmm_step(state, problem: Problem, params: BaselineParams, solvers):
    """One sweep of variable-splitting ADMM on ``(w, x, y)``.

    Block updates minimize ``f_k + (beta/2)||E_k x_k - q_k - w_k + y_k/beta||^2``
    (full column rank of ``E_k`` assumed); the ``w``-update projects
    ``v_k = E_k x_k - q_k + y_k/beta`` onto the zero-sum subspace.
    """
    w, x, y = state
    K, m = problem.num_blocks, problem.m
    beta = params.beta
    new_x = []
    v = np.empty((K, m))
    for k in range(K):
        qk = problem.q if k == K - 1 else 0.0
        t = qk + w[k] - y[k] / beta
        cert = solvers[k].solve(t, x[k], accept=None)
        new_x.append(cert.x)
        v[k] = problem.blocks[k].E @ cert.x - qk + y[k] / beta
    w_new = project_onto_W(v)
    y_new = np.empty((K, m))
    for k in range(K):
        qk = problem.q if k == K - 1 else 0.0
        y_new[k] = y[k] + beta * (problem.blocks[k].E @ new_x[k] - qk - w_new[k])
    return w_new, tuple(new_x), y_new


def vsadmm_run(problem: Problem, params: BaselineParams, max_iters: int,
               stop_eps: float = 1e-8, stop_mode: str = "x_change"):
    """Run VSADMM from zero; returns ``((w, x, y), Trace)``."""
    solvers = build_penalized_solvers(problem, penalty=params.beta, prox_weights=0.0)
    K, m = problem.num_blocks, problem.m
    state = (np.zeros((K, m)), tuple(np.zeros(n) for n in problem.block_dims()),
             np.zeros((K, m)))
    trace = Trace(initial_state=None, stop_mode=stop_mode, stop_eps=stop_eps)
    zeros = tuple(0.0 for _ in range(K))
    for t in range(1, max_iters + 1):
        x_prev = np.concatenate(state[1])
        state = vsadmm_step(state, problem, params, solvers)
        metrics = _metrics(t, problem, state[1], x_prev, zeros)
        trace.metrics.append(metrics)
        if stop_mode != "max_iters" and check_stop(metrics, stop_eps, stop_mode):
            trace.converged = True
            break
    return state, trace


# ---------------------------------------------------------------------------
# Proximal Jacobian ADMM


def prox_jadmm_step(state, problem: Problem, params: BaselineParams, solvers):
    """One parallel sweep of proximal Jacobian ADMM on ``(x, lam)``.

    Every block minimizes
    ``f_k + (beta/2)||E_k x_k + sum_{j != k} E_j x_j - q - lam/beta||^2
    + (tau_k/2)||x_k - x_k_prev||^2`` against the previous sweep, then the
    multiplier takes the damped step ``lam -= gamma*beta*(E x - q)``.
    """
    x, lam = state
    K = problem.num_blocks
    beta = params.beta
    Ex = [problem.blocks[k].E @ x[k] for k in range(K)]
    total = np.sum(Ex, axis=0)
    new_x = []
    for k in range(K):
        r_k = (total - Ex[k]) - problem.q - lam / beta
        cert = solvers[k].solve(-r_k, x[k], accept=None)
        new_x.append(cert.x)
    resid = constraint_residual(new_x, problem)
    lam_new = lam - params.gamma_damp * beta * resid
    return tuple(new_x), lam_new


def prox_jadmm_run(problem: Problem, params: BaselineParams, max_iters: int,
                   stop_eps: float = 1e-8, stop_mode: str = "x_change"):
    """Run proximal Jacobian ADMM from zero; returns ``((x, lam), Trace)``."""
    weights = params.prox_weights
    if weights is None:
        weights = default_prox_weights(problem, params)
    solvers = build_penalized_solvers(problem, penalty=params.beta,
                                      prox_weights=weights)
    K = problem.num_blocks
    state = (tuple(np.zeros(n) for n in problem.block_dims()), np.zeros(problem.m))
    trace = Trace(initial_state=None, stop_mode=stop_mode, stop_eps=stop_eps)
    zeros = tuple(0.0 for _ in range(K))
    for t in range(1, max_iters + 1):
        x_prev = np.concatenate(state[0])
        state = prox_jadmm_step(state, problem, params, solvers)
        metrics = _metrics(t, problem, state[0], x_prev, zeros)
        trace.metrics.append(metrics)
        if stop_mode != "max_iters" and check_stop(metrics, stop_eps, stop_mode):
            trace.converged = True
            break
    return state, trace


# ---------------------------------------------------------------------------
# Two-block lasso ADMM


def _require_lasso_form(problem: Problem):
    if problem.num_blocks != 2:
        raise ValueError("two-block lasso form required")
    b1, b2 = problem.blocks
    ok = (b1.objective.smooth is not None and b1.objective.l1_scale == 0.0
          and b1.objective.smooth.kind == "least_squares"
          and b2.objective.smooth is None and b2.objective.l1_scale > 0.0
          and np.allclose(problem.q, 0.0))
    if not ok:
        raise ValueError("expected blocks (least squares, l1) with q = 0")
    return b1.objective.smooth, b2.objective.l1_scale


class Admm2Lasso:
    """Classic two-block ADMM for ``0.5||Ax-b||^2 + lam||z||_1`` s.t. ``x = z``.

    Scaled-dual form with over-relaxation ``admm_step`` and penalty ``beta``;
    the shifted normal matrix is factored once.
    """

    def __init__(self, problem: Problem, params: BaselineParams):
        smooth, lam = _require_lasso_form(problem)
        self.problem = problem
        self.params = params
        self.lam = lam
        self._quad = CachedQuadSolver(smooth.A, smooth.b, sigma=params.beta)

    def step(self, state):
        x, z, u = state
        beta, alpha = self.params.beta, self.params.admm_step
        x_new = self._quad.solve_shifted(self._quad.atb + beta * (z - u))
        x_relaxed = alpha * x_new + (1.0 - alpha) * z
        z_new = soft_threshold(x_relaxed + u, self.lam / beta)
        u_new = u + x_relaxed - z_new
        return x_new, z_new, u_new

    def run(self, max_iters: int, stop_eps: float = 1e-8,
            stop_mode: str = "x_change"):
        d = self.problem.blocks[0].n
        state = (np.zeros(d), np.zeros(d), np.zeros(d))
        trace = Trace(initial_state=None, stop_mode=stop_mode, stop_eps=stop_eps)
        for t in range(1, max_iters + 1):
            prev = np.concatenate(state[:2])
            state = self.step(state)
            metrics = _metrics(t, self.problem, (state[0], state[1]), prev,
                               (0.0, 0.0))
            trace.metrics.append(metrics)
            if stop_mode != "max_iters" and check_stop(metrics, stop_eps, stop_mode):
                trace.converged = True
                break
        return state, trace

    def multiplier(self, state) -> np.ndarray:
        """Unscaled dual for the coupling ``x - z = 0`` (sign matching E1 = I)."""
        return self.params.beta * state[2]


def admm2_lasso_step(state, problem: Problem, params: BaselineParams,
                     solver: Optional[Admm2Lasso] = None):
    """Single two-block ADMM sweep; builds the factorization cache if needed."""
    if solver is None:
        solver = Admm2Lasso(problem, params)
    return solver.step(state)
