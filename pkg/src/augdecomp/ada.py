"""Exact augmented decomposition engine.

One outer iteration solves the K proximal block subproblems, forms the
per-block multiplier estimates ``eta``, averages them into the common value
``zeta_bar``, and moves the lifted splitting variables ``w`` and the running
multipliers ``y``:

    x_k   <- argmin  f_k(x_k) + (rho/4)*||E_k x_k - q_k - w_k + (2/rho) y_k||^2
                     + (1/2c)*||x_k - x_k_prev||^2
    eta_k <- y_k + (rho/2) * (E_k x_k - q_k - w_k)
    zeta  <- mean_k eta_k
    w_k   <- w_k + (eta_k - zeta) / rho
    y_k   <- (eta_k + zeta) / 2

with ``q_k = q`` for the last block and zero otherwise.  The increments
``eta_k - zeta`` sum to zero by construction, so ``w`` stays in the zero-sum
subspace; the tiny floating-point drift is removed and recorded each step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .block_solvers import BlockSolveError
from .model import (IterateState, Problem, SolverParams, constraint_residual,
                    make_initial_state, objective, state_g_dist_sq)

STOP_MODES = ("x_change", "feasibility", "max_iters")


@dataclass(frozen=True)
class StepMetrics:
    """Per-iteration diagnostics recorded by the engines."""

    iter: int
    objective: float
    constraint_residual_norm: float
    delta_g_norm_sq: float
    x_rel_change: float
    feas_rel: float
    per_block_cert: tuple
    inner_iters_total: int = 0
    w_drift: float = 0.0


@dataclass
class Trace:
    """Recorded run: one ``StepMetrics`` per iteration plus optional states.

    ``states[i]`` is the iterate *after* step ``i+1``; ``initial_state`` is
    the starting point, so ergodic and distance diagnostics can reconstruct
    the full trajectory.
    """

    initial_state: IterateState
    metrics: list = field(default_factory=list)
    states: Optional[list] = None
    converged: bool = False
    stop_mode: str = "max_iters"
    stop_eps: float = 0.0

    def __len__(self):
        return len(self.metrics)

    def x_iterates(self):
        if self.states is None:
            raise ValueError("trace was recorded without states")
        return [s.x for s in self.states]

    def delta_g_sq(self) -> np.ndarray:
        return np.array([m.delta_g_norm_sq for m in self.metrics])

    def objectives(self) -> np.ndarray:
        return np.array([m.objective for m in self.metrics])

    def to_csv(self, path, include_certs: bool = False):
        """Write the metrics table; 17 significant digits, '.' decimal point."""
        fmt = lambda v: f"{v:.17g}"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["iter", "objective", "residual", "delta_g", "x_rel", "feas_rel"]
            if include_certs:
                K = len(self.metrics[0].per_block_cert) if self.metrics \
                    else self.initial_state.num_blocks
                header += [f"cert_{k + 1}" for k in range(K)] + ["inner_iters_total"]
            writer.writerow(header)
            for m in self.metrics:
                row = [m.iter, fmt(m.objective), fmt(m.constraint_residual_norm),
                       fmt(m.delta_g_norm_sq), fmt(m.x_rel_change), fmt(m.feas_rel)]
                if include_certs:
                    row += [fmt(cb) for cb in m.per_block_cert] + [m.inner_iters_total]
                writer.writerow(row)


def phi_value(k: int, x_k: np.ndarray, state: IterateState,
              problem: Problem, params: SolverParams) -> float:
    """Block subproblem objective at ``x_k`` (0-based block index).

    ``f_k(x_k) + (rho/4)*||E_k x_k - q_k - w_k + (2/rho) y_k||^2
    + (1/2c)*||x_k - x_k_prev||^2``.
    """
    K = problem.num_blocks
    if not 0 <= k < K:
        raise IndexError(f"block index {k} out of range for K={K}")
    blk = problem.blocks[k]
    x_k = np.asarray(x_k, dtype=float)
    qk = problem.q if k == K - 1 else 0.0
    r = blk.E @ x_k - qk - state.w[k] + (2.0 / params.rho) * state.y[k]
    dx = x_k - state.x[k]
    return blk.objective.value(x_k) \
        + 0.25 * params.rho * float(r @ r) \
        + 0.5 / params.c * float(dx @ dx)


def _block_targets(state: IterateState, problem: Problem, rho: float) -> list:
    """Targets ``t_k = q_k + w_k - (2/rho) y_k`` so each subproblem penalizes
    ``||E_k x_k - t_k||^2``."""
    K = problem.num_blocks
    ts = []
    for k in range(K):
        t = state.w[k] - (2.0 / rho) * state.y[k]
        if k == K - 1:
            t = t + problem.q
        ts.append(t)
    return ts


def ada_step(state: IterateState, problem: Problem, params: SolverParams,
             solvers: Sequence, accept_rules: Optional[Sequence] = None,
             nu: int = 0):
    """One full sweep; returns ``(new_state, StepMetrics)``.

    ``accept_rules`` optionally supplies a per-block inexactness test
    ``accept(x, bound) -> bool`` forwarded to iterative solvers; with None
    every solver runs in its exact mode.  A solver failure aborts the step
    with the failing block index.
    """
    K, m = problem.num_blocks, problem.m
    rho, c = params.rho, params.c
    targets = _block_targets(state, problem, rho)

    new_x = []
    certs = []
    inner_total = 0
    for k in range(K):
        accept = accept_rules[k] if accept_rules is not None else None
        try:
            cert = solvers[k].solve(targets[k], state.x[k], accept=accept)
        except BlockSolveError as err:
            raise BlockSolveError(f"block {k}: {err}") from err
        new_x.append(np.asarray(cert.x, dtype=float))
        certs.append(cert.subgrad_bound)
        inner_total += cert.inner_iters

    eta_new = np.empty((K, m))
    for k in range(K):
        r_k = problem.blocks[k].E @ new_x[k] - state.w[k]
        if k == K - 1:
            r_k = r_k - problem.q
        eta_new[k] = state.y[k] + 0.5 * rho * r_k
    zeta_new = eta_new.mean(axis=0)
    w_new = state.w + (eta_new - zeta_new) / rho
    # cancel floating-point drift out of the zero-sum subspace
    drift = w_new.mean(axis=0)
    w_new = w_new - drift
    y_new = 0.5 * (eta_new + zeta_new)

    new_state = IterateState(w=w_new, x=tuple(new_x), eta=eta_new,
                             zeta_bar=zeta_new, y=y_new)

    resid = constraint_residual(new_x, problem)
    resid_norm = float(np.linalg.norm(resid))
    dx = np.concatenate([a - b for a, b in zip(state.x, new_x)])
    x_prev_norm = float(np.linalg.norm(state.x_stacked()))
    q_norm = float(np.linalg.norm(problem.q))
    metrics = StepMetrics(
        iter=nu,
        objective=objective(new_x, problem),
        constraint_residual_norm=resid_norm,
        delta_g_norm_sq=state_g_dist_sq(state, new_state, rho, c),
        x_rel_change=float(np.linalg.norm(dx)) / max(1.0, x_prev_norm),
        feas_rel=resid_norm / max(1.0, q_norm),
        per_block_cert=tuple(certs),
        inner_iters_total=inner_total,
        w_drift=float(np.linalg.norm(drift)) * np.sqrt(K),
    )
    return new_state, metrics


def check_stop(metrics: StepMetrics, eps: float, mode: str) -> bool:
    """Relative x-change or relative feasibility test; ``max_iters`` never stops."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mode == "x_change":
        return metrics.x_rel_change <= eps
    if mode == "feasibility":
        return metrics.feas_rel <= eps
    if mode == "max_iters":
        return False
    raise ValueError(f"unknown stop mode {mode!r}")


def run(problem: Problem, params: SolverParams, solvers: Sequence,
        initial: Optional[IterateState] = None, stop_mode="x_change",
        record_states: bool = True, accept_rule_factory: Optional[Callable] = None):
    """Iterate to the chosen criterion or the iteration cap.

    Parameters
    ----------
    problem, params, solvers
        Problem data, proximal coefficients / limits, one solver per block.
    initial : IterateState, optional
        Starting point; all zeros when omitted.
    stop_mode : str or callable
        One of ``"x_change"``, ``"feasibility"``, ``"max_iters"``, or a
        callable ``stop(state, metrics) -> bool`` for custom termination.
    record_states : bool, optional
        Keep every iterate in the trace (needed by the rate diagnostics).
    accept_rule_factory : callable, optional
        ``factory(nu, state) -> list of accept rules``; used by the inexact
        engine to install its per-iteration criteria.

    Returns
    -------
    (IterateState, Trace)
        Final state and the recorded trace; ``trace.converged`` is False when
        the iteration cap was reached without meeting the criterion.
    """
    state = make_initial_state(problem) if initial is None else initial
    custom_stop = callable(stop_mode)
    if not custom_stop and stop_mode not in STOP_MODES:
        raise ValueError(f"unknown stop mode {stop_mode!r}")
    trace = Trace(initial_state=state,
                  states=[] if record_states else None,
                  stop_mode=stop_mode if not custom_stop else "custom",
                  stop_eps=params.stop_eps)
    for t in range(1, params.max_iters + 1):
        rules = accept_rule_factory(t, state) if accept_rule_factory is not None else None
        state, metrics = ada_step(state, problem, params, solvers,
                                  accept_rules=rules, nu=t)
        trace.metrics.append(metrics)
        if record_states:
            trace.states.append(state)
        if custom_stop:
            if stop_mode(state, metrics):
                trace.converged = True
                break
        elif check_stop(metrics, params.stop_eps, stop_mode):
            trace.converged = True
            break
    return state, trace


def ergodic_average(x_iterates: Sequence, N: int):
    """Componentwise mean of the first ``N`` primal iterates.

    ``x_iterates`` is a sequence of per-iteration block tuples, iterate 1
    first; the averaged point carries the O(1/N) duality-gap guarantee.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > len(x_iterates):
        raise ValueError(f"N={N} exceeds trace length {len(x_iterates)}")
    K = len(x_iterates[0])
    acc = [np.zeros_like(np.asarray(x_iterates[0][k], dtype=float)) for k in range(K)]
    for xs in x_iterates[:N]:
        for k in range(K):
            acc[k] += xs[k]
    return tuple(a / N for a in acc)
