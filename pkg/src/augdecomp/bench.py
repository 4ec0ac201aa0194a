"""Benchmark instance generators, dataset I/O, and the experiment runner.

Every generator is a pure function of its dimensions and a 64-bit seed: the
random stream is a counter-based Philox generator and Gaussians are produced
by the Box-Muller transform over its uniforms, so repeat runs are
reproducible byte for byte.  The runner writes a trace CSV, a rate-report
JSON, and a run-summary JSON; the ``solve`` subcommand of the CLI drives it
from a JSON config or command-line flags.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import ada, baselines, diagnostics
from .block_solvers import build_block_solvers
from .inexact import InexactSchedule, iada_run
from .model import (BlockSpec, FunctionDescriptor, Problem, SmoothPart,
                    SolverParams, constraint_residual, objective)


class RandomStream:
    """Deterministic draws from a counter-based Philox stream.

    Gaussians come from the Box-Muller transform over the stream's uniforms;
    subsets are chosen by ranking uniforms, so every consumer depends only on
    the seed and the (fixed) order of calls.
    """

    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.Philox(seed))

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def gaussians(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        half = (n + 1) // 2
        u1 = self.uniforms(half)
        u2 = self.uniforms(half)
        r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], log is finite
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape)

    def index_subset(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), by ranking n uniforms."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        return np.argsort(self.uniforms(n), kind="stable")[:k]


# ---------------------------------------------------------------------------
# Instance generators


def gen_lasso(n: int, d: int, seed: int):
    """Random lasso instance in two-block form.

    ``A`` is n-by-d standard Gaussian; the ground truth has ``floor(0.05 d)``
    Gaussian nonzeros (at least one) at uniformly random positions;
    ``b = A x0 + noise`` with noise variance 1e-3, and the l1 weight is
    ``0.1 * ||A^T b||_inf``.  Returns ``(problem, x0)`` with blocks
    ``(least squares, l1)`` coupled by ``x - z = 0``.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rs = RandomStream(seed)
    A = rs.gaussians((n, d))
    nnz = max(1, int(math.floor(0.05 * d)))
    support = rs.index_subset(d, nnz)
    x0 = np.zeros(d)
    x0[support] = rs.gaussians(nnz)
    noise = math.sqrt(1e-3) * rs.gaussians(n)
    b = A @ x0 + noise
    lam = 0.1 * float(np.abs(A.T @ b).max())
    eye = np.eye(d)
    blocks = (
        BlockSpec(n=d, E=eye,
                  objective=FunctionDescriptor(smooth=SmoothPart("least_squares", A, b))),
        BlockSpec(n=d, E=-eye, objective=FunctionDescriptor(l1_scale=lam)),
    )
    return Problem(blocks=blocks, q=np.zeros(d)), x0


def gen_exchange(K: int, n: int, p: int, seed: int):
    """Random exchange instance with known optimum and optimal value 0.

    Draws ``x*_1..x*_{K-1}`` standard Gaussian and sets
    ``x*_K = -sum_{k<K} x*_k``; each block cost is
    ``0.5 ||A_k x_k - A_k x*_k||^2`` with Gaussian p-by-n ``A_k``, so ``x*``
    is feasible for ``sum_k x_k = 0`` and attains objective zero.  Returns
    ``(problem, x_star_blocks)``.
    """
    if K < 2:
        raise ValueError("need at least two blocks")
    rs = RandomStream(seed)
    x_star = [rs.gaussians(n) for _ in range(K - 1)]
    x_star.append(-np.sum(x_star, axis=0))
    eye = np.eye(n)
    blocks = []
    for k in range(K):
        A = rs.gaussians((p, n))
        b = A @ x_star[k]
        blocks.append(BlockSpec(
            n=n, E=eye,
            objective=FunctionDescriptor(smooth=SmoothPart("least_squares", A, b))))
    return Problem(blocks=tuple(blocks), q=np.zeros(n)), tuple(x_star)


def gen_logreg_data(n: int, d: int, seed: int):
    """Synthetic binary classification data for the consensus benchmark.

    Gaussian features, labels from the sign of a sparse linear model plus
    unit noise (ties resolved to +1).  Returns ``(A, labels)``.
    """
    rs = RandomStream(seed)
    A = rs.gaussians((n, d))
    nnz = max(1, d // 10)
    support = rs.index_subset(d, nnz)
    x_true = np.zeros(d)
    x_true[support] = rs.gaussians(nnz)
    margins = A @ x_true + rs.gaussians(n)
    labels = np.where(margins >= 0.0, 1.0, -1.0)
    return A, labels


# ---------------------------------------------------------------------------
# LIBSVM text format


def load_libsvm(path):
    """Read a LIBSVM text file into ``(csr_matrix, labels, n, d)``.

    One sample per line, ``label idx:val ...`` with 1-based strictly
    increasing indices; labels are coerced to +1 for positive values and -1
    otherwise.  Malformed lines report their line number.
    """
    data, indices, indptr, labels = [], [], [0], []
    d = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks:
                continue
            try:
                raw = float(toks[0])
            except ValueError:
                raise ValueError(f"line {lineno}: label {toks[0]!r} is not numeric")
            labels.append(1.0 if raw > 0 else -1.0)
            prev = 0
            for tok in toks[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: malformed entry {tok!r}")
                if idx <= prev:
                    raise ValueError(
                        f"line {lineno}: index {idx} not strictly increasing")
                prev = idx
                indices.append(idx - 1)
                data.append(val)
            d = max(d, prev)
            indptr.append(len(data))
    if not labels:
        raise ValueError(f"{path}: empty LIBSVM file")
    X = sp.csr_matrix((data, indices, indptr), shape=(len(labels), d))
    return X, np.asarray(labels), len(labels), d


def write_libsvm(path, X, labels):
    """Write ``(X, labels)`` in LIBSVM text format, 17 significant digits."""
    X = sp.csr_matrix(X)
    X.eliminate_zeros()
    with open(path, "w") as fh:
        for i in range(X.shape[0]):
            row = X.getrow(i)
            entries = " ".join(f"{j + 1}:{v:.17g}"
                               for j, v in zip(row.indices, row.data))
            label = f"{labels[i]:.17g}"
            fh.write(f"{label} {entries}\n" if entries else f"{label}\n")


def partition_rows(A, b, N: int):
    """Split ``(A, b)`` into N contiguous row blocks of near-equal size.

    Block sizes differ by at most one (the larger ones first); vertical
    concatenation of the pieces reproduces the inputs exactly.
    """
    n = A.shape[0]
    if N < 1 or N > n:
        raise ValueError(f"need 1 <= N <= {n} row blocks")
    bounds = np.array_split(np.arange(n), N)
    return [(A[idx[0]:idx[-1] + 1], b[idx[0]:idx[-1] + 1]) for idx in bounds]


def build_logreg_consensus(row_blocks, lam: float) -> Problem:
    """Consensus formulation of l1-regularized logistic regression.

    Blocks 1..N carry the logistic losses of their data rows with local
    copies ``x_i``; block N+1 carries ``lam * ||z||_1``; the coupling stacks
    ``x_i - z = 0`` for every i, so the constraint dimension is ``N * d``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    N = len(row_blocks)
    if N < 1:
        raise ValueError("need at least one row block")
    d = row_blocks[0][0].shape[1]
    m = N * d
    eye = sp.identity(d, format="csr")
    blocks = []
    for i, (A_i, b_i) in enumerate(row_blocks):
        if A_i.shape[0] == 0:
            raise ValueError(f"row block {i} is empty")
        rows = [sp.csr_matrix((d, d))] * N
        rows[i] = eye
        E_i = sp.vstack(rows, format="csr")
        blocks.append(BlockSpec(
            n=d, E=E_i,
            objective=FunctionDescriptor(smooth=SmoothPart("logistic", A_i, b_i))))
    E_z = -sp.vstack([eye] * N, format="csr")
    blocks.append(BlockSpec(n=d, E=E_z, objective=FunctionDescriptor(l1_scale=lam)))
    return Problem(blocks=tuple(blocks), q=np.zeros(m))


def consensus_ratio(x_blocks) -> float:
    """Termination statistic ``sum_i ||x_i - z|| / (N ||z||)``; z is the last block."""
    z = x_blocks[-1]
    locals_ = x_blocks[:-1]
    z_norm = float(np.linalg.norm(z))
    if z_norm == 0.0:
        return math.inf
    return sum(float(np.linalg.norm(xi - z)) for xi in locals_) \
        / (len(locals_) * z_norm)


def consensus_objective(problem: Problem, z: np.ndarray) -> float:
    """Full single-variable objective ``sum_i loss_i(z) + lam ||z||_1``."""
    val = 0.0
    for blk in problem.blocks[:-1]:
        val += blk.objective.smooth.value(z)
    return val + problem.blocks[-1].objective.l1_scale * float(np.abs(z).sum())


# ---------------------------------------------------------------------------
# Experiment configuration and runner


_EXPERIMENTS = ("lasso", "exchange", "logreg")
_SOLVERS = ("ada", "iada", "vsadmm", "proxjadmm", "admm2")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one benchmark run; JSON configs mirror the fields."""

    experiment: str = "lasso"
    solver: str = "ada"
    seed: int = 1
    # lasso: (n, d); exchange: (blocks, n, p); logreg: (n, d, partitions, lam)
    n: int = 200
    d: int = 800
    blocks: int = 5
    p: int = 80
    partitions: int = 4
    lam: float = 0.1
    data_path: str | None = None
    rho: float = 10.0
    c: float = 10.0
    max_iters: int = 2000
    stop_eps: float = 1e-8
    stop_mode: str = "x_change"
    criterion: str = "criterion_A"
    eps0: float = 1.0
    gamma: float = 1.5
    beta: float = 1.0
    gamma_damp: float = 1.0
    admm_step: float = 1.618
    out: str = "."
    full_diagnostics: bool = False

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.solver not in _SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        for name in ("n", "d", "blocks", "p", "partitions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def build_instance(config: ExperimentConfig):
    """Produce the Problem for a config (plus the generator's side info)."""
    if config.experiment == "lasso":
        return gen_lasso(config.n, config.d, config.seed)
    if config.experiment == "exchange":
        return gen_exchange(config.blocks, config.n, config.p, config.seed)
    if config.data_path is not None:
        X, labels, _, _ = load_libsvm(config.data_path)
    else:
        X, labels = gen_logreg_data(config.n, config.d, config.seed)
    row_blocks = partition_rows(X, labels, config.partitions)
    return build_logreg_consensus(row_blocks, config.lam), None


def _solver_params(config: ExperimentConfig) -> SolverParams:
    return SolverParams(rho=config.rho, c=config.c,
                        max_iters=config.max_iters, stop_eps=config.stop_eps)


def _consensus_stop(problem: Problem, f_star: float,
                    ratio_tol: float = 1e-6, gap_tol: float = 1e-10):
    """Stop rule: consensus ratio and relative objective gap both small."""

    def stop(state, metrics):
        z = state.x[-1]
        if consensus_ratio(state.x) > ratio_tol:
            return False
        gap = abs(consensus_objective(problem, z) - f_star) / max(1.0, abs(f_star))
        return gap <= gap_tol

    return stop


def reference_state(problem: Problem, params: SolverParams,
                    schedule: InexactSchedule | None = None,
                    eps: float = 1e-12, max_iters: int = 20000):
    """High-accuracy oracle: the same configuration run to ``eps`` x-change.

    Solver-generated rather than ground truth; its accuracy bounds how small
    a tolerance downstream comparisons may claim.
    """
    tight = replace(params, stop_eps=eps, max_iters=max_iters)
    if schedule is None or schedule.kind == "exact":
        solvers = build_block_solvers(problem, tight)
        final, _ = ada.run(problem, tight, solvers, stop_mode="x_change",
                           record_states=False)
    else:
        solvers = build_block_solvers(problem, tight, schedule)
        final, _ = iada_run(problem, tight, schedule, solvers,
                            stop_mode="x_change", record_states=False)
    return final


def run_experiment(config: ExperimentConfig) -> int:
    """Generate, solve, and write artifacts; 0 on convergence, 2 otherwise.

    Artifacts under ``config.out``: ``trace.csv`` (engine schema),
    ``rate_report.json``, and ``summary.json`` with the headline numbers.
    """
    t_start = time.perf_counter()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    problem, _ = build_instance(config)
    params = _solver_params(config)

    stop_mode = config.stop_mode
    schedule = None
    reference = None
    if config.solver == "iada":
        schedule = InexactSchedule.for_problem(
            problem, kind=config.criterion, eps0=config.eps0, gamma=config.gamma)
    if stop_mode == "consensus":
        if config.experiment != "logreg":
            raise ValueError("consensus stop mode applies to the logreg experiment")
        ref_sched = schedule or InexactSchedule.for_problem(problem)
        reference = reference_state(problem, params, ref_sched,
                                    max_iters=max(config.max_iters, 5000))
        f_star = consensus_objective(problem, reference.x[-1])
        stop_mode = _consensus_stop(problem, f_star)

    include_certs = False
    final_x = None
    multiplier = None
    if config.solver in ("ada", "iada"):
        record = True
        if config.solver == "ada":
            solvers = build_block_solvers(problem, params)
            final, trace = ada.run(problem, params, solvers, stop_mode=stop_mode,
                                   record_states=record)
        else:
            solvers = build_block_solvers(problem, params, schedule)
            final, trace = iada_run(problem, params, schedule, solvers,
                                    stop_mode=stop_mode, record_states=record)
            include_certs = True
        final_x = final.x
        multiplier = final.zeta_bar
        if config.full_diagnostics and reference is None:
            reference = reference_state(problem, params, schedule)
        report = diagnostics.rate_report(
            trace, problem, params.rho, params.c, reference=reference,
            exact_engine=(config.solver == "ada"
                          or (schedule is not None and schedule.kind == "exact")))
    else:
        bparams = baselines.BaselineParams(beta=config.beta,
                                           gamma_damp=config.gamma_damp,
                                           admm_step=config.admm_step)
        if config.solver == "vsadmm":
            state, trace = baselines.vsadmm_run(problem, bparams, config.max_iters,
                                                config.stop_eps, stop_mode)
            final_x = state[1]
            multiplier = state[2].mean(axis=0)
        elif config.solver == "proxjadmm":
            state, trace = baselines.prox_jadmm_run(problem, bparams,
                                                    config.max_iters,
                                                    config.stop_eps, stop_mode)
            final_x = state[0]
            multiplier = -state[1]
        else:
            solver = baselines.Admm2Lasso(problem, bparams)
            state, trace = solver.run(config.max_iters, config.stop_eps, stop_mode)
            final_x = (state[0], state[1])
            multiplier = solver.multiplier(state)
        report = diagnostics.RateReport()

    trace.to_csv(out / "trace.csv", include_certs=include_certs)
    report.to_json(out / "rate_report.json")
    summary = {
        "experiment": config.experiment,
        "solver": config.solver,
        "seed": config.seed,
        "iterations": len(trace),
        "converged": bool(trace.converged),
        "objective": objective(final_x, problem),
        "residual_norm": float(np.linalg.norm(constraint_residual(final_x, problem))),
        "kkt_residual": diagnostics.kkt_residual(final_x, multiplier, problem),
        "wall_time_s": time.perf_counter() - t_start,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return 0 if trace.converged else 2


# ---------------------------------------------------------------------------
# CLI


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="augdecomp",
        description="Benchmark runner for the decomposition solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run one experiment and write artifacts")
    solve.add_argument("--config", type=str, default=None,
                       help="JSON file mirroring ExperimentConfig")
    solve.add_argument("--experiment", choices=_EXPERIMENTS)
    solve.add_argument("--solver", choices=_SOLVERS)
    solve.add_argument("--rho", type=float)
    solve.add_argument("--c", type=float)
    solve.add_argument("--gamma", type=float)
    solve.add_argument("--eps0", type=float)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--max-iters", type=int, dest="max_iters")
    solve.add_argument("--stop-eps", type=float, dest="stop_eps")
    solve.add_argument("--stop-mode", dest="stop_mode",
                       choices=("x_change", "feasibility", "max_iters", "consensus"))
    solve.add_argument("--out", type=str)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = (ExperimentConfig.from_json(args.config)
                  if args.config else ExperimentConfig())
        overrides = {name: getattr(args, name)
                     for name in ("experiment", "solver", "rho", "c", "gamma",
                                  "eps0", "seed", "max_iters", "stop_eps",
                                  "stop_mode", "out")
                     if getattr(args, name) is not None}
        if overrides:
            config = replace(config, **overrides)
        return run_experiment(config)
    except Exception as err:  # noqa: BLE001 -- CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
