"""Problem data, iterate state, and the block-sum geometry shared by all solvers.

A problem couples ``K`` variable blocks through a single linear constraint

    minimize    f_1(x_1) + ... + f_K(x_K)
    subject to  E_1 x_1 + ... + E_K x_K = q,    x_k in X_k,

where each ``f_k`` splits into a smooth loss composed with a matrix and an
optional l1 term.  The decomposition algorithms work on a lifted copy of the
constraint that lives in the zero-sum subspace ``W`` of stacked m-vectors and
its all-equal orthogonal complement; this module owns those projections and
the weighted norm used by every convergence statement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit


def _as_matrix(M):
    """Pass sparse matrices through, promote everything else to a float ndarray."""
    if sp.issparse(M):
        return M.tocsr()
    return np.asarray(M, dtype=float)


def _matvec(M, v):
    return M @ v


def _rmatvec(M, v):
    return M.T @ v


@dataclass(frozen=True)
class SmoothPart:
    """Smooth loss ``g(A x)`` of a block objective.

    Supported kinds:

    ``"least_squares"``
        ``g(u) = 0.5 * ||u - b||^2``.
    ``"logistic"``
        ``g(u) = sum_j log(1 + exp(-b_j u_j))`` with labels ``b_j`` in {-1,+1}.
    ``"quadratic"``
        ``g(u) = 0.5 * ||u||^2``.
    """

    kind: str
    A: object
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "A", _as_matrix(self.A))
        if self.kind not in ("least_squares", "logistic", "quadratic"):
            raise ValueError(f"unknown smooth kind {self.kind!r}")
        if self.kind in ("least_squares", "logistic"):
            if self.b is None:
                raise ValueError(f"{self.kind} requires a right-hand side / label vector")
            object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
            if self.b.shape[0] != self.A.shape[0]:
                raise ValueError("b length does not match the rows of A")
        if self.kind == "logistic" and not np.all(np.isin(self.b, (-1.0, 1.0))):
            raise ValueError("logistic labels must be +1/-1")

    def value(self, x: np.ndarray) -> float:
        u = _matvec(self.A, x)
        if self.kind == "least_squares":
            r = u - self.b
            return 0.5 * float(r @ r)
        if self.kind == "quadratic":
            return 0.5 * float(u @ u)
        # log(1 + exp(-b*u)) evaluated stably for large |u|
        return float(np.logaddexp(0.0, -self.b * u).sum())

    def gradient(self, x: np.ndarray) -> np.ndarray:
        u = _matvec(self.A, x)
        if self.kind == "least_squares":
            return _rmatvec(self.A, u - self.b)
        if self.kind == "quadratic":
            return _rmatvec(self.A, u)
        s = -self.b * expit(-self.b * u)
        return _rmatvec(self.A, s)


@dataclass(frozen=True)
class FunctionDescriptor:
    """Block objective ``f_k(x) = g_k(A_k x) + l1_scale * ||x||_1``.

    At least one of the two parts must be present (``smooth`` not None or
    ``l1_scale > 0``).
    """

    smooth: Optional[SmoothPart] = None
    l1_scale: float = 0.0

    def __post_init__(self):
        if self.l1_scale < 0:
            raise ValueError("l1_scale must be nonnegative")
        if self.smooth is None and self.l1_scale == 0.0:
            raise ValueError("block objective has neither a smooth nor an l1 part")

    def value(self, x: np.ndarray) -> float:
        v = self.smooth.value(x) if self.smooth is not None else 0.0
        if self.l1_scale > 0.0:
            v += self.l1_scale * float(np.abs(x).sum())
        return v

    def smooth_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the smooth part alone (zero vector if absent)."""
        if self.smooth is None:
            return np.zeros_like(x)
        return self.smooth.gradient(x)


@dataclass(frozen=True)
class BlockSpec:
    """One variable block: dimension, coupling matrix, objective, feasible set.

    ``bounds`` is either None (whole space) or a ``(lo, hi)`` pair of
    coordinatewise arrays, with -inf/+inf allowed.
    """

    n: int
    E: object
    objective: FunctionDescriptor
    bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "E", _as_matrix(self.E))
        if self.E.shape[1] != self.n:
            raise ValueError(f"E has {self.E.shape[1]} columns, block dimension is {self.n}")
        if self.bounds is not None:
            lo = np.asarray(self.bounds[0], dtype=float)
            hi = np.asarray(self.bounds[1], dtype=float)
            if lo.shape != (self.n,) or hi.shape != (self.n,):
                raise ValueError("box bounds must match the block dimension")
            finite = np.isfinite(lo) & np.isfinite(hi)
            if np.any(lo[finite] > hi[finite]):
                raise ValueError("box bounds must satisfy lo <= hi")
            object.__setattr__(self, "bounds", (lo, hi))

    @property
    def is_free(self) -> bool:
        return self.bounds is None

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        if self.bounds is None:
            return True
        lo, hi = self.bounds
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


@dataclass(frozen=True)
class Problem:
    """K >= 2 blocks coupled by ``sum_k E_k x_k = q``.

    The offset ``q`` is attached to the last block throughout; the lifted
    constraint for block K reads ``E_K x_K - q - w_K = 0``.
    """

    blocks: tuple
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if len(self.blocks) < 2:
            raise ValueError("need at least two blocks")
        m = self.q.shape[0]
        for k, blk in enumerate(self.blocks):
            if blk.E.shape[0] != m:
                raise ValueError(f"block {k}: E has {blk.E.shape[0]} rows, expected m={m}")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    def block_dims(self) -> tuple:
        return tuple(blk.n for blk in self.blocks)


@dataclass(frozen=True)
class SolverParams:
    """Proximal coefficients and run limits for the decomposition engines."""

    rho: float
    c: float
    max_iters: int = 1000
    stop_eps: float = 1e-8

    def __post_init__(self):
        if self.rho <= 0 or self.c <= 0:
            raise ValueError("rho and c must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.stop_eps <= 0:
            raise ValueError("stop_eps must be positive")


@dataclass(frozen=True)
class IterateState:
    """Full algorithm state ``(w, x, eta, zeta, y)``.

    ``w`` lives in the zero-sum subspace (components sum to zero); the
    all-equal multiplier block ``zeta`` is stored as its single common value
    ``zeta_bar`` so membership in the orthogonal complement is structural.
    States are replaced wholesale each iteration, never mutated.
    """

    w: np.ndarray          # (K, m)
    x: tuple               # K arrays of length n_k
    eta: np.ndarray        # (K, m)
    zeta_bar: np.ndarray   # (m,)
    y: np.ndarray          # (K, m)

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(np.asarray(xk, dtype=float) for xk in self.x))
        s = np.linalg.norm(self.w.sum(axis=0))
        if s > 1e-12 * (1.0 + np.linalg.norm(self.w)):
            raise ValueError("w components do not sum to zero")

    @property
    def num_blocks(self) -> int:
        return self.w.shape[0]

    def x_stacked(self) -> np.ndarray:
        return np.concatenate(self.x)


def make_initial_state(problem: Problem) -> IterateState:
    """All-zero starting point, the default for every benchmark run."""
    K, m = problem.num_blocks, problem.m
    return IterateState(
        w=np.zeros((K, m)),
        x=tuple(np.zeros(n) for n in problem.block_dims()),
        eta=np.zeros((K, m)),
        zeta_bar=np.zeros(m),
        y=np.zeros((K, m)),
    )


def saddle_state(problem: Problem, x: Sequence[np.ndarray],
                 y: np.ndarray) -> IterateState:
    """Assemble the full state corresponding to a primal-dual solution.

    For a feasible optimal ``x`` and its constraint multiplier ``y``, the
    lifted variables are ``w_k = E_k x_k - q_k`` (zero-sum by feasibility) and
    all multiplier copies equal ``y``; the result is a fixed point of the
    decomposition step.
    """
    K = problem.num_blocks
    x = tuple(np.asarray(xk, dtype=float) for xk in x)
    y = np.asarray(y, dtype=float)
    w = np.empty((K, problem.m))
    for k, (blk, xk) in enumerate(zip(problem.blocks, x)):
        w[k] = _matvec(blk.E, xk)
    w[K - 1] -= problem.q
    eta = np.tile(y, (K, 1))
    return IterateState(w=w, x=x, eta=eta, zeta_bar=y.copy(), y=eta.copy())


def _stack(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a K-tuple of equal-length vectors")
    return a


def project_onto_W(v) -> np.ndarray:
    """Project a K-tuple of m-vectors onto the zero-sum subspace.

    Returns ``v_k - mean_j v_j``; the components of the output sum to zero up
    to rounding.
    """
    a = _stack(v)
    return a - a.mean(axis=0)


def project_onto_Wperp(v) -> np.ndarray:
    """Common value of the projection onto the all-equal subspace.

    Returns the mean ``(1/K) sum_j v_j``; replicating it K times gives the
    actual projection.
    """
    a = _stack(v)
    return a.mean(axis=0)


def g_norm_sq(dw, dx, deta, dzeta, rho: float, c: float) -> float:
    """Squared weighted norm ``rho*||dw||^2 + ||dx||^2/c + (||deta||^2 + ||dzeta||^2)/rho``.

    This is the metric in which the decomposition iteration is a proximal
    step; all monotonicity and rate statements are phrased in it.
    """
    if rho <= 0 or c <= 0:
        raise ValueError("rho and c must be positive")
    sq = lambda parts: sum(float(np.asarray(p) @ np.asarray(p)) for p in parts)
    return rho * sq(dw) + sq(dx) / c + (sq(deta) + sq(dzeta)) / rho


def state_g_dist_sq(a: IterateState, b: IterateState, rho: float, c: float) -> float:
    """``g_norm_sq`` distance between two states; ``zeta_bar`` counts K times."""
    if rho <= 0 or c <= 0:
        raise ValueError("rho and c must be positive")
    K = a.num_blocks
    dw = a.w - b.w
    deta = a.eta - b.eta
    dz = a.zeta_bar - b.zeta_bar
    dx_sq = sum(float((xa - xb) @ (xa - xb)) for xa, xb in zip(a.x, b.x))
    return (
        rho * float((dw * dw).sum())
        + dx_sq / c
        + (float((deta * deta).sum()) + K * float(dz @ dz)) / rho
    )


def constraint_residual(x: Sequence[np.ndarray], problem: Problem) -> np.ndarray:
    """``sum_k E_k x_k - q``."""
    r = -problem.q.copy()
    for blk, xk in zip(problem.blocks, x):
        r += _matvec(blk.E, np.asarray(xk, dtype=float))
    return r


def objective(x: Sequence[np.ndarray], problem: Problem) -> float:
    """``sum_k f_k(x_k)``; assumes each ``x_k`` lies in its feasible box."""
    return sum(blk.objective.value(np.asarray(xk, dtype=float))
               for blk, xk in zip(problem.blocks, x))
