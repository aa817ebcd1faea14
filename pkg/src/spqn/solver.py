"""Solver drivers for smooth strongly-convex-strongly-concave saddle problems.

Three methods share one driver loop:

* ``mgsr1`` -- quasi-Newton steps preconditioned by an SPD approximation of
  the squared Hessian, refined each iteration by multiple greedy SR1
  updates plus a scaling correction for Hessian drift (MGSR1-SP).
* ``random_sr1`` -- the same scheme with random normal update directions
  instead of greedy coordinate picks.
* ``extragradient`` -- the classical first-order baseline on the monotone
  operator (grad_x f, -grad_y f).

Progress is measured by the Euclidean norm of the full gradient.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .greedy import ApproxState, SquaredHessian, gsr1, gsr1_n, random_sr1, scale_correction
from .linalg import DimensionMismatch, NotPositiveDefinite, solve_spd

CONVERGED = "Converged"
MAX_ITERS = "MaxIters"
DIVERGED = "Diverged"

# A gradient norm at or above this aborts the run as diverged.
DIVERGENCE_LIMIT = 1e12

METHODS = ("mgsr1", "extragradient", "random_sr1")


class NonFiniteIterate(ArithmeticError):
    """A step produced an iterate with inf or nan entries."""


class SaddleProblem:
    """Behavioral interface a saddle objective must provide.

    Subclasses set ``dim_x``, ``dim_y`` and the curvature constants
    ``mu`` (strong convexity/concavity modulus), ``lip_grad`` (gradient
    Lipschitz constant) and ``lip_hess`` (Hessian Lipschitz constant),
    and implement ``value``, ``gradient`` and ``hessian`` on the stacked
    variable z = [x; y].  ``hessian`` returns the full symmetric,
    generally indefinite matrix.  Instances are immutable after
    construction and safe to share across concurrent runs.
    """

    dim_x: int
    dim_y: int
    mu: float
    lip_grad: float
    lip_hess: float

    @property
    def dim(self) -> int:
        return self.dim_x + self.dim_y

    @property
    def kappa(self) -> float:
        if self.mu == 0:
            return math.inf
        return self.lip_grad / self.mu

    def value(self, z) -> float:
        raise NotImplementedError

    def gradient(self, z) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, z) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    ``alpha`` defaults to 1 for the quasi-Newton methods and to
    1 / lip_grad for extragradient when left as None.  ``n`` is the number
    of inner greedy updates per iteration; ``M`` overrides the drift
    correction coefficient (default derived from the problem constants).
    ``eta_tracking`` records the tightest factor eta with Q <= eta * H per
    iteration, an O(d^3) diagnostic.  ``timing`` enables per-step wall
    clock measurement; it is off by default so that traces are
    bit-reproducible.
    """

    method: str = "mgsr1"
    alpha: float | None = None
    n: int = 20
    M: float | None = None
    max_iters: int = 500
    tol: float = 1e-8
    seed: int = 0
    eta_tracking: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.alpha is not None and not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if self.M is not None and not (math.isfinite(self.M) and self.M >= 0):
            raise ValueError(f"M must be non-negative and finite, got {self.M}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be non-negative, got {self.max_iters}")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tol must be positive and finite, got {self.tol}")


@dataclass(frozen=True)
class IterationRecord:
    """One trace row: iterate index k, gradient norm, step norm, timing,
    cumulative skipped SR1 updates, and the optional eta diagnostic."""

    k: int
    grad_norm: float
    step_norm: float
    step_time_ms: float
    skipped_updates: int
    eta: float | None = None


@dataclass
class Trace:
    """Full run record: the config used, one record per visited iterate
    (contiguous from k = 0), and the terminal status."""

    config: SolverConfig
    records: list[IterationRecord] = field(default_factory=list)
    status: str = MAX_ITERS

    @property
    def iterations(self) -> int:
        return self.records[-1].k if self.records else 0

    @property
    def final_grad_norm(self) -> float:
        return self.records[-1].grad_norm if self.records else math.nan


def convergence_measure(g) -> float:
    """Euclidean norm of the gradient."""
    return float(np.linalg.norm(np.asarray(g, dtype=float)))


def default_M(problem: SaddleProblem) -> float:
    """Drift correction coefficient 2 kappa^2 lip_hess / lip_grad.

    Exactly zero for objectives with a constant Hessian (lip_hess = 0),
    e.g. quadratic saddles and the AUC surrogate.
    """
    if problem.lip_hess == 0.0:
        return 0.0
    return 2.0 * problem.kappa**2 * problem.lip_hess / problem.lip_grad


def initial_state(problem: SaddleProblem) -> ApproxState:
    """Starting approximation lip_grad^2 * I, an upper bound of the squared
    Hessian everywhere, so the ordering invariant holds from the start."""
    return ApproxState(q=problem.lip_grad**2 * np.eye(problem.dim))


def track_eta(q, h) -> float:
    """Smallest eta with Q <= eta * H: the top generalized eigenvalue of
    Q v = eta H v.  Diagnostic path, O(d^3)."""
    try:
        w = scipy.linalg.eigh(np.asarray(q, dtype=float), np.asarray(h, dtype=float),
                              eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return float(w[-1])


def _monotone_field(g: np.ndarray, dim_x: int) -> np.ndarray:
    """Operator (grad_x f, -grad_y f) whose root is the saddle point."""
    out = g.copy()
    out[dim_x:] = -out[dim_x:]
    return out


def _eg_step(problem, z, g, stepsize):
    half = z - stepsize * _monotone_field(g, problem.dim_x)
    return z - stepsize * _monotone_field(problem.gradient(half), problem.dim_x)


def extragradient_step(problem: SaddleProblem, z_k, stepsize: float) -> np.ndarray:
    """Half-step at z_k, corrected full step using the half-point field."""
    if stepsize <= 0:
        raise ValueError(f"stepsize must be positive, got {stepsize}")
    z_k = np.asarray(z_k, dtype=float)
    z_next = _eg_step(problem, z_k, problem.gradient(z_k), stepsize)
    if not np.all(np.isfinite(z_next)):
        raise NonFiniteIterate("extragradient step produced non-finite iterate")
    return z_next


def _qn_step(problem, z, g, lam, state, alpha, n_rounds, m_coef, rng, track, timing, k):
    """Shared body of the mgsr1 / random_sr1 iteration.

    Order per iteration: quasi-Newton move with the current Q, n inner SR1
    updates against the squared Hessian at z, drift correction by
    (1 + M r), then one SR1 update against the squared Hessian at the new
    iterate.  ``rng`` selects random directions when set, greedy otherwise.
    """
    t0 = time.perf_counter() if timing else 0.0
    base = problem.hessian(z)
    eta = track_eta(state.q, SquaredHessian(base).dense()) if track else None

    direction = solve_spd(state.refresh(), base @ g)
    z_next = z - alpha * direction
    if not np.all(np.isfinite(z_next)):
        raise NonFiniteIterate("quasi-Newton step produced non-finite iterate")

    h_here = SquaredHessian(base)
    if rng is None:
        gsr1_n(state, h_here, n_rounds)
    else:
        for _ in range(n_rounds):
            random_sr1(state, h_here, rng)

    r = float(np.linalg.norm(z_next - z))
    scale_correction(state, m_coef, r)

    h_next = SquaredHessian(problem.hessian(z_next))
    if rng is None:
        gsr1(state, h_next)
    else:
        random_sr1(state, h_next, rng)

    ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
    record = IterationRecord(k, lam, r, ms, state.skipped, eta)
    return z_next, record


def mgsr1_step(problem: SaddleProblem, z_k, state: ApproxState, cfg: SolverConfig):
    """One MGSR1-SP iteration; returns (z_next, state, record)."""
    z_k = np.asarray(z_k, dtype=float)
    g = problem.gradient(z_k)
    lam = convergence_measure(g)
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    m_coef = cfg.M if cfg.M is not None else default_M(problem)
    z_next, record = _qn_step(problem, z_k, g, lam, state, alpha, cfg.n, m_coef,
                              None, cfg.eta_tracking, cfg.timing, 0)
    return z_next, state, record


def random_sr1_step(problem: SaddleProblem, z_k, state: ApproxState, cfg: SolverConfig, rng):
    """One random-direction SR1 iteration; returns (z_next, state, record)."""
    z_k = np.asarray(z_k, dtype=float)
    g = problem.gradient(z_k)
    lam = convergence_measure(g)
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    m_coef = cfg.M if cfg.M is not None else default_M(problem)
    z_next, record = _qn_step(problem, z_k, g, lam, state, alpha, cfg.n, m_coef,
                              rng, cfg.eta_tracking, cfg.timing, 0)
    return z_next, state, record


def solve(problem: SaddleProblem, cfg: SolverConfig, z0) -> Trace:
    """Run the configured method from z0 until the gradient norm drops to
    cfg.tol, the iteration budget is exhausted, or the run diverges.

    Every visited iterate gets a record; the terminal record has step
    norm 0.  The run is strictly sequential and owns all mutable state.
    """
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (problem.dim,):
        raise DimensionMismatch(
            f"z0 shape {z.shape} does not match problem dimension {problem.dim}"
        )

    quasi_newton = cfg.method in ("mgsr1", "random_sr1")
    state = initial_state(problem) if quasi_newton else None
    rng = np.random.default_rng(cfg.seed) if cfg.method == "random_sr1" else None
    if quasi_newton:
        alpha = cfg.alpha if cfg.alpha is not None else 1.0
        m_coef = cfg.M if cfg.M is not None else default_M(problem)
    else:
        alpha = cfg.alpha if cfg.alpha is not None else 1.0 / problem.lip_grad
        m_coef = 0.0

    trace = Trace(config=cfg)

    def terminal_record(k, lam):
        skipped = state.skipped if state is not None else 0
        eta = None
        if cfg.eta_tracking and state is not None and math.isfinite(lam):
            eta = track_eta(state.q, SquaredHessian(problem.hessian(z)).dense())
        return IterationRecord(k, lam, 0.0, 0.0, skipped, eta)

    for k in range(cfg.max_iters + 1):
        g = problem.gradient(z)
        lam = convergence_measure(g)
        if not math.isfinite(lam) or lam >= DIVERGENCE_LIMIT:
            trace.records.append(IterationRecord(k, lam, 0.0, 0.0,
                                                 state.skipped if state else 0, None))
            trace.status = DIVERGED
            return trace
        if lam <= cfg.tol:
            trace.records.append(terminal_record(k, lam))
            trace.status = CONVERGED
            return trace
        if k == cfg.max_iters:
            trace.records.append(terminal_record(k, lam))
            trace.status = MAX_ITERS
            return trace

        try:
            if quasi_newton:
                z, record = _qn_step(problem, z, g, lam, state, alpha, cfg.n, m_coef,
                                     rng, cfg.eta_tracking, cfg.timing, k)
            else:
                t0 = time.perf_counter() if cfg.timing else 0.0
                z_next = _eg_step(problem, z, g, alpha)
                if not np.all(np.isfinite(z_next)):
                    raise NonFiniteIterate("extragradient step produced non-finite iterate")
                ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
                record = IterationRecord(k, lam, float(np.linalg.norm(z_next - z)), ms, 0, None)
                z = z_next
        except (NotPositiveDefinite, NonFiniteIterate):
            trace.records.append(IterationRecord(k, lam, 0.0, 0.0,
                                                 state.skipped if state else 0, None))
            trace.status = DIVERGED
            return trace
        trace.records.append(record)

    return trace
