"""Projected line-search iteration loop.

Each step moves along the ray X_k - tau * H_k, projects back onto the
manifold, and records a per-iteration trace. Stepsizes come from monotone
Armijo backtracking, its nonmonotone reference variant, or a fixed value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .directions import DirectionBuilder
from .manifolds import ManifoldPoint
from .stepsizes import (
    ArmijoParams,
    NonDescentError,
    NonmonotoneState,
    adapt_trial,
    armijo_search,
    nonmonotone_search,
)

CONVERGED = "converged"
MAX_ITER = "max_iter"
MAX_TIME = "max_time"
ABORTED = "aborted"

STEPSIZE_MODES = ("armijo", "nonmonotone", "fixed")


@dataclass(frozen=True)
class SolverConfig:
    """Direction spec plus stepsize mode and stopping rules.

    ``stepsize`` is one of "armijo", "nonmonotone", "fixed"; the fixed mode
    requires ``tau_fixed``. Defaults: gradient-norm tolerance 1e-4, at most
    1e4 iterations, 5 s wall clock.
    """

    direction: object
    stepsize: str = "armijo"
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    eta: float = 0.1
    tau_fixed: float | None = None
    tol_gradnorm: float = 1e-4
    max_iter: int = 10_000
    max_time: float = 5.0
    keep_iterates: bool = False

    def __post_init__(self):
        if self.stepsize not in STEPSIZE_MODES:
            raise ValueError(f"stepsize must be one of {STEPSIZE_MODES}")
        if self.stepsize == "fixed" and (self.tau_fixed is None or self.tau_fixed <= 0):
            raise ValueError("fixed stepsize mode needs tau_fixed > 0")


@dataclass(frozen=True)
class TraceRow:
    k: int
    f: float
    gradnorm: float
    tau: float          # nan on the terminal row
    backtracks: int
    c: float            # nonmonotone reference; nan for other modes


@dataclass(eq=False)
class RunRecord:
    rows: list
    status: str
    wall_time: float
    final_point: ManifoldPoint
    message: str = ""
    iterates: list | None = None

    @property
    def n_iter(self):
        return len(self.rows) - 1

    @property
    def f_final(self):
        return self.rows[-1].f

    @property
    def gradnorm_final(self):
        return self.rows[-1].gradnorm

    @property
    def f_trace(self):
        return np.array([r.f for r in self.rows])

    @property
    def gradnorm_trace(self):
        return np.array([r.gradnorm for r in self.rows])

    @property
    def c_trace(self):
        return np.array([r.c for r in self.rows])


def solve(problem, x0, config, seed=0):
    """Run the projected line search from a feasible start.

    Deterministic given (problem, x0, config, seed): the seed only feeds
    the direction builder's shift-matrix draw. Returns a RunRecord whose
    rows cover every iterate from k = 0; row k carries the stepsize taken
    *from* iterate k (nan on the terminal row).
    """
    manifold = problem.manifold
    x = x0 if isinstance(x0, ManifoldPoint) else ManifoldPoint(manifold, x0)
    builder = DirectionBuilder(config.direction, manifold, seed)

    nonmono = config.stepsize == "nonmonotone"
    state = None
    trial = config.armijo.trial0
    rows = []
    iterates = [x.value.copy()] if config.keep_iterates else None

    start = time.perf_counter()
    f = float(problem.cost(x.value))
    status = MAX_ITER
    message = ""

    k = 0
    while True:
        if not math.isfinite(f):
            status, message = ABORTED, f"non-finite cost at iteration {k}"
            rows.append(TraceRow(k, f, math.nan, math.nan, 0, math.nan))
            break
        egrad = problem.egrad(x.value)
        if not np.all(np.isfinite(egrad)):
            status, message = ABORTED, f"non-finite gradient at iteration {k}"
            rows.append(TraceRow(k, f, math.nan, math.nan, 0, math.nan))
            break
        rgrad = manifold.riemannian_gradient(x.value, egrad)
        gradnorm = float(np.linalg.norm(rgrad))

        if nonmono and state is None:
            state = NonmonotoneState.start(f, config.eta)
        c_val = state.c if nonmono else math.nan

        if gradnorm < config.tol_gradnorm:
            status = CONVERGED
            rows.append(TraceRow(k, f, gradnorm, math.nan, 0, c_val))
            break
        if k >= config.max_iter:
            status = MAX_ITER
            rows.append(TraceRow(k, f, gradnorm, math.nan, 0, c_val))
            break
        if time.perf_counter() - start > config.max_time:
            status = MAX_TIME
            rows.append(TraceRow(k, f, gradnorm, math.nan, 0, c_val))
            break

        direction = builder.build(x, egrad, rgrad)
        try:
            if config.stepsize == "armijo":
                out = armijo_search(x, f, direction, rgrad, problem.cost,
                                    config.armijo, trial)
                trial = adapt_trial(trial, out.backtracks > 0, config.armijo.trial0,
                                    config.armijo.trial_lo, config.armijo.trial_hi)
            elif nonmono:
                out, state = nonmonotone_search(x, direction, rgrad, problem.cost,
                                                config.armijo, trial, state)
                trial = adapt_trial(trial, out.backtracks > 0, config.armijo.trial0,
                                    config.armijo.trial_lo, config.armijo.trial_hi)
            else:
                nxt = manifold.project(x.value - config.tau_fixed * direction.full).point
                out = _FixedOutcome(config.tau_fixed, nxt, float(problem.cost(nxt.value)))
        except NonDescentError as err:
            status, message = ABORTED, str(err)
            rows.append(TraceRow(k, f, gradnorm, math.nan, 0, c_val))
            break

        rows.append(TraceRow(k, f, gradnorm, out.tau, out.backtracks, c_val))
        x = out.next_point
        f = out.f_next
        if iterates is not None:
            iterates.append(x.value.copy())
        k += 1

    wall = time.perf_counter() - start
    return RunRecord(rows, status, wall, x, message, iterates)


class _FixedOutcome:
    backtracks = 0
    exhausted = False

    def __init__(self, tau, next_point, f_next):
        self.tau = tau
        self.next_point = next_point
        self.f_next = f_next


@dataclass(frozen=True)
class ComplexityReport:
    """Running-minimum gradient-norm decay fitted against iteration count."""

    running_min: np.ndarray
    fitted_exponent: float
    envelope_constant: float
    sum_gradnorm_sq: float
    f_gap: float | None


def complexity_diagnostic(record, fstar=None):
    """Fit the decay of min_{j<=k} ||grad f(X_j)|| against (k+1).

    ``fitted_exponent`` is the least-squares slope of log running-min versus
    log (k+1); ``envelope_constant`` is the smallest C with
    running_min_k <= C / sqrt(k+1) on the whole trace.
    """
    gn = record.gradnorm_trace
    running_min = np.minimum.accumulate(gn)
    ks = np.arange(1, len(gn) + 1, dtype=float)
    mask = running_min > 0
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(ks[mask]), np.log(running_min[mask]), 1)[0])
    else:
        slope = -math.inf
    envelope = float(np.max(running_min * np.sqrt(ks)))
    f_gap = None if fstar is None else float(record.rows[0].f - fstar)
    return ComplexityReport(running_min, slope, envelope, float(np.sum(gn * gn)), f_gap)
