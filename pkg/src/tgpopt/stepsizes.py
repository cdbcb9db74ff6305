"""Stepsize rules for the projected line search: monotone Armijo
backtracking, the nonmonotone variant driven by the (c, q) reference
recursion, the admissible fixed-stepsize interval, and the trial-stepsize
adaptation rule used by the benchmark experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifolds import ManifoldPoint


class NonDescentError(ValueError):
    """The search direction fails the descent certificate <grad f, H> > 0."""


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking parameters.

    ``trial0`` is the reference trial stepsize the adaptation rule caps at;
    ``trial_hi`` defaults to it. Backtracking evaluates trial * beta^i for
    i = 0..max_backtracks.
    """

    gamma: float = 0.5
    beta: float = 0.5
    trial0: float = 1.0
    trial_lo: float = 1e-10
    trial_hi: float | None = None
    max_backtracks: int = 10

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if self.trial_hi is None:
            object.__setattr__(self, "trial_hi", self.trial0)
        if not 0.0 < self.trial_lo <= self.trial_hi:
            raise ValueError("need 0 < trial_lo <= trial_hi")


@dataclass(frozen=True)
class NonmonotoneState:
    """Reference-value state (c, q) with mixing weight eta in [0, 1).

    c is a convex combination of the cost values seen so far; eta = 0
    collapses it to the plain Armijo reference f(X_k).
    """

    c: float
    q: float
    eta: float

    @classmethod
    def start(cls, f0, eta):
        if not 0.0 <= eta < 1.0:
            raise ValueError("eta must be in [0, 1)")
        return cls(c=float(f0), q=1.0, eta=float(eta))

    def advance(self, f_next):
        q_next = self.eta * self.q + 1.0
        c_next = (self.eta * self.q * self.c + f_next) / q_next
        return NonmonotoneState(c=c_next, q=q_next, eta=self.eta)


@dataclass(frozen=True, eq=False)
class StepsizeOutcome:
    tau: float
    backtracks: int
    next_point: ManifoldPoint
    f_next: float
    exhausted: bool = False


def _backtrack(x_point, direction, rgrad, cost, params, trial, reference):
    """Largest tau in {trial * beta^i} meeting the sufficient-decrease test
    f(P(X - tau H)) - reference <= -gamma * tau * <grad f, H>."""
    if not params.trial_lo <= trial <= params.trial_hi * (1 + 1e-12):
        raise ValueError(f"trial {trial} outside [{params.trial_lo}, {params.trial_hi}]")
    slope = float(np.sum(rgrad * direction.tangent))
    if not math.isfinite(slope) or slope <= 0.0:
        raise NonDescentError(f"<grad f, H> = {slope:.3e} is not positive")

    manifold = x_point.manifold
    x = x_point.value
    tau = trial
    candidate = None
    f_candidate = math.inf
    for i in range(params.max_backtracks + 1):
        candidate = manifold.project(x - tau * direction.full).point
        f_candidate = float(cost(candidate.value))
        if f_candidate - reference <= -params.gamma * tau * slope:
            return StepsizeOutcome(tau, i, candidate, f_candidate)
        if i < params.max_backtracks:
            tau *= params.beta
    return StepsizeOutcome(tau, params.max_backtracks, candidate, f_candidate, exhausted=True)


def armijo_search(x_point, f_x, direction, rgrad, cost, params, trial):
    """Monotone Armijo backtracking from the current cost value."""
    return _backtrack(x_point, direction, rgrad, cost, params, trial, float(f_x))


def nonmonotone_search(x_point, direction, rgrad, cost, params, trial, state):
    """Backtracking against the nonmonotone reference c; returns the outcome
    plus the state advanced by the (c, q) recursion."""
    outcome = _backtrack(x_point, direction, rgrad, cost, params, trial, state.c)
    return outcome, state.advance(outcome.f_next)


def fixed_stepsize_bound(upsilon, varpi, gamma1, gamma2, delta_hat_h, reach, delta):
    """Admissible fixed-stepsize interval (0, hi).

    hi = min((reach - delta)/D, upsilon / (gamma1 varpi^2 + gamma2 D varpi))
    for normal-component bound D > 0, degenerating to
    upsilon / (gamma1 varpi^2) when D = 0.
    """
    for name, val in (("upsilon", upsilon), ("varpi", varpi), ("gamma1", gamma1),
                      ("gamma2", gamma2)):
        if val <= 0.0:
            raise ValueError(f"{name} must be positive, got {val}")
    if delta_hat_h < 0.0:
        raise ValueError("delta_hat_h must be >= 0")
    if not 0.0 < delta <= reach:
        raise ValueError("delta must be in (0, reach]")
    if delta_hat_h == 0.0:
        return (0.0, upsilon / (gamma1 * varpi**2))
    hi = min(
        (reach - delta) / delta_hat_h,
        upsilon / (gamma1 * varpi**2 + gamma2 * delta_hat_h * varpi),
    )
    return (0.0, hi)


def adapt_trial(prev_trial, backtracked, trial0, trial_lo=1e-10, trial_hi=None):
    """Trial update: grow by 1.1 capped at trial0 after a clean accept,
    shrink by 0.9 after any backtracking; clamped to [trial_lo, trial_hi]."""
    if prev_trial <= 0.0:
        raise ValueError("prev_trial must be positive")
    if trial_hi is None:
        trial_hi = trial0
    nxt = 0.9 * prev_trial if backtracked else min(1.1 * prev_trial, trial0)
    return min(max(nxt, trial_lo), trial_hi)


def nonmonotone_eta_bound(q, c, f_next, k):
    """Post-hoc value of the eta_k cap used by the global-convergence
    analysis: 1 / (q ((c - f_next) (k+1)^4 - 1)).

    Diagnostic only: the cap references the cost of the *next* iterate, so
    it cannot drive the recursion. Returns inf when the denominator is not
    positive (the cap is vacuous there).
    """
    denom = q * ((c - f_next) * float(k + 1) ** 4 - 1.0)
    if denom <= 0.0:
        return math.inf
    return 1.0 / denom
