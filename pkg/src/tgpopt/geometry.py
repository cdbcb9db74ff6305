"""Empirical probes of the metric-projection geometry: boundedness of the
projected displacement, its lower bound, the quadratic normal defect
between manifold points, and the projected descent inequality whose fitted
constants feed the fixed-stepsize rule.

Fitted constants are empirical certificates (lower bounds on the true
constants), obtained as minimal envelopes over the sampled inequalities.
They grow monotonically with the sample count; stability under refinement
is the evidence that they converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .manifolds import Grassmann, Stiefel


@dataclass(frozen=True)
class ProbeReport:
    name: str
    manifold: str
    delta: float | None
    samples: int
    violations: int
    constants: dict = field(default_factory=dict)
    worst_ratio: float = math.nan


def stratified_magnitudes(reach, delta):
    """Magnitude grid for tangent/normal perturbations: small-step regimes
    plus a point halfway to the admissible normal radius."""
    return (1e-3, 1e-2, 0.1, 0.5 * (reach - delta))


def _sample_stream(manifold, delta, samples, seed):
    """Deterministic (X, V, W) stream; magnitudes cycle the stratified grid
    so a longer run extends a shorter one with the same seed."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x6E0]))
    mags = stratified_magnitudes(manifold.reach, delta)
    grid = [(mv, mw) for mv in mags for mw in mags]
    for i in range(samples):
        x = manifold.random_point(rng)
        v = manifold.random_tangent(rng, x)
        w = manifold.random_normal(rng, x)
        mv, mw = grid[i % len(grid)]
        nv, nw = np.linalg.norm(v), np.linalg.norm(w)
        v = v * (mv / nv) if nv > 0 else v
        w = w * (mw / nw) if nw > 0 else w
        yield x, v, w


def _min_envelope_pair(a, b, e):
    """Minimal (c1, c2) >= 0 with c1*a_i + c2*b_i >= e_i for all samples."""
    a, b, e = np.asarray(a), np.asarray(b), np.asarray(e)
    keep = (a > 0) | (b > 0)
    res = linprog(
        c=[1.0, 1.0],
        A_ub=np.column_stack([-a[keep], -b[keep]]),
        b_ub=-e[keep],
        bounds=[(0.0, None), (0.0, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"envelope fit failed: {res.message}")
    return float(res.x[0]), float(res.x[1])


def first_order_constant(manifold, delta):
    """Known displacement bound constant: 2/delta on Stiefel, 4 sqrt(p)/delta
    on Grassmann."""
    if isinstance(manifold, Stiefel):
        return 2.0 / delta
    if isinstance(manifold, Grassmann):
        return 4.0 * math.sqrt(manifold.p) / delta
    raise TypeError(f"unsupported manifold {manifold!r}")


def probe_first_order_bound(manifold, delta, samples, seed=0):
    """Check ||P(X+V+W) - X|| <= L0 ||V|| with the known L0 over stratified
    samples with ||W|| <= reach - delta."""
    l0 = first_order_constant(manifold, delta)
    violations = 0
    worst = 0.0
    fitted = 0.0
    for x, v, w in _sample_stream(manifold, delta, samples, seed):
        dist = np.linalg.norm(manifold.project(x + v + w).point.value - x)
        nv = np.linalg.norm(v)
        ratio = dist / (l0 * nv)
        worst = max(worst, ratio)
        fitted = max(fitted, dist / nv)
        if dist > l0 * nv:
            violations += 1
    return ProbeReport("first_order_bound", repr(manifold), delta, samples,
                       violations, {"L0": l0, "L0_fitted": fitted}, worst)


def probe_second_order_bound(manifold, delta, samples, seed=0):
    """Fit minimal (L1, L2) with ||P(X+V+W) - X - V|| <= L1 ||V||^2
    + L2 ||V|| ||W|| over stratified samples."""
    a, b, e = [], [], []
    for x, v, w in _sample_stream(manifold, delta, samples, seed):
        err = np.linalg.norm(manifold.project(x + v + w).point.value - x - v)
        nv, nw = np.linalg.norm(v), np.linalg.norm(w)
        a.append(nv * nv)
        b.append(nv * nw)
        e.append(err)
    l1, l2 = _min_envelope_pair(a, b, e)
    bound = l1 * np.asarray(a) + l2 * np.asarray(b)
    ok = bound > 0
    worst = float(np.max(np.asarray(e)[ok] / bound[ok]))
    violations = int(np.sum(np.asarray(e) > bound * (1 + 1e-9)))
    return ProbeReport("second_order_bound", repr(manifold), delta, samples,
                       violations, {"L1": l1, "L2": l2}, worst)


def probe_lower_bound(manifold, samples, seed=0):
    """Displacement lower bound. On Stiefel, counts violations of the sharp
    form ||P(X+V+W) - X|| >= ||V|| / ((r+1) ||X+V+W||); on both manifolds,
    fits the minimal L3 of the general form ||V|| / (1 + L3 ||V+W||)."""
    delta = 0.5 * manifold.reach
    violations = 0
    l3 = 0.0
    sharp = isinstance(manifold, Stiefel)
    worst = 0.0 if sharp else math.nan
    for x, v, w in _sample_stream(manifold, delta, samples, seed):
        y = x + v + w
        dist = np.linalg.norm(manifold.project(y).point.value - x)
        nv = np.linalg.norm(v)
        nvw = np.linalg.norm(v + w)
        if dist > 0:
            l3 = max(l3, (nv / dist - 1.0) / nvw)
        if sharp:
            bound = nv / ((manifold.r + 1) * np.linalg.norm(y))
            if dist < bound * (1 - 1e-12):
                violations += 1
            worst = max(worst, bound / dist if dist > 0 else math.inf)
    constants = {"L3": l3}
    if sharp:
        constants["sharp_factor"] = manifold.r + 1
    return ProbeReport("lower_bound", repr(manifold), None, samples,
                       violations, constants, worst)


def probe_normal_quadratic(manifold, samples, seed=0):
    """Fit the minimal L4 with ||P_normal_x(x - y)|| <= L4 ||x - y||^2 over
    manifold point pairs, half of them near-coincident."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x6E1]))
    near_mags = (1e-3, 1e-2, 0.1, 0.5)
    l4 = 0.0
    count = 0
    for i in range(samples):
        x = manifold.random_point(rng)
        if i % 2 == 0:
            y = manifold.random_point(rng)
        else:
            step = manifold.random_tangent(rng, x)
            ns = np.linalg.norm(step)
            if ns == 0:
                continue
            step = step * (near_mags[(i // 2) % len(near_mags)] / ns)
            y = manifold.project(x + step).point.value
        diff = x - y
        nd = np.linalg.norm(diff)
        if nd == 0:
            continue
        defect = np.linalg.norm(manifold.project_normal(x, diff))
        l4 = max(l4, defect / (nd * nd))
        count += 1
    return ProbeReport("normal_quadratic", repr(manifold), None, count,
                       0, {"L4": l4}, 1.0)


def probe_normal_stability(manifold, samples, seed=0, tol=1e-10):
    """Exact-stability check: P(X + W) = X for normal W with
    ||W|| < reach."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x6E2]))
    violations = 0
    worst = 0.0
    for _ in range(samples):
        x = manifold.random_point(rng)
        w = manifold.random_normal(rng, x)
        nw = np.linalg.norm(w)
        if nw == 0:
            continue
        w = w * (rng.uniform(0.0, 1.0) * (manifold.reach - 1e-6) / nw)
        dist = np.linalg.norm(manifold.project(x + w).point.value - x)
        worst = max(worst, dist)
        if dist > tol:
            violations += 1
    return ProbeReport("normal_stability", repr(manifold), None, samples,
                       violations, {"tol": tol}, worst)


def probe_descent_inequality(manifold, problem, delta, samples, seed=0):
    """Fit minimal (Gamma1, Gamma2) with
    |f(P(X+V+W)) - f(X) - <grad f(X), V>| <= Gamma1 ||V||^2
    + Gamma2 ||grad f(X)|| ||V|| ||W||."""
    a, b, e = [], [], []
    for x, v, w in _sample_stream(manifold, delta, samples, seed):
        f_x = problem.cost(x)
        rgrad = manifold.riemannian_gradient(x, problem.egrad(x))
        z = manifold.project(x + v + w).point.value
        lhs = abs(problem.cost(z) - f_x - float(np.sum(rgrad * v)))
        nv, nw = np.linalg.norm(v), np.linalg.norm(w)
        a.append(nv * nv)
        b.append(np.linalg.norm(rgrad) * nv * nw)
        e.append(lhs)
    g1, g2 = _min_envelope_pair(a, b, e)
    bound = g1 * np.asarray(a) + g2 * np.asarray(b)
    ok = bound > 0
    worst = float(np.max(np.asarray(e)[ok] / bound[ok]))
    violations = int(np.sum(np.asarray(e) > bound * (1 + 1e-9)))
    return ProbeReport("descent_inequality", repr(manifold), delta, samples,
                       violations, {"Gamma1": g1, "Gamma2": g2}, worst)


def refinement_stability(probe, factor=4, **kwargs):
    """Run a probe at N and factor*N samples (same seed, nested stream) and
    report the relative change of each fitted constant."""
    small = probe(**kwargs)
    big_kwargs = dict(kwargs)
    big_kwargs["samples"] = kwargs["samples"] * factor
    big = probe(**big_kwargs)
    changes = {}
    for key, val in small.constants.items():
        ref = big.constants[key]
        denom = max(abs(val), abs(ref), 1e-30)
        changes[key] = abs(ref - val) / denom
    return small, big, changes


PROBES = {
    "first_order": probe_first_order_bound,
    "second_order": probe_second_order_bound,
    "lower": probe_lower_bound,
    "normal_quadratic": probe_normal_quadratic,
    "normal_stability": probe_normal_stability,
}
