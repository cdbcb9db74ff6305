"""Search directions for projected line search: scaled Riemannian gradients
plus optional normal-space shifts.

A direction H splits as H = H_tangent + H_normal relative to the current
point. The tangent part of every supported family is L(X) grad f(X) R(X)
for symmetric scaling matrices L, R that preserve tangency; the normal part
is a shift a*X*S (Stiefel) and/or the Euclidean gradient's normal component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import rand_sym_with_spectrum, sym
from .manifolds import Grassmann, ManifoldPoint, Stiefel


class UnsupportedSpecError(ValueError):
    """Direction spec not applicable to the given manifold or parameters."""


# ---------------------------------------------------------------------------
# S policies (the symmetric shift matrix in a*X*S)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityS:
    """S = I_r at every iteration."""

    def sample(self, r, rng):
        return np.eye(r)


@dataclass(frozen=True)
class UniformSpectrumS:
    """Random symmetric S with eigenvalues uniform in [lo, hi], drawn once
    per solver run and reused for every iteration (fixed per instance)."""

    lo: float = 0.5
    hi: float = 1.5

    def sample(self, r, rng):
        return rand_sym_with_spectrum(r, self.lo, self.hi, rng)


def sample_s_matrix(policy, r, seed):
    """Draw the shift matrix an S policy produces for a given seed."""
    return policy.sample(r, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# Scaling families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StiefelScaling:
    """Left/right scaling on St(r, n):

        L(X) = I_n + mu * X E X^T + X_perp F X_perp^T,   R(X) = E,

    with E, F symmetric. Conjugation by the [X, X_perp] frame keeps tangent
    vectors tangent for any E, F, mu.
    """

    E: np.ndarray
    F: np.ndarray
    mu: float = 0.0

    def left(self, manifold, x):
        x_perp = manifold.orthonormal_complement(x)
        n = manifold.n
        left = np.eye(n) + self.mu * (x @ self.E @ x.T)
        if self.F.size:
            left = left + x_perp @ self.F @ x_perp.T
        return left

    def right(self, manifold, x):
        return self.E

    def gradient_equivalence_bounds(self):
        """Certified (lo, hi) with lo ||g|| <= ||L g R|| <= hi ||g|| for
        tangent g; lo > 0 certifies the direction is gradient-equivalent.
        """
        lam_e = np.linalg.eigvalsh(sym(self.E))
        inner = [np.min(np.linalg.eigvalsh(self.mu * sym(self.E)))]
        outer = [np.max(np.linalg.eigvalsh(self.mu * sym(self.E)))]
        if self.F.size:
            lam_f = np.linalg.eigvalsh(sym(self.F))
            inner.append(lam_f[0])
            outer.append(lam_f[-1])
        lo = (1.0 + min(inner)) * lam_e[0]
        hi = (1.0 + max(outer)) * lam_e[-1]
        return float(lo), float(hi)


@dataclass(frozen=True, eq=False)
class GrassmannScaling:
    """L(X) = R(X) = Q Diag(G1, G2) Q^T on Gr(p, n), where the columns of Q
    split into a basis of range(X) followed by its complement."""

    G1: np.ndarray
    G2: np.ndarray

    def _frame(self, x):
        from .linalg import sym_eig

        return sym_eig(x).eigenvectors

    def left(self, manifold, x):
        q = self._frame(x)
        p = manifold.p
        block = np.zeros((manifold.n, manifold.n))
        block[:p, :p] = sym(self.G1)
        block[p:, p:] = sym(self.G2)
        return q @ block @ q.T

    def right(self, manifold, x):
        return self.left(manifold, x)

    def gradient_equivalence_bounds(self):
        lam1 = np.linalg.eigvalsh(sym(self.G1))
        lam2 = np.linalg.eigvalsh(sym(self.G2))
        lo = min(lam1[0], lam2[0])
        hi = max(lam1[-1], lam2[-1])
        # lo <= 0 leaves the certificate vacuous; surface that as a
        # non-positive lower bound rather than squaring the sign away
        lo_bound = lo * lo if lo > 0 else lo
        return float(lo_bound), float(hi * hi)


@dataclass(frozen=True, eq=False)
class ExplicitScaling:
    """Fixed (L, R) pair, mainly for adversarial tangency tests."""

    L: np.ndarray
    R: np.ndarray

    def left(self, manifold, x):
        return self.L

    def right(self, manifold, x):
        return self.R


def check_tangent_preservation(scaling, manifold, x, trials=20, seed=0, tol=1e-8):
    """Empirically test whether V -> L V R maps the tangent space at x into
    itself, over `trials` random tangent vectors."""
    rng = np.random.default_rng(seed)
    left = scaling.left(manifold, x)
    right = scaling.right(manifold, x)
    for _ in range(trials):
        v = manifold.random_tangent(rng, x)
        if not manifold.is_tangent(x, left @ v @ right, tol):
            return False
    return True


def gradient_equivalence_bounds(scaling):
    """Eigenvalue-product bounds (lo, hi) certifying gradient equivalence.

    lo <= 0 means the family's certificate fails (flagged, not an error).
    """
    return scaling.gradient_equivalence_bounds()


# ---------------------------------------------------------------------------
# Direction specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rgd:
    """H = grad f(X): tangent-only steepest descent."""


@dataclass(frozen=True)
class Egp:
    """H = Euclidean gradient (classical gradient projection)."""


@dataclass(frozen=True)
class ShiftedPm:
    """Sphere-only H = egrad + (1 - s) x; with fixed stepsize 1 this is the
    shifted power method x+ = P(s x - egrad)."""

    s: float


@dataclass(frozen=True)
class DRho:
    """One-parameter tangent family interpolating Riemannian gradients under
    different metrics; rho = 1/4 recovers the Euclidean-metric gradient."""

    rho: float

    def __post_init__(self):
        if self.rho <= 0:
            raise UnsupportedSpecError("DRho needs rho > 0")


@dataclass(frozen=True)
class TgpR:
    """H = grad f(X) + a X S."""

    a: float
    s_policy: object = field(default_factory=UniformSpectrumS)


@dataclass(frozen=True)
class TgpE:
    """H = egrad f(X) + a X S."""

    a: float
    s_policy: object = field(default_factory=UniformSpectrumS)


@dataclass(frozen=True)
class TgpDE:
    """H = D_rho(X) + P_normal(egrad) + a X S."""

    rho: float
    a: float
    s_policy: object = field(default_factory=UniformSpectrumS)

    def __post_init__(self):
        if self.rho <= 0:
            raise UnsupportedSpecError("TgpDE needs rho > 0")


@dataclass(frozen=True, eq=False)
class TgpDF:
    """H = L grad f R + P_normal(egrad) + a X S with the Stiefel scaling
    family (E, F, mu)."""

    E: np.ndarray
    F: np.ndarray
    mu: float
    a: float
    s_policy: object = field(default_factory=UniformSpectrumS)


@dataclass(frozen=True)
class TgpAEigen:
    """H = L grad f with L = I + f_scale * X_perp ones X_perp^T; the non-zero
    F block lets iterates leave coordinate subspaces that trap RGD/EGP."""

    f_scale: float = 0.05


@dataclass(frozen=True, eq=False)
class General:
    """Explicit scaling family plus a declarative normal recipe."""

    scaling: object
    a: float = 0.0
    s_policy: object = field(default_factory=IdentityS)
    include_euclidean_normal: bool = False


DirectionSpec = (
    Rgd | Egp | ShiftedPm | DRho | TgpR | TgpE | TgpDE | TgpDF | TgpAEigen | General
)


@dataclass(frozen=True, eq=False)
class Direction:
    """A search direction with its tangent/normal split at a base point."""

    base: ManifoldPoint
    full: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray


def d_rho(manifold, x, egrad, rho):
    """The tangent direction egrad - X (2 rho egrad^T X + (1-2 rho) X^T egrad)."""
    if not isinstance(manifold, Stiefel):
        raise UnsupportedSpecError("DRho is defined on the Stiefel manifold")
    inner = 2.0 * rho * (egrad.T @ x) + (1.0 - 2.0 * rho) * (x.T @ egrad)
    return egrad - x @ inner


class DirectionBuilder:
    """Builds directions for one solver run.

    The shift matrix S is sampled once at construction (fixed per instance)
    so that every iteration of the run sees the same S.
    """

    def __init__(self, spec, manifold, seed=0):
        self.spec = spec
        self.manifold = manifold
        self._validate()
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x5D]))
        policy = getattr(spec, "s_policy", None)
        self.s_matrix = None
        if policy is not None and isinstance(manifold, Stiefel):
            self.s_matrix = policy.sample(manifold.r, rng)

    def _validate(self):
        spec, manifold = self.spec, self.manifold
        stiefel_only = (ShiftedPm, DRho, TgpR, TgpE, TgpDE, TgpDF, TgpAEigen)
        if isinstance(spec, stiefel_only) and not isinstance(manifold, Stiefel):
            raise UnsupportedSpecError(f"{type(spec).__name__} needs a Stiefel manifold")
        if isinstance(spec, ShiftedPm) and manifold.r != 1:
            raise UnsupportedSpecError("ShiftedPm is defined on the sphere St(1, n) only")
        if isinstance(spec, General) and spec.a != 0.0 and not isinstance(manifold, Stiefel):
            raise UnsupportedSpecError("the a*X*S normal shift is Stiefel-specific")

    def _shift(self, x):
        if self.s_matrix is None:
            return None
        return getattr(self.spec, "a", 0.0) * (x @ self.s_matrix)

    def build(self, point, egrad, rgrad=None):
        """Assemble the direction at a point given the Euclidean gradient."""
        manifold, spec = self.manifold, self.spec
        x = point.value if isinstance(point, ManifoldPoint) else np.asarray(point, float)
        if not isinstance(point, ManifoldPoint):
            point = ManifoldPoint(manifold, x)
        egrad = np.asarray(egrad, dtype=float)
        if rgrad is None:
            rgrad = manifold.riemannian_gradient(x, egrad)

        if isinstance(spec, Rgd):
            full = rgrad
        elif isinstance(spec, Egp):
            full = egrad
        elif isinstance(spec, ShiftedPm):
            full = egrad + (1.0 - spec.s) * x
        elif isinstance(spec, DRho):
            full = d_rho(manifold, x, egrad, spec.rho)
        elif isinstance(spec, TgpR):
            full = rgrad + self._shift(x)
        elif isinstance(spec, TgpE):
            full = egrad + self._shift(x)
        elif isinstance(spec, TgpDE):
            full = d_rho(manifold, x, egrad, spec.rho) + (egrad - rgrad) + self._shift(x)
        elif isinstance(spec, TgpDF):
            scaling = StiefelScaling(spec.E, spec.F, spec.mu)
            left = scaling.left(manifold, x)
            full = left @ rgrad @ scaling.right(manifold, x) + (egrad - rgrad) + self._shift(x)
        elif isinstance(spec, TgpAEigen):
            k = manifold.n - manifold.r
            scaling = StiefelScaling(np.eye(manifold.r), spec.f_scale * np.ones((k, k)), 0.0)
            full = scaling.left(manifold, x) @ rgrad @ scaling.right(manifold, x)
        elif isinstance(spec, General):
            left = spec.scaling.left(manifold, x)
            right = spec.scaling.right(manifold, x)
            full = left @ rgrad @ right
            if spec.include_euclidean_normal:
                full = full + (egrad - rgrad)
            shift = self._shift(x)
            if shift is not None:
                full = full + shift
        else:
            raise UnsupportedSpecError(f"unknown direction spec {spec!r}")

        tangent = manifold.project_tangent(x, full)
        return Direction(point, full, tangent, full - tangent)


def build_direction(spec, point, egrad, seed=0):
    """One-shot direction construction (samples S from the seed)."""
    return DirectionBuilder(spec, point.manifold, seed).build(point, egrad)
