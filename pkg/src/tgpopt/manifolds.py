"""Compact matrix manifolds: Stiefel (orthonormal frames) and Grassmann
(rank-p orthogonal projectors), with feasibility checks, tangent/normal
projections, Riemannian gradients and the metric projection onto the
manifold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import polar, sym, sym_eig

FEAS_TOL = 1e-8
# absolute eigenvalue-gap threshold below which the Grassmann projection
# is flagged non-unique
TIE_TOL = 1e-12


class FeasibilityError(ValueError):
    """Raised when a matrix does not satisfy a manifold's point invariant."""


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A feasibility-checked point on a manifold."""

    manifold: "Stiefel | Grassmann"
    value: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        object.__setattr__(self, "value", v)
        self.manifold.check_point(v)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Nearest manifold point, with ``unique=False`` when the metric
    projection is set-valued and an arbitrary representative was returned."""

    point: ManifoldPoint
    unique: bool


class Stiefel:
    """St(r, n): matrices X in R^{n x r} with orthonormal columns.

    r = 1 is the unit sphere, r = n the orthogonal group. The metric
    projection onto the manifold is the orthogonal polar factor.
    """

    def __init__(self, n, r):
        if not 1 <= r <= n:
            raise ValueError(f"Stiefel needs 1 <= r <= n, got n={n}, r={r}")
        self.n = int(n)
        self.r = int(r)

    def __repr__(self):
        return f"Stiefel(n={self.n}, r={self.r})"

    @property
    def ambient_shape(self):
        return (self.n, self.r)

    @property
    def reach(self):
        """Radius below which the metric projection is unique."""
        return 1.0

    def check_point(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != self.ambient_shape:
            raise FeasibilityError(f"expected shape {self.ambient_shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise FeasibilityError("point has non-finite entries")
        err = np.linalg.norm(x.T @ x - np.eye(self.r))
        if err > tol:
            raise FeasibilityError(f"||X^T X - I|| = {err:.3e} exceeds {tol:.1e}")

    def contains(self, x, tol=FEAS_TOL):
        try:
            self.check_point(x, tol)
        except FeasibilityError:
            return False
        return True

    def project_tangent(self, x, y):
        """Orthogonal projection of ambient Y onto the tangent space at X."""
        y = np.asarray(y, dtype=float)
        if y.shape != self.ambient_shape:
            raise ValueError(f"expected shape {self.ambient_shape}, got {y.shape}")
        return y - x @ sym(x.T @ y)

    def project_normal(self, x, y):
        """Complement of the tangent projection; tangent + normal = Y exactly."""
        return np.asarray(y, dtype=float) - self.project_tangent(x, y)

    def riemannian_gradient(self, x, egrad):
        """Tangent projection of the Euclidean gradient."""
        return self.project_tangent(x, egrad)

    def project(self, y):
        """Metric projection: the orthogonal polar factor of Y."""
        factors = polar(y)
        return ProjectionResult(ManifoldPoint(self, factors.orthogonal), factors.unique)

    def is_tangent(self, x, v, tol=FEAS_TOL):
        scale = max(1.0, float(np.linalg.norm(v)))
        return np.linalg.norm(sym(x.T @ v)) <= tol * scale

    def is_normal(self, x, v, tol=FEAS_TOL):
        scale = max(1.0, float(np.linalg.norm(v)))
        return np.linalg.norm(self.project_tangent(x, v)) <= tol * scale

    def orthonormal_complement(self, x):
        """Deterministic X_perp with [X, X_perp] orthogonal, via full QR."""
        q, _ = np.linalg.qr(x, mode="complete")
        return q[:, self.r:]

    def random_point(self, rng):
        rng = np.random.default_rng(rng)
        return polar(rng.standard_normal(self.ambient_shape)).orthogonal

    def random_tangent(self, rng, x):
        rng = np.random.default_rng(rng)
        return self.project_tangent(x, rng.standard_normal(self.ambient_shape))

    def random_normal(self, rng, x):
        rng = np.random.default_rng(rng)
        return self.project_normal(x, rng.standard_normal(self.ambient_shape))


class Grassmann:
    """Gr(p, n): symmetric idempotent rank-p matrices in R^{n x n}.

    Points are the orthogonal projectors onto p-dimensional subspaces.
    p in {0, n} is rejected: those manifolds are single points. The metric
    projection keeps the top-p spectral subspace of the symmetric part.
    """

    def __init__(self, p, n):
        if not 1 <= p <= n - 1:
            raise ValueError(f"Grassmann needs 1 <= p <= n-1, got p={p}, n={n}")
        self.p = int(p)
        self.n = int(n)

    def __repr__(self):
        return f"Grassmann(p={self.p}, n={self.n})"

    @property
    def ambient_shape(self):
        return (self.n, self.n)

    @property
    def reach(self):
        return float(np.sqrt(0.5))

    def check_point(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != self.ambient_shape:
            raise FeasibilityError(f"expected shape {self.ambient_shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise FeasibilityError("point has non-finite entries")
        sym_err = np.linalg.norm(x - x.T)
        idem_err = np.linalg.norm(x @ x - x)
        if sym_err > tol:
            raise FeasibilityError(f"||X - X^T|| = {sym_err:.3e} exceeds {tol:.1e}")
        if idem_err > tol:
            raise FeasibilityError(f"||X^2 - X|| = {idem_err:.3e} exceeds {tol:.1e}")
        trace = float(np.trace(x))
        if abs(trace - self.p) > max(tol * self.n, 1e-6):
            raise FeasibilityError(f"trace {trace:.6f} does not match rank p={self.p}")

    def contains(self, x, tol=FEAS_TOL):
        try:
            self.check_point(x, tol)
        except FeasibilityError:
            return False
        return True

    def project_tangent(self, x, y):
        """Tangent projection 2 sym(X sym(Y) (I - X))."""
        y = np.asarray(y, dtype=float)
        if y.shape != self.ambient_shape:
            raise ValueError(f"expected shape {self.ambient_shape}, got {y.shape}")
        s = sym(y)
        return 2.0 * sym(x @ s @ (np.eye(self.n) - x))

    def project_normal(self, x, y):
        return np.asarray(y, dtype=float) - self.project_tangent(x, y)

    def riemannian_gradient(self, x, egrad):
        return self.project_tangent(x, egrad)

    def project(self, y):
        """Top-p spectral projector of sym(Y); non-unique on an eigenvalue tie."""
        y = np.asarray(y, dtype=float)
        if y.shape != self.ambient_shape:
            raise ValueError(f"expected shape {self.ambient_shape}, got {y.shape}")
        eig = sym_eig(y)
        q_top = eig.eigenvectors[:, : self.p]
        point = sym(q_top @ q_top.T)
        gap = eig.eigenvalues[self.p - 1] - eig.eigenvalues[self.p]
        return ProjectionResult(ManifoldPoint(self, point), bool(gap > TIE_TOL))

    def is_tangent(self, x, v, tol=FEAS_TOL):
        v = np.asarray(v, dtype=float)
        scale = max(1.0, float(np.linalg.norm(v)))
        sym_err = np.linalg.norm(v - v.T)
        struct_err = np.linalg.norm(v - (v @ x + x @ v))
        return max(sym_err, struct_err) <= tol * scale

    def is_normal(self, x, v, tol=FEAS_TOL):
        scale = max(1.0, float(np.linalg.norm(v)))
        return np.linalg.norm(self.project_tangent(x, v)) <= tol * scale

    def random_point(self, rng):
        rng = np.random.default_rng(rng)
        q = polar(rng.standard_normal((self.n, self.p))).orthogonal
        return sym(q @ q.T)

    def random_tangent(self, rng, x):
        rng = np.random.default_rng(rng)
        return self.project_tangent(x, rng.standard_normal((self.n, self.n)))

    def random_normal(self, rng, x):
        # the ambient space is all of R^{n x n}, so normal vectors include
        # every skew matrix plus the symmetric complement of the tangent space
        rng = np.random.default_rng(rng)
        return self.project_normal(x, rng.standard_normal((self.n, self.n)))


def reach(manifold):
    """Projection-uniqueness radius: 1 for Stiefel, 1/sqrt(2) for Grassmann."""
    return manifold.reach


def distance_to_manifold(manifold, y):
    """Frobenius distance from an ambient matrix to the manifold."""
    return float(np.linalg.norm(np.asarray(y, dtype=float) - manifold.project(y).point.value))
