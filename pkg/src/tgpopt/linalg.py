"""Dense linear-algebra kernels: symmetric/skew parts, polar and symmetric
eigendecompositions, and seeded random matrix generation.

All functions operate on plain numpy arrays and are pure; randomness is
always owned by an explicit seed or Generator argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# sigma_min / sigma_max below this flags the polar factor as non-unique
RANK_TOL = 1e-12
# below this conditioning, route polar through an SVD instead of eigh(Y^T Y):
# the eigh route loses ~eps * cond(Y)^2, the SVD route only ~eps * cond(Y)
_POLAR_SVD_SWITCH = 1e-2


def sym(m):
    """Symmetric part (M + M^T) / 2 of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"sym needs a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def skew(m):
    """Skew-symmetric part (M - M^T) / 2 of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"skew needs a square matrix, got shape {m.shape}")
    return 0.5 * (m - m.T)


@dataclass(frozen=True, eq=False)
class PolarFactors:
    """Factors of Y = orthogonal @ psd with orthogonal^T orthogonal = I.

    ``unique`` is False when Y is (numerically) rank deficient, in which
    case the orthogonal factor is one valid choice among many.
    """

    orthogonal: np.ndarray
    psd: np.ndarray
    unique: bool


def polar(y):
    """Polar decomposition of an n x r matrix, n >= r.

    The orthogonal factor is the nearest matrix with orthonormal columns.
    Full-rank inputs go through Y (Y^T Y)^{-1/2} built from a symmetric
    eigendecomposition; ill-conditioned or rank-deficient inputs fall back
    to an SVD, and rank deficiency sets ``unique=False``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError(f"polar needs a 2-d array, got shape {y.shape}")
    n, r = y.shape
    if n < r or r < 1:
        raise ValueError(f"polar needs n >= r >= 1, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("polar input has non-finite entries")

    gram = sym(y.T @ y)
    lam, q = np.linalg.eigh(gram)
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    s_max = sigma[-1]
    if s_max > 0.0 and sigma[0] > _POLAR_SVD_SWITCH * s_max:
        inv_sqrt = (q / sigma) @ q.T
        orthogonal = y @ inv_sqrt
        psd = sym(q @ (sigma[:, None] * q.T))
        return PolarFactors(orthogonal, psd, True)

    u, s, vt = np.linalg.svd(y, full_matrices=False)
    orthogonal = u @ vt
    psd = sym(vt.T @ (s[:, None] * vt))
    unique = s[0] > 0.0 and s[-1] > RANK_TOL * s[0]
    return PolarFactors(orthogonal, psd, unique)


@dataclass(frozen=True, eq=False)
class SymEig:
    """Spectral decomposition with eigenvalues sorted non-increasing.

    Column i of ``eigenvectors`` pairs with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(m):
    """Sorted eigendecomposition of a (symmetrized) square matrix."""
    lam, q = np.linalg.eigh(sym(m))
    order = slice(None, None, -1)
    return SymEig(np.ascontiguousarray(lam[order]), np.ascontiguousarray(q[:, order]))


def rand_gaussian(rows, cols, seed):
    """Standard normal matrix, deterministic per seed (or Generator)."""
    if rows < 1 or cols < 1:
        raise ValueError(f"invalid dimensions ({rows}, {cols})")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, cols))


def rand_orthonormal(n, r, seed):
    """Haar-like n x r orthonormal matrix: the polar factor of a Gaussian."""
    if not 1 <= r <= n:
        raise ValueError(f"invalid dimensions ({n}, {r})")
    return polar(rand_gaussian(n, r, seed)).orthogonal


def rand_sym_with_spectrum(r, spectrum_low, spectrum_high, seed):
    """Random symmetric r x r matrix with eigenvalues uniform in an interval."""
    if spectrum_low > spectrum_high:
        raise ValueError("spectrum_low must be <= spectrum_high")
    rng = np.random.default_rng(seed)
    q = rand_orthonormal(r, r, rng)
    lam = rng.uniform(spectrum_low, spectrum_high, size=r)
    return sym(q @ (lam[:, None] * q.T))
