"""Benchmark problems: sphere-constrained eigenvalue quadratic, the
inhomogeneous QP on St(r, n), and jointly approximate symmetric matrix /
third-order tensor diagonalization.

Cost and Euclidean-gradient formulas are ambient polynomials, so they
evaluate off the manifold too (finite-difference gradient checks rely on
that). The matrix/tensor diagonalization gradients are derived here and
gated behind central-difference validation in the test suite.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .linalg import polar, sym
from .manifolds import ManifoldPoint, Stiefel


def _value(x):
    return x.value if isinstance(x, ManifoldPoint) else np.asarray(x, dtype=float)


def symmetrize_tensor3(t):
    """Average a 3-way tensor over all six index permutations."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 3 or len(set(t.shape)) != 1:
        raise ValueError(f"need a cubic 3-way tensor, got shape {t.shape}")
    acc = np.zeros_like(t)
    for perm in permutations((0, 1, 2)):
        acc += np.transpose(t, perm)
    return acc / 6.0


def tensor_diag_weights(t, x):
    """w_i = T(x_i, x_i, x_i) for each column x_i of X."""
    return np.einsum("ijk,ia,ja,ka->a", t, x, x, x)


class EigenvalueProblem:
    """min 0.5 x^T A x over the unit sphere St(1, n)."""

    kind = "eigenvalue"

    def __init__(self, a):
        self.a = sym(a)
        self.manifold = Stiefel(self.a.shape[0], 1)
        self.known_fstar = 0.5 * float(np.linalg.eigvalsh(self.a)[0])

    def cost(self, x):
        x = _value(x)
        return 0.5 * float(np.sum(x * (self.a @ x)))

    def egrad(self, x):
        return self.a @ _value(x)


class InhomogeneousQP:
    """min 0.5 tr((X - X*)^T A (X - X*)) over St(r, n); the global value is 0."""

    kind = "qp_inhomo"
    known_fstar = 0.0

    def __init__(self, a, x_star):
        self.a = sym(a)
        self.x_star = np.asarray(x_star, dtype=float)
        n, r = self.x_star.shape
        self.manifold = Stiefel(n, r)

    def cost(self, x):
        d = _value(x) - self.x_star
        return 0.5 * float(np.sum(d * (self.a @ d)))

    def egrad(self, x):
        return self.a @ (_value(x) - self.x_star)


class JointMatrixDiag:
    """max sum_l ||diag(X^T A_l X)||^2 over St(r, n), posed as minimization."""

    kind = "jamd_s"
    known_fstar = None

    def __init__(self, a_list, n=None, r=2):
        self.a_list = [sym(a) for a in a_list]
        n = self.a_list[0].shape[0] if n is None else n
        self.manifold = Stiefel(n, r)

    def cost(self, x):
        x = _value(x)
        total = 0.0
        for a in self.a_list:
            d = np.diag(x.T @ a @ x)
            total -= float(d @ d)
        return total

    def egrad(self, x):
        x = _value(x)
        g = np.zeros_like(x)
        for a in self.a_list:
            d = np.diag(x.T @ a @ x)
            g -= 4.0 * (a @ x) * d[None, :]
        return g


class JointTensorDiag:
    """Joint diagonalization of symmetric 3-way tensors over St(r, n):
    min -sum_l ||(T_l(x_i, x_i, x_i))_i||^2."""

    kind = "jatd_s"
    known_fstar = None

    def __init__(self, t_list, r=2):
        self.t_list = [np.asarray(t, dtype=float) for t in t_list]
        self.manifold = Stiefel(self.t_list[0].shape[0], r)

    def cost(self, x):
        x = _value(x)
        total = 0.0
        for t in self.t_list:
            w = tensor_diag_weights(t, x)
            total -= float(w @ w)
        return total

    def egrad(self, x):
        x = _value(x)
        g = np.zeros_like(x)
        for t in self.t_list:
            w = tensor_diag_weights(t, x)
            # T x_i x_i along modes 2 and 3; T symmetric makes the mode
            # choice irrelevant
            contracted = np.einsum("ijk,ja,ka->ia", t, x, x)
            g -= 6.0 * contracted * w[None, :]
        return g


def finite_difference_egrad(problem, x, h=1e-5):
    """Central-difference estimate of the ambient gradient."""
    x = _value(x)
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (problem.cost(x + e) - problem.cost(x - e)) / (2.0 * h)
    return g


def gradient_check(problem, x, h=1e-5):
    """Relative error between the analytic and central-difference gradients."""
    x = _value(x)
    g = problem.egrad(x)
    fd = finite_difference_egrad(problem, x, h)
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))


def generate_instance(kind, params, seed):
    """Seeded instance + feasible start for a named problem family.

    ``params`` supplies dimensions and recipe knobs: n, r, L, noise,
    a_matrix (eigenvalue only). The start X0 is the projection of a
    Gaussian matrix.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0]))
    n = int(params.get("n", 3))
    r = int(params.get("r", 2))

    if kind == "qp_inhomo_case1":
        b = rng.standard_normal((n, n))
        a = b @ b.T
        x_star = polar(rng.standard_normal((n, r))).orthogonal
        problem = InhomogeneousQP(a, x_star)
    elif kind == "qp_inhomo_case2":
        d = 9.9 + 0.2 * rng.uniform(size=n)
        q = polar(rng.standard_normal((n, n))).orthogonal
        a = sym(q.T @ (d[:, None] * q))
        x_star = polar(rng.standard_normal((n, r))).orthogonal
        problem = InhomogeneousQP(a, x_star)
    elif kind == "jamd_s":
        L = int(params.get("L", 3))
        noise = float(params.get("noise", 0.02))
        q = polar(rng.standard_normal((n, n))).orthogonal
        a_list = []
        for _ in range(L):
            d = rng.standard_normal(n)
            e = noise * sym(rng.standard_normal((n, n)))
            a_list.append(q.T @ (d[:, None] * q) + e)
        problem = JointMatrixDiag(a_list, n=n, r=r)
    elif kind == "jatd_s":
        L = int(params.get("L", 1))
        t_list = [symmetrize_tensor3(rng.standard_normal((n, n, n))) for _ in range(L)]
        problem = JointTensorDiag(t_list, r=r)
    elif kind == "eigenvalue":
        a = params.get("a_matrix")
        if a is None:
            a = sym(rng.standard_normal((n, n)))
        problem = EigenvalueProblem(a)
        r = 1
        n = problem.manifold.n
    else:
        raise ValueError(f"unknown problem kind {kind!r}")

    x0 = polar(rng.standard_normal((n, r))).orthogonal
    return problem, ManifoldPoint(problem.manifold, x0)


def save_instance(path, problem):
    """Serialize an instance as dense arrays plus a kind tag (.npz)."""
    if problem.kind == "eigenvalue":
        np.savez(path, kind="eigenvalue", a=problem.a)
    elif problem.kind == "qp_inhomo":
        np.savez(path, kind="qp_inhomo", a=problem.a, x_star=problem.x_star)
    elif problem.kind == "jamd_s":
        np.savez(path, kind="jamd_s", r=problem.manifold.r,
                 **{f"a{i}": a for i, a in enumerate(problem.a_list)})
    elif problem.kind == "jatd_s":
        np.savez(path, kind="jatd_s", r=problem.manifold.r,
                 **{f"t{i}": t for i, t in enumerate(problem.t_list)})
    else:
        raise ValueError(f"cannot serialize kind {problem.kind!r}")


def load_instance(path):
    data = np.load(path)
    kind = str(data["kind"])
    if kind == "eigenvalue":
        return EigenvalueProblem(data["a"])
    if kind == "qp_inhomo":
        return InhomogeneousQP(data["a"], data["x_star"])
    if kind == "jamd_s":
        mats = []
        while f"a{len(mats)}" in data.files:
            mats.append(data[f"a{len(mats)}"])
        return JointMatrixDiag(mats, r=int(data["r"]))
    if kind == "jatd_s":
        tens = []
        while f"t{len(tens)}" in data.files:
            tens.append(data[f"t{len(tens)}"])
        return JointTensorDiag(tens, r=int(data["r"]))
    raise ValueError(f"unknown serialized kind {kind!r}")
