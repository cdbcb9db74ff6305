import numpy as np
import pytest

from tgpopt.directions import (
    DirectionBuilder,
    DRho,
    Egp,
    ExplicitScaling,
    General,
    GrassmannScaling,
    IdentityS,
    Rgd,
    ShiftedPm,
    StiefelScaling,
    TgpAEigen,
    TgpDE,
    TgpE,
    TgpR,
    UniformSpectrumS,
    UnsupportedSpecError,
    build_direction,
    check_tangent_preservation,
    d_rho,
    gradient_equivalence_bounds,
    sample_s_matrix,
)
from tgpopt.linalg import rand_sym_with_spectrum, sym
from tgpopt.manifolds import Grassmann, ManifoldPoint, Stiefel


def _stiefel_setup(seed=0, n=3, r=2):
    rng = np.random.default_rng(seed)
    st = Stiefel(n, r)
    x = ManifoldPoint(st, st.random_point(rng))
    egrad = rng.standard_normal((n, r))
    return st, x, egrad


def _valid_stiefel_scaling(rng, n, r):
    # tangency preservation needs E to commute with every skew matrix,
    # i.e. a scalar multiple of the identity; F and mu are free
    c = rng.uniform(0.5, 1.5)
    f = rand_sym_with_spectrum(n - r, 0.0, 1.0, rng) if n > r else np.zeros((0, 0))
    return StiefelScaling(c * np.eye(r), f, rng.uniform(0.0, 1.0))


def test_direction_split_invariants():
    st, x, egrad = _stiefel_setup(0)
    for spec in (Rgd(), Egp(), DRho(0.5), TgpR(1.1), TgpE(0.7), TgpDE(0.4, 0.5),
                 TgpAEigen()):
        d = build_direction(spec, x, egrad, seed=3)
        assert np.linalg.norm(d.tangent + d.normal - d.full) < 1e-12
        assert np.allclose(d.tangent, st.project_tangent(x.value, d.full), atol=1e-13)


def test_preset_rgd_and_egp():
    st, x, egrad = _stiefel_setup(1)
    rgrad = st.riemannian_gradient(x.value, egrad)
    assert np.array_equal(build_direction(Rgd(), x, egrad).full, rgrad)
    assert np.array_equal(build_direction(Egp(), x, egrad).full, egrad)
    # EGP's normal component is the Euclidean gradient's normal part
    d = build_direction(Egp(), x, egrad)
    assert np.allclose(d.normal, egrad - rgrad, atol=1e-13)


def test_drho_quarter_is_riemannian_gradient():
    st, x, egrad = _stiefel_setup(2)
    d = build_direction(DRho(0.25), x, egrad)
    assert np.allclose(d.full, st.riemannian_gradient(x.value, egrad), atol=1e-14)


def test_drho_half_expansion_oracle():
    # term-by-term expansion with 2 rho = 1: egrad - X egrad^T X
    st, x, egrad = _stiefel_setup(3)
    d = build_direction(DRho(0.5), x, egrad)
    assert np.allclose(d.full, egrad - x.value @ egrad.T @ x.value, atol=1e-14)


def test_drho_requires_positive_rho():
    with pytest.raises(UnsupportedSpecError):
        DRho(0.0)
    with pytest.raises(UnsupportedSpecError):
        DRho(-0.3)


def test_drho_gradient_equivalence_constants():
    # 0.5 min(1, 1/(2 rho)) ||D_rho|| <= ||grad|| <= max(1, 1/(2 rho)) ||D_rho||
    rng = np.random.default_rng(4)
    st = Stiefel(4, 2)
    for rho in (0.1, 0.25, 0.5, 1.0):
        lo = 0.5 * min(1.0, 1.0 / (2 * rho))
        hi = max(1.0, 1.0 / (2 * rho))
        for _ in range(20):
            x = st.random_point(rng)
            egrad = rng.standard_normal((4, 2))
            g = np.linalg.norm(st.riemannian_gradient(x, egrad))
            dn = np.linalg.norm(d_rho(st, x, egrad, rho))
            assert lo * dn <= g + 1e-12
            assert g <= hi * dn + 1e-12


def test_tgp_r_zero_shift_is_rgd():
    st, x, egrad = _stiefel_setup(5)
    d0 = build_direction(TgpR(0.0), x, egrad, seed=9)
    dr = build_direction(Rgd(), x, egrad, seed=9)
    assert np.abs(d0.full - dr.full).max() <= 1e-12


def test_tgp_e_zero_shift_is_egp():
    st, x, egrad = _stiefel_setup(6)
    d0 = build_direction(TgpE(0.0), x, egrad, seed=9)
    assert np.abs(d0.full - egrad).max() <= 1e-12


def test_tgp_de_quarter_matches_tgp_e():
    st, x, egrad = _stiefel_setup(7)
    de = build_direction(TgpDE(0.25, 0.7), x, egrad, seed=11)
    e = build_direction(TgpE(0.7), x, egrad, seed=11)
    assert np.abs(de.full - e.full).max() < 1e-12


def test_shift_is_fixed_per_instance():
    st, x, egrad = _stiefel_setup(8)
    builder = DirectionBuilder(TgpR(1.3), st, seed=21)
    d1 = builder.build(x, egrad)
    d2 = builder.build(x, egrad)  # same X twice stands in for k=0 and k=57
    assert np.array_equal(d1.full, d2.full)
    # and the sampled S matches the policy's seeded draw
    s = builder.s_matrix
    lam = np.linalg.eigvalsh(s)
    assert np.all(lam >= 0.5 - 1e-12) and np.all(lam <= 1.5 + 1e-12)


def test_sample_s_policies():
    assert np.array_equal(sample_s_matrix(IdentityS(), 3, 0), np.eye(3))
    s = sample_s_matrix(UniformSpectrumS(0.5, 1.5), 2, 5)
    lam = np.linalg.eigvalsh(s)
    assert np.all(lam >= 0.5 - 1e-12) and np.all(lam <= 1.5 + 1e-12)
    assert np.array_equal(s, sample_s_matrix(UniformSpectrumS(0.5, 1.5), 2, 5))


def test_shifted_pm_form_and_guards():
    rng = np.random.default_rng(9)
    st1 = Stiefel(4, 1)
    x = ManifoldPoint(st1, st1.random_point(rng))
    egrad = rng.standard_normal((4, 1))
    d = build_direction(ShiftedPm(4.0), x, egrad)
    assert np.allclose(d.full, egrad + (1.0 - 4.0) * x.value, atol=1e-14)
    with pytest.raises(UnsupportedSpecError):
        DirectionBuilder(ShiftedPm(4.0), Stiefel(4, 2), 0)
    with pytest.raises(UnsupportedSpecError):
        DirectionBuilder(TgpR(1.0), Grassmann(2, 4), 0)


def test_tgp_a_eigen_matrix_form():
    # L = I + f_scale * X_perp ones X_perp^T applied to the gradient
    st, x, egrad = _stiefel_setup(10, n=3, r=1)
    d = build_direction(TgpAEigen(0.05), x, egrad)
    x_perp = st.orthonormal_complement(x.value)
    left = np.eye(3) + 0.05 * x_perp @ np.ones((2, 2)) @ x_perp.T
    rgrad = st.riemannian_gradient(x.value, egrad)
    assert np.allclose(d.full, left @ rgrad, atol=1e-13)


def test_stationary_point_gives_zero_tangent():
    # zero gradient, no shift, no Euclidean-normal term -> zero tangent part
    st = Stiefel(3, 2)
    x = ManifoldPoint(st, st.random_point(0))
    zero = np.zeros((3, 2))
    for spec in (Rgd(), DRho(0.7), TgpR(0.0), General(StiefelScaling(np.eye(2), np.ones((1, 1)), 0.3))):
        d = build_direction(spec, x, zero, seed=1)
        assert np.linalg.norm(d.tangent) < 1e-14


def test_tangent_preservation_families():
    rng = np.random.default_rng(12)
    st = Stiefel(5, 3)
    x = st.random_point(rng)
    for i in range(5):
        scaling = _valid_stiefel_scaling(np.random.default_rng(100 + i), 5, 3)
        assert check_tangent_preservation(scaling, st, x, seed=i)
    gr = Grassmann(2, 5)
    xg = gr.random_point(rng)
    for i in range(5):
        scaling = GrassmannScaling(
            rand_sym_with_spectrum(2, 0.5, 1.5, 200 + i),
            rand_sym_with_spectrum(3, 0.5, 1.5, 300 + i),
        )
        assert check_tangent_preservation(scaling, gr, xg, seed=i)


def test_tangent_preservation_adversarial():
    # a generic symmetric left factor does not conjugate the frame blocks
    rng = np.random.default_rng(13)
    st = Stiefel(4, 2)
    x = st.random_point(rng)
    bad = ExplicitScaling(sym(rng.standard_normal((4, 4))), np.eye(2))
    assert not check_tangent_preservation(bad, st, x, seed=0)
    # non-scalar E breaks tangency even within the structured family
    non_commuting = StiefelScaling(np.diag([1.0, 2.0]), np.zeros((2, 2)), 0.0)
    assert not check_tangent_preservation(non_commuting, st, x, seed=0)


def test_gradient_equivalence_bound_examples():
    r = 2
    assert gradient_equivalence_bounds(
        StiefelScaling(np.eye(r), np.zeros((1, 1)), 0.0)) == (1.0, 1.0)
    # E = I, F = 0, mu = 4 rho - 1 at rho = 0.5: eigenvalues of I + X X^T
    lo, hi = gradient_equivalence_bounds(
        StiefelScaling(np.eye(r), np.zeros((1, 1)), 4 * 0.5 - 1.0))
    assert (lo, hi) == (1.0, 2.0)
    # sanity envelope against the D_rho equivalence constants at rho = 0.5:
    # ||D_rho||/||grad|| in [1/max(1,1/(2rho)), 2/min(1,1/(2rho))] = [1, 2]
    assert 1.0 / max(1.0, 1.0 / (2 * 0.5)) <= lo
    assert hi <= 2.0 / min(1.0, 1.0 / (2 * 0.5))
    lo, hi = gradient_equivalence_bounds(
        GrassmannScaling(2.0 * np.eye(2), 3.0 * np.eye(2)))
    assert (lo, hi) == (4.0, 9.0)


def test_gradient_equivalence_flags_indefinite():
    lo, _ = gradient_equivalence_bounds(
        StiefelScaling(np.eye(2), -2.0 * np.eye(1), 0.0))
    assert lo <= 0.0  # flagged, not an error


def test_tangent_part_is_scaled_gradient_fuzz():
    # valid-family directions project to L grad R, fuzzed over points and costs
    for trial in range(8):
        rng = np.random.default_rng(400 + trial)
        st = Stiefel(4, 2)
        x = ManifoldPoint(st, st.random_point(rng))
        egrad = rng.standard_normal((4, 2))
        scaling = _valid_stiefel_scaling(rng, 4, 2)
        spec = General(scaling, a=rng.uniform(0.0, 2.0),
                       s_policy=UniformSpectrumS(), include_euclidean_normal=True)
        d = build_direction(spec, x, egrad, seed=trial)
        rgrad = st.riemannian_gradient(x.value, egrad)
        expected = scaling.left(st, x.value) @ rgrad @ scaling.right(st, x.value)
        assert np.linalg.norm(d.tangent - expected) < 1e-10

    for trial in range(5):
        rng = np.random.default_rng(500 + trial)
        gr = Grassmann(2, 4)
        x = ManifoldPoint(gr, gr.random_point(rng))
        egrad = rng.standard_normal((4, 4))
        scaling = GrassmannScaling(rand_sym_with_spectrum(2, 0.5, 1.5, rng),
                                   rand_sym_with_spectrum(2, 0.5, 1.5, rng))
        d = build_direction(General(scaling), x, egrad, seed=trial)
        rgrad = gr.riemannian_gradient(x.value, egrad)
        expected = scaling.left(gr, x.value) @ rgrad @ scaling.right(gr, x.value)
        assert np.linalg.norm(d.tangent - expected) < 1e-10


def test_equivalence_sandwich_fuzz():
    # lo ||g||^2 <= <g, H> <= hi ||g||^2 and lo ||g|| <= ||H_tan|| <= hi ||g||
    for trial in range(10):
        rng = np.random.default_rng(600 + trial)
        st = Stiefel(4, 2)
        x = ManifoldPoint(st, st.random_point(rng))
        egrad = rng.standard_normal((4, 2))
        scaling = _valid_stiefel_scaling(rng, 4, 2)
        lo, hi = gradient_equivalence_bounds(scaling)
        assert lo > 0
        d = build_direction(General(scaling, a=1.0, s_policy=UniformSpectrumS()),
                            x, egrad, seed=trial)
        g = st.riemannian_gradient(x.value, egrad)
        gn = np.linalg.norm(g)
        ip = float(np.sum(g * d.full))
        assert lo * gn**2 - 1e-10 <= ip <= hi * gn**2 + 1e-10
        tn = np.linalg.norm(d.tangent)
        assert lo * gn - 1e-10 <= tn <= hi * gn + 1e-10


def test_euclidean_form_normal_remainder():
    # H - L egrad R is a normal vector for the structured family
    for trial in range(8):
        rng = np.random.default_rng(700 + trial)
        st = Stiefel(4, 2)
        x = ManifoldPoint(st, st.random_point(rng))
        egrad = rng.standard_normal((4, 2))
        scaling = _valid_stiefel_scaling(rng, 4, 2)
        spec = General(scaling, a=rng.uniform(0.0, 2.0),
                       s_policy=UniformSpectrumS(), include_euclidean_normal=True)
        d = build_direction(spec, x, egrad, seed=trial)
        left = scaling.left(st, x.value)
        right = scaling.right(st, x.value)
        remainder = d.full - left @ egrad @ right
        assert st.is_normal(x.value, remainder, tol=1e-10)


def test_general_shift_rejected_on_grassmann():
    gr = Grassmann(2, 4)
    scaling = GrassmannScaling(np.eye(2), np.eye(2))
    with pytest.raises(UnsupportedSpecError):
        DirectionBuilder(General(scaling, a=0.5), gr, 0)
    # a = 0 is fine
    DirectionBuilder(General(scaling), gr, 0)
