from fractions import Fraction

import pytest

from gradedlie import automorphisms as aut
from gradedlie.algebra import Basis, Element, L, M, Window, Y, bracket, validate_params
from gradedlie.errors import (
    CaseNotAdmissible,
    DiagonalRequiresMuZero,
    FlipRequiresMuZero,
    NotAutomorphism,
    ShapeViolation,
    UnsupportedSupport,
    WindowOverflow,
    ZeroParameter,
)

F = Fraction
W6 = Window(6)
GRID = [(3, F(1, 3)), (-5, F(2, 3)), (-2, 0), (-1, 0), (1, 0), (7, 0)]


def params(lam, mu):
    return validate_params(lam, mu)


def image(a, family, n):
    return a.image(Basis(family, n))


# -- constructors -------------------------------------------------------------


def test_flip():
    p = params(1, 0)
    assert aut.make_flip(p, W6, 1) == aut.identity(p, W6)
    f = aut.make_flip(p, W6, -1)
    assert image(f, "L", 2) == L(-2, -1)
    assert image(f, "Y", 2) == Y(-2)
    assert image(f, "M", 2) == M(-2, -1)
    with pytest.raises(FlipRequiresMuZero):
        aut.make_flip(params(3, F(1, 3)), W6, -1)


def test_scale():
    p = params(3, F(1, 3))
    assert aut.make_scale(p, W6, 1, 1) == aut.identity(p, W6)
    s = aut.make_scale(p, W6, 2, 3)
    assert image(s, "M", 1) == M(1, 18)
    assert image(s, "Y", -1) == Y(-1, F(3, 2))
    with pytest.raises(ZeroParameter):
        aut.make_scale(p, W6, 0, 1)


def test_unipotent():
    p2, p1 = params(-2, 0), params(-1, 0)
    assert aut.make_unipotent(p2, W6, 0) == aut.identity(p2, W6)
    assert image(aut.make_unipotent(p2, W6, 1), "L", 2) == L(2) + M(2, 8)
    assert image(aut.make_unipotent(p1, W6, 1), "L", 3) == L(3) + M(3, 9)
    assert image(aut.make_unipotent(p1, W6, 1), "Y", 3) == Y(3)
    with pytest.raises(CaseNotAdmissible):
        aut.make_unipotent(params(1, 0), W6, 1)


def test_shear():
    p1, pm = params(1, 0), params(-1, 0)
    assert aut.make_shear(p1, W6, 0) == aut.identity(p1, W6)
    assert image(aut.make_shear(p1, W6, 5), "Y", 2) == Y(2) + M(2, 5)
    assert image(aut.make_shear(pm, W6, 5), "Y", 0) == Y(0)
    assert image(aut.make_shear(pm, W6, 5), "Y", 2) == Y(2) + M(2, 10)
    with pytest.raises(CaseNotAdmissible):
        aut.make_shear(params(-2, 0), W6, 1)


def test_inner_exp():
    p = params(1, 0)
    assert aut.make_inner_exp(p, W6, Element()) == aut.identity(p, W6)
    e = aut.make_inner_exp(p, W6, M(0))
    for n in W6.indices:
        assert image(e, "L", n) == L(n) + M(n, n)
        assert image(e, "Y", n) == Y(n) and image(e, "M", n) == M(n)
    e = aut.make_inner_exp(p, W6, Y(0))
    for n in W6.indices:
        assert image(e, "L", n) == L(n) + Y(n, n) + M(n, F(n * n, 2))
        assert image(e, "Y", n) == Y(n) + M(n, n)
    with pytest.raises(UnsupportedSupport):
        aut.make_inner_exp(p, W6, L(0) + Y(1))


@pytest.mark.parametrize("lam, mu", GRID)
def test_ad_cubed_vanishes(lam, mu):
    p = params(lam, mu)
    x = Y(1, 2) + Y(-2, F(1, 3)) + M(0, 5)
    for b in W6.basis():
        v = Element({b: 1})
        for _ in range(3):
            v = bracket(p, x, v)
        assert v == 0


def test_diagonal():
    p = params(1, 0)
    assert aut.make_diagonal(p, W6, 1) == aut.identity(p, W6)
    assert image(aut.make_diagonal(p, W6, 2), "L", -1) == L(-1, F(1, 2))
    assert aut.make_diagonal(p, W6, 5) == aut.make_scale(p, W6, 5, 1)
    with pytest.raises(DiagonalRequiresMuZero):
        aut.make_diagonal(params(3, F(1, 3)), W6, 2)
    with pytest.raises(ZeroParameter):
        aut.make_diagonal(p, W6, 0)


def test_composition_laws_examples():
    p = params(1, 0)
    assert aut.compose(aut.make_scale(p, W6, 2, 3), aut.make_scale(p, W6, 5, 7)) == aut.make_scale(p, W6, 10, 21)
    assert aut.compose(aut.make_flip(p, W6, -1), aut.make_flip(p, W6, -1)) == aut.identity(p, W6)
    assert aut.compose(aut.make_shear(p, W6, 2), aut.make_shear(p, W6, F(1, 3))) == aut.make_shear(p, W6, F(7, 3))


def test_composition_order():
    p = params(1, 0)
    s, f = aut.make_scale(p, W6, 2, 3), aut.make_flip(p, W6, -1)
    # flip after scale: L1 -> 2 L1 -> -2 L-1
    assert image(aut.compose(f, s), "L", 1) == L(-1, -2)
    assert image(aut.compose(s, f), "L", 1) == L(-1, F(-1, 2))


def test_table_maps_overflow_past_their_range():
    p = params(1, 0)
    w = Window(5)
    shift = {Basis(f, n): Element({Basis(f, n): 1}) for f in "LYM" for n in w.indices}
    shift[Basis("L", 5)] = L(5) + Y(6)
    t = aut.from_table(p, w, shift)
    e = aut.make_inner_exp(p, w, Y(1))
    with pytest.raises(WindowOverflow):
        aut.compose(t, e)
    missing = dict(shift)
    del missing[Basis("M", 0)]
    with pytest.raises(WindowOverflow):
        aut.from_table(p, w, missing)


# -- checks -------------------------------------------------------------------


@pytest.mark.parametrize("lam, mu", GRID)
def test_constructors_are_automorphisms(lam, mu):
    p = params(lam, mu)
    for i, family in enumerate(aut.constructor_families(p)):
        a = aut.sample_constructor(p, W6, family, aut.sample_rng(7, family, i))
        rep = aut.is_automorphism(p, a)
        assert rep.ok, (family, rep.violations[:1])


def test_wrong_exponent_unipotent_fails():
    p = params(-2, 0)
    bad = aut.make_unipotent(p, W6, 1, exponent=2)
    rep = aut.is_automorphism(p, bad)
    assert not rep.ok
    assert any(v.pair == (Basis("L", 1), Basis("L", 2)) for v in rep.violations)


def test_identity_and_scale_pass():
    p = params(3, F(1, 3))
    assert aut.is_automorphism(p, aut.identity(p, W6)).ok
    assert aut.is_automorphism(p, aut.make_scale(p, W6, 2, 3)).ok


def test_singular_map_fails_rank():
    p = params(1, 0)
    kill = aut.AutMap(p, W6, lambda b: Element() if b == Basis("M", 3) else Element({b: 1}))
    rep = aut.is_automorphism(p, kill)
    assert not rep.full_rank


@pytest.mark.parametrize("lam, mu", GRID)
def test_triangular_block_structure(lam, mu):
    p = params(lam, mu)
    below = {"L": "LYM", "Y": "YM", "M": "M"}
    for i, family in enumerate(aut.constructor_families(p)):
        a = aut.sample_constructor(p, W6, family, aut.sample_rng(3, family, i))
        for b in W6.basis():
            assert all(x.family in below[b.family] for x, _ in a.image(b).items())


def test_shape_examples():
    p = params(3, F(1, 3))
    assert aut.shape_check(p, aut.make_scale(p, W6, 2, 3)) == aut.Shape(1, 2, 3)
    q = params(1, 0)
    s = aut.compose(aut.make_flip(q, W6, -1), aut.make_scale(q, W6, 2, 3))
    assert aut.shape_check(q, s) == aut.Shape(-1, 2, 3)
    bump = aut.AutMap(q, W6, lambda b: M(2) if b == Basis("M", 1) else Element({b: 1}))
    with pytest.raises(ShapeViolation):
        aut.shape_check(q, bump)


def test_shape_reads_scale_exactly():
    p = params(-5, F(2, 3))
    for i in range(20):
        rng = aut.sample_rng(11, "shape", i)
        a, b = aut.random_rational(rng), aut.random_rational(rng)
        assert aut.shape_check(p, aut.make_scale(p, W6, a, b)) == aut.Shape(1, a, b)


# -- factorization ------------------------------------------------------------


def test_factor_scale():
    p = params(3, F(1, 3))
    r = aut.factor(p, aut.make_scale(p, W6, 2, 3))
    assert (r.epsilon, r.alpha, r.beta) == (1, 2, 3)
    assert r.inner_witness == [] and r.unipotent_b is None and r.shear_e is None
    assert r.residual_is_identity and r.roundtrip


def test_factor_with_shear_at_lambda_one():
    p = params(1, 0)
    sigma = aut.compose(
        aut.make_inner_exp(p, W6, Y(0) + M(1, 2)), aut.make_scale(p, W6, 2, 3), aut.make_shear(p, W6, 5)
    )
    r = aut.factor(p, sigma)
    assert (r.epsilon, r.alpha, r.beta, r.shear_e) == (1, 2, 3, 5)
    assert r.recompose() == sigma


def test_factor_with_flip_at_lambda_minus_two():
    p = params(-2, 0)
    sigma = aut.compose(aut.make_diagonal(p, W6, 3), aut.make_flip(p, W6, -1), aut.make_unipotent(p, W6, 7))
    r = aut.factor(p, sigma)
    assert (r.epsilon, r.unipotent_b) == (-1, 7)
    assert r.residual_is_identity
    assert r.recompose() == sigma


def test_shear_at_lambda_minus_one_is_inner():
    # ψ_e equals exp(e ad Y0) at λ=-1, μ=0
    p = params(-1, 0)
    assert aut.make_shear(p, W6, F(5, 2)) == aut.make_inner_exp(p, W6, Y(0, F(5, 2)))


def test_factor_rejects_non_automorphisms():
    p = params(-2, 0)
    with pytest.raises(NotAutomorphism):
        aut.factor(p, aut.make_unipotent(p, W6, 1, exponent=2))


def test_inner_correction_clears_tail():
    p = params(3, F(1, 3))
    x = Y(2, 3) + Y(-1, F(1, 2)) + M(1, -4) + M(-3, 2)
    e = aut.make_inner_exp(p, W6, x)
    w = aut.inner_correction(p, image(e, "L", 0), 1)
    assert w == x


@pytest.mark.parametrize("lam, mu", GRID)
def test_factor_round_trip(lam, mu):
    p = params(lam, mu)
    for i in range(12):
        sample = aut.random_composite(p, W6, aut.sample_rng(1, "unit", i))
        r = aut.factor(p, sample.sigma)
        got = {"epsilon": r.epsilon, "alpha": r.alpha, "beta": r.beta, "unipotent_b": r.unipotent_b, "shear_e": r.shear_e}
        assert got == sample.expected
        assert r.residual_is_identity and r.roundtrip
        assert r.recompose() == sample.sigma
        assert r.fit.conforms, r.fit.mismatches


def test_unipotent_fit_flags_bad_residual():
    p = params(7, 0)
    good = aut.UnipotentAutSpec(
        fbar={n: F(2 * n) for n in W6.indices},
        f={n: F(3 * n) + F(4, 8) * n * (n - 1) for n in W6.indices},
        g={n: F(4, 8) * n for n in W6.indices},
    )
    assert aut.fit_unipotent(p, good).conforms
    bad = aut.UnipotentAutSpec(good.fbar, {**good.f, 5: good.f[5] + 1}, good.g)
    fit = aut.fit_unipotent(p, bad)
    assert not fit.conforms and "f(5)" in fit.mismatches[0]


@pytest.mark.parametrize("lam, mu", [(1, 0), (-2, 0), (-1, 0), (3, F(1, 3))])
def test_group_laws(lam, mu):
    rep = aut.verify_group_laws(params(lam, mu), W6, samples=20, seed=0)
    assert rep.ok, rep.failures
    assert rep.checked["scale"] == 20


def test_flip_law_table_is_z2():
    p = params(1, 0)
    rep = aut.verify_group_laws(p, W6, samples=1, seed=0)
    assert rep.checked["flip"] == 4


def test_export_round_trip():
    p = params(1, 0)
    sigma = aut.compose(aut.make_scale(p, W6, 2, 3), aut.make_shear(p, W6, 5))
    data = sigma.to_json()
    assert data["radius"] == W6.radius + aut.GUARD_BAND
    assert data["images"]["Y2"] == {"Y2": "12", "M2": "180"}
