import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwheel.coeffrings import ModelMismatch, tensor_power
from kwheel.laurent import (
    BinomialFactor,
    NotDivisible,
    RatElem,
    Space,
    divide_exact,
    is_symmetric,
    random_element,
    substitute_monomial,
    surface_space,
    symmetrize,
    torus_space,
)
from kwheel.shuffle import (
    TRIVIAL_KERNEL,
    GradedElem,
    KernelSpec,
    associativity_check,
    default_plane_kernel,
    format_kernel,
    generator_element,
    kernel_factor,
    parse_kernel,
    pole_wheel_experiment,
    shuffle_cosets,
    shuffle_product,
    symmetrized_product,
)

S1 = torus_space(1)
ONE = generator_element(S1.one())


def test_plane_kernel_shape():
    k = default_plane_kernel()
    assert len(k.numerator) == 2 and len(k.denominator) == 2
    assert sorted(map(repr, k.swap_q().numerator)) == sorted(map(repr, k.numerator))
    assert sorted(map(repr, k.swap_q().denominator)) == sorted(map(repr, k.denominator))


def test_plane_kernel_at_q_equal_one():
    sp = torus_space(2)
    zeta = kernel_factor(default_plane_kernel(), sp, 1, 2)

    def at_one(x):
        # q1 = q2 = 1 on the numerator, and on each denominator factor
        raw = {}
        for (e, b), c in x.raw.items():
            key = (e[:2] + (0, 0), b)
            raw[key] = raw.get(key, 0) + c
        return type(x)(sp, raw)

    num = at_one(zeta.numerator)
    den = sp.one()
    for f in zeta.factors:
        den = den * at_one(f.as_laurent(sp))
    assert num == den


def test_kernel_rejects_non_units():
    with pytest.raises(ValueError):
        KernelSpec((torus_space(0).const(2),))


def test_cosets():
    cosets = list(shuffle_cosets(2, 2))
    assert len(cosets) == 6
    assert all(sorted(p) == [0, 1, 2, 3] for p in cosets)


def test_degree_zero_unit():
    F = generator_element(S1.z(1) + S1.q1)
    unit = GradedElem(0, torus_space(0).one())
    assert shuffle_product(F, unit) == F
    assert shuffle_product(unit, F) == F


def test_two_degree_one_units():
    sp = torus_space(2)
    k = default_plane_kernel()
    P = shuffle_product(ONE, ONE)
    expected = kernel_factor(k, sp, 1, 2) + kernel_factor(k, sp, 2, 1)
    assert P.degree == 2
    assert P.body == expected
    dens = {(f.a, f.b, repr(f)) for f in P.body.factors}
    assert len(dens) == 4
    assert is_symmetric(P.body)


def test_assembled_numerator_divisibility():
    # the numerator over the 4-factor denominator is divisible by both
    # (1 - z1/z2) and (1 - z2/z1), but by neither q1 q2 factor
    P = shuffle_product(ONE, ONE).body
    for f in P.factors:
        if f.coeff == f.coeff.space.one():
            divide_exact(P.numerator, f)
        else:
            with pytest.raises(NotDivisible):
                divide_exact(P.numerator, f)


def test_normalized_product_cancels_simple_poles():
    P = shuffle_product(ONE, ONE, normalize=True)
    assert P == shuffle_product(ONE, ONE)
    assert len(P.body.factors) == 2
    assert all(f.coeff != f.coeff.space.one() for f in P.body.factors)


def test_generator_element():
    assert generator_element(S1.one()).degree == 1
    assert generator_element(S1.z(1)).body == RatElem(S1.z(1))
    from kwheel.coeffrings import builtin_kp2

    kp2 = builtin_kp2()
    sp = surface_space(1, kp2.ring)
    g = generator_element(sp.const(sp.ring.place({0: kp2.ring.basis(1)})) * sp.z(1))
    ((_, b), c), = g.body.numerator.raw.items()
    assert c == 1 and sp.ring.digits(b) == (1,)


def _bodies(rng, k):
    return [generator_element(random_element(S1, rng, terms=rng.randint(1, 2)) or S1.one()) for _ in range(k)]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_products_are_symmetric(seed):
    rng = random.Random(seed)
    F, G, H = _bodies(rng, 3)
    P = shuffle_product(shuffle_product(F, G), H)
    assert P.degree == 3
    assert is_symmetric(P.body)


def test_trivial_kernel_matches_symmetrized_product():
    rng = random.Random(11)
    for _ in range(10):
        F, G = _bodies(rng, 2)
        FG = shuffle_product(F, G, TRIVIAL_KERNEL)
        assert FG == symmetrized_product(F, G)
        H = _bodies(rng, 1)[0]
        assert shuffle_product(FG, H, TRIVIAL_KERNEL) == symmetrized_product(FG, H)


def test_symmetrized_product_rejects_non_symmetric():
    sp = torus_space(2)
    with pytest.raises(ValueError):
        symmetrized_product(GradedElem(2, sp.z(1)), ONE)


def test_associativity_units():
    assert associativity_check(ONE, ONE, ONE)
    assert associativity_check(ONE, ONE, ONE, TRIVIAL_KERNEL)


def test_associativity_units_is_full_symmetrization():
    k = default_plane_kernel()
    sp = torus_space(3)
    left = shuffle_product(shuffle_product(ONE, ONE), ONE)
    zeta = RatElem(sp.one())
    for i, j in itertools.combinations(range(1, 4), 2):
        zeta = zeta * kernel_factor(k, sp, i, j)
    assert left.body == symmetrize(zeta)


def test_associativity_random_monomials():
    rng = random.Random(8)
    for _ in range(20):
        F, G, H = (generator_element(S1.monomial((rng.randint(-1, 1),), (rng.randint(-1, 1), 0))) for _ in range(3))
        assert associativity_check(F, G, H)


def test_associativity_mixed_degrees():
    rng = random.Random(9)
    F, G, H = _bodies(rng, 3)
    FG = shuffle_product(F, G)
    assert associativity_check(FG, H, F)
    assert associativity_check(H, FG, G)


def test_surface_mode_shuffle(kp2):
    sq = tensor_power(kp2.ring, 2)
    L = kp2.hyperplane
    kernel = KernelSpec((sq.place({0: L}),), (sq.place({1: L}),))
    sp = surface_space(1, kp2.ring)
    F = generator_element(sp.z(1) + sp.const(sp.ring.place({0: kp2.ring.basis(1)})))
    G = generator_element(sp.one())
    P = shuffle_product(F, G, kernel)
    assert P.degree == 2
    assert is_symmetric(P.body)
    assert shuffle_product(F, G, kernel, normalize=True) == P
    with pytest.raises(ModelMismatch):
        shuffle_product(F, ONE)


def test_kernel_file_roundtrip(kp2):
    k = default_plane_kernel()
    assert parse_kernel(format_kernel(k)) == k
    assert parse_kernel("zeta num:\nzeta den:\n") == TRIVIAL_KERNEL
    sq = tensor_power(kp2.ring, 2)
    sk = KernelSpec((sq.place({0: kp2.hyperplane}),), ())
    assert parse_kernel(format_kernel(sk), kp2.ring) == sk
    with pytest.raises(ValueError):
        parse_kernel("zeta num: q1\nzeta num: q2\n")
    with pytest.raises(ValueError):
        parse_kernel("kernel: q1\n")


def test_pole_wheel_experiment():
    res = pole_wheel_experiment(degree=3, trials=4, seed=1)
    assert len(res.lines) == 4
    assert res.passed + res.failed == 4
    assert res.summary.startswith("total=4 ")
    with pytest.raises(ValueError):
        pole_wheel_experiment(degree=2)
