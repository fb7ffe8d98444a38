import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwheel.equivariant import (
    ORDERINGS,
    CoordSubspace,
    WeightMonomial,
    comm_campaign,
    comm_wheel_membership,
    coordinate_weight,
    enumerate_comm_subspaces,
    is_commuting_subspace,
    koszul_restrict_class,
    ordered_triples,
    symmetric_wheel_check,
    union_class,
    union_wheel_image,
    weights_of_glpair,
)
from kwheel.laurent import random_element, substitute_monomial, symmetrize, torus_space

from strategies import torus

T3 = torus_space(3)
V = CoordSubspace(3, {(1, 2)}, {(2, 3)})
V1 = CoordSubspace(3, {(1, 2)})
V2 = CoordSubspace(3, (), {(2, 3)})


def test_weights_small():
    assert [w.as_laurent() for w in weights_of_glpair(1)] == [torus_space(1).q1, torus_space(1).q2]
    assert coordinate_weight(2, "A", 1, 2).as_laurent() == torus_space(2).q1 * torus_space(2).ratio(1, 2)
    w = coordinate_weight(3, "B", 2, 3)
    assert w.as_laurent() == T3.q2 * T3.ratio(2, 3)
    assert 1 - w.inverse().as_laurent() == 1 - T3.q(2, -1) * T3.ratio(3, 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_weights_count_and_symmetry(n):
    ws = weights_of_glpair(n)
    assert len(ws) == 2 * n * n
    bag = sorted((w.q, w.z) for w in ws)
    flipped = sorted((w.q, tuple(-e for e in w.z)) for w in ws)
    assert bag == flipped


def test_is_commuting_subspace():
    assert is_commuting_subspace(CoordSubspace(1, {(1, 1)}, {(1, 1)}))
    assert not is_commuting_subspace(V)
    assert is_commuting_subspace(CoordSubspace(3, {(1, 2)}, {(1, 2)}))


def _matrix_commute(L: CoordSubspace) -> bool:
    # generic point: integer entries drawn at random, bracket computed directly
    rng = random.Random(0)
    n = L.n
    X = [[0] * n for _ in range(n)]
    Y = [[0] * n for _ in range(n)]
    for a, b in L.setA:
        X[a - 1][b - 1] = rng.randint(1, 10**6)
    for c, d in L.setB:
        Y[c - 1][d - 1] = rng.randint(1, 10**6)
    XY = [[sum(X[i][t] * Y[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    YX = [[sum(Y[i][t] * X[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    return XY == YX


def test_commuting_matches_matrices():
    pairs = list(itertools.product(range(1, 3), repeat=2))
    for A in itertools.chain.from_iterable(itertools.combinations(pairs, r) for r in range(5)):
        for B in itertools.chain.from_iterable(itertools.combinations(pairs, r) for r in range(5)):
            L = CoordSubspace(2, A, B)
            assert is_commuting_subspace(L) == _matrix_commute(L)


def test_koszul_examples():
    assert koszul_restrict_class(V, V) == T3.one()
    assert koszul_restrict_class(V1, V) == 1 - T3.q(2, -1) * T3.ratio(3, 2)
    assert koszul_restrict_class(V2, V) == 1 - T3.q(1, -1) * T3.ratio(2, 1)
    S1 = torus_space(1)
    assert koszul_restrict_class(CoordSubspace.zero(1), CoordSubspace.full(1)) == (1 - S1.q(1, -1)) * (
        1 - S1.q(2, -1)
    )
    with pytest.raises(ValueError):
        koszul_restrict_class(V, V1)


@st.composite
def chains(draw):
    n = draw(st.integers(1, 3))
    coords = [("A", p) for p in itertools.product(range(1, n + 1), repeat=2)]
    coords += [("B", p) for p in itertools.product(range(1, n + 1), repeat=2)]
    levels = [draw(st.integers(0, 2)) for _ in coords]

    def sub(k):
        chosen = [c for c, lv in zip(coords, levels) if lv <= k]
        return CoordSubspace(n, [p for t, p in chosen if t == "A"], [p for t, p in chosen if t == "B"])

    return sub(0), sub(1), sub(2)


@settings(max_examples=40)
@given(chains())
def test_koszul_multiplicativity(chain):
    L, M, N = chain
    assert koszul_restrict_class(L, M) * koszul_restrict_class(M, N) == koszul_restrict_class(L, N)


def test_union_examples():
    assert union_class([V1], V) == koszul_restrict_class(V1, V)
    a = 1 - T3.q(2, -1) * T3.ratio(3, 2)
    b = 1 - T3.q(1, -1) * T3.ratio(2, 1)
    assert union_class([V1, V2], V) == a + b - a * b


def _face_formula(parts, M):
    """K-polynomial of the Stanley-Reisner ring, summed over faces."""
    sp = torus_space(M.n)
    coords = [("A", p) for p in sorted(M.setA)] + [("B", p) for p in sorted(M.setB)]
    t = {c: coordinate_weight(M.n, c[0], *c[1]).inverse().as_laurent() for c in coords}
    covers = [{("A", p) for p in L.setA} | {("B", p) for p in L.setB} for L in parts]
    total = sp.zero()
    for r in range(len(coords) + 1):
        for face in itertools.combinations(coords, r):
            if not any(set(face) <= c for c in covers):
                continue
            term = sp.one()
            for c in coords:
                term = term * (t[c] if c in face else 1 - t[c])
            total = total + term
    return total


def test_union_matches_face_formula():
    rng = random.Random(5)
    M = CoordSubspace.full(2)
    coords = [("A", p) for p in itertools.product((1, 2), repeat=2)]
    coords += [("B", p) for p in itertools.product((1, 2), repeat=2)]
    for _ in range(30):
        parts = []
        for _ in range(rng.randint(1, 3)):
            chosen = rng.sample(coords, rng.randint(0, 6))
            parts.append(CoordSubspace(2, [p for t, p in chosen if t == "A"], [p for t, p in chosen if t == "B"]))
        assert union_class(parts, M) == _face_formula(parts, M)


def test_comm_membership_examples():
    assert comm_wheel_membership(T3.z(3) - T3.q1 * T3.z(2), (1, 2, 3), "q1q2")
    assert comm_wheel_membership(1 - T3.q(2, -1) * T3.ratio(3, 2), (1, 2, 3), "q2q1")
    assert not comm_wheel_membership(T3.one(), (1, 2, 3), "q1q2")
    with pytest.raises(ValueError):
        comm_wheel_membership(T3.one(), (1, 1, 3))


@settings(max_examples=30)
@given(torus(3), torus(3), torus(3), st.sampled_from(ORDERINGS))
def test_comm_membership_is_ideal(a, b, h, ordering):
    g1 = T3.z(3) - (T3.q1 if ordering == "q1q2" else T3.q2) * T3.z(2)
    g2 = T3.z(2) - (T3.q2 if ordering == "q1q2" else T3.q1) * T3.z(1)
    m = a * g1 + b * g2
    assert comm_wheel_membership(m, (1, 2, 3), ordering)
    assert comm_wheel_membership(m * h, (1, 2, 3), ordering)
    assert comm_wheel_membership(m + a * g1, (1, 2, 3), ordering)


def test_symmetric_wheel_check():
    assert symmetric_wheel_check(T3.zero(), 3)
    assert not symmetric_wheel_check(T3.one(), 3)
    x = (T3.z(3) - T3.q1 * T3.z(2)) * (T3.z(2) - T3.q2 * T3.z(1)) * T3.z(1, 2)
    s = symmetrize(x)
    assert comm_wheel_membership(x, (1, 2, 3), "q1q2")

    brute = True
    for t in ordered_triples(3):
        for o in ORDERINGS:
            qx, qy = (T3.scalars().q1, T3.scalars().q2) if o == "q1q2" else (T3.scalars().q2, T3.scalars().q1)
            i, j, k = t
            mj = [0, 0, 0]
            mj[j - 1] = 1
            mi = [0, 0, 0]
            mi[i - 1] = 1
            y = substitute_monomial(substitute_monomial(s, k, qx, mj), j, qy, mi)
            brute = brute and y.is_zero()
    assert symmetric_wheel_check(s, 3) == brute


def test_enumerate_small():
    assert len(enumerate_comm_subspaces(1, 2)) == 4
    subs = enumerate_comm_subspaces(2, 8)
    pairs = list(itertools.product((1, 2), repeat=2))
    brute = 0
    for mask in range(256):
        A = [p for t, p in enumerate(pairs) if mask >> t & 1]
        B = [p for t, p in enumerate(pairs) if mask >> (t + 4) & 1]
        brute += is_commuting_subspace(CoordSubspace(2, A, B))
    assert len(subs) == brute
    assert len(set(subs)) == len(subs)
    assert all(is_commuting_subspace(L) for L in subs)


def test_union_wheel_image_matches_substitution():
    rng = random.Random(2)
    subs = enumerate_comm_subspaces(3, 18)
    M = CoordSubspace.full(3)
    sc = T3.scalars()
    for _ in range(10):
        parts = rng.sample(subs, 2)
        cls = union_class(parts, M)
        for t in [(1, 2, 3), (3, 1, 2)]:
            for o in ORDERINGS:
                assert union_wheel_image(parts, M, t, o).is_zero() == comm_wheel_membership(cls, t, o)


def test_comm_campaign_small():
    res = comm_campaign(n=3, size_bound=3, n_unions=20, seed=1)
    assert res.failed == 0
    assert res.summary == f"total={res.total} pass={res.total} fail=0"
    assert res.total == 6 * (res.n_subspaces + res.n_unions)
