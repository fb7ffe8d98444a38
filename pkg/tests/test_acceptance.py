"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every test measures its own wall time against the stated limit; exceeding the
limit fails the criterion even when all checks agree.
"""

import itertools
import random
import time

import pytest

from conftest import record_acceptance
from kwheel.coeffrings import augmentation, builtin_kp2, invert, ring_validate, tensor_power
from kwheel.conditions import (
    PoleViolation,
    WheelIdealSpec,
    cross_validate,
    multiplier_phi,
    pole_check,
    surface_wheel_membership,
)
from kwheel.equivariant import CoordSubspace, comm_campaign, comm_wheel_membership, koszul_restrict_class
from kwheel.laurent import (
    BinomialFactor,
    LaurentElem,
    RatElem,
    Space,
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
    associativity_check,
    shuffle_product,
    symmetrized_product,
)

KP2 = builtin_kp2()


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def finish(number, ok, timer, limit, detail):
    line = record_acceptance(number, ok, timer.elapsed, limit, detail)
    assert line.split()[2] == "PASS", line


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_proof_classes():
    with Timer() as t:
        T3 = torus_space(3)
        V = CoordSubspace(3, {(1, 2)}, {(2, 3)})
        V1 = CoordSubspace(3, {(1, 2)})
        V2 = CoordSubspace(3, (), {(2, 3)})
        c1 = koszul_restrict_class(V1, V)
        c2 = koszul_restrict_class(V2, V)
        ok = c1 == 1 - T3.q(2, -1) * T3.ratio(3, 2)
        ok &= c2 == 1 - T3.q(1, -1) * T3.ratio(2, 1)
        ok &= comm_wheel_membership(c1, (1, 2, 3), "q2q1")
        ok &= comm_wheel_membership(c2, (1, 2, 3), "q2q1")
    finish(1, ok, t, 1, "V1 and V2 classes exact, both in (z3 - q2 z2, z2 - q1 z1)")


# -- 2 ----------------------------------------------------------------------


def test_criterion_2_comm_campaign():
    with Timer() as t:
        res = comm_campaign(n=3, size_bound=18, n_unions=500, seed=0)
    ok = res.failed == 0 and res.n_unions >= 500
    per = " ".join(f"{o}:{p}/{p + f}" for o, (p, f) in res.ordering_counts.items())
    finish(
        2,
        ok,
        t,
        300,
        f"{res.n_subspaces} subspaces, {res.n_unions} unions, {res.summary}, per-ordering {per}",
    )


# -- 3 ----------------------------------------------------------------------


def test_criterion_3_oracle_agreement():
    with Timer() as t:
        comm = cross_validate(WheelIdealSpec((1, 2, 3), mode="comm"), torus_space(3), 200, 200, seed=0)
        surf = cross_validate(
            WheelIdealSpec((1, 2, 3), surf=KP2), Space(3, tensor_power(KP2.ring, 1)), 200, 200, seed=0
        )
    ok = comm.ok and surf.ok
    detail = (
        f"comm {comm.summary} certified={comm.certified}; "
        f"kp2 {surf.summary} certified={surf.certified}"
    )
    finish(3, ok, t, 120, detail)


# -- 4 ----------------------------------------------------------------------


def _non_member(space, rng, triple, gens):
    """A random ideal element plus a nonzero normal form, so never a member."""
    i, j, k = triple
    R = space.ring
    while True:
        a = R.element([rng.randint(-3, 3) for _ in range(R.rank)])
        b = R.element([rng.randint(-3, 3) for _ in range(R.rank)])
        if not (a.is_zero() and b.is_zero()):
            break
    e = [0] * space.n
    e[k - 1] = rng.randint(-2, 2)
    rest = space.monomial(e)
    r = rest * (space.const(a) + space.const(b) * space.ratio(j, k))
    m = random_element(space, rng, terms=2) * gens[0] + random_element(space, rng, terms=2) * gens[1]
    return m + r


def test_criterion_4_surface_checker():
    triple = (1, 2, 3)
    space = Space(3, tensor_power(KP2.ring, 1))
    rng = random.Random(4)
    with Timer() as t:
        g1, g2 = WheelIdealSpec(triple, surf=KP2).generators(space)
        gens_ok = surface_wheel_membership(g1, triple, KP2) and surface_wheel_membership(g2, triple, KP2)
        combos_ok = all(
            surface_wheel_membership(
                random_element(space, rng, terms=3) * g1 + random_element(space, rng, terms=3) * g2, triple, KP2
            )
            for _ in range(50)
        )
        unit_rejected = not surface_wheel_membership(space.one(), triple, KP2)
        rejected = sum(
            not surface_wheel_membership(_non_member(space, rng, triple, (g1, g2)), triple, KP2) for _ in range(60)
        )
        closure = 0
        for _ in range(100):
            m = random_element(space, rng, terms=2) * g1 + random_element(space, rng, terms=2) * g2
            closure += surface_wheel_membership(m * random_element(space, rng, terms=3), triple, KP2)
    ok = gens_ok and combos_ok and unit_rejected and rejected == 60 and closure == 100
    detail = (
        f"generators={'MEMBER' if gens_ok else 'NOT-MEMBER'} combinations=50 "
        f"unit={'NOT-MEMBER' if unit_rejected else 'MEMBER'} non-members rejected={rejected}/60 closure={closure}/100"
    )
    finish(4, ok, t, 60, detail)


# -- 5 ----------------------------------------------------------------------


def _rank_image(x: LaurentElem) -> LaurentElem:
    out: dict = {}
    for (e, b), c in x.raw.items():
        out[e] = out.get(e, 0) + c * augmentation(x.space.ring.basis(b), (1, 0, 0))
    return LaurentElem.from_terms(Space(x.n), out)


def _unit_coefficient(space, rng):
    # a product of powers of L in the slots: a unit whose rank image is 1
    L = KP2.hyperplane
    return space.ring.place({s: L ** rng.randint(-2, 2) for s in range(space.n)})


def test_criterion_5_pole_checker():
    rng = random.Random(5)
    constructed = violations = 0
    exact = True
    with Timer() as t:
        for n, count in ((2, 60), (3, 50)):
            space = surface_space(n, KP2.ring)
            phi = multiplier_phi(n, KP2)
            for _ in range(count):
                factors = []
                for _ in range(rng.randint(1, 2)):
                    a, b = rng.sample(range(1, n + 1), 2)
                    factors.append(BinomialFactor(space.scalars().const(_unit_coefficient(space, rng)), a, b))
                # H must survive z_a = -z_b in the rank image, so the flipped factor cannot divide
                bad = factors[0]
                while True:
                    H = random_element(space, rng, terms=rng.randint(1, 3))
                    mono = [0] * n
                    mono[bad.b - 1] = 1
                    if substitute_monomial(_rank_image(H), bad.a, -1, mono):
                        break
                num = H
                for f in factors:
                    num = num * f.as_laurent(space)
                constructed += 1
                exact &= pole_check(RatElem(num, factors), KP2) == phi * H
                flipped = BinomialFactor(-bad.coeff, bad.a, bad.b)
                try:
                    pole_check(RatElem(num, [flipped] + factors[1:]), KP2)
                except PoleViolation as exc:
                    violations += exc.factor == flipped
    ok = exact and constructed >= 100 and violations == constructed
    finish(5, ok, t, 60, f"constructed={constructed} exact={exact} perturbed violations={violations}/{constructed}")


# -- 6 ----------------------------------------------------------------------


def test_criterion_6_ring_validation():
    with Timer() as t:
        R = KP2.ring
        base = ring_validate(R)
        square = ring_validate(tensor_power(R, 2))
        one = R.one()
        omega_ok = KP2.omega * invert(KP2.omega) == one
        nilpotent = (KP2.hyperplane - one) ** 3 == R.zero()
    checks = R.rank**3 + R.rank**2 + R.rank
    ok = not base and not square and omega_ok and nilpotent
    finish(6, ok, t, 1, f"rank 3 checks={checks} problems={len(base)}; rank 9 problems={len(square)}; omega unit; (L-1)^3=0")


# -- 7 ----------------------------------------------------------------------


def _monomial_symmetric(exps, q=(0, 0)):
    sp = torus_space(len(exps))
    body = sp.zero()
    for perm in set(itertools.permutations(exps)):
        body = body + sp.monomial(perm, q)
    return GradedElem(len(exps), body)


def _bodies_up_to(d):
    return [_monomial_symmetric(lam) for lam in itertools.combinations_with_replacement((1, 0), d)]


def _trivial_ok(F, G, H):
    # zeta = 1: compare against plain symmetrized multiplication
    left = shuffle_product(shuffle_product(F, G, TRIVIAL_KERNEL), H, TRIVIAL_KERNEL)
    return left == symmetrized_product(symmetrized_product(F, G), H) and associativity_check(
        F, G, H, TRIVIAL_KERNEL
    )


def test_criterion_7_associativity():
    plane = trivial = cases = 0
    with Timer() as t:
        for degs in itertools.product(range(1, 3), repeat=3):
            if sum(degs) > 4:
                continue
            for F, G, H in itertools.product(*(_bodies_up_to(d) for d in degs)):
                cases += 1
                plane += associativity_check(F, G, H)
                trivial += _trivial_ok(F, G, H)
        small = cases
        rng = random.Random(7)
        compositions = [c for c in itertools.product(range(1, 4), repeat=3) if sum(c) == 5]
        for _ in range(20):
            degs = rng.choice(compositions)
            F, G, H = (
                _monomial_symmetric(
                    tuple(sorted((rng.randint(0, 1) for _ in range(d)), reverse=True)),
                    (rng.randint(-1, 1), rng.randint(-1, 1)),
                )
                for d in degs
            )
            cases += 1
            plane += associativity_check(F, G, H)
            trivial += _trivial_ok(F, G, H)
    ok = plane == cases and trivial == cases
    finish(
        7,
        ok,
        t,
        120,
        f"degree<=4 triples={small}, degree-5 trials={cases - small}; plane {plane}/{cases}, trivial kernel {trivial}/{cases}",
    )


# -- 8 ----------------------------------------------------------------------


def test_criterion_8_symmetrization_speed():
    space = surface_space(6, KP2.ring)
    rng = random.Random(8)
    x = space.zero()
    while len(x) < 50:
        x = x + random_element(space, rng, terms=50 - len(x), spread=2)
    with Timer() as t:
        s = symmetrize(x)
    ok = is_symmetric(s) and len(x) == 50
    finish(8, ok, t, 10, f"S6 over K(P2)^(x)6, input terms={len(x)}, output terms={len(s)}")
