"""Torus-equivariant classes of coordinate subspaces of gl_n + gl_n.

The torus ``T_n x G_m^2`` acts on the coordinate ``(E_ab, 0)`` with weight
``q1 z_a / z_b`` and on ``(0, E_cd)`` with weight ``q2 z_c / z_d``.  For a
linear subspace L of M, restricting the class of L to the origin of M gives
the Koszul product ``prod_{w in wt(M/L)} (1 - w^-1)``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .laurent import LaurentElem, is_symmetric, substitute_monomial, torus_space

ORDERINGS = ("q1q2", "q2q1")

Pair = tuple[int, int]


@dataclass(frozen=True)
class CoordSubspace:
    """Span of ``(E_ab, 0)`` for ``(a, b)`` in setA and ``(0, E_cd)`` for ``(c, d)`` in setB (1-based)."""

    n: int
    setA: frozenset[Pair] = frozenset()
    setB: frozenset[Pair] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "setA", frozenset(tuple(p) for p in self.setA))
        object.__setattr__(self, "setB", frozenset(tuple(p) for p in self.setB))
        for a, b in itertools.chain(self.setA, self.setB):
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise ValueError(f"index pair ({a}, {b}) outside 1..{self.n}")

    @classmethod
    def full(cls, n: int) -> CoordSubspace:
        pairs = frozenset(itertools.product(range(1, n + 1), repeat=2))
        return cls(n, pairs, pairs)

    @classmethod
    def zero(cls, n: int) -> CoordSubspace:
        return cls(n)

    @property
    def dim(self) -> int:
        return len(self.setA) + len(self.setB)

    def __le__(self, other: CoordSubspace) -> bool:
        return self.n == other.n and self.setA <= other.setA and self.setB <= other.setB

    def __and__(self, other: CoordSubspace) -> CoordSubspace:
        return CoordSubspace(self.n, self.setA & other.setA, self.setB & other.setB)

    def mirror(self) -> CoordSubspace:
        """Image under (X, Y) -> (Y, X)."""
        return CoordSubspace(self.n, self.setB, self.setA)

    def label(self) -> str:
        def fmt(pairs):
            return " ".join(f"{a}{b}" for a, b in sorted(pairs))

        return f"X[{fmt(self.setA)}] Y[{fmt(self.setB)}]"

    def sort_key(self):
        return (self.dim, sorted(self.setA), sorted(self.setB))


@dataclass(frozen=True)
class WeightMonomial:
    q: tuple[int, int]
    z: tuple[int, ...]

    def as_laurent(self) -> LaurentElem:
        return torus_space(len(self.z)).monomial(self.z, self.q)

    def inverse(self) -> WeightMonomial:
        return WeightMonomial((-self.q[0], -self.q[1]), tuple(-e for e in self.z))


def coordinate_weight(n: int, kind: str, a: int, b: int) -> WeightMonomial:
    """Weight of the X- (``kind='A'``) or Y-coordinate (``kind='B'``) E_ab."""
    z = [0] * n
    z[a - 1] += 1
    z[b - 1] -= 1
    return WeightMonomial((1, 0) if kind == "A" else (0, 1), tuple(z))


def weights_of_glpair(n: int) -> list[WeightMonomial]:
    """All 2n^2 weights, X-coordinates first, each block row-major."""
    if n < 1:
        raise ValueError("n >= 1 required")
    pairs = list(itertools.product(range(1, n + 1), repeat=2))
    return [coordinate_weight(n, "A", a, b) for a, b in pairs] + [coordinate_weight(n, "B", a, b) for a, b in pairs]


def _commute(ab: Pair, cd: Pair) -> bool:
    # [E_ab, E_cd] = d_bc E_ad - d_da E_cb
    (a, b), (c, d) = ab, cd
    first, second = b == c, d == a
    if first and second:
        return (a, d) == (c, b)
    return not (first or second)


def is_commuting_subspace(L: CoordSubspace) -> bool:
    """Whether the generic point of L lies in Comm_n.

    The bracket of generic elements is ``sum x_ab y_cd [E_ab, E_cd]`` with distinct
    monomials ``x_ab y_cd``, so it vanishes iff every basis pair commutes.
    """
    return all(_commute(ab, cd) for ab in L.setA for cd in L.setB)


def koszul_restrict_class(L: CoordSubspace, M: CoordSubspace) -> LaurentElem:
    """``prod_{w in wt(M / L)} (1 - w^-1)`` in ``Z[q^+-1][z^+-1]``."""
    if not L <= M:
        raise ValueError(f"{L.label()} is not contained in {M.label()}")
    return _koszul(L, M)


@lru_cache(maxsize=None)
def _koszul(L: CoordSubspace, M: CoordSubspace) -> LaurentElem:
    result = torus_space(M.n).one()
    for w in _missing_weights(L, M):
        w = w.inverse()
        result = result - result.shift(w.z, w.q)
    return result


def union_class(parts: Sequence[CoordSubspace], M: CoordSubspace) -> LaurentElem:
    """Class of the union of coordinate subspaces, by inclusion-exclusion over intersections."""
    if not parts:
        raise ValueError("union of no subspaces")
    for p in parts:
        if not p <= M:
            raise ValueError(f"{p.label()} is not contained in {M.label()}")
    total = torus_space(M.n).zero()
    for size in range(1, len(parts) + 1):
        sign = 1 if size % 2 else -1
        for combo in itertools.combinations(parts, size):
            meet = combo[0]
            for p in combo[1:]:
                meet = meet & p
            total = total + sign * _koszul(meet, M)
    return total


def _check_triple(triple: Sequence[int], n: int, ordering: str) -> None:
    if len(triple) != 3 or len(set(triple)) != 3:
        raise ValueError(f"triple {tuple(triple)} must have three distinct indices")
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}")
    if not all(1 <= t <= n for t in triple):
        raise ValueError(f"triple {tuple(triple)} outside 1..{n}")


def comm_wheel_membership(x: LaurentElem, triple: Sequence[int], ordering: str = "q1q2") -> bool:
    """Whether x lies in ``(z_k - qx z_j, z_j - qy z_i)``; ``ordering`` names (qx, qy).

    Exact: the quotient by these generators is the Laurent ring in the other
    variables via z_k -> qx z_j, then z_j -> qy z_i.
    """
    n = x.n
    _check_triple(triple, n, ordering)
    i, j, k = triple
    qx, qy = (1, 2) if ordering == "q1q2" else (2, 1)
    sc = torus_space(0)
    mono_j = [0] * n
    mono_j[j - 1] = 1
    mono_i = [0] * n
    mono_i[i - 1] = 1
    y = substitute_monomial(x, k, sc.q(qx), mono_j)
    y = substitute_monomial(y, j, sc.q(qy), mono_i)
    return y.is_zero()


def _wheel_exponent_map(triple: Sequence[int], ordering: str):
    i, j, k = (t - 1 for t in triple)
    qx, qy = (0, 1) if ordering == "q1q2" else (1, 0)

    def image(w: WeightMonomial) -> tuple:
        z = list(w.z)
        q = list(w.q)
        # z_k -> qx z_j, then z_j -> qy z_i
        q[qx] += z[k]
        z[j] += z[k]
        z[k] = 0
        q[qy] += z[j]
        z[i] += z[j]
        z[j] = 0
        return tuple(z), tuple(q)

    return image


def union_wheel_image(
    parts: Sequence[CoordSubspace], M: CoordSubspace, triple: Sequence[int], ordering: str = "q1q2"
) -> LaurentElem:
    """Image of ``union_class(parts, M)`` under the wheel quotient map.

    Equal to substituting into the expanded class, but each Koszul factor is
    mapped before multiplying, so the products stay small.
    """
    _check_triple(triple, M.n, ordering)
    image = _wheel_exponent_map(triple, ordering)
    space = torus_space(M.n)
    total = space.zero()
    for size in range(1, len(parts) + 1):
        sign = 1 if size % 2 else -1
        for combo in itertools.combinations(parts, size):
            meet = combo[0]
            for p in combo[1:]:
                meet = meet & p
            term = space.one()
            for w in _missing_weights(meet, M):
                z, q = image(w.inverse())
                term = term - term.shift(z, q)
            total = total + sign * term
    return total


def _missing_weights(L: CoordSubspace, M: CoordSubspace) -> list[WeightMonomial]:
    return [
        coordinate_weight(M.n, kind, a, b)
        for kind, pairs, sub in (("A", M.setA, L.setA), ("B", M.setB, L.setB))
        for a, b in sorted(pairs - sub)
    ]


def _weight_multiset(L: CoordSubspace, M: CoordSubspace, swap: bool = False) -> list:
    return sorted((w.q[::-1] if swap else w.q, w.z) for w in _missing_weights(L, M))


def ordered_triples(n: int) -> list[tuple[int, int, int]]:
    return list(itertools.permutations(range(1, n + 1), 3))


def comm_wheel_table(x: LaurentElem, orderings: Iterable[str] = ORDERINGS) -> dict[tuple, bool]:
    """``{(triple, ordering): member?}`` over all ordered distinct triples."""
    return {
        (t, o): comm_wheel_membership(x, t, o) for t in ordered_triples(x.n) for o in orderings
    }


def symmetric_wheel_check(x: LaurentElem, n: int | None = None) -> bool:
    """Membership in the symmetric part of the intersection over all triples and both orderings."""
    if n is not None and n != x.n:
        raise ValueError(f"element has {x.n} variables, expected {n}")
    if not is_symmetric(x):
        return False
    return all(comm_wheel_table(x).values())


def _compatibility(n: int):
    coords = [("A", p) for p in itertools.product(range(1, n + 1), repeat=2)]
    coords += [("B", p) for p in itertools.product(range(1, n + 1), repeat=2)]
    ok = {}
    for u, v in itertools.combinations(coords, 2):
        if u[0] == v[0]:
            ok[u, v] = ok[v, u] = True
        else:
            ab, cd = (u[1], v[1]) if u[0] == "A" else (v[1], u[1])
            ok[u, v] = ok[v, u] = _commute(ab, cd)
    return coords, ok


def enumerate_comm_subspaces(n: int, size_bound: int) -> list[CoordSubspace]:
    """All commuting coordinate subspaces with ``|setA| + |setB| <= size_bound``.

    Backtracking over the pairwise-compatibility graph of the 2n^2 coordinates;
    output ordered by (dimension, setA, setB).
    """
    coords, ok = _compatibility(n)
    found = []

    def walk(start: int, chosen: list):
        found.append(list(chosen))
        if len(chosen) >= size_bound:
            return
        for idx in range(start, len(coords)):
            c = coords[idx]
            if all(ok[c, d] for d in chosen):
                chosen.append(c)
                walk(idx + 1, chosen)
                chosen.pop()

    walk(0, [])
    subs = [
        CoordSubspace(n, [p for kind, p in ch if kind == "A"], [p for kind, p in ch if kind == "B"])
        for ch in found
    ]
    return sorted(subs, key=CoordSubspace.sort_key)


# -- the desk-scale commuting-variety campaign --------------------------------


@dataclass
class CommCampaignResult:
    lines: list[str]
    total: int
    passed: int
    failed: int
    ordering_counts: dict[str, list[int]]
    n_subspaces: int
    n_unions: int

    @property
    def summary(self) -> str:
        return f"total={self.total} pass={self.passed} fail={self.failed}"


def _mirror_ordering(o: str) -> str:
    return "q2q1" if o == "q1q2" else "q1q2"


def comm_campaign(
    n: int = 3, size_bound: int | None = None, n_unions: int = 500, seed: int = 0
) -> CommCampaignResult:
    """Check every commuting coordinate subspace and sampled pairwise unions.

    A (class, triple) check passes when some ordering gives membership and, for
    each passing ordering, the mirrored class (X <-> Y) passes the mirrored ordering.
    Membership is decided on the image of the class in the wheel quotient, which
    is zero exactly when the expanded class lies in the ideal.
    """
    if size_bound is None:
        size_bound = 2 * n * n
    subs = enumerate_comm_subspaces(n, size_bound)
    rng = random.Random(seed)
    pairs = list(itertools.combinations(range(len(subs)), 2))
    picked = sorted(rng.sample(pairs, min(n_unions, len(pairs))))
    cases: list[list[CoordSubspace]] = [[L] for L in subs] + [[subs[a], subs[b]] for a, b in picked]
    M = CoordSubspace.full(n)
    triples = ordered_triples(n)
    lines = []
    counts = {o: [0, 0] for o in ORDERINGS}
    passed = failed = 0
    for parts in cases:
        mirrored = [p.mirror() for p in parts]
        label = " u ".join(p.label() for p in parts)
        # X <-> Y swaps q1 and q2 in every Koszul weight; meets commute with mirroring
        mirror_ok = all(_weight_multiset(p.mirror(), M) == _weight_multiset(p, M, swap=True) for p in parts)
        for t in triples:
            table = {o: union_wheel_image(parts, M, t, o).is_zero() for o in ORDERINGS}
            for o, ok in table.items():
                counts[o][0 if ok else 1] += 1
                lines.append(f"{label} triple={t[0]},{t[1]},{t[2]} ordering={o} {'PASS' if ok else 'FAIL'}")
            good = any(table.values()) and mirror_ok
            for o, ok in table.items():
                if ok:
                    good = good and union_wheel_image(mirrored, M, t, _mirror_ordering(o)).is_zero()
            if good:
                passed += 1
            else:
                failed += 1
    return CommCampaignResult(
        lines=lines,
        total=passed + failed,
        passed=passed,
        failed=failed,
        ordering_counts=counts,
        n_subspaces=len(subs),
        n_unions=len(picked),
    )

