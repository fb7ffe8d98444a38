"""Pole and wheel conditions for classes with K(S)^{(x)n} coefficients.

The wheel ideal for a triple (i, j, k) is generated by ``1 - (z_i/z_k) omega``
and ``1 - c1 v + c2 v^2`` with ``v = z_j/z_k``, ``c1 = [Omega_S]``,
``c2 = omega_S``.  Membership is decided by substituting ``z_i/z_k -> omega^-1``
and reducing modulo the quadratic, whose constant and leading coefficients are
both units.  Torus-mode inputs use ``omega = q1 q2`` and ``c1 = q1 + q2``.
"""

from __future__ import annotations

import itertools
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from .coeffrings import (
    ZZ,
    KSurfaceModel,
    ModelMismatch,
    RingModel,
    TensorPowerModel,
    solve_rational,
    tensor_power,
)
from .equivariant import ORDERINGS, comm_wheel_membership
from .laurent import (
    BinomialFactor,
    FlintLaurent,
    LaurentElem,
    NotDivisible,
    RatElem,
    Space,
    divide_exact,
    monomial_inverse,
    random_element,
    surface_space,
    torus_space,
)

ORIENTATIONS = ("ji", "ij")
MAX_ORACLE_UNKNOWNS = 4000


class PoleViolation(ArithmeticError):
    """The multiplied class keeps a pole along ``factor``."""

    def __init__(self, factor: BinomialFactor):
        from .parser import format_factor

        self.factor = factor
        super().__init__(f"factor={format_factor(factor)}")


class OracleTooLarge(ValueError):
    pass


def _check_triple(triple: Sequence[int], n: int) -> tuple[int, int, int]:
    if len(triple) != 3 or len(set(triple)) != 3:
        raise ValueError(f"triple {tuple(triple)} must have three distinct indices")
    if not all(1 <= t <= n for t in triple):
        raise ValueError(f"triple {tuple(triple)} outside 1..{n}")
    return tuple(triple)


# -- the multiplier ---------------------------------------------------------


def multiplier_phi(n: int, surf: KSurfaceModel, orientation: str = "ji") -> LaurentElem:
    """``prod_{i != j} sum_k (-1)^k x^k wedgeW[k]_{(i, j)}`` with ``x = z_j/z_i`` (``"ji"``) or ``z_i/z_j``."""
    if n < 1:
        raise ValueError("n >= 1 required")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    space = surface_space(n, surf.ring)
    result = space.one()
    for i, j in itertools.permutations(range(1, n + 1), 2):
        x = space.ratio(j, i) if orientation == "ji" else space.ratio(i, j)
        factor = space.zero()
        power = space.one()
        for k, w in enumerate(surf.wedgeW):
            factor = factor + (-1) ** k * power * space.const(space.ring.embed(w, (i - 1, j - 1)))
            power = power * x
        result = result * factor
    return result


def torus_multiplier_phi(n: int) -> LaurentElem:
    """``prod_{i != j} (1 - q1 q2 z_i/z_j)``, clearing the plane-kernel poles off the diagonal."""
    if n < 1:
        raise ValueError("n >= 1 required")
    space = torus_space(n)
    result = space.one()
    for i, j in itertools.permutations(range(1, n + 1), 2):
        result = result * (space.one() - space.q1 * space.q2 * space.ratio(i, j))
    return result


# -- pole condition ---------------------------------------------------------


def pole_check(F: RatElem | LaurentElem, surf: KSurfaceModel | None = None, orientation: str = "ji") -> LaurentElem:
    """``Phi * F`` as a Laurent polynomial, or PoleViolation naming the first stuck factor.

    ``surf`` None means torus mode with :func:`torus_multiplier_phi`.
    """
    F = RatElem.lift(F)
    n = F.space.n
    if surf is None:
        if not F.space.torus:
            raise ModelMismatch("torus-mode pole check needs a torus-mode element")
        phi = torus_multiplier_phi(n) if n else F.space.one()
    else:
        if F.space != surface_space(n, surf.ring):
            raise ModelMismatch("element coefficients are not K(S)^{(x)n} of the given model")
        phi = multiplier_phi(n, surf, orientation)
    if F.space.ring == ZZ and F.factors:
        return _pole_check_flint(F, phi)
    num = phi * F.numerator
    for f in F.factors:
        try:
            num = divide_exact(num, f)
        except NotDivisible:
            raise PoleViolation(f) from None
    return num


def _pole_check_flint(F: RatElem, phi: LaurentElem) -> LaurentElem:
    space = F.space
    num = FlintLaurent.from_laurent(phi) * FlintLaurent.from_laurent(F.numerator)
    for f in F.factors:
        q = num.exact_quotient(FlintLaurent.from_laurent(f.as_laurent(space)))
        if q is None:
            raise PoleViolation(f)
        num = q
    return num.to_laurent(space)


# -- restriction to the small diagonal --------------------------------------


def restricted_ring(base: RingModel, n: int) -> RingModel:
    return tensor_power(base, n - 2)


def merged_slot(triple: Sequence[int]) -> int:
    """0-based slot of the merged coefficient after restriction."""
    return min(triple) - 1


def restrict_small_diagonal(G: LaurentElem, triple: Sequence[int]) -> LaurentElem:
    """Multiply tensor slots i, j, k together into one slot at position min(i, j, k).

    The z-variables are left alone.  Integer-coefficient (torus or plain)
    elements have no slots and come back unchanged.
    """
    n = G.space.n
    i, j, k = _check_triple(triple, n)
    ring = G.space.ring
    if ring == ZZ:
        return G
    if not isinstance(ring, TensorPowerModel) or ring.power != n:
        raise ModelMismatch(f"coefficients are not an {n}-fold tensor power")
    base = ring.base
    target = tensor_power(base, n - 2)
    slots = {i - 1, j - 1, k - 1}
    keep = [s for s in range(n) if s not in slots]
    pos = merged_slot(triple)
    cache: dict[int, list[tuple[int, int]]] = {}

    def image(b: int) -> list[tuple[int, int]]:
        hit = cache.get(b)
        if hit is None:
            d = ring.digits(b)
            prod = base.basis(d[i - 1]) * base.basis(d[j - 1]) * base.basis(d[k - 1])
            rest = [d[s] for s in keep]
            hit = []
            for m, c in enumerate(prod.coords):
                if c:
                    hit.append((target.from_digits(rest[:pos] + [m] + rest[pos:]), c))
            cache[b] = hit
        return hit

    out: dict = defaultdict(int)
    for (e, b), c in G.raw.items():
        for nb, cm in image(b):
            out[e, nb] += c * cm
    return LaurentElem(Space(n, target, G.space.nq), out)


# -- the wheel ideal --------------------------------------------------------


def _wheel_scalars(space: Space, triple: Sequence[int], surf: KSurfaceModel | None):
    """``(omega, c1)`` as scalars of ``space``."""
    sc = space.scalars()
    if surf is None:
        if not space.torus:
            raise ModelMismatch("a surface model is needed outside torus mode")
        return sc.q1 * sc.q2, sc.q1 + sc.q2
    ring = space.ring
    if ring == surf.ring and space.n == 3:
        return sc.const(surf.omega), sc.const(surf.c_omega)
    if not (isinstance(ring, TensorPowerModel) and ring.base == surf.ring and ring.power == space.n - 2):
        raise ModelMismatch("expected coefficients in K(S)^{(x)(n-2)} (restrict first)")
    slot = merged_slot(triple)
    return sc.const(ring.place({slot: surf.omega})), sc.const(ring.place({slot: surf.c_omega}))


@dataclass(frozen=True)
class WheelIdealSpec:
    """Wheel ideal for one triple.

    ``mode='comm'`` uses ``(z_k - qx z_j, z_j - qy z_i)`` with ``ordering`` naming
    (qx, qy); ``mode='surface'`` uses ``1 - (z_i/z_k) omega`` and
    ``1 - c1 v + c2 v^2`` from ``surf`` (torus data when ``surf`` is None).
    """

    triple: tuple[int, int, int]
    mode: str = "surface"
    ordering: str = "q1q2"
    surf: KSurfaceModel | None = None

    def __post_init__(self):
        object.__setattr__(self, "triple", tuple(self.triple))
        if len(self.triple) != 3 or len(set(self.triple)) != 3 or min(self.triple) < 1:
            raise ValueError(f"triple {self.triple} must have three distinct positive indices")
        if self.mode not in ("comm", "surface"):
            raise ValueError("mode is 'comm' or 'surface'")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}")

    def generators(self, space: Space) -> list[LaurentElem]:
        _check_triple(self.triple, space.n)
        i, j, k = self.triple
        if self.mode == "comm":
            if not space.torus:
                raise ModelMismatch("the commuting-variety ideal lives in torus mode")
            qx, qy = (space.q1, space.q2) if self.ordering == "q1q2" else (space.q2, space.q1)
            return [space.z(k) - qx * space.z(j), space.z(j) - qy * space.z(i)]
        omega, c1 = _wheel_scalars(space, self.triple, self.surf)
        u, v = space.ratio(i, k), space.ratio(j, k)
        return [space.one() - u * omega, space.one() - c1 * v + omega * v * v]

    def contains(self, x: LaurentElem) -> bool:
        if self.mode == "comm":
            return comm_wheel_membership(x, self.triple, self.ordering)
        return surface_wheel_membership(x, self.triple, self.surf)


def wheel_reduce(G: LaurentElem, triple: Sequence[int], surf: KSurfaceModel | None = None) -> dict:
    """Normal form of G modulo the surface wheel ideal.

    Returns ``{rest: {d: scalar}}``: for each monomial ``rest`` in z_k and the
    other variables, the remainder ``sum_d scalar * v^d`` of degree below 2.
    """
    n = G.space.n
    i, j, k = (t - 1 for t in _check_triple(triple, n))
    omega, c1 = _wheel_scalars(G.space, triple, surf)
    omega_inv = monomial_inverse(omega)
    sc = G.space.scalars()
    nz = n
    # u = z_i/z_k -> omega^-1, v = z_j/z_k kept; z-exponents regrouped onto z_k
    pieces: dict = defaultdict(lambda: defaultdict(dict))
    for (e, b), c in G.raw.items():
        rest = list(e[:nz])
        ei, ej = rest[i], rest[j]
        rest[k] += ei + ej
        rest[i] = rest[j] = 0
        pieces[tuple(rest), ej][ei][e[nz:], b] = c
    polys: dict = defaultdict(lambda: defaultdict(sc.zero))
    powers: dict[int, LaurentElem] = {}
    for (rest, d), by_u in pieces.items():
        for ei, terms in by_u.items():
            if ei not in powers:
                powers[ei] = omega_inv**ei if ei >= 0 else omega ** (-ei)
            polys[rest][d] = polys[rest][d] + LaurentElem(sc, terms) * powers[ei]
    out = {}
    for rest, poly in polys.items():
        coeffs = {d: c for d, c in poly.items() if c}
        if not coeffs:
            continue
        lo = min(coeffs)
        p = {d - lo: c for d, c in coeffs.items()}
        for d in range(max(p), 1, -1):
            t = p.pop(d, None)
            if t is None or not t:
                continue
            t = t * omega_inv
            p[d - 1] = p.get(d - 1, sc.zero()) + t * c1
            p[d - 2] = p.get(d - 2, sc.zero()) - t
        rem = {d: c for d, c in p.items() if c}
        if rem:
            out[rest] = rem
    return out


def surface_wheel_membership(G: LaurentElem, triple: Sequence[int], surf: KSurfaceModel | None = None) -> bool:
    """Whether an already restricted G lies in the wheel ideal of ``triple``.

    Exact: the remainder modulo ``1 - c1 v + c2 v^2`` is unique because both
    extreme coefficients are units, and components with different monomials in
    the other variables reduce independently.
    """
    return not wheel_reduce(G, triple, surf)


# -- independent linear-algebra oracle --------------------------------------


@dataclass
class OracleResult:
    """Outcome of the bounded linear solve.

    ``solvable`` means a rational solution exists in the box; ``certificate``
    holds integer multipliers when the particular solution found is integral.
    """

    solvable: bool
    certificate: list[LaurentElem] | None
    unknowns: int

    @property
    def certified(self) -> bool:
        return self.certificate is not None

    def __bool__(self):
        return self.certified


def support_box(*elems: LaurentElem, pad: int = 0) -> list[tuple[int, int]]:
    """Bounding box of the exponents of ``elems`` (z then q slots), widened by ``pad``."""
    width = elems[0].space.width
    lo = [0] * width
    hi = [0] * width
    first = True
    for x in elems:
        for e, _ in x.raw:
            if first:
                lo, hi, first = list(e), list(e), False
            else:
                lo = [min(a, b) for a, b in zip(lo, e)]
                hi = [max(a, b) for a, b in zip(hi, e)]
    return [(a - pad, b + pad) for a, b in zip(lo, hi)]


def membership_oracle(
    x: LaurentElem,
    generators: Sequence[LaurentElem],
    box: Sequence[tuple[int, int]],
    max_unknowns: int = MAX_ORACLE_UNKNOWNS,
) -> OracleResult:
    """Solve ``x = sum a_m g_m`` exactly over Q with every ``a_m`` supported in ``box``.

    ``box`` gives an inclusive exponent range per slot (z-variables, then q in
    torus mode).  A failure only means no solution inside the box.
    """
    space = x.space
    if len(box) != space.width:
        raise ValueError(f"support box needs {space.width} ranges")
    monos = list(itertools.product(*(range(lo, hi + 1) for lo, hi in box)))
    rank = space.ring.rank
    ncols = len(generators) * len(monos) * rank
    if ncols > max_unknowns:
        raise OracleTooLarge(f"{ncols} unknowns exceed the limit of {max_unknowns}")
    basis = [space.scalars().const(space.ring.basis(b)) for b in range(rank)] if space.ring != ZZ else None
    nz = space.n
    columns = []
    for g in generators:
        if g.space != space:
            raise ModelMismatch("generator in a different space")
        for e in monos:
            shifted = g.shift(e[:nz], e[nz:])
            for b in range(rank):
                columns.append(shifted if basis is None else shifted * basis[b])
    row_index: dict = {}
    for col in columns:
        for key in col.raw:
            row_index.setdefault(key, len(row_index))
    for key in x.raw:
        if key not in row_index:
            return OracleResult(False, None, ncols)
    rows: list[dict[int, int]] = [{} for _ in row_index]
    for c, col in enumerate(columns):
        for key, v in col.raw.items():
            rows[row_index[key]][c] = v
    rhs = [0] * len(row_index)
    for key, v in x.raw.items():
        rhs[row_index[key]] = v
    sol = solve_rational(rows, ncols, rhs)
    if sol is None:
        return OracleResult(False, None, ncols)
    if any(v.denominator != 1 for v in sol):
        return OracleResult(True, None, ncols)
    certificate = []
    per_gen = len(monos) * rank
    for m in range(len(generators)):
        terms: dict = defaultdict(int)
        for t, v in enumerate(sol[m * per_gen : (m + 1) * per_gen]):
            if v:
                e = monos[t // rank]
                terms[e, t % rank if basis is not None else 0] += int(v)
        certificate.append(LaurentElem(space, terms))
    return OracleResult(True, certificate, ncols)


def verify_certificate(x: LaurentElem, generators: Sequence[LaurentElem], cert: Sequence[LaurentElem]) -> bool:
    total = x.space.zero()
    for a, g in zip(cert, generators):
        total = total + a * g
    return total == x


# -- checker / oracle cross-validation --------------------------------------


@dataclass
class CrossCheck:
    """Counts from :func:`cross_validate`; ``lines`` holds one report line per instance."""

    members: int = 0
    members_rejected: int = 0
    randoms: int = 0
    certified: int = 0
    disagreements: int = 0
    lines: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.members_rejected == 0 and self.disagreements == 0

    @property
    def summary(self) -> str:
        total = self.members + self.randoms
        fail = self.members_rejected + self.disagreements
        return f"total={total} pass={total - fail} fail={fail}"


def cross_validate(
    ideal: WheelIdealSpec,
    space: Space,
    n_members: int = 200,
    n_random: int = 200,
    seed: int = 0,
    max_unknowns: int = 600,
) -> CrossCheck:
    """Compare the checker for ``ideal`` with :func:`membership_oracle`.

    Members are ``a g1 + b g2`` with random ``a, b``; the oracle box is their
    support, so it always contains a solution.  Random elements are solved in
    their own support box.
    """
    rng = random.Random(seed)
    gens = ideal.generators(space)
    out = CrossCheck()

    def oracle(x: LaurentElem, box) -> OracleResult:
        while True:
            try:
                return membership_oracle(x, gens, box, max_unknowns)
            except OracleTooLarge:
                # shrink the widest range; a smaller box only weakens the oracle
                w = max(range(len(box)), key=lambda t: box[t][1] - box[t][0])
                if box[w][1] == box[w][0]:
                    return OracleResult(False, None, 0)
                box = [r if t != w else (r[0] + 1, r[1]) for t, r in enumerate(box)]

    for t in range(n_members):
        a = random_element(space, rng, terms=rng.randint(1, 3))
        b = random_element(space, rng, terms=rng.randint(1, 3))
        x = a * gens[0] + b * gens[1]
        verdict = ideal.contains(x)
        res = oracle(x, support_box(a, b))
        out.members += 1
        if res.certified:
            out.certified += 1
        if not verdict:
            out.members_rejected += 1
        out.lines.append(f"member {t} {'MEMBER' if verdict else 'NOT-MEMBER'} oracle={_oracle_word(res)}")
    for t in range(n_random):
        x = random_element(space, rng, terms=rng.randint(1, 5))
        verdict = ideal.contains(x)
        res = oracle(x, support_box(x))
        out.randoms += 1
        if res.certified:
            out.certified += 1
            if not verdict:
                out.disagreements += 1
        out.lines.append(f"random {t} {'MEMBER' if verdict else 'NOT-MEMBER'} oracle={_oracle_word(res)}")
    return out


def _oracle_word(res: OracleResult) -> str:
    if res.certified:
        return "certified"
    return "rational-only" if res.solvable else "no-solution"
