"""Multivariate Laurent polynomials over a structure-constant coefficient ring.

Three coefficient modes share one representation:

* torus mode: integer coefficients and two extra exponent slots for q1, q2,
  i.e. ``Z[q1^+-1, q2^+-1][z1^+-1, .., zn^+-1]``;
* surface mode: coefficients in a :class:`RingModel`, normally ``K(S)^{(x)n}``;
* plain mode: integer coefficients, no q (surface mode over ``ZZ``).

Terms are stored as ``{(exponents, basis_index): int}`` with exponents laid out
as ``z1..zn`` followed by the q-exponents.  Zero coefficients are never stored.
Variable indices in the public API are 1-based, permutations are 0-based.
"""

from __future__ import annotations

import itertools
import operator
from collections import Counter, defaultdict
from dataclasses import dataclass
from math import factorial
from typing import Iterable, Mapping, Sequence

import flint
from flint.utils.flint_exceptions import DomainError

from .coeffrings import (
    ZZ,
    ModelMismatch,
    NotInvertible,
    RingElem,
    RingModel,
    TensorPowerModel,
    invert,
    tensor_power,
)

EXP_LIMIT = 2**31 - 1


class NotDivisible(ArithmeticError):
    pass


@dataclass(frozen=True)
class Space:
    """Where a LaurentElem lives: ``n`` z-variables, coefficient ring, q-slots."""

    n: int
    ring: RingModel = ZZ
    nq: int = 0

    @property
    def torus(self) -> bool:
        return self.nq == 2

    @property
    def width(self) -> int:
        return self.n + self.nq

    def scalars(self) -> Space:
        return Space(0, self.ring, self.nq)

    def zero(self) -> LaurentElem:
        return LaurentElem(self, {})

    def one(self) -> LaurentElem:
        return self.const(1)

    def const(self, c: int | RingElem) -> LaurentElem:
        return self.monomial((0,) * self.n, coeff=c)

    def monomial(self, z: Sequence[int], q: Sequence[int] = (0, 0), coeff: int | RingElem = 1) -> LaurentElem:
        if len(z) != self.n:
            raise ValueError(f"expected {self.n} z-exponents")
        exps = tuple(z) + (tuple(q) if self.torus else ())
        if not self.torus and any(q):
            raise ValueError("q-exponents need torus mode")
        return LaurentElem.from_terms(self, {exps: coeff})

    def z(self, i: int, power: int = 1) -> LaurentElem:
        e = [0] * self.n
        e[i - 1] = power
        return self.monomial(e)

    def ratio(self, a: int, b: int) -> LaurentElem:
        """The monomial z_a / z_b."""
        e = [0] * self.n
        e[a - 1] += 1
        e[b - 1] -= 1
        return self.monomial(e)

    def q(self, which: int, power: int = 1) -> LaurentElem:
        if not self.torus:
            raise ValueError("q1, q2 exist only in torus mode")
        q = [0, 0]
        q[which - 1] = power
        return self.monomial((0,) * self.n, q)

    @property
    def q1(self) -> LaurentElem:
        return self.q(1)

    @property
    def q2(self) -> LaurentElem:
        return self.q(2)


def torus_space(n: int) -> Space:
    return Space(n, ZZ, 2)


def surface_space(n: int, base: RingModel) -> Space:
    """Space with coefficients in ``base^{(x)n}`` (``base`` itself when it is ZZ)."""
    if base == ZZ:
        return Space(n, ZZ, 0)
    return Space(n, tensor_power(base, max(n, 1)), 0)


def _check_exps(exps: Iterable[int]):
    for e in exps:
        if e > EXP_LIMIT or e < -EXP_LIMIT:
            raise OverflowError(f"exponent {e} outside the supported range")


class LaurentElem:
    """Immutable Laurent polynomial in canonical form (no stored zeros)."""

    __slots__ = ("space", "_terms", "_hash", "_maxexp")

    def __init__(self, space: Space, raw: Mapping[tuple[tuple[int, ...], int], int]):
        self.space = space
        self._terms = {k: v for k, v in raw.items() if v}
        self._hash = None
        self._maxexp = None

    @classmethod
    def from_terms(cls, space: Space, terms: Mapping[Sequence[int], int | RingElem]) -> LaurentElem:
        """Build from ``{exponent vector: coefficient}``; coefficients are ints or RingElems."""
        raw: dict = defaultdict(int)
        for exps, c in terms.items():
            exps = tuple(exps)
            if len(exps) != space.width:
                raise ValueError(f"exponent vector {exps} has wrong length, expected {space.width}")
            _check_exps(exps)
            if isinstance(c, RingElem):
                if c.model != space.ring:
                    raise ModelMismatch("coefficient from a different ring model")
                for b, v in enumerate(c.coords):
                    if v:
                        raw[exps, b] += v
            else:
                for b, v in enumerate(space.ring.unit):
                    if v:
                        raw[exps, b] += int(c) * v
        return cls(space, raw)

    # -- inspection ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def raw(self) -> dict:
        return self._terms

    def terms(self) -> dict[tuple[int, ...], int | RingElem]:
        """``{exponent vector: coefficient}``; ints over ZZ, RingElems otherwise."""
        if self.space.ring == ZZ:
            return {e: c for (e, _), c in self._terms.items()}
        grouped: dict = defaultdict(lambda: [0] * self.space.ring.rank)
        for (e, b), c in self._terms.items():
            grouped[e][b] += c
        return {e: self.space.ring.element(v) for e, v in grouped.items()}

    def z_groups(self) -> dict[tuple[int, ...], LaurentElem]:
        """Split by z-monomial: ``{z-exponents: scalar coefficient (n = 0)}``."""
        n = self.n
        out: dict = defaultdict(dict)
        for (e, b), c in self._terms.items():
            out[e[:n]][e[n:], b] = c
        sc = self.space.scalars()
        return {z: LaurentElem(sc, t) for z, t in out.items()}

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def max_abs_exponent(self) -> int:
        if self._maxexp is None:
            self._maxexp = max((abs(x) for (e, _) in self._terms for x in e), default=0)
        return self._maxexp

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.space.const(other)
        if not isinstance(other, LaurentElem):
            return NotImplemented
        return self.space == other.space and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.space, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        from .parser import format_expr

        return f"LaurentElem({format_expr(self)!r})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> LaurentElem:
        if isinstance(other, LaurentElem):
            if other.space == self.space:
                return other
            if other.space.ring != self.space.ring or other.space.nq != self.space.nq:
                raise ModelMismatch("Laurent elements in different coefficient modes")
            if other.n == 0:
                return other.embed(self.n)
            if self.n == 0:
                raise _Promote
            raise ModelMismatch(f"variable counts differ ({self.n} vs {other.n})")
        if isinstance(other, (int, RingElem)):
            return self.space.const(other)
        raise TypeError(f"cannot combine LaurentElem with {type(other).__name__}")

    def embed(self, n: int) -> LaurentElem:
        """Scalar (n = 0) element viewed in ``n`` z-variables."""
        if self.n != 0:
            raise ValueError("only scalars embed")
        pad = (0,) * n
        return LaurentElem(Space(n, self.space.ring, self.space.nq), {(pad + e, b): c for (e, b), c in self._terms.items()})

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except _Promote:
            return other + self
        out = dict(self._terms)
        for k, v in other._terms.items():
            s = out.get(k, 0) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return LaurentElem(self.space, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentElem(self.space, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except _Promote:
            return (-other) + self
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return self.space.zero()
            return LaurentElem(self.space, {k: v * other for k, v in self._terms.items()})
        try:
            other = self._coerce(other)
        except _Promote:
            return other * self
        if self.max_abs_exponent() + other.max_abs_exponent() > EXP_LIMIT:
            raise OverflowError("exponent overflow in product")
        return LaurentElem(self.space, _mul_raw(self._terms, other._terms, self.space.ring))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return monomial_inverse(self) ** (-e)
        result = self.space.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def shift(self, z: Sequence[int], q: Sequence[int] = (0, 0)) -> LaurentElem:
        """Multiply by the monomial ``z^z q^q``."""
        delta = tuple(z) + (tuple(q) if self.space.torus else ())
        out = {(tuple(map(operator.add, e, delta)), b): c for (e, b), c in self._terms.items()}
        if out:
            _check_exps(x for (e, _) in out for x in e)
        return LaurentElem(self.space, out)

    def permute(self, perm: Sequence[int]) -> LaurentElem:
        """Apply sigma: z_i -> z_{perm[i]} (0-based), tensor slots moved alongside."""
        return LaurentElem(self.space, _permute_raw(self._terms, self.space, perm))

    def swap_q(self) -> LaurentElem:
        """Exchange q1 and q2 (torus mode)."""
        if not self.space.torus:
            raise ValueError("swap_q needs torus mode")
        n = self.n
        return LaurentElem(
            self.space, {(e[:n] + (e[n + 1], e[n]), b): c for (e, b), c in self._terms.items()}
        )

    def coefficient(self, z: Sequence[int], q: Sequence[int] = (0, 0)) -> int | RingElem:
        exps = tuple(z) + (tuple(q) if self.space.torus else ())
        ring = self.space.ring
        coords = [self._terms.get((exps, b), 0) for b in range(ring.rank)]
        return coords[0] if ring == ZZ else ring.element(coords)


class _Promote(Exception):
    """Internal: the right operand has more variables and should drive the operation."""


# products with more term pairs than this go through flint's sparse polynomials
FLINT_THRESHOLD = 4096


class FlintLaurent:
    """Integer Laurent polynomial as a flint polynomial times ``x^lo``.

    Used for large integer-coefficient computations; convert with
    :meth:`from_laurent` and :meth:`to_laurent`.
    """

    __slots__ = ("poly", "lo")

    def __init__(self, poly, lo: tuple[int, ...]):
        self.poly = poly
        self.lo = lo

    @staticmethod
    def context(width: int):
        return flint.fmpz_mpoly_ctx.get(("x", width))

    @classmethod
    def from_raw(cls, raw: Mapping, width: int) -> FlintLaurent:
        ctx = cls.context(width)
        if not raw:
            return cls(ctx.from_dict({}), (0,) * width)
        lo = tuple(min(col) for col in zip(*(e for e, _ in raw)))
        sub = operator.sub
        return cls(ctx.from_dict({tuple(map(sub, e, lo)): c for (e, _), c in raw.items()}), lo)

    @classmethod
    def from_laurent(cls, x: LaurentElem) -> FlintLaurent:
        if x.space.ring != ZZ:
            raise ModelMismatch("flint conversion needs integer coefficients")
        return cls.from_raw(x.raw, x.space.width)

    def raw(self) -> dict:
        add = operator.add
        lo = self.lo
        return {(tuple(map(add, e, lo)), 0): int(c) for e, c in self.poly.to_dict().items()}

    def to_laurent(self, space: Space) -> LaurentElem:
        return LaurentElem(space, self.raw())

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def __mul__(self, other: FlintLaurent) -> FlintLaurent:
        return FlintLaurent(self.poly * other.poly, tuple(map(operator.add, self.lo, other.lo)))

    def _shifted(self, lo: tuple[int, ...]):
        delta = tuple(map(operator.sub, self.lo, lo))
        if not any(delta):
            return self.poly
        return self.poly * self.poly.context().from_dict({delta: 1})

    def __add__(self, other: FlintLaurent) -> FlintLaurent:
        if self.poly.is_zero():
            return other
        if other.poly.is_zero():
            return self
        lo = tuple(map(min, self.lo, other.lo))
        return FlintLaurent(self._shifted(lo) + other._shifted(lo), lo)

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: int = 1) -> FlintLaurent:
        width = len(exps)
        return cls(cls.context(width).from_dict({(0,) * width: coeff}), tuple(exps))

    @property
    def width(self) -> int:
        return len(self.lo)

    def moved(self, positions: Sequence[int], width: int) -> FlintLaurent:
        """Slot ``t`` sent to slot ``positions[t]`` of a ``width``-slot space."""
        ctx = self.context(width)
        gens = ctx.gens()
        lo = [0] * width
        for t, p in enumerate(positions):
            lo[p] = self.lo[t]
        return FlintLaurent(self.poly.compose(*(gens[p] for p in positions), ctx=ctx), tuple(lo))

    def times_one_minus(self, exps: Sequence[int], coeff: int) -> FlintLaurent:
        """``self * (1 - coeff * x^exps)``; cheaper than a general product."""
        other = FlintLaurent(self.poly, tuple(map(operator.add, self.lo, exps)))
        lo = tuple(map(min, self.lo, other.lo))
        a, b = self._shifted(lo), other._shifted(lo)
        if coeff == 1:
            return FlintLaurent(a - b, lo)
        if coeff == -1:
            return FlintLaurent(a + b, lo)
        return FlintLaurent(a - b * coeff, lo)

    def __neg__(self) -> FlintLaurent:
        return FlintLaurent(-self.poly, self.lo)

    def __sub__(self, other: FlintLaurent) -> FlintLaurent:
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, FlintLaurent):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def exact_quotient(self, divisor: FlintLaurent) -> FlintLaurent | None:
        """Laurent quotient, or None; the divisor must not be divisible by a variable."""
        try:
            q = self.poly / divisor.poly
        except DomainError:
            return None
        return FlintLaurent(q, tuple(map(operator.sub, self.lo, divisor.lo)))


def _mul_flint(t1: Mapping, t2: Mapping) -> dict:
    width = len(next(iter(t1))[0])
    return (FlintLaurent.from_raw(t1, width) * FlintLaurent.from_raw(t2, width)).raw()


def _mul_raw(t1: Mapping, t2: Mapping, ring: RingModel) -> dict:
    if ring == ZZ and len(t1) * len(t2) > FLINT_THRESHOLD and len(next(iter(t1))[0]):
        return _mul_flint(t1, t2)
    out: dict = defaultdict(int)
    add = operator.add
    if ring == ZZ:
        right = [(e2, c2) for (e2, _), c2 in t2.items()]
        for (e1, _), c1 in t1.items():
            for e2, c2 in right:
                out[tuple(map(add, e1, e2)), 0] += c1 * c2
    else:
        mul = ring.mul_basis
        right = list(t2.items())
        for (e1, b1), c1 in t1.items():
            for (e2, b2), c2 in right:
                e = tuple(map(add, e1, e2))
                c = c1 * c2
                for k, ck in mul(b1, b2):
                    out[e, k] += c * ck
    return out


def _slot_map(space: Space, perm: Sequence[int]) -> list[int] | None:
    ring = space.ring
    if ring == ZZ:
        return None
    if isinstance(ring, TensorPowerModel) and ring.power == len(perm):
        return ring.slot_map(perm)
    raise ValueError(
        f"coefficient model is not the {len(perm)}-fold tensor power; cannot permute tensor slots"
    )


def _permute_raw(terms: Mapping, space: Space, perm: Sequence[int]) -> dict:
    n = space.n
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} variables")
    smap = _slot_map(space, perm)
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    out = {}
    for (e, b), c in terms.items():
        ne = tuple(e[inv[i]] for i in range(n)) + e[n:]
        out[ne, b if smap is None else smap[b]] = c
    return out


# -- units and scalars ------------------------------------------------------


def _single_term(x: LaurentElem):
    if len(x.raw) != 1:
        return None
    return next(iter(x.raw.items()))


def monomial_inverse(x: LaurentElem) -> LaurentElem:
    """Inverse of a unit monomial ``c * z^a q^b`` (c a unit of the coefficient ring)."""
    if x.space.ring == ZZ:
        t = _single_term(x)
        if t is None or abs(t[1]) != 1:
            raise NotInvertible(f"{x!r} is not a unit monomial")
        (e, b), c = t
        return LaurentElem(x.space, {(tuple(-v for v in e), b): c})
    groups = x.z_groups()
    if len(groups) != 1:
        raise NotInvertible(f"{x!r} is not a unit monomial")
    (z, scalar), = groups.items()
    inv = LaurentElem.from_terms(x.space, {tuple(-v for v in z): invert(_scalar_to_ring(scalar))})
    return inv


def _scalar_to_ring(scalar: LaurentElem) -> RingElem:
    ring = scalar.space.ring
    coords = [0] * ring.rank
    for (e, b), c in scalar.raw.items():
        if any(e):
            raise ValueError("scalar carries exponents")
        coords[b] += c
    return ring.element(coords)


def scalar(space: Space, c: int | RingElem | LaurentElem) -> LaurentElem:
    """Coerce ``c`` to a scalar (n = 0) of ``space``'s coefficient mode."""
    sc = space.scalars()
    if isinstance(c, LaurentElem):
        if c.n != 0:
            if any(any(e[: c.n]) for (e, _) in c.raw):
                raise ValueError("coefficient must not involve z-variables")
            c = LaurentElem(Space(0, c.space.ring, c.space.nq), {(e[c.n:], b): v for (e, b), v in c.raw.items()})
        if c.space != sc:
            raise ModelMismatch("coefficient in a different mode")
        return c
    return sc.const(c)


def is_unit_scalar(c: LaurentElem) -> bool:
    try:
        monomial_inverse(c)
    except (NotInvertible, ValueError):
        return False
    return True


# -- binomial factors and restricted rational functions ---------------------


@dataclass(frozen=True)
class BinomialFactor:
    """The factor ``1 - c * z_a / z_b`` with ``c`` a unit scalar (1-based a, b)."""

    coeff: LaurentElem
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("binomial factor needs distinct variables")
        if self.coeff.n != 0:
            raise ValueError("binomial coefficient must be a scalar")
        if not is_unit_scalar(self.coeff):
            raise NotInvertible(f"binomial coefficient {self.coeff!r} is not a unit")

    @classmethod
    def make(cls, space: Space, c, a: int, b: int) -> BinomialFactor:
        return cls(scalar(space, c), a, b)

    def as_laurent(self, space: Space) -> LaurentElem:
        if max(self.a, self.b) > space.n:
            raise ValueError("factor variable outside the space")
        return space.one() - space.ratio(self.a, self.b) * self.coeff

    def permute(self, perm: Sequence[int], space: Space) -> BinomialFactor:
        coeff = self.coeff
        smap = _slot_map(space, perm)
        if smap is not None:
            coeff = LaurentElem(coeff.space, {(e, smap[b]): c for (e, b), c in coeff.raw.items()})
        return BinomialFactor(coeff, perm[self.a - 1] + 1, perm[self.b - 1] + 1)

    def sort_key(self):
        return (self.a, self.b, tuple(sorted(self.coeff.raw.items())))

    def __repr__(self):
        from .parser import format_factor

        return f"({format_factor(self)})"


def _freeze(counter: Mapping[BinomialFactor, int]) -> tuple[tuple[BinomialFactor, int], ...]:
    return tuple(sorted(((f, m) for f, m in counter.items() if m), key=lambda fm: fm[0].sort_key()))


class RatElem:
    """A Laurent numerator over a multiset of binomial denominator factors.

    No automatic cancellation happens; equality is equality of rational
    functions (both sides are brought to the least common denominator).
    """

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: LaurentElem, denominator: Mapping[BinomialFactor, int] | Iterable = ()):
        self.numerator = numerator
        if isinstance(denominator, Mapping):
            den = Counter(denominator)
        else:
            den = Counter()
            for item in denominator:
                if isinstance(item, BinomialFactor):
                    den[item] += 1
                else:
                    f, m = item
                    den[f] += m
        for f in den:
            if f.coeff.space.ring != numerator.space.ring or f.coeff.space.nq != numerator.space.nq:
                raise ModelMismatch("denominator factor in a different mode")
            if max(f.a, f.b) > numerator.n:
                raise ValueError("denominator factor variable outside the numerator's space")
        self.denominator = _freeze(den)

    @property
    def space(self) -> Space:
        return self.numerator.space

    @property
    def factors(self) -> list[BinomialFactor]:
        return [f for f, m in self.denominator for _ in range(m)]

    def den_counter(self) -> Counter:
        return Counter(dict(self.denominator))

    def is_laurent(self) -> bool:
        return not self.denominator

    @classmethod
    def lift(cls, x) -> RatElem:
        return x if isinstance(x, RatElem) else cls(x)

    def over(self, den: Counter) -> LaurentElem:
        """Numerator rewritten over the larger denominator ``den``."""
        missing = den - self.den_counter()
        if self.den_counter() - den:
            raise ValueError("target denominator does not contain this one")
        polys = [
            f.as_laurent(self.space)
            for f, m in sorted(missing.items(), key=lambda fm: fm[0].sort_key())
            for _ in range(m)
        ]
        if not polys:
            return self.numerator
        # balanced product keeps the intermediate sizes even
        while len(polys) > 1:
            polys = [polys[i] * polys[i + 1] if i + 1 < len(polys) else polys[i] for i in range(0, len(polys), 2)]
        return self.numerator * polys[0]

    def __add__(self, other):
        other = self._coerce(other)
        den = self.den_counter() | other.den_counter()
        return RatElem(self.over(den) + other.over(den), den)

    __radd__ = __add__

    def __neg__(self):
        return RatElem(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        return RatElem(self.numerator * other.numerator, self.den_counter() + other.den_counter())

    __rmul__ = __mul__

    def divide_by(self, f: BinomialFactor, times: int = 1) -> RatElem:
        den = self.den_counter()
        den[f] += times
        return RatElem(self.numerator, den)

    def _coerce(self, other) -> RatElem:
        if isinstance(other, RatElem):
            return other
        if isinstance(other, LaurentElem):
            return RatElem(other)
        return RatElem(self.space.const(other))

    def __eq__(self, other):
        if not isinstance(other, (RatElem, LaurentElem, int)):
            return NotImplemented
        other = self._coerce(other)
        if self.space != other.space:
            return False
        if self.denominator == other.denominator:
            return self.numerator == other.numerator
        den = self.den_counter() | other.den_counter()
        return self.over(den) == other.over(den)

    __hash__ = None

    def permute(self, perm: Sequence[int]) -> RatElem:
        num = self.numerator.permute(perm)
        return RatElem(num, [(f.permute(perm, self.space), m) for f, m in self.denominator])

    def __repr__(self):
        from .parser import format_expr

        return f"RatElem({format_expr(self)!r})"


# -- operations -------------------------------------------------------------


def substitute_monomial(x: LaurentElem, var: int, coeff, monomial: Sequence[int]) -> LaurentElem:
    """Ring homomorphism ``z_var -> coeff * z^monomial``; ``monomial[var-1]`` must be 0.

    Negative powers of ``z_var`` need ``coeff`` to be a unit.
    """
    space = x.space
    n = space.n
    a = var - 1
    monomial = tuple(monomial)
    if len(monomial) != n or monomial[a] != 0:
        raise ValueError("replacement monomial must not involve the substituted variable")
    c = scalar(space, coeff)
    t = _single_term(c) if space.ring == ZZ else None
    if t is not None and abs(t[1]) == 1:
        # monomial unit: pure exponent arithmetic
        (cq, _), sign = t
        delta = monomial + cq
        out: dict = defaultdict(int)
        for (e, b), v in x.raw.items():
            k = e[a]
            if k:
                ne = list(map(operator.add, e, (k * d for d in delta)))
                ne[a] = 0
                e = tuple(ne)
                if sign < 0 and k % 2:
                    v = -v
            out[e, b] += v
        res = LaurentElem(space, out)
        if res:
            _check_exps(v for (e, _) in res.raw for v in e)
        return res
    by_power: dict = defaultdict(dict)
    for (e, b), v in x.raw.items():
        k = e[a]
        ne = list(e)
        ne[a] = 0
        for i, d in enumerate(monomial):
            ne[i] += k * d
        by_power[k][tuple(ne), b] = v
    result = space.zero()
    inv = None
    for k, terms in by_power.items():
        part = LaurentElem(space, terms)
        if k > 0:
            part = part * c**k
        elif k < 0:
            if inv is None:
                try:
                    inv = monomial_inverse(c)
                except NotInvertible:
                    raise NotInvertible("negative powers need a unit substitution coefficient") from None
            part = part * inv ** (-k)
        result = result + part
    return result


def _split_ratio(x: LaurentElem, a: int, b: int) -> dict[int, dict]:
    """Write x = sum_k u^k R_k with u = z_a/z_b; R_k has no z_a (0-based a, b)."""
    parts: dict = defaultdict(dict)
    for (e, bb), v in x.raw.items():
        k = e[a]
        ne = list(e)
        ne[a] = 0
        ne[b] += k
        parts[k][tuple(ne), bb] = v
    return parts


def _join_ratio(space: Space, parts: Mapping[int, LaurentElem], a: int, b: int) -> LaurentElem:
    out: dict = defaultdict(int)
    for k, r in parts.items():
        for (e, bb), v in r.raw.items():
            ne = list(e)
            ne[a] += k
            ne[b] -= k
            out[tuple(ne), bb] += v
    return LaurentElem(space, out)


def divide_exact(x: LaurentElem, f: BinomialFactor) -> LaurentElem:
    """Exact quotient ``x / (1 - c z_a/z_b)``; raises NotDivisible on a nonzero remainder.

    Divides upward from the lowest power of u = z_a/z_b, which only needs the
    constant term 1 of the divisor to be a unit, so nilpotent coefficients are fine.
    """
    space = x.space
    if x.is_zero():
        return x
    a, b = f.a - 1, f.b - 1
    parts = _split_ratio(x, a, b)
    lo, hi = min(parts), max(parts)
    c = f.coeff.embed(space.n)
    quotient: dict[int, LaurentElem] = {}
    prev = space.zero()
    for k in range(lo, hi + 1):
        cur = LaurentElem(space, parts.get(k, {}))
        if prev:
            cur = cur + c * prev
        if k == hi:
            if cur:
                raise NotDivisible(f"{f!r} does not divide the element")
            break
        if cur:
            quotient[k] = cur
        prev = cur
    return _join_ratio(space, quotient, a, b)


def symmetrize(x: LaurentElem | RatElem):
    """Sum of sigma(x) over all of S_n, acting on variables and tensor slots together."""
    if isinstance(x, RatElem):
        total = None
        for perm in itertools.permutations(range(x.space.n)):
            term = x.permute(perm)
            total = term if total is None else total + term
        return total
    space = x.space
    out: dict = defaultdict(int)
    for perm in itertools.permutations(range(space.n)):
        for k, v in _permute_raw(x.raw, space, perm).items():
            out[k] += v
    return LaurentElem(space, out)


def random_element(space: Space, rng, terms: int = 4, spread: int = 1, coeff_bound: int = 3) -> LaurentElem:
    """Random element with exponents in ``[-spread, spread]`` and small coefficients."""
    raw: dict = defaultdict(int)
    for _ in range(terms):
        e = tuple(rng.randint(-spread, spread) for _ in range(space.width))
        b = rng.randrange(space.ring.rank)
        raw[e, b] += rng.choice([c for c in range(-coeff_bound, coeff_bound + 1) if c])
    return LaurentElem(space, raw)


def is_symmetric(x: LaurentElem | RatElem) -> bool:
    n = x.space.n
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = i + 1, i
        if x.permute(perm) != x:
            return False
    return True


def group_order(n: int) -> int:
    return factorial(n)


# -- element files ----------------------------------------------------------


def parse_element(
    text: str, base: RingModel | None = None, n: int | None = None, space: Space | None = None
) -> RatElem:
    """Parse the line-oriented element format.

    Torus mode (``base`` None): ``coeff ; z_exponents ; q_exponents``.
    Surface mode: ``coord_vector ; z_exponents`` with coordinates in ``base^{(x)n}``.
    Denominators: ``denom c ; a ; b`` where ``c`` is ``sign e1 e2`` (torus) or
    a coordinate vector (surface).  An explicit ``space`` overrides both.
    """
    if space is not None:
        base, n = (None if space.torus else space.ring), space.n
    terms, dens = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.split() for f in line.split(";")]
        try:
            if fields[0] and fields[0][0] == "denom":
                if len(fields) != 3:
                    raise ValueError("denominator lines are 'denom c ; a ; b'")
                dens.append(([int(t) for t in fields[0][1:]], int(fields[1][0]), int(fields[2][0])))
                continue
            want = 2 if base is not None else 3
            if len(fields) != want:
                raise ValueError(f"expected {want} ';'-separated fields")
            terms.append([[int(t) for t in f] for f in fields])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if n is None:
        if not terms:
            raise ValueError("cannot infer the number of variables from an empty element")
        n = len(terms[0][1])
    if space is None:
        space = torus_space(n) if base is None else surface_space(n, base)
    coeffs = {}
    for t in terms:
        if len(t[1]) != n:
            raise ValueError("inconsistent number of z-exponents")
        if base is None:
            cvec, z, q = t
            if len(cvec) != 1 or len(q) != 2:
                raise ValueError("torus terms are 'coeff ; z_exponents ; q1_exp q2_exp'")
            key = tuple(z) + tuple(q)
            coeffs[key] = coeffs.get(key, 0) + cvec[0]
        else:
            vec, z = t
            if len(vec) != space.ring.rank:
                raise ValueError(f"coordinate vectors need length {space.ring.rank}")
            key = tuple(z)
            prev = coeffs.get(key)
            elem = space.ring.element(vec)
            coeffs[key] = elem if prev is None else prev + elem
    num = LaurentElem.from_terms(space, coeffs)
    factors = []
    for c, a, b in dens:
        if base is None:
            if len(c) != 3:
                raise ValueError("torus denominator coefficient is 'sign e1 e2'")
            sc = space.scalars().monomial((), c[1:], coeff=c[0])
        else:
            sc = space.scalars().const(space.ring.element(c))
        factors.append(BinomialFactor(sc, a, b))
    return RatElem(num, factors)


def format_element(x: LaurentElem | RatElem) -> str:
    x = RatElem.lift(x)
    space = x.space
    lines = []
    for e, c in sorted(x.numerator.terms().items()):
        z = " ".join(map(str, e[: space.n]))
        if space.torus:
            lines.append(f"{c} ; {z} ; {e[space.n]} {e[space.n + 1]}")
        else:
            vec = [c] if space.ring == ZZ else list(c.coords)
            lines.append(" ".join(map(str, vec)) + f" ; {z}")
    for f in x.factors:
        if space.torus:
            ((q, _), sign), = f.coeff.raw.items()
            c = f"{sign} {q[0]} {q[1]}"
        else:
            c = " ".join(map(str, _scalar_to_ring(f.coeff).coords))
        lines.append(f"denom {c} ; {f.a} ; {f.b}")
    return "\n".join(lines) + "\n"
