"""Shuffle product of symmetric rational classes with a configurable kernel.

A kernel ``zeta(x) = prod (1 - a x) / prod (1 - b x)`` is instantiated at
``x = z_i / z_j``.  In surface mode its coefficients live in ``K(S)^{(x)2}``
and are placed in tensor slots (i, j).
"""

from __future__ import annotations

import itertools
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from math import factorial

from .coeffrings import (
    ZZ,
    ModelMismatch,
    RingElem,
    RingModel,
    TensorPowerModel,
    is_unit,
    tensor_power,
)
from .laurent import (
    BinomialFactor,
    FlintLaurent,
    NotDivisible,
    divide_exact,
    monomial_inverse,
    random_element,
    LaurentElem,
    RatElem,
    Space,
    is_unit_scalar,
    scalar,
    surface_space,
    torus_space,
)

Coefficient = LaurentElem | RingElem


@dataclass(frozen=True)
class KernelSpec:
    """``zeta(x) = prod_a (1 - a x) / prod_b (1 - b x)``.

    Coefficients are torus scalars (Laurent monomials in q1, q2) or units of
    the tensor square ``K(S)^{(x)2}``.
    """

    numerator: tuple[Coefficient, ...] = ()
    denominator: tuple[Coefficient, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        for c in self.numerator + self.denominator:
            if isinstance(c, RingElem):
                ok = is_unit(c)
            elif isinstance(c, LaurentElem):
                ok = c.n == 0 and is_unit_scalar(c)
            else:
                raise TypeError(f"kernel coefficient of type {type(c).__name__}")
            if not ok:
                raise ValueError(f"kernel coefficient {c!r} is not a unit")

    @property
    def trivial(self) -> bool:
        return not self.numerator and not self.denominator

    def swap_q(self) -> KernelSpec:
        return KernelSpec(tuple(_swap(c) for c in self.numerator), tuple(_swap(c) for c in self.denominator))


def _swap(c: Coefficient) -> Coefficient:
    return c.swap_q() if isinstance(c, LaurentElem) else c


def default_plane_kernel() -> KernelSpec:
    """``zeta(x) = (1 - q1 x)(1 - q2 x) / ((1 - x)(1 - q1 q2 x))``."""
    sc = torus_space(0)
    return KernelSpec((sc.q1, sc.q2), (sc.one(), sc.q1 * sc.q2))


TRIVIAL_KERNEL = KernelSpec()


class GradedElem:
    """A degree-``n`` class with a rational body in ``n`` variables.

    Integer-coefficient shuffle products keep the numerator as a flint
    polynomial and only build :attr:`body` when it is asked for.
    """

    __slots__ = ("degree", "_body", "_fast")

    def __init__(self, degree: int, body: RatElem | LaurentElem | None = None, *, fast=None):
        self.degree = degree
        self._body = None if body is None else RatElem.lift(body)
        # (space, FlintLaurent numerator, denominator Counter)
        self._fast = fast
        if self._body is None and fast is None:
            raise ValueError("a body is required")
        if self.space.n != degree:
            raise ValueError(f"body has {self.space.n} variables, degree is {degree}")

    @property
    def space(self) -> Space:
        return self._body.space if self._body is not None else self._fast[0]

    @property
    def body(self) -> RatElem:
        if self._body is None:
            space, num, den = self._fast
            self._body = RatElem(num.to_laurent(space), den)
        return self._body

    def fast_form(self) -> tuple[Space, FlintLaurent, Counter]:
        if self._fast is None:
            if self.space.ring != ZZ:
                raise ModelMismatch("flint form needs integer coefficients")
            b = self._body
            self._fast = (b.space, FlintLaurent.from_laurent(b.numerator), b.den_counter())
        return self._fast

    def __eq__(self, other):
        if not isinstance(other, GradedElem):
            return NotImplemented
        if self.degree != other.degree or self.space != other.space:
            return False
        if self.space.ring != ZZ:
            return self.body == other.body
        space, n1, d1 = self.fast_form()
        _, n2, d2 = other.fast_form()
        if d1 == d2:
            return n1 == n2
        den = d1 | d2
        return _times_missing(n1, den - d1, space) == _times_missing(n2, den - d2, space)

    __hash__ = None

    def __repr__(self):
        return f"GradedElem({self.degree}, {self.body!r})"

    def __mul__(self, other: GradedElem) -> GradedElem:
        return shuffle_product(self, other)


def _times_missing(num: FlintLaurent, missing: Counter, space: Space) -> FlintLaurent:
    for f in sorted(missing, key=BinomialFactor.sort_key):
        b = FlintLaurent.from_laurent(f.as_laurent(space))
        for _ in range(missing[f]):
            num = num * b
    return num


def _base_of(space: Space) -> RingModel:
    ring = space.ring
    return ring.base if isinstance(ring, TensorPowerModel) else ring


def _space_for(template: Space, n: int) -> Space:
    if template.torus:
        return torus_space(n)
    return surface_space(n, _base_of(template))


def _lift_coeffs(x: LaurentElem, target: Space, slots: range) -> dict:
    """Raw terms of x with z-variables moved to ``slots`` and tensor slots likewise."""
    n, N = x.space.n, target.n
    ring = target.ring
    out: dict = defaultdict(int)
    if ring == ZZ:
        for (e, b), c in x.raw.items():
            z = [0] * N
            z[slots.start : slots.stop] = e[:n]
            out[tuple(z) + e[n:], b] += c
        return out
    src = x.space.ring
    cache: dict[int, tuple] = {}
    for (e, b), c in x.raw.items():
        img = cache.get(b)
        if img is None:
            img = tuple((k, v) for k, v in enumerate(ring.embed(src.basis(b), slots).coords) if v)
            cache[b] = img
        z = [0] * N
        z[slots.start : slots.stop] = e[:n]
        z = tuple(z) + e[n:]
        for k, v in img:
            out[z, k] += c * v
    return out


def _lift(x: RatElem, target: Space, offset: int) -> RatElem:
    """x in variables ``offset+1 .. offset+n`` of ``target``."""
    n = x.space.n
    slots = range(offset, offset + n)
    num = LaurentElem(target, _lift_coeffs(x.numerator, target, slots))
    den = []
    for f, m in x.denominator:
        coeff = f.coeff
        if target.ring != ZZ:
            coeff = target.scalars().const(target.ring.embed(_ring_of(coeff), slots))
        den.append((BinomialFactor(coeff, f.a + offset, f.b + offset), m))
    return RatElem(num, den)


def _ring_of(c: LaurentElem) -> RingElem:
    coords = [0] * c.space.ring.rank
    for (_, b), v in c.raw.items():
        coords[b] += v
    return c.space.ring.element(coords)


def _kernel_coeff(c: Coefficient, space: Space, i: int, j: int) -> LaurentElem:
    if space.torus:
        if not isinstance(c, LaurentElem):
            raise ModelMismatch("torus-mode kernels need q-monomial coefficients")
        return scalar(space, c)
    if not isinstance(c, RingElem):
        raise ModelMismatch("surface-mode kernels need tensor-square coefficients")
    return space.scalars().const(space.ring.embed(c, (i - 1, j - 1)))


def kernel_factor(kernel: KernelSpec, space: Space, i: int, j: int) -> RatElem:
    """``zeta(z_i / z_j)`` as a rational element of ``space``."""
    num = space.one()
    x = space.ratio(i, j)
    for c in kernel.numerator:
        num = num * (space.one() - x * _kernel_coeff(c, space, i, j))
    den = [BinomialFactor(_kernel_coeff(c, space, i, j), i, j) for c in kernel.denominator]
    return RatElem(num, den)


def shuffle_cosets(n: int, m: int):
    """Permutations (``perm[i]`` = image of variable i) representing S_{n+m} / (S_n x S_m)."""
    N = n + m
    for first in itertools.combinations(range(N), n):
        rest = [t for t in range(N) if t not in first]
        yield list(first) + rest


def _degree_zero_scalar(x: GradedElem, space: Space) -> LaurentElem:
    body = x.body
    if not body.is_laurent():
        raise ValueError("degree-0 element with a denominator")
    num = body.numerator
    if space.torus:
        return scalar(space, num)
    ring = num.space.ring
    coords = _ring_of(num).coords if num else (0,) * ring.rank
    unit = ring.unit
    c = next((coords[t] // u for t, u in enumerate(unit) if u), 0)
    if tuple(c * u for u in unit) != tuple(coords):
        raise ValueError("degree-0 surface element must be an integer multiple of the unit")
    return space.scalars().const(c)


def shuffle_product(
    F: GradedElem, G: GradedElem, kernel: KernelSpec | None = None, normalize: bool = False
) -> GradedElem:
    """``sum_sigma sigma(F(z_1..z_n) G(z_{n+1}..z_{n+m}) prod_{i<=n<j} zeta(z_i/z_j))``.

    The sum runs over shuffle coset representatives and is assembled over the
    union of the summands' denominators.  With ``normalize`` every factor is
    first turned to the orientation a < b (its associate, up to a unit
    monomial) and factors dividing the assembled numerator are cancelled.
    """
    if kernel is None:
        kernel = default_plane_kernel()
    sf, sg = F.space, G.space
    if sf.nq != sg.nq or _base_of(sf) != _base_of(sg):
        raise ModelMismatch("shuffle factors in different coefficient modes")
    n, m = F.degree, G.degree
    if n == 0 or m == 0:
        other, zero_deg = (G, F) if n == 0 else (F, G)
        c = _degree_zero_scalar(zero_deg, other.space)
        return GradedElem(other.degree, RatElem(other.body.numerator * c, other.body.denominator))
    space = _space_for(sf, n + m)
    if space.ring == ZZ:
        return _shuffle_fast(F, G, kernel, space, normalize, normalize)
    parts = [_lift(F.body, space, 0), _lift(G.body, space, n)]
    parts += [kernel_factor(kernel, space, i, j) for i in range(1, n + 1) for j in range(n + 1, n + m + 1)]
    summands = []
    for perm in shuffle_cosets(n, m):
        moved = [p.permute(perm) for p in parts]
        if normalize:
            moved = [orient_factors(p) for p in moved]
        den: Counter = Counter()
        for p in moved:
            den += p.den_counter()
        summands.append(([p.numerator for p in moved], den))
    return GradedElem(n + m, _assemble(summands, space, cancel=normalize))


def _orientation_monomial(f: BinomialFactor, space: Space) -> tuple[LaurentElem, BinomialFactor]:
    # 1/(1 - u) = -u^-1 / (1 - u^-1) with u = c z_a/z_b
    cinv = monomial_inverse(f.coeff)
    return -(cinv.embed(space.n) * space.ratio(f.b, f.a)), BinomialFactor(cinv, f.b, f.a)


def orient_factors(x: RatElem) -> RatElem:
    """Rewrite every factor with a > b as its associate with a < b."""
    space = x.space
    num = x.numerator
    den: Counter = Counter()
    for f, mult in x.denominator:
        if f.a < f.b:
            den[f] += mult
            continue
        mono, g = _orientation_monomial(f, space)
        num = num * mono**mult
        den[g] += mult
    return RatElem(num, den)


def _cancel_order(den: Counter) -> list[BinomialFactor]:
    return sorted(den, key=BinomialFactor.sort_key)


def _assemble(summands, space: Space, cancel: bool = False) -> RatElem:
    """Sum of ``prod(numerators) / den`` terms over the union of the denominators."""
    den: Counter = Counter()
    for _, d in summands:
        den |= d
    num = space.zero()
    for nums, d in summands:
        acc = space.one()
        for x in nums:
            acc = acc * x
        num = num + RatElem(acc, d).over(den)
    if cancel:
        for f in _cancel_order(den):
            while den[f] and num:
                try:
                    num = divide_exact(num, f)
                except NotDivisible:
                    break
                den[f] -= 1
    return RatElem(num, +den)


def _shuffle_fast(
    F: GradedElem, G: GradedElem, kernel: KernelSpec, space: Space, orient: bool, cancel: bool
) -> GradedElem:
    """Integer-coefficient shuffle product computed on flint polynomials."""
    n, m = F.degree, G.degree
    N = n + m
    width = space.width
    qpos = [N + t for t in range(space.nq)]
    _, fnum, fden = F.fast_form()
    _, gnum, gden = G.fast_form()
    fnum = fnum.moved(list(range(n)) + qpos, width)
    gnum = gnum.moved(list(range(n, N)) + qpos, width)
    dens = [(f, mult) for f, mult in fden.items()]
    dens += [(BinomialFactor(f.coeff, f.a + n, f.b + n), mult) for f, mult in gden.items()]

    kcache: dict[tuple[int, int], tuple[list[BinomialFactor], list[BinomialFactor]]] = {}

    def kernel_piece(a: int, b: int):
        hit = kcache.get((a, b))
        if hit is None:
            hit = tuple(
                [BinomialFactor(_kernel_coeff(c, space, a, b), a, b) for c in coeffs]
                for coeffs in (kernel.numerator, kernel.denominator)
            )
            kcache[a, b] = hit
        return hit

    summands = []
    for perm in shuffle_cosets(n, m):
        positions = perm + qpos
        nums = [fnum.moved(positions, width), gnum.moved(positions, width)]
        numf: Counter = Counter()
        den: Counter = Counter()
        for f, mult in dens:
            den[f.permute(perm, space)] += mult
        for i in range(n):
            for j in range(n, N):
                knums, kdens = kernel_piece(perm[i] + 1, perm[j] + 1)
                numf.update(knums)
                den.update(kdens)
        if orient:
            mono = space.one()
            for f in [f for f in den if f.a > f.b]:
                mult = den.pop(f)
                u, g = _orientation_monomial(f, space)
                mono = mono * u**mult
                den[g] += mult
            # 1 - u = (1 - 1/u) / (-1/u): the inverse of the denominator rule
            for f in [f for f in numf if f.a > f.b]:
                mult = numf.pop(f)
                u, g = _orientation_monomial(f, space)
                mono = mono * monomial_inverse(u) ** mult
                numf[g] += mult
            nums.append(FlintLaurent.from_laurent(mono))
        summands.append((_product(nums), numf, den, frozenset(perm[:n])))
    num, den = _assemble_fast(summands, space, cancel, paired=orient)
    return GradedElem(N, fast=(space, num, den))


def _product(factors: list[FlintLaurent]) -> FlintLaurent:
    # the largest factor times the thin ones, one at a time, stays linear in its size
    factors = sorted(factors, key=lambda f: -len(f.poly))
    acc = factors[0]
    for f in factors[1:]:
        acc = acc * f
    return acc


def _swap_closed(group: frozenset, a: int, b: int) -> bool:
    # a, b are 0-based variable positions; group holds coset subsets
    for A in group:
        if (a in A) != (b in A) and A ^ {a, b} not in group:
            return False
    return True


def _assemble_fast(summands, space: Space, cancel: bool, paired: bool = False) -> tuple[FlintLaurent, Counter]:
    """Sum of ``poly * prod(numerator factors) / prod(denominator factors)`` terms.

    Each summand carries its coset subset.  With ``paired`` (oriented factors)
    summands are merged along transpositions: the summands for ``A`` and
    ``A ^ {a, b}`` are swaps of each other, so once a group is closed under
    the swap its sum has no pole at ``z_a = z_b`` and ``1 - z_a/z_b`` is divided
    out while the numerator is still small.
    """
    binom: dict[BinomialFactor, FlintLaurent] = {}

    def poly(f: BinomialFactor) -> FlintLaurent:
        if f not in binom:
            binom[f] = FlintLaurent.from_laurent(f.as_laurent(space))
        return binom[f]

    def times(x: FlintLaurent, factors: Counter) -> FlintLaurent:
        for f in _cancel_order(factors):
            mono = f.as_laurent(space) - space.one()
            ((exps, _), c), = mono.raw.items()
            for _ in range(factors[f]):
                x = x.times_one_minus(exps, -c)
        return x

    one = space.scalars().one()

    def merge(u, v):
        (xu, nu, du, gu), (xv, nv, dv, gv) = u, v
        common = nu & nv
        den = du | dv
        x = times(xu, (nu - common) + (den - du)) + times(xv, (nv - common) + (den - dv))
        group = gu | gv
        if paired:
            for f in [f for f in den if f.coeff == one and _swap_closed(group, f.a - 1, f.b - 1)]:
                while den[f] and not x.is_zero():
                    q = x.exact_quotient(poly(f))
                    if q is None:
                        break
                    x = q
                    den[f] -= 1
        return x, common, +den, group

    items = [(x, +nf, +d, frozenset([A])) for x, nf, d, A in summands]
    if paired:
        N = space.n
        for a in range(N):
            for b in range(a + 1, N):
                groups = {it[3]: it for it in items}
                done = set()
                out = []
                for g, it in groups.items():
                    if g in done:
                        continue
                    partner = frozenset(A ^ {a, b} if (a in A) != (b in A) else A for A in g)
                    if partner != g and partner in groups and partner not in done:
                        out.append(merge(it, groups[partner]))
                        done |= {g, partner}
                    else:
                        out.append(it)
                        done.add(g)
                items = out

    def cost(u, v):
        return sum(((v[1] - u[1]) + (u[1] - v[1]) + (v[2] - u[2]) + (u[2] - v[2])).values())

    # whatever is left: closest pairs first; shared numerator factors stay factored
    while len(items) > 1:
        _, i, j = min((cost(items[i], items[j]), i, j) for i in range(len(items)) for j in range(i + 1, len(items)))
        merged = merge(items[i], items[j])
        items = [x for k, x in enumerate(items) if k not in (i, j)] + [merged]
    total, numf, den, _ = items[0]
    total = times(total, numf)
    den = Counter(den)
    if cancel:
        for f in _cancel_order(den):
            while den[f] and not total.is_zero():
                q = total.exact_quotient(poly(f))
                if q is None:
                    break
                total = q
                den[f] -= 1
    return total, +den


def generator_element(f: LaurentElem) -> GradedElem:
    """Degree-1 element with body ``f(z_1)``; ``f`` has one variable or is a scalar."""
    if f.n == 0:
        f = f.embed(1)
    if f.n != 1:
        raise ValueError("generator bodies have one variable")
    ring = f.space.ring
    if ring != ZZ and not isinstance(ring, TensorPowerModel):
        f = LaurentElem(Space(1, tensor_power(ring, 1), f.space.nq), f.raw)
    return GradedElem(1, RatElem(f))


def associativity_check(F: GradedElem, G: GradedElem, H: GradedElem, kernel: KernelSpec | None = None) -> bool:
    """Whether ``(F * G) * H == F * (G * H)`` as rational functions."""
    left = _outer(shuffle_product(F, G, kernel, True), H, kernel)
    right = _outer(F, shuffle_product(G, H, kernel, True), kernel)
    return left == right


def _outer(F: GradedElem, G: GradedElem, kernel: KernelSpec | None) -> GradedElem:
    # an equality test needs a common denominator, not a reduced one
    if kernel is None:
        kernel = default_plane_kernel()
    space = _space_for(F.space, F.degree + G.degree)
    if space.ring == ZZ and F.degree and G.degree:
        return _shuffle_fast(F, G, kernel, space, True, False)
    return shuffle_product(F, G, kernel, True)


def symmetrized_product(F: GradedElem, G: GradedElem) -> GradedElem:
    """``Sym(F(z_1..z_n) G(z_{n+1}..)) / (n! m!)`` for symmetric Laurent bodies.

    Equals the shuffle product with the trivial kernel; an independent oracle.
    """
    from .laurent import is_symmetric, symmetrize

    if not (F.body.is_laurent() and G.body.is_laurent()):
        raise ValueError("symmetrized product needs Laurent bodies")
    if not (is_symmetric(F.body) and is_symmetric(G.body)):
        raise ValueError("symmetrized product needs symmetric bodies")
    n, m = F.degree, G.degree
    space = _space_for(F.body.space, n + m)
    prod = _lift(F.body, space, 0).numerator * _lift(G.body, space, n).numerator
    total = symmetrize(prod)
    d = factorial(n) * factorial(m)
    # each orbit of a symmetric product is counted n! m! times
    return GradedElem(n + m, RatElem(LaurentElem(space, {k: c // d for k, c in total.raw.items()})))


# -- kernel files -----------------------------------------------------------


def parse_kernel(text: str, base: RingModel | None = None) -> KernelSpec:
    """Lines ``zeta num: c ...`` and ``zeta den: c ...`` with whitespace-separated coefficients.

    Torus coefficients are q-monomials such as ``q1*q2``; with ``base`` they are
    expressions in the tensor square such as ``one[1]`` or ``(one[1]+s[2])``.
    """
    from .parser import parse_expression

    space = torus_space(0) if base is None else Space(0, tensor_power(base, 2), 0)
    parts: dict[str, list] = {"num": [], "den": []}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        words = head.split()
        if not sep or len(words) != 2 or words[0] != "zeta" or words[1] not in parts:
            raise ValueError(f"line {lineno}: expected 'zeta num: ...' or 'zeta den: ...'")
        if words[1] in seen:
            raise ValueError(f"line {lineno}: duplicate 'zeta {words[1]}' line")
        seen.add(words[1])
        for tok in body.split():
            c = parse_expression(tok, space=space)
            if isinstance(c, RatElem):
                if not c.is_laurent():
                    raise ValueError(f"line {lineno}: coefficient {tok!r} is not a Laurent monomial")
                c = c.numerator
            parts[words[1]].append(c if base is None else _ring_of(c))
    return KernelSpec(tuple(parts["num"]), tuple(parts["den"]))


def format_kernel(kernel: KernelSpec) -> str:
    from .parser import format_expr

    def fmt(c):
        if isinstance(c, RingElem):
            c = Space(0, c.model, 0).const(c)
        return format_expr(c).replace(" ", "")

    num = " ".join(fmt(c) for c in kernel.numerator)
    den = " ".join(fmt(c) for c in kernel.denominator)
    return f"zeta num: {num}\nzeta den: {den}\n".replace(": \n", ":\n")


# -- experiment: do shuffle products satisfy the conditions? ----------------


@dataclass
class ExperimentResult:
    lines: list[str]
    passed: int
    failed: int

    @property
    def summary(self) -> str:
        return f"total={self.passed + self.failed} pass={self.passed} fail={self.failed}"


def pole_wheel_experiment(
    degree: int = 3, trials: int = 20, kernel: KernelSpec | None = None, seed: int = 0
) -> ExperimentResult:
    """Torus mode: products of random degree-1 elements, pole check, then wheel check.

    The product is symmetric and permuting variables permutes the wheel ideals,
    so the triple (1, 2, 3) stands for all of them.  An outcome, not a theorem:
    a failure is reported, not raised.
    """
    from .conditions import PoleViolation, pole_check, surface_wheel_membership
    from .parser import format_expr, format_factor

    if degree < 3:
        raise ValueError("wheel conditions need degree >= 3")
    rng = random.Random(seed)
    sp = torus_space(1)
    lines, passed, failed = [], 0, 0
    for t in range(trials):
        gens = []
        for _ in range(degree):
            body = random_element(sp, rng, terms=rng.randint(1, 3))
            gens.append(generator_element(body if body else sp.one()))
        F = gens[0]
        for g in gens[1:]:
            F = shuffle_product(F, g, kernel, normalize=True)
        label = "trial {} bodies={}".format(t, ",".join(format_expr(g.body) for g in gens))
        try:
            G = pole_check(F.body)
        except PoleViolation as exc:
            lines.append(f"{label} POLE-VIOLATION factor={format_factor(exc.factor)}")
            failed += 1
            continue
        if not surface_wheel_membership(G, (1, 2, 3)):
            lines.append(f"{label} NOT-MEMBER")
            failed += 1
        else:
            lines.append(f"{label} PASS")
            passed += 1
    return ExperimentResult(lines, passed, failed)
