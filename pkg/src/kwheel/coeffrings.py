"""Finite-rank commutative rings over the integers given by structure constants.

A :class:`RingModel` is a free Z-module with basis ``e_0 .. e_{d-1}`` and a
multiplication table.  Tensor powers are kept implicit (:class:`TensorPowerModel`)
and multiply slot by slot, so ``K(S)^{(x)6}`` never materialises its table.

Tensor-power basis indices are row-major: slot 1 is the most significant digit,
``index = sum(b_s * d**(n - s))`` for slots ``s = 1..n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import flint

MAX_TENSOR_RANK = 20000


class NotInvertible(ArithmeticError):
    pass


class ModelMismatch(TypeError):
    pass


def _sparse(vec: Sequence[int]) -> tuple[tuple[int, int], ...]:
    return tuple((k, int(c)) for k, c in enumerate(vec) if c)


def solve_rational(rows: Sequence[Mapping[int, int]], ncols: int, rhs: Sequence[int]):
    """Solve ``A x = rhs`` exactly over Q.

    ``rows`` holds one sparse row per equation.  Returns a particular solution
    (free variables set to zero) as a list of Fractions, or None when the
    system is inconsistent.
    """
    m = len(rows)
    aug = flint.fmpq_mat(m, ncols + 1)
    for i, row in enumerate(rows):
        for j, c in row.items():
            aug[i, j] = c
        aug[i, ncols] = rhs[i]
    red, rank = aug.rref()
    sol = [Fraction(0)] * ncols
    for i in range(rank):
        lead = next(j for j in range(ncols + 1) if red[i, j] != 0)
        if lead == ncols:
            return None
        v = red[i, ncols]
        sol[lead] = Fraction(int(v.p), int(v.q))
    return sol


class RingModel:
    """Commutative ring structure on Z^d given by ``e_i * e_j = sum_k c_ijk e_k``."""

    def __init__(
        self,
        basis_names: Sequence[str],
        structure_constants: Mapping[tuple[int, int], Sequence[int]],
        unit: Sequence[int] | None = None,
    ):
        self.basis_names = tuple(basis_names)
        d = self.rank = len(self.basis_names)
        if d == 0:
            raise ValueError("ring model needs a positive rank")
        table = {}
        for (i, j), vec in structure_constants.items():
            table[i, j] = tuple(int(c) for c in vec)
            table.setdefault((j, i), table[i, j])
        self._table = table
        self._products = {key: _sparse(vec) for key, vec in table.items()}
        self.unit = tuple(unit) if unit is not None else self._derive_unit()

    @property
    def structure_constants(self) -> dict[tuple[int, int], tuple[int, ...]]:
        return {(i, j): self.product_vector(i, j) for i in range(self.rank) for j in range(i, self.rank)}

    def product_vector(self, i: int, j: int) -> tuple[int, ...]:
        vec = [0] * self.rank
        for k, c in self.mul_basis(i, j):
            vec[k] += c
        return tuple(vec)

    def mul_basis(self, i: int, j: int) -> tuple[tuple[int, int], ...]:
        """Sparse expansion of ``e_i * e_j`` as ``((k, c_ijk), ...)``."""
        try:
            return self._products[i, j]
        except KeyError:
            raise ValueError(f"structure constant for ({i}, {j}) missing") from None

    def _key(self):
        return ("table", self.basis_names, tuple(sorted(self._table.items())), self.unit)

    def __eq__(self, other):
        return isinstance(other, RingModel) and (self is other or self._ident == other._ident)

    def __hash__(self):
        return hash(self._ident)

    @property
    def _ident(self):
        try:
            return self.__dict__["_ident_cache"]
        except KeyError:
            key = self.__dict__["_ident_cache"] = self._key()
            return key

    def __repr__(self):
        return f"RingModel(rank={self.rank}, basis={list(self.basis_names)})"

    def _derive_unit(self) -> tuple[int, ...] | None:
        # u * e_i = e_i for every i: d^2 equations in the d coordinates of u
        d = self.rank
        rows, rhs = [], []
        for i in range(d):
            for k in range(d):
                row = {}
                for a in range(d):
                    c = dict(self._products.get((a, i), ())).get(k, 0)
                    if c:
                        row[a] = c
                rows.append(row)
                rhs.append(1 if k == i else 0)
        try:
            sol = solve_rational(rows, d, rhs)
        except KeyError:
            return None
        if sol is None or any(x.denominator != 1 for x in sol):
            return None
        return tuple(int(x) for x in sol)

    # element constructors
    def element(self, coords: Sequence[int]) -> RingElem:
        return RingElem(self, tuple(int(c) for c in coords))

    def basis(self, i: int) -> RingElem:
        return self.element([1 if k == i else 0 for k in range(self.rank)])

    def one(self) -> RingElem:
        if self.unit is None:
            raise ValueError("ring model has no unit")
        return self.element(self.unit)

    def zero(self) -> RingElem:
        return self.element([0] * self.rank)

    def from_int(self, c: int) -> RingElem:
        return self.one() * c

    def index_of(self, name: str) -> int:
        return self.basis_names.index(name)

    @property
    def unit_basis_index(self) -> int | None:
        """Index ``i`` with ``e_i`` equal to the unit, if the unit is a basis vector."""
        if self.unit is not None and sorted(self.unit) == [0] * (self.rank - 1) + [1]:
            return self.unit.index(1)
        return None


class TensorPowerModel(RingModel):
    """``base^{(x)power}`` with slot-wise multiplication, products computed lazily."""

    def __init__(self, base: RingModel, power: int):
        if power < 1:
            raise ValueError("tensor power needs n >= 1")
        if isinstance(base, TensorPowerModel):
            raise ValueError("nest tensor powers by raising the base model directly")
        rank = base.rank**power
        if rank > MAX_TENSOR_RANK:
            raise OverflowError(f"tensor power rank {rank} exceeds MAX_TENSOR_RANK={MAX_TENSOR_RANK}")
        self.base = base
        self.power = power
        self.rank = rank
        self.basis_names = tuple(
            "(x)".join(base.basis_names[b] for b in digits) if power > 1 else base.basis_names[digits[0]]
            for digits in itertools.product(range(base.rank), repeat=power)
        )
        self.unit = None if base.unit is None else self._unit_coords()
        self._products = None
        self._mul_cache: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}
        self._perm_cache: dict[tuple[int, ...], list[int]] = {}

    def _unit_coords(self):
        u = _sparse(self.base.unit)
        coords = [0] * self.rank
        for combo in itertools.product(u, repeat=self.power):
            idx = self.from_digits([k for k, _ in combo])
            c = 1
            for _, ck in combo:
                c *= ck
            coords[idx] += c
        return tuple(coords)

    def _key(self):
        return ("tensor", self.base._key(), self.power)

    def __repr__(self):
        return f"TensorPowerModel({self.base!r}, {self.power})"

    def digits(self, idx: int) -> tuple[int, ...]:
        d = self.base.rank
        out = [0] * self.power
        for s in range(self.power - 1, -1, -1):
            idx, out[s] = divmod(idx, d)
        return tuple(out)

    def from_digits(self, digits: Iterable[int]) -> int:
        d = self.base.rank
        idx = 0
        for b in digits:
            idx = idx * d + b
        return idx

    def mul_basis(self, i: int, j: int):
        key = (i, j) if i <= j else (j, i)
        hit = self._mul_cache.get(key)
        if hit is not None:
            return hit
        acc: dict[int, int] = {0: 1}
        d = self.base.rank
        for bi, bj in zip(self.digits(i), self.digits(j)):
            slot = self.base.mul_basis(bi, bj)
            nxt: dict[int, int] = {}
            for idx, c in acc.items():
                for k, ck in slot:
                    nk = idx * d + k
                    nxt[nk] = nxt.get(nk, 0) + c * ck
            acc = nxt
        res = tuple((k, c) for k, c in sorted(acc.items()) if c)
        self._mul_cache[key] = res
        return res

    def slot_map(self, perm: Sequence[int]) -> list[int]:
        """Basis index map for ``perm``: slot ``s`` moves to slot ``perm[s]`` (0-based)."""
        perm = tuple(perm)
        hit = self._perm_cache.get(perm)
        if hit is not None:
            return hit
        out = []
        for idx in range(self.rank):
            digs = self.digits(idx)
            new = [0] * self.power
            for s, b in enumerate(digs):
                new[perm[s]] = b
            out.append(self.from_digits(new))
        self._perm_cache[perm] = out
        return out

    def place(self, elems: Mapping[int, RingElem]) -> RingElem:
        """Pure tensor with ``elems[s]`` in slot ``s`` (0-based) and the unit elsewhere."""
        one = self.base.one()
        factors = [elems.get(s, one) for s in range(self.power)]
        for f in factors:
            if f.model != self.base:
                raise ModelMismatch("slot element is not from the base model")
        coords = [0] * self.rank
        for combo in itertools.product(*(_sparse(f.coords) for f in factors)):
            c = 1
            for _, ck in combo:
                c *= ck
            coords[self.from_digits(k for k, _ in combo)] += c
        return self.element(coords)

    def embed(self, x: RingElem, slots: Sequence[int]) -> RingElem:
        """``x`` from ``base^{(x)k}`` placed in the given slots (0-based), unit elsewhere."""
        k = len(slots)
        src = x.model
        if k == 1 and src == self.base:
            src = tensor_power(self.base, 1)
        elif not (isinstance(src, TensorPowerModel) and src.base == self.base and src.power == k):
            raise ModelMismatch(f"expected an element of the {k}-fold tensor power")
        if len(set(slots)) != k or not all(0 <= s < self.power for s in slots):
            raise ValueError(f"bad slots {tuple(slots)}")
        rest = [s for s in range(self.power) if s not in slots]
        unit = _sparse(self.base.unit)
        coords = [0] * self.rank
        for idx, c in enumerate(x.coords):
            if not c:
                continue
            digits = [0] * self.power
            for s, d in zip(slots, src.digits(idx)):
                digits[s] = d
            for combo in itertools.product(unit, repeat=len(rest)):
                cc = c
                for s, (d, cu) in zip(rest, combo):
                    digits[s] = d
                    cc *= cu
                coords[self.from_digits(digits)] += cc
        return self.element(coords)


ZZ = RingModel(["1"], {(0, 0): (1,)}, unit=(1,))


@dataclass(frozen=True)
class RingElem:
    model: RingModel
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != self.model.rank:
            raise ValueError(f"expected {self.model.rank} coordinates, got {len(self.coords)}")

    def _check(self, other: RingElem):
        if not isinstance(other, RingElem):
            return NotImplemented
        if other.model != self.model:
            raise ModelMismatch("ring elements from different models")

    def __add__(self, other):
        if isinstance(other, int):
            other = self.model.from_int(other)
        self._check(other)
        return RingElem(self.model, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return RingElem(self.model, tuple(-a for a in self.coords))

    def __sub__(self, other):
        if isinstance(other, int):
            other = self.model.from_int(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return RingElem(self.model, tuple(a * other for a in self.coords))
        self._check(other)
        out = [0] * self.model.rank
        mul = self.model.mul_basis
        right = _sparse(other.coords)
        for i, a in _sparse(self.coords):
            for j, b in right:
                for k, c in mul(i, j):
                    out[k] += a * b * c
        return RingElem(self.model, tuple(out))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return invert(self) ** (-e)
        result = self.model.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __repr__(self):
        terms = [f"{c}*{self.model.basis_names[k]}" for k, c in _sparse(self.coords)]
        return " + ".join(terms) if terms else "0"


def ring_mul(a: RingElem, b: RingElem) -> RingElem:
    return a * b


def ring_add(a: RingElem, b: RingElem) -> RingElem:
    return a + b


def ring_neg(a: RingElem) -> RingElem:
    return -a


def multiplication_matrix(x: RingElem) -> list[dict[int, int]]:
    """Rows of the matrix of ``y -> x*y`` (row k, column j = coefficient of e_k in x*e_j)."""
    model = x.model
    rows: list[dict[int, int]] = [dict() for _ in range(model.rank)]
    for i, a in _sparse(x.coords):
        for j in range(model.rank):
            for k, c in model.mul_basis(i, j):
                rows[k][j] = rows[k].get(j, 0) + a * c
    return rows


def invert(x: RingElem) -> RingElem:
    """Inverse of ``x`` in the model, by an exact linear solve with an integrality check."""
    model = x.model
    if model.unit is None:
        raise NotInvertible("model has no unit")
    if x.coords == model.unit:
        return x
    sol = solve_rational(multiplication_matrix(x), model.rank, model.unit)
    if sol is None or any(v.denominator != 1 for v in sol):
        raise NotInvertible(f"{x!r} has no inverse over Z")
    y = model.element([int(v) for v in sol])
    if (x * y).coords != model.unit:
        raise NotInvertible(f"{x!r} has no inverse over Z")
    return y


def is_unit(x: RingElem) -> bool:
    try:
        invert(x)
    except NotInvertible:
        return False
    return True


def ring_validate(model: RingModel) -> list[str]:
    """Exhaustively check the ring axioms; returns the violations (empty if valid)."""
    d = model.rank
    names = model.basis_names
    report = []
    for i in range(d):
        for j in range(d):
            try:
                model.mul_basis(i, j)
            except ValueError:
                report.append(f"missing structure constant ({names[i]}, {names[j]})")
    if report:
        return report
    for i in range(d):
        for j in range(d):
            if model.product_vector(i, j) != model.product_vector(j, i):
                report.append(f"commutativity fails at ({names[i]}, {names[j]})")
    for i, j, k in itertools.product(range(d), repeat=3):
        left = model.basis(i) * model.basis(j) * model.basis(k)
        right = model.basis(i) * (model.basis(j) * model.basis(k))
        if left != right:
            report.append(f"associativity fails at ({names[i]}, {names[j]}, {names[k]})")
    if model.unit is None:
        report.append("no unit element")
    else:
        one = model.one()
        for i in range(d):
            if one * model.basis(i) != model.basis(i):
                report.append(f"unit fails at {names[i]}")
    return report


@lru_cache(maxsize=None)
def tensor_power(model: RingModel, n: int) -> TensorPowerModel:
    return TensorPowerModel(model, n)


def augmentation(x: RingElem, values: Sequence[int]) -> int:
    """Apply the ring character sending base basis ``e_i`` to ``values[i]`` in every slot."""
    model = x.model
    total = 0
    for idx, c in _sparse(x.coords):
        digs = model.digits(idx) if isinstance(model, TensorPowerModel) else (idx,)
        term = c
        for b in digs:
            term *= values[b]
        total += term
    return total


@dataclass(frozen=True)
class KSurfaceModel:
    """K(S) together with the classes the pole and wheel conditions use.

    ``wedgeW[k]`` lives in the tensor square, first slot pulled back along pr_1.
    """

    ring: RingModel
    omega: RingElem
    c_omega: RingElem
    wedgeW: tuple[RingElem, ...]
    r: int
    hyperplane: RingElem | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid surface model: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not is_unit(self.omega):
            out.append("omega is not invertible")
        if len(self.wedgeW) != self.r:
            out.append(f"wedgeW has {len(self.wedgeW)} entries, expected r={self.r}")
        sq = tensor_power(self.ring, 2)
        if any(w.model != sq for w in self.wedgeW):
            out.append("wedgeW entries must live in the tensor square")
        elif self.wedgeW and self.wedgeW[0] != sq.one():
            out.append("wedgeW[0] must be the unit")
        return out

    @property
    def tensor_square(self) -> TensorPowerModel:
        return tensor_power(self.ring, 2)


def builtin_kp2() -> KSurfaceModel:
    """K(P^2) = Z[s]/(s^3) with s = [O(1)] - 1, r = 3."""
    ring = _kp2_ring()
    one, s = ring.one(), ring.basis(1)
    L = one + s
    Linv = invert(L)
    sq = tensor_power(ring, 2)
    wedge = (
        sq.one(),
        sq.place({0: 3 * one - L, 1: Linv}),
        sq.place({0: Linv, 1: Linv * Linv}),
    )
    return KSurfaceModel(
        ring=ring,
        omega=Linv**3,
        c_omega=3 * Linv - one,
        wedgeW=wedge,
        r=3,
        hyperplane=L,
        name="kp2",
    )


@lru_cache(maxsize=None)
def _kp2_ring() -> RingModel:
    # basis 1, s, s^2 with s^3 = 0
    table = {}
    for i in range(3):
        for j in range(i, 3):
            vec = [0, 0, 0]
            if i + j < 3:
                vec[i + j] = 1
            table[i, j] = vec
    return RingModel(["one", "s", "s2"], table, unit=(1, 0, 0))


# -- model files ------------------------------------------------------------

_SURFACE_KEYS = ("omega", "comega", "hyperplane", "r")


def parse_model(text: str) -> RingModel | KSurfaceModel:
    """Parse the line-oriented ring-model format; returns a KSurfaceModel when
    surface data (``omega``, ``comega``, ``wedgeW``, ``r``) is present."""
    rank = None
    names = None
    table = {}
    extra: dict[str, list[int]] = {}
    wedge: dict[int, list[int]] = {}
    r = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head, _, rest = line.partition(" ")
            if head == "rank":
                rank = int(rest)
            elif head == "basis":
                names = rest.split()
            elif head == "mul":
                idx, _, vec = rest.partition(":")
                i, j = (int(t) for t in idx.split())
                table[i, j] = [int(t) for t in vec.split()]
            elif head == "wedgeW":
                idx, _, vec = rest.partition(":")
                wedge[int(idx)] = [int(t) for t in vec.split()]
            elif ":" in line:
                key, _, vec = line.partition(":")
                key = key.strip()
                if key == "r":
                    r = int(vec)
                elif key in _SURFACE_KEYS:
                    extra[key] = [int(t) for t in vec.split()]
                else:
                    raise ValueError(f"unknown key {key!r}")
            else:
                raise ValueError(f"unknown key {head!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if rank is None or names is None:
        raise ValueError("model file needs 'rank' and 'basis' lines")
    if len(names) != rank:
        raise ValueError(f"basis has {len(names)} names, rank is {rank}")
    for (i, j), vec in table.items():
        if not (0 <= i <= j < rank) or len(vec) != rank:
            raise ValueError(f"bad structure constant line for ({i}, {j})")
    ring = RingModel(names, table)
    if not extra and not wedge and r is None:
        return ring
    if ring.unit is None:
        raise ValueError("surface model ring has no unit")
    missing = [k for k in ("omega", "comega") if k not in extra] + ([] if r is not None else ["r"])
    if missing:
        raise ValueError(f"surface model missing {missing}")
    sq = tensor_power(ring, 2)
    return KSurfaceModel(
        ring=ring,
        omega=ring.element(extra["omega"]),
        c_omega=ring.element(extra["comega"]),
        hyperplane=ring.element(extra["hyperplane"]) if "hyperplane" in extra else None,
        wedgeW=tuple(sq.element(wedge[k]) for k in sorted(wedge)),
        r=r,
    )


def format_model(model: RingModel | KSurfaceModel) -> str:
    surf = model if isinstance(model, KSurfaceModel) else None
    ring = surf.ring if surf else model
    lines = [f"rank {ring.rank}", "basis " + " ".join(ring.basis_names)]
    for (i, j), vec in ring.structure_constants.items():
        lines.append(f"mul {i} {j} : " + " ".join(map(str, vec)))
    if surf:
        lines.append("omega: " + " ".join(map(str, surf.omega.coords)))
        lines.append("comega: " + " ".join(map(str, surf.c_omega.coords)))
        if surf.hyperplane is not None:
            lines.append("hyperplane: " + " ".join(map(str, surf.hyperplane.coords)))
        for k, w in enumerate(surf.wedgeW):
            lines.append(f"wedgeW {k} : " + " ".join(map(str, w.coords)))
        lines.append(f"r: {surf.r}")
    return "\n".join(lines) + "\n"


def load_model(path: str | Path) -> RingModel | KSurfaceModel:
    if str(path) == "kp2":
        return builtin_kp2()
    return parse_model(Path(path).read_text(encoding="utf-8"))
