"""Expression grammar for Laurent and restricted rational elements.

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('+' | '-') unary | power
    power := atom ('^' ['+' | '-'] INT | '^' '(' ['+' | '-'] INT ')')?
    atom  := INT | 'z'DIGIT | 'q1' | 'q2' | NAME ['[' INT ']'] | '(' expr ')'

``/`` accepts unit monomials and two-term divisors of the shape
``unit * (1 - c * z_a / z_b)``; anything else is rejected.  ``NAME[i]`` is the
basis element NAME of K(S) placed in tensor slot i.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .coeffrings import ZZ, NotInvertible, RingModel, TensorPowerModel
from .laurent import (
    BinomialFactor,
    LaurentElem,
    RatElem,
    Space,
    monomial_inverse,
    surface_space,
    torus_space,
)

MAX_VAR = 9


class ExprSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class NonBinomialDenominator(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


@dataclass
class _Tok:
    kind: str  # 'int', 'name', 'op', 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group(1):
            toks.append(_Tok("int", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(_Tok("name", m.group(2), m.start(2)))
        elif m.group(3):
            if m.group(3) not in "+-*/^()[]":
                raise ExprSyntaxError(f"unexpected character {m.group(3)!r}", m.start(3))
            toks.append(_Tok("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, space: Space):
        self.toks = _tokenize(text)
        self.i = 0
        self.space = space

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text:
            raise ExprSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def parse(self):
        val = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        return val

    def expr(self):
        val = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            rhs = self.term()
            val = _add(val, rhs) if op == "+" else _add(val, _neg(rhs))
        return val

    def term(self):
        val = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            tok = self.take()
            rhs = self.unary()
            val = _mul(val, rhs) if tok.text == "*" else _div(val, rhs, tok.pos)
        return val

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("+", "-"):
            self.take()
            val = self.unary()
            return _neg(val) if tok.text == "-" else val
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            tok = self.take()
            paren = self.peek().text == "("
            if paren:
                self.take()
            sign = 1
            if self.peek().text in ("+", "-"):
                sign = -1 if self.take().text == "-" else 1
            num = self.take()
            if num.kind != "int":
                raise ExprSyntaxError("exponent must be an integer", num.pos)
            if paren:
                self.expect(")")
            return _pow(base, sign * int(num.text), tok.pos)
        return base

    def atom(self):
        tok = self.take()
        sp = self.space
        if tok.kind == "int":
            return sp.const(int(tok.text))
        if tok.text == "(":
            val = self.expr()
            self.expect(")")
            return val
        if tok.kind == "name":
            m = re.fullmatch(r"z(\d+)", tok.text)
            if m:
                i = int(m.group(1))
                if not 1 <= i <= min(sp.n, MAX_VAR):
                    raise ExprSyntaxError(f"variable {tok.text} outside z1..z{min(sp.n, MAX_VAR)}", tok.pos)
                return sp.z(i)
            if tok.text in ("q1", "q2"):
                if not sp.torus:
                    raise ExprSyntaxError(f"{tok.text} only exists in torus mode", tok.pos)
                return sp.q(int(tok.text[1]))
            return self.basis_symbol(tok)
        raise ExprSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)

    def basis_symbol(self, tok: _Tok):
        ring = self.space.ring
        base = ring.base if isinstance(ring, TensorPowerModel) else ring
        if ring == ZZ or tok.text not in base.basis_names:
            raise ExprSyntaxError(f"unknown symbol {tok.text!r}", tok.pos)
        elem = base.basis(base.index_of(tok.text))
        if self.peek().text == "[":
            self.take()
            num = self.take()
            if num.kind != "int":
                raise ExprSyntaxError("slot index must be an integer", num.pos)
            self.expect("]")
            slot = int(num.text)
        elif isinstance(ring, TensorPowerModel) and ring.power > 1:
            raise ExprSyntaxError(f"{tok.text} needs a tensor slot, e.g. {tok.text}[1]", tok.pos)
        else:
            slot = 1
        if isinstance(ring, TensorPowerModel):
            if not 1 <= slot <= ring.power:
                raise ExprSyntaxError(f"slot {slot} outside 1..{ring.power}", tok.pos)
            elem = ring.place({slot - 1: elem})
        elif slot != 1:
            raise ExprSyntaxError("coefficient model has a single slot", tok.pos)
        return self.space.const(elem)


def _neg(x):
    return -x


def _add(x, y):
    if isinstance(x, RatElem) or isinstance(y, RatElem):
        return RatElem.lift(x) + RatElem.lift(y)
    return x + y


def _mul(x, y):
    if isinstance(x, RatElem) or isinstance(y, RatElem):
        return RatElem.lift(x) * RatElem.lift(y)
    return x * y


def as_binomial(d: LaurentElem) -> tuple[LaurentElem, BinomialFactor]:
    """Write ``d = unit * (1 - c z_a/z_b)``; raises NonBinomialDenominator otherwise."""
    groups = d.z_groups()
    if len(groups) != 2:
        raise NonBinomialDenominator("denominator is not a binomial")
    n = d.n
    zero = (0,) * n
    one = d.space.scalars().one()
    items = sorted(groups.items(), key=lambda kv: (kv[0] != zero or kv[1] != one, kv[0]))
    (e1, c1), (e2, c2) = items
    diff = [y - x for x, y in zip(e1, e2)]
    if sorted(diff) != [-1] + [0] * (n - 2) + [1]:
        raise NonBinomialDenominator("denominator is not of the form 1 - c*z_a/z_b")
    a, b = diff.index(1) + 1, diff.index(-1) + 1
    lead = c1.embed(n).shift(e1)
    try:
        inv = monomial_inverse(c1)
        factor = BinomialFactor(-(c2 * inv), a, b)
    except NotInvertible:
        raise NonBinomialDenominator("binomial coefficients must be units") from None
    return lead, factor


def _div(x, y, pos: int):
    if isinstance(y, RatElem):
        if not y.is_laurent():
            raise NonBinomialDenominator(f"cannot divide by a rational element (position {pos})")
        y = y.numerator
    if y.is_zero():
        raise ZeroDivisionError(f"division by zero at position {pos}")
    try:
        inv = monomial_inverse(y)
    except NotInvertible:
        pass
    else:
        return _mul(x, inv)
    try:
        lead, factor = as_binomial(y)
    except NonBinomialDenominator as exc:
        raise NonBinomialDenominator(f"{exc} (position {pos})") from None
    return RatElem.lift(_mul(x, monomial_inverse(lead))).divide_by(factor)


def _pow(x, e: int, pos: int):
    if e >= 0:
        result = x.space.one() if isinstance(x, LaurentElem) else RatElem(x.space.one())
        for _ in range(e):
            result = _mul(result, x)
        return result
    return _div(x.space.one(), _pow(x, -e, pos), pos)


def parse_expression(
    text: str, n: int | None = None, base: RingModel | None = None, space: Space | None = None
) -> LaurentElem | RatElem:
    """Parse ``text``; torus mode unless ``base`` (surface mode) or ``space`` is given.

    ``n`` defaults to the largest z-index in the text.
    """
    if space is None:
        if n is None:
            n = max((int(m) for m in re.findall(r"\bz(\d+)\b", text)), default=0)
        space = torus_space(n) if base is None else surface_space(n, base)
    return _Parser(text, space).parse()


# -- formatting -------------------------------------------------------------


def _mono(names_exps) -> list[str]:
    out = []
    for name, e in names_exps:
        if e == 1:
            out.append(name)
        elif e:
            out.append(f"{name}^{e}")
    return out


def _basis_word(ring, b: int) -> list[str]:
    if isinstance(ring, TensorPowerModel):
        base = ring.base
        unit_idx = base.unit_basis_index
        words = []
        for s, d in enumerate(ring.digits(b)):
            if d == unit_idx:
                continue
            name = base.basis_names[d]
            words.append(name if ring.power == 1 else f"{name}[{s + 1}]")
        return words
    if ring.unit_basis_index == b:
        return []
    return [ring.basis_names[b]]


def _signed_terms(x: LaurentElem) -> list[tuple[int, str]]:
    sp = x.space
    n = sp.n
    out = []
    if sp.ring == ZZ:
        for (e, _), c in sorted(x.raw.items()):
            factors = _mono([("q1", e[n]), ("q2", e[n + 1])] if sp.torus else [])
            factors += _mono((f"z{i + 1}", e[i]) for i in range(n))
            out.append((c, factors))
    else:
        for z, scal in sorted(x.z_groups().items()):
            zf = _mono((f"z{i + 1}", z[i]) for i in range(n))
            pieces = [(c, _basis_word(sp.ring, b)) for (_, b), c in sorted(scal.raw.items())]
            if len(pieces) == 1:
                c, words = pieces[0]
                out.append((c, words + zf))
            else:
                out.append((1, ["(" + _join(pieces) + ")"] + zf))
    return out


def _join(pieces) -> str:
    s = ""
    for k, (c, factors) in enumerate(pieces):
        mag = abs(c)
        body = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
        if k == 0:
            s = ("-" if c < 0 else "") + body
        else:
            s += (" - " if c < 0 else " + ") + body
    return s or "0"


def format_factor(f: BinomialFactor) -> str:
    c = format_expr(f.coeff)
    ratio = f"z{f.a}/z{f.b}"
    if c == "1":
        return f"1 - {ratio}"
    if c == "-1":
        return f"1 + {ratio}"
    if " " in c:
        return f"1 - ({c})*{ratio}"
    if c.startswith("-"):
        return f"1 + {c[1:]}*{ratio}"
    return f"1 - {c}*{ratio}"


def format_expr(x: LaurentElem | RatElem) -> str:
    if isinstance(x, RatElem):
        num = format_expr(x.numerator)
        dens = "".join(f"/({format_factor(f)})" for f in x.factors)
        return f"({num}){dens}" if dens else num
    return _join(_signed_terms(x))
