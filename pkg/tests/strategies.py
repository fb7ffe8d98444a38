"""Hypothesis strategies for Laurent elements."""

from hypothesis import strategies as st

from kwheel.laurent import LaurentElem, Space, surface_space, torus_space


def laurent(space: Space, max_terms: int = 5, spread: int = 2, coeff: int = 5):
    exps = st.tuples(*[st.integers(-spread, spread)] * space.width)
    keys = st.tuples(exps, st.integers(0, space.ring.rank - 1))
    vals = st.integers(-coeff, coeff).filter(bool)
    return st.dictionaries(keys, vals, max_size=max_terms).map(lambda raw: LaurentElem(space, raw))


def torus(n: int, **kw):
    return laurent(torus_space(n), **kw)


def surface(n: int, base, **kw):
    return laurent(surface_space(n, base), **kw)
