from fractions import Fraction

from hypothesis import strategies as st

from radnf.jets import JetCaps, JetSeries, Monomial


def monomials(caps: JetCaps, min_filtration: int = 0):
    d = caps.d
    exps = st.integers(0, caps.N - 1)

    def build(t):
        a, alpha, beta = t
        return Monomial(a, tuple(alpha), tuple(beta))

    return st.tuples(exps, st.lists(st.integers(0, caps.N - 1), min_size=d, max_size=d),
                     st.lists(st.integers(0, caps.M), min_size=d, max_size=d)).map(build).filter(
        lambda m: caps.admits(m) and m.filtration >= min_filtration)


fractions = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


def jets(caps: JetCaps, max_terms: int = 5, min_filtration: int = 0):
    return st.dictionaries(monomials(caps, min_filtration), fractions, max_size=max_terms).map(
        lambda d: JetSeries(caps, d))


def units(caps: JetCaps):
    """Jets with nonzero constant term."""
    return st.tuples(jets(caps), st.builds(Fraction, st.integers(1, 5), st.integers(1, 3)),
                     st.booleans()).map(
        lambda t: t[0] - JetSeries.constant(t[0].constant_term(), caps)
        + JetSeries.constant(t[1] if t[2] else -t[1], caps))
