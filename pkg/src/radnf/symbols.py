"""Homogeneous symbols in the chart ``theta = eta/zeta``, ``rho = 1/zeta``.

A symbol homogeneous of degree ``w`` in the fibre variables is stored through
its degree-0 representative ``a``: the symbol itself is ``rho^{-w} a``.  The
brackets here are computed with closed chart formulas.  The canonical
coordinate representation (:class:`LaurentRep`) is kept as an independent
oracle and is only used by tests and by ``verify-hamilton``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import CapsMismatch, OracleMismatch
from .jets import JetCaps, JetSeries, Monomial, monomial

# --------------------------------------------------------------------------
# canonical-coordinate oracle
# --------------------------------------------------------------------------

# key: (beta, a, gamma, s) for y^beta z^a eta^gamma zeta^s
LaurentKey = tuple


class LaurentRep:
    """Laurent polynomial in ``(y, z, eta, zeta)``; ``zeta`` may carry negative powers."""

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: Mapping[LaurentKey, Fraction] | None = None):
        self.d = d
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v}

    def __eq__(self, other):
        return isinstance(other, LaurentRep) and self.d == other.d and self.terms == other.terms

    def __repr__(self):
        return f"LaurentRep({self.terms!r})"

    def __add__(self, other: LaurentRep) -> LaurentRep:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return LaurentRep(self.d, out)

    def __neg__(self) -> LaurentRep:
        return LaurentRep(self.d, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: LaurentRep) -> LaurentRep:
        return self + (-other)

    def __mul__(self, other: LaurentRep) -> LaurentRep:
        out: dict = {}
        for (b1, a1, g1, s1), v1 in self.terms.items():
            for (b2, a2, g2, s2), v2 in other.terms.items():
                key = (tuple(x + y for x, y in zip(b1, b2)), a1 + a2, tuple(x + y for x, y in zip(g1, g2)), s1 + s2)
                out[key] = out.get(key, 0) + v1 * v2
        return LaurentRep(self.d, out)

    def _derive(self, slot: str, i: int = 0) -> LaurentRep:
        out: dict = {}
        for (beta, a, gamma, s), v in self.terms.items():
            if slot == "y":
                e = beta[i]
                if e:
                    out[(beta[:i] + (e - 1,) + beta[i + 1:], a, gamma, s)] = v * e
            elif slot == "z":
                if a:
                    out[(beta, a - 1, gamma, s)] = v * a
            elif slot == "eta":
                e = gamma[i]
                if e:
                    out[(beta, a, gamma[:i] + (e - 1,) + gamma[i + 1:], s)] = v * e
            elif s:
                out[(beta, a, gamma, s - 1)] = v * s
        return LaurentRep(self.d, out)

    def d_y(self, i):
        return self._derive("y", i)

    def d_z(self):
        return self._derive("z")

    def d_eta(self, i):
        return self._derive("eta", i)

    def d_zeta(self):
        return self._derive("zeta")


def to_canonical(a: JetSeries, weight: int) -> LaurentRep:
    """``zeta^weight * a(y, z, eta/zeta)`` as a Laurent polynomial."""
    terms = {}
    for m, c in a.terms.items():
        terms[(m.beta, m.a, m.alpha, weight - sum(m.alpha))] = c
    return LaurentRep(a.caps.d, terms)


def from_canonical(f: LaurentRep, weight: int, caps: JetCaps) -> JetSeries:
    """Inverse of :func:`to_canonical`, truncated to ``caps``.

    Raises :class:`OracleMismatch` when ``f`` is not homogeneous of degree
    ``weight`` in ``(eta, zeta)``.
    """
    out = {}
    for (beta, a, gamma, s), c in f.terms.items():
        if s != weight - sum(gamma):
            raise OracleMismatch(f"term {(beta, a, gamma, s)} is not homogeneous of degree {weight}")
        m = Monomial(a, gamma, beta)
        if caps.admits(m):
            out[m] = c
    return JetSeries(caps, out)


def canonical_bracket(f: LaurentRep, g: LaurentRep) -> LaurentRep:
    """``sum_i (d_eta_i f d_y_i g - d_y_i f d_eta_i g) + d_zeta f d_z g - d_z f d_zeta g``."""
    out = f.d_zeta() * g.d_z() - f.d_z() * g.d_zeta()
    for i in range(f.d):
        out = out + f.d_eta(i) * g.d_y(i) - f.d_y(i) * g.d_eta(i)
    return out


def oracle_graded_bracket(a: JetSeries, s: int, b: JetSeries, t: int) -> JetSeries:
    """Graded bracket computed through canonical coordinates (test oracle)."""
    if a.caps != b.caps:
        raise CapsMismatch(f"caps differ: {a.caps} vs {b.caps}")
    br = canonical_bracket(to_canonical(a, s), to_canonical(b, t))
    return from_canonical(br, s + t - 1, a.caps)


# --------------------------------------------------------------------------
# chart formulas
# --------------------------------------------------------------------------


def _theta_euler(a: JetSeries, shift: int = 0) -> JetSeries:
    """``(theta . d_theta - shift) a``."""
    return a.map_coefficients(lambda m: sum(m.alpha) - shift)


def graded_bracket(a: JetSeries, s: int, b: JetSeries, t: int) -> JetSeries:
    """Degree-0 representative of ``{rho^-s a, rho^-t b}`` (which has weight ``s + t - 1``).

    With ``a``, ``b`` independent of ``rho`` this is::

        d_z a (theta.d_theta b - t b) - (theta.d_theta a - s a) d_z b
            + sum_i (d_theta_i a d_y_i b - d_y_i a d_theta_i b)
    """
    if a.caps != b.caps:
        raise CapsMismatch(f"caps differ: {a.caps} vs {b.caps}")
    if not a or not b:
        return JetSeries.zero(a.caps)
    out = a.d_z() * _theta_euler(b, t) - _theta_euler(a, s) * b.d_z()
    for i in range(a.caps.d):
        out = out + a.d_theta(i) * b.d_y(i) - a.d_y(i) * b.d_theta(i)
    return out


def lagrange_bracket(a: JetSeries, b: JetSeries) -> JetSeries:
    """``rho {rho^-1 a, rho^-1 b}``."""
    return graded_bracket(a, 1, b, 1)


@dataclass(frozen=True)
class ChartVectorField:
    """b-vector field ``sum c_y_i d_y_i + c_z d_z + sum c_theta_i d_theta_i + c_rho rho d_rho``."""

    coeff_y: tuple[JetSeries, ...]
    coeff_z: JetSeries
    coeff_theta: tuple[JetSeries, ...]
    coeff_rho_drho: JetSeries

    def apply(self, g: JetSeries, weight: int = 0) -> JetSeries:
        """Degree-0 representative of the field applied to ``rho^-weight g``."""
        out = (self.coeff_rho_drho * g).scale(-weight) + self.coeff_z * g.d_z()
        for i, (cy, ct) in enumerate(zip(self.coeff_y, self.coeff_theta)):
            out = out + cy * g.d_y(i) + ct * g.d_theta(i)
        return out


def chart_hamilton_field(a: JetSeries) -> ChartVectorField:
    """Hamilton field of ``rho^-1 a`` in chart coordinates.

    ``d_z a (rho d_rho + theta.d_theta) - (theta.d_theta a - a) d_z
    + sum_i d_theta_i a d_y_i - d_y_i a d_theta_i``; the ``rho d_rho a`` term
    vanishes because ``a`` does not depend on ``rho``.
    """
    caps = a.caps
    dz = a.d_z()
    coeff_theta = []
    for i in range(caps.d):
        unit = [0] * caps.d
        unit[i] = 1
        coeff_theta.append(dz.times_monomial(monomial(caps.n, alpha=unit)) - a.d_y(i))
    return ChartVectorField(
        coeff_y=tuple(a.d_theta(i) for i in range(caps.d)),
        coeff_z=-_theta_euler(a, 1),
        coeff_theta=tuple(coeff_theta),
        coeff_rho_drho=dz,
    )


# --------------------------------------------------------------------------
# classical symbols and the radial class
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalSymbol:
    """``sum_j rho^-(m-j) c_j``: leading order ``m`` and degree-0 components ``c_0 .. c_K``."""

    m: int
    components: tuple[JetSeries, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a classical symbol needs at least one component")
        caps = comps[0].caps
        for c in comps[1:]:
            if c.caps != caps:
                raise CapsMismatch("components of a classical symbol must share caps")
        object.__setattr__(self, "components", comps)

    @property
    def caps(self) -> JetCaps:
        return self.components[0].caps

    @property
    def K(self) -> int:
        return len(self.components) - 1

    @property
    def principal(self) -> JetSeries:
        return self.components[0]

    def order_of(self, j: int) -> int:
        return self.m - j

    def padded(self, length: int) -> ClassicalSymbol:
        extra = max(0, length - len(self.components))
        return ClassicalSymbol(self.m, self.components + (JetSeries.zero(self.caps),) * extra)


COND_VANISH = "p|_Λ ≠ 0"
COND_THETA = "∂_θ p|_Λ ≠ 0"
COND_Y = "∂_y p|_Λ ≠ 0"
COND_Z = "∂_z p|_Λ(q₀) = 0"


@dataclass(frozen=True)
class RadialReport:
    in_class: bool
    lambda_factor: JetSeries
    failures: tuple[str, ...] = field(default=())


def radial_check(P: ClassicalSymbol | JetSeries) -> RadialReport:
    """Check membership of the principal part in the radial class at ``q0``.

    Conditions on ``p = c_0``: ``p`` vanishes on the radial set, its ``theta``
    and ``y`` derivatives vanish there, and ``d_z p`` is nonzero at ``q0``.
    On success ``p = lambda(y) z mod I^2`` and ``lambda`` is returned.
    """
    p = P.principal if isinstance(P, ClassicalSymbol) else P
    caps = p.caps
    failures = []
    on_lambda = p.y_only()
    if on_lambda:
        failures.append(COND_VANISH)
    if p.select(lambda m: m.a == 0 and sum(m.alpha) == 1):
        failures.append(COND_THETA)
    if any(on_lambda.d_y(i) for i in range(caps.d)):
        failures.append(COND_Y)
    lam = JetSeries(caps, {Monomial(0, m.alpha, m.beta): c
                           for m, c in p.terms.items() if m.a == 1 and not any(m.alpha)})
    if not lam.constant_term():
        failures.append(COND_Z)
    return RadialReport(in_class=not failures, lambda_factor=lam, failures=tuple(failures))


def check_against_oracle(a: JetSeries, s: int, b: JetSeries, t: int) -> None:
    """Raise :class:`OracleMismatch` if chart and canonical brackets differ."""
    chart = graded_bracket(a, s, b, t)
    oracle = oracle_graded_bracket(a, s, b, t)
    if chart != oracle:
        raise OracleMismatch(f"bracket mismatch for weights ({s}, {t}): chart {chart} vs oracle {oracle}")


def coordinate_functions(caps: JetCaps) -> list[tuple[str, JetSeries, int]]:
    """The chart coordinates as (name, degree-0 rep, weight); ``rho`` has weight -1."""
    out = [(f"y{i}", JetSeries.var(f"y{i}", caps), 0) for i in range(1, caps.n)]
    out.append(("z", JetSeries.var("z", caps), 0))
    out += [(f"theta{i}", JetSeries.var(f"theta{i}", caps), 0) for i in range(1, caps.n)]
    out.append(("rho", JetSeries.one(caps), -1))
    return out


def verify_hamilton_field(a: JetSeries) -> list[str]:
    """Compare the chart Hamilton field of ``rho^-1 a`` on each coordinate with the oracle.

    Returns the names of mismatching coordinates (empty on success).
    """
    field_ = chart_hamilton_field(a)
    bad = []
    for name, g, w in coordinate_functions(a.caps):
        if field_.apply(g, w) != oracle_graded_bracket(a, 1, g, w):
            bad.append(name)
    return bad


def random_jet(rng, caps: JetCaps, degree: int, n_terms: int, *, max_num: int = 5, max_den: int = 3,
               filtration_min: int = 0) -> JetSeries:
    """Random sparse jet with total degree ``<= degree`` inside ``caps``."""
    d = caps.d
    entries = []
    for _ in range(n_terms):
        for _attempt in range(50):
            exps = [0] * (1 + 2 * d)
            for _ in range(rng.randint(0, degree)):
                exps[rng.randrange(len(exps))] += 1
            m = Monomial(exps[0], tuple(exps[1:1 + d]), tuple(exps[1 + d:]))
            if caps.admits(m) and m.filtration >= filtration_min:
                break
        else:
            continue
        num = rng.randint(-max_num, max_num)
        entries.append((m, Fraction(num, rng.randint(1, max_den))))
    out: dict = {}
    for m, c in entries:
        out[m] = out.get(m, 0) + c
    return JetSeries(caps, {m: c for m, c in out.items() if c})


def random_radial_principal(rng, caps: JetCaps, degree: int = 4, n_terms: int = 6) -> JetSeries:
    """``lambda(y) z + (terms of filtration >= 2)`` with ``lambda(0)`` a nonzero rational."""
    z = JetSeries.var("z", caps)
    lam0 = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
    tail = random_jet(rng, caps, degree, 2).y_only()
    lam = JetSeries.constant(lam0 - tail.constant_term(), caps) + tail
    return lam * z + random_jet(rng, caps, degree, n_terms, filtration_min=2)


__all__: Sequence[str] = [
    "LaurentRep", "to_canonical", "from_canonical", "canonical_bracket", "oracle_graded_bracket",
    "graded_bracket", "lagrange_bracket", "ChartVectorField", "chart_hamilton_field", "ClassicalSymbol",
    "RadialReport", "radial_check", "check_against_oracle", "verify_hamilton_field", "random_jet",
    "random_radial_principal",
]
