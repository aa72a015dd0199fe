"""Formal normalization of a radial principal symbol to ``z``.

Given the rescaled principal symbol ``p`` (degree-0 representative of the
order-1 part) with ``p = lambda(y) z mod I^2``, find an elliptic factor ``e``
and generators ``b_2, b_3, ...`` (``b_l`` homogeneous of filtration ``l``) so
that ``e * Phi^*(p) = z`` modulo ``I^N``, where ``Phi^*`` is the composition
of the time-1 Hamilton flows of ``rho^-1 b_l`` (ascending ``l``).

Pullback by the flow of ``rho^-1 b`` acts on degree-0 representatives of
weight ``w`` as ``exp(ad b) = sum_j (ad b)^j / j!`` with
``ad b = graded_bracket(b, 1, ., w)``.  When ``b`` has filtration ``>= 2``
each application raises filtration by at least one, so the series stops
inside the caps.

Exactness under the y-cap: ``ad b`` may lower the y-degree by one while
raising the filtration by one, so terms dropped at y-degree ``M + 1`` could
leak back.  All work is therefore done with the y-cap widened to
``M + N - 1``; any leak then stays above y-degree ``M`` on every filtration
level below ``N``, and results projected back to the user caps are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BadFiltration, InternalError, NonConvergent, NotRadial
from .jets import JetCaps, JetSeries, filtration_order, jet_invert
from .symbols import graded_bracket, radial_check


def work_caps(caps: JetCaps) -> JetCaps:
    """Caps with the y-degree widened so pullbacks stay exact on ``caps``."""
    return JetCaps(caps.n, caps.N, caps.M + caps.N - 1)


@dataclass(frozen=True)
class LevelRecord:
    level: int
    solved_terms: int
    divisor: int


@dataclass(frozen=True)
class PrincipalCertificate:
    """Outcome of :func:`normalize_principal`.

    ``elliptic_factor`` is ``e`` with ``e * Phi^*(p) = z`` mod caps; it equals
    ``Phi^*(1/lambda)``.  Generators and ``e`` live on ``work_caps``.
    """

    caps: JetCaps
    work_caps: JetCaps
    lambda_factor: JetSeries
    elliptic_factor: JetSeries
    generators: dict[int, JetSeries]
    residual: JetSeries
    log: tuple[LevelRecord, ...] = field(default=())
    replay_filtration: float = math.inf

    @property
    def replay_ok(self) -> bool:
        return self.replay_filtration >= self.caps.N


def linear_reduction(p: JetSeries) -> tuple[JetSeries, JetSeries]:
    """Split off the unit ``lambda(y)`` with ``p = lambda(y) z mod I^2``.

    Returns ``(lambda, p / lambda)``; the second entry is ``z mod I^2``.
    """
    report = radial_check(p)
    if not report.in_class:
        raise NotRadial(report.failures)
    lam = report.lambda_factor
    return lam, jet_invert(lam) * p


def homological_solve_principal(r: JetSeries, l: int) -> JetSeries:
    """Solve ``<<b, z>> = -r`` for ``r`` homogeneous of filtration ``l >= 2``.

    On ``f(y) z^a theta^alpha`` the operator ``<<z, .>>`` has eigenvalue
    ``a + |alpha| - 1 = l - 1``, so ``b = r / (l - 1)``.
    """
    if l < 2:
        raise BadFiltration(f"level {l} < 2: the eigenvalue l - 1 vanishes")
    for m in r.terms:
        if m.filtration != l:
            raise BadFiltration(f"term {m} has filtration {m.filtration}, expected {l}")
    return r.scale(Fraction(1, l - 1))


def exp_ad_pullback(b: JetSeries, p: JetSeries, weight: int = 1) -> JetSeries:
    """``sum_j (ad b)^j p / j!`` for ``p`` of the given weight, truncated to caps."""
    if not b:
        return p
    if filtration_order(b) < 2:
        raise NonConvergent(f"generator {b} has filtration {filtration_order(b)} < 2")
    total = p
    term = p
    for j in range(1, p.caps.N + 1):
        term = graded_bracket(b, 1, term, weight).scale(Fraction(1, j))
        if not term:
            break
        total = total + term
    else:
        if term:
            raise InternalError("exp(ad b) series did not terminate inside the caps")
    return total


def pullback_chain(generators: dict[int, JetSeries], p: JetSeries, weight: int = 1) -> JetSeries:
    """Apply the pullbacks of all generators in ascending level order."""
    for l in sorted(generators):
        p = exp_ad_pullback(generators[l], p, weight)
    return p


def normalize_principal(p: JetSeries, caps: JetCaps | None = None) -> PrincipalCertificate:
    """Level-by-level normalization of ``p`` to ``z`` modulo ``I^N``."""
    caps = caps or p.caps
    if p.caps != caps:
        p = p.with_caps(caps)
    report = radial_check(p)
    if not report.in_class:
        raise NotRadial(report.failures)
    wc = work_caps(caps)
    p_work = p.with_caps(wc)
    lam, current = linear_reduction(p_work)
    z = JetSeries.var("z", wc)
    generators: dict[int, JetSeries] = {}
    log = []
    for l in range(2, caps.N):
        r = (current - z).level(l)
        if not r:
            continue
        b = homological_solve_principal(r, l)
        generators[l] = b
        current = exp_ad_pullback(b, current)
        log.append(LevelRecord(level=l, solved_terms=len(r), divisor=l - 1))
        if filtration_order(current - z) <= l:
            raise InternalError(f"level {l} not cleared by its generator")
    residual = current - z
    if filtration_order(residual) < caps.N:
        raise InternalError(f"residual {residual} has filtration below {caps.N}")
    e = pullback_chain(generators, jet_invert(lam), weight=0)
    cert = PrincipalCertificate(
        caps=caps, work_caps=wc, lambda_factor=lam.with_caps(caps), elliptic_factor=e,
        generators=generators, residual=residual.with_caps(caps), log=tuple(log),
    )
    filt = filtration_order(replay_principal(cert, p))
    if filt < caps.N:
        raise InternalError(f"replay of the principal certificate left filtration {filt} < {caps.N}")
    return PrincipalCertificate(**{**cert.__dict__, "replay_filtration": filt})


def replay_principal(cert: PrincipalCertificate, p: JetSeries) -> JetSeries:
    """``e * Phi^*(p) - z`` recomputed from the certificate alone, on the user caps."""
    wc = cert.work_caps
    pulled = pullback_chain(cert.generators, p.with_caps(wc))
    return (cert.elliptic_factor * pulled - JetSeries.var("z", wc)).with_caps(cert.caps)
