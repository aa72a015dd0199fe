"""Elimination of the lower-order terms of a classical radial symbol.

Conventions.  The symbol is first reduced to order 1 (multiplying by the
elliptic factor ``rho^{m-1}`` does not change degree-0 representatives), so
component ``j`` has weight ``1 - j``: index 0 is the principal part ``z``,
index 1 the order-0 part that becomes ``p0(y)``, index ``k + 1`` the order
``-k`` part.

Stage ``k`` removes the order ``-k`` discrepancy ``p~_k`` with a conjugation
generator ``rho^k b~_k`` (order ``-k``) and a multiplier ``1 + rho^{k+1} f_k``
(order ``-k-1``).  At first-order symbol calculus the symbol changes by::

    P  ->  P + {rho^k b~_k, P} + rho^{k+1} f_k P

Against ``P = rho^-1 z + ...`` the new order ``-k`` part is
``p~_k - L_k b~_k + z f_k`` with the homological operator
``L_k = theta.d_theta + z d_z + k`` (the sign of ``z d_z`` comes from the
canonical-coordinate bracket).  :func:`homological_solve_order_k` returns
``(b~, f~, resonant)`` with ``L_k b~ + z f~ + resonant = p~``; the stage then
uses ``f_k = -f~`` so that only ``resonant`` survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapsTooSmall, InductiveHypothesisViolated, InternalError, NotRadial
from .jets import JetCaps, JetSeries, Monomial, filtration_order
from .principal import PrincipalCertificate, normalize_principal, pullback_chain
from .symbols import ClassicalSymbol, graded_bracket, radial_check

ORACLE = "oracle"
PRINTED = "printed"

SIGN_CONVENTION = {
    "homological_operator": "theta.d_theta + z d_z + k",
    "eigenvalue": "|alpha| + a + k",
    "printed_operator": "theta.d_theta - z d_z + k",
    "printed_eigenvalue": "|alpha| - a + k",
    "stage_equation": "{rho^-1 z, b_k} - z f_k = p_k",
    "solve_identity": "L_k b~ + z f~ + resonant = p~",
    "multiplier": "f_k = -f~_k",
}


def homological_eigenvalue(a: int, alpha_deg: int, k: int, convention: str = ORACLE) -> int:
    """Eigenvalue of the stage-``k`` homological operator on ``y^beta z^a theta^alpha``."""
    if convention == ORACLE:
        return alpha_deg + a + k
    if convention == PRINTED:
        return alpha_deg - a + k
    raise ValueError(f"unknown convention {convention!r}")


def homological_operator(b: JetSeries, k: int) -> JetSeries:
    """``L_k b = {rho^-1 z, rho^k b}`` as a degree-0 representative, via the bracket."""
    return -graded_bracket(b, -k, JetSeries.var("z", b.caps), 1)


def homological_solve_order_k(p_tilde: JetSeries, k: int, *, routing: str = "f_first",
                              convention: str = ORACLE) -> tuple[JetSeries, JetSeries, JetSeries]:
    """Split ``p~`` into ``L_k b~ + z f~ + resonant``.

    ``routing="f_first"`` sends every term with a positive power of ``z`` to
    ``f~``; ``"b_first"`` sends a term to ``b~`` whenever its eigenvalue is
    nonzero.  Terms that neither route can absorb are returned as resonant.
    """
    if k < 0:
        raise ValueError(f"stage index must be >= 0, got {k}")
    if routing not in ("f_first", "b_first"):
        raise ValueError(f"unknown routing {routing!r}")
    b, f, res = {}, {}, {}
    for m, c in p_tilde.terms.items():
        mu = homological_eigenvalue(m.a, sum(m.alpha), k, convention)
        if m.a and (routing == "f_first" or not mu):
            f[Monomial(m.a - 1, m.alpha, m.beta)] = c
        elif mu:
            b[m] = c / mu
        else:
            res[m] = c
    caps = p_tilde.caps
    return JetSeries(caps, b, _trusted=True), JetSeries(caps, f, _trusted=True), JetSeries(caps, res, _trusted=True)


def stage_correction(symbol: ClassicalSymbol, k: int, b_tilde: JetSeries, f: JetSeries) -> ClassicalSymbol:
    """``P + {rho^k b~, P} + rho^{k+1} f P`` on an order-1 symbol, ladder length kept."""
    comps = list(symbol.components)
    out = list(comps)
    for i, c in enumerate(comps):
        j = i + k + 1
        if j >= len(comps) or not c:
            continue
        out[j] = out[j] + graded_bracket(b_tilde, -k, c, 1 - i) + f * c
    return ClassicalSymbol(symbol.m, tuple(out))


def target_symbol(caps: JetCaps, length: int, p0: JetSeries) -> ClassicalSymbol:
    """The normal form ``(z; p0; 0; ...)`` as an order-1 ladder."""
    comps = [JetSeries.var("z", caps), p0] + [JetSeries.zero(caps)] * (length - 2)
    return ClassicalSymbol(1, tuple(comps[:length]))


def conjugation_discrepancy(current: ClassicalSymbol, k: int, b_k: JetSeries, f_k: JetSeries,
                            p0: JetSeries | None = None) -> JetSeries:
    """Order ``-k`` discrepancy left after applying stage ``k`` to ``current``.

    Requires the components of order ``> -k`` to equal the normal form already
    (index 0 equal to ``z``; index 1 equal to ``p0`` when ``k >= 1``).  The
    target at order 0 is ``p0`` (zero when not given); below it is zero.
    """
    caps = current.caps
    if k + 1 >= len(current.components):
        raise ValueError(f"symbol has no order -{k} component")
    p0 = p0 if p0 is not None else JetSeries.zero(caps)
    target = target_symbol(caps, len(current.components), p0)
    for j in range(k + 1):
        if current.components[j] != target.components[j]:
            raise InductiveHypothesisViolated(
                f"component of order {1 - j} is {current.components[j]}, expected {target.components[j]}")
    z = target.components[0]
    new = current.components[k + 1] + graded_bracket(b_k, -k, z, 1) + f_k * z
    return new - target.components[k + 1]


@dataclass(frozen=True)
class StageRecord:
    k: int
    p_tilde: JetSeries
    b_tilde: JetSeries
    f: JetSeries
    f_tilde: JetSeries
    resonant: JetSeries
    residual: JetSeries
    printed_convention_agrees: bool


@dataclass(frozen=True)
class ReplayOrder:
    index: int
    order: int
    filtration: float
    ok: bool


@dataclass(frozen=True)
class NormalizationCertificate:
    m: int
    caps: JetCaps
    stage_caps: JetCaps
    K: int
    principal: PrincipalCertificate
    p0: JetSeries
    stages: tuple[StageRecord, ...]
    routing: str
    sign_convention: dict = field(default_factory=lambda: dict(SIGN_CONVENTION))
    replay: tuple[ReplayOrder, ...] = field(default=())

    @property
    def replay_ok(self) -> bool:
        return bool(self.replay) and all(r.ok for r in self.replay)


def stage_caps(caps: JetCaps, K: int) -> JetCaps:
    """Caps for the stage computations: each bracket may lower the y-degree by one."""
    return JetCaps(caps.n, caps.N, caps.M + K + 1)


def _principal_transform(symbol: ClassicalSymbol, pc: PrincipalCertificate) -> ClassicalSymbol:
    """``e * Phi^*(c_j)`` for every component (weight ``1 - j``), on the user caps."""
    wc = pc.work_caps
    comps = []
    for j, c in enumerate(symbol.components):
        pulled = pullback_chain(pc.generators, c.with_caps(wc), weight=1 - j)
        comps.append((pc.elliptic_factor * pulled).with_caps(pc.caps))
    return ClassicalSymbol(1, tuple(comps))


def normalize_full(P: ClassicalSymbol, K: int, caps: JetCaps | None = None, *,
                   routing: str = "f_first") -> NormalizationCertificate:
    """Normalize ``P`` to ``(z; p0(y); 0; ...)`` through stages ``k = 0..K``.

    Stage ``k`` fixes ladder index ``k + 1`` (order ``-k``); the symbol is
    padded with zero components so indices ``0..K+1`` exist.
    """
    caps = caps or P.caps
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    if K >= caps.N:
        raise CapsTooSmall(f"K = {K} stages need filtration cap N > K (N = {caps.N})")
    if P.caps != caps:
        P = ClassicalSymbol(P.m, tuple(c.with_caps(caps) for c in P.components))
    report = radial_check(P)
    if not report.in_class:
        raise NotRadial(report.failures)
    length = K + 2
    P = P.padded(length)
    sc = stage_caps(caps, K)
    P_ext = ClassicalSymbol(P.m, tuple(c.with_caps(sc) for c in P.components[:length]))
    pc = normalize_principal(P_ext.principal, sc)
    current = _principal_transform(P_ext, pc)
    if current.principal != JetSeries.var("z", sc):
        raise InternalError("principal part is not z after the principal transform")

    p0 = JetSeries.zero(sc)
    stages = []
    for k in range(K + 1):
        p_tilde = current.components[k + 1]
        b_t, f_t, res = homological_solve_order_k(p_tilde, k, routing=routing)
        b_p, f_p, res_p = homological_solve_order_k(p_tilde, k, routing=routing, convention=PRINTED)
        if k == 0:
            p0 = res
        elif res:
            raise InternalError(f"resonant terms {res} at stage {k}")
        f = -f_t
        residual = conjugation_discrepancy(current, k, b_t, f, p0)
        if filtration_order(residual) < caps.N:
            raise InternalError(f"stage {k} left discrepancy {residual}")
        current = stage_correction(current, k, b_t, f)
        stages.append(StageRecord(k=k, p_tilde=p_tilde, b_tilde=b_t, f=f, f_tilde=f_t, resonant=res,
                                  residual=residual,
                                  printed_convention_agrees=(b_p, f_p, res_p) == (b_t, f_t, res)))
    cert = NormalizationCertificate(m=P.m, caps=caps, stage_caps=sc, K=K, principal=pc, p0=p0.with_caps(caps),
                                    stages=tuple(stages),
                                    routing=routing)
    replay = replay_full(cert, P)
    if not all(r.ok for r in replay):
        raise InternalError("full normalization replay failed")
    return NormalizationCertificate(**{**cert.__dict__, "replay": replay})


def apply_certificate(cert: NormalizationCertificate, P: ClassicalSymbol) -> ClassicalSymbol:
    """Transform ``P`` with the principal certificate and every stage correction."""
    sc = cert.stage_caps
    P = P.padded(cert.K + 2)
    P = ClassicalSymbol(P.m, tuple(c.with_caps(sc) for c in P.components[:cert.K + 2]))
    current = _principal_transform(P, cert.principal)
    for st in cert.stages:
        current = stage_correction(current, st.k, st.b_tilde, st.f)
    return ClassicalSymbol(current.m, tuple(c.with_caps(cert.caps) for c in current.components))


def replay_full(cert: NormalizationCertificate, P: ClassicalSymbol) -> tuple[ReplayOrder, ...]:
    """Per-order comparison of the transformed symbol with ``(z; p0; 0; ...)``."""
    result = apply_certificate(cert, P)
    target = target_symbol(cert.caps, len(result.components), cert.p0)
    out = []
    for j, (c, t) in enumerate(zip(result.components, target.components)):
        filt = filtration_order(c - t)
        out.append(ReplayOrder(index=j, order=1 - j, filtration=filt, ok=filt >= cert.caps.N))
    return tuple(out)


def resonant_monomials(caps: JetCaps, k: int, max_level: int, convention: str = ORACLE) -> list[Monomial]:
    """Monomials ``z^a theta^alpha`` with ``a + |alpha| <= max_level`` in the kernel of ``L_k``.

    Kernel membership is tested by applying :func:`homological_operator` (the
    bracket), so this also checks the eigenvalue formula.
    """
    from itertools import product

    d = caps.d
    big = JetCaps(caps.n, max_level + 1, 0)
    out = []
    for a in range(max_level + 1):
        for alpha in product(range(max_level + 1 - a), repeat=d):
            if a + sum(alpha) > max_level:
                continue
            m = Monomial(a, alpha, (0,) * d)
            if convention == ORACLE:
                image = homological_operator(JetSeries(big, {m: Fraction(1)}), k)
                mu = image.coefficient(m)
                if image != JetSeries(big, {m: mu}):
                    raise InternalError(f"L_{k} is not diagonal on {m}")
            else:
                mu = homological_eigenvalue(a, sum(alpha), k, convention)
            if not mu:
                out.append(m)
    return out


__all__ = [
    "homological_eigenvalue", "homological_operator", "homological_solve_order_k", "stage_correction",
    "conjugation_discrepancy", "normalize_full", "replay_full", "apply_certificate", "NormalizationCertificate",
    "StageRecord", "resonant_monomials", "stage_caps", "SIGN_CONVENTION",
]
