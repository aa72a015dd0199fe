"""Text formats for symbols and flows, and JSON forms of certificates.

Symbol file::

    # comment
    n=2, order=1, N=6, M=4
    [1]: 1 z
    [0]:
      -2/3 z^2 theta1
      y1^2

The header gives the base dimension ``n`` and the order ``m``; the caps
``N`` and ``M`` are optional.  A section ``[h]`` holds the component of
homogeneity ``h`` (``h <= m``); a term may follow the colon on the same line.
A term is an optional integer or ``p/q`` coefficient followed by variables
``z``, ``theta<i>``, ``y<i>`` with optional ``^exponent``.

Flow file::

    dim = 2
    A = 0 0; 0 -1
    L = 1
    vanishing = 10
    perturb: 1 x2^10 dx1
    g: 1 x2^8
    g_bump = 1
    c = 1

``L`` lists 1-based coordinates (may be empty).  ``perturb:`` terms name the
component they act on with ``dx<i>``.  Optional keys: ``bump`` (cutoff radius
of the perturbation), ``g_bump``, ``c``, ``direction`` (+1 or -1),
``box = lo hi; lo hi``, ``points``, ``probe_base = x1 x2; ...``,
``probe_direction``, ``probe_h``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import CapViolation, DimensionMismatch, ParseError
from .flows import FlowSpec, ProbeGrid, ScalarField
from .jets import JetCaps, JetSeries, Monomial
from .lower import NormalizationCertificate, ReplayOrder, StageRecord
from .principal import LevelRecord, PrincipalCertificate
from .symbols import ClassicalSymbol

DEFAULT_N = 6
DEFAULT_M = 4

_MINUS = str.maketrans({"−": "-"})
_SYMBOL_COEF = re.compile(r"^[+-]?\d+(/\d+)?$")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?$")
_VAR = re.compile(r"^([a-z]+)(\d*)(?:\^(\d+))?$")
_SECTION = re.compile(r"^\[\s*([+-]?\d+)\s*\]\s*:?\s*(.*)$")


def _tokens(text: str, offset: int):
    """Whitespace tokens with their 1-based columns."""
    for m in re.finditer(r"\S+", text):
        yield m.group(), offset + m.start() + 1


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _parse_coefficient(tok: str, lineno: int, col: int, exact: bool, source) -> Fraction:
    pattern = _SYMBOL_COEF if exact else _NUMBER
    if not pattern.match(tok):
        kind = "integer or p/q" if exact else "number"
        raise ParseError(f"expected {kind} coefficient, got {tok!r}", lineno, col, source)
    try:
        return Fraction(tok)
    except (ZeroDivisionError, ValueError):
        raise ParseError(f"bad coefficient {tok!r}", lineno, col, source) from None


def _split_coefficient(toks, lineno, exact, source):
    """Leading coefficient (default 1; a bare sign on the first variable is allowed)."""
    toks = list(toks)
    if not toks:
        raise ParseError("empty term", lineno, 1, source)
    tok, col = toks[0]
    if tok[0].isdigit() or (len(tok) > 1 and tok[0] in "+-." and (tok[1].isdigit() or tok[1] == ".")):
        return _parse_coefficient(tok, lineno, col, exact, source), toks[1:]
    if tok[0] in "+-" and len(tok) > 1:
        sign = -1 if tok[0] == "-" else 1
        return Fraction(sign), [(tok[1:], col + 1)] + toks[1:]
    return Fraction(1), toks


def _parse_symbol_term(text: str, offset: int, lineno: int, caps: JetCaps, source) -> tuple[Monomial, Fraction]:
    coef, rest = _split_coefficient(_tokens(text, offset), lineno, True, source)
    d = caps.d
    a, alpha, beta = 0, [0] * d, [0] * d
    for tok, col in rest:
        m = _VAR.match(tok)
        if not m:
            raise ParseError(f"bad monomial token {tok!r}", lineno, col, source)
        name, idx, exp = m.group(1), m.group(2), int(m.group(3) or 1)
        if name == "z" and not idx:
            a += exp
        elif name in ("theta", "y") and idx:
            i = int(idx)
            if not 1 <= i <= d:
                raise DimensionMismatch(f"{source or '<input>'}:{lineno}:{col}: variable {tok.split('^')[0]!r} "
                                        f"out of range for n={caps.n}")
            (alpha if name == "theta" else beta)[i - 1] += exp
        else:
            raise ParseError(f"unknown variable {tok!r}", lineno, col, source)
    mono = Monomial(a, tuple(alpha), tuple(beta))
    if not caps.admits(mono):
        raise CapViolation(f"{source or '<input>'}:{lineno}: term {mono} exceeds caps (N={caps.N}, M={caps.M})")
    return mono, coef


def _parse_header(line: str, lineno: int, source) -> dict[str, int]:
    out = {}
    for part in re.finditer(r"[^,\s][^,]*", line):
        col = part.start() + 1
        m = re.match(r"^\s*([A-Za-z]+)\s*=\s*([+-]?\d+)\s*$", part.group())
        if not m:
            raise ParseError(f"bad header entry {part.group().strip()!r}", lineno, col, source)
        key, val = m.group(1), int(m.group(2))
        if key not in ("n", "order", "N", "M"):
            raise ParseError(f"unknown header key {key!r}", lineno, col, source)
        if key in out:
            raise ParseError(f"duplicate header key {key!r}", lineno, col, source)
        out[key] = val
    for key in ("n", "order"):
        if key not in out:
            raise ParseError(f"header lacks {key!r}", lineno, 1, source)
    if out["n"] < 2:
        raise ParseError("n must be >= 2", lineno, 1, source)
    for key in ("N", "M"):
        if key in out and out[key] < (1 if key == "N" else 0):
            raise ParseError(f"{key} out of range", lineno, 1, source)
    return out


def parse_symbol_text(text: str, caps: JetCaps | None = None, source: str | None = None, *,
                      cap_fil: int | None = None, cap_y: int | None = None) -> ClassicalSymbol:
    """Parse symbol-file text.

    ``caps`` replaces the header caps entirely; ``cap_fil``/``cap_y`` override
    only ``N``/``M``.  Terms outside the caps in effect raise ``CapViolation``.
    """
    header = None
    sections: dict[int, dict[Monomial, Fraction]] = {}
    current = None
    for lineno, raw in enumerate(text.translate(_MINUS).splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        if header is None:
            hdr = _parse_header(body, lineno, source)
            n = hdr["n"]
            if caps is None:
                N = cap_fil if cap_fil is not None else hdr.get("N", DEFAULT_N)
                M = cap_y if cap_y is not None else hdr.get("M", DEFAULT_M)
                caps = JetCaps(n, N, M)
            elif caps.n != n:
                raise DimensionMismatch(f"caps are for n={caps.n} but the file declares n={n}")
            header = hdr
            continue
        sec = _SECTION.match(body)
        if sec:
            h = int(sec.group(1))
            if h > header["order"]:
                raise ParseError(f"homogeneity {h} exceeds the order {header['order']}", lineno, indent + 2, source)
            if h in sections:
                raise ParseError(f"duplicate section [{h}]", lineno, indent + 1, source)
            sections[h] = current = {}
            rest = sec.group(2)
            if rest:
                mono, coef = _parse_symbol_term(rest, indent + sec.start(2), lineno, caps, source)
                current[mono] = current.get(mono, 0) + coef
            continue
        if current is None:
            raise ParseError("term outside of a section", lineno, indent + 1, source)
        mono, coef = _parse_symbol_term(body, indent, lineno, caps, source)
        current[mono] = current.get(mono, 0) + coef
    if header is None:
        raise ParseError("missing header", 1, 1, source)
    m = header["order"]
    if not sections:
        raise ParseError("no component sections", 1, 1, source)
    length = m - min(sections) + 1
    comps = [JetSeries(caps, sections.get(m - j, {})) for j in range(length)]
    return ClassicalSymbol(m, tuple(comps))


def parse_symbol_file(path, caps: JetCaps | None = None, *, cap_fil: int | None = None,
                      cap_y: int | None = None) -> ClassicalSymbol:
    path = Path(path)
    return parse_symbol_text(path.read_text(encoding="utf-8"), caps, str(path), cap_fil=cap_fil, cap_y=cap_y)


def _term_text(m: Monomial, c: Fraction) -> str:
    return f"{c} {m}" if str(m) != "1" else str(c)


def emit_symbol(P: ClassicalSymbol) -> str:
    caps = P.caps
    lines = [f"n={caps.n}, order={P.m}, N={caps.N}, M={caps.M}"]
    for j, comp in enumerate(P.components):
        lines.append(f"[{P.m - j}]:")
        lines.extend(f"  {_term_text(mono, c)}" for mono, c in comp.items())
    return "\n".join(lines) + "\n"


# flow files

@dataclass(frozen=True)
class FlowFile:
    spec: FlowSpec
    g: ScalarField | None = None
    c: float | None = None
    direction: int = 1
    box: tuple[tuple[float, float], ...] | None = None
    points: int | None = None
    probe: ProbeGrid | None = None


def _poly_term(text, offset, lineno, k, source, with_component):
    coef, rest = _split_coefficient(_tokens(text, offset), lineno, False, source)
    exps = [0] * k
    comp = None
    for tok, col in rest:
        m = _VAR.match(tok)
        if not m or not m.group(2):
            raise ParseError(f"bad monomial token {tok!r}", lineno, col, source)
        name, i, e = m.group(1), int(m.group(2)), int(m.group(3) or 1)
        if not 1 <= i <= k:
            raise DimensionMismatch(f"{source or '<input>'}:{lineno}:{col}: {tok!r} out of range for dim={k}")
        if name == "x":
            exps[i - 1] += e
        elif name == "dx" and with_component and comp is None and m.group(3) is None:
            comp = i - 1
        else:
            raise ParseError(f"unexpected token {tok!r}", lineno, col, source)
    if with_component and comp is None:
        raise ParseError("perturbation term needs a component dx<i>", lineno, offset + len(text) + 1, source)
    return comp, float(coef), tuple(exps)


def _numbers(text, offset, lineno, source) -> list[float]:
    out = []
    for tok, col in _tokens(text, offset):
        out.append(float(_parse_coefficient(tok, lineno, col, False, source)))
    return out


def _rows(text, offset, lineno, source) -> list[list[float]]:
    rows, pos = [], 0
    for chunk in text.split(";"):
        rows.append(_numbers(chunk, offset + pos, lineno, source))
        pos += len(chunk) + 1
    return rows


_FLOW_KEYS = {"dim", "A", "L", "vanishing", "bump", "g_bump", "c", "direction", "box", "points",
              "probe_base", "probe_direction", "probe_h"}


def parse_flow_text(text: str, source: str | None = None) -> FlowFile:
    values: dict[str, tuple[str, int, int]] = {}
    perturb, gterms = [], []
    for lineno, raw in enumerate(text.translate(_MINUS).splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = re.match(r"^(\s*)(perturb|g)\s*:(.*)$", line)
        if m:
            (perturb if m.group(2) == "perturb" else gterms).append((m.group(3), m.end(2) + 1, lineno))
            continue
        m = re.match(r"^(\s*)([A-Za-z_]+)\s*=(.*)$", line)
        if not m:
            raise ParseError("expected 'key = value' or a 'perturb:'/'g:' term", lineno, len(line) - len(line.lstrip()) + 1,
                             source)
        key = m.group(2)
        if key not in _FLOW_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, m.start(2) + 1, source)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, m.start(2) + 1, source)
        values[key] = (m.group(3), m.start(3), lineno)

    def scalar(key, conv, default=None):
        if key not in values:
            return default
        txt, off, ln = values[key]
        nums = _numbers(txt, off, ln, source)
        if len(nums) != 1:
            raise ParseError(f"{key} needs one value", ln, off + 1, source)
        v = nums[0]
        if conv is int:
            if v != int(v):
                raise ParseError(f"{key} must be an integer", ln, off + 1, source)
            return int(v)
        return v

    if "dim" not in values or "A" not in values:
        raise ParseError("flow file needs 'dim' and 'A'", 1, 1, source)
    k = scalar("dim", int)
    if k < 1:
        raise ParseError("dim must be >= 1", values["dim"][2], 1, source)
    txt, off, ln = values["A"]
    rows = _rows(txt, off, ln, source)
    flat = [v for r in rows for v in r]
    if len(rows) == 1 and len(flat) == k * k:
        rows = [flat[i * k:(i + 1) * k] for i in range(k)]
    if len(rows) != k or any(len(r) != k for r in rows):
        raise DimensionMismatch(f"{source or '<input>'}:{ln}: A must be {k}x{k}")
    L = []
    if "L" in values:
        txt, off, ln = values["L"]
        for tok, col in _tokens(txt.replace(",", " "), off):
            if not tok.isdigit():
                raise ParseError(f"bad index {tok!r}", ln, col, source)
            if not 1 <= int(tok) <= k:
                raise DimensionMismatch(f"{source or '<input>'}:{ln}:{col}: L index {tok} out of range")
            L.append(int(tok) - 1)
    terms = [_poly_term(t, off, ln, k, source, True) for t, off, ln in perturb]
    spec = FlowSpec(rows, tuple(terms), tuple(L), scalar("vanishing", int, 0), scalar("bump", float))
    g = None
    if gterms:
        g = ScalarField(tuple(_poly_term(t, off, ln, k, source, False)[1:] for t, off, ln in gterms),
                        scalar("g_bump", float))
    box = None
    if "box" in values:
        txt, off, ln = values["box"]
        b = _rows(txt, off, ln, source)
        if len(b) != k or any(len(r) != 2 for r in b):
            raise DimensionMismatch(f"{source or '<input>'}:{ln}: box needs {k} 'lo hi' pairs")
        box = tuple((r[0], r[1]) for r in b)
    probe = None
    if "probe_base" in values or "probe_direction" in values:
        if "probe_base" not in values or "probe_direction" not in values:
            raise ParseError("probe needs both probe_base and probe_direction", 1, 1, source)
        txt, off, ln = values["probe_base"]
        base = _rows(txt, off, ln, source)
        txt2, off2, ln2 = values["probe_direction"]
        direction = _numbers(txt2, off2, ln2, source)
        if any(len(p) != k for p in base) or len(direction) != k:
            raise DimensionMismatch(f"{source or '<input>'}: probe points and direction need {k} coordinates")
        probe = ProbeGrid(tuple(tuple(p) for p in base), tuple(direction), scalar("probe_h", float, 0.05))
    direction = scalar("direction", int, 1)
    if direction not in (1, -1):
        raise ParseError("direction must be 1 or -1", values["direction"][2], 1, source)
    return FlowFile(spec=spec, g=g, c=scalar("c", float), direction=direction, box=box,
                    points=scalar("points", int), probe=probe)


def parse_flow_file(path) -> FlowFile:
    path = Path(path)
    return parse_flow_text(path.read_text(encoding="utf-8"), str(path))


def _num(v: float) -> str:
    return repr(float(v))


def _mono_x(exps, prefix="x") -> str:
    parts = [f"{prefix}{i}" if e == 1 else f"{prefix}{i}^{e}" for i, e in enumerate(exps, 1) if e]
    return " ".join(parts)


def emit_flow(ff: FlowFile) -> str:
    spec = ff.spec
    lines = [f"dim = {spec.k}", "A = " + "; ".join(" ".join(_num(v) for v in row) for row in spec.A),
             "L = " + " ".join(str(i + 1) for i in spec.L), f"vanishing = {spec.vanishing}"]
    if spec.bump_radius is not None:
        lines.append(f"bump = {_num(spec.bump_radius)}")
    for comp, coeff, exps in spec.perturbation:
        lines.append(f"perturb: {_num(coeff)} {_mono_x(exps)} dx{comp + 1}".replace("  ", " "))
    if ff.g is not None:
        for coeff, exps in ff.g.terms:
            lines.append(f"g: {_num(coeff)} {_mono_x(exps)}".rstrip())
        if ff.g.bump_radius is not None:
            lines.append(f"g_bump = {_num(ff.g.bump_radius)}")
    if ff.c is not None:
        lines.append(f"c = {_num(ff.c)}")
    if ff.direction != 1:
        lines.append(f"direction = {ff.direction}")
    if ff.box is not None:
        lines.append("box = " + "; ".join(f"{_num(lo)} {_num(hi)}" for lo, hi in ff.box))
    if ff.points is not None:
        lines.append(f"points = {ff.points}")
    if ff.probe is not None:
        lines.append("probe_base = " + "; ".join(" ".join(_num(v) for v in p) for p in ff.probe.base_points))
        lines.append("probe_direction = " + " ".join(_num(v) for v in ff.probe.direction))
        lines.append(f"probe_h = {_num(ff.probe.h0)}")
    return "\n".join(lines) + "\n"


# JSON forms

def caps_to_json(caps: JetCaps) -> dict:
    return {"n": caps.n, "N": caps.N, "M": caps.M}


def caps_from_json(d: dict) -> JetCaps:
    return JetCaps(d["n"], d["N"], d["M"])


def jet_to_json(j: JetSeries) -> list:
    """Terms as ``[a, alpha, beta, "p/q"]`` in graded order."""
    return [[m.a, list(m.alpha), list(m.beta), str(c)] for m, c in j.items()]


def jet_from_json(terms: list, caps: JetCaps) -> JetSeries:
    return JetSeries(caps, {Monomial(a, tuple(al), tuple(be)): Fraction(c) for a, al, be, c in terms})


def filtration_to_json(f: float):
    return "inf" if f == math.inf else int(f)


def filtration_from_json(v) -> float:
    return math.inf if v == "inf" else int(v)


def symbol_to_json(P: ClassicalSymbol) -> dict:
    return {"order": P.m, "caps": caps_to_json(P.caps), "components": [jet_to_json(c) for c in P.components]}


def symbol_from_json(d: dict) -> ClassicalSymbol:
    caps = caps_from_json(d["caps"])
    return ClassicalSymbol(d["order"], tuple(jet_from_json(c, caps) for c in d["components"]))


def principal_to_json(pc: PrincipalCertificate) -> dict:
    return {
        "caps": caps_to_json(pc.caps),
        "work_caps": caps_to_json(pc.work_caps),
        "lambda_factor": jet_to_json(pc.lambda_factor),
        "elliptic_factor": jet_to_json(pc.elliptic_factor),
        "generators": {str(l): jet_to_json(b) for l, b in sorted(pc.generators.items())},
        "residual": jet_to_json(pc.residual),
        "log": [{"level": r.level, "solved_terms": r.solved_terms, "divisor": r.divisor} for r in pc.log],
        "replay_filtration": filtration_to_json(pc.replay_filtration),
        "replay_ok": pc.replay_ok,
    }


def principal_from_json(d: dict) -> PrincipalCertificate:
    caps, wc = caps_from_json(d["caps"]), caps_from_json(d["work_caps"])
    return PrincipalCertificate(
        caps=caps, work_caps=wc,
        lambda_factor=jet_from_json(d["lambda_factor"], caps),
        elliptic_factor=jet_from_json(d["elliptic_factor"], wc),
        generators={int(l): jet_from_json(b, wc) for l, b in d["generators"].items()},
        residual=jet_from_json(d["residual"], caps),
        log=tuple(LevelRecord(**r) for r in d["log"]),
        replay_filtration=filtration_from_json(d["replay_filtration"]),
    )


_STAGE_JETS = ("p_tilde", "b_tilde", "f", "f_tilde", "resonant", "residual")


def certificate_to_json(cert: NormalizationCertificate) -> dict:
    return {
        "order": cert.m,
        "caps": caps_to_json(cert.caps),
        "stage_caps": caps_to_json(cert.stage_caps),
        "K": cert.K,
        "routing": cert.routing,
        "principal": principal_to_json(cert.principal),
        "p0": jet_to_json(cert.p0),
        "stages": [{"k": st.k, **{name: jet_to_json(getattr(st, name)) for name in _STAGE_JETS},
                    "printed_convention_agrees": st.printed_convention_agrees} for st in cert.stages],
        "sign_convention": dict(sorted(cert.sign_convention.items())),
        "replay": [{"index": r.index, "order": r.order, "filtration": filtration_to_json(r.filtration),
                    "ok": r.ok} for r in cert.replay],
        "replay_ok": cert.replay_ok,
    }


def certificate_from_json(d: dict) -> NormalizationCertificate:
    caps, sc = caps_from_json(d["caps"]), caps_from_json(d["stage_caps"])
    stages = tuple(StageRecord(k=s["k"], **{name: jet_from_json(s[name], sc) for name in _STAGE_JETS},
                               printed_convention_agrees=s["printed_convention_agrees"]) for s in d["stages"])
    return NormalizationCertificate(
        m=d["order"], caps=caps, stage_caps=sc, K=d["K"], principal=principal_from_json(d["principal"]),
        p0=jet_from_json(d["p0"], caps), stages=stages, routing=d["routing"],
        sign_convention=dict(d["sign_convention"]),
        replay=tuple(ReplayOrder(index=r["index"], order=r["order"], filtration=filtration_from_json(r["filtration"]),
                                 ok=r["ok"]) for r in d["replay"]),
    )
