"""Truncated jets at the model radial set.

A :class:`JetSeries` is a polynomial in ``z``, ``theta_1..theta_{n-1}`` and
``y_1..y_{n-1}`` with exact rational coefficients.  It stands for a function
on the cosphere bundle (equivalently a function homogeneous of degree 0 on the
cotangent bundle) near ``y = z = theta = 0``.

Two caps bound the stored terms:

* ``N`` -- the filtration cap.  The filtration of ``z^a theta^alpha y^beta``
  is ``a + |alpha|`` (the power of the vanishing ideal of ``{z = 0, theta = 0}``
  it lies in); only terms with filtration ``< N`` are kept.
* ``M`` -- the y-degree cap; only terms with ``|beta| <= M`` are kept.

Products are exact modulo the ideal spanned by the dropped monomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

from .errors import CapViolation, CapsMismatch, DimensionMismatch, NotElliptic

Number = Union[int, Fraction]


class Monomial(NamedTuple):
    """``z^a theta^alpha y^beta``."""

    a: int
    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    @property
    def filtration(self) -> int:
        return self.a + sum(self.alpha)

    @property
    def ydeg(self) -> int:
        return sum(self.beta)

    def sort_key(self):
        # graded lexicographic in (a, alpha, beta)
        return (self.a + sum(self.alpha) + sum(self.beta), self.a, self.alpha, self.beta)

    def __str__(self) -> str:
        parts = []
        if self.a:
            parts.append("z" if self.a == 1 else f"z^{self.a}")
        for i, e in enumerate(self.alpha, 1):
            if e:
                parts.append(f"theta{i}" if e == 1 else f"theta{i}^{e}")
        for i, e in enumerate(self.beta, 1):
            if e:
                parts.append(f"y{i}" if e == 1 else f"y{i}^{e}")
        return " ".join(parts) if parts else "1"


def monomial(n: int, a: int = 0, alpha: Iterable[int] | None = None, beta: Iterable[int] | None = None) -> Monomial:
    d = n - 1
    alpha = tuple(alpha) if alpha is not None else (0,) * d
    beta = tuple(beta) if beta is not None else (0,) * d
    return Monomial(a, alpha, beta)


@dataclass(frozen=True)
class JetCaps:
    """Dimension ``n`` of the base and the truncation caps ``N`` and ``M``."""

    n: int
    N: int
    M: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.N < 1:
            raise ValueError(f"filtration cap N must be >= 1, got {self.N}")
        if self.M < 0:
            raise ValueError(f"y-degree cap M must be >= 0, got {self.M}")

    @property
    def d(self) -> int:
        """Number of ``theta`` (and ``y``) variables."""
        return self.n - 1

    def admits(self, m: Monomial) -> bool:
        return m.a + sum(m.alpha) < self.N and sum(m.beta) <= self.M

    def check(self, m: Monomial) -> None:
        if len(m.alpha) != self.d or len(m.beta) != self.d:
            raise DimensionMismatch(
                f"monomial {tuple(m)} has exponent lengths ({len(m.alpha)}, {len(m.beta)}), expected {self.d}"
            )
        if m.a < 0 or min(m.alpha, default=0) < 0 or min(m.beta, default=0) < 0:
            raise ValueError(f"negative exponent in {tuple(m)}")
        if not self.admits(m):
            raise CapViolation(f"monomial {m} exceeds caps (N={self.N}, M={self.M})")


def parse_variable(var: str, d: int) -> tuple[str, int]:
    """Map ``'z'``, ``'theta<i>'`` or ``'y<i>'`` (1-based) to ``(kind, index)``."""
    if var == "z":
        return "z", 0
    for kind in ("theta", "y"):
        if var.startswith(kind) and var[len(kind):].isdigit():
            i = int(var[len(kind):])
            if not 1 <= i <= d:
                raise DimensionMismatch(f"variable {var!r} out of range for {d} {kind} variable(s)")
            return kind, i - 1
    raise ValueError(f"unknown variable {var!r}")


def _add_into(out: dict, key, value) -> None:
    v = out.get(key, 0) + value
    if v:
        out[key] = v
    else:
        out.pop(key, None)


class JetSeries:
    """Immutable truncated jet; see the module docstring."""

    __slots__ = ("caps", "_terms", "_hash")

    def __init__(self, caps: JetCaps, terms: Mapping[Monomial, Number] | None = None, *, _trusted: bool = False):
        self.caps = caps
        if _trusted:
            self._terms = terms
        else:
            clean: dict[Monomial, Fraction] = {}
            for m, c in (terms or {}).items():
                m = Monomial(int(m[0]), tuple(m[1]), tuple(m[2]))
                caps.check(m)
                _add_into(clean, m, Fraction(c))
            self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def zero(cls, caps: JetCaps) -> JetSeries:
        return cls(caps, {}, _trusted=True)

    @classmethod
    def constant(cls, value: Number, caps: JetCaps) -> JetSeries:
        return cls(caps, {monomial(caps.n): Fraction(value)})

    @classmethod
    def one(cls, caps: JetCaps) -> JetSeries:
        return cls.constant(1, caps)

    @classmethod
    def var(cls, name: str, caps: JetCaps) -> JetSeries:
        kind, i = parse_variable(name, caps.d)
        unit = [0] * caps.d
        if kind == "z":
            m = monomial(caps.n, a=1)
        else:
            unit[i] = 1
            m = monomial(caps.n, alpha=unit) if kind == "theta" else monomial(caps.n, beta=unit)
        return cls(caps, {m: 1})

    # mapping-like access
    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in canonical (graded lexicographic) order."""
        return sorted(self._terms.items(), key=lambda kv: kv[0].sort_key())

    def __iter__(self) -> Iterator[Monomial]:
        return iter(m for m, _ in self.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, m: Monomial) -> Fraction:
        return Fraction(self._terms.get(m, 0))

    def __eq__(self, other) -> bool:
        if isinstance(other, JetSeries):
            return self.caps == other.caps and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == JetSeries.constant(other, self.caps) if other else not self._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.caps, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"JetSeries({self}, N={self.caps.N}, M={self.caps.M})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for m, c in self.items():
            mono = str(m)
            if mono == "1":
                out.append(str(c))
            elif c == 1:
                out.append(mono)
            elif c == -1:
                out.append(f"-{mono}")
            else:
                out.append(f"{c}*{mono.replace(' ', '*')}")
        return " + ".join(out).replace("+ -", "- ")

    # arithmetic
    def _coerce(self, other) -> JetSeries:
        if isinstance(other, JetSeries):
            if other.caps != self.caps:
                raise CapsMismatch(f"caps differ: {self.caps} vs {other.caps}")
            return other
        if isinstance(other, (int, Fraction)):
            return JetSeries.constant(other, self.caps)
        return NotImplemented

    def __add__(self, other) -> JetSeries:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            _add_into(out, m, c)
        return JetSeries(self.caps, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> JetSeries:
        return JetSeries(self.caps, {m: -c for m, c in self._terms.items()}, _trusted=True)

    def __sub__(self, other) -> JetSeries:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> JetSeries:
        return (-self) + other

    def scale(self, c: Number) -> JetSeries:
        c = Fraction(c)
        if not c:
            return JetSeries.zero(self.caps)
        return JetSeries(self.caps, {m: v * c for m, v in self._terms.items()}, _trusted=True)

    def __mul__(self, other) -> JetSeries:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return JetSeries(self.caps, _mul_terms(self._terms, other._terms, self.caps), _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, c: Number) -> JetSeries:
        return self.scale(Fraction(1) / Fraction(c))

    def __pow__(self, k: int) -> JetSeries:
        if k < 0:
            return jet_invert(self) ** (-k)
        result = JetSeries.one(self.caps)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # structure
    def derive(self, var: str) -> JetSeries:
        kind, i = parse_variable(var, self.caps.d)
        if kind == "z":
            return self.d_z()
        return self.d_theta(i) if kind == "theta" else self.d_y(i)

    def d_z(self) -> JetSeries:
        out = {}
        for m, c in self._terms.items():
            if m.a:
                out[Monomial(m.a - 1, m.alpha, m.beta)] = c * m.a
        return JetSeries(self.caps, out, _trusted=True)

    def d_theta(self, i: int) -> JetSeries:
        out = {}
        for m, c in self._terms.items():
            e = m.alpha[i]
            if e:
                alpha = m.alpha[:i] + (e - 1,) + m.alpha[i + 1:]
                out[Monomial(m.a, alpha, m.beta)] = c * e
        return JetSeries(self.caps, out, _trusted=True)

    def d_y(self, i: int) -> JetSeries:
        out = {}
        for m, c in self._terms.items():
            e = m.beta[i]
            if e:
                beta = m.beta[:i] + (e - 1,) + m.beta[i + 1:]
                out[Monomial(m.a, m.alpha, beta)] = c * e
        return JetSeries(self.caps, out, _trusted=True)

    def times_monomial(self, m: Monomial) -> JetSeries:
        """Multiply by a single monomial, truncating to caps."""
        out = {}
        for k, c in self._terms.items():
            key = Monomial(k.a + m.a, tuple(x + y for x, y in zip(k.alpha, m.alpha)),
                           tuple(x + y for x, y in zip(k.beta, m.beta)))
            if self.caps.admits(key):
                out[key] = c
        return JetSeries(self.caps, out, _trusted=True)

    def divide_by_z(self) -> JetSeries:
        """Exact division by ``z``; every term must carry a positive z-power."""
        out = {}
        for m, c in self._terms.items():
            if not m.a:
                raise ValueError(f"term {m} is not divisible by z")
            out[Monomial(m.a - 1, m.alpha, m.beta)] = c
        return JetSeries(self.caps, out, _trusted=True)

    def map_coefficients(self, weight) -> JetSeries:
        """Diagonal operator: multiply the coefficient of ``m`` by ``weight(m)``."""
        out = {}
        for m, c in self._terms.items():
            w = weight(m)
            if w:
                out[m] = c * w
        return JetSeries(self.caps, out, _trusted=True)

    def select(self, predicate) -> JetSeries:
        return JetSeries(self.caps, {m: c for m, c in self._terms.items() if predicate(m)}, _trusted=True)

    def level(self, l: int) -> JetSeries:
        """Part of filtration exactly ``l``."""
        return self.select(lambda m: m.a + sum(m.alpha) == l)

    def y_only(self) -> JetSeries:
        """Part with no ``z`` or ``theta`` factor (the restriction to the radial set)."""
        return self.select(lambda m: m.a == 0 and not any(m.alpha))

    def constant_term(self) -> Fraction:
        return self.coefficient(monomial(self.caps.n))

    def filtration_order(self) -> float:
        return filtration_order(self)

    def with_caps(self, caps: JetCaps) -> JetSeries:
        """Re-home the jet under ``caps`` (same ``n``), dropping terms outside them."""
        if caps.n != self.caps.n:
            raise DimensionMismatch(f"cannot change n from {self.caps.n} to {caps.n}")
        return JetSeries(caps, {m: c for m, c in self._terms.items() if caps.admits(m)}, _trusted=True)

    def max_ydeg(self) -> int:
        return max((m.ydeg for m in self._terms), default=-1)


def _mul_terms(ta: Mapping, tb: Mapping, caps: JetCaps) -> dict:
    if not ta or not tb:
        return {}
    N, M = caps.N, caps.M
    la = [(m, c, m.a + sum(m.alpha), sum(m.beta)) for m, c in ta.items()]
    lb = sorted(((m, c, m.a + sum(m.alpha), sum(m.beta)) for m, c in tb.items()), key=lambda t: t[2])
    out: dict = {}
    get = out.get
    for ma, ca, fa, ya in la:
        room_f = N - fa
        room_y = M - ya
        aa, alpha_a, beta_a = ma
        for mb, cb, fb, yb in lb:
            if fb >= room_f:
                break
            if yb > room_y:
                continue
            key = Monomial(aa + mb.a, tuple(map(int.__add__, alpha_a, mb.alpha)), tuple(map(int.__add__, beta_a, mb.beta)))
            out[key] = get(key, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def make_jet(entries: Iterable[tuple[Monomial | tuple, Number]], caps: JetCaps) -> JetSeries:
    """Build a jet from ``(monomial, coefficient)`` pairs.

    Duplicates are summed and zero coefficients dropped.  A monomial outside
    the caps raises :class:`CapViolation`; wrong exponent lengths raise
    :class:`DimensionMismatch`.
    """
    out: dict[Monomial, Fraction] = {}
    for m, c in entries:
        m = Monomial(int(m[0]), tuple(m[1]), tuple(m[2]))
        caps.check(m)
        _add_into(out, m, Fraction(c))
    return JetSeries(caps, out, _trusted=True)


def jet_add(a: JetSeries, b: JetSeries) -> JetSeries:
    return a + b


def jet_mul(a: JetSeries, b: JetSeries) -> JetSeries:
    if a.caps != b.caps:
        raise CapsMismatch(f"caps differ: {a.caps} vs {b.caps}")
    return a * b


def jet_derive(a: JetSeries, var: str) -> JetSeries:
    return a.derive(var)


def filtration_order(a: JetSeries) -> float:
    """Minimum of ``a + |alpha|`` over the terms of ``a``; ``inf`` for the zero jet."""
    return min((m.a + sum(m.alpha) for m in a._terms), default=math.inf)


def jet_invert(a: JetSeries) -> JetSeries:
    """Multiplicative inverse modulo the caps.

    Writes ``a = c (1 + u)`` with ``u`` free of constant term and sums the
    geometric series in ``-u``; ``u^j`` leaves the caps after at most
    ``N - 1 + M`` factors.
    """
    c0 = a.constant_term()
    if not c0:
        raise NotElliptic(f"constant term of {a} is zero")
    inv_c0 = 1 / c0
    u = a.scale(inv_c0) - 1
    result = JetSeries.one(a.caps)
    power = JetSeries.one(a.caps)
    for _ in range(a.caps.N + a.caps.M):
        power = -(power * u)
        if not power:
            break
        result = result + power
    return result.scale(inv_c0)
