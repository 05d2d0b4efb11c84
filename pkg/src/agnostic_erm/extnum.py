"""Extended-range reals for sequences that grow like towers of exponentials.

A ``Level`` stores a signed real as ``sign * exp^h(v)``: ``h`` nested
exponentials applied to an mpmath float ``v``. Positive quantities that can
also be astronomically small are wrapped in ``Ext``, which keeps ``ln x`` as a
``Level``. Comparisons between values at different levels are decided by the
level alone, so inequalities such as ``exp(-n) <= 1/n`` stay decidable when
``n`` itself has no floating point representation.

Results that the working precision cannot resolve raise ``Undecidable`` (or
compare as 0) instead of returning a wrong answer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .errors import Undecidable

PREC = 192
ctx = mpmath.MPContext()
ctx.prec = PREC
mpf = ctx.mpf

LIFT = mpf(2) ** 20
EXP_LIFT = ctx.exp(LIFT)
REL_TOL = mpf(2) ** (-(PREC - 40))
NEGLIGIBLE = -(PREC + 16) * ctx.ln(2)
INT_EXACT_LIMIT = 2 ** 62


@dataclass(frozen=True)
class Level:
    sign: int
    h: int
    v: object

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> "Level":
        return Level(-self.sign, self.h, self.v)

    def __str__(self) -> str:
        return f"{self.sign}|{self.h}|{ctx.nstr(self.v, 60)}"

    @classmethod
    def parse(cls, s: str) -> "Level":
        sign, h, v = s.split("|")
        return _norm(int(sign), int(h), mpf(v))


ZERO = Level(0, 0, mpf(0))


def _norm(sign: int, h: int, v) -> Level:
    if sign == 0 or v == 0:
        return ZERO
    if v < 0:
        sign, v = -sign, -v
    while True:
        if v > EXP_LIFT:
            h, v = h + 1, ctx.ln(v)
        elif h >= 1 and v <= LIFT:
            h, v = h - 1, ctx.exp(v)
        else:
            return Level(sign, h, v)


def lv(x) -> Level:
    """Level from an int, float, or mpf."""
    x = mpf(x)
    if x == 0:
        return ZERO
    return _norm(1 if x > 0 else -1, 0, abs(x))


def to_mpf(a: Level):
    """Value as an mpf, or None when it overflows mpf's exponent range."""
    if a.is_zero:
        return mpf(0)
    if a.h == 0:
        return a.sign * a.v
    if a.h == 1 and a.v < mpf(2) ** 40:
        return a.sign * ctx.exp(a.v)
    return None


def cmp_abs(a: Level, b: Level) -> int:
    """Compare magnitudes: -1, 1, or 0 when indistinguishable at working precision."""
    if a.is_zero or b.is_zero:
        return (not a.is_zero) - (not b.is_zero)
    if a.h != b.h:
        return 1 if a.h > b.h else -1
    d = a.v - b.v
    if abs(d) <= REL_TOL * max(a.v, b.v):
        return 0
    return 1 if d > 0 else -1


def cmp(a: Level, b: Level) -> int:
    if a.sign != b.sign:
        return 1 if a.sign > b.sign else -1
    if a.sign == 0:
        return 0
    return a.sign * cmp_abs(a, b)


def log_abs(a: Level) -> Level:
    if a.is_zero:
        raise Undecidable("logarithm of zero")
    if a.h >= 1:
        return _norm(1, a.h - 1, a.v)
    return lv(ctx.ln(a.v))


def exp(a: Level) -> Level:
    if a.is_zero:
        return lv(1)
    if a.sign > 0:
        if a.h == 0 and a.v <= LIFT:
            return lv(ctx.exp(a.v))
        return _norm(1, a.h + 1, a.v)
    if a.h == 0 and a.v < mpf(2) ** 40:
        return lv(ctx.exp(-a.v))
    raise Undecidable("exp of a huge negative number underflows Level; use Ext")


def add(a: Level, b: Level) -> Level:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if a.h == 0 and b.h == 0:
        return lv(a.sign * a.v + b.sign * b.v)
    c = cmp_abs(a, b)
    if c == 0:
        if a.sign != b.sign:
            raise Undecidable("cancellation between indistinguishable magnitudes")
        return scale(a, 2)
    big, small = (a, b) if c > 0 else (b, a)
    d = add(log_abs(small), -log_abs(big))
    if d.h > 0 or cmp(d, lv(NEGLIGIBLE)) < 0:
        return big
    r = ctx.exp(to_mpf(d))
    f = 1 + r if big.sign == small.sign else 1 - r
    if f <= REL_TOL:
        raise Undecidable("catastrophic cancellation")
    mag = exp(add(log_abs(big), lv(ctx.ln(f))))
    return Level(big.sign, mag.h, mag.v)


def scale(a: Level, c) -> Level:
    """Multiply by a finite real scalar ``c``."""
    c = mpf(c)
    if a.is_zero or c == 0:
        return ZERO
    sign = a.sign * (1 if c > 0 else -1)
    if a.h == 0:
        return _norm(sign, 0, a.v * abs(c))
    mag = exp(add(log_abs(a), lv(ctx.ln(abs(c)))))
    return Level(sign, mag.h, mag.v)


class Ext:
    """A positive real stored through ``lam = ln x`` (a ``Level``)."""

    __slots__ = ("lam",)

    def __init__(self, lam: Level):
        self.lam = lam

    # constructors

    @classmethod
    def of(cls, x) -> "Ext":
        if isinstance(x, Ext):
            return x
        if isinstance(x, int):
            if x <= 0:
                raise ValueError("Ext holds positive values only")
            return cls(lv(ctx.ln(mpf(x))))
        x = mpf(x)
        if x <= 0:
            raise ValueError("Ext holds positive values only")
        return cls(lv(ctx.ln(x)))

    @classmethod
    def from_level(cls, a: Level) -> "Ext":
        if a.sign <= 0:
            raise ValueError("Ext holds positive values only")
        return cls(log_abs(a))

    @classmethod
    def exp_of(cls, a: Level) -> "Ext":
        """``e^a`` for any real Level ``a``."""
        return cls(a)

    # arithmetic

    def __mul__(self, other) -> "Ext":
        return Ext(add(self.lam, Ext.of(other).lam))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Ext":
        return Ext(add(self.lam, -Ext.of(other).lam))

    def __rtruediv__(self, other) -> "Ext":
        return Ext.of(other) / self

    def __pow__(self, c) -> "Ext":
        return Ext(scale(self.lam, c))

    def __add__(self, other) -> "Ext":
        other = Ext.of(other)
        c = cmp(self.lam, other.lam)
        big, small = (self, other) if c >= 0 else (other, self)
        d = add(small.lam, -big.lam) if c != 0 else ZERO
        if d.h > 0 or cmp(d, lv(NEGLIGIBLE)) < 0:
            return big
        return Ext(add(big.lam, lv(ctx.log1p(ctx.exp(to_mpf(d))))))

    __radd__ = __add__

    def __sub__(self, other) -> "Ext":
        other = Ext.of(other)
        c = cmp(self.lam, other.lam)
        if c <= 0:
            raise Undecidable("subtraction does not leave a resolvable positive value")
        d = add(other.lam, -self.lam)
        if d.h > 0 or cmp(d, lv(NEGLIGIBLE)) < 0:
            return self
        return Ext(add(self.lam, lv(ctx.log(-ctx.expm1(to_mpf(d))))))

    def ln(self) -> Level:
        """Natural log as a signed Level."""
        return self.lam

    def log(self) -> "Ext":
        """``ln x`` as an Ext; requires ``x > 1``."""
        if self.lam.sign <= 0:
            raise Undecidable("log of a value <= 1 is not a positive Ext")
        return Ext.from_level(self.lam)

    def exp(self) -> "Ext":
        if self.lam.sign < 0 and (self.lam.h > 0 or self.lam.v > mpf(2) ** 40):
            return Ext(lv(self.to_mpf_or_zero()))
        return Ext(exp(self.lam))

    # comparisons

    def cmp(self, other) -> int:
        a, b = self.lam, Ext.of(other).lam
        if a.h == 0 and b.h == 0:
            # A log difference is a relative difference of the values, so the
            # tolerance is absolute near log = 0 (values near 1).
            d = a.sign * a.v - b.sign * b.v
            if abs(d) <= REL_TOL * max(mpf(1), a.v, b.v):
                return 0
            return 1 if d > 0 else -1
        return cmp(a, b)

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    # conversions

    def to_mpf(self):
        m = to_mpf(self.lam)
        if m is None or (m > mpf(2) ** 40):
            return None
        return ctx.exp(m)

    def to_mpf_or_zero(self):
        if self.lam.sign < 0 and (self.lam.h > 0 or self.lam.v > mpf(2) ** 40):
            return mpf(0)
        m = self.to_mpf()
        if m is None:
            raise Undecidable("value exceeds mpf range")
        return m

    def __float__(self) -> float:
        m = to_mpf(self.lam)
        if m is None:
            return math.inf if self.lam.sign > 0 else 0.0
        if m > 710:
            return math.inf
        if m < -746:
            return 0.0
        return float(ctx.exp(m))

    @property
    def representable_int(self) -> bool:
        return self.cmp(INT_EXACT_LIMIT) < 0

    def ceil_int(self) -> int:
        if not self.representable_int:
            raise Undecidable("value too large for an exact integer")
        return int(ctx.ceil(ctx.exp(to_mpf(self.lam)) - REL_TOL))

    def __repr__(self) -> str:
        return f"Ext({describe(self)})"

    def to_json(self) -> str:
        return "ext:" + str(self.lam)

    @classmethod
    def from_json(cls, s: str) -> "Ext":
        return cls(Level.parse(s[4:]))


def describe(x: Ext) -> str:
    """Human readable rendering, e.g. ``1.25e13`` or ``exp^3(14.2)``."""
    m = to_mpf(x.lam)
    if m is not None and abs(m) < 1e6:
        return ctx.nstr(ctx.exp(m), 8)
    lam = x.lam
    return ("1/" if lam.sign < 0 else "") + f"exp^{lam.h + 1}({ctx.nstr(lam.v, 8)})"


def ext_sum(terms) -> Ext:
    """Sum of positive Ext terms, adding from smallest to largest."""
    terms = sorted(terms, key=_sort_key)
    if not terms:
        raise ValueError("empty sum")
    acc = terms[0]
    for t in terms[1:]:
        acc = acc + t
    return acc


def _sort_key(x: Ext):
    lam = x.lam
    if lam.is_zero:
        return (0, 0, 0)
    return (lam.sign, lam.sign * lam.h, float(lam.sign * ctx.ln(lam.v)) if lam.v > 0 else 0.0)


def number_json(x):
    """JSON encoding for ints, floats, and Ext values."""
    if isinstance(x, Ext):
        return x.to_json()
    return x


def number_from_json(x):
    if isinstance(x, str) and x.startswith("ext:"):
        return Ext.from_json(x)
    return x
