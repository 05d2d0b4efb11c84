"""Registry of target rate functions R(n) with extended-range evaluation."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidParams
from .extnum import Ext, ctx, mpf

TAGS = ("inverse_log", "power", "inverse_loglog")

_E = mpf(ctx.e)
_EE = ctx.exp(_E)


@dataclass(frozen=True)
class RateFunction:
    """A decreasing rate ``R(n) -> 0`` picked from a small registry.

    ``inverse_log``: ``c / ln(n + e)``; ``power``: ``c * n^(-alpha)``;
    ``inverse_loglog``: ``c / ln ln(n + e^e)``.
    """

    tag: str
    alpha: Fraction = Fraction(1, 3)
    c: Fraction = Fraction(1)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise InvalidParams(f"unknown rate {self.tag!r}; choose from {TAGS}")
        if self.alpha <= 0 or self.c <= 0:
            raise InvalidParams("rate parameters must be positive", alpha=str(self.alpha), c=str(self.c))

    def _c(self):
        return mpf(self.c.numerator) / self.c.denominator

    def _alpha(self):
        return mpf(self.alpha.numerator) / self.alpha.denominator

    def ext(self, n) -> Ext:
        """R(n) for ``n >= 1`` given as int, mpf or Ext."""
        n = Ext.of(n)
        if self.tag == "inverse_log":
            return Ext.of(self._c()) / (n + Ext.of(_E)).log()
        if self.tag == "power":
            return Ext.of(self._c()) * n ** (-self._alpha())
        return Ext.of(self._c()) / (n + Ext.of(_EE)).log().log()

    def value(self, n):
        """R(n) as an mpf (zero when it underflows)."""
        return self.ext(n).to_mpf_or_zero()

    def __call__(self, n) -> float:
        return float(self.ext(n))

    def inverse(self, y: Ext):
        """Least real ``n >= 0`` with ``R(n) <= y``; None when every n >= 0 qualifies."""
        y = Ext.of(y)
        ratio = Ext.of(self._c()) / y
        if self.tag == "power":
            return ratio ** (1 / self._alpha())
        base = Ext.of(_E) if self.tag == "inverse_log" else Ext.of(_EE)
        t = ratio.exp() if self.tag == "inverse_log" else ratio.exp().exp()
        if t.cmp(base) <= 0:
            return None
        return t - base

    def label(self) -> str:
        if self.tag == "power":
            return f"power({self.alpha})"
        return self.tag if self.c == 1 else f"{self.tag}(c={self.c})"

    def to_dict(self) -> dict:
        d = {"tag": self.tag, "c": str(self.c)}
        if self.tag == "power":
            d["alpha"] = str(self.alpha)
        return d

    @classmethod
    def from_spec(cls, spec) -> "RateFunction":
        """Accept ``"inverse_log"``, ``"power(1/3)"`` or a dict with ``tag``."""
        if isinstance(spec, RateFunction):
            return spec
        if isinstance(spec, str):
            m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*([^)]*)\s*\))?\s*", spec)
            if not m:
                raise InvalidParams(f"cannot parse rate {spec!r}")
            tag, arg = m.group(1), m.group(2)
            if tag == "power":
                if not arg:
                    raise InvalidParams("power rate needs an exponent, e.g. power(1/3)")
                return cls("power", alpha=_frac(arg))
            if arg:
                return cls(tag, c=_frac(arg.split("=")[-1]))
            return cls(tag)
        if isinstance(spec, dict):
            tag = spec.get("tag")
            kw = {}
            if "alpha" in spec:
                kw["alpha"] = _frac(spec["alpha"])
            if "c" in spec:
                kw["c"] = _frac(spec["c"])
            return cls(tag, **kw)
        raise InvalidParams(f"cannot interpret rate spec {spec!r}")


def _frac(v) -> Fraction:
    try:
        return Fraction(str(v).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParams(f"bad rational parameter {v!r}") from exc


def inverse_log(c=1) -> RateFunction:
    return RateFunction("inverse_log", c=_frac(c))


def power(alpha) -> RateFunction:
    return RateFunction("power", alpha=_frac(alpha))


def inverse_loglog(c=1) -> RateFunction:
    return RateFunction("inverse_loglog", c=_frac(c))
