"""Recursive design of the checkpoint sequences behind the lower-bound constructions.

The design works with the normalized rate ``r(n) = R(n) / R(1)`` so that
``r(n_1) = 1`` at ``n_1 = 1``. Each later sample size is the least integer
``n > n_{t-1}`` with

    r(n) <= min(r(n_{t-1}) / 2, 1 / (2 n_{t-1})).

Halving keeps ``r(n_t) <= 2^(1-t)`` so that ``C = 1 / sum_t r(n_t)`` lies in
``[1/2, 1]``, and the second term makes every tail of masses beyond a
checkpoint at most ``1 / n_t``. Beyond the 62-bit range ``n_t`` is the real
solution of ``r(n) = y``. Once ``ln n_{t-1}`` itself exceeds ``2^100`` the
target tightens to ``exp(-n_{t-1})`` so that every inequality is separated by
a whole exponential level and stays decidable in ``extnum``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import HorizonInfeasible, InvalidParams, RateTooFast, Undecidable
from .extnum import INT_EXACT_LIMIT, REL_TOL, Ext, ctx, describe, ext_sum, exp, lv, mpf
from .extnum import number_from_json, number_json
from .rates import RateFunction


class DesignMode(str, enum.Enum):
    ELUDER = "EluderLower"
    VC_ELUDER = "VCEluderLower"


@dataclass(frozen=True)
class Check:
    name: str
    t: int | None
    lhs: str
    rhs: str
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "t": self.t, "lhs": self.lhs, "rhs": self.rhs,
                "passed": self.passed, "note": self.note}


@dataclass(frozen=True)
class SequenceDesign:
    """Checkpoint sequences ``n_t, k_t, p_{k_t}, eps_{k_t}`` and the constant ``C``.

    Values that fit are plain ints; the rest are ``Ext``. ``p[t-1]`` is the
    mass at block/point index ``k[t-1]``; every other index carries mass 0.
    """

    rate: RateFunction
    mode: DesignMode
    t_max: int
    n: tuple
    k: tuple
    r: tuple
    p: tuple
    eps: tuple
    C: Ext
    checks: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c for c in self.checks if not c.passed]

    def tail(self, t: int) -> Ext | None:
        """Mass at indices beyond ``k_t`` (None when it is exactly zero)."""
        rest = self.p[t:]
        return ext_sum(rest) if rest else None

    def to_dict(self) -> dict:
        return {
            "rate": self.rate.to_dict(),
            "mode": self.mode.value,
            "t_max": self.t_max,
            "n": [_num_json(v) for v in self.n],
            "k": [_num_json(v) for v in self.k],
            "r": [v.to_json() for v in self.r],
            "p": [v.to_json() for v in self.p],
            "eps": [v.to_json() for v in self.eps],
            "C": self.C.to_json(),
            "approx": {
                "n": [_show(v) for v in self.n],
                "k": [_show(v) for v in self.k],
                "p": [describe(v) for v in self.p],
                "eps": [describe(v) for v in self.eps],
                "C": float(self.C),
            },
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict, reverify: bool = True) -> "SequenceDesign":
        design = cls(
            rate=RateFunction.from_spec(d["rate"]),
            mode=DesignMode(d["mode"]),
            t_max=int(d["t_max"]),
            n=tuple(_num_load(v) for v in d["n"]),
            k=tuple(_num_load(v) for v in d["k"]),
            r=tuple(Ext.from_json(v) for v in d["r"]),
            p=tuple(Ext.from_json(v) for v in d["p"]),
            eps=tuple(Ext.from_json(v) for v in d["eps"]),
            C=Ext.from_json(d["C"]),
        )
        checks = verify_design(design) if reverify else tuple(Check(**c) for c in d["checks"])
        return _with_checks(design, checks)


def _num_json(v):
    return v if isinstance(v, int) else number_json(v)


def _num_load(v):
    return int(v) if isinstance(v, int) else number_from_json(v)


def _show(v) -> str:
    return str(v) if isinstance(v, int) else describe(v)


def _with_checks(d: SequenceDesign, checks) -> SequenceDesign:
    return SequenceDesign(d.rate, d.mode, d.t_max, d.n, d.k, d.r, d.p, d.eps, d.C, tuple(checks))


def _norm_rate(rate: RateFunction, n, scale: Ext) -> Ext:
    return rate.ext(n) / scale


def _least_int(rate, scale, y: Ext, lower: int):
    """Least integer ``n >= lower`` with ``r(n) <= y``, or None outside 62-bit range."""
    cand = rate.inverse(y * scale)
    start = lower if cand is None else max(lower, _ceil_or_none(cand))
    if start is None or start >= INT_EXACT_LIMIT:
        return None

    def ok(m):
        return _norm_rate(rate, m, scale).cmp(y) <= 0 or _rel_close(_norm_rate(rate, m, scale), y)

    n = start
    while not ok(n):
        n += 1
        if n >= INT_EXACT_LIMIT:
            return None
    while n - 1 >= lower and ok(n - 1):
        n -= 1
    return n


def _ceil_or_none(x: Ext):
    if not x.representable_int:
        return INT_EXACT_LIMIT
    return x.ceil_int()


def _rel_close(a: Ext, b: Ext) -> bool:
    return a.cmp(b) == 0


def _log_resolvable(n) -> bool:
    """True while ``ln n`` is small enough that O(1) differences of logs are resolvable."""
    if isinstance(n, int):
        return True
    lam = n.lam
    return lam.h == 0 and lam.v < mpf(2) ** 100


def _as_level(n):
    return lv(n) if isinstance(n, int) else exp(n.lam)


def sequence_design(rate, t_max: int, mode=DesignMode.ELUDER) -> SequenceDesign:
    """Build and verify the checkpoint sequences for a target rate.

    Args:
        rate: a ``RateFunction`` or registry spec such as ``"power(1/3)"``.
        t_max: number of checkpoints (>= 1).
        mode: ``EluderLower`` (k_t = t) or ``VCEluderLower`` (k_t large enough
            that ``n_t p_{k_t} <= k_t``).

    Returns:
        A ``SequenceDesign`` whose ``checks`` list every verified condition.

    Raises:
        RateTooFast: when ``n_t r(n_t) < 1`` at some checkpoint, i.e. the rate
            decays faster than ``1/n`` on the probed range.
        HorizonInfeasible: when extended-range arithmetic cannot resolve a step.
    """
    rate = RateFunction.from_spec(rate)
    mode = DesignMode(mode)
    if t_max < 1:
        raise InvalidParams("t_max must be >= 1", t_max=t_max)
    scale = rate.ext(1)
    n_list = [1]
    r_list = [_norm_rate(rate, 1, scale)]
    try:
        for t in range(2, t_max + 1):
            prev = n_list[-1]
            y = r_list[-1] / 2
            half_inv = Ext.of(1) / (Ext.of(prev) * 2)
            if half_inv < y:
                y = half_inv
            n_t = _least_int(rate, scale, y, prev + 1) if isinstance(prev, int) else None
            if n_t is None and _log_resolvable(prev):
                n_t = rate.inverse(y * scale)
            elif n_t is None:
                lvl = Ext.exp_of(-_as_level(prev))
                if lvl < y:
                    y = lvl
                n_t = rate.inverse(y * scale)
                if n_t is None or n_t.cmp(prev if isinstance(prev, Ext) else Ext.of(prev)) <= 0:
                    raise HorizonInfeasible("rate inverse did not advance the sample size", t=t)
            n_list.append(n_t)
            r_list.append(_norm_rate(rate, n_t, scale))
    except Undecidable as exc:
        raise HorizonInfeasible(f"sequence design unresolved at t={len(n_list) + 1}: {exc}") from exc

    for t, (n_t, r_t) in enumerate(zip(n_list, r_list), start=1):
        prod = Ext.of(n_t) * r_t
        if prod.cmp(1) < 0:
            raise RateTooFast("rate decays faster than 1/n at a checkpoint",
                              t=t, n=_show(n_t), n_times_r=describe(prod))

    C = Ext.of(1) / ext_sum(r_list)
    p_list = [C * r for r in r_list]
    eps_list = [(Ext.of(8) * n) ** mpf(-0.5) for n in n_list]
    if mode is DesignMode.ELUDER:
        k_list = list(range(1, t_max + 1))
    else:
        k_list = []
        for n_t, p_t in zip(n_list, p_list):
            prev_k = k_list[-1] if k_list else 0
            if isinstance(n_t, int):
                need = int(ctx.ceil(mpf(n_t) * p_t.to_mpf() * (1 - REL_TOL)))
                k_list.append(max(prev_k + 1, need))
            else:
                k_list.append(Ext.exp_of(_as_level(n_t)))
        eps_list = [Ext.of(mpf(1) / 4) for _ in n_list]
    design = SequenceDesign(rate, mode, t_max, tuple(n_list), tuple(k_list), tuple(r_list),
                            tuple(p_list), tuple(eps_list), C)
    return _with_checks(design, verify_design(design))


def verify_design(d: SequenceDesign) -> tuple:
    """Re-check every applicable condition from the stored numbers."""
    checks = []

    def add(name, t, lhs, rhs, relation, note=""):
        try:
            if lhs is None:
                passed, ls = True, "0"
            else:
                c = Ext.of(lhs).cmp(rhs)
                passed = {"<=": c <= 0, ">=": c >= 0, "<": c < 0, ">": c > 0, "==": c == 0}[relation]
                ls = describe(Ext.of(lhs))
            checks.append(Check(name, t, ls, f"{relation} {describe(Ext.of(rhs))}", bool(passed), note))
        except Undecidable as exc:
            checks.append(Check(name, t, "?", relation, False, f"undecidable: {exc}"))

    scale = d.rate.ext(1)
    T = d.t_max
    add("C >= 1/2", None, d.C, Ext.of(mpf(1) / 2), ">=")
    add("C <= 1", None, d.C, Ext.of(1), "<=")
    add("total mass <= 1", None, ext_sum(d.p), Ext.of(1), "<=")
    if len(d.n) != T or len(d.p) != T or len(d.k) != T:
        checks.append(Check("lengths match horizon", None, str(len(d.n)), f"== {T}", False))
    for t in range(1, T + 1):
        n_t, p_t, k_t = d.n[t - 1], d.p[t - 1], d.k[t - 1]
        r_t = _norm_rate(d.rate, n_t, scale)
        add("p_{k_t} = C R(n_t)", t, p_t, d.C * r_t, "==")
        add("envelope R(n_t) <= 2^(1-t)", t, r_t, Ext.of(mpf(2) ** (1 - t)), "<=")
        add("n_t R(n_t) >= 1", t, Ext.of(n_t) * r_t, Ext.of(1), ">=")
        tail = d.tail(t)
        add("tail mass beyond k_t <= 1/n_t", t, tail, Ext.of(1) / Ext.of(n_t), "<=")
        if t < T:
            add("n increasing", t, Ext.of(d.n[t]), Ext.of(n_t), ">")
            add("p decreasing", t, d.p[t], p_t, "<")
            add("k increasing", t, Ext.of(d.k[t]), Ext.of(k_t), ">")
        if d.mode is DesignMode.ELUDER:
            add("eps_{k_t} = 1/sqrt(8 n_t)", t, d.eps[t - 1], (Ext.of(8) * n_t) ** mpf(-0.5), "==")
            rest = [d.p[s] / Ext.of(d.n[s]) ** mpf(0.5) for s in range(t, T)]
            add("sum_{j>t} p_j/sqrt(n_j) <= p_t/sqrt(n_t)", t, ext_sum(rest) if rest else None,
                p_t / Ext.of(n_t) ** mpf(0.5), "<=")
            rest = [d.p[s] * d.eps[s] for s in range(t, T)]
            add("sum_{j>t} p_j eps_j <= p_t eps_t", t, ext_sum(rest) if rest else None,
                p_t * d.eps[t - 1], "<=")
        else:
            add("eps_k = 1/4", t, d.eps[t - 1], Ext.of(mpf(1) / 4), "==")
            ratio = Ext.of(k_t) / Ext.of(n_t)
            add("n_t p_{k_t} <= k_t", t, p_t, ratio, "<=")
            rest = [d.p[s] * d.eps[s] for s in range(t, T)]
            add("sum_{j>t} p_{k_j} eps <= p_{k_t} eps", t, ext_sum(rest) if rest else None,
                p_t * d.eps[t - 1], "<=")
    return tuple(checks)


def checkpoint_tail_factor(d: SequenceDesign, t: int) -> Ext:
    """``(1 - sum_{k>k_t} p_k)^{n_t}`` as an Ext."""
    tail = d.tail(t)
    if tail is None:
        return Ext.of(1)
    n_t = d.n[t - 1]
    x = Ext.of(n_t) * tail
    if x.cmp(Ext.of(mpf(2) ** -200)) < 0:
        return Ext.of(1)
    tm = tail.to_mpf()
    if tm is None or not isinstance(n_t, int):
        raise Undecidable("tail factor needs representable n_t and tail")
    return Ext.of(ctx.exp(mpf(n_t) * ctx.log1p(-tm)))
