"""Discrete labeled distributions, error evaluation, condition checkers and the
adversarial lower-bound constructions."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .concept_class import (ClassKind, ConceptClass, Dataset, Hypothesis, label_matrix,
                            make_builtin)
from .design import Check, DesignMode, SequenceDesign, checkpoint_tail_factor, sequence_design
from .errors import (ConstructionError, InvalidParams, SequenceTooShort, TailNotClosedForm,
                     Undecidable)
from .extnum import Ext, describe, mpf

log = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 4096
_TABLE_TAIL = 2.0 ** -60
BALL_REL_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class LabeledDistribution:
    """A distribution on (instance, label) pairs with a discrete marginal.

    Finite distributions store the support and its masses; enumerable ones use
    vectorized mass/eta functions over 0, 1, 2, ... together with ``tail_fn(T)``,
    a certified bound on the mass of instances ``>= T``. Optional metadata gives
    closed-form errors or excesses for hypotheses of ``meta_kind`` classes.
    """

    name: str
    support: Optional[tuple] = None
    mass_table: Optional[tuple] = None
    eta_table: Optional[tuple] = None
    mass_fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    eta_fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    tail_fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    off_support_eta: Optional[Callable] = field(default=None, compare=False, repr=False)
    meta_kind: Optional[ClassKind] = None
    error_of: Optional[Callable] = field(default=None, compare=False, repr=False)
    excess_of: Optional[Callable] = field(default=None, compare=False, repr=False)
    infimum: Optional[float] = None
    params: tuple = ()

    @property
    def is_finite(self) -> bool:
        return self.support is not None

    def support_points(self, truncation: int = DEFAULT_TRUNCATION) -> np.ndarray:
        if self.is_finite:
            return np.asarray(self.support, dtype=np.int64)
        return np.arange(truncation, dtype=np.int64)

    def masses(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.is_finite:
            sup = np.asarray(self.support, dtype=np.int64)
            idx = np.clip(np.searchsorted(sup, xs), 0, len(sup) - 1)
            hit = sup[idx] == xs
            return np.where(hit, np.asarray(self.mass_table, dtype=float)[idx], 0.0)
        return np.asarray(self.mass_fn(xs), dtype=float)

    def eta(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.is_finite:
            sup = np.asarray(self.support, dtype=np.int64)
            idx = np.clip(np.searchsorted(sup, xs), 0, len(sup) - 1)
            hit = sup[idx] == xs
            off = (np.asarray(self.off_support_eta(xs), dtype=float) if self.off_support_eta
                   else np.zeros(xs.shape))
            return np.where(hit, np.asarray(self.eta_table, dtype=float)[idx], off)
        return np.asarray(self.eta_fn(xs), dtype=float)

    def tail_mass(self, truncation: int = DEFAULT_TRUNCATION) -> float:
        if self.is_finite:
            return 0.0
        if self.tail_fn is None:
            raise TailNotClosedForm("marginal has no closed-form tail bound", dist=self.name)
        return float(self.tail_fn(truncation))

    def finite_arrays(self):
        """Positive-mass support points, their masses and eta values."""
        if not self.is_finite:
            raise TailNotClosedForm("finite arrays need a tabulated support", dist=self.name)
        pts = np.asarray(self.support, dtype=np.int64)
        m = np.asarray(self.mass_table, dtype=float)
        e = np.asarray(self.eta_table, dtype=float)
        keep = m > 0
        return pts[keep], m[keep], e[keep]

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "finite": self.is_finite}


def tabulated(points, masses, etas, name: str = "tabulated", off_support_eta=None,
              **meta) -> LabeledDistribution:
    """Finite-support distribution from explicit tables."""
    pts = np.asarray(points, dtype=np.int64)
    m = np.asarray(masses, dtype=float)
    e = np.asarray(etas, dtype=float)
    if not (pts.size == m.size == e.size) or pts.size == 0:
        raise InvalidParams("points, masses and etas must be non-empty and aligned")
    if np.any(pts < 0) or len(set(pts.tolist())) != pts.size:
        raise InvalidParams("support points must be distinct non-negative integers")
    if np.any(m < 0) or np.any(m > 1) or math.fsum(m) > 1 + 1e-12:
        raise InvalidParams("masses must lie in [0,1] and sum to at most 1")
    if np.any(e < 0) or np.any(e > 1):
        raise InvalidParams("eta values must lie in [0,1]")
    order = np.argsort(pts)
    return LabeledDistribution(name, tuple(pts[order].tolist()), tuple(m[order].tolist()),
                               tuple(e[order].tolist()), off_support_eta=off_support_eta, **meta)


def point_mass(x: int, eta: float) -> LabeledDistribution:
    return tabulated([x], [1.0], [eta], name=f"point_mass({x})", params=(("x", x), ("eta", eta)))


def geometric(q: float = 0.5, eta=0.3) -> LabeledDistribution:
    """Marginal ``P_X(x) = (1 - q) q^x`` with constant or callable eta."""
    if not 0 < q < 1:
        raise InvalidParams("q must lie in (0,1)", q=q)
    eta_fn = (lambda xs, c=float(eta): np.full(np.shape(xs), c)) if np.isscalar(eta) else eta
    return LabeledDistribution(
        f"geometric({q})",
        mass_fn=lambda xs: (1 - q) * np.power(q, np.asarray(xs, dtype=float)),
        eta_fn=eta_fn,
        tail_fn=lambda T: q ** T,
        params=(("q", q), ("eta", eta if np.isscalar(eta) else "callable")),
    )


def example5_distribution(eps: float = 0.25, eta0: Optional[float] = None) -> LabeledDistribution:
    """Marginal 1/2 at 0 and ``2^(-i-1)`` at ``i >= 1``; ``eta(i) = 1/2 - eps``.

    ``eta(0)`` is fixed by requiring ``P(y=1 | x=0) = P(y=1 | x>=1)``, which
    gives ``1/2 - 2 sum_i P_X(i) eps = 1/2 - eps``. Both centers then have
    error exactly 1/2 and ``h_i`` has excess ``2 P_X(i) eps``. Another ``eta0``
    may be passed; the closed-form metadata is then dropped and errors are summed.
    """
    if not 0 < eps <= 0.5:
        raise InvalidParams("eps must lie in (0, 1/2]", eps=eps)
    balanced = eta0 is None or eta0 == 0.5 - eps
    eta0 = 0.5 - eps if eta0 is None else float(eta0)
    if not 0 <= eta0 <= 1:
        raise InvalidParams("eta0 must lie in [0,1]", eta0=eta0)

    def mass(xs):
        xs = np.asarray(xs, dtype=float)
        return np.where(xs == 0, 0.5, np.power(2.0, -xs - 1))

    def eta(xs):
        xs = np.asarray(xs)
        return np.where(xs == 0, eta0, 0.5 - eps)

    def excess_of(h: Hypothesis):
        if h.name in ("h*_1", "h*_2"):
            return 0.0
        if h.name.startswith("h_") and h.id >= 2:
            return 2.0 * 2.0 ** (-(h.id - 1) - 1) * eps
        return None

    def error_of(h: Hypothesis):
        ex = excess_of(h)
        return None if ex is None else 0.5 + ex

    return LabeledDistribution(
        "example5", mass_fn=mass, eta_fn=eta, tail_fn=lambda T: 2.0 ** -T if T >= 1 else 1.0,
        meta_kind=ClassKind.EXAMPLE5 if balanced else None, error_of=error_of if balanced else None,
        excess_of=excess_of if balanced else None, infimum=0.5 if balanced else None,
        params=(("eps", eps), ("eta0", eta0)),
    )


def finite_gap_fixture():
    """Three hypotheses on a 2-point support with unique minimizer and gap 0.2.

    Returns:
        ``(cls, dist)``; hypothesis 0 is the minimizer with error 0.3.
    """
    cls = make_builtin(ClassKind.FINITE, table=[[0, 1], [1, 1], [0, 0]],
                       names=["h*", "ones", "zeros"])
    dist = tabulated([0, 1], [0.5, 0.5], [0.3, 0.7], name="finite_gap")
    return cls, dist


def thresholds_benign_fixture():
    """Thresholds with a 4-point uniform marginal; the best threshold is t=2 (gap 0.05)."""
    cls = make_builtin(ClassKind.THRESHOLDS)
    dist = tabulated([0, 1, 2, 3], [0.25] * 4, [0.2, 0.4, 0.6, 0.8], name="thresholds_benign")
    return cls, dist


BUILTIN_DISTRIBUTIONS = {
    "example5": example5_distribution,
    "geometric": geometric,
    "point_mass": point_mass,
    "finite_gap": lambda: finite_gap_fixture()[1],
    "thresholds_benign": lambda: thresholds_benign_fixture()[1],
}


def distribution_from_spec(spec: dict) -> LabeledDistribution:
    spec = dict(spec)
    name = spec.pop("builtin", None) or spec.pop("name", None)
    if name == "tabulated" or (name is None and "points" in spec):
        return tabulated(spec["points"], spec["masses"], spec["etas"])
    if name not in BUILTIN_DISTRIBUTIONS:
        raise InvalidParams(f"unknown distribution {name!r}", known=sorted(BUILTIN_DISTRIBUTIONS))
    return BUILTIN_DISTRIBUTIONS[name](**spec)


# Sampling.

def _cdf_table(dist: LabeledDistribution, upto: int):
    xs = dist.support_points(upto)
    return xs, np.cumsum(dist.masses(xs))


def sample_points(dist: LabeledDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of ``n`` instances."""
    if n < 0:
        raise InvalidParams("n must be >= 0", n=n)
    u = rng.random(n)
    if dist.is_finite:
        xs, cdf = _cdf_table(dist, 0)
        idx = np.searchsorted(cdf, u, side="right")
        last = int(np.flatnonzero(dist.masses(xs) > 0)[-1])
        return xs[np.minimum(idx, last)]
    if dist.tail_fn is None:
        raise TailNotClosedForm("sampling an infinite marginal needs a closed-form tail", dist=dist.name)
    T = 64
    while dist.tail_mass(T) > _TABLE_TAIL and T < (1 << 22):
        T *= 2
    xs, cdf = _cdf_table(dist, T)
    idx = np.searchsorted(cdf, u, side="right")
    over = idx >= T
    while over.any():
        T *= 2
        xs, cdf = _cdf_table(dist, T)
        idx[over] = np.searchsorted(cdf, u[over], side="right")
        over = idx >= T
        if T > (1 << 26):
            raise TailNotClosedForm("inverse CDF did not converge", dist=dist.name)
    return xs[idx]


def sample(dist: LabeledDistribution, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. labeled examples; identical ``(dist, n, seed)`` gives identical data."""
    rng = np.random.default_rng(seed)
    xs = sample_points(dist, n, rng)
    ys = (rng.random(n) < dist.eta(xs)).astype(np.uint8)
    return Dataset.from_arrays(xs, ys, provenance=(seed, dist.name))


# Error evaluation.

def _error_parts(h: Hypothesis, dist: LabeledDistribution, truncation: int):
    xs = dist.support_points(truncation)
    p = dist.masses(xs)
    eta = dist.eta(xs)
    lab = h.labels(xs)
    terms = p * np.where(lab == 1, 1.0 - eta, eta)
    return math.fsum(terms), dist.tail_mass(truncation)


def _meta_applies(dist, h):
    return dist.error_of is not None and dist.error_of(h) is not None


def true_error(h: Hypothesis, dist: LabeledDistribution, truncation: int = DEFAULT_TRUNCATION) -> Interval:
    """Error of ``h`` as an interval of width at most the omitted tail mass."""
    if _meta_applies(dist, h):
        v = float(dist.error_of(h))
        return Interval(v, v)
    s, tail = _error_parts(h, dist, truncation)
    return Interval(s, s + tail)


def disagreement_mass(h: Hypothesis, g: Hypothesis, dist: LabeledDistribution,
                      truncation: int = DEFAULT_TRUNCATION) -> tuple:
    """``P_X(h != g)`` as ``(lo, hi)``."""
    xs = dist.support_points(truncation)
    p = dist.masses(xs)
    s = math.fsum(p[h.labels(xs) != g.labels(xs)])
    return s, s + dist.tail_mass(truncation)


def bayes_classifier(dist: LabeledDistribution) -> Hypothesis:
    """Pointwise ``1{eta(x) >= 1/2}``."""
    def vec(xs):
        return (dist.eta(np.asarray(xs, dtype=np.int64)) >= 0.5).astype(np.uint8)

    return Hypothesis(-10, lambda x: int(vec(np.array([x]))[0]), f"bayes[{dist.name}]", vec)


@dataclass(frozen=True)
class ClassEvaluation:
    """Errors and excesses of a class prefix under one distribution."""

    ids: tuple
    errors: tuple
    excess: tuple
    infimum: Interval
    labels: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    tail: float = 0.0

    def excess_by_id(self) -> dict:
        return dict(zip(self.ids, self.excess))


def evaluate_class(cls: ConceptClass, dist: LabeledDistribution, depth: int,
                   truncation: int = DEFAULT_TRUNCATION, prefix: Optional[Sequence] = None) -> ClassEvaluation:
    """Evaluate every hypothesis of the depth-``depth`` prefix.

    ``cls`` may be None when an explicit ``prefix`` is given; metadata then
    applies only if it covers every hypothesis. Excess is computed as ``D(h) - min_g D(g)`` with
    ``D(h) = sum_x P_X(x) |2 eta(x) - 1| 1{h(x) != bayes(x)}``, which avoids
    cancellation between two errors close to 1/2.
    """
    if depth < 1:
        raise InvalidParams("depth must be >= 1", depth=depth)
    prefix = list(prefix) if prefix is not None else cls.enumerate(depth)
    xs = dist.support_points(truncation)
    p = dist.masses(xs)
    eta = dist.eta(xs)
    keep = p > 0
    xs, p, eta = xs[keep], p[keep], eta[keep]
    tail = dist.tail_mass(truncation)
    L = label_matrix(prefix, xs)
    bayes = (eta >= 0.5).astype(np.uint8)
    w = p * np.abs(2.0 * eta - 1.0)
    bayes_err = math.fsum(p * np.where(bayes == 1, 1.0 - eta, eta))
    D = np.array([math.fsum(w[row != bayes]) for row in L])
    if cls is None:
        use_meta = dist.excess_of is not None and all(dist.excess_of(h) is not None for h in prefix)
    else:
        use_meta = dist.meta_kind is not None and dist.meta_kind == cls.kind
    errors, excess = [], []
    dmin_lo = float(D.min())
    for h, d in zip(prefix, D):
        if use_meta and dist.excess_of(h) is not None:
            ex = float(dist.excess_of(h))
            excess.append(Interval(ex, ex))
            er = float(dist.error_of(h))
            errors.append(Interval(er, er))
            continue
        errors.append(Interval(bayes_err + d, bayes_err + d + tail))
        excess.append(Interval(max(0.0, d - dmin_lo - tail), d + tail - dmin_lo))
    if use_meta and dist.infimum is not None:
        inf = Interval(dist.infimum, dist.infimum)
    else:
        inf = Interval(min(e.lo for e in errors), min(e.hi for e in errors))
    return ClassEvaluation(tuple(h.id for h in prefix), tuple(errors), tuple(excess), inf, L, xs, p, tail)


def excess_inf(cls: ConceptClass, dist: LabeledDistribution, depth: int,
               truncation: int = DEFAULT_TRUNCATION) -> Interval:
    """Interval for the class infimum of the error (exact when metadata gives it)."""
    return evaluate_class(cls, dist, depth, truncation).infimum


@dataclass(frozen=True)
class CenteredReport:
    error_match: bool
    disagreement_inf_estimate: float
    positive_disagreement_inf: float
    h_star_excess: Interval
    depth: int

    def to_dict(self) -> dict:
        return {"error_match": self.error_match,
                "disagreement_inf_estimate": self.disagreement_inf_estimate,
                "positive_disagreement_inf": self.positive_disagreement_inf,
                "h_star_excess": self.h_star_excess.to_dict(), "depth": self.depth}


def is_centered(dist: LabeledDistribution, cls: ConceptClass, h_star: Hypothesis, depth: int,
                tol: float = 1e-12, truncation: int = DEFAULT_TRUNCATION) -> CenteredReport:
    """Check ``er(h*) = inf er`` and report the depth-``depth`` disagreement infimum.

    The infimum of ``P_X(h != h*)`` ranges over the prefix and includes ``h*``
    itself when it is enumerated; the infimum over hypotheses at positive
    distance is reported separately.
    """
    prefix = cls.enumerate(depth)
    ev = evaluate_class(cls, dist, depth, truncation, prefix=prefix + [h_star])
    hx = ev.excess[-1]
    match = hx.lo <= tol
    dists = [disagreement_mass(h, h_star, dist, truncation) for h in prefix]
    inf_all = min(hi for _, hi in dists) if dists else 1.0
    positive = [hi for lo, hi in dists if lo > 0]
    return CenteredReport(bool(match), float(inf_all), float(min(positive)) if positive else 1.0, hx, depth)


def condition1_gap(cls: ConceptClass, dist: LabeledDistribution, depth: int,
                   truncation: int = DEFAULT_TRUNCATION) -> float:
    """Smallest positive excess over the prefix; 1 when no competitor exists."""
    ev = evaluate_class(cls, dist, depth, truncation)
    positive = [e for e in ev.excess if e.lo > 0]
    for hid, e in zip(ev.ids, ev.excess):
        if e.lo <= 0 < e.hi:
            log.warning("hypothesis %s has an excess interval straddling 0: %s", hid, e)
    return min(e.mid for e in positive) if positive else 1.0


def epsilon_ball(cls: ConceptClass, dist: LabeledDistribution, eps: float, depth: int,
                 truncation: int = DEFAULT_TRUNCATION) -> list:
    """Ids whose excess interval lies in ``(0, eps]`` (relative slack 1e-12 at eps)."""
    if eps <= 0:
        raise InvalidParams("eps must be positive", eps=eps)
    ev = evaluate_class(cls, dist, depth, truncation)
    out = []
    top = eps * (1 + BALL_REL_TOL)
    for hid, e in zip(ev.ids, ev.excess):
        if e.lo > 0 and e.hi <= top:
            out.append(hid)
        elif (e.lo <= 0 < e.hi) or (e.lo <= top < e.hi):
            log.warning("borderline ball membership for %s: %s", hid, e)
    return out


class LocalizationTable:
    """Excesses and pairwise disagreement masses of a prefix, for fast
    evaluation of the localized variance ``sigma^2_eps``."""

    def __init__(self, cls: ConceptClass, dist: LabeledDistribution, depth: int,
                 truncation: int = DEFAULT_TRUNCATION):
        ev = evaluate_class(cls, dist, depth, truncation)
        self.ids = ev.ids
        self.excess_hi = np.array([e.hi for e in ev.excess])
        L = ev.labels
        self.distance = np.array([[math.fsum(ev.weights[L[i] != L[j]]) for j in range(len(L))]
                                  for i in range(len(L))]) + ev.tail
        np.fill_diagonal(self.distance, 0.0)

    def ball(self, eps: float) -> np.ndarray:
        return np.flatnonzero(self.excess_hi <= eps * (1 + BALL_REL_TOL))

    def sigma(self, eps: float, tau_grid=None) -> "SigmaReport":
        if tau_grid is None:
            tau_grid = [eps * 2.0 ** -j for j in range(11)]
        tau_grid = sorted(tau_grid, reverse=True)
        ball = self.ball(eps)
        if not ball.size:
            log.info("empty ball at eps=%g; sigma^2 = 0 by the empty-supremum convention", eps)
            return SigmaReport(0.0, tuple((t, None) for t in tau_grid), None, True, True, 0)
        per_tau = []
        for tau in tau_grid:
            inner = self.ball(tau)
            if not inner.size:
                per_tau.append((tau, None))
                continue
            vals = self.distance[np.ix_(ball, inner)].min(axis=1)
            per_tau.append((tau, float(vals.max())))
        filled = [(t, v) for t, v in per_tau if v is not None]
        empty_small = per_tau[-1][1] is None
        if empty_small:
            log.warning("H(tau) empty at the smallest tau; using the smallest tau with a nonempty ball")
        values = [v for _, v in filled]
        monotone = all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
        tau_used, value = filled[-1]
        return SigmaReport(value, tuple(per_tau), tau_used, empty_small, monotone, int(ball.size))


@dataclass(frozen=True)
class SigmaReport:
    value: float
    by_tau: tuple
    tau_used: Optional[float]
    empty_tau_ball: bool
    monotone: bool
    ball_size: int

    def __float__(self):
        return self.value


def sigma_sq_eps(cls: ConceptClass, dist: LabeledDistribution, eps: float, depth: int,
                 tau_grid=None, truncation: int = DEFAULT_TRUNCATION) -> SigmaReport:
    """Localized disagreement variance over the depth-``depth`` ball.

    Outer supremum over hypotheses with excess at most ``eps``; the inner limit
    ``tau -> 0`` is approximated by the smallest ``tau`` in the grid with a
    nonempty ball.
    """
    if eps <= 0:
        raise InvalidParams("eps must be positive", eps=eps)
    return LocalizationTable(cls, dist, depth, truncation).sigma(eps, tau_grid)


# Adversarial constructions.

@dataclass(frozen=True)
class Checkpoint:
    t: int
    n: object
    k: object
    predicted: Ext
    event_bound: Optional[Ext]
    tail: Optional[Ext]

    @property
    def n_int(self) -> Optional[int]:
        return self.n if isinstance(self.n, int) else None

    def to_dict(self) -> dict:
        return {"t": self.t, "n": _jnum(self.n), "k": _jnum(self.k),
                "predicted": float(self.predicted), "predicted_exact": self.predicted.to_json(),
                "event_bound": None if self.event_bound is None else float(self.event_bound),
                "tail": 0.0 if self.tail is None else float(self.tail)}


def _jnum(v):
    return v if isinstance(v, int) else describe(v)


@dataclass(frozen=True)
class AdversarialConstruction:
    dist: LabeledDistribution
    kind: DesignMode
    design: SequenceDesign
    sequence: object
    cls: ConceptClass
    checkpoints: tuple
    point_mass: tuple
    point_margin: tuple
    verification: tuple = ()

    @property
    def center(self) -> Hypothesis:
        return self.sequence.center

    @property
    def rate(self):
        return self.design.rate

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.verification)

    @property
    def support(self) -> np.ndarray:
        return np.asarray(self.dist.support, dtype=np.int64)

    def excess_closed_form(self, h: Hypothesis) -> float:
        """``er(h) - inf er``: the margin-weighted mass where ``h`` leaves the center."""
        xs, p, _ = self.dist.finite_arrays()
        marg = np.asarray([self.point_margin[int(np.searchsorted(self.support, x))] for x in xs])
        dis = h.labels(xs) != self.center.labels(xs)
        return math.fsum(2.0 * p[dis] * marg[dis])

    @property
    def required_prefix(self) -> int:
        """Prefix length holding every witness used up to the horizon."""
        if self.kind is DesignMode.ELUDER:
            ids = [s.witness for s in self.sequence.steps[:self.design.t_max]]
        else:
            ids = [w for k in self.design.k for w in self.sequence.certificates[k - 1].values()]
        ids.append(self.center.id)
        return max(ids) + 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "class": self.cls.describe(),
            "sequence": self.sequence.to_dict(),
            "design": self.design.to_dict(),
            "support": list(self.dist.support),
            "masses": list(self.dist.mass_table),
            "etas": list(self.dist.eta_table),
            "required_prefix": self.required_prefix,
            "checkpoints": [c.to_dict() for c in self.checkpoints],
            "verification": [c.to_dict() for c in self.verification],
            "passed": self.passed,
        }


def _construction_dist(name, pts, masses, margins, center):
    labels = center.labels(pts)
    etas = [0.5 + m if y == 1 else 0.5 - m for m, y in zip(margins, labels)]
    masses = np.asarray(masses, dtype=float)
    total = math.fsum(masses)
    if total > 1.0:
        masses = masses / total * (1 - 2.0 ** -52)
    ex_margin = dict(zip(np.asarray(pts).tolist(), margins))
    inf = math.fsum(m * (0.5 - ex_margin[x]) for x, m in zip(np.asarray(pts).tolist(), masses))
    return tabulated(pts, masses, etas, name=name,
                     off_support_eta=lambda xs: center.labels(xs).astype(float),
                     infimum=None, params=(("infimum", inf),))


def _construction_checks(con: AdversarialConstruction, depth: int) -> list:
    checks = list(con.design.checks)
    xs, p, eta = con.dist.finite_arrays()
    checks.append(Check("marginal mass <= 1", None, repr(math.fsum(con.dist.mass_table)), "<= 1",
                        math.fsum(con.dist.mass_table) <= 1.0))
    bayes = bayes_classifier(con.dist)
    same = bool(np.array_equal(bayes.labels(xs), con.center.labels(xs)))
    checks.append(Check("bayes classifier equals center on the support", None, str(same), "True", same))
    rep = is_centered(con.dist, con.cls, con.center, depth)
    checks.append(Check("centered: er(center) = inf er", None, repr(rep.h_star_excess.hi), "<= 1e-12",
                        rep.error_match))
    if con.kind is DesignMode.ELUDER:
        from .combinatorics import verify_eluder
        errs = verify_eluder(con.sequence, con.cls)
        checks.append(Check("eluder certificate", None, "; ".join(errs) or "ok", "ok", not errs))
        wit = [con.cls.hypothesis(s.witness) for s in con.sequence.steps[:con.design.t_max]]
        ex = [con.excess_closed_form(h) for h in wit]
        for t in range(1, len(ex)):
            checks.append(Check("witness excess non-increasing", t, repr(ex[t]), f"<= {ex[t - 1]!r}",
                                ex[t] <= ex[t - 1] * (1 + 1e-12)))
        for t, h in enumerate(wit, start=1):
            want = 2.0 * float(con.design.p[t - 1]) * float(con.design.eps[t - 1])
            checks.append(Check("witness excess >= 2 p eps", t, repr(ex[t - 1]), f">= {want!r}",
                                ex[t - 1] >= want * (1 - 1e-12)))
    else:
        from .combinatorics import verify_vc_eluder
        errs = verify_vc_eluder(con.sequence, con.cls)
        checks.append(Check("VC-eluder certificate", None, "; ".join(errs) or "ok", "ok", not errs))
        marg_ok = bool(np.allclose(np.abs(eta - 0.5), 0.25))
        checks.append(Check("eta margin 1/4 on every block point", None, str(marg_ok), "True", marg_ok))
    return checks


def build_eluder_adversarial(seq, R, t_max: int, cls: ConceptClass) -> AdversarialConstruction:
    """Distribution on the first ``t_max`` points of an eluder sequence.

    Point ``x_t`` gets mass ``p_t = C r(n_t)`` and ``P(y = y_t | x_t) = 1/2 +
    eps_t`` with ``eps_t = 1/sqrt(8 n_t)``. Checkpoint ``t`` predicts
    ``p_t / (5 sqrt(8 n_t)) (1 - sum_{k>t} p_k)^{n_t}`` for the expected excess.

    Raises:
        SequenceTooShort: fewer than ``t_max`` steps.
        ConstructionError: any invariant fails.
    """
    if len(seq.steps) < t_max:
        raise SequenceTooShort("eluder sequence cannot host the horizon", length=len(seq.steps), t_max=t_max)
    design = sequence_design(R, t_max, DesignMode.ELUDER)
    pts = [s.x for s in seq.steps[:t_max]]
    masses = [float(p) for p in design.p]
    margins = [float(e) for e in design.eps]
    dist = _construction_dist("eluder_adversarial", pts, masses, margins, seq.center)
    cps = []
    for t in range(1, t_max + 1):
        factor = checkpoint_tail_factor(design, t)
        n_t = design.n[t - 1]
        pred = design.p[t - 1] / (Ext.of(5) * (Ext.of(8) * Ext.of(n_t)) ** mpf(0.5)) * factor
        cps.append(Checkpoint(t, n_t, design.k[t - 1], pred, Ext.of(mpf(1) / 10) * factor, design.tail(t)))
    con = AdversarialConstruction(dist, DesignMode.ELUDER, design, seq, cls, tuple(cps),
                                  tuple(masses), tuple(margins))
    return _finish(con)


def build_vc_eluder_adversarial(seq, R, t_max: int, cls: ConceptClass) -> AdversarialConstruction:
    """Distribution spreading ``p_{k_t}`` uniformly over block ``k_t`` with margin 1/4.

    Checkpoint ``t`` predicts ``r(n_t) / 36`` for the expected excess.
    """
    design = sequence_design(R, t_max, DesignMode.VC_ELUDER)
    k_last = design.k[-1]
    if not isinstance(k_last, int) or len(seq.blocks) < k_last:
        raise SequenceTooShort("VC-eluder sequence cannot host block k_{t_max}",
                               blocks=len(seq.blocks), k_last=describe(Ext.of(k_last)))
    pts, masses = [], []
    for k_t, p_t in zip(design.k, design.p):
        block = seq.blocks[k_t - 1]
        pts.extend(block)
        masses.extend([float(p_t) / k_t] * k_t)
    margins = [0.25] * len(pts)
    dist = _construction_dist("vc_eluder_adversarial", pts, masses, margins, seq.center)
    cps = []
    for t in range(1, t_max + 1):
        cps.append(Checkpoint(t, design.n[t - 1], design.k[t - 1], design.r[t - 1] / Ext.of(36),
                              None, design.tail(t)))
    con = AdversarialConstruction(dist, DesignMode.VC_ELUDER, design, seq, cls, tuple(cps),
                                  tuple(masses), tuple(margins))
    return _finish(con)


def _sorted_by_support(con: AdversarialConstruction, values) -> tuple:
    order = np.argsort(np.asarray([x for x in _unsorted_points(con)]))
    return tuple(np.asarray(values)[order].tolist())


def _unsorted_points(con):
    if con.kind is DesignMode.ELUDER:
        return [s.x for s in con.sequence.steps[:con.design.t_max]]
    return [x for k in con.design.k for x in con.sequence.blocks[k - 1]]


def _finish(con: AdversarialConstruction) -> AdversarialConstruction:
    con = AdversarialConstruction(con.dist, con.kind, con.design, con.sequence, con.cls, con.checkpoints,
                                  _sorted_by_support(con, con.point_mass),
                                  _sorted_by_support(con, con.point_margin))
    try:
        checks = _construction_checks(con, max(con.required_prefix, 8))
    except Undecidable as exc:
        raise ConstructionError(f"construction could not be verified: {exc}") from exc
    con = AdversarialConstruction(con.dist, con.kind, con.design, con.sequence, con.cls, con.checkpoints,
                                  con.point_mass, con.point_margin, tuple(checks))
    failing = [c for c in checks if not c.passed]
    if failing:
        raise ConstructionError("construction invariants failed",
                                failing=[f"{c.name} (t={c.t}): {c.lhs} {c.rhs} {c.note}" for c in failing])
    return con


def construction_from_dict(d: dict) -> AdversarialConstruction:
    """Rebuild a construction from its dump and re-run every verification."""
    from .combinatorics import EluderSequence, EluderStep, VCEluderSequence
    from .concept_class import class_from_spec, resolve_hypothesis

    spec = dict(d["class"]["params"])
    spec["kind"] = d["class"]["kind"]
    cls = class_from_spec(spec)
    sq = d["sequence"]
    center = resolve_hypothesis(cls, sq["center"]["id"]) if sq["center"]["id"] >= 0 else \
        resolve_hypothesis(cls, sq["center"]["name"])
    design = SequenceDesign.from_dict(d["design"])
    if d["kind"] == DesignMode.ELUDER.value:
        seq = EluderSequence(tuple(EluderStep(s["x"], s["y"], s["witness"]) for s in sq["steps"]), center)
        return build_eluder_adversarial(seq, design.rate, design.t_max, cls)
    certs = tuple({tuple(int(ch) for ch in k): v for k, v in c.items()} for c in sq["certificates"])
    seq = VCEluderSequence(tuple(tuple(b) for b in sq["blocks"]), center, certs)
    return build_vc_eluder_adversarial(seq, design.rate, design.t_max, cls)
