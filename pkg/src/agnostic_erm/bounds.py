"""Closed-form concentration and anti-concentration calculators and the
localized fixed-point quantities used by the super-root analysis."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .concept_class import ConceptClass
from .design import DesignMode, SequenceDesign, sequence_design, verify_design  # noqa: F401
from .distributions import DEFAULT_TRUNCATION, LabeledDistribution, LocalizationTable
from .errors import BisectionFailure, DomainViolation

log = logging.getLogger(__name__)


def _require(cond: bool, msg: str, **details) -> None:
    if not cond:
        raise DomainViolation(msg, **details)


def hoeffding(n: int, t: float, a: float = 0.0, b: float = 1.0) -> float:
    """Two-sided Hoeffding bound ``2 exp(-2 n t^2 / (b - a)^2)`` clamped to [0, 1]."""
    _require(n >= 1, "n must be >= 1", n=n)
    _require(t > 0, "t must be positive", t=t)
    _require(b > a, "need b > a", a=a, b=b)
    return min(1.0, 2.0 * math.exp(-2.0 * n * t * t / (b - a) ** 2))


def mcdiarmid_deviation(n: int, c: float, delta: float) -> float:
    """Deviation ``c sqrt(n/2 ln(2/delta))`` for bounded differences ``c``."""
    _require(n >= 1, "n must be >= 1", n=n)
    _require(c > 0, "c must be positive", c=c)
    _require(0 < delta < 1, "delta must lie in (0,1)", delta=delta)
    return c * math.sqrt(n / 2.0 * math.log(2.0 / delta))


def slud_lower(n: int, eps: float) -> float:
    """Lower bound on ``P(Bin(n, 1/2 - eps) >= n/2)``:
    ``1/2 (1 - sqrt(1 - exp(-n eps^2 / (1 - eps^2))))``."""
    _require(n >= 1, "n must be >= 1", n=n)
    _require(0 <= eps < 1, "eps must lie in [0,1)", eps=eps)
    inner = -math.expm1(-n * eps * eps / (1.0 - eps * eps))
    return 0.5 * (1.0 - math.sqrt(inner))


def finite_class_bound(m: int, eps0: float, n: float) -> float:
    """Expected-excess bound ``m 2 exp(-n eps0^2 / 2)`` for a finite class with gap ``eps0``."""
    _require(m >= 1, "m must be >= 1", m=m)
    _require(eps0 > 0, "eps0 must be positive", eps0=eps0)
    _require(n >= 0, "n must be >= 0", n=n)
    return min(1.0, 2.0 * m * math.exp(-n * eps0 * eps0 / 2.0))


@dataclass(frozen=True)
class BoundParams:
    """Parameters shared by the localized bounds; universal constants default to 1."""

    n: int
    delta: float = 0.05
    d: int = 1
    sigma_sq: float = 1.0
    c0: float = 1.0
    c: float = 1.0
    c_tilde: float = 1.0

    def __post_init__(self):
        _require(self.n >= 1, "n must be >= 1", n=self.n)
        _require(0 < self.delta < 1, "delta must lie in (0,1)", delta=self.delta)
        _require(self.d >= 1, "d must be >= 1", d=self.d)
        _require(0 <= self.sigma_sq <= 1, "sigma_sq must lie in [0,1]", sigma_sq=self.sigma_sq)


def _log_term(sigma_sq: float, n: int, d: int) -> float:
    # log(1/sigma^2 wedge n/d); 1/0 is +inf so the minimum picks n/d.
    inv = math.inf if sigma_sq == 0 else 1.0 / sigma_sq
    return math.log(min(inv, n / d))


def uniform_bernstein(params: BoundParams) -> float:
    """Uniform Bernstein deviation for a pair with disagreement mass ``sigma_sq``:

    ``sqrt(s c0/n (d L + log(1/delta))) + c0/n (d L + log(1/delta))`` where
    ``L = log(1/s wedge n/d)``.
    """
    _require(0 < params.sigma_sq <= 1, "sigma_sq must lie in (0,1]", sigma_sq=params.sigma_sq)
    _require(params.n >= 2 * params.d, "need n >= 2d", n=params.n, d=params.d)
    inner = params.c0 / params.n * (params.d * _log_term(params.sigma_sq, params.n, params.d)
                                     + math.log(1.0 / params.delta))
    return math.sqrt(params.sigma_sq * inner) + inner


def b_eps(sigma_sq: float, n: int, d: int, c_tilde: float = 1.0) -> float:
    """``c~ sqrt(s d/n L) + c~ d/n L`` with ``L = log(1/s wedge n/d)``."""
    L = _log_term(sigma_sq, n, d)
    return c_tilde * math.sqrt(max(0.0, sigma_sq * d / n * L)) + c_tilde * d / n * L


@dataclass(frozen=True)
class LocalizedQuantities:
    epsilon: float
    ball_ids: tuple
    sigma_sq_eps: float
    B_eps: float
    eps_n: float
    phi_total: float
    d: int
    params: BoundParams

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ball_ids"] = list(self.ball_ids)
        return d


def localized_quantities(cls: ConceptClass, dist: LabeledDistribution, n: int,
                         params: Optional[BoundParams] = None, depth: int = 64,
                         truncation: int = DEFAULT_TRUNCATION, tau_grid=None,
                         vc_cap: int = 8, rel_tol: float = 1e-9) -> LocalizedQuantities:
    """Fixed point ``eps_n = inf{eps > 0 : B_eps <= 2 eps}`` by bisection on [1e-9, 1].

    ``sigma^2_eps`` is a step function of eps at finite depth, so the result
    is the crossing of the discretized curve. When ``params`` is omitted the
    VC dimension of the prefix is computed with cap ``vc_cap``.

    Raises:
        BisectionFailure: if ``B_eps <= 2 eps`` fails at eps = 1.
    """
    table = LocalizationTable(cls, dist, depth, truncation)
    if params is None:
        from .combinatorics import vc_dimension
        prefix = cls.enumerate(depth)
        pts = dist.support_points(truncation)
        pts = pts[dist.masses(pts) > 0][:64]
        d = max(1, vc_dimension(prefix, pts.tolist(), vc_cap).value)
        params = BoundParams(n=n, d=d)
    else:
        params = replace(params, n=n)

    def B(eps):
        return b_eps(table.sigma(eps, tau_grid).value, n, params.d, params.c_tilde)

    lo, hi = 1e-9, 1.0
    if B(hi) > 2 * hi:
        raise BisectionFailure("B_eps <= 2 eps never holds on [1e-9, 1]",
                               B_lo=B(lo), B_hi=B(hi))
    if B(lo) <= 2 * lo:
        eps_n = lo
    else:
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if B(mid) <= 2 * mid:
                hi = mid
            else:
                lo = mid
        eps_n = hi
    rep = table.sigma(eps_n, tau_grid)
    ball = tuple(int(table.ids[i]) for i in table.ball(eps_n))
    phi = min(params.c * math.sqrt(params.d / n), eps_n)
    return LocalizedQuantities(eps_n, ball, rep.value, B(eps_n), eps_n, phi, params.d, params)


@dataclass(frozen=True)
class DeviationScaling:
    """Mean (over trials) of the largest centered pairwise deviation among
    pairs with disagreement mass at most ``s``, for each ``s``."""

    s_values: tuple
    mean_sup: tuple
    normalized: tuple
    spread: float
    n: int
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def pairwise_deviation_scaling(label_table: np.ndarray, masses, etas, n: int, s_values,
                               trials: int, seed: int) -> DeviationScaling:
    """Empirical sup over pairs of ``|(er h - er g) - (er^ h - er^ g)|`` restricted to
    ``sigma^2(h, g) <= s``; ``normalized`` divides by ``sqrt(s)`` and
    ``spread`` is max/min of the normalized values.
    """
    L = np.asarray(label_table, dtype=np.int64)
    p = np.asarray(masses, dtype=float)
    eta = np.asarray(etas, dtype=float)
    m = L.shape[0]
    dis = (L[:, None, :] != L[None, :, :]).astype(float) @ p
    loss_true = (L * (1 - eta) + (1 - L) * eta) @ p
    diff_true = loss_true[:, None] - loss_true[None, :]
    rng = np.random.default_rng(seed)
    sups = np.zeros((trials, len(s_values)))
    masks = [(dis <= s * (1 + 1e-12)) & ~np.eye(m, dtype=bool) for s in s_values]
    for i in range(trials):
        c = rng.multinomial(n, p / p.sum())
        ones = rng.binomial(c, eta)
        zeros = c - ones
        emp = (ones @ (1 - L).T + zeros @ L.T) / n
        dev = np.abs(diff_true - (emp[:, None] - emp[None, :]))
        for j, mk in enumerate(masks):
            sups[i, j] = dev[mk].max() if mk.any() else 0.0
    mean_sup = sups.mean(axis=0)
    norm = mean_sup / np.sqrt(np.asarray(s_values, dtype=float))
    spread = float(norm.max() / norm.min()) if norm.min() > 0 else math.inf
    return DeviationScaling(tuple(float(s) for s in s_values), tuple(mean_sup.tolist()),
                            tuple(norm.tolist()), spread, n, trials)


CALCULATORS = {
    "hoeffding": hoeffding,
    "mcdiarmid_deviation": mcdiarmid_deviation,
    "slud_lower": slud_lower,
    "finite_class_bound": finite_class_bound,
    "uniform_bernstein": lambda **kw: uniform_bernstein(BoundParams(**kw)),
}
