"""Monte Carlo learning curves, regime classification and checkpoint comparison."""
from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .concept_class import ConceptClass, Hypothesis, label_matrix
from .distributions import (DEFAULT_TRUNCATION, AdversarialConstruction, LabeledDistribution,
                            evaluate_class, sample_points)
from .design import DesignMode
from .erm import DEFAULT_SLACK, TiePolicy, policy_keys, select_from_mistakes
from .errors import GridMismatch, InsufficientGrid, InvalidParams

log = logging.getLogger(__name__)

WORKERS_ENV = "AGNOSTIC_ERM_WORKERS"
BLOCK = 4096
MIN_REPS = 30
_OVERFLOW_TAIL = 2.0 ** -60


def geometric_grid(lo: float, hi: float, per_decade: int = 8) -> list:
    """Distinct integers log-spaced from ``lo`` to ``hi``."""
    if lo < 1 or hi < lo:
        raise InvalidParams("grid needs 1 <= lo <= hi", lo=lo, hi=hi)
    count = max(2, int(round(per_decade * math.log10(hi / lo))) + 1)
    return sorted({int(round(v)) for v in np.geomspace(lo, hi, count)})


def parse_grid(spec) -> list:
    """``"geom:100:10000:8"``, ``"20,40,80"`` or a list of ints."""
    if isinstance(spec, (list, tuple)):
        return [int(v) for v in spec]
    spec = str(spec)
    if spec.startswith("geom:"):
        parts = spec.split(":")[1:]
        lo, hi = float(parts[0]), float(parts[1])
        return geometric_grid(lo, hi, int(parts[2]) if len(parts) > 2 else 8)
    return [int(v) for v in spec.split(",") if v.strip()]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def derive_seed(seed: int, *path: int) -> np.random.SeedSequence:
    """Independent stream for ``(seed, component, index, ...)``."""
    return np.random.SeedSequence([int(seed) & (2 ** 64 - 1), *[int(p) for p in path]])


@dataclass(frozen=True)
class Scenario:
    cls: str
    dist: str
    policy: str
    prefix_len: int
    seed: int

    def scenario_id(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


class _Engine:
    """Count-compressed simulator for one (prefix, distribution, policy).

    A sample of size n is summarized by its per-point label counts, which is
    all ERM sees: counts ~ Multinomial(n, P_X), ones ~ Binomial(counts, eta).
    """

    def __init__(self, prefix: Sequence[Hypothesis], dist: LabeledDistribution, policy,
                 truncation: int = DEFAULT_TRUNCATION, slack: float = DEFAULT_SLACK):
        self.policy = TiePolicy.parse(policy)
        self.prefix = list(prefix)
        self.dist = dist
        if dist.is_finite:
            pts, p, eta = dist.finite_arrays()
            self.overflow = 0.0
        else:
            T = 64
            while dist.tail_mass(T) > _OVERFLOW_TAIL:
                T *= 2
            pts = dist.support_points(T)
            p = dist.masses(pts)
            eta = dist.eta(pts)
            self.overflow = max(0.0, 1.0 - math.fsum(p))
        self.pts, self.p, self.eta = pts, p, eta
        # numpy gives the last category the remainder, so finite supports get
        # no empty overflow cell (it would collect rounding at huge n).
        self.has_overflow = not dist.is_finite
        probs = np.append(p, self.overflow) if self.has_overflow else np.asarray(p, dtype=float)
        self.probs = probs / math.fsum(probs)
        self.L = label_matrix(self.prefix, pts).astype(np.int64)
        self.keys = policy_keys(self.prefix, self.policy, dist, truncation, slack)
        ev = evaluate_class(None, dist, len(self.prefix), truncation, prefix=self.prefix)
        self.excess = np.array([e.mid for e in ev.excess])
        self.width = max(e.width for e in ev.excess)

    def counts(self, n: int, reps: int, rng: np.random.Generator):
        c = rng.multinomial(n, self.probs, size=reps)
        if self.has_overflow:
            over = np.flatnonzero(c[:, -1] > 0)
            if over.size:
                self._resample_overflow(c, over)
            c = c[:, :-1]
        ones = rng.binomial(c, self.eta)
        return ones, c - ones

    def _resample_overflow(self, c, rows):
        # The table covers all but 2^-60 of the mass; a draw beyond it is
        # reported rather than silently dropped.
        raise InvalidParams("a draw fell beyond the simulation table", rows=int(len(rows)),
                            table_size=int(len(self.pts)))

    def choose(self, ones, zeros, rng) -> np.ndarray:
        mistakes = ones @ (1 - self.L).T + zeros @ self.L.T
        return select_from_mistakes(mistakes, self.keys, self.policy, rng)

    def run_block(self, n: int, reps: int, ss: np.random.SeedSequence):
        rng = np.random.default_rng(ss)
        ones, zeros = self.counts(n, reps, rng)
        pos = self.choose(ones, zeros, rng)
        return ones, zeros, pos


def _blocks(reps: int):
    out, done = [], 0
    while done < reps:
        out.append(min(BLOCK, reps - done))
        done += out[-1]
    return out


def _run(engine: _Engine, n: int, reps: int, seed: int, grid_idx: int, reducer):
    sizes = _blocks(reps)
    jobs = [(b, size) for b, size in enumerate(sizes)]

    def work(job):
        b, size = job
        ones, zeros, pos = engine.run_block(n, size, derive_seed(seed, grid_idx, b))
        return reducer(ones, zeros, pos)

    w = _workers()
    if w > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=w) as ex:
            parts = list(ex.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    return parts


def _mean_stderr(values: np.ndarray):
    m = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return m, se


@dataclass(frozen=True)
class LearningCurve:
    grid: tuple
    means: tuple
    stderrs: tuple
    replications: tuple
    scenario: Scenario
    interval_width: float = 0.0

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidParams("grid must be strictly increasing")

    def to_rows(self) -> list:
        sid = self.scenario.scenario_id()
        return [{"n": n, "mean_excess": m, "stderr": s, "replications": r, "scenario_id": sid}
                for n, m, s, r in zip(self.grid, self.means, self.stderrs, self.replications)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["n", "mean_excess", "stderr", "replications", "scenario_id"])
            w.writeheader()
            for row in self.to_rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    @classmethod
    def read_csv(cls, path, scenario: Optional[Scenario] = None) -> "LearningCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        sc = scenario or Scenario("csv", str(path), "unknown", 0, 0)
        return cls(tuple(int(r["n"]) for r in rows), tuple(float(r["mean_excess"]) for r in rows),
                   tuple(float(r["stderr"]) for r in rows), tuple(int(r["replications"]) for r in rows), sc)

    def to_dict(self) -> dict:
        return {"scenario": asdict(self.scenario), "scenario_id": self.scenario.scenario_id(),
                "rows": self.to_rows(), "interval_width": self.interval_width}


def estimate_curve(cls: Optional[ConceptClass], dist: LabeledDistribution, policy, grid: Sequence[int],
                   reps: int, seed: int, prefix_len: int, prefix: Optional[Sequence[Hypothesis]] = None,
                   truncation: int = DEFAULT_TRUNCATION) -> LearningCurve:
    """Mean excess of ERM at each grid size over ``reps`` independent samples.

    Excess per trial is the exact excess of the chosen hypothesis (closed form
    or interval midpoint). Blocks of replications use streams derived from
    ``(seed, grid index, block)``, so results do not depend on worker count.
    """
    if reps < MIN_REPS:
        raise InvalidParams(f"reps must be >= {MIN_REPS}", reps=reps)
    grid = [int(n) for n in grid]
    if not grid or any(n < 1 for n in grid):
        raise InvalidParams("grid sizes must be >= 1")
    if prefix is None:
        if cls is None:
            raise InvalidParams("need a class or an explicit prefix")
        prefix = cls.enumerate(prefix_len)
    engine = _Engine(prefix, dist, policy, truncation)
    means, ses = [], []
    for gi, n in enumerate(grid):
        parts = _run(engine, n, reps, seed, gi, lambda o, z, pos: engine.excess[pos])
        m, s = _mean_stderr(np.concatenate(parts))
        means.append(m)
        ses.append(s)
    sc = Scenario(cls.kind.value if cls is not None else "prefix", dist.name,
                  engine.policy.value, len(prefix), int(seed))
    return LearningCurve(tuple(grid), tuple(means), tuple(ses), tuple([reps] * len(grid)), sc, engine.width)


# Regime classification.

class Regime(str, enum.Enum):
    EXPONENTIAL = "Exponential"
    SUPER_ROOT = "SuperRoot"
    ARBITRARILY_SLOW = "ArbitrarilySlow"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ClassifyConfig:
    r2_min: float = 0.9
    slope_max: float = -0.55
    root_factor: float = 1.5
    noise_sigmas: float = 3.0
    min_points: int = 6


@dataclass(frozen=True)
class RateVerdict:
    regime: Regime
    diagnostics: dict

    def to_dict(self) -> dict:
        return {"regime": self.regime.value, "diagnostics": self.diagnostics}


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def classify_rate(curve: LearningCurve, config: ClassifyConfig = ClassifyConfig()) -> RateVerdict:
    """Assign the fitted regime using the configured thresholds.

    Exponential: ``ln E`` vs ``n`` slope < 0 with R^2 >= r2_min. SuperRoot: log-log slope <=
    slope_max with R^2 >= r2_min, or ``E sqrt(n)`` shrinking by root_factor.
    ArbitrarilySlow: ``E sqrt(n)`` non-decreasing within noise_sigmas stderrs.
    """
    n = np.asarray(curve.grid, dtype=float)
    E = np.asarray(curve.means, dtype=float)
    se = np.asarray(curve.stderrs, dtype=float)
    if len(n) < config.min_points or n[-1] < 10 * n[0]:
        raise InsufficientGrid("need >= 6 grid points spanning a decade",
                               points=len(n), span=float(n[-1] / n[0]) if len(n) else 0.0)
    diag = {"thresholds": asdict(config), "grid": n.tolist()}
    root = E * np.sqrt(n)
    diag["E_sqrt_n"] = root.tolist()
    zero = E <= 0
    diag["zeros"] = int(zero.sum())
    if zero.sum() * 2 > len(n):
        diag["note"] = "more than half of the grid has zero mean excess (curve hit zero)"
        diag.update({"exp_slope": None, "exp_r2": None, "loglog_slope": None, "loglog_r2": None,
                     "root_factor": None})
        return RateVerdict(Regime.EXPONENTIAL, diag)
    keep = ~zero
    if keep.sum() < 3:
        diag["note"] = "too few positive points to fit"
        return RateVerdict(Regime.INCONCLUSIVE, diag)
    lnE = np.log(E[keep])
    s_exp, r2_exp = _linfit(n[keep], lnE)
    s_ll, r2_ll = _linfit(np.log(n[keep]), lnE)
    pos_root = root[keep]
    factor = float(pos_root[0] / pos_root[-1]) if pos_root[-1] > 0 else math.inf
    diag.update({"exp_slope": s_exp, "exp_r2": r2_exp, "loglog_slope": s_ll, "loglog_r2": r2_ll,
                 "root_factor": factor})
    if s_exp < 0 and r2_exp >= config.r2_min:
        return RateVerdict(Regime.EXPONENTIAL, diag)
    if (s_ll <= config.slope_max and r2_ll >= config.r2_min) or factor >= config.root_factor:
        return RateVerdict(Regime.SUPER_ROOT, diag)
    tol = config.noise_sigmas * se * np.sqrt(n)
    steps = np.diff(root)
    slack = tol[1:] + tol[:-1]
    if np.all(steps >= -slack):
        return RateVerdict(Regime.ARBITRARILY_SLOW, diag)
    return RateVerdict(Regime.INCONCLUSIVE, diag)


# Checkpoints.

@dataclass(frozen=True)
class CheckpointRow:
    t: int
    n: int
    observed_mean: float
    stderr: float
    predicted: float
    passed: bool
    replications: int
    event_frequency: Optional[float] = None
    event_stderr: Optional[float] = None
    event_bound: Optional[float] = None
    event_passed: Optional[bool] = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CheckpointReport:
    rows: tuple
    kind: str
    waived: tuple = ()

    @property
    def passed(self) -> bool:
        return all(r.passed and r.event_passed is not False for r in self.rows)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "rows": [r.to_dict() for r in self.rows],
                "waived": list(self.waived)}


def _tie_event(con: AdversarialConstruction, t: int, ones, zeros) -> np.ndarray:
    """No draws beyond checkpoint point ``x_t`` and wrong labels at ``x_t`` at least as many as right ones."""
    support = con.support
    seq_pts = [s.x for s in con.sequence.steps[:con.design.t_max]]
    col = {int(x): i for i, x in enumerate(support)}
    x_t = seq_pts[t - 1]
    y_t = int(con.center(x_t))
    c = col[x_t]
    right = ones[:, c] if y_t == 1 else zeros[:, c]
    wrong = zeros[:, c] if y_t == 1 else ones[:, c]
    later = [col[int(x)] for x in seq_pts[t:]]
    beyond = (ones[:, later] + zeros[:, later]).sum(axis=1) if later else np.zeros(len(right), dtype=np.int64)
    return (beyond == 0) & (wrong >= right)


def estimate_checkpoints(con: AdversarialConstruction, reps: int, seed: int,
                         prefix_len: Optional[int] = None, policy=TiePolicy.ADVERSARIAL_WORST,
                         max_n: Optional[int] = None) -> CheckpointReport:
    """Simulate ERM at every checkpoint size and compare with the predicted bounds.

    Checkpoints whose ``n_t`` exceeds ``max_n`` (or is not a machine integer)
    are waived and listed in the report.
    """
    if reps < MIN_REPS:
        raise InvalidParams(f"reps must be >= {MIN_REPS}", reps=reps)
    need = con.required_prefix
    prefix_len = need if prefix_len is None else prefix_len
    if prefix_len < need:
        raise InvalidParams("prefix shorter than the construction requires", prefix_len=prefix_len,
                            required=need)
    prefix = con.cls.enumerate(prefix_len)
    if all(h.id != con.center.id for h in prefix):
        prefix.append(con.center)
    engine = _Engine(prefix, con.dist, policy)
    rows, waived = [], []
    for cp in con.checkpoints:
        n_t = cp.n_int
        if n_t is None or (max_n is not None and n_t > max_n):
            msg = f"checkpoint t={cp.t} waived: n_t={cp.n if n_t is None else n_t} exceeds the simulation cap"
            log.warning(msg)
            waived.append(msg)
            continue

        def reducer(o, z, pos, t=cp.t):
            ev = _tie_event(con, t, o, z) if con.kind is DesignMode.ELUDER else None
            return engine.excess[pos], ev

        parts = _run(engine, n_t, reps, seed, cp.t, reducer)
        ex = np.concatenate([a for a, _ in parts])
        m, s = _mean_stderr(ex)
        pred = float(cp.predicted)
        row = dict(t=cp.t, n=n_t, observed_mean=m, stderr=s, predicted=pred,
                   passed=bool(m + 3 * s >= pred), replications=reps)
        if con.kind is DesignMode.ELUDER:
            ev = np.concatenate([b for _, b in parts]).astype(float)
            fm, fs = _mean_stderr(ev)
            eb = float(cp.event_bound)
            row.update(event_frequency=fm, event_stderr=fs, event_bound=eb,
                       event_passed=bool(fm >= eb - 3 * fs))
        rows.append(CheckpointRow(**row))
    return CheckpointReport(tuple(rows), con.kind.value, tuple(waived))


def checkpoint_compare(curve: LearningCurve, con: AdversarialConstruction) -> CheckpointReport:
    """Compare an existing curve with the construction's checkpoint predictions."""
    rows = []
    index = {n: i for i, n in enumerate(curve.grid)}
    missing = [cp.n for cp in con.checkpoints if cp.n_int not in index]
    if missing:
        raise GridMismatch("curve grid lacks checkpoint sizes", missing=[str(m) for m in missing])
    for cp in con.checkpoints:
        i = index[cp.n_int]
        m, s = curve.means[i], curve.stderrs[i]
        pred = float(cp.predicted)
        rows.append(CheckpointRow(cp.t, cp.n_int, m, s, pred, bool(m + 3 * s >= pred), curve.replications[i]))
    return CheckpointReport(tuple(rows), con.kind.value)
