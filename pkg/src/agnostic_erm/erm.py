"""Empirical risk minimization over enumerated class prefixes and an exact
expectation oracle for tiny instances."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .concept_class import Dataset, Hypothesis, label_matrix
from .distributions import DEFAULT_TRUNCATION, LabeledDistribution, evaluate_class
from .errors import (EmptyDataset, InstanceTooLarge, IntervalTooWide, InvalidParams,
                     MissingDistribution)

ORACLE_LIMIT = 10 ** 7
DEFAULT_SLACK = 1e-6


class TiePolicy(str, enum.Enum):
    FIRST_INDEX = "FirstIndex"
    SEEDED_RANDOM = "SeededRandom"
    ADVERSARIAL_WORST = "AdversarialWorst"

    @classmethod
    def parse(cls, v) -> "TiePolicy":
        if isinstance(v, cls):
            return v
        aliases = {"first": cls.FIRST_INDEX, "random": cls.SEEDED_RANDOM,
                   "adversarial": cls.ADVERSARIAL_WORST}
        if v in aliases:
            return aliases[v]
        try:
            return cls(v)
        except ValueError:
            raise InvalidParams(f"unknown tie policy {v!r}", allowed=sorted(aliases)) from None


@dataclass(frozen=True)
class ErmOutcome:
    chosen: int
    minimizers: tuple
    empirical_error: Fraction
    tie_policy: TiePolicy

    def to_dict(self) -> dict:
        return {"chosen": self.chosen, "minimizers": list(self.minimizers),
                "empirical_error": str(self.empirical_error), "tie_policy": self.tie_policy.value}


def empirical_error(h: Hypothesis, data: Dataset) -> Fraction:
    """Exact fraction of examples misclassified by ``h``."""
    if len(data.examples) == 0:
        raise EmptyDataset("empirical error of an empty dataset is undefined")
    xs = np.asarray(data.xs, dtype=np.int64)
    ys = np.asarray(data.ys, dtype=np.uint8)
    return Fraction(int(np.count_nonzero(h.labels(xs) != ys)), len(ys))


@dataclass(frozen=True)
class PolicyKeys:
    """Per-hypothesis data a tie policy needs, aligned with the prefix order.

    ``order`` lists prefix positions in the policy's preference order (used by
    the deterministic policies); ``excess`` holds excess midpoints when a
    distribution was supplied.
    """

    ids: np.ndarray
    order: np.ndarray
    excess: Optional[np.ndarray]
    width: float


def policy_keys(prefix: Sequence[Hypothesis], policy, dist: Optional[LabeledDistribution] = None,
                truncation: int = DEFAULT_TRUNCATION, slack: float = DEFAULT_SLACK) -> PolicyKeys:
    """Precompute the ordering used to break ties.

    AdversarialWorst ranks by true error, equivalently by excess over the
    class infimum; the excess form avoids cancellation near 1/2.
    """
    policy = TiePolicy.parse(policy)
    ids = np.array([h.id for h in prefix], dtype=np.int64)
    excess, width = None, 0.0
    if dist is not None:
        ev = evaluate_class(None, dist, len(prefix), truncation, prefix=list(prefix))
        excess = np.array([e.mid for e in ev.excess])
        width = max(e.width for e in ev.excess)
    if policy is TiePolicy.ADVERSARIAL_WORST:
        if dist is None:
            raise MissingDistribution("AdversarialWorst needs the data distribution")
        if width > slack:
            raise IntervalTooWide("true-error intervals too wide to rank minimizers",
                                  width=width, slack=slack)
        order = np.lexsort((ids, -excess))
    else:
        order = np.argsort(ids, kind="stable")
    return PolicyKeys(ids, order, excess, width)


def select_from_mistakes(mistakes: np.ndarray, keys: PolicyKeys, policy, rng=None) -> np.ndarray:
    """Vectorized tie-breaking: ``mistakes`` has shape (reps, m) in prefix order.

    Returns the chosen prefix positions.
    """
    policy = TiePolicy.parse(policy)
    best = mistakes.min(axis=1, keepdims=True)
    mask = mistakes == best
    if policy is TiePolicy.SEEDED_RANDOM:
        by_id = mask[:, keys.order]
        counts = by_id.sum(axis=1)
        u = rng.random(len(counts)) if rng is not None else np.zeros(len(counts))
        kth = np.minimum((u * counts).astype(np.int64), counts - 1)
        pos = np.argmax(np.cumsum(by_id, axis=1) > kth[:, None], axis=1)
        return keys.order[pos]
    ranked = mask[:, keys.order]
    return keys.order[np.argmax(ranked, axis=1)]


def erm_select(prefix: Sequence[Hypothesis], data: Dataset, policy,
               dist: Optional[LabeledDistribution] = None, seed: int = 0,
               truncation: int = DEFAULT_TRUNCATION, slack: float = DEFAULT_SLACK) -> ErmOutcome:
    """Run ERM over ``prefix`` with an explicit tie-breaking policy.

    Args:
        prefix: non-empty list of hypotheses (the enumerated class prefix).
        data: non-empty dataset.
        policy: FirstIndex (lowest id), SeededRandom (uniform over minimizers
            from ``seed``) or AdversarialWorst (largest true error, lowest id on ties).
        dist: required by AdversarialWorst.

    Returns:
        ErmOutcome with the exact minimizer set and empirical error.
    """
    policy = TiePolicy.parse(policy)
    if not prefix:
        raise InvalidParams("prefix must be non-empty")
    if len(data.examples) == 0:
        raise EmptyDataset("ERM needs at least one example")
    keys = policy_keys(prefix, policy, dist if policy is TiePolicy.ADVERSARIAL_WORST else None,
                       truncation, slack)
    xs = np.asarray(data.xs, dtype=np.int64)
    ys = np.asarray(data.ys, dtype=np.uint8)
    ux, inv = np.unique(xs, return_inverse=True)
    ones = np.bincount(inv, weights=ys, minlength=len(ux)).astype(np.int64)
    zeros = np.bincount(inv, minlength=len(ux)).astype(np.int64) - ones
    L = label_matrix(prefix, ux).astype(np.int64)
    mistakes = (ones @ (1 - L).T + zeros @ L.T)[None, :]
    rng = np.random.default_rng(seed)
    pos = int(select_from_mistakes(mistakes, keys, policy, rng)[0])
    best = int(mistakes.min())
    mins = tuple(sorted(int(keys.ids[i]) for i in np.flatnonzero(mistakes[0] == best)))
    return ErmOutcome(int(keys.ids[pos]), mins, Fraction(best, len(ys)), policy)


def _compositions(n: int, cells: int):
    """All count vectors of length ``cells`` summing to ``n`` (stars and bars)."""
    for bars in itertools.combinations(range(n + cells - 1), cells - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + cells - 2 - prev)
        yield out


def brute_force_expected_excess(prefix: Sequence[Hypothesis], dist: LabeledDistribution, n: int,
                                policy, method: str = "auto", slack: float = DEFAULT_SLACK) -> float:
    """Exact expected excess of ERM at sample size ``n`` by enumeration.

    ``sequences`` enumerates all ``(2s)^n`` labeled samples; ``multinomial``
    aggregates samples with equal (point, label) counts, which is exact
    because ERM only sees the counts. SeededRandom is averaged over its
    uniform choice among minimizers.

    Raises:
        InstanceTooLarge: when the chosen enumeration exceeds ``10^7`` items.
    """
    policy = TiePolicy.parse(policy)
    if n < 1:
        raise InvalidParams("n must be >= 1", n=n)
    if not dist.is_finite:
        raise InvalidParams("the oracle needs a fully tabulated distribution")
    pts, p, eta = dist.finite_arrays()
    s = len(pts)
    keys = policy_keys(prefix, policy, dist, slack=slack)
    excess = keys.excess
    L = label_matrix(prefix, pts).astype(np.int64)
    q = np.concatenate([p * (1 - eta), p * eta])
    cells = 2 * s
    n_seq = cells ** n
    n_comp = math.comb(n + cells - 1, cells - 1)
    if method == "auto":
        method = "multinomial" if n_comp <= n_seq else "sequences"
    if method == "sequences":
        if n_seq > ORACLE_LIMIT:
            raise InstanceTooLarge("(2s)^n exceeds the enumeration guard", size=n_seq, limit=ORACLE_LIMIT)
        codes = np.arange(n_seq, dtype=np.int64)
        counts = np.zeros((n_seq, cells), dtype=np.int64)
        logprob = np.zeros(n_seq)
        lq = np.log(np.where(q > 0, q, 1.0))
        zero = q == 0
        impossible = np.zeros(n_seq, dtype=bool)
        for _ in range(n):
            c = codes % cells
            codes //= cells
            counts[np.arange(n_seq), c] += 1
            logprob += lq[c]
            impossible |= zero[c]
        prob = np.where(impossible, 0.0, np.exp(logprob))
    elif method == "multinomial":
        if n_comp > ORACLE_LIMIT:
            raise InstanceTooLarge("number of count vectors exceeds the guard", size=n_comp, limit=ORACLE_LIMIT)
        counts = np.array(list(_compositions(n, cells)), dtype=np.int64)
        logc = (math.lgamma(n + 1) - np.sum([[math.lgamma(v + 1) for v in row] for row in counts], axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            lq = np.log(q)
            terms = np.where(counts > 0, counts * lq, 0.0)
        prob = np.exp(logc + terms.sum(axis=1))
    else:
        raise InvalidParams(f"unknown oracle method {method!r}")
    zeros, ones = counts[:, :s], counts[:, s:]
    mistakes = ones @ (1 - L).T + zeros @ L.T
    if policy is TiePolicy.SEEDED_RANDOM:
        mask = mistakes == mistakes.min(axis=1, keepdims=True)
        per = (mask * excess).sum(axis=1) / mask.sum(axis=1)
    else:
        per = excess[select_from_mistakes(mistakes, keys, policy)]
    return math.fsum((prob * per).tolist())
