"""Binary hypotheses and countable concept classes over the natural numbers."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidParams


class ClassKind(str, enum.Enum):
    FINITE = "Finite"
    THRESHOLDS = "Thresholds"
    SINGLETONS_ALL_ONES = "SingletonsAllOnes"
    EXAMPLE5 = "Example5"
    POWERSET_UNION = "PowersetUnion"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Hypothesis:
    """A total map from instances to bits.

    Equality and hashing use ``id`` and ``name`` only, so a hypothesis can be
    used as a dict key even though the predicate is an arbitrary callable.
    """

    id: int
    predicate: Callable[[int], int] = field(compare=False, repr=False)
    name: str = ""
    vectorized: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    def __call__(self, x: int) -> int:
        return int(self.predicate(int(x)))

    def labels(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.vectorized is not None:
            return np.asarray(self.vectorized(xs), dtype=np.uint8)
        return np.fromiter((self.predicate(int(x)) for x in xs), dtype=np.uint8, count=xs.size)


@dataclass(frozen=True)
class LabeledExample:
    x: int
    y: int

    def __post_init__(self):
        if self.x < 0:
            raise InvalidParams("instances are non-negative integers", x=self.x)
        if self.y not in (0, 1):
            raise InvalidParams("labels are bits", y=self.y)


@dataclass(frozen=True)
class Dataset:
    examples: tuple = ()
    provenance: Optional[tuple] = None

    @classmethod
    def from_pairs(cls, pairs: Iterable, provenance=None) -> "Dataset":
        return cls(tuple(LabeledExample(int(x), int(y)) for x, y in pairs), provenance)

    @classmethod
    def from_arrays(cls, xs, ys, provenance=None) -> "Dataset":
        return cls(tuple(LabeledExample(int(x), int(y)) for x, y in zip(xs, ys)), provenance)

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def xs(self) -> np.ndarray:
        return np.fromiter((e.x for e in self.examples), dtype=np.int64, count=len(self.examples))

    @property
    def ys(self) -> np.ndarray:
        return np.fromiter((e.y for e in self.examples), dtype=np.uint8, count=len(self.examples))


@dataclass(frozen=True)
class ConceptClass:
    """A concept class given by a stable enumeration ``id -> Hypothesis``.

    ``cardinality`` is None for infinite classes. ``disagreement_support`` is
    an optional finite set of instances outside which every enumerated
    hypothesis agrees.
    """

    kind: ClassKind
    params: tuple
    cardinality: Optional[int]
    disagreement_support: Optional[tuple]
    factory: Callable[[int], Hypothesis] = field(compare=False, repr=False)

    @property
    def cardinality_hint(self):
        return "infinite" if self.cardinality is None else self.cardinality

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def hypothesis(self, i: int) -> Hypothesis:
        if i < 0 or (self.cardinality is not None and i >= self.cardinality):
            raise InvalidParams("hypothesis id out of range", id=i, cardinality=self.cardinality_hint)
        return self.factory(i)

    def enumerate(self, K: int) -> list:
        if K < 0:
            raise InvalidParams("prefix length must be non-negative", K=K)
        top = K if self.cardinality is None else min(K, self.cardinality)
        return [self.factory(i) for i in range(top)]

    def describe(self) -> dict:
        return {"kind": self.kind.value, "params": _plain(self.param_dict),
                "cardinality": self.cardinality_hint}


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(u) for u in v]
    if isinstance(v, dict):
        return {k: _plain(u) for k, u in v.items()}
    return v


# Hypotheses outside every built-in class, useful as centers.

def constant(bit: int) -> Hypothesis:
    bit = int(bit)
    return Hypothesis(-1 - bit, lambda x, b=bit: b, f"all-{bit}'s",
                      lambda xs, b=bit: np.full(np.shape(xs), b, dtype=np.uint8))


ALL_ZEROS = constant(0)
ALL_ONES = constant(1)


def table_hypothesis(hid: int, labels: Sequence[int], name: str = "") -> Hypothesis:
    """Hypothesis equal to ``labels[x]`` on ``range(len(labels))`` and 0 beyond."""
    row = np.asarray(labels, dtype=np.uint8)
    m = row.size

    def pred(x, row=row, m=m):
        return int(row[x]) if 0 <= x < m else 0

    def vec(xs, row=row, m=m):
        out = np.zeros(np.shape(xs), dtype=np.uint8)
        inside = (xs >= 0) & (xs < m)
        out[inside] = row[xs[inside]]
        return out

    return Hypothesis(hid, pred, name or f"row_{hid}", vec)


# Built-in enumerations.

def _example5(i: int) -> Hypothesis:
    if i == 0:
        return Hypothesis(0, lambda x: int(x == 0), "h*_1", lambda xs: (xs == 0).astype(np.uint8))
    if i == 1:
        return Hypothesis(1, lambda x: int(x != 0), "h*_2", lambda xs: (xs != 0).astype(np.uint8))
    j = i - 1
    return Hypothesis(i, lambda x, j=j: int(x == 0 or x == j), f"h_{j}",
                      lambda xs, j=j: ((xs == 0) | (xs == j)).astype(np.uint8))


def _singletons(i: int) -> Hypothesis:
    if i == 0:
        return Hypothesis(0, lambda x: 1, "all-1's", lambda xs: np.ones(np.shape(xs), dtype=np.uint8))
    return Hypothesis(i, lambda x, i=i: int(x == i), f"1{{x={i}}}",
                      lambda xs, i=i: (xs == i).astype(np.uint8))


def _threshold(t: int) -> Hypothesis:
    return Hypothesis(t, lambda x, t=t: int(x >= t), f"1{{x>={t}}}",
                      lambda xs, t=t: (xs >= t).astype(np.uint8))


def block_range(k: int) -> range:
    """Instances of block ``k`` (k >= 1) in the disjoint-union layout."""
    if k < 1:
        raise InvalidParams("blocks are indexed from 1", k=k)
    start = k * (k - 1) // 2
    return range(start, start + k)


def block_of(x: int) -> int:
    """Inverse of ``block_range``: the block holding instance ``x``."""
    k = (1 + math.isqrt(8 * x + 1)) // 2
    while k * (k - 1) // 2 > x:
        k -= 1
    while (k + 1) * k // 2 <= x:
        k += 1
    return k


def powerset_decode(i: int) -> tuple:
    """Map a PowersetUnion id (>= 1) to ``(block, mask)``."""
    k = (i + 1).bit_length() - 1
    return k, i + 1 - (1 << k)


def _powerset(i: int) -> Hypothesis:
    if i == 0:
        return Hypothesis(0, lambda x: 1, "all-1's", lambda xs: np.ones(np.shape(xs), dtype=np.uint8))
    k, mask = powerset_decode(i)
    start = k * (k - 1) // 2
    members = tuple(start + b for b in range(k) if mask >> b & 1)
    mset = frozenset(members)

    def vec(xs, members=members):
        return np.isin(xs, np.asarray(members, dtype=np.int64)).astype(np.uint8)

    name = "1_{" + ",".join(map(str, members)) + f"}}@X{k}"
    return Hypothesis(i, lambda x, s=mset: int(x in s), name, vec)


def make_builtin(kind, **params) -> ConceptClass:
    """Build one of the canonical classes.

    Args:
        kind: a ``ClassKind`` or its string value.
        **params: kind-specific parameters. ``Finite`` and ``Custom`` take
            ``table`` (rows of bits over ``range(len(row))``); ``PowersetUnion``
            takes ``max_block`` (None for the infinite union); ``Thresholds``
            accepts an optional ``max_threshold`` to truncate the class.

    Returns:
        The concept class with its stable enumeration.
    """
    try:
        kind = ClassKind(kind)
    except ValueError as exc:
        raise InvalidParams(f"unknown class kind {kind!r}") from exc

    if kind is ClassKind.EXAMPLE5:
        return ConceptClass(kind, (), None, None, _example5)
    if kind is ClassKind.SINGLETONS_ALL_ONES:
        return ConceptClass(kind, (), None, None, _singletons)
    if kind is ClassKind.THRESHOLDS:
        top = params.get("max_threshold")
        card = None if top is None else int(top) + 1
        if card is not None and card < 1:
            raise InvalidParams("max_threshold must be non-negative", max_threshold=top)
        return ConceptClass(kind, tuple(params.items()), card, None, _threshold)
    if kind is ClassKind.POWERSET_UNION:
        if "max_block" not in params:
            raise InvalidParams("PowersetUnion requires max_block (None for unbounded)")
        mb = params["max_block"]
        if mb is not None and (int(mb) < 1):
            raise InvalidParams("max_block must be >= 1", max_block=mb)
        card = None if mb is None else (1 << (int(mb) + 1)) - 1
        return ConceptClass(kind, (("max_block", mb),), card, None, _powerset)

    table = params.get("table")
    if not table or not all(len(r) for r in table):
        raise InvalidParams("a non-empty truth table is required", kind=kind.value)
    width = len(table[0])
    if any(len(r) != width for r in table):
        raise InvalidParams("truth table rows must share one domain", kind=kind.value)
    if any(b not in (0, 1) for r in table for b in r):
        raise InvalidParams("truth table entries must be bits", kind=kind.value)
    rows = tuple(tuple(int(b) for b in r) for r in table)
    if kind is ClassKind.FINITE and len(set(rows)) != len(rows):
        raise InvalidParams("Finite classes need pairwise distinct rows; use Custom for duplicates")
    names = params.get("names")
    hyps = [table_hypothesis(i, r, names[i] if names else "") for i, r in enumerate(rows)]
    return ConceptClass(kind, (("table", rows),), len(rows), tuple(range(width)),
                        lambda i, hyps=hyps: hyps[i])


def class_from_spec(spec: dict) -> ConceptClass:
    """Build a class from a config block ``{"kind": ..., <params>}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind is None:
        raise InvalidParams("class spec needs a 'kind'")
    return make_builtin(kind, **spec)


def resolve_hypothesis(cls: ConceptClass, ref) -> Hypothesis:
    """Look up a hypothesis by id, by name, or as a constant ("all-0's"/"all-1's")."""
    if isinstance(ref, Hypothesis):
        return ref
    if isinstance(ref, int) or (isinstance(ref, str) and ref.isdigit()):
        return cls.hypothesis(int(ref))
    if ref in ("all-0's", "all-0", "zeros"):
        if cls.kind is ClassKind.POWERSET_UNION:
            return cls.hypothesis(1)
        return ALL_ZEROS
    if ref in ("all-1's", "all-1", "ones"):
        if cls.kind in (ClassKind.POWERSET_UNION, ClassKind.SINGLETONS_ALL_ONES, ClassKind.THRESHOLDS):
            return cls.hypothesis(0)
        return ALL_ONES
    limit = 4096 if cls.cardinality is None else cls.cardinality
    for i in range(limit):
        h = cls.factory(i)
        if h.name == ref:
            return h
    raise InvalidParams(f"cannot resolve hypothesis {ref!r}")


# Operations on prefixes.

def evaluate(h: Hypothesis, x: int) -> int:
    return h(x)


def label_matrix(prefix: Sequence[Hypothesis], points) -> np.ndarray:
    """Labels of every prefix hypothesis on ``points`` (shape K x len(points))."""
    pts = np.asarray(list(points), dtype=np.int64)
    if not len(prefix):
        return np.zeros((0, pts.size), dtype=np.uint8)
    return np.vstack([h.labels(pts) for h in prefix]) if pts.size else np.zeros((len(prefix), 0), np.uint8)


def version_space(prefix: Sequence[Hypothesis], data: Dataset) -> list:
    if not len(data):
        return list(prefix)
    xs, ys = data.xs, data.ys
    return [h for h in prefix if np.array_equal(h.labels(xs), ys)]


def distinct_behaviors(prefix: Sequence[Hypothesis], points) -> list:
    """Group prefix hypotheses by their label pattern on ``points``.

    Returns a list of ``(pattern, ids)`` in order of first appearance.
    """
    points = list(points)
    if not points:
        raise InvalidParams("points must be non-empty")
    mat = label_matrix(prefix, points)
    groups: dict = {}
    for h, row in zip(prefix, mat):
        groups.setdefault(tuple(int(b) for b in row), []).append(h.id)
    return list(groups.items())


def disagreement_region(prefix: Sequence[Hypothesis], candidates) -> list:
    candidates = list(candidates)
    if len(prefix) < 2 or not candidates:
        return []
    mat = label_matrix(prefix, candidates)
    split = mat.min(axis=0) != mat.max(axis=0)
    return [x for x, s in zip(candidates, split) if s]
