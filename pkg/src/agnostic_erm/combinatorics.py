"""Shattering, VC dimension, eluder and star structures with certificates.

All searches are deterministic: candidate instances are scanned in increasing
order and witnesses are the lowest enumeration index available. A search that
returns None has exhausted its budget; this is not a proof of nonexistence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .concept_class import ConceptClass, Hypothesis, label_matrix
from .errors import InvalidParams, PreconditionUnmet


@dataclass(frozen=True)
class Budget:
    """Search budget: prefix length ``max_prefix`` and instances ``range(max_instance)``."""

    max_prefix: int = 64
    max_instance: int = 64

    def to_dict(self) -> dict:
        return {"max_prefix": self.max_prefix, "max_instance": self.max_instance}


@dataclass(frozen=True)
class EluderStep:
    x: int
    y: int
    witness: int


@dataclass(frozen=True)
class EluderSequence:
    steps: tuple
    center: Hypothesis

    def __len__(self):
        return len(self.steps)

    @property
    def points(self) -> list:
        return [s.x for s in self.steps]

    def to_dict(self) -> dict:
        return {"type": "eluder", "center": _hdesc(self.center),
                "steps": [{"x": s.x, "y": s.y, "witness": s.witness} for s in self.steps]}


@dataclass(frozen=True)
class VCEluderSequence:
    blocks: tuple
    center: Hypothesis
    certificates: tuple = field(repr=False)

    @property
    def offsets(self) -> list:
        return [k * (k - 1) // 2 for k in range(1, len(self.blocks) + 1)]

    def to_dict(self) -> dict:
        return {"type": "vc_eluder", "center": _hdesc(self.center),
                "blocks": [list(b) for b in self.blocks],
                "certificates": [{"".join(map(str, p)): w for p, w in c.items()} for c in self.certificates]}


@dataclass(frozen=True)
class StarSet:
    points: tuple
    center: Hypothesis
    witnesses: tuple

    def to_dict(self) -> dict:
        return {"type": "star", "center": _hdesc(self.center),
                "points": list(self.points), "witnesses": list(self.witnesses)}


@dataclass(frozen=True)
class VCResult:
    value: int
    certificate: tuple
    reached_cap: bool
    witnesses: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        return {"type": "vc_dimension", "value": self.value, "certificate": list(self.certificate),
                "reached_cap": self.reached_cap}


def _hdesc(h: Hypothesis) -> dict:
    return {"id": h.id, "name": h.name}


def _pattern_codes(mat: np.ndarray) -> np.ndarray:
    """Encode each row of a bit matrix as an integer (first column = lowest bit)."""
    if mat.shape[1] == 0:
        return np.zeros(mat.shape[0], dtype=np.int64)
    weights = (np.int64(1) << np.arange(mat.shape[1], dtype=np.int64))
    return mat.astype(np.int64) @ weights


def _decode(code: int, d: int) -> tuple:
    return tuple((code >> b) & 1 for b in range(d))


def _shatter_witnesses(ids: Sequence[int], mat: np.ndarray) -> Optional[dict]:
    d = mat.shape[1]
    if len(ids) < (1 << d):
        return None
    codes = _pattern_codes(mat)
    found: dict = {}
    for hid, code in zip(ids, codes.tolist()):
        if code not in found:
            found[code] = hid
    if len(found) < (1 << d):
        return None
    return {_decode(c, d): found[c] for c in sorted(found)}


def is_shattered(prefix: Sequence[Hypothesis], points) -> tuple:
    """Return ``(True, {pattern: witness id})`` or ``(False, None)``."""
    points = list(points)
    if len(set(points)) != len(points):
        raise InvalidParams("points must be distinct")
    if not points:
        return (True, {(): prefix[0].id}) if prefix else (False, None)
    w = _shatter_witnesses([h.id for h in prefix], label_matrix(prefix, points))
    return (w is not None, w)


def missing_patterns(prefix: Sequence[Hypothesis], points) -> list:
    """Label patterns on ``points`` that no prefix hypothesis realizes."""
    points = list(points)
    codes = set(_pattern_codes(label_matrix(prefix, points)).tolist()) if prefix else set()
    return [_decode(c, len(points)) for c in range(1 << len(points)) if c not in codes]


def vc_dimension(prefix: Sequence[Hypothesis], domain, cap: int) -> VCResult:
    """Largest ``d <= cap`` such that some ``d``-subset of ``domain`` is shattered.

    Size-``d`` candidates are grown only from shattered ``(d-1)``-sets, which is
    exact because every subset of a shattered set is shattered.
    """
    if cap < 1:
        raise InvalidParams("cap must be >= 1", cap=cap)
    domain = sorted(set(int(x) for x in domain))
    ids = [h.id for h in prefix]
    full = label_matrix(prefix, domain)
    col = {x: j for j, x in enumerate(domain)}
    level = [()]
    best, best_w = (), {(): ids[0]} if ids else {}
    if not ids:
        return VCResult(0, (), False, {})
    for d in range(1, min(cap, len(domain)) + 1):
        if len(ids) < (1 << d):
            break
        nxt = []
        for base in level:
            start = col[base[-1]] + 1 if base else 0
            for j in range(start, len(domain)):
                cand = base + (domain[j],)
                w = _shatter_witnesses(ids, full[:, [col[x] for x in cand]])
                if w is not None:
                    nxt.append(cand)
                    if len(nxt) == 1:
                        best, best_w = cand, w
        if not nxt:
            break
        level = nxt
    return VCResult(len(best), best, len(best) == cap, best_w)


class _Search:
    """Shared state for searches over a class prefix and an instance range."""

    def __init__(self, cls: ConceptClass, center: Hypothesis, budget: Budget, candidates=None):
        self.prefix = cls.enumerate(budget.max_prefix)
        if not self.prefix:
            raise InvalidParams("empty class prefix")
        self.ids = np.array([h.id for h in self.prefix], dtype=np.int64)
        self.points = list(range(budget.max_instance)) if candidates is None else sorted(set(candidates))
        self.L = label_matrix(self.prefix, self.points).astype(bool)
        self.c = center.labels(self.points).astype(bool)
        self.D = self.L != self.c[None, :]


def find_eluder(cls: ConceptClass, center: Hypothesis, target_len: int,
                budget: Budget = Budget(), candidates=None) -> Optional[EluderSequence]:
    """Depth-first search for an eluder sequence of length ``target_len``.

    Feasibility of an extension depends only on the current version space, so
    failed version spaces are memoized with the number of steps they could not
    supply.
    """
    if target_len < 1:
        raise InvalidParams("target_len must be >= 1", target_len=target_len)
    s = _Search(cls, center, budget, candidates)
    failed: dict = {}
    steps: list = []

    def dfs(V: np.ndarray, need: int) -> bool:
        if need == 0:
            return True
        key = V.tobytes()
        if failed.get(key, need + 1) <= need:
            return False
        cand = np.flatnonzero((s.D & V[:, None]).any(axis=0))
        for j in cand:
            wit = int(np.flatnonzero(V & s.D[:, j])[0])
            steps.append(EluderStep(s.points[j], int(s.c[j]), int(s.ids[wit])))
            if dfs(V & ~s.D[:, j], need - 1):
                return True
            steps.pop()
        failed[key] = min(need, failed.get(key, need))
        return False

    V0 = np.ones(len(s.prefix), dtype=bool)
    if dfs(V0, target_len):
        return EluderSequence(tuple(steps), center)
    return None


def find_star_set(cls: ConceptClass, center: Hypothesis, size: int,
                  budget: Budget = Budget(), candidates=None) -> Optional[StarSet]:
    """Search increasing point sets where each point has a private witness."""
    if size < 1:
        raise InvalidParams("size must be >= 1", size=size)
    s = _Search(cls, center, budget, candidates)
    useful = [j for j in range(len(s.points)) if s.D[:, j].any()]

    def witnesses(cols):
        sub = s.D[:, cols]
        out = []
        for i in range(len(cols)):
            mask = sub[:, i] & (sub.sum(axis=1) == 1)
            hits = np.flatnonzero(mask)
            if not hits.size:
                return None
            out.append(int(s.ids[hits[0]]))
        return out

    def dfs(cols, start):
        if len(cols) == size:
            return cols
        for pos in range(start, len(useful)):
            nxt = cols + [useful[pos]]
            if witnesses(nxt) is None:
                continue
            got = dfs(nxt, pos + 1)
            if got is not None:
                return got
        return None

    cols = dfs([], 0)
    if cols is None:
        return None
    return StarSet(tuple(s.points[j] for j in cols), center, tuple(witnesses(cols)))


def find_vc_eluder(cls: ConceptClass, center: Hypothesis, k_max: int,
                   budget: Budget = Budget(), candidates=None) -> Optional[VCEluderSequence]:
    """Search blocks of sizes 1..k_max, block k shattered by the version space
    consistent with the center on all earlier blocks."""
    if k_max < 1:
        raise InvalidParams("k_max must be >= 1", k_max=k_max)
    s = _Search(cls, center, budget, candidates)
    failed: set = set()
    blocks: list = []
    certs: list = []

    def dfs(V: np.ndarray, used: frozenset, k: int) -> bool:
        if k > k_max:
            return True
        key = (V.tobytes(), k)
        if key in failed:
            return False
        if V.sum() >= (1 << k):
            live = [j for j in np.flatnonzero((s.D & V[:, None]).any(axis=0)) if j not in used]
            vids = s.ids[V].tolist()
            sub = s.L[V]
            for combo in itertools.combinations(live, k):
                w = _shatter_witnesses(vids, sub[:, list(combo)])
                if w is None:
                    continue
                blocks.append(tuple(s.points[j] for j in combo))
                certs.append(w)
                agree = ~s.D[:, list(combo)].any(axis=1)
                if dfs(V & agree, used | set(combo), k + 1):
                    return True
                blocks.pop()
                certs.pop()
        failed.add(key)
        return False

    if dfs(np.ones(len(s.prefix), dtype=bool), frozenset(), 1):
        return VCEluderSequence(tuple(blocks), center, tuple(certs))
    return None


def extract_eluder_from_vanishing_distance(cls: ConceptClass, dist, center: Hypothesis,
                                           target_len: int, depth: int,
                                           truncation: int = 4096) -> EluderSequence:
    """Build an eluder sequence from hypotheses approaching ``center`` in ``P_X``.

    Starting from ``eps = 1``, each step takes the lowest-id hypothesis with
    ``0 < P_X(h != center) < eps``, the first positive-mass point where it
    disagrees with the center, and sets ``eps`` to that point's mass.

    Raises:
        PreconditionUnmet: when no enumerated hypothesis enters the shrinking
            ball within ``depth``.
    """
    from .distributions import disagreement_mass

    prefix = cls.enumerate(depth)
    eps = 1.0
    steps = []
    support = dist.support_points(truncation)
    masses = dist.masses(support)
    pos = support[masses > 0]
    pos_mass = masses[masses > 0]
    cl = center.labels(pos)
    for j in range(target_len):
        chosen = None
        for h in prefix:
            lo, hi = disagreement_mass(h, center, dist, truncation)
            if lo > 0 and hi < eps:
                chosen = h
                break
        if chosen is None:
            raise PreconditionUnmet("no enumerated hypothesis enters the shrinking ball",
                                    step=j + 1, eps=eps, depth=depth, found=len(steps))
        dis = np.flatnonzero(chosen.labels(pos) != cl)
        if not dis.size:
            raise PreconditionUnmet("disagreement mass lies beyond the truncation", step=j + 1)
        i = int(dis[0])
        steps.append(EluderStep(int(pos[i]), int(cl[i]), chosen.id))
        eps = float(pos_mass[i])
    return EluderSequence(tuple(steps), center)


# Independent verifiers.

def verify_eluder(seq: EluderSequence, cls: ConceptClass) -> list:
    """Return a list of violated invariants (empty when the certificate is sound)."""
    errs = []
    for k, st in enumerate(seq.steps):
        if seq.center(st.x) != st.y:
            errs.append(f"step {k}: center label {seq.center(st.x)} != {st.y}")
        w = cls.hypothesis(st.witness)
        for i in range(k):
            prev = seq.steps[i]
            if w(prev.x) != prev.y:
                errs.append(f"step {k}: witness {w.id} disagrees with earlier step {i}")
        if w(st.x) == st.y:
            errs.append(f"step {k}: witness {w.id} does not disagree at x={st.x}")
    return errs


def verify_star(star: StarSet, cls: ConceptClass) -> list:
    errs = []
    pts = list(star.points)
    if len(set(pts)) != len(pts):
        errs.append("points not distinct")
    for i, (x, wid) in enumerate(zip(pts, star.witnesses)):
        w = cls.hypothesis(wid)
        dis = [z for z in pts if w(z) != star.center(z)]
        if dis != [x]:
            errs.append(f"witness {wid} disagrees with the center on {dis}, expected [{x}]")
    return errs


def verify_vc_eluder(seq: VCEluderSequence, cls: ConceptClass) -> list:
    errs = []
    earlier: list = []
    for k, (block, cert) in enumerate(zip(seq.blocks, seq.certificates), start=1):
        if len(block) != k:
            errs.append(f"block {k} has size {len(block)}")
        if len(cert) != 1 << len(block):
            errs.append(f"block {k}: {len(cert)} patterns certified, need {1 << len(block)}")
        for pattern, wid in cert.items():
            w = cls.hypothesis(wid)
            if tuple(w(x) for x in block) != tuple(pattern):
                errs.append(f"block {k}: witness {wid} does not realize {pattern}")
            bad = [x for x in earlier if w(x) != seq.center(x)]
            if bad:
                errs.append(f"block {k}: witness {wid} leaves the version space at {bad}")
        earlier.extend(block)
    if len(set(earlier)) != len(earlier):
        errs.append("blocks overlap")
    return errs
