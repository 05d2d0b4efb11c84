import math
from fractions import Fraction

import numpy as np
from hypothesis import assume, example, given
from hypothesis import strategies as st

from agnostic_erm.bounds import finite_class_bound, hoeffding, slud_lower
from agnostic_erm.combinatorics import Budget, find_eluder, vc_dimension, verify_eluder
from agnostic_erm.concept_class import ClassKind, Dataset, make_builtin
from agnostic_erm.curves import geometric_grid
from agnostic_erm.design import DesignMode, sequence_design
from agnostic_erm.distributions import bayes_classifier, evaluate_class, tabulated, true_error
from agnostic_erm.erm import TiePolicy, brute_force_expected_excess, empirical_error, erm_select
from agnostic_erm.extnum import Ext

from oracles import binom_upper_tail, longest_eluder, rows_on, vc_bruteforce


@st.composite
def finite_instance(draw, max_width=4, max_rows=6):
    width = draw(st.integers(1, max_width))
    rows = draw(st.lists(st.tuples(*[st.integers(0, 1)] * width), min_size=1, max_size=max_rows, unique=True))
    raw = draw(st.lists(st.integers(1, 10), min_size=width, max_size=width))
    masses = [r / sum(raw) for r in raw]
    etas = draw(st.lists(st.sampled_from([0.0, 0.1, 0.3, 0.5, 0.6, 0.9, 1.0]), min_size=width, max_size=width))
    cls = make_builtin(ClassKind.FINITE, table=[list(r) for r in rows])
    return cls, tabulated(range(width), masses, etas)


@st.composite
def instance_and_data(draw):
    cls, dist = draw(finite_instance())
    width = len(dist.support)
    pairs = draw(st.lists(st.tuples(st.integers(0, width - 1), st.integers(0, 1)), min_size=1, max_size=12))
    return cls, dist, Dataset.from_pairs(pairs)


@given(instance_and_data(), st.sampled_from(list(TiePolicy)), st.integers(0, 2 ** 32))
def test_erm_returns_a_minimizer(args, policy, seed):
    cls, dist, data = args
    prefix = cls.enumerate(cls.cardinality)
    out = erm_select(prefix, data, policy, dist=dist, seed=seed)
    errs = {h.id: empirical_error(h, data) for h in prefix}
    best = min(errs.values())
    assert out.empirical_error == best
    assert set(out.minimizers) == {i for i, e in errs.items() if e == best}
    assert out.chosen in out.minimizers
    if policy is TiePolicy.FIRST_INDEX:
        assert out.chosen == min(out.minimizers)
    if policy is TiePolicy.ADVERSARIAL_WORST:
        ex = evaluate_class(cls, dist, cls.cardinality).excess_by_id()
        assert all(ex[out.chosen].mid >= ex[i].mid for i in out.minimizers)


@given(finite_instance(), st.integers(1, 3))
def test_oracle_methods_agree_and_policies_ordered(inst, n):
    cls, dist = inst
    prefix = cls.enumerate(cls.cardinality)
    vals = {}
    for pol in TiePolicy:
        a = brute_force_expected_excess(prefix, dist, n, pol, method="sequences")
        b = brute_force_expected_excess(prefix, dist, n, pol, method="multinomial")
        assert math.isclose(a, b, abs_tol=1e-12)
        assert a >= -1e-15
        vals[pol] = a
    assert vals[TiePolicy.SEEDED_RANDOM] <= vals[TiePolicy.ADVERSARIAL_WORST] + 1e-12


@given(finite_instance())
def test_bayes_is_optimal_and_excess_nonnegative(inst):
    cls, dist = inst
    prefix = cls.enumerate(cls.cardinality)
    b = true_error(bayes_classifier(dist), dist)
    ev = evaluate_class(cls, dist, cls.cardinality)
    for h, e in zip(prefix, ev.excess):
        assert true_error(h, dist).lo >= b.lo - 1e-12
        assert e.lo >= 0
    assert min(e.mid for e in ev.excess) == 0


@given(finite_instance(max_width=6, max_rows=12))
def test_vc_and_eluder_match_exhaustive(inst):
    cls, _ = inst
    width = 6
    pre = cls.enumerate(cls.cardinality)
    rows = rows_on(pre, range(width))
    assert vc_dimension(pre, range(width), width).value == vc_bruteforce(rows, width, width)
    best = longest_eluder(rows, rows[0])
    budget = Budget(cls.cardinality, width)
    if best:
        seq = find_eluder(cls, pre[0], best, budget)
        assert seq is not None and verify_eluder(seq, cls) == []
    assert find_eluder(cls, pre[0], best + 1, budget) is None


@given(st.integers(1, 60), st.floats(0.0, 0.95))
def test_slud_below_exact_tail(n, eps):
    assert slud_lower(n, eps) <= binom_upper_tail(n, (1 - eps) / 2, n / 2) + 1e-12
    assert 0 <= slud_lower(n, eps) <= 0.5


@given(st.integers(1, 10 ** 6), st.floats(1e-4, 2.0), st.floats(1e-4, 2.0))
def test_hoeffding_range_and_monotone(n, t1, t2):
    lo, hi = sorted([t1, t2])
    assert 0 <= hoeffding(n, hi) <= hoeffding(n, lo) <= 1
    assert hoeffding(n + 1, lo) <= hoeffding(n, lo)


@given(st.integers(1, 50), st.floats(0.01, 1.0), st.integers(0, 10 ** 5))
def test_finite_class_bound_range(m, eps0, n):
    v = finite_class_bound(m, eps0, n)
    assert 0 <= v <= 1 and finite_class_bound(m, eps0, n + 10) <= v


@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_ext_matches_float_for_moderate_values(a, b):
    assume(abs(a - b) > 1e-9 * max(a, b))
    x, y = Ext.of(a), Ext.of(b)
    assert math.isclose(float(x * y), a * b, rel_tol=1e-12)
    assert math.isclose(float(x + y), a + b, rel_tol=1e-9, abs_tol=1e-9)
    assert (x < y) == (a < b)


@given(st.fractions(min_value="1/10", max_value="9/10").map(lambda f: f.limit_denominator(20)),
       st.integers(1, 6), st.sampled_from(list(DesignMode)))
@example(alpha=Fraction(3, 11), t_max=2, mode=DesignMode.ELUDER)
def test_sequence_design_self_consistent(alpha, t_max, mode):
    d = sequence_design(f"power({alpha.numerator}/{alpha.denominator})", t_max, mode)
    assert d.passed
    assert 0.5 <= float(d.C) <= 1.0


@given(st.integers(1, 1000), st.integers(1, 3), st.integers(2, 12))
def test_geometric_grid_is_increasing(lo, decades, per):
    g = geometric_grid(lo, lo * 10 ** decades, per)
    assert g[0] == lo and g[-1] == lo * 10 ** decades
    assert all(b > a for a, b in zip(g, g[1:]))
    assert np.all(np.asarray(g) >= 1)
