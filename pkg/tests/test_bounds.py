import math

import numpy as np
import pytest

from agnostic_erm.bounds import (CALCULATORS, BoundParams, b_eps, finite_class_bound, hoeffding,
                                 localized_quantities, mcdiarmid_deviation, pairwise_deviation_scaling,
                                 slud_lower, uniform_bernstein)
from agnostic_erm.distributions import finite_gap_fixture, thresholds_benign_fixture
from agnostic_erm.errors import DomainViolation

from oracles import binom_upper_tail


def test_hoeffding_values():
    assert hoeffding(100, 0.1) == pytest.approx(2 * math.exp(-2))
    assert hoeffding(1, 1e-6) == 1.0
    assert hoeffding(100, 0.2, 0, 2) == pytest.approx(2 * math.exp(-2))
    vals = [hoeffding(100, t) for t in np.linspace(0.05, 1, 20)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    for bad in [dict(n=0, t=0.1), dict(n=5, t=0), dict(n=5, t=0.1, a=1, b=1)]:
        with pytest.raises(DomainViolation):
            hoeffding(**bad)


def test_mcdiarmid_values():
    n = 50
    assert mcdiarmid_deviation(n, 1 / n, 0.05) == pytest.approx(math.sqrt(math.log(2 / 0.05) / (2 * n)))
    assert mcdiarmid_deviation(8, 1.0, 2 / math.e) == pytest.approx(2.0)
    assert mcdiarmid_deviation(16, 1.0, 0.1) / mcdiarmid_deviation(8, 1.0, 0.1) == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainViolation):
        mcdiarmid_deviation(8, 1.0, 1.0)


def test_slud_values_against_exact_tail():
    assert slud_lower(7, 0.0) == 0.5
    for n in (5, 10, 20, 50):
        for eps in (0.05, 0.1, 0.2):
            assert slud_lower(n, eps) <= binom_upper_tail(n, 0.5 - eps / 2, n / 2)
    # n eps^2 <= 1/8 keeps the bound above 1/10.
    for n in (1, 8, 100):
        assert slud_lower(n, math.sqrt(1 / (8 * n))) >= 0.1
    vals = [slud_lower(20, e) for e in np.linspace(0, 0.9, 30)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainViolation):
        slud_lower(10, 1.0)


def test_finite_class_bound_values():
    assert finite_class_bound(3, 0.2, 500) == pytest.approx(6 * math.exp(-10))
    assert finite_class_bound(3, 0.2, 0) == 1.0
    assert finite_class_bound(3, 0.1, 2000) == pytest.approx(finite_class_bound(3, 0.2, 500))
    vals = [finite_class_bound(5, 0.3, n) for n in range(0, 400, 10)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_uniform_bernstein_shape():
    base = BoundParams(n=1000, delta=0.05, d=2)
    sat = uniform_bernstein(BoundParams(n=1000, delta=0.05, d=2, sigma_sq=1.0))
    inner = math.log(1 / 0.05) / 1000
    assert sat == pytest.approx(math.sqrt(inner) + inner)
    vals = [uniform_bernstein(BoundParams(n=1000, d=2, sigma_sq=2.0 ** -k)) for k in range(12, -1, -1)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    s = 2.0 ** -8
    first = lambda n: math.sqrt(s / n * (2 * math.log(min(1 / s, n / 2)) + math.log(20)))
    assert first(4 * 10 ** 5) / first(10 ** 5) == pytest.approx(0.5, rel=0.05)
    with pytest.raises(DomainViolation):
        uniform_bernstein(BoundParams(n=3, d=2))
    with pytest.raises(DomainViolation):
        uniform_bernstein(BoundParams(n=100, sigma_sq=0.0))
    assert base.c0 == base.c == base.c_tilde == 1.0


def test_localized_quantities_finite_fixture():
    cls, dist = finite_gap_fixture()
    q = localized_quantities(cls, dist, 100)
    assert q.eps_n < 0.2 and q.sigma_sq_eps == 0.0
    # With sigma^2 = 0 the fixed point solves (d/n) log(n/d) = 2 eps.
    assert q.eps_n == pytest.approx(b_eps(0.0, 100, q.d) / 2, rel=1e-6)
    assert q.phi_total <= math.sqrt(q.d / 100) + 1e-15


def test_localized_quantities_thresholds():
    cls, dist = thresholds_benign_fixture()
    q = localized_quantities(cls, dist, 1000, depth=5)
    assert q.d == 1 and 0 < q.eps_n <= 1
    assert q.B_eps <= 2 * q.eps_n * (1 + 1e-6)


def test_pairwise_scaling_small():
    L = np.array([[1 if x >= t else 0 for x in range(16)] for t in range(16)])
    r = pairwise_deviation_scaling(L, [1 / 16] * 16, (np.arange(16) + 0.5) / 16, 2000,
                                   [1, 1 / 4, 1 / 16], 20, 0)
    assert r.mean_sup[0] >= r.mean_sup[1] >= r.mean_sup[2] > 0
    assert r.spread < 4


def test_calculator_registry():
    assert CALCULATORS["uniform_bernstein"](n=100) == pytest.approx(
        uniform_bernstein(BoundParams(n=100)))
    assert set(CALCULATORS) >= {"hoeffding", "slud_lower", "finite_class_bound", "mcdiarmid_deviation"}
