import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from spherefdn.bessel import (
    MAX_ORDER,
    BesselDomainError,
    RootTable,
    find_roots,
    normalized_spacing,
    spherical_j,
    spherical_j_prime,
)

from published import ROOTS, SPACINGS

mpmath.mp.dps = 40


def mp_j(n, x):
    if x == 0:
        return 1.0 if n == 0 else 0.0
    return float(mpmath.sqrt(mpmath.pi / (2 * x)) * mpmath.besselj(n + mpmath.mpf(1) / 2, x))


def mp_jp(n, x):
    return float(mpmath.diff(lambda t: mpmath.sqrt(mpmath.pi / (2 * t)) * mpmath.besselj(n + mpmath.mpf(1) / 2, t), x))


# --- evaluation -------------------------------------------------------------------------------


def test_trivial_values():
    assert spherical_j(0, 0.0) == 1.0
    assert spherical_j(3, 0.0) == 0.0
    assert spherical_j(0, math.pi) == pytest.approx(0.0, abs=1e-15)
    assert spherical_j(1, 1e-8) == pytest.approx(1e-8 / 3, rel=1e-12)


@pytest.mark.parametrize("n", range(MAX_ORDER + 1))
def test_against_arbitrary_precision(n):
    xs = np.concatenate([np.linspace(0.01, 1.0, 7), np.linspace(1.0, 40.0, 23), [n - 0.3 if n else 0.2, n + 0.3]])
    xs = xs[xs > 0]
    got = spherical_j(n, xs)
    want = np.array([mp_j(n, float(x)) for x in xs])
    scale = np.maximum(np.abs(want), 1e-300)
    # relative where the value is representable, absolute near zeros of j_n
    err = np.minimum(np.abs(got - want) / scale, np.abs(got - want) / 1e-12)
    assert err.max() < 1e-9


@settings(max_examples=150, deadline=None)
@given(n=st.integers(0, MAX_ORDER), x=st.just(0.0) | st.floats(1e-6, 80.0))  # scipy is nan on subnormals
def test_matches_scipy(n, x):
    assert spherical_j(n, x) == pytest.approx(special.spherical_jn(n, x), rel=1e-9, abs=1e-13)
    assert spherical_j_prime(n, x) == pytest.approx(special.spherical_jn(n, x, derivative=True), rel=1e-8, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, MAX_ORDER - 1), x=st.floats(0.5, 60.0))
def test_three_term_recurrence(n, x):
    lhs = spherical_j(n - 1, x) + spherical_j(n + 1, x)
    assert lhs == pytest.approx((2 * n + 1) / x * spherical_j(n, x), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("n", [3, 7, 12])
def test_branch_switches_are_continuous(n):
    for edge in (0.5, float(n)):
        lo, hi = spherical_j(n, edge - 1e-9), spherical_j(n, edge + 1e-9)
        assert hi == pytest.approx(lo, rel=1e-6, abs=1e-15)


def test_vectorised_shape_and_scalar_type():
    assert isinstance(spherical_j(2, 1.5), float)
    assert spherical_j(2, np.ones((3, 4))).shape == (3, 4)


@pytest.mark.parametrize("bad", [-1, 1.5, True])
def test_bad_order(bad):
    with pytest.raises(BesselDomainError):
        spherical_j(bad, 1.0)


def test_bad_argument():
    with pytest.raises(BesselDomainError):
        spherical_j(0, -0.1)
    with pytest.raises(BesselDomainError):
        spherical_j(0, float("nan"))
    with pytest.raises(BesselDomainError):
        spherical_j_prime(MAX_ORDER + 1, 1.0)


# --- roots ------------------------------------------------------------------------------------


def test_first_root_of_order_one():
    assert find_roots(1, 1).roots[0] == pytest.approx(2.0815759778, abs=1e-9)


def test_dc_convention():
    assert find_roots(0, 1).roots == (0.0,)
    assert find_roots(5, 2).roots[0] == 0.0
    assert find_roots(1, 1).roots[0] > 0


@pytest.mark.parametrize("n", range(MAX_ORDER + 1))
def test_roots_are_zeros_of_derivative(n):
    table = find_roots(n, 12)
    for z in table.roots:
        if z > 0:
            assert abs(mp_jp(n, z)) < 1e-9
    assert np.all(np.diff(table.roots) > 0)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_no_root_is_skipped(n):
    # a dense sign scan of the scipy derivative finds exactly the same zeros
    table = find_roots(n, 10)
    top = table.roots[-1] + 1e-6
    xs = np.linspace(1e-3, top, 200001)
    v = special.spherical_jn(n, xs, derivative=True)
    changes = np.count_nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    assert changes == sum(1 for z in table.roots if z > 0)


@pytest.mark.parametrize("n,s,value", [(n, s + 1, v) for n, row in ROOTS.items() for s, v in enumerate(row)])
def test_published_roots_to_one_printed_unit(n, s, value):
    # the printed values are accurate to about one unit in the last digit
    assert find_roots(n, 6).root(s) == pytest.approx(value, abs=0.0101)


def test_count_bounds():
    with pytest.raises(ValueError):
        find_roots(0, 0)
    with pytest.raises(BesselDomainError):
        find_roots(MAX_ORDER + 1, 3)


def test_root_table_invariants():
    with pytest.raises(ValueError):
        RootTable(2, (1.0, 2.0))
    with pytest.raises(ValueError):
        RootTable(1, (0.0, 2.0))
    with pytest.raises(ValueError):
        RootTable(0, (0.0, 3.0, 2.0))


@pytest.mark.parametrize("n", [0, 2, 5, 9])
def test_spacing_identity(n):
    table = find_roots(n, 8)
    sp = normalized_spacing(table)
    assert sum(sp) * math.pi == pytest.approx(table.roots[-1] - table.roots[0], rel=1e-12)


@pytest.mark.parametrize("n", range(10))
def test_published_spacings(n):
    assert normalized_spacing(find_roots(n, 6)) == pytest.approx(SPACINGS[n], abs=5e-4)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(0, 9))
def test_spacing_tends_to_pi(n):
    sp = normalized_spacing(find_roots(n, 31))
    assert 0.99 <= sp[-1] <= 1.01
    tail = sp[-10:]
    assert all(abs(b - 1) <= abs(a - 1) + 1e-12 for a, b in zip(tail, tail[1:]))


def test_spacing_needs_two_roots():
    with pytest.raises(ValueError):
        normalized_spacing(find_roots(0, 1))
