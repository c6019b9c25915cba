import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from irrmap.errors import ProfileViolation, RankAmbiguous, SubsystemTooSmall
from irrmap.profile import (MultiplicityProfile, condition_matrix, four_squares, make_profile,
                            solve_subsystem, vanishing_report)

from conftest import even_basis_for, subsystem_for


def brute_four_squares(limit):
    """Lexicographically largest sorted representation for every n <= limit."""
    best = {}
    top = math.isqrt(limit)
    for a in range(top + 1):
        for b in range(a + 1):
            for c in range(b + 1):
                for e in range(c + 1):
                    n = a * a + b * b + c * c + e * e
                    if n > limit:
                        break
                    if n not in best or (a, b, c, e) > best[n]:
                        best[n] = (a, b, c, e)
    return best


def test_four_squares_matches_brute_force_small():
    oracle = brute_four_squares(600)
    for n in range(601):
        assert four_squares(n) == oracle[n]


@given(st.integers(0, 10**7))
def test_four_squares_is_valid(n):
    a, b, c, e = four_squares(n)
    assert a * a + b * b + c * c + e * e == n
    assert a >= b >= c >= e >= 0
    assert four_squares(n) == (a, b, c, e)


def test_four_squares_rejects_negative():
    with pytest.raises(ValueError):
        four_squares(-1)


@pytest.mark.parametrize("d", range(1, 30))
def test_default_profile_invariants(d):
    p = make_profile(d)
    p.validate(d)
    assert p.sum_squares == 2 * d - 2
    assert p.a[14] == p.a[15] == 0
    assert all(x == 0 for x in p.a[4:])


def test_profile_parse_and_validation():
    p = MultiplicityProfile.parse("2, 0, 0")
    assert p.a == (2,) + (0,) * 15
    p.validate(3)
    with pytest.raises(ProfileViolation):
        MultiplicityProfile.parse("1,1,1").validate(3)
    with pytest.raises(ProfileViolation):
        MultiplicityProfile.parse("x,1")
    with pytest.raises(ProfileViolation):
        MultiplicityProfile((1,) * 15)
    with pytest.raises(ProfileViolation):
        MultiplicityProfile((0,) * 14 + (1, 0)).validate(2)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_subsystem_has_dimension_four(d):
    V = subsystem_for(d)
    assert V.dim == 4 and V.N == 3
    if d > 1:
        assert V.gap >= 1e6
    # orthonormal rows
    assert np.allclose(V.coeffs @ V.coeffs.conj().T, np.eye(4), atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_condition_rows_count(d):
    eb = even_basis_for(d)
    prof = make_profile(d)
    cond = condition_matrix(eb, prof)
    # even monomials of degree < 2a number sum_{k<a} (2k + 1) = a^2
    assert cond.rows.shape == (prof.sum_squares, 2 * d + 2)
    assert cond.max_odd < 1e-9


def test_overdetermined_profile_fails():
    # d = 3 with a_1 = 3 asks for 9 conditions on a 8-dimensional space
    eb = even_basis_for(3)
    prof = MultiplicityProfile((3,) + (0,) * 15)
    with pytest.raises((SubsystemTooSmall, RankAmbiguous)):
        solve_subsystem(condition_matrix(eb, prof))


def test_rank_tol_validated():
    cond = condition_matrix(even_basis_for(2), make_profile(2))
    with pytest.raises(ValueError):
        solve_subsystem(cond, 0.0)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_vanishing_orders_are_sharp(d):
    V = subsystem_for(d)
    rep = vanishing_report(V)
    assert rep.max_below < 1e-7
    assert rep.orders == tuple(2 * a for a in V.profile.a)
    assert rep.sharp(V.profile)


def test_sections_vanish_at_base_points():
    V = subsystem_for(5)
    for p in V.base_points():
        vals = V.evaluate(p.z)
        assert np.max(np.abs(vals)) < 1e-12 * np.max(np.abs(V.basis.evaluate(p.z)))
