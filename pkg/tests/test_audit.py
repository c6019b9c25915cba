import pytest
from hypothesis import given, strategies as st

from irrmap.audit import (AuditCheck, AuditInput, audit_fixed_chain, audit_no_fixed_chain,
                          audit_profile, no_fixed_slack, replay_fixed_branch, _representations)
from irrmap.errors import InvalidAuditInput
from irrmap.profile import make_profile

ZERO = (0,) * 16


def vec(*head):
    return tuple(head) + (0,) * (16 - len(head))


def test_profile_examples():
    rep = audit_profile(3, vec(2))
    assert rep.passed
    assert rep["profile_dimension_count"].lhs == 4
    bad = audit_profile(3, vec(1, 1, 1))
    assert not bad.passed
    assert not bad["profile_sum_squares"].passed
    assert audit_profile(1, ZERO).passed


def test_profile_nonzero_at_15_fails():
    rep = audit_profile(2, (0,) * 14 + (1, 0))
    assert not rep["profile_zero_at_15_16"].passed


def test_checks_carry_python_ints():
    for c in audit_no_fixed_chain(5, make_profile(5).a, tuple(2 * x for x in make_profile(5).a)).checks:
        assert type(c.lhs) is int and type(c.rhs) is int


@pytest.mark.parametrize("d", range(1, 51))
def test_bound_is_exactly_8_at_minimal_multiplicities(d):
    a = make_profile(d).a
    rep = audit_no_fixed_chain(d, a, tuple(2 * x for x in a))
    assert rep.passed
    assert rep["nofixed_strict_transform"].lhs == 8
    assert rep["nofixed_bound_is_8"].lhs == 8
    assert no_fixed_slack(d, a, tuple(2 * x for x in a)) == 0


def test_d1_all_zero():
    rep = audit_no_fixed_chain(1, ZERO, ZERO)
    assert rep["nofixed_strict_transform"].lhs == 8


@given(st.integers(1, 40), st.integers(0, 15), st.integers(1, 5))
def test_raising_a_multiplicity_decreases_left_side(d, i, bump):
    a = make_profile(d).a
    base = [2 * x for x in a]
    more = list(base)
    more[i] += bump
    lhs0 = audit_no_fixed_chain(d, a, tuple(base))["nofixed_strict_transform"].lhs
    lhs1 = audit_no_fixed_chain(d, a, tuple(more))["nofixed_strict_transform"].lhs
    assert lhs1 < lhs0


def test_precondition_violations():
    with pytest.raises(InvalidAuditInput):
        audit_no_fixed_chain(3, vec(2), vec(3))
    with pytest.raises(InvalidAuditInput):
        audit_no_fixed_chain(0, ZERO, ZERO)
    with pytest.raises(InvalidAuditInput):
        audit_no_fixed_chain(2, ZERO, (0,) * 15)
    with pytest.raises(InvalidAuditInput):
        audit_no_fixed_chain(2, ZERO, vec(-1))
    with pytest.raises(InvalidAuditInput):
        audit_profile(2.0, ZERO)
    with pytest.raises(InvalidAuditInput):
        AuditInput(2, ZERO, f_mults=ZERO)
    with pytest.raises(InvalidAuditInput):
        AuditInput(2, ZERO, d_mults=vec(1), f_mults=ZERO, m_mults=ZERO)


def test_fixed_chain_requires_riemann_roch_count():
    with pytest.raises(InvalidAuditInput):
        audit_fixed_chain(3, vec(2), vec(2), vec(2))


def test_fixed_chain_am_gm_equality_case():
    # f = m = d/2: sum f m = sum (d/2)^2
    d = 3
    f = vec(3, 1)  # 9 + 1 = 2d + 4
    m = vec(3, 1)
    rep = audit_fixed_chain(d, vec(2), f, m)
    c = rep["fixed_am_gm_x4"]
    assert c.lhs == c.rhs
    assert rep.passed


def test_fixed_chain_self_intersection_is_minus_two():
    d = 5
    a = make_profile(d).a
    f = vec(3, 2, 1)  # 9 + 4 + 1 = 14 = 2d + 4
    m = tuple(max(0, 2 * x - y) for x, y in zip(a, f))
    rep = audit_fixed_chain(d, a, f, m)
    assert rep["fixed_curve_self_intersection"].lhs == -4
    assert rep.passed


@given(st.integers(1, 10), st.data())
def test_fixed_chain_conclusion_on_random_data(d, data):
    a = make_profile(d).a
    reps = list(_representations(2 * d + 4, 6, 4))
    head = data.draw(st.sampled_from(reps))
    f = head + (0,) * 10
    m = tuple(max(0, 2 * x - y) + data.draw(st.integers(0, 3)) for x, y in zip(a, f))
    rep = audit_fixed_chain(d, a, f, m)
    assert rep.passed
    assert sum(x * x for x in m) >= 2 * d - 8


def test_representations_are_exact():
    for n in range(0, 30):
        for v in _representations(n, 5, 3):
            assert sum(x * x for x in v) == n
            assert sum(1 for x in v if x) <= 3


def test_replay_small():
    s = replay_fixed_branch(max_d=4, positions=6, max_support=3, m_extra=1)
    assert s.cases > 0
    assert s.passed


def test_audit_check_relations():
    assert AuditCheck("x", 1, 2, "<=").passed
    assert not AuditCheck("x", 3, 2, "<=").passed
    assert AuditCheck("x", 3, 2, ">=").passed
    assert AuditCheck("x", 2, 2).to_json() == {"name": "x", "pass": True, "lhs": 2, "rhs": 2}
