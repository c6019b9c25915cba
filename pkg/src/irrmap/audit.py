"""Exact integer audits of the degree-bound inequality chains.

Every quantity here is a Python int. Steps that halve or quarter are checked
after multiplying both sides by 2 or 4.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .errors import InvalidAuditInput
from .profile import make_profile

_RELATIONS = {
    "==": lambda a, b: a == b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class AuditCheck:
    name: str
    lhs: int
    rhs: int
    relation: str = "=="

    @property
    def passed(self) -> bool:
        return _RELATIONS[self.relation](self.lhs, self.rhs)

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class AuditReport:
    checks: list[AuditCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AuditCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def extend(self, other: "AuditReport") -> "AuditReport":
        self.checks.extend(other.checks)
        return self

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.checks]


@dataclass(frozen=True)
class AuditInput:
    d: int
    a: tuple[int, ...]
    d_mults: tuple[int, ...] | None = None
    f_mults: tuple[int, ...] | None = None
    m_mults: tuple[int, ...] | None = None

    def __post_init__(self):
        _check_degree(self.d)
        for name in ("a", "d_mults", "f_mults", "m_mults"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _vector(value, name))
        if (self.f_mults is None) != (self.m_mults is None):
            raise InvalidAuditInput("f_mults and m_mults must be given together")
        if self.f_mults is not None:
            total = tuple(f + m for f, m in zip(self.f_mults, self.m_mults))
            if self.d_mults is None:
                object.__setattr__(self, "d_mults", total)
            elif self.d_mults != total:
                raise InvalidAuditInput("fixed and movable multiplicities do not add up to d_mults")
        if self.d_mults is not None:
            _check_dominates(self.d_mults, self.a)


def _check_degree(d) -> None:
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InvalidAuditInput(f"d must be a positive integer, got {d!r}")


def _vector(values, name: str) -> tuple[int, ...]:
    values = tuple(values)
    if len(values) != 16:
        raise InvalidAuditInput(f"{name} needs 16 entries, got {len(values)}")
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise InvalidAuditInput(f"{name} entries must be nonnegative integers, got {v!r}")
    return values


def _check_dominates(d_mults, a) -> None:
    bad = [i + 1 for i, (di, ai) in enumerate(zip(d_mults, a)) if di < 2 * ai]
    if bad:
        raise InvalidAuditInput(f"multiplicity below 2 a_i at points {bad}")


def _sq(v) -> int:
    return sum(x * x for x in v)


def audit_profile(d: int, a) -> AuditReport:
    """Profile identities and the resulting count of even sections left."""
    _check_degree(d)
    a = _vector(a, "a")
    s = _sq(a)
    return AuditReport([
        AuditCheck("profile_sum_squares", s, 2 * d - 2),
        AuditCheck("profile_zero_at_15_16", a[14] * a[14] + a[15] * a[15], 0),
        AuditCheck("profile_dimension_count", 2 * d + 2 - s, 4),
    ])


def audit_no_fixed_chain(d: int, a, d_mults) -> AuditReport:
    """(2L)^2 - sum d_i^2 <= 4 (2d - sum a_i^2) = 8."""
    inp = AuditInput(d, a, d_mults=d_mults)
    bound = 4 * (2 * d - _sq(inp.a))
    strict = 8 * d - _sq(inp.d_mults)
    return AuditReport([
        AuditCheck("nofixed_self_intersection", 4 * (2 * d), 8 * d),
        AuditCheck("nofixed_strict_transform", strict, bound, "<="),
        AuditCheck("nofixed_bound_is_8", bound, 8),
    ])


def no_fixed_slack(d: int, a, d_mults) -> int:
    """Room left in the no-fixed-component bound."""
    return 4 * (2 * d - _sq(a)) - (8 * d - _sq(d_mults))


def audit_fixed_chain(d: int, a, f_mults, m_mults) -> AuditReport:
    """Replay of the lower bound sum m_i^2 >= 2d - 8 and the final bound 8.

    Preconditions (raise InvalidAuditInput): f_i + m_i >= 2 a_i and
    sum f_i^2 = 2d + 4.
    """
    inp = AuditInput(d, a, f_mults=f_mults, m_mults=m_mults)
    f, m, dm = inp.f_mults, inp.m_mults, inp.d_mults
    sf, sm, sd, sa = _sq(f), _sq(m), _sq(dm), _sq(inp.a)
    if sf != 2 * d + 4:
        raise InvalidAuditInput(f"sum f_i^2 = {sf}, expected 2d + 4 = {2 * d + 4}")
    fm = sum(x * y for x, y in zip(f, m))
    return AuditReport([
        # strict transform of the fixed curve: F^2 - sum f_i^2 = 2 * (-2)
        AuditCheck("fixed_curve_self_intersection", 2 * d - sf, -4),
        AuditCheck("fixed_am_gm_x4", 4 * fm, sd, "<="),
        AuditCheck("fixed_expansion", sd, sf + sm + 2 * fm),
        AuditCheck("fixed_rearranged_x2", 2 * sd, 2 * (2 * d + 4) + 2 * sm + sd, "<="),
        AuditCheck("fixed_movable_vs_total_x2", 2 * sm, -4 * d - 8 + sd, ">="),
        AuditCheck("fixed_total_vs_profile", sd, 4 * sa, ">="),
        AuditCheck("fixed_profile_step_x2", -4 * d - 8 + 4 * sa, 2 * (2 * d - 8), ">="),
        AuditCheck("fixed_movable_lower_bound", sm, 2 * d - 8, ">="),
        AuditCheck("fixed_final_bound", 2 * d - sm, 8, "<="),
    ])


def _representations(n: int, slots: int, max_support: int):
    """Nonnegative vectors of length ``slots`` with sum of squares n and at most max_support nonzeros."""
    def rec(i, left, support, prefix):
        if i == slots:
            if left == 0:
                yield tuple(prefix)
            return
        yield from rec(i + 1, left, support, prefix + [0])
        if support < max_support:
            for v in range(1, math.isqrt(left) + 1):
                yield from rec(i + 1, left - v * v, support + 1, prefix + [v])
    yield from rec(0, n, 0, [])


@dataclass
class ReplaySummary:
    max_d: int
    cases: int
    counterexamples: list[tuple] = field(default_factory=list)
    failed_checks: int = 0

    @property
    def passed(self) -> bool:
        return not self.counterexamples and self.failed_checks == 0


def replay_fixed_branch(max_d: int = 10, positions: int = 8, max_support: int = 4,
                        m_extra: int = 2) -> ReplaySummary:
    """Exhaustive check of sum m_i^2 >= 2d - 8 over small fixed-component data.

    For each d the default profile is used. f runs over all vectors with
    sum f_i^2 = 2d + 4 and at most ``max_support`` nonzeros among the first
    ``positions`` points (the remaining points are interchangeable with
    points 5..8, where a_i = 0). Each m_i runs from its least admissible value
    max(0, 2 a_i - f_i) up to m_extra more, on the points carrying a_i or f_i.
    """
    summary = ReplaySummary(max_d, 0)
    for d in range(1, max_d + 1):
        a = make_profile(d).a
        for head in _representations(2 * d + 4, positions, max_support):
            f = head + (0,) * (16 - positions)
            lows = [max(0, 2 * a[i] - f[i]) for i in range(16)]
            free = [i for i in range(16) if a[i] > 0 or f[i] > 0]
            for bumps in itertools.product(range(m_extra + 1), repeat=len(free)):
                m = list(lows)
                for i, b in zip(free, bumps):
                    m[i] += b
                report = audit_fixed_chain(d, a, f, tuple(m))
                summary.cases += 1
                if not report["fixed_movable_lower_bound"].passed:
                    summary.counterexamples.append((d, f, tuple(m)))
                summary.failed_checks += sum(not c.passed for c in report.checks)
    return summary
