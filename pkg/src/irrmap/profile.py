"""Multiplicity profiles and the linear subsystem V of even sections they cut out."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParityViolation, ProfileViolation, RankAmbiguous, SubsystemTooSmall
from .surface import PolarizedAbelianSurface, two_torsion_points
from .theta import EvenBasis

PARITY_TOL = 1e-7
MIN_GAP = 1e3


def four_squares(n: int) -> tuple[int, int, int, int]:
    """Lexicographically largest (a, b, c, e), a >= b >= c >= e >= 0, with a^2+b^2+c^2+e^2 = n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    for a in range(math.isqrt(n), -1, -1):
        r1 = n - a * a
        for b in range(min(a, math.isqrt(r1)), -1, -1):
            r2 = r1 - b * b
            for c in range(min(b, math.isqrt(r2)), -1, -1):
                r3 = r2 - c * c
                e = math.isqrt(r3)
                if e * e == r3 and e <= c:
                    return (a, b, c, e)
    raise AssertionError(f"no four-squares representation found for {n}")


class ProfileStrategy(str, Enum):
    CONCENTRATED = "concentrated"


@dataclass(frozen=True)
class MultiplicityProfile:
    """Required vanishing order at p_i is 2 * a[i - 1]."""

    a: tuple[int, ...]

    def __post_init__(self):
        if len(self.a) != 16 or any(int(x) != x or x < 0 for x in self.a):
            raise ProfileViolation(f"profile must be 16 nonnegative integers, got {self.a!r}")

    @property
    def sum_squares(self) -> int:
        return sum(x * x for x in self.a)

    def validate(self, d: int) -> None:
        if self.sum_squares != 2 * d - 2:
            raise ProfileViolation(f"sum of squares {self.sum_squares} != 2d - 2 = {2 * d - 2}")
        if self.a[14] != 0 or self.a[15] != 0:
            raise ProfileViolation("a_15 and a_16 must vanish")

    @classmethod
    def parse(cls, text: str) -> "MultiplicityProfile":
        try:
            values = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
        except ValueError as exc:
            raise ProfileViolation(f"cannot parse profile {text!r}") from exc
        if len(values) < 16:
            values += [0] * (16 - len(values))
        return cls(tuple(values))


def make_profile(d: int, strategy: ProfileStrategy | str = ProfileStrategy.CONCENTRATED) -> MultiplicityProfile:
    if d < 1:
        raise ValueError("d must be positive")
    strategy = ProfileStrategy(strategy)
    head = four_squares(2 * d - 2)
    return MultiplicityProfile(tuple(head) + (0,) * 12)


@dataclass
class ConditionMatrix:
    basis: EvenBasis
    profile: MultiplicityProfile
    rows: np.ndarray  # raw Taylor coefficients, (sum a_i^2, 2d + 2)
    labels: list[tuple[int, int, int]]  # (point index, w1 exponent, w2 exponent)
    max_odd: float  # largest odd-degree coefficient relative to the block scale

    @property
    def normalized(self) -> np.ndarray:
        if len(self.rows) == 0:
            return self.rows
        return self.rows / np.max(np.abs(self.rows), axis=1, keepdims=True)


def condition_matrix(basis: EvenBasis, profile: MultiplicityProfile,
                     frame: str = "fock") -> ConditionMatrix:
    """Even-degree Taylor coefficients of degree < 2 a_i at every p_i with a_i > 0.

    The default Fock frame spans the same conditions per point as the plain
    expansion but keeps high-order rows numerically independent.
    """
    rows, labels = [], []
    max_odd = 0.0
    for p in two_torsion_points(basis.surface):
        ai = profile.a[p.index - 1]
        if ai == 0:
            continue
        blocks = basis.taylor(p, 2 * ai - 1, frame)
        scale = max(np.max(np.abs(b)) for b in blocks)
        for deg, block in enumerate(blocks):
            if deg % 2:
                max_odd = max(max_odd, float(np.max(np.abs(block)) / scale))
                continue
            for j in range(deg + 1):
                rows.append(block[:, j])
                labels.append((p.index, deg - j, j))
    if max_odd > PARITY_TOL:
        raise ParityViolation(f"odd Taylor coefficient of relative size {max_odd:.3g}")
    mat = np.array(rows, dtype=complex).reshape(len(rows), basis.size)
    return ConditionMatrix(basis, profile, mat, labels, max_odd)


@dataclass
class LinearSubsystem:
    surface: PolarizedAbelianSurface
    profile: MultiplicityProfile
    basis: EvenBasis
    coeffs: np.ndarray  # (N + 1, 2d + 2) orthonormal rows, over the even basis
    residual: float
    singular_values: np.ndarray
    gap: float | None  # None when no conditions are imposed

    @property
    def N(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def full_coeffs(self) -> np.ndarray:
        """Sections of V over the full theta basis, (N + 1, 4d)."""
        return self.coeffs @ self.basis.coef

    def evaluate(self, z, derivatives: bool = False):
        full = self.basis.full
        W = self.full_coeffs
        if derivatives:
            v, dv = full.evaluate(z, derivatives=True)
            return v @ W.T, np.einsum("...fk,rf->...rk", dv, W)
        return full.evaluate(z) @ W.T

    def base_points(self) -> list:
        return [p for p in two_torsion_points(self.surface) if self.profile.a[p.index - 1] > 0]


def solve_subsystem(cond: ConditionMatrix, rank_tol: float = 1e-8) -> LinearSubsystem:
    """Numerical nullspace of the normalized condition matrix."""
    if not 0 < rank_tol < 1:
        raise ValueError("rank_tol must lie in (0, 1)")
    basis = cond.basis
    n = basis.size
    A = cond.normalized
    if A.shape[0] == 0:
        return LinearSubsystem(basis.surface, cond.profile, basis, np.eye(n, dtype=complex),
                               0.0, np.zeros(0), None)
    _, sv, Vh = np.linalg.svd(A)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    # singular values not returned by the SVD (rows < columns) are structurally
    # zero; measure them against the rounding floor instead
    floor = np.finfo(float).eps * sv[0] * max(A.shape)
    nxt = sv[rank] if rank < len(sv) else 0.0
    gap = float(sv[rank - 1] / max(nxt, floor)) if rank > 0 else float("inf")
    if gap < MIN_GAP:
        raise RankAmbiguous(f"singular-value gap {gap:.3g} at rank {rank}")
    null = Vh[rank:].conj()
    if null.shape[0] < 4:
        raise SubsystemTooSmall(f"dim V = {null.shape[0]} < 4")
    residual = float(np.max(np.abs(A @ null.T)))
    return LinearSubsystem(basis.surface, cond.profile, basis, null, residual, sv, gap)


VANISHING_TOL = 1e-7
# genuine zeros sit at rounding level (~1e-16); sections vanishing to high
# order at nearby points can legitimately be as small as 1e-8 elsewhere
ORDER_TOL = 1e-11


@dataclass
class VanishingReport:
    """Measured vanishing of V at the sixteen two-torsion points.

    Coefficients are Fock-frame Taylor coefficients of the orthonormal basis
    of V, each divided by the norm of the same functional on the even basis.
    """

    orders: tuple[int, ...]  # vanishing order of a general member at each p_i
    max_below: float  # worst relative coefficient of degree < 2 a_i
    top: tuple[float, ...]  # largest relative coefficient of degree 2 a_i

    def sharp(self, profile: MultiplicityProfile) -> bool:
        return all(o == 2 * a for o, a in zip(self.orders, profile.a))


def vanishing_report(V: LinearSubsystem, extra: int = 2) -> VanishingReport:
    orders, top, worst = [], [], 0.0
    for p in two_torsion_points(V.surface):
        ai = V.profile.a[p.index - 1]
        blocks = V.basis.taylor(p, 2 * ai + extra, "fock")
        order = None
        top_i = 0.0
        for deg in range(0, 2 * ai + extra + 1, 2):
            block = blocks[deg]
            norms = np.linalg.norm(block, axis=0)
            rel = np.abs(V.coeffs @ block) / np.where(norms > 0, norms, 1.0)
            r = float(np.max(rel))
            if deg < 2 * ai:
                worst = max(worst, r)
            if deg == 2 * ai:
                top_i = r
            if order is None and r > ORDER_TOL:
                order = deg
        orders.append(order if order is not None else 2 * ai + extra + 2)
        top.append(top_i)
    return VanishingReport(tuple(orders), worst, tuple(top))
