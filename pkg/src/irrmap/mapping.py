"""The rational map phi: A --> P^N given by a subsystem V, and degree measurement."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (CountUnstable, DegreeBoundViolated, FiberSearchFailed, InconsistentDegrees,
                     RankAmbiguous)
from .profile import LinearSubsystem
from .solver import SolverSettings, solve_forms
from .surface import PolarizedAbelianSurface
from .theta import FullBasis

ZERO_TOL = 1e-12
RANK_HIGH = 1e-6
RANK_LOW = 1e-10
PROPORTIONAL_TOL = 1e-6
DEGREE_CEILING = 8


@dataclass(frozen=True)
class Indeterminate:
    """phi is undefined at the requested point."""

    reason: str

    def __bool__(self):
        return False


@dataclass
class LinearMap:
    """z -> [W f(z)] for linear forms W (n, 4d) over the full theta basis.

    ``excluded`` lists torus points where every coordinate vanishes, with the
    common vanishing order in ``orders``.
    """

    basis: FullBasis
    W: np.ndarray
    excluded: np.ndarray
    orders: np.ndarray
    exclusion_radius: float = 1e-3

    @property
    def surface(self) -> PolarizedAbelianSurface:
        return self.basis.surface

    @property
    def ambient_dim(self) -> int:
        return self.W.shape[0] - 1

    def sections(self, z, derivatives: bool = False):
        if derivatives:
            v, dv = self.basis.evaluate(z, derivatives=True)
            return v @ self.W.T, np.einsum("...fk,rf->...rk", dv, self.W)
        return self.basis.evaluate(z) @ self.W.T

    def near_excluded(self, z) -> bool:
        if len(self.excluded) == 0:
            return False
        x = self.surface.to_torus(np.asarray(z, dtype=complex))
        return bool(np.min(self.surface.torus_distance(self.excluded, x)) < self.exclusion_radius)

    def relative_size(self, z) -> float:
        f = self.basis.evaluate(z)
        s = f @ self.W.T
        return float(np.linalg.norm(s) / (np.linalg.norm(self.W, 2) * np.linalg.norm(f)))


@dataclass
class RationalMapEval:
    subsystem: LinearSubsystem
    base_exclusion_radius: float = 1e-3

    def __post_init__(self):
        base = self.subsystem.base_points()
        excl = np.array([p.torus_coords for p in base]).reshape(-1, 4)
        orders = np.array([2 * self.subsystem.profile.a[p.index - 1] for p in base], dtype=np.int64)
        self.linear = LinearMap(self.subsystem.basis.full, self.subsystem.full_coeffs, excl, orders,
                                self.base_exclusion_radius)

    @property
    def surface(self) -> PolarizedAbelianSurface:
        return self.subsystem.surface

    @property
    def N(self) -> int:
        return self.subsystem.N


def _as_linear(m) -> LinearMap:
    return m.linear if hasattr(m, "linear") else m


def normalize_projective(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / v[np.argmax(np.abs(v))]


def eval_map(m, z):
    """Normalized homogeneous coordinates of phi(z), or Indeterminate."""
    lm = _as_linear(m)
    if lm.near_excluded(z):
        return Indeterminate("within the exclusion radius of a base point")
    if lm.relative_size(z) < ZERO_TOL:
        return Indeterminate("all coordinates vanish")
    return normalize_projective(lm.sections(z))


def _tangent_singular_values(lm: LinearMap, z) -> np.ndarray:
    # derivatives of the unit section vector orthogonal to itself, in the
    # metric-normalized coordinates w' = sqrt(2 pi) Y^(-1/2) z
    s, ds = lm.sections(z, derivatives=True)
    M = np.real(scipy.linalg.sqrtm(lm.surface.Y)) / np.sqrt(2 * np.pi)
    ds = ds @ M
    n = np.linalg.norm(s)
    u = s / n
    perp = ds - np.outer(u, u.conj() @ ds)
    return np.linalg.svd(perp / n, compute_uv=False)


def jacobian_rank(m, z) -> int:
    """Rank of the differential of phi at z (0, 1 or 2)."""
    lm = _as_linear(m)
    if isinstance(eval_map(lm, z), Indeterminate):
        raise ValueError("phi is indeterminate at z")
    sv = _tangent_singular_values(lm, z)
    if np.any((sv > RANK_LOW) & (sv < RANK_HIGH)):
        raise RankAmbiguous(f"tangent singular values {sv} straddle the rank threshold")
    return int(np.sum(sv >= RANK_HIGH))


@dataclass
class FiberReport:
    target_point: np.ndarray
    solutions: np.ndarray  # torus coordinates in [0, 1)
    residuals: np.ndarray
    count: int
    line_count: int  # zeros of the two slicing forms: preimages of a line through the target
    grid: int
    coarse_count: int | None = None

    def to_json(self) -> dict:
        return {
            "target_point": [[float(c.real), float(c.imag)] for c in self.target_point],
            "count": int(self.count),
            "line_count": int(self.line_count),
            "grid": int(self.grid),
            "coarse_count": None if self.coarse_count is None else int(self.coarse_count),
            "max_residual": float(np.max(self.residuals)) if len(self.residuals) else 0.0,
        }


def _forms_through(target: np.ndarray, rng: np.random.Generator, k: int = 2) -> np.ndarray:
    """k complex Gaussian forms c with c . target = 0 (bilinear)."""
    n = len(target)
    c = rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n))
    return c - np.outer(c @ target, target.conj()) / np.vdot(target, target)


def _sin_angle(a, b) -> float:
    # norm of the component of a orthogonal to b, without 1 - cos^2 cancellation
    a = np.asarray(a, dtype=complex) / np.linalg.norm(a)
    b = np.asarray(b, dtype=complex) / np.linalg.norm(b)
    return float(np.linalg.norm(a - np.vdot(b, a) * b))


def proportional(a, b, tol: float = PROPORTIONAL_TOL) -> bool:
    return _sin_angle(a, b) < tol


def solve_fiber_of(lm: LinearMap, target, settings: SolverSettings, seed: int = 0,
                   refine: bool = False):
    """Preimages of a projective target: (fiber points, residuals, all line points, result)."""
    target = np.asarray(target, dtype=complex)
    rng = np.random.default_rng(seed)
    G = _forms_through(target, rng) @ lm.W
    res = solve_forms(lm.basis, G, lm.excluded, lm.orders, settings, refine)
    if res.count == 0:
        return np.zeros((0, 4)), np.zeros(0), res
    keep, angle = _on_fiber(lm, res.points, target)
    resid = np.maximum(res.residuals[keep], angle[keep])
    return res.points[keep], resid, res


def _on_fiber(lm: LinearMap, points: np.ndarray, target: np.ndarray):
    if len(points) == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    vals = lm.sections(lm.surface.from_torus(points))
    angle = np.array([_sin_angle(v, target) for v in vals])
    return angle < PROPORTIONAL_TOL, angle


def fiber(m, z0, grid: int = 16, newton_tol: float = 1e-10, seed: int = 0, refine: bool = False,
          settings: SolverSettings | None = None) -> FiberReport:
    """All z with phi(z) = phi(z0), by multi-start Newton on two slicing forms."""
    lm = _as_linear(m)
    settings = settings or SolverSettings(grid=grid, newton_tol=newton_tol)
    target = eval_map(lm, z0)
    if isinstance(target, Indeterminate):
        raise ValueError(f"phi is undefined at z0: {target.reason}")
    pts, resid, res = solve_fiber_of(lm, target, settings, seed, refine)
    x0 = lm.surface.to_torus(np.asarray(z0, dtype=complex))
    for x in (x0, -x0):
        if len(pts) == 0 or np.min(lm.surface.torus_distance(pts, x)) > 1e3 * settings.dedup_radius:
            raise FiberSearchFailed("the fiber search missed a known preimage of the target")
    coarse = None
    if refine:
        coarse = int(np.sum(_on_fiber(lm, res.coarse_points, target)[0]))
        if coarse != len(pts):
            raise CountUnstable(f"fiber count {coarse} at grid {settings.grid} but {len(pts)} "
                                f"at grid {res.grid}")
    return FiberReport(target, pts, resid, len(pts), res.count, res.grid, coarse)


@dataclass
class DegreeEstimate:
    deg_phi: int
    deg_S: int
    product: int
    n_trials: int
    stability: float
    fiber_counts: list[int] = field(default_factory=list)
    line_counts: list[int] = field(default_factory=list)
    hyperplane_count: int = 0
    max_residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "deg_phi": self.deg_phi, "deg_S": self.deg_S, "product": self.product,
            "n_trials": self.n_trials, "stability": self.stability,
            "fiber_counts": list(self.fiber_counts), "line_counts": list(self.line_counts),
            "hyperplane_count": self.hyperplane_count,
        }


def random_regular_point(lm: LinearMap, rng: np.random.Generator, tries: int = 50):
    """A uniformly drawn torus point where the map is defined and immersive."""
    s = lm.surface
    for _ in range(tries):
        z = s.from_torus(rng.uniform(0.0, 1.0, size=4))
        if isinstance(eval_map(lm, z), Indeterminate):
            continue
        try:
            if jacobian_rank(lm, z) == 2:
                return z
        except RankAmbiguous:
            continue
    raise FiberSearchFailed("no regular point found for a fiber target")


def _mode(counts: list[int]) -> tuple[int, float]:
    value, hits = Counter(counts).most_common(1)[0]
    return value, hits / len(counts)


def estimate_degrees(m, n_trials: int = 5, seed: int = 0,
                     settings: SolverSettings = SolverSettings(), refine: bool = True) -> DegreeEstimate:
    """deg phi from fibers over random targets, deg S from two random hyperplanes.

    With ``refine`` the first fiber and the hyperplane section are also
    counted on the doubled grid.
    """
    if n_trials < 5:
        raise ValueError("n_trials must be at least 5")
    lm = _as_linear(m)
    rng = np.random.default_rng(seed)
    counts, lines, worst = [], [], 0.0
    for t in range(n_trials):
        z0 = random_regular_point(lm, rng)
        rep = fiber(lm, z0, settings=settings, seed=int(rng.integers(2**32)),
                    refine=refine and t == 0)
        counts.append(rep.count)
        lines.append(rep.line_count)
        if len(rep.residuals):
            worst = max(worst, float(np.max(rep.residuals)))
    deg_phi, stability = _mode(counts)
    if stability <= 0.5:
        raise InconsistentDegrees(f"no majority among fiber counts {counts}")
    n = lm.ambient_dim + 1
    H = rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))
    res = solve_forms(lm.basis, H @ lm.W, lm.excluded, lm.orders, settings, refine)
    T = res.count
    if len(res.residuals):
        worst = max(worst, float(np.max(res.residuals)))
    if deg_phi == 0 or T % deg_phi:
        raise InconsistentDegrees(f"{T} hyperplane-section points not divisible by deg phi = {deg_phi}")
    line_mode, _ = _mode(lines)
    if line_mode != T:
        raise InconsistentDegrees(f"lines through image points meet the image {line_mode} times "
                                  f"in preimage count, generic codimension-two slices {T} times")
    deg_S = T // deg_phi
    if lm.ambient_dim >= 3 and deg_S < 2:
        raise InconsistentDegrees(f"deg S = {deg_S} for an image spanning P^{lm.ambient_dim}")
    if deg_phi * deg_S > DEGREE_CEILING:
        raise DegreeBoundViolated(f"deg phi * deg S = {deg_phi * deg_S} > {DEGREE_CEILING}")
    return DegreeEstimate(deg_phi, deg_S, deg_phi * deg_S, n_trials, stability, counts, lines, T,
                          worst)


def distinct_images(lm: LinearMap, points: np.ndarray) -> int:
    """Number of distinct projective images among torus points."""
    if len(points) == 0:
        return 0
    vals = lm.sections(lm.surface.from_torus(points))
    groups: list[np.ndarray] = []
    for v in vals:
        if not any(proportional(v, g) for g in groups):
            groups.append(v)
    return len(groups)


__all__ = [
    "DegreeEstimate", "FiberReport", "Indeterminate", "LinearMap", "RationalMapEval",
    "distinct_images", "estimate_degrees", "eval_map", "fiber", "jacobian_rank",
]
