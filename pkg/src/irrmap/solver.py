"""Multi-start Newton for two linear forms in the theta basis, with dedup modulo the lattice."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import CountUnstable, FiberSearchFailed
from .theta import FullBasis, truncation_radius

# fixed generic offset keeps seeds off the two-torsion points, where even
# equations have a singular Jacobian
SEED_OFFSET = np.array([0.0123, 0.0357, 0.0071, 0.0291])
ITERATION_TAIL_TOL = 1e-2


@dataclass(frozen=True)
class SolverSettings:
    grid: int = 16
    newton_tol: float = 1e-10
    dedup_radius: float = 1e-6
    exclusion_radius: float = 1e-3
    max_iter: int = 60
    step_tol: float = 1e-8
    step_cap: float = 0.25

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if not 0 < self.newton_tol < 1:
            raise ValueError("newton_tol must lie in (0, 1)")

    def with_grid(self, grid: int) -> "SolverSettings":
        return replace(self, grid=grid)


@dataclass
class SolveResult:
    points: np.ndarray  # (n, 4) torus coordinates in [0, 1)
    residuals: np.ndarray  # relative residual of the two equations
    grid: int
    coarse_count: int | None  # count from the grid / 2 sub-lattice when refined
    coarse_points: np.ndarray | None
    n_seeds: int
    n_converged: int
    n_excluded: int

    @property
    def count(self) -> int:
        return len(self.points)


def seed_grid(grid: int) -> np.ndarray:
    """Lattice points i / grid + offset with first coordinate below 1/2.

    Newton commutes with z -> -z for even equations, so the other half of the
    seeds only reproduces negated limits. Seeds of an even grid with all
    indices even form the grid / 2 lattice.
    """
    idx = np.indices((grid,) * 4).reshape(4, -1).T
    x = idx / grid + SEED_OFFSET
    keep = x[:, 0] < 0.5
    return x[keep], np.all(idx[keep] % 2 == 0, axis=1)


@lru_cache(maxsize=32)
def _cheap_basis(basis: FullBasis) -> FullBasis:
    cheap = truncation_radius(basis.surface, ITERATION_TAIL_TOL).radii
    radii = (min(cheap[0], basis.radii[0]), min(cheap[1], basis.radii[1]))
    return basis.with_radii(radii)


def dedup(points: np.ndarray, radius: float) -> np.ndarray:
    """Representatives of points modulo Z^4, merging within ``radius``; sorted."""
    if len(points) == 0:
        return points.reshape(0, 4)
    pts = np.mod(points, 1.0)
    # exact-duplicate pre-pass, then greedy clustering on the survivors
    keys = np.unique(np.round(pts / radius * 0.1).astype(np.int64), axis=0, return_index=True)[1]
    pts = pts[np.sort(keys)]
    reps = []
    for p in pts:
        if reps:
            diff = np.asarray(reps) - p
            diff -= np.rint(diff)
            if np.min(np.linalg.norm(diff, axis=1)) < radius:
                continue
        reps.append(p)
    reps = np.asarray(reps)
    order = np.lexsort(reps.T[::-1])
    return reps[order]


def close_under_negation(points: np.ndarray, radius: float) -> np.ndarray:
    return dedup(np.vstack([points, np.mod(-points, 1.0)]), radius)


def _outside(points: np.ndarray, excluded: np.ndarray, radius: float) -> np.ndarray:
    if len(points) == 0 or len(excluded) == 0:
        return points
    diff = points[:, None, :] - excluded[None, :, :]
    diff -= np.rint(diff)
    return points[np.min(np.linalg.norm(diff, axis=2), axis=1) >= radius]


def solve_forms(basis: FullBasis, G, excluded=None, orders=None,
                settings: SolverSettings = SolverSettings(), refine: bool = False,
                seeds=None) -> SolveResult:
    """All zeros on A of the two linear forms G (2, 4d), away from excluded points.

    The forms must define even functions. Grid seeds run in two passes: the
    even-index sub-lattice first, then the rest, which may stop early next to
    a root the first pass already polished. With ``refine`` the seeds come
    from the grid twice as fine and the first pass (the original grid) must
    find as many roots as both passes together, otherwise CountUnstable.
    Explicit ``seeds`` (torus coordinates) replace the grid and disable
    refinement.
    """
    _kernels.configure_threads()
    G = np.asarray(G, dtype=complex)
    if G.shape != (2, basis.size):
        raise ValueError(f"expected forms of shape (2, {basis.size}), got {G.shape}")
    excluded = np.zeros((0, 4)) if excluded is None else np.asarray(excluded, float).reshape(-1, 4)
    if orders is None:
        orders = np.ones(len(excluded), dtype=np.int64)
    orders = np.asarray(orders, dtype=np.int64)
    cheap = _cheap_basis(basis)
    C = basis.system_coefficients(G)
    Cf = cheap.system_coefficients(G)
    _, _, o1, o2 = basis.dense_layout
    _, _, p1, p2 = cheap.dense_layout
    s = basis.surface

    def run(batch, known):
        pts, status, _, resid = _kernels.newton_batch(
            np.ascontiguousarray(batch), Cf, p1, p2, C, o1, o2, s.Omega, s.Yinv, float(s.d),
            excluded, orders, settings.exclusion_radius, settings.max_iter, settings.step_tol,
            settings.step_cap, np.ascontiguousarray(known))
        good = ((status == _kernels.CONVERGED) & (resid < settings.newton_tol)) \
            | (status == _kernels.KNOWN)
        return pts[good], int(np.sum(good)), int(np.sum(status == _kernels.EXCLUDED))

    if seeds is not None:
        refine = False
        grid = 0
        seeds = np.mod(np.asarray(seeds, dtype=float).reshape(-1, 4), 1.0)
        first = np.ones(len(seeds), dtype=bool)
    else:
        grid = 2 * settings.grid if refine else settings.grid
        seeds, first = seed_grid(grid)
    pts1, n_good, n_excluded = run(seeds[first], np.zeros((0, 4)))
    roots1 = _outside(close_under_negation(pts1, settings.dedup_radius), excluded,
                      settings.exclusion_radius)
    found = roots1
    if not np.all(first):
        pts2, g2, e2 = run(seeds[~first], roots1)
        n_good += g2
        n_excluded += e2
        found = _outside(close_under_negation(np.vstack([roots1, pts2]), settings.dedup_radius),
                         excluded, settings.exclusion_radius)
    if n_good == 0 and n_excluded == 0:
        raise FiberSearchFailed(f"Newton stagnated from all {len(seeds)} seeds")
    coarse, cpts = None, None
    if refine:
        cpts = roots1
        coarse = len(cpts)
        if coarse != len(found):
            raise CountUnstable(f"{coarse} solutions at grid {settings.grid} but {len(found)} "
                                f"at grid {grid}")
    res = _kernels.residuals_at(np.ascontiguousarray(found), C, o1, o2, s.Omega, float(s.d)) \
        if len(found) else np.zeros(0)
    return SolveResult(found, res, grid, coarse, cpts, len(seeds), n_good, n_excluded)
