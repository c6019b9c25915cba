"""Case split on measured degrees, projection to the plane, and the final degree certificate."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import (BadCenter, CountUnstable, DegreeBoundViolated, InconsistentDegrees,
                     MeasuredDegreeTwo, NumericalFailure, ProfileViolation, RankAmbiguous)
from .mapping import (DegreeEstimate, Indeterminate, LinearMap, RationalMapEval, _sin_angle,
                      distinct_images, eval_map, fiber, jacobian_rank, normalize_projective,
                      random_regular_point)
from .solver import SolverSettings, solve_forms
from .surface import two_torsion_points

MAX_CENTER_ATTEMPTS = 5
RANK_SAMPLES = 8
FINAL_CEILING = 4
NODE_SEPARATION_TOL = 1e-6
LOCAL_RADIUS = 1e-2


class CaseBranch(str, Enum):
    TWO_FOUR = "TwoFour"
    FOUR_TWO = "FourTwo"
    ANOMALOUS = "Anomalous"


def classify_case(est: DegreeEstimate) -> CaseBranch:
    if (est.deg_phi, est.deg_S) == (2, 4):
        return CaseBranch.TWO_FOUR
    if (est.deg_phi, est.deg_S) == (4, 2):
        return CaseBranch.FOUR_TWO
    return CaseBranch.ANOMALOUS


@dataclass
class NodeImages:
    q15: np.ndarray
    q16: np.ndarray
    separation: float  # sine of the angle between the two image vectors
    tangent_ranks: tuple[int, int]
    local_sheets: tuple[int, int]  # preimages near p_i of a target near q_i

    @property
    def distinct(self) -> bool:
        return self.separation > NODE_SEPARATION_TOL

    def to_json(self) -> dict:
        return {
            "separation": self.separation,
            "tangent_ranks": list(self.tangent_ranks),
            "local_sheets": list(self.local_sheets),
        }


def _local_sheets(lm: LinearMap, p, rng: np.random.Generator) -> int:
    # solutions near p of phi(z) = phi(p + eps w), seeded in a small box around p
    s = lm.surface
    w = rng.normal(size=4)
    w *= LOCAL_RADIUS / np.linalg.norm(w)
    x = p.torus_coords + w
    target = eval_map(lm, s.from_torus(x))
    if isinstance(target, Indeterminate):
        return 0
    offsets = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * 4)).reshape(4, -1).T
    seeds = p.torus_coords + 1.5 * LOCAL_RADIUS * offsets + 0.1 * LOCAL_RADIUS * rng.normal(size=(len(offsets), 4))
    n = len(target)
    c = rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))
    c = c - np.outer(c @ target, target.conj()) / np.vdot(target, target)
    res = solve_forms(lm.basis, c @ lm.W, lm.excluded, lm.orders, seeds=seeds)
    if res.count == 0:
        return 0
    vals = lm.sections(s.from_torus(res.points))
    near = s.torus_distance(res.points, p.torus_coords) < 4 * LOCAL_RADIUS
    on = np.array([_sin_angle(v, target) < 1e-6 for v in vals])
    return int(np.sum(near & on))


def node_images(m: RationalMapEval, seed: int = 0, local_check: bool = True) -> NodeImages:
    """Images of p_15 and p_16, with local evidence that they are double points."""
    lm = m.linear
    pts = {p.index: p for p in two_torsion_points(m.surface)}
    rng = np.random.default_rng(seed)
    images, ranks, sheets = [], [], []
    for idx in (15, 16):
        p = pts[idx]
        q = eval_map(lm, p.z)
        if isinstance(q, Indeterminate):
            raise ProfileViolation(f"the map is undefined at p_{idx}: {q.reason}")
        images.append(q)
        ranks.append(jacobian_rank(lm, p.z))
        sheets.append(_local_sheets(lm, p, rng) if local_check else 0)
    return NodeImages(images[0], images[1], _sin_angle(images[0], images[1]), tuple(ranks),
                      tuple(sheets))


def projection_away_from(center) -> np.ndarray:
    """Linear map C^n -> C^(n-1) whose kernel is the line through ``center``."""
    c = np.asarray(center, dtype=complex)
    K = scipy.linalg.null_space(c[None, :])
    return K.T


@dataclass
class ProjectionCenter:
    label: str  # "general", "q15", "q16" or "on_image"
    ambient_dim: int
    point: np.ndarray

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "ambient_dim": int(self.ambient_dim),
            "point": [[float(c.real), float(c.imag)] for c in normalize_projective(self.point)],
        }


@dataclass
class ComposedMap:
    source: RationalMapEval
    branch: CaseBranch
    projection: np.ndarray  # (3, N + 1), applied to the section vector of V
    projection_centers: list[ProjectionCenter]
    linear: LinearMap
    final_ambient: int = 2
    deg_phi: int | None = None
    projection_degrees: list[int] = field(default_factory=list)

    @property
    def center_labels(self) -> list[str]:
        return [c.label for c in self.projection_centers]


def _immersive_somewhere(lm: LinearMap, rng: np.random.Generator) -> bool:
    s = lm.surface
    for _ in range(RANK_SAMPLES):
        z = s.from_torus(rng.uniform(0.0, 1.0, size=4))
        if isinstance(eval_map(lm, z), Indeterminate):
            continue
        try:
            if jacobian_rank(lm, z) == 2:
                return True
        except RankAmbiguous:
            continue
    return False


def _measure_projection_degree(phi: LinearMap, psi: LinearMap, rng, settings, probes: int):
    """(fiber counts of psi, distinct phi-images per fiber) over a few random targets."""
    counts, degrees = [], []
    for _ in range(probes):
        z = random_regular_point(psi, rng)
        rep = fiber(psi, z, settings=settings, seed=int(rng.integers(2**32)))
        counts.append(rep.count)
        degrees.append(distinct_images(phi, rep.solutions))
    return counts, degrees


def compose_to_plane(m: RationalMapEval, branch: CaseBranch, seed: int = 0,
                     est: DegreeEstimate | None = None,
                     settings: SolverSettings = SolverSettings(), probes: int = 2) -> ComposedMap:
    """Project the image of phi down to P^2.

    Extra dimensions are removed by projecting from random points. The last
    step projects from the node image q15 (falling back to q16 when the
    measured projection degree from q15 is not deg S - 2) for TwoFour, and
    from a point of the image quadric for FourTwo.
    """
    branch = CaseBranch(branch)
    if branch is CaseBranch.ANOMALOUS:
        raise InconsistentDegrees("no projection is defined for an anomalous degree pair")
    lm = m.linear
    if lm.ambient_dim < 3:
        raise InconsistentDegrees(f"image lies in P^{lm.ambient_dim}, need at least P^3")
    rng = np.random.default_rng(seed)
    P = np.eye(lm.ambient_dim + 1, dtype=complex)
    centers: list[ProjectionCenter] = []
    while P.shape[0] > 4:
        for _ in range(MAX_CENTER_ATTEMPTS):
            c = rng.normal(size=P.shape[0]) + 1j * rng.normal(size=P.shape[0])
            cand = projection_away_from(c) @ P
            probe = LinearMap(lm.basis, cand @ lm.W, lm.excluded, lm.orders, lm.exclusion_radius)
            if _immersive_somewhere(probe, rng):
                break
        else:
            raise BadCenter(f"every random center in P^{P.shape[0] - 1} collapsed the image")
        centers.append(ProjectionCenter("general", P.shape[0] - 1, c))
        P = cand

    base_excl, base_orders = lm.excluded, lm.orders
    deg_phi = est.deg_phi if est is not None else None
    pts = {p.index: p for p in two_torsion_points(m.surface)}

    if branch is CaseBranch.TWO_FOUR:
        expected = est.deg_S - 2 if est is not None else None
        candidates = [("q15", pts[15]), ("q16", pts[16])]
        failures = []
        for label, p in candidates:
            q = P @ lm.sections(p.z)
            Q = projection_away_from(q) @ P
            excl = np.vstack([base_excl, p.torus_coords[None, :]])
            orders = np.append(base_orders, 2)
            psi = LinearMap(lm.basis, Q @ lm.W, excl, orders, lm.exclusion_radius)
            if not _immersive_somewhere(psi, rng):
                failures.append(f"{label}: projection collapses the image")
                continue
            try:
                counts, degrees = _measure_projection_degree(lm, psi, rng, settings, probes)
            except NumericalFailure as exc:
                failures.append(f"{label}: {exc}")
                continue
            consistent = len(set(degrees)) == 1 and (expected is None or degrees[0] == expected)
            if consistent:
                return ComposedMap(m, branch, Q, centers + [ProjectionCenter(label, 3, q)], psi,
                                   deg_phi=deg_phi, projection_degrees=degrees)
            failures.append(f"{label}: projection degrees {degrees}, expected {expected}")
        raise BadCenter("; ".join(failures))

    for _ in range(MAX_CENTER_ATTEMPTS):
        z = random_regular_point(lm, rng)
        rep = fiber(lm, z, settings=settings, seed=int(rng.integers(2**32)))
        c = P @ lm.sections(z)
        Q = projection_away_from(c) @ P
        excl = np.vstack([base_excl, rep.solutions])
        orders = np.append(base_orders, np.ones(len(rep.solutions), dtype=np.int64))
        psi = LinearMap(lm.basis, Q @ lm.W, excl, orders, lm.exclusion_radius)
        if _immersive_somewhere(psi, rng):
            return ComposedMap(m, branch, Q, centers + [ProjectionCenter("on_image", 3, c)], psi,
                               deg_phi=deg_phi)
    raise BadCenter("no center on the image gave a dominant projection")


@dataclass
class FinalDegreeCertificate:
    degree: int
    counts: list[int]
    projection_degrees: list[int]
    stability: float
    max_residual: float
    n_trials: int

    def to_json(self) -> dict:
        return {
            "degree": self.degree, "counts": list(self.counts),
            "projection_degrees": list(self.projection_degrees),
            "stability": self.stability, "max_residual": self.max_residual,
            "n_trials": self.n_trials,
        }


def measure_final_degree(c: ComposedMap, n_trials: int = 20, seed: int = 0,
                         settings: SolverSettings = SolverSettings(),
                         refine: bool = True) -> FinalDegreeCertificate:
    """Fiber counts of the plane map over random image targets, with all sanity checks."""
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    rng = np.random.default_rng(seed)
    phi = c.source.linear
    counts, proj, worst = [], [], 0.0
    for t in range(n_trials):
        z = random_regular_point(c.linear, rng)
        rep = fiber(c.linear, z, settings=settings, seed=int(rng.integers(2**32)),
                    refine=refine and t == 0)
        counts.append(rep.count)
        proj.append(distinct_images(phi, rep.solutions))
        if len(rep.residuals):
            worst = max(worst, float(np.max(rep.residuals)))
    degree, hits = Counter(counts).most_common(1)[0]
    stability = hits / n_trials
    if stability <= 0.5:
        raise CountUnstable(f"no majority among final fiber counts {counts}")
    if degree == 2:
        raise MeasuredDegreeTwo("measured a degree-2 dominant map to the plane, which cannot exist")
    if degree % 2:
        raise InconsistentDegrees(f"final degree {degree} is odd")
    if degree > FINAL_CEILING:
        raise DegreeBoundViolated(f"final degree {degree} exceeds {FINAL_CEILING}")
    pdeg = Counter(proj).most_common(1)[0][0]
    if c.deg_phi is not None and degree != c.deg_phi * pdeg:
        raise InconsistentDegrees(f"final degree {degree} != deg phi {c.deg_phi} x projection "
                                  f"degree {pdeg}")
    return FinalDegreeCertificate(degree, counts, proj, stability, worst, n_trials)


def certify_final_degree(c: ComposedMap, n_trials: int = 20, seed: int = 0,
                         settings: SolverSettings = SolverSettings()) -> int:
    return measure_final_degree(c, n_trials, seed, settings).degree
