"""End-to-end run: construct, measure degrees, project, certify, audit, report."""
from __future__ import annotations

import json
import math
import os
import platform
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__
from .audit import AuditCheck, audit_no_fixed_chain, audit_profile
from .errors import (InconsistentDegrees, InvalidConfig, IrrmapError, ProfileViolation)
from .mapping import RationalMapEval, estimate_degrees
from .profile import (MultiplicityProfile, condition_matrix, make_profile, solve_subsystem,
                      vanishing_report)
from .projection import CaseBranch, classify_case, compose_to_plane, measure_final_degree, node_images
from .solver import SolverSettings
from .surface import PolarizedAbelianSurface, make_surface, random_siegel
from .theta import even_basis, truncation_radius

REPORT_KEYS = ("d", "omega", "seed", "profile", "dimV", "N", "deg_phi", "deg_S", "branch",
               "projection_centers", "final_degree", "residuals", "audits", "versions")


@dataclass(frozen=True)
class RunConfig:
    d: int
    omega: str = "random:0"  # "random:<seed>", "identity", or a surface descriptor path
    seed: int = 0
    profile: str = "auto"
    grid: int = 16
    n_trials: int = 5
    final_trials: int = 20
    tail_tol: float = 1e-14
    rank_tol: float = 1e-8
    newton_tol: float = 1e-10
    refine: bool = True
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.d, int) or self.d < 1:
            raise InvalidConfig(f"d must be a positive integer, got {self.d!r}")
        if self.omega == "identity":
            pass
        elif self.omega.startswith("random:"):
            try:
                int(self.omega.split(":", 1)[1])
            except ValueError as exc:
                raise InvalidConfig(f"bad random seed in {self.omega!r}") from exc
        elif not Path(self.omega).is_file():
            raise InvalidConfig(f"omega must be 'random:<seed>', 'identity' or a descriptor file, "
                                f"got {self.omega!r}")
        if self.profile != "auto":
            MultiplicityProfile.parse(self.profile)
        if self.grid < 4:
            raise InvalidConfig("grid must be at least 4")
        if self.n_trials < 5:
            raise InvalidConfig("n_trials must be at least 5")
        if self.final_trials < 1:
            raise InvalidConfig("final_trials must be positive")
        for name in ("tail_tol", "rank_tol", "newton_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidConfig(f"{name} must lie in (0, 1), got {v!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        if "d" not in data:
            raise InvalidConfig("config needs d")
        return cls(**data)

    def settings(self) -> SolverSettings:
        return SolverSettings(grid=self.grid, newton_tol=self.newton_tol)


def load_surface(omega: str, d: int) -> PolarizedAbelianSurface:
    if omega == "identity":
        return make_surface(1j * np.eye(2), d)
    if omega.startswith("random:"):
        return make_surface(random_siegel(int(omega.split(":", 1)[1]), d=d), d)
    try:
        desc = json.loads(Path(omega).read_text(encoding="utf-8"))
        surface = PolarizedAbelianSurface.from_descriptor(desc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidConfig(f"cannot read surface descriptor {omega!r}: {exc}") from exc
    if surface.d != d:
        raise InvalidConfig(f"descriptor has d = {surface.d}, config asks for {d}")
    return surface


def resolve_profile(text: str, d: int) -> MultiplicityProfile:
    if text == "auto":
        return make_profile(d)
    return MultiplicityProfile.parse(text)


def _clean(value):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, ensure_ascii=False) + "\n"


def write_report(report: dict, path) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_report(report)
    fd, tmp = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def versions() -> dict:
    return {
        "irrmap": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _empty_report(config: RunConfig) -> dict:
    report = {k: None for k in REPORT_KEYS}
    report.update(d=config.d, seed=config.seed, projection_centers=[], residuals={}, audits=[],
                  versions=versions())
    return report


def run_pipeline(config: RunConfig) -> dict:
    """Run every stage and return the report (also written to config.out if set).

    On failure the report filled up to the failing stage, plus an "error"
    entry, is written to config.out and attached to the raised error as
    ``exc.report``.
    """
    report = _empty_report(config)
    try:
        _run(config, report)
    except IrrmapError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        exc.report = report
        if config.out:
            write_report(report, config.out)
        raise
    if config.out:
        write_report(report, config.out)
    return report


def _run(config: RunConfig, report: dict) -> None:
    d = config.d
    seeds = [int(s) for s in np.random.default_rng(config.seed).integers(0, 2**31, size=4)]
    surface = load_surface(config.omega, d)
    report["omega"] = surface.omega.to_json()
    profile = resolve_profile(config.profile, d)
    report["profile"] = list(profile.a)

    audits = audit_profile(d, profile.a)
    report["audits"] = audits.to_json()
    failed = [c.name for c in audits.checks if not c.passed]
    if failed:
        raise ProfileViolation(f"profile audit failed: {', '.join(failed)}")
    profile.validate(d)

    trunc = truncation_radius(surface, config.tail_tol)
    basis = even_basis(surface, trunc, config.rank_tol)
    cond = condition_matrix(basis, profile)
    V = solve_subsystem(cond, config.rank_tol)
    report["dimV"] = V.dim
    report["N"] = V.N
    vanish = vanishing_report(V)
    residuals = {
        "series_tail": trunc.tail_bound,
        "parity_max_odd": cond.max_odd,
        "subsystem": V.residual,
        "subsystem_gap": V.gap if V.gap is not None else float("inf"),
        "vanishing_below_order": vanish.max_below,
    }
    report["residuals"] = residuals

    # multiplicities of a general member, measured from its Taylor expansion
    audits.extend(audit_no_fixed_chain(d, profile.a, vanish.orders))
    audits.checks.append(AuditCheck("measured_orders_sharp",
                                    sum(vanish.orders), sum(2 * a for a in profile.a)))
    report["audits"] = audits.to_json()

    settings = config.settings()
    m = RationalMapEval(V)
    est = estimate_degrees(m, config.n_trials, seeds[0], settings, config.refine)
    report["deg_phi"] = est.deg_phi
    report["deg_S"] = est.deg_S
    residuals["degree_fibers"] = est.max_residual
    bound = 8 * d - sum(o * o for o in vanish.orders)
    audits.checks.append(AuditCheck("measured_product_vs_strict_transform", est.product, bound, "<="))
    audits.checks.append(AuditCheck("measured_product_vs_8", est.product, 8, "<="))
    audits.checks.append(AuditCheck("measured_deg_phi_even", est.deg_phi % 2, 0))
    report["audits"] = audits.to_json()

    branch = classify_case(est)
    report["branch"] = branch.value
    if branch is CaseBranch.ANOMALOUS:
        raise InconsistentDegrees(f"degree pair ({est.deg_phi}, {est.deg_S}) fits neither branch")

    nodes = node_images(m, seeds[1])
    residuals["node_separation"] = nodes.separation
    audits.checks.append(AuditCheck("node_images_distinct", int(nodes.distinct), 1))
    audits.checks.append(AuditCheck("node_tangent_rank", sum(nodes.tangent_ranks), 0))

    composed = compose_to_plane(m, branch, seeds[2], est, settings)
    report["projection_centers"] = [c.to_json() for c in composed.projection_centers]
    cert = measure_final_degree(composed, config.final_trials, seeds[3], settings, config.refine)
    report["final_degree"] = cert.degree
    residuals["final_fibers"] = cert.max_residual
    audits.checks.append(AuditCheck("final_degree_at_most_4", cert.degree, 4, "<="))
    report["audits"] = audits.to_json()
    report["details"] = {
        "grid": config.grid,
        "refined_grid": 2 * config.grid if config.refine else None,
        "fiber_counts": est.fiber_counts,
        "line_counts": est.line_counts,
        "hyperplane_count": est.hyperplane_count,
        "vanishing_orders": list(vanish.orders),
        "nodes": nodes.to_json(),
        "projection_degrees": cert.projection_degrees,
        "final_counts": cert.counts,
    }
    if not audits.passed:
        bad = [c.name for c in audits.checks if not c.passed]
        raise InconsistentDegrees(f"audit checks failed: {', '.join(bad)}")
    # keep the schema order, with details just before versions
    ordered = {k: report[k] for k in REPORT_KEYS if k != "versions"}
    ordered["details"] = report["details"]
    ordered["versions"] = report["versions"]
    report.clear()
    report.update(ordered)
