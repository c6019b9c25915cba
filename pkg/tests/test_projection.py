import numpy as np
import pytest

from irrmap import projection
from irrmap.errors import DegreeBoundViolated, InconsistentDegrees, MeasuredDegreeTwo
from irrmap.mapping import DegreeEstimate, FiberReport, RationalMapEval, estimate_degrees
from irrmap.profile import condition_matrix, make_profile, solve_subsystem
from irrmap.projection import (CaseBranch, classify_case, compose_to_plane, measure_final_degree,
                               node_images, projection_away_from)
from irrmap.surface import make_surface
from irrmap.theta import even_basis

from conftest import map_for


def est(phi, S):
    return DegreeEstimate(phi, S, phi * S, 5, 1.0)


def test_classify_case():
    assert classify_case(est(2, 4)) is CaseBranch.TWO_FOUR
    assert classify_case(est(4, 2)) is CaseBranch.FOUR_TWO
    for pair in [(2, 2), (2, 3), (6, 1), (8, 1)]:
        assert classify_case(est(*pair)) is CaseBranch.ANOMALOUS


def test_projection_kernel_is_the_center():
    rng = np.random.default_rng(0)
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    P = projection_away_from(c)
    assert P.shape == (4, 5)
    assert np.linalg.norm(P @ c) < 1e-12
    assert np.linalg.matrix_rank(P) == 4


@pytest.mark.parametrize("d", [1, 3])
def test_node_images_are_distinct_double_points(d):
    nodes = node_images(map_for(d), seed=0)
    assert nodes.distinct
    assert nodes.tangent_ranks == (0, 0)
    js = nodes.to_json()
    assert set(js) == {"separation", "tangent_ranks", "local_sheets"}


def test_anomalous_branch_has_no_projection():
    with pytest.raises(InconsistentDegrees):
        compose_to_plane(map_for(1), CaseBranch.ANOMALOUS)


def test_two_four_branch_end_to_end():
    m = map_for(1)
    e = estimate_degrees(m, 5, seed=0, refine=False)
    assert classify_case(e) is CaseBranch.TWO_FOUR
    c = compose_to_plane(m, CaseBranch.TWO_FOUR, seed=0, est=e)
    assert c.center_labels[-1] in ("q15", "q16")
    assert c.projection_degrees and set(c.projection_degrees) == {2}
    cert = measure_final_degree(c, n_trials=3, seed=0, refine=False)
    assert cert.degree == 4
    assert cert.max_residual < 1e-8


def test_four_two_branch_on_product_surface():
    s = make_surface(1j * np.eye(2), 1)
    m = RationalMapEval(solve_subsystem(condition_matrix(even_basis(s), make_profile(1))))
    e = estimate_degrees(m, 5, seed=0, refine=False)
    c = compose_to_plane(m, classify_case(e), seed=0, est=e)
    assert c.center_labels == ["on_image"]
    cert = measure_final_degree(c, n_trials=3, seed=0, refine=False)
    assert cert.degree == 4


def _fake_fiber(count):
    def fake(lm, z, settings=None, seed=0, refine=False, **kw):
        sols = np.tile(lm.surface.to_torus(z), (count, 1))
        return FiberReport(np.ones(3), sols, np.zeros(count), count, 8, 16)
    return fake


@pytest.mark.parametrize("count, error", [(2, MeasuredDegreeTwo), (3, InconsistentDegrees),
                                          (6, DegreeBoundViolated)])
def test_final_degree_guards(monkeypatch, count, error):
    m = map_for(1)
    e = estimate_degrees(m, 5, seed=0, refine=False)
    c = compose_to_plane(m, classify_case(e), seed=0, est=e)
    monkeypatch.setattr(projection, "fiber", _fake_fiber(count))
    monkeypatch.setattr(projection, "distinct_images", lambda lm, pts: 1)
    with pytest.raises(error):
        measure_final_degree(c, n_trials=3, seed=0, refine=False)


def test_final_degree_checks_multiplicativity(monkeypatch):
    m = map_for(1)
    e = estimate_degrees(m, 5, seed=0, refine=False)
    c = compose_to_plane(m, classify_case(e), seed=0, est=e)
    monkeypatch.setattr(projection, "fiber", _fake_fiber(4))
    monkeypatch.setattr(projection, "distinct_images", lambda lm, pts: 1)
    with pytest.raises(InconsistentDegrees):
        measure_final_degree(c, n_trials=3, seed=0, refine=False)
