import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from irrmap.errors import InvalidPeriodMatrix
from irrmap.surface import (PeriodMatrix, PolarizedAbelianSurface, elementary_divisors,
                            make_surface, random_siegel, two_torsion_points)

from conftest import surface_for


def test_identity_period_matrix_accepted():
    s = make_surface(1j * np.eye(2), 1)
    assert s.self_intersection == 2
    assert s.h0_L == 1


@pytest.mark.parametrize("omega", [
    np.array([[1j, 0.2], [0.3, 1j]]),       # not symmetric
    np.array([[1j, 0], [0, -1j]]),          # Im not positive
    np.array([[1j, 2j], [2j, 1j]]),         # Im indefinite
    np.eye(3) * 1j,                         # wrong shape
])
def test_invalid_period_matrices_rejected(omega):
    with pytest.raises(InvalidPeriodMatrix):
        make_surface(omega, 1)


@given(st.integers(0, 10**6), st.integers(1, 12))
def test_random_siegel_is_valid_and_has_type_1_d(seed, d):
    om = random_siegel(seed, d=d)
    assert np.all(np.linalg.eigvalsh(om.matrix.imag) > 0)
    s = make_surface(om, d)
    assert elementary_divisors(s.alternating_form_E) == (1, d)
    assert s.self_intersection == 2 * d
    assert s.h0_L == d


def test_random_siegel_is_deterministic():
    assert random_siegel(5, d=3) == random_siegel(5, d=3)
    assert random_siegel(5, d=3) != random_siegel(6, d=3)


def test_random_siegel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        random_siegel(0, spread=0.0)
    with pytest.raises(ValueError):
        random_siegel(0, d=0)


def test_elementary_divisors_of_standard_form():
    for d in (1, 2, 7):
        E = np.zeros((4, 4), dtype=np.int64)
        E[0, 2], E[1, 3] = 1, d
        E -= E.T
        assert elementary_divisors(E) == (1, d)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_torus_coordinates_round_trip(x):
    s = surface_for(3)
    x = np.array(x)
    assert np.allclose(s.to_torus(s.from_torus(x)), x, atol=1e-12)


def test_lattice_membership():
    s = surface_for(2)
    assert s.in_lattice(s.lattice_point([1, -2], [3, 1]))
    assert not s.in_lattice(s.lattice_point([0.5, 0], [0, 0]))


def test_two_torsion_points_layout():
    s = surface_for(2)
    pts = two_torsion_points(s)
    assert [p.index for p in pts] == list(range(1, 17))
    for p in pts:
        a1, a2 = p.a
        b1, b2 = p.b
        assert p.index == 1 + 8 * a1 + 4 * a2 + 2 * b1 + b2
        assert s.in_lattice(2 * p.z)
        assert not s.in_lattice(p.z) or p.index == 1
    assert np.allclose(pts[0].z, 0)


def test_descriptor_round_trip(tmp_path):
    s = surface_for(5, 3)
    path = tmp_path / "surface.json"
    path.write_text(json.dumps(s.to_descriptor()))
    t = PolarizedAbelianSurface.from_descriptor(json.loads(path.read_text()))
    assert t == s
    assert PeriodMatrix.from_json(s.omega.to_json()) == s.omega


def test_malformed_descriptor():
    with pytest.raises(InvalidPeriodMatrix):
        PeriodMatrix.from_json([[1, 2], [3]])
