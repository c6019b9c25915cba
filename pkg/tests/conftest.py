import functools
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from irrmap.mapping import RationalMapEval
from irrmap.profile import condition_matrix, make_profile, solve_subsystem
from irrmap.surface import make_surface, random_siegel
from irrmap.theta import FullBasis, even_basis

settings.register_profile("irrmap", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("irrmap")
warnings.filterwarnings("ignore", module="numba")


@functools.lru_cache(maxsize=None)
def surface_for(d: int, seed: int = 0):
    return make_surface(random_siegel(seed, d=d), d)


@functools.lru_cache(maxsize=None)
def full_basis_for(d: int, seed: int = 0):
    return FullBasis(surface_for(d, seed))


@functools.lru_cache(maxsize=None)
def even_basis_for(d: int, seed: int = 0):
    return even_basis(surface_for(d, seed))


@functools.lru_cache(maxsize=None)
def subsystem_for(d: int, seed: int = 0):
    return solve_subsystem(condition_matrix(even_basis_for(d, seed), make_profile(d)))


@functools.lru_cache(maxsize=None)
def map_for(d: int, seed: int = 0):
    return RationalMapEval(subsystem_for(d, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
