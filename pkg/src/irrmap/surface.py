"""Polarized abelian surfaces A = C^2 / (Omega Z^2 + D Z^2), D = diag(1, d)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidPeriodMatrix

LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class PeriodMatrix:
    """Symmetric 2x2 complex matrix with positive-definite imaginary part.

    Only the upper triangle is stored, so symmetry holds by construction.
    """

    tau11: complex
    tau12: complex
    tau22: complex

    def __post_init__(self):
        Y = self.matrix.imag
        if not np.all(np.isfinite(self.matrix)):
            raise InvalidPeriodMatrix("period matrix has non-finite entries")
        eig = np.linalg.eigvalsh(Y)
        if eig[0] <= 0:
            raise InvalidPeriodMatrix(f"Im(Omega) is not positive-definite (eigenvalues {eig})")

    @classmethod
    def from_array(cls, omega) -> "PeriodMatrix":
        omega = np.asarray(omega, dtype=complex)
        if omega.shape != (2, 2):
            raise InvalidPeriodMatrix(f"expected a 2x2 matrix, got shape {omega.shape}")
        if omega[0, 1] != omega[1, 0]:
            raise InvalidPeriodMatrix("period matrix is not symmetric")
        return cls(complex(omega[0, 0]), complex(omega[0, 1]), complex(omega[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.tau11, self.tau12], [self.tau12, self.tau22]], dtype=complex)

    def to_json(self) -> list:
        m = self.matrix
        return [[[float(m[i, j].real), float(m[i, j].imag)] for j in range(2)] for i in range(2)]

    @classmethod
    def from_json(cls, rows) -> "PeriodMatrix":
        try:
            omega = np.array([[complex(re, im) for re, im in row] for row in rows])
        except (TypeError, ValueError) as exc:
            raise InvalidPeriodMatrix(f"malformed omega descriptor: {rows!r}") from exc
        return cls.from_array(omega)


def random_siegel(seed: int, spread: float = 1.0, d: int = 1) -> PeriodMatrix:
    """Sample a period matrix with a seeded generator.

    The imaginary part is S Y0 S with S = diag(1, sqrt(d)) and Y0 a 2x2
    positive-definite matrix of scale 0.8 * spread whose correlation is drawn
    from +-[0.4, 0.7]; Re(Omega_12) is drawn from +-[1/4, 1/2]. This keeps the
    lattice balanced for the type-(1, d) polarization and away from the
    product locus Omega_12 = 0, where jets of theta functions at a point become
    numerically dependent. Such a sample is very general (Picard number one)
    with probability one; this is assumed downstream, not verified.
    """
    if not spread > 0:
        raise ValueError("spread must be positive")
    if d < 1:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(seed)
    x11, x22 = rng.uniform(-0.5, 0.5, size=2)
    x12 = rng.uniform(0.25, 0.5) * rng.choice([-1.0, 1.0])
    y1, y2 = 0.8 * spread * (1.0 + rng.uniform(-0.2, 0.2, size=2))
    rho = rng.uniform(0.4, 0.7) * rng.choice([-1.0, 1.0])
    Y0 = np.array([[y1, rho * math.sqrt(y1 * y2)], [rho * math.sqrt(y1 * y2), y2]])
    S = np.diag([1.0, math.sqrt(d)])
    Y = S @ Y0 @ S
    return PeriodMatrix(complex(x11, Y[0, 0]), complex(x12, Y[0, 1]), complex(x22, Y[1, 1]))


def _pfaffian4(E: np.ndarray) -> int:
    return int(E[0, 1] * E[2, 3] - E[0, 2] * E[1, 3] + E[0, 3] * E[1, 2])


def elementary_divisors(E: np.ndarray) -> tuple[int, int]:
    """Elementary divisors (e1, e2) of a 4x4 integral alternating matrix.

    e1 is the gcd of the entries and e1 * e2 = |Pf(E)|.
    """
    E = np.asarray(E, dtype=np.int64)
    g = 0
    for v in E.flat:
        g = math.gcd(g, int(v))
    pf = abs(_pfaffian4(E))
    if g == 0:
        return (0, 0)
    return (g, pf // g)


@dataclass(frozen=True)
class TwoTorsionPoint:
    index: int
    half_coords: tuple[tuple[int, int], tuple[int, int]]
    z: np.ndarray = field(compare=False, repr=False)

    @property
    def a(self) -> tuple[int, int]:
        return self.half_coords[0]

    @property
    def b(self) -> tuple[int, int]:
        return self.half_coords[1]

    @property
    def torus_coords(self) -> np.ndarray:
        return np.array([*self.a, *self.b], dtype=float) / 2


@dataclass(frozen=True)
class PolarizedAbelianSurface:
    omega: PeriodMatrix
    d: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"polarization type (1, d) needs an integer d >= 1, got {self.d!r}")

    @cached_property
    def Omega(self) -> np.ndarray:
        return self.omega.matrix

    @cached_property
    def X(self) -> np.ndarray:
        return self.Omega.real

    @cached_property
    def Y(self) -> np.ndarray:
        return self.Omega.imag

    @cached_property
    def Yinv(self) -> np.ndarray:
        return np.linalg.inv(self.Y)

    @cached_property
    def D(self) -> np.ndarray:
        return np.diag([1.0, float(self.d)])

    @cached_property
    def lattice_basis(self) -> np.ndarray:
        """2x4 complex matrix [Omega | D]; columns generate the lattice."""
        return np.hstack([self.Omega, self.D.astype(complex)])

    @cached_property
    def hermitian_form_L(self) -> np.ndarray:
        # H(z, w) = z^T Y^{-1} conj(w)
        return self.Yinv.astype(complex)

    @cached_property
    def alternating_form_E(self) -> np.ndarray:
        Pi = self.lattice_basis
        E = np.imag(Pi.T @ self.hermitian_form_L @ Pi.conj())
        Ei = np.rint(E)
        if np.max(np.abs(E - Ei)) > 1e-8:
            raise InvalidPeriodMatrix("alternating form is not integral on the lattice")
        return Ei.astype(np.int64)

    @property
    def self_intersection(self) -> int:
        """L^2 = 2 Pf(E)."""
        return 2 * abs(_pfaffian4(self.alternating_form_E))

    @property
    def h0_L(self) -> int:
        """h^0(L) = Pf(E) (Riemann-Roch on an abelian surface)."""
        return abs(_pfaffian4(self.alternating_form_E))

    # -- coordinates -------------------------------------------------------

    def to_torus(self, z) -> np.ndarray:
        """Real coordinates (u1, u2, v1, v2) with z = Omega u + D v (not reduced)."""
        z = np.asarray(z, dtype=complex)
        u = z.imag @ self.Yinv.T
        v = (z.real - u @ self.X.T) / np.array([1.0, float(self.d)])
        return np.concatenate([u, v], axis=-1)

    def from_torus(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., :2] @ self.Omega.T + x[..., 2:] * np.array([1.0, float(self.d)])

    def lattice_point(self, n, m) -> np.ndarray:
        return self.Omega @ np.asarray(n, dtype=float) + self.D @ np.asarray(m, dtype=float)

    def in_lattice(self, z, tol: float = LATTICE_TOL) -> bool:
        x = self.to_torus(z)
        return bool(np.all(np.abs(x - np.rint(x)) < tol))

    def torus_distance(self, x, y) -> np.ndarray:
        """Euclidean distance of torus coordinates modulo Z^4."""
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        diff -= np.rint(diff)
        return np.linalg.norm(diff, axis=-1)

    def to_descriptor(self) -> dict:
        return {"d": int(self.d), "omega": self.omega.to_json()}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "PolarizedAbelianSurface":
        return make_surface(PeriodMatrix.from_json(desc["omega"]), int(desc["d"]))


def make_surface(omega, d: int) -> PolarizedAbelianSurface:
    if not isinstance(omega, PeriodMatrix):
        omega = PeriodMatrix.from_array(omega)
    surface = PolarizedAbelianSurface(omega, int(d))
    if elementary_divisors(surface.alternating_form_E) != (1, surface.d):
        raise InvalidPeriodMatrix("alternating form does not have type (1, d)")
    return surface


def two_torsion_points(surface: PolarizedAbelianSurface) -> list[TwoTorsionPoint]:
    """The 16 points (Omega a + D b)/2, index = 1 + 8 a1 + 4 a2 + 2 b1 + b2."""
    pts = []
    for a1 in (0, 1):
        for a2 in (0, 1):
            for b1 in (0, 1):
                for b2 in (0, 1):
                    idx = 1 + 8 * a1 + 4 * a2 + 2 * b1 + b2
                    z = surface.lattice_point((a1, a2), (b1, b2)) / 2
                    pts.append(TwoTorsionPoint(idx, ((a1, a2), (b1, b2)), z))
    return pts
