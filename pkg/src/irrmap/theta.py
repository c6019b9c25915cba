"""Theta functions spanning H^0(A, O_A(2L)) and its even part.

The full basis consists of the 4d functions

    f_c(z) = sum_{l in Z^2} exp(2 pi i k^T Omega k + 4 pi i k^T z),   k = l + c,

with characteristics c in (1/2 Z / Z) x (1/(2d) Z / Z). They share the factor
of automorphy

    f(z + Omega n + D m) = exp(-2 pi i n^T Omega n - 4 pi i n^T z) f(z),

which is the square of the classical characteristic-zero factor of L, so L is
symmetric and f_c(-z) = f_{-c}(z).

Series are never summed at an arbitrary point: z is first reduced so that its
Omega-coordinates lie in [-1/2, 1/2)^2 and the automorphy factor is applied
afterwards. This keeps a single fixed index box adequate everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidPeriodMatrix
from .surface import PolarizedAbelianSurface, TwoTorsionPoint

TAIL_TOL = 1e-14
RANK_TOL = 1e-8


@dataclass(frozen=True)
class TruncationParams:
    """Index box |l_i| <= radii[i] for the series; radius is the larger of the two."""

    radius: int
    tail_bound: float
    radii: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.radii == (0, 0):
            object.__setattr__(self, "radii", (self.radius, self.radius))


def _gauss_tail(alpha: float, rho: float) -> float:
    # sum_{j >= 0} exp(-alpha (rho + j)^2), ratio of consecutive terms <= exp(-2 alpha rho)
    return math.exp(-alpha * rho * rho) / (1.0 - math.exp(-2.0 * alpha * rho))


def _gauss_sum(alpha: float) -> float:
    # sup over shifts of sum_{x in shift + Z} exp(-alpha x^2)
    return 2.0 * (1.0 + 0.5 * math.sqrt(math.pi / alpha))


def _axis_tails(Y: np.ndarray, radii) -> tuple[float, float]:
    # After reduction |u_i| <= 1/2, so an omitted index has |k_i + u_i| >= R_i - 1/2.
    # Minimizing the form over the other coordinate leaves k_i^2 / (Y^-1)_ii.
    Yinv = np.linalg.inv(Y)
    out = []
    for i in (0, 1):
        j = 1 - i
        rho = radii[i] - 0.5
        out.append(2.0 * _gauss_tail(2.0 * math.pi / Yinv[i, i], rho)
                   * _gauss_sum(2.0 * math.pi * Y[j, j]))
    return out[0], out[1]


def truncation_radius(surface: PolarizedAbelianSurface, tol: float = TAIL_TOL) -> TruncationParams:
    """Smallest index box whose omitted tail is below ``tol``.

    The bound is relative to exp(2 pi u^T Y u), the size of the largest
    possible term at a reduced point.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    Y = surface.Y
    if np.linalg.eigvalsh(Y)[0] <= 0:
        raise InvalidPeriodMatrix("series decay form is not positive-definite")
    radii = [1, 1]
    for i in (0, 1):
        while _axis_tails(Y, radii)[i] >= tol / 2:
            radii[i] += 1
    return _params(Y, tuple(radii))


def _params(Y: np.ndarray, radii) -> TruncationParams:
    radii = (int(radii[0]), int(radii[1]))
    return TruncationParams(max(radii), float(sum(_axis_tails(Y, radii))), radii)


class FullBasis:
    """The 4d theta functions of O_A(2L), truncated to a box of indices."""

    def __init__(self, surface: PolarizedAbelianSurface, truncation: TruncationParams | None = None):
        self.surface = surface
        self.truncation = truncation or truncation_radius(surface)
        d = surface.d
        # f = a * 2d + b  <->  c = (a/2, b/(2d))
        self.char_index = np.array([(a, b) for a in range(2) for b in range(2 * d)], dtype=np.int64)
        self.chars = self.char_index / np.array([2.0, 2.0 * d])
        self._coef_cache = {}

    @property
    def size(self) -> int:
        return len(self.chars)

    @property
    def radii(self) -> tuple[int, int]:
        return self.truncation.radii

    def with_radii(self, radii) -> "FullBasis":
        return FullBasis(self.surface, _params(self.surface.Y, radii))

    def negation_index(self) -> np.ndarray:
        """Permutation sending f_c to f_{-c}."""
        d = self.surface.d
        a, b = self.char_index.T
        return ((-a) % 2) * 2 * d + (-b) % (2 * d)

    def frequencies(self, radii=None) -> tuple[np.ndarray, np.ndarray]:
        """k-values per function on the box: arrays (F, P1) and (F, P2)."""
        R1, R2 = self.radii if radii is None else radii
        k1 = self.chars[:, 0, None] + np.arange(-R1, R1 + 1, dtype=float)[None, :]
        k2 = self.chars[:, 1, None] + np.arange(-R2, R2 + 1, dtype=float)[None, :]
        return k1, k2

    def coefficients(self, radii=None) -> np.ndarray:
        """exp(2 pi i k^T Omega k) on the box, array (F, P1, P2)."""
        radii = tuple(self.radii if radii is None else radii)
        if radii not in self._coef_cache:
            k1, k2 = self.frequencies(radii)
            k1 = k1[:, :, None]
            k2 = k2[:, None, :]
            Om = self.surface.Omega
            q = Om[0, 0] * k1 * k1 + 2 * Om[0, 1] * k1 * k2 + Om[1, 1] * k2 * k2
            self._coef_cache[radii] = np.exp(2j * np.pi * q)
        return self._coef_cache[radii]

    @cached_property
    def dense_layout(self) -> tuple[np.ndarray, np.ndarray, int, int]:
        """All retained terms on one rectangle of doubled frequencies.

        Returns (coef, owner, o1, o2): entry [i1, i2] is the term with
        2 k1 = i1 - o1 and 2 d k2 = i2 - o2, owner the basis function it
        belongs to. Every entry is owned since characteristics tile the box.
        """
        d = self.surface.d
        R1, R2 = self.radii
        o1, o2 = 2 * R1, 2 * d * R2
        coef = np.zeros((4 * R1 + 2, 2 * d * (2 * R2 + 1)), dtype=complex)
        owner = np.full(coef.shape, -1, dtype=np.int64)
        C = self.coefficients()
        l1 = np.arange(-R1, R1 + 1)
        l2 = np.arange(-R2, R2 + 1)
        for f, (a, b) in enumerate(self.char_index):
            i1 = a + 2 * l1 + o1
            i2 = b + 2 * d * l2 + o2
            coef[np.ix_(i1, i2)] = C[f]
            owner[np.ix_(i1, i2)] = f
        assert np.all(owner >= 0)
        return coef, owner, o1, o2

    def system_coefficients(self, G) -> np.ndarray:
        """Dense kernel coefficients for the linear forms G (k, F) of the basis."""
        coef, owner, _, _ = self.dense_layout
        G = np.asarray(G, dtype=complex)
        return np.ascontiguousarray(G[:, owner] * coef[None])

    # -- evaluation --------------------------------------------------------

    def reduce(self, z):
        """Split z = z_red + Omega n + D m with Omega-coordinates of z_red in [-1/2, 1/2)."""
        s = self.surface
        z = np.asarray(z, dtype=complex)
        x = s.to_torus(z)
        n = np.floor(x[..., :2] + 0.5)
        m = np.floor(x[..., 2:])
        z_red = z - n @ s.Omega.T - m * np.array([1.0, float(s.d)])
        return z_red, n

    def automorphy_factor(self, n, z) -> np.ndarray:
        """e_lambda(z) for lambda = Omega n + D m (independent of m)."""
        n = np.asarray(n, dtype=float)
        z = np.asarray(z, dtype=complex)
        quad = np.einsum("...i,ij,...j->...", n, self.surface.Omega, n)
        return np.exp(-2j * np.pi * quad - 4j * np.pi * np.sum(n * z, axis=-1))

    def evaluate(self, z, derivatives: bool = False):
        """Values (..., F) at points z (..., 2); optionally also dz-derivatives (..., F, 2)."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape[:-1]
        zf = z.reshape(-1, 2)
        z_red, n = self.reduce(zf)
        vals, ders = self._evaluate_reduced(z_red, derivatives)
        fac = self.automorphy_factor(n, z_red)[:, None]
        vals = vals * fac
        if not derivatives:
            return vals.reshape(*shape, self.size)
        # d/dz [e(z) f(z)] = e(z) (f'(z) - 4 pi i n f(z))
        ders = ders * fac[:, :, None] - 4j * np.pi * vals[:, :, None] * n[:, None, :]
        return vals.reshape(*shape, self.size), ders.reshape(*shape, self.size, 2)

    def _evaluate_reduced(self, z, derivatives: bool):
        k1, k2 = self.frequencies()
        C = self.coefficients()
        E1 = np.exp(4j * np.pi * z[:, None, None, 0] * k1[None])
        E2 = np.exp(4j * np.pi * z[:, None, None, 1] * k2[None])
        T = np.einsum("nfi,fij->nfj", E1, C)
        vals = np.einsum("nfj,nfj->nf", T, E2)
        if not derivatives:
            return vals, None
        T1 = np.einsum("nfi,fij->nfj", E1 * k1[None], C)
        d1 = 4j * np.pi * np.einsum("nfj,nfj->nf", T1, E2)
        d2 = 4j * np.pi * np.einsum("nfj,nfj->nf", T, E2 * k2[None])
        return vals, np.stack([d1, d2], axis=-1)

    def taylor(self, p: TwoTorsionPoint, max_degree: int, frame: str = "symmetric") -> list[np.ndarray]:
        """Taylor coefficients at a two-torsion point p.

        Returns a list indexed by total degree k; entry k has shape (F, k + 1),
        column j holding the coefficient of the monomial of bidegree (k - j, j).

        ``frame="symmetric"`` expands exp(2 pi i a^T w) f(p + w) in w. In this
        frame every even section is an even function of w.

        ``frame="fock"`` further multiplies by exp(pi w^T Y^-1 w) and expands
        in w' = sqrt(2 pi) Y^(-1/2) w, scaling the coefficient of w'^alpha by
        sqrt(alpha!). Monomial coefficients are then orthonormal jet
        functionals for the invariant metric, which keeps high-order
        vanishing conditions well conditioned. Both frames differ by an even
        unit, so vanishing orders and parity agree.
        """
        extra = 2 + max_degree // 2
        radii = (self.radii[0] + extra, self.radii[1] + extra)
        k1, k2 = self.frequencies(radii)
        C = self.coefficients(radii)
        a = np.asarray(p.a, dtype=float)
        # series evaluated at p itself (no reduction: |u| <= 1/2 already)
        A = C * np.exp(4j * np.pi * (p.z[0] * k1[:, :, None] + p.z[1] * k2[:, None, :]))
        b1 = 4j * np.pi * (k1 + a[0] / 2)
        b2 = 4j * np.pi * (k2 + a[1] / 2)
        out = []
        if frame == "symmetric":
            for deg in range(max_degree + 1):
                block = np.empty((self.size, deg + 1), dtype=complex)
                for j in range(deg + 1):
                    e1, e2 = deg - j, j
                    w1 = b1**e1 / factorial(e1)
                    w2 = b2**e2 / factorial(e2)
                    block[:, j] = np.einsum("fi,fij,fj->f", w1, A, w2)
                out.append(block)
            return out
        if frame != "fock":
            raise ValueError(f"unknown frame {frame!r}")
        M = np.real(scipy.linalg.sqrtm(self.surface.Y)) / math.sqrt(2 * math.pi)
        B1 = b1[:, :, None]
        B2 = b2[:, None, :]
        g1 = M[0, 0] * B1 + M[1, 0] * B2
        g2 = M[0, 1] * B1 + M[1, 1] * B2
        h1 = _hermite_coefficients(g1, max_degree)
        h2 = _hermite_coefficients(g2, max_degree)
        for deg in range(max_degree + 1):
            block = np.empty((self.size, deg + 1), dtype=complex)
            for j in range(deg + 1):
                e1, e2 = deg - j, j
                norm = math.sqrt(factorial(e1) * factorial(e2))
                block[:, j] = norm * np.sum(A * h1[e1] * h2[e2], axis=(1, 2))
            out.append(block)
        return out


def _hermite_coefficients(g: np.ndarray, max_degree: int) -> list[np.ndarray]:
    """Coefficients of t^n, n <= max_degree, in exp(g t + t^2 / 2)."""
    out = []
    for n in range(max_degree + 1):
        acc = np.zeros_like(g)
        for m in range(n // 2 + 1):
            acc = acc + g ** (n - 2 * m) / (factorial(n - 2 * m) * 2**m * factorial(m))
        out.append(acc)
    return out


@dataclass
class EvenBasis:
    """Even sections as linear combinations of the full basis.

    ``coef`` has shape (2d + 2, 4d); row r is the r-th even section.
    """

    full: FullBasis
    coef: np.ndarray
    singular_values: np.ndarray

    @property
    def surface(self) -> PolarizedAbelianSurface:
        return self.full.surface

    @property
    def size(self) -> int:
        return self.coef.shape[0]

    def evaluate(self, z, derivatives: bool = False):
        if derivatives:
            v, dv = self.full.evaluate(z, derivatives=True)
            return v @ self.coef.T, np.einsum("...fk,rf->...rk", dv, self.coef)
        return self.full.evaluate(z) @ self.coef.T

    def taylor(self, p: TwoTorsionPoint, max_degree: int, frame: str = "symmetric") -> list[np.ndarray]:
        return [self.coef @ block for block in self.full.taylor(p, max_degree, frame)]


def even_basis(surface: PolarizedAbelianSurface, truncation: TruncationParams | None = None,
               rank_tol: float = RANK_TOL) -> EvenBasis:
    """Symmetrize f -> f(z) + f(-z) and keep a maximal independent subfamily."""
    full = FullBasis(surface, truncation)
    F = full.size
    sym = np.eye(F) + np.eye(F)[full.negation_index()]
    rng = np.random.default_rng(20240601)
    x = rng.uniform(0.0, 1.0, size=(4 * F, 4))
    vals = full.evaluate(surface.from_torus(x)) @ sym.T
    # normalize the sample rows so no single point dominates the rank decision
    vals /= np.linalg.norm(vals, axis=1, keepdims=True)
    sv = np.linalg.svd(vals, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    expected = 2 * surface.d + 2
    if rank != expected:
        raise DimensionMismatch(f"even sections span dimension {rank}, expected {expected}")
    _, _, piv = scipy.linalg.qr(vals, pivoting=True, mode="economic")
    keep = np.sort(piv[:rank])
    return EvenBasis(full, sym[keep], sv)


def eval_sections(basis: EvenBasis, z) -> np.ndarray:
    return basis.evaluate(z)


def eval_taylor(basis: EvenBasis, p: TwoTorsionPoint, max_degree: int,
                frame: str = "symmetric") -> list[np.ndarray]:
    return basis.taylor(p, max_degree, frame)
