"""Geometry of PSL(2,C) acting on the Riemann sphere.

Points of CP^1 are kept in homogeneous coordinates, so the point at
infinity [1:0] needs no special casing in the public API.  Maps are
unimodular 2x2 complex matrices up to sign.  The closed-form 2x2 SVD
below is the workhorse for the Cartan decomposition and for the
contraction data of long matrix products.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix

#: chordal tolerance for projective equality
CHORDAL_TOL = 1e-10

#: contraction is flagged degenerate below this (|alpha|^2 <= sqrt(3/2))
DEGENERATE_ALPHA_SQ = math.sqrt(1.5)


def _canonical_pair(x1: complex, x2: complex) -> tuple[complex, complex]:
    n = math.hypot(abs(x1), abs(x2))
    if n == 0.0:
        raise ValueError("projective point needs a nonzero representative")
    x1, x2 = x1 / n, x2 / n
    lead = x1 if abs(x1) > 1e-300 else x2
    phase = lead / abs(lead)
    return x1 / phase, x2 / phase


@dataclass(frozen=True)
class CP1Point:
    """A point of CP^1, stored as a unit vector with real nonnegative leading coordinate."""

    x1: complex
    x2: complex

    def __post_init__(self):
        a, b = _canonical_pair(complex(self.x1), complex(self.x2))
        object.__setattr__(self, "x1", a)
        object.__setattr__(self, "x2", b)

    @staticmethod
    def from_affine(z: complex) -> "CP1Point":
        """Point [z:1] of the standard chart."""
        return CP1Point(complex(z), 1.0 + 0.0j)

    @staticmethod
    def infinity() -> "CP1Point":
        return CP1Point(1.0 + 0.0j, 0.0j)

    @property
    def is_infinity(self) -> bool:
        return abs(self.x2) <= CHORDAL_TOL

    def to_affine(self) -> complex:
        """Value in the x2 != 0 chart; raises at infinity."""
        if self.is_infinity:
            raise ZeroDivisionError("point at infinity has no affine coordinate")
        return self.x1 / self.x2

    def antipode(self) -> "CP1Point":
        return CP1Point(-self.x2.conjugate(), self.x1.conjugate())

    def __eq__(self, other) -> bool:  # projective equality, scale invariant
        if not isinstance(other, CP1Point):
            return NotImplemented
        return chordal_distance(self, other) <= CHORDAL_TOL

    def __hash__(self):
        # canonical representative makes coordinate rounding stable enough
        return hash((round(self.x1.real, 8), round(self.x1.imag, 8),
                     round(self.x2.real, 8), round(self.x2.imag, 8)))


E1 = CP1Point(1.0, 0.0)
E2 = CP1Point(0.0, 1.0)


def chordal_distance(p: CP1Point, q: CP1Point) -> float:
    """d([X],[Y]) = |x1 y2 - y1 x2| / (|X| |Y|), valued in [0,1].

    Stored representatives are unit vectors, so no renormalization here.
    """
    return min(1.0, abs(p.x1 * q.x2 - q.x1 * p.x2))


def _normalize_entries(a, b, c, d):
    det = a * d - b * c
    if abs(det) < 1e-14:
        raise SingularMatrix(f"|det| = {abs(det):.3e} below 1e-14")
    s = cmath.sqrt(det)
    a, b, c, d = a / s, b / s, c / s, d / s
    # resolve +-g: entry of largest modulus gets nonnegative real part
    entries = (a, b, c, d)
    lead = max(entries, key=abs)
    if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
        a, b, c, d = -a, -b, -c, -d
    return a, b, c, d


@dataclass(frozen=True)
class MoebiusMap:
    """An element of PSL(2,C), stored as a det=1 matrix with a fixed sign choice."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = _normalize_entries(
            complex(self.a), complex(self.b), complex(self.c), complex(self.d))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @staticmethod
    def identity() -> "MoebiusMap":
        return MoebiusMap(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def diagonal(alpha: complex) -> "MoebiusMap":
        return MoebiusMap(alpha, 0.0, 0.0, 1.0 / alpha)

    @staticmethod
    def from_matrix(m: np.ndarray) -> "MoebiusMap":
        return MoebiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def apply(self, p: CP1Point) -> CP1Point:
        return CP1Point(self.a * p.x1 + self.b * p.x2,
                        self.c * p.x1 + self.d * p.x2)

    def apply_affine(self, z: complex) -> complex:
        """Action in the standard chart; may raise ZeroDivisionError at the pole."""
        return (self.a * z + self.b) / (self.c * z + self.d)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.allclose(m @ m.conj().T, np.eye(2), atol=tol))


def normalize(a: complex, b: complex, c: complex, d: complex) -> MoebiusMap:
    """Scale (a,b,c,d) by a square root of the determinant to det = 1."""
    return MoebiusMap(a, b, c, d)


def apply(g: MoebiusMap, p: CP1Point) -> CP1Point:
    return g.apply(p)


def _svd2(m: np.ndarray) -> tuple[np.ndarray, float, float, np.ndarray]:
    """Closed-form SVD of a 2x2 complex matrix: m = U diag(s1,s2) Vh.

    Computed from the eigen-decomposition of m^H m.  U and Vh are unitary
    with det(U) = 1; s1 >= s2 >= 0.  When the singular values coincide
    the rotation is fixed to V = identity.
    """
    h = m.conj().T @ m
    p = h[0, 0].real
    s = h[1, 1].real
    q = h[0, 1]
    disc = math.hypot((p - s) / 2.0, abs(q))
    mean = (p + s) / 2.0
    lam1 = mean + disc
    lam2 = max(mean - disc, 0.0)
    s1 = math.sqrt(max(lam1, 0.0))
    s2 = math.sqrt(lam2)
    if disc <= 1e-30 * max(mean, 1e-300):
        # repeated singular value: fix V = identity by convention
        v1 = np.array([1.0, 0.0], dtype=complex)
    elif abs(q) == 0.0:
        v1 = np.array([1.0, 0.0] if p >= s else [0.0, 1.0], dtype=complex)
    else:
        # eigenvector of h for lam1; pick the better conditioned expression
        c1 = np.array([q, lam1 - p], dtype=complex)
        c2 = np.array([lam1 - s, q.conjugate()], dtype=complex)
        v1 = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
        v1 = v1 / np.linalg.norm(v1)
    v2 = np.array([-v1[1].conjugate(), v1[0].conjugate()])
    if s1 > 0.0:
        u1 = m @ v1 / s1
        nu = np.linalg.norm(u1)
        u1 = u1 / nu if nu > 0 else np.array([1.0, 0.0], dtype=complex)
    else:
        u1 = np.array([1.0, 0.0], dtype=complex)
    u2 = np.array([-u1[1].conjugate(), u1[0].conjugate()])
    u = np.column_stack([u1, u2])  # det = |u1|^2 = 1
    vh = np.stack([v1.conj(), v2.conj()])
    return u, s1, s2, vh


def operator_norm(g: MoebiusMap) -> float:
    """Largest singular value; >= 1 for det=1 matrices."""
    _, s1, _, _ = _svd2(g.matrix)
    return s1


def spherical_derivative(g: MoebiusMap, z: CP1Point) -> float:
    """|g'(z)| in the metric |ds| = |dz| / (1+|z|^2).

    For w = g(z) in the standard chart:
        |g'(z)|_sph = (1 + |z|^2) / (|c z + d|^2 (1 + |w|^2)).
    When |x2| < |x1| the point is moved through the chart at infinity by
    the spherical isometry z -> -1/z before evaluating.
    """
    if abs(z.x2) < abs(z.x1):
        flip = MoebiusMap(0.0, 1.0, -1.0, 0.0)  # z -> -1/z, spherical isometry
        return spherical_derivative(g @ flip.inverse(), flip.apply(z))
    w = z.x1 / z.x2
    den = g.c * w + g.d
    num = g.a * w + g.b
    aw2 = abs(w) ** 2
    if abs(den) ** 2 * 1e16 < abs(num) ** 2:
        # image essentially at infinity: flip the target chart instead
        flip = MoebiusMap(0.0, 1.0, -1.0, 0.0)
        return spherical_derivative(flip @ g, z)
    gw = num / den
    return (1.0 + aw2) / (abs(den) ** 2 * (1.0 + abs(gw) ** 2))


@dataclass(frozen=True)
class CartanTriple:
    """g = k . diag(alpha, 1/alpha) . kprime with k, kprime unitary and |alpha| >= 1."""

    k: MoebiusMap
    alpha: complex
    kprime: MoebiusMap

    def reconstruct(self) -> np.ndarray:
        return self.k.matrix @ np.diag([self.alpha, 1.0 / self.alpha]) @ self.kprime.matrix


def cartan(g: MoebiusMap) -> CartanTriple:
    """KAK decomposition from the closed-form SVD; alpha is taken real positive."""
    u, s1, _, vh = _svd2(g.matrix)
    # MoebiusMap re-normalizes to det 1; u and vh already are unitary det-1
    return CartanTriple(MoebiusMap.from_matrix(u), complex(s1), MoebiusMap.from_matrix(vh))


def contraction_data(g: MoebiusMap) -> tuple[complex, CP1Point, CP1Point, bool]:
    """(alpha, y, z, degenerate) with y = kprime^-1 [e2] and z = k [e1].

    Outside D(y, 1/|alpha|) the map lands inside D(z, 1/|alpha|), and
    D(y, 1/|alpha|^2) lands outside D(z, 1/2), as soon as
    |alpha|^2 > sqrt(3/2); otherwise the degenerate flag is set.
    """
    t = cartan(g)
    y = t.kprime.inverse().apply(E2)
    z = t.k.apply(E1)
    degenerate = abs(t.alpha) ** 2 <= DEGENERATE_ALPHA_SQ
    return t.alpha, y, z, degenerate


def chordal_circle(center: CP1Point, radius: float, n: int) -> list[CP1Point]:
    """n points at exact chordal distance `radius` from `center` (0 < radius < 1).

    Built around [e2] in the chart and carried over by a unitary fixing the
    chordal metric, so the stated distance is exact up to rounding.
    """
    if not 0.0 < radius < 1.0:
        raise ValueError("radius must lie in (0,1)")
    # unitary sending [e2] to center: columns (antipode(center), center)
    u = np.column_stack([np.array([-center.x2.conjugate(), center.x1.conjugate()]),
                         np.array([center.x1, center.x2])])
    w = radius / math.sqrt(1.0 - radius ** 2)
    pts = []
    for j in range(n):
        th = 2.0 * math.pi * j / n
        vec = u @ np.array([w * cmath.exp(1j * th), 1.0])
        pts.append(CP1Point(vec[0], vec[1]))
    return pts


# ---------------------------------------------------------------------------
# batch helpers used by the random-walk module (array-level, no classes)

def batch_svd_top(ms: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top singular data for a (n,2,2) complex stack.

    Returns (s1, u1, v1): largest singular values (n,), left and right
    singular vectors (n,2).  Same closed form as _svd2, vectorized.
    """
    h = np.einsum("nji,njk->nik", ms.conj(), ms)
    p = h[:, 0, 0].real
    s = h[:, 1, 1].real
    q = h[:, 0, 1]
    disc = np.hypot((p - s) / 2.0, np.abs(q))
    lam1 = (p + s) / 2.0 + disc
    s1 = np.sqrt(np.maximum(lam1, 0.0))
    c1 = np.stack([q, lam1 - p], axis=1)
    c2 = np.stack([lam1 - s, q.conjugate()], axis=1)
    n1 = np.linalg.norm(c1, axis=1)
    n2 = np.linalg.norm(c2, axis=1)
    v1 = np.where((n1 >= n2)[:, None], c1, c2)
    nrm = np.linalg.norm(v1, axis=1)
    tiny = nrm < 1e-200  # numerically scalar matrix: fall back to e1
    v1[tiny] = [1.0, 0.0]
    nrm[tiny] = 1.0
    v1 = v1 / nrm[:, None]
    u1 = np.einsum("nij,nj->ni", ms, v1)
    u1 = u1 / np.maximum(np.linalg.norm(u1, axis=1), 1e-300)[:, None]
    return s1, u1, v1
