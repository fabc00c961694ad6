"""Developing maps on the disc and punctured disc with their monodromy.

Four concrete structures are provided: the inclusion of the unit disc
into the sphere (kind ``identity_fuchsian``, monodromy a Fuchsian group
in the disc model), its post-composition by a fixed Moebius map
(``moebius_twisted``), the multivalued chart map log(z)/(2*pi*i) on a
punctured disc (``puncture_log``), and its perturbation by 1/z^n
(``puncture_log_perturbed``).  The punctured-disc kinds are
single-valued only on the universal cover; evaluation carries an
explicit winding integer, incremented whenever a sampled path crosses
the branch cut on the negative real axis of the chart.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchPoint, OutsideDisc, PunctureHit, UnknownSymbol
from .fls import build_gamma2_model, reduce_word
from .moebius import CP1Point, MoebiusMap, chordal_distance

KINDS = ("identity_fuchsian", "moebius_twisted", "puncture_log",
         "puncture_log_perturbed")

PUNCTURE_EPS = 1e-12
_TWO_PI_I = 2.0j * math.pi

# Disc-model generators of the Fuchsian monodromy group, shared by all
# structures of the two disc kinds.
_DISC_GENERATORS = build_gamma2_model(0).generators


@dataclass(frozen=True)
class DevelopingStructure:
    """Immutable developing map descriptor.

    ``twist`` is only meaningful for kind moebius_twisted; ``n`` only
    for puncture_log_perturbed (the perturbation order, n >= 1).
    """

    kind: str
    twist: MoebiusMap | None = None
    n: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.kind == "moebius_twisted" and self.twist is None:
            raise ValueError("moebius_twisted requires a twist map")
        if self.kind == "puncture_log_perturbed" and self.n < 1:
            raise ValueError("perturbation order n must be >= 1")

    @property
    def domain(self) -> str:
        if self.kind in ("identity_fuchsian", "moebius_twisted"):
            return "disc"
        return "punctured_disc"

    @property
    def descriptor(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.twist is not None:
            m = self.twist.matrix
            d["twist"] = [[z.real, z.imag] for z in m.ravel()]
        if self.kind == "puncture_log_perturbed":
            d["n"] = self.n
        return d


def structure_from_descriptor(desc: dict) -> DevelopingStructure:
    """Build a structure from a config descriptor {kind, twist, n}."""
    kind = desc["kind"]
    twist = None
    if "twist" in desc and desc["twist"] is not None:
        entries = []
        for e in desc["twist"]:
            entries.append(complex(e[0], e[1]) if isinstance(e, (list, tuple))
                           else complex(e))
        twist = MoebiusMap(*entries)
    return DevelopingStructure(kind, twist=twist, n=int(desc.get("n", 0)))


def _puncture_value(dev: DevelopingStructure, z: complex,
                    winding: int) -> complex:
    if abs(z) < PUNCTURE_EPS:
        raise PunctureHit(f"|z| = {abs(z):.2e} below the puncture guard")
    val = (cmath.log(z) + _TWO_PI_I * winding) / _TWO_PI_I
    if dev.kind == "puncture_log_perturbed":
        val += 1.0 / z ** dev.n
    return val


def evaluate(dev: DevelopingStructure, x: complex,
             winding: int = 0) -> CP1Point:
    """Value of the developing map at a chart point.

    For the disc kinds ``x`` is a point of the closed unit disc and
    ``winding`` is ignored.  For the puncture kinds ``x`` is a point of
    the punctured local chart and ``winding`` selects the log branch.
    """
    x = complex(x)
    if dev.kind == "identity_fuchsian":
        return CP1Point.from_affine(x)
    if dev.kind == "moebius_twisted":
        return dev.twist.apply(CP1Point.from_affine(x))
    return CP1Point.from_affine(_puncture_value(dev, x, winding))


def _cut_crossing(z0: complex, z1: complex) -> int:
    """Signed crossings of the negative real axis by the segment z0->z1.

    +1 for a counterclockwise crossing (from the upper to the lower
    principal-branch sheet), -1 for clockwise, 0 otherwise.
    """
    if z0.imag == 0.0 and z0.real < 0.0:
        # starting on the cut: attribute the crossing to this segment
        return 1 if z1.imag < 0.0 else 0
    if (z0.imag > 0.0) == (z1.imag > 0.0):
        return 0
    lam = z0.imag / (z0.imag - z1.imag)
    x_cross = z0.real + lam * (z1.real - z0.real)
    if x_cross >= 0.0:
        return 0
    return 1 if z0.imag > 0.0 else -1


def continue_along(dev: DevelopingStructure, points,
                   winding: int = 0) -> tuple[list[complex], int]:
    """Analytic continuation of a puncture-kind map along sampled points.

    Returns the continued values and the final winding integer.  The
    sampling must be fine enough that consecutive points subtend less
    than a half-turn at the puncture.
    """
    if dev.domain != "punctured_disc":
        raise ValueError("continuation applies to puncture kinds only")
    pts = [complex(p) for p in points]
    values: list[complex] = []
    prev: complex | None = None
    for z in pts:
        if prev is not None:
            winding += _cut_crossing(prev, z)
        values.append(_puncture_value(dev, z, winding))
        prev = z
    return values, winding


def monodromy_of(dev: DevelopingStructure, word: str) -> MoebiusMap:
    """Image of a generator word under the monodromy representation.

    Disc kinds use the alphabet {T, t, S, s} of the rank-2 Fuchsian
    generators and their inverses; puncture kinds use {L, l} with the
    loop L around the puncture mapping to z -> z + 1.
    """
    g = MoebiusMap.identity()
    if dev.domain == "punctured_disc":
        loop = {"L": MoebiusMap(1, 1, 0, 1), "l": MoebiusMap(1, -1, 0, 1)}
        for ch in word:
            if ch not in loop:
                raise UnknownSymbol(f"symbol {ch!r} not in alphabet Ll")
            g = g @ loop[ch]
        return g
    for ch in reduce_word(word):
        if ch not in _DISC_GENERATORS:
            raise UnknownSymbol(f"symbol {ch!r} not in alphabet TtSs")
        g = g @ _DISC_GENERATORS[ch]
    if dev.kind == "moebius_twisted":
        g = dev.twist @ g @ dev.twist.inverse()
    return g


def generator_words(dev: DevelopingStructure) -> list[str]:
    return ["L"] if dev.domain == "punctured_disc" else ["T", "S"]


def equivariance_residual(dev: DevelopingStructure, pairs) -> float:
    """Max chordal gap of D(gamma.x) vs rho(gamma).D(x) over (word, x)."""
    worst = 0.0
    for word, x in pairs:
        g = monodromy_of(dev, word)
        if dev.domain == "disc":
            gx = monodromy_of(DevelopingStructure("identity_fuchsian"),
                              word).apply_affine(complex(x))
            lhs = evaluate(dev, gx)
        else:
            # gamma.x is one loop around the puncture per letter
            shift = sum(1 if ch == "L" else -1 for ch in word)
            lhs = evaluate(dev, x, winding=shift)
        rhs = g.apply(evaluate(dev, x))
        worst = max(worst, chordal_distance(lhs, rhs))
    return worst


# ---------------------------------------------------------------------------
# representation classification


def fixed_points(g: MoebiusMap, tol: float = 1e-9) -> list[CP1Point]:
    """Fixed points on the sphere; empty list for the identity."""
    m = g.matrix
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if abs(b) < tol and abs(c) < tol and abs(a - d) < tol:
        return []  # plus or minus the identity
    if abs(c) < tol:
        pts = [CP1Point.infinity()]
        if abs(a - d) > tol:
            pts.append(CP1Point.from_affine(b / (d - a)))
        return pts
    disc = cmath.sqrt((a - d) ** 2 + 4.0 * b * c)
    z1 = (a - d + disc) / (2.0 * c)
    z2 = (a - d - disc) / (2.0 * c)
    p1, p2 = CP1Point.from_affine(z1), CP1Point.from_affine(z2)
    if chordal_distance(p1, p2) < tol:
        return [p1]
    return [p1, p2]


def _dedupe(points: list[CP1Point], tol: float) -> list[CP1Point]:
    out: list[CP1Point] = []
    for p in points:
        if all(chordal_distance(p, q) >= tol for q in out):
            out.append(p)
    return out


def _invariant_hermitian(gens: list[MoebiusMap]
                         ) -> tuple[float, np.ndarray]:
    """Least-squares invariant Hermitian form over the 4-real-parameter
    space H = [[p, x+iy], [x-iy, q]]; returns (residual, H)."""
    basis = [np.array([[1, 0], [0, 0]], dtype=complex),
             np.array([[0, 0], [0, 1]], dtype=complex),
             np.array([[0, 1], [1, 0]], dtype=complex),
             np.array([[0, 1j], [-1j, 0]], dtype=complex)]
    cols = []
    for h in basis:
        col = []
        for g in gens:
            m = g.matrix
            r = m.conj().T @ h @ m - h
            col.append(np.concatenate([r.ravel().real, r.ravel().imag]))
        cols.append(np.concatenate(col))
    a = np.array(cols).T  # (8 * len(gens), 4): one column per basis form
    _, svals, vt = np.linalg.svd(a, full_matrices=False)
    coef = vt[-1]
    h = sum(c * b for c, b in zip(coef, basis))
    return float(svals[-1]), h


@dataclass(frozen=True)
class RepresentationReport:
    """Parabolicity of cusp words and an elementarity verdict."""

    parabolic_cusps: list[tuple[str, complex, str]]
    elementary_verdict: str

    def to_json(self) -> str:
        return json.dumps({
            "parabolic_cusps": [
                {"word": w, "trace_sq": [t.real, t.imag], "verdict": v}
                for w, t, v in self.parabolic_cusps],
            "elementary_verdict": self.elementary_verdict,
        }, indent=2)


PARABOLIC_TOL = 1e-8
_FIX_TOL = 1e-7


def _cusp_verdict(g: MoebiusMap) -> tuple[complex, str]:
    m = g.matrix
    tr2 = (m[0, 0] + m[1, 1]) ** 2
    is_identity = (abs(m[0, 1]) < 1e-12 and abs(m[1, 0]) < 1e-12
                   and abs(m[0, 0] - m[1, 1]) < 1e-12)
    if is_identity:
        return tr2, "identity"
    if abs(tr2 - 4.0) < PARABOLIC_TOL:
        return tr2, "parabolic"
    return tr2, "non_parabolic"


def classify_representation(dev: DevelopingStructure,
                            cusp_words: list[str]) -> RepresentationReport:
    """Parabolicity of each cusp word and an elementarity verdict.

    The elementarity heuristic tries, in order: a point fixed by every
    generator; a globally invariant set of at most two points (the
    closure of generator fixed points under the action); a
    positive-definite invariant Hermitian form (unitarizability).  If
    all three fail the verdict is nonelementary; degenerate inputs
    (trivial generator images) yield inconclusive.
    """
    cusps = []
    for w in cusp_words:
        tr2, verdict = _cusp_verdict(monodromy_of(dev, w))
        cusps.append((w, tr2, verdict))
    gens = [monodromy_of(dev, w) for w in generator_words(dev)]
    return RepresentationReport(cusps, elementarity_verdict(gens))


def elementarity_verdict(gens: list[MoebiusMap]) -> str:
    """Elementarity heuristic for the group generated by ``gens``."""
    nontrivial = [g for g in gens if _cusp_verdict(g)[1] != "identity"]
    if not nontrivial:
        return "inconclusive"

    fixed_lists = [fixed_points(g) for g in nontrivial]

    # (i) a single point fixed by every generator
    for p in fixed_lists[0]:
        if all(any(chordal_distance(p, q) < _FIX_TOL for q in fl)
               for fl in fixed_lists[1:]):
            return "common_fixed_points"

    # (ii) a globally invariant set of at most two points, grown from
    # the fixed pair of each generator in turn
    for start in fixed_lists:
        orbit = _dedupe(list(start), _FIX_TOL)
        for _ in range(8):
            new = _dedupe(
                orbit + [g.apply(p) for g in nontrivial for p in orbit],
                _FIX_TOL)
            if len(new) > 2:
                break
            if len(new) == len(orbit):
                return "finite_orbit_leq2"
            orbit = new

    # (iii) positive-definite invariant Hermitian form
    residual, h = _invariant_hermitian(nontrivial)
    if residual < PARABOLIC_TOL:
        eig = np.linalg.eigvalsh(h)
        if eig[0] > 1e-10 or eig[-1] < -1e-10:
            return "psu2_conjugate"

    return "nonelementary"


# ---------------------------------------------------------------------------
# germs of transition maps


@dataclass(frozen=True)
class Germ:
    """Local transition map h = D0^{-1} o D1 around a chart point."""

    map: MoebiusMap
    center: complex
    radius: float

    def __call__(self, z: complex) -> complex:
        if abs(z - self.center) > self.radius * (1.0 + 1e-12):
            raise OutsideDisc("point outside the germ validity disc")
        return self.map.apply_affine(complex(z))


def _twist_of(dev: DevelopingStructure) -> MoebiusMap:
    if dev.kind == "identity_fuchsian":
        return MoebiusMap.identity()
    if dev.kind == "moebius_twisted":
        return dev.twist
    raise BranchPoint(
        f"kind {dev.kind!r} is not locally invertible in closed form here")


def germ_compose(dev0: DevelopingStructure, dev1: DevelopingStructure,
                 x: complex) -> Germ:
    """Germ of h = D0^{-1} o D1 at a disc point x of dev1's chart.

    Both structures must be of a disc kind.  The value D1(x) must lie
    in the open image of D0; the validity radius is the distance at
    which h(z) is guaranteed to stay inside D0's chart, estimated from
    the first derivative of h at x.
    """
    x = complex(x)
    if abs(x) >= 1.0:
        raise OutsideDisc("germ base point must lie in the open disc")
    g0, g1 = _twist_of(dev0), _twist_of(dev1)
    h = g0.inverse() @ g1
    m = h.matrix
    denom = m[1, 0] * x + m[1, 1]
    if abs(denom) < 1e-12:
        raise BranchPoint("transition map has a pole at the base point")
    w = h.apply_affine(x)
    if not abs(w) < 1.0:
        raise OutsideDisc("D1(x) lies outside the image of D0")
    deriv = 1.0 / abs(denom) ** 2  # |h'(x)| for a det-1 Moebius map
    gap = min(1.0 - abs(w), 1.0 - abs(x))
    radius = 0.25 * gap / max(deriv, 1.0)
    return Germ(h, x, radius)
