"""Brownian motion on the Poincare disc via the conformal time change.

The trace of hyperbolic Brownian motion is planar Brownian motion; only
the clock differs, by the conformal factor (2/(1-|z|^2))^2 of the
hyperbolic metric.  Paths are simulated with Gaussian Euler steps on
the Euclidean clock while the hyperbolic clock is accumulated by
midpoint quadrature.  Transience to the boundary is handled by a cap
at |z| = 1 - 1e-6; the capped point serves as a proxy for the
Euclidean boundary limit.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BadRadii, HorizonExceeded, OutsideDisc, StepTooLarge

MAX_STEP_SCALE = 1e-3
BOUNDARY_CAP = 1.0 - 1e-6
DEFAULT_STEP_SCALE = 1e-5


def d_hyp(z: complex, w: complex) -> float:
    """Hyperbolic distance in the unit disc (curvature -1)."""
    if abs(z) >= 1.0 or abs(w) >= 1.0:
        raise OutsideDisc("points must be in the open unit disc")
    return 2.0 * math.atanh(abs(z - w) / abs(1.0 - z.conjugate() * w))


def hyperbolic_disc_euclidean(center: complex, hyper_radius: float
                              ) -> tuple[complex, float]:
    """Euclidean (center, radius) of the hyperbolic disc D_hyp(center, r)."""
    rho = math.tanh(hyper_radius / 2.0)
    a2 = abs(center) ** 2
    den = 1.0 - a2 * rho * rho
    return center * (1.0 - rho * rho) / den, rho * (1.0 - a2) / den


def hyperbolic_density(z: complex) -> float:
    """Conformal density 2/(1-|z|^2) of the disc model."""
    return 2.0 / (1.0 - abs(z) ** 2)


def halfplane_metric_ratio(z: complex) -> float:
    """ds_hyp / ds_sph in the upper half-plane chart: (1+x^2+y^2)/y."""
    if z.imag <= 0:
        raise ValueError("upper half-plane point required")
    return (1.0 + abs(z) ** 2) / z.imag


@dataclass(frozen=True)
class StopRule:
    """Stopping condition: kind in {euclid_horizon, hyper_horizon,
    exit_disc, hit_disc}; disc rules take center and either
    euclid_radius or hyper_radius."""

    kind: str
    parameters: dict = field(default_factory=dict)

    @staticmethod
    def _disc(p: dict, prefix: str = "") -> tuple[complex, float]:
        center = complex(p.get(prefix + "center", 0.0))
        if prefix + "hyper_radius" in p:
            return hyperbolic_disc_euclidean(center,
                                             float(p[prefix + "hyper_radius"]))
        return center, float(p[prefix + "euclid_radius"])

    def _encode(self) -> tuple[int, float, float, float, float, float, float]:
        p = self.parameters
        if self.kind == "euclid_horizon":
            return _kernels.STOP_EUCLID, float(p["horizon"]), 0, 0, 0, 0, 0
        if self.kind == "hyper_horizon":
            return _kernels.STOP_HYPER, float(p["horizon"]), 0, 0, 0, 0, 0
        if self.kind in ("exit_disc", "hit_disc"):
            center, radius = self._disc(p)
            code = (_kernels.STOP_EXIT_DISC if self.kind == "exit_disc"
                    else _kernels.STOP_HIT_DISC)
            return code, center.real, center.imag, radius, 0, 0, 0
        if self.kind == "hit_or_exit":
            hc, hr = self._disc(p, "hit_")
            ec, er = self._disc(p, "exit_")
            return (_kernels.STOP_HIT_OR_EXIT, hc.real, hc.imag, hr,
                    ec.real, ec.imag, er)
        raise ValueError(f"unknown stop rule kind: {self.kind}")


@dataclass
class PlanarPath:
    """Recorded planar Brownian trace on the Euclidean clock."""

    times: np.ndarray
    points: np.ndarray       # complex
    step_scale: float
    hyper_times: np.ndarray  # accumulated alongside the simulation
    cap_hit: bool
    hit_first: bool = False  # for hit_or_exit rules: the hit disc fired

    def __post_init__(self):
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and strictly increase")


@dataclass
class TimeChange:
    euclid_times: np.ndarray
    hyper_times: np.ndarray

    def hyper_at(self, t: float) -> float:
        return float(np.interp(t, self.euclid_times, self.hyper_times))

    def euclid_at(self, tau: float) -> float:
        return float(np.interp(tau, self.hyper_times, self.euclid_times))


@dataclass
class HyperbolicPath:
    trace: PlanarPath
    clock: TimeChange

    def point_at_hyper(self, tau: float) -> complex:
        """Recorded point nearest below the given hyperbolic time."""
        idx = int(np.searchsorted(self.clock.hyper_times, tau, side="right")) - 1
        idx = max(0, min(idx, len(self.trace.points) - 1))
        return complex(self.trace.points[idx])

    @property
    def horizon(self) -> float:
        return float(self.clock.hyper_times[-1])


def simulate_planar(start: complex, step_scale: float, stop: StopRule,
                    seed: int, record_stride: int = 1,
                    max_steps: int = 200_000_000,
                    max_dtau: float = -1.0) -> PlanarPath:
    """Planar Brownian motion from `start` until the stop rule fires.

    Gaussian increments of variance step_scale per coordinate, refined
    near the unit circle; the path is capped at |z| = 1 - 1e-6.
    """
    if step_scale > MAX_STEP_SCALE:
        raise StepTooLarge(f"step_scale {step_scale} exceeds {MAX_STEP_SCALE}")
    if step_scale <= 0:
        raise ValueError("step_scale must be positive")
    if abs(start) >= 1.0:
        raise OutsideDisc("start must be in the open unit disc")
    kind, pa, pb, pc, pd, pe, pf = stop._encode()
    times, taus, xs, ys, nrec, status = _kernels.simulate_kernel(
        start.real, start.imag, step_scale, kind, pa, pb, pc, pd, pe, pf,
        int(seed) % (2 ** 31 - 1), max_steps, record_stride,
        BOUNDARY_CAP, max_dtau)
    if status == _kernels.STATUS_MAXSTEPS:
        raise HorizonExceeded("stop rule did not fire within max_steps")
    pts = xs[:nrec] + 1j * ys[:nrec]
    return PlanarPath(times[:nrec].copy(), pts, step_scale, taus[:nrec].copy(),
                      status == _kernels.STATUS_CAP,
                      status == _kernels.STOPPED_HIT)


def lift_to_hyperbolic(path: PlanarPath) -> HyperbolicPath:
    """Attach the Levy time change; the trace itself is unchanged."""
    return HyperbolicPath(path, TimeChange(path.times, path.hyper_times))


def poisson_density(x: complex, z: complex, radius: float) -> float:
    """Exit density (R^2 - |x|^2) / (2 pi R |x - z|^2) on the circle |z| = R."""
    if abs(x) >= radius:
        raise OutsideDisc("x must be strictly inside the circle")
    return (radius ** 2 - abs(x) ** 2) / (2.0 * math.pi * radius * abs(x - z) ** 2)


def exit_point_sample(x: complex, center: complex, hyper_radius: float,
                      seed: int, size: int = 1) -> np.ndarray:
    """Exit points of hyperbolic BM from x out of D_hyp(center, hyper_radius).

    The disc is transported to a Euclidean disc at 0 by a Moebius map;
    there the exit law is the classical Poisson kernel, sampled by
    pushing the uniform boundary law through a disc automorphism.
    """
    if d_hyp(x, center) >= hyper_radius:
        raise OutsideDisc("x must lie strictly inside the hyperbolic disc")
    radius = math.tanh(hyper_radius / 2.0)
    xp = (x - center) / (1.0 - center.conjugate() * x)
    a = xp / radius
    rng = np.random.default_rng(seed)
    u = np.exp(2j * math.pi * rng.random(size))
    w = radius * (u + a) / (1.0 + a.conjugate() * u)
    out = (w + center) / (1.0 + center.conjugate() * w)
    return out


def annulus_hitting_probability(c2: float, inner: float) -> float:
    """P(planar BM from radius c2 hits D(0, inner) before the unit circle)."""
    if not 0.0 < inner <= c2 < 1.0:
        raise BadRadii(f"need 0 < inner < c2 < 1; got inner={inner}, c2={c2}")
    return math.log(c2) / math.log(inner)


def annulus_hitting_mc(c2: float, inner: float, n_paths: int, seed: int,
                       dt: float = 1e-5, max_steps: int = 20_000_000
                       ) -> tuple[float, float]:
    """Monte Carlo estimate and its standard error for the annulus problem."""
    if not 0.0 < inner < c2 < 1.0:
        raise BadRadii(f"need 0 < inner < c2 < 1; got inner={inner}, c2={c2}")
    hits = _kernels.annulus_kernel(c2, inner, dt, n_paths,
                                   int(seed) % (2 ** 31 - 1), max_steps)
    p = hits / n_paths
    se = math.sqrt(max(p * (1.0 - p), 1e-12) / n_paths)
    return p, se


def green_quadrature(disc_center: complex, disc_radius_eucl: float,
                     cells: int = 400, rel_tol: float = 0.005) -> float:
    """Expected hyperbolic occupation of a disc: midpoint quadrature of
    -(1/pi) log|z| * (2/(1-|z|^2))^2 over the disc, refined x2 until
    successive values agree within rel_tol."""
    cx, cy = disc_center.real, disc_center.imag
    r = disc_radius_eucl
    prev = None
    while True:
        h = 2.0 * r / cells
        u = cx - r + h * (np.arange(cells) + 0.5)
        v = cy - r + h * (np.arange(cells) + 0.5)
        X, Y = np.meshgrid(u, v)
        R2 = (X - cx) ** 2 + (Y - cy) ** 2
        mask = R2 <= r * r
        az2 = X ** 2 + Y ** 2
        az2 = np.where(mask & (az2 < 1.0), az2, np.nan)
        vals = -(0.5 / math.pi) * np.log(az2) * (2.0 / (1.0 - az2)) ** 2
        total = float(np.nansum(np.where(mask, vals, 0.0))) * h * h
        if prev is not None and abs(total - prev) <= rel_tol * abs(total):
            return total
        prev = total
        cells *= 2
        if cells > 6400:
            return total


def green_occupation(disc_center: complex, disc_radius_hyp: float,
                     samples: int, seed: int, step_scale: float = 1e-4
                     ) -> tuple[float, float]:
    """(Monte Carlo, quadrature) expected hyperbolic occupation of a
    hyperbolic disc for hyperbolic BM started at 0.

    The Monte Carlo paths are killed at |z| = 1 - 1e-6 rather than the
    ideal boundary; the Green function at that radius is below 4e-7, so
    the truncation bias is far below the Monte Carlo error.
    """
    center, radius = hyperbolic_disc_euclidean(disc_center, disc_radius_hyp)
    if abs(abs(center) - radius) < 1e-6:
        raise ValueError("disc boundary passes through the origin; "
                         "refine the quadrature setup")
    mc = _kernels.occupation_kernel(center.real, center.imag, radius,
                                    step_scale, samples,
                                    int(seed) % (2 ** 31 - 1),
                                    BOUNDARY_CAP, 200_000_000)
    quad = green_quadrature(center, radius)
    return mc, quad


def sup_displacement(path: HyperbolicPath, t: float) -> float:
    """Running max of hyperbolic distance from the start over hyper times <= t."""
    taus = path.clock.hyper_times
    if t > taus[-1] + 1e-12:
        raise HorizonExceeded(f"t={t} beyond path horizon {taus[-1]}")
    pts = path.trace.points
    z0 = complex(pts[0])
    sel = pts[taus <= t + 1e-15]
    if len(sel) <= 1:
        return 0.0
    zs = np.asarray(sel)
    num = np.abs(zs - z0)
    den = np.abs(1.0 - np.conj(z0) * zs)
    ratios = np.clip(num / den, 0.0, 1.0 - 1e-15)
    return float(np.max(2.0 * np.arctanh(ratios)))


def dump_path_csv(path: HyperbolicPath, out) -> None:
    """CSV columns: euclid_time, hyper_time, re, im."""
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["euclid_time", "hyper_time", "re", "im"])
        for t, tau, z in zip(path.trace.times, path.clock.hyper_times,
                             path.trace.points):
            wr.writerow([repr(float(t)), repr(float(tau)),
                         repr(float(z.real)), repr(float(z.imag))])
