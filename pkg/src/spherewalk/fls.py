"""Discretization of hyperbolic Brownian motion along a Fuchsian orbit.

The scheme tracks a Brownian path on the disc relative to the orbit
Gamma.0 of a Fuchsian group: S_n are exits of the large discs V_X
(hyperbolic radius delta_prime around visited orbit points), R_n are
first entries into the union of the small discs F_X (radius delta),
kappa_n is a Harnack-normalized Radon-Nikodym derivative of exit laws,
and indices with coin alpha_n < kappa_n form the accepted subsequence
N_k.  The words X_{N_k} then realize a right random walk on the group
and S_{N_k}/k stabilizes to a positive time constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .brownian import (
    StopRule, d_hyp, hyperbolic_disc_euclidean, poisson_density,
    simulate_planar,
)
from .errors import (
    BadRadii, InsufficientData, OrbitCoverageExceeded, WordBudgetExceeded,
)
from .moebius import MoebiusMap

_LETTERS = "TtSs"
_INVERSE = {"T": "t", "t": "T", "S": "s", "s": "S"}


def reduce_word(word: str) -> str:
    """Free reduction over {T, t, S, s} (cancel adjacent inverse pairs)."""
    out: list[str] = []
    for ch in word:
        if out and _INVERSE[out[-1]] == ch:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def invert_word(word: str) -> str:
    return "".join(_INVERSE[ch] for ch in reversed(word))


# Cayley map z -> (z - i)/(z + i), half-plane to disc, i -> 0
_CAYLEY = np.array([[1.0, -1j], [1.0, 1j]], dtype=complex) / math.sqrt(2.0)
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def _to_disc(half: MoebiusMap) -> MoebiusMap:
    m = _CAYLEY @ half.matrix @ _CAYLEY_INV
    return MoebiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])


@dataclass
class FuchsianGroupModel:
    """Free rank-2 Fuchsian group with an indexed orbit of the origin."""

    generators: dict[str, MoebiusMap]   # disc-model maps keyed by letter
    word_radius: int
    orbit_index: list[tuple[str, complex, float]]  # (word, gamma.0, d_hyp(0, gamma.0))
    m0: float | None                    # min displacement; None if radius 0

    def word_map(self, word: str) -> MoebiusMap:
        """Product map of a reduced word; reliable while entries stay
        well below the det-cancellation scale (displacement < ~30)."""
        g = MoebiusMap.identity()
        for ch in reduce_word(word):
            g = g @ self.generators[ch]
        return g

    def word_displacement(self, word: str) -> float:
        """d_hyp(0, gamma.0) via scaled products; safe for any length.

        Disc isometries have the SU(1,1) shape [[a, b], [conj b, conj a]]
        with |a|^2 - |b|^2 = 1, so d_hyp(0, gamma.0) = 2 log(|a| + |b|),
        evaluated here on unit-Frobenius factors with a running log scale.
        """
        m = np.eye(2, dtype=complex)
        lg = 0.0
        for ch in reduce_word(word):
            m = m @ self.generators[ch].matrix
            s = float(np.linalg.norm(m))
            m /= s
            lg += math.log(s)
        return 2.0 * (lg + math.log(abs(m[0, 0]) + abs(m[0, 1])))

    def orbit_arrays(self) -> tuple[np.ndarray, list[str]]:
        pts = np.array([p for _, p, _ in self.orbit_index])
        words = [w for w, _, _ in self.orbit_index]
        return pts, words


def build_gamma2_model(word_radius: int, max_index: int = 100_000
                       ) -> FuchsianGroupModel:
    """Disc-model conjugates of T = (1,2,0,1), S = (1,0,2,1) with the
    orbit of 0 indexed over reduced words up to word_radius."""
    t_half = MoebiusMap(1, 2, 0, 1)
    s_half = MoebiusMap(1, 0, 2, 1)
    gens = {
        "T": _to_disc(t_half),
        "t": _to_disc(t_half.inverse()),
        "S": _to_disc(s_half),
        "s": _to_disc(s_half.inverse()),
    }
    index: list[tuple[str, complex, float]] = [("", 0.0 + 0.0j, 0.0)]
    frontier: list[tuple[str, MoebiusMap]] = [("", MoebiusMap.identity())]
    for _ in range(word_radius):
        nxt: list[tuple[str, MoebiusMap]] = []
        for word, g in frontier:
            for ch in _LETTERS:
                if word and _INVERSE[word[-1]] == ch:
                    continue
                w2 = word + ch
                g2 = g @ gens[ch]
                z = g2.apply_affine(0.0)
                if abs(z) >= 1.0:
                    raise ValueError("orbit point escaped the disc")
                index.append((w2, z, d_hyp(0.0, z)))
                nxt.append((w2, g2))
                if len(index) > max_index:
                    raise WordBudgetExceeded(
                        f"orbit index exceeds {max_index} entries")
        frontier = nxt
    # the action is free: orbit points must be pairwise distinct
    pts = np.array([p for _, p, _ in index])
    if len(pts) > 1:
        dists = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(dists, 1.0)
        if dists.min() < 1e-9:
            raise ValueError("orbit collision: group action is not free here")
    m0 = min((d for _, _, d in index if d > 0), default=None)
    return FuchsianGroupModel(gens, word_radius, index, m0)


def harnack_constant(delta: float, delta_prime: float) -> float:
    """sup over x, y in D(0, r), |z| = R of the Poisson density ratio,
    r = tanh(delta/2), R = tanh(delta_prime/2).

    The Poisson kernel is harmonic in x, so both extrema sit on |x| = r
    at the angles nearest and farthest from z, giving ((R+r)/(R-r))^2.
    """
    if not 0.0 < delta < delta_prime:
        raise BadRadii(f"need 0 < delta < delta_prime; got {delta}, {delta_prime}")
    r = math.tanh(delta / 2.0)
    big_r = math.tanh(delta_prime / 2.0)
    return ((big_r + r) / (big_r - r)) ** 2


def harnack_constant_grid(delta: float, delta_prime: float,
                          nx: int = 200, ny: int = 200, nz: int = 720) -> float:
    """Brute-force grid oracle for the Harnack constant."""
    if not 0.0 < delta < delta_prime:
        raise BadRadii(f"need 0 < delta < delta_prime; got {delta}, {delta_prime}")
    r = math.tanh(delta / 2.0)
    big_r = math.tanh(delta_prime / 2.0)
    u = np.linspace(-r, r, nx)
    v = np.linspace(-r, r, ny)
    X, Y = np.meshgrid(u, v)
    mask = X ** 2 + Y ** 2 <= r * r
    xs = (X[mask] + 1j * Y[mask])
    best = 1.0
    for ang in 2.0 * math.pi * (np.arange(nz) + 0.5) / nz:
        z = big_r * complex(math.cos(ang), math.sin(ang))
        dens = (big_r ** 2 - np.abs(xs) ** 2) / (
            2.0 * math.pi * big_r * np.abs(xs - z) ** 2)
        ratio = float(dens.max() / dens.min())
        if ratio > best:
            best = ratio
    return best


@dataclass
class FLSConfig:
    delta: float = 0.15
    delta_prime: float = 0.35
    harnack_C: float = 0.0
    time_cap: float = 1e4

    def __post_init__(self):
        if not 0.0 < self.delta < self.delta_prime:
            raise BadRadii(f"need 0 < delta < delta_prime; got "
                           f"{self.delta}, {self.delta_prime}")
        if self.harnack_C == 0.0:
            self.harnack_C = harnack_constant(self.delta, self.delta_prime)
        if self.harnack_C < 1.0:
            raise ValueError("harnack_C must be >= 1")

    def validate_against(self, model: FuchsianGroupModel) -> None:
        if model.m0 is None:
            raise ValueError("model has an empty orbit (word_radius 0)")
        if not self.delta_prime < model.m0 / 2.0:
            raise BadRadii(f"delta_prime {self.delta_prime} must be below "
                           f"m0/2 = {model.m0 / 2.0}")


@dataclass
class DiscretizationRecord:
    """One run of the S/R recursion with its acceptance bookkeeping."""

    s_times: list[float]          # S_0, S_1, ..., hyperbolic clock
    r_times: list[float]          # R_1, R_2, ...
    visited: list[str]            # X_n words, n >= 1
    kappas: list[float]
    coins: list[float]
    accepted: list[int]           # N_k (indices into visited, 1-based)
    discrete_walk: list[str]      # X_{N_k}
    discrete_times: list[float]   # S_{N_k}
    truncated: bool = False
    truncation_reason: str = ""

    def validate(self, harnack_C: float) -> None:
        seq: list[float] = []
        for n in range(max(len(self.s_times), len(self.r_times))):
            if n < len(self.s_times):
                seq.append(self.s_times[n])
            if n < len(self.r_times):
                seq.append(self.r_times[n])
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError("stop times are not strictly interleaved")
        lo = 1.0 / harnack_C ** 2 - 1e-12
        if any(not lo <= k <= 1.0 + 1e-12 for k in self.kappas):
            raise ValueError("kappa outside [1/C^2, 1]")
        if any(b <= a for a, b in zip(self.accepted, self.accepted[1:])):
            raise ValueError("accepted indices not strictly increasing")
        for n in self.accepted:
            if not self.coins[n - 1] < self.kappas[n - 1]:
                raise ValueError("accepted index violates the coin rule")
        if any(b <= a for a, b in zip(self.discrete_times, self.discrete_times[1:])):
            raise ValueError("discrete times not strictly increasing")

    @property
    def stop_times(self) -> list[tuple[float, float]]:
        return [(self.s_times[n + 1], self.r_times[n])
                for n in range(min(len(self.s_times) - 1, len(self.r_times)))]

    def to_json(self) -> str:
        return json.dumps({
            "s_times": self.s_times,
            "r_times": self.r_times,
            "visited": self.visited,
            "kappas": self.kappas,
            "coins": self.coins,
            "accepted": self.accepted,
            "discrete_walk": self.discrete_walk,
            "discrete_times": self.discrete_times,
            "truncated": self.truncated,
        })


def _kappa(big_r: float, x_entry: complex, z_exit: complex,
           harnack_C: float) -> float:
    """kappa = (1/C) * P(center, z)/P(entry, z) in the transported disc."""
    z = z_exit / abs(z_exit) * big_r  # project the discrete exit to the circle
    num = poisson_density(0.0, z, big_r)
    den = poisson_density(x_entry, z, big_r)
    return (1.0 / harnack_C) * num / den


class _Recursion:
    """Shared S/R/kappa bookkeeping for both discretization drivers."""

    def __init__(self, model: FuchsianGroupModel, config: FLSConfig,
                 seed: int, coin_hook=None):
        config.validate_against(model)
        self.model = model
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.coin_hook = coin_hook
        self.r_big = math.tanh(config.delta_prime / 2.0)
        self.s_times: list[float] = []
        self.r_times: list[float] = []
        self.visited: list[str] = []
        self.kappas: list[float] = []
        self.coins: list[float] = []
        self.accepted: list[int] = []
        self.discrete_walk: list[str] = []
        self.discrete_times: list[float] = []

    def register_entry(self, word: str, tau: float) -> None:
        self.r_times.append(tau)
        self.visited.append(word)

    def register_exit(self, x_entry_local: complex, z_exit_local: complex,
                      tau: float) -> None:
        """Both points in coordinates where the current V disc is centered."""
        self.s_times.append(tau)
        if not self.visited:
            return  # S_0: exit of V_Id, no kappa attached
        kap = _kappa(self.r_big, x_entry_local, z_exit_local,
                     self.config.harnack_C)
        self.kappas.append(kap)
        coin = (self.coin_hook(len(self.kappas))
                if self.coin_hook else float(self.rng.random()))
        self.coins.append(coin)
        if coin < kap:
            self.accepted.append(len(self.kappas))
            self.discrete_walk.append(self.visited[-1])
            self.discrete_times.append(tau)

    def record(self, truncated: bool = False, reason: str = "") -> DiscretizationRecord:
        rec = DiscretizationRecord(
            self.s_times, self.r_times, self.visited, self.kappas,
            self.coins, self.accepted, self.discrete_walk,
            self.discrete_times, truncated, reason)
        rec.validate(self.config.harnack_C)
        return rec


def discretize(path, model: FuchsianGroupModel, config: FLSConfig,
               seed: int, coin_hook=None) -> DiscretizationRecord:
    """Run the S/R recursion over a recorded HyperbolicPath.

    Entries and exits are detected at the recorded samples (one-step
    resolution).  The path must start inside V_Id.  If the path leaves
    the indexed orbit's coverage the record is truncated with a flag.
    """
    pts = np.asarray(path.trace.points)
    taus = np.asarray(path.clock.hyper_times)
    rec = _Recursion(model, config, seed, coin_hook)
    orbit_pts, orbit_words = model.orbit_arrays()
    coverage = max(d for _, _, d in model.orbit_index) + model.m0 / 2.0
    # hyperbolic distances of every sample to every orbit point
    cross = np.abs(pts[:, None] - orbit_pts[None, :])
    denom = np.abs(1.0 - np.conj(orbit_pts[None, :]) * pts[:, None])
    dist = 2.0 * np.arctanh(np.clip(cross / denom, 0.0, 1.0 - 1e-15))
    d_origin = dist[:, 0]
    state = "inside_v"      # currently inside V of cur_word
    cur_idx = int(np.argmin(dist[0]))  # typically the identity at V_Id
    if dist[0, cur_idx] >= config.delta_prime:
        raise OrbitCoverageExceeded("path must start inside an indexed V disc")
    cur_word = orbit_words[cur_idx]
    entry_local = 0.0 + 0.0j
    i = 0
    n = len(pts)
    while i < n:
        if state == "inside_v":
            j = i
            while j < n and dist[j, cur_idx] < config.delta_prime:
                j += 1
            if j >= n:
                return rec.record(truncated=True, reason="path ended inside V")
            g_inv = model.word_map(invert_word(cur_word))
            rec.register_exit(entry_local, g_inv.apply_affine(complex(pts[j])),
                              float(taus[j]))
            i = j
            state = "wandering"
        else:
            j = i
            while j < n:
                if d_origin[j] > coverage:
                    return rec.record(truncated=True,
                                      reason="beyond orbit coverage")
                k = int(np.argmin(dist[j]))
                if dist[j, k] <= config.delta:
                    break
                j += 1
            if j >= n:
                return rec.record(truncated=True, reason="path ended wandering")
            k = int(np.argmin(dist[j]))
            cur_idx = k
            cur_word = orbit_words[k]
            rec.register_entry(cur_word, float(taus[j]))
            g_inv = model.word_map(invert_word(cur_word))
            entry_local = g_inv.apply_affine(complex(pts[j]))
            i = j
            state = "inside_v"
    return rec.record(truncated=True, reason="path exhausted")


def run_fls_record(model: FuchsianGroupModel, config: FLSConfig,
                   k_target: int, seed: int, step_scale: float = 5e-4,
                   max_dtau: float = 2.5e-3, coin_hook=None,
                   max_visits: int = 10_000, sample_hook=None,
                   record_stride: int = 10 ** 9) -> DiscretizationRecord:
    """Simulate a fresh Brownian path and discretize it on the fly until
    k_target accepted steps.

    The path is driven in a moving frame: coordinates are renormalized
    by the nearest orbit word whenever its length reaches
    word_radius - 1, so positions stay near the origin regardless of
    how deep the path travels (including cusp excursions).  First
    entries into the union of F discs are located by iterated exits of
    safe hyperbolic balls (no F disc intersects a ball of radius equal
    to the current distance-to-union).
    """
    config.validate_against(model)
    rec = _Recursion(model, config, seed, coin_hook)
    rng = np.random.default_rng(seed + 10 ** 9)
    orbit_pts, orbit_words = model.orbit_arrays()
    renorm_len = max(model.word_radius - 1, 1)
    tau = 0.0
    z = 0.0 + 0.0j          # position in the moving frame
    frame = ""              # frame word: global position is frame . z
    entry_local = 0.0 + 0.0j
    state = "inside_v"      # starting inside V_Id
    cur_local_word = ""     # word of the current V center in frame coords
    entry_clock = tau

    def leg(start: complex, stop: StopRule):
        nonlocal tau
        p = simulate_planar(start, step_scale, stop,
                            seed=int(rng.integers(1, 2 ** 31 - 1)),
                            record_stride=record_stride, max_dtau=max_dtau)
        if sample_hook is not None:
            sample_hook(tau, p.hyper_times, p.points, frame)
        tau += float(p.hyper_times[-1])
        return complex(p.points[-1]), p.hit_first

    def dists_to_orbit(w: complex) -> np.ndarray:
        num = np.abs(w - orbit_pts)
        den = np.abs(1.0 - np.conj(orbit_pts) * w)
        return 2.0 * np.arctanh(np.clip(num / den, 0.0, 1.0 - 1e-15))

    while len(rec.accepted) < k_target:
        if len(rec.visited) >= max_visits:
            return rec.record(truncated=True, reason="visit budget")
        if state == "inside_v":
            center = orbit_pts[orbit_words.index(cur_local_word)]
            z, _ = leg(z, StopRule("exit_disc",
                                   {"center": center,
                                    "hyper_radius": config.delta_prime}))
            g_inv = model.word_map(invert_word(cur_local_word))
            rec.register_exit(entry_local, g_inv.apply_affine(z), tau)
            state = "wandering"
            entry_clock = tau
        else:
            if tau - entry_clock > config.time_cap:
                return rec.record(truncated=True, reason="excursion time cap")
            d = dists_to_orbit(z)
            k = int(np.argmin(d))
            if len(orbit_words[k]) >= renorm_len:
                # move the frame so local coordinates stay near 0
                w = orbit_words[k]
                frame = reduce_word(frame + w)
                z = model.word_map(invert_word(w)).apply_affine(z)
                d = dists_to_orbit(z)
                k = int(np.argmin(d))
            nearest = k
            gap = float(d[nearest]) - config.delta
            if gap > 0.02:
                # walk on safe balls: no F disc reaches inside this ball
                radius = min(gap, 0.9)
                z, _ = leg(z, StopRule("exit_disc",
                                       {"center": z, "hyper_radius": radius}))
            else:
                # close to F of the nearest word: resolve hit-or-retreat
                target = orbit_pts[nearest]
                retreat = max(model.m0 - config.delta - 0.05, 2 * config.delta)
                z, hit = leg(z, StopRule("hit_or_exit",
                                         {"hit_center": target,
                                          "hit_hyper_radius": config.delta,
                                          "exit_center": target,
                                          "exit_hyper_radius": retreat}))
                if hit:
                    cur_local_word = orbit_words[nearest]
                    rec.register_entry(reduce_word(frame + cur_local_word), tau)
                    entry_local = model.word_map(
                        invert_word(cur_local_word)).apply_affine(z)
                    state = "inside_v"
    return rec.record()


def discrete_walk_statistics(records: list[DiscretizationRecord],
                             model: FuchsianGroupModel,
                             min_accepted: int = 2) -> dict:
    """Report on the discretized walk across independent records.

    Includes the chi-square comparison of increment laws at positions 1
    and 2 (i.i.d. check), the S_{N_k}/k slope with its standard error,
    the mean first-step displacement, and the word-coverage diagnostic.
    """
    usable = [r for r in records if len(r.accepted) >= min_accepted]
    if not usable:
        raise InsufficientData("no record has enough accepted steps")
    inc1, inc2 = [], []
    slopes = []
    first_disp = []
    coverage = []
    seen: set[str] = set()
    for r in usable:
        words = r.discrete_walk
        inc1.append(words[0])
        inc2.append(reduce_word(invert_word(words[0]) + words[1]))
        k = len(r.discrete_times)
        slopes.append(r.discrete_times[-1] / k)
        first_disp.append(model.word_displacement(words[0]))
        seen.add(inc1[-1])
        coverage.append(len(seen))
    cats = sorted(set(inc1) | set(inc2))
    c1 = np.array([sum(w == c for w in inc1) for c in cats])
    c2 = np.array([sum(w == c for w in inc2) for c in cats])
    keep = (c1 + c2) >= 5  # pool sparse categories for the chi-square
    table = np.stack([np.append(c1[keep], c1[~keep].sum()),
                      np.append(c2[keep], c2[~keep].sum())])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        pvalue = 1.0
    else:
        pvalue = float(sps.chi2_contingency(table).pvalue)
    slopes = np.array(slopes)
    disp = np.array(first_disp)
    half = len(disp) // 2
    return {
        "records_used": len(usable),
        "iid_chi2_pvalue": pvalue,
        "slope_mean": float(slopes.mean()),
        "slope_se": float(slopes.std(ddof=1) / math.sqrt(len(slopes))),
        "first_moment_mean": float(disp.mean()),
        "first_moment_running_drift": float(
            abs(disp[:half].mean() - disp.mean()) / disp.mean()),
        "coverage_curve": coverage,
        "distinct_first_words": len(seen),
    }
