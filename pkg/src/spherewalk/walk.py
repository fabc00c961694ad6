"""Right random walks on finitely generated subgroups of PSL(2,C).

Partial products X_n = h_1 ... h_n grow like e^{lambda n}, which
overflows det=1 representatives long before n = 2000.  Products are
therefore stored as unit-Frobenius matrices together with an
accumulated log scale; all norm bookkeeping happens in the log domain.
The contraction checks for proposition-style containments run in the
Cartan frame of X_n, where the two disc conditions reduce to exact
log-radius inequalities (unitary parts preserve the chordal metric),
so radii as small as e^{-1200} stay meaningful.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ElementarySupportWarning, WindowInvalid
from .moebius import (
    CP1Point, MoebiusMap, batch_svd_top, cartan, chordal_circle,
    chordal_distance, DEGENERATE_ALPHA_SQ,
)


@dataclass(frozen=True)
class StepMeasure:
    """Finitely supported step law on a subgroup of PSL(2,C)."""

    generators: tuple[tuple[str, MoebiusMap], ...]
    probabilities: tuple[float, ...]
    symmetric: bool = False

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        if len(probs) != len(self.generators):
            raise ValueError("one probability per generator required")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.symmetric:
            mats = [g.matrix for _, g in self.generators]
            for _, g in self.generators:
                inv = g.inverse().matrix
                if not any(np.allclose(inv, m, atol=1e-10) for m in mats):
                    raise ValueError("symmetric flag set but support not inverse-closed")

    @staticmethod
    def uniform(pairs: list[tuple[str, MoebiusMap]], symmetric: bool = False) -> "StepMeasure":
        n = len(pairs)
        return StepMeasure(tuple(pairs), tuple([1.0 / n] * n), symmetric)

    @property
    def maps(self) -> list[MoebiusMap]:
        return [g for _, g in self.generators]


def gamma2_halfplane_measure() -> StepMeasure:
    """Uniform measure on {T, T^-1, S, S^-1} with T = (1,2,0,1), S = (1,0,2,1)."""
    t = MoebiusMap(1, 2, 0, 1)
    s = MoebiusMap(1, 0, 2, 1)
    return StepMeasure.uniform(
        [("T", t), ("t", t.inverse()), ("S", s), ("s", s.inverse())], symmetric=True)


def support_is_elementary(maps: list[MoebiusMap], tol: float = 1e-8) -> bool:
    """Cheap elementarity screen: all maps unitary, or a common fixed point."""
    nontrivial = [g for g in maps if not np.allclose(g.matrix, np.eye(2), atol=tol)]
    if not nontrivial:
        return True
    if all(g.is_unitary(tol) for g in nontrivial):
        return True
    # candidate fixed points of the first map: eigenvectors of its matrix
    _, vecs = np.linalg.eig(nontrivial[0].matrix)
    for j in range(vecs.shape[1]):
        p = CP1Point(vecs[0, j], vecs[1, j])
        if all(chordal_distance(g.apply(p), p) < tol for g in nontrivial):
            return True
    return False


@dataclass
class WalkRealization:
    """A sampled right walk with scaled partial products.

    scaled_products[k] has unit Frobenius norm and
    X_k = exp(log_scales[k]) * scaled_products[k] (a det=1 matrix).
    """

    labels: list[str]
    step_maps: list[MoebiusMap]
    scaled_products: np.ndarray  # (n+1, 2, 2) complex
    log_scales: np.ndarray       # (n+1,)
    seed: int

    def __len__(self) -> int:
        return len(self.labels)

    def product(self, k: int) -> MoebiusMap:
        """Materialize X_k as a det=1 MoebiusMap (overflows for very long walks)."""
        s = math.exp(self.log_scales[k])
        m = self.scaled_products[k] * s
        return MoebiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def partial_products(self) -> list[MoebiusMap]:
        return [self.product(k) for k in range(len(self.labels) + 1)]


def _renorm(m: np.ndarray) -> tuple[np.ndarray, float]:
    s = float(np.linalg.norm(m))
    return m / s, math.log(s)


def sample_walk(measure: StepMeasure, n: int, seed: int) -> WalkRealization:
    """Sample n i.i.d. increments and their right partial products."""
    if n < 1:
        raise ValueError("n >= 1 required")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(measure.generators), size=n, p=np.array(measure.probabilities))
    labels = [measure.generators[i][0] for i in idx]
    mats = [measure.generators[i][1].matrix for i in idx]
    prods = np.empty((n + 1, 2, 2), dtype=complex)
    logs = np.empty(n + 1)
    cur, lg = np.eye(2, dtype=complex), 0.0
    cur, dl = _renorm(cur)
    lg += dl
    prods[0], logs[0] = cur, lg
    for k, m in enumerate(mats):
        cur = cur @ m
        cur, dl = _renorm(cur)
        lg += dl
        prods[k + 1], logs[k + 1] = cur, lg
    steps = [measure.generators[i][1] for i in idx]
    return WalkRealization(labels, steps, prods, logs, seed)


def _batch_products(measure: StepMeasure, n: int, trials: int, seed: int
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Final scaled products and log scales for `trials` independent walks."""
    rng = np.random.default_rng(seed)
    gens = np.stack([g.matrix for _, g in measure.generators])
    probs = np.array(measure.probabilities)
    cur = np.broadcast_to(np.eye(2, dtype=complex), (trials, 2, 2)).copy()
    logs = np.full(trials, 0.5 * math.log(2.0))  # Frobenius of identity is sqrt(2)
    cur /= math.sqrt(2.0)
    for _ in range(n):
        idx = rng.choice(len(gens), size=trials, p=probs)
        cur = np.einsum("nij,njk->nik", cur, gens[idx])
        s = np.linalg.norm(cur.reshape(trials, 4), axis=1)
        cur /= s[:, None, None]
        logs += np.log(s)
    return cur, logs


def lyapunov_estimate(measure: StepMeasure, n: int, trials: int, seed: int
                      ) -> tuple[float, float]:
    """Mean of (1/n) log ||X_n|| across trials with a 95% normal CI halfwidth."""
    if trials < 2:
        raise ValueError("trials >= 2 required")
    if support_is_elementary(measure.maps):
        warnings.warn("step measure support looks elementary; Lyapunov exponent "
                      "may vanish", ElementarySupportWarning)
    cur, logs = _batch_products(measure, n, trials, seed)
    s1, _, _ = batch_svd_top(cur)
    vals = (logs + np.log(np.maximum(s1, 1e-300))) / n
    mean = float(np.mean(vals))
    half = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(trials)
    return mean, half


@dataclass(frozen=True)
class ContractionRecord:
    """Cartan data of one partial product X_n."""

    n: int
    alpha_n: complex          # overflows to inf for very long walks; norm_log is exact
    y_n: CP1Point
    z_n: CP1Point
    norm_log: float
    degenerate: bool


def contraction_records(walk: WalkRealization) -> list[ContractionRecord]:
    """Per-step Cartan data of the partial products (n = 0 .. len(walk))."""
    if len(walk) < 1:
        raise ValueError("walk must be nonempty")
    s1, u1, v1 = batch_svd_top(walk.scaled_products)
    norm_logs = walk.log_scales + np.log(np.maximum(s1, 1e-300))
    out = []
    for k in range(walk.scaled_products.shape[0]):
        try:
            alpha = complex(math.exp(norm_logs[k]))
        except OverflowError:
            alpha = complex(math.inf)
        y = CP1Point(-v1[k, 1].conjugate(), v1[k, 0].conjugate())
        z = CP1Point(u1[k, 0], u1[k, 1])
        degenerate = 2.0 * norm_logs[k] <= math.log(DEGENERATE_ALPHA_SQ)
        out.append(ContractionRecord(k, alpha, y, z, float(norm_logs[k]), degenerate))
    return out


def _log_w(log_r: float) -> float:
    """log of W(r) = r / sqrt(1 - r^2) given log r (r < 1)."""
    r2 = math.exp(2.0 * log_r)
    if r2 >= 1.0:
        raise ValueError("radius must be < 1")
    return log_r - 0.5 * math.log1p(-r2)


@dataclass(frozen=True)
class ContainmentResult:
    n: int
    outside_to_inside: bool   # complement of D(y, e^{-l'n}) -> D(z, e^{-l'n})
    inside_to_far: bool       # D(y, e^{-2l''n}) -> complement of D(z, 1/2)
    degenerate: bool


def contraction_check(walk: WalkRealization, lambda_prime: float,
                      lambda_dblprime: float, grid: int = 64
                      ) -> tuple[list[ContainmentResult], int | None, float]:
    """Check both contraction containments for every n of the walk.

    Points are sampled on the critical chordal circles in the Cartan frame
    of X_n, where the unitary factors act isometrically and the diagonal
    factor acts by w -> alpha^2 w in the chart at [e2]; the verdict is then
    an exact log-domain comparison, uniform over the sampled phases.
    Returns (per-n results, first n after which both always hold, tail pass
    rate over the last half).
    """
    if not 0 < lambda_prime < lambda_dblprime:
        raise WindowInvalid(f"need 0 < lambda' < lambda''; got {lambda_prime}, {lambda_dblprime}")
    recs = contraction_records(walk)
    results = []
    for rec in recs:
        if rec.degenerate or rec.n == 0:
            results.append(ContainmentResult(rec.n, False, False, True))
            continue
        log_a = rec.norm_log
        lr1 = -lambda_prime * rec.n
        lr2 = -2.0 * lambda_dblprime * rec.n
        lw1 = _log_w(lr1)
        lw2 = _log_w(lr2)
        # the diagonal action only sees |w|, so one verdict covers every phase
        if grid < 1:
            raise ValueError("grid >= 1 required")
        cond1 = 2.0 * log_a + 2.0 * lw1 >= 0.0
        cond2 = 2.0 * log_a + lw2 <= 0.5 * math.log(3.0)
        results.append(ContainmentResult(rec.n, cond1, cond2, False))
    first = None
    for k in range(len(results)):
        if all(r.outside_to_inside and r.inside_to_far for r in results[k:]):
            first = k
            break
    tail = results[len(results) // 2:]
    rate = sum(r.outside_to_inside and r.inside_to_far for r in tail) / max(len(tail), 1)
    return results, first, rate


def contraction_check_direct(g: MoebiusMap, lambda_prime: float,
                             lambda_dblprime: float, n: int, grid: int = 64
                             ) -> ContainmentResult:
    """Same verdicts via explicit point pushing; only sound for radii >> 1e-12."""
    triple = cartan(g)
    y = triple.kprime.inverse().apply(CP1Point(0, 1))
    z = triple.k.apply(CP1Point(1, 0))
    if abs(triple.alpha) ** 2 <= DEGENERATE_ALPHA_SQ or n == 0:
        return ContainmentResult(n, False, False, True)
    r1 = math.exp(-lambda_prime * n)
    r2 = math.exp(-2.0 * lambda_dblprime * n)
    ok1 = all(chordal_distance(g.apply(p), z) <= r1 * (1 + 1e-9)
              for p in chordal_circle(y, r1, grid))
    ok2 = all(chordal_distance(g.apply(p), z) >= 0.5 * (1 - 1e-9)
              for p in chordal_circle(y, r2, grid)) and \
        chordal_distance(g.apply(y), z) >= 0.5 * (1 - 1e-9)
    return ContainmentResult(n, ok1, ok2, False)


def oseledets_direction(walk: WalkRealization) -> tuple[list[CP1Point], float]:
    """Sequence z_n of contraction centers and its tail Cauchy diagnostic."""
    if len(walk) < 2:
        raise ValueError("walk length >= 2 required")
    recs = contraction_records(walk)
    z_seq = [r.z_n for r in recs]
    tail_start = max(1, len(z_seq) - len(z_seq) // 4)
    diffs = [chordal_distance(z_seq[k - 1], z_seq[k])
             for k in range(tail_start, len(z_seq))]
    return z_seq, max(diffs) if diffs else 0.0


def stationary_measure_sample(measure: StepMeasure, n: int, trials: int,
                              z0: CP1Point, seed: int) -> list[CP1Point]:
    """apply(X_n, z0) across independent trials; approximates the stationary law."""
    cur, _ = _batch_products(measure, n, trials, seed)
    vecs = np.einsum("nij,j->ni", cur, np.array([z0.x1, z0.x2]))
    return [CP1Point(v[0], v[1]) for v in vecs]


def largest_cluster_fraction(points: list[CP1Point], tol: float = 1e-6) -> float:
    """Fraction of samples in the largest pairwise-tol-close cluster (atom probe)."""
    n = len(points)
    arr = np.array([[p.x1, p.x2] for p in points])
    best = 0
    for i in range(n):
        cross = np.abs(arr[i, 0] * arr[:, 1] - arr[:, 0] * arr[i, 1])
        best = max(best, int(np.sum(cross <= tol)))
    return best / n


def dump_walk_csv(walk: WalkRealization, path) -> None:
    """CSV dump: n, label, norm_log, alpha_abs, y/z affine chart data."""

    def chart(p: CP1Point):
        if abs(p.x2) >= abs(p.x1):
            w = p.x1 / p.x2
            return 0, w.real, w.imag
        w = p.x2 / p.x1
        return 1, w.real, w.imag

    recs = contraction_records(walk)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "label", "norm_log", "alpha_abs",
                     "y_chart", "y_re", "y_im_chart", "z_chart", "z_re", "z_im_chart"])
        for rec in recs:
            label = walk.labels[rec.n - 1] if rec.n >= 1 else ""
            yc, yr, yi = chart(rec.y_n)
            zc, zr, zi = chart(rec.z_n)
            wr.writerow([rec.n, label, repr(rec.norm_log), repr(abs(rec.alpha_n)),
                         yc, repr(yr), repr(yi), zc, repr(zr), repr(zi)])
