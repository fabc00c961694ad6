"""Monte Carlo experiments on developed hyperbolic Brownian paths.

The experiments push a hyperbolic Brownian path through a developing
map and measure: tail oscillation of the image (convergence to a limit
point), Cesaro concentration of time averages at that limit, the
boundary law of the limit point (harmonic measure), and, along the
orbit discretization, the contraction-window events E_k and occupation
times T_k of shrinking discs around the walk's contraction centers.

Distances to the contraction centers are evaluated in the moving frame
of the discretization: with the frame map g stored as a unit-Frobenius
matrix A (the norm factor cancels), the chordal distance of the global
point g.u to a unit target vector y is |det[A u, y]| / |A u|.  This
stays accurate long after global disc coordinates have saturated
against the unit circle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .brownian import StopRule, simulate_planar
from .errors import ConfigInvalid, InsufficientAcceptedSteps
from .fls import (
    FLSConfig, FuchsianGroupModel, build_gamma2_model, invert_word,
    reduce_word, run_fls_record,
)
from .moebius import CP1Point, MoebiusMap, _svd2
from .structures import DevelopingStructure, structure_from_descriptor

ONTO_CASE_NOTE = (
    "Onto developing maps (convergence dichotomy case 1) are verified "
    "via proof ingredients only: contraction-window containments, "
    "escape-event certainty, annulus-hitting scaling, and occupation "
    "decay. No onto structure is simulated directly.")

DYADIC_LEVELS = 10
GRID_POINTS = 1024
EXCURSION_K = 5.0  # radius multiplier K in the K*log(k) excursion proxy

# The simulated lift is the diffusion with generator (1/2) Delta_hyp
# (standard planar Brownian motion under the squared-metric clock).
# Experiment horizons and reported times follow the convention where
# Brownian motion is generated by Delta_hyp itself, whose time unit is
# half the simulated hyperbolic clock.
CLOCK_FACTOR = 2.0


@dataclass
class ExperimentConfig:
    """Shared configuration for all experiments."""

    structure: DevelopingStructure
    horizon: float
    trials: int
    epsilon: float = 0.05
    lambda_window: tuple[float, float] | None = None
    seed: int = 0
    start: complex = 0.0 + 0.0j
    step_scale: float = 5e-4
    max_dtau: float = -1.0
    osc_threshold: float = 0.01
    word_radius: int = 2
    fls: FLSConfig = field(default_factory=FLSConfig)
    k_min: int = 5
    k_max: int = 30

    def validate(self) -> None:
        if self.horizon <= 0:
            raise ConfigInvalid("horizon must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigInvalid("epsilon must lie in (0, 1]")
        if self.trials <= 0:
            raise ConfigInvalid("trials must be positive")
        if self.lambda_window is not None:
            lo, hi = self.lambda_window
            if not 0.0 < lo < hi:
                raise ConfigInvalid("lambda window needs 0 < lo < hi")
        if abs(self.start) >= 1.0:
            raise ConfigInvalid("start must lie in the open unit disc")
        if not 2 <= self.k_min < self.k_max:
            raise ConfigInvalid("need 2 <= k_min < k_max")

    def echo(self) -> dict:
        return {
            "structure": self.structure.descriptor,
            "horizon": self.horizon, "trials": self.trials,
            "epsilon": self.epsilon, "lambda_window": self.lambda_window,
            "seed": self.seed,
            "start": [self.start.real, self.start.imag],
            "step_scale": self.step_scale, "max_dtau": self.max_dtau,
            "osc_threshold": self.osc_threshold,
            "word_radius": self.word_radius,
            "fls": {"delta": self.fls.delta,
                    "delta_prime": self.fls.delta_prime,
                    "harnack_C": self.fls.harnack_C,
                    "time_cap": self.fls.time_cap},
            "k_min": self.k_min, "k_max": self.k_max,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        try:
            structure = structure_from_descriptor(data["structure"])
            fls_keys = data.get("fls", {})
            fls = FLSConfig(**fls_keys)
            start = data.get("start", [0.0, 0.0])
            window = data.get("lambda_window")
            return ExperimentConfig(
                structure=structure,
                horizon=float(data["horizon"]),
                trials=int(data["trials"]),
                epsilon=float(data.get("epsilon", 0.05)),
                lambda_window=None if window is None else
                (float(window[0]), float(window[1])),
                seed=int(data.get("seed", 0)),
                start=complex(start[0], start[1]),
                step_scale=float(data.get("step_scale", 5e-4)),
                max_dtau=float(data.get("max_dtau", -1.0)),
                osc_threshold=float(data.get("osc_threshold", 0.01)),
                word_radius=int(data.get("word_radius", 2)),
                fls=fls,
                k_min=int(data.get("k_min", 5)),
                k_max=int(data.get("k_max", 30)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad experiment config: {exc}") from exc


@dataclass
class ExperimentReport:
    """Per-trial curves plus aggregate statistics for one experiment."""

    name: str
    config: dict
    trials: list[dict]
    aggregate: dict
    curves: list[tuple[int, float, float, str]]  # trial, t_or_k, value, series
    notes: list[str]

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name, "config": self.config,
            "aggregate": self.aggregate, "notes": self.notes,
            "trials": self.trials,
        }, indent=2, sort_keys=True, default=_jsonable)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("trial,t_or_k,value,series_name\n")
            for trial, t, value, series in self.curves:
                fh.write(f"{trial},{t!r},{value!r},{series}\n")


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _trial_seeds(base: int, trials: int) -> np.ndarray:
    rng = np.random.default_rng(base)
    return rng.integers(1, 2 ** 31 - 1, size=trials)


# ---------------------------------------------------------------------------
# developed-path experiments (globally defined structures)


def _require_global(config: ExperimentConfig) -> None:
    if config.structure.domain != "disc":
        raise ConfigInvalid(
            "experiment needs a globally defined developing map on the disc")


def _develop_points(dev: DevelopingStructure, pts: np.ndarray) -> np.ndarray:
    """Vectorized developing map for the disc kinds."""
    if dev.kind == "identity_fuchsian":
        return np.asarray(pts, dtype=complex)
    m = dev.twist.matrix
    return (m[0, 0] * pts + m[0, 1]) / (m[1, 0] * pts + m[1, 1])


def _chordal_array(z: np.ndarray, w) -> np.ndarray:
    z = np.asarray(z)
    return np.abs(z - w) / np.sqrt((1.0 + np.abs(z) ** 2)
                                   * (1.0 + np.abs(w) ** 2))


def _simulate_developed(config: ExperimentConfig, seed: int):
    """One path to the hyperbolic horizon: (taus, developed image).

    If the simulation caps at the unit circle before the horizon, the
    final point is frozen there (its subsequent hyperbolic motion is
    below double precision in the chart anyway).
    """
    path = simulate_planar(
        config.start, config.step_scale,
        StopRule("hyper_horizon", {"horizon": CLOCK_FACTOR * config.horizon}),
        seed=seed, record_stride=1, max_dtau=config.max_dtau)
    taus = path.hyper_times / CLOCK_FACTOR
    image = _develop_points(config.structure, path.points)
    return taus, image


def _grid_image(config: ExperimentConfig, taus, image) -> np.ndarray:
    grid = np.linspace(0.0, config.horizon, GRID_POINTS)
    re = np.interp(grid, taus, image.real)
    im = np.interp(grid, taus, image.imag)
    return re + 1j * im


def dyadic_times(horizon: float, levels: int = DYADIC_LEVELS) -> np.ndarray:
    return horizon / 2.0 ** np.arange(levels, -1, -1, dtype=float)


def _suffix_oscillation(grid_image: np.ndarray, horizon: float
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Chordal diameter of the image over [T, horizon] on the dyadic grid."""
    ts = dyadic_times(horizon)
    cuts = np.searchsorted(
        np.linspace(0.0, horizon, len(grid_image)), ts, side="left")
    osc = np.empty(len(ts))
    diam = 0.0
    prev_cut = len(grid_image)
    for j in range(len(ts) - 1, -1, -1):
        lo = int(cuts[j])
        chunk = grid_image[lo:prev_cut]
        tail = grid_image[lo:]
        if len(chunk) and len(tail):
            d = _chordal_array(chunk[:, None], tail[None, :])
            diam = max(diam, float(d.max()))
        osc[j] = diam
        prev_cut = lo
    return ts, osc


def dichotomy_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Tail oscillation of the developed path and convergence verdicts."""
    config.validate()
    _require_global(config)
    seeds = _trial_seeds(config.seed, config.trials)
    trials, curves = [], []
    half = config.horizon / 2.0
    for i, seed in enumerate(seeds):
        taus, image = _simulate_developed(config, int(seed))
        grid = _grid_image(config, taus, image)
        ts, osc = _suffix_oscillation(grid, config.horizon)
        osc_half = float(osc[np.searchsorted(ts, half)])
        converged = bool(osc_half < config.osc_threshold)
        proxy = complex(image[-1])
        trials.append({"trial": i, "converged": converged,
                       "osc_half": osc_half, "limit_proxy": proxy})
        for t, v in zip(ts, osc):
            curves.append((i, float(t), float(v), "osc"))
    frac = float(np.mean([t["converged"] for t in trials]))
    proxies = np.array([t["limit_proxy"] for t in trials])
    if config.structure.kind == "moebius_twisted":
        inv = config.structure.twist.inverse().matrix
        base = (inv[0, 0] * proxies + inv[0, 1]) / \
            (inv[1, 0] * proxies + inv[1, 1])
    else:
        base = proxies
    circle_gap = float(np.max(np.abs(np.abs(base) - 1.0)))
    report = ExperimentReport(
        "dichotomy", config.echo(), trials,
        {"converged_fraction": frac,
         "max_circle_gap": circle_gap,
         "osc_threshold": config.osc_threshold},
        curves, [ONTO_CASE_NOTE])
    return report


def _cesaro_curve(config: ExperimentConfig, taus, image
                  ) -> tuple[np.ndarray, np.ndarray, complex]:
    """c(t, eps) at dyadic t, with the limit proxy as the center."""
    proxy = complex(image[-1])
    ind = (_chordal_array(image, proxy) <= config.epsilon).astype(float)
    dt = np.diff(taus)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (ind[1:] + ind[:-1]))])
    ts = dyadic_times(config.horizon)
    total = np.interp(ts, taus, cum)
    end = float(taus[-1])
    if end < config.horizon:
        # capped path: the frozen point sits at the proxy, indicator 1
        late = ts > end
        total[late] = cum[-1] + (ts[late] - end)
    c = total / ts
    return ts, np.clip(c, 0.0, 1.0), proxy


def cesaro_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Concentration of the time average at the limit point."""
    config.validate()
    _require_global(config)
    seeds = _trial_seeds(config.seed, config.trials)
    trials, curves = [], []
    finals = []
    for i, seed in enumerate(seeds):
        taus, image = _simulate_developed(config, int(seed))
        ts, c, proxy = _cesaro_curve(config, taus, image)
        finals.append(c[-1])
        trials.append({"trial": i, "c_final": float(c[-1]),
                       "limit_proxy": proxy})
        for t, v in zip(ts, c):
            curves.append((i, float(t), float(v), "cesaro"))
    aggregate = {
        "median_c_final": float(np.median(finals)),
        "epsilon": config.epsilon,
    }
    # refinement study: trial 0 at half the step scale
    fine = ExperimentConfig(**{**config.__dict__,
                               "step_scale": config.step_scale / 2.0,
                               "trials": 1})
    taus, image = _simulate_developed(fine, int(seeds[0]))
    _, c_fine, _ = _cesaro_curve(fine, taus, image)
    aggregate["refinement_delta"] = float(abs(c_fine[-1] - finals[0]))
    return ExperimentReport("cesaro", config.echo(), trials, aggregate,
                            curves, [ONTO_CASE_NOTE])


def harmonic_measure_sample(config: ExperimentConfig) -> list[CP1Point]:
    """Limit proxies across trials: samples of the harmonic measure."""
    config.validate()
    _require_global(config)
    seeds = _trial_seeds(config.seed, config.trials)
    out = []
    for seed in seeds:
        _, image = _simulate_developed(config, int(seed))
        out.append(CP1Point.from_affine(complex(image[-1])))
    return out


# ---------------------------------------------------------------------------
# discretization-block experiments (E_k events and occupation times T_k)


def _scaled_word_matrix(model: FuchsianGroupModel, word: str) -> np.ndarray:
    """Unit-Frobenius product matrix of a reduced word (scale dropped)."""
    m = np.eye(2, dtype=complex) / math.sqrt(2.0)
    for ch in reduce_word(word):
        m = m @ model.generators[ch].matrix
        m /= np.linalg.norm(m)
    return m


def _repelling_direction(m_hat: np.ndarray) -> np.ndarray:
    """Unit vector spanning the Cartan direction y = k'^{-1}[e2].

    This is the direction a strongly contracting map pushes away from;
    discs around it house the rare crossing events, while its complement
    is escaped by every generic block.
    """
    _, _, _, vh = _svd2(m_hat)
    v1 = vh[0].conj()
    return np.array([-v1[1].conjugate(), v1[0].conjugate()])


def _frame_distances(m_hat: np.ndarray, pts: np.ndarray,
                     y: np.ndarray) -> np.ndarray:
    """Chordal distance of g.(pts) to the unit vector y, where the frame
    g has unit-Frobenius matrix m_hat (overall scale cancels)."""
    denom = np.sqrt(1.0 + np.abs(pts) ** 2)
    v1 = (m_hat[0, 0] * pts + m_hat[0, 1]) / denom
    v2 = (m_hat[1, 0] * pts + m_hat[1, 1]) / denom
    det = v1 * y[1] - v2 * y[0]
    norm = np.sqrt(np.abs(v1) ** 2 + np.abs(v2) ** 2)
    return np.abs(det) / norm


@dataclass
class BlockSample:
    """Recorded samples of one discretization block c_k."""

    k: int
    taus: np.ndarray        # global hyperbolic times
    dists: np.ndarray       # chordal distance of the image to y_k
    excursion: float        # max d_hyp displacement from the block start


def block_event(sample: BlockSample, radius: float) -> bool:
    """E_k-style event: the block image meets the disc of this radius."""
    return bool(np.any(sample.dists <= radius))


def block_escape(sample: BlockSample, radius: float) -> bool:
    """The block image meets the complement of the disc."""
    return bool(np.any(sample.dists > radius))


def block_occupation(taus: np.ndarray, dists: np.ndarray,
                     radius: float) -> float:
    """Hyperbolic-time occupation of the disc by the block (trapezoid)."""
    if len(taus) < 2:
        return 0.0
    ind = (dists <= radius).astype(float)
    dt = np.diff(taus)
    return float(np.sum(0.5 * dt * (ind[1:] + ind[:-1])))


def _local_dhyp(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    num = np.abs(u - v)
    den = np.abs(1.0 - np.conj(v) * u)
    return 2.0 * np.arctanh(np.clip(num / den, 0.0, 1.0 - 1e-15))


class _SampleLog:
    """Collects per-leg samples from run_fls_record."""

    def __init__(self):
        self.taus: list[np.ndarray] = []
        self.points: list[np.ndarray] = []
        self.frames: list[str] = []

    def __call__(self, tau0, hyper_times, points, frame):
        self.taus.append((tau0 + np.asarray(hyper_times)) / CLOCK_FACTOR)
        self.points.append(np.asarray(points, dtype=complex))
        self.frames.append(frame)


@dataclass
class TrialBlocks:
    """One discretized trial: accepted times, words, and block samples."""

    s_times: list[float]            # S_{N_k}, k = 1..K
    words: list[str]                # X_{N_k}
    blocks: list[BlockSample]       # k = k_min..k_max
    lambda_hat: float               # displacement-rate estimate / 2


def _apply_word_to_point(model: FuchsianGroupModel, word: str,
                         z: complex) -> complex:
    g = MoebiusMap.identity()
    for ch in reduce_word(word):
        g = g @ model.generators[ch]
    return g.apply_affine(z)


def fls_trial_blocks(model: FuchsianGroupModel, config: ExperimentConfig,
                     seed: int) -> TrialBlocks | None:
    """Run one discretization and assemble block samples for k in
    [k_min, k_max].  Returns None when the record truncates early."""
    log = _SampleLog()
    record = run_fls_record(
        model, config.fls, config.k_max + 1, seed,
        step_scale=config.step_scale,
        max_dtau=config.max_dtau if config.max_dtau > 0 else 2.5e-3,
        sample_hook=log, record_stride=20)
    if len(record.accepted) <= config.k_max:
        return None
    s_times = [record.discrete_times[k] / CLOCK_FACTOR
               for k in range(len(record.accepted))]
    words = list(record.discrete_walk)
    # lambda_hat from the deepest accepted word's displacement rate
    k_last = len(words) - 1
    lam = model.word_displacement(words[k_last]) / (2.0 * (k_last + 1))

    frame_mats: dict[str, np.ndarray] = {}

    def mat(frame: str) -> np.ndarray:
        if frame not in frame_mats:
            frame_mats[frame] = _scaled_word_matrix(model, frame)
        return frame_mats[frame]

    all_taus = np.concatenate(log.taus)
    leg_of = np.concatenate([np.full(len(t), j, dtype=int)
                             for j, t in enumerate(log.taus)])
    order = np.argsort(all_taus, kind="stable")
    blocks = []
    for k in range(config.k_min, config.k_max + 1):
        lo, hi = s_times[k - 1], s_times[k]
        y = _repelling_direction(_scaled_word_matrix(model, words[k - 1]))
        sel = order[(all_taus[order] >= lo) & (all_taus[order] <= hi)]
        if len(sel) < 2:
            continue
        taus_k = all_taus[sel]
        dists = np.empty(len(sel))
        # evaluate per contiguous leg so the frame matrix is constant
        legs = leg_of[sel]
        start_local = None
        start_frame = None
        excursion = 0.0
        pos = 0
        while pos < len(sel):
            end = pos
            while end < len(sel) and legs[end] == legs[pos]:
                end += 1
            j = int(legs[pos])
            pts = log.points[j][np.searchsorted(
                log.taus[j], taus_k[pos:end])]
            frame = log.frames[j]
            dists[pos:end] = _frame_distances(mat(frame), pts, y)
            if start_local is None:
                start_local, start_frame = complex(pts[0]), frame
            elif frame != start_frame:
                delta = reduce_word(invert_word(start_frame) + frame)
                start_local = _apply_word_to_point(
                    model, invert_word(delta), start_local)
                start_frame = frame
            rel = _local_dhyp(pts, start_local)
            excursion = max(excursion, float(rel.max()))
            pos = end
        blocks.append(BlockSample(k, taus_k, dists, excursion))
    return TrialBlocks(s_times, words, blocks, lam)


def collect_trial_blocks(config: ExperimentConfig) -> list[TrialBlocks]:
    """Discretize config.trials fresh paths into block samples."""
    config.validate()
    model = build_gamma2_model(config.word_radius)
    seeds = _trial_seeds(config.seed, config.trials)
    out = []
    for seed in seeds:
        tb = fls_trial_blocks(model, config, int(seed))
        if tb is not None:
            out.append(tb)
    if len(out) < max(2, config.trials // 4):
        raise InsufficientAcceptedSteps(
            f"only {len(out)}/{config.trials} trials reached "
            f"k = {config.k_max + 1} accepted steps")
    return out


def _window(config: ExperimentConfig,
            trials: list[TrialBlocks]) -> tuple[float, float, float]:
    if config.lambda_window is not None:
        lo, hi = config.lambda_window
        return 0.5 * (lo + hi), lo, hi
    lam = float(np.mean([t.lambda_hat for t in trials]))
    return lam, 0.5 * lam, 1.5 * lam


def ek_statistics(config: ExperimentConfig,
                  trial_data: list[TrialBlocks] | None = None
                  ) -> ExperimentReport:
    """Frequencies of the contraction events E_k and escape events."""
    trials = collect_trial_blocks(config) if trial_data is None else trial_data
    lam, lam_lo, lam_hi = _window(config, trials)
    ks = np.arange(config.k_min, config.k_max + 1)
    curves, rows = [], []
    ek_hits = {int(k): [] for k in ks}
    escape_hits = {int(k): [] for k in ks}
    for i, tb in enumerate(trials):
        for b in tb.blocks:
            ek = block_event(b, math.exp(-2.0 * lam_hi * b.k))
            esc = block_escape(b, math.exp(-lam_lo * b.k))
            ek_hits[b.k].append(ek)
            escape_hits[b.k].append(esc)
            curves.append((i, float(b.k), float(ek), "E_k"))
            curves.append((i, float(b.k), float(esc), "escape"))
        rows.append({"trial": i, "lambda_hat": tb.lambda_hat,
                     "blocks": len(tb.blocks)})
    freq, esc_freq, ci = {}, {}, {}
    for k in ks:
        n = len(ek_hits[int(k)])
        if n == 0:
            continue
        f = float(np.mean(ek_hits[int(k)]))
        freq[int(k)] = f
        esc_freq[int(k)] = float(np.mean(escape_hits[int(k)]))
        ci[int(k)] = 1.96 * math.sqrt(max(f * (1 - f), 0.25 / n) / n)
        curves.append((-1, float(k), freq[int(k)], "E_k_freq"))
        curves.append((-1, float(k), esc_freq[int(k)], "escape_freq"))
    # log-log fit f_k ~ c / k on the window where frequencies are interior
    fit_ks = [k for k, f in freq.items() if 0.0 < f < 1.0]
    slope = None
    if len(fit_ks) >= 3:
        slope = float(np.polyfit(np.log(fit_ks),
                                 np.log([freq[k] for k in fit_ks]), 1)[0])
    aggregate = {
        "lambda_hat": lam, "lambda_lo": lam_lo, "lambda_hi": lam_hi,
        "ek_freq": freq, "escape_freq": esc_freq, "freq_ci": ci,
        "loglog_slope": slope,
        "records_used": len(trials),
    }
    return ExperimentReport("ek", config.echo(), rows, aggregate, curves,
                            [ONTO_CASE_NOTE])


def occupation_experiment(config: ExperimentConfig,
                          trial_data: list[TrialBlocks] | None = None
                          ) -> ExperimentReport:
    """Occupation times T_k of shrinking discs and the section-8 probes."""
    trials = collect_trial_blocks(config) if trial_data is None else trial_data
    lam, lam_lo, lam_hi = _window(config, trials)
    ks = np.arange(config.k_min, config.k_max + 1)
    curves, rows = [], []
    occ = {int(k): [] for k in ks}
    exc = {int(k): [] for k in ks}
    s1 = []
    for i, tb in enumerate(trials):
        s1.append(tb.s_times[0])
        for b in tb.blocks:
            t_k = block_occupation(b.taus, b.dists,
                                   math.exp(-lam_lo * b.k))
            occ[b.k].append(t_k)
            exc[b.k].append(b.excursion > EXCURSION_K * math.log(b.k))
            curves.append((i, float(b.k), t_k, "T_k"))
        rows.append({"trial": i, "s_n1": tb.s_times[0],
                     "lambda_hat": tb.lambda_hat})
    medians = {int(k): float(np.median(occ[int(k)]))
               for k in ks if occ[int(k)]}
    for k, v in medians.items():
        curves.append((-1, float(k), v, "median_T_k"))
    mk = sorted(medians)
    med_vals = [medians[k] for k in mk]
    if len(set(med_vals)) > 1:
        rho, pval = sps.spearmanr(mk, med_vals)
    else:
        rho, pval = float("nan"), float("nan")
    excursion_freq = {int(k): float(np.mean(exc[int(k)]))
                      for k in ks if exc[int(k)]}
    # exponential moment probe for S_{N_1}
    s1 = np.array(s1)
    alphas = np.linspace(0.0, 0.5, 21)
    moment_curve, onset = {}, None
    for a in alphas:
        terms = np.exp(a * s1)
        m = float(terms.mean())
        moment_curve[round(float(a), 3)] = m
        if onset is None and terms.max() > 0.5 * terms.sum():
            onset = float(a)
        curves.append((-1, float(a), m, "exp_moment"))
    aggregate = {
        "lambda_hat": lam, "lambda_lo": lam_lo, "lambda_hi": lam_hi,
        "median_T_k": medians,
        "spearman_rho": float(rho), "spearman_p": float(pval),
        "excursion_freq": excursion_freq,
        "exp_moment_curve": moment_curve,
        "exp_moment_onset": onset,
        "records_used": len(trials),
    }
    return ExperimentReport("occupation", config.echo(), rows, aggregate,
                            curves, [ONTO_CASE_NOTE])
