"""Command-line entry point.

Every run takes one subcommand, one JSON config file, and an output
directory.  Each run writes a report JSON, a curves CSV when the
subcommand produces curves, and a run manifest that echoes the exact
config and seed so the run can be reproduced byte for byte.

Exit codes: 0 on success, 2 on configuration errors (with the offending
key named), 3 on runtime errors (with the failing error type named).
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
import time

import numpy as np
from scipy import stats as sps

from . import __version__
from .brownian import (
    StopRule, annulus_hitting_probability, dump_path_csv,
    lift_to_hyperbolic, simulate_planar,
)
from .errors import ConfigInvalid, SpherewalkError
from .experiments import (
    ExperimentConfig, cesaro_experiment, dichotomy_experiment,
    ek_statistics, harmonic_measure_sample, occupation_experiment,
)
from .fls import (
    FLSConfig, build_gamma2_model, discrete_walk_statistics,
    harnack_constant, harnack_constant_grid, run_fls_record,
)
from .moebius import CP1Point, MoebiusMap, chordal_distance
from .structures import equivariance_residual, structure_from_descriptor
from .walk import (
    contraction_check, gamma2_halfplane_measure, lyapunov_estimate,
    sample_walk,
)

OUT_DIR_ENV = "SPHEREWALK_OUT_DIR"
CSV_HEADER = "trial,t_or_k,value,series_name\n"


def _req(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigInvalid(f"missing config key {key}")
    return cfg[key]


def _seed_of(cfg: dict, override) -> int:
    return int(override if override is not None else cfg.get("seed", 0))


def _write_csv(path: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER)
        for trial, t, value, series in rows:
            fh.write(f"{trial},{t!r},{value!r},{series}\n")


# ---------------------------------------------------------------------------
# subcommand runners: (config dict, seed) -> (report dict, echo dict, curves)


def _run_walk(cfg: dict, seed: int):
    n = int(_req(cfg, "n"))
    measure = gamma2_halfplane_measure()
    walk = sample_walk(measure, n, seed)
    rate = float(walk.log_scales[-1] / max(n, 1))
    report = {
        "n": n, "labels_head": walk.labels[:20],
        "log_norm_rate": rate,
    }
    curves = [(0, float(k), float(walk.log_scales[k]), "log_norm")
              for k in range(n + 1)]
    return report, {"n": n, "seed": seed}, curves


def _run_lyapunov(cfg: dict, seed: int):
    n = int(_req(cfg, "n"))
    trials = int(_req(cfg, "trials"))
    measure = gamma2_halfplane_measure()
    lam, half = lyapunov_estimate(measure, n, trials, seed)
    report = {
        "n": n, "trials": trials, "lambda_hat": lam,
        "ci_halfwidth": half,
        "ci": [lam - half, lam + half],
        "positive": bool(lam - half > 0.0),
    }
    return report, {"n": n, "trials": trials, "seed": seed}, []


def _run_contraction(cfg: dict, seed: int):
    n = int(_req(cfg, "n"))
    trials = int(cfg.get("trials", 20))
    lp = float(_req(cfg, "lambda_prime"))
    ldp = float(_req(cfg, "lambda_dblprime"))
    if not 0.0 < lp < ldp:
        raise ConfigInvalid("need 0 < lambda_prime < lambda_dblprime")
    measure = gamma2_halfplane_measure()
    seeds = np.random.default_rng(seed).integers(1, 2 ** 31 - 1, size=trials)
    firsts, rates = [], []
    curves = []
    for i, s in enumerate(seeds):
        walk = sample_walk(measure, n, int(s))
        _, first, rate = contraction_check(walk, lp, ldp)
        firsts.append(first)
        rates.append(rate)
        curves.append((i, float(first if first is not None else -1),
                       rate, "tail_pass_rate"))
    finite = [f for f in firsts if f is not None]
    report = {
        "n": n, "trials": trials,
        "lambda_prime": lp, "lambda_dblprime": ldp,
        "finite_N_fraction": len(finite) / trials,
        "median_N": float(np.median(finite)) if finite else None,
        "mean_tail_pass_rate": float(np.mean(rates)),
    }
    echo = {"n": n, "trials": trials, "lambda_prime": lp,
            "lambda_dblprime": ldp, "seed": seed}
    return report, echo, curves


def _run_bm(cfg: dict, seed: int):
    horizon = float(_req(cfg, "horizon"))
    if horizon <= 0:
        raise ConfigInvalid("horizon must be positive")
    start_pair = cfg.get("start", [0.0, 0.0])
    start = complex(start_pair[0], start_pair[1])
    step_scale = float(cfg.get("step_scale", 5e-4))
    planar = simulate_planar(start, step_scale,
                             StopRule("hyper_horizon", {"horizon": horizon}),
                             seed=seed,
                             record_stride=int(cfg.get("record_stride", 10)))
    path = lift_to_hyperbolic(planar)
    end = complex(planar.points[-1])
    report = {
        "horizon": horizon, "steps_recorded": len(planar.points),
        "hyper_time_reached": float(planar.hyper_times[-1]),
        "end_point": [end.real, end.imag],
        "end_abs": abs(end),
    }
    echo = {"horizon": horizon, "start": [start.real, start.imag],
            "step_scale": step_scale,
            "record_stride": int(cfg.get("record_stride", 10)),
            "seed": seed}
    return report, echo, ("path_csv", path)


def _run_fls(cfg: dict, seed: int):
    delta = float(_req(cfg, "delta"))
    delta_prime = float(_req(cfg, "delta_prime"))
    k_target = int(_req(cfg, "k_target"))
    records = int(cfg.get("records", 1))
    word_radius = int(cfg.get("word_radius", 2))
    model = build_gamma2_model(word_radius)
    fls = FLSConfig(delta=delta, delta_prime=delta_prime,
                    time_cap=float(cfg.get("time_cap", 1e4)))
    seeds = np.random.default_rng(seed).integers(1, 2 ** 31 - 1, size=records)
    recs, curves = [], []
    for i, s in enumerate(seeds):
        rec = run_fls_record(model, fls, k_target, int(s),
                             step_scale=float(cfg.get("step_scale", 5e-4)))
        rec.validate(fls.harnack_C)
        recs.append(rec)
        for k, t in enumerate(rec.discrete_times):
            curves.append((i, float(k + 1), float(t), "s_nk"))
    stats = discrete_walk_statistics(recs, model)
    report = {
        "delta": delta, "delta_prime": delta_prime,
        "harnack_C": fls.harnack_C, "k_target": k_target,
        "records": records, **stats,
    }
    echo = {"delta": delta, "delta_prime": delta_prime,
            "k_target": k_target, "records": records,
            "word_radius": word_radius,
            "time_cap": float(cfg.get("time_cap", 1e4)),
            "step_scale": float(cfg.get("step_scale", 5e-4)), "seed": seed}
    return report, echo, curves


def _experiment_config(cfg: dict, seed: int) -> ExperimentConfig:
    data = dict(cfg)
    data["seed"] = seed
    for key in ("structure", "horizon", "trials"):
        _req(data, key)
    config = ExperimentConfig.from_dict(data)
    config.validate()
    return config


def _run_report_experiment(runner):
    def run(cfg: dict, seed: int):
        config = _experiment_config(cfg, seed)
        rep = runner(config)
        return json.loads(rep.to_json()), config.echo(), rep.curves
    return run


def _run_harmonic(cfg: dict, seed: int):
    config = _experiment_config(cfg, seed)
    samples = harmonic_measure_sample(config)
    angles = [cmath.phase(p.to_affine()) for p in samples]
    curves = [(i, 0.0, a, "harmonic_angle") for i, a in enumerate(angles)]
    report = {
        "name": "harmonic", "config": config.echo(),
        "n_samples": len(samples),
        "mean_abs": float(np.mean([abs(p.to_affine()) for p in samples])),
    }
    if config.structure.kind == "identity_fuchsian":
        x = config.start
        pulled = [(p.to_affine() - x) / (1.0 - x.conjugate() * p.to_affine())
                  for p in samples]
        u = (np.angle(np.asarray(pulled)) + math.pi) / (2.0 * math.pi)
        report["ks_uniform_p"] = float(sps.kstest(u, "uniform").pvalue)
    return report, config.echo(), curves


def _run_selftest(cfg: dict, seed: int):
    checks = []

    def ok(name: str, cond: bool):
        checks.append((name, bool(cond)))
        print(("ok   - " if cond else "FAIL - ") + name)

    g = MoebiusMap(1.0, 2.0, 0.0, 1.0)
    h = MoebiusMap(1.0, 0.0, 2.0, 1.0)
    p = CP1Point.from_affine(0.3 + 0.1j)
    ok("moebius composition acts functorially",
       chordal_distance((g @ h).apply(p), g.apply(h.apply(p))) < 1e-12)
    rot = MoebiusMap(cmath.exp(0.4j), 0.0, 0.0, cmath.exp(-0.4j))
    q = CP1Point.from_affine(-0.2 + 0.5j)
    ok("diagonal rotations are chordal isometries",
       abs(chordal_distance(rot.apply(p), rot.apply(q))
           - chordal_distance(p, q)) < 1e-12)
    closed = harnack_constant(0.15, 0.35)
    grid = harnack_constant_grid(0.15, 0.35, nx=60, ny=60, nz=90)
    ok("harnack constant matches grid maximization",
       abs(closed - grid) / closed < 0.02)
    ok("annulus hitting formula instance log 2 / k",
       abs(annulus_hitting_probability(0.5, math.exp(-5.0))
           - math.log(2.0) / 5.0) < 1e-12)
    dev = structure_from_descriptor({"kind": "identity_fuchsian"})
    rng = np.random.default_rng(seed)
    pts = 0.6 * (rng.random(50) + 1j * rng.random(50) - 0.5 - 0.5j)
    words = rng.choice(["T", "t", "S", "s", "TS", "sT"], size=50)
    ok("developing map equivariance residual small",
       equivariance_residual(dev, list(zip(words, pts))) < 1e-8)
    model = build_gamma2_model(2)
    rec = run_fls_record(model, FLSConfig(), 3, seed + 1)
    rec.validate(FLSConfig().harnack_C)
    ok("fls record invariants hold", True)
    cfg_small = ExperimentConfig(dev, horizon=2.0, trials=2, seed=seed)
    rep = cesaro_experiment(cfg_small)
    cs = [v for _, _, v, s in rep.curves if s == "cesaro"]
    ok("cesaro concentration stays in [0, 1]",
       len(cs) > 0 and all(0.0 <= v <= 1.0 for v in cs))
    failed = [n for n, c in checks if not c]
    if failed:
        raise SpherewalkError(f"selftest failures: {failed}")
    report = {"checks": [n for n, _ in checks], "passed": len(checks)}
    return report, {"seed": seed}, []


RUNNERS = {
    "walk": _run_walk,
    "lyapunov": _run_lyapunov,
    "contraction": _run_contraction,
    "bm": _run_bm,
    "fls": _run_fls,
    "dichotomy": _run_report_experiment(dichotomy_experiment),
    "cesaro": _run_report_experiment(cesaro_experiment),
    "harmonic": _run_harmonic,
    "ek": _run_report_experiment(ek_statistics),
    "occupation": _run_report_experiment(occupation_experiment),
    "selftest": _run_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherewalk",
        description="Random walks on PSL(2,C), hyperbolic Brownian motion, "
                    "and developing-map experiments.")
    parser.add_argument("subcommand", choices=sorted(RUNNERS))
    parser.add_argument("config", help="path to a JSON config file")
    parser.add_argument("--out-dir", default="runs",
                        help=f"output directory (env {OUT_DIR_ENV} overrides)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed")
    parser.add_argument("--force", action="store_true",
                        help="overwrite existing report files")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(args) -> int:
    out_dir = os.environ.get(OUT_DIR_ENV) or args.out_dir
    t0 = time.monotonic()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigInvalid("config file must hold a JSON object")
        seed = _seed_of(cfg, args.seed)
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, args.subcommand)
        targets = [base + "_report.json", base + "_curves.csv",
                   base + "_manifest.json"]
        existing = [t for t in targets if os.path.exists(t)]
        if existing and not args.force:
            raise ConfigInvalid(
                f"refusing to overwrite {existing[0]} (pass --force)")
        report, echo, curves = RUNNERS[args.subcommand](cfg, seed)
    except (ConfigInvalid, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3

    with open(targets[0], "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [targets[0]]
    if isinstance(curves, tuple) and curves[0] == "path_csv":
        dump_path_csv(curves[1], targets[1])
        outputs.append(targets[1])
    elif curves:
        _write_csv(targets[1], curves)
        outputs.append(targets[1])
    manifest = {
        "subcommand": args.subcommand,
        "config": echo,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.monotonic() - t0, 3),
        "outputs": [os.path.basename(p) for p in outputs],
    }
    with open(targets[2], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.verbose:
        print(f"wrote {', '.join(outputs + [targets[2]])}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
