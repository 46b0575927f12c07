"""Config-driven experiment runner.

Subcommands:

* rate    -- sample/assemble/measure across an n-grid, write rate CSVs
* verify  -- run the oracle and invariant battery, report pass/fail
* norms   -- Barron norms B^s (s = 0..m+2) and the Sobolev norm on the box
* sample  -- dump feature samples for the configured method

All numeric work is deterministic given the config: jobs own
counter-based streams keyed by (seed, index), results are gathered in
config order, and CSV floats are written with repr.  Wall-clock timing is
volatile, so the rate CSV carries wall_ms = 0 unless `timing = true`.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import network as nw
from . import oracle as orc
from . import representation as rep
from . import sampler as smp
from .activation import build_registry
from .config import ExperimentConfig, parse_config
from .domain import box as make_box, symmetric_box
from .errors import RandFeatError
from .metrics import RatePoint, qmc_points, rate_fit, smoothness_bound_check, sobolev_error
from .target import cosine_target, gaussian_target, target_zoo

_MOLLIFIER_CACHE: dict[tuple, rep.MollifierPair] = {}


def _mollifier() -> rep.MollifierPair:
    key = ("default",)
    if key not in _MOLLIFIER_CACHE:
        _MOLLIFIER_CACHE[key] = rep.build_mollifier()
    return _MOLLIFIER_CACHE[key]


def _recenter(net: nw.TwoLayerNetwork, center: np.ndarray) -> nw.TwoLayerNetwork:
    """Turn a network for f(. + c) on the centered box into one for f."""
    if not np.any(center):
        return net
    return nw.TwoLayerNetwork(
        weights=net.weights,
        biases=net.biases - net.weights @ center,
        coeffs=net.coeffs,
        activation=net.activation,
        dim=net.dim,
    )


def _centered_problem(cfg: ExperimentConfig, target):
    center = cfg.box.center
    if not np.any(center):
        return target, cfg.box, center
    lo = np.asarray(cfg.box.lower) - center
    hi = np.asarray(cfg.box.upper) - center
    return target.translated(center), make_box(lo, hi), center


def build_network(cfg: ExperimentConfig, activation, target, n: int, seed: int,
                  shared_kernel=None) -> nw.TwoLayerNetwork:
    """One (n, seed) pipeline: sample, assemble, undo the recentering."""
    work_target, work_box, center = _centered_problem(cfg, target)
    if cfg.method == "plain":
        kernel = shared_kernel or rep.plain_kernel(
            activation, work_target, work_box, cfg.m, a=cfg.freq_a)
        samples = smp.draw_plain(work_target, kernel, n, seed)
        net = nw.assemble_plain(samples, kernel, work_target, activation)
    elif cfg.method == "periodic":
        kernel = shared_kernel or rep.periodic_kernel(activation, work_target, cfg.m)
        samples = smp.draw_periodic(work_target, kernel, n, seed)
        net = nw.assemble_periodic(samples, kernel, work_target, activation)
    elif cfg.method == "approx":
        eps = cfg.eps if cfg.eps is not None else float(n) ** -0.25
        kernel = rep.approx_kernel(activation, _mollifier(), eps, a=cfg.freq_a)
        samples = smp.draw_approx(work_target, _mollifier(), eps, n, seed)
        net = nw.assemble_approx(samples, kernel, work_target, activation, n)
    elif cfg.method == "stratified":
        kernel = shared_kernel or rep.plain_kernel(
            activation, work_target, work_box, cfg.m, a=cfg.freq_a)
        plan = smp.build_stratified_plan(
            work_target, kernel, n, cfg.eps_smooth,
            pilot_size=cfg.pilot_factor * n, seed=seed,
            max_cells=cfg.max_cells, keep_min_expected=cfg.keep_min_expected)
        groups = smp.draw_stratified(plan, work_target, kernel, seed)
        net = nw.assemble_stratified(plan, groups, kernel, work_target, activation)
    elif cfg.method == "stratified-periodic":
        kernel = shared_kernel or rep.periodic_kernel(activation, work_target, cfg.m)
        plan = smp.build_periodic_stratified_plan(
            work_target, kernel, n, cfg.eps_smooth,
            pilot_size=cfg.pilot_factor * n, seed=seed,
            max_cells=cfg.max_cells, keep_min_expected=cfg.keep_min_expected)
        groups = smp.draw_stratified_periodic(plan, work_target, kernel, seed)
        net = nw.assemble_stratified(plan, groups, kernel, work_target, activation)
    else:
        raise ValueError(f"unknown method {cfg.method!r}")
    return _recenter(net, center)


def _shared_kernel(cfg: ExperimentConfig, activation, target):
    """Kernel shared across (n, seed) jobs when it does not depend on them."""
    work_target, work_box, _ = _centered_problem(cfg, target)
    if cfg.method in ("plain", "stratified"):
        return rep.plain_kernel(activation, work_target, work_box, cfg.m, a=cfg.freq_a)
    if cfg.method in ("periodic", "stratified-periodic"):
        return rep.periodic_kernel(activation, work_target, cfg.m)
    return None


# -- rate -----------------------------------------------------------------

RATE_COLUMNS = ("method", "d", "m", "activation", "target", "n", "seed",
                "error", "std_error", "wall_ms")
FIT_COLUMNS = ("method", "slope", "intercept", "residual", "n_min", "n_max")


def run_rate(cfg: ExperimentConfig, out_dir: Path, threads: int = 1,
             seed_offset: int = 0) -> dict:
    activation, target = cfg.resolve()
    shared = _shared_kernel(cfg, activation, target)
    jobs = [(n, seed + seed_offset) for n in cfg.n_grid for seed in cfg.seeds]

    def one(job):
        n, seed = job
        t0 = time.perf_counter()
        net = build_network(cfg, activation, target, n, seed, shared)
        err, std = sobolev_error(net, target, cfg.m, cfg.box, cfg.n_quad)
        wall = int(round(1000.0 * (time.perf_counter() - t0))) if cfg.timing else 0
        return n, seed, err, std, wall

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(job) for job in jobs]

    out_dir.mkdir(parents=True, exist_ok=True)
    points_path = out_dir / "rate_points.csv"
    with open(points_path, "w") as fh:
        fh.write(",".join(RATE_COLUMNS) + "\n")
        for n, seed, err, std, wall in results:
            fh.write(",".join([
                cfg.method, str(cfg.dim), str(cfg.m), cfg.activation_label,
                _csv_safe(cfg.target_spec), str(n), str(seed),
                repr(err), repr(std), str(wall),
            ]) + "\n")

    points = [RatePoint(n=n, error=err, seed=seed) for n, seed, err, _, _ in results]
    fit = rate_fit(points, cfg.aggregate)
    fit_path = out_dir / "rate_fit.csv"
    with open(fit_path, "w") as fh:
        fh.write(",".join(FIT_COLUMNS) + "\n")
        fh.write(",".join([
            cfg.method, repr(fit.slope), repr(fit.intercept), repr(fit.residual),
            str(min(cfg.n_grid)), str(max(cfg.n_grid)),
        ]) + "\n")

    if cfg.gnuplot:
        agg = np.median if cfg.aggregate == "median" else np.mean
        with open(out_dir / "rate_gnuplot.dat", "w") as fh:
            for n in sorted(set(cfg.n_grid)):
                errs = [p.error for p in points if p.n == n]
                fh.write(f"{n} {float(agg(errs))!r}\n")
    return {"fit": fit, "points": points,
            "paths": [str(points_path), str(fit_path)]}


def _csv_safe(text: str) -> str:
    return text.replace(",", ";").replace("\n", " ")


# -- verify ------------------------------------------------------------------

def _verify_checks(cfg: ExperimentConfig):
    """(name, value, threshold, passed) rows for the standard battery."""
    registry = build_registry()
    gauss_act = registry["gaussian"]
    cos_act = registry["cos"]
    g1 = gaussian_target(1)
    box1 = symmetric_box(1)
    rows = []

    val = abs(g1.barron_norm(0.0) - 1.0)
    rows.append(("barron-gaussian-b0", val, 1e-6, val <= 1e-6))
    val = abs(g1.barron_norm(1.0) - (1.0 + math.sqrt(2.0 / math.pi)))
    rows.append(("barron-gaussian-b1", val, 1e-6, val <= 1e-6))

    from scipy.integrate import quad
    worst = 0.0
    for (r, R, a, p) in ((0.0, 1.0, 1.0, 2.0), (1.0, 1.0, 1.0, 2.0),
                         (2.5, 0.7, 0.4, 1.7), (0.3, 1.3, 0.25, 3.0)):
        num = quad(lambda b: float(rep.envelope_h(b, r, R, a, p)), -np.inf, np.inf,
                   limit=400)[0]
        worst = max(worst, abs(num - float(rep.envelope_b_integral(r, R, a, p))))
    rows.append(("envelope-b-integral", worst, 1e-8, worst <= 1e-8))

    kernel = rep.plain_kernel(gauss_act, g1, box1, m=0)
    samples = smp.draw_plain(g1, kernel, 2500, seed=1)
    xs = qmc_points(box1, 4, seed=1)
    violations = 0
    for s in samples:
        h = float(rep.envelope_h(s.b, abs(s.omega[0]), kernel.R, kernel.a, kernel.p))
        for k in range(gauss_act.kind.m_max + 1):
            vals = np.abs(gauss_act.derivs[k](s.omega[0] / kernel.a * xs[:, 0] + s.b))
            violations += int(np.any(vals > gauss_act.kind.c_p * h * (1 + 1e-12)))
    rows.append(("envelope-domination", violations, 0, violations == 0))

    wn, ww = orc._panel_rule(-10.0, 10.0, 0.1)
    b_masses = np.array([
        quad(lambda b: float(rep.envelope_h(b, abs(w), kernel.R, kernel.a, kernel.p)),
             -np.inf, np.inf, limit=300)[0]
        for w in wn
    ])
    mass = float(np.sum(ww * b_masses * g1.magnitude(wn[:, None]))) / kernel.normalizer
    rows.append(("normalization", abs(mass - 1.0), 1e-4, abs(mass - 1.0) <= 1e-4))

    dev = orc.representation_identity_check(
        g1, kernel, gauss_act, np.linspace(-1.0, 1.0, 10))
    rows.append(("representation-identity", dev, 1e-4, dev < 1e-4))

    ct = cosine_target([1.0])
    kern_p = rep.periodic_kernel(cos_act, ct, m=0)
    dev = orc.periodic_identity_check(ct, kern_p, cos_act,
                                      np.linspace(-1.0, 1.0, 10)[:, None])
    rows.append(("periodic-identity", dev, 1e-10, dev < 1e-10))

    ok = True
    for tgt in target_zoo(min(cfg.dim, 2)):
        for m in range(0, 2):
            ok = ok and smoothness_bound_check(tgt, m, symmetric_box(min(cfg.dim, 2)))
    rows.append(("smoothness-bound", int(not ok), 0, ok))
    return rows


def run_verify(cfg: ExperimentConfig, out=None) -> bool:
    out = out if out is not None else sys.stdout
    cfg.resolve()
    rows = _verify_checks(cfg)
    width = max(len(name) for name, *_ in rows)
    all_ok = True
    for name, value, threshold, passed in rows:
        status = "PASS" if passed else "FAIL"
        out.write(f"{name:<{width}}  value={value:.6g}  threshold={threshold:g}  {status}\n")
        all_ok = all_ok and passed
    out.write(("all checks passed" if all_ok else "CHECK FAILURES") + "\n")
    return all_ok


# -- norms ----------------------------------------------------------------------

def run_norms(cfg: ExperimentConfig, out_dir: Path) -> Path:
    _, target = cfg.resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "norms.csv"
    with open(path, "w") as fh:
        fh.write("target,kind,order,value,status\n")
        for s in range(cfg.m + 3):
            try:
                val = target.barron_norm(float(s))
                fh.write(f"{_csv_safe(cfg.target_spec)},barron,{s},{val!r},ok\n")
            except RandFeatError as exc:
                fh.write(f"{_csv_safe(cfg.target_spec)},barron,{s},nan,"
                         f"{type(exc).__name__}\n")
        val, _ = sobolev_error(nw.empty_network(cfg.dim), target, cfg.m, cfg.box,
                               cfg.n_quad)
        fh.write(f"{_csv_safe(cfg.target_spec)},sobolev,{cfg.m},{val!r},ok\n")
    return path


# -- sample -----------------------------------------------------------------------

def run_sample(cfg: ExperimentConfig, out_dir: Path, seed_offset: int = 0) -> Path:
    activation, target = cfg.resolve()
    work_target, work_box, _ = _centered_problem(cfg, target)
    n = cfg.n_grid[0]
    seed = cfg.seeds[0] + seed_offset
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "samples.csv"
    if cfg.method == "plain":
        kernel = rep.plain_kernel(activation, work_target, work_box, cfg.m, a=cfg.freq_a)
        smp.samples_to_csv(smp.draw_plain(work_target, kernel, n, seed), path, cfg.dim)
    elif cfg.method == "periodic":
        kernel = rep.periodic_kernel(activation, work_target, cfg.m)
        smp.samples_to_csv(smp.draw_periodic(work_target, kernel, n, seed), path, cfg.dim)
    elif cfg.method == "approx":
        eps = cfg.eps if cfg.eps is not None else float(n) ** -0.25
        smp.samples_to_csv(smp.draw_approx(work_target, _mollifier(), eps, n, seed),
                           path, cfg.dim)
    elif cfg.method == "stratified":
        kernel = rep.plain_kernel(activation, work_target, work_box, cfg.m, a=cfg.freq_a)
        plan = smp.build_stratified_plan(
            work_target, kernel, n, cfg.eps_smooth,
            pilot_size=cfg.pilot_factor * n, seed=seed,
            max_cells=cfg.max_cells, keep_min_expected=cfg.keep_min_expected)
        smp.samples_to_csv(smp.draw_stratified(plan, work_target, kernel, seed),
                           path, cfg.dim)
    else:
        kernel = rep.periodic_kernel(activation, work_target, cfg.m)
        plan = smp.build_periodic_stratified_plan(
            work_target, kernel, n, cfg.eps_smooth,
            pilot_size=cfg.pilot_factor * n, seed=seed,
            max_cells=cfg.max_cells, keep_min_expected=cfg.keep_min_expected)
        smp.samples_to_csv(smp.draw_stratified_periodic(plan, work_target, kernel, seed),
                           path, cfg.dim)
    return path


# -- entry point ---------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="randfeat",
        description="random-feature two-layer network experiments",
    )
    parser.add_argument("command", choices=("rate", "verify", "norms", "sample"))
    parser.add_argument("--config", required=True, help="experiment config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed-offset", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        out_dir = Path(args.out)
        if args.command == "rate":
            result = run_rate(cfg, out_dir, threads=args.threads,
                              seed_offset=args.seed_offset)
            fit = result["fit"]
            print(f"slope={fit.slope:.4f} intercept={fit.intercept:.4f} "
                  f"residual={fit.residual:.4f}")
            for path in result["paths"]:
                print(f"wrote {path}")
            return 0
        if args.command == "verify":
            return 0 if run_verify(cfg) else 1
        if args.command == "norms":
            print(f"wrote {run_norms(cfg, out_dir)}")
            return 0
        print(f"wrote {run_sample(cfg, out_dir, seed_offset=args.seed_offset)}")
        return 0
    except RandFeatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
