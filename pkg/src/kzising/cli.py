"""Command-line experiment harness.

    kzising run     --config CFG --out DIR   # grid of solver / sampler runs
    kzising analyze --config CFG --out DIR   # kink statistics of sample files
    kzising theory  --config CFG --out DIR   # closed-form predictions
    kzising fit     --config CFG --out DIR   # power-law / Landau-Zener fits of a CSV
    kzising shim    --config CFG --out DIR   # calibration refinement loop

Configs are JSON. A ``manifest.json`` written by any command is itself a
valid config for the same command, which replays the run. The worker count
comes from ``KZISING_WORKERS`` (default 1). Exit codes: 0 success, 2 config
error, 3 some grid points failed.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import bdg, dense, modes, stats, tebd, theory
from .chain import ChainSpec
from .disorder import DisorderSpec, realize
from .samplers import SamplerRequest, run_sa, run_svmc_tf
from .samples import SampleFormatError, SampleSet
from .schedule import Schedule, ScheduleError, kz_b
from .shim import FreezeOutSampler, MonteCarloShimSampler, ShimConfig, run_shim

log = logging.getLogger("kzising")

SCHEMA = 1
WORKERS_ENV = "KZISING_WORKERS"
EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3
METHODS = ("modes", "bdg", "tebd", "sa", "svmc", "dense-oracle")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.17g}"


def _check_keys(section: dict, allowed, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    bad = set(section) - set(allowed)
    if bad:
        raise ConfigError(f"{where}: unknown keys {sorted(bad)}")


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(cfg, dict) and "manifest_version" in cfg:
        if cfg.get("version") != __version__:
            print(f"note: replaying a manifest written by kzising {cfg.get('version')} with {__version__}; "
                  "outputs are bit-identical only if the solvers did not change in between", file=sys.stderr)
        cfg = cfg["config"]
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    schema = cfg.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported config schema {schema} (this is schema {SCHEMA})")
    return cfg


def _schedule(cfg: dict, base_dir) -> Schedule:
    sc = cfg.get("schedule", {"kind": "linear"})
    _check_keys(sc, ("kind", "beta_ghz", "J", "path"), "schedule")
    try:
        return Schedule.from_config(sc, base_dir)
    except (ScheduleError, KeyError, OSError) as exc:
        raise ConfigError(f"schedule: {exc}") from exc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, outputs, failures, started: float, extra=None):
    files = {p.name: _sha256(p) for p in sorted(outputs)}
    manifest = {
        "manifest_version": 1,
        "command": command,
        "tool": "kzising",
        "version": __version__,
        "config": cfg,
        "outputs": files,
        "failures": failures,
        "wall_clock_s": time.time() - started,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# run

RECIPES = {
    "kz-scaling": {
        "method": "modes",
        "schedule": {"kind": "linear", "beta_ghz": 1.0, "J": 1.0},
        "chain": {"L": 512, "J": -1.0},
        "t_a": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
    },
    "correlators": {
        "method": ["bdg", "tebd"],
        "schedule": {"kind": "linear", "beta_ghz": 1.0, "J": 1.4},
        "chain": {"L": 64, "J": -1.4},
        "t_a": [1.0, 2.0],
        "tebd": {"D": 32, "dt": 0.01},
        "correlator": True,
    },
    "lz-crossover": {
        "method": "modes",
        "schedule": {"kind": "linear", "beta_ghz": 1.0, "J": 1.0},
        "chain": {"L": [8, 12, 16, 20, 24, 28, 32], "J": -1.0},
        "t_a": list(np.round(np.geomspace(0.5, 200.0, 40), 6)),
        "fit_lz": True,
    },
}

RUN_KEYS = ("schema", "recipe", "method", "schedule", "chain", "t_a", "sweeps", "disorder", "tebd",
            "sampler", "stats", "correlator", "fit_lz", "seed", "steps")
POINT_HEADER = ["index", "method", "L", "J", "t_a", "sweeps", "beta", "sigma", "D", "dt", "n_realizations",
                "n_bar", "n_bar_lo", "n_bar_hi", "kappa1", "kappa2", "kappa3", "number_ratio2", "number_ratio3",
                "pgs", "b", "n_bar_theory", "pgs_theory", "a_theory", "ratio2_theory", "ratio3_theory",
                "discarded_weight", "max_entropy"]
CORR_HEADER = ["index", "method", "L", "J", "t_a", "sweeps", "r", "nbar_r", "ckk", "ckk_lo", "ckk_hi"]
FIT_HEADER = ["method", "L", "J", "a_fit", "a_stderr", "a_theory", "aL2_fit", "n_points"]


def resolve_run_config(cfg: dict) -> dict:
    cfg = copy.deepcopy(cfg)
    _check_keys(cfg, RUN_KEYS, "config")
    recipe = cfg.pop("recipe", None)
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(f"unknown recipe {recipe!r}; choose from {sorted(RECIPES)}")
        merged = copy.deepcopy(RECIPES[recipe])
        merged.update(cfg)
        cfg = merged
        cfg["recipe"] = recipe
    methods = _as_list(cfg.get("method", "modes"))
    for m in methods:
        if m == "shim":
            raise ConfigError("method 'shim' has its own subcommand: kzising shim --config ... --out ...")
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
    chain = cfg.get("chain", {})
    _check_keys(chain, ("L", "J"), "chain")
    if "L" not in chain or "J" not in chain:
        raise ConfigError("chain: L and J are required")
    for key, allowed in (("disorder", ("sigma", "targets", "n_realizations", "master_seed")),
                         ("tebd", ("D", "dt", "svd_threshold", "backend")),
                         ("sampler", ("n_samples", "batch_size", "beta", "flux_gain")),
                         ("stats", ("n_resamples", "seed"))):
        if key in cfg:
            _check_keys(cfg[key], allowed, key)
    needs_ta = any(m in ("modes", "bdg", "tebd", "dense-oracle") for m in methods)
    needs_sweeps = any(m in ("sa", "svmc") for m in methods)
    if needs_ta and "t_a" not in cfg:
        raise ConfigError("t_a grid required for the chosen method")
    if needs_sweeps and "sweeps" not in cfg:
        raise ConfigError("sweeps grid required for Monte Carlo methods")
    try:
        for t in _as_list(cfg.get("t_a", [])):
            if float(t) <= 0:
                raise ConfigError("t_a values must be positive")
        for L in _as_list(chain["L"]):
            if int(L) < 2:
                raise ConfigError("L must be >= 2")
        dis = dict(cfg.get("disorder", {}))
        for sigma in _as_list(dis.pop("sigma", 0.0)):
            DisorderSpec.from_config({**dis, "sigma": sigma})
        if "tebd" in cfg:
            tebd.TebdConfig(**cfg["tebd"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def grid_points(cfg: dict):
    methods = _as_list(cfg.get("method", "modes"))
    chain = cfg["chain"]
    dis = cfg.get("disorder", {})
    sigmas = _as_list(dis.get("sigma", 0.0))
    Ds = _as_list(cfg.get("tebd", {}).get("D", 32))
    betas = cfg.get("sampler", {}).get("beta", None)
    points = []
    for method in methods:
        if method in ("sa", "svmc"):
            times = [("sweeps", int(s)) for s in _as_list(cfg["sweeps"])]
        else:
            times = [("t_a", float(t)) for t in _as_list(cfg["t_a"])]
        bgrid = [None]
        if method == "sa":
            bgrid = [betas if betas is not None else [0.1, 100.0]]
        elif method == "svmc":
            bgrid = _as_list(betas if betas is not None else 32.0)
        dgrid = Ds if method == "tebd" else [None]
        for L, J, sigma, D, beta, (tk, tv) in itertools.product(
                _as_list(chain["L"]), _as_list(chain["J"]), sigmas, dgrid, bgrid, times):
            points.append({"method": method, "L": int(L), "J": float(J), "sigma": float(sigma),
                           "D": D, "beta": beta, tk: tv})
    for i, p in enumerate(points):
        p["index"] = i
    return points


def _realizations(point, cfg):
    nominal = ChainSpec.uniform(point["L"], point["J"])
    dis = cfg.get("disorder", {})
    if point["sigma"] == 0.0:
        return [nominal]
    spec = DisorderSpec(point["sigma"], dis.get("targets", "both"), int(dis.get("n_realizations", 1)),
                        int(dis.get("master_seed", cfg.get("seed", 0))))
    return [realize(nominal, spec, i) for i in range(spec.n_realizations)]


def _point_seed(cfg, index) -> int:
    return int(np.random.SeedSequence(int(cfg.get("seed", 0)), spawn_key=(int(index),)).generate_state(1)[0])


def run_point(args):
    """Evaluate one grid point; returns ``(row, correlator_rows, sample_sets, error)``."""
    point, cfg, base_dir = args
    try:
        return _run_point(point, cfg, base_dir) + (None,)
    except Exception as exc:  # recorded in the manifest, never fatal for the grid
        return None, [], [], f"{type(exc).__name__}: {exc}"


def _run_point(point, cfg, base_dir):
    schedule = _schedule(cfg, base_dir)
    method = point["method"]
    L, J = point["L"], point["J"]
    row = {k: None for k in POINT_HEADER}
    row.update(index=point["index"], method=method, L=L, J=J, sigma=point["sigma"], D=point.get("D"),
               t_a=point.get("t_a"), sweeps=point.get("sweeps"))
    try:
        b = kz_b(schedule, J).b
    except ScheduleError:
        b = None
    row["b"] = b
    row["ratio2_theory"], row["ratio3_theory"] = theory.cumulant_ratio_targets()
    ckk = None
    ckk_ci = None
    samples_out = []
    t_a = point.get("t_a")
    if t_a is not None and b is not None:
        row["n_bar_theory"] = float(theory.predict_density(b, t_a))
        row["pgs_theory"] = float(theory.predict_lz(b, L, t_a))
        row["a_theory"] = float(theory.lz_rate(b, L))
    if method == "modes":
        res = modes.mode_spectrum(schedule, J, t_a, L, n_steps=cfg.get("steps"))
        k1, k2, k3 = res.cumulants
        row.update(n_bar=res.density, kappa1=k1, kappa2=k2, kappa3=k3, pgs=res.pgs,
                   number_ratio2=L * k2 / k1 if k1 > 0 else None,
                   number_ratio3=L**2 * k3 / k1 if k1 > 0 else None)
    elif method in ("bdg", "tebd", "dense-oracle"):
        chains = _realizations(point, cfg)
        row["n_realizations"] = len(chains)
        nb, cs, pg, disc, ent = [], [], [], [], []
        for ch in chains:
            if method == "bdg":
                st = bdg.evolve_bdg(ch, schedule, t_a, n_steps=cfg.get("steps"))
                n, c = bdg.kink_stats_bdg(st, ch) if cfg.get("correlator") else (bdg.kink_density(st, ch), None)
            elif method == "tebd":
                tc = dict(cfg.get("tebd", {}))
                tc["D"] = point["D"]
                row["dt"] = float(tc.get("dt", 0.01))
                r = tebd.run_tebd(ch, schedule, t_a, tebd.TebdConfig(**tc))
                n, c = r.n_bar, r.ckk
                disc.append(r.discarded)
                ent.append(float(np.max(r.entropies)))
            else:
                r = dense.dense_oracle(ch, schedule, t_a)
                n, c = r.n_bar, r.ckk
                pg.append(r.pgs)
            nb.append(n)
            if c is not None:
                cs.append(c)
        row["n_bar"] = float(np.mean(nb))
        if pg:
            row["pgs"] = float(np.mean(pg))
        if disc:
            row["discarded_weight"] = float(np.max(disc))
            row["max_entropy"] = float(np.max(ent))
        if cs and (cfg.get("correlator") or method != "bdg"):
            ckk = np.mean(cs, axis=0)
    else:  # Monte Carlo
        chains = _realizations(point, cfg)
        if len(chains) != 1:
            raise ConfigError("Monte Carlo methods take a single disorder realization")
        sc = cfg.get("sampler", {})
        req = SamplerRequest(chains[0], n_samples=int(sc.get("n_samples", 1000)), sweeps=point["sweeps"],
                             beta=point["beta"], seed=_point_seed(cfg, point["index"]),
                             batch_size=int(sc.get("batch_size", 100)))
        row["beta"] = point["beta"] if np.ndim(point["beta"]) == 0 else None
        ss = run_sa(req) if method == "sa" else run_svmc_tf(req, schedule, beta=point["beta"])
        st = cfg.get("stats", {})
        summ = stats.summarize(ss, chains[0].sign, int(st.get("n_resamples", 1000)), int(st.get("seed", 0)))
        row.update(n_bar=summ.kappa1, kappa1=summ.kappa1, kappa2=summ.kappa2, kappa3=summ.kappa3,
                   number_ratio2=L * summ.kappa2 / summ.kappa1 if summ.kappa1 > 0 else None,
                   number_ratio3=L**2 * summ.kappa3 / summ.kappa1 if summ.kappa1 > 0 else None)
        if "kappa1" in summ.ci95:
            row["n_bar_lo"], row["n_bar_hi"] = summ.ci95["kappa1"]
        ckk = np.concatenate([[0.0], summ.ckk]) if summ.ckk.size else None
        if "ckk" in summ.ci95:
            lo, hi = summ.ci95["ckk"]
            ckk_ci = (np.concatenate([[np.nan], lo]), np.concatenate([[np.nan], hi]))
        samples_out.append((point["index"], ss))
    corr_rows = []
    if ckk is not None:
        half = L // 2
        for r in range(1, min(half, ckk.size - 1) + 1):
            lo = ckk_ci[0][r] if ckk_ci is not None else None
            hi = ckk_ci[1][r] if ckk_ci is not None else None
            corr_rows.append([point["index"], method, L, J, point.get("t_a"), point.get("sweeps"), r,
                              row["n_bar"] * r, ckk[r], lo, hi])
    return row, corr_rows, samples_out


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def cmd_run(cfg: dict, out: Path, base_dir) -> int:
    started = time.time()
    cfg = resolve_run_config(cfg)
    _schedule(cfg, base_dir)
    points = grid_points(cfg)
    jobs = [(p, cfg, base_dir) for p in points]
    workers = _workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_point, jobs))
    else:
        results = [run_point(j) for j in jobs]
    out.mkdir(parents=True, exist_ok=True)
    rows, corr, failures, outputs = [], [], [], []
    sample_dir = out / "samples"
    for p, (row, crow, sss, err) in zip(points, results):
        if err is not None:
            failures.append({"index": p["index"], "point": p, "error": err})
            log.warning("grid point %d failed: %s", p["index"], err)
            continue
        rows.append([row[k] for k in POINT_HEADER])
        corr.extend(crow)
        for idx, ss in sss:
            sample_dir.mkdir(exist_ok=True)
            path = sample_dir / f"point_{idx:04d}.txt"
            ss.write(path)
            outputs += [path, Path(str(path) + ".json")]
    path = out / "points.csv"
    _write_csv(path, POINT_HEADER, rows)
    outputs.append(path)
    if corr:
        path = out / "correlators.csv"
        _write_csv(path, CORR_HEADER, corr)
        outputs.append(path)
    if cfg.get("fit_lz"):
        path = out / "fits.csv"
        _write_csv(path, FIT_HEADER, _lz_fits(rows))
        outputs.append(path)
    write_manifest(out, "run", cfg, outputs, failures, started,
                   {"seeds": {"master": cfg.get("seed", 0),
                              "points": {p["index"]: _point_seed(cfg, p["index"]) for p in points}}})
    return EXIT_PARTIAL if failures else EXIT_OK


def _lz_fits(rows):
    col = {k: i for i, k in enumerate(POINT_HEADER)}
    groups = {}
    for r in rows:
        if r[col["pgs"]] is None:
            continue
        groups.setdefault((r[col["method"]], r[col["L"]], r[col["J"]]), []).append(r)
    out = []
    for (method, L, J), rs in sorted(groups.items()):
        t = [r[col["t_a"]] for r in rs]
        p = [r[col["pgs"]] for r in rs]
        try:
            fr = theory.fit_lz_exponent(t, p)
        except theory.FitError:
            continue
        out.append([method, L, J, fr.rate, fr.slope_err, rs[0][col["a_theory"]], fr.rate * L**2, fr.n_points])
    return out


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(cfg: dict, out: Path, base_dir) -> int:
    started = time.time()
    _check_keys(cfg, ("schema", "inputs", "J", "n_resamples", "seed"), "config")
    if "inputs" not in cfg or "J" not in cfg:
        raise ConfigError("analyze needs 'inputs' (sample files) and 'J' (coupling sign)")
    sign = 1 if float(cfg["J"]) > 0 else -1
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name in _as_list(cfg["inputs"]):
        path = Path(name)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            ss = SampleSet.read(path)
        except FileNotFoundError as exc:
            raise ConfigError(f"input not found: {path}") from exc
        summ = stats.summarize(ss, sign, int(cfg.get("n_resamples", 1000)), int(cfg.get("seed", 0)))
        stem = path.stem
        js = out / f"{stem}.summary.json"
        js.write_text(summ.to_json())
        cp = out / f"{stem}.ckk.csv"
        _write_csv(cp, ["r", "nbar_r", "ckk", "ckk_lo", "ckk_hi"], summ.ckk_rows())
        outputs += [js, cp]
    write_manifest(out, "analyze", cfg, outputs, [], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# theory


def cmd_theory(cfg: dict, out: Path, base_dir) -> int:
    started = time.time()
    _check_keys(cfg, ("schema", "schedule", "J", "L", "t_a"), "config")
    schedule = _schedule(cfg, base_dir)
    out.mkdir(parents=True, exist_ok=True)
    r2, r3 = theory.cumulant_ratio_targets()
    rows = []
    for J in _as_list(cfg.get("J", 1.0)):
        kz = kz_b(schedule, float(J))
        for L in _as_list(cfg.get("L", 8)):
            for t in _as_list(cfg.get("t_a", 1.0)):
                rows.append([float(J), int(L), float(t), kz.s_c, kz.b, kz.tau_q(float(t)),
                             float(theory.predict_density(kz.b, float(t))), float(theory.lz_rate(kz.b, int(L))),
                             float(theory.predict_lz(kz.b, int(L), float(t))), r2, r3])
    path = out / "theory.csv"
    _write_csv(path, ["J", "L", "t_a", "s_c", "b", "tau_q", "n_bar", "a", "pgs", "ratio2", "ratio3"], rows)
    write_manifest(out, "theory", cfg, [path], [], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def _read_table(path: Path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return rows


def cmd_fit(cfg: dict, out: Path, base_dir) -> int:
    started = time.time()
    _check_keys(cfg, ("schema", "input", "kind", "x", "y", "window", "y_window", "group_by"), "config")
    if "input" not in cfg:
        raise ConfigError("fit needs an 'input' CSV")
    kind = cfg.get("kind", "power_law")
    if kind not in ("power_law", "lz"):
        raise ConfigError("kind must be 'power_law' or 'lz'")
    path = Path(cfg["input"])
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    if not path.exists():
        raise ConfigError(f"input not found: {path}")
    rows = _read_table(path)
    xk = cfg.get("x", "t_a")
    yk = cfg.get("y", "n_bar" if kind == "power_law" else "pgs")
    gk = _as_list(cfg.get("group_by", []))
    for k in [xk, yk, *gk]:
        if k not in rows[0]:
            raise ConfigError(f"column {k!r} not in {path}")
    groups = {}
    for r in rows:
        if r[xk] in ("", "nan") or r[yk] in ("", "nan"):
            continue
        try:
            xy = (float(r[xk]), float(r[yk]))
        except ValueError as exc:
            raise ConfigError(f"{path}: non-numeric value in {xk!r}/{yk!r} ({exc})") from exc
        groups.setdefault(tuple(r[g] for g in gk), []).append(xy)
    out_rows, failures = [], []
    for key, pts in sorted(groups.items()):
        x, y = np.array(pts).T
        try:
            if kind == "power_law":
                fr = theory.fit_power_law(x, y, window=cfg.get("window"), y_window=cfg.get("y_window"))
            else:
                fr = theory.fit_lz_exponent(x, y, p_window=tuple(cfg.get("y_window", (0.1, 0.9))),
                                            t_window=cfg.get("window"))
        except theory.FitError as exc:
            failures.append({"group": list(key), "error": str(exc)})
            continue
        out_rows.append([*key, fr.slope, fr.slope_err, fr.intercept, fr.n_points])
    out.mkdir(parents=True, exist_ok=True)
    p = out / "fit.csv"
    _write_csv(p, [*gk, "slope", "slope_stderr", "intercept", "n_points"], out_rows)
    write_manifest(out, "fit", cfg, [p], failures, started)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# shim


def cmd_shim(cfg: dict, out: Path, base_dir) -> int:
    started = time.time()
    _check_keys(cfg, ("schema", "sampler", "L", "J", "iterations", "staged", "shim", "device", "sweeps",
                      "schedule", "seed"), "config")
    L, J = int(cfg.get("L", 64)), float(cfg.get("J", -1.0))
    try:
        sc = ShimConfig.from_config(cfg.get("shim", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"shim: {exc}") from exc
    kind = cfg.get("sampler", "freeze-out")
    seed = int(cfg.get("seed", 0))
    if kind == "freeze-out":
        dev = cfg.get("device", {})
        _check_keys(dev, ("sigma", "n0", "beta_f", "gain_J", "gain_O", "delay_scale", "flux_gain", "seed"), "device")
        dev = dict(dev)
        sampler = FreezeOutSampler(L, J, n_lines=sc.n_lines, **dev)
    elif kind in ("sa", "svmc"):
        req = SamplerRequest(ChainSpec.uniform(L, J), sweeps=int(cfg.get("sweeps", 100)),
                             beta=(0.1, 100.0) if kind == "sa" else 32.0,
                             flux_gain=float(cfg.get("device", {}).get("flux_gain", 1.0)))
        sampler = MonteCarloShimSampler(req, kind, _schedule(cfg, base_dir) if kind == "svmc" else None)
    else:
        raise ConfigError(f"unknown shim sampler {kind!r}")
    rep = run_shim(sampler, sc, int(cfg.get("iterations", 300)), L=L, J=J, seed=seed,
                   staged=bool(cfg.get("staged", False)))
    out.mkdir(parents=True, exist_ok=True)
    p1 = out / "shim_report.csv"
    rep.write_csv(p1)
    p2 = out / "shim_state.csv"
    st = rep.state
    _write_csv(p2, ["site", "line", "flux", "coupling", "offset"],
               [[i, int(st.lines[i]), st.flux[i], st.couplings[i], st.site_offsets()[i]] for i in range(L)])
    extra = {"summary": {"std_m_before": rep.std_m_before, "std_m_after": rep.std_m_after,
                         "std_f_before": rep.std_f_before, "std_f_after": rep.std_f_after}}
    write_manifest(out, "shim", cfg, [p1, p2], [], started, extra)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "analyze": cmd_analyze, "theory": cmd_theory, "fit": cmd_fit, "shim": cmd_shim}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kzising", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"kzising {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config (or a manifest.json to replay)")
        p.add_argument("--out", required=True, help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, Path(args.out), Path(args.config).resolve().parent)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SampleFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
