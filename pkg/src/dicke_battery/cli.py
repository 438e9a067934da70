"""Command-line entry point: ``dicke-battery <command> [flags]``.

Commands write CSV files into ``--out`` and exit with 0 on success, 2 on a
configuration error and 3 when some cell or curve failed numerically.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analysis import activation_lobe, jensen_bound_check, leakage_functional
from .dicke import enumerate_sectors
from .dynamics import (
    StiffnessError,
    evolve_full,
    evolve_symmetric,
    locate_optimal_alpha_c,
    product_gibbs_block_state,
)
from .ergotropy import ergotropic_balance, ergotropy, haar_unitary, steady_ergotropy
from .liouville import (
    BathParams,
    FullLiouvillian,
    build_sector_generator,
    classify_sector,
    enumerate_bohr_sectors,
    gershgorin_gap,
)
from .steady import FullState, steady_state_full

COMMANDS = ("sectors", "sweep", "evolve", "leakage", "balance")
THREADS_ENV = "DICKE_BATTERY_THREADS"


class ConfigError(ValueError):
    pass


# name -> (kind, default, help); kinds: int, float, floats, grid, str, bool
SCHEMA = {
    "n": ("int", 4, "number of qubits"),
    "eta": ("float", 1.0, "collective fraction in [0, 1]"),
    "gamma_c": ("float", 1.0, "collective rate"),
    "gamma_r": ("floats", "1.0", "local/collective rate ratio; comma list = curve family"),
    "alpha_c": ("grid", "0.5", "collective Bose ratio: value, list, min:max:points, or 'opt' (evolve)"),
    "alpha_l": ("grid", "0.0", "local Bose ratio: value, list or min:max:points"),
    "q": ("grid", "0.0", "initial product-Gibbs ratio: value, list or min:max:points"),
    "t_max": ("float", 50.0, "final time in units of 1/gamma_c"),
    "t_points": ("int", 201, "number of time samples (0 gives an empty trajectory)"),
    "seed": ("int", None, "64-bit seed for Haar sampling"),
    "samples": ("int", 100, "Haar samples per (beta_q, beta_c) cell"),
    "beta_q": ("floats", "0.5,1,5,10", "initial inverse temperatures for the balance study"),
    "beta_c": ("floats", "0.01,10", "collective-bath inverse temperatures for the balance study"),
    "backend": ("str", "auto", "auto (population backend when possible) or full (dense 2^N space)"),
    "tol": ("float", 1e-10, "steady-state residual tolerance for the dense backend"),
    "out": ("str", "out", "output directory"),
    "render": ("bool", False, "also draw PNG figures from the CSV output"),
}


@dataclass
class RunConfig:
    command: str
    n: int
    eta: float
    gamma_c: float
    gamma_r: list
    alpha_c: object
    alpha_l: list
    q: list
    t_max: float
    t_points: int
    seed: int | None
    samples: int
    beta_q: list
    beta_c: list
    backend: str
    tol: float
    out: str
    render: bool


def parse_grid(text: str, name: str):
    text = str(text).strip()
    if text == "opt":
        return "opt"
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{name}: grid must be min:max:points")
        lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
        if pts < 2:
            raise ConfigError(f"{name}: a grid needs at least 2 points")
        return list(np.linspace(lo, hi, pts))
    return [float(x) for x in text.split(",") if x.strip()]


def _convert(name: str, value):
    kind = SCHEMA[name][0]
    if value is None:
        return None
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "floats":
            return [float(x) for x in str(value).split(",") if x.strip()]
        if kind == "grid":
            return parse_grid(value, name)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            return str(value).strip().lower() in ("1", "true", "yes", "on")
        return str(value)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {value!r} ({exc})") from exc


def read_config_file(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def schema_text() -> str:
    lines = ["# key = default    # meaning"]
    for k, (kind, default, text) in SCHEMA.items():
        lines.append(f"{k} = {'' if default is None else default}    # {kind}: {text}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dicke-battery", description=__doc__.splitlines()[0])
    ap.add_argument("--print-config", action="store_true", help="print the config schema with defaults")
    sub = ap.add_subparsers(dest="command")
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--print-config", action="store_true", default=argparse.SUPPRESS,
                       help="print the config schema with defaults")
        for k, (kind, _, text) in SCHEMA.items():
            flag = "--" + k.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, dest=k, action="store_const", const="true", default=None, help=text)
            else:
                p.add_argument(flag, dest=k, default=None, help=text)
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = {k: spec[1] for k, spec in SCHEMA.items()}
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for k in SCHEMA:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    vals = {k: _convert(k, v) for k, v in raw.items()}
    cfg = RunConfig(command=args.command, **vals)
    if cfg.n < 1:
        raise ConfigError("n must be positive")
    if not 0.0 <= cfg.eta <= 1.0:
        raise ConfigError("eta must lie in [0, 1]")
    if cfg.gamma_c < 0 or any(g < 0 for g in cfg.gamma_r):
        raise ConfigError("rates must be nonnegative")
    for name in ("alpha_c", "alpha_l"):
        grid = getattr(cfg, name)
        if grid != "opt" and any(not 0.0 <= a < 1.0 for a in grid):
            raise ConfigError(f"{name} values must lie in [0, 1)")
    if cfg.q == "opt" or cfg.alpha_l == "opt" or any(not 0.0 <= x <= 1.0 for x in cfg.q):
        raise ConfigError("q values must lie in [0, 1]")
    if cfg.backend not in ("auto", "full"):
        raise ConfigError("backend must be auto or full")
    if cfg.t_points < 0 or cfg.t_max < 0:
        raise ConfigError("time grid must be nonnegative")
    if cfg.tol <= 0:
        raise ConfigError("tol must be positive")
    return cfg


def _threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    return os.cpu_count() or 1


def _pool_map(fn, items):
    items = list(items)
    n = min(_threads(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _single(cfg: RunConfig, name: str) -> float:
    vals = getattr(cfg, name)
    if vals == "opt" or len(vals) != 1:
        raise ConfigError(f"{name} must be a single value for this command")
    return vals[0]


SWEEP_HEADER = ["N", "eta", "gamma_r", "alpha_c", "alpha_l", "q",
                "energy", "passive_energy", "ergotropy", "residual", "flag"]


def _sweep_cell(cfg: RunConfig, gamma_r: float, alpha_c: float, alpha_l: float, q: float):
    params = BathParams(gamma_c=cfg.gamma_c, gamma_l=gamma_r * cfg.gamma_c, eta=cfg.eta,
                        alpha_c=alpha_c, alpha_l=alpha_l)
    try:
        if cfg.backend == "full":
            if cfg.n > 8:
                raise ValueError("dense backend limited to N <= 8 in sweeps")
            seed = FullState.product_gibbs(cfg.n, q)
            if not params.has_local and params.rates()[0] == 0:
                rep = ergotropy(seed)
            else:
                rep = ergotropy(steady_state_full(FullLiouvillian(cfg.n, params), seed, tol=cfg.tol))
        else:
            rep = steady_ergotropy(cfg.n, params, product_gibbs_block_state(cfg.n, q))
        vals = (rep.energy, rep.passive_energy, rep.ergotropy, rep.residual)
        flag = "ok" if all(math.isfinite(v) for v in vals) else "nonfinite"
    except Exception as exc:  # a failed cell is reported, not fatal
        vals = (math.nan,) * 4
        flag = f"error: {type(exc).__name__}"
    return [cfg.n, cfg.eta, gamma_r, alpha_c, alpha_l, q, *vals, flag]


def run_sweep(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if cfg.alpha_c == "opt":
        raise ConfigError("sweep needs an explicit alpha_c grid")
    gamma_r = cfg.gamma_r[0] if len(cfg.gamma_r) == 1 else None
    if gamma_r is None:
        raise ConfigError("sweep takes a single gamma_r")
    if cfg.eta == 1.0:
        # (q, alpha_c) plane; alpha_l is irrelevant without local noise
        cells = [(gamma_r, a, cfg.alpha_l[0], q) for q in cfg.q for a in cfg.alpha_c]
    else:
        if len(cfg.q) != 1:
            raise ConfigError("with local noise the sweep plane is (alpha_c, alpha_l); give a single q")
        cells = [(gamma_r, a, al, cfg.q[0]) for a in cfg.alpha_c for al in cfg.alpha_l]
    rows = _pool_map(lambda c: _sweep_cell(cfg, *c), cells)
    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    if cfg.eta < 1.0 and len(cfg.alpha_c) >= 5 and len(cfg.alpha_l) >= 5:
        w = np.array([r[8] for r in rows]).reshape(len(cfg.alpha_c), len(cfg.alpha_l))
        lobe = activation_lobe(cfg.alpha_c, cfg.alpha_l, np.nan_to_num(w))
        _write_csv(out / "lobe.csv", [f.name for f in fields(lobe)],
                   [[int(v) if isinstance(v, bool) else v for v in (getattr(lobe, f.name) for f in fields(lobe))]])
    if cfg.render:
        from .render import render_sweep

        render_sweep(out / "sweep.csv", out / "sweep.png")
    return 3 if any(r[-1] != "ok" for r in rows) else 0


def _manifest(out: Path, cfg: RunConfig, extra: dict) -> None:
    body = {k: v for k, v in vars(cfg).items()}
    body.update(extra)
    text = "created: " + time.strftime("%Y-%m-%dT%H:%M:%S") + "\n" + json.dumps(body, indent=2, sort_keys=True, default=str) + "\n"
    (out / "manifest.txt").write_text(text)


def run_evolve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    alpha_l, q = _single(cfg, "alpha_l"), _single(cfg, "q")
    x = np.linspace(0.0, cfg.t_max, cfg.t_points) if cfg.t_points else np.zeros(0)
    times = x / cfg.gamma_c if cfg.gamma_c > 0 else x

    def curve(gamma_r):
        params = BathParams(gamma_c=cfg.gamma_c, gamma_l=gamma_r * cfg.gamma_c, eta=cfg.eta,
                            alpha_c=0.0, alpha_l=alpha_l)
        if cfg.alpha_c == "opt":
            a, _ = locate_optimal_alpha_c(cfg.n, params)
        else:
            a = _single(cfg, "alpha_c")
        params = params.replace(alpha_c=a)
        start = product_gibbs_block_state(cfg.n, q)
        try:
            if cfg.backend == "full":
                traj = evolve_full(start.to_full(), FullLiouvillian(cfg.n, params), times)
            else:
                traj = evolve_symmetric(start, params, times)
        except StiffnessError as exc:
            traj = exc.partial
        return a, traj

    results = _pool_map(curve, cfg.gamma_r)
    files, failed = [], False
    for i, (gr, (a, traj)) in enumerate(zip(cfg.gamma_r, results)):
        name = f"trajectory_{i:02d}.csv"
        (out / name).write_text(traj.to_csv())
        files.append({"file": name, "gamma_r": gr, "alpha_c": a, "failure": traj.failure})
        failed |= traj.failure is not None
    _manifest(out, cfg, {"curves": files})
    if cfg.render:
        from .render import render_trajectories

        render_trajectories([out / f["file"] for f in files], [f"gamma_r={f['gamma_r']:g}" for f in files],
                            out / "trajectories.png")
    return 3 if failed else 0


def run_sectors(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    rows = [[str(j), nu, int(2 * j + 1), nu * int(2 * j + 1)] for j, nu in enumerate_sectors(cfg.n)]
    _write_csv(out / "sectors.csv", ["j", "nu", "block_dim", "total_dim"], rows)
    if cfg.n <= 30:
        params = BathParams(gamma_c=cfg.gamma_c, eta=1.0, alpha_c=_single(cfg, "alpha_c"))
        brows = []
        for sec in enumerate_bohr_sectors(cfg.n):
            gen = build_sector_generator(sec, params)
            lam = np.linalg.eigvals(gen.matrix()).real.max() if gen.dim <= 64 else math.nan
            gap = gershgorin_gap(gen)
            brows.append([str(Fraction(sec.j2, 2)), str(Fraction(sec.jp2, 2)), sec.delta, sec.dim, classify_sector(sec).value,
                          gap.gap, lam])
        _write_csv(out / "bohr_sectors.csv",
                   ["j", "j_prime", "delta_jz", "dim", "kind", "gershgorin_gap", "max_real_eigenvalue"], brows)
    return 0


LEAK_HEADER = ["N", "eta", "gamma_r", "alpha_l", "ladder_ratio", "p_sym", "mean_K", "mean_K2",
               "mean_H", "mean_H2", "lambda_formula", "lambda_numeric", "jensen_holds"]


def run_leakage(cfg: RunConfig) -> int:
    """Leakage of thermal bright ladders with ratio taken from the alpha_c grid."""
    if cfg.n > 10:
        raise ConfigError("leakage diagnostics are limited to N <= 10")
    if cfg.alpha_c == "opt":
        raise ConfigError("leakage needs explicit alpha_c values (bright-ladder ratios)")
    from .dicke import dicke_states

    v = dicke_states(cfg.n)
    alpha_l = _single(cfg, "alpha_l")

    def row(args):
        gr, ratio = args
        pops = ratio ** np.arange(cfg.n + 1) if ratio > 0 else np.eye(cfg.n + 1)[0]
        pops = pops / pops.sum()
        state = FullState(v @ np.diag(pops) @ v.T)
        params = BathParams(gamma_c=cfg.gamma_c, gamma_l=gr * cfg.gamma_c, eta=cfg.eta,
                            alpha_c=0.0, alpha_l=alpha_l)
        rep = leakage_functional(state, params)
        jc = jensen_bound_check(state)
        return [cfg.n, cfg.eta, gr, alpha_l, ratio, rep.p_sym, rep.mean_K, rep.mean_K2, rep.mean_H,
                rep.mean_H2, rep.lambda_formula, rep.lambda_numeric, int(jc.holds)]

    rows = _pool_map(row, [(g, a) for g in cfg.gamma_r for a in cfg.alpha_c])
    _write_csv(Path(cfg.out) / "leakage.csv", LEAK_HEADER, rows)
    return 0


def run_balance(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("balance needs --seed")
    if cfg.n > 6:
        raise ConfigError("balance study is limited to N <= 6")
    if cfg.samples < 0:
        raise ConfigError("samples must be nonnegative")
    cells = [(bq, bc) for bq in cfg.beta_q for bc in cfg.beta_c]
    streams = np.random.SeedSequence(cfg.seed).spawn(len(cells))

    def cell(args):
        (bq, bc), ss = args
        rng = np.random.default_rng(ss)
        params = BathParams(gamma_c=cfg.gamma_c, eta=1.0, alpha_c=math.exp(-bc))
        rows = []
        for i in range(cfg.samples):
            rep = ergotropic_balance(math.exp(-bq), haar_unitary(1 << cfg.n, rng), params)
            rows.append([bq, bc, i, rep.delta_w, rep.delta_w_direct, rep.prep_cost])
        return rows

    rows = [r for chunk in _pool_map(cell, list(zip(cells, streams))) for r in chunk]
    worst = max((r[3] for r in rows), default=math.nan)
    rows.append(["all", "all", "max", worst, max((r[4] for r in rows), default=math.nan), math.nan])
    _write_csv(Path(cfg.out) / "balance.csv",
               ["beta_q", "beta_c", "sample", "delta_w", "delta_w_direct", "prep_cost"], rows)
    return 0


RUNNERS = {"sweep": run_sweep, "evolve": run_evolve, "sectors": run_sectors,
           "leakage": run_leakage, "balance": run_balance}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        sys.stdout.write(schema_text())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = resolve_config(args)
        return RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
