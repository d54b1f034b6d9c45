"""Command line front end: ``hierlab <command> [--config path] [--out dir] ...``.

Exit codes: 0 success, 2 configuration or state error, 3 numerical check
failed, 4 I/O error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import BlowUpError, ToleranceError
from .grid import (GridFunction, PeriodicGrid, omega_L2, plane_wave, random_band_limited,
                   read_state, state_to_dict)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("invariants", "gradcheck", "involution", "evolve", "lax", "gp-check", "rank1", "dump-tables")

DEFAULTS: Dict[str, Any] = {
    "grid": {"N": 256, "L": float(np.pi)},
    "kappa": 1,
    "n_max": 6,
    "seed": 0,
    "state": None,
    "initial": {"kind": "random", "cutoff": 6, "amplitude": 0.25},
    "tolerances": {
        "gradient": 1e-6,
        "involution": 1e-6,
        "drift_strang": 1e-6,
        "drift_ifrk4": 1e-5,
        "det": 1e-8,
        "energy": 1e-10,
        "spot": 1e-8,
        "gp3": 1e-4,
        "gp4": 1e-3,
        "xhn": 1e-10,
        "rank1": 1e-8,
    },
    "gradcheck": {"trials": 10, "h": 1e-4, "cutoff": 12},
    "involution": {"pairs": "all", "trials": 10, "cutoff": 12},
    "flow": {"n": 3, "dt": 1e-3, "steps": 1000, "scheme": "strang", "stride": 100},
    "lax": {"lambdas": [2.0, 5.0, 12.5, 25.5, 50.5], "K": 3, "substeps": 4},
    "gp": {"sub_N": 64, "cutoff": 3, "amplitude": 0.5, "dt3": [1e-3, 5e-4],
           "dt4": [2.5e-4, 1.25e-4], "steps": 12},
    "rank1": {"d": 3, "n": 2, "tensor": None},
}

# blocks whose keys depend on a "kind" selector and are not validated here
_FREE_FORM = ("initial",)

_EPS_FLOOR = float(np.finfo(float).eps) * 1e3


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if key in _FREE_FORM:
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key} must be an object")
            out[key] = dict(val)
        elif isinstance(base[key], dict) and base[key] and isinstance(val, dict):
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


@dataclass
class RunConfig:
    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def grid(self) -> PeriodicGrid:
        g = self.raw["grid"]
        return PeriodicGrid(float(g["L"]), int(g["N"]))

    @property
    def kappa(self) -> int:
        return int(self.raw["kappa"])

    def tol(self, name: str) -> float:
        return float(self.raw["tolerances"][name])


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    raw = _merge(DEFAULTS, data)
    for key, val in overrides.items():
        if val is not None:
            sect, _, name = key.partition(".")
            if name:
                raw[sect][name] = val
            else:
                raw[sect] = val
    cfg = RunConfig(raw)
    try:
        cfg.grid
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad grid block: {exc}") from exc
    if raw["kappa"] not in (1, -1):
        raise ConfigError(f"kappa must be +1 or -1, got {raw['kappa']}")
    if not isinstance(raw["n_max"], int) or not 1 <= raw["n_max"] <= 10:
        raise ConfigError(f"n_max must be an integer in [1, 10], got {raw['n_max']}")
    for name, val in raw["tolerances"].items():
        if not isinstance(val, (int, float)) or val < _EPS_FLOOR:
            raise ConfigError(f"tolerance {name}={val} below the floor {_EPS_FLOOR:.1e}")
    return cfg


# -- output helpers --------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header: List[str], rows: List[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _atomic_write(path, buf.getvalue())


def write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=1) + "\n")


def _maybe_plot(enabled: bool, path: str, draw) -> None:
    """Plots are illustrations: any failure is reported and ignored."""
    if not enabled:
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    except Exception as exc:  # noqa: BLE001
        print(f"plot skipped: {exc}", file=sys.stderr)


# -- inputs ----------------------------------------------------------------------

def initial_state(cfg: RunConfig, seed_offset: int = 0) -> GridFunction:
    if cfg["state"]:
        phi = read_state(cfg["state"])
        if phi.grid != cfg.grid:
            raise ConfigError(f"state grid {phi.grid} does not match config grid {cfg.grid}")
        return phi
    init = cfg["initial"]
    kind = init.get("kind", "random")
    if kind == "random":
        return random_band_limited(cfg.grid, int(init.get("cutoff", 6)), cfg["seed"] + seed_offset,
                                   float(init.get("amplitude", 0.25)))
    if kind == "plane_wave":
        return plane_wave(cfg.grid, complex(init.get("amplitude", 1.0)), int(init.get("mode", 1)))
    raise ConfigError(f"unknown initial kind {kind!r}")


def _pairs(pairs, n_max: int):
    if pairs == "all":
        return [(n, m) for n in range(1, n_max + 1) for m in range(n + 1, n_max + 1)]
    out = []
    for chunk in str(pairs).split(";"):
        a, b = chunk.split(",")
        out.append((int(a), int(b)))
    return out


# -- commands --------------------------------------------------------------------

def cmd_invariants(cfg, out, args):
    from .hierarchy import build, invariant
    table = build(cfg["n_max"], cfg.kappa)
    phi = initial_state(cfg)
    rows = [[n, invariant(table, n, phi)] for n in range(1, cfg["n_max"] + 1)]
    write_csv(os.path.join(out, "invariants.csv"), ["n", "value"], rows)
    return EXIT_OK


def cmd_gradcheck(cfg, out, args):
    from .hierarchy import build, grad_s, invariant
    from .poisson import fd_directional
    table = build(cfg["n_max"], cfg.kappa)
    gc = cfg["gradcheck"]
    tol = cfg.tol("gradient")
    rows, ok = [], True
    for t in range(int(gc["trials"])):
        phi = random_band_limited(cfg.grid, gc["cutoff"], cfg["seed"] + 2 * t)
        delta = random_band_limited(cfg.grid, gc["cutoff"], cfg["seed"] + 2 * t + 1)
        for n in range(1, cfg["n_max"] + 1):
            fd = fd_directional(lambda f: invariant(table, n, f), phi, delta, gc["h"]).real
            sy = omega_L2(grad_s(table, n, phi), delta)
            bound = tol * (1 + abs(invariant(table, n, phi)))
            err = abs(fd - sy)
            ok &= err <= bound
            rows.append([t, n, fd, sy, err, bound])
    write_csv(os.path.join(out, "gradcheck.csv"), ["trial", "n", "fd", "omega", "error", "bound"], rows)
    if not ok:
        raise ToleranceError("gradient check exceeded its bound")
    return EXIT_OK


def cmd_involution(cfg, out, args):
    from .hierarchy import build
    from .poisson import bracket_L2, bracket_L2_V
    table = build(cfg["n_max"], cfg.kappa)
    inv = cfg["involution"]
    pairs = _pairs(inv["pairs"], cfg["n_max"])
    header = ["n", "m", "value_re", "value_im", "scale", "normalized"]
    pure, mixed = [], []
    worst = 0.0
    for t in range(int(inv["trials"])):
        phi = random_band_limited(cfg.grid, inv["cutoff"], cfg["seed"] + t)
        phi2 = random_band_limited(cfg.grid, inv["cutoff"], cfg["seed"] + 1000 + t)
        for n, m in pairs:
            for rows, rep in ((pure, bracket_L2(table, n, m, phi)),
                              (mixed, bracket_L2_V(table, n, m, phi, phi2))):
                r = rep.row()
                rows.append([r[h] for h in header])
                worst = max(worst, rep.normalized)
    write_csv(os.path.join(out, "involution.csv"), header, pure)
    write_csv(os.path.join(out, "involution_mixed.csv"), header, mixed)
    print(f"max normalized bracket: {worst:.3e}")
    if worst > cfg.tol("involution"):
        raise ToleranceError(f"normalized bracket {worst:.3e} above tolerance")
    return EXIT_OK


def cmd_evolve(cfg, out, args):
    from .flows import conservation_report, evolve
    from .hierarchy import build
    fl = cfg["flow"]
    table = build(max(cfg["n_max"], fl["n"]), cfg.kappa)
    phi = initial_state(cfg)
    traj = evolve(table, fl["n"], phi, float(fl["dt"]), int(fl["steps"]), fl["scheme"], int(fl["stride"]))
    report = conservation_report(table, traj, range(1, cfg["n_max"] + 1))
    write_json(os.path.join(out, "trajectory.json"), {
        "n": traj.n, "kappa": traj.kappa, "scheme": traj.scheme, "dt": traj.dt,
        "stride": traj.stride, "times": traj.times,
        "snapshots": [state_to_dict(s) for s in traj.states],
    })
    write_csv(os.path.join(out, "conservation.csv"), ["time", "n", "value", "drift"], [list(r) for r in report])
    _maybe_plot(args.plot, os.path.join(out, "conservation.svg"), lambda ax: _plot_drift(ax, report))
    worst = max(r[3] for r in report)
    tol = cfg.tol("drift_strang" if fl["scheme"] == "strang" else "drift_ifrk4")
    print(f"max relative drift: {worst:.3e}")
    if worst > tol:
        raise ToleranceError(f"drift {worst:.3e} above tolerance {tol:.1e}")
    return EXIT_OK


def _plot_drift(ax, report):
    ns = sorted({r[1] for r in report})
    for n in ns:
        t = [r[0] for r in report if r[1] == n]
        d = [max(r[3], 1e-18) for r in report if r[1] == n]
        ax.semilogy(t, d, label=f"I_{n}")
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend()


def cmd_lax(cfg, out, args):
    from .hierarchy import build
    from .lax import LaxContext, asymptotic_residual, monodromy, quasimomentum_sweep
    lx = cfg["lax"]
    table = build(max(cfg["n_max"], lx["K"]), cfg.kappa)
    phi = initial_state(cfg)
    lams = [float(v) for v in lx["lambdas"]]
    ctx = LaxContext.from_phi(phi, cfg.kappa, lams[0])
    ps = quasimomentum_sweep(ctx, lams, lx["substeps"])
    big = [l for l in lams if abs(l) >= 10]
    res = dict(asymptotic_residual(ctx, big, table, lx["K"], lx["substeps"])) if big else {}
    rows, worst = [], 0.0
    for lam, p in zip(lams, ps):
        M = monodromy(ctx.with_lambda(lam), lx["substeps"])
        det_err = abs(M.det - 1)
        worst = max(worst, det_err)
        rk = res.get(lam, "")
        rows.append([lam, M.trace.real, M.trace.imag, det_err, p.real, p.imag, rk])
    write_csv(os.path.join(out, "lax.csv"),
              ["lambda", "trace_re", "trace_im", "det_err", "p_re", "p_im", "residual_K"], rows)

    def draw(ax):
        ax.plot([r[0] for r in rows], [r[4] for r in rows], "o-", label="Re p")
        ax.set_xlabel("lambda")
        ax.legend()
    _maybe_plot(args.plot, os.path.join(out, "lax.svg"), draw)
    if worst > cfg.tol("det"):
        raise ToleranceError(f"|det T - 1| = {worst:.3e} above tolerance")
    return EXIT_OK


def cmd_gp_check(cfg, out, args):
    from .flows import evolve
    from .gp import (factorized_energy, gp3_residual, gp4_residual, mixed_energy, w3_spot_check,
                     w4_spot_check, xhn_factorized_residual)
    from .grid import resample
    from .hierarchy import build, grad_s, i_bn, invariant
    gpc = cfg["gp"]
    table = build(cfg["n_max"], cfg.kappa)
    sub_N = int(gpc["sub_N"])
    phi = random_band_limited(cfg.grid, gpc["cutoff"], cfg["seed"], gpc["amplitude"])
    phi2 = random_band_limited(cfg.grid, gpc["cutoff"], cfg["seed"] + 1, gpc["amplitude"])
    rows = []

    def check(name, value, tol):
        rows.append([name, value, tol, int(value <= tol)])

    for n in range(1, cfg["n_max"] + 1):
        ref = invariant(table, n, phi)
        check(f"factorized_energy_{n}", abs(factorized_energy(table, n, phi) - ref) / max(abs(ref), 1e-300),
              cfg.tol("energy"))
        ref = i_bn(table, n, phi, phi2)
        check(f"mixed_energy_{n}", abs(mixed_energy(table, n, phi, phi2) - ref) / max(abs(ref), 1e-300),
              cfg.tol("energy"))
    for name, fn in (("w3_spot", w3_spot_check), ("w4_spot", w4_spot_check)):
        a, b = fn(table, phi, sub_N)
        check(name, abs(a - b) / abs(b), cfg.tol("spot"))
    ps = resample(phi, sub_N)
    for n in (3, 4):
        for k in (1, 2):
            check(f"xhn_{n}_{k}", xhn_factorized_residual(table, n, k, ps, grad_s(table, n, ps)), cfg.tol("xhn"))
    steps = int(gpc["steps"])
    for tag, n, scheme, dts, fn, tol in (("gp3", 3, "strang", gpc["dt3"], gp3_residual, cfg.tol("gp3")),
                                         ("gp4", 4, "ifrk4", gpc["dt4"], gp4_residual, cfg.tol("gp4"))):
        res = []
        for dt in dts:
            traj = evolve(table, n, phi, float(dt), steps, scheme, 1)
            res.append(max(r[1] for r in fn(traj, sub_N=sub_N, every=steps // 2 - 1)))
        for dt, r in zip(dts, res):
            check(f"{tag}_dt={dt}", r, tol)
        ratio = res[0] / max(res[1], 1e-300)
        rows.append([f"{tag}_convergence_ratio", ratio, 3.5, int(ratio >= 3.5)])
    write_csv(os.path.join(out, "gp_check.csv"), ["check", "value", "tolerance", "pass"], rows)
    failed = [r[0] for r in rows if not r[3]]
    if failed:
        raise ToleranceError("gp checks failed: " + ", ".join(failed))
    return EXIT_OK


def _parse_tensor(value) -> np.ndarray:
    if isinstance(value, dict):
        return np.asarray(value["re"], dtype=float) + 1j * np.asarray(value["im"], dtype=float)
    return np.asarray(value, dtype=complex)


def cmd_rank1(cfg, out, args):
    from .gp import reconstruct, sym_rank1_decompose, symmetrize
    rk = cfg["rank1"]
    if rk["tensor"] is not None:
        try:
            T = _parse_tensor(rk["tensor"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad rank1.tensor: {exc}") from exc
    else:
        rng = np.random.default_rng(cfg["seed"])
        shape = (int(rk["d"]),) * int(rk["n"])
        T = symmetrize(rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).entries
    try:
        terms = sym_rank1_decompose(T, seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    err = np.max(np.abs(reconstruct(terms, T.shape[0], T.ndim) - T)) / max(np.max(np.abs(T)), 1e-300)
    write_json(os.path.join(out, "rank1.json"), {
        "terms": [{"coeff": {"re": c.real, "im": c.imag},
                   "vector": [{"re": float(z.real), "im": float(z.imag)} for z in v]} for c, v in terms],
    })
    print(f"terms: {len(terms)}, relative reconstruction error: {err:.3e}")
    if err > cfg.tol("rank1"):
        raise ToleranceError(f"reconstruction error {err:.3e} above tolerance")
    return EXIT_OK


def cmd_dump_tables(cfg, out, args):
    from .hierarchy import build, write_tables
    write_tables(os.path.join(out, "tables.json"), build(cfg["n_max"], cfg.kappa))
    return EXIT_OK


HANDLERS = {
    "invariants": cmd_invariants,
    "gradcheck": cmd_gradcheck,
    "involution": cmd_involution,
    "evolve": cmd_evolve,
    "lax": cmd_lax,
    "gp-check": cmd_gp_check,
    "rank1": cmd_rank1,
    "dump-tables": cmd_dump_tables,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hierlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration (defaults are used when omitted)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--plot", action="store_true", help="also write SVG plots (needs matplotlib)")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--kappa", type=int, choices=(1, -1))
    p.add_argument("--state", help="state JSON file for phi")
    p.add_argument("--pairs", help="'all' or 'n,m;n,m' for involution")
    p.add_argument("--trials", type=int)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    overrides = {"seed": args.seed, "n_max": args.n_max, "kappa": args.kappa, "state": args.state}
    if args.command == "involution":
        overrides.update({"involution.pairs": args.pairs, "involution.trials": args.trials})
    elif args.command == "gradcheck":
        overrides["gradcheck.trials"] = args.trials
    try:
        cfg = load_config(args.config, overrides)
        if cfg["state"]:
            initial_state(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        return HANDLERS[args.command](cfg, args.out, args)
    except ValueError as exc:
        # includes ConfigError and grid mismatches between inputs
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ToleranceError, BlowUpError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
