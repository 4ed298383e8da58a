"""Command-line front end: spectra, single cycles, landscapes, EMW curves, finite-time sweeps.

Every command writes a CSV whose ``#`` header carries the resolved config and
code version; a matching plotting script is written next to sweep outputs.
Exit codes: 0 success, 2 usage or validation, 3 resource limits, 4 numerical
accuracy failures.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .fewbody_ed import GTILDE_WARN
from .spectrum import TruncationError, normalize_statistics

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_ACCURACY = 0, 2, 3, 4


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ schema
# key: (type, default); None defaults are resolved per command
SCHEMA = {
    "spectrum": {"n": (int, 2), "stat": (str, "distinguishable"), "gtilde": (float, 0.0), "omega": (float, 1.0),
                 "levels": (int, 20), "method": (str, None), "quanta": (int, 12), "e_cut": (int, 20)},
    "cycle": {"n": (int, 2), "stat": (str, "distinguishable"), "gi": (float, 0.0), "gf": (float, 0.0),
              "kappa": (float, 1 / 3), "omega_i": (float, 1.0), "beta_c": (float, 10.0), "beta_h": (float, 1.0)},
    "heatmap": {"n": (int, 2), "stat": (str, "distinguishable"), "points": (int, 60), "g_max": (float, 50.0),
                "kappa": (float, 1 / 3), "beta_c": (float, 10.0), "beta_h": (float, 1.0), "polish": (bool, True)},
    "emw": {"n": (int, 2), "stat": (str, "distinguishable"), "beta_c": (float, 1.0),
            "ratios": (list, [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
            "interacting": (bool, True), "starts": (int, 8)},
    "finite_time": {"stat": (str, "distinguishable"), "gi": (float, 1.95), "gf": (float, 1.4),
                    "kappa": (float, 1 / 3), "beta_c": (float, 10.0), "beta_h": (float, None),
                    "tau_min": (float, 1.0), "tau_max": (float, 100.0), "tau_points": (int, 30),
                    "protocols": (list, ["optimal", "scale_invariant", "noninteracting"]),
                    "points": (int, 4097), "dt": (float, 1e-3), "half_width": (float, 12.0),
                    "grid_check": (bool, True)},
    "selftest": {},
}
RUN_KEYS = {"out": (str, "."), "threads": (int, 1), "seed": (int, 42)}


def _coerce(key, typ, value):
    if value is None:
        return None
    try:
        if typ is bool:
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if typ is list:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return list(value)
        return typ(value)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot read {value!r} as {typ.__name__}") from None


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    """Defaults <- config file <- command-line flags, validated against SCHEMA."""
    section = command.replace("-", "_")
    schema = SCHEMA[section]
    known = set(RUN_KEYS) | set(SCHEMA)
    for k in file_cfg:
        if k not in known:
            raise UsageError(f"unknown config key {k!r}")
    block = file_cfg.get(section, {})
    for k in block:
        if k not in schema:
            raise UsageError(f"unknown key {k!r} in [{section}]")
    cfg = {}
    for k, (typ, default) in {**RUN_KEYS, **schema}.items():
        v = default
        if k in file_cfg and k in RUN_KEYS:
            v = file_cfg[k]
        if k in block:
            v = block[k]
        if flags.get(k) is not None:
            v = flags[k]
        cfg[k] = _coerce(k, typ, v)
    if "stat" in cfg:
        cfg["stat"] = normalize_statistics(cfg["stat"])
    if cfg["threads"] < 1:
        raise UsageError("threads must be >= 1")
    return cfg


# ------------------------------------------------------------------ output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.12g}"
    return str(v)


def write_csv(path: Path, command: str, cfg: dict, columns: list, rows: list, extra: dict | None = None):
    """``#`` header (version, config, timestamp, extras), then the table."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# fewbody-otto {__version__} {command}\n")
        fh.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
        fh.write(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}: {json.dumps(v, default=_fmt, sort_keys=True)}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
    return path


PLOT_HEATMAP = '''"""Plot {csv} (needs matplotlib and numpy)."""
import numpy as np
import matplotlib.pyplot as plt

d = np.genfromtxt("{csv}", delimiter=",", names=True, comments="#")
n = int(round(np.sqrt(d.size)))
ei, ef = d["eps_i"].reshape(n, n), d["eps_f"].reshape(n, n)
fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
for ax, key, label in zip(axes, ("eta_over_otto", "W_over_otto"), ("eta / eta_O", "W / W_O")):
    v = d[key].reshape(n, n)
    v = np.where(d["engine"].reshape(n, n) > 0, v, np.nan)
    ax.set_facecolor("0.7")  # gray: not an engine
    m = ax.pcolormesh(ei, ef, v, shading="auto")
    fig.colorbar(m, ax=ax, label=label)
    ax.set_xlabel("eps_i")
    ax.set_ylabel("eps_f")
plt.savefig("{stem}.png", dpi=150)
'''

PLOT_EMW = '''"""Plot {csv} (needs matplotlib and numpy)."""
import numpy as np
import matplotlib.pyplot as plt

d = np.genfromtxt("{csv}", delimiter=",", names=True, comments="#", dtype=None, encoding=None)
fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
ax.plot(d["ratio"], d["eta"], "o-", label="EMW")
ax.plot(d["ratio"], d["eta_CA"], "k--", label="Curzon-Ahlborn")
ax.set_xlabel("beta_h / beta_c")
ax.set_ylabel("efficiency")
ax.legend()
plt.savefig("{stem}.png", dpi=150)
'''

PLOT_FINITE = '''"""Plot {csv} (needs matplotlib and numpy)."""
import numpy as np
import matplotlib.pyplot as plt

d = np.genfromtxt("{csv}", delimiter=",", names=True, comments="#", dtype=None, encoding=None)
fig, axes = plt.subplots(1, 3, figsize=(13, 4), constrained_layout=True)
for kind in np.unique(d["protocol"]):
    s = d[d["protocol"] == kind]
    for ax, key in zip(axes, ("P_eff", "W_irr", "eta_tau")):
        ax.semilogx(s["tau"], s[key], label=kind)
        ax.set_xlabel("tau")
        ax.set_ylabel(key)
axes[0].legend()
plt.savefig("{stem}.png", dpi=150)
'''


def _plot_script(out: Path, template: str, csv_name: str):
    stem = Path(csv_name).stem
    path = out / f"plot_{stem}.py"
    path.write_text(template.format(csv=csv_name, stem=stem))
    return path


@contextmanager
def _mapper(threads: int):
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield pool.map


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg: dict) -> list[Path]:
    from .fewbody_ed import BasisSpec, diagonalize, three_body_levels
    from .spectrum2p import TrapInteraction, two_body_spectrum

    n, g, omega, levels = cfg["n"], cfg["gtilde"], cfg["omega"], cfg["levels"]
    if n not in (2, 3):
        raise UsageError("spectrum supports --n 2 or 3")
    if levels < 1:
        raise UsageError("levels must be positive")
    method = cfg["method"] or ("analytic" if n == 2 else "jacobi")
    extra = {}
    rows = []
    if method == "analytic":
        if n != 2:
            raise UsageError("the analytic spectrum exists for N = 2 only")
        k = max(levels, 8)
        spec = two_body_spectrum(TrapInteraction.from_g_tilde(omega, g), cfg["stat"], n_max=k, nu_max=2 * k)
        extra["ground_relative_shift"] = float(spec.energies[0] / omega - 1.0)
        for j in range(min(levels, len(spec))):
            rows.append({"index": j, "energy": spec.energies[j], "degeneracy": spec.degeneracy[j],
                         "label": ":".join(map(str, spec.labels[j]))})
    elif method == "jacobi":
        if n != 3:
            raise UsageError("the Jacobi ED is implemented for N = 3")
        lv = three_body_levels(g, cfg["stat"], cfg["quanta"])
        spec = lv.spectrum(omega)
        extra["convergence_estimate"] = lv.max_change()
        extra["shells"] = lv.M
        expanded = 0
        for j in range(len(spec)):
            rows.append({"index": j, "energy": spec.energies[j], "degeneracy": spec.degeneracy[j],
                         "label": ":".join(map(str, spec.labels[j]))})
            expanded += 1
            if expanded >= levels:
                break
    elif method == "product":
        res = diagonalize(BasisSpec(n, cfg["e_cut"], cfg["stat"]), g)
        extra["convergence_estimate"] = res.max_change()
        spec = res.energies
        for j in range(min(levels, len(spec))):
            rows.append({"index": j, "energy": omega * spec[j], "degeneracy": 1, "label": str(j)})
    else:
        raise UsageError(f"unknown method {method!r}; use analytic, jacobi or product")
    if g > GTILDE_WARN and method != "analytic":
        _warn(f"g_tilde = {g:g} > {GTILDE_WARN:g}: oscillator-basis convergence is slow; "
              f"convergence_estimate = {extra.get('convergence_estimate', float('nan')):.3g}")
    out = Path(cfg["out"]) / f"spectrum_N{n}_{cfg['stat']}_g{g:g}.csv"
    return [write_csv(out, "spectrum", cfg, ["index", "energy", "degeneracy", "label"], rows, extra)]


def _cycle_config(cfg, gi, gf, beta_h=None):
    from .thermo import CycleConfig
    return CycleConfig.from_kappa(cfg["kappa"], omega_i=cfg.get("omega_i", 1.0), g_tilde_i=gi, g_tilde_f=gf,
                                  beta_c=cfg["beta_c"], beta_h=cfg["beta_h"] if beta_h is None else beta_h,
                                  N=cfg.get("n", 2), statistics=cfg["stat"])


def cmd_cycle(cfg: dict) -> list[Path]:
    from .thermo import run_cycle

    c = _cycle_config(cfg, cfg["gi"], cfg["gf"])
    if c.N == 3 and max(c.g_tilde_i, c.g_tilde_f) > GTILDE_WARN:
        _warn(f"g_tilde > {GTILDE_WARN:g} in an ED cycle: slow oscillator-basis convergence near fermionization")
    r = run_cycle(c)
    row = r.as_row()
    cols = list(row)
    out = Path(cfg["out"]) / "cycle.csv"
    return [write_csv(out, "cycle", cfg, cols, [row])]


def cmd_heatmap(cfg: dict) -> list[Path]:
    from .thermo import heatmap

    if cfg["n"] not in (2, 3):
        raise UsageError("heatmap supports --n 2 or 3")
    if cfg["points"] < 2:
        raise UsageError("points must be >= 2")
    if cfg["n"] == 3 and cfg["g_max"] > GTILDE_WARN:
        _warn(f"N = 3 map reaches g_tilde = {cfg['g_max']:g} > {GTILDE_WARN:g}; ED levels there are gated "
              "at 1e-4 but converge slowly")
    c = _cycle_config(cfg, 0.0, 0.0)
    with _mapper(cfg["threads"]) as mapper:
        res = heatmap(c, n=cfg["points"], polish=cfg["polish"], g_max=cfg["g_max"], mapper=mapper)
    rows = []
    for a in range(len(res.eps)):
        for b in range(len(res.eps)):
            rows.append({"eps_i": res.eps[a], "eps_f": res.eps[b], "g_tilde_i": res.g_tilde[a],
                         "g_tilde_f": res.g_tilde[b], "eta_over_otto": res.eta_over_otto[a, b],
                         "W_over_otto": res.W_over_otto[a, b], "Q_h": res.Q_h[a, b], "engine": res.engine[a, b]})
    name = f"heatmap_N{cfg['n']}_{cfg['stat']}.csv"
    out = Path(cfg["out"])
    cols = ["eps_i", "eps_f", "g_tilde_i", "g_tilde_f", "eta_over_otto", "W_over_otto", "Q_h", "engine"]
    extra = {"maxima": res.maxima, "first_law_max": res.first_law_max}
    return [write_csv(out / name, "heatmap", cfg, cols, rows, extra), _plot_script(out, PLOT_HEATMAP, name)]


def cmd_emw(cfg: dict) -> list[Path]:
    from .emw import EmwBounds, emw_curve

    ratios = [_coerce("ratios", float, r) for r in cfg["ratios"]]
    bounds = EmwBounds() if cfg["interacting"] else EmwBounds.noninteracting()
    pts = emw_curve(cfg["beta_c"], ratios, cfg["n"], cfg["stat"], bounds, seed=cfg["seed"],
                    n_starts=cfg["starts"])
    rows = [p.as_row() for p in pts]
    tag = "int" if cfg["interacting"] else "free"
    name = f"emw_N{cfg['n']}_{cfg['stat']}_{tag}_bc{cfg['beta_c']:g}.csv"
    out = Path(cfg["out"])
    cols = ["ratio", "eta", "eta_CA", "W_max", "kappa", "g_tilde_i", "g_tilde_f", "eps_i", "eps_f", "quality"]
    return [write_csv(out / name, "emw", cfg, cols, rows), _plot_script(out, PLOT_EMW, name)]


def cmd_finite_time(cfg: dict) -> list[Path]:
    from .dynamics import PROTOCOLS, GridSpec, grid_check, tau_sweep

    for p in cfg["protocols"]:
        if p not in PROTOCOLS:
            raise UsageError(f"unknown protocol {p!r}; use {', '.join(PROTOCOLS)}")
    if not 0 < cfg["tau_min"] <= cfg["tau_max"] or cfg["tau_points"] < 1:
        raise UsageError("need 0 < tau_min <= tau_max and tau_points >= 1")
    omega_f = 1.0 / cfg["kappa"]
    beta_h = cfg["beta_h"] if cfg["beta_h"] is not None else 1.0 / omega_f
    cfg = {**cfg, "beta_h": beta_h, "n": 2}
    c = _cycle_config(cfg, cfg["gi"], cfg["gf"])
    grid = GridSpec(cfg["half_width"], cfg["points"], cfg["dt"])
    taus = np.geomspace(cfg["tau_min"], cfg["tau_max"], cfg["tau_points"]) if cfg["tau_points"] > 1 \
        else np.array([cfg["tau_min"]])
    extra = {}
    if cfg["grid_check"]:
        t_ref = float(taus[len(taus) // 2])
        extra["grid_check"] = grid_check(c, t_ref, cfg["protocols"][0], grid)
    with _mapper(cfg["threads"]) as mapper:
        rows = [r.as_row() for r in tau_sweep(c, taus, tuple(cfg["protocols"]), grid, mapper=mapper)]
    name = "finite_time.csv"
    out = Path(cfg["out"])
    cols = ["tau", "protocol", "W_tau", "W_irr", "eta_tau", "P_eff", "W_ad", "Q_h", "W_c", "W_e",
            "norm_drift", "leakage"]
    return [write_csv(out / name, "finite-time", cfg, cols, rows, extra), _plot_script(out, PLOT_FINITE, name)]


def cmd_selftest(cfg: dict) -> list[Path]:
    """Fast consistency checks; raises on the first failure."""
    from .dynamics import AccuracyError
    from .spectrum2p import even_shifts
    from .thermo import CycleConfig, run_cycle

    checks = []
    r = run_cycle(CycleConfig.from_kappa(1 / 3, N=2, statistics="bosonic"))
    checks.append(("otto_anchor", abs(r.eta - 2 / 3) < 1e-12, r.eta))
    worst = 0.0
    for st in ("bosonic", "distinguishable"):
        for g in (0.3, 1.6, 20.0):
            r = run_cycle(CycleConfig.from_kappa(1 / 3, g_tilde_i=g, g_tilde_f=g, statistics=st))
            worst = max(worst, abs(r.eta - 2 / 3), r.first_law_residual)
    checks.append(("scale_invariance", worst < 1e-9, worst))
    e = float(even_shifts(0, 1.6)[0])
    checks.append(("root_eps_1.6", abs(e - 0.52) < 0.01, e))
    rows = [{"check": n, "ok": ok, "value": v} for n, ok, v in checks]
    for row in rows:
        print(f"{'PASS' if row['ok'] else 'FAIL'} {row['check']} {row['value']:.12g}")
    out = write_csv(Path(cfg["out"]) / "selftest.csv", "selftest", cfg, ["check", "ok", "value"], rows)
    if not all(ok for _, ok, _ in checks):
        raise AccuracyError("selftest failed")
    return [out]


COMMANDS = {"spectrum": cmd_spectrum, "cycle": cmd_cycle, "heatmap": cmd_heatmap, "emw": cmd_emw,
            "finite-time": cmd_finite_time, "selftest": cmd_selftest}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file; flags override its values")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--threads", type=int, help="worker processes for sweeps (default 1)")
    common.add_argument("--seed", type=int, help="RNG seed for optimizer starts (default 42)")
    p = argparse.ArgumentParser(prog="fewbody-otto", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    s = add("spectrum", "level table (analytic N=2, ED N=3)")
    s.add_argument("--n", type=int)
    s.add_argument("--stat")
    s.add_argument("--gtilde", type=float)
    s.add_argument("--omega", type=float)
    s.add_argument("--levels", type=int)
    s.add_argument("--method", choices=["analytic", "jacobi", "product"])
    s.add_argument("--quanta", type=int, help="quanta budget for the Jacobi ED")
    s.add_argument("--e-cut", dest="e_cut", type=int, help="total quanta cutoff for the product ED")

    def cycle_args(q):
        q.add_argument("--n", type=int)
        q.add_argument("--stat")
        q.add_argument("--kappa", type=float)
        q.add_argument("--beta-c", dest="beta_c", type=float)
        q.add_argument("--beta-h", dest="beta_h", type=float)

    c = add("cycle", "one adiabatic Otto cycle")
    cycle_args(c)
    c.add_argument("--gi", type=float)
    c.add_argument("--gf", type=float)
    c.add_argument("--omega-i", dest="omega_i", type=float)

    h = add("heatmap", "eta/eta_O and W/W_O over (eps_i, eps_f)")
    cycle_args(h)
    h.add_argument("--points", type=int)
    h.add_argument("--g-max", dest="g_max", type=float)
    h.add_argument("--no-polish", dest="polish", action="store_const", const=False)

    e = add("emw", "efficiency at maximum work vs beta_h/beta_c")
    e.add_argument("--n", type=int)
    e.add_argument("--stat")
    e.add_argument("--beta-c", dest="beta_c", type=float)
    e.add_argument("--ratios", help="comma-separated beta_h/beta_c values")
    e.add_argument("--free", dest="interacting", action="store_const", const=False,
                   help="non-interacting reference (g_tilde pinned to 0)")
    e.add_argument("--starts", type=int)

    f = add("finite-time", "finite-time strokes: tau sweep for the three protocols")
    f.add_argument("--stat")
    f.add_argument("--gi", type=float)
    f.add_argument("--gf", type=float)
    f.add_argument("--kappa", type=float)
    f.add_argument("--beta-c", dest="beta_c", type=float)
    f.add_argument("--beta-h", dest="beta_h", type=float, help="default 1/omega_f")
    f.add_argument("--tau-min", dest="tau_min", type=float)
    f.add_argument("--tau-max", dest="tau_max", type=float)
    f.add_argument("--tau-points", dest="tau_points", type=int)
    f.add_argument("--protocols", help="comma-separated subset of optimal,scale_invariant,noninteracting")
    f.add_argument("--points", type=int, help="grid points (odd)")
    f.add_argument("--dt", type=float)
    f.add_argument("--half-width", dest="half_width", type=float)
    f.add_argument("--no-grid-check", dest="grid_check", action="store_const", const=False)

    add("selftest", "quick consistency checks")
    return p


def main(argv=None) -> int:
    from .dynamics import AccuracyError
    from .fewbody_ed import EigenSolverError, ResourceError
    from .spectrum2p import RootBracketError
    from .thermo import ConvergenceError

    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_cfg = {}
        if args.config is not None:
            try:
                file_cfg = tomllib.loads(Path(args.config).read_text())
            except (OSError, tomllib.TOMLDecodeError) as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = resolve_config(args.command, file_cfg, flags)
        for path in COMMANDS[args.command](cfg):
            print(path)
        return EXIT_OK
    except (ResourceError, TruncationError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (AccuracyError, ConvergenceError, EigenSolverError, RootBracketError) as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (UsageError, ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
