"""Command-line entry point: ``cvsheet <task> [options]``."""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import CVSheetError, DomainError
from .params import classify_regime, derive_params

log = logging.getLogger("cvsheet")

NON_HASHED = {"out", "verbose", "jobs", "config", "func"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output

def config_hash(cfg: dict) -> str:
    clean = {k: v for k, v in cfg.items() if k not in NON_HASHED}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], cfg: dict) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    buf.write(f"# version: {__version__}\n")
    buf.write(f"# config_hash: {config_hash(cfg)}\n")
    return buf.getvalue()


def render_json(obj: dict, cfg: dict) -> str:
    payload = dict(obj)
    payload["_meta"] = {"version": __version__, "config_hash": config_hash(cfg)}
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def emit(text: str, cfg: dict, summary: Optional[str] = None):
    out = cfg.get("out")
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        if summary:
            print(summary)
        log.info("wrote %s", out)
    else:
        # keep stdout machine-readable
        if summary:
            print(summary, file=sys.stderr)
        sys.stdout.write(text)


# ---------------------------------------------------------------- helpers

def _need(cfg: dict, *names):
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-")
                                                                     for m in missing))


def _medium(cfg: dict, with_v: bool = True):
    names = ("v", "c", "rho") if with_v else ("c", "rho")
    _need(cfg, *names)
    try:
        return derive_params(cfg["v"] if with_v else 1.0, cfg["c"], cfg["rho"], cfg.get("b2") or 0.0)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def _pmap(fn, items, jobs: int):
    items = list(items)
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- tasks

def task_classify(cfg):
    p = _medium(cfg)
    verdict = classify_regime(p, cfg.get("tol") or 1e-12)
    if cfg.get("out"):
        emit(render_json({"params": p.to_dict(), "regime": verdict.tag.value,
                          "margin": verdict.margin, "M_B": verdict.M_B}, cfg), cfg, str(verdict))
    else:
        print(str(verdict))


def task_roots(cfg):
    from .roots import find_hemisphere_zeros, neutral_roots
    p = _medium(cfg)
    nr = neutral_roots(p)
    zeros = find_hemisphere_zeros(p, grid_density=cfg.get("grid") or 128)
    obj = {
        "params": p.to_dict(),
        "regime": classify_regime(p).tag.value,
        "x1_sq": nr.x1_sq, "x2_sq": nr.x2_sq,
        "x1_accepted": nr.x1_accepted, "x2_accepted": nr.x2_accepted,
        "accepted": [nr.x1_accepted, nr.x2_accepted],
        "simplicity": nr.simplicity_derivative,
        "growth_rate": nr.growth_rate,
        "zeros": [{"gamma": z.freq.gamma, "delta": z.freq.delta, "eta": z.freq.eta,
                   "residual": z.residual, "type": z.type.value} for z in zeros],
    }
    summary = (f"X1^2={nr.x1_sq:.9g} X2^2={nr.x2_sq:.9g} accepted=({nr.x1_accepted}, "
               f"{nr.x2_accepted}) zeros={len(zeros)}")
    emit(render_json(obj, cfg), cfg, summary)


def task_threshold(cfg):
    from .roots import critical_velocity
    p = _medium(cfg, with_v=False)
    print(f"{critical_velocity(p.c, p.rho, p.b2):.6f}")


def _sweep_row(args):
    from .roots import sweep_velocity
    c, rho, b2, v = args
    r = sweep_velocity(c, rho, b2, [v])[0]
    return (r.v, r.M_B, r.x1_sq, r.x2_sq, r.verdict, r.growth_rate, c, rho, b2)


def task_sweep(cfg):
    n_rand = cfg.get("random")
    if n_rand:
        rng = np.random.default_rng(cfg.get("seed") or 0)
        items = []
        for _ in range(int(n_rand)):
            c, rho = rng.uniform(0.2, 3.0), rng.uniform(0.2, 5.0)
            b2 = rng.uniform(0.0, 3.0)
            C = math.sqrt(c * c + b2 * b2 / rho)
            items.append((c, rho, b2, rng.uniform(0.1, 3.0) * C))
    else:
        p = _medium(cfg, with_v=False)
        if cfg.get("v_list"):
            vs = _float_list(cfg["v_list"])
        else:
            _need(cfg, "v_range")
            rng_ = _float_list(cfg["v_range"])
            if len(rng_) != 2 or rng_[0] > rng_[1]:
                raise UsageError("--v-range expects 'lo,hi'")
            steps = int(cfg.get("steps") or 21)
            if steps < 1:
                raise UsageError("--steps must be >= 1")
            vs = np.linspace(rng_[0], rng_[1], steps).tolist()
        if any(v <= 0 for v in vs):
            raise UsageError("velocities must be positive")
        items = [(p.c, p.rho, p.b2, v) for v in vs]
    rows = _pmap(_sweep_row, items, cfg.get("jobs") or 1)
    header = ["v", "M_B", "x1_sq", "x2_sq", "verdict", "growth_rate", "c", "rho", "b2"]
    emit(render_csv(header, rows, cfg), cfg, f"{len(rows)} rows")


def _freq(cfg):
    from .symbol import Frequency
    if cfg.get("tau") is not None:
        try:
            tau = complex(str(cfg["tau"]).replace(" ", "").replace("i", "j"))
        except ValueError:
            raise UsageError(f"cannot parse --tau {cfg['tau']!r}") from None
        gamma, delta = tau.real, tau.imag
    else:
        _need(cfg, "gamma", "delta")
        gamma, delta = cfg["gamma"], cfg["delta"]
    _need(cfg, "eta")
    try:
        return Frequency(gamma, delta, cfg["eta"])
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def task_symbol(cfg):
    from .symbol import mu, mu_array, sigma_array
    p = _medium(cfg)
    if cfg.get("mode") == "grid":
        # (polar, azimuth) grid on the unit hemisphere gamma >= 0
        n = int(cfg.get("n") or 32)
        th = np.linspace(0.0, 0.5 * math.pi, n)
        ph = np.linspace(-math.pi, math.pi, 2 * n, endpoint=False)
        A, B = np.meshgrid(th, ph, indexing="ij")
        g, d, e = np.sin(A).ravel(), (np.cos(A) * np.cos(B)).ravel(), (np.cos(A) * np.sin(B)).ravel()
        tau = g + 1j * d
        mp = mu_array(p.v_plus, tau, e, p.C_B)
        mm = mu_array(-p.v_plus, tau, e, p.C_B)
        sg = sigma_array(tau, e, p)
        rows = zip(g, d, e, mp.real, mp.imag, mm.real, mm.imag, sg.real, sg.imag)
        header = ["gamma", "delta", "eta", "re_mu_p", "im_mu_p", "re_mu_m", "im_mu_m",
                  "re_sigma", "im_sigma"]
        emit(render_csv(header, rows, cfg), cfg, f"{g.size} points")
        return
    fr = _freq(cfg)
    s = complex(sigma_array(fr.tau, fr.eta, p))
    obj = {"gamma": fr.gamma, "delta": fr.delta, "eta": fr.eta,
           "mu_plus": mu("+", fr, p), "mu_minus": mu("-", fr, p), "sigma": s}
    emit(render_json(obj, cfg), cfg, f"Sigma = {s.real:.12g} {s.imag:+.12g}i")


def _exp_forcing(cfg):
    a = cfg.get("decay") or 1.0
    if a <= 0:
        raise UsageError("--decay must be positive")
    kp = 1.0 if cfg.get("k_plus") is None else cfg["k_plus"]
    km = 0.0 if cfg.get("k_minus") is None else cfg["k_minus"]
    Kp = (lambda y: kp * np.exp(-a * y)) if kp else None
    Km = (lambda y: km * np.exp(-a * y)) if km else None
    return Kp, Km


def _traces(cfg):
    from .traces import compute_W, solve_jump_system, trace_identity
    p = _medium(cfg)
    fr = _freq(cfg)
    Kp, Km = _exp_forcing(cfg)
    W = compute_W(Kp, Km, fr, p)
    f_hat = complex(cfg.get("f_re") or 0.0, cfg.get("f_im") or 0.0)
    td = solve_jump_system(f_hat, W.i_plus, W.i_minus, fr, p)
    return p, fr, Kp, Km, W, td, trace_identity(td, fr, p)


def task_traces(cfg):
    _, _, _, _, W, td, res = _traces(cfg)
    obj = {"traces": td.to_dict(), "W_truncation": W.truncation, "identity_residual": res}
    emit(render_json(obj, cfg), cfg, f"identity residual {res:.3e}")


def task_profile(cfg):
    from .traces import reconstruct_profile
    p, fr, Kp, Km, _, td, _ = _traces(cfg)
    side = cfg.get("side") or "+"
    if side not in ("+", "-"):
        raise UsageError("--side must be + or -")
    L = cfg.get("L") or 10.0
    n = int(cfg.get("n") or 400)
    if L <= 0 or n < 3:
        raise UsageError("need --L > 0 and --n >= 3")
    pr = reconstruct_profile(td, Kp if side == "+" else Km, side, fr, p, L, n)
    rows = [(x, h.real, h.imag, None if np.isnan(r) else abs(r))
            for x, h, r in zip(pr.x3, pr.h, pr.ode_residual)]
    emit(render_csv(["x3", "re_h", "im_h", "ode_residual"], rows, cfg), cfg,
         f"bounded={pr.bounded}")


def _grid_from(cfg):
    from .front import SpectralGrid
    try:
        return SpectralGrid(cfg.get("T_win") or 40.0, int(cfg.get("n_t") or 256),
                            cfg.get("X_win") or 40.0, int(cfg.get("n_x") or 128),
                            cfg.get("gamma") or 1.0)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _forcing_from(cfg, grid):
    from .front import PRESETS, load_forcing_csv
    if cfg.get("forcing_file"):
        return load_forcing_csv(cfg["forcing_file"], grid)
    name = cfg.get("preset") or "gaussian"
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](grid)


def task_front_solve(cfg):
    from .front import solve_front
    p = _medium(cfg)
    grid = _grid_from(cfg)
    F = _forcing_from(cfg, grid)
    s = cfg.get("s") if cfg.get("s") is not None else 0.0
    sol = solve_front(F, s=(s, s + 1), params=p)
    rows = []
    ft = sol.f_tilde
    for j, t in enumerate(grid.t):
        for k, x in enumerate(grid.x1):
            rows.append((t, x, ft[j, k] * math.exp(grid.gamma * t), ft[j, k]))
    summary = "; ".join(f"||f||_(H^{n['s']:g}, gamma={n['gamma']:g}) = {n['value']:.6e}"
                        for n in sol.norms)
    emit(render_csv(["t", "x1", "f", "f_weighted"], rows, cfg), cfg, summary)


def task_estimate(cfg):
    from .front import estimate_report
    p = _medium(cfg)
    grid = _grid_from(cfg)
    F = _forcing_from(cfg, grid)
    gammas = _float_list(cfg.get("gammas") or "1,2,4,8")
    if any(g < 1 for g in gammas):
        raise UsageError("all gammas must be >= 1")
    s = cfg.get("s") if cfg.get("s") is not None else 0.0
    rows = estimate_report(F, s, gammas, p)
    ratios = [r.ratio for r in rows if r.ratio is not None]
    spread = max(ratios) / min(ratios) if ratios else float("nan")
    emit(render_csv(["gamma", "lhs", "rhs", "ratio", "g_norm", "chain_ratio"],
                    [r.as_tuple() for r in rows], cfg), cfg, f"max/min ratio = {spread:.4f}")


def task_simulate(cfg):
    from .ivp import SeedPerturbation, run_mode
    p = _medium(cfg)
    _need(cfg, "eta")
    T = cfg.get("T") or 30.0
    amp = cfg.get("amplitude")
    seed = SeedPerturbation(amplitude=1.0 if amp is None else amp)
    rep = run_mode(cfg["eta"], p, T, seed, n_cells=int(cfg.get("n_cells") or 2048))
    tr = rep.trajectory
    rows = [] if tr is None else [
        (t, f.real, f.imag, abs(f), r) for t, f, r in zip(tr.t, tr.f, tr.interface_residual)]
    if rep.null_run:
        summary = "null run: zero perturbation, rate undefined"
    else:
        summary = (f"lambda = {rep.rate.real:.6f} {rep.rate.imag:+.6f}i; predicted "
                   f"{rep.predicted.real:.6f} {rep.predicted.imag:+.6f}i; regime {rep.regime}")
    emit(render_csv(["t", "re_f", "im_f", "abs_f", "interface_residual"], rows, cfg), cfg, summary)


def task_scan(cfg):
    from .ivp import bracket_threshold, scan_threshold
    p = _medium(cfg, with_v=False)
    _need(cfg, "v_list")
    vs = _float_list(cfg["v_list"])
    eta = cfg.get("eta") or 1.0
    rows = scan_threshold(p.c, p.rho, p.b2, eta, vs, T_final=cfg.get("T") or 60.0,
                          n_cells=int(cfg.get("n_cells") or 2048), jobs=cfg.get("jobs") or 1)
    br = bracket_threshold(rows)
    summary = f"threshold bracket: {br}" if br else "no growth-to-stable transition in v_list"
    emit(render_csv(["v", "M_B", "rate_re", "rate_im", "predicted_re", "growing"],
                    [(r.v, r.M_B, r.rate_re, r.rate_im, r.predicted_re, r.growing) for r in rows],
                    cfg), cfg, summary)


TASKS = {
    "classify": task_classify, "roots": task_roots, "threshold": task_threshold,
    "sweep": task_sweep, "symbol": task_symbol, "traces": task_traces, "profile": task_profile,
    "front-solve": task_front_solve, "estimate": task_estimate,
    "simulate": task_simulate, "scan": task_scan,
}


# ---------------------------------------------------------------- parser

def _add_globals(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON file with options (flags override it)")
    p.add_argument("--out", default=d, help="output file (CSV or JSON)")
    p.add_argument("--jobs", type=int, default=d, help="worker processes for sweeps")
    p.add_argument("--seed", type=int, default=d, help="RNG seed for random sweeps")
    p.add_argument("--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def _medium_args(p, with_v=True):
    if with_v:
        p.add_argument("--v", type=float, help="tangential speed of the upper state")
    p.add_argument("--c", type=float, help="sound speed")
    p.add_argument("--rho", type=float, help="density")
    p.add_argument("--b2", type=float, help="tangential magnetic field")


def _freq_args(p):
    p.add_argument("--tau", help="complex tau, e.g. 1+0.3j (alternative to --gamma/--delta)")
    for n in ("gamma", "delta", "eta"):
        p.add_argument(f"--{n}", type=float)


def _trace_args(p):
    p.add_argument("--decay", type=float)
    p.add_argument("--k-plus", dest="k_plus", type=float)
    p.add_argument("--k-minus", dest="k_minus", type=float)
    p.add_argument("--f-re", dest="f_re", type=float)
    p.add_argument("--f-im", dest="f_im", type=float)


def _grid_args(p):
    p.add_argument("--T-win", dest="T_win", type=float)
    p.add_argument("--n-t", dest="n_t", type=int)
    p.add_argument("--X-win", dest="X_win", type=float)
    p.add_argument("--n-x", dest="n_x", type=int)
    p.add_argument("--preset")
    p.add_argument("--forcing-file", dest="forcing_file")
    p.add_argument("--s", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvsheet", description=__doc__, allow_abbrev=False)
    ap.add_argument("--version", action="version", version=__version__)
    _add_globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="task", metavar="task")

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, allow_abbrev=False)
        _add_globals(sp, suppress=True)
        return sp

    sp = add("classify", "regime of a background state")
    _medium_args(sp)
    sp.add_argument("--tol", type=float)

    sp = add("roots", "neutral roots and symbol zeros")
    _medium_args(sp)
    sp.add_argument("--grid", type=int)

    sp = add("threshold", "critical speed by bisection")
    _medium_args(sp, with_v=False)

    sp = add("sweep", "closed-form classification over velocities")
    _medium_args(sp, with_v=False)
    sp.add_argument("--v-list", dest="v_list")
    sp.add_argument("--v-range", dest="v_range", help="lo,hi")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--random", type=int, help="N random medium draws instead of a v range")

    sp = add("symbol", "evaluate the symbol at a point or on a hemisphere grid")
    sp.add_argument("mode", nargs="?", choices=("eval", "grid"), default="eval")
    _medium_args(sp)
    _freq_args(sp)
    sp.add_argument("--n", type=int, help="grid resolution (polar points)")

    sp = add("traces", "interface traces for exponential forcing K(y) = k exp(-a y)")
    _medium_args(sp)
    _freq_args(sp)
    _trace_args(sp)

    sp = add("profile", "interior profile h(x3) on one side")
    _medium_args(sp)
    _freq_args(sp)
    _trace_args(sp)
    sp.add_argument("--side", choices=("+", "-"))
    sp.add_argument("--L", type=float)
    sp.add_argument("--n", type=int)

    sp = add("front-solve", "solve the front equation for a forcing")
    _medium_args(sp)
    _grid_args(sp)
    sp.add_argument("--gamma", type=float)

    sp = add("estimate", "measured estimate ratios over gamma")
    _medium_args(sp)
    _grid_args(sp)
    sp.add_argument("--gammas")

    sp = add("simulate", "time-domain run of one x1 mode")
    _medium_args(sp)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--n-cells", dest="n_cells", type=int)
    sp.add_argument("--amplitude", type=float)

    sp = add("scan", "threshold scan with the simulator")
    _medium_args(sp, with_v=False)
    sp.add_argument("--v-list", dest="v_list")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--n-cells", dest="n_cells", type=int)
    return ap


def _load_config(argv: List[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    if not ns.config:
        return {}
    try:
        with open(ns.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {ns.config}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    medium = data.pop("medium", None)
    if medium is not None:
        if not isinstance(medium, dict):
            raise UsageError("config 'medium' must be a JSON object")
        data = {**medium, **data}
    cfg = {k.replace("-", "_"): v for k, v in data.items()}
    if "v_plus" in cfg:
        cfg.setdefault("v", cfg.pop("v_plus"))
    return cfg


def resolve(argv: List[str]) -> dict:
    """Merge config file and flags into one dict (flags win)."""
    parser = build_parser()
    file_cfg = _load_config(argv)
    argv = list(argv)
    if not any(a in TASKS for a in argv) and file_cfg.get("task") in TASKS:
        argv = [file_cfg["task"]] + argv
    ns = parser.parse_args(argv)
    if ns.task is None:
        raise UsageError("no task given")
    cfg = {k: v for k, v in file_cfg.items() if k != "task"}
    for k, v in vars(ns).items():
        if v is not None or k not in cfg:
            cfg[k] = v
    cfg["task"] = ns.task
    if cfg.get("jobs") is not None and cfg["jobs"] < 1:
        raise UsageError("--jobs must be >= 1")
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"cvsheet: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(cfg.get("verbose") or 0, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.debug("config: %s", cfg)
    try:
        TASKS[cfg["task"]](cfg)
    except UsageError as exc:
        print(f"cvsheet: error: {exc}", file=sys.stderr)
        return 2
    except CVSheetError as exc:
        print(f"cvsheet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
