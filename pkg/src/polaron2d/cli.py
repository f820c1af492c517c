"""Command-line front end: parameter sweeps and certificate suites with CSV or JSON output.

Units: hbar = 1 and fermion mass 1/2, so kinetic energy is k^2. Energies are in the
units of --binding unless --normalize divides them by |E_B|.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .certify import SUITES, run_suite
from .errors import Polaron2DError
from .gfunc import (
    PhysParams,
    asymptote_weight,
    g_asymptote,
    g_continuum,
    g_lattice,
)
from .lattice import fermi_sea_energy
from .polaron import HoleKernel, KERNELS, asymptotic_polaron, solve_perturbed, solve_polaron, theorem_band
from .stability import QUAD_TOL, critical_mass, epsilon_max, k_error, stability_margin

MODES = ("polaron", "perturbed", "gtable", "stability", "critical-mass", "certify")

COLUMNS = {
    "polaron": ("mass_ratio", "binding", "mu", "box", "mu_tilde", "l2eb", "wellcoupled", "asymptotic",
                "kernel", "hole_count", "e_p", "residual", "leading", "band_scale", "band_constant",
                "e0", "upper_bound", "theorem_halfwidth"),
    "perturbed": ("mass_ratio", "binding", "mu", "box", "r", "mu_tilde", "l2eb", "wellcoupled", "asymptotic",
                  "kernel", "e_p", "e0", "lambda", "gap", "gap_constant", "residual"),
    "gtable": ("mass_ratio", "binding", "mu", "box", "q", "tau", "mu_tilde", "l2eb", "wellcoupled",
               "asymptotic", "g_lattice", "tail_correction", "tail_bound", "cutoff_k2", "mode_count",
               "g_continuum", "g_asymptote", "asymptote_constant"),
    "stability": ("mass_ratio", "epsilon", "epsilon_max", "alpha", "margin", "condition_holds", "k_error"),
    "critical-mass": ("epsilon", "m_star", "bracket_lo", "bracket_hi"),
    "certify": ("suite", "cases", "failed", "passed", "fitted_constant", "detail"),
}
TAIL = ("status", "message")
ENERGY_COLUMNS = {"binding", "mu", "tau", "e_p", "residual", "leading", "band_scale", "e0", "upper_bound",
                  "theorem_halfwidth", "lambda", "gap", "cutoff_k2"}

DEFAULTS = {
    "mass_ratio": ["2"],
    "binding": ["-1"],
    "r": ["0"],
    "epsilon": ["0"],
    "q": ["0"],
    "tau": ["0"],
    "suite": list(SUITES),
    "kernel": ["auto"],
    "format": ["csv"],
    "threads": ["1"],
    "seed": ["0"],
}
LIST_KEYS = ("mass_ratio", "binding", "mu", "mu_tilde", "box", "l2eb", "r", "epsilon", "q", "tau", "suite")
SCALAR_KEYS = ("tol", "quad_tol", "kernel", "format", "out", "threads", "seed", "normalize")


class UsageError(Exception):
    pass


@dataclasses.dataclass
class ScanConfig:
    mode: str
    grid: dict
    tol: float | None = None
    quad_tol: float = QUAD_TOL
    kernel: str = "auto"
    fmt: str = "csv"
    out: str | None = None
    threads: int = 1
    seed: int = 0
    normalize: bool = False

    def canonical(self) -> dict:
        d = {"mode": self.mode, "grid": self.grid, "tol": self.tol, "quad_tol": self.quad_tol,
             "kernel": self.kernel, "format": self.fmt, "threads": self.threads, "seed": self.seed,
             "normalize": self.normalize}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# --- parsing ---------------------------------------------------------------

def parse_values(items) -> list:
    """Expand comma lists and ``lin:a:b:n`` / ``log:a:b:n`` ranges into strings."""
    out = []
    for item in items:
        for tok in str(item).split(","):
            tok = tok.strip()
            if not tok:
                continue
            if tok.startswith(("lin:", "log:")):
                kind, a, b, n = tok.split(":")
                a, b, n = float(a), float(b), int(n)
                if n < 1:
                    raise UsageError(f"range {tok!r} has no points")
                vals = np.linspace(a, b, n) if kind == "lin" else np.geomspace(a, b, n)
                out.extend(repr(float(v)) for v in vals)
            else:
                out.append(tok)
    return out


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment; repeated keys accumulate."""
    conf: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in LIST_KEYS + SCALAR_KEYS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        conf.setdefault(key, []).append(val)
    return conf


def _float(key, s):
    try:
        v = float(s)
    except ValueError:
        raise UsageError(f"{key}: not a number: {s!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"{key}: not finite: {s!r}")
    return v


def build_config(args) -> ScanConfig:
    conf = read_config(args.config) if args.config else {}
    for key in LIST_KEYS + SCALAR_KEYS:
        val = getattr(args, key, None)
        if val is None or val is False:
            continue
        conf[key] = val if isinstance(val, list) else [val]
    merged = {**DEFAULTS, **conf}
    mode = args.mode

    lists = {k: parse_values(merged[k]) for k in LIST_KEYS if k in merged}
    for k, v in lists.items():
        if not v:
            raise UsageError(f"empty grid for {k}")

    grid: dict = {}
    if mode in ("polaron", "perturbed", "gtable"):
        if "mu" in conf and "mu_tilde" in conf:
            raise UsageError("give either --mu or --mu-tilde, not both")
        if "box" in conf and "l2eb" in conf:
            raise UsageError("give either --box or --l2eb, not both")
        grid["mass_ratio"] = [_float("mass_ratio", s) for s in lists["mass_ratio"]]
        grid["binding"] = [_float("binding", s) for s in lists["binding"]]
        if "mu" in lists:
            grid["mu"] = [_float("mu", s) for s in lists["mu"]]
        else:
            grid["mu_tilde"] = [_float("mu_tilde", s) for s in lists.get("mu_tilde", ["1e4"])]
        if "box" in lists:
            grid["box"] = [_float("box", s) for s in lists["box"]]
        else:
            grid["l2eb"] = [_float("l2eb", s) for s in lists.get("l2eb", ["100"])]
        if mode == "perturbed":
            grid["r"] = [_float("r", s) for s in lists["r"]]
        if mode == "gtable":
            grid["q"] = [_float("q", s) for s in lists["q"]]
            grid["tau"] = [_float("tau", s) for s in lists["tau"]]
    elif mode == "stability":
        grid["mass_ratio"] = [_float("mass_ratio", s) for s in lists["mass_ratio"]]
        grid["epsilon"] = [_float("epsilon", s) for s in lists["epsilon"]]
        if "mu_tilde" in lists:
            grid["mu_tilde"] = [_float("mu_tilde", s) for s in lists["mu_tilde"]]
    elif mode == "critical-mass":
        grid["epsilon"] = [_float("epsilon", s) for s in lists["epsilon"]]
    else:
        grid["suite"] = lists["suite"]
        unknown = [s for s in grid["suite"] if s not in SUITES]
        if unknown:
            raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")

    def scalar(key):
        v = merged.get(key)
        return None if v is None else v[-1]

    tol = scalar("tol")
    tol = None if tol is None else _float("tol", tol)
    quad_tol = _float("quad_tol", scalar("quad_tol") or repr(QUAD_TOL))
    if (tol is not None and not tol > 0) or not quad_tol > 0:
        raise UsageError("tolerances must be positive")
    kernel = scalar("kernel")
    if kernel not in KERNELS:
        raise UsageError(f"kernel must be one of {KERNELS}")
    fmt = scalar("format")
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    try:
        threads = int(scalar("threads"))
        seed = int(scalar("seed"))
    except ValueError:
        raise UsageError("threads and seed must be integers") from None
    if threads < 1:
        raise UsageError("threads must be >= 1")
    normalize = str(scalar("normalize") or "false").lower() in ("1", "true", "yes", "on")
    return ScanConfig(mode=mode, grid=grid, tol=tol, quad_tol=quad_tol, kernel=kernel, fmt=fmt,
                      out=scalar("out"), threads=threads, seed=seed, normalize=normalize)


def grid_points(cfg: ScanConfig) -> list[dict]:
    keys = list(cfg.grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(cfg.grid[k] for k in keys))]


# --- evaluation ------------------------------------------------------------

def _params(pt) -> PhysParams:
    eb = abs(pt["binding"])
    mu = pt["mu"] if "mu" in pt else pt["mu_tilde"] * eb
    box = pt["box"] if "box" in pt else math.sqrt(pt["l2eb"] / eb)
    return PhysParams.build(pt["mass_ratio"], pt["binding"], mu, box)


def _base(p: PhysParams) -> dict:
    return {"mass_ratio": p.mass_ratio, "binding": p.binding, "mu": p.mu, "box": p.lattice.box,
            "mu_tilde": p.mu_tilde, "l2eb": p.l2eb, "wellcoupled": p.wellcoupled, "asymptotic": p.asymptotic}


def eval_polaron(pt, cfg):
    p = _params(pt)
    row = _base(p)
    sol = solve_polaron(p, cfg.tol, kernel=cfg.kernel)
    e0 = fermi_sea_energy(p.lattice, p.mu)
    upper = e0 + sol.e_p
    row.update(kernel=sol.kernel, hole_count=sol.hole_count, e_p=sol.e_p, residual=sol.residual,
               e0=e0, upper_bound=upper)
    if p.mu_tilde > 1:
        lead, band = asymptotic_polaron(p)
        _, half, _ = theorem_band(p, sol.e_p)
        row.update(leading=lead, band_scale=band, band_constant=abs(sol.e_p - lead) / band,
                   theorem_halfwidth=half)
    return row


def eval_perturbed(pt, cfg):
    p = _params(pt)
    row = _base(p)
    row["r"] = pt["r"]
    hk = HoleKernel(p, cfg.kernel)
    sol = solve_polaron(p, cfg.tol, hole_kernel=hk)
    row.update(kernel=hk.kernel, e_p=sol.e_p)
    ps = solve_perturbed(p, pt["r"], cfg.tol, polaron=sol, hole_kernel=hk)
    row.update(e0=ps.e0, **{"lambda": ps.lam}, gap=ps.gap, residual=ps.residual)
    if p.mu_tilde > 1:
        row["gap_constant"] = ps.gap * p.log_mu_tilde / ((1.0 + ps.r) * abs(sol.e_p))
    return row


def eval_gtable(pt, cfg):
    p = _params(pt)
    row = _base(p)
    q = pt["q"] * p.lattice.spacing
    tau = pt["tau"]
    row.update(q=pt["q"], tau=tau)
    ev = g_lattice(p, [q, 0.0], tau)
    gc = g_continuum(p, q * q, tau)
    ga = g_asymptote(p, q * q, tau)
    row.update(g_lattice=ev.value, tail_correction=ev.tail_correction, tail_bound=ev.tail_bound,
               cutoff_k2=ev.cutoff_k2, mode_count=ev.mode_count, g_continuum=gc, g_asymptote=ga)
    if p.mu_tilde > 1:
        row["asymptote_constant"] = abs(ev.value - ga) / asymptote_weight(p, tau)
    return row


def eval_stability(pt, cfg):
    M, eps = pt["mass_ratio"], pt["epsilon"]
    res = stability_margin(M, eps, cfg.quad_tol)
    row = {"mass_ratio": M, "epsilon": eps, "epsilon_max": epsilon_max(M), "alpha": res.alpha,
           "margin": res.margin, "condition_holds": res.condition_holds}
    if "mu_tilde" in pt and eps > 0:
        row["k_error"] = k_error(eps, pt["mu_tilde"])
    return row


def eval_critical(pt, cfg):
    m_star, (lo, hi) = critical_mass(pt["epsilon"], cfg.tol or 1e-8, cfg.quad_tol)
    return {"epsilon": pt["epsilon"], "m_star": m_star, "bracket_lo": lo, "bracket_hi": hi}


def eval_certify(pt, cfg):
    rep = run_suite(pt["suite"], cfg.seed)
    row = {"suite": rep.suite, "cases": rep.cases, "failed": rep.failed, "passed": rep.passed,
           "fitted_constant": rep.fitted_constant, "detail": rep.detail}
    if not rep.passed:
        row["status"] = "fail"
    return row


EVALUATORS = {
    "polaron": eval_polaron,
    "perturbed": eval_perturbed,
    "gtable": eval_gtable,
    "stability": eval_stability,
    "critical-mass": eval_critical,
    "certify": eval_certify,
}


def run_point(pt, cfg) -> dict:
    try:
        row = EVALUATORS[cfg.mode](pt, cfg)
        row.setdefault("status", "ok")
        row.setdefault("message", "")
    except (Polaron2DError, ArithmeticError, ValueError) as exc:
        row = dict(pt)
        row.update(status="error", message=f"{type(exc).__name__}: {exc}")
    if cfg.normalize and "binding" in row:
        eb = abs(row["binding"])
        for k in ENERGY_COLUMNS & row.keys():
            if isinstance(row[k], float):
                row[k] = row[k] / eb
    return row


def run_scan(cfg: ScanConfig) -> list[dict]:
    pts = grid_points(cfg)
    if not pts:
        raise UsageError("empty grid")
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(lambda pt: run_point(pt, cfg), pts))
    return [run_point(pt, cfg) for pt in pts]


# --- output ----------------------------------------------------------------

def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v != 0 and (abs(v) >= 1e6 or abs(v) < 1e-4):
            return f"{v:.15e}"
        return f"{v:.15g}"
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def manifest(cfg: ScanConfig) -> dict:
    return {
        "version": __version__,
        "mode": cfg.mode,
        "config_hash": cfg.digest(),
        "tolerances": {"tol": cfg.tol, "quad_tol": cfg.quad_tol},
        "kernel": cfg.kernel,
        "threads": cfg.threads,
        "seed": cfg.seed,
        "normalized": cfg.normalize,
        "units": "hbar=1, fermion mass 1/2" + (", energies / |E_B|" if cfg.normalize else ""),
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }


def render_csv(cfg, rows) -> str:
    cols = COLUMNS[cfg.mode] + TAIL
    buf = io.StringIO()
    for k, v in manifest(cfg).items():
        buf.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(fmt_value(row.get(c)) for c in cols) + "\n")
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def render_json(cfg, rows) -> str:
    cols = COLUMNS[cfg.mode] + TAIL
    body = {"manifest": manifest(cfg), "columns": list(cols),
            "rows": [{c: _json_value(row.get(c)) for c in cols} for row in rows]}
    return json.dumps(body, indent=1, sort_keys=False) + "\n"


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("grid (repeatable; comma lists and lin:a:b:n / log:a:b:n ranges)")
    a = lambda flag, **kw: g.add_argument(flag, action="append", default=None, **kw)
    a("--mass-ratio", dest="mass_ratio", metavar="M", help="impurity to fermion mass ratio")
    a("--binding", metavar="E_B", help="two-body binding energy (< 0)")
    a("--mu", metavar="MU", help="Fermi energy")
    a("--mu-tilde", dest="mu_tilde", metavar="X", help="mu/|E_B|, alternative to --mu (default 1e4)")
    a("--box", metavar="L", help="box side")
    a("--l2eb", metavar="X", help="L^2 |E_B|, alternative to --box (default 100)")
    a("--r", metavar="R", help="subtraction in the perturbed equation")
    a("--epsilon", metavar="EPS", help="stability parameter")
    a("--q", metavar="Q", help="impurity momentum along x in units of 2 pi/L")
    a("--tau", metavar="TAU", help="energy argument of G (> -mu)")
    a("--suite", metavar="NAME", help=f"certificate suite: {', '.join(SUITES)}")
    o = common.add_argument_group("run control")
    o.add_argument("--tol", help="root residual tolerance (default scale-aware)")
    o.add_argument("--quad-tol", dest="quad_tol", help="absolute quadrature tolerance")
    o.add_argument("--kernel", help=f"G kernel for hole sums: {', '.join(KERNELS)}")
    o.add_argument("--format", help="csv or json")
    o.add_argument("--out", help="output path (default stdout)")
    o.add_argument("--threads", help="worker threads")
    o.add_argument("--seed", help="seed for randomized suites")
    o.add_argument("--normalize", action="store_const", const="true", help="report energies in units of |E_B|")
    o.add_argument("--config", help="key=value file; flags override its keys")

    parser = argparse.ArgumentParser(
        prog="polaron2d",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode", required=True, metavar="MODE")
    helps = {
        "polaron": "solve the polaron equation",
        "perturbed": "solve the perturbed polaron equation",
        "gtable": "tabulate G on the lattice against its continuum forms",
        "stability": "stability margin alpha(M, eps)",
        "critical-mass": "critical mass ratio",
        "certify": "run certificate suites",
    }
    for mode in MODES:
        sub.add_parser(mode, parents=[common], help=helps[mode], description=helps[mode])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        rows = run_scan(cfg)
    except UsageError as exc:
        print(f"polaron2d: error: {exc}", file=sys.stderr)
        return 2
    text = render_json(cfg, rows) if cfg.fmt == "json" else render_csv(cfg, rows)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = any(r.get("status") in ("error", "fail") for r in rows)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
