"""Command-line experiment runner.

Subcommands: ``validate-specfun``, ``linear-decay``, ``inhomogeneous``,
``nonlinear`` and ``phase-scan``.  Settings come from flags, then from an
optional ``--config`` file of ``key = value`` lines, then from defaults.

Exit codes: 0 ok, 1 validation failure, 2 configuration error,
3 divergence (nonlinear runs only).
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .fields import PROFILES, GridError, GridSpec
from .norms import ContractionParams
from .propagator import DampingParams

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

COMMANDS = ("validate-specfun", "linear-decay", "inhomogeneous", "nonlinear", "phase-scan")

BASE = {"mu": 2.5, "p": 2.5, "eps": 1e-3, "eps1": None, "domain": None, "tol": 1e-10,
        "case": "generic", "seed": 0, "out": None, "mu-range": None, "p-range": None}
DEFAULTS = {
    "validate-specfun": {"tol": 1e-9, "samples": 200},
    "linear-decay": {"grid": 512, "tmax": 50.0, "samples": 121},
    "inhomogeneous": {"grid": 512, "tmax": 50.0, "samples": 24},
    "nonlinear": {"grid": 256, "tmax": 20.0, "samples": 40},
    "phase-scan": {"grid": 64, "tmax": 5.0, "samples": 12,
                   "mu-range": "2.2:2.8:3", "p-range": "2.5:3.5:3"},
}


class ConfigError(ValueError):
    pass


def _range(text):
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like a:b:n, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"range must look like a:b:n, got {text!r}") from exc
    if n < 1:
        raise ConfigError(f"range needs n >= 1, got {n}")
    return (a, b, n)


TYPES = {"mu": float, "p": float, "eps": float, "eps1": float, "grid": int,
         "domain": float, "tmax": float, "tol": float, "case": str, "samples": int,
         "seed": int, "out": str, "mu-range": str, "p-range": str}


def read_config(path):
    """Parse a ``key = value`` file (``#`` comments, blank lines allowed)."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = TYPES[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="dampwave", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        for key, typ in TYPES.items():
            p.add_argument(f"--{key}", type=typ, default=None, dest=key.replace("-", "_"))
        p.add_argument("--config", default=None)
    return parser


def resolve(command, args):
    """Merge defaults < config file < flags into one dict keyed like the flags."""
    cfg = dict(BASE)
    cfg.update(DEFAULTS[command])
    if args.config:
        cfg.update(read_config(args.config))
    for key in TYPES:
        v = getattr(args, key.replace("-", "_"))
        if v is not None:
            cfg[key] = v
    return cfg


def validate(command, cfg):
    """Build parameter objects; any violated bound raises ConfigError."""
    try:
        if cfg["samples"] < 1:
            raise ConfigError(f"samples must be >= 1, got {cfg['samples']}")
        if not cfg["tol"] > 0:
            raise ConfigError(f"tol must be > 0, got {cfg['tol']!r}")
        if command == "validate-specfun":
            return {}
        if cfg["case"] not in PROFILES:
            raise ConfigError(f"case must be one of {', '.join(PROFILES)}, got {cfg['case']!r}")
        tmax = float(cfg["tmax"])
        if not tmax > 1:
            raise ConfigError(f"tmax must be > 1, got {tmax!r}")
        domain = cfg["domain"] if cfg["domain"] is not None else 2.0 * (1.0 + tmax)
        grid = GridSpec(cfg["grid"], domain)
        grid.check_tmax(tmax)
        objs = {"grid": grid, "tmax": tmax}
        if command == "phase-scan":
            objs["mu_range"] = _range(cfg["mu-range"])
            objs["p_range"] = _range(cfg["p-range"])
            mus, ps = _axis(*objs["mu_range"]), _axis(*objs["p_range"])
            for mu in mus:
                for p in ps:
                    DampingParams(mu, p, cfg["eps"])
            return objs
        params = DampingParams(cfg["mu"], cfg["p"], cfg["eps"])
        objs["params"] = params
        if cfg["eps1"] is None:
            cp = ContractionParams.default_for(params.p_exponent)
        else:
            cp = ContractionParams(cfg["eps1"])
            if not cp.admissible(params.p_exponent):
                edge = ContractionParams.largest_eps1(params.p_exponent)
                raise ConfigError(f"eps1 must be < {edge:.6g} for p={params.p_exponent:g} "
                                  f"(integrability conditions), got {cfg['eps1']!r}")
        objs["cparams"] = cp
        return objs
    except (GridError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _axis(a, b, n):
    return [a] if n == 1 else [float(x) for x in np.linspace(a, b, n)]


class RowWriter:
    """CSV with a header, LF line endings, shortest round-trip floats, flushed per row."""

    def __init__(self, out, columns):
        self.columns = columns
        if out is None or out == "-":
            self.fh, self.own = sys.stdout, False
        else:
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            self.fh, self.own = open(out, "w", encoding="utf-8", newline=""), True
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(columns)
        self.fh.flush()

    def row(self, values):
        self.w.writerow([_fmt(values[c]) for c in self.columns])
        self.fh.flush()

    def close(self):
        if self.own:
            self.fh.close()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _say(*parts):
    print(*parts, file=sys.stderr)


def _svg_path(out):
    if out is None or out == "-":
        return None
    return str(Path(out).with_suffix(".svg"))


# commands


def cmd_validate_specfun(cfg, objs):
    from .validation import run_specfun_suite

    results = run_specfun_suite(cfg["tol"], cfg["samples"], cfg["seed"])
    if cfg["out"]:
        w = RowWriter(cfg["out"], ("check", "worst", "tol", "status"))
        for r in results:
            w.row({"check": r.name, "worst": float(r.worst), "tol": float(r.tol),
                   "status": "pass" if r.passed else "fail"})
        w.close()
    failed = [r.name for r in results if not r.passed]
    for r in results:
        _say(f"{r.name}: worst={float(r.worst):.3e} tol={r.tol:.1e} "
             f"{'PASS' if r.passed else 'FAIL'}")
    if failed:
        _say("failed checks: " + ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def cmd_linear_decay(cfg, objs):
    from .experiments import LINEAR_COLUMNS, linear_decay, summarize_linear

    params, grid = objs["params"], objs["grid"]
    w = RowWriter(cfg["out"], LINEAR_COLUMNS)
    rows = []
    for row in linear_decay(params, grid, objs["tmax"], cfg["case"], cfg["samples"]):
        w.row(row)
        rows.append(row)
    w.close()
    if all(r["norm_Z12"] == 0 for r in rows):
        _say("zero data: all norms vanish")
        return EXIT_OK
    s = summarize_linear(rows, params, objs["cparams"], (10.0, objs["tmax"]))
    fz, fd = s["fit_Z12"], s["fit_dZ12"]
    if fz is None or fd is None:
        _say("decay fits skipped: fewer than 8 samples in [10, tmax]")
    else:
        _say(f"exponent ||v||_Z12 on [{fz.window[0]:g}, {fz.window[1]:g}]: "
             f"{fz.exponent:.4f} (rms {fz.rms_residual:.2e})")
        _say(f"exponent ||dv||_Z12: {fd.exponent:.4f} (rms {fd.rms_residual:.2e}); "
             f"-mu/2 = {-params.mu / 2:.4f}")
    _say(f"max t^(1-delta)||v||_Z12 relative to t=2: {s['weighted_ratio']:.4f}")
    _say(f"largest energy rise / E(1): {s['energy_rise']:.2e}; ks growth: {s['ks_growth']:.4f}")
    svg = _svg_path(cfg["out"])
    if svg:
        from .svg import line_chart

        t = [r["t"] for r in rows]
        line_chart({k: (t, [r[k] for r in rows]) for k in ("norm_Z12", "norm_dZ12", "energy", "linf")},
                   svg, f"linear decay, mu={params.mu:g}, case={cfg['case']}", "t", "norm")
    return EXIT_OK


def cmd_inhomogeneous(cfg, objs):
    from .experiments import IMPULSE_COLUMNS, impulse_response, summarize_impulse

    params, grid, tmax = objs["params"], objs["grid"], objs["tmax"]
    w = RowWriter(cfg["out"], IMPULSE_COLUMNS)
    rows = []
    for row in impulse_response(params, grid, tmax, case=cfg["case"], samples=cfg["samples"],
                                eps1=objs["cparams"].eps1):
        w.row(row)
        rows.append(row)
    w.close()
    if all(r["norm_L2"] == 0 for r in rows):
        _say("zero source: all norms vanish")
        return EXIT_OK
    s = summarize_impulse(rows, tmax)
    for key in ("slope_norm_L2", "slope_norm_Z12", "slope_norm_dZ12", "slope_Z12_over_data"):
        if key in s:
            _say(f"tau {key} at t={tmax:g}: {s[key]:.4f}")
    if s.get("fit_dZ12") is not None:
        _say(f"t exponent of ||dw||_Z12 (tau=1): {s['fit_dZ12'].exponent:.4f}")
    svg = _svg_path(cfg["out"])
    if svg:
        from .svg import line_chart

        series = {}
        for tau in sorted({r["tau"] for r in rows}):
            sel = [r for r in rows if r["tau"] == tau]
            series[f"tau={tau:g}"] = ([r["t"] for r in sel], [r["norm_Z12"] for r in sel])
        line_chart(series, svg, "impulse responses", "t", "||w||_Z12")
    return EXIT_OK


def cmd_nonlinear(cfg, objs):
    from .experiments import NONLINEAR_COLUMNS, nonlinear_run

    params, grid = objs["params"], objs["grid"]
    w = RowWriter(cfg["out"], NONLINEAR_COLUMNS)

    def emit(k, dx, ratio, xn):
        w.row({"iter": k, "diff_xnorm": dx, "ratio": ratio, "xnorm": xn})

    try:
        res = nonlinear_run(params, grid, objs["tmax"], cfg["case"], cfg["tol"], 20,
                            cfg["samples"], objs["cparams"], on_iteration=emit)
    finally:
        w.close()
    rep = res.report
    _say(f"status: {rep.status} after {rep.iterations} iterations {rep.message}".rstrip())
    _say(f"X-norm {res.x_final:.6e}; budget M*eps = {res.budget:.6e} "
         f"(C = {res.c_fit:.4f}, ||(u0,u1)||_A = {res.data_terms['total']:.6e})")
    if rep.converged and rep.residual is not None:
        _say(f"fixed-point residual {rep.residual:.3e}")
    svg = _svg_path(cfg["out"])
    if svg and rep.diff_xnorms:
        from .svg import line_chart

        k = list(range(1, len(rep.diff_xnorms) + 1))
        line_chart({"diff_xnorm": (k, rep.diff_xnorms)}, svg, "Picard differences",
                   "iteration", "||u(k) - u(k-1)||_X", logx=False)
    return EXIT_OK if rep.converged else EXIT_DIVERGED


def _scan_cell(args):
    mu, p, eps, n, domain, tmax, tol, samples, case = args
    from .experiments import nonlinear_run

    try:
        res = nonlinear_run(DampingParams(mu, p, eps), GridSpec(n, domain), tmax, case, tol,
                            20, samples)
        rep = res.report
        return rep.status, rep.iterations, res.x_final
    except Exception:  # recorded in-cell, the scan goes on
        return "error", 0, float("nan")


def cmd_phase_scan(cfg, objs):
    grid = objs["grid"]
    cells = [(mu, p, cfg["eps"], grid.n, grid.L, objs["tmax"], cfg["tol"], cfg["samples"],
              cfg["case"])
             for mu in _axis(*objs["mu_range"]) for p in _axis(*objs["p_range"])]
    w = RowWriter(cfg["out"], ("mu", "p", "eps", "status", "iters", "xnorm_final"))
    workers = max(1, min(len(cells), os.cpu_count() or 1))
    try:
        if workers == 1:
            results = map(_scan_cell, cells)
        else:
            pool = ProcessPoolExecutor(workers)
            results = pool.map(_scan_cell, cells)
        for cell, (status, iters, xn) in zip(cells, results):
            w.row({"mu": cell[0], "p": cell[1], "eps": cell[2], "status": status,
                   "iters": iters, "xnorm_final": xn})
    finally:
        w.close()
        if workers > 1:
            pool.shutdown()
    return EXIT_OK


HANDLERS = {
    "validate-specfun": cmd_validate_specfun,
    "linear-decay": cmd_linear_decay,
    "inhomogeneous": cmd_inhomogeneous,
    "nonlinear": cmd_nonlinear,
    "phase-scan": cmd_phase_scan,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve(args.command, args)
        objs = validate(args.command, cfg)
    except ConfigError as exc:
        _say(f"config error: {exc}")
        return EXIT_CONFIG
    return HANDLERS[args.command](cfg, objs)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
