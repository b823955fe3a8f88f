"""Command-line entry point ``expmod``.

Exit codes: 0 success, 2 invalid configuration, 3 numeric failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from ._numbers import check_probability, format_real
from .errors import ConvergenceError, PrecisionExhaustedError, ResourceLimitError, SignError, SingularityError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
SCHEMA_VERSION = 1

DEFAULTS = {
    "p": None,
    "p_grid": None,
    "n_max": 1000,
    "ell": 4,
    "precision": 256,
    "mode": "float",
    "seed": 0,
    "samples": 10**5,
    "burn_in": 60,
    "length": None,
    "window": None,
    "output": None,
    "format": "csv",
    "input": None,
    "suite": "all",
}


class ConfigError(ValueError):
    pass


def _parse_grid(text: str) -> list[Fraction]:
    # "0.05,0.1,0.2" or "start:stop:step" (inclusive stop)
    text = str(text)
    if ":" in text:
        start, stop, step = (Fraction(t) for t in text.split(":"))
        if step <= 0:
            raise ConfigError(f"grid step must be positive in {text!r}")
        out, x = [], start
        while x <= stop:
            out.append(x)
            x += step
        return out
    return [Fraction(t.strip()) for t in text.split(",") if t.strip()]


def _parse_window(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        lo, hi = str(text).split(",")
    lo, hi = int(lo), int(hi)
    if not 1 <= lo < hi:
        raise ConfigError(f"window {text!r} must satisfy 1 <= lo < hi")
    return lo, hi


def _probabilities(cfg) -> list[Fraction]:
    if cfg["p_grid"] is not None:
        ps = cfg["p_grid"] if isinstance(cfg["p_grid"], list) else _parse_grid(cfg["p_grid"])
    elif cfg["p"] is not None:
        ps = [cfg["p"]]
    else:
        raise ConfigError("a probability is required (--p or --p-grid)")
    try:
        return [check_probability(p) for p in ps]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from exc


def _single_p(cfg) -> Fraction:
    ps = _probabilities(cfg)
    if len(ps) != 1:
        raise ConfigError("this command takes a single --p")
    return ps[0]


def _validate(cfg):
    if int(cfg["n_max"]) < 2:
        raise ConfigError(f"n_max={cfg['n_max']} must be at least 2")
    if int(cfg["precision"]) < 53:
        raise ConfigError(f"precision={cfg['precision']} must be at least 53")
    if cfg["mode"] not in ("float", "rational"):
        raise ConfigError(f"mode must be float or rational, not {cfg['mode']!r}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, not {cfg['format']!r}")


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format_real(x)


def _emit(cfg, command: str, columns: list[str], rows: list[list], extra: dict | None = None):
    text_rows = [[_cell(v) for v in row] for row in rows]
    if cfg["format"] == "json":
        echo = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in cfg.items() if k not in ("output",)}
        if isinstance(echo.get("p_grid"), list):
            echo["p_grid"] = [str(p) for p in echo["p_grid"]]
        doc = {
            "schema": f"expmod/{command}/{SCHEMA_VERSION}",
            "config": echo,
            "columns": columns,
            "rows": [dict(zip(columns, r)) for r in text_rows],
        }
        if extra:
            doc.update({k: _cell(v) if not isinstance(v, (dict, list)) else v for k, v in extra.items()})
        out = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# expmod/{command}/{SCHEMA_VERSION}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(text_rows)
        out = buf.getvalue()
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def cmd_correlation(cfg):
    from .correlation import correlation_series

    p = _single_p(cfg)
    n_max = int(cfg["n_max"])
    s = correlation_series(p, n_max, mode=cfg["mode"], precision=int(cfg["precision"]))
    prec = "exact" if s.precision is None else str(s.precision)
    rows = [[n, s[n], s.mode, prec] for n in range(2, n_max + 1)]
    _emit(cfg, "correlation", ["n", "value", "mode", "precision"], rows)
    return EXIT_OK


def cmd_stationary(cfg):
    from .marginals import build_transition, stationary
    from .words import Word

    p = _single_p(cfg)
    ell = int(cfg["ell"])
    arg = p if cfg["mode"] == "rational" else float(p)
    mu = stationary(build_transition(ell, arg))
    rows = [[str(Word(i, ell + 1)), w] for i, w in enumerate(mu.weights)]
    _emit(cfg, "stationary", ["word", "weight"], rows)
    return EXIT_OK


def cmd_exponent(cfg):
    from .scaling.exponent import beta

    rows = []
    for p in _probabilities(cfg):
        try:
            b = beta(p)
            rows.append([p, b.value, 1 - b.value, b.flag])
        except SingularityError:
            rows.append([p, "singular", "singular", "singular"])
    _emit(cfg, "exponent", ["p", "beta_theoretical", "spectral_exponent", "flag"], rows)
    return EXIT_OK


def _read_series(path):
    ns, vals = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        i_n, i_v = header.index("n"), header.index("value")
        for row in reader:
            ns.append(int(row[i_n]))
            vals.append(float(Fraction(row[i_v])) if "/" in row[i_v] else float(row[i_v]))
    return np.array(ns), np.array(vals)


def cmd_fit(cfg):
    from .correlation import correlation_series
    from .scaling.exponent import beta, fit_power_law

    cols = ["p", "beta_theoretical", "fit_slope", "residual", "status"]
    window = _parse_window(cfg["window"]) if cfg["window"] is not None else None
    if cfg["input"]:
        ns, vals = _read_series(cfg["input"])
        window = window or (int(ns.min()), int(ns.max()))
        rep = fit_power_law((ns, vals), window)
        _emit(cfg, "fit", cols, [["input", None, rep.fit_slope, rep.residual, "ok"]])
        return EXIT_OK
    window = window or (100, int(cfg["n_max"]))
    rows = []
    for p in _probabilities(cfg):
        try:
            b = beta(p)
        except SingularityError:
            rows.append([p, "singular", None, None, "singular"])
            continue
        s = correlation_series(p, window[1], precision=int(cfg["precision"]))
        try:
            rep = fit_power_law(s, window)
            rows.append([p, b.value, rep.fit_slope, rep.residual, "ok" if b.valid else b.flag])
        except SignError as exc:
            rows.append([p, b.value, None, None, f"nonpositive at n={exc.n}"])
    _emit(cfg, "fit", cols, rows)
    return EXIT_OK


def cmd_verify(cfg):
    from .verify import run_suite

    try:
        ok, checks = run_suite(cfg["suite"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    doc = {
        "schema": f"expmod/verify/{SCHEMA_VERSION}",
        "suite": cfg["suite"],
        "passed": ok,
        "checks": [c.as_dict() for c in checks],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_simulate(cfg):
    from .correlation import correlation_series
    from .montecarlo import SimConfig, estimate_correlations

    p = _single_p(cfg)
    n_max = int(cfg["n_max"])
    length = int(cfg["length"]) if cfg["length"] is not None else n_max + 1
    if length < n_max + 1:
        raise ConfigError(f"length {length} must exceed n_max {n_max}")
    sim = SimConfig(p, length, int(cfg["burn_in"]), int(cfg["samples"]), int(cfg["seed"]))
    est = estimate_correlations(sim, range(1, n_max + 1))
    exact = correlation_series(p, max(n_max, 2), precision=int(cfg["precision"]))
    rows = [[n, e.point, e.half_width, exact[n], e.z_score(exact[n])] for n, e in zip(range(1, n_max + 1), est)]
    _emit(cfg, "simulate", ["n", "estimate", "ci_half_width", "exact_value", "z_score"], rows)
    return EXIT_OK


def cmd_spectrum(cfg):
    from .correlation import correlation_series
    from .scaling.exponent import power_spectrum

    p = _single_p(cfg)
    n_max = int(cfg["n_max"])
    s = correlation_series(p, n_max, precision=int(cfg["precision"]))
    rep = power_spectrum(s)
    rows = [[w, f] for w, f in zip(rep.omega, rep.power)]
    extra = {"fitted_exponent": rep.exponent, "expected_exponent": rep.expected}
    if cfg["format"] == "csv":
        print(f"fitted_exponent={format_real(rep.exponent)} expected={_cell(rep.expected)}", file=sys.stderr)
    _emit(cfg, "spectrum", ["omega", "power"], rows, extra)
    return EXIT_OK


def cmd_pstar(cfg):
    from .scaling.lowp import p_star_estimate

    n_max = int(cfg["n_max"])
    if n_max < 100:
        raise ConfigError("pstar needs n_max >= 100")
    est = p_star_estimate(n_max)
    _emit(cfg, "pstar", ["p_star", "bracket_lo", "bracket_hi", "n_max", "caveat"],
          [[est.value, est.bracket[0], est.bracket[1], est.n_max, est.caveat]])
    return EXIT_OK


def cmd_sweep(cfg):
    from .correlation import correlation_series

    n_max = int(cfg["n_max"])
    rows = []
    for p in _probabilities(cfg):
        s = correlation_series(p, n_max, mode=cfg["mode"], precision=int(cfg["precision"]))
        rows.extend([p, n, s[n]] for n in range(1, n_max + 1))
    _emit(cfg, "sweep", ["p", "n", "value"], rows)
    return EXIT_OK


COMMANDS = {
    "correlation": cmd_correlation,
    "stationary": cmd_stationary,
    "exponent": cmd_exponent,
    "fit": cmd_fit,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "pstar": cmd_pstar,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expmod", description="Expansion-modification dynamics toolkit")
    parser.add_argument("--version", action="version", version=f"expmod {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "verify":
            sp.add_argument("suite", nargs="?", default=None)
        sp.add_argument("--config", help="JSON file with the same keys as the flags")
        sp.add_argument("--p")
        sp.add_argument("--p-grid", dest="p_grid")
        sp.add_argument("--n-max", dest="n_max", type=int)
        sp.add_argument("--ell", type=int)
        sp.add_argument("--precision", type=int)
        sp.add_argument("--mode", choices=["float", "rational"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--burn-in", dest="burn_in", type=int)
        sp.add_argument("--length", type=int)
        sp.add_argument("--window")
        sp.add_argument("--input")
        sp.add_argument("--output")
        sp.add_argument("--format", choices=["csv", "json"])
    return parser


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return data


def resolve_config(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(_load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["p"] is not None:
        cfg["p"] = str(cfg["p"])
    _validate(cfg)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ResourceLimitError) as exc:
        print(f"expmod: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PrecisionExhaustedError, ConvergenceError, ArithmeticError) as exc:
        print(f"expmod: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"expmod: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
