"""Command-line front end.

Every run writes one JSON header line (version, resolved config, seed,
timestamp) followed by the data: CSV rows for curves, a JSON document for
scalar summaries.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analytics import fit_decay, haar_css_entropy, haar_Y
from .defects import find_defect_subspaces
from .exact import CircuitSpec, DopedCliffordSpec, ensemble_averages, run_doped_clifford
from .qudit import NumericalError, ResourceError
from .replica.contract import DEFAULT_CUTOFF, annealed_curve

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 2, 3, 4, 5
MODES = ("defects", "exact", "doped", "tn", "haar", "fit", "validate")

# required fields and defaults per mode
REQUIRED = {
    "defects": ("d", "k"),
    "exact": ("d", "N", "t"),
    "doped": ("N", "t"),
    "tn": ("d", "N", "t", "chi"),
    "haar": ("d", "N"),
    "fit": ("t",),
    "validate": ("d", "N", "t"),
}
DEFAULTS = {
    "M": 1,
    "cutoff": DEFAULT_CUTOFF,
    "threads": 1,
    "format": None,
    "output": None,
    "route": "auto",
    "method": "pauli",
    "t_per_layer": 1,
    "input": None,
    "chi": None,
    "k": None,
    "d": None,
    "N": None,
    "t": None,
    "seed": None,
}


class UsageError(Exception):
    pass


def _int_list(text) -> list[int]:
    """``"5"``, ``"1:20"`` (inclusive) or ``"4,16,64"``."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(x) for x in text]
    out = []
    for part in str(text).split(","):
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magicflow", description="CSS-entropy growth in random circuits")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default field values")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    S = argparse.SUPPRESS
    specs = {
        "defects": [("--d", int), ("--k", int)],
        "exact": [("--d", int), ("--N", int), ("--t", str), ("--M", int), ("--route", str)],
        "doped": [("--N", int), ("--t", str), ("--M", int), ("--t-per-layer", int), ("--method", str)],
        "tn": [("--d", int), ("--N", str), ("--t", str), ("--chi", int), ("--cutoff", float)],
        "haar": [("--d", int), ("--N", str)],
        "fit": [("--input", str), ("--t", str), ("--d", int), ("--N", int), ("--chi", int), ("--cutoff", float)],
        "validate": [("--d", int), ("--N", int), ("--t", str), ("--M", int), ("--chi", int)],
    }
    for mode, args in specs.items():
        p = sub.add_parser(mode, parents=[common])
        for flag, typ in args:
            p.add_argument(flag, type=typ, default=S, dest=flag[2:].replace("-", "_"))
    return parser


def parse_config(argv: list[str]) -> dict:
    """Resolve flags over the optional config file over defaults.

    Raises ``UsageError`` for unknown file keys, unparseable values and
    missing required fields.
    """
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    mode = ns.pop("mode")
    cfg = dict(DEFAULTS)
    path = ns.pop("config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        file_mode = file_cfg.pop("mode", mode)
        if file_mode != mode:
            raise UsageError(f"config mode {file_mode!r} conflicts with subcommand {mode!r}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update(ns)
    cfg["mode"] = mode
    if cfg["seed"] is None:
        env = os.environ.get("MAGICFLOW_SEED")
        try:
            cfg["seed"] = int(env) if env is not None else 0
        except ValueError as exc:
            raise UsageError(f"MAGICFLOW_SEED is not an integer: {env!r}") from exc
    missing = [k for k in REQUIRED[mode] if cfg.get(k) is None]
    if mode == "fit" and cfg["input"] is None:
        missing += [k for k in ("d", "N", "chi") if cfg.get(k) is None]
    if missing:
        raise UsageError(f"missing required fields for {mode}: {', '.join(missing)}")
    try:
        for key in ("t", "N"):
            if cfg.get(key) is not None:
                cfg[key] = _int_list(cfg[key])
        for key in ("d", "k", "M", "chi", "threads", "t_per_layer", "seed"):
            if cfg.get(key) is not None:
                cfg[key] = int(cfg[key])
        cfg["cutoff"] = float(cfg["cutoff"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"unparseable number: {exc}") from exc
    if cfg["format"] is None:
        cfg["format"] = "json" if mode in ("defects", "fit") else "csv"
    return cfg


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(type(x).__name__)


def _single(cfg, key):
    vals = cfg[key]
    if len(vals) != 1:
        raise UsageError(f"--{key} takes a single value in {cfg['mode']} mode")
    return vals[0]


def _tn_rows(cfg) -> list[dict]:
    d, chi, cutoff = cfg["d"], cfg["chi"], cfg["cutoff"]
    depths = cfg["t"]
    jobs = [(N, max(depths), d, chi, cutoff) for N in cfg["N"]]
    if cfg["threads"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["threads"]) as pool:
            results = list(pool.map(_tn_job, jobs))
    else:
        results = [_tn_job(j) for j in jobs]
    rows = []
    for N, res in zip(cfg["N"], results):
        y_haar = haar_Y(d, N)
        for t in depths:
            if t < 1:
                raise UsageError("tn depths start at 1")
            log_u = res.log_upsilon[t - 1]
            rows.append(
                {
                    "d": d,
                    "N": N,
                    "t": t,
                    "chi": chi,
                    "log_upsilon": log_u,
                    "Y": -log_u,
                    "Y_haar": y_haar,
                    "delta_Y": y_haar + log_u,
                    "max_bond": res.max_bond[t - 1],
                    "discarded_weight": res.discarded_weight[t - 1],
                }
            )
    return rows


def _tn_job(args):
    return annealed_curve(*args)


def _read_series(path: str) -> list[tuple[float, float]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("{"):
        lines = lines[1:]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"t", "delta_Y"} <= set(reader.fieldnames):
        raise UsageError("fit input needs t and delta_Y columns")
    return [(float(r["t"]), float(r["delta_Y"])) for r in reader]


def run_mode(cfg) -> tuple[list[dict] | dict, int]:
    """Compute the data for ``cfg``; returns ``(data, exit_code)``."""
    mode = cfg["mode"]
    if mode == "defects":
        subs = find_defect_subspaces(cfg["d"], cfg["k"])
        return [A.to_dict() for A in subs], EXIT_OK
    if mode == "haar":
        rows = []
        for N in cfg["N"]:
            h = haar_css_entropy(d=cfg["d"], N=N)
            rows.append({"d": h.d, "N": N, "upsilon_log": h.upsilon_log, "Y": h.Y})
        return rows, EXIT_OK
    if mode == "exact":
        depths = cfg["t"]
        spec = CircuitSpec(cfg["d"], _single(cfg, "N"), max(depths), cfg["seed"], cfg["M"])
        stats = ensemble_averages(spec, depths=depths, threads=cfg["threads"])
        return list(stats.rows()), EXIT_OK
    if mode == "doped":
        depths = cfg["t"]
        spec = DopedCliffordSpec(_single(cfg, "N"), max(depths), cfg["t_per_layer"], cfg["seed"], cfg["M"])
        stats = run_doped_clifford(spec, method=cfg["method"], threads=cfg["threads"])
        rows = list(stats.rows())
        return [rows[t] for t in depths], EXIT_OK
    if mode == "tn":
        return _tn_rows(cfg), EXIT_OK
    if mode == "fit":
        lo, hi = min(cfg["t"]), max(cfg["t"])
        if cfg["input"]:
            series = _read_series(cfg["input"])
        else:
            sub = dict(cfg, t=list(range(1, hi + 1)), N=[cfg["N"][0]] if isinstance(cfg["N"], list) else [cfg["N"]])
            series = [(r["t"], r["delta_Y"]) for r in _tn_rows(sub)]
        try:
            fit = fit_decay(series, lo, hi)
        except ValueError as exc:
            raise NumericalError(str(exc)) from exc
        return fit.to_dict(), EXIT_OK
    if mode == "validate":
        return _validate(cfg)
    raise UsageError(f"unknown mode {mode}")


def _validate(cfg) -> tuple[list[dict], int]:
    """Compare the TN annealed entropy with the exact ensemble at every depth."""
    d, N = cfg["d"], _single(cfg, "N")
    t_max = max(cfg["t"])
    # a single depth means "every depth up to it"
    depths = list(range(1, t_max + 1)) if len(cfg["t"]) == 1 else [t for t in cfg["t"] if t >= 1]
    M = max(cfg["M"], 2)
    chi = cfg["chi"] or math.factorial(2 * d if d % 2 == 0 else d) ** 2
    res = annealed_curve(N, t_max, d, chi, cfg["cutoff"])
    stats = ensemble_averages(CircuitSpec(d, N, t_max, cfg["seed"], M), depths=depths, threads=cfg["threads"])
    rows, ok = [], True
    for j, t in enumerate(depths):
        tn_u = math.exp(res.log_upsilon[t - 1])
        mean, err = stats.mean_upsilon[j], stats.upsilon_err[j]
        z = abs(tn_u - mean) / err if err > 0 else (0.0 if tn_u == mean else math.inf)
        passed = bool(z <= 3.0)
        ok &= passed
        rows.append(
            {
                "d": d,
                "N": N,
                "t": t,
                "tn_Y": -res.log_upsilon[t - 1],
                "exact_Y": stats.annealed[j],
                "exact_err": stats.annealed_err[j],
                "z": z,
                "M": M,
                "pass": passed,
            }
        )
    return rows, EXIT_OK if ok else EXIT_VALIDATION


def render(cfg, data, timestamp: str | None = None) -> str:
    header = {
        "version": __version__,
        "config": cfg,
        "seed": cfg["seed"],
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
    }
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True, default=_json_default) + "\n")
    if cfg["format"] == "json" or not isinstance(data, list):
        buf.write(json.dumps(_round_trip(data), sort_keys=True, indent=1) + "\n")
    elif data:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(data[0]))
        for row in data:
            writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def _round_trip(x):
    if isinstance(x, dict):
        return {k: _round_trip(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round_trip(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.17g}")
    return x


def read_output(text: str) -> tuple[dict, str]:
    """Split an output file into its header and data section."""
    head, _, body = text.partition("\n")
    return json.loads(head), body


def _origin(exc: BaseException) -> str:
    """Module in which ``exc`` was raised, for tagging error messages."""
    frames = traceback.extract_tb(exc.__traceback__)
    if not frames:
        return "magicflow"
    return os.path.splitext(os.path.basename(frames[-1].filename))[0]


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        data, code = run_mode(cfg)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0) and EXIT_USAGE
    except UsageError as exc:
        print(f"magicflow: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"magicflow: resource [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        print(f"magicflow: numerical [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"magicflow: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(cfg, data)
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_VALIDATION:
        print("magicflow: validation gate failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
