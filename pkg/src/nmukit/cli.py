"""Command-line interface.

Subcommands: gen-swimmer, factorize, compare, mosaic, metrics, repair.
Option values resolve as command-line flag, then ``key=value`` config file
(``--config``), then built-in default. ``NMUKIT_SEED`` replaces the built-in
seed default.
"""

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets
from .hals import FactorPair, nmf, refit_on_pattern
from .metrics import DEFAULT_THRESHOLD, plain_sparsity, relative_error, report
from .nmu import LnmuConfig, gnmu, max_violation, repair_underapprox, rnmu
from .snmf import SnmfConfig, adaptive_snmf

METHODS = ("nmf", "gnmu", "rnmu", "snmf")

DEFAULTS = {
    "rank": 8,
    "seed": 0,
    "seeds": "1,2,3,4,5,6,7,8,9,10",
    "maxiter": None,          # per-method: 240 for gnmu, 180 for rnmu
    "sweeps": 600,
    "t_inner": 2,
    "threshold": DEFAULT_THRESHOLD,
    "target_sv": None,
    "target_sw": None,
    "repair": True,
    "refit_sweeps": 100,
    "out_dir": ".",
}

CSV_FIELDS = (
    "method", "seed", "plain", "scaled", "improved",
    "sV", "sW", "shV", "shW", "max_violation", "wall_time", "config",
)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors are reported as a JSON line."""

    def error(self, message):
        self.print_usage(sys.stderr)
        _error_line("UsageError", message)
        raise SystemExit(2)


@dataclass
class RunRecord:
    method: str
    seed: int
    config: dict
    report: object
    wall_time: float
    max_violation: float
    pair: FactorPair = field(default=None, repr=False)
    extras: dict = field(default_factory=dict, repr=False)

    def row(self):
        rep = self.report

        def pct(x):
            return "nan" if x is None else f"{x:.2f}"

        return {
            "method": self.method,
            "seed": self.seed,
            "plain": pct(rep.error_plain),
            "scaled": pct(rep.error_scaled),
            "improved": pct(rep.error_improved),
            "sV": pct(rep.sV),
            "sW": pct(rep.sW),
            "shV": pct(rep.shV),
            "shW": pct(rep.shW),
            "max_violation": f"{self.max_violation:.3g}",
            "wall_time": f"{self.wall_time:.3f}",
            "config": json.dumps(self.config, sort_keys=True),
        }


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment. Keys use underscores."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _coerce(key, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    if key in ("rank", "seed", "maxiter", "sweeps", "t_inner", "refit_sweeps"):
        return int(raw)
    if key in ("threshold", "target_sv", "target_sw"):
        return float(raw)
    if key == "repair":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def resolve(args):
    """Merge flags, config file, environment and defaults into one dict."""
    config = read_config_file(args.config) if getattr(args, "config", None) else {}
    defaults = dict(DEFAULTS)
    if os.environ.get("NMUKIT_SEED"):
        defaults["seed"] = os.environ["NMUKIT_SEED"]
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if key == "repair" and getattr(args, "no_repair", False):
            flag = False
        if flag is not None:
            value = flag
        elif key in config:
            value = config[key]
        else:
            value = default
        try:
            out[key] = _coerce(key, value)
        except ValueError:
            raise CliError(f"invalid value for {key}: {value!r}") from None
    return out


def run_method(M, method, opts, seed, targets=None):
    """Run one factorization method and measure it. Returns a RunRecord."""
    rank = opts["rank"]
    thr = opts["threshold"]
    extras = {}
    config = {"rank": rank, "threshold": thr}
    start = time.perf_counter()
    if method == "nmf":
        config["sweeps"] = opts["sweeps"]
        pair = nmf(M, rank, opts["sweeps"], seed)
    elif method in ("gnmu", "rnmu"):
        cfg = LnmuConfig(rank=rank, maxiter=opts["maxiter"], T=opts["t_inner"],
                         seed=seed, repair=opts["repair"])
        config.update(maxiter=opts["maxiter"], T=opts["t_inner"], repair=opts["repair"])
        if method == "gnmu":
            res = gnmu(M, cfg)
            pair = res.pair
            if res.unrepaired is not None:
                extras["unrepaired_error"] = relative_error(M, res.unrepaired.V, res.unrepaired.W)
        else:
            pair, stack = rnmu(M, cfg)
            extras["stack"] = stack
    elif method == "snmf":
        tv, tw = targets if targets is not None else (opts["target_sv"], opts["target_sw"])
        if tv is None or tw is None:
            raise CliError("snmf needs --target-sv and --target-sw")
        cfg = SnmfConfig(rank=rank, target_sV=tv, target_sW=tw, sweeps=opts["sweeps"],
                         seed=seed, threshold_ratio=thr)
        config.update(sweeps=opts["sweeps"], target_sv=tv, target_sw=tw)
        res = adaptive_snmf(M, cfg)
        pair = res.pair
        extras.update(muV=res.muV, muW=res.muW, cap_hit=res.cap_hit)
    else:
        raise CliError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    elapsed = time.perf_counter() - start
    rep = report(M, pair.V, pair.W, thr)
    return RunRecord(method, seed, config, rep, elapsed, max_violation(M, pair), pair, extras)


def add_improved(M, record, sweeps, threshold):
    if sweeps > 0:
        refit = refit_on_pattern(M, record.pair, sweeps, threshold)
        record.report.error_improved = relative_error(M, refit.V, refit.W)
        record.extras["refit"] = refit
    return record


def write_csv(records, path=None):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.row())
    if path is not None:
        Path(path).write_text(buf.getvalue())
    return buf.getvalue()


def format_table(records):
    header = ("", "Plain", "Improved", "s(V)", "s(W)", "sh(V)", "sh(W)")
    rows = [header]
    for rec in records:
        r = rec.row()
        rows.append((rec.method, r["plain"], r["improved"], r["sV"], r["sW"], r["shV"], r["shW"]))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(row, widths)))
        for row in rows
    )


def _load(path, name="matrix"):
    try:
        return datasets.load_matrix(path)
    except FileNotFoundError:
        raise CliError(f"{name} file not found: {path}") from None


def _check_rank(M, rank):
    if not 1 <= rank < min(M.shape):
        raise CliError(f"rank must satisfy 1 <= rank < {min(M.shape)}, got {rank}")


def cmd_gen_swimmer(args):
    stack = datasets.gen_swimmer()
    datasets.save_matrix(stack.matrix, args.out_path)
    print(f"wrote {args.out_path} ({stack.matrix.shape[0]} x {stack.matrix.shape[1]})")


def cmd_factorize(args):
    opts = resolve(args)
    M = _load(args.in_path)
    _check_rank(M, opts["rank"])
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    rec = run_method(M, args.method, opts, opts["seed"])
    add_improved(M, rec, opts["refit_sweeps"], opts["threshold"])
    datasets.save_matrix(rec.pair.V, out / "V.txt")
    datasets.save_matrix(rec.pair.W, out / "W.txt")
    if args.method == "rnmu":
        stack = rec.extras["stack"]
        for k, (v, w) in enumerate(stack.factors, 1):
            datasets.save_matrix(v[:, None], out / f"factor_{k}_v.txt")
            datasets.save_matrix(w[None, :], out / f"factor_{k}_w.txt")
        with open(out / "residual_sparsity.csv", "w") as fh:
            fh.write("step,sparsity\n")
            for k, R in enumerate(stack.residuals, 1):
                fh.write(f"{k},{plain_sparsity(R, 0.0):.6f}\n")
    text = write_csv([rec], out / "run.csv")
    sys.stdout.write(text)


def best_of(M, method, opts, seeds, targets=None):
    """Best run over `seeds` by Frobenius error, plus every per-seed record."""
    records = [run_method(M, method, opts, s, targets) for s in seeds]
    best = min(records, key=lambda r: r.report.error_plain)
    return best, records


def cmd_compare(args):
    opts = resolve(args)
    M = _load(args.in_path)
    _check_rank(M, opts["rank"])
    try:
        seeds = [int(s) for s in opts["seeds"].split(",") if s.strip()]
    except ValueError:
        raise CliError(f"invalid seed list {opts['seeds']!r}") from None
    if not seeds:
        raise CliError("empty seed list")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    best, failures = {}, []
    for method in ("nmf", "gnmu", "rnmu"):
        try:
            best[method], _ = best_of(M, method, opts, seeds)
        except Exception as exc:  # one failing method must not stop the table
            failures.append((method, exc))
    try:
        targets = (opts["target_sv"], opts["target_sw"])
        if None in targets:
            ref = best.get(args.snmf_match)
            if ref is None:
                raise CliError(f"no {args.snmf_match} result to take sNMF targets from")
            targets = (ref.report.sV / 100.0, ref.report.sW / 100.0)
        best["snmf"], _ = best_of(M, "snmf", opts, seeds, targets)
    except Exception as exc:
        failures.append(("snmf", exc))

    records = [add_improved(M, best[m], opts["refit_sweeps"], opts["threshold"])
               for m in METHODS if m in best]
    write_csv(records, out / "compare.csv")
    print(format_table(records))
    for method, exc in failures:
        _error_line(type(exc).__name__, f"{method}: {exc}")
    return 1 if failures else 0


def cmd_mosaic(args):
    V = _load(args.v_path, "V")
    shape = datasets.write_pgm_mosaic(V, args.height, args.width, args.grid_cols, args.out_pgm)
    print(f"wrote {args.out_pgm} ({shape[0]} x {shape[1]})")


def cmd_metrics(args):
    opts = resolve(args)
    M, V, W = _load(args.m_path, "M"), _load(args.v_path, "V"), _load(args.w_path, "W")
    rep = report(M, V, W, opts["threshold"])
    rec = RunRecord("metrics", opts["seed"], {"threshold": opts["threshold"]}, rep, 0.0,
                    max_violation(M, FactorPair(V, W)))
    sys.stdout.write(write_csv([rec]))


def cmd_repair(args):
    opts = resolve(args)
    M, V, W = _load(args.m_path, "M"), _load(args.v_path, "V"), _load(args.w_path, "W")
    pair = repair_underapprox(M, FactorPair(V, W), both=args.both)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    datasets.save_matrix(pair.V, out / "V.txt")
    datasets.save_matrix(pair.W, out / "W.txt")
    print(f"max_violation {max_violation(M, pair):.3g}  error {relative_error(M, pair.V, pair.W):.2f}")


def _common(p, seed=True):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--threshold", type=float, help="zero-rounding ratio (default 0.001)")
    p.add_argument("--out-dir", dest="out_dir")
    if seed:
        p.add_argument("--seed", type=int)


def _algorithm_flags(p):
    p.add_argument("--rank", type=int)
    p.add_argument("--maxiter", type=int, help="L-NMU outer iterations")
    p.add_argument("--sweeps", type=int, help="HALS sweeps for nmf/snmf")
    p.add_argument("--t-inner", dest="t_inner", type=int, help="HALS sweeps per multiplier update")
    p.add_argument("--target-sv", dest="target_sv", type=float)
    p.add_argument("--target-sw", dest="target_sw", type=float)
    p.add_argument("--no-repair", dest="no_repair", action="store_true")
    p.add_argument("--refit-sweeps", dest="refit_sweeps", type=int)


def build_parser():
    parser = _Parser(prog="nmukit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-swimmer", help="write the swimmer matrix")
    p.add_argument("out_path")
    p.set_defaults(func=cmd_gen_swimmer)

    p = sub.add_parser("factorize", help="run one method")
    p.add_argument("in_path")
    p.add_argument("--method", required=True, choices=METHODS)
    _common(p)
    _algorithm_flags(p)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("compare", help="best-of-seeds comparison table")
    p.add_argument("in_path")
    p.add_argument("--seeds", help="comma-separated seeds (default 1..10)")
    p.add_argument("--snmf-match", dest="snmf_match", choices=("gnmu", "rnmu"), default="gnmu",
                   help="method whose sparsity sNMF targets when no targets are given")
    _common(p, seed=False)
    _algorithm_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mosaic", help="render basis columns as a PGM grid")
    p.add_argument("v_path")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--grid-cols", dest="grid_cols", type=int, required=True)
    p.add_argument("out_pgm")
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("metrics", help="errors and sparsity of existing factors")
    p.add_argument("m_path")
    p.add_argument("v_path")
    p.add_argument("w_path")
    _common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("repair", help="make V feasible for VW <= M")
    p.add_argument("m_path")
    p.add_argument("v_path")
    p.add_argument("w_path")
    p.add_argument("--both", action="store_true", help="also repair W afterwards")
    _common(p, seed=False)
    p.set_defaults(func=cmd_repair)
    return parser


def _error_line(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        status = args.func(args)
    except (CliError, ValueError, OSError) as exc:
        _error_line(type(exc).__name__, str(exc))
        return 2
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
