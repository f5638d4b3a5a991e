"""Command-line front end.

Exit codes: 0 success, 1 numeric failure, 2 usage or configuration error.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .cache import CACHE_ENV, ResultCache, default_cache_dir
from .errors import ConfigError, QPTError
from .sweep import AUTO_BASES

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _load_config(path, args=None):
    from .config import parse_config

    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    config = parse_config(text)
    overrides = {}
    if args is not None and getattr(args, "parallelism", None) is not None:
        if args.parallelism < 1:
            raise UsageError("--parallelism must be at least 1")
        overrides["parallelism"] = args.parallelism
    if args is not None and getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config, text


def _cache(args):
    if args.no_cache:
        return None
    directory = args.cache if args.cache is not None else default_cache_dir()
    try:
        return ResultCache(directory)
    except OSError as exc:
        raise UsageError(f"cannot use cache directory {directory}: {exc}") from exc


def cmd_scan(args):
    from .sweep import emit_csv, emit_report, run_sweep

    config, text = _load_config(args.config, args)
    result = run_sweep(config, _cache(args))
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "rows.csv").write_bytes(emit_csv(result.rows))
        (out / "report.json").write_bytes(emit_report(result.criticals, config, result.notes))
        (out / "config.ini").write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from exc
    print(f"wrote {len(result.rows)} rows and {len(result.criticals)} critical point(s) to {out}", file=sys.stderr)
    if result.cache_stats is not None:
        s = result.cache_stats
        print(f"cache: {s['hits']} hits, {s['misses']} misses, {s['corrupt']} corrupt", file=sys.stderr)
    return EXIT_OK


def cmd_measure(args):
    from .sweep import ResultRow, _curve_point, cache_key, emit_csv, evaluate_row, fixed_measures

    config, _ = _load_config(args.config, args)
    cache = _cache(args)
    path = config.path()
    lam = args.lambda_
    step = config.steps[-1]
    delta, h, beta = _curve_point(path, lam)
    rows = []
    for m in sorted(fixed_measures(config), key=lambda m: m.name):
        key = cache_key(config, lam, step, m) if cache is not None else None
        data = cache.get(key) if cache is not None else None
        if data is None:
            data = evaluate_row(config, path, lam, m, step)
            if cache is not None:
                cache.put(key, data)
        rows.append(ResultRow(lam, delta, h, beta, m.name, data["value"], data["d1"], data["d2"], tuple(data["flags"])))
    if any(b in AUTO_BASES for b in config.bases if isinstance(b, str)):
        print("note: automatic bases are built during a scan and are skipped here", file=sys.stderr)
    sys.stdout.write(emit_csv(rows).decode("utf-8"))
    return EXIT_OK


def render_report(doc):
    lines = []
    cfg = doc.get("config", {})
    model = cfg.get("model", {})
    curve = cfg.get("curve", {})
    lines.append(f"model: {model.get('kind')} N={model.get('sites')} ({model.get('boundary')})")
    lines.append(f"curve: delta = {curve.get('delta')}, h = {curve.get('h')}, beta = {curve.get('beta')}")
    grid = cfg.get("grid", {})
    lines.append(f"grid: [{grid.get('min')}, {grid.get('max')}] with {grid.get('points')} points")
    crit = doc.get("critical_points", [])
    lines.append(f"critical points: {len(crit)}")
    for c in crit:
        lines.append(f"  lambda_c = {c['lambda_c']:.10g}  {c['classification']}")
        lines.append(f"    detected by: {', '.join(c['detecting'])}")
        if c.get("berry_jump") is not None:
            lines.append(f"    Berry phase jump: {c['berry_jump']:.10g}")
        if c.get("order_parameter_jump") is not None:
            lines.append(f"    order parameter jump: {c['order_parameter_jump']:.10g}")
        lines.append(f"    parity flip: {'yes' if c.get('parity_flip') else 'no'}")
        for label, info in sorted(c.get("bases", {}).items()):
            lines.append(f"    basis {label}: {info['construction']} ({info['digest'][:12]})")
    for note in doc.get("notes", []):
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def cmd_report(args):
    path = Path(args.run_dir) / "report.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    sys.stdout.write(render_report(doc))
    return EXIT_OK


def cmd_selftest(args):
    from .acceptance import run_all

    checks = run_all()
    for c in checks:
        print(c.line(), flush=True)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} passed")
    return EXIT_OK if not failed else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="qptprobe", description="Probe quantum phase transitions with coherence measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
        p.add_argument("--parallelism", metavar="K", type=int, help="worker threads")
        p.add_argument("--cache", metavar="DIR", help=f"cache directory (default ${CACHE_ENV} or ~/.cache/qptprobe)")
        p.add_argument("--no-cache", action="store_true", help="do not read or write the cache")

    p = sub.add_parser("scan", help="run a sweep and write rows.csv and report.json")
    p.add_argument("config")
    add_run_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("measure", help="print every configured measure at one lambda")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lambda_", type=float, required=True, metavar="X")
    add_run_flags(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("report", help="render the report of a finished scan")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QPTError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
