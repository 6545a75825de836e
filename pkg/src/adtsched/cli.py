"""``adtsched`` command-line driver.

Exit codes: 0 success, 1 invalid input, 2 I/O error, 3 oracle budget
exhausted, 4 oracle disagreement.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .export import RenderOptions, to_dot, to_json_report, to_schedule_csv
from .generate import GeneratorParams, UnsatisfiableParams, and_tree, random_corpus
from .model import AllZeroDurations
from .oracle import verify
from .parser import AdtParseError, load, serialize
from .preprocess import MINIMAL, preprocess, scenario_labels
from .scheduler import schedule_variant

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_TIMEOUT, EXIT_MISMATCH = 0, 1, 2, 3, 4


class _Abort(Exception):
    def __init__(self, code):
        self.code = code


def _target(text: str):
    if text == "min":
        return MINIMAL
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'min' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("slot budget must be positive")
    return value


def _formats(text: str) -> set[str]:
    out = {f.strip() for f in text.split(",") if f.strip()}
    unknown = out - {"dot", "csv", "json"}
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(sorted(unknown))}")
    return out


def _read(path: str):
    try:
        return load(path)
    except OSError as exc:
        print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
        raise _Abort(EXIT_IO)
    except AdtParseError as exc:
        for err in exc.errors:
            print(f"{path}:{err}", file=sys.stderr)
        raise _Abort(EXIT_INVALID)


def _outdir(args, path: str) -> Path:
    out = Path(args.out) if args.out else Path(path).resolve().parent
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"{out}: {exc.strerror or exc}", file=sys.stderr)
        raise _Abort(EXIT_IO)
    return out


def _write(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
        raise _Abort(EXIT_IO)


def _prefix(args, path):
    return f"{path}: " if len(args.paths) > 1 else ""


def _variants(adt, target, path):
    try:
        return preprocess(adt, target)
    except AllZeroDurations as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        raise _Abort(EXIT_INVALID)


def cmd_validate(args) -> int:
    code = EXIT_OK
    for path in args.paths:
        try:
            _read(path)
        except _Abort as exc:
            code = max(code, exc.code)
    return code


def cmd_variants(args) -> int:
    for path in args.paths:
        adt = _read(path)
        variants = _variants(adt, args.target, path)
        out = _outdir(args, path)
        stem = Path(path).stem
        for i, (v, label) in enumerate(zip(variants, scenario_labels(adt, variants))):
            if v.dag is None:
                print(f"{_prefix(args, path)}variant {label}: no attack")
                continue
            _write(out / f"{stem}.variant{i}.dot", to_dot(v.dag))
            print(f"{_prefix(args, path)}variant {label}: seq={v.dag.n} "
                  f"critical_path={v.dag.critical_path() * v.dag.unit}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    formats = args.format if args.format is not None else {"csv", "json"}
    for path in args.paths:
        adt = _read(path)
        variants = _variants(adt, args.target, path)
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            schedules = list(pool.map(lambda v: schedule_variant(v, args.target), variants))
        labels = scenario_labels(adt, variants)
        out = _outdir(args, path)
        stem = Path(path).stem
        for i, (s, label) in enumerate(zip(schedules, labels)):
            if s.no_attack:
                print(f"{_prefix(args, path)}variant {label}: no attack")
                continue
            print(f"{_prefix(args, path)}variant {label}: time={s.makespan} agents={s.agents_used}")
            if "csv" in formats:
                _write(out / f"{stem}.variant{i}.csv", to_schedule_csv(s))
            if "dot" in formats:
                opts = RenderOptions(show_depth_level=True, show_assignment=True, color_by_agent=True)
                _write(out / f"{stem}.variant{i}.dot", to_dot(s.dag, opts))
        if "json" in formats:
            _write(out / f"{stem}.schedule.json", to_json_report(schedules, adt))
    return EXIT_OK


def cmd_verify(args) -> int:
    code = EXIT_OK
    for path in args.paths:
        adt = _read(path)
        _variants(adt, args.target, path)
        report = verify(adt, args.budget, args.target)
        for c in report.checks:
            state = "ok" if c.ok else "MISMATCH"
            if c.makespan is None and c.ok:
                print(f"{_prefix(args, path)}variant {c.label}: {state} no attack")
                continue
            print(f"{_prefix(args, path)}variant {c.label}: {state} time={c.makespan} "
                  f"oracle_time={c.oracle_time} agents={c.agents} brute_force={c.brute_force} "
                  f"upper={c.agents_upper}" + (f" ({c.detail})" if c.detail else ""))
        if args.format and "json" in args.format:
            out = _outdir(args, path)
            _write(out / f"{Path(path).stem}.verify.json",
                   to_json_report(report.schedules, adt, report))
        if report.timeout is not None:
            print(f"{path}: {report.timeout}", file=sys.stderr)
            code = max(code, EXIT_TIMEOUT)
        elif not report.ok:
            code = max(code, EXIT_MISMATCH)
    return code


def cmd_generate(args) -> int:
    if not args.paths:
        print("generate: missing output path", file=sys.stderr)
        return EXIT_INVALID
    dest = Path(args.paths[0])
    if args.random:
        dest.mkdir(parents=True, exist_ok=True)
        for i, adt in enumerate(random_corpus(args.seed, args.count)):
            _write(dest / f"random_{args.seed}_{i:04d}.adt", serialize(adt))
        return EXIT_OK
    params = GeneratorParams(args.depth, args.width, args.children, args.nodes, args.seed)
    try:
        adt = and_tree(params)
    except UnsatisfiableParams as exc:
        print(f"generate: {exc}", file=sys.stderr)
        return EXIT_INVALID
    header = (f"# AND tree: depth={params.depth} width={params.width} "
              f"children={params.children} nodes={len(adt.nodes)} seed={params.seed}\n")
    _write(dest, header + serialize(adt))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "variants": cmd_variants,
    "schedule": cmd_schedule,
    "verify": cmd_verify,
    "generate": cmd_generate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adtsched",
                                 description="Schedule attack-defence trees with a minimal number of agents.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("paths", nargs="*", metavar="path")
    ap.add_argument("--target", type=_target, default=MINIMAL,
                    help="'min' (default) or a slot budget")
    ap.add_argument("--format", type=_formats, default=None,
                    help="comma-separated output formats: dot,csv,json "
                         "(schedule defaults to csv,json; verify writes nothing by default)")
    ap.add_argument("--jobs", type=int, default=1, help="worker threads for variants")
    ap.add_argument("--budget", type=int, default=10**7, help="oracle search expansions")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="output directory (default: beside the input)")
    gen = ap.add_argument_group("generate")
    gen.add_argument("--depth", type=int, default=5)
    gen.add_argument("--width", type=int, default=3)
    gen.add_argument("--children", type=int, default=10)
    gen.add_argument("--nodes", type=int, default=None)
    gen.add_argument("--random", action="store_true", help="write a corpus of small random trees")
    gen.add_argument("--count", type=int, default=200)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "generate" and not args.paths:
        print(f"{args.command}: no input files", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except _Abort as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
