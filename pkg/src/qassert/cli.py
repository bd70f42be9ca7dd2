"""Command-line driver: run benchmarks or program files and report verdicts."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .assertions import ALPHA, FAIL, INDETERMINATE, run_program, split_at_breakpoints
from .benchmarks import BENCHMARKS, UsageError, get_benchmark
from .program import ParseError, Program, emit_native, emit_qasm, parse
from .report import Report, render
from .statevector import ResourceError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INDETERMINATE, EXIT_RESOURCE = 0, 1, 2, 3, 4


def _histograms(program: Program, verdicts, names) -> dict:
    if not verdicts or not names:
        return {}
    ens = verdicts[-1].ensemble
    return {name: ens.histogram(program.register(name).qubits) for name in names}


def constant_warnings(program: Program) -> list[str]:
    """Multiplier constants that cannot uncompute their workspace."""
    out = []
    for instr, line in zip(program.body, program.lines or (None,) * len(program.body)):
        if getattr(instr, "op", None) == "cua":
            a, a_inv, n = instr.params
            if a * a_inv % n != 1:
                out.append(f"line {line}: {a} * {a_inv} is not 1 mod {n}; workspace will not be cleared")
        elif getattr(instr, "op", None) in ("cmodmul", "cmodmul_inv"):
            a, n = instr.params
            if math.gcd(a, n) != 1:
                out.append(f"line {line}: multiplier {a} is not invertible mod {n}")
    return out


def run_program_report(program: Program, target: str, bug=None, shots=None, seed=0, alpha=ALPHA,
                       per_shot_rerun=False, workers=None, observe=()) -> Report:
    verdicts = run_program(program, shots=shots, seed=seed, alpha=alpha,
                           per_shot_rerun=per_shot_rerun, workers=workers)
    report = Report.build(target, verdicts, bug=bug, shots=shots, seed=seed, alpha=alpha,
                          histograms=_histograms(program, verdicts, observe))
    if report.status == FAIL:
        report = replace(report, warnings=tuple(constant_warnings(program)))
    return report


def benchmark_program(name: str, bug: str | None = None) -> Program:
    spec = get_benchmark(name)
    program = spec.program()
    if bug:
        program = spec.bug(bug).mutate(program)
    return program


def run_benchmark(name: str, bug: str | None = None, shots: int | None = None, seed: int = 0,
                  alpha: float = ALPHA, per_shot_rerun: bool = False, workers: int | None = None) -> Report:
    """Generate a benchmark (optionally mutated), check all its assertions, report."""
    spec = get_benchmark(name)
    program = benchmark_program(name, bug)
    return run_program_report(program, name, bug, shots, seed, alpha, per_shot_rerun, workers, spec.observe)


def emit_breakpoints(program: Program, directory: Path, dialect: str = "native") -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for bp in split_at_breakpoints(program):
        if dialect == "native":
            text = emit_native(bp.registers, bp.prefix, bp.assertion)
            path = directory / f"bp{bp.index:02d}.q"
        elif dialect == "qasm-subset":
            text = emit_qasm(bp.registers, bp.prefix, bp.assertion)
            path = directory / f"bp{bp.index:02d}.qasm"
        else:
            raise UsageError(f"unknown dialect {dialect!r}")
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _alpha(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qassert", description="Statistical assertion checking for quantum programs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark or a program file")
    run.add_argument("target", help="benchmark name or path to a program file")
    run.add_argument("--bug", help="inject a catalogued bug (benchmarks only)")
    run.add_argument("--shots", type=_positive_int, help="shots per breakpoint (default depends on assertion kind)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--alpha", type=_alpha, default=ALPHA)
    run.add_argument("--format", choices=("text", "json"), default="text")
    run.add_argument("--per-shot-rerun", action="store_true", help="re-simulate the prefix for every shot")
    run.add_argument("--emit-breakpoints", metavar="DIR", type=Path, help="write one truncated program per assertion")
    run.add_argument("--dialect", choices=("native", "qasm-subset"), default="native")

    sub.add_parser("list", help="list benchmarks and their bug injections")

    soak = sub.add_parser("soak", help="multi-seed statistical property check")
    soak.add_argument("--seeds", type=_positive_int, default=100)
    return parser


def _cmd_list(out) -> int:
    for spec in BENCHMARKS.values():
        out.write(f"{spec.name}: {spec.description}\n")
        for bug in spec.bugs:
            out.write(f"  --bug {bug.id}  (category {bug.category}) {bug.description}; caught by: {bug.catches}\n")
    return EXIT_PASS


def _cmd_run(args, out, err) -> int:
    if args.target in BENCHMARKS:
        program = benchmark_program(args.target, args.bug)
        observe = BENCHMARKS[args.target].observe
    else:
        path = Path(args.target)
        if not path.is_file():
            raise UsageError(f"{args.target!r} is neither a benchmark ({', '.join(BENCHMARKS)}) nor a file")
        if args.bug:
            raise UsageError("--bug only applies to benchmarks")
        program = parse(path.read_text(encoding="utf-8"))
        observe = ()
    if args.emit_breakpoints:
        for p in emit_breakpoints(program, args.emit_breakpoints, args.dialect):
            err.write(f"wrote {p}\n")
    report = run_program_report(program, args.target, args.bug, args.shots, args.seed, args.alpha,
                                args.per_shot_rerun, observe=observe)
    out.write(render(report, args.format))
    return {FAIL: EXIT_FAIL, INDETERMINATE: EXIT_INDETERMINATE}.get(report.status, EXIT_PASS)


def _cmd_soak(args, out) -> int:
    from .soak import run_soak

    result = run_soak(args.seeds)
    out.write(result.summary())
    return EXIT_PASS if result.ok else EXIT_FAIL


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        if args.command == "list":
            return _cmd_list(out)
        if args.command == "soak":
            return _cmd_soak(args, out)
        return _cmd_run(args, out, err)
    except ParseError as exc:
        for e in exc.errors:
            err.write(f"{args.target}:{e}\n")
        return EXIT_USAGE
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ResourceError as exc:
        err.write(f"resource error: {exc}\n")
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
