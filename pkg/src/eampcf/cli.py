"""Command-line entry point.

Exit codes: 0 success, 1 parse or type error, 2 runtime error, 3 timeout,
4 difftest disagreement or fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .compile import CompileError, compile_program
from .difftest import DiffReport, difftest
from .dump import DumpError, dump, format_machine, load_dump_with_map, parse_address
from .evaluate import RuntimeFault, Timeout, eval_epcf, eval_pcf
from .frontend import ParseError, parse_closure, parse_term, parse_type, print_term
from .generate import GenConfig
from .machine import Errored, Halted, InvalidMachine, OutOfFuel, current_table, run_address
from .machine_types import check_machine, derivation, infer_machine
from .syntax import Numeral, flatten, is_pcf
from .typecheck import TypeCheckError, infer_epcf, infer_pcf, matches, show_type

OK, STATIC_ERROR, RUNTIME_ERROR, TIMEOUT, DISAGREEMENT = 0, 1, 2, 3, 4


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def _is_dump(text: str) -> bool:
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("--"):
            return line.startswith("machine ")
    return False


def _machine_address(args):
    """Resolve FILE or --addr (optionally with --load) to an address."""
    table = current_table()
    mapping: dict = {}
    if args.load:
        root, mapping = load_dump_with_map(_read(args.load), table)
    if args.addr:
        address = parse_address(args.addr)
        if address is None:
            raise DumpError("'_' is not an address")
        if address.tag == "cell":
            if address not in mapping:
                raise DumpError(f"{address} is not defined; pass the dump that defines it with --load")
            address = mapping[address]
        return address
    if args.file is None:
        if args.load:
            return root
        raise DumpError("give a FILE or --addr")
    text = _read(args.file)
    if _is_dump(text):
        return load_dump_with_map(text, table)[0]
    return compile_program(parse_term(text, closed=True), table)


def cmd_check(args) -> int:
    term = parse_term(_read(args.file), closed=True)
    if args.lang == "pcf":
        ty = infer_pcf({}, term)
    else:
        ty = infer_epcf({}, term)
    print(show_type(ty))
    if args.type:
        wanted = parse_type(args.type)
        if not matches(ty, wanted):
            print(f"does not have type {wanted}", file=sys.stderr)
            return STATIC_ERROR
    return OK


def cmd_eval(args) -> int:
    if args.semantics == "pcf":
        term = parse_term(_read(args.file), closed=True)
        if not is_pcf(term):
            print("error: the PCF evaluator needs a term without explicit substitutions", file=sys.stderr)
            return STATIC_ERROR
        outcome = eval_pcf(term, args.fuel)
    else:
        c = parse_closure(_read(args.file), closed=True)
        outcome = eval_epcf(c.subst, c.term, args.fuel)
    if isinstance(outcome, Timeout):
        print(f"timeout after {outcome.steps} steps", file=sys.stderr)
        return TIMEOUT
    if isinstance(outcome, RuntimeFault):
        print(f"runtime fault: {outcome.description}", file=sys.stderr)
        return RUNTIME_ERROR
    value = outcome.value
    print(value.n if isinstance(value, Numeral) else print_term(value))
    return OK


def cmd_compile(args) -> int:
    term = parse_term(_read(args.file), closed=True)
    address = compile_program(term)
    text = dump(address)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(address)
    else:
        sys.stdout.write(text)
    return OK


def cmd_run(args) -> int:
    address = _machine_address(args)
    trace: list | None = [] if args.trace else None
    result = run_address(address, args.fuel, trace=trace)
    if trace is not None:
        for line in trace:
            print(line)
    if isinstance(result, OutOfFuel):
        print(f"timeout after {result.steps} steps", file=sys.stderr)
        return TIMEOUT
    if isinstance(result, Errored):
        print(f"error after {result.steps} steps", file=sys.stderr)
        return RUNTIME_ERROR
    if result.numeral is not None:
        print(result.numeral)
    else:
        print(format_machine(current_table().intern(result.machine), result.machine))
    return OK


def cmd_typecheck_machine(args) -> int:
    address = _machine_address(args)
    report = infer_machine(address)
    if not report:
        print(report, file=sys.stderr)
        return STATIC_ERROR
    print(report)
    if args.derivation:
        print(derivation(address).render())
    if args.type:
        wanted = parse_type(args.type)
        if not check_machine(address, wanted):
            print(f"does not have type {wanted}", file=sys.stderr)
            return STATIC_ERROR
    return OK


def cmd_difftest(args) -> int:
    cfg = GenConfig(seed=args.seed, max_size=args.max_size, fix_probability=args.fix_probability)

    def emit(record):
        print(record.to_json(), flush=True)

    report: DiffReport = difftest(cfg, args.count, args.fuel, args.multiplier, on_record=emit)
    print(report.summary())
    return DISAGREEMENT if report.disagreements or report.faults else OK


def cmd_flatten(args) -> int:
    c = parse_closure(_read(args.file))
    print(print_term(flatten(c)))
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eampcf", description="PCF, EPCF and addressing-machine toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="infer the type of a term")
    p.add_argument("file")
    p.add_argument("--type")
    p.add_argument("--lang", choices=("pcf", "epcf"), default="epcf")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="evaluate a term")
    p.add_argument("file")
    p.add_argument("--semantics", choices=("pcf", "epcf"), default="pcf")
    p.add_argument("--fuel", type=int, default=100_000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compile", help="compile a term to a machine dump")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compile)

    for name, func, help_text in (
        ("run", cmd_run, "run a machine"),
        ("typecheck-machine", cmd_typecheck_machine, "infer the type of a machine"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", nargs="?", help="a term or a machine dump")
        p.add_argument("--addr", help="address such as num:5, fix:0 or cell:3")
        p.add_argument("--load", help="dump file defining the cells named by --addr")
        if name == "run":
            p.add_argument("--fuel", type=int, default=100_000)
            p.add_argument("--trace", action="store_true")
        else:
            p.add_argument("--type")
            p.add_argument("--derivation", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("difftest", help="compare the three semantics on random programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--fuel", type=int, default=100_000)
    p.add_argument("--max-size", type=int, default=30)
    p.add_argument("--fix-probability", type=float, default=0.15)
    p.add_argument("--multiplier", type=int, default=50)
    p.set_defaults(func=cmd_difftest)

    p = sub.add_parser("flatten", help="carry out every explicit substitution of a closure")
    p.add_argument("file")
    p.set_defaults(func=cmd_flatten)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, TypeCheckError, CompileError, DumpError, InvalidMachine) as e:
        print(f"error: {e}", file=sys.stderr)
        return STATIC_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return STATIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
