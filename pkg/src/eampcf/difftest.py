"""Differential testing of the PCF, EPCF and machine semantics."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .compile import compile_program
from .evaluate import RuntimeFault, Timeout, Value, eval_epcf, eval_pcf
from .frontend import print_term
from .generate import GenConfig, gen_typed_program
from .machine import Errored, Halted, OutOfFuel, run_address, use_table
from .syntax import INT, Numeral, Term

STEP_MULTIPLIER = 50
RETRY_FACTOR = 10

AGREE = "agree"
AGREE_WITH_TIMEOUTS = "agree-with-timeouts"
DISAGREE = "DISAGREE"
FAULT = "FAULT"


@dataclass
class CaseRecord:
    case: int
    program: str
    pcf: str
    epcf: str
    eam: str
    verdict: str

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


@dataclass
class DiffReport:
    records: list = field(default_factory=list)

    def count(self, verdict: str) -> int:
        return sum(1 for r in self.records if r.verdict == verdict)

    @property
    def ok(self) -> int:
        return self.count(AGREE)

    @property
    def timeouts(self) -> int:
        return self.count(AGREE_WITH_TIMEOUTS)

    @property
    def disagreements(self) -> int:
        return self.count(DISAGREE)

    @property
    def faults(self) -> int:
        return self.count(FAULT)

    def summary(self) -> str:
        return f"TOTAL ok={self.ok} timeout={self.timeouts} disagree={self.disagreements} fault={self.faults}"

    def lines(self) -> list[str]:
        return [r.to_json() for r in self.records] + [self.summary()]

    def merge(self, other: "DiffReport") -> "DiffReport":
        return DiffReport(sorted(self.records + other.records, key=lambda r: r.case))


def describe_language(outcome) -> str:
    if isinstance(outcome, Value):
        v = outcome.value
        return str(v.n) if isinstance(v, Numeral) else "abstraction"
    if isinstance(outcome, Timeout):
        return "timeout"
    return f"fault: {outcome.description}"


def describe_machine(result) -> str:
    if isinstance(result, Halted):
        n = result.numeral
        return str(n) if n is not None else "final non-numeral"
    if isinstance(result, OutOfFuel):
        return "timeout"
    return "err"


def case_seed(seed: int, index: int) -> int:
    return random.Random(f"{seed}:{index}").getrandbits(64)


def check_program(
    p: Term,
    fuel: int,
    multiplier: int = STEP_MULTIPLIER,
    case: int = 0,
) -> CaseRecord:
    pcf = eval_pcf(p, fuel)
    epcf = eval_epcf((), p, fuel)
    with use_table() as table:
        address = compile_program(p, table)
        eam = run_address(address, fuel * multiplier, table)
        language_values = [o for o in (pcf, epcf) if isinstance(o, Value)]
        if isinstance(eam, OutOfFuel) and language_values:
            eam = run_address(address, fuel * multiplier * RETRY_FACTOR, table)
    results = [describe_language(pcf), describe_language(epcf), describe_machine(eam)]
    if isinstance(pcf, RuntimeFault) or isinstance(epcf, RuntimeFault) or isinstance(eam, Errored):
        verdict = FAULT
    else:
        finished = [r for r in results if r != "timeout"]
        if len(set(finished)) > 1 or any(not r.isdigit() for r in finished):
            verdict = DISAGREE
        elif len(finished) == 3:
            verdict = AGREE
        else:
            verdict = AGREE_WITH_TIMEOUTS
    return CaseRecord(case, print_term(p), *results, verdict)


def difftest(
    cfg: GenConfig,
    count: int,
    fuel: int,
    multiplier: int = STEP_MULTIPLIER,
    extra: Iterable[Term] = (),
    on_record=None,
) -> DiffReport:
    """Generate ``count`` programs from ``cfg`` and compare the three semantics.

    ``extra`` programs are checked after the generated ones.
    """
    if cfg.target != INT:
        raise ValueError("difftest compares numerals, so the target type must be int")
    report = DiffReport()
    programs = [gen_typed_program(replace(cfg, seed=case_seed(cfg.seed, i))) for i in range(count)]
    programs += list(extra)
    for i, p in enumerate(programs):
        record = check_program(p, fuel, multiplier, case=i)
        report.records.append(record)
        if on_record is not None:
            on_record(record)
    return report
