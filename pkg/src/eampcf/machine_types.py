"""Type inference for machines.

Every address gets a principal type, computed once per table and reused
through fresh instantiation.  A machine that is neither a numeral nor a
fixpoint is typed by giving each initialized register the type of the
machine it holds, then checking the program instruction by instruction
against the tape.  Cells only refer to cells interned before them, so
typing them in ascending id order never needs recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .machine import Address, AddressTable, FixN, Machine, Num, current_table
from .syntax import INT, Arrow, SimpleType
from .typecheck import (
    InferType,
    TypeCheckError,
    Unifier,
    fresh_tvar,
    instantiate,
    matches,
    show_type,
)

DEFAULT_GUARD = 10_000


@dataclass(frozen=True)
class Typed:
    principal: InferType

    def __bool__(self) -> bool:
        return True

    def __str__(self) -> str:
        return show_type(self.principal)


@dataclass(frozen=True)
class Untypable:
    reason: str  # "clash", "cycle", "shape" or "guard-exhausted"
    detail: str = ""

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"untypable ({self.reason}){': ' + self.detail if self.detail else ''}"


MachineTypeReport = Union[Typed, Untypable]


@dataclass
class Derivation:
    """A node of a typing derivation: the rule used and its conclusion."""

    rule: str
    conclusion: str
    premises: list = field(default_factory=list)

    def rules(self) -> list:
        """Rule names along the derivation, depth first."""
        out = [self.rule]
        for p in self.premises:
            out += p.rules()
        return out

    def render(self, indent: int = 0) -> str:
        lines = [f"{'  ' * indent}({self.rule}) {self.conclusion}"]
        for p in self.premises:
            lines.append(p.render(indent + 1))
        return "\n".join(lines)


def fix_schema(n: int) -> InferType:
    """(δ1 → … → δn → α → α) → δ1 → … → δn → α with fresh variables."""
    deltas = [fresh_tvar() for _ in range(n)]
    alpha = fresh_tvar()

    def over(result):
        for d in reversed(deltas):
            result = Arrow(d, result)
        return result

    return Arrow(over(Arrow(alpha, alpha)), over(alpha))


def _arrows(args, result):
    for a in reversed(args):
        result = Arrow(a, result)
    return result


class _Untypable(Exception):
    def __init__(self, reason: str, detail: str = ""):
        self.report = Untypable(reason, detail)


def _memo(table: AddressTable) -> dict:
    return table.scratch.setdefault("machine_types", {})


def _references(m: Machine):
    for a in m.registers:
        if a is not None:
            yield a
    yield from m.tape


class _MachineTyper:
    def __init__(self, table: AddressTable, memo: dict, derive: bool = False):
        self.table = table
        self.memo = memo
        self.derive = derive
        self.state = Unifier()

    def scheme(self, a: Address) -> InferType:
        if a.tag == "num":
            return INT
        if a.tag == "fix":
            return fix_schema(a.n)
        report = self.memo.get(a)
        if report is None:
            raise _Untypable("cycle", f"{a} is referenced before it is typed")
        if not report:
            raise _Untypable(report.reason, f"{a}: {report.detail}" if report.detail else str(a))
        return instantiate(report.principal)

    def unify(self, x, y, where: str):
        try:
            self.state.unify(x, y)
        except TypeCheckError as e:
            raise _Untypable("clash", f"{where}: {e}") from None

    def machine(self, m: Machine):
        """Principal type of a non-reserved machine, with an optional derivation."""
        steps = []
        delta: dict[int, InferType] = {}
        for index in range(len(m.registers) - 1, -1, -1):
            a = m.registers[index]
            if a is None:
                steps.append(("R_∅", index, None))
            else:
                delta[index] = self.scheme(a)
                steps.append(("R_𝕋", index, a))
        steps.append(("R_()", None, None))
        program, tape = m.program, m.tape
        if not program:
            raise _Untypable("shape", "empty program on a machine that is not a numeral or fixpoint")
        pos = 0
        args = []
        for ins in program:
            op = ins.op
            if op == "LOAD":
                if pos < len(tape):
                    delta[ins.i] = self.scheme(tape[pos])
                    steps.append(("load_𝕋", ins, tape[pos]))
                    pos += 1
                else:
                    beta = fresh_tvar()
                    args.append(beta)
                    delta[ins.i] = beta
                    steps.append(("load_∅", ins, None))
                continue
            if op != "CALL" and ins.i not in delta:
                raise _Untypable("shape", f"{ins} reads an untyped register")
            if op in ("PRED", "SUCC"):
                self.unify(delta[ins.i], INT, str(ins))
                delta[ins.j] = INT
                steps.append((op.lower(), ins, None))
            elif op == "TEST":
                self.unify(delta[ins.i], INT, str(ins))
                self.unify(delta[ins.j], delta[ins.k], str(ins))
                delta[ins.l] = delta[ins.j]
                steps.append(("test", ins, None))
            elif op == "APP":
                beta = fresh_tvar()
                self.unify(delta[ins.i], Arrow(delta[ins.j], beta), str(ins))
                delta[ins.k] = beta
                steps.append(("app", ins, None))
            else:
                if ins.i not in delta:
                    raise _Untypable("shape", f"{ins} reads an untyped register")
                alpha = fresh_tvar()
                rest = [self.scheme(a) for a in tape[pos:]]
                self.unify(delta[ins.i], _arrows(rest, alpha), str(ins))
                steps.append(("call", ins, tuple(tape[pos:])))
                return _arrows(args, alpha), steps
        raise _Untypable("shape", "program does not end with a Call")


def infer_machine(
    a: Address,
    table: Optional[AddressTable] = None,
    guard: int = DEFAULT_GUARD,
) -> MachineTypeReport:
    """The principal type of the machine at ``a``."""
    table = table if table is not None else current_table()
    if a.tag == "num":
        return Typed(INT)
    if a.tag == "fix":
        return Typed(fix_schema(a.n))
    memo = _memo(table)
    hit = memo.get(a)
    if hit is not None:
        return hit
    if not table.is_allocated(a):
        return Untypable("shape", f"{a} is not allocated")
    # gather the cells that still need a type
    pending = []
    seen = {a}
    stack = [a]
    while stack:
        c = stack.pop()
        pending.append(c)
        for ref in _references(table.lookup(c)):
            if ref.tag == "cell" and ref not in seen and ref not in memo:
                seen.add(ref)
                stack.append(ref)
    if len(pending) > guard:
        return Untypable("guard-exhausted", f"{len(pending)} machines to type, guard is {guard}")
    pending.sort(key=lambda c: c.id)
    for c in pending:
        typer = _MachineTyper(table, memo)
        try:
            ty, _ = typer.machine(table.lookup(c))
            memo[c] = Typed(typer.state.zonk(ty))
        except _Untypable as failure:
            memo[c] = failure.report
        except KeyError as missing:
            memo[c] = Untypable("shape", f"register {missing} is read before it is typed")
    return memo[a]


def derivation(a: Address, table: Optional[AddressTable] = None) -> Optional[Derivation]:
    """The typing derivation of the machine at ``a``, or None when untypable."""
    table = table if table is not None else current_table()
    report = infer_machine(a, table)
    if not report:
        return None
    if a.tag == "num":
        return Derivation("nat", f"⊢ {a} : int")
    if a.tag == "fix":
        return Derivation(f"fix_{a.n}", f"⊢ {a} : {show_type(report.principal)}")
    typer = _MachineTyper(table, _memo(table), derive=True)
    ty, steps = typer.machine(table.lookup(a))
    zonk = typer.state.zonk

    def sub(addr):
        d = derivation(addr, table)
        return d if d is not None else Derivation("?", f"⊢ {addr}")

    # build bottom-up: the last program step is the topmost leaf
    node = None
    for rule, where, extra in reversed(steps):
        premises = [] if node is None else [node]
        if rule in ("R_𝕋", "load_𝕋"):
            premises.append(sub(extra))
        elif rule == "call":
            premises += [sub(x) for x in extra]
        label = f"{where}" if where is not None else ""
        node = Derivation(rule, label, premises)
    node.conclusion = f"⊢ {a} : {show_type(zonk(ty))}"
    return node


def check_machine(a: Address, ty: SimpleType, table: Optional[AddressTable] = None):
    """True iff ``ty`` is an instance of the principal type; the Untypable report otherwise."""
    report = infer_machine(a, table)
    if not report:
        return report
    return matches(report.principal, ty)


def application_typing(fun_type: InferType, arg_type: InferType) -> InferType:
    """The type of ``M·[#N]`` from the types of M and N."""
    state = Unifier()
    result = fresh_tvar()
    state.unify(fun_type, Arrow(arg_type, result))
    return state.zonk(result)
