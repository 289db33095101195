"""Extended addressing machines: addresses, the address table, and execution.

A machine is a register file, a straight-line program and an input tape of
addresses.  Every machine has an address given by an :class:`AddressTable`,
which interns machines canonically so that structurally equal machines share
an address.  Numeral machines and fixpoint machines have reserved addresses.
"""

from __future__ import annotations

import contextlib
import contextvars
import threading
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union


# ---------------------------------------------------------------- addresses
# The trailing tag keeps Num(3), FixN(3) and Cell(3) distinct as tuples.

class Num(NamedTuple):
    n: int
    tag: str = "num"

    def __repr__(self) -> str:
        return f"Num({self.n})"

    def __str__(self) -> str:
        return f"num:{self.n}"


class FixN(NamedTuple):
    n: int
    tag: str = "fix"

    def __repr__(self) -> str:
        return f"FixN({self.n})"

    def __str__(self) -> str:
        return f"fix:{self.n}"


class Cell(NamedTuple):
    id: int
    tag: str = "cell"

    def __repr__(self) -> str:
        return f"Cell({self.id})"

    def __str__(self) -> str:
        return f"cell:{self.id}"


Address = Union[Num, FixN, Cell]


# ---------------------------------------------------------------- instructions

class Load(NamedTuple):
    i: int
    op: str = "LOAD"

    def __str__(self) -> str:
        return f"LOAD {self.i}"


class App(NamedTuple):
    i: int
    j: int
    k: int
    op: str = "APP"

    def __str__(self) -> str:
        return f"APP {self.i} {self.j} {self.k}"


class Test(NamedTuple):
    i: int
    j: int
    k: int
    l: int
    op: str = "TEST"

    def __str__(self) -> str:
        return f"TEST {self.i} {self.j} {self.k} {self.l}"


class Pred(NamedTuple):
    i: int
    j: int
    op: str = "PRED"

    def __str__(self) -> str:
        return f"PRED {self.i} {self.j}"


class Succ(NamedTuple):
    i: int
    j: int
    op: str = "SUCC"

    def __str__(self) -> str:
        return f"SUCC {self.i} {self.j}"


class Call(NamedTuple):
    i: int
    op: str = "CALL"

    def __str__(self) -> str:
        return f"CALL {self.i}"


Instruction = Union[Load, App, Test, Pred, Succ, Call]

for _cls in (Load, App, Test, Pred, Succ, Call):
    _cls.__repr__ = lambda self, _n=_cls.__name__: f"{_n}({', '.join(map(str, self[:-1]))})"


# ---------------------------------------------------------------- validity

def validity(program, registers) -> bool:
    """Whether ``program`` never reads an uninitialized register.

    ``registers`` is the register file (``None`` marks an uninitialized
    register); only its length and which entries are set matter.
    """
    r = len(registers)
    ready = {i for i, v in enumerate(registers) if v is not None}
    phase = 0  # 0: loads, 1: body, 2: after call
    for ins in program:
        op = ins.op
        if phase == 2:
            return False
        if op == "LOAD":
            if phase != 0:
                return False
            if ins.i < r:
                ready.add(ins.i)
            continue
        phase = 1
        if op == "CALL":
            if ins.i not in ready:
                return False
            phase = 2
        elif op == "APP":
            if ins.i not in ready or ins.j not in ready or ins.k >= r:
                return False
            ready.add(ins.k)
        elif op == "TEST":
            if ins.i not in ready or ins.j not in ready or ins.k not in ready or ins.l >= r:
                return False
            ready.add(ins.l)
        elif op in ("PRED", "SUCC"):
            if ins.i not in ready or ins.j >= r:
                return False
            ready.add(ins.j)
        else:
            return False
    return True


class InvalidMachine(ValueError):
    pass


# ---------------------------------------------------------------- machines

class _MachineFields(NamedTuple):
    registers: tuple
    program: tuple
    tape: tuple


class Machine(_MachineFields):
    """An immutable machine; construction checks program validity."""

    __slots__ = ()

    def __new__(cls, registers=(), program=(), tape=()):
        registers, program, tape = tuple(registers), tuple(program), tuple(tape)
        if not validity(program, registers):
            raise InvalidMachine(f"program is not valid for its registers: {program!r}")
        return tuple.__new__(cls, (registers, program, tape))

    @classmethod
    def trusted(cls, registers: tuple, program: tuple, tape: tuple) -> "Machine":
        return tuple.__new__(cls, (registers, program, tape))

    @property
    def r(self) -> int:
        return len(self.registers)

    def __repr__(self) -> str:
        regs = ", ".join("_" if v is None else str(v) for v in self.registers)
        prog = "; ".join(map(str, self.program)) or "-"
        tape = ", ".join(map(str, self.tape))
        return f"<[{regs}] {prog} [{tape}]>"


def numeral_machine(n: int) -> Machine:
    return Machine.trusted((Num(n),), (), ())


def fix_program(n: int) -> tuple:
    loads = [Load(i) for i in range(1, n + 2)]
    into_self = [App(0, i, 0) for i in range(1, n + 2)]
    into_arg = [App(1, i, 1) for i in range(2, n + 2)]
    return tuple(loads + into_self + into_arg + [App(1, 0, 1), Call(1)])


def fix_machine(n: int) -> Machine:
    return Machine.trusted((FixN(n),) + (None,) * (n + 1), fix_program(n), ())


def proj(n: int, i: int) -> Machine:
    if not 1 <= i <= n:
        raise ValueError(f"projection index {i} out of range 1..{n}")
    return Machine((None,) * n, [Load(k) for k in range(n)] + [Call(i - 1)])


def app_n(n: int) -> Machine:
    program = [Load(k) for k in range(n + 2)]
    program += [App(1, k, 1) for k in range(2, n + 2)]
    program += [App(0, k, 0) for k in range(2, n + 2)]
    program += [App(0, 1, 0), Call(0)]
    return Machine((None,) * (n + 2), program)


def _arith_n(n: int, ins) -> Machine:
    program = [Load(k) for k in range(n + 1)]
    program += [App(0, k, 0) for k in range(1, n + 1)]
    program += [ins, Call(0)]
    return Machine((None,) * (n + 1), program)


def pred_n(n: int) -> Machine:
    return _arith_n(n, Pred(0, 0))


def succ_n(n: int) -> Machine:
    return _arith_n(n, Succ(0, 0))


def ifz_n(n: int) -> Machine:
    program = [Load(k) for k in range(n + 3)]
    for reg in range(3):
        program += [App(reg, k, reg) for k in range(3, n + 3)]
    program += [Test(0, 1, 2, 0), Call(0)]
    return Machine((None,) * (n + 3), program)


IDENTITY = Machine((None,), (Load(0), Call(0)))


def append_tape(m: Machine, extra) -> Machine:
    extra = tuple(extra)
    if not extra:
        return m
    return Machine.trusted(m.registers, m.program, m.tape + extra)


def is_stuck(m: Machine) -> bool:
    return bool(m.program) and m.program[0].op == "LOAD" and not m.tape


def is_final(m: Machine) -> bool:
    """No small-step rule applies: empty program, or stuck on a Load."""
    return not m.program or (m.program[0].op == "LOAD" and not m.tape)


def numeral_value(m: Machine) -> Optional[int]:
    """``n`` when ``m`` is literally the numeral machine for ``n``."""
    if not m.program and not m.tape and len(m.registers) == 1:
        r0 = m.registers[0]
        if type(r0) is Num:
            return r0.n
    return None


def _fix_index(m: Machine) -> Optional[int]:
    if m.tape or not m.registers:
        return None
    r0 = m.registers[0]
    if type(r0) is not FixN:
        return None
    n = r0.n
    if len(m.registers) != n + 2 or any(v is not None for v in m.registers[1:]):
        return None
    return n if m.program == fix_program(n) else None


# ---------------------------------------------------------------- address table

class AddressTable:
    """The bijection between machines and addresses, realized by interning."""

    def __init__(self):
        self.cells: list[Machine] = []
        self.index: dict[Machine, Address] = {}
        self.applications: dict[tuple, Address] = {}
        self.fixpoints: dict[int, Machine] = {}
        self.scratch: dict = {}  # per-table caches owned by other modules
        # allocation is the only read-modify-write; racing applications
        # intern the same machine and so agree on the address
        self._allocating = threading.Lock()

    def __len__(self) -> int:
        return len(self.cells)

    def intern(self, m: Machine) -> Address:
        hit = self.index.get(m)
        if hit is not None:
            return hit
        n = numeral_value(m)
        if n is not None:
            return Num(n)
        k = _fix_index(m)
        if k is not None:
            return FixN(k)
        if not validity(m.program, m.registers):
            raise InvalidMachine(f"cannot intern an invalid machine {m!r}")
        if type(m) is not Machine:
            m = Machine.trusted(*m)
        with self._allocating:
            hit = self.index.get(m)
            if hit is not None:
                return hit
            addr = Cell(len(self.cells))
            self.cells.append(m)
            self.index[m] = addr
        return addr

    def lookup(self, a: Address) -> Machine:
        tag = a.tag
        if tag == "cell":
            if not 0 <= a.id < len(self.cells):
                raise KeyError(f"unallocated address {a}")
            return self.cells[a.id]
        if tag == "num":
            return Machine.trusted((a,), (), ())
        if tag == "fix":
            m = self.fixpoints.get(a.n)
            if m is None:
                m = self.fixpoints[a.n] = fix_machine(a.n)
            return m
        raise KeyError(f"not an address: {a!r}")

    def apply(self, a: Address, b: Address) -> Address:
        key = (a, b)
        hit = self.applications.get(key)
        if hit is None:
            m = self.lookup(a)
            hit = self.intern(Machine.trusted(m.registers, m.program, m.tape + (b,)))
            self.applications[key] = hit
        return hit

    def apply_all(self, a: Address, args) -> Address:
        for b in args:
            a = self.apply(a, b)
        return a

    def is_allocated(self, a: Address) -> bool:
        if a.tag == "cell":
            return 0 <= a.id < len(self.cells)
        return True


_current: contextvars.ContextVar[AddressTable] = contextvars.ContextVar("address_table")
_default_table = AddressTable()


def current_table() -> AddressTable:
    return _current.get(_default_table)


@contextlib.contextmanager
def use_table(table: Optional[AddressTable] = None) -> Iterator[AddressTable]:
    """Make ``table`` (or a fresh one) the default table within the block."""
    table = table if table is not None else AddressTable()
    token = _current.set(table)
    try:
        yield table
    finally:
        _current.reset(token)


def intern(m: Machine, table: Optional[AddressTable] = None) -> Address:
    return (table if table is not None else current_table()).intern(m)


def lookup(a: Address, table: Optional[AddressTable] = None) -> Machine:
    return (table if table is not None else current_table()).lookup(a)


def apply(a: Address, b: Address, table: Optional[AddressTable] = None) -> Address:
    return (table if table is not None else current_table()).apply(a, b)


def apply_all(a: Address, args, table: Optional[AddressTable] = None) -> Address:
    return (table if table is not None else current_table()).apply_all(a, args)


# ---------------------------------------------------------------- small steps

class Next(NamedTuple):
    machine: Machine


class _FinalType:
    def __repr__(self) -> str:
        return "Final"


class _ErrType:
    def __repr__(self) -> str:
        return "Err"


Final = _FinalType()
Err = _ErrType()
StepResult = Union[Next, _FinalType, _ErrType]

_FORCING = ("PRED", "SUCC", "TEST")


def _write(registers: tuple, index: int, value: Address) -> tuple:
    if index >= len(registers):
        return registers
    return registers[:index] + (value,) + registers[index + 1:]


def _step_base(m: Machine, table: AddressTable) -> StepResult:
    """One step of ``m`` in every case except forcing a non-final machine."""
    program = m.program
    if not program:
        return Final
    ins = program[0]
    op = ins.op
    regs = m.registers
    if op == "LOAD":
        if not m.tape:
            return Final
        return Next(Machine.trusted(_write(regs, ins.i, m.tape[0]), program[1:], m.tape[1:]))
    if op == "CALL":
        target = table.lookup(regs[ins.i])
        return Next(Machine.trusted(target.registers, target.program, target.tape + m.tape))
    if op == "APP":
        value = table.apply(regs[ins.i], regs[ins.j])
        return Next(Machine.trusted(_write(regs, ins.k, value), program[1:], m.tape))
    # forcing instruction whose inner machine is final
    source = regs[ins.i]
    if type(source) is not Num:
        return Err
    n = source.n
    if op == "PRED":
        value = Num(n - 1 if n else 0)
        target_reg = ins.j
    elif op == "SUCC":
        value = Num(n + 1)
        target_reg = ins.j
    else:
        value = regs[ins.j] if n == 0 else regs[ins.k]
        target_reg = ins.l
    return Next(Machine.trusted(_write(regs, target_reg, value), program[1:], m.tape))


def step(m: Machine, table: Optional[AddressTable] = None) -> StepResult:
    """One small step.  Returns Next(machine), Final or Err."""
    table = table if table is not None else current_table()
    # descend through machines that are forcing a non-final inner machine
    chain: list[Machine] = []
    current = m
    while current.program and current.program[0].op in _FORCING:
        inner = table.lookup(current.registers[current.program[0].i])
        if is_final(inner):
            break
        chain.append(current)
        current = inner
    result = _step_base(current, table)
    while chain:
        if result is Err:
            return Err
        outer = chain.pop()
        address = table.intern(result.machine)
        result = Next(Machine.trusted(
            _write(outer.registers, outer.program[0].i, address), outer.program, outer.tape))
    return result


# ---------------------------------------------------------------- runs

@dataclass(frozen=True)
class Halted:
    """The run reached a final machine."""

    machine: Machine
    steps: int

    @property
    def numeral(self) -> Optional[int]:
        return numeral_value(self.machine)


@dataclass(frozen=True)
class Errored:
    steps: int


@dataclass(frozen=True)
class OutOfFuel:
    steps: int
    machine: Optional[Machine] = None


RunResult = Union[Halted, Errored, OutOfFuel]


def run(
    m: Machine,
    fuel: int,
    table: Optional[AddressTable] = None,
    trace: Optional[list] = None,
    faithful: bool = False,
    check: bool = False,
) -> RunResult:
    """Iterate ``step`` at most ``fuel`` times.

    With ``trace`` (a list collecting lines), ``faithful`` or ``check`` the
    run literally iterates :func:`step`; otherwise an equivalent engine with
    mutable state is used.  Both take the same number of steps.
    """
    table = table if table is not None else current_table()
    if trace is None and not faithful and not check:
        return _run_fast(m, fuel, table)
    from .dump import trace_line

    steps = 0
    while True:
        if check and not validity(m.program, m.registers):
            raise InvalidMachine(f"invalid state reached after {steps} steps: {m!r}")
        if steps >= fuel:
            if is_final(m):
                if trace is not None:
                    trace.append(trace_line(steps, m, "FINAL"))
                return Halted(m, steps)
            return OutOfFuel(steps, m)
        result = step(m, table)
        if result is Final:
            if trace is not None:
                trace.append(trace_line(steps, m, "FINAL"))
            return Halted(m, steps)
        if result is Err:
            if trace is not None:
                trace.append(trace_line(steps, m, "ERR"))
            return Errored(steps + 1)
        if trace is not None:
            trace.append(trace_line(steps, m, str(m.program[0])))
        m = result.machine
        steps += 1


def run_address(a: Address, fuel: int, table: Optional[AddressTable] = None, **kwargs) -> RunResult:
    table = table if table is not None else current_table()
    return run(table.lookup(a), fuel, table, **kwargs)


def _run_fast(m: Machine, fuel: int, table: AddressTable) -> RunResult:
    lookup = table.lookup
    apply_ = table.apply
    # state of the innermost active machine
    regs = list(m.registers)
    prog = m.program
    pc = 0
    tape = list(m.tape)
    tpos = 0
    # machines suspended while they force an inner machine
    outer: list = []
    steps = 0
    while True:
        # one iteration performs exactly one step of the whole configuration
        while True:
            if pc < len(prog):
                ins = prog[pc]
                op = ins.op
                if op == "LOAD" and tpos >= len(tape):
                    final = True
                else:
                    final = False
            else:
                final = True
            if not final:
                break
            if not outer:
                return Halted(Machine.trusted(tuple(regs), prog[pc:], tuple(tape[tpos:])), steps)
            if steps >= fuel:
                return OutOfFuel(steps)
            # the outer machine reads its final inner machine
            inner = Machine.trusted(tuple(regs), prog[pc:], tuple(tape[tpos:]))
            regs, prog, pc, tape, tpos = outer.pop()
            ins = prog[pc]
            op = ins.op
            n = numeral_value(inner)
            regs[ins.i] = Num(n) if n is not None else table.intern(inner)
            if n is None:
                return Errored(steps + 1)
            r = len(regs)
            if op == "PRED":
                if ins.j < r:
                    regs[ins.j] = Num(n - 1 if n else 0)
            elif op == "SUCC":
                if ins.j < r:
                    regs[ins.j] = Num(n + 1)
            elif ins.l < r:
                regs[ins.l] = regs[ins.j] if n == 0 else regs[ins.k]
            pc += 1
            steps += 1
        if steps >= fuel:
            return OutOfFuel(steps)
        if op == "LOAD":
            if ins.i < len(regs):
                regs[ins.i] = tape[tpos]
            tpos += 1
            pc += 1
        elif op == "APP":
            value = apply_(regs[ins.i], regs[ins.j])
            if ins.k < len(regs):
                regs[ins.k] = value
            pc += 1
        elif op == "CALL":
            target = lookup(regs[ins.i])
            rest = tape[tpos:]
            regs = list(target.registers)
            prog = target.program
            pc = 0
            tape = list(target.tape)
            tape += rest
            tpos = 0
        else:
            source = regs[ins.i]
            inner = lookup(source)
            if is_final(inner):
                if type(source) is not Num:
                    return Errored(steps + 1)
                n = source.n
                r = len(regs)
                if op == "PRED":
                    if ins.j < r:
                        regs[ins.j] = Num(n - 1 if n else 0)
                elif op == "SUCC":
                    if ins.j < r:
                        regs[ins.j] = Num(n + 1)
                elif ins.l < r:
                    regs[ins.l] = regs[ins.j] if n == 0 else regs[ins.k]
                pc += 1
            else:
                # suspend and continue inside the inner machine; the step
                # taken there is this iteration's step
                outer.append((regs, prog, pc, tape, tpos))
                regs = list(inner.registers)
                prog = inner.program
                pc = 0
                tape = list(inner.tape)
                tpos = 0
                continue
        steps += 1


# ---------------------------------------------------------------- interconvertibility

@dataclass(frozen=True)
class Interconversion:
    convertible: bool
    exhausted: bool = False  # fuel ran out before either answer was certain
    common: Optional[Address] = None
    steps: tuple = (0, 0)

    def __bool__(self) -> bool:
        return self.convertible


def interconvertible(a: Address, b: Address, fuel: int, table: Optional[AddressTable] = None) -> Interconversion:
    """Whether the machines at ``a`` and ``b`` reach a common state within ``fuel`` steps each.

    Reduction is deterministic, so two machines have a common reduct exactly
    when their trajectories meet.  Both are advanced in turn and every state
    is interned; an error ends a trajectory without producing a state.
    """
    table = table if table is not None else current_table()
    seen = ({a}, {b})
    current = [table.lookup(a), table.lookup(b)]
    alive = [True, True]
    steps = [0, 0]
    if a == b:
        return Interconversion(True, common=a)
    while alive[0] or alive[1]:
        for side in (0, 1):
            if not alive[side]:
                continue
            if steps[side] >= fuel:
                alive[side] = False
                continue
            result = step(current[side], table)
            if result is Final or result is Err:
                alive[side] = False
                current[side] = None
                continue
            steps[side] += 1
            current[side] = result.machine
            address = table.intern(result.machine)
            seen[side].add(address)
            if address in seen[1 - side]:
                return Interconversion(True, common=address, steps=tuple(steps))
    exhausted = any(current[side] is not None and steps[side] >= fuel for side in (0, 1))
    return Interconversion(False, exhausted=exhausted, steps=tuple(steps))
