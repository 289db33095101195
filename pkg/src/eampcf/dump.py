"""Text format for machines, dumps and traces.

A dump lists the root machine first and then every cell it references,
directly or transitively, in ascending id order::

    machine cell:3 { regs=[_,num:2]; prog=LOAD 0;CALL 0; tape=[cell:1] }
"""

from __future__ import annotations

import re
from typing import Optional

from .machine import (
    Address,
    AddressTable,
    App,
    Call,
    Cell,
    FixN,
    Load,
    Machine,
    Num,
    Pred,
    Succ,
    Test,
    current_table,
)

_OPS = {"LOAD": (Load, 1), "APP": (App, 3), "TEST": (Test, 4), "PRED": (Pred, 2), "SUCC": (Succ, 2), "CALL": (Call, 1)}


class DumpError(ValueError):
    pass


def format_address(a: Optional[Address]) -> str:
    return "_" if a is None else str(a)


def parse_address(text: str) -> Optional[Address]:
    text = text.strip()
    if text == "_":
        return None
    m = re.fullmatch(r"(num|fix|cell):(\d+)", text)
    if m is None:
        raise DumpError(f"not an address: {text!r}")
    kind, n = m.group(1), int(m.group(2))
    return {"num": Num, "fix": FixN, "cell": Cell}[kind](n)


def format_registers(regs) -> str:
    return "[" + ",".join(format_address(a) for a in regs) + "]"


def format_program(program) -> str:
    return ";".join(map(str, program)) if program else "-"


def format_machine(address: Address, m: Machine) -> str:
    return (f"machine {address} {{ regs={format_registers(m.registers)}; "
            f"prog={format_program(m.program)}; tape={format_registers(m.tape)} }}")


def trace_line(k: int, m: Machine, label: str) -> str:
    return f"step {k} | {label} | regs={format_registers(m.registers)} | tape={format_registers(m.tape)}"


def referenced_cells(root: Address, table: AddressTable) -> list[Cell]:
    seen: set = set()
    stack = [root]
    while stack:
        a = stack.pop()
        if a is None or a.tag != "cell" or a in seen:
            continue
        seen.add(a)
        m = table.lookup(a)
        stack.extend(m.registers)
        stack.extend(m.tape)
    return sorted(seen, key=lambda c: c.id)


def dump(root: Address, table: Optional[AddressTable] = None) -> str:
    table = table if table is not None else current_table()
    lines = [format_machine(root, table.lookup(root))]
    lines += [format_machine(c, table.lookup(c)) for c in referenced_cells(root, table) if c != root]
    return "\n".join(lines) + "\n"


_BLOCK = re.compile(
    r"machine\s+(\S+)\s*\{\s*regs=\[([^\]]*)\]\s*;\s*prog=(.*?)\s*;\s*tape=\[([^\]]*)\]\s*\}"
)


def _parse_list(text: str) -> list:
    text = text.strip()
    return [parse_address(part) for part in text.split(",")] if text else []


def _parse_program(text: str) -> list:
    text = text.strip()
    if text == "-":
        return []
    out = []
    for part in text.split(";"):
        words = part.split()
        if not words or words[0] not in _OPS:
            raise DumpError(f"unknown instruction {part!r}")
        cls, arity = _OPS[words[0]]
        if len(words) != arity + 1:
            raise DumpError(f"{words[0]} takes {arity} operands")
        out.append(cls(*map(int, words[1:])))
    return out


def parse_dump(text: str) -> tuple[Address, dict]:
    """Parse a dump into its root address and a map from address to machine."""
    blocks: dict = {}
    root = None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("#", "--")):
            continue
        m = _BLOCK.fullmatch(line)
        if m is None:
            raise DumpError(f"malformed dump line: {line!r}")
        address = parse_address(m.group(1))
        machine = Machine(_parse_list(m.group(2)), _parse_program(m.group(3)), _parse_list(m.group(4)))
        if root is None:
            root = address
        blocks[address] = machine
    if root is None:
        raise DumpError("empty dump")
    return root, blocks


def load_dump(text: str, table: Optional[AddressTable] = None) -> Address:
    """Intern every machine of a dump into ``table`` and return the root's address."""
    return load_dump_with_map(text, table)[0]


def load_dump_with_map(text: str, table: Optional[AddressTable] = None) -> tuple[Address, dict]:
    """Like :func:`load_dump`, also returning how the dump's cells were renumbered."""
    table = table if table is not None else current_table()
    root, blocks = parse_dump(text)
    renamed: dict = {}

    def resolve(a):
        if a is None or a.tag != "cell":
            return a
        if a not in renamed:
            if a not in blocks:
                raise DumpError(f"dump does not define {a}")
            resolving.add(a)
            m = blocks[a]
            for ref in (*m.registers, *m.tape):
                if ref in resolving:
                    raise DumpError(f"cyclic reference through {ref}")
                resolve(ref)
            resolving.discard(a)
            renamed[a] = table.intern(Machine(
                [resolve(r) for r in m.registers], m.program, [resolve(t) for t in m.tape]))
        return renamed[a]

    resolving: set = set()
    for a in sorted((a for a in blocks if a.tag == "cell"), key=lambda c: c.id):
        resolve(a)
    if root.tag == "cell":
        return renamed[root], renamed
    m = blocks[root]
    address = table.intern(Machine([resolve(r) for r in m.registers], m.program, [resolve(t) for t in m.tape]))
    return address, renamed
