"""Translation of EPCF closures into machine addresses."""

from __future__ import annotations

from typing import Optional, Sequence

from . import machine as eam
from .machine import AddressTable, FixN, Num, current_table
from .syntax import Apply, Closure, Fix, Ifz, Lambda, Pred, Succ, Term, Var, Variable, Zero


class CompileError(ValueError):
    pass


def _aux(table: AddressTable, kind: str, n: int, i: int = 0):
    cache = table.scratch.setdefault("compile.aux", {})
    key = (kind, n, i)
    hit = cache.get(key)
    if hit is None:
        if kind == "proj":
            m = eam.proj(n, i)
        else:
            m = {"app": eam.app_n, "pred": eam.pred_n, "succ": eam.succ_n, "ifz": eam.ifz_n}[kind](n)
        hit = cache[key] = table.intern(m)
    return hit


def translate(c: Closure, frame: Sequence[Var] = (), table: Optional[AddressTable] = None):
    """The address of the machine representing ``c`` over the variables ``frame``.

    The last binding of the substitution is peeled first; its variable goes
    to the front of the frame and its closure is translated on its own.
    Abstraction binders go to the back of the frame.
    """
    table = table if table is not None else current_table()
    return _translate(c.subst, c.term, tuple(frame), table)


def _translate(subst, term: Term, frame: tuple, table: AddressTable):
    if subst:
        last = subst[-1]
        head = _translate(subst[:-1], term, (last.var,) + frame, table)
        arg = _translate(last.closure.subst, last.closure.term, (), table)
        return table.apply(head, arg)
    n = len(frame)
    if isinstance(term, Zero) or (isinstance(term, Succ) and term.num is not None):
        return table.apply(_aux(table, "proj", n + 1, 1), Num(term.num))
    if isinstance(term, Variable):
        for pos in range(n - 1, -1, -1):
            if frame[pos] == term.var:
                return _aux(table, "proj", n, pos + 1)
        raise CompileError(f"variable {term.var.name} is not in scope")
    if isinstance(term, Lambda):
        return _translate(term.subst, term.body, frame + (term.binder,), table)
    if isinstance(term, Apply):
        fun = _translate((), term.fun, frame, table)
        arg = _translate((), term.arg, frame, table)
        return table.apply_all(_aux(table, "app", n), (fun, arg))
    if isinstance(term, Pred):
        return table.apply(_aux(table, "pred", n), _translate((), term.arg, frame, table))
    if isinstance(term, Succ):
        return table.apply(_aux(table, "succ", n), _translate((), term.arg, frame, table))
    if isinstance(term, Ifz):
        parts = [_translate((), p, frame, table) for p in (term.test, term.zero, term.pos)]
        return table.apply_all(_aux(table, "ifz", n), parts)
    if isinstance(term, Fix):
        return table.apply(FixN(n), _translate((), term.arg, frame, table))
    raise TypeError(f"not a term: {term!r}")


def compile_program(p: Term, table: Optional[AddressTable] = None):
    return translate(Closure((), p), (), table)


def compile_value(value, table: Optional[AddressTable] = None):
    """Address of an evaluation result: a numeral or an abstraction."""
    from .syntax import Numeral, numeral_term

    if isinstance(value, Numeral):
        return compile_program(numeral_term(value.n), table)
    return compile_program(value, table)
