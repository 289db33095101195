"""Big-step call-by-name evaluation of EPCF closures and PCF terms.

Both evaluators walk the derivation with an explicit control stack, so a
deep derivation never exhausts the Python stack.  Every judgment visited
costs one unit of fuel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .syntax import (
    Apply,
    Binding,
    Closure,
    EValue,
    Fix,
    Ifz,
    Lambda,
    Numeral,
    Pred,
    Subst,
    Succ,
    Term,
    Variable,
    Zero,
    refresh,
    substitute,
)


@dataclass(frozen=True)
class Value:
    value: EValue
    steps: int = 0


@dataclass(frozen=True)
class Timeout:
    steps: int = 0


@dataclass(frozen=True)
class RuntimeFault:
    description: str
    steps: int = 0


Outcome = Union[Value, Timeout, RuntimeFault]


# continuation frames are tuples tagged by their first item
_ARG, _IFZ = 0, 1
_PRED = (2,)
_SUCC = (3,)


def _lookup(env: Subst, var) -> Closure | None:
    for i in range(len(env) - 1, -1, -1):
        b = env[i]
        if b.var == var:
            return b.closure
    return None


def close_abstraction(env: Subst, lam: Lambda) -> Lambda:
    """The value of an abstraction under ``env``.

    The abstraction's own substitution is placed first and ``env`` after it,
    renaming any of the abstraction's variables that ``env`` already binds.
    """
    if not env:
        return lam
    outer = {b.var for b in env}
    binder, subst, body = lam.binder, lam.subst, lam.body
    clash = [b.var for b in subst if b.var in outer]
    if binder in outer:
        clash.append(binder)
    if clash:
        renamed = {v: refresh(v) for v in clash}
        for old, new in renamed.items():
            body = substitute(body, old, Variable(new))
        subst = tuple(Binding(renamed.get(b.var, b.var), b.closure) for b in subst)
        binder = renamed.get(binder, binder)
    return Lambda(binder, tuple(subst) + tuple(env), body)


def eval_epcf(env: Subst, term: Term, fuel: int) -> Outcome:
    budget = fuel
    stack: list = []
    env = tuple(env)
    t = term
    while True:
        # evaluate the judgment env ▷ t
        if fuel <= 0:
            return Timeout(budget)
        fuel -= 1
        cls = type(t)
        if cls is Variable:
            c = _lookup(env, t.var)
            if c is None:
                return RuntimeFault(f"unbound variable {t.var.name}", budget - fuel)
            env, t = c
            continue
        if cls is Apply:
            stack.append((_ARG, env, t.arg))
            t = t.fun
            continue
        if cls is Fix:
            # the premise env ▷ M·(fix M) is a judgment of its own
            if fuel <= 0:
                return Timeout(budget)
            fuel -= 1
            stack.append((_ARG, env, t))
            t = t.arg
            continue
        if cls is Lambda:
            value = close_abstraction(env, t)
        elif cls is Zero:
            value = Numeral(0)
        elif cls is Succ:
            if t.num is None:
                stack.append(_SUCC)
                t = t.arg
                continue
            value = Numeral(t.num)
        elif cls is Pred:
            stack.append(_PRED)
            t = t.arg
            continue
        elif cls is Ifz:
            stack.append((_IFZ, env, t))
            t = t.test
            continue
        else:
            raise TypeError(f"not a term: {t!r}")

        # return the value through the control stack
        while True:
            if not stack:
                return Value(value, budget - fuel)
            frame = stack.pop()
            tag = frame[0]
            if tag == _ARG:
                if type(value) is not Lambda:
                    return RuntimeFault("application of a numeral", budget - fuel)
                env = value.subst + (Binding(value.binder, Closure(frame[1], frame[2])),)
                t = value.body
                break
            if type(value) is not Numeral:
                return RuntimeFault("arithmetic or test on an abstraction", budget - fuel)
            if frame is _PRED:
                value = Numeral(value.n - 1 if value.n else 0)
            elif frame is _SUCC:
                value = Numeral(value.n + 1)
            else:
                env = frame[1]
                t = frame[2].zero if value.n == 0 else frame[2].pos
                break


def eval_closure(c: Closure, fuel: int) -> Outcome:
    return eval_epcf(c.subst, c.term, fuel)


def eval_pcf(term: Term, fuel: int) -> Outcome:
    budget = fuel
    stack: list = []
    t = term
    while True:
        if fuel <= 0:
            return Timeout(budget)
        fuel -= 1
        cls = type(t)
        if cls is Apply:
            stack.append((_ARG, t.arg))
            t = t.fun
            continue
        if cls is Fix:
            if fuel <= 0:
                return Timeout(budget)
            fuel -= 1
            stack.append((_ARG, t))
            t = t.arg
            continue
        if cls is Lambda:
            if t.subst:
                return RuntimeFault("explicit substitution in a PCF term", budget - fuel)
            value = t
        elif cls is Zero:
            value = Numeral(0)
        elif cls is Succ:
            if t.num is None:
                stack.append(_SUCC)
                t = t.arg
                continue
            value = Numeral(t.num)
        elif cls is Pred:
            stack.append(_PRED)
            t = t.arg
            continue
        elif cls is Ifz:
            stack.append((_IFZ, t))
            t = t.test
            continue
        elif cls is Variable:
            return RuntimeFault(f"free variable {t.var.name}", budget - fuel)
        else:
            raise TypeError(f"not a term: {t!r}")

        while True:
            if not stack:
                return Value(value, budget - fuel)
            frame = stack.pop()
            tag = frame[0]
            if tag == _ARG:
                if type(value) is not Lambda:
                    return RuntimeFault("application of a numeral", budget - fuel)
                t = substitute(value.body, value.binder, frame[1])
                break
            if type(value) is not Numeral:
                return RuntimeFault("arithmetic or test on an abstraction", budget - fuel)
            if frame is _PRED:
                value = Numeral(value.n - 1 if value.n else 0)
            elif frame is _SUCC:
                value = Numeral(value.n + 1)
            else:
                t = frame[1].zero if value.n == 0 else frame[1].pos
                break
