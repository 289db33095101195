"""Simple-type inference for EPCF and PCF terms by first-order unification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from .syntax import (
    INT,
    Apply,
    Arrow,
    Closure,
    Fix,
    Ifz,
    Int,
    Lambda,
    Pred,
    SimpleType,
    Subst,
    Succ,
    Term,
    Var,
    Variable,
    Zero,
)

_tvar_ids = itertools.count()


@dataclass(frozen=True)
class TVar:
    id: int

    def __str__(self) -> str:
        return f"?{self.id}"


InferType = Union[Int, Arrow, TVar]
TypeEnv = dict  # Var -> InferType


def fresh_tvar() -> TVar:
    return TVar(next(_tvar_ids))


@dataclass
class TypeCheckError(Exception):
    message: str
    location: object = None
    left: object = None
    right: object = None

    def __str__(self) -> str:
        if self.left is not None and self.right is not None:
            return f"{self.message}: {show_type(self.left)} vs {show_type(self.right)}"
        return self.message


@dataclass
class Unifier:
    """A substitution state over type variables."""

    bindings: dict = field(default_factory=dict)

    def resolve(self, ty: InferType) -> InferType:
        while isinstance(ty, TVar):
            bound = self.bindings.get(ty.id)
            if bound is None:
                return ty
            ty = bound
        return ty

    def zonk(self, ty: InferType) -> InferType:
        ty = self.resolve(ty)
        if isinstance(ty, Arrow):
            dom, cod = self.zonk(ty.domain), self.zonk(ty.codomain)
            if dom is ty.domain and cod is ty.codomain:
                return ty
            return Arrow(dom, cod)
        return ty

    def occurs(self, var: TVar, ty: InferType) -> bool:
        stack = [ty]
        while stack:
            t = self.resolve(stack.pop())
            if t == var:
                return True
            if isinstance(t, Arrow):
                stack += (t.domain, t.codomain)
        return False

    def unify(self, a: InferType, b: InferType, location=None) -> None:
        work = [(a, b)]
        while work:
            x, y = work.pop()
            x, y = self.resolve(x), self.resolve(y)
            if x == y and not isinstance(x, Arrow):
                continue
            if isinstance(x, TVar):
                self.bind(x, y, a, b, location)
            elif isinstance(y, TVar):
                self.bind(y, x, a, b, location)
            elif isinstance(x, Arrow) and isinstance(y, Arrow):
                work.append((x.codomain, y.codomain))
                work.append((x.domain, y.domain))
            else:
                raise TypeCheckError("type mismatch", location, self.zonk(a), self.zonk(b))

    def bind(self, var: TVar, ty: InferType, a, b, location) -> None:
        if self.occurs(var, ty):
            raise TypeCheckError("occurs check failed", location, self.zonk(a), self.zonk(b))
        self.bindings[var.id] = ty


def unify(a: InferType, b: InferType, state: Optional[Unifier] = None) -> Unifier:
    state = state if state is not None else Unifier()
    state.unify(a, b)
    return state


def type_vars(ty: InferType) -> list:
    out: list = []
    stack = [ty]
    while stack:
        t = stack.pop()
        if isinstance(t, TVar):
            if t not in out:
                out.append(t)
        elif isinstance(t, Arrow):
            stack += (t.codomain, t.domain)
    return out


def instantiate(ty: InferType) -> InferType:
    """Copy ``ty`` with every type variable replaced by a fresh one."""
    mapping = {v: fresh_tvar() for v in type_vars(ty)}
    return rename_vars(ty, mapping)


def rename_vars(ty: InferType, mapping: dict) -> InferType:
    if isinstance(ty, TVar):
        return mapping.get(ty, ty)
    if isinstance(ty, Arrow):
        return Arrow(rename_vars(ty.domain, mapping), rename_vars(ty.codomain, mapping))
    return ty


def show_type(ty: InferType) -> str:
    """Render with schematic variables named ?a, ?b, ... in order of appearance."""
    names: dict = {}

    def name(v: TVar) -> str:
        if v not in names:
            k = len(names)
            letters = ""
            while True:
                letters = chr(ord("a") + k % 26) + letters
                k = k // 26 - 1
                if k < 0:
                    break
            names[v] = "?" + letters
        return names[v]

    def go(t, left: bool) -> str:
        if isinstance(t, TVar):
            return name(t)
        if isinstance(t, Arrow):
            text = f"{go(t.domain, True)} -> {go(t.codomain, False)}"
            return f"({text})" if left else text
        return "int"

    return go(ty, False)


def is_resolved(ty: InferType) -> bool:
    return not type_vars(ty)


def matches(pattern: InferType, target: InferType) -> bool:
    """Whether ``target`` is an instance of ``pattern`` (one-way matching)."""
    mapping: dict = {}
    work = [(pattern, target)]
    while work:
        p, t = work.pop()
        if isinstance(p, TVar):
            seen = mapping.get(p)
            if seen is None:
                mapping[p] = t
            elif seen != t:
                return False
        elif isinstance(p, Arrow):
            if not isinstance(t, Arrow):
                return False
            work += ((p.domain, t.domain), (p.codomain, t.codomain))
        elif p != t:
            return False
    return True


# ---------------------------------------------------------------- EPCF

class _EpcfInference:
    def __init__(self):
        self.state = Unifier()
        # principal types of closures already seen, keyed by node identity
        self.closure_types: dict[int, tuple] = {}

    def closure(self, c: Closure) -> InferType:
        cached = self.closure_types.get(id(c))
        if cached is None or cached[0] is not c:
            delta = self.subst(c.subst)
            ty = self.state.zonk(self.term(delta, c.term))
            cached = self.closure_types[id(c)] = (c, ty)
        return instantiate(cached[1])

    def subst(self, subst: Subst) -> dict:
        delta: dict = {}
        for b in subst:
            if b.var in delta:
                raise TypeCheckError(f"duplicate substitution variable {b.var.name}", b.var)
            delta[b.var] = self.closure(b.closure)
        return delta

    def term(self, env: dict, t: Term) -> InferType:
        if isinstance(t, Variable):
            ty = env.get(t.var)
            if ty is None:
                raise TypeCheckError(f"unbound variable {t.var.name}", t)
            return ty
        if isinstance(t, Zero) or (isinstance(t, Succ) and t.num is not None):
            return INT
        if isinstance(t, (Pred, Succ)):
            self.state.unify(self.term(env, t.arg), INT, t)
            return INT
        if isinstance(t, Fix):
            result = fresh_tvar()
            self.state.unify(self.term(env, t.arg), Arrow(result, result), t)
            return result
        if isinstance(t, Apply):
            fun = self.term(env, t.fun)
            arg = self.term(env, t.arg)
            result = fresh_tvar()
            self.state.unify(fun, Arrow(arg, result), t)
            return result
        if isinstance(t, Ifz):
            self.state.unify(self.term(env, t.test), INT, t)
            zero = self.term(env, t.zero)
            self.state.unify(zero, self.term(env, t.pos), t)
            return zero
        if isinstance(t, Lambda):
            delta = self.subst(t.subst)
            dom = fresh_tvar()
            inner = {**env, **delta, t.binder: dom}
            return Arrow(dom, self.term(inner, t.body))
        raise TypeError(f"not a term: {t!r}")


def infer_epcf(env: Optional[dict], t: Term) -> InferType:
    run = _EpcfInference()
    return run.state.zonk(run.term(dict(env or {}), t))


def infer_closure(c: Closure) -> InferType:
    return _EpcfInference().closure(c)


def check_subst(subst: Subst) -> dict:
    run = _EpcfInference()
    delta = run.subst(subst)
    return {v: run.state.zonk(ty) for v, ty in delta.items()}


def check_epcf(env: Optional[dict], t: Term, ty: SimpleType) -> bool:
    return matches(infer_epcf(env, t), ty)


# ---------------------------------------------------------------- PCF
# A second, independent implementation: collect equations, then solve.

def infer_pcf(env: Optional[dict], t: Term) -> InferType:
    equations: list = []
    root = fresh_tvar()
    todo = [(dict(env or {}), t, root)]
    while todo:
        scope, term, expected = todo.pop()
        if isinstance(term, Variable):
            if term.var not in scope:
                raise TypeCheckError(f"unbound variable {term.var.name}", term)
            equations.append((scope[term.var], expected, term))
        elif isinstance(term, Zero):
            equations.append((INT, expected, term))
        elif isinstance(term, (Pred, Succ)):
            equations.append((INT, expected, term))
            todo.append((scope, term.arg, INT))
        elif isinstance(term, Fix):
            todo.append((scope, term.arg, Arrow(expected, expected)))
        elif isinstance(term, Apply):
            arg = fresh_tvar()
            todo.append((scope, term.fun, Arrow(arg, expected)))
            todo.append((scope, term.arg, arg))
        elif isinstance(term, Ifz):
            todo.append((scope, term.test, INT))
            todo.append((scope, term.zero, expected))
            todo.append((scope, term.pos, expected))
        elif isinstance(term, Lambda):
            if term.subst:
                raise TypeCheckError("explicit substitution outside the PCF fragment", term)
            dom, cod = fresh_tvar(), fresh_tvar()
            equations.append((Arrow(dom, cod), expected, term))
            todo.append(({**scope, term.binder: dom}, term.body, cod))
        else:
            raise TypeError(f"not a term: {term!r}")
    state = Unifier()
    for left, right, where in equations:
        state.unify(left, right, where)
    return state.zonk(root)


def check_pcf(env: Optional[dict], t: Term, ty: SimpleType) -> bool:
    return matches(infer_pcf(env, t), ty)
