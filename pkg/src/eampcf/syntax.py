"""Abstract syntax for PCF and its explicit-substitution extension EPCF.

Terms are immutable.  Every binder carries a :class:`Var` whose ``uid`` is
its identity; display names are cosmetic.  Free variables, sizes and
numeral spines are computed once, bottom-up, when a node is built, so the
evaluators never recurse to recover them.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Union

_uids = itertools.count()
_free_lock = threading.Lock()
_free_registry: dict[str, "Var"] = {}


@dataclass(frozen=True)
class Var:
    name: str = field(compare=False)
    uid: int

    def __repr__(self) -> str:
        return f"{self.name}#{self.uid}"


def fresh_var(name: str) -> Var:
    return Var(name, next(_uids))


def refresh(var: Var) -> Var:
    """A new binder with the same display name."""
    return Var(var.name, next(_uids))


def free_var(name: str) -> Var:
    """The process-wide variable standing for a free occurrence of ``name``.

    Free identifiers are identified by name, so two parses of ``succ z``
    mention the same ``z``.
    """
    with _free_lock:
        var = _free_registry.get(name)
        if var is None:
            var = _free_registry[name] = fresh_var(name)
        return var


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class Int:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class Arrow:
    domain: "SimpleType"
    codomain: "SimpleType"

    def __str__(self) -> str:
        dom = str(self.domain)
        if isinstance(self.domain, Arrow):
            dom = f"({dom})"
        return f"{dom} -> {self.codomain}"


SimpleType = Union[Int, Arrow]
INT = Int()


def arrows(*types: SimpleType) -> SimpleType:
    """``arrows(a, b, c)`` is ``a -> b -> c``."""
    result = types[-1]
    for ty in reversed(types[:-1]):
        result = Arrow(ty, result)
    return result


# ---------------------------------------------------------------- terms

_EMPTY: frozenset = frozenset()


@dataclass(frozen=True)
class Variable:
    var: Var
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset((self.var,)))
        object.__setattr__(self, "size", 1)


@dataclass(frozen=True)
class Apply:
    fun: "Term"
    arg: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.fun.fv | self.arg.fv)
        object.__setattr__(self, "size", self.fun.size + self.arg.size + 1)


class Binding(NamedTuple):
    var: Var
    closure: "Closure"


Subst = tuple  # tuple[Binding, ...]


class Closure(NamedTuple):
    subst: Subst
    term: "Term"

    @property
    def size(self) -> int:
        return subst_size(self.subst) + self.term.size


def subst_size(subst: Subst) -> int:
    return sum(b.closure.size for b in subst)


def subst_domain(subst: Subst) -> list[Var]:
    return [b.var for b in subst]


def subst_lookup(subst: Subst, var: Var) -> Optional[Closure]:
    for b in reversed(subst):
        if b.var == var:
            return b.closure
    return None


def concat(sigma: Subst, rho: Subst) -> Subst:
    """``sigma + rho``; domains must be disjoint."""
    if sigma and rho:
        dom = {b.var for b in sigma}
        for b in rho:
            if b.var in dom:
                raise ValueError(f"substitution domains overlap on {b.var!r}")
    return tuple(sigma) + tuple(rho)


@dataclass(frozen=True)
class Lambda:
    binder: Var
    subst: Subst
    body: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fv = self.body.fv
        if self.binder in fv or self.subst:
            fv = fv - {self.binder, *(b.var for b in self.subst)}
        object.__setattr__(self, "fv", fv)

    @cached_property
    def size(self) -> int:
        return subst_size(self.subst) + self.body.size + 1


Abstraction = Lambda


@dataclass(frozen=True)
class Zero:
    fv: frozenset = field(default=_EMPTY, init=False, repr=False, compare=False)
    size: int = field(default=1, init=False, repr=False, compare=False)
    num: int = field(default=0, init=False, repr=False, compare=False)


@dataclass(frozen=True)
class Pred:
    arg: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.arg.fv)
        object.__setattr__(self, "size", self.arg.size + 1)


@dataclass(frozen=True)
class Succ:
    arg: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)
    # length of the succ spine when it ends in Zero, else None
    num: Optional[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.arg.fv)
        object.__setattr__(self, "size", self.arg.size + 1)
        inner = getattr(self.arg, "num", None) if isinstance(self.arg, (Zero, Succ)) else None
        object.__setattr__(self, "num", None if inner is None else inner + 1)


@dataclass(frozen=True)
class Ifz:
    test: "Term"
    zero: "Term"
    pos: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.test.fv | self.zero.fv | self.pos.fv)
        object.__setattr__(self, "size", self.test.size + self.zero.size + self.pos.size + 1)


@dataclass(frozen=True)
class Fix:
    arg: "Term"
    fv: frozenset = field(init=False, repr=False, compare=False)
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.arg.fv)
        object.__setattr__(self, "size", self.arg.size + 1)


Term = Union[Variable, Apply, Lambda, Zero, Pred, Succ, Ifz, Fix]

ZERO = Zero()


class Numeral(NamedTuple):
    n: int

    def __str__(self) -> str:
        return str(self.n)


EValue = Union[Numeral, Lambda]


def numeral_term(n: int) -> Term:
    term: Term = ZERO
    for _ in range(n):
        term = Succ(term)
    return term


def value_term(value: EValue) -> Term:
    return numeral_term(value.n) if isinstance(value, Numeral) else value


def lam(binder: Var, body: Term, subst: Subst = ()) -> Lambda:
    return Lambda(binder, tuple(subst), body)


def var(v: Var) -> Variable:
    return Variable(v)


def apps(head: Term, *args: Term) -> Term:
    for a in args:
        head = Apply(head, a)
    return head


# ---------------------------------------------------------------- queries

def size(item) -> int:
    """Size of a term, substitution or closure."""
    if isinstance(item, Closure):
        return item.size
    if isinstance(item, tuple):
        return subst_size(item)
    return item.size


def free_vars(t: Term) -> frozenset:
    return t.fv


def numeral_of(t: Term) -> Optional[int]:
    if isinstance(t, (Zero, Succ)):
        return t.num
    return None


def is_pcf(t: Term) -> bool:
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Lambda):
            if t.subst:
                return False
            stack.append(t.body)
        elif isinstance(t, Apply):
            stack += (t.fun, t.arg)
        elif isinstance(t, Ifz):
            stack += (t.test, t.zero, t.pos)
        elif isinstance(t, (Pred, Succ, Fix)):
            if isinstance(t, Succ) and t.num is not None:
                continue
            stack.append(t.arg)
    return True


def dangling_vars(t: Term) -> set:
    """Free variables including those left open inside substitution closures."""
    out = set(t.fv)
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Lambda):
            for b in t.subst:
                c = b.closure
                out |= set(closure_dangling(c))
            stack.append(t.body)
        elif isinstance(t, Apply):
            stack += (t.fun, t.arg)
        elif isinstance(t, Ifz):
            stack += (t.test, t.zero, t.pos)
        elif isinstance(t, (Pred, Succ, Fix)):
            stack.append(t.arg)
    return out


def closure_dangling(c: Closure) -> set:
    inner = set()
    for b in c.subst:
        inner |= closure_dangling(b.closure)
    return inner | (dangling_vars(c.term) - set(subst_domain(c.subst)))


# ---------------------------------------------------------------- alpha equivalence

def alpha_eq(a: Term, b: Term) -> bool:
    """Equality up to consistent renaming of binders and substitution domains."""
    return _alpha(a, b, {}, {}, 0)


def _alpha_subst(s1: Subst, s2: Subst, e1: dict, e2: dict, depth: int):
    if len(s1) != len(s2):
        return None
    for b1, b2 in zip(s1, s2):
        if not _alpha_closure(b1.closure, b2.closure, e1, e2, depth):
            return None
    e1, e2 = dict(e1), dict(e2)
    for b1, b2 in zip(s1, s2):
        e1[b1.var] = depth
        e2[b2.var] = depth
        depth += 1
    return e1, e2, depth


def _alpha_closure(c1: Closure, c2: Closure, e1: dict, e2: dict, depth: int) -> bool:
    scoped = _alpha_subst(c1.subst, c2.subst, e1, e2, depth)
    if scoped is None:
        return False
    return _alpha(c1.term, c2.term, *scoped)


def _alpha(a: Term, b: Term, e1: dict, e2: dict, depth: int) -> bool:
    while True:
        if a is b and not e1 and not e2:
            return True
        if type(a) is not type(b):
            return False
        if isinstance(a, Variable):
            la, lb = e1.get(a.var), e2.get(b.var)
            if la is None and lb is None:
                return a.var == b.var
            return la == lb
        if isinstance(a, Zero):
            return True
        if isinstance(a, Succ) and a.num is not None:
            return a.num == b.num
        if isinstance(a, (Pred, Succ, Fix)):
            a, b = a.arg, b.arg
            continue
        if isinstance(a, Apply):
            if not _alpha(a.fun, b.fun, e1, e2, depth):
                return False
            a, b = a.arg, b.arg
            continue
        if isinstance(a, Ifz):
            if not (_alpha(a.test, b.test, e1, e2, depth) and _alpha(a.zero, b.zero, e1, e2, depth)):
                return False
            a, b = a.pos, b.pos
            continue
        if isinstance(a, Lambda):
            scoped = _alpha_subst(a.subst, b.subst, e1, e2, depth)
            if scoped is None:
                return False
            e1, e2, depth = scoped
            e1 = {**e1, a.binder: depth}
            e2 = {**e2, b.binder: depth}
            depth += 1
            a, b = a.body, b.body
            continue
        raise TypeError(f"not a term: {a!r}")


# ---------------------------------------------------------------- substitution

def rebuild(t: Term, children: list) -> Term:
    if isinstance(t, Apply):
        return Apply(children[0], children[1])
    if isinstance(t, Ifz):
        return Ifz(children[0], children[1], children[2])
    return type(t)(children[0])


def substitute(body: Term, x: Var, arg: Term) -> Term:
    """Capture-avoiding ``body[x := arg]``.

    Only subterms with ``x`` free are rebuilt; shared subterms are visited
    once.  A binder whose uid occurs free in ``arg`` is renamed first.
    """
    memo: dict[int, Term] = {}

    def go(t: Term) -> Term:
        if x not in t.fv:
            return t
        key = id(t)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(t, Variable):
            out = arg
        elif isinstance(t, Lambda):
            binder, inner = t.binder, t.body
            if binder in arg.fv:
                new = refresh(binder)
                inner = substitute(inner, binder, Variable(new))
                binder = new
            out = Lambda(binder, t.subst, go(inner))
        elif isinstance(t, Apply):
            out = Apply(go(t.fun), go(t.arg))
        elif isinstance(t, Ifz):
            out = Ifz(go(t.test), go(t.zero), go(t.pos))
        else:
            out = type(t)(go(t.arg))
        memo[key] = out
        return out

    return go(body)


def rename_free(t: Term, mapping: dict) -> Term:
    """Rename free occurrences according to ``mapping`` (Var -> Var)."""
    for old, new in mapping.items():
        t = substitute(t, old, Variable(new))
    return t


# ---------------------------------------------------------------- flattening

def flatten(c: Closure) -> Term:
    """The PCF term obtained by carrying out every explicit substitution."""
    memo: dict[int, Term] = {}

    def close(cl: Closure) -> Term:
        key = id(cl)
        hit = memo.get(key)
        if hit is None:
            hit = memo[key] = go(cl.subst, cl.term)
        return hit

    def go(sigma: Subst, t: Term) -> Term:
        if isinstance(t, Variable):
            c = subst_lookup(sigma, t.var)
            return t if c is None else close(c)
        if isinstance(t, Lambda):
            return Lambda(t.binder, (), go(tuple(sigma) + tuple(t.subst), t.body))
        if isinstance(t, Zero) or (isinstance(t, Succ) and t.num is not None):
            return t
        if isinstance(t, Apply):
            return Apply(go(sigma, t.fun), go(sigma, t.arg))
        if isinstance(t, Ifz):
            return Ifz(go(sigma, t.test), go(sigma, t.zero), go(sigma, t.pos))
        return type(t)(go(sigma, t.arg))

    return go(c.subst, c.term)


def in_dagger(c: Closure, p: Term) -> bool:
    return alpha_eq(flatten(c), p)
