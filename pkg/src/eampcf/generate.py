"""Random well-typed PCF programs and random EPCF decompositions of them."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    INT,
    Apply,
    Arrow,
    Binding,
    Closure,
    Fix,
    Ifz,
    Lambda,
    Pred,
    SimpleType,
    Succ,
    Term,
    Variable,
    Zero,
    fresh_var,
    numeral_term,
)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 30
    fix_probability: float = 0.15
    target: SimpleType = INT
    # share of fixpoints left unrestricted instead of following the
    # terminating recursion template
    wild_fix_share: float = 0.05
    max_literal: int = 6

    def __post_init__(self):
        if self.max_size < 1:
            raise ValueError("max_size must be at least 1")
        if not 0 <= self.fix_probability <= 1:
            raise ValueError("fix_probability must lie in [0, 1]")


INT_TO_INT = Arrow(INT, INT)
_ARG_TYPES = [(INT, 12), (INT_TO_INT, 4), (Arrow(INT, INT_TO_INT), 1), (Arrow(INT_TO_INT, INT), 1)]
_NAMES = "abcdeghkmnpqrstuvwxyz"


def _result_chain(ty: SimpleType):
    """Argument types and final result of ``ty``: a -> b -> c gives ([a, b], c)."""
    args = []
    while isinstance(ty, Arrow):
        args.append(ty.domain)
        ty = ty.codomain
    return args, ty


class TermGenerator:
    """Goal-directed generation: each choice is an instance of a typing rule."""

    def __init__(self, rng: random.Random, cfg: GenConfig = GenConfig()):
        self.rng = rng
        self.cfg = cfg

    def var(self, hint: str = "x"):
        return fresh_var(self.rng.choice(_NAMES) if hint == "x" else hint)

    def split(self, size: int, parts: int) -> list[int]:
        """Share ``size`` among ``parts`` children, each at least 1."""
        if parts == 1:
            return [max(size, 1)]
        cuts = sorted(self.rng.randint(0, max(size - parts, 0)) for _ in range(parts - 1))
        bounds = [0, *cuts, max(size - parts, 0)]
        return [bounds[k + 1] - bounds[k] + 1 for k in range(parts)]

    def arg_type(self) -> SimpleType:
        types, weights = zip(*_ARG_TYPES)
        return self.rng.choices(types, weights)[0]

    def fallback(self, ctx: list, ty: SimpleType) -> Term:
        exact = [v for v, t in ctx if t == ty]
        if exact and self.rng.random() < 0.6:
            return Variable(self.rng.choice(exact))
        if isinstance(ty, Arrow):
            x = self.var()
            return Lambda(x, (), self.fallback(ctx + [(x, ty.domain)], ty.codomain))
        return numeral_term(self.rng.randint(0, self.cfg.max_literal))

    def term(self, ctx: list, ty: SimpleType, size: int) -> Term:
        if size <= 1:
            return self.fallback(ctx, ty)
        if isinstance(ty, Arrow):
            return self.arrow(ctx, ty, size)
        return self.integer(ctx, size)

    def callers(self, ctx: list, ty: SimpleType) -> list:
        """Variables whose type ends in ``ty`` after one or more arguments."""
        out = []
        for v, t in ctx:
            args, result = _result_chain(t)
            while args:
                if result == ty:
                    out.append((v, args))
                    break
                result = Arrow(args[-1], result)
                args = args[:-1]
        return out

    def call(self, ctx: list, ty: SimpleType, size: int) -> Optional[Term]:
        options = self.callers(ctx, ty)
        if not options:
            return None
        v, args = self.rng.choice(options)
        sizes = self.split(size - 1, len(args))
        term: Term = Variable(v)
        for arg_ty, s in zip(args, sizes):
            term = Apply(term, self.term(ctx, arg_ty, s))
        return term

    def redex(self, ctx: list, ty: SimpleType, size: int) -> Term:
        arg_ty = self.arg_type()
        x = self.var()
        body_size, arg_size = self.split(size - 2, 2)
        body = self.term(ctx + [(x, arg_ty)], ty, body_size)
        return Apply(Lambda(x, (), body), self.term(ctx, arg_ty, arg_size))

    def wild_fix(self, ctx: list, ty: SimpleType, size: int) -> Term:
        x = self.var("f")
        return Fix(Lambda(x, (), self.term(ctx + [(x, ty)], ty, size - 2)))

    def recursion(self, ctx: list, size: int) -> Term:
        """``fix (λf n. ifz n B ((λr. S) (f (pred n)))) A``: recursion on a counter."""
        f, n, r = self.var("f"), self.var("n"), self.var("r")
        base_size, step_size, arg_size = self.split(size - 8, 3)
        base = self.term(ctx + [(n, INT)], INT, base_size)
        scope = ctx + [(n, INT), (r, INT)]
        # most steps consume the recursive result so the recursion is forced
        pick = self.rng.randrange(6)
        rv = Variable(r)
        if pick == 0:
            step = Succ(rv)
        elif pick == 1:
            step = Succ(Succ(rv))
        elif pick == 2:
            step = Pred(rv)
        elif pick == 3:
            step = Ifz(rv, self.term(scope, INT, step_size), Succ(rv))
        else:
            step = self.term(scope, INT, step_size)
        recurse = Apply(Variable(f), Pred(Variable(n)))
        body = Ifz(Variable(n), base, Apply(Lambda(r, (), step), recurse))
        fun = Fix(Lambda(f, (), Lambda(n, (), body)))
        if self.rng.random() < 0.7 or arg_size <= 1:
            arg = numeral_term(self.rng.randint(0, self.cfg.max_literal))
        else:
            arg = self.term(ctx, INT, min(arg_size, 3))
        return Apply(fun, arg)

    def integer(self, ctx: list, size: int) -> Term:
        rng = self.rng
        fix_p = self.cfg.fix_probability
        if size >= 10 and rng.random() < fix_p:
            if rng.random() < self.cfg.wild_fix_share:
                return self.wild_fix(ctx, INT, size)
            return self.recursion(ctx, size)
        choices = ["literal", "succ", "pred", "ifz", "redex", "call"]
        weights = [1, 3, 2, 3, 3, 5]
        if any(t == INT for _, t in ctx):
            choices.append("var")
            weights.append(2)
        kind = rng.choices(choices, weights)[0]
        if kind == "literal":
            return numeral_term(rng.randint(0, self.cfg.max_literal))
        if kind == "var":
            return Variable(rng.choice([v for v, t in ctx if t == INT]))
        if kind == "succ":
            return Succ(self.term(ctx, INT, size - 1))
        if kind == "pred":
            return Pred(self.term(ctx, INT, size - 1))
        if kind == "ifz":
            if size < 4:
                return self.fallback(ctx, INT)
            a, b, c = self.split(size - 1, 3)
            return Ifz(self.term(ctx, INT, a), self.term(ctx, INT, b), self.term(ctx, INT, c))
        if kind == "call":
            made = self.call(ctx, INT, size)
            if made is not None:
                return made
        if size < 4:
            return self.fallback(ctx, INT)
        return self.redex(ctx, INT, size)

    def arrow(self, ctx: list, ty: Arrow, size: int) -> Term:
        rng = self.rng
        roll = rng.random()
        if roll < 0.1:
            made = self.call(ctx, ty, size)
            if made is not None:
                return made
        if roll < 0.2 and size >= 4:
            return self.redex(ctx, ty, size)
        if roll < 0.2 + self.cfg.fix_probability * self.cfg.wild_fix_share and size >= 4:
            return self.wild_fix(ctx, ty, size)
        x = self.var()
        return Lambda(x, (), self.term(ctx + [(x, ty.domain)], ty.codomain, size - 1))


def gen_typed_term(rng: random.Random, ctx: list, ty: SimpleType, size: int, cfg: GenConfig = GenConfig()) -> Term:
    """A PCF term of type ``ty`` whose free variables come from ``ctx`` (a list of (Var, type))."""
    return TermGenerator(rng, cfg).term(list(ctx), ty, size)


def gen_typed_program(cfg: GenConfig) -> Term:
    rng = random.Random(cfg.seed)
    return TermGenerator(rng, cfg).term([], cfg.target, cfg.max_size)


# ---------------------------------------------------------------- decompositions

def _closed_positions(t: Term, limit: int = 64) -> list:
    """Closed proper subterms of ``t`` (not under a binder of ``t`` itself is not required)."""
    out = []
    stack = [t]
    while stack and len(out) < limit:
        s = stack.pop()
        if s is not t and not s.fv and not isinstance(s, Zero):
            out.append(s)
        if isinstance(s, Apply):
            stack += (s.fun, s.arg)
        elif isinstance(s, Ifz):
            stack += (s.test, s.zero, s.pos)
        elif isinstance(s, Lambda):
            stack.append(s.body)
        elif isinstance(s, (Pred, Fix)) or (isinstance(s, Succ) and s.num is None):
            stack.append(s.arg)
    return out


def _replace(t: Term, target: Term, by: Term) -> Term:
    """Replace the occurrence ``target`` (by identity) inside ``t``."""
    if t is target:
        return by
    if isinstance(t, Apply):
        return Apply(_replace(t.fun, target, by), _replace(t.arg, target, by))
    if isinstance(t, Ifz):
        return Ifz(*(_replace(p, target, by) for p in (t.test, t.zero, t.pos)))
    if isinstance(t, Lambda):
        return Lambda(t.binder, t.subst, _replace(t.body, target, by))
    if isinstance(t, (Pred, Fix)) or (isinstance(t, Succ) and t.num is None):
        return type(t)(_replace(t.arg, target, by))
    return t


def decompose(t: Term, rng: random.Random, depth: int = 2, extractions: int = 2) -> Closure:
    """A random closure whose flattening is α-equal to ``t``.

    Closed subterms are pulled out into fresh substitution variables, either
    at the top or into the substitution of an enclosing abstraction; each
    extracted subterm is itself decomposed.
    """
    subst = []
    term = t
    for _ in range(rng.randint(0, extractions)):
        candidates = _closed_positions(term)
        if not candidates:
            break
        chosen = rng.choice(candidates)
        y = fresh_var(rng.choice("uvwyz"))
        inner = decompose(chosen, rng, depth - 1, extractions) if depth > 0 else Closure((), chosen)
        term = _replace(term, chosen, Variable(y))
        subst.append(Binding(y, inner))
    if depth > 0:
        term = _push_into_lambdas(term, rng, depth - 1, extractions)
    return Closure(tuple(subst), term)


def _push_into_lambdas(t: Term, rng: random.Random, depth: int, extractions: int) -> Term:
    if isinstance(t, Lambda):
        body = _push_into_lambdas(t.body, rng, depth, extractions)
        if rng.random() < 0.5:
            inner = decompose(body, rng, depth, extractions)
            return Lambda(t.binder, tuple(t.subst) + inner.subst, inner.term)
        return Lambda(t.binder, t.subst, body)
    if isinstance(t, Apply):
        return Apply(_push_into_lambdas(t.fun, rng, depth, extractions),
                     _push_into_lambdas(t.arg, rng, depth, extractions))
    if isinstance(t, Ifz):
        return Ifz(*(_push_into_lambdas(p, rng, depth, extractions) for p in (t.test, t.zero, t.pos)))
    if isinstance(t, (Pred, Fix)) or (isinstance(t, Succ) and t.num is None):
        return type(t)(_push_into_lambdas(t.arg, rng, depth, extractions))
    return t
