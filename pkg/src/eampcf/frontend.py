"""Concrete syntax for terms and types.

Grammar::

    term    ::= lam | app
    lam     ::= ("\\" | "λ") IDENT+ subst? "." term
    subst   ::= "{" [binding ("," binding)*] "}"
    binding ::= IDENT "<-" "(" subst "," term ")"
    app     ::= prefix prefix*
    prefix  ::= ("pred"|"succ"|"fix") atom | "ifz" atom atom atom | atom
    atom    ::= IDENT | NAT | "(" term ")"

``--`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    INT,
    Apply,
    Arrow,
    Binding,
    Closure,
    Fix,
    Ifz,
    Int,
    Lambda,
    Pred,
    SimpleType,
    Succ,
    Term,
    Variable,
    Zero,
    closure_dangling,
    dangling_vars,
    free_var,
    fresh_var,
    numeral_term,
)

KEYWORDS = frozenset({"pred", "succ", "fix", "ifz"})


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


@dataclass
class ParseError(Exception):
    span: SourceSpan
    message: str
    expected: list = field(default_factory=list)

    def __str__(self) -> str:
        text = f"{self.span.start}-{self.span.end}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<nat>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym><-|->|[\\λ.{},()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "nat", "ident", "kw", "sym", "eof"
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    # byte offsets: track the encoded length of what has been consumed
    tokens = []
    pos = 0
    byte = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            end = byte + len(text[pos].encode())
            raise ParseError(SourceSpan(byte, end), f"unexpected character {text[pos]!r}")
        lexeme = m.group()
        width = len(lexeme.encode())
        kind = m.lastgroup
        if kind != "ws":
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, lexeme, byte, byte + width))
        pos = m.end()
        byte += width
    tokens.append(Token("eof", "", byte, byte))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, message: str, expected=()):
        t = self.tok
        raise ParseError(SourceSpan(t.start, t.end), message, list(expected))

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("sym", "kw"):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.tok
        if not self.accept(text):
            found = t.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}", [text])
        return t

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident":
            found = t.text or "end of input"
            self.fail(f"expected identifier, found {found!r}", ["IDENT"])
        self.pos += 1
        return t

    def at_atom_start(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "nat") or (t.kind == "sym" and t.text == "(")

    def at_prefix_start(self) -> bool:
        return self.at_atom_start() or self.tok.kind == "kw"

    # -- terms; scope maps display names to Vars
    def term(self, scope: dict) -> Term:
        if self.tok.kind == "sym" and self.tok.text in ("\\", "λ"):
            return self.lam(scope)
        return self.app(scope)

    def lam(self, scope: dict) -> Term:
        self.pos += 1
        names = [self.ident()]
        while self.tok.kind == "ident":
            names.append(self.ident())
        subst = ()
        if self.tok.kind == "sym" and self.tok.text == "{":
            subst = self.subst()
        self.expect(".")
        binders = [fresh_var(t.text) for t in names]
        inner = dict(scope)
        for b in binders[:-1]:
            inner[b.name] = b
        for b in subst:
            inner[b.var.name] = b.var
        inner[binders[-1].name] = binders[-1]
        body = self.term(inner)
        result: Term = Lambda(binders[-1], subst, body)
        for b in reversed(binders[:-1]):
            result = Lambda(b, (), result)
        return result

    def subst(self) -> tuple:
        self.expect("{")
        out: list[Binding] = []
        seen: dict[str, Token] = {}
        if not self.accept("}"):
            while True:
                name = self.ident()
                if name.text in seen:
                    raise ParseError(
                        SourceSpan(name.start, name.end),
                        f"duplicate substitution variable {name.text!r}",
                    )
                seen[name.text] = name
                self.expect("<-")
                self.expect("(")
                inner = self.subst()
                self.expect(",")
                scope = {b.var.name: b.var for b in inner}
                body = self.term(scope)
                self.expect(")")
                out.append(Binding(fresh_var(name.text), Closure(inner, body)))
                if self.accept("}"):
                    break
                if not self.accept(","):
                    self.fail("expected ',' or '}' in substitution", [",", "}"])
        return tuple(out)

    def app(self, scope: dict) -> Term:
        if not self.at_prefix_start():
            found = self.tok.text or "end of input"
            self.fail(f"expected a term, found {found!r}", ["IDENT", "NAT", "(", "\\", "pred", "succ", "fix", "ifz"])
        head = self.prefix(scope)
        while self.at_prefix_start():
            head = Apply(head, self.prefix(scope))
        return head

    def prefix(self, scope: dict) -> Term:
        t = self.tok
        if t.kind == "kw":
            self.pos += 1
            if t.text == "pred":
                return Pred(self.atom(scope))
            if t.text == "succ":
                return Succ(self.atom(scope))
            if t.text == "fix":
                return Fix(self.atom(scope))
            return Ifz(self.atom(scope), self.atom(scope), self.atom(scope))
        return self.atom(scope)

    def atom(self, scope: dict) -> Term:
        t = self.tok
        if t.kind == "nat":
            self.pos += 1
            return numeral_term(int(t.text))
        if t.kind == "ident":
            self.pos += 1
            v = scope.get(t.text)
            return Variable(v if v is not None else free_var(t.text))
        if self.accept("("):
            inner = self.term(scope)
            self.expect(")")
            return inner
        found = t.text or "end of input"
        self.fail(f"expected an atom, found {found!r}", ["IDENT", "NAT", "("])

    def finish(self):
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r} after term", ["end of input"])

    # -- types
    def type_(self) -> SimpleType:
        dom = self.type_atom()
        if self.accept("->"):
            return Arrow(dom, self.type_())
        return dom

    def type_atom(self) -> SimpleType:
        if self.tok.kind == "ident" and self.tok.text == "int":
            self.pos += 1
            return INT
        if self.accept("("):
            inner = self.type_()
            self.expect(")")
            return inner
        found = self.tok.text or "end of input"
        self.fail(f"expected a type, found {found!r}", ["int", "("])


def parse_term(text: str, closed: bool = False) -> Term:
    p = _Parser(text)
    t = p.term({})
    p.finish()
    if closed:
        open_vars = dangling_vars(t)
        if open_vars:
            names = ", ".join(sorted(v.name for v in open_vars))
            raise ParseError(SourceSpan(0, len(text.encode())), f"unbound variables: {names}")
    return t


def parse_closure(text: str, closed: bool = False) -> Closure:
    """Parse ``(S, M)`` where S is a substitution literal, or a bare term."""
    p = _Parser(text)
    if p.tok.text == "(" and p.tokens[p.pos + 1].text == "{":
        p.expect("(")
        subst = p.subst()
        p.expect(",")
        body = p.term({b.var.name: b.var for b in subst})
        p.expect(")")
        p.finish()
        c = Closure(subst, body)
    else:
        t = p.term({})
        p.finish()
        c = Closure((), t)
    if closed and closure_dangling(c):
        raise ParseError(SourceSpan(0, len(text.encode())), "closure is not closed")
    return c


def parse_type(text: str) -> SimpleType:
    p = _Parser(text)
    ty = p.type_()
    p.finish()
    return ty


def print_type(ty: SimpleType) -> str:
    return str(ty)


# ---------------------------------------------------------------- printing

class _Printer:
    def __init__(self, root):
        self.avoid = {v.name for v in dangling_vars(root)} if root is not None else set()

    def pick(self, var, names: dict) -> str:
        taken = self.avoid | set(names.values())
        name = var.name
        while name in taken or name in KEYWORDS:
            name += "'"
        return name

    def term(self, t: Term, names: dict) -> str:
        if isinstance(t, Lambda):
            return self.lam(t, names)
        return self.app(t, names)

    def lam(self, t: Lambda, names: dict) -> str:
        binders = []
        names = dict(names)
        while True:
            if t.subst:
                subst_text, names = self.subst_binding(t.subst, names)
            else:
                subst_text = ""
            name = self.pick(t.binder, names)
            names[t.binder] = name
            binders.append(name)
            if subst_text or not (isinstance(t.body, Lambda)):
                break
            t = t.body
        head = "\\" + " ".join(binders)
        return f"{head}{subst_text}. {self.term(t.body, names)}"

    def subst_binding(self, subst, names: dict):
        parts = []
        names = dict(names)
        chosen = []
        for b in subst:
            name = self.pick(b.var, names)
            names[b.var] = name
            chosen.append(name)
        for name, b in zip(chosen, subst):
            parts.append(f"{name} <- {self.closure(b.closure)}")
        return " { " + ", ".join(parts) + " }", names

    def closure(self, c: Closure) -> str:
        names: dict = {}
        chosen = []
        for b in c.subst:
            name = self.pick(b.var, names)
            names[b.var] = name
            chosen.append(name)
        inner = ", ".join(f"{n} <- {self.closure(b.closure)}" for n, b in zip(chosen, c.subst))
        return f"({{{inner}}}, {self.term(c.term, names)})" if inner else f"({{}}, {self.term(c.term, names)})"

    def app(self, t: Term, names: dict) -> str:
        if isinstance(t, Apply):
            spine = []
            while isinstance(t, Apply):
                spine.append(t.arg)
                t = t.fun
            head = self.prefix(t, names)
            args = [self.atom(a, names) for a in reversed(spine)]
            return " ".join([head, *args])
        return self.prefix(t, names)

    def prefix(self, t: Term, names: dict) -> str:
        if isinstance(t, Succ) and t.num is not None:
            return str(t.num)
        if isinstance(t, Pred):
            return f"pred {self.atom(t.arg, names)}"
        if isinstance(t, Succ):
            return f"succ {self.atom(t.arg, names)}"
        if isinstance(t, Fix):
            return f"fix {self.atom(t.arg, names)}"
        if isinstance(t, Ifz):
            parts = (self.atom(p, names) for p in (t.test, t.zero, t.pos))
            return "ifz " + " ".join(parts)
        return self.atom(t, names)

    def atom(self, t: Term, names: dict) -> str:
        if isinstance(t, Zero):
            return "0"
        if isinstance(t, Succ) and t.num is not None:
            return str(t.num)
        if isinstance(t, Variable):
            return names.get(t.var, t.var.name)
        return f"({self.term(t, names)})"


def print_term(t: Term) -> str:
    return _Printer(t).term(t, {})


def print_closure(c: Closure) -> str:
    printer = _Printer(None)
    printer.avoid = {v.name for v in closure_dangling(c)}
    return printer.closure(c)
