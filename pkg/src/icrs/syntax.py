"""Concrete syntax: signatures, the term parser and the printer.

Grammar::

    term  ::= "mu" NAME "." term          recursion
            | "[" NAME "]" term            abstraction
            | NAME [ "(" term {"," term} ")" ]
            | "(" term ")" | "⊤" | "_|_"

A bare name resolves to the innermost binder of that name, then to a
nullary symbol of the signature, then (in meta-terms, when capitalised) to
a nullary meta-variable, and otherwise to a named free variable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ArityError, NonRationalTerm, ParseError, TermError, UnguardedRecursion, UnknownSymbol
from .terms import (
    BOTTOM,
    RESERVED_SYMBOLS,
    TOP,
    Abs,
    FVar,
    Fun,
    Meta,
    Mu,
    MuVar,
    Term,
    Var,
    free_names,
    mu,
    symbols,
)


@dataclass(frozen=True)
class Signature:
    """Function symbols with fixed arities."""

    arities: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arities = dict(self.arities)
        for f, n in arities.items():
            if f in RESERVED_SYMBOLS:
                raise TermError(f"symbol {f!r} is reserved")
            if not isinstance(n, int) or n < 0:
                raise ArityError(f"bad arity for {f!r}: {n!r}")
        object.__setattr__(self, "arities", arities)

    @classmethod
    def parse(cls, text: str) -> Signature:
        """Read declarations such as ``"f/2 g/1 a/0"``."""
        arities: dict[str, int] = {}
        for decl in text.split():
            name, sep, arity = decl.rpartition("/")
            if not sep or not name or not arity.isdigit():
                raise ParseError(f"bad signature entry {decl!r}")
            if name in arities and arities[name] != int(arity):
                raise ArityError(f"symbol {name!r} declared twice with different arities")
            arities[name] = int(arity)
        return cls(arities)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.arities

    def arity(self, symbol: str) -> int:
        return self.arities[symbol]

    def extend(self, more: Mapping[str, int]) -> Signature:
        merged = dict(self.arities)
        merged.update(more)
        return Signature(merged)

    def __str__(self) -> str:
        return " ".join(f"{f}/{n}" for f, n in self.arities.items())


# ---------------------------------------------------------------------------
# tokens

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<bot>_\|_)
  | (?P<top>⊤)
  | (?P<arrow>->)
  | (?P<name>[A-Za-z0-9_][A-Za-z0-9_']*)
  | (?P<punct>[\[\](),.:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        assert kind is not None
        if kind == "nl":
            out.append(Token("nl", "\n", line, pos - start + 1))
            line, start = line + 1, m.end()
        elif kind != "ws":
            out.append(Token(kind if kind != "punct" else m.group(), m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


def _is_meta_name(name: str) -> bool:
    return name[:1].isupper()


class _Parser:
    def __init__(self, tokens: list[Token], signature: Signature, allow_meta: bool, metas: dict[str, int]):
        self.tokens = [t for t in tokens if t.kind != "nl"]
        self.i = 0
        self.signature = signature
        self.allow_meta = allow_meta
        self.metas = metas
        self.scope: list[tuple[str, str]] = []  # ("abs" | "mu", name), innermost last

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise ParseError(f"expected {kind!r} but found {shown!r}", tok.line, tok.column)
        return tok

    def fail(self, message: str, tok: Token, kind: type[TermError] = ParseError) -> TermError:
        if kind is ParseError:
            return ParseError(message, tok.line, tok.column)
        return kind(f"{tok.line}:{tok.column}: {message}")

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "name" and tok.text == "mu":
            self.next()
            name = self.expect("name").text
            self.expect(".")
            self.scope.append(("mu", name))
            try:
                body = self.term()
            finally:
                self.scope.pop()
            try:
                return mu(body, name)
            except UnguardedRecursion as exc:
                raise self.fail(f"unguarded recursion 'mu {name}': {exc}", tok, UnguardedRecursion) from None
            except NonRationalTerm as exc:
                raise self.fail(str(exc), tok, NonRationalTerm) from None
        if tok.kind == "[":
            self.next()
            name = self.expect("name").text
            self.expect("]")
            self.scope.append(("abs", name))
            try:
                body = self.term()
            finally:
                self.scope.pop()
            return Abs(body, name)
        if tok.kind == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        if tok.kind == "top":
            self.next()
            return Fun(TOP, ())
        if tok.kind == "bot":
            self.next()
            return Fun(BOTTOM, ())
        if tok.kind != "name":
            shown = tok.text or "end of input"
            raise ParseError(f"expected a term but found {shown!r}", tok.line, tok.column)
        self.next()
        name = tok.text
        if self.peek().kind == "(":
            self.next()
            args = [self.term()]
            while self.peek().kind == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
            return self.application(name, tuple(args), tok)
        return self.atom(name, tok)

    def application(self, name: str, args: tuple[Term, ...], tok: Token) -> Term:
        if any(n == name for _, n in self.scope):
            raise self.fail(f"bound variable {name!r} cannot be applied", tok)
        if name in self.signature:
            if self.signature.arity(name) != len(args):
                raise self.fail(
                    f"symbol {name!r} expects {self.signature.arity(name)} arguments, got {len(args)}", tok, ArityError
                )
            return Fun(name, args)
        if self.allow_meta and _is_meta_name(name):
            return self.meta(name, args, tok)
        raise self.fail(f"unknown function symbol {name!r}", tok, UnknownSymbol)

    def meta(self, name: str, args: tuple[Term, ...], tok: Token) -> Term:
        known = self.metas.setdefault(name, len(args))
        if known != len(args):
            raise self.fail(f"meta-variable {name!r} used with arities {known} and {len(args)}", tok, ArityError)
        return Meta(name, args)

    def atom(self, name: str, tok: Token) -> Term:
        abs_seen = mu_seen = 0
        for kind, bound in reversed(self.scope):
            if bound == name:
                return Var(abs_seen) if kind == "abs" else MuVar(mu_seen)
            if kind == "abs":
                abs_seen += 1
            else:
                mu_seen += 1
        if name in self.signature:
            if self.signature.arity(name) != 0:
                raise self.fail(f"symbol {name!r} expects {self.signature.arity(name)} arguments", tok, ArityError)
            return Fun(name, ())
        if self.allow_meta and _is_meta_name(name):
            return self.meta(name, (), tok)
        if name == "mu":
            raise self.fail("'mu' is a keyword", tok)
        return FVar(name)


def _parse(text: str, signature: Signature, allow_meta: bool, metas: dict[str, int]) -> Term:
    p = _Parser(tokenize(text), signature, allow_meta, metas)
    t = p.term()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected {tok.text!r} after the term", tok.line, tok.column)
    return t


def parse_term(text: str, signature: Signature) -> Term:
    """Parse a (possibly rational) term; capitalised names are free variables here."""
    return _parse(text, signature, False, {})


def parse_meta_term(text: str, signature: Signature, metas: dict[str, int] | None = None) -> Term:
    """Parse a meta-term.  ``metas`` collects meta-variable arities and is checked for consistency."""
    return _parse(text, signature, True, {} if metas is None else metas)


# ---------------------------------------------------------------------------
# printing


def _names_of_binders(kind: str) -> Iterator[str]:
    base = "abcdefgh" if kind == "mu" else "xyzuvw"
    yield from base
    n = 1
    while True:
        for c in base:
            yield f"{c}{n}"
        n += 1


def _loose_indices(t: Term, kind: str) -> set[int]:
    """Loose abstraction (``kind="abs"``) or recursion indices of ``t``."""
    out: set[int] = set()

    def go(u: Term, k: int, j: int) -> None:
        if kind == "abs" and u.free_abs <= k:
            return
        if kind == "mu" and not any(i >= j for i in u.free_mu):
            return
        match u:
            case Var(i) if kind == "abs":
                out.add(i - k)
            case MuVar(i) if kind == "mu":
                out.add(i - j)
            case Abs(b):
                go(b, k + 1, j)
            case Mu(b):
                go(b, k, j + 1)
            case Fun(_, args) | Meta(_, args):
                for a in args:
                    go(a, k, j)

    go(t, 0, 0)
    return out


def show(
    t: Term,
    reserved: Iterable[str] = (),
    context: Iterable[str] = (),
    ascii_only: bool = False,
) -> str:
    """Print ``t`` in the syntax accepted by :func:`parse_term`.

    ``reserved`` names are avoided for binders (pass the signature's symbols
    so that the output parses back to the same term).  ``context`` names the
    loose indices, outermost first; unnamed loose indices print as ``_k``.
    """
    avoid = set(reserved) | free_names(t) | symbols(t) | {"mu"}
    ctx = list(context)
    avoid |= set(ctx)
    out: list[str] = []
    top = "T" if ascii_only else TOP

    def pick(hint: str, kind: str, body: Term, absn: list[str], mun: list[str]) -> str:
        # a name may shadow an enclosing binder that the body never refers to
        own = 1 if kind == "abs" else 0
        used_abs = _loose_indices(body, "abs")
        used_mu = _loose_indices(body, "mu")
        own_mu = 1 if kind == "mu" else 0
        blocked = {absn[-1 - (i - own)] for i in used_abs if own <= i < own + len(absn)}
        blocked |= {mun[-1 - (i - own_mu)] for i in used_mu if own_mu <= i < own_mu + len(mun)}
        blocked |= {ctx[-1 - (i - own - len(absn))] for i in used_abs if 0 <= i - own - len(absn) < len(ctx)}
        if hint and hint not in avoid and hint not in blocked:
            return hint
        for cand in _names_of_binders(kind):
            if cand not in avoid and cand not in blocked:
                return cand
        raise AssertionError("unreachable")

    def go(t: Term, absn: list[str], mun: list[str]) -> None:
        match t:
            case Var(i):
                if i < len(absn):
                    out.append(absn[-1 - i])
                else:
                    k = i - len(absn)
                    out.append(ctx[-1 - k] if k < len(ctx) else f"_{k}")
            case FVar(n):
                out.append(n)
            case MuVar(k):
                out.append(mun[-1 - k] if k < len(mun) else f"_mu{k}")
            case Abs(body, name):
                v = pick(name, "abs", body, absn, mun)
                out.append(f"[{v}] ")
                go(body, absn + [v], mun)
            case Mu(body, name):
                v = pick(name, "mu", body, absn, mun)
                out.append(f"mu {v}. ")
                go(body, absn, mun + [v])
            case Fun(f, args) | Meta(f, args):
                if f == TOP:
                    out.append(top)
                elif f == BOTTOM:
                    out.append("_|_")
                else:
                    out.append(f)
                if args:
                    out.append("(")
                    for j, a in enumerate(args):
                        if j:
                            out.append(", ")
                        go(a, absn, mun)
                    out.append(")")

    go(t, [], [])
    return "".join(out)


def show_position(p: Iterable[int]) -> str:
    p = tuple(p)
    return "ε" if not p else ".".join(map(str, p))


def parse_position(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "ε", "eps", "e"):
        return ()
    try:
        return tuple(int(x) for x in text.replace(",", ".").split("."))
    except ValueError:
        raise ParseError(f"bad position {text!r}") from None
