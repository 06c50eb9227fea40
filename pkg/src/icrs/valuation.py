"""Substitutes, valuations and their application to meta-terms.

A substitute ``λ̲x1..xn.s`` is stored as its body with the parameters as the
innermost loose indices: parameter ``i`` (counted from 0) is ``Var(n-1-i)``,
exactly as if the body sat under ``n`` abstractions.  Loose indices beyond
the parameters belong to the context the substitute came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import FiniteChainsViolation, SubstitutionError, UnassignedMetaVariable
from .terms import (
    Abs,
    FVar,
    Fun,
    Meta,
    Mu,
    Term,
    Var,
    find_meta_chains,
    mu,
    shift,
    shift_mu,
)


@dataclass(frozen=True, slots=True)
class Substitute:
    arity: int
    body: Term

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise ValueError("negative arity")

    def __call__(self, *args: Term) -> Term:
        return apply_substitute(self, args)


def instantiate(body: Term, args: Sequence[Term], outer_shift: int = 0) -> Term:
    """Replace the parameters of ``body`` by ``args``.

    ``args`` live in the context where the substitute is used; that context
    has ``outer_shift`` more abstractions than the one the substitute's own
    loose indices refer to.
    """
    n = len(args)
    if n == 0 and outer_shift == 0:
        return body

    def go(t: Term, k: int, j: int) -> Term:
        if t.free_abs <= k:
            return t
        match t:
            case Var(i):
                m = i - k
                if m < n:
                    return shift_mu(shift(args[n - 1 - m], k), j)
                return Var(m - n + outer_shift + k)
            case Abs(b, name):
                return Abs(go(b, k + 1, j), name)
            case Fun(f, xs):
                return Fun(f, tuple(go(x, k, j) for x in xs))
            case Meta(z, xs):
                return Meta(z, tuple(go(x, k, j) for x in xs))
            case Mu(b, name):
                return mu(go(b, k, j + 1), name)
        return t

    return go(body, 0, 0)


def apply_substitute(sub: Substitute, args: Sequence[Term]) -> Term:
    """Parallel replacement of the parameters by ``args``."""
    if len(args) != sub.arity:
        raise SubstitutionError(f"substitute of arity {sub.arity} applied to {len(args)} arguments")
    return instantiate(sub.body, tuple(args))


def substitute(s: Term, names: Sequence[str], terms: Sequence[Term]) -> Term:
    """Simultaneous replacement of the named free variables ``names`` by ``terms``."""
    if len(names) != len(terms):
        raise SubstitutionError("variables and terms differ in number")
    if len(set(names)) != len(names):
        raise SubstitutionError("substituted variables must be distinct")
    table = dict(zip(names, terms))

    def go(t: Term, k: int, j: int) -> Term:
        if not t.has_fvar:
            return t
        match t:
            case FVar(n):
                new = table.get(n)
                return t if new is None else shift_mu(shift(new, k), j)
            case Abs(b, name):
                return Abs(go(b, k + 1, j), name)
            case Fun(f, xs):
                return Fun(f, tuple(go(x, k, j) for x in xs))
            case Meta(z, xs):
                return Meta(z, tuple(go(x, k, j) for x in xs))
            case Mu(b, name):
                return mu(go(b, k, j + 1), name)
        return t

    return go(s, 0, 0)


@dataclass(frozen=True)
class Valuation(Mapping[str, Substitute]):
    """Assignment of substitutes to meta-variables."""

    assignment: Mapping[str, Substitute] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))

    def __getitem__(self, name: str) -> Substitute:
        return self.assignment[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.assignment)

    def __len__(self) -> int:
        return len(self.assignment)

    def __hash__(self) -> int:
        return hash(frozenset(self.assignment.items()))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Valuation):
            return self.assignment == other.assignment
        return NotImplemented

    def extended(self, name: str, sub: Substitute) -> Valuation:
        d = dict(self.assignment)
        d[name] = sub
        return Valuation(d)


def _rebuild_metas(v: Mapping[str, Substitute], s: Term, partial: bool) -> Term:
    def go(t: Term, d: int) -> Term:
        if not t.has_meta:
            return t
        match t:
            case Meta(z, args):
                sub = v.get(z)
                new_args = tuple(go(a, d) for a in args)
                if sub is None:
                    if partial:
                        return Meta(z, new_args)
                    raise UnassignedMetaVariable(f"meta-variable {z!r} has no substitute")
                if sub.arity != len(args):
                    raise SubstitutionError(f"meta-variable {z!r} has arity {len(args)} but its substitute {sub.arity}")
                return instantiate(sub.body, new_args, d)
            case Abs(b, name):
                return Abs(go(b, d + 1), name)
            case Fun(f, args):
                return Fun(f, tuple(go(a, d) for a in args))
            case Mu(b, name):
                return mu(go(b, d), name)
        return t

    return go(s, 0)


def apply_valuation(v: Mapping[str, Substitute], s: Term) -> Term:
    """Instantiate every meta-variable of ``s``.

    Recursion binders of ``s`` are kept, which amounts to solving the finite
    system of equations behind a rational meta-term.  A meta-term with an
    infinite chain of meta-variables has no well-defined instance and is
    rejected.
    """
    if not s.has_meta:
        return s
    bad = [c for c in find_meta_chains(s) if c.infinite]
    if bad:
        raise FiniteChainsViolation(f"infinite chain of meta-variables starting at {list(bad[0].start)}")
    return _rebuild_metas(v, s, partial=False)


def apply_partially(v: Mapping[str, Substitute], s: Term) -> Term:
    """Like :func:`apply_valuation` but leaves unassigned meta-variables in place."""
    if not s.has_meta:
        return s
    return _rebuild_metas(v, s, partial=True)


def abstract_pattern_args(t: Term, params: Sequence[int], local: int) -> Term | None:
    """Turn ``t`` into a substitute body over the pattern variables ``params``.

    ``t`` sits below ``local`` abstractions of a pattern; ``params`` lists the
    pattern-bound indices (relative to that point) given to a meta-variable.
    Indices beyond ``local`` belong to the outer context and stay loose.
    Returns ``None`` when ``t`` mentions a pattern-bound variable that is not
    a parameter.
    """
    n = len(params)
    where = {v: j for j, v in enumerate(params)}

    class _Reject(Exception):
        pass

    def go(u: Term, e: int) -> Term:
        if u.free_abs <= e:
            return u
        match u:
            case Var(i):
                m = i - e
                if m < local:
                    j = where.get(m)
                    if j is None:
                        raise _Reject
                    return Var(e + n - 1 - j)
                return Var(i - local + n)
            case Abs(b, name):
                return Abs(go(b, e + 1), name)
            case Fun(f, xs):
                return Fun(f, tuple(go(x, e) for x in xs))
            case Meta(z, xs):
                return Meta(z, tuple(go(x, e) for x in xs))
            case Mu(b, name):
                return mu(go(b, e), name)
        return u

    try:
        return go(t, 0)
    except _Reject:
        return None


def identity_substitute(arity: int, index: int) -> Substitute:
    """``λ̲x1..xn.x_{index+1}``."""
    return Substitute(arity, Var(arity - 1 - index))


def param_positions(sub: Substitute, which: int, limit: int = 64) -> tuple[list[tuple[int, ...]], bool]:
    """Positions of parameter ``which`` in the body, up to depth ``limit``.

    The flag is true when the enumeration was cut off by the limit.
    """
    from .terms import child_indices, children, unfold

    out: list[tuple[int, ...]] = []
    cut = False
    target = sub.arity - 1 - which
    stack: list[tuple[Term, tuple[int, ...], int]] = [(sub.body, (), 0)]
    while stack:
        t, p, e = stack.pop()
        if t.free_abs <= e + target:
            continue
        t = unfold(t)
        if type(t) is Var:
            if t.index == e + target:
                out.append(p)
            continue
        if len(p) >= limit:
            cut = True
            continue
        for i, c in zip(child_indices(t), children(t)):
            stack.append((c, p + (i,), e + (1 if type(t) is Abs else 0)))
    out.sort()
    return out, cut
