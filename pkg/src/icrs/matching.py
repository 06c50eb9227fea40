"""Matching left-hand sides against (rational) terms and locating redexes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .rules import Rule, RuleSystem
from .terms import (
    Abs,
    FVar,
    Fun,
    Meta,
    Position,
    Term,
    Var,
    alpha_eq,
    child_indices,
    children,
    subterm_at,
    unfold,
)
from .valuation import Substitute, Valuation, abstract_pattern_args


@dataclass(frozen=True)
class Redex:
    """A rule instance at a position.  Identity is the pair (position, rule)."""

    position: Position
    rule: Rule
    valuation: Valuation = field(compare=False, default_factory=Valuation)

    @property
    def depth(self) -> int:
        return len(self.position)

    def __str__(self) -> str:
        from .syntax import show_position

        return f"{self.rule.name}@{show_position(self.position)}"


def match_pattern(lhs: Term, t: Term) -> Valuation | None:
    """Valuation ``σ`` with ``σ̄(lhs) = t``, or ``None``.

    ``t`` may carry loose indices bound by the surrounding context; they end
    up as loose indices of the substitutes, past the parameters.
    """
    sigma: dict[str, Substitute] = {}
    stack: list[tuple[Term, Term, int]] = [(lhs, t, 0)]
    while stack:
        l, u, d = stack.pop()
        if type(l) is Meta:
            params = []
            for a in l.args:
                if type(a) is not Var:
                    return None
                params.append(a.index)
            body = abstract_pattern_args(u, params, d)
            if body is None:
                return None
            prev = sigma.get(l.name)
            if prev is None:
                sigma[l.name] = Substitute(len(params), body)
            elif prev.arity != len(params) or not alpha_eq(prev.body, body):
                return None
            continue
        u = unfold(u)
        match l:
            case Fun(f, largs):
                if type(u) is not Fun or u.symbol != f or len(u.args) != len(largs):
                    return None
                stack.extend((a, b, d) for a, b in zip(largs, u.args))
            case Abs(lbody):
                if type(u) is not Abs:
                    return None
                stack.append((lbody, u.body, d + 1))
            case Var(i):
                if type(u) is not Var or u.index != i:
                    return None
            case FVar(n):
                if type(u) is not FVar or u.name != n:
                    return None
            case _:
                return None
    return Valuation(sigma)


def match_at(rule: Rule, s: Term, p: Position) -> Valuation | None:
    return match_pattern(rule.lhs, subterm_at(s, p))


def footprint(redex: Redex) -> set[Position]:
    """Positions of the redex pattern, relative to the redex root."""
    return set(redex.rule.pattern_positions)


class _Matcher:
    """Per-system cache of match results keyed by subterm."""

    def __init__(self, sys: RuleSystem) -> None:
        self.sys = sys
        self.cache: dict[Term, tuple[tuple[int, Valuation], ...]] = {}
        self.roots = {}
        for i, r in enumerate(sys.rules):
            root = r.lhs
            key = (root.symbol, len(root.args)) if type(root) is Fun else None
            self.roots.setdefault(key, []).append(i)

    def matches(self, t: Term) -> tuple[tuple[int, Valuation], ...]:
        """``t`` must be unfolded."""
        hit = self.cache.get(t)
        if hit is not None:
            return hit
        out = []
        if type(t) is Fun:
            for i in self.roots.get((t.symbol, len(t.args)), ()):
                v = match_pattern(self.sys.rules[i].lhs, t)
                if v is not None:
                    out.append((i, v))
        res = tuple(out)
        self.cache[t] = res
        return res


_MATCHERS: dict[int, tuple[RuleSystem, _Matcher]] = {}


def matcher_for(sys: RuleSystem) -> _Matcher:
    entry = _MATCHERS.get(id(sys))
    if entry is None or entry[0] is not sys:
        if len(_MATCHERS) > 64:
            _MATCHERS.clear()
        entry = (sys, _Matcher(sys))
        _MATCHERS[id(sys)] = entry
    return entry[1]


def redexes_at(s: Term, p: Position, sys: RuleSystem) -> list[Redex]:
    t = unfold(subterm_at(s, p))
    m = matcher_for(sys)
    return [Redex(p, sys.rules[i], v) for i, v in m.matches(t)]


def find_redexes(s: Term, sys: RuleSystem, depth_bound: int) -> list[Redex]:
    """Every redex at depth ``<= depth_bound``, ordered by position then rule."""
    return list(iter_redexes(s, sys, depth_bound))


def iter_redexes(s: Term, sys: RuleSystem, depth_bound: int, after: Position | None = None) -> Iterator[Redex]:
    """Redexes in preorder (leftmost-outermost first), optionally only those strictly after ``after``.

    Subtrees that hold no redex within the remaining depth are skipped with a
    memo keyed by (subterm, remaining depth), which keeps the walk linear in
    the number of distinct subterms of a rational term.
    """
    m = matcher_for(sys)
    memo: dict[tuple[Term, int], bool] = {}

    def has_redex(t: Term, r: int) -> bool:
        key = (t, r)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = False  # guarded recursion cannot loop at fixed r, but be safe
        found = bool(m.matches(t)) or (
            r > 0 and any(has_redex(unfold(c), r - 1) for c in children(t))
        )
        memo[key] = found
        return found

    def walk(t: Term, p: Position) -> Iterator[Redex]:
        r = depth_bound - len(p)
        if not has_redex(t, r):
            return
        inside = after is not None and len(p) < len(after) and after[: len(p)] == p
        if after is None or (not inside and p > after):
            for i, v in m.matches(t):
                yield Redex(p, sys.rules[i], v)
        if r == 0:
            return
        for i, c in zip(child_indices(t), children(t)):
            q = p + (i,)
            if after is not None and not _may_follow(q, after):
                continue
            yield from walk(unfold(c), q)

    yield from walk(unfold(s), ())


def _may_follow(q: Position, after: Position) -> bool:
    # some position at or below q comes strictly after `after` in preorder
    if after[: len(q)] == q:
        return True
    return q > after


def first_redex(s: Term, sys: RuleSystem, depth_bound: int, after: Position | None = None) -> Redex | None:
    return next(iter_redexes(s, sys, depth_bound, after), None)


def has_redex_beyond(s: Term, sys: RuleSystem, depth: int) -> bool:
    """Whether some redex sits strictly deeper than ``depth`` (exact on rational terms)."""
    m = matcher_for(sys)
    seen: set[tuple[Term, int]] = set()
    stack = [(unfold(s), 0)]
    cap = depth + 1
    while stack:
        t, d = stack.pop()
        if (t, d) in seen:
            continue
        seen.add((t, d))
        if d == cap and m.matches(t):
            return True
        nd = min(d + 1, cap)
        stack.extend((unfold(c), nd) for c in children(t))
    return False


def is_normal_form(s: Term, sys: RuleSystem) -> bool:
    return not has_redex_beyond(s, sys, -1)
