"""Rewrite steps, descendants and residuals, developments, tiling and strategies."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .errors import StaleRedex, TermError
from .matching import Redex, first_redex, is_normal_form, match_at
from .rules import Rule, RuleSystem, is_collapsing
from .syntax import show, show_position
from .terms import (
    Meta,
    MuVar,
    Position,
    Term,
    Var,
    abs_count,
    alpha_eq,
    child_indices,
    children,
    head,
    is_valid_position,
    minimize,
    mu,
    replace_at,
    subterm_at,
    truncate,
    unfold,
)
from .valuation import Valuation, apply_valuation, param_positions


class InfiniteDescendants(TermError):
    """A position is copied infinitely often by a cyclic right-hand side."""


class BudgetExceeded(TermError):
    pass


@dataclass(frozen=True)
class Step:
    source: Term
    target: Term
    redex: Redex
    collapsing: bool
    root_collapsing: bool
    out_step: bool | None = None

    @property
    def position(self) -> Position:
        return self.redex.position

    @property
    def depth(self) -> int:
        return len(self.redex.position)

    def to_json(self) -> dict:
        return {
            "position": list(self.position),
            "rule": self.redex.rule.name,
            "depth": self.depth,
            "flags": {
                "collapsing": self.collapsing,
                "root_collapsing": self.root_collapsing,
                "out_step": self.out_step,
            },
        }

    def __str__(self) -> str:
        return f"{self.redex.rule.name}@{show_position(self.position)}"


def _same_valuation(a: Valuation, b: Valuation) -> bool:
    if set(a) != set(b):
        return False
    return all(a[z].arity == b[z].arity and alpha_eq(a[z].body, b[z].body) for z in a)


def apply_step(s: Term, r: Redex) -> Step:
    """Contract ``r`` in ``s``.

    The contractum is put back in place without renaming, so variables bound
    above the redex that occur free in the contractum are captured by the
    same binders as before.
    """
    if not is_valid_position(s, r.position):
        raise StaleRedex(f"position {list(r.position)} does not exist")
    v = match_at(r.rule, s, r.position)
    if v is None:
        raise StaleRedex(f"rule {r.rule.name} does not match at {list(r.position)}")
    if len(r.valuation) and not _same_valuation(r.valuation, v):
        raise StaleRedex(f"valuation of {r} no longer matches")
    contractum = apply_valuation(v, r.rule.rhs)
    target = replace_at(s, r.position, contractum)
    coll = is_collapsing(r.rule)
    return Step(s, target, Redex(r.position, r.rule, v), coll, coll and not r.position)


def step_at(s: Term, position: Sequence[int], rule: Rule) -> Step:
    return apply_step(s, Redex(tuple(position), rule))


@dataclass(frozen=True)
class Reduction:
    """A finite reduction, optionally closed off by the limit it approximates."""

    source: Term
    steps: tuple[Step, ...] = ()
    developed: frozenset[Redex] | None = None
    limit: Term | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def target(self) -> Term:
        return self.steps[-1].target if self.steps else self.source

    @property
    def final(self) -> Term:
        """The limit when one is attached, the last term otherwise."""
        return self.limit if self.limit is not None else self.target

    @property
    def depth_profile(self) -> tuple[int, ...]:
        return tuple(st.depth for st in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def then(self, other: Reduction) -> Reduction:
        if self.limit is not None:
            raise ValueError("cannot extend a reduction past its limit")
        return Reduction(self.source, self.steps + other.steps, None, other.limit)

    def with_limit(self, limit: Term, depth: int) -> Reduction:
        """Attach ``limit`` after checking it agrees with the target down to ``depth``."""
        if truncate(limit, depth) != truncate(self.target, depth):
            raise ValueError("limit disagrees with the reduction's stable prefix")
        return replace(self, limit=limit)

    def is_consistent(self) -> bool:
        cur = self.source
        for st in self.steps:
            if not alpha_eq(st.source, cur):
                return False
            cur = st.target
        return True

    def to_json(self) -> list[dict]:
        return [st.to_json() for st in self.steps]


def run_script(s: Term, script: Iterable[tuple[Sequence[int], Rule]]) -> Reduction:
    """Reduce ``s`` by the given (position, rule) steps."""
    steps = []
    cur = s
    for pos, rule in script:
        st = step_at(cur, pos, rule)
        steps.append(st)
        cur = st.target
    return Reduction(s, tuple(steps))


# ---------------------------------------------------------------------------
# descendants


DESCENDANT_LIMIT = 64


def meta_instance_positions(
    rhs: Term, valuation: Valuation, limit: int = DESCENDANT_LIMIT
) -> tuple[dict[str, list[Position]], bool]:
    """Where each meta-variable occurrence of ``rhs`` lands in the contractum.

    Occurrences nested inside arguments of other meta-variables are followed
    through the parameter positions of the enclosing substitute.  The flag
    reports that positions deeper than ``limit`` were cut off.
    """
    out: dict[str, list[Position]] = defaultdict(list)
    cut = False
    stack: list[tuple[Term, Position]] = [(rhs, ())]
    while stack:
        t, o = stack.pop()
        if not t.has_meta:
            continue
        if len(o) > limit:
            cut = True
            continue
        t = unfold(t)
        match t:
            case Meta(z, args):
                out[z].append(o)
                sub = valuation[z]
                for i, a in enumerate(args):
                    if not a.has_meta:
                        continue
                    ps, c = param_positions(sub, i, limit - len(o))
                    cut = cut or c
                    stack.extend((a, o + v) for v in ps)
            case _:
                stack.extend((c, o + (i,)) for i, c in zip(child_indices(t), children(t)))
    for z in out:
        out[z].sort()
    return dict(out), cut


def _is_param_occurrence(body: Term, arity: int, w: Position) -> bool:
    node = unfold(subterm_at(body, w))
    if type(node) is not Var:
        return False
    j = node.index - abs_count(w)
    return 0 <= j < arity


def descendants_bounded(
    P: Iterable[Position], st: Step, limit: int = DESCENDANT_LIMIT
) -> tuple[set[Position], bool]:
    p = st.redex.position
    rule = st.redex.rule
    sigma = st.redex.valuation
    inst: dict[str, list[Position]] | None = None
    cut = False
    out: set[Position] = set()
    for q in P:
        q = tuple(q)
        if not is_valid_position(st.source, q):
            raise TermError(f"position {list(q)} does not exist in the source")
        if q[: len(p)] != p:
            out.add(q)
            continue
        rel = q[len(p) :]
        m = next((m for m in rule.meta_positions if rel[: len(m)] == m), None)
        if m is None:
            continue  # inside the redex pattern
        z = rule.meta_positions[m]
        w = rel[len(m) :]
        sub = sigma[z]
        if _is_param_occurrence(sub.body, sub.arity, w):
            continue  # a variable bound by the pattern
        if inst is None:
            inst, cut = meta_instance_positions(rule.rhs, sigma, limit)
        out.update(p + o + w for o in inst.get(z, ()))
    return out, cut


def descendants(P: Iterable[Position], st: Step) -> set[Position]:
    out, cut = descendants_bounded(P, st)
    if cut:
        raise InfiniteDescendants("the right-hand side copies these positions infinitely often")
    return out


def _rule_key(r: Redex) -> tuple:
    return (r.position, r.rule.name)


def residuals_bounded(U: Iterable[Redex], steps: Sequence[Step]) -> tuple[set[Redex], bool]:
    cur = set(U)
    cut = False
    for st in steps:
        nxt: set[Redex] = set()
        for u in cur:
            qs, c = descendants_bounded([u.position], st)
            cut = cut or c
            for q in qs:
                v = match_at(u.rule, st.target, q)
                if v is not None:
                    nxt.add(Redex(q, u.rule, v))
        cur = nxt
    return cur, cut


def residuals(U: Iterable[Redex], D: Reduction | Step | Sequence[Step]) -> set[Redex]:
    """Residuals of ``U`` across the steps of ``D``."""
    steps = _steps_of(D)
    out, cut = residuals_bounded(U, steps)
    if cut:
        raise InfiniteDescendants("infinitely many residuals")
    return out


def _steps_of(D: Reduction | Step | Sequence[Step]) -> Sequence[Step]:
    if isinstance(D, Reduction):
        return D.steps
    if isinstance(D, Step):
        return (D,)
    return tuple(D)


# ---------------------------------------------------------------------------
# developments


DEFAULT_DEVELOP_BUDGET = 10_000


def develop(s: Term, U: Iterable[Redex], max_steps: int = DEFAULT_DEVELOP_BUDGET) -> Reduction:
    """Complete development of ``U``, always contracting an outermost residual."""
    todo = set(U)
    original = frozenset(todo)
    steps: list[Step] = []
    cur = s
    while todo:
        if len(steps) >= max_steps:
            raise BudgetExceeded(f"development did not finish within {max_steps} steps")
        u = min(todo, key=_rule_key)
        st = apply_step(cur, u)
        steps.append(st)
        rest, cut = residuals_bounded(todo - {u}, [st])
        if cut:
            raise InfiniteDescendants("development would have to contract infinitely many residuals")
        todo = rest
        cur = st.target
    return Reduction(s, tuple(steps), original)


@dataclass(frozen=True)
class Square:
    """The commuting square for a development ``D`` of ``U`` and a single redex ``v``."""

    development: Reduction  # s => t, developing U
    step: Reduction  # s -> s', contracting v
    projected: Reduction  # s' => u, developing U/v
    closing: Reduction  # t => u', developing v/D

    @property
    def corners_equal(self) -> bool:
        return alpha_eq(self.projected.target, self.closing.target)


def project_over_step(D: Reduction, v: Redex, max_steps: int = DEFAULT_DEVELOP_BUDGET) -> Square:
    if D.developed is None:
        raise ValueError("the reduction does not record which redexes it develops")
    st = apply_step(D.source, v)
    uv = residuals(D.developed, st)
    projected = develop(st.target, uv, max_steps)
    vd = residuals({v}, D)
    closing = develop(D.target, vd, max_steps)
    return Square(D, Reduction(D.source, (st,), frozenset({st.redex})), projected, closing)


# ---------------------------------------------------------------------------
# tiling diagrams


@dataclass
class TilingDiagram:
    """Grid of terms ``terms[γ][δ]``; column 0 is ``S`` and row 0 is ``T``.

    ``vertical[γ][δ]`` develops the residuals of ``S``'s redex ``γ`` from
    ``terms[γ][δ]``; ``horizontal[γ][δ]`` develops the residuals of ``T``'s
    redex ``δ``.
    """

    terms: list[list[Term | None]]
    vertical: list[list[Reduction | None]]
    horizontal: list[list[Reduction | None]]
    status: str = "completed"
    diverged_cell: tuple[int, int] | None = None
    reason: str = ""

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def s_over_t(self) -> list[Reduction]:
        """The right column: residuals of ``S`` after ``T``."""
        last = len(self.terms[0]) - 1
        return [row[last] for row in self.vertical]  # type: ignore[misc]

    def t_over_s(self) -> list[Reduction]:
        """The bottom row: residuals of ``T`` after ``S``."""
        return list(self.horizontal[-1])  # type: ignore[arg-type]

    def corner(self) -> Term | None:
        return self.terms[-1][-1]


def tile(S: Reduction, T: Reduction, step_budget: int = 1_000) -> TilingDiagram:
    if not alpha_eq(S.source, T.source):
        raise ValueError("tiled reductions must share their source")
    m, n = len(S.steps), len(T.steps)
    terms: list[list[Term | None]] = [[None] * (n + 1) for _ in range(m + 1)]
    vertical: list[list[Reduction | None]] = [[None] * (n + 1) for _ in range(m)]
    horizontal: list[list[Reduction | None]] = [[None] * n for _ in range(m + 1)]
    diagram = TilingDiagram(terms, vertical, horizontal)

    terms[0][0] = S.source
    for d, st in enumerate(T.steps):
        terms[0][d + 1] = st.target
        horizontal[0][d] = Reduction(terms[0][d], (st,), frozenset({st.redex}))  # type: ignore[arg-type]
    h_sets: list[set[Redex]] = [{st.redex} for st in T.steps]

    for g, sst in enumerate(S.steps):
        u_set: set[Redex] = {sst.redex}
        for d in range(n + 1):
            x = terms[g][d]
            assert x is not None
            try:
                if d == 0:
                    v = Reduction(x, (sst,), frozenset(u_set))
                else:
                    v = develop(x, u_set, step_budget)
            except (BudgetExceeded, InfiniteDescendants) as exc:
                diagram.status, diagram.diverged_cell, diagram.reason = "diverged", (g, d), str(exc)
                return diagram
            vertical[g][d] = v
            below = v.target
            if d > 0:
                prev = terms[g + 1][d]
                assert prev is not None
                if not alpha_eq(prev, below):
                    diagram.status, diagram.diverged_cell = "inconsistent", (g, d)
                    diagram.reason = "the two ways round the tile end in different terms"
                    return diagram
            else:
                terms[g + 1][0] = below
            if d < n:
                h = horizontal[g][d]
                assert h is not None
                u_next, cut = residuals_bounded(u_set, h.steps)
                if cut:
                    diagram.status, diagram.diverged_cell = "diverged", (g, d + 1)
                    diagram.reason = "infinitely many residuals"
                    return diagram
                w_next, cut = residuals_bounded(h_sets[d], v.steps)
                if cut:
                    diagram.status, diagram.diverged_cell = "diverged", (g + 1, d)
                    diagram.reason = "infinitely many residuals"
                    return diagram
                try:
                    hb = develop(below, w_next, step_budget)
                except (BudgetExceeded, InfiniteDescendants) as exc:
                    diagram.status, diagram.diverged_cell, diagram.reason = "diverged", (g + 1, d), str(exc)
                    return diagram
                horizontal[g + 1][d] = hb
                terms[g + 1][d + 1] = hb.target
                h_sets[d] = w_next
                u_set = u_next
    return diagram


# ---------------------------------------------------------------------------
# strategies and limits


class Strategy(str, Enum):
    LEFTMOST_OUTERMOST = "lo"
    FAIR = "fair"


DEFAULT_SEARCH_DEPTH = 64


def next_redex(s: Term, sys: RuleSystem, strategy: Strategy, last: Position | None, search_depth: int) -> Redex | None:
    """The redex a strategy contracts next.

    Leftmost-outermost takes the first redex in preorder.  The fair strategy
    sweeps a cursor through the positions in the same order: it takes the
    first redex strictly after the previously contracted position and wraps
    to the start when none is left, so every position is revisited once per
    sweep.
    """
    if strategy is Strategy.FAIR and last is not None:
        r = first_redex(s, sys, search_depth, after=last)
        if r is not None:
            return r
    return first_redex(s, sys, search_depth)


@dataclass(frozen=True)
class ReduceResult:
    reduction: Reduction
    stable_depth: int
    stable_prefix: Term
    fuel_exhausted: bool
    normal_form: bool
    limit: Term | None = None

    def to_json(self) -> dict:
        return {
            "steps": self.reduction.to_json(),
            "stable_depth": self.stable_depth,
            "stable_prefix": show(self.stable_prefix),
            "fuel_exhausted": self.fuel_exhausted,
            "normal_form": self.normal_form,
            "limit": None if self.limit is None else show(self.limit),
        }


def reduce(
    s: Term,
    sys: RuleSystem,
    strategy: Strategy | str = Strategy.LEFTMOST_OUTERMOST,
    fuel: int = 100,
    depth: int = 8,
    search_depth: int | None = None,
) -> ReduceResult:
    """Run a strategy for at most ``fuel`` steps and report the stable prefix.

    The stable depth is ``depth`` when the run stopped for lack of redexes
    (within ``search_depth``).  When fuel ran out it is capped by the depth
    of the last step, assuming the run carries on at that depth or deeper.
    """
    strategy = Strategy(strategy)
    bound = search_depth if search_depth is not None else max(DEFAULT_SEARCH_DEPTH, depth)
    steps: list[Step] = []
    cur = s
    last: Position | None = None
    exhausted = False
    while True:
        r = next_redex(cur, sys, strategy, last, bound)
        if r is None:
            break
        if len(steps) >= fuel:
            exhausted = True
            break
        st = apply_step(cur, r)
        steps.append(st)
        cur = st.target
        last = r.position
    red = Reduction(s, tuple(steps))
    nf = not exhausted and is_normal_form(cur, sys)
    if exhausted and steps:
        stable = min(depth, steps[-1].depth)
    else:
        stable = depth
    limit = extrapolate_limit(red) if exhausted else None
    return ReduceResult(red, stable, truncate(cur, stable), exhausted, nf, limit)


def extrapolate_limit(red: Reduction) -> Term | None:
    """Limit of a reduction that keeps re-creating the same redex one context deeper.

    If the last step contracts at ``p`` a term ``X`` whose contractum is
    ``C[X']`` with ``X'`` alpha-equal to ``X`` at a proper extension
    ``p·q``, and the step before did the same one level up, the reduction
    repeats forever and converges to the term with ``μa.C[a]`` at ``p``.
    """
    if len(red.steps) < 2:
        return None
    a, b = red.steps[-2], red.steps[-1]
    p, pq = a.position, b.position
    if len(pq) <= len(p) or pq[: len(p)] != p or a.redex.rule.name != b.redex.rule.name:
        return None
    q = pq[len(p) :]
    x = subterm_at(a.source, p)
    contractum = subterm_at(a.target, p)
    if not alpha_eq(subterm_at(contractum, q), x):
        return None
    try:
        body = replace_at(contractum, q, MuVar(0))
        cycle = mu(body)
        return minimize(replace_at(a.source, p, cycle))
    except TermError:
        return None


# ---------------------------------------------------------------------------
# prefix sets


@dataclass(frozen=True)
class PrefixSet:
    positions: frozenset[Position]

    def __post_init__(self) -> None:
        ps = frozenset(tuple(p) for p in self.positions)
        for p in ps:
            if p and p[:-1] not in ps:
                raise ValueError(f"prefix {list(p[:-1])} of {list(p)} is missing")
        object.__setattr__(self, "positions", ps)

    @classmethod
    def closure(cls, positions: Iterable[Sequence[int]]) -> PrefixSet:
        out: set[Position] = set()
        for p in positions:
            p = tuple(p)
            for k in range(len(p) + 1):
                out.add(p[:k])
        return cls(frozenset(out))

    def __iter__(self):
        return iter(sorted(self.positions))

    def __contains__(self, p: object) -> bool:
        return p in self.positions

    def __len__(self) -> int:
        return len(self.positions)


def mirrors(t: Term, s: Term, P: PrefixSet | Iterable[Sequence[int]]) -> bool:
    """``t`` has every position of ``P`` with the same head as ``s`` there."""
    for p in P:
        if not is_valid_position(t, p) or not is_valid_position(s, p):
            return False
        if head(unfold(subterm_at(t, p))) != head(unfold(subterm_at(s, p))):
            return False
    return True
