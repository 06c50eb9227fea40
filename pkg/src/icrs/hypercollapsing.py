"""Hypercollapsing subterms, equivalence modulo them, and bounded confluence checks.

Hypercollapsingness is undecidable, so everything here is a bounded search
over the reduction graph of a rational term.  States are kept in canonical
form (:func:`~icrs.terms.minimize`), so a state seen twice really is the same
term up to α-equivalence and a cycle in the graph is a genuine infinite
reduction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .errors import TermError
from .matching import find_redexes, has_redex_beyond, is_normal_form
from .reduction import Reduction, Step, apply_step, run_script, tile
from .rules import RuleSystem, is_collapsing
from .syntax import show
from .terms import (
    BOTTOM_TERM,
    Abs,
    Fun,
    Meta,
    Position,
    Term,
    alpha_eq,
    child_indices,
    children,
    minimize,
    subterm_at,
    truncate,
    unfold,
)


@dataclass(frozen=True)
class SearchBudget:
    max_steps: int = 2000
    max_depth: int = 8
    max_states: int = 500

    def __post_init__(self) -> None:
        for name in ("max_steps", "max_depth", "max_states"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Answer(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class HcReading(str, Enum):
    """Which occurrences count as "inside a hypercollapsing subterm".

    ``PROPER`` looks at proper subterms only, so the root of a term is never
    replaced by ⊥ and a root step is always an out-step.  ``WHOLE`` also
    counts the term itself.
    """

    PROPER = "proper"
    WHOLE = "whole"


# ---------------------------------------------------------------------------
# reduction graphs


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    step: Step

    @property
    def root_collapsing(self) -> bool:
        return self.step.root_collapsing


@dataclass
class ReductionGraph:
    """Reachable part of a reduction graph, states in canonical form."""

    sys: RuleSystem
    budget: SearchBudget
    states: list[Term] = field(default_factory=list)
    index: dict[Term, int] = field(default_factory=dict)
    out: list[list[Edge]] = field(default_factory=list)
    parent: list[Edge | None] = field(default_factory=list)
    expanded: int = 0
    steps_taken: int = 0
    truncated: bool = False  # some state was not (fully) expanded
    deep_redexes: bool = False  # some state has redexes below max_depth

    def add_state(self, t: Term, via: Edge | None = None) -> tuple[int, bool]:
        key = minimize(t)
        i = self.index.setdefault(key, len(self.states))
        if i < len(self.states):
            return i, False
        self.states.append(key)
        self.out.append([])
        self.parent.append(via)
        return i, True

    def redexes(self, i: int):
        """Redexes of state ``i``, shallowest first, then in preorder."""
        rs = find_redexes(self.states[i], self.sys, self.budget.max_depth)
        rs.sort(key=lambda r: (len(r.position), r.position, self.sys.index_of(r.rule)))
        return rs

    def expand(self, i: int, on_edge: Callable[[Edge, bool], bool] | None = None) -> bool:
        """Add every edge out of state ``i``; stop early when ``on_edge`` returns true."""
        s = self.states[i]
        for r in self.redexes(i):
            if self.steps_taken >= self.budget.max_steps:
                self.truncated = True
                return False
            self.steps_taken += 1
            st = apply_step(s, r)
            if len(self.states) >= self.budget.max_states and minimize(st.target) not in self.index:
                self.truncated = True
                continue
            j, new = self.add_state(st.target)
            e = Edge(i, j, st)
            if new:
                self.parent[j] = e
            self.out[i].append(e)
            if on_edge is not None and on_edge(e, new):
                return True
        if has_redex_beyond(s, self.sys, self.budget.max_depth):
            self.deep_redexes = True
        self.expanded += 1
        return False

    def explore(self, seeds: Iterable[Term], on_edge: Callable[[Edge, bool], bool] | None = None) -> bool:
        """Breadth-first exploration; returns true if ``on_edge`` stopped it."""
        queue = deque()
        for t in seeds:
            i, new = self.add_state(t)
            if new:
                queue.append(i)
        while queue:
            i = queue.popleft()
            before = len(self.states)
            if self.expand(i, on_edge):
                return True
            queue.extend(range(before, len(self.states)))
            if self.steps_taken >= self.budget.max_steps and queue:
                self.truncated = True
                return False
        return False

    @property
    def complete(self) -> bool:
        return not self.truncated

    def path_to(self, j: int) -> list[Edge]:
        path = []
        e = self.parent[j]
        while e is not None:
            path.append(e)
            e = self.parent[e.source]
        return path[::-1]

    def shortest_path(self, a: int, b: int) -> list[Edge] | None:
        if a == b:
            return []
        prev: dict[int, Edge] = {}
        queue = deque([a])
        seen = {a}
        while queue:
            x = queue.popleft()
            for e in self.out[x]:
                if e.target in seen:
                    continue
                seen.add(e.target)
                prev[e.target] = e
                if e.target == b:
                    path = []
                    y = b
                    while y != a:
                        path.append(prev[y])
                        y = prev[y].source
                    return path[::-1]
                queue.append(e.target)
        return None

    def reachable(self, a: int) -> set[int]:
        seen = {a}
        stack = [a]
        while stack:
            x = stack.pop()
            for e in self.out[x]:
                if e.target not in seen:
                    seen.add(e.target)
                    stack.append(e.target)
        return seen


# ---------------------------------------------------------------------------
# detection


class HcStatus(str, Enum):
    HYPERCOLLAPSING = "hypercollapsing"
    NOT_WITHIN_BOUNDS = "not_within_bounds"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Lasso:
    """A finite stem followed by a cycle that contains a root-collapsing step."""

    stem: Reduction
    cycle: Reduction

    def script(self, loops: int) -> list[tuple[Position, object]]:
        steps = list(self.stem.steps) + list(self.cycle.steps) * loops
        return [(st.position, st.redex.rule) for st in steps]

    def unroll(self, s: Term, loops: int) -> Reduction:
        """Replay the stem and ``loops`` rounds of the cycle starting from ``s``."""
        return run_script(s, self.script(loops))

    def to_json(self) -> dict:
        return {"stem": self.stem.to_json(), "cycle": self.cycle.to_json()}


@dataclass(frozen=True)
class HcVerdict:
    status: HcStatus
    witness: Lasso | None = None
    states: int = 0

    @property
    def answer(self) -> Answer:
        match self.status:
            case HcStatus.HYPERCOLLAPSING:
                return Answer.YES
            case HcStatus.NOT_WITHIN_BOUNDS:
                return Answer.NO
        return Answer.UNKNOWN

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "lasso": None if self.witness is None else self.witness.to_json(),
            "states": self.states,
        }


def _as_reduction(start: Term, path: Sequence[Edge]) -> Reduction:
    return Reduction(start, tuple(e.step for e in path))


def _root_symbols(sys: RuleSystem) -> frozenset[tuple[str, int]]:
    return frozenset((r.lhs.symbol, len(r.lhs.args)) for r in sys.rules if type(r.lhs) is Fun)


def _root_is_frozen(t: Term, sys: RuleSystem) -> bool:
    # no rule can ever fire at the root, so the root symbol never changes
    t = unfold(t)
    if type(t) is not Fun:
        return True
    return (t.symbol, len(t.args)) not in _root_symbols(sys)


def _find_lasso(g: ReductionGraph, root: int, e: Edge) -> Lasso | None:
    """A lasso through the new edge ``e``, if it closes a cycle with a root-collapsing step."""
    back = g.shortest_path(e.target, e.source)
    if back is None:
        return None
    cycle = [e] + back
    if not any(x.root_collapsing for x in cycle):
        # the cycle through e may still enclose a root-collapsing edge of its component
        forward = g.reachable(e.target)
        component = {x for x in forward if g.shortest_path(x, e.source) is not None}
        rc = [x for i in sorted(component) for x in g.out[i] if x.root_collapsing and x.target in component]
        if not rc:
            return None
        x = rc[0]
        back = g.shortest_path(x.target, x.source)
        assert back is not None
        cycle = [x] + back
    start = cycle[0].source
    stem = g.path_to(start)
    origin = g.states[root]
    return Lasso(_as_reduction(origin, stem), _as_reduction(g.states[start], cycle))


def detect_hypercollapsing(s: Term, sys: RuleSystem, budget: SearchBudget | None = None) -> HcVerdict:
    """Three-valued search for a hypercollapsing reduction from ``s``.

    Returns a lasso witness when a cycle with a root-collapsing step is
    reachable, ``not_within_bounds`` when the graph (with redexes up to
    ``max_depth``) was enumerated completely without finding one, and
    ``unknown`` when the budget ran out first.
    """
    return detector_for(sys, budget or SearchBudget()).detect(s)


class HcDetector:
    """Memoized detection for one system and budget."""

    def __init__(self, sys: RuleSystem, budget: SearchBudget) -> None:
        self.sys = sys
        self.budget = budget
        self.has_collapsing = any(is_collapsing(r) for r in sys.rules)
        self.cache: dict[Term, HcVerdict] = {}

    def detect(self, s: Term) -> HcVerdict:
        if not self.has_collapsing or _root_is_frozen(s, self.sys):
            return HcVerdict(HcStatus.NOT_WITHIN_BOUNDS, None, 1)
        key = minimize(s)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        verdict = self._search(key)
        return self.cache.setdefault(key, verdict)

    def _search(self, s: Term) -> HcVerdict:
        g = ReductionGraph(self.sys, self.budget)
        found: list[Lasso] = []

        def on_edge(e: Edge, new: bool) -> bool:
            if new:
                return False
            lasso = _find_lasso(g, 0, e)
            if lasso is not None:
                found.append(lasso)
                return True
            return False

        g.explore([s], on_edge)
        if found:
            return HcVerdict(HcStatus.HYPERCOLLAPSING, found[0], len(g.states))
        if g.complete:
            return HcVerdict(HcStatus.NOT_WITHIN_BOUNDS, None, len(g.states))
        return HcVerdict(HcStatus.UNKNOWN, None, len(g.states))


_DETECTORS: dict[tuple[int, SearchBudget], tuple[RuleSystem, HcDetector]] = {}


def detector_for(sys: RuleSystem, budget: SearchBudget) -> HcDetector:
    key = (id(sys), budget)
    entry = _DETECTORS.get(key)
    if entry is None or entry[0] is not sys:
        if len(_DETECTORS) > 64:
            _DETECTORS.clear()
        entry = (sys, HcDetector(sys, budget))
        _DETECTORS[key] = entry
    return entry[1]


# ---------------------------------------------------------------------------
# normal forms modulo hypercollapsing subterms


@dataclass(frozen=True)
class HcNormalForm:
    term: Term
    substituted_positions: frozenset[Position]
    unknown_positions: frozenset[Position] = frozenset()

    @property
    def decisive(self) -> bool:
        return not self.unknown_positions

    def to_json(self) -> dict:
        return {
            "term": show(self.term),
            "substituted": sorted(list(p) for p in self.substituted_positions),
            "unknown": sorted(list(p) for p in self.unknown_positions),
        }


def hc_normalize(
    s: Term,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    depth: int = 8,
    reading: HcReading = HcReading.PROPER,
) -> HcNormalForm:
    """Replace the outermost hypercollapsing subterms down to ``depth`` by ⊥."""
    det = detector_for(sys, budget or SearchBudget())
    reading = HcReading(reading)
    done: list[Position] = []
    unknown: list[Position] = []

    def go(t: Term, p: Position) -> Term:
        if p or reading is HcReading.WHOLE:
            v = det.detect(t)
            if v.status is HcStatus.HYPERCOLLAPSING:
                done.append(p)
                return BOTTOM_TERM
            if v.status is HcStatus.UNKNOWN:
                unknown.append(p)
        if len(p) >= depth:
            return t
        u = unfold(t)
        match u:
            case Abs(b, name):
                return Abs(go(b, p + (0,)), name)
            case Fun(f, xs):
                return Fun(f, tuple(go(x, p + (i + 1,)) for i, x in enumerate(xs)))
            case Meta(z, xs):
                return Meta(z, tuple(go(x, p + (i + 1,)) for i, x in enumerate(xs)))
        return t

    out = go(s, ())
    return HcNormalForm(out, frozenset(done), frozenset(unknown))


def _first_difference(a: Term, b: Term) -> Position | None:
    stack: list[tuple[Term, Term, Position]] = [(a, b, ())]
    while stack:
        x, y, p = stack.pop()
        x, y = unfold(x), unfold(y)
        if type(x) is not type(y) or not children(x) and x != y:
            return p
        if type(x) in (Fun, Meta) and (x.symbol if type(x) is Fun else x.name) != (
            y.symbol if type(y) is Fun else y.name
        ):
            return p
        xs, ys = children(x), children(y)
        if len(xs) != len(ys):
            return p
        for i, cx, cy in zip(child_indices(x), xs, ys):
            stack.append((cx, cy, p + (i,)))
    return None


@dataclass(frozen=True)
class HcEquivEvidence:
    answer: Answer
    left: HcNormalForm
    right: HcNormalForm
    depth: int
    difference: Position | None = None

    def to_json(self) -> dict:
        return {
            "answer": self.answer.value,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "depth": self.depth,
            "difference": None if self.difference is None else list(self.difference),
        }


def _under(p: Position, qs: Iterable[Position]) -> bool:
    return any(p[: len(q)] == q for q in qs)


def hc_equiv_evidence(
    a: Term,
    b: Term,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    depth: int = 8,
    reading: HcReading = HcReading.PROPER,
) -> HcEquivEvidence:
    na = hc_normalize(a, sys, budget, depth, reading)
    nb = hc_normalize(b, sys, budget, depth, reading)
    if alpha_eq(a, b):
        return HcEquivEvidence(Answer.YES, na, nb, depth)
    ta, tb = truncate(na.term, depth), truncate(nb.term, depth)
    diff = _first_difference(ta, tb)
    unknown = na.unknown_positions | nb.unknown_positions
    if diff is None:
        answer = Answer.UNKNOWN if unknown else Answer.YES
    else:
        # an undecided subterm above the difference could still turn into ⊥
        answer = Answer.UNKNOWN if _under(diff, unknown) else Answer.NO
    return HcEquivEvidence(answer, na, nb, depth, diff)


def hc_equiv(
    a: Term,
    b: Term,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    depth: int = 8,
    reading: HcReading = HcReading.PROPER,
) -> Answer:
    """Whether ``a`` and ``b`` agree down to ``depth`` once hypercollapsing subterms are ⊥."""
    return hc_equiv_evidence(a, b, sys, budget, depth, reading).answer


# ---------------------------------------------------------------------------
# out-steps


def classify_out_step(
    st: Step,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    reading: HcReading = HcReading.PROPER,
) -> Answer:
    """Whether the contracted redex lies outside every hypercollapsing subterm."""
    det = detector_for(sys, budget or SearchBudget())
    reading = HcReading(reading)
    p = st.position
    start = 0 if reading is HcReading.WHOLE else 1
    undecided = False
    for k in range(start, len(p) + 1):
        v = det.detect(subterm_at(st.source, p[:k]))
        if v.status is HcStatus.HYPERCOLLAPSING:
            return Answer.NO
        if v.status is HcStatus.UNKNOWN:
            undecided = True
    return Answer.UNKNOWN if undecided else Answer.YES


def mark_out_steps(
    red: Reduction, sys: RuleSystem, budget: SearchBudget | None = None, reading: HcReading = HcReading.PROPER
) -> Reduction:
    """Copy of ``red`` whose steps carry their out-step classification."""
    steps = []
    for st in red.steps:
        a = classify_out_step(st, sys, budget, reading)
        steps.append(replace(st, out_step=None if a is Answer.UNKNOWN else a is Answer.YES))
    return replace(red, steps=tuple(steps))


@dataclass(frozen=True)
class StripResult:
    status: str  # "joined" or "diverged"
    term: Term | None
    s_over_u: Reduction | None
    u_over_s: Reduction | None
    hypothesis: Answer  # whether every step involved is an out-step
    reason: str = ""

    @property
    def joined(self) -> bool:
        return self.status == "joined"


def _concat(rs: Sequence[Reduction | None]) -> Reduction | None:
    if not rs or any(r is None for r in rs):
        return None
    out = rs[0]
    assert out is not None
    for r in rs[1:]:
        assert r is not None
        out = Reduction(out.source, out.steps + r.steps)
    return out


def strip_restricted(
    S: Reduction,
    u: Step,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    reading: HcReading = HcReading.PROPER,
) -> StripResult:
    """Close the peak formed by ``S`` and the single step ``u`` with the tiling diagram."""
    budget = budget or SearchBudget()
    answers = [classify_out_step(st, sys, budget, reading) for st in (*S.steps, u)]
    if Answer.NO in answers:
        hyp = Answer.NO
    elif Answer.UNKNOWN in answers:
        hyp = Answer.UNKNOWN
    else:
        hyp = Answer.YES
    U = Reduction(u.source, (u,), frozenset({u.redex}))
    try:
        diagram = tile(S, U, budget.max_steps)
    except TermError as exc:
        return StripResult("diverged", None, None, None, hyp, str(exc))
    if not diagram.completed:
        return StripResult("diverged", None, None, None, hyp, diagram.reason)
    s_over_u = _concat(diagram.s_over_t())
    u_over_s = _concat(diagram.t_over_s())
    a = s_over_u.target if s_over_u is not None else diagram.corner()
    b = u_over_s.target if u_over_s is not None else diagram.corner()
    d = budget.max_depth
    if a is None or b is None or truncate(a, d) != truncate(b, d):
        return StripResult("diverged", None, s_over_u, u_over_s, hyp, "the two sides end in different terms")
    return StripResult("joined", a, s_over_u, u_over_s, hyp)


# ---------------------------------------------------------------------------
# joins modulo ~hc


@dataclass(frozen=True)
class Join:
    left: Reduction  # extends S's endpoint
    right: Reduction  # extends T's endpoint
    evidence: HcEquivEvidence


@dataclass(frozen=True)
class JoinReport:
    join: Join | None
    left_states: int
    right_states: int
    exhausted: bool  # both sides were explored completely within the budget
    left_closed: bool  # the left endpoint only reduces to itself
    right_closed: bool

    def to_json(self) -> dict:
        j = self.join
        return {
            "joined": j is not None,
            "left": None if j is None else j.left.to_json(),
            "right": None if j is None else j.right.to_json(),
            "evidence": None if j is None else j.evidence.to_json(),
            "left_states": self.left_states,
            "right_states": self.right_states,
            "exhausted": self.exhausted,
            "left_closed": self.left_closed,
            "right_closed": self.right_closed,
        }


class _Side:
    """Breadth-first search from one endpoint, out-steps first."""

    def __init__(self, start: Term, sys: RuleSystem, budget: SearchBudget, reading: HcReading) -> None:
        self.sys, self.budget, self.reading = sys, budget, reading
        self.start = start
        self.paths: dict[Term, tuple[Step, ...]] = {minimize(start): ()}
        self.order: list[Term] = [minimize(start)]
        self.queue: deque[Term] = deque(self.order)
        self.closed = True  # no step leaves the start state's class
        self.truncated = False

    def states(self) -> list[tuple[Term, Term, tuple[Step, ...]]]:
        """(canonical state, actual term, path) for every state found so far."""
        out = []
        for k in self.order:
            path = self.paths[k]
            out.append((k, path[-1].target if path else self.start, path))
        return out

    def advance(self, steps_left: int, states_left: int) -> tuple[list[Term], int]:
        """Expand one state; returns the new states and the steps used."""
        if not self.queue:
            return [], 0
        k = self.queue.popleft()
        path = self.paths[k]
        t = path[-1].target if path else self.start
        rs = find_redexes(t, self.sys, self.budget.max_depth)
        staged = []
        for r in rs:
            st = apply_step(t, r)
            out = classify_out_step(st, self.sys, self.budget, self.reading)
            st = replace(st, out_step=None if out is Answer.UNKNOWN else out is Answer.YES)
            rank = {Answer.YES: 0, Answer.UNKNOWN: 1, Answer.NO: 2}[out]
            staged.append((rank, len(r.position), r.position, self.sys.index_of(r.rule), st))
        staged.sort(key=lambda x: x[:4])
        new: list[Term] = []
        used = 0
        for *_, st in staged:
            if used >= steps_left:
                self.truncated = True
                break
            used += 1
            key = minimize(st.target)
            if key != self.order[0]:
                self.closed = False
            if key in self.paths:
                continue
            if len(new) >= states_left:
                self.truncated = True
                continue
            self.paths[key] = path + (st,)
            self.order.append(key)
            self.queue.append(key)
            new.append(key)
        return new, used


def join_search(
    s: Term,
    S: Reduction,
    T: Reduction,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    depth: int = 8,
    reading: HcReading = HcReading.PROPER,
) -> JoinReport:
    """Look for extensions of ``S`` and ``T`` whose endpoints are ~hc-related."""
    budget = budget or SearchBudget()
    reading = HcReading(reading)
    for red in (S, T):
        if not alpha_eq(red.source, s):
            if hc_equiv(red.source, s, sys, budget, depth, reading) is not Answer.YES:
                raise ValueError("reductions must start at the given term or a ~hc-related one")
    left = _Side(S.final, sys, budget, reading)
    right = _Side(T.final, sys, budget, reading)
    keys: dict[Term, tuple[Term, Term, HcNormalForm]] = {}

    def nf_key(k: Term, t: Term) -> tuple[Term, HcNormalForm]:
        hit = keys.get(k)
        if hit is None:
            nf = hc_normalize(t, sys, budget, depth, reading)
            hit = (k, truncate(nf.term, depth), nf)
            keys[k] = hit
        return hit[1], hit[2]

    def check(k: Term, side: _Side, other: _Side) -> Join | None:
        path = side.paths[k]
        t = path[-1].target if path else side.start
        key, _ = nf_key(k, t)
        for k2, t2, path2 in other.states():
            key2, _ = nf_key(k2, t2)
            if key2 != key:
                continue
            ev = hc_equiv_evidence(t, t2, sys, budget, depth, reading)
            if ev.answer is not Answer.YES:
                continue
            a = Reduction(side.start, path)
            b = Reduction(other.start, path2)
            if side is left:
                return Join(a, b, ev)
            return Join(b, a, HcEquivEvidence(ev.answer, ev.right, ev.left, depth, ev.difference))
        return None

    j = check(left.order[0], left, right)
    steps_used = 0
    while j is None:
        progressed = False
        for side, other in ((left, right), (right, left)):
            states_left = budget.max_states - len(left.order) - len(right.order)
            steps_left = budget.max_steps - steps_used
            if steps_left <= 0 or states_left <= 0:
                if side.queue:
                    side.truncated = True
                continue
            if not side.queue:
                continue
            new, used = side.advance(steps_left, states_left)
            steps_used += used
            progressed = True
            for k in new:
                j = check(k, side, other)
                if j is not None:
                    break
            if j is not None:
                break
        if not progressed:
            break
    exhausted = not (left.queue or right.queue or left.truncated or right.truncated)
    return JoinReport(j, len(left.order), len(right.order), exhausted, left.closed, right.closed)


def join_modulo(
    s: Term,
    S: Reduction,
    T: Reduction,
    sys: RuleSystem,
    budget: SearchBudget | None = None,
    depth: int = 8,
    reading: HcReading = HcReading.PROPER,
) -> tuple[Reduction, Reduction, HcEquivEvidence] | None:
    """Extensions ``S'`` of ``S`` and ``T'`` of ``T`` ending in ~hc-related terms, if found."""
    j = join_search(s, S, T, sys, budget, depth, reading).join
    return None if j is None else (j.left, j.right, j.evidence)


# ---------------------------------------------------------------------------
# normal-form properties


@dataclass(frozen=True)
class PropertyVerdict:
    name: str
    holds: bool
    bounded: bool  # the explored graph was incomplete
    witness: tuple[Term, ...] | None = None

    def describe(self) -> str:
        word = "holds" if self.holds else "fails"
        if self.bounded:
            word += " (within bounds)"
        if self.witness:
            word += " witness: " + ", ".join(show(t) for t in self.witness)
        return f"{self.name}: {word}"

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "bounded": self.bounded,
            "witness": None if self.witness is None else [show(t) for t in self.witness],
        }


@dataclass(frozen=True)
class NfReport:
    NF: PropertyVerdict
    UN: PropertyVerdict
    UN_arrow: PropertyVerdict
    states: int
    normal_forms: tuple[Term, ...]
    complete: bool

    def to_json(self) -> dict:
        return {
            "NF": self.NF.to_json(),
            "UN": self.UN.to_json(),
            "UN_arrow": self.UN_arrow.to_json(),
            "states": self.states,
            "normal_forms": [show(t) for t in self.normal_forms],
            "complete": self.complete,
        }


def check_nf_properties(sys: RuleSystem, seeds: Iterable[Term], budget: SearchBudget | None = None) -> NfReport:
    """Check NF, UN and UN→ on the reduction graph reachable from ``seeds``.

    Two terms are convertible when they are connected in the graph,
    ignoring edge direction.  When the graph is incomplete a missing
    reduction might exist outside it, so failures of NF are reported as
    bounded; failures of UN and UN→ come with genuine witnesses either way.
    """
    budget = budget or SearchBudget()
    g = ReductionGraph(sys, budget)
    g.explore(list(seeds))
    complete = g.complete and not g.deep_redexes
    n = len(g.states)
    nfs = [i for i in range(n) if not g.out[i] and is_normal_form(g.states[i], sys)]

    # connected components of the undirected graph, by union-find
    root = list(range(n))

    def find(x: int) -> int:
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for i in range(n):
        for e in g.out[i]:
            a, b = find(e.source), find(e.target)
            if a != b:
                root[max(a, b)] = min(a, b)
    reach = [g.reachable(i) for i in range(n)]
    bounded = not complete

    nf_witness = None
    for t in nfs:
        for s in range(n):
            if find(s) == find(t) and t not in reach[s]:
                nf_witness = (g.states[s], g.states[t])
                break
        if nf_witness:
            break
    un_witness = None
    for x in nfs:
        for y in nfs:
            if x < y and find(x) == find(y):
                un_witness = (g.states[x], g.states[y])
                break
        if un_witness:
            break
    una_witness = None
    for s in range(n):
        mine = [t for t in nfs if t in reach[s]]
        if len(mine) > 1:
            una_witness = (g.states[s], g.states[mine[0]], g.states[mine[1]])
            break
    return NfReport(
        NF=PropertyVerdict("NF", nf_witness is None, bounded, nf_witness),
        UN=PropertyVerdict("UN", un_witness is None, bounded and un_witness is None, un_witness),
        UN_arrow=PropertyVerdict("UN->", una_witness is None, bounded and una_witness is None, una_witness),
        states=n,
        normal_forms=tuple(g.states[i] for i in nfs),
        complete=complete,
    )
