"""Nameless rational terms and the core operations on them.

Terms are immutable trees in de Bruijn form.  ``Var(i)`` points ``i``
abstractions up; indices that run past the root are *loose* and stand for
variables bound by whatever context the term was cut out of.  Free variables
of a whole term are named (``FVar``).  Infinite rational terms are written
with a recursion binder ``Mu`` whose variable ``MuVar(j)`` counts recursion
binders, a namespace separate from abstraction indices.

Unfolding ``Mu(t)`` substitutes the recursion for its variable.  Every
recursion must be guarded: the path from a ``Mu`` to an occurrence of its
variable passes through an ``Abs``, ``Fun`` or ``Meta`` node.

Positions count ``0`` for the body of an abstraction and ``1..n`` for the
arguments of a function symbol or meta-variable.  Recursion binders are
transparent: they never occupy a position.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterator, Sequence

from .errors import InvalidPosition, NonRationalTerm, UnguardedRecursion

Position = tuple[int, ...]

TOP = "⊤"
BOTTOM = "⊥"
RESERVED_SYMBOLS = frozenset({TOP, BOTTOM})

_EMPTY: frozenset[int] = frozenset()


class Term:
    """Common base.  Subclasses cache structural metadata at construction."""

    __slots__ = ("_hash", "free_abs", "free_mu", "mu_under_abs", "unguarded", "has_meta", "has_mu", "has_fvar")

    _hash: int
    free_abs: int  # 1 + largest loose abstraction index, 0 when none
    free_mu: frozenset[int]  # loose recursion indices
    mu_under_abs: frozenset[int]  # loose recursion indices occurring below an Abs
    unguarded: frozenset[int]  # loose recursion indices reachable through Mu nodes only
    has_meta: bool
    has_mu: bool
    has_fvar: bool

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        from .syntax import show

        return f"<{type(self).__name__} {show(self)}>"

    @property
    def is_finite(self) -> bool:
        return not self.has_mu

    @property
    def is_closed(self) -> bool:
        """No loose indices of either kind."""
        return self.free_abs == 0 and not self.free_mu


def _meta(obj: Term, **values: object) -> None:
    for name, value in values.items():
        object.__setattr__(obj, name, value)


def _union(sets: Sequence[frozenset[int]]) -> frozenset[int]:
    out: frozenset[int] = _EMPTY
    for s in sets:
        if s:
            out = out | s
    return out


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Var(Term):
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("variable index must be non-negative")
        _meta(
            self,
            _hash=hash(("V", self.index)),
            free_abs=self.index + 1,
            free_mu=_EMPTY,
            mu_under_abs=_EMPTY,
            unguarded=_EMPTY,
            has_meta=False,
            has_mu=False,
            has_fvar=False,
        )

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (type(other) is Var and other.index == self.index)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class FVar(Term):
    """A named free variable."""

    name: str

    def __post_init__(self) -> None:
        _meta(
            self,
            _hash=hash(("F", self.name)),
            free_abs=0,
            free_mu=_EMPTY,
            mu_under_abs=_EMPTY,
            unguarded=_EMPTY,
            has_meta=False,
            has_mu=False,
            has_fvar=True,
        )

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (type(other) is FVar and other.name == self.name)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Abs(Term):
    body: Term
    name: str = "x"  # printing hint only, ignored by equality

    def __post_init__(self) -> None:
        b = self.body
        _meta(
            self,
            _hash=hash(("A", b._hash)),
            free_abs=max(b.free_abs - 1, 0),
            free_mu=b.free_mu,
            mu_under_abs=b.free_mu,
            unguarded=_EMPTY,
            has_meta=b.has_meta,
            has_mu=b.has_mu,
            has_fvar=b.has_fvar,
        )

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (type(other) is Abs and other._hash == self._hash and other.body == self.body)


def _node_meta(obj: Term, tag: str, head: str, args: tuple[Term, ...]) -> None:
    _meta(
        obj,
        _hash=hash((tag, head, tuple(a._hash for a in args))),
        free_abs=max((a.free_abs for a in args), default=0),
        free_mu=_union([a.free_mu for a in args]),
        mu_under_abs=_union([a.mu_under_abs for a in args]),
        unguarded=_EMPTY,
        has_meta=tag == "M" or any(a.has_meta for a in args),
        has_mu=any(a.has_mu for a in args),
        has_fvar=any(a.has_fvar for a in args),
    )


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Fun(Term):
    symbol: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        _node_meta(self, "S", self.symbol, self.args)

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (
            type(other) is Fun
            and other._hash == self._hash
            and other.symbol == self.symbol
            and other.args == self.args
        )


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Meta(Term):
    """A meta-variable applied to arguments (only in meta-terms)."""

    name: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        _node_meta(self, "M", self.name, self.args)

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (
            type(other) is Meta
            and other._hash == self._hash
            and other.name == self.name
            and other.args == self.args
        )


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class MuVar(Term):
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("recursion index must be non-negative")
        s = frozenset({self.index})
        _meta(
            self,
            _hash=hash(("R", self.index)),
            free_abs=0,
            free_mu=s,
            mu_under_abs=_EMPTY,
            unguarded=s,
            has_meta=False,
            has_mu=False,
            has_fvar=False,
        )

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (type(other) is MuVar and other.index == self.index)


def _down(s: frozenset[int]) -> frozenset[int]:
    if not s:
        return _EMPTY
    return frozenset(k - 1 for k in s if k > 0)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Mu(Term):
    body: Term
    name: str = "a"

    def __post_init__(self) -> None:
        b = self.body
        if 0 not in b.free_mu:
            raise ValueError("recursion binder does not use its variable; build it with mu()")
        if 0 in b.unguarded:
            raise UnguardedRecursion("recursion variable reachable without passing a constructor")
        if 0 in b.mu_under_abs and b.free_abs > 0:
            raise NonRationalTerm(
                "recursion re-enters itself under an abstraction while mentioning an outer bound variable"
            )
        _meta(
            self,
            _hash=hash(("U", b._hash)),
            free_abs=b.free_abs,
            free_mu=_down(b.free_mu),
            mu_under_abs=_down(b.mu_under_abs),
            unguarded=_down(b.unguarded),
            has_meta=b.has_meta,
            has_mu=True,
            has_fvar=b.has_fvar,
        )

    __hash__ = Term.__hash__

    def __eq__(self, other: object) -> bool:
        return self is other or (type(other) is Mu and other._hash == self._hash and other.body == self.body)


def mu(body: Term, name: str = "a") -> Term:
    """Recursion binder that disappears when its variable is unused."""
    if 0 in body.free_mu:
        return Mu(body, name)
    return shift_mu(body, -1, 1) if body.free_mu else body


def const(symbol: str) -> Fun:
    return Fun(symbol, ())


TOP_TERM = Fun(TOP, ())
BOTTOM_TERM = Fun(BOTTOM, ())


# ---------------------------------------------------------------------------
# index shifting and recursion unfolding


def _max_mu(t: Term) -> int:
    return max(t.free_mu) if t.free_mu else -1


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add ``by`` to every loose abstraction index that is ``>= cutoff``."""
    if by == 0 or t.free_abs <= cutoff:
        return t
    match t:
        case Var(i):
            return Var(i + by)
        case Abs(body, name):
            return Abs(shift(body, by, cutoff + 1), name)
        case Fun(f, args):
            return Fun(f, tuple(shift(a, by, cutoff) for a in args))
        case Meta(z, args):
            return Meta(z, tuple(shift(a, by, cutoff) for a in args))
        case Mu(body, name):
            return Mu(shift(body, by, cutoff), name)
    return t


def shift_mu(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add ``by`` to every loose recursion index that is ``>= cutoff``."""
    if by == 0 or _max_mu(t) < cutoff:
        return t
    match t:
        case MuVar(k):
            return MuVar(k + by)
        case Abs(body, name):
            return Abs(shift_mu(body, by, cutoff), name)
        case Fun(f, args):
            return Fun(f, tuple(shift_mu(a, by, cutoff) for a in args))
        case Meta(z, args):
            return Meta(z, tuple(shift_mu(a, by, cutoff) for a in args))
        case Mu(body, name):
            return Mu(shift_mu(body, by, cutoff + 1), name)
    return t


def _plug_mu(t: Term, m: Term, j: int, d: int) -> Term:
    # replace recursion variable j by m, which sits under d extra abstractions and j extra recursions
    if _max_mu(t) < j:
        return t
    match t:
        case MuVar(k):
            if k == j:
                return shift(shift_mu(m, j), d)
            return MuVar(k - 1) if k > j else t
        case Abs(body, name):
            return Abs(_plug_mu(body, m, j, d + 1), name)
        case Fun(f, args):
            return Fun(f, tuple(_plug_mu(a, m, j, d) for a in args))
        case Meta(z, args):
            return Meta(z, tuple(_plug_mu(a, m, j, d) for a in args))
        case Mu(body, name):
            return mu(_plug_mu(body, m, j + 1, d), name)
    return t


def unfold(t: Term) -> Term:
    """Unfold recursion binders at the root until a proper head appears."""
    while type(t) is Mu:
        t = _plug_mu(t.body, t, 0, 0)
    return t


def children(t: Term) -> tuple[Term, ...]:
    """Immediate subterms of an unfolded node, in position order."""
    match t:
        case Abs(body):
            return (body,)
        case Fun(_, args) | Meta(_, args):
            return args
    return ()


def child_indices(t: Term) -> range:
    match t:
        case Abs():
            return range(0, 1)
        case Fun(_, args) | Meta(_, args):
            return range(1, len(args) + 1)
    return range(0)


def child(t: Term, i: int) -> Term:
    match t:
        case Abs(body) if i == 0:
            return body
        case Fun(_, args) | Meta(_, args) if 1 <= i <= len(args):
            return args[i - 1]
    raise InvalidPosition(f"no child {i} at this node")


def with_child(t: Term, i: int, new: Term) -> Term:
    match t:
        case Abs(_, name) if i == 0:
            return Abs(new, name)
        case Fun(f, args) if 1 <= i <= len(args):
            return Fun(f, args[: i - 1] + (new,) + args[i:])
        case Meta(z, args) if 1 <= i <= len(args):
            return Meta(z, args[: i - 1] + (new,) + args[i:])
    raise InvalidPosition(f"no child {i} at this node")


@dataclass(frozen=True, slots=True)
class RootSymbol:
    """The head of a term: its kind plus the label that identifies it."""

    kind: str  # "var", "fvar", "abs", "fun", "meta", "muvar"
    label: object = None
    arity: int = 0

    def __str__(self) -> str:
        match self.kind:
            case "abs":
                return "[]"
            case "var":
                return f"#{self.label}"
            case _:
                return str(self.label)


def head(t: Term) -> RootSymbol:
    """Head of an already unfolded node."""
    match t:
        case Var(i):
            return RootSymbol("var", i)
        case FVar(n):
            return RootSymbol("fvar", n)
        case Abs():
            return RootSymbol("abs", None, 1)
        case Fun(f, args):
            return RootSymbol("fun", f, len(args))
        case Meta(z, args):
            return RootSymbol("meta", z, len(args))
        case MuVar(k):
            return RootSymbol("muvar", k)
    raise TypeError(f"not a term: {t!r}")


def root_symbol(s: Term) -> RootSymbol:
    return head(unfold(s))


# ---------------------------------------------------------------------------
# positions


def subterm_at(s: Term, p: Sequence[int]) -> Term:
    """Subterm at ``p``; variables bound above ``p`` come back as loose indices."""
    t = s
    for i in p:
        try:
            t = child(unfold(t), i)
        except InvalidPosition:
            raise InvalidPosition(f"position {list(p)} does not exist") from None
    return t


def replace_at(s: Term, p: Sequence[int], new: Term) -> Term:
    """Put ``new`` at ``p``.  Loose indices of ``new`` are captured by the binders above ``p``."""
    if not p:
        return new
    t = unfold(s)
    i = p[0]
    try:
        sub = child(t, i)
    except InvalidPosition:
        raise InvalidPosition(f"position {list(p)} does not exist") from None
    return with_child(t, i, replace_at(sub, p[1:], new))


def is_valid_position(s: Term, p: Sequence[int]) -> bool:
    try:
        subterm_at(s, p)
    except InvalidPosition:
        return False
    return True


def is_prefix(p: Sequence[int], q: Sequence[int]) -> bool:
    return len(p) <= len(q) and tuple(q[: len(p)]) == tuple(p)


def parallel(p: Sequence[int], q: Sequence[int]) -> bool:
    return not is_prefix(p, q) and not is_prefix(q, p)


def abs_count(p: Sequence[int]) -> int:
    """Number of abstractions passed on the way down along ``p``."""
    return sum(1 for i in p if i == 0)


def iter_positions(s: Term, depth: int) -> Iterator[tuple[Position, Term]]:
    """Breadth-first walk of ``(position, unfolded subterm)`` down to ``depth``."""
    queue: deque[tuple[Position, Term]] = deque([((), unfold(s))])
    while queue:
        p, t = queue.popleft()
        yield p, t
        if len(p) < depth:
            for i, c in zip(child_indices(t), children(t)):
                queue.append((p + (i,), unfold(c)))


def positions_up_to(s: Term, depth: int) -> set[Position]:
    return {p for p, _ in iter_positions(s, depth)}


def truncate(s: Term, depth: int, filler: str = TOP) -> Term:
    """Cut every branch at ``depth`` and put the constant ``filler`` there."""
    if depth <= 0:
        return Fun(filler, ())
    t = unfold(s)
    match t:
        case Abs(body, name):
            return Abs(truncate(body, depth - 1, filler), name)
        case Fun(f, args):
            return Fun(f, tuple(truncate(a, depth - 1, filler) for a in args))
        case Meta(z, args):
            return Meta(z, tuple(truncate(a, depth - 1, filler) for a in args))
    return t


def height(s: Term) -> int:
    """Height of a finite term (a leaf has height 0)."""
    if s.has_mu:
        raise ValueError("infinite term has no height")
    cs = children(s)
    return 1 + max(height(c) for c in cs) if cs else 0


# ---------------------------------------------------------------------------
# alpha-equivalence and the metric


def alpha_eq(a: Term, b: Term) -> bool:
    """Equality of the (possibly infinite) unfoldings, decided by bisimulation."""
    if a is b or a == b:
        return True
    seen: set[tuple[Term, Term]] = set()
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y or (x._hash == y._hash and x == y):
            continue
        if (x, y) in seen:
            continue
        seen.add((x, y))
        x, y = unfold(x), unfold(y)
        if head(x) != head(y):
            return False
        stack.extend(zip(children(x), children(y)))
    return True


@total_ordering
@dataclass(frozen=True, slots=True)
class Distance:
    """``2^-exponent``, or zero when ``exponent`` is ``None``."""

    exponent: int | None

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    @property
    def value(self) -> Fraction:
        return Fraction(0) if self.exponent is None else Fraction(1, 2**self.exponent)

    def __lt__(self, other: Distance) -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return "0" if self.exponent is None else f"2^-{self.exponent}"


ZERO = Distance(None)


def distance(a: Term, b: Term) -> Distance:
    """Ultrametric distance: ``2^-k`` for the least depth ``k`` where the unfoldings differ."""
    seen: set[tuple[Term, Term]] = set()
    queue: deque[tuple[Term, Term, int]] = deque([(a, b, 0)])
    while queue:
        x, y, k = queue.popleft()
        if x is y or (x._hash == y._hash and x == y) or (x, y) in seen:
            continue
        seen.add((x, y))
        x, y = unfold(x), unfold(y)
        if head(x) != head(y):
            return Distance(k)
        queue.extend((c, d, k + 1) for c, d in zip(children(x), children(y)))
    return ZERO


# ---------------------------------------------------------------------------
# chains of meta-variables


@dataclass(frozen=True, slots=True)
class Chain:
    """Directly nested meta-variable applications.

    ``links`` lists ``(position, hole)`` pairs: the meta-variable at
    ``position`` has the next one as argument ``hole``.  The last link of a
    finite chain has ``hole=None``; an infinite chain ends with the link that
    closes the cycle.
    """

    links: tuple[tuple[Position, int | None], ...]
    infinite: bool

    @property
    def kind(self) -> str:
        return "cyclic-infinite" if self.infinite else "finite"

    @property
    def start(self) -> Position:
        return self.links[0][0]


MAX_CHAINS = 10_000


def find_meta_chains(s: Term) -> list[Chain]:
    """All maximal chains, one per distinct starting subterm of the unfolding."""
    chains: list[Chain] = []
    seen: set[tuple[Term, bool]] = set()
    queue: deque[tuple[Term, Position, bool]] = deque([(unfold(s), (), False)])

    def walk(t: Term, pos: Position, on_path: frozenset[Term], links: tuple) -> None:
        if len(chains) >= MAX_CHAINS:
            return
        nested = [(i, unfold(c)) for i, c in zip(child_indices(t), children(t)) if type(unfold(c)) is Meta]
        if not nested:
            chains.append(Chain(links + ((pos, None),), False))
            return
        for i, c in nested:
            if c in on_path:
                chains.append(Chain(links + ((pos, i),), True))
            else:
                walk(c, pos + (i,), on_path | {c}, links + ((pos, i),))

    while queue:
        t, pos, under_meta = queue.popleft()
        if (t, under_meta) in seen:
            continue
        seen.add((t, under_meta))
        is_meta = type(t) is Meta
        if is_meta and not under_meta:
            walk(t, pos, frozenset({t}), ())
        for i, c in zip(child_indices(t), children(t)):
            queue.append((unfold(c), pos + (i,), is_meta))
    return chains


def has_finite_chains(s: Term) -> bool:
    if not s.has_meta:
        return True
    return not any(c.infinite for c in find_meta_chains(s))


# ---------------------------------------------------------------------------
# canonical rational form


def _state_graph(s: Term) -> tuple[list[Term], list[list[int]]]:
    states: list[Term] = []
    ids: dict[Term, int] = {}
    succ: list[list[int]] = []

    def intern(t: Term) -> int:
        t = unfold(t)
        k = ids.get(t)
        if k is None:
            k = ids[t] = len(states)
            states.append(t)
            succ.append([])
        return k

    intern(s)
    i = 0
    while i < len(states):
        succ[i] = [intern(c) for c in children(states[i])]
        i += 1
    return states, succ


def _relabel(keys: list) -> list[int]:
    table: dict = {}
    return [table.setdefault(k, len(table)) for k in keys]


def minimize(s: Term) -> Term:
    """Canonical representative of the alpha-class of ``s``.

    Two terms are alpha-equivalent exactly when their canonical forms are
    structurally equal, so the result can serve as a hash key for rational
    terms.  Shared subterms of the minimal graph are written out as trees.
    """
    if not s.has_mu:
        return s
    states, succ = _state_graph(s)
    heads = [head(t) for t in states]
    cls = _relabel(heads)
    while True:
        refined = _relabel([(cls[i], tuple(cls[j] for j in succ[i])) for i in range(len(states))])
        if max(refined) == max(cls):
            break
        cls = refined
    rep: dict[int, int] = {}
    for i, c in enumerate(cls):
        rep.setdefault(c, i)

    frames: list[tuple[int, int, int]] = []  # (class, abs depth at entry, frame id)
    counter = [0]

    def build(c: int, depth: int) -> tuple[object, frozenset[int]]:
        i = rep[c]
        closed = states[i].free_abs == 0
        for fc, fdepth, fid in reversed(frames):
            if fc == c and (closed or fdepth == depth):
                return ("ref", fid), frozenset({fid})
        if len(frames) > 100_000:
            raise NonRationalTerm("could not fold the term into recursion binders")
        fid = counter[0]
        counter[0] += 1
        frames.append((c, depth, fid))
        t = states[i]
        kids = []
        used: frozenset[int] = frozenset()
        for j in succ[i]:
            k, u = build(cls[j], depth + (1 if type(t) is Abs else 0))
            kids.append(k)
            used |= u
        frames.pop()
        node = ("node", t, kids)
        if fid in used:
            return ("bind", fid, node), used - {fid}
        return node, used

    proto, _ = build(cls[0], 0)

    def convert(p: object, binders: list[int]) -> Term:
        match p:
            case ("ref", fid):
                return MuVar(len(binders) - 1 - binders.index(fid))
            case ("bind", fid, body):
                return Mu(convert(body, binders + [fid]))
            case ("node", t, kids):
                match t:
                    case Abs(_, name):
                        return Abs(convert(kids[0], binders), name)
                    case Fun(f, _):
                        return Fun(f, tuple(convert(k, binders) for k in kids))
                    case Meta(z, _):
                        return Meta(z, tuple(convert(k, binders) for k in kids))
                    case _:
                        return t
        raise AssertionError(p)

    return convert(proto, [])


def term_size(s: Term) -> int:
    """Number of syntax nodes, recursion binders included."""
    match s:
        case Abs(body) | Mu(body):
            return 1 + term_size(body)
        case Fun(_, args) | Meta(_, args):
            return 1 + sum(term_size(a) for a in args)
    return 1


def meta_variables(s: Term) -> dict[str, int]:
    """Meta-variable names with their arities (first occurrence wins)."""
    out: dict[str, int] = {}
    stack = [s]
    while stack:
        t = stack.pop()
        if not t.has_meta:
            continue
        match t:
            case Meta(z, args):
                out.setdefault(z, len(args))
                stack.extend(args)
            case Abs(body) | Mu(body):
                stack.append(body)
            case Fun(_, args):
                stack.extend(args)
    return out


def free_names(s: Term) -> set[str]:
    out: set[str] = set()
    stack = [s]
    while stack:
        t = stack.pop()
        if not t.has_fvar:
            continue
        match t:
            case FVar(n):
                out.add(n)
            case Abs(body) | Mu(body):
                stack.append(body)
            case Fun(_, args) | Meta(_, args):
                stack.extend(args)
    return out


def symbols(s: Term) -> set[str]:
    out: set[str] = set()
    stack = [s]
    while stack:
        t = stack.pop()
        match t:
            case Fun(f, args):
                out.add(f)
                stack.extend(args)
            case Meta(_, args):
                stack.extend(args)
            case Abs(body) | Mu(body):
                stack.append(body)
    return out
