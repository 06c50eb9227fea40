"""Rewrite rules, rule systems and their static classification."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import InvalidRule, ParseError, TermError
from .syntax import Signature, parse_meta_term, show
from .terms import (
    Abs,
    FVar,
    Fun,
    Meta,
    Mu,
    Position,
    Term,
    Var,
    child_indices,
    children,
    find_meta_chains,
    meta_variables,
    unfold,
)
from .valuation import Substitute, abstract_pattern_args, apply_partially


@dataclass(frozen=True)
class Rule:
    name: str
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.name}: {show(self.lhs)} -> {show(self.rhs)}"

    @cached_property
    def lhs_metas(self) -> dict[str, int]:
        return meta_variables(self.lhs)

    @cached_property
    def meta_positions(self) -> dict[Position, str]:
        """Positions of the meta-variable occurrences in the left-hand side."""
        out: dict[Position, str] = {}
        for p, t in _finite_positions(self.lhs):
            if type(t) is Meta:
                out[p] = t.name
        return out

    @cached_property
    def pattern_positions(self) -> frozenset[Position]:
        """Positions of the lhs that are not at or below a meta-variable."""
        metas = self.meta_positions
        return frozenset(
            p for p, _ in _finite_positions(self.lhs) if not any(p[: len(m)] == m for m in metas)
        )


def _finite_positions(t: Term, prefix: Position = ()) -> list[tuple[Position, Term]]:
    out = [(prefix, t)]
    for i, c in zip(child_indices(t), children(t)):
        out.extend(_finite_positions(c, prefix + (i,)))
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ConditionResult:
    ok: bool
    witness: Position | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the four rule conditions."""

    pattern_root: ConditionResult
    rhs_metas_in_lhs: ConditionResult
    closed: ConditionResult
    finite_chains: ConditionResult

    @property
    def valid(self) -> bool:
        return all(c.ok for c in self.conditions.values())

    @property
    def conditions(self) -> dict[str, ConditionResult]:
        return {
            "pattern-with-symbol-root": self.pattern_root,
            "rhs-metas-occur-in-lhs": self.rhs_metas_in_lhs,
            "closed": self.closed,
            "finite-chains": self.finite_chains,
        }

    def failures(self) -> list[str]:
        return [
            f"{name} (at {list(c.witness) if c.witness is not None else '-'}){': ' + c.detail if c.detail else ''}"
            for name, c in self.conditions.items()
            if not c.ok
        ]


def _pattern_violation(l: Term) -> tuple[Position, str] | None:
    def go(t: Term, p: Position, d: int) -> tuple[Position, str] | None:
        match t:
            case Meta(z, args):
                seen: set[int] = set()
                for j, a in enumerate(args, 1):
                    if type(a) is not Var or a.index >= d:
                        return p + (j,), f"argument of {z} is not a bound variable"
                    if a.index in seen:
                        return p + (j,), f"repeated bound variable in {z}"
                    seen.add(a.index)
                return None
            case Abs(body):
                return go(body, p + (0,), d + 1)
            case Fun(_, args):
                for j, a in enumerate(args, 1):
                    bad = go(a, p + (j,), d)
                    if bad:
                        return bad
        return None

    return go(l, (), 0)


def is_pattern(l: Term) -> bool:
    """Every meta-variable is applied to pairwise distinct bound variables."""
    if l.has_mu:
        raise ValueError("a pattern must be finite")
    return _pattern_violation(l) is None


def _first_open_position(t: Term) -> Position | None:
    for p, u in _walk(t, 12):
        if type(u) is FVar:
            return p
        if type(u) is Var and u.index >= _binders_on(t, p):
            return p
    return None


def _binders_on(t: Term, p: Position) -> int:
    return sum(1 for i in p if i == 0)


def _walk(t: Term, depth: int) -> Iterable[tuple[Position, Term]]:
    from .terms import iter_positions

    return iter_positions(t, depth)


def validate_rule(r: Rule) -> ValidationReport:
    l, rhs = r.lhs, r.rhs
    if l.has_mu:
        cond1 = ConditionResult(False, (), "left-hand side must be finite")
    elif type(l) is not Fun:
        cond1 = ConditionResult(False, (), "no function symbol at the root")
    else:
        bad = _pattern_violation(l)
        cond1 = ConditionResult(True) if bad is None else ConditionResult(False, bad[0], bad[1])

    lm = meta_variables(l)
    cond2 = ConditionResult(True)
    for p, u in _walk(rhs, 64):
        if type(u) is Meta and (u.name not in lm or lm[u.name] != len(u.args)):
            cond2 = ConditionResult(False, p, f"{u.name} does not occur in the left-hand side with this arity")
            break

    cond3 = ConditionResult(True)
    for side, t in (("lhs", l), ("rhs", rhs)):
        if t.free_abs or t.free_mu or t.has_fvar:
            p = _first_open_position(t)
            cond3 = ConditionResult(False, p, f"{side} is not closed")
            break

    infinite = [c for c in find_meta_chains(rhs) if c.infinite]
    cond4 = ConditionResult(True) if not infinite else ConditionResult(False, infinite[0].start, "infinite chain")
    return ValidationReport(cond1, cond2, cond3, cond4)


# ---------------------------------------------------------------------------
# pattern unification


class _Clash(Exception):
    pass


class PatternUnifier:
    """Most general unifiers of finite higher-order patterns.

    Loose indices of the inputs are outer bound variables and behave as
    constants that any substitute may mention.
    """

    def __init__(self) -> None:
        self.theta: dict[str, Substitute] = {}
        self.fresh = 0

    def _new_meta(self) -> str:
        self.fresh += 1
        return f"_W{self.fresh}"

    def _bind(self, z: str, sub: Substitute) -> None:
        single = {z: sub}
        self.theta = {y: Substitute(s.arity, apply_partially(single, s.body)) for y, s in self.theta.items()}
        self.theta[z] = sub

    def resolve(self, t: Term) -> Term:
        return apply_partially(self.theta, t) if self.theta else t

    def unify(self, a: Term, b: Term) -> dict[str, Substitute] | None:
        try:
            eqs = [(a, b, 0)]
            while eqs:
                x, y, k = eqs.pop()
                x, y = self.resolve(x), self.resolve(y)
                if x == y:
                    continue
                if type(x) is Meta and type(y) is Meta:
                    self._flex_flex(x, y, k)
                elif type(x) is Meta:
                    self._flex_rigid(x, y, k, eqs)
                elif type(y) is Meta:
                    self._flex_rigid(y, x, k, eqs)
                elif type(x) is Abs and type(y) is Abs:
                    eqs.append((x.body, y.body, k + 1))
                elif type(x) is Fun and type(y) is Fun:
                    if x.symbol != y.symbol or len(x.args) != len(y.args):
                        raise _Clash
                    eqs.extend((p, q, k) for p, q in zip(x.args, y.args))
                else:
                    raise _Clash  # distinct variables or mismatched heads
        except _Clash:
            return None
        return dict(self.theta)

    @staticmethod
    def _arg_indices(m: Meta) -> list[int]:
        out = []
        for a in m.args:
            if type(a) is not Var:
                raise _Clash  # outside the pattern fragment
            out.append(a.index)
        return out

    def _flex_flex(self, x: Meta, y: Meta, k: int) -> None:
        xs, ys = self._arg_indices(x), self._arg_indices(y)
        w = self._new_meta()
        if x.name == y.name:
            keep = [j for j in range(len(xs)) if xs[j] == ys[j]]
            n = len(xs)
            self._bind(x.name, Substitute(n, Meta(w, tuple(Var(n - 1 - j) for j in keep))))
            return
        common = [v for v in xs if v in ys]
        n, m = len(xs), len(ys)
        self._bind(x.name, Substitute(n, Meta(w, tuple(Var(n - 1 - xs.index(v)) for v in common))))
        self._bind(y.name, Substitute(m, Meta(w, tuple(Var(m - 1 - ys.index(v)) for v in common))))

    def _flex_rigid(self, x: Meta, t: Term, k: int, eqs: list) -> None:
        xs = self._arg_indices(x)
        if _mentions_meta(t, x.name):
            raise _Clash
        # prune meta-variables in t that receive local variables x cannot see
        pruned = self._prune(t, xs, k)
        if pruned:
            eqs.append((x, t, k))
            return
        # local variables become parameters; outer ones (>= k) stay constants
        body = abstract_pattern_args(t, xs, k)
        if body is None:
            raise _Clash
        self._bind(x.name, Substitute(len(xs), body))

    def _prune(self, t: Term, xs: list[int], k: int) -> bool:
        changed = False

        def go(u: Term, e: int) -> None:
            nonlocal changed
            match u:
                case Var(i):
                    m = i - e
                    if e <= i and m < k and m not in xs:
                        raise _Clash
                case Abs(b):
                    go(b, e + 1)
                case Fun(_, args):
                    for a in args:
                        go(a, e)
                case Meta(z, args):
                    idx = self._arg_indices(u)
                    keep = [j for j, i in enumerate(idx) if i < e or i - e >= k or (i - e) in xs]
                    if len(keep) != len(idx):
                        n = len(idx)
                        w = self._new_meta()
                        self._bind(z, Substitute(n, Meta(w, tuple(Var(n - 1 - j) for j in keep))))
                        changed = True
                case Mu():
                    raise _Clash

        go(t, 0)
        return changed


def _mentions_meta(t: Term, name: str) -> bool:
    if not t.has_meta:
        return False
    match t:
        case Meta(z, args):
            return z == name or any(_mentions_meta(a, name) for a in args)
        case Abs(b) | Mu(b):
            return _mentions_meta(b, name)
        case Fun(_, args):
            return any(_mentions_meta(a, name) for a in args)
    return False


def unify_patterns(a: Term, b: Term) -> dict[str, Substitute] | None:
    return PatternUnifier().unify(a, b)


def rename_metas(t: Term, suffix: str) -> Term:
    match t:
        case Meta(z, args):
            return Meta(z + suffix, tuple(rename_metas(a, suffix) for a in args))
        case Abs(b, name):
            return Abs(rename_metas(b, suffix), name)
        case Fun(f, args):
            return Fun(f, tuple(rename_metas(a, suffix) for a in args))
        case Mu(b, name):
            return Mu(rename_metas(b, suffix), name)
    return t


@dataclass(frozen=True)
class Overlap:
    rule1: Rule
    rule2: Rule
    position: Position
    unifier: dict[str, Substitute]


def find_overlap(r1: Rule, r2: Rule) -> Overlap | None:
    """First overlap of ``r2``'s lhs into a non-meta-variable position of ``r1``'s lhs."""
    l1 = rename_metas(r1.lhs, "#1")
    l2 = rename_metas(r2.lhs, "#2")
    same = r1 is r2 or (r1.name == r2.name and r1.lhs == r2.lhs and r1.rhs == r2.rhs)
    for p, u in _finite_positions(l1):
        if type(u) is not Fun:
            continue
        if not p and same:
            continue
        theta = unify_patterns(u, l2)
        if theta is not None:
            return Overlap(r1, r2, p, theta)
    return None


# ---------------------------------------------------------------------------
# systems


def is_collapsing(r: Rule) -> bool:
    return type(unfold(r.rhs)) is Meta


@dataclass(frozen=True)
class RuleSystem:
    signature: Signature
    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise InvalidRule("rule names must be unique")

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def index_of(self, rule: Rule) -> int:
        for i, r in enumerate(self.rules):
            if r is rule or r.name == rule.name:
                return i
        raise KeyError(rule.name)

    @cached_property
    def analysis(self) -> SystemAnalysis:
        return analyse(self)

    @property
    def orthogonal(self) -> bool:
        return self.analysis.orthogonal

    @property
    def fully_extended(self) -> bool:
        return self.analysis.fully_extended


@dataclass(frozen=True)
class SystemAnalysis:
    left_linear: bool
    nonlinear_witnesses: tuple[tuple[str, str], ...]
    fully_extended: bool
    extension_witnesses: tuple[tuple[str, Position], ...]
    overlaps: tuple[Overlap, ...]
    orthogonal: bool
    collapsing_rules: tuple[str, ...]
    almost_non_collapsing: bool
    invalid_rules: tuple[tuple[str, tuple[str, ...]], ...]


def left_linearity_witnesses(sys: RuleSystem) -> list[tuple[str, str]]:
    out = []
    for r in sys.rules:
        counts: dict[str, int] = {}
        for _, u in _finite_positions(r.lhs):
            if type(u) is Meta:
                counts[u.name] = counts.get(u.name, 0) + 1
        out.extend((r.name, z) for z, c in counts.items() if c > 1)
    return out


def is_left_linear(sys: RuleSystem) -> bool:
    return not left_linearity_witnesses(sys)


def full_extension_witnesses(sys: RuleSystem) -> list[tuple[str, Position]]:
    """Meta-variable occurrences that do not receive every variable bound above them."""
    out = []
    for r in sys.rules:
        for p, u in _finite_positions(r.lhs):
            if type(u) is Meta:
                d = _binders_on(r.lhs, p)
                given = {a.index for a in u.args if type(a) is Var}
                if not set(range(d)) <= given:
                    out.append((r.name, p))
    return out


def is_fully_extended(sys: RuleSystem) -> bool:
    return not full_extension_witnesses(sys)


def all_overlaps(sys: RuleSystem) -> list[Overlap]:
    out = []
    for r1 in sys.rules:
        for r2 in sys.rules:
            o = find_overlap(r1, r2)
            if o is not None:
                out.append(o)
    return out


def is_orthogonal(sys: RuleSystem) -> bool:
    return is_left_linear(sys) and not all_overlaps(sys)


def is_almost_non_collapsing(sys: RuleSystem) -> bool:
    collapsing = [r for r in sys.rules if is_collapsing(r)]
    if len(collapsing) > 1:
        return False
    if not collapsing:
        return True
    r = collapsing[0]
    root = unfold(r.rhs)
    assert type(root) is Meta
    return set(r.lhs_metas) == {root.name}


def analyse(sys: RuleSystem) -> SystemAnalysis:
    nonlinear = left_linearity_witnesses(sys)
    ext = full_extension_witnesses(sys)
    overlaps = all_overlaps(sys)
    invalid = []
    for r in sys.rules:
        rep = validate_rule(r)
        if not rep.valid:
            invalid.append((r.name, tuple(rep.failures())))
    return SystemAnalysis(
        left_linear=not nonlinear,
        nonlinear_witnesses=tuple(nonlinear),
        fully_extended=not ext,
        extension_witnesses=tuple(ext),
        overlaps=tuple(overlaps),
        orthogonal=not nonlinear and not overlaps,
        collapsing_rules=tuple(r.name for r in sys.rules if is_collapsing(r)),
        almost_non_collapsing=is_almost_non_collapsing(sys),
        invalid_rules=tuple(invalid),
    )


# ---------------------------------------------------------------------------
# rule files


def parse_rule(text: str, signature: Signature, name: str = "r") -> Rule:
    """Parse ``LHS -> RHS`` (optionally prefixed by ``name:``)."""
    head, sep, rest = text.partition(":")
    if sep and head.strip() and " " not in head.strip() and "(" not in head and "[" not in head:
        name, text = head.strip(), rest
    lhs_text, arrow, rhs_text = text.partition("->")
    if not arrow:
        raise ParseError("rule needs '->'")
    metas: dict[str, int] = {}
    lhs = parse_meta_term(lhs_text, signature, metas)
    rhs = parse_meta_term(rhs_text, signature, metas)
    return Rule(name, lhs, rhs)


def parse_rules(text: str, signature: Signature | None = None, strict: bool = True) -> RuleSystem:
    """Read a rule file: ``sig`` lines followed by ``name: LHS -> RHS`` lines.

    With ``strict`` every rule must pass :func:`validate_rule`.
    """
    arities: dict[str, int] = dict(signature.arities) if signature else {}
    rule_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("sig ") or line == "sig":
            try:
                more = Signature.parse(line[3:])
            except TermError as exc:
                raise ParseError(str(exc), lineno, 1) from None
            for f, n in more.arities.items():
                if f in arities and arities[f] != n:
                    raise ParseError(f"symbol {f!r} declared with two arities", lineno, 1)
                arities[f] = n
            continue
        rule_lines.append((lineno, line))
    sig = Signature(arities)
    rules: list[Rule] = []
    for k, (lineno, line) in enumerate(rule_lines, 1):
        try:
            r = parse_rule(line, sig, f"r{k}")
        except ParseError as exc:
            raise ParseError(exc.detail, lineno, exc.column) from None
        except TermError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        if strict:
            rep = validate_rule(r)
            if not rep.valid:
                raise InvalidRule(f"line {lineno}: rule {r.name} is invalid: {'; '.join(rep.failures())}")
        rules.append(r)
    return RuleSystem(sig, tuple(rules))


def format_rules(sys: RuleSystem) -> str:
    lines = [f"sig {sys.signature}"] if sys.signature.arities else []
    reserved = set(sys.signature.arities)
    lines += [f"{r.name}: {show(r.lhs, reserved)} -> {show(r.rhs, reserved)}" for r in sys.rules]
    return "\n".join(lines) + "\n"
