"""Random instance generators shared by the hypothesis tests and the seeded acceptance loops.

Generators draw from a ``Source`` so the same code runs on a seeded
``random.Random`` and on hypothesis' ``data.draw``.
"""

from __future__ import annotations

import random
from typing import Protocol, Sequence, TypeVar

from hypothesis import strategies as st

from icrs import (
    Abs,
    Fun,
    MuVar,
    Term,
    TermError,
    Var,
    apply_step,
    find_redexes,
    mu,
    parse_rules,
    parse_term,
    replace_at,
)
from icrs.terms import positions_up_to
from icrs.rules import RuleSystem

T = TypeVar("T")


class Source(Protocol):
    def int(self, lo: int, hi: int) -> int: ...


class RandomSource:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def int(self, lo: int, hi: int) -> int:
        return self.rng.randint(lo, hi)


class DataSource:
    def __init__(self, data) -> None:
        self.data = data

    def int(self, lo: int, hi: int) -> int:
        return self.data.draw(st.integers(lo, hi))


def choice(src: Source, xs: Sequence[T]) -> T:
    return xs[src.int(0, len(xs) - 1)]


def subset(src: Source, xs: Sequence[T], most: int) -> list[T]:
    k = src.int(1, min(most, len(xs)))
    pool = list(xs)
    out = []
    for _ in range(k):
        out.append(pool.pop(src.int(0, len(pool) - 1)))
    return out


# ---------------------------------------------------------------------------
# rational terms over f/1, g/2, a/0, b/0


def rational_term(src: Source, depth: int, k: int = 0, j: int = 0, guarded: bool = True) -> Term:
    leaves: list = [Fun("a", ()), Fun("b", ())]
    leaves += [Var(i) for i in range(k)]
    if guarded:
        leaves += [MuVar(i) for i in range(j)]
    if depth <= 0:
        return choice(src, leaves)
    kind = src.int(0, 5)
    match kind:
        case 0:
            return choice(src, leaves)
        case 1:
            return Fun("f", (rational_term(src, depth - 1, k, j, True),))
        case 2:
            return Fun("g", (rational_term(src, depth - 1, k, j, True), rational_term(src, depth - 1, k, j, True)))
        case 3:
            return Abs(rational_term(src, depth - 1, k + 1, j, True), "x")
        case _:
            body = rational_term(src, depth - 1, k, j + 1, False)
            try:
                return mu(body)
            except TermError:
                return Fun("f", (Fun("a", ()),))


def term_variant(src: Source, t: Term, depth: int) -> Term:
    """``t`` with the subterm at a random position above ``depth`` replaced (for close pairs)."""
    ps = sorted(positions_up_to(t, depth))
    p = choice(src, ps)
    try:
        return replace_at(t, p, rational_term(src, 2))
    except TermError:
        return t


# ---------------------------------------------------------------------------
# orthogonal systems

ORTHO_SIG = "sig e/2 d/1 k/1 h/1 app/2 lam/1 m/2 q/1 p/2 c/1 a/0 b/0"

ORTHO_POOL = {
    "e": "e(Z, Z') -> Z'",
    "d": "d(Z) -> p(Z, Z)",
    "k": "k(Z) -> Z",
    "h": "h(c(Z)) -> p(Z, h(Z))",
    "beta": "app(lam([x]Z(x)), Z') -> Z(Z')",
    "m": "m([x]F(x), c(X)) -> c(F(X))",
    "q": "q([x]Z(x)) -> p(Z(a), Z(b))",
}
NON_COLLAPSING = ("d", "h", "m", "q")


def ortho_system(src: Source, names: Sequence[str] = tuple(ORTHO_POOL)) -> RuleSystem:
    chosen = sorted(subset(src, list(names), len(names)))
    text = ORTHO_SIG + "\n" + "\n".join(f"{n}: {ORTHO_POOL[n]}" for n in chosen)
    return parse_rules(text)


_ORTHO_SYMBOLS = [("e", 2), ("d", 1), ("k", 1), ("h", 1), ("app", 2), ("lam", 1), ("m", 2), ("q", 1), ("p", 2), ("c", 1)]


def ortho_term(src: Source, depth: int, k: int = 0) -> Term:
    """Finite term over the orthogonal pool's signature, biased towards redexes."""
    leaves: list = [Fun("a", ()), Fun("b", ())] + [Var(i) for i in range(k)]
    if depth <= 0:
        return choice(src, leaves)
    kind = src.int(0, 9)
    if kind == 0:
        return choice(src, leaves)
    if kind == 1:
        return Abs(ortho_term(src, depth - 1, k + 1), "x")
    if kind == 2:  # beta redex
        return Fun("app", (Fun("lam", (Abs(ortho_term(src, depth - 1, k + 1), "x"),)), ortho_term(src, depth - 1, k)))
    if kind == 3:  # m redex
        return Fun("m", (Abs(ortho_term(src, depth - 1, k + 1), "x"), Fun("c", (ortho_term(src, depth - 1, k),))))
    if kind == 4:  # h redex
        return Fun("h", (Fun("c", (ortho_term(src, depth - 1, k),)),))
    if kind == 5:  # q redex
        return Fun("q", (Abs(ortho_term(src, depth - 1, k + 1), "x"),))
    f, n = choice(src, _ORTHO_SYMBOLS)
    if f == "lam":
        return Fun("lam", (Abs(ortho_term(src, depth - 1, k + 1), "x"),))
    return Fun(f, tuple(ortho_term(src, depth - 1, k) for _ in range(n)))


def random_reduction(src: Source, t: Term, sys: RuleSystem, length: int):
    from icrs import Reduction

    steps = []
    cur = t
    for _ in range(length):
        rs = find_redexes(cur, sys, 12)
        if not rs:
            break
        st_ = apply_step(cur, choice(src, rs))
        steps.append(st_)
        cur = st_.target
    return Reduction(t, tuple(steps))


# ---------------------------------------------------------------------------
# terms with hypercollapsing parts

HC_SYSTEM_TEXT = """
sig f/1 g/1 cons/2 nil/0 a/0 b/0 pair/2
rf: f(Z) -> Z
rg: g([x]Z(x)) -> Z([x]Z(x))
"""

HC_LEAVES = ["mu u. f(u)", "g([x]g(x))", "f(mu u. f(u))", "f(g([x]g(x)))"]
PLAIN_LEAVES = ["a", "b", "nil", "f(a)", "f(b)", "f(nil)"]


def hc_system() -> RuleSystem:
    return parse_rules(HC_SYSTEM_TEXT)


def hc_context(src: Source, depth: int) -> str:
    """A term skeleton with ``@`` marking slots for hypercollapsing leaves."""
    if depth <= 0:
        return "@" if src.int(0, 1) else choice(src, PLAIN_LEAVES)
    match src.int(0, 5):
        case 0:
            return "@"
        case 1:
            return choice(src, PLAIN_LEAVES)
        case 2:
            return f"cons({hc_context(src, depth - 1)}, {hc_context(src, depth - 1)})"
        case 3:
            return f"pair({hc_context(src, depth - 1)}, {hc_context(src, depth - 1)})"
        case 4:
            return f"f(cons({hc_context(src, depth - 1)}, nil))"
        case _:
            return f"f({hc_context(src, depth - 1)})"


def fill(skeleton: str, src: Source) -> str:
    out = []
    for ch in skeleton:
        out.append(choice(src, HC_LEAVES) if ch == "@" else ch)
    return "".join(out)


def hc_instance(src: Source, sys: RuleSystem, variants: int = 2, depth: int = 3) -> list[Term]:
    skel = hc_context(src, depth)
    return [parse_term(fill(skel, src), sys.signature) for _ in range(variants)]
