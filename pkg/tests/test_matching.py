from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

import systems
from generators import DataSource, ortho_system, ortho_term
from icrs import apply_valuation, find_redexes, match_at
from icrs.matching import first_redex, footprint, has_redex_beyond, is_normal_form, iter_redexes, match_pattern
from icrs.terms import alpha_eq, positions_up_to, subterm_at


def test_match_beta():
    sys_ = systems.load(systems.BETA)
    s = systems.term(sys_, "f([x] h(x), a)")
    v = match_at(sys_.rule("beta"), s, ())
    assert v is not None
    assert v["Z"](systems.term(sys_, "a")) == systems.term(sys_, "h(a)")
    assert v["Z'"]() == systems.term(sys_, "a")
    assert match_at(sys_.rule("beta"), systems.term(sys_, "g(a)"), ()) is None


def test_match_through_recursion():
    sys_ = systems.load(systems.MAP)
    s = systems.term(sys_, "hd(mu u. cons(0, u))")
    v = match_at(sys_.rule("hd"), s, ())
    assert v["X"]() == systems.term(sys_, "0")
    assert alpha_eq(v["XS"](), systems.term(sys_, "mu u. cons(0, u)"))


def test_match_rejects_escaping_bound_variable():
    # Z takes no argument, so the bound x cannot occur in its instance
    sys_ = systems.load("sig f/1 g/1\nr: f([x] g(Z)) -> Z\n")
    assert match_at(sys_.rule("r"), systems.term(sys_, "f([x] g(x))"), ()) is None
    assert match_at(sys_.rule("r"), systems.term(sys_, "f([x] g(f([y] y)))"), ()) is not None


def test_find_redexes_examples():
    sys_ = systems.load(systems.COLLAPSE)
    fw = systems.term(sys_, "mu u. f(u)")
    assert [r.position for r in find_redexes(fw, sys_, 2)] == [(), (1,), (1, 1)]
    assert find_redexes(systems.term(sys_, "nil"), sys_, 5) == []

    nest = systems.load(systems.NESTING)
    s = systems.term(nest, "f([x] f([y] x))")
    assert [r.position for r in find_redexes(s, nest, 2)] == [(), (1, 0)]
    assert [r.position for r in find_redexes(s, nest, 1)] == [()]


def test_redexes_sorted_by_position_then_rule():
    sys_ = systems.load("sig f/1 a/0\nr2: f(Z) -> a\nr1: f(a) -> a\n")
    rs = find_redexes(systems.term(sys_, "f(f(a))"), sys_, 3)
    assert [(r.position, r.rule.name) for r in rs] == [((), "r2"), ((1,), "r2"), ((1,), "r1")]


def test_footprint():
    sys_ = systems.load(systems.MAP)
    s = systems.term(sys_, "map([z] s(z), cons(0, nil))")
    (r,) = find_redexes(s, sys_, 3)
    assert footprint(r) == {(), (1,), (2,)}
    (h,) = find_redexes(systems.term(sys_, "hd(cons(0, nil))"), sys_, 3)
    assert footprint(h) == {(), (1,)}


def test_iter_redexes_after():
    sys_ = systems.load(systems.COLLAPSE)
    s = systems.term(sys_, "cons(f(a), f(f(b)))")
    all_ = [r.position for r in iter_redexes(s, sys_, 4)]
    assert all_ == [(1,), (2,), (2, 1)]
    assert [r.position for r in iter_redexes(s, sys_, 4, after=(1,))] == [(2,), (2, 1)]
    assert [r.position for r in iter_redexes(s, sys_, 4, after=(2,))] == [(2, 1)]
    assert first_redex(s, sys_, 4, after=(2, 1)) is None


def test_has_redex_beyond():
    sys_ = systems.load(systems.COLLAPSE)
    assert has_redex_beyond(systems.term(sys_, "mu u. cons(a, cons(f(a), u))"), sys_, 100)
    assert not has_redex_beyond(systems.term(sys_, "cons(f(a), nil)"), sys_, 1)
    assert has_redex_beyond(systems.term(sys_, "cons(f(a), nil)"), sys_, 0)
    assert is_normal_form(systems.term(sys_, "mu u. cons(a, u)"), sys_)
    assert not is_normal_form(systems.term(sys_, "f(a)"), sys_)


# ---------------------------------------------------------------------------
# brute force agreement


@given(st.data())
@settings(max_examples=150, derandomize=True, deadline=None)
def test_find_redexes_complete_and_sound(data):
    src = DataSource(data)
    sys_ = ortho_system(src)
    s = ortho_term(src, 4)
    bound = src.int(0, 4)
    found = {(r.position, r.rule.name) for r in find_redexes(s, sys_, bound)}
    brute = set()
    for p in positions_up_to(s, bound):
        for rule in sys_.rules:
            v = match_pattern(rule.lhs, subterm_at(s, p))
            if v is not None:
                brute.add((p, rule.name))
                # a match really is an instance of the left-hand side
                if subterm_at(s, p).is_closed:
                    assert alpha_eq(apply_valuation(v, rule.lhs), subterm_at(s, p))
    assert found == brute


@given(st.data())
@settings(max_examples=100, derandomize=True, deadline=None)
def test_after_is_a_suffix_of_preorder(data):
    src = DataSource(data)
    sys_ = ortho_system(src)
    s = ortho_term(src, 4)
    rs = [r.position for r in iter_redexes(s, sys_, 5)]
    for i, p in enumerate(rs):
        rest = [r.position for r in iter_redexes(s, sys_, 5, after=p)]
        assert rest == [q for q in rs[i + 1 :] if q != p]
