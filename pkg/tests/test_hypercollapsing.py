from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import systems
from generators import DataSource, RandomSource, fill, hc_context, hc_instance, hc_system
from icrs import (
    Answer,
    HcReading,
    HcStatus,
    SearchBudget,
    alpha_eq,
    apply_step,
    check_nf_properties,
    classify_out_step,
    detect_hypercollapsing,
    find_redexes,
    hc_equiv,
    hc_normalize,
    join_search,
    parse_rules,
    parse_term,
    replace_at,
    run_script,
    show,
    step_at,
    strip_restricted,
    subterm_at,
    truncate,
)
from icrs.hypercollapsing import hc_equiv_evidence, mark_out_steps
from icrs.reduction import reduce

HC = systems.load(systems.HC_UNION)


def hc(text: str):
    return systems.term(HC, text)


# ---------------------------------------------------------------------------
# detection


@pytest.mark.parametrize("text", ["mu u. f(u)", "g([x] g(x))", "f(mu u. f(u))", "f(g([x] g(x)))"])
def test_detects_hypercollapsing(text):
    v = detect_hypercollapsing(hc(text), HC)
    assert v.status is HcStatus.HYPERCOLLAPSING
    assert v.answer is Answer.YES
    assert any(st_.root_collapsing for st_ in v.witness.cycle.steps)


@pytest.mark.parametrize("text", ["a", "f(a)", "cons(mu u. f(u), nil)", "g([x] x)", "g([x] f(x))"])
def test_detects_absence(text):
    v = detect_hypercollapsing(hc(text), HC)
    assert v.status is HcStatus.NOT_WITHIN_BOUNDS
    assert v.answer is Answer.NO and v.witness is None


def test_detection_reports_unknown_when_budget_runs_out():
    sys_ = parse_rules("sig f/1 s/1 k/1 a/0\nr: f(Z) -> f(s(Z))\nk: k(Z) -> Z\n")
    v = detect_hypercollapsing(systems.term(sys_, "f(a)"), sys_, SearchBudget(max_states=5))
    assert v.status is HcStatus.UNKNOWN and v.answer is Answer.UNKNOWN


def test_no_collapsing_rules_means_no():
    sys_ = parse_rules("sig f/1 s/1 a/0\nr: f(Z) -> f(s(Z))\n")
    v = detect_hypercollapsing(systems.term(sys_, "f(a)"), sys_, SearchBudget(max_states=5))
    assert v.status is HcStatus.NOT_WITHIN_BOUNDS and v.states <= 1


def test_frozen_root_means_no():
    v = detect_hypercollapsing(hc("cons(mu u. f(u), nil)"), HC)
    assert v.status is HcStatus.NOT_WITHIN_BOUNDS and v.states <= 1


def test_self_loop_witness_shape():
    v = detect_hypercollapsing(hc("mu u. f(u)"), HC)
    assert v.states == 1
    assert len(v.witness.stem) == 0 and len(v.witness.cycle) == 1
    js = v.to_json()
    assert js["status"] == "hypercollapsing"
    assert js["lasso"]["cycle"][0]["rule"] == "rf"


@pytest.mark.parametrize("text", ["mu u. f(u)", "f(g([x] g(x)))", "f(f(mu u. f(u)))"])
def test_lasso_unrolls_to_many_root_collapses(text):
    s = hc(text)
    lasso = detect_hypercollapsing(s, HC).witness
    for k in (1, 3, 7):
        red = lasso.unroll(s, k)
        assert red.is_consistent()
        assert sum(st_.root_collapsing for st_ in red.steps) >= k


def test_nesting_system_readings():
    sys_ = systems.load(systems.NESTING)
    for text in ("f([x] x)", "mu a. f([y] a)"):
        assert detect_hypercollapsing(systems.term(sys_, text), sys_).status is HcStatus.HYPERCOLLAPSING
    v = detect_hypercollapsing(systems.term(sys_, "f([x] g(x))"), sys_)
    assert v.status is HcStatus.NOT_WITHIN_BOUNDS


# ---------------------------------------------------------------------------
# normal forms and equivalence


def test_hc_normalize_examples():
    nf = hc_normalize(hc("cons(mu u. f(u), nil)"), HC)
    assert show(nf.term) == "cons(_|_, nil)"
    assert nf.substituted_positions == {(1,)}
    assert nf.decisive
    # the root is kept under the default reading
    assert show(hc_normalize(hc("mu u. f(u)"), HC).term) == "f(_|_)"
    assert show(hc_normalize(hc("mu u. f(u)"), HC, reading=HcReading.WHOLE).term) == "_|_"
    assert hc_normalize(hc("pair(a, b)"), HC).substituted_positions == frozenset()


def test_hc_normalize_outermost_only():
    nf = hc_normalize(hc("cons(f(f(mu u. f(u))), nil)"), HC)
    assert nf.substituted_positions == {(1,)}


def test_hc_equiv_examples():
    assert hc_equiv(hc("cons(mu u. f(u), nil)"), hc("cons(g([x] g(x)), nil)"), HC) is Answer.YES
    assert hc_equiv(hc("cons(mu u. f(u), nil)"), hc("cons(a, nil)"), HC) is Answer.NO
    assert hc_equiv(hc("pair(a, b)"), hc("pair(a, b)"), HC) is Answer.YES
    ev = hc_equiv_evidence(hc("pair(a, f(mu u. f(u)))"), hc("pair(b, f(mu u. f(u)))"), HC)
    assert ev.answer is Answer.NO and ev.difference == (1,)


def test_hc_equiv_unknown_under_undecided_part():
    sys_ = parse_rules("sig f/1 s/1 k/1 a/0 p/2\nr: f(Z) -> f(s(Z))\nk: k(Z) -> Z\n")
    small = SearchBudget(max_states=5)
    a = systems.term(sys_, "p(a, f(a))")
    assert hc_equiv(a, a, sys_, small) is Answer.YES
    # the difference sits inside a part whose status is undecided
    assert hc_equiv(a, systems.term(sys_, "p(a, f(k(a)))"), sys_, small) is Answer.UNKNOWN
    b = systems.term(sys_, "p(s(a), f(a))")
    assert hc_equiv(a, b, sys_, small) is Answer.NO


def test_nesting_equivalence_depends_on_reading():
    sys_ = systems.load(systems.NESTING)
    s, t = systems.term(sys_, "f([x] x)"), systems.term(sys_, "mu a. f([y] a)")
    assert show(hc_normalize(t, sys_).term) == "f([y] _|_)"
    assert hc_equiv(s, t, sys_) is Answer.NO
    assert hc_equiv(s, t, sys_, reading=HcReading.WHOLE) is Answer.YES


# ---------------------------------------------------------------------------
# out-steps and strip


def test_classify_out_step():
    s = hc("cons(f(a), mu u. f(u))")
    out = step_at(s, (1,), HC.rule("rf"))
    inside = step_at(s, (2, 1), HC.rule("rf"))
    at_hc_root = step_at(s, (2,), HC.rule("rf"))
    assert classify_out_step(out, HC) is Answer.YES
    assert classify_out_step(inside, HC) is Answer.NO
    assert classify_out_step(at_hc_root, HC) is Answer.NO
    red = mark_out_steps(run_script(s, [((1,), HC.rule("rf"))]), HC)
    assert red.steps[0].out_step is True


def test_root_step_readings():
    s = hc("mu u. f(u)")
    root = step_at(s, (), HC.rule("rf"))
    assert classify_out_step(root, HC) is Answer.YES
    assert classify_out_step(root, HC, reading=HcReading.WHOLE) is Answer.NO


def test_strip_out_steps_join():
    sys_ = systems.load(systems.MAP)
    s = systems.term(sys_, "map([z] s(z), cons(hd(cons(0, nil)), nil))")
    S = run_script(s, [((), sys_.rule("map_cons"))])
    u = step_at(s, (2, 1), sys_.rule("hd"))
    res = strip_restricted(S, u, sys_)
    assert res.joined and res.hypothesis is Answer.YES
    assert show(res.term) == "cons(s(0), map([z] s(z), nil))"


def test_strip_reports_divergence():
    sys_ = parse_rules("sig rep/1 f/1 b/0 cons/2\nrep: rep(Z) -> mu a. cons(Z, a)\nr: f(Z) -> Z\n")
    s = systems.term(sys_, "rep(f(b))")
    S = run_script(s, [((), sys_.rule("rep"))])
    res = strip_restricted(S, step_at(s, (1,), sys_.rule("r")), sys_)
    assert not res.joined and "infinitely many" in res.reason


def test_strip_flags_steps_inside_hypercollapsing_parts():
    s = hc("cons(f(mu u. f(u)), f(a))")
    S = run_script(s, [((1,), HC.rule("rf"))])
    res = strip_restricted(S, step_at(s, (2,), HC.rule("rf")), HC)
    assert res.joined and res.hypothesis is Answer.NO


# ---------------------------------------------------------------------------
# joins


def test_join_of_equal_reductions():
    s = hc("cons(f(a), nil)")
    S = run_script(s, [((1,), HC.rule("rf"))])
    rep = join_search(s, S, S, HC)
    assert rep.join is not None
    assert len(rep.join.left) == 0 and len(rep.join.right) == 0


def test_join_map_interleavings():
    sys_ = systems.load(systems.MAP)
    s = systems.term(sys_, "map([z] s(z), cons(hd(cons(0, nil)), cons(0, nil)))")
    S = run_script(s, [((), sys_.rule("map_cons"))])
    T = run_script(s, [((2, 1), sys_.rule("hd"))])
    rep = join_search(s, S, T, sys_)
    assert rep.join is not None
    assert alpha_eq(rep.join.left.target, rep.join.right.target)


def test_join_modulo_hypercollapsing_parts():
    s = hc("pair(f(mu u. f(u)), f(a))")
    S = run_script(s, [((1,), HC.rule("rf"))])
    T = run_script(s, [((2,), HC.rule("rf"))])
    rep = join_search(s, S, T, HC)
    assert rep.join is not None and rep.join.evidence.answer is Answer.YES


def _nesting_peak():
    sys_ = systems.load(systems.NESTING)
    s = systems.term(sys_, "f([x] f([y] x))")
    S = run_script(s, [((1, 0), sys_.rule("r"))])
    res = reduce(s, sys_, "fair", 8, 8)
    T = res.reduction.with_limit(res.limit, res.stable_depth) if res.limit is not None else res.reduction
    return sys_, s, S, T


def test_nesting_join_under_both_readings():
    sys_, s, S, T = _nesting_peak()
    assert alpha_eq(S.target, systems.term(sys_, "f([x] x)"))
    assert alpha_eq(T.final, systems.term(sys_, "mu a. f([y] a)"))
    proper = join_search(s, S, T, sys_)
    assert proper.join is None
    assert proper.left_closed and proper.right_closed and proper.exhausted
    whole = join_search(s, S, T, sys_, reading=HcReading.WHOLE)
    assert whole.join is not None


def test_join_requires_related_sources():
    s = hc("cons(a, nil)")
    S = run_script(hc("cons(b, nil)"), [])
    with pytest.raises(ValueError):
        join_search(s, S, S, HC)


# ---------------------------------------------------------------------------
# normal-form properties


def test_nf_properties_fig_a():
    sys_ = systems.load(systems.FIG5A)
    rep = check_nf_properties(sys_, [systems.term(sys_, "a")])
    assert not rep.NF.holds
    assert [show(t) for t in rep.NF.witness] == ["c", "b"]
    assert rep.UN.holds and rep.UN_arrow.holds
    assert rep.complete


def test_nf_properties_fig_b():
    sys_ = systems.load(systems.FIG5B)
    seeds = [systems.term(sys_, x) for x in ("a1", "a2")]
    rep = check_nf_properties(sys_, seeds)
    assert not rep.NF.holds and not rep.UN.holds
    assert {show(t) for t in rep.UN.witness} == {"b1", "b2"}
    assert rep.UN_arrow.holds
    assert "UN: fails" in rep.UN.describe()


def test_nf_properties_four():
    sys_ = systems.load(systems.FOUR)
    rep = check_nf_properties(sys_, [systems.term(sys_, "a")])
    assert rep.NF.holds and rep.UN.holds and rep.UN_arrow.holds
    assert hc_equiv(systems.term(sys_, "f(b)"), systems.term(sys_, "g(c)"), sys_) is Answer.NO


# ---------------------------------------------------------------------------
# properties of ~hc


@given(st.data())
@settings(max_examples=60, derandomize=True, deadline=None)
def test_equivalence_axioms(data):
    src = DataSource(data)
    sys_ = hc_system()
    a, b = hc_instance(src, sys_, 2)
    c = hc_instance(src, sys_, 1)[0]
    for reading in HcReading:
        assert hc_equiv(a, a, sys_, reading=reading) is Answer.YES
        assert hc_equiv(a, b, sys_, reading=reading) is hc_equiv(b, a, sys_, reading=reading)
        if hc_equiv(a, b, sys_, reading=reading) is Answer.YES and hc_equiv(b, c, sys_, reading=reading) is Answer.YES:
            assert hc_equiv(a, c, sys_, reading=reading) is Answer.YES


@given(st.data())
@settings(max_examples=60, derandomize=True, deadline=None)
def test_fillings_of_one_skeleton_are_related(data):
    src = DataSource(data)
    sys_ = hc_system()
    skel = hc_context(src, 3)
    a, b = (parse_term(fill(skel, src), sys_.signature) for _ in range(2))
    assert hc_equiv(a, b, sys_, reading=HcReading.WHOLE) is Answer.YES
    if skel != "@":
        assert hc_equiv(a, b, sys_) is Answer.YES


@given(st.data())
@settings(max_examples=60, derandomize=True, deadline=None)
def test_replacement_preserves_equivalence(data):
    src = DataSource(data)
    sys_ = hc_system()
    a, b = hc_instance(src, sys_, 2, depth=2)
    ctx = parse_term(hc_context(src, 2).replace("@", "nil"), sys_.signature)
    ps = sorted(p for p in _positions(ctx) if p)
    if not ps:
        return
    p = ps[src.int(0, len(ps) - 1)]
    assert hc_equiv(replace_at(ctx, p, a), replace_at(ctx, p, b), sys_, reading=HcReading.WHOLE) is Answer.YES


def _positions(t):
    from icrs.terms import positions_up_to

    return positions_up_to(t, 6)


@given(st.data())
@settings(max_examples=60, derandomize=True, deadline=None)
def test_reducts_of_hypercollapsing_terms_stay_hypercollapsing(data):
    src = DataSource(data)
    sys_ = hc_system()
    (s,) = hc_instance(src, sys_, 1, depth=0)
    if detect_hypercollapsing(s, sys_).status is not HcStatus.HYPERCOLLAPSING:
        return
    cur = s
    for _ in range(src.int(1, 4)):
        rs = find_redexes(cur, sys_, 4)
        if not rs:
            break
        cur = apply_step(cur, rs[src.int(0, len(rs) - 1)]).target
        assert detect_hypercollapsing(cur, sys_).status is HcStatus.HYPERCOLLAPSING


@given(st.data())
@settings(max_examples=60, derandomize=True, deadline=None)
def test_substituted_positions_hold_hypercollapsing_terms(data):
    src = DataSource(data)
    sys_ = hc_system()
    (s,) = hc_instance(src, sys_, 1)
    nf = hc_normalize(s, sys_, reading=HcReading.WHOLE)
    for p in nf.substituted_positions:
        assert detect_hypercollapsing(subterm_at(s, p), sys_).status is HcStatus.HYPERCOLLAPSING
        assert not any(q != p and p[: len(q)] == q for q in nf.substituted_positions)


@given(st.data())
@settings(max_examples=80, derandomize=True, deadline=None)
def test_out_steps_preserve_equivalence(data):
    # two ~hc-related terms take the same out-step and stay related
    src = DataSource(data)
    sys_ = hc_system()
    a, b = hc_instance(src, sys_, 2)
    if hc_equiv(a, b, sys_, reading=HcReading.WHOLE) is not Answer.YES:
        return
    for r in find_redexes(a, sys_, 6):
        st_ = apply_step(a, r)
        if classify_out_step(st_, sys_, reading=HcReading.WHOLE) is not Answer.YES:
            continue
        st2 = step_at(b, r.position, r.rule)
        assert hc_equiv(st_.target, st2.target, sys_, reading=HcReading.WHOLE) is Answer.YES


def test_root_out_steps_can_break_proper_equivalence():
    s, s2 = hc("f(mu u. f(u))"), hc("f(g([x] g(x)))")
    assert hc_equiv(s, s2, HC) is Answer.YES
    t = step_at(s, (), HC.rule("rf"))
    t2 = step_at(s2, (), HC.rule("rf"))
    assert classify_out_step(t, HC) is Answer.YES
    assert hc_equiv(t.target, t2.target, HC) is Answer.NO


def test_seeded_truncations_agree_after_normalizing():
    sys_ = hc_system()
    for seed in range(40):
        a, b = hc_instance(RandomSource(seed), sys_, 2)
        na = hc_normalize(a, sys_, reading=HcReading.WHOLE)
        nb = hc_normalize(b, sys_, reading=HcReading.WHOLE)
        assert truncate(na.term, 8) == truncate(nb.term, 8)
