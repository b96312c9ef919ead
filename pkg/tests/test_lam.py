import random

import pytest
from hypothesis import given, settings, strategies as st

from normbench import lam
from normbench.lam import Abs, App, Var


def p(s):
    return lam.parse(s)


# --- basics -------------------------------------------------------------------

def test_size():
    assert lam.size(Var("x")) == 1
    assert lam.size(p("\\x. x")) == 2
    assert lam.size(p("x y")) == 3
    assert lam.size(p("(\\x. x x) (\\y. y y)")) == 9


def test_free_vars_closed_identity():
    assert lam.free_vars(p("\\x. x")) == ()
    assert lam.is_closed(p("\\x. x"))


def test_free_vars_ordered():
    assert lam.free_vars(p("(\\x. x y) z")) == ("y", "z")


def test_free_vars_example_body():
    # body of the outer abstraction in (\x. (\y. x) x) (\z. z)
    assert lam.free_vars(p("(\\y. x) x")) == ("x",)


def test_substitute_closed_value():
    got = lam.substitute(p("x x"), "x", p("\\y. y"))
    assert got == p("(\\y. y) (\\y. y)")


def test_substitute_under_binder():
    got = lam.substitute(p("(\\y. x) x"), "x", p("\\z. z"))
    assert got == p("(\\y. \\z. z) (\\z. z)")


def test_substitute_other_var():
    assert lam.substitute(Var("y"), "x", p("\\z. z")) == Var("y")


def test_substitute_avoids_capture():
    # (\y. x){y/x} must not capture the free y
    got = lam.substitute(p("\\y. x"), "x", Var("y"))
    assert isinstance(got, Abs)
    assert got.binder != "y"
    assert got.body == Var("y")
    assert lam.alpha_eq(got, Abs("w", Var("y"))) is False or got.body == Var("y")


def test_substitute_many_simultaneous():
    got = lam.substitute_many(p("x y"), {"x": Var("y"), "y": Var("x")})
    assert got == p("y x")


def test_alpha_eq():
    assert lam.alpha_eq(p("\\x. x"), p("\\y. y"))
    assert lam.alpha_eq(p("\\x. x y"), p("\\z. z y"))
    assert not lam.alpha_eq(p("\\x. x y"), p("\\z. z w"))
    assert not lam.alpha_eq(p("\\x. \\y. x"), p("\\x. \\y. y"))


# --- single steps ---------------------------------------------------------------

def test_cbv_step_single_redex():
    assert lam.cbv_step(p("(\\x. x) (\\y. y)")) == p("\\y. y")


def test_cbv_step_self_application():
    assert lam.cbv_step(p("(\\x. x x) (\\y. y y)")) == p("(\\y. y y) (\\y. y y)")


def test_cbv_step_not_under_lambda():
    assert lam.cbv_step(p("\\x. (\\y. y) (\\z. z)")) is None


def test_cbv_step_argument_must_be_value():
    t = p("(\\x. x) ((\\y. y) (\\z. z))")
    assert lam.cbv_step(t) == p("(\\x. x) (\\z. z)")


def test_cbn_step_substitutes_unevaluated():
    t = p("(\\x. \\y. x) ((\\z. z) (\\z. z))")
    assert lam.cbn_step(t) == p("\\y. (\\z. z) (\\z. z)")


def test_cbn_step_identity():
    assert lam.cbn_step(p("(\\x. x) (\\y. y)")) == p("\\y. y")


def test_cbn_step_free_head():
    assert lam.cbn_step(p("x ((\\y. y) (\\z. z))")) is None


# --- full reduction --------------------------------------------------------------

def test_reduce_dup_drop_example():
    out = lam.reduce(p("(\\x. (\\y. x) x) (\\z. z)"), "cbv", 10)
    assert out.kind == "normal"
    assert out.steps == 2
    assert out.term == p("\\z. z")


def test_reduce_omega_exhausts():
    out = lam.reduce(p("(\\x. x x) (\\y. y y)"), "cbv", 50)
    assert out.kind == "exhausted"
    assert out.steps == 50
    assert lam.alpha_eq(out.term, p("(\\x. x x) (\\y. y y)"))


def test_tower_steps_linear():
    # Hand-unrolled: 2two applied to a value takes one step to its normal
    # form, and the tower reduces innermost-first, so Time(M_n) = n.
    for n in (1, 2, 5, 10):
        out = lam.reduce(lam.two_tower(n), "cbv", 10_000)
        assert out.kind == "normal"
        assert out.steps == n


def test_tower_hand_unrolled_n1():
    t = lam.two_tower(1)
    s1 = lam.cbv_step(t)
    assert s1 is not None and lam.cbv_step(s1) is None
    assert lam.alpha_eq(s1, p("\\x. (\\x. x) ((\\x. x) x)"))


def test_tower_hand_unrolled_n2():
    # the inner tower must become a value before the outer redex fires
    w1 = p("\\x. (\\x. x) ((\\x. x) x)")
    t = lam.two_tower(2)
    s1 = lam.cbv_step(t)
    assert lam.alpha_eq(s1, App(lam.church_two(), w1))
    s2 = lam.cbv_step(s1)
    assert lam.alpha_eq(s2, Abs("x", App(w1, App(w1, Var("x")))))
    assert lam.cbv_step(s2) is None


def test_reduce_cbn_of_cbv_divergent():
    t = App(p("\\x. \\y. y"), p("(\\x. x x) (\\x. x x)"))
    out = lam.reduce(t, "cbn", 100)
    assert out.kind == "normal"
    assert out.steps == 1
    assert lam.alpha_eq(out.term, p("\\y. y"))
    assert lam.reduce(t, "cbv", 100).kind == "exhausted"


def test_budget_zero():
    out = lam.reduce(p("(\\x. x) (\\y. y)"), "cbv", 0)
    assert out.kind == "exhausted" and out.steps == 0


def test_machine_matches_step_loop():
    rng = random.Random(1)
    for _ in range(200):
        t = random_closed(rng, 24)
        fast = lam.reduce(t, "cbv", 200)
        slow_steps = 0
        cur = t
        while slow_steps < 200:
            nxt = lam.cbv_step(cur)
            if nxt is None:
                break
            cur = nxt
            slow_steps += 1
        if fast.kind == "normal":
            assert slow_steps == fast.steps
            assert cur == fast.term
        else:
            assert slow_steps == 200


# --- properties -------------------------------------------------------------------

from tests_util import random_closed


def test_diamond_step_count_invariance():
    rng = random.Random(7)
    checked = 0
    for _ in range(300):
        t = random_closed(rng, 20)
        base = lam.reduce(t, "cbv", 200)
        if base.kind != "normal":
            continue
        checked += 1
        for seed in range(3):
            out = lam.reduce(t, "cbv", 400, rng=random.Random(seed))
            assert out.kind == "normal"
            assert out.steps == base.steps
            assert lam.alpha_eq(out.term, base.term)
    assert checked > 50


def test_step_additivity():
    rng = random.Random(11)
    for _ in range(100):
        t = random_closed(rng, 20)
        for strategy in ("cbv", "cbn"):
            whole = lam.reduce(t, strategy, 60)
            b1 = 7
            part = lam.reduce(t, strategy, b1)
            rest = lam.reduce(part.term, strategy, 60 - b1)
            assert part.steps + rest.steps == whole.steps
            assert rest.term == whole.term


def _head_redexes(t):
    # independent enumeration of the head relation: beta at the root, or
    # recursively in the left part of an application
    out = []
    if isinstance(t, App):
        if isinstance(t.fun, Abs):
            out.append(lam.substitute(t.fun.body, t.fun.binder, t.arg))
        out.extend(App(s, t.arg) for s in _head_redexes(t.fun))
    return out


def test_cbn_step_deterministic():
    rng = random.Random(19)
    for _ in range(200):
        t = random_closed(rng, 20)
        reducts = _head_redexes(t)
        assert len(reducts) <= 1
        got = lam.cbn_step(t)
        if reducts:
            assert got == reducts[0]
        else:
            assert got is None


def test_cbn_machine_matches_step_loop():
    rng = random.Random(23)
    for _ in range(200):
        t = random_closed(rng, 22)
        fast = lam.reduce(t, "cbn", 150)
        cur, steps = t, 0
        while steps < 150:
            nxt = lam.cbn_step(cur)
            if nxt is None:
                break
            cur, steps = nxt, steps + 1
        if fast.kind == "normal":
            assert steps == fast.steps
            assert cur == fast.term
        else:
            assert steps == 150


def test_closedness_preserved():
    rng = random.Random(13)
    for _ in range(200):
        t = random_closed(rng, 20)
        assert lam.is_closed(t)
        nxt = lam.cbv_step(t)
        if nxt is not None:
            assert lam.is_closed(nxt)
        nxt = lam.cbn_step(t)
        if nxt is not None:
            assert lam.is_closed(nxt)


def test_closed_cbv_never_needs_renaming():
    # every fired redex of a closed term has a closed argument
    rng = random.Random(17)
    for _ in range(100):
        t = random_closed(rng, 20)
        for _ in range(50):
            path = next(lam.cbv_redexes(t), None)
            if path is None:
                break
            redex = lam.subterm_at(t, path)
            assert lam.is_closed(redex.arg)
            t = lam.replace_at(t, path, lam.contract(redex))


# --- surface syntax -----------------------------------------------------------------

@st.composite
def terms(draw, depth=4, env=()):
    cls = draw(st.sampled_from(["var", "abs", "app"] if env else ["abs", "app"]))
    if depth <= 1:
        if env:
            return Var(draw(st.sampled_from(env)))
        cls = "abs"
    if cls == "var":
        return Var(draw(st.sampled_from(env)))
    if cls == "abs":
        b = draw(st.sampled_from(["x", "y", "z", "f", "w'"]))
        return Abs(b, draw(terms(depth=depth - 1, env=env + (b,))))
    return App(draw(terms(depth=depth - 1, env=env)),
               draw(terms(depth=depth - 1, env=env)))


@given(terms())
@settings(max_examples=300)
def test_parse_print_roundtrip(t):
    assert lam.parse(lam.to_str(t)) == t


def test_printer_minimal_parens():
    assert lam.to_str(p("\\x. x y")) == "\\x. x y"
    assert lam.to_str(App(App(Var("a"), Var("b")), Var("c"))) == "a b c"
    assert lam.to_str(App(Var("a"), App(Var("b"), Var("c")))) == "a (b c)"
    assert lam.to_str(App(Abs("x", Var("x")), Var("y"))) == "(\\x. x) y"
    assert lam.to_str(Abs("x", App(Var("x"), Abs("y", Var("y"))))) == "\\x. x (\\y. y)"


def test_parse_errors():
    for bad in ["", "(", "\\x x", "\\. x", "x )", "\\x. \\", "?"]:
        with pytest.raises(lam.LamParseError):
            lam.parse(bad)


def test_identifiers_with_primes_and_digits():
    t = p("\\f1. f1 x'2")
    assert lam.to_str(t) == "\\f1. f1 x'2"


def test_deep_terms_no_recursion_blowup():
    t = Var("x")
    for _ in range(5000):
        t = Abs("x", t)
    assert lam.size(t) == 5001
    assert lam.free_vars(t) == ()
    assert lam.alpha_eq(t, t)
    assert lam.substitute(t, "y", p("\\z. z")) == t
