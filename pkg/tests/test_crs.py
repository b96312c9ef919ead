import random

import pytest

from normbench import crs
from normbench.crs import Node, Rule, Signature, Var


def nat_sig(**extra_fns):
    return Signature({"zero": 0, "succ": 1}, {"add": 2, **extra_fns})


def nat(n):
    t = Node("zero")
    for _ in range(n):
        t = Node("succ", (t,))
    return t


ADD_RULES = [
    Rule("add", (Node("zero"), Var("y")), Var("y")),
    Rule("add", (Node("succ", (Var("x"),)), Var("y")),
         Node("succ", (Node("add", (Var("x"), Var("y"))),))),
]


def add_system():
    return crs.validate_system(nat_sig(), ADD_RULES)


# --- validation ---------------------------------------------------------------

def test_validate_add_ok():
    sys = add_system()
    assert len(sys.rules) == 2


def test_validate_nonlinear():
    sig = Signature({"zero": 0}, {"f": 2})
    with pytest.raises(crs.NonLinearLhs):
        crs.validate_system(sig, [Rule("f", (Var("x"), Var("x")), Var("x"))])


def test_validate_overlap():
    sig = Signature({"zero": 0}, {"f": 1})
    rules = [
        Rule("f", (Node("zero"),), Node("zero")),
        Rule("f", (Var("x"),), Node("zero")),
    ]
    with pytest.raises(crs.OverlapError) as exc:
        crs.validate_system(sig, rules)
    assert exc.value.rules == (0, 1)


def test_validate_arity_mismatch():
    sig = Signature({"zero": 0, "succ": 1}, {"f": 1})
    with pytest.raises(crs.ArityMismatch):
        crs.validate_system(sig, [Rule("f", (Node("succ"),), Node("zero"))])


def test_validate_rhs_vars_bound():
    sig = Signature({"zero": 0}, {"f": 1})
    with pytest.raises(crs.InvalidRule):
        crs.validate_system(sig, [Rule("f", (Var("x"),), Var("y"))])


def test_validate_function_in_pattern():
    sig = Signature({"zero": 0}, {"f": 1, "g": 1})
    with pytest.raises(crs.InvalidRule):
        crs.validate_system(sig, [Rule("f", (Node("g", (Var("x"),)),), Node("zero"))])


def test_signature_disjoint_names():
    with pytest.raises(crs.CrsError):
        Signature({"a": 0}, {"a": 1})


# --- matching -----------------------------------------------------------------

def test_match_pattern():
    assert crs.match_pattern(Node("succ", (Var("x"),)), nat(1)) == {"x": nat(0)}
    assert crs.match_pattern(Node("zero"), nat(1)) is None
    t = Node("cons", (nat(0), Node("nil")))
    assert crs.match_pattern(Var("x"), t) == {"x": t}


def test_cbv_condition_blocks_function_bindings():
    sys = add_system()
    # add(add(zero, zero), zero): the outer add cannot fire because the
    # binding for its variable argument would contain a function symbol.
    inner = Node("add", (nat(0), nat(0)))
    t = Node("add", (inner, nat(0)))
    hits = list(crs.redexes(sys, t))
    assert len(hits) == 1
    assert hits[0][0] == (0,)


# --- rewriting ----------------------------------------------------------------

def test_rewrite_step_unique_redex():
    sys = add_system()
    t = Node("add", (nat(1), nat(1)))
    got = crs.rewrite_step(sys, t)
    assert got == Node("succ", (Node("add", (nat(0), nat(1))),))


def test_rewrite_normal_form_absent():
    assert crs.rewrite_step(add_system(), nat(1)) is None


def test_reduce_add_two_steps():
    # hand trace: add(s(0), s(0)) -> s(add(0, s(0))) -> s(s(0))
    out = crs.reduce(add_system(), Node("add", (nat(1), nat(1))), 10)
    assert out.kind == "constructor"
    assert out.steps == 2
    assert out.term == nat(2)


def test_reduce_stuck():
    sig = Signature({"zero": 0, "succ": 1}, {"f": 1})
    sys = crs.validate_system(sig, [Rule("f", (Node("succ", (Var("x"),)),), Node("zero"))])
    out = crs.reduce(sys, Node("f", (nat(0),)), 10)
    assert out.kind == "stuck"
    assert out.steps == 0
    assert out.term == Node("f", (nat(0),))


def test_reduce_loop_exhausts():
    sig = Signature({"zero": 0}, {"loop": 1})
    sys = crs.validate_system(sig, [Rule("loop", (Var("x"),), Node("loop", (Var("x"),)))])
    out = crs.reduce(sys, Node("loop", (nat(0),)), 25)
    assert out.kind == "exhausted"
    assert out.steps == 25


def test_stuck_normal_form_contains_function():
    sig = Signature({"zero": 0, "succ": 1}, {"f": 1})
    sys = crs.validate_system(sig, [Rule("f", (Node("succ", (Var("x"),)),), Node("zero"))])
    out = crs.reduce(sys, Node("succ", (Node("f", (nat(0),)),)), 10)
    assert out.kind == "stuck"
    assert crs.contains_function(out.term, sig)


def test_count_symbol():
    t = Node("app", (Node("capp", (Var("x"), Var("y"))), Var("z")))
    assert crs.count_symbol(t, "app") == 1
    assert crs.count_symbol(nat(2), "succ") == 2
    assert crs.count_symbol(nat(2), "nil") == 0


def test_policy_invariance_of_step_count():
    sys = add_system()
    t = Node("add", (Node("add", (nat(2), nat(1))), Node("add", (nat(1), nat(2)))))
    base = crs.reduce(sys, t, 100)
    assert base.kind == "constructor"
    for seed in range(10):
        out = crs.reduce(sys, t, 100, rng=random.Random(seed))
        assert out.steps == base.steps
        assert out.term == base.term


def test_closedness_preserved():
    sys = add_system()
    t = Node("add", (nat(2), nat(3)))
    while True:
        nxt = crs.rewrite_step(sys, t)
        if nxt is None:
            break
        assert crs.is_closed(nxt)
        t = nxt


# --- classification ------------------------------------------------------------

def test_term_classes():
    sig = nat_sig()
    assert crs.is_constructor_term(nat(2), sig)
    assert not crs.is_constructor_term(Node("add", (nat(0), nat(0))), sig)
    assert crs.is_pattern(Node("succ", (Var("x"),)), sig)
    assert not crs.is_pattern(Node("add", (Var("x"), Var("y"))), sig)
    assert crs.is_closed(nat(2))
    assert not crs.is_closed(Var("x"))


# --- text format -----------------------------------------------------------------

ADD_TEXT = """\
# unary addition
constructor zero/0;
constructor succ/1;
function add/2;
rule add(zero, y) -> y;
rule add(succ(x), y) -> succ(add(x, y));
term add(succ(zero), succ(zero));
"""


def test_parse_system_text():
    f = crs.parse_system(ADD_TEXT)
    assert f.system.signature.constructors == {"zero": 0, "succ": 1}
    assert f.system.rules == tuple(ADD_RULES)
    assert f.term == Node("add", (nat(1), nat(1)))
    assert f.comments == ["unary addition"]


def test_system_roundtrip():
    f = crs.parse_system(ADD_TEXT)
    text = crs.system_to_str(f.system, f.term)
    g = crs.parse_system(text)
    assert g.system.rules == f.system.rules
    assert g.system.signature.constructors == f.system.signature.constructors
    assert g.term == f.term
    assert crs.parse_system(text.replace("\n", " \n ")).system.rules == f.system.rules


def test_term_requires_declared_symbols():
    with pytest.raises(crs.CrsParseError):
        crs.parse_system("constructor zero/0;\nfunction f/1;\nterm f(x);")


def test_parse_errors():
    with pytest.raises(crs.CrsParseError):
        crs.parse_system("constructor zero/0;\nconstructor zero/1;")
    with pytest.raises(crs.CrsParseError):
        crs.parse_system("rule f(x -> x;")
    with pytest.raises(crs.CrsParseError):
        crs.parse_system("flurb zap;")


def test_deep_terms_no_recursion_blowup():
    sig = nat_sig()
    t = nat(50_000)
    assert crs.term_size(t) == 50_001
    assert crs.is_constructor_term(t, sig)
    assert crs.count_symbol(t, "succ") == 50_000
    assert crs.is_closed(t)
