"""Compilation of weak lambda-calculus into constructor rewriting.

Each abstraction subterm of the source becomes an atomic constructor whose
arguments carry the values of its free variables (in their fixed order),
and a binary function symbol `app` drives reduction.  The CBV image uses
`app` alone; the CBN image also freezes arguments under a constructor
`capp` that an administrative rule re-activates in head position.

Constructors are named after the alpha-normal form of their abstraction,
so alpha-equivalent subterms share one constructor and one rule.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from . import crs, lam

APP = "app"
CAPP = "capp"


class EncodeError(Exception):
    pass


class OpenTermError(EncodeError):
    pass


class UnknownConstructor(EncodeError):
    pass


def canonical_form(t: lam.Term) -> str:
    """Alpha-invariant print: binders become relative indices, free names stay."""
    out: list[str] = []
    env: dict[str, list[int]] = {}
    depth = 0
    todo: list[tuple[str, object]] = [("go", t)]
    while todo:
        op, arg = todo.pop()
        if op == "lit":
            out.append(arg)
            continue
        if op == "unbind":
            env[arg].pop()
            depth -= 1
            continue
        if isinstance(arg, lam.Var):
            lvls = env.get(arg.name)
            out.append(f"@{depth - 1 - lvls[-1]}" if lvls else f"!{arg.name}")
        elif isinstance(arg, lam.Abs):
            out.append("\\.")
            env.setdefault(arg.binder, []).append(depth)
            depth += 1
            todo.append(("unbind", arg.binder))
            todo.append(("go", arg.body))
        else:
            out.append("(")
            todo.append(("lit", ")"))
            todo.append(("go", arg.arg))
            todo.append(("lit", " "))
            todo.append(("go", arg.fun))
    return "".join(out)


@dataclass(frozen=True)
class AbsConstructor:
    """Constructor standing for one alpha-class of abstractions."""

    name: str
    binder: str
    body: lam.Term
    free: tuple[str, ...]  # FV of the whole abstraction; the arity

    @property
    def arity(self) -> int:
        return len(self.free)

    def abstraction(self) -> lam.Term:
        return lam.Abs(self.binder, self.body)


class Registry:
    """Stable names for abstraction constructors, collision-checked."""

    def __init__(self):
        self.by_name: dict[str, AbsConstructor] = {}
        self._by_key: dict[str, str] = {}

    def register(self, t: lam.Abs) -> AbsConstructor:
        key = canonical_form(t)
        name = self._by_key.get(key)
        if name is not None:
            return self.by_name[name]
        name = "lam_" + hashlib.sha256(key.encode()).hexdigest()[:10]
        if name in self.by_name:
            raise EncodeError(f"constructor name collision on {name}")
        con = AbsConstructor(name, t.binder, t.body, lam.free_vars(t))
        self.by_name[name] = con
        self._by_key[key] = name
        return con

    def lookup(self, name: str) -> AbsConstructor:
        con = self.by_name.get(name)
        if con is None:
            raise UnknownConstructor(name)
        return con


def _abstraction_subterms(t: lam.Term) -> list[lam.Abs]:
    """All abstraction occurrences of t, outermost first."""
    out: list[lam.Abs] = []
    todo = [t]
    while todo:
        s = todo.pop(0)
        if isinstance(s, lam.Abs):
            out.append(s)
            todo.append(s.body)
        elif isinstance(s, lam.App):
            todo.append(s.fun)
            todo.append(s.arg)
    return out


@dataclass
class PhiImage:
    term: crs.Term
    system: crs.CrsSystem
    registry: Registry
    source: lam.Term


@dataclass
class PsiImage:
    term: crs.Term
    system: crs.CrsSystem
    registry: Registry
    source: lam.Term
    admin_rule: crs.Rule


def _image_term(t: lam.Term, reg: Registry) -> crs.Term:
    if isinstance(t, lam.Var):
        return crs.Var(t.name)
    if isinstance(t, lam.Abs):
        con = reg.register(t)
        return crs.Node(con.name, tuple(crs.Var(v) for v in con.free))
    return crs.Node(APP, (_image_term(t.fun, reg), _image_term(t.arg, reg)))


def encode_cbv(m: lam.Term) -> PhiImage:
    """The CBV image: one rule app(c(x1..xn), x) -> image(body) per
    alpha-distinct abstraction subterm of m."""
    if not lam.is_closed(m):
        raise OpenTermError(f"free variables: {lam.free_vars(m)}")
    reg = Registry()
    for sub in _abstraction_subterms(m):
        reg.register(sub)
    term = _image_term(m, reg)
    names = list(reg.by_name)  # registration order; rule rhs adds nothing new
    rules = []
    for name in names:
        con = reg.by_name[name]
        lhs = (crs.Node(name, tuple(crs.Var(v) for v in con.free)), crs.Var(con.binder))
        rules.append(crs.Rule(APP, lhs, _image_term(con.body, reg)))
    assert list(reg.by_name) == names, "rule bodies introduced unregistered constructors"
    sig = crs.Signature({c.name: c.arity for c in reg.by_name.values()}, {APP: 2})
    return PhiImage(term, crs.validate_system(sig, rules), reg, m)


def readback(t: crs.Term, reg: Registry) -> lam.Term:
    """The inverse image: app becomes application, constructors re-open
    their abstraction with decoded arguments substituted for its free
    variables."""
    if isinstance(t, crs.Var):
        return lam.Var(t.name)
    if t.symbol in (APP, CAPP):
        if len(t.children) != 2:
            raise UnknownConstructor(f"{t.symbol} with arity {len(t.children)}")
        return lam.App(readback(t.children[0], reg), readback(t.children[1], reg))
    con = reg.lookup(t.symbol)
    args = [readback(c, reg) for c in t.children]
    return lam.substitute_many(con.abstraction(), dict(zip(con.free, args)))


def is_canonical(t: crs.Term, sig: crs.Signature) -> bool:
    """Constructor term, or app of two canonical terms."""
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, crs.Var):
            return False
        if not crs.contains_function(s, sig):
            continue
        if s.symbol != APP:
            return False
        todo.extend(s.children)
    return True


def check_provenance(t: crs.Term, reg: Registry) -> bool:
    """Every constructor in t names an abstraction registered from the
    source (hence an alpha-class of one of its subterms)."""
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, crs.Node):
            if s.symbol not in (APP, CAPP) and s.symbol not in reg.by_name:
                return False
            todo.extend(s.children)
    return True


# --- call-by-name ----------------------------------------------------------------

def _aux_term(t: lam.Term, reg: Registry) -> crs.Term:
    # the all-constructor map: applications freeze under capp
    if isinstance(t, lam.Var):
        return crs.Var(t.name)
    if isinstance(t, lam.Abs):
        con = reg.register(t)
        return crs.Node(con.name, tuple(crs.Var(v) for v in con.free))
    return crs.Node(CAPP, (_aux_term(t.fun, reg), _aux_term(t.arg, reg)))


def _main_term(t: lam.Term, reg: Registry) -> crs.Term:
    if isinstance(t, lam.Var):
        return crs.Var(t.name)
    if isinstance(t, lam.Abs):
        con = reg.register(t)
        return crs.Node(con.name, tuple(crs.Var(v) for v in con.free))
    return crs.Node(APP, (_main_term(t.fun, reg), _aux_term(t.arg, reg)))


def encode_cbn(m: lam.Term) -> PsiImage:
    """The CBN image over app/capp with the administrative rule.

    Ordinary rules: the identity constructor forwards its argument
    (re-activating a frozen application), variable-body constructors
    return the binding of their single free variable likewise, and every
    abstraction/application body rewrites to its main image.
    """
    if not lam.is_closed(m):
        raise OpenTermError(f"free variables: {lam.free_vars(m)}")
    reg = Registry()
    identity = reg.register(lam.Abs("z", lam.Var("z")))
    for sub in _abstraction_subterms(m):
        reg.register(sub)
    term = _main_term(m, reg)
    names = list(reg.by_name)
    rules: list[crs.Rule] = []
    # identity: unfreeze or return its argument
    rules.append(crs.Rule(APP, (crs.Node(identity.name),
                                crs.Node(CAPP, (crs.Var("w"), crs.Var("f")))),
                          crs.Node(APP, (crs.Var("w"), crs.Var("f")))))
    for name in names:
        con = reg.by_name[name]
        argvars = tuple(crs.Var(f"v{i+1}") for i in range(con.arity))
        rules.append(crs.Rule(APP, (crs.Node(identity.name), crs.Node(name, argvars)),
                              crs.Node(name, argvars)))
    # variable bodies other than the binder: return the stored binding
    for name in names:
        con = reg.by_name[name]
        if isinstance(con.body, lam.Var) and con.body.name != con.binder:
            vb = crs.Node(name, (crs.Node(CAPP, (crs.Var("f"), crs.Var("g"))),))
            rules.append(crs.Rule(APP, (vb, crs.Var("h")),
                                  crs.Node(APP, (crs.Var("f"), crs.Var("g")))))
            for name2 in names:
                con2 = reg.by_name[name2]
                argvars = tuple(crs.Var(f"v{i+1}") for i in range(con2.arity))
                rules.append(crs.Rule(
                    APP, (crs.Node(name, (crs.Node(name2, argvars),)), crs.Var("h")),
                    crs.Node(name2, argvars)))
    # abstraction and application bodies: beta via the main image
    for name in names:
        con = reg.by_name[name]
        if not isinstance(con.body, lam.Var):
            lhs = (crs.Node(name, tuple(crs.Var(v) for v in con.free)), crs.Var(con.binder))
            rules.append(crs.Rule(APP, lhs, _main_term(con.body, reg)))
    admin = crs.Rule(APP, (crs.Node(CAPP, (crs.Var("x"), crs.Var("y"))), crs.Var("z")),
                     crs.Node(APP, (crs.Node(APP, (crs.Var("x"), crs.Var("y"))), crs.Var("z"))))
    rules.append(admin)
    assert list(reg.by_name) == names
    sig = crs.Signature({CAPP: 2, **{c.name: c.arity for c in reg.by_name.values()}}, {APP: 2})
    return PsiImage(term, crs.validate_system(sig, rules), reg, m, admin)


def psi_readback(t: crs.Term, reg: Registry) -> lam.Term:
    """app and capp both read back as application."""
    return readback(t, reg)


def psi_is_canonical(t: crs.Term, sig: crs.Signature, reg: Registry) -> bool:
    """Abstraction-constructor term, or app of a canonical term and a
    constructor term (a frozen capp at the root is not canonical)."""
    while True:
        if isinstance(t, crs.Var):
            return False
        if t.symbol in reg.by_name:
            return not crs.contains_function(t, sig)
        if t.symbol != APP:
            return False
        if not crs.is_constructor_term(t.children[1], sig):
            return False
        t = t.children[0]


# --- instrumented runs -------------------------------------------------------------

@dataclass
class PhiRun:
    outcome: crs.CrsOutcome
    readback_nf: Optional[lam.Term]


def run_phi(image: PhiImage, budget: int = 10_000, rng=None, check: bool = True,
            deep_check: bool = False) -> PhiRun:
    """Reduce the image, asserting canonicity and constructor provenance
    after every step; with deep_check also that each rewrite projects to a
    single CBV step of the readback."""
    sig = image.system.signature

    def on_step(rule, before, after):
        if check:
            assert is_canonical(after, sig), "canonicity lost"
            assert check_provenance(after, image.registry), "unregistered constructor"
        if deep_check:
            rb_before = readback(before, image.registry)
            rb_after = readback(after, image.registry)
            reducts = [lam.replace_at(rb_before, path,
                                      lam.contract(lam.subterm_at(rb_before, path)))
                       for path in lam.cbv_redexes(rb_before)]
            assert any(lam.alpha_eq(r, rb_after) for r in reducts)

    if check:
        assert is_canonical(image.term, sig)
    out = crs.reduce(image.system, image.term, budget, rng=rng,
                     on_step=on_step if (check or deep_check) else None)
    rb = None
    if out.kind != "exhausted":
        rb = readback(out.term, image.registry)
        if check and out.kind == "constructor":
            assert lam.reduce(rb, "cbv", 0).kind == "normal" or lam.cbv_step(rb) is None
    return PhiRun(out, rb)


@dataclass
class PsiRun:
    outcome: crs.CrsOutcome
    readback_nf: Optional[lam.Term]
    admin_steps: int
    ordinary_steps: int


def run_psi(image: PsiImage, budget: int = 10_000, check: bool = True) -> PsiRun:
    """Reduce the CBN image; administrative steps must keep the readback
    fixed and add exactly one occurrence of app."""
    counts = {"admin": 0, "ordinary": 0}

    def on_step(rule, before, after):
        if rule is image.admin_rule:
            counts["admin"] += 1
            if check:
                assert crs.count_symbol(after, APP) == crs.count_symbol(before, APP) + 1
                assert lam.alpha_eq(readback(before, image.registry),
                                    readback(after, image.registry))
        else:
            counts["ordinary"] += 1

    if check:
        assert psi_is_canonical(image.term, image.system.signature, image.registry)
    out = crs.reduce(image.system, image.term, budget, on_step=on_step)
    rb = None
    if out.kind != "exhausted":
        rb = readback(out.term, image.registry)
        if check and out.kind == "constructor":
            assert psi_is_canonical(out.term, image.system.signature, image.registry)
    return PsiRun(out, rb, counts["admin"], counts["ordinary"])


def system_with_table(image) -> str:
    """The generated system in text form, with the constructor table as a
    comment block."""
    comments = ["generated rewrite system", "constructor table:"]
    for name, con in image.registry.by_name.items():
        comments.append(f"  {name} = {lam.to_str(con.abstraction())}")
    return crs.system_to_str(image.system, image.term, comments)
