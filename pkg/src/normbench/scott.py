"""Compilation of constructor rewriting into the weak CBV lambda-calculus.

Constructor terms become Scott-encoded values: with constructors c1..cg,
a node ci(t1..tn) is the value selecting its i-th branch, and a dedicated
error value selects the extra last branch.  Function symbols compile to
closed terms that embed their rules: a pattern-matching combinator drives
each scrutinee, and mutual recursion goes through a family of fixed-point
terms whose unfolding takes at most 2h steps for h function symbols.

Every piece has an input-size-independent step cost, which is what makes
the per-system linear overhead measurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import crs, lam
from .lam import Abs, App, Var, abss, apps


class ScottError(Exception):
    pass


class MatchOverlapError(ScottError):
    pass


class ScottContext:
    """Enumeration order and compilation caches for one system.

    The emitted terms depend on the declaration order of constructors and
    function symbols, so the context pins both for its lifetime.
    """

    def __init__(self, system: crs.CrsSystem):
        self.system = system
        self.constructors = tuple(system.signature.constructors)
        self.functions = tuple(system.signature.functions)
        pattern_vars: set[str] = set()
        for rule in system.rules:
            for pat in rule.lhs:
                pattern_vars.update(crs.variables(pat))
        base = "F"
        while any(f"{base}{i+1}" in pattern_vars for i in range(len(self.functions))):
            base += "'"
        self._fixnames = tuple(f"{base}{i+1}" for i in range(len(self.functions)))
        self._interp_cache: dict[str, lam.Term] = {}
        self._strict_cache: dict[str, lam.Term] = {}

    @property
    def g(self) -> int:
        return len(self.constructors)

    def con_index(self, name: str) -> int:
        """1-based index of a constructor in the enumeration order."""
        return self.constructors.index(name) + 1

    def arity(self, name: str) -> int:
        return self.system.signature.arity(name)


def bottom(ctx: ScottContext) -> lam.Term:
    """The error value: selects the extra continuation branch."""
    return abss([f"s{i+1}" for i in range(ctx.g)] + ["sz"], Var("sz"))


def scott_encode(ctx: ScottContext, t: crs.Term) -> lam.Term:
    """Scott value of a constructor term; injective up to alpha."""
    assert isinstance(t, crs.Node)
    binders = [f"s{i+1}" for i in range(ctx.g)] + ["sz"]
    results: list[lam.Term] = []
    todo: list[tuple[str, crs.Term]] = [("go", t)]
    while todo:
        op, node = todo.pop()
        if op == "go":
            assert isinstance(node, crs.Node) and ctx.system.signature.is_constructor(node.symbol)
            todo.append(("mk", node))
            for c in reversed(node.children):
                todo.append(("go", c))
        else:
            k = len(node.children)
            kids = results[-k:] if k else []
            if k:
                del results[-k:]
            i = ctx.con_index(node.symbol)
            results.append(abss(binders, apps(Var(f"s{i}"), kids)))
    return results[0]


def constructor_function(ctx: ScottContext, name: str) -> lam.Term:
    """The constructor as a function: applied to encoded arguments it
    reduces to the encoded node in arity-many steps."""
    ar = ctx.arity(name)
    i = ctx.con_index(name)
    pvars = [f"p{k+1}" for k in range(ar)]
    binders = pvars + [f"s{k+1}" for k in range(ctx.g)] + ["sz"]
    return abss(binders, apps(Var(f"s{i}"), [Var(v) for v in pvars]))


def _rebuilt_node(ctx: ScottContext, i: int, names: list[str]) -> lam.Term:
    # the full-arity member of the strict family: already the Scott value
    binders = [f"y{k+1}" for k in range(ctx.g)] + ["yb"]
    return abss(binders, apps(Var(f"y{i}"), [Var(nm) for nm in names]))


def _strict_family(ctx: ScottContext, i: int, m: int) -> lam.Term:
    """Member m of the error-strict constructor family for constructor i,
    with free variables x1..xm for the arguments already consumed."""
    ar = ctx.arity(ctx.constructors[i - 1])
    if m == ar:
        return _rebuilt_node(ctx, i, [f"x{k+1}" for k in range(m)])
    consume_next = Abs(f"x{m+1}", _strict_family(ctx, i, m + 1))
    branches = []
    for j in range(1, ctx.g + 1):
        arj = ctx.arity(ctx.constructors[j - 1])
        zs = [f"z{k+1}" for k in range(arj)]
        branches.append(abss(zs, App(consume_next, _rebuilt_node(ctx, j, zs))))
    spill = abss([f"d{k+1}" for k in range(ar - m - 1)], bottom(ctx))
    return Abs("w", apps(Var("w"), branches + [spill]))


def strict_constructor(ctx: ScottContext, name: str) -> lam.Term:
    """Error-strict constructor: yields the encoded node, or the error
    value as soon as any argument is the error value."""
    cached = ctx._strict_cache.get(name)
    if cached is None:
        cached = _strict_family(ctx, ctx.con_index(name), 0)
        ctx._strict_cache[name] = cached
    return cached


# --- pattern matching ---------------------------------------------------------------

def _constructor_weight(alphas) -> int:
    return sum(1 for a in alphas for pat in a for s in _nodes_of(pat))


def _nodes_of(pat: crs.Term):
    todo = [pat]
    while todo:
        s = todo.pop()
        if isinstance(s, crs.Node):
            yield s
            todo.extend(s.children)


def _all_vars_matcher(ctx: ScottContext, m: int) -> lam.Term:
    # single all-variable sequence: error-check each scrutinee, rebuild it,
    # and thread it into the continuation.  The remaining scrutinees and the
    # continuation pass through the branch binders, which keeps every branch
    # a value (a branch body must not run before the scrutinee selects it).
    if m == 0:
        return Abs("k", Var("k"))
    xs = [f"x{k+1}" for k in range(m)]
    passers = xs[1:] + ["k"]
    rest = _all_vars_matcher(ctx, m - 1)
    branches = []
    for j in range(1, ctx.g + 1):
        arj = ctx.arity(ctx.constructors[j - 1])
        zs = [f"z{k+1}" for k in range(arj)]
        rebuilt = apps(constructor_function(ctx, ctx.constructors[j - 1]),
                       [Var(z) for z in zs])
        branches.append(abss(zs + passers, apps(rest, [Var(x) for x in xs[1:]]
                                                + [App(Var("k"), rebuilt)])))
    fail = abss(passers, bottom(ctx))
    return abss(xs + ["k"], apps(apps(Var(xs[0]), branches + [fail]),
                                 [Var(v) for v in passers]))


def _rebuild_wrapper(ctx: ScottContext, j: int, before: int, after: int) -> lam.Term:
    # adapts a continuation expecting the original variable binding to one
    # receiving the constructor's children instead
    cname = ctx.constructors[j - 1]
    arj = ctx.arity(cname)
    avs = [f"a{k+1}" for k in range(before)]
    bvs = [f"b{k+1}" for k in range(arj)]
    cvs = [f"c{k+1}" for k in range(after)]
    rebuilt = apps(constructor_function(ctx, cname), [Var(b) for b in bvs])
    return Abs("w", abss(avs + bvs + cvs,
                         apps(Var("w"), [Var(a) for a in avs] + [rebuilt]
                              + [Var(c) for c in cvs])))


def _match_term(ctx: ScottContext, alphas: list[tuple[crs.Term, ...]], m: int,
                gensym: list[int]) -> lam.Term:
    n = len(alphas)
    if n == 0:
        return abss([f"x{k+1}" for k in range(m)], bottom(ctx))
    if _constructor_weight(alphas) == 0:
        if n > 1:
            raise MatchOverlapError("distinct all-variable sequences overlap")
        return _all_vars_matcher(ctx, m)
    col = next(i for i in range(m)
               if any(isinstance(a[i], crs.Node) for a in alphas))
    xs = [f"x{k+1}" for k in range(m)]
    ks = [f"k{k+1}" for k in range(n)]
    xs_rest = xs[:col] + xs[col + 1:]
    branches = []
    for j in range(1, ctx.g + 1):
        cname = ctx.constructors[j - 1]
        arj = ctx.arity(cname)
        betas: list[tuple[crs.Term, ...]] = []
        conts: list[lam.Term] = []
        for pidx, a in enumerate(alphas):
            pat = a[col]
            if isinstance(pat, crs.Node):
                if pat.symbol != cname:
                    continue
                betas.append(a[:col] + pat.children + a[col + 1:])
                conts.append(App(Abs("w", Var("w")), Var(ks[pidx])))
            else:
                fresh = []
                for _ in range(arj):
                    gensym[1] += 1
                    fresh.append(crs.Var(f"{gensym[0]}{gensym[1]}"))
                betas.append(a[:col] + tuple(fresh) + a[col + 1:])
                before = sum(len(crs.variables(q)) for q in a[:col])
                after = sum(len(crs.variables(q)) for q in a[col + 1:])
                conts.append(App(_rebuild_wrapper(ctx, j, before, after),
                                 Var(ks[pidx])))
        zs = [f"z{k+1}" for k in range(arj)]
        sub = _match_term(ctx, betas, m - 1 + arj, gensym)
        body = apps(sub, [Var(x) for x in xs[:col]] + [Var(z) for z in zs]
                    + [Var(x) for x in xs[col + 1:]] + conts)
        branches.append(abss(zs + xs_rest + ks, body))
    fail = abss(xs_rest + ks, bottom(ctx))
    body = apps(apps(apps(Var(xs[col]), branches + [fail]),
                     [Var(x) for x in xs_rest]), [Var(k) for k in ks])
    return abss(xs + ks, body)


def compile_match(ctx: ScottContext, alphas: list[tuple[crs.Term, ...]],
                  m: int) -> lam.Term:
    """Matching combinator: applied to m encoded scrutinees and then one
    continuation per sequence, it reduces to the matching continuation
    applied to the encoded bindings (in variable order), and to the error
    value when nothing matches or a scrutinee is the error value.

    The number of steps to reach the continuation depends only on the
    sequences and the constructors consumed, never on subterm sizes.
    """
    alphas = [tuple(a) for a in alphas]
    for a in alphas:
        if len(a) != m:
            raise ScottError(f"sequence length {len(a)} != {m}")
    for i in range(len(alphas)):
        for j in range(i + 1, len(alphas)):
            if all(crs._patterns_compatible(p, q) for p, q in zip(alphas[i], alphas[j])):
                raise MatchOverlapError(f"sequences {i} and {j} overlap")
    used = {v for a in alphas for pat in a for v in crs.variables(pat)}
    prefix = "mv"
    while any(v.startswith(prefix) for v in used):
        prefix += "'"
    return _match_term(ctx, alphas, m, [prefix, 0])


# --- recursion ------------------------------------------------------------------------

def fixpoint_family(n: int) -> tuple[list[lam.Term], int]:
    """Terms H1..Hn with Hi V1..Vn reducing to
    Vi (\\x. H1 V1..Vn x) .. (\\x. Hn V1..Vn x) in at most 2n steps."""
    if n < 1:
        raise ScottError("fixpoint family needs n >= 1")
    xs = [f"x{k+1}" for k in range(n)]
    ys = [f"y{k+1}" for k in range(n)]
    ms = []
    for j in range(n):
        unfoldings = [Abs("z", apps(Var(xs[l]), [Var(v) for v in xs + ys] + [Var("z")]))
                      for l in range(n)]
        ms.append(abss(xs + ys, apps(Var(ys[j]), unfoldings)))
    hs = [apps(ms[i], ms) for i in range(n)]
    return hs, 2 * n


def _translate_rhs(ctx: ScottContext, t: crs.Term, fixnames: tuple[str, ...]) -> lam.Term:
    if isinstance(t, crs.Var):
        return Var(t.name)
    kids = [_translate_rhs(ctx, c, fixnames) for c in t.children]
    if ctx.system.signature.is_constructor(t.symbol):
        return apps(strict_constructor(ctx, t.symbol), kids)
    idx = ctx.functions.index(t.symbol)
    return apps(Var(fixnames[idx]), kids)


def interpret_function(ctx: ScottContext, fname: str) -> lam.Term:
    """Closed term embedding all rules for fname.

    Shape: Hi V1..Vh, where each Vj abstracts the recursion variables and
    the arguments, then runs the match combinator with one continuation
    per rule; continuations bind the pattern variables and evaluate the
    translated right-hand side.
    """
    cached = ctx._interp_cache.get(fname)
    if cached is not None:
        return cached
    if fname not in ctx.functions:
        raise ScottError(f"unknown function symbol {fname!r}")
    h = len(ctx.functions)
    fixnames = ctx._fixnames
    vs = []
    for g in ctx.functions:
        rules = [r for r in ctx.system.rules if r.head == g]
        ar = ctx.arity(g)
        matcher = compile_match(ctx, [r.lhs for r in rules], ar)
        ws = []
        for r in rules:
            pvars = [v for pat in r.lhs for v in crs.variables(pat)]
            ws.append(abss(pvars, _translate_rhs(ctx, r.rhs, fixnames)))
        avars = [f"arg{k+1}" for k in range(ar)]
        vs.append(abss(list(fixnames) + avars,
                       apps(matcher, [Var(a) for a in avars] + ws)))
    hs, _ = fixpoint_family(h)
    term = apps(hs[ctx.functions.index(fname)], vs)
    assert lam.is_closed(term)
    ctx._interp_cache[fname] = term
    return term


def term_to_lambda(ctx: ScottContext, t: crs.Term) -> lam.Term:
    """Compositional image of a closed term; pure constructor subterms go
    through the plain Scott encoding (they are already values)."""
    assert isinstance(t, crs.Node)
    if crs.is_constructor_term(t, ctx.system.signature):
        return scott_encode(ctx, t)
    kids = [term_to_lambda(ctx, c) for c in t.children]
    if ctx.system.signature.is_constructor(t.symbol):
        return apps(strict_constructor(ctx, t.symbol), kids)
    return apps(interpret_function(ctx, t.symbol), kids)


# --- the simulation check ---------------------------------------------------------------

@dataclass
class SimulationVerdict:
    crs_kind: str
    crs_steps: int
    crs_term: crs.Term
    beta_kind: str
    beta_steps: int
    beta_term: lam.Term
    consistent: Optional[bool]
    ratio: Optional[float]


def simulate_and_check(ctx: ScottContext, t: crs.Term, budget: int = 10_000,
                       beta_budget: Optional[int] = None) -> SimulationVerdict:
    """Run the rewrite engine and the compiled term side by side.

    Consistency means: constructor normal form vs its encoded value,
    stuck normal form vs the error value, or budget exhaustion on both
    sides.  None when exactly one side ran out of budget.
    """
    crs_out = crs.reduce(ctx.system, t, budget)
    if beta_budget is None:
        beta_budget = budget if crs_out.kind == "exhausted" else 512 * (crs_out.steps + 2)
    lam_out = lam.reduce(term_to_lambda(ctx, t), "cbv", beta_budget)
    consistent: Optional[bool]
    if crs_out.kind == "constructor" and lam_out.kind == "normal":
        consistent = lam.alpha_eq(lam_out.term, scott_encode(ctx, crs_out.term))
    elif crs_out.kind == "stuck" and lam_out.kind == "normal":
        consistent = lam.alpha_eq(lam_out.term, bottom(ctx))
    elif crs_out.kind == "exhausted" and lam_out.kind == "exhausted":
        consistent = True
    else:
        consistent = None
    ratio = None
    if crs_out.kind != "exhausted" and lam_out.kind == "normal" and crs_out.steps > 0:
        ratio = lam_out.steps / crs_out.steps
    return SimulationVerdict(crs_out.kind, crs_out.steps, crs_out.term,
                             lam_out.kind, lam_out.steps, lam_out.term,
                             consistent, ratio)
