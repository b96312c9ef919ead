"""Pure lambda terms with weak call-by-value and call-by-name reduction.

Reduction is weak: a redex under a binder never fires.  Every beta step
counts 1, and for terminating weak CBV runs the count is independent of
the redex order (one-step diamond), so `reduce` reports *the* step count
of its input.  Variable names are plain strings under their lexicographic
order; free-variable sequences are always sorted by that order.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


Term = Union[Var, Abs, App]

_fresh_counter = itertools.count()


def size(t: Term) -> int:
    """Length of a term: |x|=1, |\\x.M|=|M|+1, |M N|=|M|+|N|+1."""
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        n += 1
        if isinstance(s, Abs):
            todo.append(s.body)
        elif isinstance(s, App):
            todo.append(s.fun)
            todo.append(s.arg)
    return n


def leaf_count(t: Term) -> int:
    """Number of variable occurrences."""
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Var):
            n += 1
        elif isinstance(s, Abs):
            todo.append(s.body)
        else:
            todo.append(s.fun)
            todo.append(s.arg)
    return n


def _free_set(t: Term) -> set[str]:
    # Iterative: compiled terms can be deeper than the recursion limit.
    free: set[str] = set()
    bound: dict[str, int] = {}
    todo: list[tuple[str, object]] = [("go", t)]
    while todo:
        op, arg = todo.pop()
        if op == "go":
            if isinstance(arg, Var):
                if bound.get(arg.name, 0) == 0:
                    free.add(arg.name)
            elif isinstance(arg, Abs):
                bound[arg.binder] = bound.get(arg.binder, 0) + 1
                todo.append(("unbind", arg.binder))
                todo.append(("go", arg.body))
            else:
                todo.append(("go", arg.arg))
                todo.append(("go", arg.fun))
        else:
            bound[arg] -= 1
    return free


def free_vars(t: Term) -> tuple[str, ...]:
    """Free variables as a duplicate-free sequence, sorted lexicographically."""
    return tuple(sorted(_free_set(t)))


def is_closed(t: Term) -> bool:
    return not _free_set(t)


def is_value(t: Term) -> bool:
    """Values are variables and abstractions."""
    return isinstance(t, (Var, Abs))


def fresh_name(base: str, avoid: set[str]) -> str:
    """A name not in `avoid`, derived from `base` and a global counter."""
    while True:
        cand = f"{base}_{next(_fresh_counter)}"
        if cand not in avoid:
            return cand


def _subst_closed(t: Term, x: str, v: Term) -> Term:
    # v closed: shadowing is the only scope concern, capture cannot happen.
    # Iterative post-order rebuild, sharing untouched subterms.
    results: list[Term] = []
    todo: list[tuple[str, Term]] = [("go", t)]
    while todo:
        op, node = todo.pop()
        if op == "go":
            if isinstance(node, Var):
                results.append(v if node.name == x else node)
            elif isinstance(node, Abs):
                if node.binder == x:
                    results.append(node)
                else:
                    todo.append(("abs", node))
                    todo.append(("go", node.body))
            else:
                todo.append(("app", node))
                todo.append(("go", node.arg))
                todo.append(("go", node.fun))
        elif op == "abs":
            b = results.pop()
            results.append(node if b is node.body else Abs(node.binder, b))
        else:
            a = results.pop()
            f = results.pop()
            if f is node.fun and a is node.arg:
                results.append(node)
            else:
                results.append(App(f, a))
    return results[0]


def substitute(t: Term, x: str, v: Term) -> Term:
    """Capture-avoiding substitution t{v/x}.

    When v is closed this is plain textual substitution; otherwise binders
    are renamed with globally fresh names where they would capture.
    """
    fv_v = _free_set(v)
    if not fv_v:
        return _subst_closed(t, x, v)

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return v if t.name == x else t
        if isinstance(t, Abs):
            if t.binder == x or x not in _free_set(t.body):
                return t
            if t.binder in fv_v:
                y = fresh_name(t.binder, fv_v | _free_set(t.body))
                return Abs(y, go(substitute(t.body, t.binder, Var(y))))
            return Abs(t.binder, go(t.body))
        return App(go(t.fun), go(t.arg))

    return go(t)


def substitute_many(t: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    mapping = {x: v for x, v in mapping.items() if v != Var(x)}
    if not mapping:
        return t
    fv_vs: set[str] = set()
    for v in mapping.values():
        fv_vs |= _free_set(v)

    def go(t: Term, mp: dict[str, Term]) -> Term:
        if not mp:
            return t
        if isinstance(t, Var):
            return mp.get(t.name, t)
        if isinstance(t, Abs):
            inner = {x: v for x, v in mp.items() if x != t.binder}
            if not inner:
                return t
            if t.binder in fv_vs:
                y = fresh_name(t.binder, fv_vs | _free_set(t.body) | set(inner))
                return Abs(y, go(substitute(t.body, t.binder, Var(y)), inner))
            return Abs(t.binder, go(t.body, inner))
        return App(go(t.fun, mp), go(t.arg, mp))

    return go(t, dict(mapping))


def alpha_eq(s: Term, t: Term) -> bool:
    """Structural equality modulo bound-variable names."""
    env_s: dict[str, list[int]] = {}
    env_t: dict[str, list[int]] = {}
    marker = 0
    todo: list[tuple[str, object, object]] = [("go", s, t)]
    while todo:
        op, a, b = todo.pop()
        if op == "unbind":
            env_s[a].pop()
            env_t[b].pop()
            continue
        if type(a) is not type(b):
            return False
        if isinstance(a, Var):
            la, lb = env_s.get(a.name), env_t.get(b.name)
            da = la[-1] if la else None
            db = lb[-1] if lb else None
            if da is None and db is None:
                if a.name != b.name:
                    return False
            elif da != db:
                return False
        elif isinstance(a, Abs):
            env_s.setdefault(a.binder, []).append(marker)
            env_t.setdefault(b.binder, []).append(marker)
            marker += 1
            todo.append(("unbind", a.binder, b.binder))
            todo.append(("go", a.body, b.body))
        else:
            todo.append(("go", a.arg, b.arg))
            todo.append(("go", a.fun, b.fun))
    return True


# --- one-step reduction -----------------------------------------------------

Path = tuple[int, ...]


def cbv_redexes(t: Term) -> Iterator[Path]:
    """Paths of weak CBV redexes, in leftmost (pre-order) order.

    A path lists child indices from the root: 0 = function, 1 = argument.
    Traversal never enters an abstraction body.
    """

    def walk(t: Term, path: Path) -> Iterator[Path]:
        if isinstance(t, App):
            if isinstance(t.fun, Abs) and is_value(t.arg):
                yield path
            yield from walk(t.fun, path + (0,))
            yield from walk(t.arg, path + (1,))

    yield from walk(t, ())


def subterm_at(t: Term, path: Path) -> Term:
    for i in path:
        assert isinstance(t, App)
        t = t.fun if i == 0 else t.arg
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    assert isinstance(t, App)
    if path[0] == 0:
        return App(replace_at(t.fun, path[1:], new), t.arg)
    return App(t.fun, replace_at(t.arg, path[1:], new))


def contract(redex: Term) -> Term:
    assert isinstance(redex, App) and isinstance(redex.fun, Abs) and is_value(redex.arg)
    return substitute(redex.fun.body, redex.fun.binder, redex.arg)


def cbv_step(t: Term, rng=None) -> Optional[Term]:
    """One weak CBV step, or None if t is normal.

    The default policy fires the leftmost redex; passing a random.Random
    picks uniformly among all redexes (diamond: same count either way).
    """
    if rng is None:
        path = next(cbv_redexes(t), None)
        if path is None:
            return None
    else:
        paths = list(cbv_redexes(t))
        if not paths:
            return None
        path = paths[rng.randrange(len(paths))]
    return replace_at(t, path, contract(subterm_at(t, path)))


def cbn_step(t: Term) -> Optional[Term]:
    """The unique weak call-by-name (head) step, or None."""
    if isinstance(t, App):
        if isinstance(t.fun, Abs):
            return substitute(t.fun.body, t.fun.binder, t.arg)
        s = cbn_step(t.fun)
        if s is not None:
            return App(s, t.arg)
    return None


# --- full reduction ----------------------------------------------------------

OutcomeKind = Literal["normal", "exhausted"]


@dataclass(frozen=True)
class ReductionOutcome:
    kind: OutcomeKind
    term: Term
    steps: int


class SizeLimitExceeded(Exception):
    """Raised by reduce(max_size=...) when an intermediate term outgrows it."""

    def __init__(self, steps: int, size: int):
        super().__init__(f"term grew to {size} nodes after {steps} steps")
        self.steps = steps
        self.size = size


def _reduce_cbv_machine(t: Term, budget: int, max_size: Optional[int]) -> ReductionOutcome:
    # Left-to-right evaluation, which fires the leftmost weak CBV redex at
    # every step.  Frames: (0, arg) = function done next evaluate arg,
    # (1, fun_nf) = argument under evaluation.
    steps = 0
    stack: list[tuple[int, Term]] = []
    control: Term = t
    descending = True
    while True:
        if descending:
            if isinstance(control, App):
                stack.append((0, control.arg))
                control = control.fun
                continue
            descending = False
            continue
        if not stack:
            return ReductionOutcome("normal", control, steps)
        tag, payload = stack.pop()
        if tag == 0:
            stack.append((1, control))
            control = payload
            descending = True
            continue
        fun_nf = payload
        if isinstance(fun_nf, Abs) and is_value(control):
            if steps >= budget:
                last = App(fun_nf, control)
                for tag2, pay2 in reversed(stack):
                    last = App(last, pay2) if tag2 == 0 else App(pay2, last)
                return ReductionOutcome("exhausted", last, steps)
            steps += 1
            control = substitute(fun_nf.body, fun_nf.binder, control)
            if max_size is not None and size(control) > max_size:
                raise SizeLimitExceeded(steps, size(control))
            descending = True
        else:
            control = App(fun_nf, control)


def _reduce_cbn_machine(t: Term, budget: int, max_size: Optional[int]) -> ReductionOutcome:
    steps = 0
    args: list[Term] = []
    control: Term = t
    while True:
        if isinstance(control, App):
            args.append(control.arg)
            control = control.fun
            continue
        if isinstance(control, Abs) and args:
            if steps >= budget:
                break
            steps += 1
            control = substitute(control.body, control.binder, args.pop())
            if max_size is not None and size(control) > max_size:
                raise SizeLimitExceeded(steps, size(control))
            continue
        break
    for a in reversed(args):
        control = App(control, a)
    kind: OutcomeKind = "exhausted" if steps >= budget and cbn_step(control) is not None else "normal"
    return ReductionOutcome(kind, control, steps)


def reduce(t: Term, strategy: Literal["cbv", "cbn"] = "cbv", budget: int = 10_000,
           rng=None, max_size: Optional[int] = None) -> ReductionOutcome:
    """Iterate the chosen step relation up to `budget` beta steps.

    On "normal" the steps field is Time(t) (cbv) resp. Time_w(t) (cbn).
    "exhausted" carries the last term reached, so runs are resumable.
    With max_size set, SizeLimitExceeded aborts runs whose intermediate
    terms outgrow it.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if strategy == "cbn":
        return _reduce_cbn_machine(t, budget, max_size)
    if rng is None:
        return _reduce_cbv_machine(t, budget, max_size)
    steps = 0
    while steps < budget:
        nxt = cbv_step(t, rng)
        if nxt is None:
            return ReductionOutcome("normal", t, steps)
        t = nxt
        steps += 1
    if cbv_step(t) is None:
        return ReductionOutcome("normal", t, steps)
    return ReductionOutcome("exhausted", t, steps)


# --- surface syntax ----------------------------------------------------------

IDENT_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_']*")
_TOKEN_RE = re.compile(r"\s*(\\|\.|\(|\)|[a-zA-Z][a-zA-Z0-9_']*)")


class LamParseError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise LamParseError(f"unexpected character {text[pos:pos+1]!r} at offset {pos}")
        toks.append(m.group(1))
        pos = m.end()
    return toks


def parse(text: str) -> Term:
    """Parse the surface syntax: `\\x. M`, juxtaposition, parentheses."""
    toks = _tokenize(text)
    pos = 0

    def peek() -> Optional[str]:
        return toks[pos] if pos < len(toks) else None

    def expect(tok: str) -> None:
        nonlocal pos
        if peek() != tok:
            raise LamParseError(f"expected {tok!r}, got {peek()!r} (token {pos})")
        pos += 1

    def parse_term() -> Term:
        nonlocal pos
        if peek() == "\\":
            pos += 1
            name = peek()
            if name is None or not IDENT_RE.fullmatch(name):
                raise LamParseError(f"expected identifier after \\, got {name!r}")
            pos += 1
            expect(".")
            return Abs(name, parse_term())
        return parse_app()

    def parse_app() -> Term:
        t = parse_atom()
        while True:
            nxt = peek()
            if nxt is None or nxt in (")", ".", "\\"):
                if nxt == "\\":
                    raise LamParseError("abstraction in application must be parenthesized")
                return t
            t = App(t, parse_atom())

    def parse_atom() -> Term:
        nonlocal pos
        tok = peek()
        if tok == "(":
            pos += 1
            t = parse_term()
            expect(")")
            return t
        if tok is not None and IDENT_RE.fullmatch(tok):
            pos += 1
            return Var(tok)
        raise LamParseError(f"expected a term, got {tok!r} (token {pos})")

    t = parse_term()
    if pos != len(toks):
        raise LamParseError(f"trailing input from token {pos}: {toks[pos:]!r}")
    return t


def to_str(t: Term) -> str:
    """Print with minimal parentheses; parse(to_str(t)) == t."""

    def go(t: Term, ctx: str) -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Abs):
            s = f"\\{t.binder}. {go(t.body, 'top')}"
            return s if ctx == "top" else f"({s})"
        s = f"{go(t.fun, 'fun')} {go(t.arg, 'arg')}"
        return f"({s})" if ctx == "arg" else s

    return go(t, "top")


# --- term builders -----------------------------------------------------------

def abss(binders: list[str], body: Term) -> Term:
    """Nested abstraction \\b1...\\bn. body."""
    for b in reversed(binders):
        body = Abs(b, body)
    return body


def apps(fun: Term, args: list[Term]) -> Term:
    """Left-nested application fun a1 ... an."""
    for a in args:
        fun = App(fun, a)
    return fun


def church_two() -> Term:
    return parse("\\f. \\x. f (f x)")


def two_tower(n: int) -> Term:
    """n-fold application of Church 2 to the identity."""
    t: Term = parse("\\x. x")
    for _ in range(n):
        t = App(church_two(), t)
    return t
