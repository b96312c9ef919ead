"""Orthogonal constructor term rewriting with call-by-value firing.

A system is a signature (constructors and function symbols with arities)
plus left-linear, pairwise non-overlapping rules whose left-hand sides are
function symbols applied to constructor patterns.  A redex only fires when
the matching substitution binds every variable to a constructor term, so
redexes are never nested and the step count to normal form does not depend
on the position policy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Literal, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Node:
    symbol: str
    children: tuple["Term", ...] = ()


Term = Union[Var, Node]


class CrsError(Exception):
    """Base class for system validation failures."""


class OverlapError(CrsError):
    def __init__(self, i: int, j: int):
        super().__init__(f"rules {i} and {j} have unifiable left-hand sides")
        self.rules = (i, j)


class NonLinearLhs(CrsError):
    def __init__(self, rule: int, var: str):
        super().__init__(f"rule {rule}: variable {var!r} occurs twice in the lhs")
        self.rule = rule
        self.var = var


class ArityMismatch(CrsError):
    def __init__(self, symbol: str, expected: int, got: int):
        super().__init__(f"symbol {symbol!r} has arity {expected}, applied to {got} arguments")
        self.symbol = symbol


class UnknownSymbol(CrsError):
    def __init__(self, symbol: str):
        super().__init__(f"symbol {symbol!r} is not declared")
        self.symbol = symbol


class InvalidRule(CrsError):
    pass


@dataclass
class Signature:
    """Constructor and function symbols with arities, in declaration order."""

    constructors: dict[str, int]
    functions: dict[str, int]

    def __post_init__(self):
        dup = set(self.constructors) & set(self.functions)
        if dup:
            raise CrsError(f"symbols declared both constructor and function: {sorted(dup)}")
        for name, ar in list(self.constructors.items()) + list(self.functions.items()):
            if ar < 0:
                raise CrsError(f"negative arity for {name!r}")

    def arity(self, symbol: str) -> int:
        if symbol in self.constructors:
            return self.constructors[symbol]
        if symbol in self.functions:
            return self.functions[symbol]
        raise UnknownSymbol(symbol)

    def is_constructor(self, symbol: str) -> bool:
        return symbol in self.constructors

    def is_function(self, symbol: str) -> bool:
        return symbol in self.functions


@dataclass(frozen=True)
class Rule:
    head: str
    lhs: tuple[Term, ...]
    rhs: Term


def term_size(t: Term) -> int:
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        n += 1
        if isinstance(s, Node):
            todo.extend(s.children)
    return n


def count_symbol(t: Term, symbol: str) -> int:
    """Number of occurrences of `symbol` in t."""
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Node):
            if s.symbol == symbol:
                n += 1
            todo.extend(s.children)
    return n


def variables(t: Term) -> list[str]:
    """Variable names in left-to-right occurrence order (with repeats)."""
    out: list[str] = []
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Var):
            out.append(s.name)
        else:
            todo.extend(reversed(s.children))
    return out


def is_closed(t: Term) -> bool:
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Var):
            return False
        todo.extend(s.children)
    return True


def is_constructor_term(t: Term, sig: Signature) -> bool:
    """Built from constructors only (the values of CBV rewriting)."""
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Var) or not sig.is_constructor(s.symbol):
            return False
        todo.extend(s.children)
    return True


def is_pattern(t: Term, sig: Signature) -> bool:
    """Built from constructors and variables."""
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Node):
            if not sig.is_constructor(s.symbol):
                return False
            todo.extend(s.children)
    return True


def contains_function(t: Term, sig: Signature) -> bool:
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Node):
            if sig.is_function(s.symbol):
                return True
            todo.extend(s.children)
    return False


def _check_arities(t: Term, sig: Signature) -> None:
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Node):
            ar = sig.arity(s.symbol)
            if ar != len(s.children):
                raise ArityMismatch(s.symbol, ar, len(s.children))
            todo.extend(s.children)


def _patterns_compatible(p: Term, q: Term) -> bool:
    # Both linear with disjoint variables, so unifiability is a structural
    # compatibility check: variables match anything.
    if isinstance(p, Var) or isinstance(q, Var):
        return True
    if p.symbol != q.symbol:
        return False
    return all(_patterns_compatible(a, b) for a, b in zip(p.children, q.children))


class CrsSystem:
    """A validated orthogonal constructor rewrite system."""

    def __init__(self, signature: Signature, rules: list[Rule]):
        self.signature = signature
        self.rules = tuple(rules)
        self._validate()
        self._index: dict[tuple[str, Optional[str]], list[Rule]] = {}
        for rule in self.rules:
            root = None
            if rule.lhs and isinstance(rule.lhs[0], Node):
                root = rule.lhs[0].symbol
            self._index.setdefault((rule.head, root), []).append(rule)

    def _validate(self) -> None:
        sig = self.signature
        for idx, rule in enumerate(self.rules):
            if not sig.is_function(rule.head):
                raise InvalidRule(f"rule {idx}: head {rule.head!r} is not a function symbol")
            if len(rule.lhs) != sig.arity(rule.head):
                raise ArityMismatch(rule.head, sig.arity(rule.head), len(rule.lhs))
            seen: set[str] = set()
            for p in rule.lhs:
                _check_arities(p, sig)
                if not is_pattern(p, sig):
                    raise InvalidRule(f"rule {idx}: lhs argument is not a pattern")
                for v in variables(p):
                    if v in seen:
                        raise NonLinearLhs(idx, v)
                    seen.add(v)
            _check_arities(rule.rhs, sig)
            extra = set(variables(rule.rhs)) - seen
            if extra:
                raise InvalidRule(f"rule {idx}: rhs variables {sorted(extra)} not bound in lhs")
        by_head: dict[str, list[int]] = {}
        for idx, rule in enumerate(self.rules):
            by_head.setdefault(rule.head, []).append(idx)
        for idxs in by_head.values():
            for a in range(len(idxs)):
                for b in range(a + 1, len(idxs)):
                    ra, rb = self.rules[idxs[a]], self.rules[idxs[b]]
                    if all(_patterns_compatible(p, q) for p, q in zip(ra.lhs, rb.lhs)):
                        raise OverlapError(idxs[a], idxs[b])

    def candidates(self, head: str, first_arg: Optional[Term]) -> list[Rule]:
        root = first_arg.symbol if isinstance(first_arg, Node) else None
        out = self._index.get((head, root), [])
        if root is not None:
            out = out + self._index.get((head, None), [])
        return out


def validate_system(signature: Signature, rules: list[Rule]) -> CrsSystem:
    """Validated system, or a CrsError naming the offending rule(s)."""
    return CrsSystem(signature, rules)


def match_pattern(p: Term, t: Term) -> Optional[dict[str, Term]]:
    """Match a pattern against a constructor term; t must be function-free."""
    subst: dict[str, Term] = {}
    todo = [(p, t)]
    while todo:
        pp, tt = todo.pop()
        if isinstance(pp, Var):
            subst[pp.name] = tt
            continue
        if not isinstance(tt, Node) or tt.symbol != pp.symbol:
            return None
        todo.extend(zip(pp.children, tt.children))
    return subst


def apply_subst(t: Term, subst: dict[str, Term]) -> Term:
    results: list[Term] = []
    todo: list[tuple[str, Term]] = [("go", t)]
    while todo:
        op, node = todo.pop()
        if op == "go":
            if isinstance(node, Var):
                results.append(subst.get(node.name, node))
            elif node.children:
                todo.append(("mk", node))
                for c in reversed(node.children):
                    todo.append(("go", c))
            else:
                results.append(node)
        else:
            k = len(node.children)
            kids = results[-k:]
            del results[-k:]
            results.append(Node(node.symbol, tuple(kids)))
    return results[0]


def _match_rule(sys: CrsSystem, rule: Rule, args: tuple[Term, ...],
                sig: Signature) -> Optional[dict[str, Term]]:
    # CBV condition: every binding must be a constructor term.
    subst: dict[str, Term] = {}
    todo = list(zip(rule.lhs, args))
    while todo:
        pp, tt = todo.pop()
        if isinstance(pp, Var):
            if not is_constructor_term(tt, sig):
                return None
            subst[pp.name] = tt
            continue
        if not isinstance(tt, Node) or tt.symbol != pp.symbol:
            return None
        todo.extend(zip(pp.children, tt.children))
    return subst


Path = tuple[int, ...]


def match_at(sys: CrsSystem, t: Term) -> Optional[tuple[Rule, dict[str, Term]]]:
    """The unique rule instance firing at the root of t, if any."""
    if not isinstance(t, Node) or not sys.signature.is_function(t.symbol):
        return None
    hits = []
    first = t.children[0] if t.children else None
    for rule in sys.candidates(t.symbol, first):
        subst = _match_rule(sys, rule, t.children, sys.signature)
        if subst is not None:
            hits.append((rule, subst))
    assert len(hits) <= 1, f"orthogonality violated at {t.symbol}"
    return hits[0] if hits else None


def redexes(sys: CrsSystem, t: Term) -> Iterator[tuple[Path, Rule, dict[str, Term]]]:
    """Redex occurrences in leftmost-innermost order."""

    def walk(t: Term, path: Path) -> Iterator[tuple[Path, Rule, dict[str, Term]]]:
        if isinstance(t, Node):
            for i, c in enumerate(t.children):
                yield from walk(c, path + (i,))
            hit = match_at(sys, t)
            if hit is not None:
                yield path, hit[0], hit[1]

    yield from walk(t, ())


def subterm_at(t: Term, path: Path) -> Term:
    for i in path:
        t = t.children[i]
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    i = path[0]
    kids = list(t.children)
    kids[i] = replace_at(kids[i], path[1:], new)
    return Node(t.symbol, tuple(kids))


def rewrite_step(sys: CrsSystem, t: Term, rng=None) -> Optional[Term]:
    """One rewrite step (leftmost-innermost by default) or None if normal."""
    if rng is None:
        hit = next(redexes(sys, t), None)
    else:
        all_hits = list(redexes(sys, t))
        hit = all_hits[rng.randrange(len(all_hits))] if all_hits else None
    if hit is None:
        return None
    path, rule, subst = hit
    return replace_at(t, path, apply_subst(rule.rhs, subst))


NormalKind = Literal["constructor", "stuck", "exhausted"]


@dataclass(frozen=True)
class CrsOutcome:
    kind: NormalKind
    term: Term
    steps: int


def reduce(sys: CrsSystem, t: Term, budget: int = 10_000, rng=None,
           on_step=None) -> CrsOutcome:
    """Reduce to normal form or until the step budget is exhausted.

    A normal form is classified "constructor" when it contains no function
    symbol and "stuck" otherwise (the error case of the simulation).
    `on_step(rule, before, after)` is invoked after each firing.
    """
    if not is_closed(t):
        raise CrsError("reduction input must be closed")
    steps = 0
    while steps < budget:
        if rng is None:
            hit = next(redexes(sys, t), None)
        else:
            all_hits = list(redexes(sys, t))
            hit = all_hits[rng.randrange(len(all_hits))] if all_hits else None
        if hit is None:
            break
        path, rule, subst = hit
        after = replace_at(t, path, apply_subst(rule.rhs, subst))
        if on_step is not None:
            on_step(rule, t, after)
        t = after
        steps += 1
    else:
        if rewrite_step(sys, t) is not None:
            return CrsOutcome("exhausted", t, steps)
    kind: NormalKind = "constructor" if is_constructor_term(t, sys.signature) else "stuck"
    return CrsOutcome(kind, t, steps)


# --- text format ---------------------------------------------------------------

IDENT_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_']*")


class CrsParseError(ValueError):
    pass


def parse_term(text: str) -> Term:
    """Parse `name` or `name(t1, ..., tn)`; every atom comes back as a Node."""
    toks = re.findall(r"[a-zA-Z][a-zA-Z0-9_']*|[(),]|\S", text)
    pos = 0

    def parse_one() -> Term:
        nonlocal pos
        if pos >= len(toks):
            raise CrsParseError("unexpected end of term")
        name = toks[pos]
        if not IDENT_RE.fullmatch(name):
            raise CrsParseError(f"expected identifier, got {name!r}")
        pos += 1
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            kids = []
            if pos < len(toks) and toks[pos] != ")":
                kids.append(parse_one())
                while pos < len(toks) and toks[pos] == ",":
                    pos += 1
                    kids.append(parse_one())
            if pos >= len(toks) or toks[pos] != ")":
                raise CrsParseError("expected ')'")
            pos += 1
            return Node(name, tuple(kids))
        return Node(name, ())

    t = parse_one()
    if pos != len(toks):
        raise CrsParseError(f"trailing input: {toks[pos:]!r}")
    return t


def _classify_atoms(t: Term, sig: Signature) -> Term:
    # Nullary nodes whose symbol is undeclared become variables.
    if isinstance(t, Var):
        return t
    if not t.children and not (sig.is_constructor(t.symbol) or sig.is_function(t.symbol)):
        return Var(t.symbol)
    return Node(t.symbol, tuple(_classify_atoms(c, sig) for c in t.children))


def term_to_str(t: Term) -> str:
    parts: list[str] = []
    todo: list[tuple[str, object]] = [("go", t)]
    while todo:
        op, arg = todo.pop()
        if op == "lit":
            parts.append(arg)
        elif isinstance(arg, Var):
            parts.append(arg.name)
        else:
            parts.append(arg.symbol)
            if arg.children:
                todo.append(("lit", ")"))
                for i, c in enumerate(reversed(arg.children)):
                    todo.append(("go", c))
                    if i < len(arg.children) - 1:
                        todo.append(("lit", ", "))
                todo.append(("lit", "("))
    return "".join(parts)


@dataclass
class CrsFile:
    system: CrsSystem
    term: Optional[Term] = None
    comments: list[str] = field(default_factory=list)


def parse_system(text: str) -> CrsFile:
    """Parse the declaration format: constructor/function/rule/term lines."""
    constructors: dict[str, int] = {}
    functions: dict[str, int] = {}
    raw_rules: list[tuple[str, str]] = []
    term_src: Optional[str] = None
    comments: list[str] = []
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            comments.append(stripped[1:].strip())
            continue
        if "#" in stripped:
            stripped = stripped[: stripped.index("#")].strip()
        if stripped:
            body.append(stripped)
    for stmt in " ".join(body).split(";"):
        stmt = stmt.strip()
        if not stmt:
            continue
        m = re.fullmatch(r"(constructor|function)\s+([a-zA-Z][a-zA-Z0-9_']*)\s*/\s*(\d+)", stmt)
        if m:
            kind, name, ar = m.group(1), m.group(2), int(m.group(3))
            table = constructors if kind == "constructor" else functions
            if name in constructors or name in functions:
                raise CrsParseError(f"symbol {name!r} declared twice")
            table[name] = ar
            continue
        m = re.fullmatch(r"rule\s+(.*?)\s*->\s*(.*)", stmt, re.DOTALL)
        if m:
            raw_rules.append((m.group(1), m.group(2)))
            continue
        m = re.fullmatch(r"term\s+(.*)", stmt, re.DOTALL)
        if m:
            if term_src is not None:
                raise CrsParseError("multiple term declarations")
            term_src = m.group(1)
            continue
        raise CrsParseError(f"cannot parse declaration: {stmt!r}")
    sig = Signature(constructors, functions)
    rules = []
    for lhs_src, rhs_src in raw_rules:
        lhs = _classify_atoms(parse_term(lhs_src), sig)
        if not isinstance(lhs, Node) or isinstance(lhs, Var):
            raise CrsParseError(f"rule lhs must be a function application: {lhs_src!r}")
        rhs = _classify_atoms(parse_term(rhs_src), sig)
        rules.append(Rule(lhs.symbol, lhs.children, rhs))
    system = CrsSystem(sig, rules)
    term = None
    if term_src is not None:
        term = _classify_atoms(parse_term(term_src), sig)
        if not is_closed(term):
            raise CrsParseError(f"term declaration uses undeclared symbols: {term_src!r}")
        _check_arities(term, sig)
    return CrsFile(system, term, comments)


def system_to_str(sys: CrsSystem, term: Optional[Term] = None,
                  comments: Optional[list[str]] = None) -> str:
    lines = []
    for c in comments or []:
        lines.append(f"# {c}")
    for name, ar in sys.signature.constructors.items():
        lines.append(f"constructor {name}/{ar};")
    for name, ar in sys.signature.functions.items():
        lines.append(f"function {name}/{ar};")
    for rule in sys.rules:
        lhs = term_to_str(Node(rule.head, rule.lhs))
        lines.append(f"rule {lhs} -> {term_to_str(rule.rhs)};")
    if term is not None:
        lines.append(f"term {term_to_str(term)};")
    return "\n".join(lines) + "\n"
