"""Term-graph rewriting with sharing.

Graphs are rooted DAGs with ordered out-edges and a partial labelling;
unlabelled nodes play the role of variables.  Firing a redex runs three
phases: build an isomorphic copy of the rule's right-hand portion,
redirect every edge into the matched root (and the graph root if needed),
then collect everything unreachable.  Constructor-sharedness, the
invariant that every shared node heads only constructor paths, is what
keeps graph steps in bijection with term steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

from . import crs


class GraphError(Exception):
    pass


class UnlabelledNode(GraphError):
    pass


class UnfoldTooLarge(GraphError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"unfolded term would have {size} nodes (limit {limit})")
        self.size = size
        self.limit = limit


class SharingViolation(GraphError):
    pass


class TermGraph:
    """Mutable rooted labelled graph; nodes are ints from a local counter."""

    def __init__(self):
        self.label: dict[int, Optional[str]] = {}
        self.succ: dict[int, tuple[int, ...]] = {}
        self.preds: dict[int, set[tuple[int, int]]] = {}
        self.root: int = -1
        self._next = 0

    def new_node(self, label: Optional[str]) -> int:
        v = self._next
        self._next += 1
        self.label[v] = label
        self.succ[v] = ()
        self.preds[v] = set()
        return v

    def set_children(self, v: int, children: tuple[int, ...]) -> None:
        for i, c in enumerate(self.succ[v]):
            self.preds[c].discard((v, i))
        self.succ[v] = children
        for i, c in enumerate(children):
            self.preds[c].add((v, i))

    def nodes(self) -> list[int]:
        return sorted(self.label)

    def node_count(self) -> int:
        return len(self.label)

    def in_degree(self, v: int) -> int:
        return len(self.preds[v])

    def is_closed(self) -> bool:
        return all(l is not None for l in self.label.values())

    def reachable(self, start: int) -> set[int]:
        seen = {start}
        todo = [start]
        while todo:
            v = todo.pop()
            for c in self.succ[v]:
                if c not in seen:
                    seen.add(c)
                    todo.append(c)
        return seen

    def copy(self) -> "TermGraph":
        g = TermGraph()
        g.label = dict(self.label)
        g.succ = dict(self.succ)
        g.preds = {v: set(ps) for v, ps in self.preds.items()}
        g.root = self.root
        g._next = self._next
        return g

    def check_acyclic(self) -> None:
        state: dict[int, int] = {}
        for start in self.label:
            if state.get(start):
                continue
            stack = [(start, 0)]
            state[start] = 1
            while stack:
                v, i = stack[-1]
                if i < len(self.succ[v]):
                    stack[-1] = (v, i + 1)
                    c = self.succ[v][i]
                    st = state.get(c, 0)
                    if st == 1:
                        raise GraphError("cycle detected")
                    if st == 0:
                        state[c] = 1
                        stack.append((c, 0))
                else:
                    state[v] = 2
                    stack.pop()


def term_to_graph(t: crs.Term) -> TermGraph:
    """Tree-shaped graph of a closed term: one node per symbol occurrence."""
    if not crs.is_closed(t):
        raise GraphError("term must be closed")
    g = TermGraph()
    results: list[int] = []
    todo: list[tuple[str, crs.Term]] = [("go", t)]
    while todo:
        op, node = todo.pop()
        if op == "go":
            todo.append(("mk", node))
            for c in reversed(node.children):
                todo.append(("go", c))
        else:
            k = len(node.children)
            kids = tuple(results[-k:]) if k else ()
            if k:
                del results[-k:]
            v = g.new_node(node.symbol)
            g.set_children(v, kids)
            results.append(v)
    g.root = results[0]
    return g


def unfold_size(g: TermGraph, start: Optional[int] = None) -> int:
    """Size of the term the graph unfolds to (shared parts count repeatedly)."""
    start = g.root if start is None else start
    memo: dict[int, int] = {}
    order: list[int] = []
    seen: set[int] = set()
    stack = [(start, False)]
    while stack:
        v, done = stack.pop()
        if done:
            order.append(v)
            continue
        if v in seen:
            continue
        seen.add(v)
        stack.append((v, True))
        for c in g.succ[v]:
            stack.append((c, False))
    for v in order:
        memo[v] = 1 + sum(memo[c] for c in g.succ[v])
    return memo[start]


def graph_to_term(g: TermGraph, max_size: int = 10_000) -> crs.Term:
    """Unfold the graph to a term; exponential in the worst case, so a size
    guard refuses beyond max_size nodes."""
    if not g.is_closed():
        unlab = [v for v, l in g.label.items() if l is None]
        raise UnlabelledNode(f"nodes {unlab} are unlabelled")
    total = unfold_size(g)
    if total > max_size:
        raise UnfoldTooLarge(total, max_size)
    memo: dict[int, crs.Term] = {}
    order: list[int] = []
    seen: set[int] = set()
    stack = [(g.root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            order.append(v)
            continue
        if v in seen:
            continue
        seen.add(v)
        stack.append((v, True))
        for c in g.succ[v]:
            stack.append((c, False))
    for v in order:
        memo[v] = crs.Node(g.label[v], tuple(memo[c] for c in g.succ[v]))
    return memo[g.root]


# --- rules -----------------------------------------------------------------------------

@dataclass
class GraphRule:
    """Labelled graph with left and right roots.

    Every path from the left root must be a left path: the left root is a
    function symbol and everything below it is a constructor or unlabelled.
    Unlabelled nodes reachable from the right root must also be reachable
    from the left root.
    """

    graph: TermGraph
    left: int
    right: int
    name: str = ""

    def validate(self, sig: crs.Signature) -> None:
        g = self.graph
        if g.label[self.left] is None or not sig.is_function(g.label[self.left]):
            raise GraphError("left root must be labelled with a function symbol")
        for v in g.reachable(self.left):
            lab = g.label[v]
            if v != self.left and lab is not None and not sig.is_constructor(lab):
                raise GraphError(f"non-left path through node {v}")
        left_nodes = g.reachable(self.left)
        for v in g.reachable(self.right):
            if g.label[v] is None and v not in left_nodes:
                raise GraphError(f"unlabelled node {v} not bound by the left side")


def rule_to_graph_rule(rule: crs.Rule, sig: crs.Signature) -> GraphRule:
    """Trees of both sides, sharing exactly the variable nodes."""
    g = TermGraph()
    varnode: dict[str, int] = {}

    def build(t: crs.Term) -> int:
        if isinstance(t, crs.Var):
            if t.name not in varnode:
                varnode[t.name] = g.new_node(None)
            return varnode[t.name]
        kids = tuple(build(c) for c in t.children)
        v = g.new_node(t.symbol)
        g.set_children(v, kids)
        return v

    left = build(crs.Node(rule.head, rule.lhs))
    right = build(rule.rhs)
    gr = GraphRule(g, left, right, name=rule.head)
    gr.validate(sig)
    return gr


def system_to_graph_rules(system: crs.CrsSystem) -> list[GraphRule]:
    return [rule_to_graph_rule(r, system.signature) for r in system.rules]


@dataclass
class Redex:
    rule: GraphRule
    phi: dict[int, int]  # rule node -> graph node, on the left subgraph

    @property
    def anchor(self) -> int:
        return self.phi[self.rule.left]


def _function_free(g: TermGraph, v: int, sig: crs.Signature,
                   memo: dict[int, bool], counter: list[int]) -> bool:
    # no function label at or below v: the constructor-path condition
    hit = memo.get(v)
    if hit is not None:
        return hit
    todo = [v]
    trail = []
    ok = True
    while todo:
        u = todo.pop()
        if u in memo:
            if not memo[u]:
                ok = False
                break
            continue
        counter[0] += 1
        lab = g.label[u]
        if lab is not None and sig.is_function(lab):
            ok = False
            break
        trail.append(u)
        todo.extend(g.succ[u])
    if ok:
        for u in trail:
            memo[u] = True
    memo[v] = ok
    return ok


def _try_match(g: TermGraph, grule: GraphRule, anchor: int, sig: crs.Signature,
               ffree: dict[int, bool], counter: list[int]) -> Optional[dict[int, int]]:
    rg = grule.graph
    phi: dict[int, int] = {}
    todo = [(grule.left, anchor)]
    while todo:
        rn, gn = todo.pop()
        counter[0] += 1
        bound = phi.get(rn)
        if bound is not None:
            if bound != gn:
                return None
            continue
        lab = rg.label[rn]
        if lab is None:
            if not _function_free(g, gn, sig, ffree, counter):
                return None
            phi[rn] = gn
            continue
        if g.label[gn] != lab:
            return None
        phi[rn] = gn
        todo.extend(zip(rg.succ[rn], g.succ[gn]))
    return phi


def find_redex(g: TermGraph, grules: list[GraphRule], sig: crs.Signature,
               rng=None, counter: Optional[list[int]] = None) -> Optional[Redex]:
    """Leftmost-innermost redex by default (post-order from the root), or a
    uniform random one with rng.  Orthogonality makes the rule at a given
    anchor unique; that is asserted."""
    if counter is None:
        counter = [0]
    by_symbol: dict[str, list[GraphRule]] = {}
    for gr in grules:
        by_symbol.setdefault(gr.graph.label[gr.left], []).append(gr)
    ffree: dict[int, bool] = {}
    order: list[int] = []
    seen: set[int] = set()
    stack = [(g.root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            order.append(v)
            continue
        if v in seen:
            continue
        seen.add(v)
        stack.append((v, True))
        for c in reversed(g.succ[v]):
            stack.append((c, False))
    found: list[Redex] = []
    for v in order:
        counter[0] += 1
        lab = g.label[v]
        if lab is None or not sig.is_function(lab):
            continue
        hits = []
        for gr in by_symbol.get(lab, []):
            phi = _try_match(g, gr, v, sig, ffree, counter)
            if phi is not None:
                hits.append(Redex(gr, phi))
        assert len(hits) <= 1, f"orthogonality violated at node {v}"
        if hits:
            if rng is None:
                return hits[0]
            found.append(hits[0])
    if not found:
        return None
    return found[rng.randrange(len(found))]


def _build_phase(g: TermGraph, redex: Redex) -> int:
    """Copy the right-side-only portion into g; returns the copy of the
    right root (or its image under phi when the right side is shared)."""
    rg = redex.rule.graph
    left_nodes = rg.reachable(redex.rule.left)
    right_nodes = rg.reachable(redex.rule.right)
    fresh = [v for v in sorted(right_nodes) if v not in left_nodes]
    copy: dict[int, int] = {}
    for v in fresh:
        assert rg.label[v] is not None, "unlabelled node outside the left side"
        copy[v] = g.new_node(rg.label[v])
    for v in fresh:
        kids = []
        for c in rg.succ[v]:
            kids.append(copy[c] if c in copy else redex.phi[c])
        g.set_children(copy[v], tuple(kids))
    r = redex.rule.right
    return copy[r] if r in copy else redex.phi[r]


def _redirect_phase(g: TermGraph, target: int, replacement: int) -> None:
    for parent, idx in list(g.preds[target]):
        kids = list(g.succ[parent])
        kids[idx] = replacement
        g.set_children(parent, tuple(kids))
    if g.root == target:
        g.root = replacement


def _gc_phase(g: TermGraph) -> int:
    live = g.reachable(g.root)
    dead = [v for v in g.label if v not in live]
    for v in dead:
        for i, c in enumerate(g.succ[v]):
            if c in live:
                g.preds[c].discard((v, i))
        del g.label[v], g.succ[v], g.preds[v]
    return len(dead)


def fire_redex(g: TermGraph, redex: Redex) -> None:
    """Build, redirect, collect; mutates g in place."""
    replacement = _build_phase(g, redex)
    _redirect_phase(g, redex.anchor, replacement)
    _gc_phase(g)


def fire_redex_phases(g: TermGraph, redex: Redex) -> list[TermGraph]:
    """Snapshots after each phase (build, redirect, collect)."""
    replacement = _build_phase(g, redex)
    after_build = g.copy()
    _redirect_phase(g, redex.anchor, replacement)
    after_redirect = g.copy()
    _gc_phase(g)
    return [after_build, after_redirect, g.copy()]


def is_constructor_shared(g: TermGraph, sig: crs.Signature) -> bool:
    """Every node reachable along two distinct paths heads only constructor
    paths; checking in-degree >= 2 points suffices on a rooted DAG."""
    memo: dict[int, bool] = {}
    counter = [0]
    for v in g.reachable(g.root):
        if g.in_degree(v) >= 2:
            if not _function_free(g, v, sig, memo, counter):
                return False
    return True


OutcomeKind = Literal["normal", "exhausted"]


@dataclass
class GraphOutcome:
    kind: OutcomeKind
    graph: TermGraph
    steps: int
    sizes: list[int] = field(default_factory=list)  # node count, initial first
    work: list[int] = field(default_factory=list)   # nodes visited per step


def graph_reduce(g: TermGraph, grules: list[GraphRule], sig: crs.Signature,
                 budget: int = 10_000, rng=None, check_shared: bool = True,
                 on_step=None) -> GraphOutcome:
    """Iterate find/fire on a constructor-shared closed graph.

    Records the node count after every firing and asserts that
    constructor-sharedness is preserved; a violation aborts the run since
    it indicates a bug, not an input error.
    """
    if check_shared and not is_constructor_shared(g, sig):
        raise SharingViolation("input graph is not constructor-shared")
    sizes = [g.node_count()]
    work: list[int] = []
    steps = 0
    while steps < budget:
        counter = [0]
        redex = find_redex(g, grules, sig, rng=rng, counter=counter)
        work.append(counter[0])
        if redex is None:
            return GraphOutcome("normal", g, steps, sizes, work)
        fire_redex(g, redex)
        steps += 1
        sizes.append(g.node_count())
        if check_shared and not is_constructor_shared(g, sig):
            raise SharingViolation(f"sharedness lost after step {steps}")
        if on_step is not None:
            on_step(g, steps)
    if find_redex(g, grules, sig) is None:
        return GraphOutcome("normal", g, steps, sizes, work)
    return GraphOutcome("exhausted", g, steps, sizes, work)


# --- comparison and export ------------------------------------------------------------

def isomorphic(g1: TermGraph, g2: TermGraph) -> bool:
    """Rooted isomorphism; ordered children make this one traversal."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    todo = [(g1.root, g2.root)]
    while todo:
        a, b = todo.pop()
        if a in fwd or b in bwd:
            if fwd.get(a) != b or bwd.get(b) != a:
                return False
            continue
        if g1.label[a] != g2.label[b] or len(g1.succ[a]) != len(g2.succ[b]):
            return False
        fwd[a] = b
        bwd[b] = a
        todo.extend(zip(g1.succ[a], g2.succ[b]))
    return len(fwd) == len(g1.reachable(g1.root)) == len(g2.reachable(g2.root))


def to_dot(g: TermGraph, name: str = "g") -> str:
    """DOT export with stable node ordering (ascending ids)."""
    lines = [f"digraph {name} {{"]
    for v in g.nodes():
        lab = g.label[v] if g.label[v] is not None else "?"
        shape = ' shape="doublecircle"' if v == g.root else ""
        lines.append(f'  n{v} [label="{lab}"{shape}];')
    for v in g.nodes():
        for i, c in enumerate(g.succ[v]):
            lines.append(f'  n{v} -> n{c} [label="{i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
