"""Statement-level control-flow graphs with exception edges.

One node per simple statement or branch condition.  ``finally`` blocks are
inlined: each route that leaves a try statement (normal completion,
exceptional exit, each ``return``) gets its own copy, headed by a synthetic
``finally`` marker node.  Every statement that contains a call bound to a
catalog signature may throw; its exception edges go to every catch clause of
the innermost enclosing try, to the exceptional finally copy, or to the
exceptional exit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .frontend import ast as A
from .semantics import SemanticModel, Signature

NORMAL = "normal"
TRUE = "true-branch"
FALSE = "false-branch"
EXCEPTION = "exception"
FINALLY_ENTRY = "finally-entry"
EDGE_KINDS = (NORMAL, TRUE, FALSE, EXCEPTION, FINALLY_ENTRY)


@dataclass(eq=False)
class CfgNode:
    id: int
    kind: str  # entry | exit | exc-exit | stmt | cond | catch | finally
    ast: Optional[A.Node] = None
    # enclosing try statements, outermost first, with the role of the
    # region the node sits in: "try", "catch" or "finally"
    frames: tuple[tuple[A.TryCatchFinally, str], ...] = ()
    route: Optional[str] = None  # set on finally copies: normal | exception | return

    @property
    def line(self) -> int:
        return self.ast.line if self.ast is not None else 0

    @property
    def region(self) -> str:
        return self.frames[-1][1] if self.frames else "body"

    @property
    def try_stmt(self) -> Optional[A.TryCatchFinally]:
        return self.frames[-1][0] if self.frames else None

    def in_region(self, role: str) -> bool:
        return any(r == role for _, r in self.frames)

    def label(self) -> str:
        if self.ast is None:
            return self.kind
        text = f"{self.kind} L{self.line} {self.ast.kind}"
        if self.route:
            text += f" ({self.route})"
        return text

    def __repr__(self) -> str:
        return f"n{self.id}:{self.label()}"


@dataclass(frozen=True)
class Edge:
    src: CfgNode
    dst: CfgNode
    kind: str


@dataclass
class Cfg:
    method: A.MethodDecl
    nodes: list[CfgNode]
    edges: list[Edge]
    entry: CfgNode
    exit: CfgNode
    exc_exit: CfgNode
    _out: dict[CfgNode, list[Edge]] = field(default_factory=dict, repr=False)
    _in: dict[CfgNode, list[Edge]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._out = {n: [] for n in self.nodes}
        self._in = {n: [] for n in self.nodes}
        for e in self.edges:
            self._out[e.src].append(e)
            self._in[e.dst].append(e)

    def out_edges(self, n: CfgNode) -> list[Edge]:
        return self._out[n]

    def in_edges(self, n: CfgNode) -> list[Edge]:
        return self._in[n]

    def succs(self, n: CfgNode) -> list[CfgNode]:
        return [e.dst for e in self._out[n]]

    def preds(self, n: CfgNode) -> list[CfgNode]:
        return [e.src for e in self._in[n]]

    def nodes_for(self, ast: A.Node) -> list[CfgNode]:
        return [n for n in self.nodes if n.ast is ast]

    def statement_nodes(self) -> list[CfgNode]:
        return [n for n in self.nodes if n.kind in ("stmt", "cond")]

    def dump(self) -> str:
        """Plain-text adjacency listing ordered by source position."""
        def key(n: CfgNode):
            if n.kind == "entry":
                return (0, 0, n.id)
            if n.kind in ("exit", "exc-exit"):
                return (2, 0, n.id)
            return (1, n.ast.span.start_offset, n.id)

        lines = [f"cfg {self.method.name}"]
        for n in sorted(self.nodes, key=key):
            region = "" if n.region == "body" else f" [{n.region}]"
            lines.append(f"  n{n.id} {n.label()}{region}")
            for e in self._out[n]:
                lines.append(f"    -> n{e.dst.id} {e.kind}")
        return "\n".join(lines) + "\n"


def may_throw(stmt: Optional[A.Node], model: SemanticModel) -> bool:
    if stmt is None:
        return False
    for call in A.calls_in(stmt):
        if isinstance(model.calls.get(call), Signature):
            return True
    return False


# -- construction -----------------------------------------------------------

Frontier = list[tuple[CfgNode, str]]


@dataclass
class _Frame:
    stmt: A.TryCatchFinally
    role: str  # try | catch | finally
    outer: Optional["_Frame"]
    state: "_TryState"


@dataclass
class _TryState:
    catch_nodes: list[CfgNode] = field(default_factory=list)
    exc_finally: Optional[CfgNode] = None  # marker of the exceptional finally copy


class _Builder:
    def __init__(self, method: A.MethodDecl, model: SemanticModel):
        self.method = method
        self.model = model
        self.ids = itertools.count()
        self.nodes: list[CfgNode] = []
        self.edges: list[Edge] = []
        self.entry = self.new("entry", None, None)
        self.exit = self.new("exit", None, None)
        self.exc_exit = self.new("exc-exit", None, None)

    # -- helpers

    def new(self, kind: str, ast: Optional[A.Node], frame: Optional[_Frame], route: Optional[str] = None) -> CfgNode:
        frames = []
        f = frame
        while f is not None:
            frames.append((f.stmt, f.role))
            f = f.outer
        node = CfgNode(next(self.ids), kind, ast, tuple(reversed(frames)), route)
        self.nodes.append(node)
        return node

    def edge(self, src: CfgNode, dst: CfgNode, kind: str) -> None:
        self.edges.append(Edge(src, dst, kind))

    def connect(self, frontier: Frontier, dst: CfgNode, kind: Optional[str] = None) -> None:
        for src, k in frontier:
            self.edge(src, dst, kind or k)

    def throw_targets(self, frame: Optional[_Frame]) -> list[CfgNode]:
        if frame is None:
            return [self.exc_exit]
        if frame.role == "try" and frame.state.catch_nodes:
            return frame.state.catch_nodes
        if frame.role in ("try", "catch") and frame.stmt.finally_ is not None:
            return [self.exceptional_finally(frame)]
        return self.throw_targets(frame.outer)

    def exceptional_finally(self, frame: _Frame) -> CfgNode:
        state = frame.state
        if state.exc_finally is None:
            fin = _Frame(frame.stmt, "finally", frame.outer, state)
            marker = self.new("finally", frame.stmt.finally_, fin, "exception")
            state.exc_finally = marker
            out = self.block(frame.stmt.finally_, [(marker, NORMAL)], fin, route="exception")
            for target in self.throw_targets(frame.outer):
                self.connect(out, target)
        return state.exc_finally

    def simple(self, kind: str, ast: A.Node, frontier: Frontier, frame: Optional[_Frame], route) -> CfgNode:
        node = self.new(kind, ast, frame, route)
        self.connect(frontier, node)
        if may_throw(ast, self.model):
            for target in self.throw_targets(frame):
                self.edge(node, target, EXCEPTION)
        return node

    # -- statements

    def block(self, stmt: A.Node, frontier: Frontier, frame: Optional[_Frame], route=None) -> Frontier:
        stmts = stmt.statements if isinstance(stmt, A.Block) else [stmt]
        for s in stmts:
            frontier = self.statement(s, frontier, frame, route)
        return frontier

    def statement(self, s: A.Node, frontier: Frontier, frame: Optional[_Frame], route) -> Frontier:
        if isinstance(s, A.Block):
            return self.block(s, frontier, frame, route)
        if isinstance(s, A.If):
            cond = self.simple("cond", s.cond, frontier, frame, route)
            out = self.block(s.then, [(cond, TRUE)], frame, route)
            if s.otherwise is not None:
                out = out + self.block(s.otherwise, [(cond, FALSE)], frame, route)
            else:
                out = out + [(cond, FALSE)]
            return out
        if isinstance(s, A.While):
            cond = self.simple("cond", s.cond, frontier, frame, route)
            body = self.block(s.body, [(cond, TRUE)], frame, route)
            self.connect(body, cond)
            return [(cond, FALSE)]
        if isinstance(s, A.For):
            for init in s.init:
                frontier = [(self.simple("stmt", init, frontier, frame, route), NORMAL)]
            if s.cond is not None:
                head = self.simple("cond", s.cond, frontier, frame, route)
                exits: Frontier = [(head, FALSE)]
            else:
                # ``for (;;)``: a condition-free head that never exits
                head = self.new("cond", s, frame, route)
                self.connect(frontier, head)
                exits = []
            body = self.block(s.body, [(head, TRUE)], frame, route)
            for upd in s.update:
                body = [(self.simple("stmt", upd, body, frame, route), NORMAL)]
            self.connect(body, head)
            return exits
        if isinstance(s, A.Return):
            node = self.simple("stmt", s, frontier, frame, route)
            self.route_return([(node, NORMAL)], frame)
            return []
        if isinstance(s, A.TryCatchFinally):
            return self.try_stmt(s, frontier, frame, route)
        return [(self.simple("stmt", s, frontier, frame, route), NORMAL)]

    def route_return(self, frontier: Frontier, frame: Optional[_Frame]) -> None:
        while frame is not None:
            if frame.role in ("try", "catch") and frame.stmt.finally_ is not None:
                fin = _Frame(frame.stmt, "finally", frame.outer, frame.state)
                marker = self.new("finally", frame.stmt.finally_, fin, "return")
                self.connect(frontier, marker, FINALLY_ENTRY)
                frontier = self.block(frame.stmt.finally_, [(marker, NORMAL)], fin, route="return")
            frame = frame.outer
        self.connect(frontier, self.exit)

    def try_stmt(self, s: A.TryCatchFinally, frontier: Frontier, frame: Optional[_Frame], route) -> Frontier:
        state = _TryState()
        tframe = _Frame(s, "try", frame, state)
        cframe = _Frame(s, "catch", frame, state)
        # catch headers exist before the body so exception edges can target them
        state.catch_nodes = [self.new("catch", c, cframe, route) for c in s.catches]
        out = self.block(s.body, frontier, tframe, route)
        for header, clause in zip(state.catch_nodes, s.catches):
            out = out + self.block(clause.body, [(header, NORMAL)], cframe, route)
        if s.finally_ is None:
            return out
        fin = _Frame(s, "finally", frame, state)
        marker = self.new("finally", s.finally_, fin, "normal")
        self.connect(out, marker, FINALLY_ENTRY)
        return self.block(s.finally_, [(marker, NORMAL)], fin, route="normal")

    # -- finish

    def build(self) -> Cfg:
        out = self.block(self.method.body, [(self.entry, NORMAL)], None)
        self.connect(out, self.exit)
        return self._pruned()

    def _pruned(self) -> Cfg:
        succ: dict[CfgNode, list[CfgNode]] = {n: [] for n in self.nodes}
        for e in self.edges:
            succ[e.src].append(e.dst)
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            for m in succ[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        seen |= {self.exit, self.exc_exit}
        nodes = [n for n in self.nodes if n in seen]
        edges = [e for e in self.edges if e.src in seen]
        return Cfg(self.method, nodes, edges, self.entry, self.exit, self.exc_exit)


def build_cfg(method: A.MethodDecl, model: SemanticModel) -> Cfg:
    return _Builder(method, model).build()


# -- dominators -------------------------------------------------------------

class DomMap(dict):
    """Immediate dominators: node -> idom (``None`` for the entry)."""

    def dominates(self, a: CfgNode, b: CfgNode) -> bool:
        if b not in self or a not in self:
            return False
        n: Optional[CfgNode] = b
        while n is not None:
            if n is a:
                return True
            n = self[n]
        return False

    def edge_dominates(self, cfg: Cfg, edge: Edge, n: CfgNode) -> bool:
        """True if every path from entry to ``n`` passes through ``edge``."""
        target = edge.dst
        if not self.dominates(target, n):
            return False
        return all(e is edge or self.dominates(target, e.src) for e in cfg.in_edges(target))


def _reverse_postorder(cfg: Cfg) -> list[CfgNode]:
    order: list[CfgNode] = []
    seen = {cfg.entry}
    stack: list[tuple[CfgNode, Iterable[CfgNode]]] = [(cfg.entry, iter(cfg.succs(cfg.entry)))]
    while stack:
        node, it = stack[-1]
        for m in it:
            if m not in seen:
                seen.add(m)
                stack.append((m, iter(cfg.succs(m))))
                break
        else:
            stack.pop()
            order.append(node)
    order.reverse()
    return order


def dominators(cfg: Cfg) -> DomMap:
    """Iterative dominators over all edge kinds (Cooper, Harvey and Kennedy)."""
    rpo = _reverse_postorder(cfg)
    index = {n: i for i, n in enumerate(rpo)}
    idom: dict[CfgNode, CfgNode] = {cfg.entry: cfg.entry}

    def intersect(a: CfgNode, b: CfgNode) -> CfgNode:
        while a is not b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for n in rpo[1:]:
            new = None
            for p in cfg.preds(n):
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if new is not None and idom.get(n) is not new:
                idom[n] = new
                changed = True
    dom = DomMap()
    for n in rpo:
        dom[n] = None if n is cfg.entry else idom[n]
    return dom
