"""Intraprocedural taint propagation.

A forward worklist pass over each method's CFG.  The state maps variables to
the provenance of their taint (a tuple of trace steps, source first); an
absent variable is untainted.  At joins the key sets are united and the
first provenance to arrive at a node is kept, which bounds the lattice and
keeps traces short.  Exception edges carry the union of the throwing node's
input and output state, since the throw may happen before or after its
definitions.

Validator guards clear taint on the success edge of ``validator(x) == K``
(or ``r == K`` where ``r`` has a single dominating definition
``r = validator(x)``).  Reads from constant arrays are never tainted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .cfg import EXCEPTION, FALSE, TRUE, Cfg, CfgNode, DomMap, Edge, build_cfg, dominators
from .findings import Finding, TraceStep
from .frontend import ast as A
from .rulepack import Rule, Rulepack, Validator
from .semantics import CTOR, SemanticModel, Signature, Unresolved, VarSymbol

Prov = tuple[TraceStep, ...]
State = dict[VarSymbol, Prov]

ARITHMETIC = ("+", "-", "*", "/", "%")


class BrokenProvenance(AssertionError):
    pass


@dataclass(frozen=True)
class TaintFact:
    handle: str  # variable name or rendered call
    tainted: bool
    provenance: Prov  # source first


@dataclass(frozen=True)
class SinkHit:
    rule: Rule
    call: A.Node
    node: CfgNode
    fact: TaintFact


def _render_call(binding, model: SemanticModel) -> str:
    if isinstance(binding, Signature):
        return binding.render()
    return f"{model.class_name}.{binding.name}"


def source_text(binding, position: str) -> str:
    """``<- C.m(return)`` for returns, ``<- C.m(n)`` for out-arguments."""
    return f"<- {binding.render()}({position})"


def build_trace(fact: TaintFact, sink_step: TraceStep) -> tuple[TraceStep, ...]:
    """Sink-first trace: the sink entry, then the provenance walked back to its source."""
    steps = (sink_step,) + tuple(reversed(fact.provenance))
    if not fact.tainted or len(steps) < 2:
        raise BrokenProvenance(f"no provenance for {fact.handle}")
    if steps[0].kind != "SinkEntry" or steps[-1].kind != "Source":
        raise BrokenProvenance(f"malformed trace for {fact.handle}: {[s.kind for s in steps]}")
    return steps


# -- guards -----------------------------------------------------------------

def _validator_call(expr: A.Node, model: SemanticModel, pack: Rulepack) -> Optional[tuple[Validator, A.Node]]:
    if not isinstance(expr, A.MethodCall):
        return None
    binding = model.calls.get(expr)
    for v in pack.validators:
        if v.pattern.matches(binding) and v.arg < len(expr.args):
            return v, expr.args[v.arg]
    return None


def _definitions(model: SemanticModel, method: A.MethodDecl) -> dict[VarSymbol, list[A.Node]]:
    """Every node that (re)defines a variable: declarations, assignments, ``x++``."""
    defs: dict[VarSymbol, list[A.Node]] = {}
    for node in method.walk():
        sym = None
        if isinstance(node, (A.LocalVarDecl, A.Param)):
            sym = model.decls.get(node)
        elif isinstance(node, A.Assign) and isinstance(node.target, A.NameRef):
            sym = model.refs.get(node.target)
        elif isinstance(node, A.UnaryOp) and node.op in ("++", "--") and isinstance(node.operand, A.NameRef):
            sym = model.refs.get(node.operand)
        if sym is not None:
            defs.setdefault(sym, []).append(node)
    return defs


def _defined_value(node: A.Node) -> Optional[A.Node]:
    if isinstance(node, A.LocalVarDecl):
        return node.init
    if isinstance(node, A.Assign):
        return node.value
    return None


def copies_of(sym: VarSymbol, defs: dict[VarSymbol, list[A.Node]], model: SemanticModel) -> set[VarSymbol]:
    """Variables whose every definition is a plain copy of ``sym`` (transitively)."""
    out: set[VarSymbol] = set()
    frontier = {sym}
    while frontier:
        nxt = set()
        for other, nodes in defs.items():
            if other in out or other is sym or other.is_param:
                continue
            values = [_defined_value(n) for n in nodes]
            if values and all(isinstance(v, A.NameRef) and model.refs.get(v) in frontier | out for v in values):
                nxt.add(other)
        out |= nxt
        frontier = nxt
    return out


def guard_kills(cfg: Cfg, dom: DomMap, model: SemanticModel, pack: Rulepack) -> dict[Edge, frozenset[VarSymbol]]:
    """Success edges of validator guards mapped to the variables they cleanse."""
    defs = _definitions(model, cfg.method)
    stmt_nodes: dict[A.Node, list[CfgNode]] = {}
    for n in cfg.nodes:
        if n.ast is not None and n.kind == "stmt":
            for inner in n.ast.walk():
                stmt_nodes.setdefault(inner, []).append(n)
    kills: dict[Edge, frozenset[VarSymbol]] = {}
    for node in cfg.nodes:
        cond = node.ast if node.kind == "cond" else None
        if not isinstance(cond, A.BinaryOp) or cond.op not in ("==", "!="):
            continue
        for call_side, const_side in ((cond.left, cond.right), (cond.right, cond.left)):
            if not isinstance(const_side, A.Literal):
                continue
            found = _validator_call(call_side, model, pack)
            if found is None and isinstance(call_side, A.NameRef):
                r = model.refs.get(call_side)
                rdefs = defs.get(r, [])
                if len(rdefs) == 1:
                    value = _defined_value(rdefs[0])
                    dnodes = stmt_nodes.get(rdefs[0], [])
                    if value is not None and any(dom.dominates(d, node) for d in dnodes):
                        found = _validator_call(value, model, pack)
            if found is None:
                continue
            validator, arg = found
            if const_side.value != validator.success or not isinstance(arg, A.NameRef):
                continue
            x = model.refs.get(arg)
            if x is None:
                continue
            killed = frozenset({x} | copies_of(x, defs, model))
            success = TRUE if cond.op == "==" else FALSE
            for e in cfg.out_edges(node):
                if e.kind == success:
                    kills[e] = kills.get(e, frozenset()) | killed
            break
    return kills


# -- transfer ---------------------------------------------------------------

class _Evaluator:
    def __init__(self, model: SemanticModel, pack: Rulepack, method: A.MethodDecl):
        self.model = model
        self.pack = pack
        self.method = method
        self.file = model.path
        self.assignment = pack.has_builtin("assignment")
        self.concat = pack.has_builtin("concat")
        self.hits: Optional[list[tuple[Rule, A.Node, TaintFact]]] = None

    def step(self, kind: str, line: int, text: str) -> TraceStep:
        return TraceStep(kind, self.file, line, text)

    # a statement: updates ``state`` in place
    def execute(self, stmt: A.Node, state: State) -> None:
        if isinstance(stmt, A.LocalVarDecl):
            sym = self.model.decls[stmt]
            if stmt.init is None:
                state.pop(sym, None)
                return
            self.define(sym, self.eval(stmt.init, state), stmt.line, state)
        elif isinstance(stmt, A.Return):
            if stmt.value is not None:
                self.eval(stmt.value, state)
        elif isinstance(stmt, A.CatchClause):
            state.pop(self.model.decls[stmt], None)
        elif isinstance(stmt, (A.Block, A.For)):
            return  # finally markers, condition-free loop heads
        else:
            self.eval(stmt, state)

    def define(self, sym: VarSymbol, prov: Optional[Prov], line: int, state: State) -> None:
        if prov is not None and self.assignment:
            state[sym] = prov + (self.step("Assignment", line, f"<=> <{sym.name}>"),)
        else:
            state.pop(sym, None)

    def eval(self, e: Optional[A.Node], state: State) -> Optional[Prov]:
        if e is None or isinstance(e, A.Literal):
            return None
        if isinstance(e, A.FieldAccess):
            if not (isinstance(e.target, A.NameRef) and e.target not in self.model.refs):
                self.eval(e.target, state)
            return None  # fields are not tracked
        if isinstance(e, A.NameRef):
            sym = self.model.refs.get(e)  # None for class references
            return state.get(sym) if sym is not None else None
        if isinstance(e, A.ArrayAccess):
            array = self.eval(e.array, state)
            index = self.eval(e.index, state)
            if isinstance(e.array, A.NameRef) and self.model.refs.get(e.array) in self.model.const_arrays:
                return None
            return array or index
        if isinstance(e, A.Assign):
            value = self.eval(e.value, state)
            if isinstance(e.target, A.NameRef):
                self.define(self.model.refs[e.target], value, e.line, state)
                return state.get(self.model.refs[e.target])
            if isinstance(e.target, A.ArrayAccess):
                self.eval(e.target.index, state)
                base = e.target.array
                if value is not None and isinstance(base, A.NameRef):
                    sym = self.model.refs[base]
                    if sym not in state and self.assignment:
                        state[sym] = value + (self.step("Assignment", e.line, f"<=> <{sym.name}>"),)
                return value
            return value
        if isinstance(e, (A.MethodCall, A.ConstructorCall)):
            return self.call(e, state)
        if isinstance(e, A.BinaryOp):
            left = self.eval(e.left, state)
            right = self.eval(e.right, state)
            if e.op not in ARITHMETIC:
                return None
            if e.op == "+" and self.model.type_of(e) == "String" and not self.concat:
                return None
            return left or right
        if isinstance(e, A.UnaryOp):
            value = self.eval(e.operand, state)
            return None if e.op == "!" else value
        if isinstance(e, A.Cast):
            return self.eval(e.expr, state)
        if isinstance(e, (A.ArrayCreation, A.ArrayInitializer)):
            provs = [self.eval(c, state) for c in e.children()]
            if isinstance(e, A.ArrayCreation):
                provs = [self.eval(e.initializer, state)] if e.initializer is not None else []
            return next((p for p in provs if p is not None), None)
        return None

    def call(self, e: A.Node, state: State) -> Optional[Prov]:
        binding = self.model.calls[e]
        if isinstance(e, A.MethodCall) and e.receiver is not None:
            self.eval(e.receiver, state)
        args = [self.eval(a, state) for a in e.args]
        if self.hits is not None:
            for rule in self.pack.rules_of("dataflow"):
                if rule.patterns[0].matches(binding) and rule.arg < len(args) and args[rule.arg] is not None:
                    self.hits.append((rule, e, TaintFact(_render_call(binding, self.model), True, args[rule.arg])))
        result: Optional[Prov] = None
        for src in self.pack.sources:
            if src.pattern is None or not src.pattern.matches(binding):
                continue
            if src.where == "return" and result is None:
                result = (self.step("Source", e.line, source_text(binding, "return")),)
            elif src.out_arg is not None and src.out_arg < len(e.args):
                target = e.args[src.out_arg]
                if isinstance(target, A.NameRef):
                    sym = self.model.refs[target]
                    if sym not in state:
                        state[sym] = (self.step("Source", e.line, source_text(binding, str(src.out_arg))),)
        if result is not None:
            return result
        for p in self.pack.passthroughs:
            if p.pattern is not None and p.pattern.matches(binding) and p.from_arg < len(args):
                if args[p.from_arg] is not None:
                    return args[p.from_arg] + (self.step(
                        "PassThrough", e.line, f"<->{_render_call(binding, self.model)}({p.from_arg}->return)"),)
        if isinstance(binding, Unresolved) and binding.is_user_method:
            for i, a in enumerate(args):
                if a is not None:
                    return a + (self.step("PassThrough", e.line,
                                          f"<->{_render_call(binding, self.model)}({i}->return)"),)
        return None


def _join_into(target: State, incoming: State) -> bool:
    changed = False
    for k, v in incoming.items():
        if k not in target:
            target[k] = v
            changed = True
    return changed


class TaintResult:
    """Fixpoint states of one method, plus the sink hits found in them."""

    def __init__(self, cfg: Cfg, ins: dict[CfgNode, State], outs: dict[CfgNode, State], hits: list[SinkHit]):
        self.cfg = cfg
        self.ins = ins
        self.outs = outs
        self.hits = hits


def analyze_method(method: A.MethodDecl, model: SemanticModel, pack: Rulepack,
                   cfg: Optional[Cfg] = None, dom: Optional[DomMap] = None) -> TaintResult:
    cfg = cfg or build_cfg(method, model)
    dom = dom or dominators(cfg)
    ev = _Evaluator(model, pack, method)
    kills = guard_kills(cfg, dom, model, pack)

    entry_state: State = {}
    if method in model.entry_methods and any(s.where == "param" for s in pack.sources):
        scope = model.methods[method.name]
        for i, p in enumerate(scope.params):
            text = f"->{model.class_name}.{method.name}({i})"
            entry_state[p] = (TraceStep("Source", model.path, method.line, text),)

    ins: dict[CfgNode, State] = {n: {} for n in cfg.nodes}
    outs: dict[CfgNode, State] = {}
    order = {n: i for i, n in enumerate(cfg.nodes)}
    work = [cfg.entry]
    queued = {cfg.entry}

    def transfer(n: CfgNode) -> State:
        state = dict(ins[n])
        if n is cfg.entry:
            state.update(entry_state)
        elif n.ast is not None and n.kind in ("stmt", "cond", "catch"):
            ev.execute(n.ast, state)
        return state

    def along(e: Edge) -> State:
        out = outs[e.src]
        if e.kind == EXCEPTION:
            merged = dict(out)
            _join_into(merged, ins[e.src])
            out = merged
        killed = kills.get(e)
        if killed:
            out = {k: v for k, v in out.items() if k not in killed}
        return out

    while work:
        work.sort(key=order.__getitem__, reverse=True)
        n = work.pop()
        queued.discard(n)
        new_out = transfer(n)
        if outs.get(n) == new_out:
            continue
        outs[n] = new_out
        for e in cfg.out_edges(n):
            if _join_into(ins[e.dst], along(e)) or e.dst not in outs:
                if e.dst not in queued:
                    queued.add(e.dst)
                    work.append(e.dst)

    hits: list[SinkHit] = []
    seen: set[tuple[str, int]] = set()
    for n in cfg.nodes:
        if n not in outs or n.ast is None or n.kind not in ("stmt", "cond"):
            continue
        ev.hits = []
        ev.execute(n.ast, dict(ins[n]))
        for rule, call, fact in ev.hits:
            key = (rule.id, id(call))
            if key not in seen:
                seen.add(key)
                hits.append(SinkHit(rule, call, n, fact))
        ev.hits = None
    return TaintResult(cfg, ins, outs, hits)


def analyze_dataflow(model: SemanticModel, pack: Rulepack,
                     cfgs: Optional[dict[str, Cfg]] = None,
                     doms: Optional[dict[str, DomMap]] = None) -> list[Finding]:
    out: list[Finding] = []
    if not pack.rules_of("dataflow"):
        return out
    for method in model.unit.class_decl.methods:
        cfg = cfgs.get(method.name) if cfgs else None
        dom = doms.get(method.name) if doms else None
        result = analyze_method(method, model, pack, cfg, dom)
        for hit in result.hits:
            out.append(_finding(hit, model, method))
    return sorted(out, key=lambda f: (f.file, f.line, f.rule_id, f.anchor))


def _finding(hit: SinkHit, model: SemanticModel, method: A.MethodDecl) -> Finding:
    binding = model.calls[hit.call]
    if isinstance(binding, Signature) and binding.member == CTOR:
        text = f"->new {binding.class_name}({hit.rule.arg})"
    else:
        text = f"->{_render_call(binding, model)}({hit.rule.arg})"
    sink = TraceStep("SinkEntry", model.path, hit.call.line, text)
    trace = build_trace(hit.fact, sink)
    rule = hit.rule
    return Finding(rule.id, rule.category, rule.subcategory, rule.kind, rule.severity, model.path,
                   hit.call.line, text, method.name, A.token_text(model.unit, hit.call), trace)
