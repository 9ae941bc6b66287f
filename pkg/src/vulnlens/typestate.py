"""Resource-release checking over the exception-aware CFG.

A resource acquired with ``new T(...)`` (T a rulepack resource type) must be
released on every path to the method's normal or exceptional exit.  Only the
outermost object of a wrapper chain is tracked: closing a wrapper releases
what it wraps, so an inner resource passed straight into a named wrapper is
absorbed into that wrapper's instance.

What counts as a release on a path:

* ``v.close()`` at a node outside any catch region (the call counts even on
  the node's own exception edge);
* entering a finally copy whose block closes ``v`` at its top level, either
  unconditionally or under ``if (v != null)``;
* nothing inside a catch block, and nothing inside a ``finalize`` method.

Re-assigning the variable while the instance is still open is a leak.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cfg import EXCEPTION, FALSE, TRUE, Cfg, CfgNode, build_cfg
from .findings import Finding
from .frontend import ast as A
from .rulepack import Rule, Rulepack
from .semantics import SemanticModel, VarSymbol


@dataclass(eq=False)
class ResourceInstance:
    variable: Optional[VarSymbol]  # None for an anonymous resource
    type: str
    acquisition: A.Node  # the ``new`` expression
    statement: A.Node  # the declaring/assigning statement (anonymous: the wrapper's)
    method: str
    wraps: Optional["ResourceInstance"] = None
    wrapped_by: Optional["ResourceInstance"] = field(default=None, repr=False)

    @property
    def line(self) -> int:
        return self.acquisition.line

    def chain(self) -> list["ResourceInstance"]:
        out, inst = [], self
        while inst is not None:
            out.append(inst)
            inst = inst.wraps
        return out

    def __repr__(self) -> str:
        name = self.variable.name if self.variable else "<anon>"
        return f"Resource({name}:{self.type}@{self.line})"


@dataclass(frozen=True)
class ReleaseSite:
    node: CfgNode
    variable: VarSymbol
    context: str  # normal-try | catch | finally | body
    guarded: bool


def _resource_rules(pack: Rulepack) -> list[Rule]:
    return pack.rules_of("controlflow")


def _statement_target(stmt: A.Node, model: SemanticModel) -> tuple[Optional[VarSymbol], Optional[A.Node]]:
    """(variable, value) for ``T v = value;`` and ``v = value;`` statements."""
    if isinstance(stmt, A.LocalVarDecl):
        return model.decls.get(stmt), stmt.init
    if isinstance(stmt, A.Assign) and isinstance(stmt.target, A.NameRef):
        return model.refs.get(stmt.target), stmt.value
    return None, None


def _statements(method: A.MethodDecl) -> list[A.Node]:
    """Declarations and plain assignments in source order."""
    found = [n for n in method.body.walk()
             if isinstance(n, A.LocalVarDecl) or (isinstance(n, A.Assign) and isinstance(n.target, A.NameRef))]
    return sorted(found, key=lambda n: n.span.start_offset)


def wrapper_map(model: SemanticModel, pack: Rulepack) -> list[ResourceInstance]:
    """Every tracked resource construction, linked to the resource it wraps."""
    types = {t for r in _resource_rules(pack) for t in r.resource_types}
    instances: list[ResourceInstance] = []
    for method in model.unit.class_decl.methods:
        for stmt in _statements(method):
            var, value = _statement_target(stmt, model)
            if not isinstance(value, A.ConstructorCall) or value.class_name not in types:
                continue
            instances.append(_build(value, var, stmt, method.name, types, model, instances))
    return instances


def _build(ctor: A.ConstructorCall, var: Optional[VarSymbol], stmt: A.Node, method: str,
           types: set[str], model: SemanticModel, known: list[ResourceInstance]) -> ResourceInstance:
    inst = ResourceInstance(var, ctor.class_name, ctor, stmt, method)
    for arg in ctor.args:
        inner: Optional[ResourceInstance] = None
        if isinstance(arg, A.ConstructorCall) and arg.class_name in types:
            inner = _build(arg, None, stmt, method, types, model, known)
            known.append(inner)
        elif isinstance(arg, A.NameRef):
            sym = model.refs.get(arg)
            if sym is not None and sym.type in types:
                named = [k for k in known if k.variable is sym and k.statement.line <= stmt.line]
                inner = named[-1] if named else None
        if inner is not None and inner.wrapped_by is None:
            inst.wraps = inner
            inner.wrapped_by = inst
            break
    return inst


# -- release sites ----------------------------------------------------------

def _close_target(stmt: A.Node, model: SemanticModel, release: tuple[str, ...]) -> Optional[VarSymbol]:
    if isinstance(stmt, A.MethodCall) and stmt.name in release and not stmt.args \
            and isinstance(stmt.receiver, A.NameRef):
        return model.refs.get(stmt.receiver)
    return None


def _null_guard(cond: A.Node, model: SemanticModel) -> Optional[tuple[VarSymbol, str]]:
    """``(v, op)`` when ``cond`` is ``v != null`` / ``v == null`` (either order)."""
    if not isinstance(cond, A.BinaryOp) or cond.op not in ("!=", "=="):
        return None
    for a, b in ((cond.left, cond.right), (cond.right, cond.left)):
        if isinstance(a, A.NameRef) and isinstance(b, A.Literal) and b.literal_kind == "null":
            sym = model.refs.get(a)
            if sym is not None:
                return sym, cond.op
    return None


def finally_releases(block: A.Block, model: SemanticModel, release: tuple[str, ...]) -> set[VarSymbol]:
    """Variables the finally block closes at top level, unconditionally or null-guarded."""
    out: set[VarSymbol] = set()
    for s in block.statements:
        target = _close_target(s, model, release)
        if target is not None:
            out.add(target)
        elif isinstance(s, A.If) and s.otherwise is None:
            guard = _null_guard(s.cond, model)
            body = s.then.statements if isinstance(s.then, A.Block) else [s.then]
            if guard and guard[1] == "!=" and len(body) == 1:
                target = _close_target(body[0], model, release)
                if target is guard[0]:
                    out.add(target)
    return out


def release_sites(cfg: Cfg, model: SemanticModel, release: tuple[str, ...]) -> list[ReleaseSite]:
    out = []
    for n in cfg.nodes:
        if n.kind != "stmt":
            continue
        target = _close_target(n.ast, model, release)
        if target is None:
            continue
        if n.in_region("catch"):
            context = "catch"
        elif n.region == "finally":
            context = "finally"
        elif n.region == "try":
            context = "normal-try"
        else:
            context = "body"
        guarded = False
        for p in cfg.preds(n):
            g = _null_guard(p.ast, model) if p.kind == "cond" else None
            if g and g[0] is target and g[1] == "!=":
                guarded = True
        out.append(ReleaseSite(n, target, context, guarded))
    return out


# -- path checking ----------------------------------------------------------

class _Checker:
    def __init__(self, cfg: Cfg, model: SemanticModel, release: tuple[str, ...]):
        self.cfg = cfg
        self.model = model
        self.release = release
        counts = cfg.method.name != "finalize"
        self.site_vars: dict[CfgNode, VarSymbol] = {}
        self.fin_vars: dict[CfgNode, set[VarSymbol]] = {}
        if counts:
            for site in release_sites(cfg, model, release):
                if site.context != "catch":
                    self.site_vars[site.node] = site.variable
            for n in cfg.nodes:
                if n.kind == "finally" and not n.in_region("catch"):
                    self.fin_vars[n] = finally_releases(n.ast, model, release)

    def releases(self, n: CfgNode, var: VarSymbol) -> bool:
        return self.site_vars.get(n) is var or var in self.fin_vars.get(n, ())

    def redefines(self, n: CfgNode, var: VarSymbol) -> bool:
        if n.kind != "stmt":
            return False
        target, _ = _statement_target(n.ast, self.model)
        return target is var

    def next_edges(self, n: CfgNode, var: VarSymbol):
        edges = self.cfg.out_edges(n)
        if n.kind == "cond":
            g = _null_guard(n.ast, self.model)
            if g and g[0] is var:
                keep = TRUE if g[1] == "!=" else FALSE
                edges = [e for e in edges if e.kind in (keep, EXCEPTION)]
        return edges

    def leaks(self, start: CfgNode, var: VarSymbol) -> bool:
        """Is some exit reachable from ``start`` without a counting release of ``var``?"""
        stack = [e.dst for e in self.cfg.out_edges(start) if e.kind != EXCEPTION]
        seen: set[CfgNode] = set()
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if self.releases(n, var):
                continue
            if n is self.cfg.exit or n is self.cfg.exc_exit:
                return True
            if n is start or self.redefines(n, var):
                return True  # overwritten while still open
            stack.extend(e.dst for e in self.next_edges(n, var))
        return False


def analyze_resources(model: SemanticModel, pack: Rulepack,
                      cfgs: Optional[dict[str, Cfg]] = None) -> list[Finding]:
    out: list[Finding] = []
    rules = _resource_rules(pack)
    if not rules:
        return out
    instances = wrapper_map(model, pack)
    for rule in rules:
        for method in model.unit.class_decl.methods:
            cfg = (cfgs or {}).get(method.name) or build_cfg(method, model)
            checker = _Checker(cfg, model, rule.release)
            for inst in instances:
                if inst.method != method.name or inst.wrapped_by is not None or inst.variable is None:
                    continue
                if not any(t.type in rule.resource_types for t in inst.chain()):
                    continue
                if any(checker.leaks(n, inst.variable) for n in cfg.nodes_for(inst.statement)):
                    out.append(Finding(
                        rule.id, rule.category, rule.subcategory, rule.kind, rule.severity, model.path,
                        inst.line, f"new {inst.type}(<>)", method.name, f"{inst.variable.name}:{inst.type}"))
    return sorted(out, key=lambda f: (f.file, f.line, f.rule_id, f.anchor))
