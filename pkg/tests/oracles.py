"""Reference implementations used to cross-check the analyzers.

Each oracle recomputes a result by a deliberately different and simpler
method: a regex tokenizer, dominators by node deletion, resource leaks by
explicit acyclic path enumeration, and taint by reaching definitions walked
backwards from each sink argument.  The oracles share only the parsed tree,
the semantic bindings and the CFG with the code under test.
"""

from __future__ import annotations

import re
from collections import defaultdict

from vulnlens.cfg import EXCEPTION, FALSE, TRUE, Cfg, CfgNode
from vulnlens.frontend import ast as A
from vulnlens.rulepack import Rulepack
from vulnlens.semantics import CTOR, SemanticModel, Signature, Unresolved, VarSymbol

# -- tokens -----------------------------------------------------------------

_COMMENTS = re.compile(r"//[^\n]*|/\*.*?\*/", re.S)
_TOKEN = re.compile(r"""
    "(?:\\.|[^"\\])*"      # string
  | '(?:\\.|[^'\\])'       # char
  | [A-Za-z_$][\w$]*       # word
  | \d+                    # number
  | ==|!=|>=|<=|&&|\|\||\+\+|--
  | [-+*/%!=<>(){}\[\];,.]
""", re.X)


def regex_tokens(text: str) -> list[str]:
    """Lexemes in order, comments and whitespace dropped."""
    stripped = _COMMENTS.sub(" ", text)
    out = _TOKEN.findall(stripped)
    leftover = _TOKEN.sub("", stripped)
    assert not leftover.strip(), f"unscannable text: {leftover.strip()[:20]!r}"
    return out


# -- dominators -------------------------------------------------------------

def _reachable(cfg: Cfg, removed: CfgNode | None) -> set[CfgNode]:
    if cfg.entry is removed:
        return set()
    seen = {cfg.entry}
    stack = [cfg.entry]
    while stack:
        n = stack.pop()
        for m in cfg.succs(n):
            if m is not removed and m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def brute_dominators(cfg: Cfg) -> dict[CfgNode, set[CfgNode]]:
    """Full dominator sets: ``a`` dominates ``b`` iff deleting ``a`` cuts ``b`` off."""
    live = _reachable(cfg, None)
    doms: dict[CfgNode, set[CfgNode]] = {b: {b} for b in live}
    for a in live:
        without = _reachable(cfg, a)
        for b in live:
            if b not in without:
                doms[b].add(a)
    return doms


# -- resources --------------------------------------------------------------

def _resource_types(pack: Rulepack) -> set[str]:
    return {t for r in pack.rules_of("controlflow") for t in r.resource_types}


def _assigned(stmt: A.Node, model: SemanticModel):
    if isinstance(stmt, A.LocalVarDecl):
        return model.decls.get(stmt), stmt.init
    if isinstance(stmt, A.Assign) and isinstance(stmt.target, A.NameRef):
        return model.refs.get(stmt.target), stmt.value
    return None, None


def resource_roots(model: SemanticModel, pack: Rulepack, method: A.MethodDecl) -> list[tuple[VarSymbol, A.Node, str, int]]:
    """(variable, statement, type, line) for each named acquisition nobody wraps later."""
    types = _resource_types(pack)
    acquisitions = []
    for node in method.body.walk():
        var, value = _assigned(node, model)
        if var is not None and isinstance(value, A.ConstructorCall) and value.class_name in types:
            acquisitions.append((var, node, value))
    roots = []
    for var, stmt, ctor in acquisitions:
        later_wrap = any(
            isinstance(a, A.NameRef) and model.refs.get(a) is var
            for _, other, octor in acquisitions if other.line >= stmt.line and other is not stmt
            for a in octor.args)
        if not later_wrap:
            roots.append((var, stmt, ctor.class_name, ctor.line))
    return roots


def _closes(stmt: A.Node, model: SemanticModel, var: VarSymbol) -> bool:
    return (isinstance(stmt, A.MethodCall) and stmt.name == "close" and not stmt.args
            and isinstance(stmt.receiver, A.NameRef) and model.refs.get(stmt.receiver) is var)


def _is_null_check(cond: A.Node, model: SemanticModel, var: VarSymbol) -> str | None:
    if isinstance(cond, A.BinaryOp) and cond.op in ("==", "!="):
        sides = [cond.left, cond.right]
        names = [s for s in sides if isinstance(s, A.NameRef) and model.refs.get(s) is var]
        nulls = [s for s in sides if isinstance(s, A.Literal) and s.literal_kind == "null"]
        if names and nulls:
            return cond.op
    return None


def _finally_closes(block: A.Block, model: SemanticModel, var: VarSymbol) -> bool:
    for s in block.statements:
        if _closes(s, model, var):
            return True
        if isinstance(s, A.If) and s.otherwise is None and _is_null_check(s.cond, model, var) == "!=":
            inner = s.then.statements if isinstance(s.then, A.Block) else [s.then]
            if len(inner) == 1 and _closes(inner[0], model, var):
                return True
    return False


def _counts_as_release(n: CfgNode, cfg: Cfg, model: SemanticModel, var: VarSymbol) -> bool:
    if cfg.method.name == "finalize" or any(role == "catch" for _, role in n.frames):
        return False
    if n.kind == "stmt":
        return _closes(n.ast, model, var)
    if n.kind == "finally":
        return _finally_closes(n.ast, model, var)
    return False


def enumerate_leaks(cfg: Cfg, model: SemanticModel, var: VarSymbol, stmt: A.Node,
                    limit: int = 200_000) -> bool:
    """Search every acyclic path out of the acquisition for one that ends unreleased."""
    budget = [limit]

    def successors(n: CfgNode):
        edges = cfg.out_edges(n)
        if n.kind == "cond":
            op = _is_null_check(n.ast, model, var)
            if op is not None:
                keep = TRUE if op == "!=" else FALSE
                edges = [e for e in edges if e.kind in (keep, EXCEPTION)]
        return [e.dst for e in edges]

    def walk(n: CfgNode, start: CfgNode, on_path: set[CfgNode]) -> bool:
        budget[0] -= 1
        assert budget[0] > 0, "path enumeration budget exhausted"
        if _counts_as_release(n, cfg, model, var):
            return False
        if n is cfg.exit or n is cfg.exc_exit or n is start:
            return True
        if n.kind == "stmt" and _assigned(n.ast, model)[0] is var:
            return True
        if n in on_path:
            return False  # not acyclic
        on_path.add(n)
        try:
            return any(walk(m, start, on_path) for m in successors(n))
        finally:
            on_path.discard(n)

    for start in (n for n in cfg.nodes if n.ast is stmt):
        firsts = [e.dst for e in cfg.out_edges(start) if e.kind != EXCEPTION]
        if any(walk(m, start, set()) for m in firsts):
            return True
    return False


def oracle_resources(model: SemanticModel, pack: Rulepack, cfgs: dict[str, Cfg]) -> set[tuple[int, str, str]]:
    """(line, variable, type) of every leaked root resource."""
    out = set()
    for method in model.unit.class_decl.methods:
        cfg = cfgs[method.name]
        for var, stmt, typ, line in resource_roots(model, pack, method):
            if enumerate_leaks(cfg, model, var, stmt):
                out.add((line, var.name, typ))
    return out


# -- taint ------------------------------------------------------------------

class DefUseOracle:
    """May-taint by reaching definitions.

    A definition is a (node, variable, value) triple.  Strong definitions end
    a backward walk; weak ones (out-argument sources, element writes) are
    recorded and the walk continues past them.  Walking back across an
    exception edge also continues past a strong definition, since the throw
    may precede it.  Validator success edges stop walks for the variables
    they cleanse.  Definition taint is a least fixpoint.
    """

    def __init__(self, model: SemanticModel, pack: Rulepack, cfg: Cfg):
        self.model = model
        self.pack = pack
        self.cfg = cfg
        self.method = cfg.method
        self.live = _reachable(cfg, None)
        self.doms = brute_dominators(cfg)
        self.node_defs = {n: self._defs_at(n) for n in cfg.nodes}
        self.blocked = self._guard_edges()
        self._reaching_cache: dict[tuple[CfgNode, VarSymbol], frozenset] = {}
        self.taint: dict[tuple, bool] = {}
        self._solve()

    # definitions
    def _defs_at(self, n: CfgNode) -> list[tuple[VarSymbol, object, bool]]:
        """(var, how, strong) where ``how`` is an expression or a marker string."""
        m = self.model
        if n is self.cfg.entry:
            return [(p, "param", True) for p in m.methods[self.method.name].params]
        if n.ast is None or n.kind == "finally":
            return []
        if n.kind == "catch":
            return [(m.decls[n.ast], None, True)]
        if isinstance(n.ast, A.For):
            return []
        out = []
        roots = [n.ast]
        if isinstance(n.ast, A.LocalVarDecl):
            out.append((m.decls[n.ast], n.ast.init, True))
            roots = [n.ast.init] if n.ast.init is not None else []
        for root in roots:
            for sub in root.walk():
                if isinstance(sub, A.Assign):
                    if isinstance(sub.target, A.NameRef):
                        out.append((m.refs[sub.target], sub.value, True))
                    elif isinstance(sub.target, A.ArrayAccess) and isinstance(sub.target.array, A.NameRef):
                        out.append((m.refs[sub.target.array], sub.value, False))
                elif isinstance(sub, (A.MethodCall, A.ConstructorCall)):
                    binding = m.calls.get(sub)
                    for src in self.pack.sources:
                        k = src.out_arg
                        if k is not None and src.pattern.matches(binding) and k < len(sub.args) \
                                and isinstance(sub.args[k], A.NameRef):
                            out.append((m.refs[sub.args[k]], "source", False))
        return out

    # guards
    def _single_def(self, var: VarSymbol):
        found = [(n, how) for n in self.cfg.nodes for v, how, strong in self.node_defs[n] if v is var]
        asts = {id(n.ast) for n, _ in found}
        if len(asts) != 1 or self._bumped(var):
            return None
        return found

    def _bumped(self, var: VarSymbol) -> bool:
        return any(isinstance(u, A.UnaryOp) and u.op in ("++", "--")
                   and isinstance(u.operand, A.NameRef) and self.model.refs.get(u.operand) is var
                   for u in self.method.walk())

    def _cleansed(self, call: A.Node):
        if not isinstance(call, A.MethodCall):
            return None
        for v in self.pack.validators:
            if v.pattern.matches(self.model.calls.get(call)) and v.arg < len(call.args):
                arg = call.args[v.arg]
                if isinstance(arg, A.NameRef) and self.model.refs.get(arg) is not None:
                    return v, self.model.refs[arg]
        return None

    def _copies(self, var: VarSymbol) -> set[VarSymbol]:
        group = {var}
        grew = True
        while grew:
            grew = False
            every: dict[VarSymbol, list] = defaultdict(list)
            for n in self.cfg.nodes:
                for v, how, strong in self.node_defs[n]:
                    every[v].append((n.ast, how, strong))
            for v, items in every.items():
                if v in group or v.is_param or self._bumped(v):
                    continue
                uniq = {id(a): (how, strong) for a, how, strong in items}
                if all(strong and isinstance(how, A.NameRef) and self.model.refs.get(how) in group
                       for how, strong in uniq.values()):
                    group.add(v)
                    grew = True
        return group

    def _guard_edges(self) -> dict[tuple[CfgNode, CfgNode, str], set[VarSymbol]]:
        out: dict = {}
        for n in self.cfg.nodes:
            if n.kind != "cond" or not isinstance(n.ast, A.BinaryOp) or n.ast.op not in ("==", "!="):
                continue
            cond = n.ast
            for lhs, rhs in ((cond.left, cond.right), (cond.right, cond.left)):
                if not isinstance(rhs, A.Literal):
                    continue
                hit = self._cleansed(lhs)
                if hit is None and isinstance(lhs, A.NameRef):
                    single = self._single_def(self.model.refs.get(lhs))
                    if single:
                        how = single[0][1]
                        if any(d in self.doms.get(n, ()) for d, _ in single) and isinstance(how, A.Node):
                            hit = self._cleansed(how)
                if hit is None:
                    continue
                validator, x = hit
                if rhs.value != validator.success:
                    continue
                kind = TRUE if cond.op == "==" else FALSE
                for e in self.cfg.out_edges(n):
                    if e.kind == kind:
                        out.setdefault((e.src, e.dst, e.kind), set()).update(self._copies(x))
                break
        return out

    # reaching definitions
    def reaching(self, n: CfgNode, var: VarSymbol) -> frozenset:
        key = (n, var)
        if key in self._reaching_cache:
            return self._reaching_cache[key]
        found = set()
        seen = set()
        stack = [e for e in self.cfg.in_edges(n)]
        while stack:
            e = stack.pop()
            if (e.src, e.dst, e.kind) in seen:
                continue
            seen.add((e.src, e.dst, e.kind))
            if var in self.blocked.get((e.src, e.dst, e.kind), ()):
                continue
            p = e.src
            if p not in self.live:
                continue
            defs = [(i, strong) for i, (v, _, strong) in enumerate(self.node_defs[p]) if v is var]
            for i, _ in defs:
                found.add((p, i))
            if defs and any(s for _, s in defs) and e.kind != EXCEPTION:
                continue
            stack.extend(self.cfg.in_edges(p))
        result = frozenset(found)
        self._reaching_cache[key] = result
        return result

    # expression taint
    def expr(self, e, n: CfgNode) -> bool:
        m = self.model
        if e is None or isinstance(e, (A.Literal, A.FieldAccess)):
            return False
        if isinstance(e, A.NameRef):
            sym = m.refs.get(e)
            return sym is not None and self.var_at(sym, n)
        if isinstance(e, A.ArrayAccess):
            if isinstance(e.array, A.NameRef) and m.refs.get(e.array) in m.const_arrays:
                return False
            return self.expr(e.array, n) or self.expr(e.index, n)
        if isinstance(e, A.Assign):
            return self.expr(e.value, n)
        if isinstance(e, A.BinaryOp):
            if e.op not in ("+", "-", "*", "/", "%"):
                return False
            if e.op == "+" and m.type_of(e) == "String" and not self.pack.has_builtin("concat"):
                return False
            return self.expr(e.left, n) or self.expr(e.right, n)
        if isinstance(e, A.UnaryOp):
            return e.op != "!" and self.expr(e.operand, n)
        if isinstance(e, A.Cast):
            return self.expr(e.expr, n)
        if isinstance(e, A.ArrayInitializer):
            return any(self.expr(c, n) for c in e.elements)
        if isinstance(e, A.ArrayCreation):
            return e.initializer is not None and self.expr(e.initializer, n)
        if isinstance(e, (A.MethodCall, A.ConstructorCall)):
            binding = m.calls[e]
            if any(s.where == "return" and s.pattern.matches(binding) for s in self.pack.sources):
                return True
            for p in self.pack.passthroughs:
                if p.pattern is not None and p.pattern.matches(binding) and p.from_arg < len(e.args) \
                        and self.expr(e.args[p.from_arg], n):
                    return True
            if isinstance(binding, Unresolved) and binding.is_user_method:
                return any(self.expr(a, n) for a in e.args)
            return False
        return False

    def var_at(self, var: VarSymbol, n: CfgNode) -> bool:
        return any(self.taint.get(d, False) for d in self.reaching(n, var))

    def _def_taint(self, d) -> bool:
        node, i = d
        var, how, strong = self.node_defs[node][i]
        if how == "param":
            return (self.method in self.model.entry_methods
                    and any(s.where == "param" for s in self.pack.sources))
        if how == "source":
            return True
        if not self.pack.has_builtin("assignment"):
            return False
        return self.expr(how, node) if isinstance(how, A.Node) else False

    def _solve(self) -> None:
        all_defs = [(n, i) for n in self.cfg.nodes if n in self.live for i in range(len(self.node_defs[n]))]
        changed = True
        while changed:
            changed = False
            for d in all_defs:
                if not self.taint.get(d) and self._def_taint(d):
                    self.taint[d] = True
                    changed = True

    def sink_hits(self) -> set[tuple[str, int, int]]:
        """(rule id, line, column) of each sink call reached by taint."""
        hits = set()
        for n in self.cfg.nodes:
            if n not in self.live or n.ast is None or n.kind not in ("stmt", "cond") or isinstance(n.ast, A.Block):
                continue
            for call in A.calls_in(n.ast):
                binding = self.model.calls.get(call)
                for rule in self.pack.rules_of("dataflow"):
                    if rule.patterns[0].matches(binding) and rule.arg < len(call.args) \
                            and self.expr(call.args[rule.arg], n):
                        hits.add((rule.id, call.line, call.span.start_offset))
        return hits


def oracle_taint(model: SemanticModel, pack: Rulepack, cfgs: dict[str, Cfg]) -> set[tuple[str, int, int]]:
    out = set()
    for method in model.unit.class_decl.methods:
        out |= DefUseOracle(model, pack, cfgs[method.name]).sink_hits()
    return out


def is_constructor(binding) -> bool:
    return isinstance(binding, Signature) and binding.member == CTOR
