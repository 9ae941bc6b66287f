"""API catalog loading and name/call resolution.

:func:`resolve` walks every method of a compilation unit, gives each local
variable a :class:`VarSymbol`, and binds every call site either to a catalog
:class:`Signature` or to :class:`Unresolved` (user methods keep a link to
their declaration).  The resulting :class:`SemanticModel` is what all the
analyses consume.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .frontend import ast as A

CTOR = "<ctor>"
KNOWN_FLAGS = frozenset({"static", "field", "exception"})


class CatalogError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ResolveError(Exception):
    def __init__(self, message: str, span: Optional[A.Span] = None):
        where = f"{span.file}({span.start_line}): " if span else ""
        super().__init__(where + message)
        self.span = span


@dataclass(frozen=True)
class Signature:
    class_name: str
    member: str
    arity: int
    params: tuple[str, ...] = ()
    returns: str = "void"
    flags: frozenset[str] = frozenset()

    @property
    def is_ctor(self) -> bool:
        return self.member == CTOR

    @property
    def is_field(self) -> bool:
        return "field" in self.flags

    def render(self) -> str:
        """``new Class`` for constructors, ``Class.member`` otherwise."""
        return f"new {self.class_name}" if self.is_ctor else f"{self.class_name}.{self.member}"

    def to_line(self) -> str:
        member = "ctor" if self.is_ctor else self.member
        parts = [f"class={self.class_name}", f"member={member}", f"arity={self.arity}",
                 f"params={','.join(self.params)}", f"returns={self.returns}"]
        return " ".join(parts + sorted(self.flags))


@dataclass(frozen=True)
class Unresolved:
    name: str
    decl: Optional[A.MethodDecl] = field(default=None, compare=False)

    @property
    def is_user_method(self) -> bool:
        return self.decl is not None


Binding = Union[Signature, Unresolved]


@dataclass
class ApiCatalog:
    classes: dict[str, dict[tuple[str, int], Signature]] = field(default_factory=dict)

    def add(self, sig: Signature, line: Optional[int] = None) -> None:
        members = self.classes.setdefault(sig.class_name, {})
        key = (sig.member, sig.arity)
        if key in members:
            raise CatalogError(f"duplicate signature {sig.render()}/{sig.arity}", line)
        members[key] = sig

    def signatures(self) -> list[Signature]:
        return [s for members in self.classes.values() for s in members.values()]

    def is_exception(self, type_name: Optional[str]) -> bool:
        if type_name is None:
            return False
        if type_name == "Throwable":
            return True
        members = self.classes.get(type_name, {})
        return any("exception" in s.flags for s in members.values())

    def lookup(self, class_name: Optional[str], member: str, arity: int) -> Optional[Signature]:
        if class_name is None:
            return None
        sig = self.classes.get(class_name, {}).get((member, arity))
        if sig is None and class_name != "Throwable" and self.is_exception(class_name):
            sig = self.classes.get("Throwable", {}).get((member, arity))
        return sig

    def lookup_field(self, class_name: str, name: str) -> Optional[Signature]:
        sig = self.classes.get(class_name, {}).get((name, 0))
        return sig if sig is not None and sig.is_field else None

    def has_member(self, class_name: str, member: str) -> bool:
        return any(m == member for m, _ in self.classes.get(class_name, {}))

    def dumps(self) -> str:
        return "".join(s.to_line() + "\n" for s in self.signatures())


def parse_catalog(text: str) -> ApiCatalog:
    catalog = ApiCatalog()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        values: dict[str, str] = {}
        flags = set()
        for word in line.split():
            if "=" in word:
                key, _, value = word.partition("=")
                if key in values:
                    raise CatalogError(f"repeated key {key!r}", lineno)
                values[key] = value
            elif word in KNOWN_FLAGS:
                flags.add(word)
            else:
                raise CatalogError(f"unknown flag {word!r}", lineno)
        missing = {"class", "member", "arity", "params", "returns"} - values.keys()
        if missing:
            raise CatalogError(f"missing {', '.join(sorted(missing))}", lineno)
        unknown = values.keys() - {"class", "member", "arity", "params", "returns"}
        if unknown:
            raise CatalogError(f"unknown key(s) {', '.join(sorted(unknown))}", lineno)
        try:
            arity = int(values["arity"])
        except ValueError:
            raise CatalogError(f"arity must be an integer, got {values['arity']!r}", lineno) from None
        params = tuple(p for p in values["params"].split(",") if p)
        if "field" in flags:
            if arity != 0 or params:
                raise CatalogError("fields take no parameters", lineno)
        elif len(params) != arity:
            raise CatalogError(f"arity {arity} does not match {len(params)} parameter type(s)", lineno)
        if not values["class"] or not values["member"] or not values["returns"]:
            raise CatalogError("empty class, member or return type", lineno)
        member = CTOR if values["member"] == "ctor" else values["member"]
        catalog.add(Signature(values["class"], member, arity, params, values["returns"], frozenset(flags)), lineno)
    return catalog


def load_api_catalog(path: Union[str, Path, None] = None) -> ApiCatalog:
    """Load a catalog file; with no path, the built-in default catalog."""
    if path is None:
        text = resources.files("vulnlens").joinpath("data/default.catalog").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_catalog(text)


# -- semantic model ---------------------------------------------------------

_uid = itertools.count()


@dataclass(frozen=True, eq=False)
class VarSymbol:
    name: str
    type: str
    line: int
    method: str
    is_param: bool = False
    uid: int = field(default_factory=lambda: next(_uid))

    def __repr__(self) -> str:
        return f"<{self.name}:{self.type}@{self.line}>"


@dataclass
class MethodScope:
    decl: A.MethodDecl
    symbols: dict[str, VarSymbol] = field(default_factory=dict)  # first declaration per name
    all_symbols: list[VarSymbol] = field(default_factory=list)

    @property
    def params(self) -> list[VarSymbol]:
        return [s for s in self.all_symbols if s.is_param]


@dataclass
class SemanticModel:
    unit: A.CompilationUnit
    catalog: ApiCatalog
    methods: dict[str, MethodScope] = field(default_factory=dict)
    refs: dict[A.NameRef, VarSymbol] = field(default_factory=dict)
    decls: dict[A.Node, VarSymbol] = field(default_factory=dict)
    calls: dict[A.Node, Binding] = field(default_factory=dict)
    fields: dict[A.FieldAccess, Signature] = field(default_factory=dict)
    const_arrays: set[VarSymbol] = field(default_factory=set)

    @property
    def class_name(self) -> str:
        return self.unit.class_decl.name

    @property
    def entry_methods(self) -> list[A.MethodDecl]:
        return [m for m in self.unit.class_decl.methods if m.name == "main"]

    @property
    def path(self) -> str:
        return self.unit.source_path

    def symbol(self, node: A.Node) -> Optional[VarSymbol]:
        """Symbol for a NameRef or a declaring node."""
        if isinstance(node, A.NameRef):
            return self.refs.get(node)
        return self.decls.get(node)

    def type_of(self, expr: Optional[A.Node]) -> Optional[str]:
        if expr is None:
            return None
        if isinstance(expr, A.NameRef):
            sym = self.refs.get(expr)
            return sym.type if sym else None
        if isinstance(expr, A.Literal):
            return {"string": "String", "int": "int", "char": "char",
                    "boolean": "boolean", "null": "null"}[expr.literal_kind]
        if isinstance(expr, A.MethodCall):
            b = self.calls.get(expr)
            if isinstance(b, Signature):
                return b.returns
            if isinstance(b, Unresolved) and b.decl is not None:
                return b.decl.return_type
            return None
        if isinstance(expr, A.ConstructorCall):
            return expr.class_name
        if isinstance(expr, A.FieldAccess):
            if expr in self.fields:
                return self.fields[expr].returns
            target = self.type_of(expr.target)
            if target and target.endswith("[]") and expr.name == "length":
                return "int"
            return None
        if isinstance(expr, A.ArrayAccess):
            t = self.type_of(expr.array)
            return t[:-2] if t and t.endswith("[]") else None
        if isinstance(expr, A.ArrayCreation):
            return expr.elem_type + "[]"
        if isinstance(expr, A.Cast):
            return expr.type
        if isinstance(expr, A.Assign):
            return self.type_of(expr.target)
        if isinstance(expr, A.BinaryOp):
            if expr.op in ("==", "!=", ">=", "<=", ">", "<", "&&", "||"):
                return "boolean"
            if expr.op == "+" and "String" in (self.type_of(expr.left), self.type_of(expr.right)):
                return "String"
            return "int"
        if isinstance(expr, A.UnaryOp):
            return "boolean" if expr.op == "!" else self.type_of(expr.operand)
        return None


class _Resolver:
    def __init__(self, unit: A.CompilationUnit, catalog: ApiCatalog):
        self.model = SemanticModel(unit, catalog)
        self.user_methods = {m.name: m for m in unit.class_decl.methods}
        self.scopes: list[dict[str, VarSymbol]] = []
        self.method: Optional[MethodScope] = None

    def run(self) -> SemanticModel:
        for m in self.model.unit.class_decl.methods:
            if m.name in self.model.methods:
                raise ResolveError(f"method {m.name!r} is declared twice (overloading is not supported)", m.span)
            self.method = MethodScope(m)
            self.model.methods[m.name] = self.method
            self.scopes = [{}]
            for p in m.params:
                self.declare(p, p.name, p.type, is_param=True)
            self.block(m.body, new_scope=False)
        self._const_arrays()
        return self.model

    # -- scopes

    def declare(self, node: A.Node, name: str, type_: str, is_param: bool = False) -> VarSymbol:
        for scope in self.scopes:
            if name in scope:
                raise ResolveError(f"variable {name!r} is already defined in method {self.method.decl.name}", node.span)
        sym = VarSymbol(name, type_, node.line, self.method.decl.name, is_param)
        self.scopes[-1][name] = sym
        self.model.decls[node] = sym
        self.method.all_symbols.append(sym)
        self.method.symbols.setdefault(name, sym)
        return sym

    def lookup(self, name: str) -> Optional[VarSymbol]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    # -- statements

    def block(self, block: A.Node, new_scope: bool = True) -> None:
        if new_scope:
            self.scopes.append({})
        stmts = block.statements if isinstance(block, A.Block) else [block]
        for s in stmts:
            self.statement(s)
        if new_scope:
            self.scopes.pop()

    def statement(self, s: A.Node) -> None:
        if isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.LocalVarDecl):
            if s.init is not None:
                self.expr(s.init)
            self.declare(s, s.name, s.type)
        elif isinstance(s, A.If):
            self.expr(s.cond)
            self.block(s.then)
            if s.otherwise is not None:
                self.block(s.otherwise)
        elif isinstance(s, A.While):
            self.expr(s.cond)
            self.block(s.body)
        elif isinstance(s, A.For):
            self.scopes.append({})
            for i in s.init:
                self.statement(i)
            if s.cond is not None:
                self.expr(s.cond)
            for u in s.update:
                self.expr(u)
            self.block(s.body)
            self.scopes.pop()
        elif isinstance(s, A.Return):
            if s.value is not None:
                self.expr(s.value)
        elif isinstance(s, A.TryCatchFinally):
            self.block(s.body)
            for c in s.catches:
                self.scopes.append({})
                self.declare(c, c.name, c.type)
                self.block(c.body, new_scope=False)
                self.scopes.pop()
            if s.finally_ is not None:
                self.block(s.finally_)
        else:
            self.expr(s)

    # -- expressions

    def receiver_type(self, recv: A.Node) -> Optional[str]:
        """Type name used to look up a member on ``recv``; class names resolve to themselves."""
        if isinstance(recv, A.NameRef) and self.lookup(recv.name) is None:
            return recv.name  # a class reference
        self.expr(recv)
        return self.model.type_of(recv)

    def expr(self, e: A.Node) -> None:
        m = self.model
        if isinstance(e, A.NameRef):
            sym = self.lookup(e.name)
            if sym is None:
                raise ResolveError(f"undeclared variable {e.name!r}", e.span)
            m.refs[e] = sym
        elif isinstance(e, A.MethodCall):
            if e.receiver is None:
                recv_type = None
            else:
                recv_type = self.receiver_type(e.receiver)
            for a in e.args:
                self.expr(a)
            if e.receiver is None:
                m.calls[e] = Unresolved(e.name, self.user_methods.get(e.name))
            else:
                sig = m.catalog.lookup(recv_type, e.name, len(e.args))
                m.calls[e] = sig if sig is not None and not sig.is_field else Unresolved(f"{recv_type}.{e.name}")
        elif isinstance(e, A.ConstructorCall):
            for a in e.args:
                self.expr(a)
            sig = m.catalog.lookup(e.class_name, CTOR, len(e.args))
            m.calls[e] = sig if sig is not None else Unresolved(f"new {e.class_name}")
        elif isinstance(e, A.FieldAccess):
            owner = self.receiver_type(e.target)
            if isinstance(e.target, A.NameRef) and e.target not in m.refs and owner is not None:
                sig = m.catalog.lookup_field(owner, e.name)
                if sig is not None:
                    m.fields[e] = sig
        else:
            for child in e.children():
                self.expr(child)

    # -- constant arrays

    def _const_arrays(self) -> None:
        m = self.model
        candidates: dict[VarSymbol, None] = {}
        for node, sym in m.decls.items():
            if not isinstance(node, A.LocalVarDecl) or not sym.type.endswith("[]"):
                continue
            init = node.init
            if isinstance(init, A.ArrayCreation):
                init = init.initializer
            if isinstance(init, A.ArrayInitializer) and all(
                isinstance(x, A.Literal) and x.literal_kind in ("int", "string") for x in init.elements
            ):
                candidates[sym] = None
        written: set[VarSymbol] = set()
        for node in m.unit.walk():
            target = None
            if isinstance(node, A.Assign):
                target = node.target
            elif isinstance(node, A.UnaryOp) and node.op in ("++", "--"):
                target = node.operand
            if isinstance(target, A.ArrayAccess):
                target = target.array
            if isinstance(target, A.NameRef) and target in m.refs:
                written.add(m.refs[target])
        m.const_arrays = {s for s in candidates if s not in written}


def resolve(unit: A.CompilationUnit, catalog: ApiCatalog) -> SemanticModel:
    return _Resolver(unit, catalog).run()
