"""Syntax tree for the analyzed Java subset.

Nodes compare by identity (``eq=False``) so they can key the side tables
built by later phases.  Statements that are bare expressions (calls,
assignments, ``x++``) appear directly in a block's statement list.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional


@dataclass(frozen=True)
class Span:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int  # column just past the last character
    start_offset: int
    end_offset: int
    first_token: int
    last_token: int  # inclusive; first_token > last_token for empty spans

    def contains(self, other: "Span") -> bool:
        return self.start_offset <= other.start_offset and other.end_offset <= self.end_offset


@dataclass(eq=False)
class Node:
    span: Span

    @property
    def kind(self) -> str:
        return type(self).__name__

    @property
    def line(self) -> int:
        return self.span.start_line

    def children(self) -> list["Node"]:
        out: list[Node] = []
        for f in fields(self):
            if f.name == "span":
                continue
            value = getattr(self, f.name)
            if isinstance(value, Node):
                out.append(value)
            elif isinstance(value, list):
                out.extend(v for v in value if isinstance(v, Node))
        return out

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal including ``self``."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))


# -- declarations -----------------------------------------------------------

@dataclass(eq=False)
class Param(Node):
    type: str
    name: str


@dataclass(eq=False)
class Block(Node):
    statements: list[Node] = field(default_factory=list)


@dataclass(eq=False)
class MethodDecl(Node):
    name: str
    modifiers: list[str]
    return_type: str
    params: list[Param]
    throws: list[str]
    body: Block


@dataclass(eq=False)
class ClassDecl(Node):
    name: str
    modifiers: list[str]
    methods: list[MethodDecl]


@dataclass(eq=False)
class CompilationUnit(Node):
    imports: list[str]
    class_decl: ClassDecl
    source_path: str
    tokens: list = field(default_factory=list, repr=False)  # the parsed Token list

    @property
    def classDecl(self) -> ClassDecl:  # name used by the data model
        return self.class_decl


# -- statements -------------------------------------------------------------

@dataclass(eq=False)
class LocalVarDecl(Node):
    type: str
    name: str
    init: Optional[Node]


@dataclass(eq=False)
class If(Node):
    cond: Node
    then: Node
    otherwise: Optional[Node]


@dataclass(eq=False)
class While(Node):
    cond: Node
    body: Node


@dataclass(eq=False)
class For(Node):
    init: list[Node]
    cond: Optional[Node]
    update: list[Node]
    body: Node


@dataclass(eq=False)
class Return(Node):
    value: Optional[Node]


@dataclass(eq=False)
class CatchClause(Node):
    type: str
    name: str
    body: Block


@dataclass(eq=False)
class TryCatchFinally(Node):
    body: Block
    catches: list[CatchClause]
    finally_: Optional[Block]


# -- expressions ------------------------------------------------------------

@dataclass(eq=False)
class Assign(Node):
    target: Node  # NameRef or ArrayAccess
    value: Node


@dataclass(eq=False)
class MethodCall(Node):
    receiver: Optional[Node]
    name: str
    args: list[Node]


@dataclass(eq=False)
class ConstructorCall(Node):
    class_name: str
    args: list[Node]


@dataclass(eq=False)
class FieldAccess(Node):
    target: Node
    name: str


@dataclass(eq=False)
class ArrayAccess(Node):
    array: Node
    index: Node


@dataclass(eq=False)
class ArrayInitializer(Node):
    elements: list[Node]


@dataclass(eq=False)
class ArrayCreation(Node):
    elem_type: str
    size: Optional[Node]
    initializer: Optional[ArrayInitializer]


@dataclass(eq=False)
class BinaryOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(eq=False)
class UnaryOp(Node):
    op: str
    operand: Node
    postfix: bool = False


@dataclass(eq=False)
class Cast(Node):
    type: str
    expr: Node


@dataclass(eq=False)
class Literal(Node):
    literal_kind: str  # int | string | char | null | boolean
    value: str  # source text, escapes kept verbatim


@dataclass(eq=False)
class NameRef(Node):
    name: str


def token_text(unit: CompilationUnit, node: Node) -> str:
    """Lexemes of ``node`` joined by single spaces (layout-insensitive)."""
    toks = unit.tokens[node.span.first_token:node.span.last_token + 1]
    return " ".join(t.lexeme for t in toks)


def calls_in(node: Node) -> list[Node]:
    """Method and constructor calls inside ``node`` in evaluation order."""
    out: list[Node] = []

    def visit(n: Node) -> None:
        for child in n.children():
            visit(child)
        if isinstance(n, (MethodCall, ConstructorCall)):
            out.append(n)

    visit(node)
    return out
