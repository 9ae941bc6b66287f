"""Recursive-descent parser producing a :class:`CompilationUnit`.

The accepted grammar is deliberately small: one class of methods, local
variables, the usual statements (if/else, while, for, return,
try/catch/finally) and an expression language without generics, lambdas
or inheritance.  Anything outside that raises :class:`ParseError`.
"""

from __future__ import annotations

from typing import Optional

from . import ast as A
from .lexer import Token, TokenList, tokenize

PRIMITIVES = frozenset({"int", "char", "boolean", "long", "double", "float", "short", "byte"})
MODIFIERS = frozenset({"public", "private", "protected", "static", "final"})

_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("==", "!="),
    (">=", "<=", ">", "<"),
    ("+", "-"),
    ("*", "/", "%"),
]


class ParseError(Exception):
    def __init__(self, message: str, token: Optional[Token], expected: str = "", path: str = ""):
        where = f"{token.line}:{token.column}" if token else "end of input"
        super().__init__(f"{path}:{where}: {message}" if path else f"{where}: {message}")
        self.token = token
        self.expected = expected
        self.found = token.lexeme if token else "<eof>"
        self.line = token.line if token else None
        self.column = token.column if token else None


class Parser:
    def __init__(self, tokens: list[Token], source_path: str = "<input>"):
        self.tokens = tokens
        self.path = source_path
        self.pos = 0

    # -- token helpers --------------------------------------------------

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, lexeme: Optional[str] = None, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.is_(kind, lexeme)

    def at_punct(self, p: str, ahead: int = 0) -> bool:
        return self.at("punctuation", p, ahead)

    def at_op(self, op: str, ahead: int = 0) -> bool:
        return self.at("operator", op, ahead)

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return tok

    def error(self, message: str, expected: str = "") -> ParseError:
        return ParseError(message, self.peek(), expected, self.path)

    def expect(self, kind: str, lexeme: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok is None or not tok.is_(kind, lexeme):
            want = lexeme or kind
            found = tok.lexeme if tok else "end of input"
            raise self.error(f"expected {want!r}, found {found!r}", want)
        self.pos += 1
        return tok

    def ident(self) -> str:
        return self.expect("identifier").lexeme

    def span_from(self, start: int) -> A.Span:
        first = self.tokens[start] if start < len(self.tokens) else self.tokens[-1]
        if self.pos > start:
            last = self.tokens[self.pos - 1]
            return A.Span(self.path, first.line, first.column, last.line,
                          last.column + len(last.lexeme), first.offset, last.end_offset,
                          start, self.pos - 1)
        return A.Span(self.path, first.line, first.column, first.line, first.column,
                      first.offset, first.offset, start, start - 1)

    # -- declarations ---------------------------------------------------

    def compilation_unit(self) -> A.CompilationUnit:
        start = self.pos
        if self.at("keyword", "package"):
            raise self.error("package declarations are not supported")
        imports = []
        while self.at("keyword", "import"):
            self.advance()
            parts = [self.ident()]
            while self.at_punct("."):
                self.advance()
                if self.at_op("*"):
                    self.advance()
                    parts.append("*")
                    break
                parts.append(self.ident())
            self.expect("punctuation", ";")
            imports.append(".".join(parts))
        if self.peek() is None:
            raise self.error("expected a class declaration", "class")
        cls = self.class_decl()
        if self.peek() is not None:
            raise self.error("only one top-level class per file is supported")
        if not self.tokens:
            raise ParseError("empty compilation unit", None, "class", self.path)
        return A.CompilationUnit(self.span_from(start), imports, cls, self.path, self.tokens)

    def modifiers(self) -> list[str]:
        mods = []
        while self.peek() is not None and self.peek().kind == "keyword" and self.peek().lexeme in MODIFIERS:
            mods.append(self.advance().lexeme)
        return mods

    def class_decl(self) -> A.ClassDecl:
        start = self.pos
        mods = self.modifiers()
        if self.at("keyword", "interface") or self.at("keyword", "enum"):
            raise self.error(f"{self.peek().lexeme} declarations are not supported")
        self.expect("keyword", "class")
        name = self.ident()
        if self.at_op("<"):
            raise self.error("generic classes are not supported")
        if self.at("keyword", "extends") or self.at("keyword", "implements"):
            raise self.error("inheritance is not supported")
        self.expect("punctuation", "{")
        methods = []
        while not self.at_punct("}"):
            if self.peek() is None:
                raise self.error("unterminated class body", "}")
            methods.append(self.method_decl())
        self.expect("punctuation", "}")
        return A.ClassDecl(self.span_from(start), name, mods, methods)

    def method_decl(self) -> A.MethodDecl:
        start = self.pos
        mods = self.modifiers()
        if self.at("keyword", "void"):
            self.advance()
            ret = "void"
        else:
            ret = self.type_name()
        name = self.ident()
        if not self.at_punct("("):
            raise self.error("fields are not supported; expected a method", "(")
        self.advance()
        params = []
        if not self.at_punct(")"):
            while True:
                pstart = self.pos
                ptype = self.type_name()
                pname = self.ident()
                params.append(A.Param(self.span_from(pstart), ptype, pname))
                if not self.at_punct(","):
                    break
                self.advance()
        self.expect("punctuation", ")")
        throws = []
        if self.at("keyword", "throws"):
            self.advance()
            throws.append(self.ident())
            while self.at_punct(","):
                self.advance()
                throws.append(self.ident())
        body = self.block()
        return A.MethodDecl(self.span_from(start), name, mods, ret, params, throws, body)

    def type_name(self) -> str:
        tok = self.peek()
        if tok is None:
            raise self.error("expected a type", "type")
        if tok.kind == "keyword" and tok.lexeme in PRIMITIVES:
            base = self.advance().lexeme
        elif tok.kind == "identifier":
            base = self.advance().lexeme
            if self.at_op("<"):
                raise self.error("generic types are not supported")
        else:
            raise self.error(f"expected a type, found {tok.lexeme!r}", "type")
        while self.at_punct("[") and self.at_punct("]", 1):
            self.advance()
            self.advance()
            base += "[]"
        return base

    # -- statements -----------------------------------------------------

    def block(self) -> A.Block:
        start = self.pos
        self.expect("punctuation", "{")
        stmts = []
        while not self.at_punct("}"):
            if self.peek() is None:
                raise self.error("unterminated block", "}")
            stmts.append(self.statement())
        self.expect("punctuation", "}")
        return A.Block(self.span_from(start), stmts)

    def _looks_like_decl(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind == "keyword" and tok.lexeme in PRIMITIVES | {"final"}:
            return True
        if tok.kind != "identifier":
            return False
        if self.at("identifier", ahead=1):
            return True
        # Type[] name
        k = 1
        while self.at_punct("[", k) and self.at_punct("]", k + 1):
            k += 2
        return k > 1 and self.at("identifier", ahead=k)

    def local_var_decl(self) -> A.LocalVarDecl:
        start = self.pos
        if self.at("keyword", "final"):
            self.advance()
        vtype = self.type_name()
        name = self.ident()
        init: Optional[A.Node] = None
        if self.at_op("="):
            self.advance()
            init = self.array_initializer() if self.at_punct("{") else self.expression()
        if self.at_punct(","):
            raise self.error("multiple declarators are not supported")
        return A.LocalVarDecl(self.span_from(start), vtype, name, init)

    def statement(self) -> A.Node:
        start = self.pos
        tok = self.peek()
        if tok.is_("punctuation", "{"):
            return self.block()
        if tok.is_("punctuation", ";"):
            self.advance()
            return A.Block(self.span_from(start), [])
        if tok.kind == "keyword":
            kw = tok.lexeme
            if kw == "if":
                self.advance()
                self.expect("punctuation", "(")
                cond = self.expression()
                self.expect("punctuation", ")")
                then = self.statement()
                otherwise = None
                if self.at("keyword", "else"):
                    self.advance()
                    otherwise = self.statement()
                return A.If(self.span_from(start), cond, then, otherwise)
            if kw == "while":
                self.advance()
                self.expect("punctuation", "(")
                cond = self.expression()
                self.expect("punctuation", ")")
                body = self.statement()
                return A.While(self.span_from(start), cond, body)
            if kw == "for":
                return self.for_statement()
            if kw == "return":
                self.advance()
                value = None if self.at_punct(";") else self.expression()
                self.expect("punctuation", ";")
                return A.Return(self.span_from(start), value)
            if kw == "try":
                return self.try_statement()
            if kw in ("switch", "do", "break", "continue", "throw", "synchronized", "case", "default"):
                raise self.error(f"'{kw}' statements are not supported")
        if self._looks_like_decl():
            decl = self.local_var_decl()
            self.expect("punctuation", ";")
            decl.span = self.span_from(start)
            return decl
        expr = self.expression()
        if not isinstance(expr, (A.Assign, A.MethodCall, A.ConstructorCall)) and not (
            isinstance(expr, A.UnaryOp) and expr.op in ("++", "--")
        ):
            raise ParseError("not a statement", self.tokens[start], "statement", self.path)
        self.expect("punctuation", ";")
        return expr

    def for_statement(self) -> A.For:
        start = self.pos
        self.expect("keyword", "for")
        self.expect("punctuation", "(")
        init: list[A.Node] = []
        if not self.at_punct(";"):
            init.append(self.local_var_decl() if self._looks_like_decl() else self.expression())
        self.expect("punctuation", ";")
        cond = None if self.at_punct(";") else self.expression()
        self.expect("punctuation", ";")
        update: list[A.Node] = []
        if not self.at_punct(")"):
            update.append(self.expression())
            while self.at_punct(","):
                self.advance()
                update.append(self.expression())
        self.expect("punctuation", ")")
        body = self.statement()
        return A.For(self.span_from(start), init, cond, update, body)

    def try_statement(self) -> A.TryCatchFinally:
        start = self.pos
        self.expect("keyword", "try")
        if self.at_punct("("):
            raise self.error("try-with-resources is not supported")
        body = self.block()
        catches = []
        while self.at("keyword", "catch"):
            cstart = self.pos
            self.advance()
            self.expect("punctuation", "(")
            ctype = self.ident()
            cname = self.ident()
            self.expect("punctuation", ")")
            cbody = self.block()
            catches.append(A.CatchClause(self.span_from(cstart), ctype, cname, cbody))
        finally_ = None
        if self.at("keyword", "finally"):
            self.advance()
            finally_ = self.block()
        if not catches and finally_ is None:
            raise self.error("try without catch or finally", "catch")
        return A.TryCatchFinally(self.span_from(start), body, catches, finally_)

    # -- expressions ----------------------------------------------------

    def expression(self) -> A.Node:
        start = self.pos
        left = self.binary(0)
        if self.at_op("="):
            if not isinstance(left, (A.NameRef, A.ArrayAccess)):
                raise self.error("invalid assignment target")
            self.advance()
            value = self.expression()
            return A.Assign(self.span_from(start), left, value)
        return left

    def binary(self, level: int) -> A.Node:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        start = self.pos
        left = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.peek() is not None and self.peek().kind == "operator" and self.peek().lexeme in ops:
            op = self.advance().lexeme
            right = self.binary(level + 1)
            left = A.BinaryOp(self.span_from(start), op, left, right)
        return left

    def _cast_ahead(self) -> bool:
        if not self.at_punct("("):
            return False
        k = 1
        tok = self.peek(k)
        if tok is None:
            return False
        primitive = tok.kind == "keyword" and tok.lexeme in PRIMITIVES
        if not primitive and tok.kind != "identifier":
            return False
        k += 1
        while self.at_punct("[", k) and self.at_punct("]", k + 1):
            k += 2
        if not self.at_punct(")", k):
            return False
        if primitive:
            return True
        nxt = self.peek(k + 1)
        return nxt is not None and (
            nxt.kind in ("identifier", "int-literal", "string-literal", "char-literal")
            or nxt.is_("punctuation", "(")
            or nxt.is_("keyword", "new")
            or nxt.is_("keyword", "null")
            or nxt.is_("operator", "!")
        )

    def unary(self) -> A.Node:
        start = self.pos
        if self.at_op("!") or self.at_op("-"):
            op = self.advance().lexeme
            operand = self.unary()
            return A.UnaryOp(self.span_from(start), op, operand)
        if self.at_op("++") or self.at_op("--"):
            raise self.error("prefix increment/decrement is not supported")
        if self._cast_ahead():
            self.advance()
            ctype = self.type_name()
            self.expect("punctuation", ")")
            expr = self.unary()
            return A.Cast(self.span_from(start), ctype, expr)
        return self.postfix()

    def postfix(self) -> A.Node:
        start = self.pos
        expr = self.primary()
        while True:
            if self.at_punct("."):
                self.advance()
                name = self.ident()
                if self.at_punct("("):
                    args = self.arguments()
                    expr = A.MethodCall(self.span_from(start), expr, name, args)
                else:
                    expr = A.FieldAccess(self.span_from(start), expr, name)
            elif self.at_punct("["):
                self.advance()
                index = self.expression()
                self.expect("punctuation", "]")
                expr = A.ArrayAccess(self.span_from(start), expr, index)
            elif self.at_op("++") or self.at_op("--"):
                op = self.advance().lexeme
                expr = A.UnaryOp(self.span_from(start), op, expr, postfix=True)
            else:
                return expr

    def arguments(self) -> list[A.Node]:
        self.expect("punctuation", "(")
        args = []
        if not self.at_punct(")"):
            args.append(self.expression())
            while self.at_punct(","):
                self.advance()
                args.append(self.expression())
        self.expect("punctuation", ")")
        return args

    def array_initializer(self) -> A.ArrayInitializer:
        start = self.pos
        self.expect("punctuation", "{")
        elems = []
        if not self.at_punct("}"):
            elems.append(self.array_initializer() if self.at_punct("{") else self.expression())
            while self.at_punct(","):
                self.advance()
                if self.at_punct("}"):
                    break
                elems.append(self.array_initializer() if self.at_punct("{") else self.expression())
        self.expect("punctuation", "}")
        return A.ArrayInitializer(self.span_from(start), elems)

    def primary(self) -> A.Node:
        start = self.pos
        tok = self.peek()
        if tok is None:
            raise self.error("expected an expression", "expression")
        literal_kinds = {"int-literal": "int", "string-literal": "string", "char-literal": "char"}
        if tok.kind in literal_kinds:
            self.advance()
            return A.Literal(self.span_from(start), literal_kinds[tok.kind], tok.lexeme)
        if tok.kind == "keyword":
            if tok.lexeme == "null":
                self.advance()
                return A.Literal(self.span_from(start), "null", "null")
            if tok.lexeme in ("true", "false"):
                self.advance()
                return A.Literal(self.span_from(start), "boolean", tok.lexeme)
            if tok.lexeme == "new":
                return self.creation()
            raise self.error(f"unexpected keyword {tok.lexeme!r}", "expression")
        if tok.kind == "identifier":
            self.advance()
            if self.at_punct("("):
                args = self.arguments()
                return A.MethodCall(self.span_from(start), None, tok.lexeme, args)
            return A.NameRef(self.span_from(start), tok.lexeme)
        if tok.is_("punctuation", "("):
            self.advance()
            expr = self.expression()
            self.expect("punctuation", ")")
            return expr
        raise self.error(f"unexpected {tok.lexeme!r}", "expression")

    def creation(self) -> A.Node:
        start = self.pos
        self.expect("keyword", "new")
        tok = self.peek()
        if tok is not None and tok.kind == "keyword" and tok.lexeme in PRIMITIVES:
            elem = self.advance().lexeme
        else:
            elem = self.ident()
            if self.at_op("<"):
                raise self.error("generic types are not supported")
        if self.at_punct("("):
            if elem in PRIMITIVES:
                raise self.error("cannot construct a primitive type")
            args = self.arguments()
            if self.at_punct("{"):
                raise self.error("anonymous classes are not supported")
            return A.ConstructorCall(self.span_from(start), elem, args)
        self.expect("punctuation", "[")
        if self.at_punct("]"):
            self.advance()
            while self.at_punct("[") and self.at_punct("]", 1):
                self.advance()
                self.advance()
                elem += "[]"
            init = self.array_initializer()
            return A.ArrayCreation(self.span_from(start), elem, None, init)
        size = self.expression()
        self.expect("punctuation", "]")
        return A.ArrayCreation(self.span_from(start), elem, size, None)


def parse(tokens: list[Token], source_path: str = "<input>") -> A.CompilationUnit:
    return Parser(tokens, source_path).compilation_unit()


def parse_source(text: str, source_path: str = "<input>") -> A.CompilationUnit:
    return parse(tokenize(text), source_path)


def parse_file(path) -> A.CompilationUnit:
    from pathlib import Path

    p = Path(path)
    return parse_source(p.read_text(encoding="utf-8"), str(p))
