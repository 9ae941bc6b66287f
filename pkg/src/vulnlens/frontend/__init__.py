"""Lexing and parsing of the analyzed Java subset."""

from .ast import CompilationUnit, Node, Span
from .lexer import LexError, Token, TokenList, tokenize
from .parser import ParseError, parse, parse_file, parse_source

__all__ = [
    "CompilationUnit", "LexError", "Node", "ParseError", "Span", "Token",
    "TokenList", "parse", "parse_file", "parse_source", "tokenize",
]
