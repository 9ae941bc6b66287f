"""Tokenizer for the analyzed Java subset.

Whitespace and comments are not emitted as tokens; each token keeps the
trivia that preceded it in ``leading`` so the original text can be rebuilt
exactly (see :meth:`TokenList.reconstruct`).
"""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset(
    {
        # supported
        "boolean", "catch", "char", "class", "double", "else", "false", "final",
        "finally", "float", "for", "if", "import", "int", "long", "new", "null",
        "private", "protected", "public", "return", "short", "static", "throws",
        "true", "try", "void", "byte", "while",
        # recognised so the parser can reject them by name
        "abstract", "break", "case", "continue", "default", "do", "enum",
        "extends", "implements", "instanceof", "interface", "package", "super",
        "switch", "synchronized", "this", "throw",
    }
)

# longest first
OPERATORS = ("==", "!=", ">=", "<=", "&&", "||", "++", "--",
             ">", "<", "+", "-", "*", "/", "%", "!", "=")
PUNCTUATION = frozenset("(){}[];,.")


class LexError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | int-literal | string-literal | char-literal | operator | punctuation
    lexeme: str
    line: int
    column: int
    offset: int = 0
    leading: str = ""

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.lexeme)

    def is_(self, kind: str, lexeme: str | None = None) -> bool:
        return self.kind == kind and (lexeme is None or self.lexeme == lexeme)


class TokenList(list):
    """A list of tokens plus the trivia after the last token."""

    trailing: str = ""

    def reconstruct(self) -> str:
        return "".join(t.leading + t.lexeme for t in self) + self.trailing


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def tokenize(text: str) -> TokenList:
    tokens = TokenList()
    i, n = 0, len(text)
    line, col = 1, 1
    trivia_start = 0

    def advance(upto: int) -> None:
        nonlocal i, line, col
        while i < upto:
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f":
            advance(i + 1)
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            advance(n if end < 0 else end)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated block comment", line, col)
            advance(end + 2)
            continue

        start, tline, tcol = i, line, col
        leading = text[trivia_start:start]

        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_part(text[j]):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in KEYWORDS else "identifier"
        elif ch.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and _is_ident_part(text[j]):
                raise LexError(f"malformed number {text[i:j + 1]!r}", tline, tcol)
            kind = "int-literal"
        elif ch in "\"'":
            j = i + 1
            while True:
                if j >= n or text[j] == "\n":
                    what = "string" if ch == '"' else "char"
                    raise LexError(f"unterminated {what} literal", tline, tcol)
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch:
                    j += 1
                    break
                j += 1
            kind = "string-literal" if ch == '"' else "char-literal"
            if kind == "char-literal" and j - i < 3:
                raise LexError("empty char literal", tline, tcol)
        elif ch in PUNCTUATION:
            j = i + 1
            kind = "punctuation"
        else:
            op = next((o for o in OPERATORS if text.startswith(o, i)), None)
            if op is None:
                raise LexError(f"illegal character {ch!r}", tline, tcol)
            j = i + len(op)
            kind = "operator"

        tokens.append(Token(kind, text[i:j], tline, tcol, start, leading))
        advance(j)
        trivia_start = j

    tokens.trailing = text[trivia_start:]
    return tokens
