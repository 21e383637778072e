"""Lossless lexer for preprocessed C++ source.

Every byte of the input lands in exactly one token, whitespace and comments
included, so joining the lexemes reproduces the source. Files are decoded as
latin-1, which maps bytes one-to-one onto characters and keeps columns
byte-accurate.
"""

from __future__ import annotations

import bisect
import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple


class TokenKind(str, enum.Enum):
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    NUMBER = "number"
    STRING_LITERAL = "string_literal"
    CHAR_LITERAL = "char_literal"
    PUNCTUATION = "punctuation"
    PREPROC_DIRECTIVE = "preproc_directive"
    COMMENT = "comment"
    WHITESPACE = "whitespace"
    UNKNOWN = "unknown"


# C++03 keywords plus the alternative operator spellings.
KEYWORDS = frozenset("""
    and and_eq asm auto bitand bitor bool break case catch char class compl
    const const_cast continue default delete do double dynamic_cast else enum
    explicit export extern false float for friend goto if inline int long
    mutable namespace new not not_eq operator or or_eq private protected
    public register reinterpret_cast return short signed sizeof static
    static_cast struct switch template this throw true try typedef typeid
    typename union unsigned using virtual void volatile wchar_t while xor
    xor_eq
""".split())


class LexError(OSError):
    """Raised when a source artifact cannot be read."""


@dataclass(frozen=True)
class SourceText:
    artifact_path: str
    text: str
    newline_index: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.newline_index:
            starts = [0]
            starts.extend(m.end() for m in re.finditer("\n", self.text))
            object.__setattr__(self, "newline_index", tuple(starts))

    @classmethod
    def from_bytes(cls, data: bytes, artifact_path: str = "<memory>") -> "SourceText":
        return cls(artifact_path, data.decode("latin-1"))

    @classmethod
    def from_path(cls, path, artifact_path: str | None = None) -> "SourceText":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise LexError(f"cannot read {path}: {exc.strerror or exc}") from exc
        return cls.from_bytes(data, artifact_path or str(path))

    @property
    def data(self) -> bytes:
        return self.text.encode("latin-1")

    def position(self, offset: int) -> tuple[int, int]:
        """1-based (line, column) of a character offset."""
        line = bisect.bisect_right(self.newline_index, offset)
        return line, offset - self.newline_index[line - 1] + 1


class Token(NamedTuple):
    kind: TokenKind
    lexeme: str
    line: int
    column: int


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[Token, ...]
    source: SourceText

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def text(self) -> str:
        return "".join(t.lexeme for t in self.tokens)


_PUNCTUATORS = [
    ">>=", "<<=", "->*", "...",
    "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##", ".*",
]
_PUNCT_CHARS = "{}[]();:,.?~!+-*/%^&|=<>#"

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>(?:[ \t\r\f\v\n]|\\\r?\n)+)
    | (?P<comment>//[^\n]*|/\*.*?(?:\*/|\Z))
    | (?P<string>(?:u8|[LuU])?"(?:[^"\\\n]|\\.)*"?)
    | (?P<char>[LuU]?'(?:[^'\\\n]|\\.)*'?)
    | (?P<number>\.?[0-9](?:[eEpP][+-]|[0-9A-Za-z_.])*)
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>%s|[%s])
    | (?P<unknown>[^\w\s"'%s]+|.)
    """
    % (
        "|".join(re.escape(p) for p in _PUNCTUATORS),
        re.escape(_PUNCT_CHARS),
        re.escape(_PUNCT_CHARS),
    ),
    re.VERBOSE | re.DOTALL | re.ASCII,
)

_DIRECTIVE_RE = re.compile(r"#[ \t]*(?:[A-Za-z_][A-Za-z0-9_]*)?", re.ASCII)

_GROUP_KIND = {
    "ws": TokenKind.WHITESPACE,
    "comment": TokenKind.COMMENT,
    "string": TokenKind.STRING_LITERAL,
    "char": TokenKind.CHAR_LITERAL,
    "number": TokenKind.NUMBER,
    "punct": TokenKind.PUNCTUATION,
    "unknown": TokenKind.UNKNOWN,
}


def classify_word(lexeme: str) -> TokenKind:
    return TokenKind.KEYWORD if lexeme in KEYWORDS else TokenKind.IDENTIFIER


def _at_line_start(text: str, pos: int) -> bool:
    # Logical line start: spliced (backslash-newline) lines do not count.
    start = text.rfind("\n", 0, pos) + 1
    if text[start:pos].strip(" \t\r\f\v"):
        return False
    return not text[max(0, start - 3):start].rstrip("\r\n").endswith("\\")


def tokenize(source: SourceText | str) -> TokenStream:
    """Split ``source`` into a lossless stream of classified tokens.

    A ``#`` that opens a line becomes a single ``preproc_directive`` token
    spanning the directive word (``#include``, ``#  define``); the rest of
    the line is lexed normally. Nothing in the content can make this fail.
    """
    if isinstance(source, str):
        source = SourceText("<memory>", source)
    text = source.text
    match = _TOKEN_RE.match
    tokens: list[Token] = []
    append = tokens.append
    keywords = KEYWORDS
    pos, end = 0, len(text)
    line, line_start = 1, 0
    while pos < end:
        m = match(text, pos)
        group = m.lastgroup
        lexeme = m.group()
        if group == "word":
            kind = TokenKind.KEYWORD if lexeme in keywords else TokenKind.IDENTIFIER
        elif group == "punct" and lexeme == "#" and _at_line_start(text, pos):
            lexeme = _DIRECTIVE_RE.match(text, pos).group()
            kind = TokenKind.PREPROC_DIRECTIVE
        elif group == "unknown" and tokens and tokens[-1].kind is TokenKind.UNKNOWN:
            # Merge runs of unrecognised characters into one token.
            prev = tokens.pop()
            lexeme = prev.lexeme + lexeme
            append(Token(TokenKind.UNKNOWN, lexeme, prev.line, prev.column))
            pos = m.end()
            continue
        else:
            kind = _GROUP_KIND[group]
        append(Token(kind, lexeme, line, pos - line_start + 1))
        if "\n" in lexeme:
            line += lexeme.count("\n")
            line_start = pos + lexeme.rfind("\n") + 1
        pos += len(lexeme)
    return TokenStream(tuple(tokens), source)


def dump_tokens(stream: TokenStream) -> Iterator[str]:
    """Debug lines of the form ``LINE:COL KIND LEXEME`` with escaped lexemes."""
    for tok in stream:
        escaped = tok.lexeme.encode("unicode_escape").decode("ascii")
        yield f"{tok.line}:{tok.column} {tok.kind.value} {escaped}"
