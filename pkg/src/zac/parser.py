"""Tolerant structural recogniser over a token stream.

This is not a C++ grammar. It walks the significant tokens once, tracks
brace scopes, and emits events for the constructs the measurer needs:
includes, macro definitions, pragmas, namespace and class declarations,
decision points and uses of known macros. Anything it cannot make sense
of is skipped and reported as a diagnostic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .lexer import Token, TokenKind, TokenStream

K = TokenKind


@dataclass(frozen=True)
class IncludeDirective:
    line: int
    target: str
    style: str  # "angle" | "quote"


@dataclass(frozen=True)
class DefineMacro:
    line: int
    name: str
    is_function_like: bool = False
    parameter_count: int = 0
    body: str = ""


@dataclass(frozen=True)
class PragmaDirective:
    line: int
    text: str


@dataclass(frozen=True)
class DeclaredNamespace:
    line: int
    name: str


@dataclass(frozen=True)
class BaseSpecifier:
    base_name: str
    access: str  # public | protected | private
    is_virtual: bool = False


@dataclass(frozen=True)
class ClassDecl:
    line: int
    name: str
    kind: str  # class | struct | union
    bases: tuple[BaseSpecifier, ...] = ()
    is_definition: bool = True


@dataclass(frozen=True)
class DecisionPoint:
    line: int
    kind: str


@dataclass(frozen=True)
class MacroExpansion:
    line: int
    name: str


ParseEvent = Union[
    IncludeDirective, DefineMacro, PragmaDirective, DeclaredNamespace,
    ClassDecl, DecisionPoint, MacroExpansion,
]

EVENT_VARIANTS = {
    cls.__name__: cls
    for cls in (IncludeDirective, DefineMacro, PragmaDirective, DeclaredNamespace,
                ClassDecl, DecisionPoint, MacroExpansion)
}


@dataclass
class ParseOutcome:
    events: list = field(default_factory=list)
    diagnostics: list[tuple[int, str]] = field(default_factory=list)

    def of_type(self, cls) -> list:
        return [e for e in self.events if isinstance(e, cls)]


class ParserFault(RuntimeError):
    """Internal inconsistency between a token stream and its source."""


DECISION_KEYWORDS = frozenset({"if", "for", "while", "do", "switch", "case", "catch"})
CLASS_KEYWORDS = frozenset({"class", "struct", "union"})
ACCESS_KEYWORDS = frozenset({"public", "protected", "private"})
_OPENERS = frozenset({"(", "[", "{"})
_TRIVIA = (K.WHITESPACE, K.COMMENT)
_SPLICE = re.compile(r"\\\r?\n")


def _ends_directive(tok: Token) -> bool:
    return tok.kind is K.WHITESPACE and "\n" in _SPLICE.sub("", tok.lexeme)


def _directive_word(lexeme: str) -> str:
    return lexeme[1:].strip(" \t")


def _qualified(tokens: list[Token]) -> str:
    return "".join(t.lexeme for t in tokens).lstrip(":")


def _strip_template_args(tokens: list[Token]) -> list[Token]:
    out, depth = [], 0
    for t in tokens:
        if t.lexeme == "<":
            depth += 1
        elif t.lexeme == ">" and depth:
            depth -= 1
        elif t.lexeme == ">>" and depth:
            depth = max(0, depth - 2)
        elif depth == 0:
            out.append(t)
    return out


def parse_base_clause(tokens: Iterable[Token], class_kind: str = "class",
                      diagnostics: list | None = None) -> list[BaseSpecifier]:
    """Split the tokens between ``:`` and ``{`` of a class head into bases.

    Commas nested inside template angle brackets or parentheses do not split.
    Access defaults to private for ``class`` and public otherwise.
    """
    default_access = "private" if class_kind == "class" else "public"
    segments: list[list[Token]] = [[]]
    angle = paren = 0
    for t in tokens:
        if t.kind in _TRIVIA:
            continue
        lx = t.lexeme
        if lx == "<":
            angle += 1
        elif lx == ">":
            angle = max(0, angle - 1)
        elif lx == ">>":
            angle = max(0, angle - 2)
        elif lx == "(":
            paren += 1
        elif lx == ")":
            paren = max(0, paren - 1)
        elif lx == "," and angle == 0 and paren == 0:
            segments.append([])
            continue
        segments[-1].append(t)

    bases = []
    for seg in segments:
        access, virtual, rest = default_access, False, []
        for t in seg:
            if not rest and t.lexeme in ACCESS_KEYWORDS:
                access = t.lexeme
            elif not rest and t.lexeme == "virtual":
                virtual = True
            else:
                rest.append(t)
        name = _qualified(_strip_template_args(rest))
        if not name or not re.fullmatch(r"[A-Za-z_]\w*(::[A-Za-z_]\w*)*", name):
            if diagnostics is not None:
                line = seg[0].line if seg else 0
                diagnostics.append((line, f"malformed base specifier {name!r} dropped"))
            continue
        bases.append(BaseSpecifier(name, access, virtual))
    return bases


def defined_macro_names(tokens: TokenStream | Iterable[Token]) -> set[str]:
    """Names of every ``#define`` in the stream (the first measurement pass)."""
    names = set()
    it = iter(tokens)
    for tok in it:
        if tok.kind is K.PREPROC_DIRECTIVE and _directive_word(tok.lexeme) == "define":
            for nxt in it:
                if nxt.kind is K.WHITESPACE and not _ends_directive(nxt) or nxt.kind is K.COMMENT:
                    continue
                if nxt.kind in (K.IDENTIFIER, K.KEYWORD):
                    names.add(nxt.lexeme)
                break
    return names


class _Parser:
    def __init__(self, stream: TokenStream, known_macros):
        self.tokens = stream.tokens
        self.known = known_macros
        self.out = ParseOutcome()
        self.emit = self.out.events.append
        self.diag = self.out.diagnostics.append
        # Scope names keyed by the index of the opening brace that starts them.
        self.pending_scopes: dict[int, str | None] = {}
        self.scopes: list[str | None] = []
        self.template_end = -1
        self.prev_sig: Token | None = None

    # -- helpers over significant tokens -------------------------------------

    def next_sig(self, i: int) -> int:
        toks, n = self.tokens, len(self.tokens)
        i += 1
        while i < n and toks[i].kind in _TRIVIA:
            i += 1
        return i

    def run(self) -> ParseOutcome:
        toks, n = self.tokens, len(self.tokens)
        i = 0
        while i < n:
            tok = toks[i]
            if tok.kind is K.PREPROC_DIRECTIVE:
                i = self.directive(i)
                continue
            if tok.kind not in _TRIVIA:
                self.code_token(i, tok)
                self.prev_sig = tok
            i += 1
        if self.scopes:
            self.diag((toks[-1].line, f"{len(self.scopes)} unclosed brace scope(s) at end of file"))
        return self.out

    def count_common(self, tok: Token, exclude_macro: str | None = None):
        """Decision points and macro uses, shared by code and directive lines."""
        kind = tok.kind
        if kind is K.KEYWORD:
            if tok.lexeme in DECISION_KEYWORDS:
                self.emit(DecisionPoint(tok.line, tok.lexeme))
        elif kind is K.IDENTIFIER:
            if tok.lexeme in self.known and tok.lexeme != exclude_macro:
                self.emit(MacroExpansion(tok.line, tok.lexeme))
        elif kind is K.PUNCTUATION and tok.lexeme == "?":
            prev = self.prev_sig
            if prev is None or prev.lexeme not in _OPENERS:
                self.emit(DecisionPoint(tok.line, "ternary"))

    # -- code ----------------------------------------------------------------

    def code_token(self, i: int, tok: Token):
        lx = tok.lexeme
        if tok.kind is K.KEYWORD:
            if lx in CLASS_KEYWORDS and i > self.template_end:
                self.class_head(i, tok)
            elif lx == "namespace":
                self.namespace_head(i, tok)
            elif lx == "template":
                j = self.next_sig(i)
                if j < len(self.tokens) and self.tokens[j].lexeme in ("<", "<<"):
                    self.template_end = max(self.template_end, self.skip_angles(j))
        elif tok.kind is K.PUNCTUATION:
            if lx == "{":
                self.scopes.append(self.pending_scopes.pop(i, None))
            elif lx == "}":
                if self.scopes:
                    self.scopes.pop()
                else:
                    self.diag((tok.line, "unbalanced '}' ignored"))
        self.count_common(tok)

    def skip_angles(self, j: int) -> int:
        """Index of the ``>`` closing the angle group opened at ``j``."""
        toks, n = self.tokens, len(self.tokens)
        depth = 0
        while j < n:
            lx = toks[j].lexeme
            kind = toks[j].kind
            if kind is K.PUNCTUATION:
                if lx == "<":
                    depth += 1
                elif lx == "<<":
                    depth += 2
                elif lx == ">":
                    depth -= 1
                elif lx == ">>":
                    depth -= 2
                elif lx in ("{", ";"):
                    return j - 1
                if depth <= 0:
                    return j
            elif kind is K.PREPROC_DIRECTIVE:
                return j - 1
            j += 1
        return n

    def scope_prefix(self) -> str:
        return "".join(f"{s}::" for s in self.scopes if s)

    def namespace_head(self, i: int, tok: Token):
        j = self.next_sig(i)
        toks = self.tokens
        if j < len(toks) and toks[j].kind is K.IDENTIFIER:
            k = self.next_sig(j)
            if k < len(toks) and toks[k].lexeme == "{":
                self.emit(DeclaredNamespace(tok.line, toks[j].lexeme))
                self.pending_scopes[k] = toks[j].lexeme

    def class_head(self, i: int, tok: Token):
        toks, n = self.tokens, len(self.tokens)
        if self.prev_sig is not None and self.prev_sig.lexeme in ("<", ","):
            # Elaborated type in an argument list, e.g. ``Foo<class T>``.
            return
        # Runs of (qualified) names up to ``:``, ``{`` or ``;``. Earlier runs
        # are attribute macros such as ``EXPORT_API`` or ``__declspec(x)``.
        runs: list[list[Token]] = []
        decorated = trailing_parens = False
        j = self.next_sig(i)
        while j < n:
            t = toks[j]
            if t.kind is K.IDENTIFIER:
                if runs and runs[-1] and runs[-1][-1].lexeme == "::":
                    runs[-1].append(t)
                else:
                    runs.append([t])
                trailing_parens = False
            elif t.lexeme == "::":
                if not runs or trailing_parens:
                    runs.append([])
                runs[-1].append(t)
                trailing_parens = False
            elif t.lexeme == "(" and runs:
                depth = 0
                while j < n:
                    if toks[j].lexeme == "(":
                        depth += 1
                    elif toks[j].lexeme == ")":
                        depth -= 1
                        if depth == 0:
                            break
                    j += 1
                decorated = trailing_parens = True
            elif t.lexeme in ("<", "<<") and runs and not trailing_parens:
                # Template arguments of an explicit or partial specialisation.
                j = self.skip_angles(j)
                decorated = True
            else:
                break
            j = self.next_sig(j)
        if j >= n or trailing_parens:
            return
        stop = toks[j].lexeme
        name = _qualified(runs[-1]) if runs else ""
        kind = tok.lexeme
        if stop == ";":
            if len(runs) == 1 and not decorated and name:
                self.emit(ClassDecl(tok.line, self.scope_prefix() + name, kind, (), False))
            return
        if stop not in (":", "{"):
            return
        bases: tuple[BaseSpecifier, ...] = ()
        if stop == ":":
            k = j + 1
            clause = []
            while k < n:
                t = toks[k]
                if t.kind is K.PREPROC_DIRECTIVE or (
                        t.kind is K.PUNCTUATION and t.lexeme in ("{", ";", "}")):
                    break
                clause.append(t)
                k += 1
            if k >= n or toks[k].lexeme != "{":
                self.diag((tok.line, f"unterminated base clause for {kind} {name or '<anonymous>'}"))
                return
            bases = tuple(parse_base_clause(clause, kind, self.out.diagnostics))
            j = k
        qualified = self.scope_prefix() + name if name else ""
        self.emit(ClassDecl(tok.line, qualified, kind, bases, True))
        self.pending_scopes[j] = name or None

    # -- directives ----------------------------------------------------------

    def directive(self, i: int) -> int:
        """Handle one logical directive line starting at ``i``; return the next index."""
        toks, n = self.tokens, len(self.tokens)
        head = toks[i]
        j = i + 1
        while j < n and not _ends_directive(toks[j]):
            j += 1
        body = [t for t in toks[i + 1:j] if t.kind not in _TRIVIA]
        word = _directive_word(head.lexeme)
        exclude = None
        skip_ids: set[int] = set()
        if word == "include":
            skip_ids = self.include(head, body)
        elif word == "define":
            exclude = self.define(head, toks[i + 1:j], body)
        elif word == "pragma":
            self.emit(PragmaDirective(head.line, "".join(t.lexeme for t in toks[i + 1:j]).strip()))
        saved_prev = self.prev_sig
        self.prev_sig = head
        for t in body:
            if id(t) not in skip_ids:
                self.count_common(t, exclude)
            self.prev_sig = t
        self.prev_sig = saved_prev
        return j

    def include(self, head: Token, body: list[Token]) -> set[int]:
        if body and body[0].kind is K.STRING_LITERAL and body[0].lexeme.endswith('"') \
                and body[0].lexeme.startswith('"'):
            self.emit(IncludeDirective(head.line, body[0].lexeme[1:-1], "quote"))
            return set()
        if body and body[0].lexeme == "<":
            inner = []
            for t in body[1:]:
                if t.lexeme == ">":
                    target = self._raw_between(inner)
                    self.emit(IncludeDirective(head.line, target, "angle"))
                    return {id(x) for x in inner}
                inner.append(t)
        self.diag((head.line, "unrecognised #include form skipped"))
        return set()

    def _raw_between(self, inner: list[Token]) -> str:
        if not inner:
            return ""
        toks = self.tokens
        # Reconstruct the exact text, whitespace included, of the header name.
        start = next(k for k, t in enumerate(toks) if t is inner[0])
        end = start
        while toks[end] is not inner[-1]:
            end += 1
        return "".join(t.lexeme for t in toks[start:end + 1]).strip()

    def define(self, head: Token, raw: tuple, body: list[Token]) -> str | None:
        if not body or body[0].kind not in (K.IDENTIFIER, K.KEYWORD):
            self.diag((head.line, "#define without a macro name skipped"))
            return None
        name_tok = body[0]
        at = next(k for k, t in enumerate(raw) if t is name_tok)
        rest = raw[at + 1:]
        function_like = bool(rest) and rest[0].lexeme == "("
        params = 0
        if function_like:
            depth, seen = 0, False
            k = 0
            for k, t in enumerate(rest):
                if t.kind in _TRIVIA:
                    continue
                if t.lexeme == "(":
                    depth += 1
                elif t.lexeme == ")":
                    depth -= 1
                    if depth == 0:
                        break
                elif t.lexeme == "," and depth == 1:
                    params += 1
                else:
                    seen = True
            params = params + 1 if seen or params else 0
            rest = rest[k + 1:]
        text = _SPLICE.sub(" ", "".join(t.lexeme for t in rest)).strip()
        self.emit(DefineMacro(head.line, name_tok.lexeme, function_like, params, text))
        return name_tok.lexeme


def parse(tokens: TokenStream, known_macros: Iterable[str] = ()) -> ParseOutcome:
    """Recognise structural events in ``tokens``.

    ``known_macros`` is the corpus-wide set of ``#define`` names collected by
    a first pass; identifiers matching it are reported as macro expansions.
    """
    known = known_macros if isinstance(known_macros, (set, frozenset)) else set(known_macros)
    if sum(len(t.lexeme) for t in tokens.tokens) != len(tokens.source.text):
        raise ParserFault(f"token stream does not cover {tokens.source.artifact_path}")
    return _Parser(tokens, known).run()


def describe(event) -> str:
    detail = " ".join(
        f"{k}={v!r}" for k, v in vars(event).items() if k != "line"
    )
    return f"{event.line} {type(event).__name__} {detail}"


def dump_events(outcome: ParseOutcome) -> Iterator[str]:
    for event in outcome.events:
        yield describe(event)
