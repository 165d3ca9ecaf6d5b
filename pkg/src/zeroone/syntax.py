"""First-order sentences over ordered graphs and binary functions.

Surface grammar (lowest to highest precedence)::

    formula := 'exists' IDENT '.' formula | 'forall' IDENT '.' formula | iff
    iff     := imp ('<->' imp)*          left-associative
    imp     := disj ('->' disj)*         right-associative
    disj    := conj ('|' conj)*          n-ary
    conj    := neg ('&' neg)*            n-ary
    neg     := '!' neg | '(' formula ')' | atom
    atom    := IDENT '=' IDENT | IDENT '<' IDENT | IDENT '~' IDENT
             | 'F(' IDENT ',' IDENT ')' '=' IDENT

A quantifier body extends as far right as possible, so a quantified formula
used as an operand must be parenthesised. ``#`` starts a comment.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union


class Vocabulary(enum.Enum):
    GRAPH_ORDER = "graph"
    BINARY_FUNCTION = "func"


EQ = "eq"
LT = "lt"
ADJ = "adj"
FEQ = "feq"

ALLOWED_ATOMS = {
    Vocabulary.GRAPH_ORDER: frozenset({EQ, LT, ADJ}),
    Vocabulary.BINARY_FUNCTION: frozenset({EQ, FEQ}),
}
_ARITY = {EQ: 2, LT: 2, ADJ: 2, FEQ: 3}
_INFIX = {EQ: "=", LT: "<", ADJ: "~"}


class SentenceError(ValueError):
    """Base class for rejected sentence text."""


class ParseError(SentenceError):
    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        msg = f"at offset {position}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class FreeVariableError(SentenceError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} is not bound by any quantifier")


class VocabularyError(SentenceError):
    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        super().__init__(detail or f"atom kind {kind!r} is not in this vocabulary")


# --- AST -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Atom:
    kind: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if len(self.args) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} arguments")


@dataclass(frozen=True, slots=True)
class Not:
    child: Formula


@dataclass(frozen=True, slots=True)
class And:
    children: tuple[Formula, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True, slots=True)
class Or:
    children: tuple[Formula, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


@dataclass(frozen=True, slots=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: Formula


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    body: Formula


Formula = Union[Atom, Not, And, Or, Implies, Iff, Exists, Forall]
Quantifier = (Exists, Forall)


@dataclass(frozen=True)
class Sentence:
    """A closed formula tagged with its vocabulary and quantifier rank."""

    formula: Formula
    vocabulary: Vocabulary
    depth: int

    def __str__(self) -> str:
        return format_formula(self.formula)


# --- structural helpers ----------------------------------------------------

def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Not):
        return free_variables(f.child)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_variables(c) for c in f.children))
    if isinstance(f, (Implies, Iff)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, Quantifier):
        return free_variables(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def atom_kinds(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset({f.kind})
    if isinstance(f, Not):
        return atom_kinds(f.child)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(atom_kinds(c) for c in f.children))
    if isinstance(f, (Implies, Iff)):
        return atom_kinds(f.left) | atom_kinds(f.right)
    return atom_kinds(f.body)


def formula_depth(f: Formula) -> int:
    """Maximum nesting of quantifiers (quantifier rank)."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return formula_depth(f.child)
    if isinstance(f, (And, Or)):
        return max(formula_depth(c) for c in f.children)
    if isinstance(f, (Implies, Iff)):
        return max(formula_depth(f.left), formula_depth(f.right))
    return 1 + formula_depth(f.body)


def quantifier_depth(s: Sentence | Formula) -> int:
    if isinstance(s, Sentence):
        return s.depth
    return formula_depth(s)


def desugar(f: Formula) -> Formula:
    """Rewrite ``->`` and ``<->`` in terms of ``!``, ``&`` and ``|``.

    Input without implications comes back as an equal AST.
    """
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.child))
    if isinstance(f, And):
        return And(tuple(desugar(c) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(desugar(c) for c in f.children))
    if isinstance(f, Implies):
        return Or((Not(desugar(f.left)), desugar(f.right)))
    if isinstance(f, Iff):
        a, b = desugar(f.left), desugar(f.right)
        return And((Or((Not(a), b)), Or((Not(b), a))))
    return type(f)(f.var, desugar(f.body))


def make_sentence(f: Formula, vocabulary: Vocabulary) -> Sentence:
    """Validate a formula AST as a sentence of ``vocabulary``."""
    bad = atom_kinds(f) - ALLOWED_ATOMS[vocabulary]
    if bad:
        raise VocabularyError(sorted(bad)[0])
    free = free_variables(f)
    if free:
        raise FreeVariableError(sorted(free)[0])
    return Sentence(f, vocabulary, formula_depth(f))


# --- pretty printer --------------------------------------------------------

# Binding strength of the outermost construct; quantifiers bind loosest.
_PREC_QUANT, _PREC_IFF, _PREC_IMP, _PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = range(7)


def _prec(f: Formula) -> int:
    if isinstance(f, Atom):
        return _PREC_ATOM
    if isinstance(f, Not):
        return _PREC_NOT
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, Implies):
        return _PREC_IMP
    if isinstance(f, Iff):
        return _PREC_IFF
    return _PREC_QUANT


def _wrap(f: Formula, min_prec: int) -> str:
    text = format_formula(f)
    return text if _prec(f) >= min_prec else f"({text})"


def format_formula(f: Formula) -> str:
    """Render ``f`` in the surface syntax; ``parse_formula`` inverts it."""
    if isinstance(f, Atom):
        if f.kind == FEQ:
            a, b, c = f.args
            return f"F({a}, {b}) = {c}"
        return f"{f.args[0]} {_INFIX[f.kind]} {f.args[1]}"
    if isinstance(f, Not):
        return "!" + _wrap(f.child, _PREC_NOT)
    if isinstance(f, And):
        return " & ".join(_wrap(c, _PREC_AND + 1) for c in f.children)
    if isinstance(f, Or):
        return " | ".join(_wrap(c, _PREC_OR + 1) for c in f.children)
    if isinstance(f, Implies):
        return f"{_wrap(f.left, _PREC_IMP + 1)} -> {_wrap(f.right, _PREC_IMP)}"
    if isinstance(f, Iff):
        return f"{_wrap(f.left, _PREC_IFF)} <-> {_wrap(f.right, _PREC_IFF + 1)}"
    word = "exists" if isinstance(f, Exists) else "forall"
    return f"{word} {f.var}. {format_formula(f.body)}"


# --- parser ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><->|->|[.()=<~!&|,])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)
_KEYWORDS = {"exists", "forall"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(pos, "a token", text[pos])
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "ident" and value in _KEYWORDS:
                kind = "kw"
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> tuple[str, str, int]:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, found, pos = self.peek()
        if found != value or kind not in ("op",):
            raise ParseError(pos, repr(value), found or "end of input")
        self.advance()

    def ident(self) -> str:
        kind, value, pos = self.peek()
        if kind != "ident":
            raise ParseError(pos, "a variable name", value or "end of input")
        self.advance()
        return value

    def formula(self) -> Formula:
        kind, value, _ = self.peek()
        if kind == "kw":
            self.advance()
            var = self.ident()
            self.expect(".")
            body = self.formula()
            return Exists(var, body) if value == "exists" else Forall(var, body)
        return self.iff()

    def iff(self) -> Formula:
        left = self.imp()
        while self.peek()[1] == "<->":
            self.advance()
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek()[1] == "->":
            self.advance()
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        items = [self.conj()]
        while self.peek()[1] == "|":
            self.advance()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self) -> Formula:
        items = [self.neg()]
        while self.peek()[1] == "&":
            self.advance()
            items.append(self.neg())
        return items[0] if len(items) == 1 else And(tuple(items))

    def neg(self) -> Formula:
        kind, value, pos = self.peek()
        if value == "!" and kind == "op":
            self.advance()
            return Not(self.neg())
        if value == "(" and kind == "op":
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if kind == "kw":
            raise ParseError(pos, "'(' around a quantified operand", value)
        return self.atom()

    def atom(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "ident" and value == "F" and self.peek(1)[1] == "(":
            self.advance()
            self.advance()
            a = self._function_arg()
            self.expect(",")
            b = self._function_arg()
            self.expect(")")
            self.expect("=")
            return Atom(FEQ, (a, b, self.ident()))
        left = self.ident()
        kind, op, pos = self.peek()
        kinds = {"=": EQ, "<": LT, "~": ADJ}
        if kind != "op" or op not in kinds:
            raise ParseError(pos, "'=', '<' or '~'", op or "end of input")
        self.advance()
        return Atom(kinds[op], (left, self.ident()))

    def _function_arg(self) -> str:
        if self.peek()[1] == "F" and self.peek(1)[1] == "(":
            raise VocabularyError(FEQ, "nested function terms are not supported; "
                                       "name the inner value with an existential")
        return self.ident()


def parse_formula(text: str) -> Formula:
    """Parse formula text without closedness or vocabulary checks."""
    p = _Parser(text)
    f = p.formula()
    kind, value, pos = p.peek()
    if kind != "eof":
        raise ParseError(pos, "end of input", value)
    return f


def parse_sentence(text: str, vocabulary: Vocabulary = Vocabulary.GRAPH_ORDER) -> Sentence:
    return make_sentence(parse_formula(text), vocabulary)
