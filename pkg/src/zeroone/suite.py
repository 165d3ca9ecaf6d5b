"""Reference sentences used by the tests, demos and CLI defaults.

The graph sentences are chosen so that, apart from the two tautologies, none
holds with probability within 0.04 of 0 or 1 at 6 and 7 vertices; that
keeps three-sigma comparisons meaningful at a few thousand trials.
"""

from __future__ import annotations

from .syntax import Sentence, Vocabulary, parse_sentence

GRAPH_SENTENCES = (
    "exists x. x = x",
    "forall x. exists y. x ~ y",
    "exists x. exists y. x < y & !(x ~ y) & (forall z. (z ~ x <-> z ~ y))",
    "exists x. forall y. !(x ~ y)",
    "exists x. exists y. exists z. x ~ y & y ~ z & x ~ z",
    "exists x. exists y. (forall z. !(z < x)) & (forall z. !(y < z)) & x ~ y",
    "forall x. (exists y. x < y) -> (exists y. x < y & x ~ y)",
    "forall x. forall y. x ~ y -> (exists z. z ~ x & z ~ y)",
    "exists x. exists y. exists z. x < y & y < z & x ~ y & y ~ z & !(x ~ z)",
    "exists x. forall y. (x = y | x ~ y)",
    "forall x. exists y. (x ~ y <-> x < y)",
    "exists x. (exists y. x < y) & (forall y. (x < y -> x ~ y))",
    "exists x. (forall y. (y < x -> !(y ~ x))) & (forall y. (x < y -> x ~ y))",
)

FUNCTION_SENTENCES = (
    "exists x. x = x",
    "forall x. F(x, x) = x",
    "forall x. exists y. F(x, y) = x",
    "exists x. F(x, x) = x",
    "exists x. exists y. !(x = y) & F(x, y) = x",
    "forall x. forall y. F(x, y) = y -> F(y, x) = x",
)


def graph_suite() -> list[Sentence]:
    return [parse_sentence(t, Vocabulary.GRAPH_ORDER) for t in GRAPH_SENTENCES]


def function_suite() -> list[Sentence]:
    return [parse_sentence(t, Vocabulary.BINARY_FUNCTION) for t in FUNCTION_SENTENCES]
