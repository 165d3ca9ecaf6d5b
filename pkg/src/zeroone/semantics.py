"""Brute-force Tarskian model checking.

This is the reference everything else is compared against, so it stays a
direct recursion over the formula with no cleverness. Quantifiers over an
empty universe follow the usual convention: ``exists`` is false, ``forall``
is true.
"""

from __future__ import annotations

import numpy as np

from .models import BinaryFunction, OrderedGraph, PartialBinaryFunction
from .syntax import (
    EQ, LT, And, Atom, Exists, Forall, Formula, Iff, Implies, Not, Or,
    Sentence, Vocabulary,
)

ORACLE_BUDGET = 10 ** 9


class OracleBudgetError(RuntimeError):
    """The model is too large for exhaustive evaluation."""


class PartialModelError(ValueError):
    """A function model has undefined entries."""


def _check_budget(size: int, s: Sentence) -> None:
    if size ** s.depth > ORACLE_BUDGET:
        raise OracleBudgetError(
            f"{size}^{s.depth} bindings exceeds the oracle budget of {ORACLE_BUDGET}")


def _eval(f: Formula, env: dict[str, int], size: int, atom) -> bool:
    if isinstance(f, Atom):
        return atom(f.kind, [env[v] for v in f.args])
    if isinstance(f, Not):
        return not _eval(f.child, env, size, atom)
    if isinstance(f, And):
        return all(_eval(c, env, size, atom) for c in f.children)
    if isinstance(f, Or):
        return any(_eval(c, env, size, atom) for c in f.children)
    if isinstance(f, Implies):
        return (not _eval(f.left, env, size, atom)) or _eval(f.right, env, size, atom)
    if isinstance(f, Iff):
        return _eval(f.left, env, size, atom) == _eval(f.right, env, size, atom)
    if isinstance(f, Exists):
        return any(_eval(f.body, {**env, f.var: e}, size, atom) for e in range(1, size + 1))
    if isinstance(f, Forall):
        return all(_eval(f.body, {**env, f.var: e}, size, atom) for e in range(1, size + 1))
    raise TypeError(f"not a formula: {f!r}")


def eval_graph_sentence(g: OrderedGraph, s: Sentence) -> bool:
    if s.vocabulary is not Vocabulary.GRAPH_ORDER:
        raise ValueError("sentence is not in the graph vocabulary")
    _check_budget(g.size, s)
    adj = g.adjacency

    def atom(kind, args):
        x, y = args
        if kind == EQ:
            return x == y
        if kind == LT:
            return x < y
        return bool(adj[x - 1, y - 1])

    return _eval(s.formula, {}, g.size, atom)


def eval_function_sentence(f: BinaryFunction | PartialBinaryFunction, s: Sentence) -> bool:
    """Evaluate on a total binary function; partial inputs are relabelled first."""
    if s.vocabulary is not Vocabulary.BINARY_FUNCTION:
        raise ValueError("sentence is not in the function vocabulary")
    if isinstance(f, PartialBinaryFunction):
        if not f.totally_defined:
            raise PartialModelError("function has undefined entries")
        f = f.relabelled()
    _check_budget(f.size, s)
    table = f.table

    def atom(kind, args):
        if kind == EQ:
            return args[0] == args[1]
        x, y, z = args
        return int(table[x - 1, y - 1]) == z

    return _eval(s.formula, {}, f.size, atom)


def eval_graph_sentence_batch(adjacency: np.ndarray, s: Sentence) -> np.ndarray:
    """Evaluate ``s`` on a stack of graphs at once.

    ``adjacency`` has shape ``(B, m, m)``; returns a boolean vector of
    length ``B``. Same recursion as :func:`eval_graph_sentence`, with each
    truth value replaced by a vector over the batch.
    """
    if s.vocabulary is not Vocabulary.GRAPH_ORDER:
        raise ValueError("sentence is not in the graph vocabulary")
    adjacency = np.asarray(adjacency, dtype=bool)
    batch, size = adjacency.shape[0], adjacency.shape[1]
    _check_budget(size, s)
    true = np.ones(batch, dtype=bool)

    def ev(f: Formula, env: dict[str, int]) -> np.ndarray:
        if isinstance(f, Atom):
            x, y = (env[v] for v in f.args)
            if f.kind == EQ:
                return true if x == y else ~true
            if f.kind == LT:
                return true if x < y else ~true
            return adjacency[:, x - 1, y - 1]
        if isinstance(f, Not):
            return ~ev(f.child, env)
        if isinstance(f, And):
            return np.logical_and.reduce([ev(c, env) for c in f.children])
        if isinstance(f, Or):
            return np.logical_or.reduce([ev(c, env) for c in f.children])
        if isinstance(f, Implies):
            return ~ev(f.left, env) | ev(f.right, env)
        if isinstance(f, Iff):
            return ev(f.left, env) == ev(f.right, env)
        parts = [ev(f.body, {**env, f.var: e}) for e in range(1, size + 1)]
        if isinstance(f, Exists):
            return np.logical_or.reduce(parts) if parts else ~true
        return np.logical_and.reduce(parts) if parts else true

    return np.asarray(ev(s.formula, {}), dtype=bool)
