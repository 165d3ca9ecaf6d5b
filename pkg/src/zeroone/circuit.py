"""Unbounded fan-in AND/OR circuits over inputs ``z_1..z_m``.

Gates live in an append-only tuple; children always precede their parent.
Negation only occurs on literals. A gate is one of::

    ("const", bool)
    ("lit", var, positive)
    ("and", (child, ...))
    ("or", (child, ...))

Circuits built through :class:`CircuitBuilder` are hash-consed and
constant-folded, so structurally identical subcircuits share one gate.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, sqrt
from typing import Iterable, Sequence

import numpy as np

from .models import STAR, OrderedGraph, Restriction, TernaryFunction
from .syntax import (
    ADJ, EQ, FEQ, LT, And, Atom, Exists, Forall, Formula, Not, Or, Sentence, Vocabulary,
    VocabularyError, desugar, free_variables,
)

CONST, LIT, AND, OR = "const", "lit", "and", "or"
DUAL = {AND: OR, OR: AND}
EXACT_LIMIT = 10 ** 8
_CHUNK = 1 << 14


class TooLargeError(RuntimeError):
    """Exact enumeration would exceed the configured limit."""


class CircuitInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class Circuit:
    m: int
    gates: tuple[tuple, ...]
    output: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        validate(self)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def output_gate(self) -> tuple:
        return self.gates[self.output]

    def is_const(self) -> bool:
        return self.output_gate[0] == CONST

    def variables(self) -> list[int]:
        return sorted({g[1] for g in self.gates if g[0] == LIT})


@dataclass(frozen=True)
class LayeredCircuit:
    """A circuit with a level per gate; levels alternate between AND and OR."""

    circuit: Circuit
    levels: tuple[int, ...]

    @property
    def depth(self) -> int:
        return self.levels[self.circuit.output]

    @property
    def m(self) -> int:
        return self.circuit.m

    def kind_at(self, level: int) -> str | None:
        for g, lv in zip(self.circuit.gates, self.levels):
            if lv == level and g[0] in (AND, OR):
                return g[0]
        return None

    def gates_at(self, level: int) -> list[int]:
        return [i for i, lv in enumerate(self.levels) if lv == level]


def _as_circuit(c: Circuit | LayeredCircuit) -> Circuit:
    return c.circuit if isinstance(c, LayeredCircuit) else c


def validate(c: Circuit) -> None:
    if not 0 <= c.output < len(c.gates):
        raise CircuitInvariantError("output index out of range")
    for k, g in enumerate(c.gates):
        kind = g[0]
        if kind == CONST:
            if not isinstance(g[1], (bool, np.bool_)):
                raise CircuitInvariantError(f"g{k}: constant must be boolean")
        elif kind == LIT:
            if not 1 <= g[1] <= c.m:
                raise CircuitInvariantError(f"g{k}: variable {g[1]} out of range")
        elif kind in (AND, OR):
            if not g[1]:
                raise CircuitInvariantError(f"g{k}: {kind} gate without children")
            if any(not 0 <= ch < k for ch in g[1]):
                raise CircuitInvariantError(f"g{k}: children must precede their parent")
        else:
            raise CircuitInvariantError(f"g{k}: unknown gate kind {kind!r}")


class CircuitBuilder:
    """Hash-consing constructor with constant folding.

    ``and_``/``or_`` drop neutral constants, short-circuit on absorbing
    constants or complementary literals, remove duplicate children and
    collapse single-child gates.
    """

    def __init__(self, m: int):
        self.m = m
        self.gates: list[tuple] = []
        self._index: dict[tuple, int] = {}

    def _add(self, gate: tuple) -> int:
        k = self._index.get(gate)
        if k is None:
            k = len(self.gates)
            self.gates.append(gate)
            self._index[gate] = k
        return k

    def const(self, value: bool) -> int:
        return self._add((CONST, bool(value)))

    def lit(self, var: int, positive: bool = True) -> int:
        if not 1 <= var <= self.m:
            raise ValueError(f"variable {var} out of range 1..{self.m}")
        return self._add((LIT, int(var), bool(positive)))

    def gate(self, kind: str, children: Iterable[int]) -> int:
        absorbing = kind == OR
        seen: dict[int, None] = {}
        lits: set[tuple[int, bool]] = set()
        for ch in children:
            g = self.gates[ch]
            if g[0] == CONST:
                if g[1] == absorbing:
                    return self.const(absorbing)
                continue
            if g[0] == LIT:
                if (g[1], not g[2]) in lits:
                    return self.const(absorbing)
                lits.add((g[1], g[2]))
            seen[ch] = None
        kids = tuple(seen)
        if not kids:
            return self.const(not absorbing)
        if len(kids) == 1:
            return kids[0]
        return self._add((kind, kids))

    def and_(self, children: Iterable[int]) -> int:
        return self.gate(AND, children)

    def or_(self, children: Iterable[int]) -> int:
        return self.gate(OR, children)

    def copy_gate(self, gate: tuple, mapping: Sequence[int]) -> int:
        """Rebuild ``gate`` with children renumbered through ``mapping``."""
        kind = gate[0]
        if kind == CONST:
            return self.const(gate[1])
        if kind == LIT:
            return self.lit(gate[1], gate[2])
        return self.gate(kind, (mapping[ch] for ch in gate[1]))

    def build(self, output: int) -> Circuit:
        """Freeze the gates reachable from ``output``."""
        return _compact(self.m, self.gates, output)


def _compact(m: int, gates: Sequence[tuple], output: int) -> Circuit:
    live = [False] * len(gates)
    live[output] = True
    for k in range(output, -1, -1):
        if live[k] and gates[k][0] in (AND, OR):
            for ch in gates[k][1]:
                live[ch] = True
    renum: dict[int, int] = {}
    out: list[tuple] = []
    for k, g in enumerate(gates):
        if not live[k]:
            continue
        if g[0] in (AND, OR):
            g = (g[0], tuple(renum[ch] for ch in g[1]))
        renum[k] = len(out)
        out.append(g)
    return Circuit(m, tuple(out), renum[output])


# --- compilers -------------------------------------------------------------

class _Compiler:
    """Lower a sentence over a fixed host to a circuit in the membership bits.

    ``exists x. W`` becomes ``OR_x (z_x AND W*(x))`` and ``forall x. W``
    becomes ``AND_x (NOT z_x OR W*(x))``; negations are pushed to literals.
    Results are memoised per subformula, polarity and values of its free
    variables.
    """

    def __init__(self, m: int, atom):
        self.m = m
        self.b = CircuitBuilder(m)
        self.atom = atom
        self.memo: dict[tuple, int] = {}
        self.info: dict[int, tuple[type, tuple[str, ...]]] = {}

    def _index(self, f: Formula) -> None:
        self.info[id(f)] = (type(f), tuple(sorted(free_variables(f))))
        if isinstance(f, Not):
            self._index(f.child)
        elif isinstance(f, (And, Or)):
            for c in f.children:
                self._index(c)
        elif isinstance(f, (Exists, Forall)):
            self._index(f.body)

    def run(self, f: Formula) -> Circuit:
        f = desugar(f)
        self._root = f        # keeps ids in the memo alive
        self._index(f)
        self.true, self.false = self.b.const(True), self.b.const(False)
        return self.b.build(self.comp(f, {}, True))

    def comp(self, f: Formula, env: dict[str, int], positive: bool) -> int:
        kind, fv = self.info[id(f)]
        key = (id(f), positive, *[env[v] for v in fv])
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        b = self.b
        if kind is Atom:
            out = self.atom(b, f, [env[v] for v in f.args], positive)
        elif kind is Not:
            out = self.comp(f.child, env, not positive)
        elif kind is And or kind is Or:
            conj = (kind is And) == positive
            absorbing = self.false if conj else self.true
            kids = []
            for c in f.children:
                k = self.comp(c, env, positive)
                if k == absorbing:
                    # the remaining children cannot change the value
                    kids = [k]
                    break
                kids.append(k)
            out = b.and_(kids) if conj else b.or_(kids)
        elif kind is Exists or kind is Forall:
            existential = (kind is Exists) == positive
            skip = self.false if existential else self.true
            var = f.var
            saved = env.get(var)
            terms = []
            for x in range(1, self.m + 1):
                env[var] = x
                body = self.comp(f.body, env, positive)
                if body == skip:
                    continue
                guard = b.lit(x, existential)
                if body == self.true or body == self.false:
                    terms.append(guard)
                elif existential:
                    terms.append(b.and_((guard, body)))
                else:
                    terms.append(b.or_((guard, body)))
            if saved is None:
                del env[var]
            else:
                env[var] = saved
            out = b.or_(terms) if existential else b.and_(terms)
        else:
            raise TypeError(f"unexpected node {f!r}")
        self.memo[key] = out
        return out


def compile_graph_sentence(g: OrderedGraph, s: Sentence) -> Circuit:
    """Circuit in ``z_1..z_m`` that is true at ``1_S`` iff ``g`` restricted to ``S`` satisfies ``s``."""
    if s.vocabulary is not Vocabulary.GRAPH_ORDER:
        raise VocabularyError(FEQ, "graph compiler needs a graph-vocabulary sentence")
    adj = g.adjacency

    def atom(b: CircuitBuilder, a: Atom, args, positive):
        x, y = args
        if a.kind == EQ:
            value = x == y
        elif a.kind == LT:
            value = x < y
        elif a.kind == ADJ:
            value = bool(adj[x - 1, y - 1])
        else:
            raise VocabularyError(a.kind)
        return b.const(value == positive)

    return _Compiler(g.size, atom).run(s.formula)


def compile_function_sentence(f: TernaryFunction, s: Sentence) -> Circuit:
    """Circuit that is true at ``1_S`` iff the projection of ``f`` onto ``S`` satisfies ``s``.

    The atom ``F(a, b) = c`` holds when the first ``d`` with ``f(a, b, d)``
    in ``S`` has ``f(a, b, d) = c``: an OR over such ``d`` of
    ``AND_{y<d} NOT z_{f(a,b,y)}`` with ``z_c``. Where the projection is
    undefined the atom is false.
    """
    if s.vocabulary is not Vocabulary.BINARY_FUNCTION:
        raise VocabularyError(ADJ, "function compiler needs a function-vocabulary sentence")
    table = f.table.tolist()
    built: dict[tuple, int] = {}

    def atom(b: CircuitBuilder, a: Atom, args, positive):
        if a.kind == EQ:
            return b.const((args[0] == args[1]) == positive)
        if a.kind != FEQ:
            raise VocabularyError(a.kind)
        key = (*args, positive)
        if key not in built:
            built[key] = function_atom(b, table[args[0] - 1][args[1] - 1], args[2], positive)
        return built[key]

    def function_atom(b: CircuitBuilder, seq: list[int], c: int, positive: bool) -> int:
        terms = []
        for d, value in enumerate(seq):
            if value != c:
                continue
            lits = [(v, False) for v in seq[:d]] + [(c, True)]
            if positive:
                terms.append(b.and_(b.lit(v, s_) for v, s_ in lits))
            else:
                terms.append(b.or_(b.lit(v, not s_) for v, s_ in lits))
        return b.or_(terms) if positive else b.and_(terms)

    return _Compiler(f.size, atom).run(s.formula)


def definedness_circuit(f: TernaryFunction) -> Circuit:
    """True at ``1_S`` iff the projection of ``f`` onto ``S`` is total."""
    m = f.size
    b = CircuitBuilder(m)
    clauses = []
    for x in range(1, m + 1):
        for y in range(1, m + 1):
            hits = sorted({int(v) for v in f.table[x - 1, y - 1]})
            clauses.append(b.or_([b.lit(x, False), b.lit(y, False)] + [b.lit(v) for v in hits]))
    return b.build(b.and_(clauses))


def conjoin(*circuits: Circuit) -> Circuit:
    m = circuits[0].m
    b = CircuitBuilder(m)
    outs = []
    for c in circuits:
        if c.m != m:
            raise ValueError("circuits over different inputs")
        mapping: list[int] = []
        for g in c.gates:
            mapping.append(b.copy_gate(g, mapping))
        outs.append(mapping[c.output])
    return b.build(b.and_(outs))


# --- evaluation -------------------------------------------------------------

def eval_circuit(c: Circuit | LayeredCircuit, assignment: Sequence[bool]) -> bool:
    c = _as_circuit(c)
    if len(assignment) != c.m:
        raise ValueError(f"assignment has {len(assignment)} entries, circuit has {c.m} inputs")
    vals: list[bool] = []
    for g in c.gates:
        kind = g[0]
        if kind == CONST:
            vals.append(g[1])
        elif kind == LIT:
            vals.append(bool(assignment[g[1] - 1]) == g[2])
        elif kind == AND:
            vals.append(all(vals[ch] for ch in g[1]))
        else:
            vals.append(any(vals[ch] for ch in g[1]))
    return bool(vals[c.output])


def eval_batch(c: Circuit | LayeredCircuit, assignments: np.ndarray) -> np.ndarray:
    """Evaluate on every row of a ``(B, m)`` boolean matrix."""
    c = _as_circuit(c)
    z = np.asarray(assignments, dtype=bool)
    if z.ndim != 2 or z.shape[1] != c.m:
        raise ValueError("assignments must have shape (B, m)")
    batch = z.shape[0]
    vals: list[np.ndarray] = []
    for g in c.gates:
        kind = g[0]
        if kind == CONST:
            vals.append(np.full(batch, g[1]))
        elif kind == LIT:
            col = z[:, g[1] - 1]
            vals.append(col if g[2] else ~col)
        elif kind == AND:
            vals.append(np.logical_and.reduce([vals[ch] for ch in g[1]]))
        else:
            vals.append(np.logical_or.reduce([vals[ch] for ch in g[1]]))
    return vals[c.output]


def apply_restriction(c: Circuit | LayeredCircuit, rho: Restriction) -> Circuit:
    """Fix the decided inputs of ``rho`` and fold constants upward."""
    c = _as_circuit(c)
    if rho.host_size != c.m:
        raise ValueError("restriction and circuit have different input counts")
    b = CircuitBuilder(c.m)
    mapping: list[int] = []
    for g in c.gates:
        if g[0] == LIT and rho[g[1]] != STAR:
            mapping.append(b.const((rho[g[1]] == 1) == g[2]))
        else:
            mapping.append(b.copy_gate(g, mapping))
    return b.build(mapping[c.output])


# --- levelling --------------------------------------------------------------

def heights(c: Circuit) -> list[int]:
    h: list[int] = []
    for g in c.gates:
        h.append(1 + max(h[ch] for ch in g[1]) if g[0] in (AND, OR) else 0)
    return h


def to_levelled(c: Circuit | LayeredCircuit, bottom: str = OR) -> LayeredCircuit:
    """Insert single-child pass-through gates so levels are homogeneous and alternate.

    Level 1 gates are of kind ``bottom``. Each gate lands on the lowest level
    above its children whose kind matches its own, so depth at most doubles.
    """
    c = _as_circuit(c)
    if bottom not in DUAL:
        raise ValueError("bottom must be 'and' or 'or'")

    def kind_at(level: int) -> str:
        return bottom if level % 2 == 1 else DUAL[bottom]

    gates: list[tuple] = []
    levels: list[int] = []
    new_index: dict[int, int] = {}
    lifted: dict[tuple[int, int], int] = {}

    def lift(k: int, target: int) -> int:
        # new gate k, raised to ``target`` through unary gates
        if levels[k] == target:
            return k
        key = (k, target)
        if key not in lifted:
            below = lift(k, target - 1)
            gates.append((kind_at(target), (below,)))
            levels.append(target)
            lifted[key] = len(gates) - 1
        return lifted[key]

    live = _compact(c.m, c.gates, c.output)
    for k, g in enumerate(live.gates):
        if g[0] in (CONST, LIT):
            gates.append(g)
            levels.append(0)
        else:
            kids = [new_index[ch] for ch in g[1]]
            level = max(levels[ch] for ch in kids) + 1
            if kind_at(level) != g[0]:
                level += 1
            kids = [lift(ch, level - 1) for ch in kids]
            gates.append((g[0], tuple(kids)))
            levels.append(level)
        new_index[k] = len(gates) - 1
    lc = LayeredCircuit(Circuit(c.m, tuple(gates), new_index[live.output]), tuple(levels))
    check_levelled(lc)
    return lc


def check_levelled(lc: LayeredCircuit) -> None:
    c = lc.circuit
    if len(lc.levels) != len(c.gates):
        raise CircuitInvariantError("one level per gate required")
    kinds: dict[int, str] = {}
    for k, (g, lv) in enumerate(zip(c.gates, lc.levels)):
        if g[0] in (CONST, LIT):
            if lv != 0:
                raise CircuitInvariantError(f"g{k}: inputs must sit at level 0")
            continue
        if lv < 1 or any(lc.levels[ch] != lv - 1 for ch in g[1]):
            raise CircuitInvariantError(f"g{k}: children must sit one level below")
        if kinds.setdefault(lv, g[0]) != g[0]:
            raise CircuitInvariantError(f"level {lv} mixes gate kinds")
    for lv, kind in kinds.items():
        if lv + 1 in kinds and kinds[lv + 1] == kind:
            raise CircuitInvariantError(f"levels {lv} and {lv + 1} do not alternate")


# --- weighted-input probabilities ------------------------------------------

def exact_weight_probability(c: Circuit | LayeredCircuit, i: int,
                             support: Sequence[int] | None = None,
                             limit: int = EXACT_LIMIT) -> Fraction:
    """Probability that ``c`` holds when exactly ``i`` uniformly chosen inputs are true.

    With ``support`` the ``i`` true inputs are drawn from those variables only
    and every other input is false.
    """
    c = _as_circuit(c)
    pool = list(range(1, c.m + 1)) if support is None else sorted(support)
    k = len(pool)
    if not 0 <= i <= k:
        raise ValueError(f"weight {i} outside 0..{k}")
    total = comb(k, i)
    if total > limit:
        raise TooLargeError(f"C({k},{i}) = {total} assignments exceeds {limit}")
    hits = 0
    if total <= _CHUNK:
        # small enumerations recur across hosts of the same size; keep them
        return Fraction(int(eval_batch(c, _small_weight_matrix(c.m, tuple(pool), i)).sum()),
                        total)
    for z in _weight_chunks(c.m, tuple(pool), i):
        hits += int(eval_batch(c, z).sum())
    return Fraction(hits, total)


def _weight_chunks(m: int, pool: tuple[int, ...], i: int) -> Iterable[np.ndarray]:
    """Every assignment with exactly ``i`` true inputs drawn from ``pool``, in chunks."""
    cols = np.array(pool, dtype=np.int64) - 1
    combos = itertools.combinations(range(len(pool)), i)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        z = np.zeros((len(chunk), m), dtype=bool)
        if i:
            z[np.arange(len(chunk))[:, None], cols[np.array(chunk)]] = True
        yield z


@lru_cache(maxsize=64)
def _small_weight_matrix(m: int, pool: tuple[int, ...], i: int) -> np.ndarray:
    (z,) = _weight_chunks(m, pool, i)
    z.setflags(write=False)
    return z


def sample_weight_assignments(m: int, i: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """``(trials, m)`` matrix; each row has exactly ``i`` true entries, uniformly placed."""
    order = rng.permuted(np.tile(np.arange(m), (trials, 1)), axis=1)
    z = np.zeros((trials, m), dtype=bool)
    if i:
        z[np.arange(trials)[:, None], order[:, :i]] = True
    return z


def mc_weight_probability(c: Circuit | LayeredCircuit, i: int, trials: int,
                          rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the weight-``i`` acceptance probability and its standard error."""
    c = _as_circuit(c)
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= i <= c.m:
        raise ValueError(f"weight {i} outside 0..{c.m}")
    hits = 0
    done = 0
    while done < trials:
        b = min(_CHUNK, trials - done)
        hits += int(eval_batch(c, sample_weight_assignments(c.m, i, b, rng)).sum())
        done += b
    p = hits / trials
    return p, sqrt(p * (1 - p) / trials)


# --- statistics and dumps ---------------------------------------------------

@dataclass(frozen=True)
class CircuitStats:
    depth: int
    gate_count: int                   # AND/OR gates
    total_gates: int                  # including literals and constants
    level_counts: dict[int, int] = field(default_factory=dict)
    level1_fanin: Counter = field(default_factory=Counter)

    @property
    def max_level1_fanin(self) -> int:
        return max(self.level1_fanin, default=0)


def circuit_stats(c: Circuit | LayeredCircuit) -> CircuitStats:
    if isinstance(c, LayeredCircuit):
        levels, circ = list(c.levels), c.circuit
    else:
        circ = _compact(c.m, c.gates, c.output)
        levels = heights(circ)
    counts = Counter(lv for g, lv in zip(circ.gates, levels) if g[0] in (AND, OR))
    fanin = Counter(len(g[1]) for g, lv in zip(circ.gates, levels)
                    if lv == 1 and g[0] in (AND, OR))
    return CircuitStats(
        depth=levels[circ.output],
        gate_count=sum(counts.values()),
        total_gates=len(circ.gates),
        level_counts=dict(sorted(counts.items())),
        level1_fanin=fanin,
    )


def dumps_circuit(c: Circuit | LayeredCircuit) -> str:
    c = _as_circuit(c)
    lines = []
    for k, g in enumerate(c.gates):
        if g[0] == CONST:
            lines.append(f"g{k} = CONST {int(g[1])}")
        elif g[0] == LIT:
            lines.append(f"g{k} = LIT {'+' if g[2] else '-'} {g[1]}")
        else:
            lines.append(f"g{k} = {g[0].upper()} " + " ".join(f"g{ch}" for ch in g[1]))
    lines.append(f"OUTPUT g{c.output}")
    return "\n".join(lines) + "\n"


def loads_circuit(text: str, m: int | None = None) -> Circuit:
    """Parse a circuit dump; ``m`` defaults to the largest variable mentioned."""
    gates: list[tuple] = []
    output = None
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("OUTPUT"):
            output = int(ln.split()[1][1:])
            continue
        name, rhs = (t.strip() for t in ln.split("=", 1))
        if int(name[1:]) != len(gates):
            raise ValueError(f"gates must be numbered consecutively: {ln!r}")
        parts = rhs.split()
        if parts[0] == "CONST":
            gates.append((CONST, parts[1] == "1"))
        elif parts[0] == "LIT":
            gates.append((LIT, int(parts[2]), parts[1] == "+"))
        elif parts[0] in ("AND", "OR"):
            gates.append((parts[0].lower(), tuple(int(p[1:]) for p in parts[1:])))
        else:
            raise ValueError(f"unknown gate line {ln!r}")
    if output is None:
        raise ValueError("missing OUTPUT line")
    if m is None:
        m = max((g[1] for g in gates if g[0] == LIT), default=0)
    return Circuit(m, tuple(gates), output)
