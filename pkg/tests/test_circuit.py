import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeroone.circuit import (
    AND, CONST, LIT, OR, Circuit, CircuitBuilder, CircuitInvariantError, LayeredCircuit,
    TooLargeError, apply_restriction, check_levelled, circuit_stats, compile_function_sentence,
    compile_graph_sentence, conjoin, definedness_circuit, dumps_circuit, eval_batch,
    eval_circuit, exact_weight_probability, loads_circuit, mc_weight_probability,
    sample_weight_assignments, to_levelled,
)
from zeroone.models import (
    STAR, OrderedGraph, Restriction, induced_substructure, project_function,
    TernaryFunction, sample_ternary_function,
)
from zeroone.rng import make_rng
from zeroone.semantics import eval_function_sentence, eval_graph_sentence
from zeroone.syntax import Vocabulary, parse_sentence

from _support import all_subsets, random_circuit


def brute_weight_probability(c, i):
    """Average over every weight-``i`` assignment, one scalar evaluation at a time."""
    hits = 0
    for chosen in itertools.combinations(range(c.m), i):
        z = [k in chosen for k in range(c.m)]
        hits += eval_circuit(c, z)
    return Fraction(hits, comb(c.m, i))


# --- builder ---------------------------------------------------------------

def test_builder_hash_conses():
    b = CircuitBuilder(3)
    x, y = b.lit(1), b.lit(2)
    assert b.lit(1) == x
    assert b.and_([x, y]) == b.and_([x, y])


def test_builder_folds_constants():
    b = CircuitBuilder(2)
    x = b.lit(1)
    assert b.and_([x, b.const(True)]) == x
    assert b.gates[b.and_([x, b.const(False)])] == (CONST, False)
    assert b.gates[b.or_([x, b.const(True)])] == (CONST, True)
    assert b.gates[b.or_([])] == (CONST, False)
    assert b.gates[b.and_([])] == (CONST, True)


def test_builder_folds_complements_and_duplicates():
    b = CircuitBuilder(2)
    x, nx, y = b.lit(1), b.lit(1, False), b.lit(2)
    assert b.gates[b.and_([x, nx])] == (CONST, False)
    assert b.gates[b.or_([x, y, nx])] == (CONST, True)
    assert b.gates[b.or_([x, x, y])] == (OR, (x, y))
    assert b.or_([y, y]) == y


def test_builder_rejects_bad_variable():
    with pytest.raises(ValueError):
        CircuitBuilder(2).lit(3)


def test_build_prunes_unreachable():
    b = CircuitBuilder(3)
    b.and_([b.lit(1), b.lit(2)])
    c = b.build(b.lit(3))
    assert c.gates == ((LIT, 3, True),)


@pytest.mark.parametrize("gates, output", [
    (((LIT, 1, True), (AND, (0, 2)), (LIT, 2, True)), 1),
    (((AND, ()),), 0),
    (((LIT, 4, True),), 0),
    (((LIT, 1, True),), 1),
    ((("xor", (0,)),), 0),
])
def test_invalid_circuits_rejected(gates, output):
    with pytest.raises(CircuitInvariantError):
        Circuit(3, gates, output)


# --- evaluation ------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_batch_matches_scalar(seed):
    rng = make_rng(seed, "batch")
    c = random_circuit(rng, 6, n_gates=15)
    z = np.array(list(itertools.product((False, True), repeat=6)))
    assert eval_batch(c, z).tolist() == [eval_circuit(c, row) for row in z]


def test_eval_checks_length():
    c = Circuit(3, ((LIT, 1, True),), 0)
    with pytest.raises(ValueError):
        eval_circuit(c, [True])


@pytest.mark.parametrize("seed", range(20))
def test_restriction_then_completion(seed):
    rng = make_rng(seed, "restrict")
    m = 7
    c = random_circuit(rng, m, n_gates=15)
    values = rng.choice([0, 1, STAR], size=m).astype(np.int8)
    rho = Restriction(values)
    r = apply_restriction(c, rho)
    assert set(r.variables()) <= set(rho.stars())
    for bits in itertools.product((False, True), repeat=len(rho.stars())):
        z = rho.complete(bits)
        assert eval_circuit(r, z) == eval_circuit(c, z)


# --- compilers -------------------------------------------------------------

def test_compile_no_isolated_vertex_path():
    # path 1 - 2 - 3: every nonempty subset without an isolated vertex is {1,2}, {2,3}, {1,2,3}
    g = OrderedGraph.from_edges(3, [(1, 2), (2, 3)])
    c = compile_graph_sentence(g, parse_sentence("forall x. exists y. x ~ y"))
    good = {s.members for s in all_subsets(3) if eval_circuit(c, s.indicator())}
    assert good == {(), (1, 2), (2, 3), (1, 2, 3)}


def test_compile_smallest_sentence_is_or_of_inputs():
    c = compile_graph_sentence(OrderedGraph.empty(4), parse_sentence("exists x. x = x"))
    assert c.output_gate == (OR, tuple(range(4)))
    assert exact_weight_probability(c, 0) == 0
    assert all(exact_weight_probability(c, i) == 1 for i in range(1, 5))


@pytest.mark.parametrize("k", range(12))
def test_graph_compiler_matches_oracle(graph_sentences, fixture_graphs, k):
    g = fixture_graphs[k]
    for s in graph_sentences:
        c = compile_graph_sentence(g, s)
        for sub in all_subsets(g.size):
            assert eval_circuit(c, sub.indicator()) == \
                eval_graph_sentence(induced_substructure(g, sub), s)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_function_compiler_matches_oracle(function_sentences, m):
    rng = make_rng(17, m)
    for _ in range(6):
        f = sample_ternary_function(m, rng)
        defined = definedness_circuit(f)
        circuits = [compile_function_sentence(f, s) for s in function_sentences]
        for sub in all_subsets(m):
            if not sub.members:
                continue
            proj = project_function(f, sub)
            assert eval_circuit(defined, sub.indicator()) == proj.totally_defined
            if not proj.totally_defined:
                continue
            for s, c in zip(function_sentences, circuits):
                assert eval_circuit(c, sub.indicator()) == eval_function_sentence(proj, s)


def test_function_atom_structure():
    # F(x, y, z) = 1 for every z: F(1, 1) = 1 holds exactly when z_1 is set
    m = 2
    f = TernaryFunction(np.ones((m, m, m), dtype=int))
    s = parse_sentence("exists x. F(x, x) = x", Vocabulary.BINARY_FUNCTION)
    c = compile_function_sentence(f, s)
    for sub in all_subsets(m):
        assert eval_circuit(c, sub.indicator()) == (1 in sub.members)


def test_compilers_check_vocabulary():
    with pytest.raises(ValueError):
        compile_graph_sentence(OrderedGraph.empty(2),
                               parse_sentence("exists x. x = x", Vocabulary.BINARY_FUNCTION))


def test_conjoin():
    b = CircuitBuilder(2)
    c1 = b.build(b.lit(1))
    c2 = Circuit(2, ((LIT, 2, False),), 0)
    c = conjoin(c1, c2)
    assert [eval_circuit(c, z) for z in itertools.product((False, True), repeat=2)] == \
        [False, False, True, False]


# --- levelling -------------------------------------------------------------

@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize("bottom", [OR, AND])
def test_levelling_preserves_function(seed, bottom):
    rng = make_rng(seed, "level")
    c = random_circuit(rng, 6, n_gates=18)
    lc = to_levelled(c, bottom)
    check_levelled(lc)
    orig = circuit_stats(c).depth
    assert lc.depth <= 2 * orig + 1
    if lc.depth:
        kinds = {lc.kind_at(lv) for lv in range(1, lc.depth + 1, 2)} - {None}
        assert kinds <= {bottom}
    z = np.array(list(itertools.product((False, True), repeat=6)))
    assert np.array_equal(eval_batch(lc, z), eval_batch(c, z))


def test_check_levelled_catches_mixing():
    c = Circuit(2, ((LIT, 1, True), (LIT, 2, True), (AND, (0, 1)), (OR, (0, 1)),
                    (OR, (2, 3))), 4)
    with pytest.raises(CircuitInvariantError):
        check_levelled(LayeredCircuit(c, (0, 0, 1, 1, 2)))
    with pytest.raises(CircuitInvariantError):
        check_levelled(LayeredCircuit(c, (0, 0, 1, 2, 3)))


# --- weight probabilities --------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_exact_weight_matches_brute(seed):
    c = random_circuit(make_rng(seed, "weight"), 7, n_gates=12)
    for i in range(8):
        assert exact_weight_probability(c, i) == brute_weight_probability(c, i)


def test_exact_weight_literal():
    c = Circuit(10, ((LIT, 3, True),), 0)
    assert [exact_weight_probability(c, i) for i in range(11)] == \
        [Fraction(i, 10) for i in range(11)]


def test_exact_weight_with_support():
    c = Circuit(5, ((LIT, 1, True), (LIT, 5, True), (OR, (0, 1))), 2)
    assert exact_weight_probability(c, 1, support=[1, 2, 3]) == Fraction(1, 3)
    assert exact_weight_probability(c, 2, support=[2, 3, 4]) == 0


def test_exact_weight_limits():
    c = Circuit(30, ((LIT, 1, True),), 0)
    with pytest.raises(TooLargeError):
        exact_weight_probability(c, 15, limit=1000)
    with pytest.raises(ValueError):
        exact_weight_probability(c, 31)


def test_weight_sampler_is_exact_and_uniform():
    z = sample_weight_assignments(9, 4, 20000, make_rng(2))
    assert (z.sum(axis=1) == 4).all()
    freq = z.mean(axis=0)
    assert np.abs(freq - 4 / 9).max() < 4 * np.sqrt((4 / 9) * (5 / 9) / 20000)


@pytest.mark.parametrize("seed", range(4))
def test_mc_weight_matches_exact(seed):
    c = random_circuit(make_rng(seed, "mc"), 8, n_gates=14)
    exact = float(exact_weight_probability(c, 4))
    est, se = mc_weight_probability(c, 4, 20000, make_rng(seed, "mc-draws"))
    assert abs(est - exact) <= 4 * se + 1e-9


# --- stats and serialization ----------------------------------------------

def test_stats_count_gates_and_fanin():
    b = CircuitBuilder(4)
    t1 = b.or_([b.lit(1), b.lit(2)])
    t2 = b.or_([b.lit(3), b.lit(4), b.lit(1, False)])
    c = b.build(b.and_([t1, t2]))
    st_ = circuit_stats(c)
    assert (st_.depth, st_.gate_count, st_.total_gates) == (2, 3, 8)
    assert st_.level_counts == {1: 2, 2: 1}
    assert st_.max_level1_fanin == 3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dump_round_trip(seed):
    c = random_circuit(make_rng(seed, "dump"), 5, n_gates=10)
    back = loads_circuit(dumps_circuit(c), m=5)
    assert back == c


def test_dump_format():
    b = CircuitBuilder(2)
    c = b.build(b.and_([b.lit(1), b.lit(2, False)]))
    assert dumps_circuit(c) == "g0 = LIT + 1\ng1 = LIT - 2\ng2 = AND g0 g1\nOUTPUT g2\n"


def test_dump_rejects_bad_numbering():
    with pytest.raises(ValueError):
        loads_circuit("g1 = LIT + 1\nOUTPUT g1\n")

