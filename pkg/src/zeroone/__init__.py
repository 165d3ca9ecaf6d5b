"""Finite experiments on first-order sentences over ordered random graphs and
random binary functions: model checking, circuit compilation, random
restrictions and estimates of how P(sentence holds) moves with the size."""

from .circuit import (
    Circuit, CircuitBuilder, LayeredCircuit, TooLargeError, apply_restriction, circuit_stats,
    compile_function_sentence, compile_graph_sentence, eval_batch, eval_circuit,
    exact_weight_probability, mc_weight_probability, to_levelled,
)
from .models import (
    OrderedGraph, PartialBinaryFunction, Restriction, SubsetSelection, TernaryFunction,
    induced_substructure, project_function, sample_graph, sample_subset_exact,
    sample_ternary_function,
)
from .rng import Stream
from .semantics import eval_function_sentence, eval_graph_sentence
from .syntax import Sentence, Vocabulary, desugar, parse_sentence, quantifier_depth

__version__ = "0.1.0"
