#! /usr/bin/env python3
"""Turn a sentence about a fixed host graph into a circuit over subset
indicators, then count exactly how often it holds on subsets of each size."""

from zeroone import compile_graph_sentence, exact_weight_probability, parse_sentence, sample_graph
from zeroone.circuit import circuit_stats, to_levelled
from zeroone.rng import make_rng

sentence = parse_sentence("forall x. exists y. x ~ y")
host = sample_graph(10, 0.5, make_rng(1))
print(f"host: {host.size} vertices, {int(host.adjacency.sum()) // 2} edges")

c = compile_graph_sentence(host, sentence)
st = circuit_stats(c)
print(f"circuit: depth {st.depth}, {st.gate_count} AND/OR gates")

lc = to_levelled(c)
print(f"levelled: depth {lc.depth}")

# the fraction of i-subsets on which the induced subgraph has no isolated vertex
for i in range(host.size + 1):
    g = exact_weight_probability(c, i)
    print(f"  i={i:2d}  g(i) = {str(g):>12s} ~ {float(g):.4f}")
