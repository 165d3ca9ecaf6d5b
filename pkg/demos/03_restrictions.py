#! /usr/bin/env python3
"""One pass of the restriction pipeline on a compiled sentence: a random
pairing restriction, extension of the star set, then switching the bottom
two levels with canonical decision trees."""

from zeroone import compile_graph_sentence, parse_sentence, sample_graph
from zeroone.restriction import restriction_pipeline
from zeroone.rng import make_rng

rng = make_rng(3)
sentence = parse_sentence("forall x. forall y. x ~ y -> (exists z. z ~ x & z ~ y)")
host = sample_graph(21, 0.5, rng)
c = compile_graph_sentence(host, sentence)

for trial in range(5):
    rep = restriction_pipeline(c, rng)
    sw = rep.switch
    status = "no switch" if sw is None else f"{sw.failures} tree failures"
    print(f"trial {trial}: depth {rep.depth_before} -> {rep.depth_restricted} -> "
          f"{rep.depth_after}, stars {rep.stars_after_pairing} -> {rep.stars_after_extension}, "
          f"{status}, {rep.mismatches}/{rep.checked_completions} completion mismatches")
