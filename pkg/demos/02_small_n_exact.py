#! /usr/bin/env python3
"""Exact f(n) for small n by enumerating every graph, next to a seeded
Monte Carlo estimate. The deltas f(n+1) - f(n) are what the scan command
tracks for larger n."""

from zeroone.harness import estimate_f, exact_f
from zeroone.rng import Stream
from zeroone.syntax import parse_sentence

sentence = parse_sentence("exists x. exists y. exists z. x ~ y & y ~ z & x ~ z")
stream = Stream(7)
prev = None
for n in range(1, 7):
    f = exact_f(sentence, n)
    mc = estimate_f(sentence, n, 5000, stream.branch(n))
    line = f"n={n}  exact {float(f):.5f}  mc {mc.estimate:.5f} +- {mc.stderr:.5f}"
    if prev is not None:
        line += f"  delta {float(f - prev):+.5f}"
    print(line)
    prev = f
