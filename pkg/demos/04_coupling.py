#! /usr/bin/env python3
"""The coupling between a random n-structure and a random subset of a
larger host: both sides estimate the same probability."""

from zeroone.harness import coupling_identity_check
from zeroone.rng import Stream
from zeroone.syntax import Vocabulary, parse_sentence

for text, vocab in [("exists x. forall y. (x = y | x ~ y)", Vocabulary.GRAPH_ORDER),
                    ("exists x. F(x, x) = x", Vocabulary.BINARY_FUNCTION)]:
    s = parse_sentence(text, vocab)
    rep = coupling_identity_check(s, 4, 300, 3000, Stream(11))
    print(s)
    for r in rep.rows:
        extra = "" if r.undefined_fraction is None else \
            f"  undefined {r.undefined_fraction:.4f} (bound {r.undefined_bound:.4f})"
        print(f"  i={r.i}: direct {r.direct.estimate:.4f}  coupled {r.coupled.estimate:.4f}  "
              f"diff/se {r.difference / r.combined_stderr:+.2f}{extra}")
