"""Command line entry point: ``zeroone check|compile|prob|restrict|couple|scan``.

Exit codes: 0 success, 1 usage or input error, 2 exact computation
infeasible, 3 internal invariant violated.
"""

from __future__ import annotations

import argparse
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import harness
from .circuit import (
    CircuitInvariantError, TooLargeError, circuit_stats, compile_function_sentence,
    compile_graph_sentence, dumps_circuit, exact_weight_probability, loads_circuit,
    mc_weight_probability, to_levelled,
)
from .harness import EstimateRow
from .models import (
    OrderedGraph, SubsetSelection, TernaryFunction, induced_substructure, project_function,
    sample_graph, sample_ternary_function,
)
from .restriction import RestrictionConfig, restriction_pipeline
from .rng import Stream
from .semantics import OracleBudgetError, PartialModelError, eval_function_sentence, eval_graph_sentence
from .syntax import SentenceError, Vocabulary, parse_sentence

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sentence", help="sentence text, or a file containing it")
    p.add_argument("--model", choices=("graph", "func"), default="graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--p", type=float, default=0.5, help="edge probability (graph model)")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zeroone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="evaluate a sentence on a model file")
    _common(p)
    p.add_argument("--host", required=True, help="graph or ternary-function dump")
    p.add_argument("--subset", help="comma-separated elements to restrict/project to")

    p = sub.add_parser("compile", help="compile a sentence over a host to a circuit")
    _common(p)
    p.add_argument("--host", help="host dump; sampled from --seed when absent")
    p.add_argument("--m", type=int, default=7, help="host size when sampling")
    p.add_argument("--levelled", action="store_true")

    p = sub.add_parser("prob", help="f_C(i): acceptance probability at input weight i")
    _common(p)
    p.add_argument("--circuit", help="circuit dump (instead of --sentence/--host)")
    p.add_argument("--host")
    p.add_argument("--m", type=int, default=7)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--exact", action="store_true")

    p = sub.add_parser("restrict", help="pairing restriction, extension and switching")
    _common(p)
    p.add_argument("--m", type=int, default=21, help="odd host size 2n+1")
    p.add_argument("--t", type=float, default=2.0, help="size exponent")
    p.add_argument("--max-depth", type=int, help="decision tree depth cap (default k)")

    p = sub.add_parser("couple", help="direct f(i) against host-averaged g(i)")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--host-trials", type=int, help="default: --trials")
    p.add_argument("--subset-mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--subset-trials", type=int, default=1)

    p = sub.add_parser("scan", help="f(n+1) - f(n) over a range of n")
    _common(p)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--n-step", type=int, default=1)
    return parser


# --- helpers ----------------------------------------------------------------

def _vocab(args) -> Vocabulary:
    return Vocabulary.GRAPH_ORDER if args.model == "graph" else Vocabulary.BINARY_FUNCTION


def _sentence(args):
    if not args.sentence:
        raise UsageError("--sentence is required")
    text = args.sentence
    path = Path(text)
    if len(text) < 4096 and path.is_file():
        text = path.read_text(encoding="utf-8")
    return parse_sentence(text, _vocab(args))


def _load_host(args, m: int | None = None):
    if getattr(args, "host", None):
        text = Path(args.host).read_text(encoding="utf-8")
        return OrderedGraph.loads(text) if args.model == "graph" else TernaryFunction.loads(text)
    rng = Stream(args.seed).branch("host").generator()
    m = m or args.m
    return sample_graph(m, args.p, rng) if args.model == "graph" else sample_ternary_function(m, rng)


def _compile(args, sentence, host):
    if args.model == "graph":
        return compile_graph_sentence(host, sentence)
    return compile_function_sentence(host, sentence)


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_rows(rows, out: str | None) -> None:
    if out:
        harness.emit_csv(rows, out)
    else:
        sys.stdout.write(harness.format_csv(rows))


# --- subcommands ------------------------------------------------------------

def cmd_check(args) -> int:
    sentence = _sentence(args)
    host = _load_host(args)
    subset = None
    if args.subset:
        members = tuple(sorted(int(x) for x in args.subset.split(",") if x.strip()))
        subset = SubsetSelection(host.size, members)
    if args.model == "graph":
        g = induced_substructure(host, subset) if subset else host
        value = eval_graph_sentence(g, sentence)
    else:
        subset = subset or SubsetSelection(host.size, tuple(range(1, host.size + 1)))
        value = eval_function_sentence(project_function(host, subset), sentence)
    _write("true\n" if value else "false\n", args.out)
    return EXIT_OK


def cmd_compile(args) -> int:
    sentence = _sentence(args)
    host = _load_host(args)
    c = _compile(args, sentence, host)
    target = to_levelled(c) if args.levelled else c
    st = circuit_stats(target)
    _write(dumps_circuit(target), args.out)
    print(f"inputs={c.m} depth={st.depth} gates={st.gate_count} total={st.total_gates} "
          f"quantifier_depth={sentence.depth} size_bound={sentence.depth * c.m ** sentence.depth}",
          file=sys.stderr)
    return EXIT_OK


def cmd_prob(args) -> int:
    if args.circuit:
        c = loads_circuit(Path(args.circuit).read_text(encoding="utf-8"))
        label = f"prob: {args.circuit}"
    else:
        sentence = _sentence(args)
        c = _compile(args, sentence, _load_host(args))
        label = f"prob[{args.model}]: {sentence}"
    if not 0 <= args.i <= c.m:
        raise UsageError(f"--i must lie in 0..{c.m}")
    if args.exact:
        value = exact_weight_probability(c, args.i)
        row = EstimateRow(label, args.i, "f_C(i)", float(value), 0.0, math.comb(c.m, args.i),
                          args.seed)
    else:
        rng = Stream(args.seed).branch("prob").generator()
        est, se = mc_weight_probability(c, args.i, args.trials, rng)
        row = EstimateRow(label, args.i, "f_C(i)", est, se, args.trials, args.seed)
    _write_rows([row], args.out)
    return EXIT_OK


def cmd_restrict(args) -> int:
    sentence = _sentence(args)
    if args.m < 3 or args.m % 2 == 0:
        raise UsageError("--m must be odd and at least 3")
    config = RestrictionConfig(t=args.t)
    n = (args.m - 1) // 2
    label = f"restrict[{args.model}]: {sentence}"
    stream = Stream(args.seed).branch("restrict")
    sums: dict[str, list[float]] = defaultdict(list)
    per_fanin: dict[int, list[int]] = defaultdict(lambda: [0, 0])
    for trial in range(args.trials):
        rng = stream.branch(trial).generator()
        host = (sample_graph(args.m, args.p, rng) if args.model == "graph"
                else sample_ternary_function(args.m, rng))
        rep = restriction_pipeline(_compile(args, sentence, host), rng, config, args.max_depth)
        sums["depth_before"].append(rep.depth_before)
        sums["depth_restricted"].append(rep.depth_restricted)
        sums["stars_after_extension"].append(rep.stars_after_extension)
        sums["undecided_frac_pairing"].append(rep.survey_pairing.undecided_fraction)
        sums["undecided_frac_extension"].append(rep.survey_extension.undecided_fraction)
        sums["max_undecided_fanin"].append(rep.survey_extension.max_undecided_fanin)
        if rep.switch is not None:
            sums["switch_failure_rate"].append(rep.switch.failure_rate)
            sums["depth_reduced"].append(float(rep.depth_reduced))
        if rep.depth_after is not None:
            sums["mismatches"].append(rep.mismatches)
        for s, (gates, undecided) in rep.survey_pairing.by_fanin().items():
            per_fanin[s][0] += gates
            per_fanin[s][1] += undecided
        if rep.mismatches:
            raise CircuitInvariantError(f"switched circuit disagrees on trial {trial}")
    rows = []
    for q in ("depth_before", "depth_restricted", "stars_after_extension",
              "undecided_frac_pairing", "undecided_frac_extension", "max_undecided_fanin",
              "switch_failure_rate", "depth_reduced", "mismatches"):
        vals = np.asarray(sums.get(q, []), dtype=float)
        if len(vals) == 0:
            continue
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        rows.append(EstimateRow(label, n, q, float(vals.mean()), se, len(vals), args.seed))
    for s, (gates, undecided) in sorted(per_fanin.items()):
        frac = undecided / gates
        rows.append(EstimateRow(label, n, f"undecided(s={s})", frac,
                                harness.bernoulli_stderr(frac, gates), gates, args.seed))
        rows.append(EstimateRow(label, n, f"bound_3/4(s={s})", 0.75 ** s, 0.0, gates, args.seed))
        rows.append(EstimateRow(label, n, f"quoted_1/4(s={s})", 0.25 ** s, 0.0, gates, args.seed))
    _write_rows(rows, args.out)
    return EXIT_OK


def cmd_couple(args) -> int:
    sentence = _sentence(args)
    report = harness.coupling_identity_check(
        sentence, args.n, args.host_trials or args.trials, args.trials, Stream(args.seed),
        subset_mode=args.subset_mode, subset_trials=args.subset_trials, p=args.p,
        workers=args.workers)
    _write_rows(report.estimate_rows(), args.out)
    for r in report.rows:
        extra = ""
        if r.undefined_fraction is not None:
            extra = f" undefined={r.undefined_fraction:.4g} bound={r.undefined_bound:.4g}"
        print(f"i={r.i} diff={r.difference:+.4g} combined_se={r.combined_stderr:.4g} "
              f"{'ok' if r.within else 'OUTSIDE 3 sigma'}{extra}", file=sys.stderr)
    return EXIT_OK


def cmd_scan(args) -> int:
    sentence = _sentence(args)
    if args.n_min > args.n_max or args.n_step < 1:
        raise UsageError("need --n-min <= --n-max and --n-step >= 1")
    ns = range(args.n_min, args.n_max + 1, args.n_step)
    result = harness.delta_scan(sentence, ns, args.trials, Stream(args.seed), args.p,
                                workers=args.workers)
    _write_rows(result.rows, args.out)
    print(f"trend_flag={result.trend_flag} alternation_flag={result.alternation_flag}",
          file=sys.stderr)
    print(result.footer, file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check, "compile": cmd_compile, "prob": cmd_prob,
    "restrict": cmd_restrict, "couple": cmd_couple, "scan": cmd_scan,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (TooLargeError, OracleBudgetError) as exc:
        print(f"zeroone: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CircuitInvariantError, AssertionError) as exc:
        print(f"zeroone: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, SentenceError, PartialModelError, ValueError, OSError) as exc:
        print(f"zeroone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
