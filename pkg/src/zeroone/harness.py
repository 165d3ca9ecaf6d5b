"""Estimators for f_A(n), the coupled g_{G,A}(i), and delta scans.

Every Monte Carlo trial draws from its own branch of a :class:`Stream`, keyed
by the trial index, so results do not depend on how trials are scheduled
across workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import (
    TooLargeError, compile_function_sentence, compile_graph_sentence, conjoin,
    definedness_circuit, eval_batch, exact_weight_probability, sample_weight_assignments,
)
from .models import (
    BinaryFunction, OrderedGraph, TernaryFunction, sample_binary_function, sample_graph,
    sample_ternary_function, undefinedness_bound,
)
from .rng import Stream
from .semantics import eval_function_sentence, eval_graph_sentence, eval_graph_sentence_batch
from .syntax import Sentence, Vocabulary

GRAPH, FUNCTION = "graph", "func"
CSV_HEADER = ("experiment", "n", "quantity", "estimate", "stderr", "trials", "seed")
_BLOCK = 512
FOOTER = ("note: a finite scan cannot establish or refute f(n+1) - f(n) -> 0; "
          "the 3-sigma and 4-stderr flags are reporting conventions only")


@dataclass(frozen=True)
class EstimateRow:
    experiment: str
    n: int
    quantity: str
    estimate: float
    stderr: float
    trials: int
    seed: int

    def as_tuple(self) -> tuple:
        return (self.experiment, self.n, self.quantity, repr(float(self.estimate)),
                repr(float(self.stderr)), self.trials, self.seed)


@dataclass(frozen=True)
class ExperimentSpec:
    model: str
    sentence: str
    n_values: tuple[int, ...]
    trials: int
    seed: int
    p: float = 0.5
    out: str | None = None

    def __post_init__(self):
        if not self.n_values:
            raise ValueError("n range is empty")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.model not in (GRAPH, FUNCTION):
            raise ValueError(f"unknown model {self.model!r}")


def bernoulli_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def model_of(sentence: Sentence) -> str:
    return GRAPH if sentence.vocabulary is Vocabulary.GRAPH_ORDER else FUNCTION


def _run(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


# --- direct sampling of f(n) -------------------------------------------------

def _direct_trial(stream: Stream, sentence: Sentence, n: int, p: float, trial: int) -> bool:
    rng = stream.branch(trial).generator()
    if sentence.vocabulary is Vocabulary.GRAPH_ORDER:
        g = sample_graph(n, p, rng) if n else OrderedGraph.empty(0)
        return eval_graph_sentence(g, sentence)
    return eval_function_sentence(sample_binary_function(n, rng), sentence)


def _direct_block(stream: Stream, sentence: Sentence, n: int, p: float,
                  trials: range) -> int:
    """Hits over a block of trials; graph blocks go through the batched oracle."""
    if sentence.vocabulary is not Vocabulary.GRAPH_ORDER or n == 0:
        return sum(_direct_trial(stream, sentence, n, p, t) for t in trials)
    adj = np.stack([sample_graph(n, p, stream.branch(t).generator()).adjacency
                    for t in trials])
    return int(eval_graph_sentence_batch(adj, sentence).sum())


def estimate_f(sentence: Sentence, n: int, trials: int, stream: Stream, p: float = 0.5,
               experiment: str = "f", quantity: str = "f(n)", workers: int = 1) -> EstimateRow:
    """Sample ``trials`` random structures of size ``n`` and check ``sentence`` on each.

    Trial ``t`` always uses ``stream.branch(t)``, so the result does not
    depend on ``workers`` or on how trials are blocked.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    blocks = [range(a, min(a + _BLOCK, trials)) for a in range(0, trials, _BLOCK)]
    fn = partial(_direct_block, stream, sentence, n, p)
    hits = sum(_run(fn, blocks, workers))
    est = hits / trials
    return EstimateRow(experiment, n, quantity, est, bernoulli_stderr(est, trials),
                       trials, stream.seed)


def _all_graphs(n: int, chunk: int = 1 << 14) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    """All labelled graphs on ``n`` vertices as ``(adjacency stack, edge counts)`` chunks."""
    iu = np.triu_indices(n, 1)
    e = len(iu[0])
    for start in range(0, 2 ** e, chunk):
        codes = np.arange(start, min(start + chunk, 2 ** e), dtype=np.int64)
        bits = ((codes[:, None] >> np.arange(e)) & 1).astype(bool)
        adj = np.zeros((len(codes), n, n), dtype=bool)
        adj[:, iu[0], iu[1]] = bits
        adj |= adj.transpose(0, 2, 1)
        yield adj, bits.sum(axis=1)


def exact_f(sentence: Sentence, n: int, p: float | Fraction = Fraction(1, 2),
            max_models: int = 1 << 21) -> Fraction:
    """``f_A(n)`` by enumerating every structure of size ``n``.

    Graph probabilities are weighted by ``p**edges * (1-p)**non_edges``
    with ``p`` taken as an exact rational.
    """
    if sentence.vocabulary is Vocabulary.GRAPH_ORDER:
        e = n * (n - 1) // 2
        if 2 ** e > max_models:
            raise TooLargeError(f"2^{e} graphs on {n} vertices exceeds {max_models}")
        p = Fraction(p)
        true_by_edges = [0] * (e + 1)
        if n == 0:
            return Fraction(int(eval_graph_sentence(OrderedGraph.empty(0), sentence)))
        for adj, edges in _all_graphs(n):
            ok = eval_graph_sentence_batch(adj, sentence)
            for k, c in zip(*np.unique(edges[ok], return_counts=True)):
                true_by_edges[int(k)] += int(c)
        return sum((c * p ** k * (1 - p) ** (e - k) for k, c in enumerate(true_by_edges)),
                   Fraction(0))
    count = n ** (n * n)
    if count > max_models:
        raise TooLargeError(f"{count} functions on {n} points exceeds {max_models}")
    hits = 0
    for values in itertools.product(range(1, n + 1), repeat=n * n):
        table = np.array(values, dtype=np.int64).reshape(n, n)
        hits += eval_function_sentence(BinaryFunction(table), sentence)
    return Fraction(hits, count)


# --- the coupled quantity g(i) ------------------------------------------------

@dataclass(frozen=True)
class CoupledG:
    """``g(i)`` for one host; ``undefined_fraction`` only for function hosts."""

    estimate: float
    stderr: float
    trials: int
    exact: Fraction | None = None
    undefined_fraction: float | None = None
    holds_and_defined: float | None = None    # P(A and total) for function hosts
    defined: float | None = None              # P(total)


def _host_circuits(sentence: Sentence, host: OrderedGraph | TernaryFunction):
    if isinstance(host, OrderedGraph):
        return compile_graph_sentence(host, sentence), None
    c = compile_function_sentence(host, sentence)
    d = definedness_circuit(host)
    return conjoin(c, d), d


def coupled_g(sentence: Sentence, host: OrderedGraph | TernaryFunction, i: int,
              mode: str = "exact", trials: int = 0,
              rng: np.random.Generator | None = None) -> CoupledG:
    """Probability that the host restricted to a uniform ``i``-subset satisfies ``sentence``.

    Computed through the compiled circuit, not the oracle. For function hosts
    the subsets whose projection is not total are excluded and their share is
    reported.
    """
    circuit, defined = _host_circuits(sentence, host)
    return _coupled_from_circuits(circuit, defined, i, mode, trials, rng)


def _coupled_from_circuits(circuit, defined, i: int, mode: str, trials: int,
                           rng: np.random.Generator | None) -> CoupledG:
    if mode == "exact":
        a = exact_weight_probability(circuit, i)
        if defined is None:
            return CoupledG(float(a), 0.0, math.comb(circuit.m, i), exact=a)
        b = exact_weight_probability(defined, i)
        g = a / b if b else None
        return CoupledG(float(g) if g is not None else math.nan, 0.0, math.comb(circuit.m, i),
                        exact=g, undefined_fraction=float(1 - b),
                        holds_and_defined=float(a), defined=float(b))
    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")
    if trials < 1 or rng is None:
        raise ValueError("Monte Carlo mode needs trials >= 1 and an rng")
    m = circuit.m
    if defined is None:
        z = sample_weight_assignments(m, i, trials, rng)
        est = float(eval_batch(circuit, z).mean())
        return CoupledG(est, bernoulli_stderr(est, trials), trials)
    accepted = hits = drawn = 0
    while accepted < trials:
        if drawn > 1000 * trials:
            raise RuntimeError("almost no subsets give a total projection")
        z = sample_weight_assignments(m, i, trials, rng)
        ok = eval_batch(defined, z)
        sat = eval_batch(circuit, z)
        need = trials - accepted
        take = np.flatnonzero(ok)[:need]
        # count draws only up to the last one we keep
        drawn += int(take[-1]) + 1 if len(take) == need else len(z)
        accepted += len(take)
        hits += int(sat[take].sum())
    est = hits / trials
    return CoupledG(est, bernoulli_stderr(est, trials), trials,
                    undefined_fraction=1 - accepted / drawn,
                    holds_and_defined=hits / drawn, defined=accepted / drawn)


# --- coupling identity ---------------------------------------------------------

@dataclass(frozen=True)
class CouplingRow:
    i: int
    direct: EstimateRow
    coupled: EstimateRow
    undefined_fraction: float | None = None
    undefined_bound: float | None = None

    @property
    def difference(self) -> float:
        return self.direct.estimate - self.coupled.estimate

    @property
    def combined_stderr(self) -> float:
        # the plug-in stderr of a direct estimate at 0 or 1 is 0, which would make
        # the check demand exact agreement; shrink toward 1/2 by half a count instead
        d = self.direct
        shrunk = (d.estimate * d.trials + 0.5) / (d.trials + 1)
        return math.hypot(bernoulli_stderr(shrunk, d.trials), self.coupled.stderr)

    @property
    def within(self) -> bool:
        return abs(self.difference) <= 3 * self.combined_stderr + 1e-12


@dataclass(frozen=True)
class CouplingReport:
    sentence: str
    n: int
    rows: tuple[CouplingRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.within for r in self.rows)

    def estimate_rows(self) -> list[EstimateRow]:
        out = []
        for r in self.rows:
            tag = "n" if r.i == self.n else "n+1"
            out.append(r.direct)
            out.append(r.coupled)
            out.append(EstimateRow(r.direct.experiment, self.n, f"delta_fg({tag})",
                                   r.difference, r.combined_stderr,
                                   r.direct.trials, r.direct.seed))
        return out


def _host_sample(stream: Stream, sentence: Sentence, n: int, p: float,
                 subset_mode: str, subset_trials: int, h: int) -> list[tuple[float, float]]:
    """``(P(A and total), P(total))`` at ``i = n`` and ``n + 1`` for host ``h``."""
    rng = stream.branch(h).generator()
    m = 2 * n + 1
    host = (sample_graph(m, p, rng) if sentence.vocabulary is Vocabulary.GRAPH_ORDER
            else sample_ternary_function(m, rng))
    circuit, defined = _host_circuits(sentence, host)
    out = []
    for i in (n, n + 1):
        g = _coupled_from_circuits(circuit, defined, i, subset_mode, subset_trials, rng)
        if g.defined is None:
            out.append((g.estimate, 1.0))
        else:
            out.append((g.holds_and_defined, g.defined))
    return out


def coupling_identity_check(sentence: Sentence, n: int, host_trials: int, direct_trials: int,
                            stream: Stream, subset_mode: str = "exact",
                            subset_trials: int = 1, p: float = 0.5,
                            workers: int = 1, label: str | None = None) -> CouplingReport:
    """Compare direct ``f(i)`` with the host average of ``g(i)`` for ``i = n, n+1``.

    Hosts live on ``2n+1`` points. For function hosts the coupled value is the
    ratio of host averages of ``P(A and total)`` and ``P(total)``, which
    conditions on the projection being total.
    """
    label = label or f"couple[{model_of(sentence)}]: {sentence}"
    fn = partial(_host_sample, stream.branch("hosts"), sentence, n, p, subset_mode,
                 subset_trials)
    per_host = np.array(_run(fn, range(host_trials), workers))   # (H, 2, 2)
    rows = []
    for slot, i in enumerate((n, n + 1)):
        tag = "n" if i == n else "n+1"
        direct = estimate_f(sentence, i, direct_trials, stream.branch("direct", i), p,
                            experiment=label, quantity=f"f({tag})", workers=workers)
        direct = replace(direct, n=n)
        a = per_host[:, slot, 0]
        b = per_host[:, slot, 1]
        h = len(a)
        if b.mean() > 0:
            ratio = a.sum() / b.sum()
            resid = a - ratio * b
            se = math.sqrt(resid.var(ddof=1) / h) / b.mean() if h > 1 else 0.0
        else:
            ratio, se = math.nan, math.nan
        coupled = EstimateRow(label, n, f"g({tag})", float(ratio), float(se), h, stream.seed)
        undefined = bound = None
        if sentence.vocabulary is Vocabulary.BINARY_FUNCTION:
            undefined = float(1 - b.mean())
            bound = undefinedness_bound(2 * n + 1, i)
        rows.append(CouplingRow(i, direct, coupled, undefined, bound))
    return CouplingReport(str(sentence), n, tuple(rows))


# --- delta scans ------------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    rows: tuple[EstimateRow, ...]
    trend_flag: bool          # |delta| grew by more than 3 combined sigma, first to last n
    alternation_flag: bool    # deltas alternate in sign with |delta| > 4 stderr throughout
    footer: str = FOOTER

    def deltas(self) -> list[EstimateRow]:
        return [r for r in self.rows if r.quantity == "delta"]


def alternating_pattern(deltas: Sequence[EstimateRow], k: float = 4.0) -> bool:
    if len(deltas) < 3:
        return False
    if any(abs(d.estimate) <= k * d.stderr for d in deltas):
        return False
    signs = [math.copysign(1, d.estimate) for d in deltas]
    return all(a != b for a, b in zip(signs, signs[1:]))


def delta_scan(sentence: Sentence, n_values: Iterable[int], trials: int, stream: Stream,
               p: float = 0.5, workers: int = 1, label: str | None = None) -> ScanResult:
    """Estimate ``f(n)``, ``f(n+1)`` and their difference for each ``n``.

    The two sizes use independent branches of ``stream``.
    """
    label = label or f"scan[{model_of(sentence)}]: {sentence}"
    rows: list[EstimateRow] = []
    deltas: list[EstimateRow] = []
    for n in n_values:
        lo = estimate_f(sentence, n, trials, stream.branch("scan", n, 0), p, label, "f(n)",
                        workers)
        hi = estimate_f(sentence, n + 1, trials, stream.branch("scan", n, 1), p, label,
                        "f(n+1)", workers)
        hi = replace(hi, n=n)
        d = EstimateRow(label, n, "delta", hi.estimate - lo.estimate,
                        math.hypot(lo.stderr, hi.stderr), trials, stream.seed)
        rows += [lo, hi, d]
        deltas.append(d)
    trend = False
    if len(deltas) >= 2:
        first, last = deltas[0], deltas[-1]
        trend = abs(last.estimate) - abs(first.estimate) > 3 * math.hypot(first.stderr,
                                                                           last.stderr)
    return ScanResult(tuple(rows), trend, alternating_pattern(deltas))


# --- CSV ----------------------------------------------------------------------------

def format_csv(rows: Iterable[EstimateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_tuple())
    return buf.getvalue()


def emit_csv(rows: Iterable[EstimateRow], path: str | Path) -> None:
    text = format_csv(rows)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV report to {path}: {exc.strerror}") from exc


def read_csv(path: str | Path) -> list[EstimateRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [EstimateRow(e, int(n), q, float(est), float(se), int(t), int(s))
                for e, n, q, est, se, t, s in reader]
