"""Random restrictions, fan-in surveys and decision-tree switching.

The circuit argument for depth reduction has three moving parts, each of
which is implemented here so it can be measured:

* balanced pairing restrictions that fix ``floor(n/2)`` disjoint pairs of a
  ``2n+1``-variable circuit to opposite values, and their extension down to
  a prescribed number of free positions;
* a survey of which bottom gates a restriction leaves undecided;
* inversion of a depth-2 AND/OR layer through canonical decision trees, and
  the single-flip experiment for circuits of depth at most two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import (
    AND, CONST, DUAL, LIT, OR, Circuit, CircuitBuilder, LayeredCircuit, _as_circuit,
    _compact, apply_restriction, circuit_stats, eval_batch, heights,
    sample_weight_assignments, to_levelled,
)
from .models import STAR, Restriction


class ShapeError(ValueError):
    """The circuit does not have the layered shape an operation needs."""


class ParityError(ValueError):
    """The requested star count cannot be reached by fixing whole pairs."""


class FaninError(ValueError):
    """A bottom gate has more inputs than the configured budget."""


class DepthExceeded(RuntimeError):
    """The canonical decision tree would be deeper than allowed."""

    def __init__(self, depth: int, cap: int):
        self.depth = depth
        self.cap = cap
        super().__init__(f"decision tree needs depth {depth} > cap {cap}")


@dataclass(frozen=True)
class RestrictionConfig:
    """Constants of the depth-reduction step.

    ``t`` is the size exponent (circuits of at most ``n**t`` gates).
    ``tolerance`` is the target error of the final statement, kept apart from
    ``star_exponent``, the exponent in the ``2*floor(n**e)+1`` star budget.
    """

    t: float = 2.0
    tolerance: float = 0.1
    star_exponent: float = 0.5
    c1: float | None = None
    n0: int = 8
    k_schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("t must be positive")
        if not 0 < self.star_exponent < 1:
            raise ValueError("star_exponent must lie in (0, 1)")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        ks = self.schedule
        if any(b < a for a, b in zip(ks, ks[1:])):
            raise ValueError("k schedule must be nondecreasing")

    @property
    def c0(self) -> float:
        return math.log(4) * self.t

    @property
    def k(self) -> int:
        return math.ceil(self.t / self.star_exponent - 1e-12)

    @property
    def inversion_factor(self) -> float:
        return self.c1 if self.c1 is not None else float(2 ** self.k)

    @property
    def schedule(self) -> tuple[int, ...]:
        if self.k_schedule is not None:
            return tuple(self.k_schedule)
        return tuple(self.k * 2 ** l for l in range(self.k + 1))

    def level_exponent(self, level: int) -> float:
        return 1.0 / 2 ** (1 + level)

    def star_target(self, n: int) -> int:
        if self.star_exponent == 0.5:
            root = math.isqrt(n)
        else:
            root = math.floor(n ** self.star_exponent + 1e-12)
        return 2 * root + 1

    def fanin_budget(self, n: int) -> float:
        """Bottom fan-in that survives the first restriction with high probability."""
        return self.c0 * math.log(n) if n > 1 else 0.0


@dataclass(frozen=True)
class PairingRestriction:
    """Disjoint pairs ``(i, j)`` fixed to opposite values; ``zero_first[p]`` means ``i -> 0``."""

    pairs: tuple[tuple[int, int], ...]
    zero_first: tuple[bool, ...]
    restriction: Restriction


def _pair_up(positions: Sequence[int], values: np.ndarray, rng: np.random.Generator):
    pairs = []
    orient = []
    flips = rng.integers(0, 2, size=len(positions) // 2)
    for p in range(len(positions) // 2):
        i, j = sorted((int(positions[2 * p]), int(positions[2 * p + 1])))
        zero_first = bool(flips[p])
        values[i - 1], values[j - 1] = (0, 1) if zero_first else (1, 0)
        pairs.append((i, j))
        orient.append(zero_first)
    return tuple(pairs), tuple(orient)


def sample_balanced_restriction(m: int, rng: np.random.Generator) -> PairingRestriction:
    """Fix ``floor(n/2)`` random disjoint pairs of ``1..2n+1`` to opposite values."""
    if m < 3 or m % 2 == 0:
        raise ValueError("m must be odd and at least 3")
    n = (m - 1) // 2
    chosen = rng.permutation(m)[: 2 * (n // 2)] + 1
    values = np.full(m, STAR, dtype=np.int8)
    pairs, orient = _pair_up(chosen, values, rng)
    return PairingRestriction(pairs, orient, Restriction(values))


def extend_restriction_stars(rho: Restriction, target_stars: int | None,
                             rng: np.random.Generator,
                             config: RestrictionConfig | None = None) -> Restriction:
    """Pair off free positions of ``rho`` until ``target_stars`` remain.

    The default target is ``config.star_target(n)`` for ``m = 2n+1``; if the
    pairing cannot hit it exactly one extra star is kept.
    """
    stars = rho.stars()
    if target_stars is None:
        config = config or RestrictionConfig()
        target_stars = config.star_target((rho.host_size - 1) // 2)
        if (len(stars) - target_stars) % 2:
            target_stars += 1
        target_stars = min(target_stars, len(stars))
    if target_stars > len(stars):
        raise ValueError(f"cannot grow stars from {len(stars)} to {target_stars}")
    surplus = len(stars) - target_stars
    if surplus % 2:
        raise ParityError(f"{surplus} surplus stars cannot be fixed in pairs")
    if surplus == 0:
        return rho
    chosen = rng.permutation(np.array(stars))[:surplus]
    values = np.array(rho.values, copy=True)
    _pair_up(chosen, values, rng)
    return Restriction(values)


# --- survey -------------------------------------------------------------------

@dataclass(frozen=True)
class GateSurvey:
    gate: int
    fanin: int
    decided: bool
    undecided_inputs: int


@dataclass(frozen=True)
class FaninSurvey:
    gates: tuple[GateSurvey, ...]

    @property
    def undecided_fraction(self) -> float:
        if not self.gates:
            return 0.0
        return sum(not g.decided for g in self.gates) / len(self.gates)

    @property
    def max_undecided_fanin(self) -> int:
        return max((g.undecided_inputs for g in self.gates if not g.decided), default=0)

    def by_fanin(self) -> dict[int, tuple[int, int]]:
        """fan-in -> (gates, undecided gates)."""
        out: dict[int, list[int]] = {}
        for g in self.gates:
            row = out.setdefault(g.fanin, [0, 0])
            row[0] += 1
            row[1] += not g.decided
        return {s: (a, b) for s, (a, b) in sorted(out.items())}


def derived_undecided_bound(s: int) -> float:
    """Bound on P(an OR of ``s`` fresh positive inputs stays undecided).

    The gate survives only if no input is fixed to 1, and a pairing
    restriction fixes just under a quarter of the positions to 1.
    """
    return 0.75 ** s


def quoted_undecided_bound(s: int) -> float:
    return 0.25 ** s


def level1_fanin_survey(lc: LayeredCircuit, rho: Restriction) -> FaninSurvey:
    """Which level-1 OR gates does ``rho`` leave undecided, and with how many live inputs."""
    c = lc.circuit
    if rho.host_size != c.m:
        raise ValueError("restriction and circuit have different input counts")
    rows = []
    for k in lc.gates_at(1):
        g = c.gates[k]
        if g[0] != OR:
            raise ShapeError("level 1 must consist of OR gates")
        live = 0
        satisfied = False
        for ch in g[1]:
            child = c.gates[ch]
            if child[0] == CONST:
                satisfied |= child[1]
                continue
            v = rho[child[1]]
            if v == STAR:
                live += 1
            elif (v == 1) == child[2]:
                satisfied = True
        decided = satisfied or live == 0
        rows.append(GateSurvey(k, len(g[1]), decided, 0 if decided else live))
    return FaninSurvey(tuple(rows))


# --- decision trees -------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    value: bool


@dataclass(frozen=True)
class Query:
    var: int
    low: Leaf | Query
    high: Leaf | Query


@dataclass(frozen=True)
class DecisionTree:
    m: int
    root: Leaf | Query

    @property
    def depth(self) -> int:
        def d(node):
            return 0 if isinstance(node, Leaf) else 1 + max(d(node.low), d(node.high))
        return d(self.root)

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        node = self.root
        while isinstance(node, Query):
            node = node.high if assignment[node.var - 1] else node.low
        return node.value

    def paths(self) -> list[tuple[tuple[tuple[int, bool], ...], bool]]:
        """Every root-to-leaf path as ``((var, value), ...)`` with the leaf value."""
        out = []

        def walk(node, prefix):
            if isinstance(node, Leaf):
                out.append((prefix, node.value))
            else:
                walk(node.low, prefix + ((node.var, False),))
                walk(node.high, prefix + ((node.var, True),))

        walk(self.root, ())
        return out

    def leaf_count(self) -> int:
        return len(self.paths())


@dataclass(frozen=True)
class Depth2Form:
    """``top`` over terms; each term is the opposite kind over literals ``(var, positive)``."""

    top: str
    terms: tuple[tuple[tuple[int, bool], ...], ...]
    constant: bool | None = None

    @property
    def bottom_fanin(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    def variables(self) -> list[int]:
        return sorted({v for t in self.terms for v, _ in t})


def depth2_form(c: Circuit | LayeredCircuit) -> Depth2Form:
    """Read a circuit of depth at most two as an OR of ANDs or an AND of ORs."""
    c = _compact(_as_circuit(c).m, _as_circuit(c).gates, _as_circuit(c).output)
    h = heights(c)
    out = c.gates[c.output]
    if h[c.output] > 2:
        raise ShapeError(f"circuit has depth {h[c.output]}, expected at most 2")
    if out[0] == CONST:
        return Depth2Form(OR, (), constant=out[1])
    if out[0] == LIT:
        return Depth2Form(OR, (((out[1], out[2]),),))
    top = out[0]
    terms = []
    for ch in out[1]:
        g = c.gates[ch]
        if g[0] == LIT:
            terms.append(((g[1], g[2]),))
        elif g[0] == top:
            # same kind as the parent: its literals join the top gate directly
            terms.extend(((c.gates[x][1], c.gates[x][2]),) for x in g[1])
        else:
            terms.append(tuple((c.gates[x][1], c.gates[x][2]) for x in g[1]))
    return Depth2Form(top, tuple(terms))


def _term_status(term, assign: dict[int, bool], conjunctive: bool) -> bool | None:
    """Value of a term under a partial assignment, or None if still open."""
    open_ = False
    for v, positive in term:
        if v not in assign:
            open_ = True
        elif (assign[v] == positive) != conjunctive:
            return not conjunctive
    return None if open_ else conjunctive


def build_decision_tree(c2: Circuit | LayeredCircuit | Depth2Form, max_depth: int,
                        k: int | None = None, max_vars: int = 20) -> DecisionTree:
    """Canonical decision tree of a depth-2 circuit.

    Walk the terms in order; at the first term not yet decided, query all of
    its unset variables and recurse on each answer. Raises
    :class:`DepthExceeded` if some path would need more than ``max_depth``
    queries and :class:`FaninError` if a term has more than ``k`` literals.
    """
    form = c2 if isinstance(c2, Depth2Form) else depth2_form(c2)
    m = c2.m if not isinstance(c2, Depth2Form) else max(form.variables(), default=0)
    if k is not None and form.bottom_fanin > k:
        raise FaninError(f"bottom fan-in {form.bottom_fanin} exceeds k = {k}")
    if len(form.variables()) > max_vars:
        raise ShapeError(f"{len(form.variables())} free variables exceeds {max_vars}")
    if form.constant is not None:
        return DecisionTree(m, Leaf(form.constant))

    # OR-top: terms are ANDs; an AND-top is the dual
    conjunctive_terms = form.top == OR
    decisive = conjunctive_terms        # value of the top gate once one term equals it

    def grow(assign: dict[int, bool], depth: int):
        for term in form.terms:
            status = _term_status(term, assign, conjunctive_terms)
            if status is None:
                unset = list(dict.fromkeys(v for v, _ in term if v not in assign))
                if depth + len(unset) > max_depth:
                    raise DepthExceeded(depth + len(unset), max_depth)
                return query(unset, assign, depth)
            if status == decisive:
                return Leaf(decisive)
        return Leaf(not decisive)

    def query(vars_: list[int], assign: dict[int, bool], depth: int):
        if not vars_:
            return grow(assign, depth)
        v, rest = vars_[0], vars_[1:]
        return Query(v,
                     query(rest, {**assign, v: False}, depth + 1),
                     query(rest, {**assign, v: True}, depth + 1))

    return DecisionTree(m, grow({}, 0))


def tree_to_dual_form(tree: DecisionTree, target: str, m: int | None = None) -> Circuit:
    """Depth-2 circuit computing the same function as ``tree``.

    ``target == OR``: OR over the 1-leaves of the AND of the path literals.
    ``target == AND``: AND over the 0-leaves of the OR of the negated path literals.
    """
    m = tree.m if m is None else m
    b = CircuitBuilder(max(m, 1))
    terms = []
    for path, value in tree.paths():
        if target == OR and value:
            terms.append(b.and_(b.lit(v, val) for v, val in path))
        elif target == AND and not value:
            terms.append(b.or_(b.lit(v, not val) for v, val in path))
        elif target not in (AND, OR):
            raise ValueError("target must be 'and' or 'or'")
    top = b.or_(terms) if target == OR else b.and_(terms)
    return b.build(top)


# --- switching the bottom two levels ---------------------------------------------

@dataclass
class SwitchReport:
    gates: int = 0
    depth_failures: int = 0
    fanin_failures: int = 0
    max_tree_depth: int = 0
    leaves: int = 0
    size_before: int = 0
    size_after: int = 0

    @property
    def failures(self) -> int:
        return self.depth_failures + self.fanin_failures

    @property
    def failure_rate(self) -> float:
        return self.failures / self.gates if self.gates else 0.0


def switch_bottom_levels(lc: LayeredCircuit, max_depth: int, k: int | None = None
                         ) -> tuple[LayeredCircuit | None, SwitchReport]:
    """Invert every level-2 gate through its decision tree and merge it into level 3.

    Returns the new levelled circuit (one level shallower) or ``None`` when
    some tree failed; the report counts gates, failures and sizes either way.
    """
    c = lc.circuit
    d = lc.depth
    if d < 3:
        raise ShapeError("switching needs depth at least 3")
    bottom = lc.kind_at(1)
    upper = DUAL[bottom]                # kind of level 2; level 3 is ``bottom`` again
    report = SwitchReport(size_before=circuit_stats(lc).gate_count)
    b = CircuitBuilder(c.m)
    mapping: list[int | None] = []
    duals: dict[int, int] = {}
    for idx, (g, lv) in enumerate(zip(c.gates, lc.levels)):
        if lv == 1:
            mapping.append(None)
            continue
        if lv == 2:
            report.gates += 1
            sub = _compact(c.m, c.gates, idx)
            try:
                tree = build_decision_tree(sub, max_depth, k)
            except DepthExceeded:
                report.depth_failures += 1
                mapping.append(None)
                continue
            except FaninError:
                report.fanin_failures += 1
                mapping.append(None)
                continue
            report.max_tree_depth = max(report.max_tree_depth, tree.depth)
            report.leaves += tree.leaf_count()
            dual = tree_to_dual_form(tree, bottom, c.m)
            sub_map: list[int] = []
            for dg in dual.gates:
                sub_map.append(b.copy_gate(dg, sub_map))
            mapping.append(sub_map[dual.output])
            duals[idx] = sub_map[dual.output]
            continue
        if lv >= 3 and report.failures:
            mapping.append(None)
            continue
        if g[0] in (AND, OR) and lv == 3:
            kids: list[int] = []
            for ch in g[1]:
                new = b.gates[mapping[ch]]
                if new[0] == g[0]:
                    kids.extend(new[1])
                else:
                    kids.append(mapping[ch])
            mapping.append(b.gate(g[0], kids))
        else:
            mapping.append(b.copy_gate(g, mapping))
    if report.failures:
        return None, report
    out = to_levelled(b.build(mapping[c.output]), bottom=upper)
    report.size_after = circuit_stats(out).gate_count
    if out.depth > d - 1:
        raise ShapeError(f"switching produced depth {out.depth} from {d}")
    return out, report


# --- small-depth endgame ----------------------------------------------------------

@dataclass(frozen=True)
class SensitivityReport:
    up: float                # P(C = 0 at weight n, 1 after the flip)
    up_stderr: float
    down: float              # P(C = 1 at weight n, 0 after the flip)
    down_stderr: float
    trials: int
    fanin_bound: float       # max bottom fan-in / m
    log_bound: float         # c0 ln n / n


def single_flip_sensitivity(c: Circuit | LayeredCircuit, m: int, trials: int,
                            rng: np.random.Generator,
                            config: RestrictionConfig | None = None) -> SensitivityReport:
    """Flip one zero of a uniform weight-``n`` input to one and see whether ``c`` changes."""
    circ = _as_circuit(c)
    if circ.m != m or m % 2 == 0:
        raise ValueError("m must be odd and match the circuit")
    depth = c.depth if isinstance(c, LayeredCircuit) else circuit_stats(circ).depth
    if depth > 2:
        raise ShapeError(f"circuit has depth {depth}, expected at most 2")
    config = config or RestrictionConfig()
    n = (m - 1) // 2
    z0 = sample_weight_assignments(m, n, trials, rng)
    keys = np.where(z0, -1.0, rng.random((trials, m)))
    flip = keys.argmax(axis=1)
    z1 = z0.copy()
    z1[np.arange(trials), flip] = True
    v0 = eval_batch(circ, z0)
    v1 = eval_batch(circ, z1)
    up = float((~v0 & v1).mean())
    down = float((v0 & ~v1).mean())
    fanin = circuit_stats(circ).max_level1_fanin
    return SensitivityReport(
        up=up, up_stderr=math.sqrt(up * (1 - up) / trials),
        down=down, down_stderr=math.sqrt(down * (1 - down) / trials),
        trials=trials,
        fanin_bound=fanin / m,
        log_bound=config.c0 * math.log(n) / n if n > 1 else 1.0,
    )


# --- full pipeline ------------------------------------------------------------------

@dataclass
class PipelineReport:
    m: int
    depth_before: int
    depth_restricted: int
    depth_after: int | None
    stars_after_pairing: int
    stars_after_extension: int
    survey_pairing: FaninSurvey
    survey_extension: FaninSurvey
    switch: SwitchReport | None
    checked_completions: int = 0
    mismatches: int = 0
    restricted: Circuit | None = field(default=None, repr=False)
    switched: LayeredCircuit | None = field(default=None, repr=False)
    rho: Restriction | None = field(default=None, repr=False)

    @property
    def depth_reduced(self) -> bool:
        return self.depth_after is not None and self.depth_after < self.depth_restricted


def completions(rho: Restriction, limit: int, rng: np.random.Generator,
                samples: int = 10_000) -> np.ndarray:
    """All completions of ``rho`` if there are at most ``2**limit``, else random ones."""
    stars = np.flatnonzero(rho.values == STAR)
    s = len(stars)
    if s <= limit:
        bits = ((np.arange(2 ** s)[:, None] >> np.arange(s)) & 1).astype(bool)
    else:
        bits = rng.integers(0, 2, size=(samples, s)).astype(bool)
    z = np.tile(rho.values.astype(bool), (len(bits), 1))
    z[:, stars] = bits
    return z


def restriction_pipeline(c: Circuit | LayeredCircuit, rng: np.random.Generator,
                         config: RestrictionConfig | None = None,
                         max_depth: int | None = None,
                         exhaustive_limit: int = 20) -> PipelineReport:
    """Pairing restriction, star-budget extension, then one switching pass.

    The switched circuit (when every tree succeeds) is compared with the
    restricted circuit on all completions of the final restriction, or on
    random completions when there are more than ``exhaustive_limit`` stars.
    """
    config = config or RestrictionConfig()
    max_depth = config.k if max_depth is None else max_depth
    circ = _as_circuit(c)
    m = circ.m
    lc0 = to_levelled(circ, OR)
    pairing = sample_balanced_restriction(m, rng)
    rho1 = pairing.restriction
    survey1 = level1_fanin_survey(lc0, rho1)
    lc1 = to_levelled(apply_restriction(lc0, rho1), OR)
    rho2 = extend_restriction_stars(rho1, None, rng, config)
    survey2 = level1_fanin_survey(lc1, rho2)
    restricted = apply_restriction(lc1, rho2)
    lc2 = to_levelled(restricted, OR)
    report = PipelineReport(
        m=m, depth_before=lc0.depth, depth_restricted=lc2.depth, depth_after=None,
        stars_after_pairing=len(rho1.stars()), stars_after_extension=len(rho2.stars()),
        survey_pairing=survey1, survey_extension=survey2, switch=None,
        restricted=restricted, rho=rho2,
    )
    if lc2.depth < 3:
        return report
    switched, sw = switch_bottom_levels(lc2, max_depth, config.k)
    report.switch = sw
    if switched is None:
        return report
    report.switched = switched
    report.depth_after = switched.depth
    z = completions(rho2, exhaustive_limit, rng)
    report.checked_completions = len(z)
    report.mismatches = int((eval_batch(restricted, z) != eval_batch(switched, z)).sum())
    return report
