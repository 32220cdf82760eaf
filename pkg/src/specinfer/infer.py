"""Search for the maximum-a-posteriori specification.

Three strategies over a candidate pool: exhaustive scoring (the oracle),
binary-search inference on chains, and breadth-first inference on a subset
lattice that only pays a random-satisfaction query at demonstration-partition
boundaries.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .automaton import DemoSet
from .concept import ConceptLattice
from .errors import InvalidChainError
from .posterior import INF, BetaPriorConfig, SatStats, posterior_score
from .ptltl import And, Formula, canonical, evaluate_many, valuation_of


def _score_json(score: float):
    if score == INF:
        return "+inf"
    if score == -INF:
        return "-inf"
    return score


@dataclass
class InferenceResult:
    best_spec: Formula
    best_score: float
    stats: SatStats
    queries_issued: int
    cache_hits: int
    specs_scored: int
    ranking: list
    wall_time: float
    skipped: int = 0
    audit: list | None = None

    @property
    def inconsistent(self) -> bool:
        """Demonstrations satisfy a specification that random actions never do."""
        return self.best_score == INF

    def to_json(self, mode_name: str) -> dict:
        return {
            "winner": canonical(self.best_spec),
            "score": _score_json(self.best_score),
            "n_sat": self.stats.n_sat,
            "n_total": self.stats.n_total,
            "rand_rate": self.stats.rand_rate,
            "mode": mode_name,
            "queries_issued": self.queries_issued,
            "cache_hits": self.cache_hits,
            "specs_scored": self.specs_scored,
            "skipped": self.skipped,
            "ranking": [
                {
                    "spec": canonical(spec),
                    "score": _score_json(score),
                    "n_sat": stats.n_sat,
                    "rand_rate": stats.rand_rate,
                    "mode": mode_name,
                }
                for spec, score, stats in self.ranking
            ],
        }


class _Scorer:
    """Shared bookkeeping: membership counts, satisfaction stats, scores.

    The context conjunct (pre-known requirements) is applied to both the
    demonstration counts and the random-satisfaction queries.
    """

    def __init__(self, demos: DemoSet, engine, context: Formula | None, mode):
        if len(demos) == 0:
            raise ValueError("demonstration set must be nonempty")
        if demos.horizon != engine.horizon:
            raise ValueError(
                f"demo horizon {demos.horizon} != engine horizon {engine.horizon}"
            )
        self.demos = demos
        self.engine = engine
        self.context = context
        self.mode = mode
        labeling = engine.automaton.labeling
        self.valuations = [valuation_of(t, labeling) for t in demos.traces]
        self._counts: dict = {}
        self._stats: dict = {}

    def scoring_formula(self, spec: Formula) -> Formula:
        if self.context is None:
            return spec
        return And(self.context, spec)

    def count(self, spec: Formula) -> int:
        key = canonical(spec)
        if key not in self._counts:
            f = self.scoring_formula(spec)
            self._counts[key] = sum(evaluate_many(f, self.valuations))
        return self._counts[key]

    def stats(self, spec: Formula) -> SatStats:
        """Satisfaction statistics; issues the engine query on first use."""
        key = canonical(spec)
        if key not in self._stats:
            rate = self.engine.rand_sat(self.scoring_formula(spec))
            self._stats[key] = SatStats(self.count(spec), len(self.demos), rate)
        return self._stats[key]

    def score(self, spec: Formula) -> tuple:
        stats = self.stats(spec)
        return posterior_score(stats, self.mode), stats


def _run(engine, body) -> InferenceResult:
    queries_before = engine.query_counter
    hits_before = engine.cache_hits
    started = time.perf_counter()
    result = body()
    result.wall_time = time.perf_counter() - started
    result.queries_issued = engine.query_counter - queries_before
    result.cache_hits = engine.cache_hits - hits_before
    return result


def _top_k(scored: list, k) -> list:
    # scored entries are (order, spec, score, stats); ties keep earlier entries
    ranked = sorted(scored, key=lambda e: (-e[2], e[0]))
    if k is not None:
        ranked = ranked[:k]
    return [(spec, score, stats) for _, spec, score, stats in ranked]


def brute_force_map(
    lattice: ConceptLattice,
    demos: DemoSet,
    engine,
    mode="indicator",
    top_k: int | None = None,
) -> InferenceResult:
    """Score every specification; ties go to the canonically first."""
    scorer = _Scorer(demos, engine, lattice.context, mode)

    def body() -> InferenceResult:
        best: tuple | None = None
        scored = []
        for i, spec in enumerate(lattice.specs):
            score, stats = scorer.score(spec)
            scored.append((i, spec, score, stats))
            if best is None or score > best[1]:
                best = (spec, score, stats)
        assert best is not None
        return InferenceResult(
            best_spec=best[0],
            best_score=best[1],
            stats=best[2],
            queries_issued=0,
            cache_hits=0,
            specs_scored=len(lattice.specs),
            ranking=_top_k(scored, top_k),
            wall_time=0.0,
        )

    return _run(engine, body)


# --------------------------------------------------------------------------
# Chains.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainView:
    """Specifications totally ordered by subset inclusion (ascending)."""

    specs: tuple

    def __post_init__(self):
        if not self.specs:
            raise ValueError("chain must be nonempty")
        object.__setattr__(self, "specs", tuple(self.specs))

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    @property
    def smallest(self) -> Formula:
        return self.specs[0]


def chain_inference(
    demos: DemoSet,
    chain: ChainView,
    engine,
    mode="indicator",
    context: Formula | None = None,
) -> InferenceResult:
    """Binary-search the smallest chain element of each demonstration
    partition and score only those.

    Membership counts are monotone along a subset-ordered chain, so each
    nonempty partition is a contiguous segment whose smallest element is
    found by binary search; one random-satisfaction query per partition
    suffices (two for Beta mode, where the gain is convex rather than
    monotone, so the segment's largest element competes as well).
    """
    scorer = _Scorer(demos, engine, context, mode)
    specs = chain.specs
    counts: dict = {}

    def count_at(j: int) -> int:
        if j not in counts:
            counts[j] = scorer.count(specs[j])
        return counts[j]

    def leftmost_at_least(i: int) -> int:
        lo, hi = 0, len(specs)
        while lo < hi:
            mid = (lo + hi) // 2
            if count_at(mid) >= i:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def rightmost_equal(i: int, start: int) -> int:
        lo, hi = start, len(specs)
        while lo < hi:
            mid = (lo + hi) // 2
            if count_at(mid) <= i:
                lo = mid + 1
            else:
                hi = mid
        return lo - 1

    def body() -> InferenceResult:
        candidates: list[int] = []
        for i in range(len(demos) + 1):
            j = leftmost_at_least(i)
            if j == len(specs) or count_at(j) != i:
                continue  # empty partition
            candidates.append(j)
            if isinstance(mode, BetaPriorConfig):
                candidates.append(rightmost_equal(i, j))
        evaluated = sorted(counts)
        if any(
            counts[a] > counts[b]
            for a, b in zip(evaluated, evaluated[1:])
        ):
            raise InvalidChainError("membership counts are not monotone")

        best = None
        scored = []
        for order, j in enumerate(dict.fromkeys(candidates)):
            spec = specs[j]
            score, stats = scorer.score(spec)
            scored.append((order, spec, score, stats))
            if best is None or score > best[1]:
                best = (spec, score, stats)
        assert best is not None
        return InferenceResult(
            best_spec=best[0],
            best_score=best[1],
            stats=best[2],
            queries_issued=0,
            cache_hits=0,
            specs_scored=len(scored),
            ranking=_top_k(scored, None),
            wall_time=0.0,
        )

    return _run(engine, body)


# --------------------------------------------------------------------------
# Partial orders.
# --------------------------------------------------------------------------


def _layered_bft(lattice: ConceptLattice):
    """Deterministic breadth-first traversal from the bottom element."""
    visited = {lattice.bottom}
    layer = [lattice.bottom]
    while layer:
        yield from layer
        frontier = set()
        for node in layer:
            for succ in lattice.successors(node):
                if succ not in visited:
                    visited.add(succ)
                    frontier.add(succ)
        layer = sorted(frontier)


def partial_order_inference(
    demos: DemoSet,
    lattice: ConceptLattice,
    engine,
    mode="indicator",
    top_k: int | None = None,
    audit: bool = False,
) -> InferenceResult:
    """Breadth-first lattice search querying only partition boundaries.

    A specification is skipped when a direct predecessor has the same
    membership count: its gain cannot beat that predecessor's partition
    minimum.  With a Beta prior there is no indicator gate and the gain is
    convex in the random rate, so partition-maximal elements (no successor
    with equal count) are scored as well.
    """
    scorer = _Scorer(demos, engine, lattice.context, mode)
    beta_mode = isinstance(mode, BetaPriorConfig)

    def body() -> InferenceResult:
        best = None
        scored = []
        skipped: list[int] = []
        counts = {i: scorer.count(lattice.specs[i]) for i in range(len(lattice))}
        for order, i in enumerate(_layered_bft(lattice)):
            minimal = all(counts[p] != counts[i] for p in lattice.predecessors(i))
            maximal = beta_mode and all(
                counts[s] != counts[i] for s in lattice.successors(i)
            )
            if not (minimal or maximal):
                skipped.append(i)
                continue
            spec = lattice.specs[i]
            score, stats = scorer.score(spec)
            scored.append((order, spec, score, stats))
            if best is None or score > best[1]:
                best = (spec, score, stats)
        assert best is not None
        audit_report = _audit_skipped(skipped, counts, scored) if audit else None
        return InferenceResult(
            best_spec=best[0],
            best_score=best[1],
            stats=best[2],
            queries_issued=0,
            cache_hits=0,
            specs_scored=len(scored),
            ranking=_top_k(scored, top_k),
            wall_time=0.0,
            skipped=len(skipped),
            audit=audit_report,
        )

    def _audit_skipped(skipped, counts, scored):
        """Re-score skipped specs with a fresh engine; each must be dominated
        by a queried spec of its own partition."""
        audit_engine = engine.spawn()
        audit_scorer = _Scorer(demos, audit_engine, lattice.context, mode)
        best_by_count: dict = {}
        for _, spec, score, stats in scored:
            n = stats.n_sat
            if n not in best_by_count or score > best_by_count[n]:
                best_by_count[n] = score
        report = []
        for i in skipped:
            spec = lattice.specs[i]
            score, _stats = audit_scorer.score(spec)
            bound = best_by_count.get(counts[i], -INF)
            report.append(
                {
                    "spec": canonical(spec),
                    "score": _score_json(score),
                    "partition_best": _score_json(bound),
                    "dominated": score <= bound,
                }
            )
        return report

    return _run(engine, body)
