"""Probability that a uniformly-random-action agent satisfies a specification.

Three interchangeable backends:

* ``enumeration`` walks every action sequence and every stochastic branch,
  accumulating exact rational probability mass (budgeted).
* ``bdd`` compiles the dynamics, the state labeling, and the formula into one
  reduced ordered decision diagram over per-step action bits plus fresh
  probability bits for stochastic transitions, then counts models.  Exact for
  dyadic transition probabilities.
* ``monte-carlo`` estimates from seeded sampled rollouts.

Engines memoize per canonical formula string and count distinct queries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .automaton import ProbabilisticAutomaton, sample_random_traces
from .bdd import BDD
from .errors import BudgetExceededError, NonDyadicError
from .ptltl import Formula, MonitorProgram, canonical, evaluate, unroll, valuation_of

BACKENDS = ("enumeration", "bdd", "monte-carlo")


@dataclass
class QueryRecord:
    formula: str
    value: float
    backend: str
    seconds: float


class _BddCompiler:
    """Symbolic unrolling of an automaton over action and fresh-probability bits.

    Variable order is time-major: step t's action bits, then step t's fresh
    bits.  State occupancy is kept as computed functions (one per concrete
    state and step), so model counting needs no projection afterwards.
    """

    def __init__(
        self, m: ProbabilisticAutomaton, horizon: int, max_fresh_bits: int = 16
    ):
        self.automaton = m
        self.horizon = horizon
        self.manager = BDD()
        self.action_bits = max(1, (m.num_actions - 1).bit_length()) if m.num_actions > 1 else 0

        fresh_needed = 0
        quantized: dict = {}
        for s in range(m.num_states):
            for a in range(m.num_actions):
                dist = m.transitions[s][a]
                fractions = [Fraction(p) for _, p in dist]
                denom = math.lcm(*(fr.denominator for fr in fractions))
                if denom & (denom - 1):
                    raise NonDyadicError(
                        f"transition ({s},{a}) has non-dyadic probabilities"
                    )
                bits = denom.bit_length() - 1
                if bits > max_fresh_bits:
                    raise NonDyadicError(
                        f"transition ({s},{a}) needs {bits} fresh bits "
                        f"(limit {max_fresh_bits})"
                    )
                fresh_needed = max(fresh_needed, bits)
                quantized[(s, a)] = (denom, fractions)
        self.fresh_bits = fresh_needed

        per_step = self.action_bits + self.fresh_bits
        self.total_vars = per_step * (horizon - 1) + self.action_bits
        self.manager.add_vars(self.total_vars)

        def action_levels(t: int) -> list:
            base = per_step * t
            return list(range(base, base + self.action_bits))

        def fresh_levels(t: int) -> list:
            base = per_step * t + self.action_bits
            return list(range(base, base + self.fresh_bits))

        bdd = self.manager
        self._action_cube = {}
        for t in range(horizon):
            levels = action_levels(t)
            for a in range(m.num_actions):
                bits = [
                    (levels[i], bool((a >> (self.action_bits - 1 - i)) & 1))
                    for i in range(self.action_bits)
                ]
                self._action_cube[(t, a)] = bdd.cube(bits)

        # successor selectors: contiguous fresh-bit ranges proportional to
        # each successor's probability
        selector: dict = {}
        for (s, a), (denom, fractions) in quantized.items():
            scale = (1 << self.fresh_bits) // denom
            cum = 0
            blocks = []
            for (succ, _p), fr in zip(m.transitions[s][a], fractions):
                num = fr.numerator * (denom // fr.denominator)
                blocks.append((succ, cum * scale, (cum + num) * scale))
                cum += num
            selector[(s, a)] = blocks
        self._selector = selector
        self._fresh_levels = fresh_levels

        # reach[t][s]: assignments whose induced run is at state s at step t
        reach = [{m.initial_state: bdd.TRUE}]
        for t in range(horizon - 1):
            nxt: dict = {}
            flevels = fresh_levels(t)
            for s, occupied in reach[t].items():
                for a in range(m.num_actions):
                    base = bdd.land(occupied, self._action_cube[(t, a)])
                    if base == bdd.FALSE:
                        continue
                    for succ, lo, hi in selector[(s, a)]:
                        if lo == hi:
                            continue
                        gate = (
                            bdd.TRUE
                            if (lo, hi) == (0, 1 << self.fresh_bits)
                            else bdd.range_cube(flevels, lo, hi)
                        )
                        piece = bdd.land(base, gate)
                        nxt[succ] = bdd.lor(nxt.get(succ, bdd.FALSE), piece)
            reach.append(nxt)
        self.reach = reach

        self._label_cache: dict = {}
        # all action prefixes decode to valid actions (matters when
        # num_actions is not a power of two)
        anywhere = bdd.FALSE
        for node in reach[horizon - 1].values():
            anywhere = bdd.lor(anywhere, node)
        last_valid = bdd.FALSE
        for a in range(m.num_actions):
            last_valid = bdd.lor(last_valid, self._action_cube[(horizon - 1, a)])
        self.valid = bdd.land(anywhere, last_valid)
        self.denominator = (m.num_actions**horizon) * (
            1 << (self.fresh_bits * (horizon - 1))
        )

    def _label(self, t: int, prop: str) -> int:
        key = (t, prop)
        if key not in self._label_cache:
            bdd = self.manager
            node = bdd.FALSE
            for s, occupied in self.reach[t].items():
                if prop in self.automaton.labeling[s]:
                    node = bdd.lor(node, occupied)
            self._label_cache[key] = node
        return self._label_cache[key]

    def satisfaction(self, f: Formula) -> Fraction:
        bdd = self.manager
        accept = unroll(
            f,
            self.horizon,
            self._label,
            const=bdd.const,
            land=bdd.land,
            lor=bdd.lor,
            lnot=bdd.lnot,
        )
        constrained = bdd.land(accept, self.valid)
        return Fraction(bdd.count(constrained), self.denominator)


class SatQueryEngine:
    """Serves random-satisfaction queries for one automaton and horizon.

    Not internally synchronized; use one engine per worker and merge
    counters afterwards.
    """

    def __init__(
        self,
        automaton: ProbabilisticAutomaton,
        horizon: int,
        backend: str = "enumeration",
        samples: int = 10_000,
        seed: int = 0,
        enumeration_budget: int = 10**6,
        max_fresh_bits: int = 16,
    ):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if samples < 1:
            raise ValueError("samples must be >= 1")
        self.automaton = automaton
        self.horizon = horizon
        self.backend = backend
        self.samples = samples
        self.seed = seed
        self.enumeration_budget = enumeration_budget
        self.max_fresh_bits = max_fresh_bits
        self.query_counter = 0
        self.cache_hits = 0
        self.query_log: list[QueryRecord] = []
        self._cache: dict = {}
        self._mc_cache: dict = {}
        self._compiler: _BddCompiler | None = None
        self._mc_valuations: list | None = None

    def spawn(self) -> "SatQueryEngine":
        """A fresh engine with identical configuration and empty counters."""
        return SatQueryEngine(
            self.automaton,
            self.horizon,
            self.backend,
            samples=self.samples,
            seed=self.seed,
            enumeration_budget=self.enumeration_budget,
            max_fresh_bits=self.max_fresh_bits,
        )

    # -- public queries -------------------------------------------------

    def rand_sat(self, f: Formula) -> float:
        """The configured backend's satisfaction probability (cached)."""
        if self.backend == "monte-carlo":
            return self.rand_sat_mc(f)[0]
        return float(self._exact(f))

    def rand_sat_exact(self, f: Formula) -> float:
        if self.backend == "monte-carlo":
            raise ValueError("exact query on a monte-carlo engine")
        return float(self._exact(f))

    def rand_sat_fraction(self, f: Formula) -> Fraction:
        if self.backend == "monte-carlo":
            raise ValueError("exact query on a monte-carlo engine")
        return self._exact(f)

    def rand_sat_mc(self, f: Formula) -> tuple:
        """(estimate, standard error) from the engine's seeded sample."""
        key = canonical(f)
        if key in self._mc_cache:
            self.cache_hits += 1
            return self._mc_cache[key]
        started = time.perf_counter()
        if self._mc_valuations is None:
            demos = sample_random_traces(
                self.automaton, self.horizon, self.samples, self.seed
            )
            self._mc_valuations = [
                valuation_of(t, self.automaton.labeling) for t in demos.traces
            ]
        hits = sum(1 for v in self._mc_valuations if evaluate(f, v))
        estimate = hits / self.samples
        stderr = math.sqrt(estimate * (1.0 - estimate) / self.samples)
        self._record(key, estimate, "monte-carlo", started)
        self._mc_cache[key] = (estimate, stderr)
        return (estimate, stderr)

    def query_stats(self) -> dict:
        seconds = [record.seconds for record in self.query_log]
        return {
            "queries": self.query_counter,
            "cache_hits": self.cache_hits,
            "mean_query_seconds": sum(seconds) / len(seconds) if seconds else 0.0,
        }

    # -- internals -------------------------------------------------------

    def _record(self, key: str, value: float, backend: str, started: float) -> None:
        self.query_counter += 1
        self.query_log.append(
            QueryRecord(key, value, backend, time.perf_counter() - started)
        )

    def _exact(self, f: Formula) -> Fraction:
        key = canonical(f)
        if key in self._cache:
            self.cache_hits += 1
            return self._cache[key]
        started = time.perf_counter()
        if self.backend == "bdd":
            if self._compiler is None:
                self._compiler = _BddCompiler(
                    self.automaton, self.horizon, self.max_fresh_bits
                )
            value = self._compiler.satisfaction(f)
        else:
            value = self._enumerate(f)
        self._record(key, float(value), self.backend, started)
        self._cache[key] = value
        return value

    def _enumerate(self, f: Formula) -> Fraction:
        m = self.automaton
        program = MonitorProgram(f)
        inv_actions = Fraction(1, m.num_actions)
        total = Fraction(0)
        leaves = 0
        initial = program.start(m.labeling[m.initial_state])
        stack = [(0, m.initial_state, initial, Fraction(1))]
        last = self.horizon - 1
        while stack:
            t, state, memory, weight = stack.pop()
            if t == last:
                leaves += 1
                if leaves > self.enumeration_budget:
                    raise BudgetExceededError(
                        f"enumeration exceeded {self.enumeration_budget} paths"
                    )
                if program.accepts(memory):
                    total += weight
                continue
            for a in range(m.num_actions):
                branch_weight = weight * inv_actions
                for succ, p in m.transitions[state][a]:
                    if p == 0.0:
                        continue
                    stack.append(
                        (
                            t + 1,
                            succ,
                            program.step(memory, m.labeling[succ]),
                            branch_weight * Fraction(p),
                        )
                    )
        return total
