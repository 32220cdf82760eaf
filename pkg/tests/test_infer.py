from __future__ import annotations

import random

import pytest

from specinfer.automaton import sample_random_traces
from specinfer.concept import ConceptLattice, build_lattice
from specinfer.errors import InvalidChainError
from specinfer.infer import (
    ChainView,
    brute_force_map,
    chain_inference,
    partial_order_inference,
)
from specinfer.posterior import BetaPriorConfig, SatStats, posterior_score
from specinfer.ptltl import FALSE, TRUE, canonical, parse

from ._support import (
    max_antichain_size,
    random_automaton,
    random_chain,
    random_lattice,
    table_engine_for,
)

ALPHABET = ("a", "b", "c")


def make_instance(seed, n_candidates=40, horizon=4, n_demos=5):
    rng = random.Random(seed)
    lattice = random_lattice(rng, ALPHABET, horizon, n_candidates)
    m = random_automaton(rng, rng.randint(2, 5), rng.randint(2, 3), ALPHABET)
    demos = sample_random_traces(m, horizon, n_demos, seed=seed * 31 + 7)
    engine = table_engine_for(m, horizon, lattice)
    return lattice, demos, engine


class TestBruteForce:
    def test_bounds_only_lattice_tie_breaks_to_false(self, toy_world):
        automaton, demos = toy_world
        lattice = ConceptLattice(specs=(FALSE, TRUE), edges=((0, 1),))
        engine = table_engine_for(automaton, demos.horizon, lattice)
        result = brute_force_map(lattice, demos, engine)
        assert result.best_spec == FALSE
        assert result.best_score == 0.0
        assert result.specs_scored == 2
        assert result.queries_issued == 2

    def test_hand_scored_chain(self, toy_world):
        automaton, full = toy_world
        from specinfer.automaton import DemoSet

        demos = DemoSet(full.traces[:5], full.horizon)
        # hand table: three specs with known satisfaction statistics
        lattice = ConceptLattice(
            specs=(FALSE, parse("H(x)"), parse("P(x)"), TRUE),
            edges=((0, 1), (1, 2), (2, 3)),
        )

        class Fixed:
            def __init__(self):
                self.query_counter = 0
                self.cache_hits = 0
                self.automaton = automaton
                self.horizon = demos.horizon

            def rand_sat(self, f):
                self.query_counter += 1
                return {"false": 0.0, "H(x)": 0.25, "P(x)": 0.5, "true": 1.0}[
                    canonical(f)
                ]

        import specinfer.infer as infer_module

        counts = {"false": 0, "H(x)": 4, "P(x)": 5, "true": 5}
        original = infer_module._Scorer.count
        infer_module._Scorer.count = lambda self, spec: counts[canonical(spec)]
        try:
            result = brute_force_map(lattice, demos, Fixed())
        finally:
            infer_module._Scorer.count = original
        # scores: false 0; H(x): 5*KL(0.8||0.25); P(x): 5*KL(1||0.5); true 0
        by_hand = {
            "false": 0.0,
            "H(x)": posterior_score(SatStats(4, 5, 0.25)),
            "P(x)": posterior_score(SatStats(5, 5, 0.5)),
            "true": 0.0,
        }
        winner = max(by_hand, key=by_hand.get)
        assert canonical(result.best_spec) == winner
        assert result.best_score == by_hand[winner]

    def test_ranking_is_sorted_and_complete(self):
        lattice, demos, engine = make_instance(3)
        result = brute_force_map(lattice, demos, engine, top_k=5)
        assert len(result.ranking) == 5
        scores = [score for _f, score, _s in result.ranking]
        assert scores == sorted(scores, reverse=True)
        assert result.ranking[0][1] == result.best_score


class TestChainInference:
    def test_trivial_two_element_chain(self, toy_world):
        automaton, demos = toy_world
        chain = ChainView((FALSE, TRUE))
        engine = table_engine_for(automaton, demos.horizon, chain.specs)
        result = chain_inference(demos, chain, engine)
        assert result.best_score == 0.0
        assert result.queries_issued <= 2

    def test_matches_brute_force_on_random_chains(self):
        for seed in range(100):
            rng = random.Random(seed)
            length = rng.randint(2, 24)
            chain = random_chain(rng, ALPHABET, 4, length)
            m = random_automaton(rng, 3, 2, ALPHABET)
            demos = sample_random_traces(m, 4, 5, seed=seed + 1000)
            chain_lattice = _chain_as_lattice(chain)
            chain_engine = table_engine_for(m, 4, chain.specs)
            brute_engine = table_engine_for(m, 4, chain_lattice)
            got = chain_inference(demos, chain, chain_engine)
            expected = brute_force_map(chain_lattice, demos, brute_engine)
            assert got.best_score == expected.best_score
            assert got.queries_issued <= min(len(chain), len(demos) + 1)

    def test_non_monotone_counts_detected(self, toy_world):
        automaton, demos = toy_world
        # H(blue) and P(yellow) are not subset-ordered in this world
        chain = ChainView((parse("P(yellow)"), parse("H(!yellow)")))
        engine = table_engine_for(automaton, demos.horizon, chain.specs)
        counts = [
            sum(
                1
                for t in demos.traces
                if _satisfies(spec, t, automaton)
            )
            for spec in chain.specs
        ]
        if counts[0] > counts[1]:
            with pytest.raises(InvalidChainError):
                chain_inference(demos, chain, engine)


def _satisfies(spec, trace, automaton):
    from specinfer.ptltl import evaluate, valuation_of

    return evaluate(spec, valuation_of(trace, automaton.labeling))


def _chain_as_lattice(chain: ChainView) -> ConceptLattice:
    specs = (FALSE,) + tuple(chain.specs) + (TRUE,)
    edges = tuple((i, i + 1) for i in range(len(specs) - 1))
    return ConceptLattice(specs=specs, edges=edges)


class TestPartialOrderInference:
    def test_single_chain_lattice_matches_chain_inference(self):
        rng = random.Random(5)
        chain = random_chain(rng, ALPHABET, 4, 10)
        m = random_automaton(rng, 3, 2, ALPHABET)
        demos = sample_random_traces(m, 4, 5, seed=11)
        lattice = _chain_as_lattice(chain)
        a = chain_inference(demos, chain, table_engine_for(m, 4, chain.specs))
        b = partial_order_inference(
            demos, lattice, table_engine_for(m, 4, lattice)
        )
        assert a.best_score == b.best_score

    def test_oracle_equivalence_on_random_lattices(self):
        for seed in range(100):
            lattice, demos, engine = make_instance(seed)
            fast = partial_order_inference(demos, lattice, engine)
            brute = brute_force_map(lattice, demos, engine.spawn())
            assert fast.best_score == brute.best_score
            bound = max_antichain_size(lattice) * (len(demos) + 1)
            assert fast.queries_issued <= bound

    def test_skip_rule_audit(self):
        for seed in (2, 9, 23):
            lattice, demos, engine = make_instance(seed, n_candidates=60)
            result = partial_order_inference(demos, lattice, engine, audit=True)
            assert result.audit is not None
            assert len(result.audit) == result.skipped
            assert all(entry["dominated"] for entry in result.audit)

    def test_deterministic(self):
        lattice, demos, engine = make_instance(17)
        a = partial_order_inference(demos, lattice, engine.spawn())
        b = partial_order_inference(demos, lattice, engine.spawn())
        a_json = a.to_json("indicator")
        b_json = b.to_json("indicator")
        assert a_json == b_json

    def test_queries_only_partition_boundaries(self):
        lattice, demos, engine = make_instance(29)
        result = partial_order_inference(demos, lattice, engine)
        assert result.specs_scored + result.skipped == len(lattice)
        assert result.queries_issued <= result.specs_scored

    def test_beta_mode_matches_brute_force(self):
        prior = BetaPriorConfig(4.0, 1.0)
        for seed in range(60):
            lattice, demos, engine = make_instance(seed, n_candidates=30)
            fast = partial_order_inference(demos, lattice, engine, mode=prior)
            brute = brute_force_map(lattice, demos, engine.spawn(), mode=prior)
            assert fast.best_score == pytest.approx(brute.best_score, abs=1e-12)

    def test_beta_mode_on_chains_matches_brute_force(self):
        prior = BetaPriorConfig(4.0, 1.0)
        for seed in range(60):
            rng = random.Random(seed)
            chain = random_chain(rng, ALPHABET, 4, rng.randint(2, 20))
            m = random_automaton(rng, 3, 2, ALPHABET)
            demos = sample_random_traces(m, 4, 5, seed=seed + 2000)
            got = chain_inference(
                demos, chain, table_engine_for(m, 4, chain.specs), mode=prior
            )
            expected = brute_force_map(
                _chain_as_lattice(chain),
                demos,
                table_engine_for(m, 4, _chain_as_lattice(chain)),
                mode=prior,
            )
            assert got.best_score == pytest.approx(expected.best_score, abs=1e-12)


class TestResultInvariants:
    def test_score_recomputes_from_stats(self):
        for seed in (3, 7):
            lattice, demos, engine = make_instance(seed)
            result = partial_order_inference(demos, lattice, engine)
            assert result.best_score == posterior_score(result.stats)
            assert result.queries_issued <= result.specs_scored <= len(lattice)

    def test_json_score_encoding(self):
        lattice, demos, engine = make_instance(4)
        payload = brute_force_map(lattice, demos, engine).to_json("indicator")
        assert "winner" in payload and "queries_issued" in payload
        for entry in payload["ranking"]:
            assert entry["score"] == "-inf" or isinstance(entry["score"], float)
