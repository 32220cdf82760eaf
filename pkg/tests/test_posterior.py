from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specinfer.errors import InconsistentModelError
from specinfer.posterior import (
    INF,
    BetaPriorConfig,
    SatStats,
    bernoulli_kl,
    j_score,
    log_likelihood,
    posterior_score,
    trace_likelihood,
)
from specinfer.ptltl import evaluate, valuation_of

from ._support import all_traces, random_automaton, random_formula


class TestBernoulliKl:
    def test_zero_on_diagonal(self):
        for p in (0.0, 0.2, 0.5, 0.9, 1.0):
            assert bernoulli_kl(p, p) == 0.0

    def test_analytic_values(self):
        assert bernoulli_kl(1.0, 0.5) == pytest.approx(math.log(2))
        expected = 0.8 * math.log(8 / 3) + 0.2 * math.log(2 / 7)
        assert bernoulli_kl(0.8, 0.3) == pytest.approx(expected)

    def test_matches_two_outcome_summation(self):
        rng = random.Random(3)
        for _ in range(100):
            p, q = rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)
            by_sum = sum(
                pi * math.log(pi / qi)
                for pi, qi in (((p, q)), ((1 - p, 1 - q)))
                if pi > 0
            )
            assert bernoulli_kl(p, q) == pytest.approx(by_sum, rel=1e-12)

    def test_infinities(self):
        assert bernoulli_kl(0.5, 0.0) == INF
        assert bernoulli_kl(0.5, 1.0) == INF
        assert bernoulli_kl(0.0, 0.0) == 0.0
        assert bernoulli_kl(1.0, 1.0) == 0.0

    def test_domain_check(self):
        with pytest.raises(ValueError):
            bernoulli_kl(1.5, 0.5)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
    )
    def test_jointly_convex_midpoint(self, p1, q1, p2, q2):
        mid = bernoulli_kl((p1 + p2) / 2, (q1 + q2) / 2)
        avg = (bernoulli_kl(p1, q1) + bernoulli_kl(p2, q2)) / 2
        assert mid <= avg + 1e-9


class TestJScore:
    def test_zero_at_matching_rate(self):
        assert j_score(3, 5, 3 / 5) == 0.0

    def test_indicator_gate(self):
        assert j_score(0, 5, 0.7) == 0.0
        assert j_score(2, 5, 0.9) == 0.0

    def test_perfect_demos_quarter_random(self):
        assert j_score(5, 5, 0.25) == pytest.approx(math.log(4))

    def test_degenerate_rate_scores_infinite(self):
        assert j_score(3, 5, 0.0) == INF
        assert j_score(0, 5, 0.0) == 0.0

    def test_monotone_nonincreasing_below_empirical(self):
        rng = random.Random(5)
        for _ in range(200):
            n, total = rng.randint(0, 10), 10
            q1 = rng.uniform(0.0, n / total if n else 0.0)
            q2 = rng.uniform(0.0, q1) if q1 else 0.0
            assert j_score(n, total, q2) >= j_score(n, total, q1) - 1e-12


class TestTraceLikelihood:
    def test_true_spec_returns_random_probability(self):
        stats = SatStats(5, 5, 1.0)
        assert trace_likelihood(True, 0.125, stats) == 0.125

    def test_random_demonstrator_collapses(self):
        stats = SatStats(2, 5, 0.4)
        assert trace_likelihood(True, 0.03, stats) == pytest.approx(0.03)
        assert trace_likelihood(False, 0.03, stats) == pytest.approx(0.03)

    def test_inconsistent_model_raises(self):
        with pytest.raises(InconsistentModelError):
            trace_likelihood(True, 0.1, SatStats(3, 5, 0.0))
        with pytest.raises(InconsistentModelError):
            trace_likelihood(False, 0.1, SatStats(3, 5, 1.0))


def maxent_lambda_by_bisection(w_phi: float, w_not: float, target: float) -> float:
    """Solve e^l * w_phi / (e^l * w_phi + w_not) = target for l by bisection."""

    def rate(l: float) -> float:
        c = math.exp(l)
        return c * w_phi / (c * w_phi + w_not)

    lo, hi = -60.0, 60.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if rate(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestClosedFormAgainstNumericMaxEnt:
    def build_universe(self, seed):
        rng = random.Random(seed)
        m = random_automaton(rng, 3, 2, ("a", "b"), dyadic=True)
        f = random_formula(rng, ("a", "b"), 3)
        horizon = rng.randint(2, 3)
        universe = list(all_traces(m, horizon))
        flags = [
            evaluate(f, valuation_of(t, m.labeling)) for t, _u, _w in universe
        ]
        return m, universe, flags

    def test_three_trace_style_universe(self):
        found = 0
        for seed in range(40):
            m, universe, flags = self.build_universe(seed)
            w_phi = float(sum(w for (_t, _u, w), s in zip(universe, flags) if s))
            w_not = float(sum(w for (_t, _u, w), s in zip(universe, flags) if not s))
            w_true = w_phi + w_not
            if w_phi <= 0 or w_not <= 0:
                continue
            found += 1
            phi_tilde = w_phi / w_true
            n_total = 4
            for n_sat in range(1, n_total):
                stats = SatStats(n_sat, n_total, phi_tilde)
                lam = maxent_lambda_by_bisection(w_phi, w_not, n_sat / n_total)
                z = math.exp(lam) * w_phi + w_not
                for (trace, _u, w), in_phi in zip(universe, flags):
                    direct = (
                        float(w) * math.exp(lam if in_phi else 0.0) / z
                    )
                    closed = trace_likelihood(in_phi, float(w) / w_true, stats)
                    assert closed == pytest.approx(direct, abs=1e-9)
        assert found >= 10

    def test_normalization_and_expectation(self):
        for seed in (1, 7, 13):
            m, universe, flags = self.build_universe(seed)
            w_phi = sum(w * u for (_t, u, w), s in zip(universe, flags) if s)
            w_all = sum(w * u for _t, u, w in universe)
            phi_tilde = float(w_phi / w_all)
            if not (0 < phi_tilde < 1):
                continue
            stats = SatStats(3, 4, phi_tilde)
            total = 0.0
            expectation = 0.0
            for (trace, u, w), in_phi in zip(universe, flags):
                like = trace_likelihood(in_phi, float(u * w), stats)
                total += like
                expectation += like * in_phi
            assert total == pytest.approx(1.0, abs=1e-10)
            assert expectation == pytest.approx(stats.empirical_rate, abs=1e-10)


class TestLogLikelihood:
    def test_all_satisfying_half_random(self):
        stats = SatStats(5, 5, 0.5)
        assert log_likelihood(stats) == pytest.approx(5 * math.log(2))

    def test_zero_count_convention(self):
        stats = SatStats(0, 4, 0.3)
        assert log_likelihood(stats) == pytest.approx(4 * math.log(1 / 0.7))

    def test_equals_scaled_kl(self):
        rng = random.Random(11)
        for _ in range(100):
            total = rng.randint(1, 12)
            n = rng.randint(0, total)
            q = rng.uniform(0.05, 0.95)
            stats = SatStats(n, total, q)
            assert log_likelihood(stats) == pytest.approx(
                total * bernoulli_kl(n / total, q), rel=1e-10, abs=1e-12
            )

    def test_rho_offset(self):
        stats = SatStats(2, 4, 0.5)
        assert log_likelihood(stats, log_rho_x=-3.5) == pytest.approx(
            log_likelihood(stats) - 3.5
        )

    def test_signed_infinity_on_conflict(self):
        assert log_likelihood(SatStats(3, 5, 0.0)) == INF
        assert log_likelihood(SatStats(3, 5, 1.0)) == INF


class TestPosteriorScore:
    def test_true_spec_baseline(self):
        assert posterior_score(SatStats(5, 5, 1.0)) == 0.0

    def test_below_random_is_impossible(self):
        assert posterior_score(SatStats(1, 5, 0.9)) == -INF

    def test_uniform_beta_equals_pure_kl(self):
        rng = random.Random(13)
        prior = BetaPriorConfig(1.0, 1.0)
        for _ in range(100):
            total = rng.randint(1, 10)
            stats = SatStats(rng.randint(0, total), total, rng.uniform(0.05, 0.95))
            expected = total * bernoulli_kl(stats.empirical_rate, stats.rand_rate)
            assert posterior_score(stats, prior) == pytest.approx(expected)

    def test_beta_biases_toward_positive_demos(self):
        prior = BetaPriorConfig(4.0, 1.0)
        # phi and its complement carry identical information gain
        phi = SatStats(4, 5, 0.3)
        complement = SatStats(1, 5, 0.7)
        assert bernoulli_kl(0.8, 0.3) == pytest.approx(bernoulli_kl(0.2, 0.7))
        assert posterior_score(phi, prior) > posterior_score(complement, prior)

    def test_indicator_breaks_complement_symmetry(self):
        phi = SatStats(4, 5, 0.3)
        complement = SatStats(1, 5, 0.7)
        assert log_likelihood(phi) == pytest.approx(log_likelihood(complement))
        assert posterior_score(phi) > -INF
        assert posterior_score(complement) == -INF

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            posterior_score(SatStats(1, 2, 0.5), "bayes")

    def test_beta_clamps_endpoints(self):
        prior = BetaPriorConfig(4.0, 1.0)
        score = posterior_score(SatStats(5, 5, 0.5), prior)
        assert math.isfinite(score)


class TestStatsValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SatStats(6, 5, 0.5)
        with pytest.raises(ValueError):
            SatStats(0, 0, 0.5)
        with pytest.raises(ValueError):
            SatStats(1, 5, 1.5)

    def test_beta_positivity(self):
        with pytest.raises(ValueError):
            BetaPriorConfig(0.0, 1.0)
