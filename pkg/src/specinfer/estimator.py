"""Scikit-learn style front end for specification inference.

``SpecificationInferrer.fit(demos)`` searches the candidate pool for the
specification a demonstrator was most plausibly satisfying; ``predict``
then monitors new traces against the learned task (context conjoined with
the inferred requirement).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .automaton import DemoSet, ProbabilisticAutomaton, Trace
from .concept import ConceptLattice, load_lattice
from .infer import brute_force_map, partial_order_inference
from .posterior import BetaPriorConfig
from .ptltl import And, evaluate, valuation_of
from .satprob import SatQueryEngine


def as_demo_set(X, horizon: int | None = None) -> DemoSet:
    """Coerce demonstrations into a DemoSet.

    Accepts a DemoSet, a list of Traces, or nested [[state, action], ...]
    step lists.
    """
    if isinstance(X, DemoSet):
        return X
    traces = []
    for item in X:
        traces.append(item if isinstance(item, Trace) else Trace.of(item))
    if not traces:
        raise ValueError("need at least one demonstration")
    if horizon is None:
        horizon = traces[0].horizon
    return DemoSet(tuple(traces), horizon)


def check_fitted(estimator: "SpecificationInferrer") -> None:
    if not hasattr(estimator, "result_"):
        raise RuntimeError("estimator has not been fitted")


class SpecificationInferrer(BaseEstimator):
    """Infer the maximum-a-posteriori task specification from demonstrations.

    Parameters
    ----------
    automaton : ProbabilisticAutomaton
        The dynamics the demonstrations were produced in.
    lattice : ConceptLattice or path
        Candidate pool ordered by known subset inclusion.
    algorithm : "lattice" or "brute"
        Boundary-querying lattice search, or exhaustive scoring.
    backend : "enumeration", "bdd", or "monte-carlo"
        How random-satisfaction probabilities are computed.
    mode : "indicator" or "beta"
        Posterior form; "beta" uses ``alpha``/``beta_param``.
    """

    def __init__(
        self,
        automaton: ProbabilisticAutomaton | None = None,
        lattice: ConceptLattice | str | None = None,
        algorithm: str = "lattice",
        backend: str = "bdd",
        mode: str = "indicator",
        alpha: float = 1.0,
        beta_param: float = 1.0,
        samples: int = 10_000,
        seed: int = 0,
        top_k: int | None = None,
    ):
        self.automaton = automaton
        self.lattice = lattice
        self.algorithm = algorithm
        self.backend = backend
        self.mode = mode
        self.alpha = alpha
        self.beta_param = beta_param
        self.samples = samples
        self.seed = seed
        self.top_k = top_k

    def _resolved_lattice(self) -> ConceptLattice:
        if isinstance(self.lattice, ConceptLattice):
            return self.lattice
        if self.lattice is None:
            raise ValueError("a lattice (or path to one) is required")
        return load_lattice(self.lattice)

    def _mode(self):
        if self.mode == "indicator":
            return "indicator"
        if self.mode == "beta":
            return BetaPriorConfig(self.alpha, self.beta_param)
        raise ValueError(f"unknown mode {self.mode!r}")

    def fit(self, X, y=None):
        """Run inference on demonstrations X; y is ignored."""
        if self.automaton is None:
            raise ValueError("an automaton is required")
        lattice = self._resolved_lattice()
        demos = as_demo_set(X)
        engine = SatQueryEngine(
            self.automaton,
            demos.horizon,
            backend=self.backend,
            samples=self.samples,
            seed=self.seed,
        )
        if self.algorithm == "lattice":
            result = partial_order_inference(
                demos, lattice, engine, mode=self._mode(), top_k=self.top_k
            )
        elif self.algorithm == "brute":
            result = brute_force_map(
                lattice, demos, engine, mode=self._mode(), top_k=self.top_k
            )
        else:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        self.result_ = result
        self.engine_ = engine
        self.best_spec_ = result.best_spec
        self.best_score_ = result.best_score
        self.context_ = lattice.context
        self.joint_spec_ = (
            result.best_spec
            if lattice.context is None
            else And(lattice.context, result.best_spec)
        )
        return self

    def predict(self, X) -> np.ndarray:
        """Whether each trace satisfies the learned joint specification."""
        check_fitted(self)
        demos = as_demo_set(X)
        labeling = self.automaton.labeling
        return np.array(
            [
                evaluate(self.joint_spec_, valuation_of(t, labeling))
                for t in demos.traces
            ],
            dtype=bool,
        )

    def score(self, X, y=None) -> float:
        """Posterior score of the already-learned specification on new demos."""
        check_fitted(self)
        from .infer import _Scorer  # local: shares counting/query machinery

        demos = as_demo_set(X)
        engine = self.engine_
        scorer = _Scorer(demos, engine, self.context_, self._mode())
        value, _stats = scorer.score(self.best_spec_)
        return value
