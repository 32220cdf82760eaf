"""Inference of past-time temporal-logic task specifications from
demonstrations in a probabilistic automaton."""

from .automaton import (
    DemoSet,
    GridworldSpec,
    ProbabilisticAutomaton,
    Trace,
    build_gridworld,
    load_gridworld,
    parse_gridworld,
    sample_random_traces,
    trace_weight,
)
from .concept import (
    ConceptLattice,
    GrammarConfig,
    build_lattice,
    enumerate_grammar,
    load_lattice,
    save_lattice,
    subset_check,
)
from .estimator import SpecificationInferrer, as_demo_set
from .infer import (
    ChainView,
    InferenceResult,
    brute_force_map,
    chain_inference,
    partial_order_inference,
)
from .posterior import (
    BetaPriorConfig,
    SatStats,
    bernoulli_kl,
    j_score,
    log_likelihood,
    posterior_score,
    trace_likelihood,
)
from .ptltl import Formula, canonical, evaluate, membership_count, parse
from .satprob import SatQueryEngine

__version__ = "0.1.0"

__all__ = [
    "BetaPriorConfig",
    "ChainView",
    "ConceptLattice",
    "DemoSet",
    "Formula",
    "GrammarConfig",
    "GridworldSpec",
    "InferenceResult",
    "ProbabilisticAutomaton",
    "SatQueryEngine",
    "SatStats",
    "SpecificationInferrer",
    "Trace",
    "as_demo_set",
    "bernoulli_kl",
    "brute_force_map",
    "build_gridworld",
    "build_lattice",
    "canonical",
    "chain_inference",
    "enumerate_grammar",
    "evaluate",
    "j_score",
    "load_gridworld",
    "load_lattice",
    "log_likelihood",
    "membership_count",
    "parse",
    "parse_gridworld",
    "partial_order_inference",
    "posterior_score",
    "sample_random_traces",
    "save_lattice",
    "subset_check",
    "trace_likelihood",
    "trace_weight",
]
