"""Concept-class enumeration, semantic pruning, and lattice construction.

Subset questions between specifications are decided over *unconstrained*
valuations of a fixed horizon, so the resulting Hasse diagram is independent
of any particular automaton and can be cached and reused.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .bdd import BDD
from .errors import BudgetExceededError
from .ptltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    Formula,
    Historically,
    Implies,
    Not,
    Once,
    Since,
    atoms,
    canonical,
    canonical_key,
    parse,
    unroll,
)

#: exhaustive valuation enumeration is allowed up to this many Boolean bits
DEFAULT_MAX_EXHAUSTIVE_BITS = 20

_FILTER_SAMPLES = 4096
_FILTER_SEED = 0x5EC


# --------------------------------------------------------------------------
# Semantics over full valuation spaces.
# --------------------------------------------------------------------------


def valuation_table(f: Formula, alphabet: Sequence, horizon: int) -> np.ndarray:
    """Truth of ``f`` on every valuation of the given alphabet and horizon.

    Valuation ``v`` assigns proposition ``p`` at step ``t`` the bit
    ``(v >> (t * |AP| + index(p))) & 1``; the result is indexed by ``v``.
    """
    alphabet = sorted(alphabet)
    bits = len(alphabet) * horizon
    if bits > 26:
        raise BudgetExceededError(f"{bits}-bit valuation space is too large")
    n = 1 << bits
    index = {p: i for i, p in enumerate(alphabet)}
    values = np.arange(n, dtype=np.uint32)
    cache: dict[tuple, np.ndarray] = {}

    def atom_at(t: int, name: str) -> np.ndarray:
        key = (t, name)
        if key not in cache:
            bit = t * len(alphabet) + index[name]
            cache[key] = ((values >> np.uint32(bit)) & np.uint32(1)).astype(bool)
        return cache[key]

    return unroll(
        f,
        horizon,
        atom_at,
        const=lambda b: np.full(n, b, dtype=bool),
        land=np.logical_and,
        lor=np.logical_or,
        lnot=np.logical_not,
    )


def sampled_table(
    f: Formula, alphabet: Sequence, horizon: int, samples: np.ndarray
) -> np.ndarray:
    """Truth of ``f`` on given sampled valuations (samples: bool[n, horizon, AP])."""
    alphabet = sorted(alphabet)
    index = {p: i for i, p in enumerate(alphabet)}
    n = samples.shape[0]
    return unroll(
        f,
        horizon,
        lambda t, name: samples[:, t, index[name]],
        const=lambda b: np.full(n, b, dtype=bool),
        land=np.logical_and,
        lor=np.logical_or,
        lnot=np.logical_not,
    )


def formula_bdd(f: Formula, alphabet: Sequence, horizon: int, manager: BDD) -> int:
    """Compile ``f`` to a BDD over time-major valuation variables.

    Variable for proposition ``p`` at step ``t`` sits at level
    ``t * |AP| + index(p)``.  The manager must have been sized with
    ``|AP| * horizon`` variables.
    """
    alphabet = sorted(alphabet)
    index = {p: i for i, p in enumerate(alphabet)}
    k = len(alphabet)
    return unroll(
        f,
        horizon,
        lambda t, name: manager.var(t * k + index[name]),
        const=manager.const,
        land=manager.land,
        lor=manager.lor,
        lnot=manager.lnot,
    )


def valuation_manager(alphabet: Sequence, horizon: int) -> BDD:
    manager = BDD()
    manager.add_vars(len(sorted(alphabet)) * horizon)
    return manager


def _filter_samples(alphabet: Sequence, horizon: int) -> np.ndarray:
    rng = np.random.default_rng(_FILTER_SEED)
    return rng.random((_FILTER_SAMPLES, horizon, len(sorted(alphabet)))) < 0.5


# --------------------------------------------------------------------------
# Subset checking.
# --------------------------------------------------------------------------


def _pick_backend(alphabet: Sequence, horizon: int, backend: str, max_bits: int) -> str:
    if backend != "auto":
        return backend
    bits = len(set(alphabet)) * horizon
    return "exhaustive" if bits <= max_bits else "bdd"


def subset_check(
    f1: Formula,
    f2: Formula,
    horizon: int,
    alphabet: Iterable | None = None,
    backend: str = "auto",
    max_bits: int = DEFAULT_MAX_EXHAUSTIVE_BITS,
) -> bool:
    """True iff every length-``horizon`` valuation satisfying f1 satisfies f2."""
    if alphabet is None:
        alphabet = atoms(f1) | atoms(f2)
    alphabet = sorted(set(alphabet))
    chosen = _pick_backend(alphabet, horizon, backend, max_bits)
    if chosen == "exhaustive":
        bits = len(alphabet) * horizon
        if bits > max_bits:
            raise BudgetExceededError(
                f"exhaustive subset check needs 2^{bits} valuations (budget 2^{max_bits})"
            )
        t1 = valuation_table(f1, alphabet, horizon)
        t2 = valuation_table(f2, alphabet, horizon)
        return bool(np.all(t2[t1]))
    if chosen == "bdd":
        manager = valuation_manager(alphabet, horizon)
        u1 = formula_bdd(f1, alphabet, horizon, manager)
        u2 = formula_bdd(f2, alphabet, horizon, manager)
        return manager.implies_everywhere(u1, u2)
    raise ValueError(f"unknown subset backend {chosen!r}")


def is_satisfiable(
    f: Formula,
    horizon: int,
    alphabet: Iterable | None = None,
    backend: str = "auto",
    max_bits: int = DEFAULT_MAX_EXHAUSTIVE_BITS,
) -> bool:
    """Satisfiability over unconstrained valuations of the given horizon."""
    if alphabet is None:
        alphabet = atoms(f)
    alphabet = sorted(set(alphabet)) or ["_unused"]
    chosen = _pick_backend(alphabet, horizon, backend, max_bits)
    if chosen == "exhaustive":
        return bool(valuation_table(f, alphabet, horizon).any())
    manager = valuation_manager(alphabet, horizon)
    return formula_bdd(f, alphabet, horizon, manager) != BDD.FALSE


# --------------------------------------------------------------------------
# The concept-class grammar.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GrammarConfig:
    """Production toggles for the shipped concept-class grammar.

    The grammar (all toggles on):

        top    ::= H(body) | P(body)
        body   ::= guard | guard -> guard
        guard  ::= lit | conj_operand & conj_operand | lit S lit
        lit    ::= atom | !atom
        conj_operand ::= lit | P(atom)

    ``pair_mode`` controls which ordered operand pairs the binary guard
    productions admit; ``implication_mode`` does the same for the two sides
    of ``->``.  ``once_conjunction`` enables the P(atom) conjunct form, which
    the plain literal grammar cannot express.
    """

    alphabet: tuple
    use_historically: bool = True
    use_once: bool = True
    use_implication: bool = True
    use_conjunction: bool = True
    use_since: bool = True
    negated_atoms: bool = True
    once_conjunction: bool = True
    pair_mode: str = "all"  # all | distinct-literals | distinct-atoms
    implication_mode: str = "all"  # all | distinct

    def __post_init__(self):
        if not self.alphabet:
            raise ValueError("alphabet must be nonempty")
        if self.pair_mode not in ("all", "distinct-literals", "distinct-atoms"):
            raise ValueError(f"bad pair_mode {self.pair_mode!r}")
        if self.implication_mode not in ("all", "distinct"):
            raise ValueError(f"bad implication_mode {self.implication_mode!r}")

    def describe(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "use_historically": self.use_historically,
            "use_once": self.use_once,
            "use_implication": self.use_implication,
            "use_conjunction": self.use_conjunction,
            "use_since": self.use_since,
            "negated_atoms": self.negated_atoms,
            "once_conjunction": self.once_conjunction,
            "pair_mode": self.pair_mode,
            "implication_mode": self.implication_mode,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "GrammarConfig":
        payload = dict(payload)
        payload["alphabet"] = tuple(payload["alphabet"])
        return cls(**payload)


def _atom_of(literal: Formula) -> str:
    while isinstance(literal, (Not, Once)):
        literal = literal.arg
    assert isinstance(literal, Atom)
    return literal.name


def _pair_allowed(x: Formula, y: Formula, mode: str) -> bool:
    if mode == "all":
        return True
    if mode == "distinct-literals":
        return x != y
    return _atom_of(x) != _atom_of(y)


def grammar_derivations(config: GrammarConfig) -> list:
    """All syntactic derivations, deduplicated by canonical string."""
    props = sorted(config.alphabet)
    literals: list[Formula] = [Atom(p) for p in props]
    if config.negated_atoms:
        literals += [Not(Atom(p)) for p in props]

    conj_operands = list(literals)
    if config.once_conjunction:
        conj_operands += [Once(Atom(p)) for p in props]

    guards: list[Formula] = list(literals)
    if config.use_conjunction:
        guards += [
            And(x, y)
            for x, y in itertools.product(conj_operands, repeat=2)
            if _pair_allowed(x, y, config.pair_mode)
        ]
    if config.use_since:
        guards += [
            Since(x, y)
            for x, y in itertools.product(literals, repeat=2)
            if _pair_allowed(x, y, config.pair_mode)
        ]

    bodies: list[Formula] = list(guards)
    if config.use_implication:
        bodies += [
            Implies(x, y)
            for x, y in itertools.product(guards, repeat=2)
            if config.implication_mode == "all" or x != y
        ]

    tops: list[Formula] = []
    if config.use_historically:
        tops += [Historically(b) for b in bodies]
    if config.use_once:
        tops += [Once(b) for b in bodies]

    seen = set()
    unique = []
    for f in tops:
        s = canonical(f)
        if s not in seen:
            seen.add(s)
            unique.append(f)
    unique.sort(key=canonical)
    return unique


def enumerate_grammar(
    config: GrammarConfig,
    horizon: int,
    backend: str = "auto",
    max_bits: int = DEFAULT_MAX_EXHAUSTIVE_BITS,
) -> list:
    """Grammar derivations with semantically-false formulas pruned out."""
    raw = grammar_derivations(config)
    alphabet = sorted(config.alphabet)
    chosen = _pick_backend(alphabet, horizon, backend, max_bits)
    if chosen == "exhaustive":
        return [f for f in raw if valuation_table(f, alphabet, horizon).any()]
    manager = valuation_manager(alphabet, horizon)
    return [f for f in raw if formula_bdd(f, alphabet, horizon, manager) != BDD.FALSE]


# --------------------------------------------------------------------------
# Semantic grouping and the Hasse diagram.
# --------------------------------------------------------------------------


def semantic_groups(
    specs: Sequence,
    horizon: int,
    alphabet: Sequence,
    backend: str = "auto",
    max_bits: int = DEFAULT_MAX_EXHAUSTIVE_BITS,
):
    """Group specs by semantic equivalence; yields (key, [indices]) pairs.

    Keys are comparable only within one call.  The groups are returned in
    first-occurrence order.
    """
    alphabet = sorted(alphabet)
    chosen = _pick_backend(alphabet, horizon, backend, max_bits)
    keys: list = []
    if chosen == "exhaustive":
        for f in specs:
            keys.append(np.packbits(valuation_table(f, alphabet, horizon)).tobytes())
    else:
        manager = valuation_manager(alphabet, horizon)
        for f in specs:
            keys.append(formula_bdd(f, alphabet, horizon, manager))
    groups: dict = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    return list(groups.items())


@dataclass
class ConceptLattice:
    """Specifications ordered by known subset inclusion (a Hasse diagram).

    ``specs[0]`` is ``false``, ``specs[-1]`` is ``true``; an edge ``(i, j)``
    records that ``specs[i]`` denotes a strict subset of ``specs[j]``.
    Instances are immutable by convention and safe to share.
    """

    specs: tuple
    edges: tuple
    context: Formula | None = None
    _preds: dict = field(init=False, repr=False)
    _succs: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.specs = tuple(self.specs)
        self.edges = tuple((int(i), int(j)) for i, j in self.edges)
        n = len(self.specs)
        if n < 2 or self.specs[0] != FALSE or self.specs[-1] != TRUE:
            raise ValueError("lattice must contain false (first) and true (last)")
        preds: dict = {i: [] for i in range(n)}
        succs: dict = {i: [] for i in range(n)}
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"bad edge ({i},{j})")
            succs[i].append(j)
            preds[j].append(i)
        if preds[0]:
            raise ValueError("false must have no predecessors")
        if succs[n - 1]:
            raise ValueError("true must have no successors")
        for adjacency in (preds, succs):
            for lst in adjacency.values():
                lst.sort()
        self._preds = preds
        self._succs = succs

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def bottom(self) -> int:
        return 0

    @property
    def top(self) -> int:
        return len(self.specs) - 1

    def predecessors(self, i: int) -> list:
        return self._preds[i]

    def successors(self, i: int) -> list:
        return self._succs[i]

    def to_json(self) -> dict:
        return {
            "specs": [canonical(f) for f in self.specs],
            "edges": [[i, j] for i, j in self.edges],
            "context": None if self.context is None else canonical(self.context),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ConceptLattice":
        specs = tuple(parse(s) for s in payload["specs"])
        context = payload.get("context")
        return cls(
            specs=specs,
            edges=tuple((i, j) for i, j in payload["edges"]),
            context=None if context is None else parse(context),
        )


def _subset_matrix_exhaustive(tables: list) -> set:
    """All strict-subset pairs among exact truth tables (packed uint8 rows)."""
    packed = np.stack([np.packbits(t) for t in tables])
    pairs = set()
    for i in range(len(tables)):
        # i subset of j  iff  table_i & ~table_j is empty
        violated = np.bitwise_and(packed[i], np.bitwise_not(packed)).any(axis=1)
        for j in np.nonzero(~violated)[0]:
            if i != int(j):
                pairs.add((i, int(j)))
    return pairs


def _candidate_pairs_sampled(specs, alphabet, horizon) -> set:
    samples = _filter_samples(alphabet, horizon)
    packed = np.stack(
        [np.packbits(sampled_table(f, alphabet, horizon, samples)) for f in specs]
    )
    pairs = set()
    for i in range(len(specs)):
        violated = np.bitwise_and(packed[i], np.bitwise_not(packed)).any(axis=1)
        for j in np.nonzero(~violated)[0]:
            if i != int(j):
                pairs.add((i, int(j)))
    return pairs


def _verify_pairs_chunk(args) -> list:
    spec_strings, alphabet, horizon, chunk = args
    specs = [parse(s) for s in spec_strings]
    manager = valuation_manager(alphabet, horizon)
    roots = {}

    def root(i: int) -> int:
        if i not in roots:
            roots[i] = formula_bdd(specs[i], alphabet, horizon, manager)
        return roots[i]

    return [(i, j) for i, j in chunk if manager.implies_everywhere(root(i), root(j))]


def build_lattice(
    specs: Sequence,
    horizon: int,
    context: Formula | None = None,
    alphabet: Iterable | None = None,
    backend: str = "auto",
    max_bits: int = DEFAULT_MAX_EXHAUSTIVE_BITS,
    workers: int = 1,
) -> ConceptLattice:
    """Order the specs by semantic subset inclusion and transitively reduce.

    Semantic duplicates are merged, keeping the canonically smallest member
    of each class; ``true`` and ``false`` are adjoined as the lattice bounds.
    """
    if alphabet is None:
        alphabet = set()
        for f in specs:
            alphabet |= atoms(f)
        if context is not None:
            alphabet |= atoms(context)
    alphabet = sorted(set(alphabet)) or ["_unused"]
    chosen = _pick_backend(alphabet, horizon, backend, max_bits)

    members = [FALSE, TRUE] + [f for f in specs if not isinstance(f, Const)]
    groups = semantic_groups(members, horizon, alphabet, backend=chosen)
    reps: list[Formula] = []
    for _key, indices in groups:
        group = [members[i] for i in indices]
        bound = next((f for f in group if isinstance(f, Const)), None)
        reps.append(bound if bound is not None else min(group, key=canonical_key))

    inner = sorted(
        (f for f in reps if not isinstance(f, Const)), key=canonical
    )
    ordered = [FALSE] + inner + [TRUE]

    if chosen == "exhaustive":
        tables = [valuation_table(f, alphabet, horizon) for f in inner]
        strict = _subset_matrix_exhaustive(tables) if inner else set()
    else:
        candidates = _candidate_pairs_sampled(inner, alphabet, horizon)
        strict = _verify_candidates(inner, alphabet, horizon, candidates, workers)

    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(inner)))
    graph.add_edges_from(strict)
    reduced = nx.transitive_reduction(graph)

    edges = [(1 + i, 1 + j) for i, j in reduced.edges]
    top = len(ordered) - 1
    for i in range(len(inner)):
        if reduced.in_degree(i) == 0:
            edges.append((0, 1 + i))
        if reduced.out_degree(i) == 0:
            edges.append((1 + i, top))
    if not inner:
        edges.append((0, top))
    edges.sort()
    return ConceptLattice(specs=tuple(ordered), edges=tuple(edges), context=context)


def _verify_candidates(specs, alphabet, horizon, candidates, workers: int) -> set:
    ordered = sorted(candidates)
    if not ordered:
        return set()
    if workers <= 1:
        spec_strings = [canonical(f) for f in specs]
        return set(_verify_pairs_chunk((spec_strings, alphabet, horizon, ordered)))
    spec_strings = [canonical(f) for f in specs]
    chunk_size = (len(ordered) + workers - 1) // workers
    chunks = [
        (spec_strings, alphabet, horizon, ordered[k : k + chunk_size])
        for k in range(0, len(ordered), chunk_size)
    ]
    confirmed: set = set()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(_verify_pairs_chunk, chunks):
            confirmed.update(result)
    return confirmed


# --------------------------------------------------------------------------
# Disk cache.
# --------------------------------------------------------------------------


def lattice_cache_key(config: GrammarConfig, horizon: int) -> dict:
    return {"grammar": config.describe(), "horizon": horizon}


def save_lattice(lattice: ConceptLattice, path, key: dict | None = None) -> None:
    payload = lattice.to_json()
    if key is not None:
        payload["key"] = key
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2))


def load_lattice(path) -> ConceptLattice:
    return ConceptLattice.from_json(json.loads(Path(path).read_text()))


def load_lattice_if_cached(path, key: dict) -> ConceptLattice | None:
    """Load a cached lattice when its stored key matches, else None."""
    path = Path(path)
    if not path.exists():
        return None
    payload = json.loads(path.read_text())
    if payload.get("key") != key:
        return None
    return ConceptLattice.from_json(payload)
