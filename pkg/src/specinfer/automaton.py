"""Probabilistic automata, traces, demonstration sets, and gridworlds.

States and actions are integer indices.  Transition distributions are stored
as tuples of (successor, probability) pairs with float probabilities; dyadic
probabilities (k / 2^m) stay exact because binary floats represent them
exactly.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InvalidTraceError

PROB_TOLERANCE = 1e-12

#: tile colors used by gridworlds; white carries no proposition
GRID_COLORS = ("yellow", "red", "blue", "brown", "white")
_GRID_CHARS = {"y": "yellow", "r": "red", "b": "blue", "d": "brown", ".": "white"}
_GRID_CHAR_OF = {v: k for k, v in _GRID_CHARS.items()}

ACTIONS_NSEW = ("north", "south", "east", "west")


@dataclass(frozen=True)
class ProbabilisticAutomaton:
    """Finite-state machine with stochastic transitions and labeled states."""

    num_states: int
    initial_state: int
    num_actions: int
    #: transitions[state][action] -> tuple of (successor, probability)
    transitions: tuple
    #: labeling[state] -> frozenset of proposition names
    labeling: tuple
    alphabet: frozenset
    state_names: tuple = ()
    action_names: tuple = ()

    def __post_init__(self):
        if not (0 <= self.initial_state < self.num_states):
            raise ValueError("initial state out of range")
        if len(self.transitions) != self.num_states:
            raise ValueError("one transition row per state required")
        for s, row in enumerate(self.transitions):
            if len(row) != self.num_actions:
                raise ValueError(f"state {s}: one distribution per action required")
            for a, dist in enumerate(row):
                total = 0.0
                for succ, p in dist:
                    if not (0 <= succ < self.num_states):
                        raise ValueError(f"bad successor {succ} at ({s},{a})")
                    if p < 0:
                        raise ValueError(f"negative probability at ({s},{a})")
                    total += p
                if abs(total - 1.0) > PROB_TOLERANCE:
                    raise ValueError(
                        f"probabilities at state {s}, action {a} sum to {total}"
                    )
        for s, props in enumerate(self.labeling):
            extra = props - self.alphabet
            if extra:
                raise ValueError(f"state {s} labeled with undeclared {sorted(extra)}")

    def probability(self, state: int, action: int, successor: int) -> float:
        for succ, p in self.transitions[state][action]:
            if succ == successor:
                return p
        return 0.0

    def successors(self, state: int, action: int) -> tuple:
        return self.transitions[state][action]

    def is_deterministic(self) -> bool:
        return all(
            p in (0.0, 1.0)
            for row in self.transitions
            for dist in row
            for _, p in dist
        )


@dataclass(frozen=True)
class Trace:
    """A fixed-length sequence of (state, action) pairs."""

    steps: tuple
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if len(self.steps) != self.horizon:
            raise ValueError(
                f"trace length {len(self.steps)} != declared horizon {self.horizon}"
            )

    @classmethod
    def of(cls, steps: Iterable) -> "Trace":
        steps = tuple((int(s), int(a)) for s, a in steps)
        return cls(steps, len(steps))


@dataclass(frozen=True)
class DemoSet:
    """A multiset of same-horizon traces."""

    traces: tuple
    horizon: int

    def __post_init__(self):
        for t in self.traces:
            if t.horizon != self.horizon:
                raise ValueError("all demonstrations must share one horizon")

    def __len__(self) -> int:
        return len(self.traces)

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "traces": [[[s, a] for s, a in t.steps] for t in self.traces],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "DemoSet":
        horizon = int(payload["horizon"])
        traces = tuple(Trace.of(steps) for steps in payload["traces"])
        return cls(traces, horizon)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, indent=2))

    @classmethod
    def load(cls, path) -> "DemoSet":
        return cls.from_json(json.loads(Path(path).read_text()))


def trace_weight(trace: Trace, m: ProbabilisticAutomaton) -> float:
    """Product of transition probabilities along the trace's internal steps.

    The final action has no recorded successor and contributes no factor.
    """
    steps = trace.steps
    if steps[0][0] != m.initial_state:
        raise InvalidTraceError(
            f"trace starts at state {steps[0][0]}, automaton at {m.initial_state}"
        )
    for s, a in steps:
        if not (0 <= s < m.num_states and 0 <= a < m.num_actions):
            raise InvalidTraceError(f"step ({s},{a}) out of range")
    weight = 1.0
    for (s, a), (s_next, _) in zip(steps, steps[1:]):
        weight *= m.probability(s, a, s_next)
    return weight


def trace_weight_fraction(trace: Trace, m: ProbabilisticAutomaton) -> Fraction:
    """Exact-rational variant of trace_weight (floats convert exactly)."""
    steps = trace.steps
    if steps[0][0] != m.initial_state:
        raise InvalidTraceError("trace initial state mismatch")
    weight = Fraction(1)
    for (s, a), (s_next, _) in zip(steps, steps[1:]):
        weight *= Fraction(m.probability(s, a, s_next))
    return weight


def is_feasible(trace: Trace, m: ProbabilisticAutomaton) -> bool:
    """Every internal transition has positive probability."""
    return trace_weight(trace, m) > 0.0


def sample_random_traces(
    m: ProbabilisticAutomaton, horizon: int, count: int, seed: int
) -> DemoSet:
    """i.i.d. traces under the uniformly-random action policy; seeded."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = random.Random(seed)
    traces = []
    for _ in range(count):
        state = m.initial_state
        steps = []
        for t in range(horizon):
            action = rng.randrange(m.num_actions)
            steps.append((state, action))
            if t < horizon - 1:
                dist = m.transitions[state][action]
                r = rng.random()
                acc = 0.0
                state = dist[-1][0]
                for succ, p in dist:
                    acc += p
                    if r < acc:
                        state = succ
                        break
        traces.append(Trace(tuple(steps), horizon))
    return DemoSet(tuple(traces), horizon)


# --------------------------------------------------------------------------
# Gridworlds.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GridworldSpec:
    """A rectangular world of colored tiles with cardinal movement.

    Moving into a wall leaves the agent in place.  With probability
    ``slip_probability`` the chosen action is replaced by a uniformly random
    one (0 = deterministic movement).
    """

    width: int
    height: int
    tiles: tuple  # row-major tuple of rows, each a tuple of color names
    start: tuple  # (row, col)
    slip_probability: float = 0.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        if len(self.tiles) != self.height or any(
            len(row) != self.width for row in self.tiles
        ):
            raise ValueError("tile grid does not match declared dimensions")
        for row in self.tiles:
            for color in row:
                if color not in GRID_COLORS:
                    raise ValueError(f"unknown tile color {color!r}")
        r, c = self.start
        if not (0 <= r < self.height and 0 <= c < self.width):
            raise ValueError("start cell outside the grid")
        if not (0 <= self.slip_probability < 1):
            raise ValueError("slip probability must lie in [0, 1)")

    def cell_index(self, row: int, col: int) -> int:
        return row * self.width + col


def parse_gridworld(text: str, slip_probability: float = 0.0) -> GridworldSpec:
    """Parse the one-row-per-line text format.

    Characters: ``y`` yellow, ``r`` red, ``b`` blue, ``d`` brown, ``.`` white,
    ``@`` start (a white tile).
    """
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty gridworld text")
    start = None
    tiles = []
    for r, line in enumerate(rows):
        row = []
        for c, ch in enumerate(line.strip()):
            if ch == "@":
                if start is not None:
                    raise ValueError("multiple start cells")
                start = (r, c)
                row.append("white")
            elif ch in _GRID_CHARS:
                row.append(_GRID_CHARS[ch])
            else:
                raise ValueError(f"unknown tile character {ch!r}")
        tiles.append(tuple(row))
    if start is None:
        raise ValueError("no start cell ('@') given")
    return GridworldSpec(
        width=len(tiles[0]),
        height=len(tiles),
        tiles=tuple(tiles),
        start=start,
        slip_probability=slip_probability,
    )


def format_gridworld(g: GridworldSpec) -> str:
    lines = []
    for r, row in enumerate(g.tiles):
        chars = [_GRID_CHAR_OF[color] for color in row]
        if g.start[0] == r:
            chars[g.start[1]] = "@"
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def load_gridworld(path, slip_probability: float = 0.0) -> GridworldSpec:
    return parse_gridworld(Path(path).read_text(), slip_probability)


def build_gridworld(g: GridworldSpec) -> ProbabilisticAutomaton:
    """Compile a gridworld into a probabilistic automaton.

    States are cells in row-major order; actions are north, south, east, west.
    """
    moves = ((-1, 0), (1, 0), (0, 1), (0, -1))  # n, s, e, w

    def clamp_move(r: int, c: int, a: int) -> int:
        dr, dc = moves[a]
        nr, nc = r + dr, c + dc
        if not (0 <= nr < g.height and 0 <= nc < g.width):
            nr, nc = r, c
        return g.cell_index(nr, nc)

    slip = g.slip_probability
    n_actions = len(ACTIONS_NSEW)
    transitions = []
    labeling = []
    state_names = []
    for r in range(g.height):
        for c in range(g.width):
            row = []
            for a in range(n_actions):
                mass: dict[int, float] = {}
                mass[clamp_move(r, c, a)] = 1.0 - slip
                if slip > 0:
                    for b in range(n_actions):
                        dest = clamp_move(r, c, b)
                        mass[dest] = mass.get(dest, 0.0) + slip / n_actions
                row.append(tuple(sorted(mass.items())))
            transitions.append(tuple(row))
            color = g.tiles[r][c]
            labeling.append(
                frozenset() if color == "white" else frozenset((color,))
            )
            state_names.append(f"({r},{c})")
    return ProbabilisticAutomaton(
        num_states=g.width * g.height,
        initial_state=g.cell_index(*g.start),
        num_actions=n_actions,
        transitions=tuple(transitions),
        labeling=tuple(labeling),
        alphabet=frozenset(c for c in GRID_COLORS if c != "white"),
        state_names=tuple(state_names),
        action_names=ACTIONS_NSEW,
    )
