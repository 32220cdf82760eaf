from __future__ import annotations

import pytest

from specinfer.automaton import (
    GridworldSpec,
    build_gridworld,
    sample_random_traces,
)


@pytest.fixture(scope="session")
def toy_world():
    """A 3x3 deterministic gridworld with a handful of sampled traces."""
    grid = GridworldSpec(
        width=3,
        height=3,
        tiles=(
            ("yellow", "white", "red"),
            ("white", "white", "blue"),
            ("brown", "white", "white"),
        ),
        start=(1, 1),
    )
    automaton = build_gridworld(grid)
    demos = sample_random_traces(automaton, horizon=5, count=8, seed=42)
    return automaton, demos
