from __future__ import annotations

import itertools
import random

from specinfer.bdd import BDD


def eval_node(manager: BDD, node: int, assignment: dict) -> bool:
    while node not in (BDD.FALSE, BDD.TRUE):
        level, lo, hi = manager._nodes[node]
        node = hi if assignment[level] else lo
    return node == BDD.TRUE


def brute_count(manager: BDD, node: int) -> int:
    n = manager.num_vars
    return sum(
        eval_node(manager, node, dict(enumerate(bits)))
        for bits in itertools.product((False, True), repeat=n)
    )


def test_terminals_and_vars():
    m = BDD()
    m.add_vars(3)
    x = m.var(0)
    assert m.lnot(m.lnot(x)) == x
    assert m.land(x, m.lnot(x)) == BDD.FALSE
    assert m.lor(x, m.lnot(x)) == BDD.TRUE
    assert m.count(BDD.TRUE) == 8
    assert m.count(x) == 4


def test_hash_consing_gives_semantic_equality():
    m = BDD()
    m.add_vars(2)
    a, b = m.var(0), m.var(1)
    lhs = m.lnot(m.land(a, b))
    rhs = m.lor(m.lnot(a), m.lnot(b))
    assert lhs == rhs


def test_random_expressions_against_truth_tables():
    rng = random.Random(4)
    m = BDD()
    m.add_vars(5)

    def random_node(depth):
        if depth == 0 or rng.random() < 0.3:
            return m.var(rng.randrange(5))
        op = rng.choice(("and", "or", "not", "ite"))
        if op == "not":
            return m.lnot(random_node(depth - 1))
        if op == "ite":
            return m.ite(
                random_node(depth - 1), random_node(depth - 1), random_node(depth - 1)
            )
        f, g = random_node(depth - 1), random_node(depth - 1)
        return m.land(f, g) if op == "and" else m.lor(f, g)

    for _ in range(40):
        node = random_node(4)
        assert m.count(node) == brute_count(m, node)


def test_implies_everywhere():
    m = BDD()
    m.add_vars(3)
    a, b = m.var(0), m.var(1)
    assert m.implies_everywhere(m.land(a, b), a)
    assert not m.implies_everywhere(a, m.land(a, b))
    assert m.implies_everywhere(BDD.FALSE, a)
    assert m.implies_everywhere(a, BDD.TRUE)


def test_cube_and_count():
    m = BDD()
    m.add_vars(4)
    cube = m.cube([(0, True), (2, False)])
    assert m.count(cube) == 4  # two free variables


def test_range_cube_matches_enumeration():
    m = BDD()
    levels = list(m.add_vars(4))
    for lo, hi in ((0, 16), (3, 11), (5, 5), (0, 1), (15, 16)):
        node = m.range_cube(levels, lo, hi)
        expected = set(range(lo, hi))
        got = set()
        for bits in itertools.product((0, 1), repeat=4):
            value = int("".join(map(str, bits)), 2)
            if eval_node(m, node, dict(zip(levels, map(bool, bits)))):
                got.add(value)
        assert got == expected
        assert m.count(node) == len(expected)
