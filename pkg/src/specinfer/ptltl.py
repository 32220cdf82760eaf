"""Past-time temporal logic over finite traces: syntax, parser, and monitor.

A formula is judged at the final step of a fixed-length valuation (a sequence
of proposition sets).  The monitor is a single forward pass keeping one
Boolean per subformula, so evaluation is O(len(formula) * horizon).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence, TypeVar

from .errors import FormulaSyntaxError, UnknownPropositionError

Valuation = Sequence[frozenset]


@dataclass(frozen=True)
class Formula:
    """Base node; composition via operators (``a & b``, ``~a``, ``a >> b``)."""

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __rshift__(self, other: "Formula") -> "Formula":
        return Implies(self, other)

    def __str__(self) -> str:
        return canonical(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Historically(Formula):
    """True at t iff the argument held at every step up to and including t."""

    arg: Formula


@dataclass(frozen=True)
class Once(Formula):
    """True at t iff the argument held at some step up to and including t."""

    arg: Formula


@dataclass(frozen=True)
class Since(Formula):
    """``(a S b)``: b held at some i <= t and a held at every step in (i, t].

    The triggering step i itself needs b but not a (strong since).
    """

    left: Formula
    right: Formula


TRUE = Const(True)
FALSE = Const(False)

_BINARY_SYMBOL = {And: "&", Or: "|", Implies: "->", Since: "S"}
_UNARY_SYMBOL = {Historically: "H", Once: "P"}


def canonical(f: Formula) -> str:
    """Deterministic fully-parenthesized rendering; round-trips with parse()."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        # every canonical form is self-delimiting after '!': atoms, '(...)',
        # '!...', 'H(...)', 'P(...)'
        return "!" + canonical(f.arg)
    if isinstance(f, (Historically, Once)):
        inner = canonical(f.arg)
        op = _UNARY_SYMBOL[type(f)]
        # reuse the argument's own parentheses when it already carries them
        if inner.startswith("("):
            return op + inner
        return f"{op}({inner})"
    op = _BINARY_SYMBOL[type(f)]
    return f"({canonical(f.left)} {op} {canonical(f.right)})"


def canonical_key(f: Formula) -> tuple[int, str]:
    """Sort key making 'canonically smallest' well defined: shorter, then lexical."""
    s = canonical(f)
    return (len(s), s)


def atoms(f: Formula) -> frozenset:
    """The set of proposition names mentioned by the formula."""
    if isinstance(f, Atom):
        return frozenset((f.name,))
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, (Not, Historically, Once)):
        return atoms(f.arg)
    return atoms(f.left) | atoms(f.right)


# --------------------------------------------------------------------------
# Parsing.  Grammar, loosest to tightest:
#     implication (right assoc) < or < and < since < unary (!, H, P) < primary
# H and P take a parenthesized argument: H(phi), P(phi).
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<and>&)|(?P<or>\|)|(?P<not>!)|(?P<lpar>\()"
    r"|(?P<rpar>\))|(?P<op>[HPS])|(?P<name>[a-z_][a-z0-9_]*))"
)


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise FormulaSyntaxError(
                f"unexpected character {stripped[0]!r}", len(text) - len(stripped)
            )
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, alphabet: frozenset | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.alphabet = alphabet
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self, kind: str) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != kind:
            raise FormulaSyntaxError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.pos
            )
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        tok = self.peek()
        if tok.kind != "end":
            raise FormulaSyntaxError(f"trailing input {tok.text!r}", tok.pos)
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "arrow":
            self.take("arrow")
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek().kind == "or":
            self.take("or")
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.since()
        while self.peek().kind == "and":
            self.take("and")
            f = And(f, self.since())
        return f

    def since(self) -> Formula:
        f = self.unary()
        while self.peek().kind == "op" and self.peek().text == "S":
            self.take("op")
            f = Since(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "not":
            self.take("not")
            return Not(self.unary())
        if tok.kind == "op" and tok.text in ("H", "P"):
            self.take("op")
            self.take("lpar")
            arg = self.implication()
            self.take("rpar")
            return Historically(arg) if tok.text == "H" else Once(arg)
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "lpar":
            self.take("lpar")
            f = self.implication()
            self.take("rpar")
            return f
        if tok.kind == "name":
            self.take("name")
            if tok.text == "true":
                return TRUE
            if tok.text == "false":
                return FALSE
            if self.alphabet is not None and tok.text not in self.alphabet:
                raise UnknownPropositionError(
                    f"unknown proposition {tok.text!r}; alphabet is "
                    f"{sorted(self.alphabet)}"
                )
            return Atom(tok.text)
        raise FormulaSyntaxError(
            f"expected a formula, found {tok.text or 'end of input'!r}", tok.pos
        )


def parse(text: str, alphabet: Iterable | None = None) -> Formula:
    """Parse concrete syntax into a formula.

    If ``alphabet`` is given, propositions outside it are rejected.
    """
    alpha = frozenset(alphabet) if alphabet is not None else None
    return _Parser(text, alpha).parse()


# --------------------------------------------------------------------------
# Evaluation: compiled step program + generic unrolling over any algebra.
# --------------------------------------------------------------------------


def subformulas(f: Formula) -> list[Formula]:
    """Children-before-parents listing, deduplicated (iterative: formulas may
    nest deeply and node hashing is O(subtree), so each node is hashed once)."""
    order: list[Formula] = []
    seen = set()
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        node, expanded = stack.pop()
        if node in seen:
            continue
        if expanded:
            seen.add(node)
            order.append(node)
            continue
        stack.append((node, True))
        if isinstance(node, (Not, Historically, Once)):
            stack.append((node.arg, False))
        elif isinstance(node, (And, Or, Implies, Since)):
            stack.append((node.right, False))
            stack.append((node.left, False))
    return order


# instruction opcodes for compiled formulas
_ATOM, _CONST, _NOT, _AND, _OR, _IMPLIES, _HIST, _ONCE, _SINCE = range(9)

_BINARY_OPCODE = {And: _AND, Or: _OR, Implies: _IMPLIES, Since: _SINCE}


def compile_ops(f: Formula) -> list[tuple]:
    """Flatten a formula into (opcode, a, b) triples over node indices.

    Children precede parents; the last instruction is the root.  Evaluators
    then run on plain integers, avoiding repeated structural hashing.
    """
    nodes = subformulas(f)
    index = {node: k for k, node in enumerate(nodes)}
    ops: list[tuple] = []
    for node in nodes:
        if isinstance(node, Atom):
            ops.append((_ATOM, node.name, None))
        elif isinstance(node, Const):
            ops.append((_CONST, node.value, None))
        elif isinstance(node, Not):
            ops.append((_NOT, index[node.arg], None))
        elif isinstance(node, Historically):
            ops.append((_HIST, index[node.arg], None))
        elif isinstance(node, Once):
            ops.append((_ONCE, index[node.arg], None))
        elif isinstance(node, (And, Or, Implies, Since)):
            ops.append((_BINARY_OPCODE[type(node)], index[node.left], index[node.right]))
        else:  # pragma: no cover - exhaustive over node kinds
            raise TypeError(f"unknown node {node!r}")
    return ops


class MonitorProgram:
    """Step-wise monitor: a tuple of Booleans, one per subformula node.

    ``start`` consumes the first proposition set, ``step`` each later one;
    ``accepts`` reads the top node's current truth.
    """

    def __init__(self, formula: Formula):
        self.formula = formula
        self.ops = compile_ops(formula)

    def _update(self, prev: tuple | None, props: frozenset) -> tuple:
        cur: list[bool] = []
        for k, (opcode, a, b) in enumerate(self.ops):
            if opcode == _ATOM:
                v = a in props
            elif opcode == _CONST:
                v = a
            elif opcode == _NOT:
                v = not cur[a]
            elif opcode == _AND:
                v = cur[a] and cur[b]
            elif opcode == _OR:
                v = cur[a] or cur[b]
            elif opcode == _IMPLIES:
                v = (not cur[a]) or cur[b]
            elif opcode == _HIST:
                v = cur[a] and (prev is None or prev[k])
            elif opcode == _ONCE:
                v = cur[a] or (prev is not None and prev[k])
            else:  # since
                v = cur[b] or (cur[a] and prev is not None and prev[k])
            cur.append(v)
        return tuple(cur)

    def start(self, props: frozenset) -> tuple:
        return self._update(None, props)

    def step(self, state: tuple, props: frozenset) -> tuple:
        return self._update(state, props)

    def accepts(self, state: tuple) -> bool:
        return state[-1]


def evaluate(f: Formula, valuation: Valuation) -> bool:
    """Truth of ``f`` at the final step of ``valuation`` (which must be nonempty)."""
    if len(valuation) == 0:
        raise ValueError("valuation must be nonempty")
    program = MonitorProgram(f)
    state = program.start(valuation[0])
    for props in valuation[1:]:
        state = program.step(state, props)
    return program.accepts(state)


def evaluate_many(f: Formula, valuations) -> list[bool]:
    """Final-step truth of ``f`` on many valuations, compiling once."""
    program = MonitorProgram(f)
    out = []
    for valuation in valuations:
        state = program.start(valuation[0])
        for props in valuation[1:]:
            state = program.step(state, props)
        out.append(program.accepts(state))
    return out


T = TypeVar("T")


def unroll(
    f: Formula,
    horizon: int,
    atom_at: Callable[[int, str], T],
    const: Callable[[bool], T],
    land: Callable[[T, T], T],
    lor: Callable[[T, T], T],
    lnot: Callable[[T], T],
) -> T:
    """Evaluate the monitor recurrence in an arbitrary Boolean algebra.

    ``atom_at(t, name)`` supplies the step-t truth of a proposition as an
    algebra element.  Used for symbolic (BDD) and vectorized (numpy) semantics.
    """
    ops = compile_ops(f)
    prev: list[T] | None = None
    for t in range(horizon):
        cur: list[T] = []
        for k, (opcode, a, b) in enumerate(ops):
            if opcode == _ATOM:
                v = atom_at(t, a)
            elif opcode == _CONST:
                v = const(a)
            elif opcode == _NOT:
                v = lnot(cur[a])
            elif opcode == _AND:
                v = land(cur[a], cur[b])
            elif opcode == _OR:
                v = lor(cur[a], cur[b])
            elif opcode == _IMPLIES:
                v = lor(lnot(cur[a]), cur[b])
            elif opcode == _HIST:
                v = cur[a]
                if prev is not None:
                    v = land(v, prev[k])
            elif opcode == _ONCE:
                v = cur[a]
                if prev is not None:
                    v = lor(v, prev[k])
            else:  # since
                v = cur[b]
                if prev is not None:
                    v = lor(v, land(cur[a], prev[k]))
            cur.append(v)
        prev = cur
    assert prev is not None
    return prev[-1]


# --------------------------------------------------------------------------
# Demonstration membership.
# --------------------------------------------------------------------------


class Membership(NamedTuple):
    """Count of satisfying demonstrations plus their indices (the subset S)."""

    n_sat: int
    satisfied: tuple[int, ...]


def valuation_of(trace, labeling) -> tuple:
    """Project a trace onto its per-step proposition sets via the labeling."""
    return tuple(labeling[state] for state, _action in trace.steps)


def membership_count(f: Formula, demos, labeling) -> Membership:
    """N = number of demonstrations whose valuation satisfies ``f``."""
    if len(demos.traces) == 0:
        raise ValueError("demonstration set must be nonempty")
    results = evaluate_many(
        f, [valuation_of(trace, labeling) for trace in demos.traces]
    )
    satisfied = tuple(i for i, ok in enumerate(results) if ok)
    return Membership(len(satisfied), satisfied)
