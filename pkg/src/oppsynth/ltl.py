"""Co-safe temporal logic formulas and their translation to finite automata.

The temporal fragment handled here uses only the operators next, until and
eventually, in positive normal form.  Every formula in this fragment is
satisfied or refuted by a finite prefix of a word, so it compiles to a
deterministic finite automaton over the powerset alphabet whose accepted
words are exactly the finite prefixes that settle the formula positively.

Translation is by formula progression: the automaton states are the
distinct residual formulas left after consuming input symbols, reduced to
a canonical form so that state identity is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence


class LtlError(Exception):
    """Base class for formula handling errors."""


class LtlSyntaxError(LtlError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownAtomError(LtlError):
    def __init__(self, name, position=None):
        at = f" (at position {position})" if position is not None else ""
        super().__init__(f"unknown atomic proposition '{name}'{at}")
        self.name = name


class NotCoSafeError(LtlError):
    def __init__(self, subformula, reason):
        super().__init__(f"not co-safe: {reason}: {subformula}")
        self.subformula = subformula


class StateBudgetError(LtlError):
    def __init__(self, budget):
        super().__init__(f"automaton construction exceeded {budget} states")
        self.budget = budget


# ---------------------------------------------------------------------------
# Formula AST


@dataclass(frozen=True)
class Formula:
    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


TRUE = TrueFormula()
FALSE = FalseFormula()


def formula_atoms(f: Formula) -> frozenset[str]:
    """Names of all atomic propositions occurring in the formula."""
    if isinstance(f, Atom):
        return frozenset([f.name])
    if isinstance(f, (TrueFormula, FalseFormula)):
        return frozenset()
    if isinstance(f, (Not, Next, Eventually)):
        return formula_atoms(f.operand)
    return formula_atoms(f.left) | formula_atoms(f.right)


def format_formula(f: Formula) -> str:
    """Render using the ASCII operator aliases accepted by the parser."""
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, FalseFormula):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"!{_fmt_tight(f.operand)}"
    if isinstance(f, Next):
        return f"X {_fmt_tight(f.operand)}"
    if isinstance(f, Eventually):
        return f"F {_fmt_tight(f.operand)}"
    if isinstance(f, Until):
        return f"({format_formula(f.left)} U {format_formula(f.right)})"
    if isinstance(f, And):
        return f"({format_formula(f.left)} & {format_formula(f.right)})"
    if isinstance(f, Or):
        return f"({format_formula(f.left)} | {format_formula(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def _fmt_tight(f: Formula) -> str:
    if isinstance(f, (TrueFormula, FalseFormula, Atom, Not, Next, Eventually)):
        return format_formula(f)
    return f"({format_formula(f)})"


# ---------------------------------------------------------------------------
# Parser
#
# Precedence, tightest first: unary (! X F), U (right-associative), &, |.

_UNARY = {"!": Not, "X": Next, "F": Eventually}
_KEYWORDS = {"true", "false", "U", "X", "F"}
_GLYPHS = {
    "¬": "!",   # negation sign
    "○": "X",   # next
    "◯": "X",
    "◇": "F",   # eventually
    "⊤": "true",
    "⊥": "false",
    "∧": "&",
    "∨": "|",
    "\U0001d4b0": "U",
}


def _tokenize(text):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _GLYPHS:
            tokens.append((_GLYPHS[c], i))
            i += 1
            continue
        if c in "!&|()":
            tokens.append((c, i))
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append((text[i:j], i))
            i = j
            continue
        raise LtlSyntaxError(f"unexpected character {c!r}", i)
    return tokens


class _Parser:
    def __init__(self, tokens, ap):
        self.tokens = tokens
        self.pos = 0
        self.ap = ap

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def here(self):
        return self.tokens[self.pos][1] if self.pos < len(self.tokens) else -1

    def parse(self):
        f = self.parse_or()
        if self.pos < len(self.tokens):
            raise LtlSyntaxError(f"trailing input {self.peek()!r}", self.here())
        return f

    def parse_or(self):
        f = self.parse_and()
        while self.peek() == "|":
            self.next()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self):
        f = self.parse_until()
        while self.peek() == "&":
            self.next()
            f = And(f, self.parse_until())
        return f

    def parse_until(self):
        f = self.parse_unary()
        if self.peek() == "U":
            self.next()
            return Until(f, self.parse_until())
        return f

    def parse_unary(self):
        tok = self.peek()
        if tok in _UNARY:
            _, pos = self.next()
            return _UNARY[tok](self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        if self.pos >= len(self.tokens):
            raise LtlSyntaxError("unexpected end of input", -1)
        tok, pos = self.next()
        if tok == "(":
            f = self.parse_or()
            if self.peek() != ")":
                raise LtlSyntaxError("expected ')'", self.here())
            self.next()
            return f
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in _KEYWORDS or tok in "!&|()":
            raise LtlSyntaxError(f"unexpected token {tok!r}", pos)
        if tok not in self.ap:
            raise UnknownAtomError(tok, pos)
        return Atom(tok)


def parse_formula(text: str, ap: Iterable[str]) -> Formula:
    """Parse a formula over the declared atomic propositions.

    Raises LtlSyntaxError on malformed input and UnknownAtomError when an
    identifier is not in `ap`.
    """
    if not text or not text.strip():
        raise LtlSyntaxError("empty formula", 0)
    return _Parser(_tokenize(text), frozenset(ap)).parse()


# ---------------------------------------------------------------------------
# Positive normal form / co-safety check


def check_cosafe(f: Formula) -> Formula:
    """Rewrite into positive normal form and verify the co-safe fragment.

    Negations are pushed down to atoms by De Morgan's laws and operator
    duality.  A negated until or eventually would require an operator
    outside the fragment, so those raise NotCoSafeError.
    """
    return _pnf(f, negate=False)


def _pnf(f, negate):
    if isinstance(f, TrueFormula):
        return FALSE if negate else TRUE
    if isinstance(f, FalseFormula):
        return TRUE if negate else FALSE
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return _pnf(f.operand, not negate)
    if isinstance(f, And):
        cls = Or if negate else And
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Or):
        cls = And if negate else Or
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Next):
        return Next(_pnf(f.operand, negate))
    if isinstance(f, Until):
        if negate:
            raise NotCoSafeError(Not(f), "negated until needs a release operator")
        return Until(_pnf(f.left, False), _pnf(f.right, False))
    if isinstance(f, Eventually):
        if negate:
            raise NotCoSafeError(Not(f), "negated eventually needs an always operator")
        return Eventually(_pnf(f.operand, False))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Canonical form
#
# Progressed formulas are reduced so that equal residual languages (up to
# the Boolean laws applied here) map to one state: constants folded,
# conjunct/disjunct lists flattened, sorted, deduplicated, and absorbed.


_ORDER = (FalseFormula, TrueFormula, Atom, Not, Next, Eventually, Until, And, Or)
_TAG = {cls: i for i, cls in enumerate(_ORDER)}


def _key(f):
    tag = _TAG[type(f)]
    if isinstance(f, Atom):
        return (tag, f.name)
    if isinstance(f, (Not, Next, Eventually)):
        return (tag, _key(f.operand))
    if isinstance(f, (And, Or, Until)):
        return (tag, _key(f.left), _key(f.right))
    return (tag,)


def _flatten(f, cls):
    if isinstance(f, cls):
        yield from _flatten(f.left, cls)
        yield from _flatten(f.right, cls)
    else:
        yield f


def _rebuild(items, cls):
    out = items[-1]
    for x in reversed(items[:-1]):
        out = cls(x, out)
    return out


def _assoc(parts, cls, unit, zero):
    seen = {}
    for p in parts:
        if p == zero:
            return zero
        if p != unit:
            seen[_key(p)] = p
    if not seen:
        return unit
    items = [seen[k] for k in sorted(seen)]
    # absorption: inside a conjunction a disjunction containing another
    # conjunct is redundant, and dually
    dual = Or if cls is And else And
    keys = set(seen)
    kept = [
        x
        for x in items
        if not (
            isinstance(x, dual)
            and any(_key(d) in keys for d in _flatten(x, dual))
        )
    ]
    if len(kept) == 1:
        return kept[0]
    return _rebuild(kept, cls)


def conj(parts: Iterable[Formula]) -> Formula:
    return _assoc(parts, And, TRUE, FALSE)


def disj(parts: Iterable[Formula]) -> Formula:
    return _assoc(parts, Or, FALSE, TRUE)


def canonical(f: Formula) -> Formula:
    """Canonical representative of a formula in positive normal form."""
    if isinstance(f, (TrueFormula, FalseFormula, Atom, Not)):
        return f
    if isinstance(f, And):
        return conj([canonical(p) for p in _flatten(f, And)])
    if isinstance(f, Or):
        return disj([canonical(p) for p in _flatten(f, Or)])
    if isinstance(f, Next):
        g = canonical(f.operand)
        if g == FALSE or g == TRUE:
            return g
        return Next(g)
    if isinstance(f, Eventually):
        g = canonical(f.operand)
        if g == FALSE:
            return FALSE
        if isinstance(g, Eventually):
            return g
        return Eventually(g)
    if isinstance(f, Until):
        left = canonical(f.left)
        right = canonical(f.right)
        if right == FALSE:
            return FALSE
        if right == TRUE:
            return Eventually(TRUE)
        if left == FALSE:
            return right
        if left == TRUE:
            return canonical(Eventually(right))
        return Until(left, right)
    raise TypeError(f"not a formula: {f!r}")


def progress(f: Formula, symbol: frozenset[str]) -> Formula:
    """Residual formula after the current position carries `symbol`."""
    if isinstance(f, TrueFormula) or isinstance(f, FalseFormula):
        return f
    if isinstance(f, Atom):
        return TRUE if f.name in symbol else FALSE
    if isinstance(f, Not):
        return FALSE if f.operand.name in symbol else TRUE
    if isinstance(f, And):
        return conj([progress(f.left, symbol), progress(f.right, symbol)])
    if isinstance(f, Or):
        return disj([progress(f.left, symbol), progress(f.right, symbol)])
    if isinstance(f, Next):
        return f.operand
    if isinstance(f, Until):
        return disj([progress(f.right, symbol),
                     conj([progress(f.left, symbol), f])])
    if isinstance(f, Eventually):
        return disj([progress(f.operand, symbol), f])
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# DFA


@dataclass
class Dfa:
    """Complete deterministic finite automaton over a powerset alphabet.

    Transitions map (state, symbol) to a state, where a symbol is the
    frozen set of propositions holding at a position.  Treated as
    immutable after construction.
    """

    states: tuple[int, ...]
    alphabet_props: tuple[str, ...]
    initial: int
    accepting: frozenset[int]
    transitions: dict = field(repr=False)
    sink: int | None = None

    def symbols(self) -> Iterator[frozenset[str]]:
        props = self.alphabet_props
        for bits in range(1 << len(props)):
            yield frozenset(p for i, p in enumerate(props) if bits >> i & 1)

    def step(self, state: int, symbol: frozenset[str]) -> int:
        return self.transitions[(state, frozenset(symbol))]

    def is_complete(self) -> bool:
        return all((q, sym) in self.transitions
                   for q in self.states for sym in self.symbols())


def validate_dfa(d: Dfa) -> None:
    """Raise ValueError if structural invariants do not hold."""
    states = set(d.states)
    if d.initial not in states:
        raise ValueError(f"initial state {d.initial} not a state")
    if not d.accepting <= states:
        raise ValueError("accepting states outside the state set")
    for (q, sym), q2 in d.transitions.items():
        if q not in states or q2 not in states:
            raise ValueError(f"transition {q}--{set(sym)}-->{q2} uses unknown state")
        if not sym <= set(d.alphabet_props):
            raise ValueError(f"symbol {set(sym)} outside declared propositions")
    if d.sink is not None:
        if d.sink in d.accepting:
            raise ValueError("sink state must not accept")
        if any(d.transitions[(d.sink, sym)] != d.sink for sym in d.symbols()):
            raise ValueError("sink state must loop on every symbol")


def to_dfa(f: Formula, ap: Sequence[str], max_states: int = 10**6) -> Dfa:
    """Compile a co-safe formula to the complete DFA of its good prefixes.

    `ap` fixes the alphabet ordering and must cover the formula's atoms.
    States are numbered in discovery order from the initial residual;
    the residual `true` accepts and the residual `false` is the sink.
    """
    missing = formula_atoms(f) - set(ap)
    if missing:
        raise UnknownAtomError(sorted(missing)[0])
    f0 = canonical(check_cosafe(f))
    props = tuple(ap)
    symbols = list(Dfa(states=(), alphabet_props=props, initial=0,
                       accepting=frozenset(), transitions={}).symbols())
    ids = {f0: 0}
    order = [f0]
    transitions = {}
    frontier = [f0]
    while frontier:
        g = frontier.pop()
        src = ids[g]
        for sym in symbols:
            h = progress(g, sym)
            if h not in ids:
                if len(ids) >= max_states:
                    raise StateBudgetError(max_states)
                ids[h] = len(order)
                order.append(h)
                frontier.append(h)
            transitions[(src, sym)] = ids[h]
    accepting = frozenset([ids[TRUE]]) if TRUE in ids else frozenset()
    sink = ids.get(FALSE)
    return Dfa(
        states=tuple(range(len(order))),
        alphabet_props=props,
        initial=0,
        accepting=accepting,
        transitions=transitions,
        sink=sink,
    )


def complete_dfa(d: Dfa) -> Dfa:
    """Route undefined transitions to a fresh non-accepting looping sink.

    Already-complete automata are returned unchanged (same object).
    """
    symbols = list(d.symbols())
    missing = [(q, sym) for q in d.states for sym in symbols
               if (q, sym) not in d.transitions]
    if not missing:
        return d
    sink = max(d.states, default=-1) + 1
    transitions = dict(d.transitions)
    for q, sym in missing:
        transitions[(q, sym)] = sink
    for sym in symbols:
        transitions[(sink, sym)] = sink
    return Dfa(
        states=d.states + (sink,),
        alphabet_props=d.alphabet_props,
        initial=d.initial,
        accepting=d.accepting,
        transitions=transitions,
        sink=d.sink if d.sink is not None else sink,
    )


def dfa_accepts(d: Dfa, word: Sequence[Iterable[str]]) -> bool:
    """Run the word from the initial state; accept if the run ends accepting."""
    props = set(d.alphabet_props)
    q = d.initial
    for sym in word:
        s = frozenset(sym)
        if not s <= props:
            raise ValueError(f"symbol {set(s)} outside the automaton's propositions")
        q = d.transitions[(q, s)]
    return q in d.accepting
