"""Variables with finite frames, the product space they span, and the
propositional formula language used to name its subsets.

A :class:`ProductFrame` fixes an ordered list of variables, each with a
finite frame of mutually exclusive values.  Points of the product space
are indexed by mixed-radix encoding over the declared variable order
(first variable slowest, last fastest), so subsets can be carried around
as plain bitmasks.  Formulas are small ASTs; ``extension`` translates a
formula into the subset of points satisfying it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import prod
from typing import Iterator, Sequence

from .errors import FormulaError, FormulaSyntaxError, FrameMismatch, FrameTooLarge

#: Default cap on the number of points of the product space.
DEFAULT_MAX_THETA = 1 << 16

BOOLEAN_FRAME = ("Yes", "No")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ProductFrame:
    """Ordered variables and the product space of their value frames.

    Immutable after construction; safe to share between threads.
    """

    __slots__ = ("_names", "_values", "_positions", "_strides", "theta_size", "_atom_bits")

    def __init__(self, variables: Sequence[tuple[str, Sequence[str]]], *,
                 max_theta: int = DEFAULT_MAX_THETA):
        names: list[str] = []
        values: list[tuple[str, ...]] = []
        for name, frame in variables:
            if not _IDENT_RE.match(name):
                raise FormulaError(f"variable name {name!r} is not a valid identifier")
            if name in names:
                raise FormulaError(f"duplicate variable name {name!r}")
            vals = tuple(frame)
            if not vals:
                raise FormulaError(f"variable {name!r} has an empty frame")
            if len(set(vals)) != len(vals):
                raise FormulaError(f"variable {name!r} repeats a value")
            for v in vals:
                if not _IDENT_RE.match(v):
                    raise FormulaError(f"value {v!r} of variable {name!r} is not a valid identifier")
            names.append(name)
            values.append(vals)
        if not names:
            raise FormulaError("a frame needs at least one variable")
        self._names = tuple(names)
        self._values = tuple(values)
        self._positions = {n: i for i, n in enumerate(names)}
        size = prod(len(v) for v in values)
        if size > max_theta:
            raise FrameTooLarge(f"product space has {size} points, cap is {max_theta}")
        self.theta_size = size
        # stride of variable i: product of the frame sizes to its right
        strides = [1] * len(names)
        for i in range(len(names) - 2, -1, -1):
            strides[i] = strides[i + 1] * len(values[i + 1])
        self._strides = tuple(strides)
        # precomputed so instances stay strictly immutable after construction
        atom_bits: dict[tuple[int, int], int] = {}
        for pos, frame_values in enumerate(values):
            stride, width = strides[pos], len(frame_values)
            for idx in range(size):
                digit = (idx // stride) % width
                key = (pos, digit)
                atom_bits[key] = atom_bits.get(key, 0) | (1 << idx)
        self._atom_bits = atom_bits

    # -- variable/value lookup -------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def values(self, name: str) -> tuple[str, ...]:
        return self._values[self.position(name)]

    def position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise FormulaError(f"unknown variable {name!r}") from None

    def is_boolean(self, name: str) -> bool:
        return set(self._values[self.position(name)]) == set(BOOLEAN_FRAME)

    def value_index(self, name: str, value: str) -> int:
        pos = self.position(name)
        try:
            return self._values[pos].index(value)
        except ValueError:
            raise FormulaError(f"variable {name!r} has no value {value!r}") from None

    # -- points ----------------------------------------------------------

    def point(self, **assignment: str) -> int:
        """Index of the point assigning each variable the given value."""
        if set(assignment) != set(self._names):
            missing = set(self._names) - set(assignment)
            extra = set(assignment) - set(self._names)
            detail = []
            if missing:
                detail.append(f"missing {sorted(missing)}")
            if extra:
                detail.append(f"unknown {sorted(extra)}")
            raise FormulaError("point assignment " + ", ".join(detail))
        idx = 0
        for name, value in assignment.items():
            pos = self.position(name)
            idx += self.value_index(name, value) * self._strides[pos]
        return idx

    def points(self) -> range:
        return range(self.theta_size)

    def point_values(self, index: int) -> tuple[str, ...]:
        out = []
        for pos in range(len(self._names)):
            digit = (index // self._strides[pos]) % len(self._values[pos])
            out.append(self._values[pos][digit])
        return tuple(out)

    def value_at(self, index: int, name: str) -> str:
        pos = self.position(name)
        digit = (index // self._strides[pos]) % len(self._values[pos])
        return self._values[pos][digit]

    def point_label(self, index: int) -> str:
        pairs = ",".join(f"{n}={v}" for n, v in zip(self._names, self.point_values(index)))
        return f"({pairs})"

    # -- subsets ---------------------------------------------------------

    @property
    def full_bits(self) -> int:
        return (1 << self.theta_size) - 1

    def subset(self, bits: int) -> "SubsetOfTheta":
        return SubsetOfTheta(self, bits)

    def empty(self) -> "SubsetOfTheta":
        return SubsetOfTheta(self, 0)

    def full(self) -> "SubsetOfTheta":
        return SubsetOfTheta(self, self.full_bits)

    def subset_of_points(self, indices) -> "SubsetOfTheta":
        bits = 0
        for i in indices:
            bits |= 1 << i
        return SubsetOfTheta(self, bits)

    def atom_bits(self, name: str, value: str) -> int:
        """Bitmask of the points whose ``name``-value is ``value``."""
        return self._atom_bits[(self.position(name), self.value_index(name, value))]

    # -- identity --------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, ProductFrame):
            return NotImplemented
        return self._names == other._names and self._values == other._values

    def __hash__(self):
        return hash((self._names, self._values))

    def __repr__(self):
        inner = ", ".join(f"{n}:{'/'.join(v)}" for n, v in zip(self._names, self._values))
        return f"ProductFrame({inner})"


@dataclass(frozen=True)
class SubsetOfTheta:
    """A subset of the product space, held as a bitmask over point indices."""

    frame: ProductFrame
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits <= self.frame.full_bits:
            raise ValueError(f"bitmask {self.bits:#x} out of range for {self.frame!r}")

    def _check(self, other: "SubsetOfTheta") -> None:
        if self.frame != other.frame:
            raise FrameMismatch("subsets belong to different frames")

    def __or__(self, other: "SubsetOfTheta") -> "SubsetOfTheta":
        self._check(other)
        return SubsetOfTheta(self.frame, self.bits | other.bits)

    def __and__(self, other: "SubsetOfTheta") -> "SubsetOfTheta":
        self._check(other)
        return SubsetOfTheta(self.frame, self.bits & other.bits)

    def __sub__(self, other: "SubsetOfTheta") -> "SubsetOfTheta":
        self._check(other)
        return SubsetOfTheta(self.frame, self.bits & ~other.bits)

    def __invert__(self) -> "SubsetOfTheta":
        return SubsetOfTheta(self.frame, self.frame.full_bits ^ self.bits)

    def __contains__(self, point: int) -> bool:
        return bool((self.bits >> point) & 1)

    def is_subset_of(self, other: "SubsetOfTheta") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == self.frame.full_bits

    def points(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def label(self) -> str:
        if self.is_empty():
            return "{}"
        return "{" + ", ".join(self.frame.point_label(p) for p in self.points()) + "}"

    def __repr__(self):
        return f"SubsetOfTheta({self.label()})"


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class of the propositional AST over variable-value atoms."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    var: str
    value: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


def satisfies(frame: ProductFrame, point: int, formula: Formula) -> bool:
    """Does the point satisfy the formula?

    Conjunction and implication are evaluated through their rewrites
    ``not (not g or not h)`` and ``not g or h``.
    """
    if isinstance(formula, Atom):
        return frame.value_at(point, formula.var) == formula.value
    if isinstance(formula, Not):
        return not satisfies(frame, point, formula.child)
    if isinstance(formula, Or):
        return satisfies(frame, point, formula.left) or satisfies(frame, point, formula.right)
    if isinstance(formula, And):
        return satisfies(frame, point, Not(Or(Not(formula.left), Not(formula.right))))
    if isinstance(formula, Implies):
        return satisfies(frame, point, Or(Not(formula.left), formula.right))
    raise TypeError(f"not a formula: {formula!r}")


def extension(frame: ProductFrame, formula: Formula) -> SubsetOfTheta:
    """The subset of points satisfying the formula."""
    return SubsetOfTheta(frame, extension_bits(frame, formula))


def extension_bits(frame: ProductFrame, formula: Formula) -> int:
    if isinstance(formula, Atom):
        return frame.atom_bits(formula.var, formula.value)
    if isinstance(formula, Not):
        return frame.full_bits ^ extension_bits(frame, formula.child)
    if isinstance(formula, Or):
        return extension_bits(frame, formula.left) | extension_bits(frame, formula.right)
    if isinstance(formula, And):
        return extension_bits(frame, formula.left) & extension_bits(frame, formula.right)
    if isinstance(formula, Implies):
        return (frame.full_bits ^ extension_bits(frame, formula.left)) | extension_bits(frame, formula.right)
    raise TypeError(f"not a formula: {formula!r}")


def validate_formula(frame: ProductFrame, formula: Formula) -> None:
    """Raise :class:`FormulaError` unless every atom is declared in the frame."""
    if isinstance(formula, Atom):
        frame.value_index(formula.var, formula.value)
    elif isinstance(formula, Not):
        validate_formula(frame, formula.child)
    elif isinstance(formula, (Or, And, Implies)):
        validate_formula(frame, formula.left)
        validate_formula(frame, formula.right)
    else:
        raise TypeError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# Concrete syntax
#
#   formula  := or_expr ('=>' formula)?          implies, right-associative
#   or_expr  := and_expr (('or' | '\/') and_expr)*
#   and_expr := unary (('and' | '/\') unary)*
#   unary    := ('not' | '~') unary | primary
#   primary  := '(' formula ')' | IDENT ('=' IDENT)?
#
# A bare identifier over a boolean frame {Yes, No} is shorthand for
# ``IDENT = Yes``.

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<implies>=>)
      | (?P<eq>=)
      | (?P<and_op>/\\)
      | (?P<or_op>\\/)
      | (?P<not_op>~)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"not": "not_op", "and": "and_op", "or": "or_op"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value in _KEYWORDS:
                kind = _KEYWORDS[value]
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _FormulaParser:
    def __init__(self, text: str, frame: ProductFrame):
        self.text = text
        self.frame = frame
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> tuple[str, str, int]:
        tok = self.take()
        if tok[0] != kind:
            raise FormulaSyntaxError(f"expected {what}, found {tok[1]!r}" if tok[1] else f"expected {what}", tok[2])
        return tok

    def parse(self) -> Formula:
        f = self.implies()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return f

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "implies":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[0] == "or_op":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek()[0] == "and_op":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.peek()[0] == "not_op":
            self.take()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, value, pos = self.take()
        if kind == "lparen":
            f = self.implies()
            self.expect("rparen", "')'")
            return f
        if kind == "ident":
            var = value
            if var not in self.frame.names:
                raise FormulaError(f"unknown variable {var!r}", pos)
            if self.peek()[0] == "eq":
                self.take()
                vkind, vval, vpos = self.take()
                if vkind != "ident":
                    raise FormulaSyntaxError("expected a value after '='", vpos)
                if vval not in self.frame.values(var):
                    raise FormulaError(f"variable {var!r} has no value {vval!r}", vpos)
                return Atom(var, vval)
            if not self.frame.is_boolean(var):
                raise FormulaError(
                    f"bare {var!r} is shorthand for {var} = Yes, but {var!r} is not boolean", pos)
            return Atom(var, "Yes")
        raise FormulaSyntaxError(f"expected a formula, found {value!r}" if value else "unexpected end of formula", pos)


def parse_formula(text: str, frame: ProductFrame) -> Formula:
    """Parse concrete formula syntax against a declared frame.

    Raises :class:`FormulaSyntaxError` (with character position) on bad
    syntax and :class:`FormulaError` on undeclared variables or values.
    """
    if not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    return _FormulaParser(text, frame).parse()


_PRECEDENCE = {Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}


def pretty(formula: Formula, frame: ProductFrame | None = None) -> str:
    """Render a formula; ``parse_formula(pretty(f), frame)`` rebuilds ``f``.

    With a frame supplied, boolean ``X = Yes`` atoms print as bare ``X``.
    """

    def prec(f: Formula) -> int:
        return _PRECEDENCE[type(f)]

    def wrap(child: Formula, limit: int) -> str:
        s = render(child)
        return f"({s})" if prec(child) < limit else s

    def render(f: Formula) -> str:
        if isinstance(f, Atom):
            if frame is not None and f.value == "Yes" and frame.is_boolean(f.var):
                return f.var
            return f"{f.var} = {f.value}"
        if isinstance(f, Not):
            return "not " + wrap(f.child, 4)
        if isinstance(f, And):
            return f"{wrap(f.left, 3)} and {wrap(f.right, 4)}"
        if isinstance(f, Or):
            return f"{wrap(f.left, 2)} or {wrap(f.right, 3)}"
        if isinstance(f, Implies):
            return f"{wrap(f.left, 2)} => {wrap(f.right, 1)}"
        raise TypeError(f"not a formula: {f!r}")

    return render(formula)
