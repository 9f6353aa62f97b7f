"""Experimental setups: slit atoms joined by ``v`` (or ``∨``).

Grammar (``v`` is left-associative)::

    expr := term ("v" term)*
    term := atom | "(" expr ")"
    atom := [A-Za-z0-9']+      (the bare word "v" is the join token)
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, TypeVar, Union

from .errors import DuplicateSlitError, SetupSyntaxError, TooFewSlits

T = TypeVar("T")

_TOKEN = re.compile(r"\s*(?:(?P<label>[A-Za-z0-9']+)|(?P<op>[()∨]))")


@dataclass(frozen=True)
class Atom:
    label: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("slit labels must be non-empty")


@dataclass(frozen=True)
class Join:
    left: "SetupExpr"
    right: "SetupExpr"


SetupExpr = Union[Atom, Join]


@dataclass(frozen=True)
class Configuration:
    """Sorted, duplicate-free, non-empty set of open slits."""

    open: tuple[str, ...]

    def __post_init__(self):
        if not self.open:
            raise ValueError("a configuration needs at least one open slit")
        if tuple(sorted(set(self.open))) != self.open:
            raise ValueError(f"configuration must be sorted and duplicate-free: {self.open}")

    @classmethod
    def of(cls, labels) -> "Configuration":
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise DuplicateSlitError(f"repeated slit in {labels}")
        return cls(tuple(sorted(labels)))

    def __iter__(self):
        return iter(self.open)

    def __len__(self):
        return len(self.open)

    def __contains__(self, label):
        return label in self.open

    def __str__(self):
        return "{" + ", ".join(self.open) + "}"


# -- parsing ------------------------------------------------------------------

def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SetupSyntaxError(text, pos, "slit label, '(', ')' or join")
        start = m.start("label") if m.group("label") else m.start("op")
        if m.group("label"):
            word = m.group("label")
            kind = "join" if word == "v" else "label"
        else:
            word = m.group("op")
            kind = "join" if word == "∨" else word
        tokens.append((kind, word, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, expected: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            raise SetupSyntaxError(self.text, tok[2], expected)
        self.i += 1
        return tok

    def expr(self) -> SetupExpr:
        node = self.term()
        while self.peek()[0] == "join":
            self.i += 1
            node = Join(node, self.term())
        return node

    def term(self) -> SetupExpr:
        kind, word, pos = self.peek()
        if kind == "label":
            self.i += 1
            return Atom(word)
        if kind == "(":
            self.i += 1
            node = self.expr()
            self.take(")", "')'")
            return node
        raise SetupSyntaxError(self.text, pos, "slit label or '('")


def parse_setup(text: str) -> SetupExpr:
    """Parse a setup expression such as ``"(a v a') v a''"``."""
    p = _Parser(text)
    tree = p.expr()
    p.take("end", "join or end of input")
    seen = set()
    for label in leaves(tree):
        if label in seen:
            raise DuplicateSlitError(f"slit {label!r} is opened more than once in {text!r}")
        seen.add(label)
    return tree


def render(expr: SetupExpr, join: str = "v") -> str:
    """Pretty-print with the minimal parentheses needed to re-parse to ``expr``."""
    if isinstance(expr, Atom):
        return expr.label
    left = render(expr.left, join)
    right = render(expr.right, join)
    if isinstance(expr.right, Join):
        right = f"({right})"
    return f"{left} {join} {right}"


# -- structure ----------------------------------------------------------------

def leaves(expr: SetupExpr) -> list[str]:
    out = []
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.append(node.label)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


def canonicalize(expr: SetupExpr) -> Configuration:
    return Configuration.of(leaves(expr))


def fold(expr: SetupExpr, leaf: Callable[[str], T], combine: Callable[[T, T], T]) -> T:
    """Evaluate ``expr`` bottom-up: atoms through ``leaf``, joins through ``combine``."""
    if isinstance(expr, Atom):
        return leaf(expr.label)
    return combine(fold(expr.left, leaf, combine), fold(expr.right, leaf, combine))


@lru_cache(maxsize=None)
def _shapes(n: int) -> tuple:
    # binary tree shapes with n leaves; a shape is None (leaf) or (left, right)
    if n == 1:
        return (None,)
    out = []
    for k in range(n - 1, 0, -1):  # left-heavy first: ((a v b) v c) before (a v (b v c))
        for left in _shapes(k):
            for right in _shapes(n - k):
                out.append((left, right))
    return tuple(out)


def _fill(shape, labels: Iterator[str]) -> SetupExpr:
    if shape is None:
        return Atom(next(labels))
    left = _fill(shape[0], labels)
    return Join(left, _fill(shape[1], labels))


def association_trees(slits) -> list[SetupExpr]:
    """Every binary bracketing of the leaf sequence ``slits`` (Catalan many)."""
    slits = list(slits)
    if not slits:
        raise TooFewSlits("need at least one slit")
    if len(set(slits)) != len(slits):
        raise DuplicateSlitError(f"repeated slit in {slits}")
    return [_fill(shape, iter(slits)) for shape in _shapes(len(slits))]


def association_variants(slits) -> list[tuple[SetupExpr, SetupExpr]]:
    """Unordered pairs of distinct bracketings over the same leaf order."""
    slits = list(slits)
    if len(slits) < 3:
        raise TooFewSlits(f"association variants need at least 3 slits, got {len(slits)}")
    return list(itertools.combinations(association_trees(slits), 2))
