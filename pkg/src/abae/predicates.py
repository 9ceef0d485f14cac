"""Boolean predicate expressions over named base predicates.

An expression combines named predicates with NOT/AND/OR (precedence in that
order, parentheses allowed). The same tree is evaluated two ways: against
ground-truth boolean labels, and against per-predicate proxy scores, where
NOT maps to ``1 - s``, AND to the product, and OR to the elementwise max.
Under perfectly calibrated 0/1 scores the two evaluations coincide.
"""

import re
from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Base",
    "Not",
    "And",
    "Or",
    "PredicateExpr",
    "ExpressionSyntaxError",
    "BindingError",
    "parse_predicate",
    "to_text",
    "base_names",
    "eval_oracle_expr",
    "combine_scores",
]


@dataclass(frozen=True)
class Base:
    name: str


@dataclass(frozen=True)
class Not:
    child: "PredicateExpr"


@dataclass(frozen=True)
class And:
    children: tuple["PredicateExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And requires at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple["PredicateExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or requires at least two children")


PredicateExpr = Union[Base, Not, And, Or]


class ExpressionSyntaxError(ValueError):
    """Malformed predicate text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class BindingError(KeyError):
    """A base predicate name with no bound label or proxy column."""


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"and", "or", "not"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExpressionSyntaxError(
                f"unexpected character {stripped[0]!r}", len(text) - len(stripped)
            )
        if m.group(1):
            tokens.append(("lparen", "(", m.start(1)))
        elif m.group(2):
            tokens.append(("rparen", ")", m.start(2)))
        else:
            word = m.group(3)
            low = word.lower()
            if low in _KEYWORDS:
                tokens.append((low, word, m.start(3)))
            else:
                tokens.append(("name", word, m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over ``expr := term (OR term)*``,
    ``term := factor (AND factor)*``, ``factor := NOT factor | (expr) | name``."""

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self) -> PredicateExpr:
        terms = [self.term()]
        while self.peek()[0] == "or":
            self.take()
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Or(tuple(terms))

    def term(self) -> PredicateExpr:
        factors = [self.factor()]
        while self.peek()[0] == "and":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else And(tuple(factors))

    def factor(self) -> PredicateExpr:
        kind, value, pos = self.take()
        if kind == "not":
            return Not(self.factor())
        if kind == "lparen":
            inner = self.expr()
            kind, _, pos = self.take()
            if kind != "rparen":
                raise ExpressionSyntaxError("expected ')'", pos)
            return inner
        if kind == "name":
            return Base(value)
        raise ExpressionSyntaxError(
            f"expected a predicate name, NOT, or '(', got {value!r}" if value else "unexpected end of expression",
            pos,
        )


def parse_predicate(text: str) -> PredicateExpr:
    """Parse predicate text into an expression tree.

    Keywords are case-insensitive; precedence is NOT > AND > OR.
    """
    parser = _Parser(text)
    tree = parser.expr()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"trailing input {value!r}", pos)
    return tree


def _precedence(expr: PredicateExpr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def to_text(expr: PredicateExpr) -> str:
    """Render with parentheses such that ``parse_predicate`` round-trips.

    Same-operator children are parenthesized because an unparenthesized
    chain parses to one flat node.
    """
    if isinstance(expr, Base):
        return expr.name
    if isinstance(expr, Not):
        inner = to_text(expr.child)
        if _precedence(expr.child) < _precedence(expr):
            inner = f"({inner})"
        return f"NOT {inner}"
    level = _precedence(expr)
    parts = []
    for child in expr.children:
        text = to_text(child)
        if _precedence(child) < level or isinstance(child, type(expr)):
            text = f"({text})"
        parts.append(text)
    joiner = " AND " if isinstance(expr, And) else " OR "
    return joiner.join(parts)


def base_names(expr: PredicateExpr) -> tuple[str, ...]:
    """Distinct base predicate names, sorted."""
    names: set[str] = set()

    def walk(node: PredicateExpr) -> None:
        if isinstance(node, Base):
            names.add(node.name)
        elif isinstance(node, Not):
            walk(node.child)
        else:
            for child in node.children:
                walk(child)

    walk(expr)
    return tuple(sorted(names))


def eval_oracle_expr(expr: PredicateExpr, labels: Mapping[str, object]):
    """Evaluate against boolean labels (scalars or parallel boolean arrays)."""
    if isinstance(expr, Base):
        try:
            value = labels[expr.name]
        except KeyError:
            raise BindingError(f"no label bound for predicate {expr.name!r}") from None
        return np.asarray(value, dtype=bool) if not isinstance(value, (bool, np.bool_)) else bool(value)
    if isinstance(expr, Not):
        child = eval_oracle_expr(expr.child, labels)
        return ~child if isinstance(child, np.ndarray) else not child
    parts = [eval_oracle_expr(c, labels) for c in expr.children]
    op = np.logical_and if isinstance(expr, And) else np.logical_or
    out = reduce(op, parts)
    return bool(out) if np.ndim(out) == 0 else out


def combine_scores(expr: PredicateExpr, scores: Mapping[str, object]):
    """Fold per-predicate proxy scores into one score in [0, 1].

    NOT(s) -> 1 - s, AND -> product, OR -> max. The substitution is
    syntactic: AND of a predicate with itself squares its score, and
    De Morgan's laws do not hold for the folded scores.
    """
    if isinstance(expr, Base):
        try:
            value = scores[expr.name]
        except KeyError:
            raise BindingError(f"no proxy bound for predicate {expr.name!r}") from None
        arr = np.asarray(value, dtype=np.float64)
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError(f"proxy scores for {expr.name!r} fall outside [0, 1]")
        return arr if arr.ndim else float(arr)
    if isinstance(expr, Not):
        return 1.0 - combine_scores(expr.child, scores)
    parts = [combine_scores(c, scores) for c in expr.children]
    op = np.multiply if isinstance(expr, And) else np.maximum
    out = reduce(op, parts)
    return float(out) if np.ndim(out) == 0 else out
