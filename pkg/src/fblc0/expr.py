"""Vector-lattice expressions over a set of generators.

An expression is an immutable tree built from generators (coordinate
evaluations ``x* -> x*(a)``), real multiples, sums, pointwise suprema and
infima, and absolute values.  Every such tree is a positively homogeneous,
piecewise-linear function of the evaluation point.

Besides the six core node kinds there is a :class:`Ref` leaf that wraps an
externally defined evaluator (for instance the ``f_n`` functions of
:mod:`fblc0.embedding`) so that named functions can be combined with
the lattice operations.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Sequence

import numpy as np

from .errors import ParseError, PreconditionError

GeneratorId = Hashable


class LatticeExpr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __call__(self, point) -> float:
        return evaluate(self, point)

    def batch(self, X: np.ndarray, coords: Sequence[GeneratorId]) -> np.ndarray:
        return evaluate_batch(self, X, coords)

    def dependency_support(self) -> frozenset:
        return dependency_support(self)

    def __add__(self, other: LatticeExpr) -> LatticeExpr:
        return Add(self, other)

    def __sub__(self, other: LatticeExpr) -> LatticeExpr:
        return Add(self, Scale(-1.0, other))

    def __neg__(self) -> LatticeExpr:
        return Scale(-1.0, self)

    def __rmul__(self, c: float) -> LatticeExpr:
        return Scale(float(c), self)

    def __or__(self, other: LatticeExpr) -> LatticeExpr:
        return Sup(self, other)

    def __and__(self, other: LatticeExpr) -> LatticeExpr:
        return Inf(self, other)

    def __abs__(self) -> LatticeExpr:
        return Abs(self)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Generator(LatticeExpr):
    index: GeneratorId

    def __repr__(self) -> str:
        return f"Generator({self.index!r})"


@dataclass(frozen=True, repr=False)
class Scale(LatticeExpr):
    coefficient: float
    child: LatticeExpr

    def __post_init__(self):
        c = float(self.coefficient)
        if not math.isfinite(c):
            raise PreconditionError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "coefficient", c)

    def __repr__(self) -> str:
        return f"Scale({self.coefficient!r}, {self.child!r})"


@dataclass(frozen=True, repr=False)
class Add(LatticeExpr):
    left: LatticeExpr
    right: LatticeExpr

    def __repr__(self) -> str:
        return f"Add({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Sup(LatticeExpr):
    left: LatticeExpr
    right: LatticeExpr

    def __repr__(self) -> str:
        return f"Sup({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Inf(LatticeExpr):
    left: LatticeExpr
    right: LatticeExpr

    def __repr__(self) -> str:
        return f"Inf({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Abs(LatticeExpr):
    child: LatticeExpr

    def __repr__(self) -> str:
        return f"Abs({self.child!r})"


@dataclass(frozen=True, repr=False)
class Ref(LatticeExpr):
    """Leaf delegating to a named evaluator.

    The evaluator must be a pure callable on functionals and provide
    ``batch(X, coords)`` and ``dependency_support()``.  Equality and hashing
    use the name only.
    """

    name: str
    target: Any = field(compare=False, hash=False)

    def __repr__(self) -> str:
        return f"Ref({self.name!r})"


def Pos(e: LatticeExpr) -> LatticeExpr:
    """Positive part ``e+ = e v 0``, written as ``Sup(e, Scale(0, e))``."""
    return Sup(e, Scale(0.0, e))


def Neg(e: LatticeExpr) -> LatticeExpr:
    return Pos(Scale(-1.0, e))


def add_all(terms: Sequence[LatticeExpr]) -> LatticeExpr:
    """Left-nested sum of a nonempty sequence of expressions."""
    if not terms:
        raise PreconditionError("add_all needs at least one term")
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def zero() -> LatticeExpr:
    return Scale(0.0, Generator(1))


def _is_pos(e: LatticeExpr) -> bool:
    return (
        isinstance(e, Sup)
        and isinstance(e.right, Scale)
        and e.right.coefficient == 0.0
        and e.right.child == e.left
    )


# -- evaluation ---------------------------------------------------------------


def evaluate(expr: LatticeExpr, point) -> float:
    """Evaluate ``expr`` at a functional.

    ``point`` must provide ``value(index)``; generators it cannot resolve
    raise :class:`DomainError`.
    """
    if isinstance(expr, Generator):
        return point.value(expr.index)
    if isinstance(expr, Scale):
        return expr.coefficient * evaluate(expr.child, point)
    if isinstance(expr, Add):
        return evaluate(expr.left, point) + evaluate(expr.right, point)
    if isinstance(expr, Sup):
        return max(evaluate(expr.left, point), evaluate(expr.right, point))
    if isinstance(expr, Inf):
        return min(evaluate(expr.left, point), evaluate(expr.right, point))
    if isinstance(expr, Abs):
        return abs(evaluate(expr.child, point))
    if isinstance(expr, Ref):
        return float(expr.target(point))
    raise TypeError(f"not an expression node: {expr!r}")


def evaluate_batch(expr: LatticeExpr, X: np.ndarray, coords: Sequence[GeneratorId]) -> np.ndarray:
    """Evaluate at every row of ``X``; column ``j`` holds coordinate ``coords[j]``.

    Generators absent from ``coords`` read as zero.  Uses the same floating
    point operations as :func:`evaluate`, so results agree bit for bit.
    """
    X = np.asarray(X, dtype=float)
    col = {c: j for j, c in enumerate(coords)}
    return _batch(expr, X, col, coords)


def _batch(expr, X, col, coords):
    if isinstance(expr, Generator):
        j = col.get(expr.index)
        return X[:, j].copy() if j is not None else np.zeros(X.shape[0])
    if isinstance(expr, Scale):
        return expr.coefficient * _batch(expr.child, X, col, coords)
    if isinstance(expr, Add):
        return _batch(expr.left, X, col, coords) + _batch(expr.right, X, col, coords)
    if isinstance(expr, Sup):
        return np.maximum(_batch(expr.left, X, col, coords), _batch(expr.right, X, col, coords))
    if isinstance(expr, Inf):
        return np.minimum(_batch(expr.left, X, col, coords), _batch(expr.right, X, col, coords))
    if isinstance(expr, Abs):
        return np.abs(_batch(expr.child, X, col, coords))
    if isinstance(expr, Ref):
        return np.asarray(expr.target.batch(X, coords), dtype=float)
    raise TypeError(f"not an expression node: {expr!r}")


def iter_nodes(expr: LatticeExpr) -> Iterator[LatticeExpr]:
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        if isinstance(e, (Scale, Abs)):
            stack.append(e.child)
        elif isinstance(e, (Add, Sup, Inf)):
            stack.append(e.right)
            stack.append(e.left)


def depth(expr: LatticeExpr) -> int:
    if isinstance(expr, (Scale, Abs)):
        return 1 + depth(expr.child)
    if isinstance(expr, (Add, Sup, Inf)):
        return 1 + max(depth(expr.left), depth(expr.right))
    return 0


def dependency_support(expr: LatticeExpr) -> frozenset:
    """Generator ids the value of ``expr`` can depend on."""
    out: set = set()
    for e in iter_nodes(expr):
        if isinstance(e, Generator):
            out.add(e.index)
        elif isinstance(e, Ref):
            out |= e.target.dependency_support()
    return frozenset(out)


def check_positive_homogeneity(expr: LatticeExpr, point, lam: float) -> float:
    """Residual ``|expr(lam * point) - lam * expr(point)|`` for ``lam > 0``."""
    if not lam > 0:
        raise PreconditionError(f"lambda must be positive, got {lam!r}")
    return abs(evaluate(expr, point.scaled(lam)) - lam * evaluate(expr, point))


# -- text form ----------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def format_generator_id(index: GeneratorId) -> str:
    if isinstance(index, bool):
        raise TypeError("bool is not a generator id")
    if isinstance(index, int):
        return str(index)
    if isinstance(index, frozenset):
        return "{" + ",".join(str(i) for i in sorted(index)) + "}"
    if isinstance(index, str) and _IDENT.match(index):
        return index
    raise TypeError(f"generator id {index!r} has no text form")


def parse_generator_id(token: str) -> GeneratorId:
    token = token.strip()
    if token.startswith("{"):
        if not token.endswith("}"):
            raise ParseError(f"unterminated subset literal {token!r}")
        body = token[1:-1].strip()
        if not body:
            raise ParseError("empty subset literal")
        try:
            items = frozenset(int(t) for t in body.split(","))
        except ValueError:
            raise ParseError(f"bad subset literal {token!r}") from None
        if min(items) < 1:
            raise ParseError(f"subset elements must be positive: {token!r}")
        return items
    if re.fullmatch(r"[0-9]+", token):
        return int(token)
    if _IDENT.match(token):
        return token
    raise ParseError(f"bad generator id {token!r}")


def to_text(expr: LatticeExpr) -> str:
    """Prefix-term text form, e.g. ``(sup (gen 1) (scale 0.5 (gen 2)))``."""
    if isinstance(expr, Generator):
        return f"(gen {format_generator_id(expr.index)})"
    if _is_pos(expr):
        return f"(pos {to_text(expr.left)})"
    if isinstance(expr, Scale):
        return f"(scale {expr.coefficient!r} {to_text(expr.child)})"
    if isinstance(expr, Add):
        return f"(add {to_text(expr.left)} {to_text(expr.right)})"
    if isinstance(expr, Sup):
        return f"(sup {to_text(expr.left)} {to_text(expr.right)})"
    if isinstance(expr, Inf):
        return f"(inf {to_text(expr.left)} {to_text(expr.right)})"
    if isinstance(expr, Abs):
        return f"(abs {to_text(expr.child)})"
    if isinstance(expr, Ref):
        return expr.name
    raise TypeError(f"not an expression node: {expr!r}")


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(\{[^}]*\})|([^\s(){}]+))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), start))
        pos = m.end()
    return tokens


_ARITY = {"add": 2, "sup": 2, "inf": 2, "abs": 1, "pos": 1}
_VARIADIC = {"add", "sup", "inf"}


def parse(text: str, resolver: Callable[[str], Any] | None = None) -> LatticeExpr:
    """Parse the prefix-term form produced by :func:`to_text`.

    Bare atoms other than parenthesized terms are evaluator names and are
    looked up with ``resolver`` (``f:3``, ``h:1:2``, ...).
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression", 0)
    expr, i = _parse_term(tokens, 0, resolver, text)
    if i != len(tokens):
        raise ParseError(f"trailing input {tokens[i][0]!r}", tokens[i][1])
    return expr


def _parse_term(tokens, i, resolver, text):
    if i >= len(tokens):
        raise ParseError("unexpected end of input", len(text))
    tok, pos = tokens[i]
    if tok == ")":
        raise ParseError("unexpected ')'", pos)
    if tok != "(":
        if tok.startswith("{"):
            raise ParseError("subset literal outside (gen ...)", pos)
        if resolver is None:
            raise ParseError(f"unknown atom {tok!r}", pos)
        try:
            target = resolver(tok)
        except (KeyError, ValueError) as exc:
            raise ParseError(f"unknown evaluator {tok!r}: {exc}", pos) from None
        return Ref(tok, target), i + 1
    if i + 1 >= len(tokens):
        raise ParseError("unexpected end of input", len(text))
    head, hpos = tokens[i + 1]
    i += 2
    if head == "gen":
        if i >= len(tokens):
            raise ParseError("missing generator id", len(text))
        tok, tpos = tokens[i]
        try:
            node = Generator(parse_generator_id(tok))
        except ParseError as exc:
            raise ParseError(str(exc), tpos) from None
        i += 1
    elif head == "scale":
        if i >= len(tokens):
            raise ParseError("missing coefficient", len(text))
        tok, tpos = tokens[i]
        try:
            c = float(tok)
        except ValueError:
            raise ParseError(f"bad coefficient {tok!r}", tpos) from None
        if not math.isfinite(c):
            raise ParseError(f"non-finite coefficient {tok!r}", tpos)
        child, i = _parse_term(tokens, i + 1, resolver, text)
        node = Scale(c, child)
    elif head in _ARITY:
        args = []
        for _ in range(_ARITY[head]):
            a, i = _parse_term(tokens, i, resolver, text)
            args.append(a)
        # add/sup/inf also accept more than two operands, folded left
        while head in _VARIADIC and i < len(tokens) and tokens[i][0] != ")":
            a, i = _parse_term(tokens, i, resolver, text)
            args.append(a)
        op = {"add": Add, "sup": Sup, "inf": Inf, "abs": Abs, "pos": Pos}[head]
        node = op(*args[:2]) if len(args) > 1 else op(*args)
        for a in args[2:]:
            node = op(node, a)
    else:
        raise ParseError(f"unknown operator {head!r}", hpos)
    if i >= len(tokens) or tokens[i][0] != ")":
        where = tokens[i][1] if i < len(tokens) else len(text)
        raise ParseError("expected ')'", where)
    return node, i + 1


def random_expr(rng: np.random.Generator, generators: Sequence[GeneratorId], max_depth: int,
                coefficients: Sequence[float] | None = None) -> LatticeExpr:
    """Random tree of depth at most ``max_depth`` over ``generators``."""
    if max_depth <= 0 or rng.random() < 0.25:
        return Generator(generators[int(rng.integers(len(generators)))])
    kind = int(rng.integers(5))
    if kind == 0:
        if coefficients is None:
            c = float(np.round(rng.uniform(-3, 3), 3))
        else:
            c = float(coefficients[int(rng.integers(len(coefficients)))])
        return Scale(c, random_expr(rng, generators, max_depth - 1, coefficients))
    if kind == 4:
        return Abs(random_expr(rng, generators, max_depth - 1, coefficients))
    node = (Add, Sup, Inf)[kind - 1]
    return node(
        random_expr(rng, generators, max_depth - 1, coefficients),
        random_expr(rng, generators, max_depth - 1, coefficients),
    )
