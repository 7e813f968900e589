"""Finitely supported functionals and the two admissibility oracles.

Two ambients occur:

``cube``
    points of ``[-1, 1]^A`` for an abstract generator set ``A``; a tuple is
    admissible when every coordinate's absolute column sum is at most one.
``dual``
    finitely supported elements of ``l1``, the dual of ``c0``; a tuple is
    admissible when ``sup_{x in B_c0} sum_i |x_i*(x)| <= 1``.  For finitely
    supported tuples the supremum is attained at a sign vector on the joint
    support, which makes it computable by enumeration.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    EnumerationLimitError,
    ParseError,
    PreconditionError,
)
from .expr import format_generator_id, parse_generator_id

CUBE = "cube"
DUAL = "dual"
AMBIENTS = (CUBE, DUAL)

EXACT_ENUMERATION_LIMIT = 20
ADMISSIBILITY_TOL = 1e-9
_CHUNK = 1 << 15


class SparseFunctional:
    """Immutable finitely supported real function on generator ids.

    Zero entries are dropped on construction, so ``support`` is exactly the
    set of nonzero coordinates.  ``domain`` optionally fixes the generator
    set of a ``cube`` functional; reading outside it is a domain error.
    """

    __slots__ = ("ambient", "_entries", "domain", "_key")

    def __init__(self, ambient: str, entries: Mapping[Hashable, float] | Iterable = (),
                 domain: frozenset | None = None):
        if ambient not in AMBIENTS:
            raise DomainError(f"unknown ambient {ambient!r}")
        items = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        for k, v in items:
            k = _normalize_id(ambient, k)
            v = float(v)
            if not np.isfinite(v):
                raise DomainError(f"non-finite value at {k!r}")
            if ambient == CUBE and abs(v) > 1.0:
                raise DomainError(f"cube functional value {v!r} at {k!r} outside [-1, 1]")
            if domain is not None and k not in domain:
                raise DomainError(f"generator {k!r} outside the declared domain")
            if v != 0.0:
                clean[k] = v
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "_entries", MappingProxyType(clean))
        object.__setattr__(self, "domain", None if domain is None else frozenset(domain))
        object.__setattr__(self, "_key", None)

    def __setattr__(self, name, value):
        raise AttributeError("SparseFunctional is immutable")

    @property
    def entries(self) -> Mapping:
        return self._entries

    @property
    def support(self) -> frozenset:
        return frozenset(self._entries)

    def value(self, index: Hashable) -> float:
        if self.ambient == DUAL:
            if not _is_coordinate(index):
                raise DomainError(f"generator {index!r} is not a c0 coordinate")
            return self._entries.get(int(index), 0.0)
        if self.domain is not None and index not in self.domain:
            raise DomainError(f"generator {index!r} is not in the ambient generator set")
        return self._entries.get(index, 0.0)

    __getitem__ = value

    def abs_sum(self) -> float:
        return float(sum(abs(v) for v in self._entries.values()))

    def max_abs(self) -> float:
        return max((abs(v) for v in self._entries.values()), default=0.0)

    def scaled(self, lam: float) -> SparseFunctional:
        return SparseFunctional(self.ambient, {k: lam * v for k, v in self._entries.items()},
                                self.domain)

    def restrict(self, ids: Iterable[Hashable]) -> SparseFunctional:
        ids = set(ids)
        return SparseFunctional(self.ambient, {k: v for k, v in self._entries.items() if k in ids},
                                self.domain)

    def dense(self, coords: Sequence[Hashable]) -> np.ndarray:
        return np.array([self._entries.get(c, 0.0) for c in coords], dtype=float)

    @classmethod
    def from_dense(cls, ambient: str, coords: Sequence[Hashable], row, domain=None):
        return cls(ambient, zip(coords, (float(v) for v in row)), domain)

    def is_zero(self) -> bool:
        return not self._entries

    def _sort_key(self):
        if self._key is None:
            key = tuple(sorted((_id_key(k), v) for k, v in self._entries.items()))
            object.__setattr__(self, "_key", key)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, SparseFunctional):
            return NotImplemented
        return self.ambient == other.ambient and dict(self._entries) == dict(other._entries)

    def __hash__(self):
        return hash((self.ambient, self._sort_key()))

    def __repr__(self):
        return f"SparseFunctional({self.ambient!r}, {dict(self._entries)!r})"

    def __str__(self):
        return to_text(self)

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient,
            "entries": [[_id_to_json(k), v] for k, v in _sorted_items(self._entries)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> SparseFunctional:
        try:
            ambient = data["ambient"]
            entries = [(_id_from_json(k), float(v)) for k, v in data["entries"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad functional record: {exc}") from None
        return cls(ambient, entries)


def dual(entries: Mapping[int, float] | Iterable = ()) -> SparseFunctional:
    return SparseFunctional(DUAL, entries)


def cube(entries: Mapping[Hashable, float] | Iterable = (), domain=None) -> SparseFunctional:
    return SparseFunctional(CUBE, entries, domain)


def basis(n: int, value: float = 1.0) -> SparseFunctional:
    """The coordinate functional ``value * e_n*`` in ``l1``."""
    return dual({n: value})


def dual_from_sequence(values: Sequence[float]) -> SparseFunctional:
    """``(x_1, x_2, ...)`` given as a 0-based list, coordinates numbered from 1."""
    return dual({i + 1: v for i, v in enumerate(values)})


def _is_coordinate(k) -> bool:
    return isinstance(k, (int, np.integer)) and not isinstance(k, bool) and k >= 1


def _normalize_id(ambient, k):
    if ambient == DUAL:
        if not _is_coordinate(k):
            raise DomainError(f"l1 coordinates are positive integers, got {k!r}")
        return int(k)
    if isinstance(k, np.integer):
        return int(k)
    if isinstance(k, (set, list, tuple)):
        return frozenset(k)
    return k


def _id_key(k):
    if isinstance(k, int):
        return (0, k, ())
    if isinstance(k, frozenset):
        return (1, len(k), tuple(sorted(k)))
    return (2, 0, (str(k),))


def _sorted_items(entries: Mapping):
    return sorted(entries.items(), key=lambda kv: _id_key(kv[0]))


def sort_ids(ids: Iterable[Hashable]) -> list:
    return sorted(ids, key=_id_key)


def _id_to_json(k):
    if isinstance(k, frozenset):
        return sorted(k)
    return k


def _id_from_json(k):
    if isinstance(k, list):
        return frozenset(int(i) for i in k)
    return k


# -- text form ----------------------------------------------------------------

_ENTRY = re.compile(r"\s*(\{[^}]*\}|[^:,\s]+)\s*:\s*([^,\s]+)\s*(?:,|\Z)")


def to_text(x: SparseFunctional) -> str:
    body = ", ".join(f"{format_generator_id(k)}:{v!r}" for k, v in _sorted_items(x.entries))
    return f"ambient={x.ambient}; {body}" if body else f"ambient={x.ambient};"


def parse_functional(text: str) -> SparseFunctional:
    """Parse ``ambient=cube|dual; <index>:<value>, ...``."""
    head, sep, body = text.partition(";")
    if not sep:
        raise ParseError("missing ';' after ambient tag", len(text))
    m = re.fullmatch(r"\s*ambient\s*=\s*(\w+)\s*", head)
    if not m or m.group(1) not in AMBIENTS:
        raise ParseError(f"bad ambient tag {head.strip()!r}", 0)
    ambient = m.group(1)
    entries = []
    pos = 0
    offset = len(head) + 1
    body_s = body.rstrip()
    while pos < len(body_s):
        mm = _ENTRY.match(body_s, pos)
        if mm is None:
            if body_s[pos:].strip() == "":
                break
            raise ParseError("expected '<index>:<value>'", offset + pos)
        try:
            k = parse_generator_id(mm.group(1))
            v = float(mm.group(2))
        except (ParseError, ValueError):
            raise ParseError(f"bad entry {mm.group(0).strip()!r}", offset + pos) from None
        entries.append((k, v))
        pos = mm.end()
    return SparseFunctional(ambient, entries)


def dump_tuple(tuple_: Sequence[SparseFunctional]) -> str:
    return json.dumps([x.to_json() for x in tuple_], sort_keys=True)


def load_tuple(text: str) -> list[SparseFunctional]:
    return [SparseFunctional.from_json(d) for d in json.loads(text)]


# -- admissibility oracles ------------------------------------------------------


def _common_ambient(tuple_: Sequence[SparseFunctional], expected: str | None = None) -> str | None:
    ambients = {x.ambient for x in tuple_}
    if len(ambients) > 1:
        raise DomainError(f"mixed ambients in tuple: {sorted(ambients)}")
    amb = ambients.pop() if ambients else expected
    if expected is not None and amb != expected:
        raise DomainError(f"expected {expected} functionals, got {amb}")
    return amb


def joint_support(tuple_: Sequence[SparseFunctional]) -> list:
    out: set = set()
    for x in tuple_:
        out |= x.support
    return sort_ids(out)


def tuple_matrix(tuple_: Sequence[SparseFunctional], coords: Sequence[Hashable] | None = None):
    if coords is None:
        coords = joint_support(tuple_)
    X = np.array([x.dense(coords) for x in tuple_], dtype=float).reshape(len(tuple_), len(coords))
    return X, coords


def coordinate_admissibility(tuple_: Sequence[SparseFunctional]) -> float:
    """``max_a sum_i |x_i*(a)|`` for functionals on ``[-1, 1]^A``."""
    _common_ambient(tuple_, CUBE)
    domains = {x.domain for x in tuple_} - {None}
    if len(domains) > 1:
        raise DomainError("functionals live on different generator sets")
    X, _ = tuple_matrix(tuple_)
    if X.size == 0:
        return 0.0
    return float(np.abs(X).sum(axis=0).max())


def sign_block(m: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the half sign table: first sign fixed to +1.

    Row ``r`` has sign ``-1`` in column ``j >= 1`` iff bit ``j - 1`` of ``r`` is set.
    """
    r = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (r >> np.arange(m - 1, dtype=np.int64)) & 1
    signs = np.ones((stop - start, m))
    signs[:, 1:] = 1.0 - 2.0 * bits
    return signs


def ball_sup_dense(X: np.ndarray, limit: int = EXACT_ENUMERATION_LIMIT) -> tuple[float, np.ndarray]:
    """Exact ``max_eps sum_i |sum_j eps_j X[i, j]|`` and a maximizing sign vector."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[1]
    if m > limit:
        raise EnumerationLimitError(
            f"joint support of size {m} exceeds the exact enumeration limit {limit}; "
            "use ball_sup_search"
        )
    if m == 0 or X.shape[0] == 0:
        return 0.0, np.ones(m)
    total = 1 << (m - 1)
    best, best_eps = -1.0, None
    for start in range(0, total, _CHUNK):
        S = sign_block(m, start, min(total, start + _CHUNK))
        vals = np.abs(S @ X.T).sum(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_eps = float(vals[k]), S[k].copy()
    return best, best_eps


def ball_sup_exact(tuple_: Sequence[SparseFunctional], limit: int = EXACT_ENUMERATION_LIMIT) -> float:
    """``sup_{x in B_c0} sum_i |x_i*(x)|`` by enumerating signs on the joint support."""
    _common_ambient(tuple_, DUAL)
    X, _ = tuple_matrix(tuple_)
    return ball_sup_dense(X, limit)[0]


def _local_ascent(X: np.ndarray, eps: np.ndarray) -> float:
    v = X @ eps
    cur = float(np.abs(v).sum())
    while True:
        # column j: objective after flipping eps_j
        cand = np.abs(v[:, None] - 2.0 * X * eps[None, :]).sum(axis=0)
        j = int(np.argmax(cand))
        if cand[j] <= cur * (1 + 1e-15):
            return cur
        v = v - 2.0 * X[:, j] * eps[j]
        eps[j] = -eps[j]
        cur = float(cand[j])


def ball_sup_search(tuple_: Sequence[SparseFunctional], budget: int, seed: int = 0) -> float:
    """Lower bound on :func:`ball_sup_exact` by single-flip steepest ascent.

    Restart 0 starts from the signs of the first functional.  Later restarts
    start from a seeded random order of the half sign table (without
    replacement, so ``budget > 2**(m-1)`` makes the result exact) or, for
    ``m > 21``, from independent random signs.  The start schedule depends
    only on the seed and the tuple, so the result is nondecreasing in budget.
    """
    if budget < 1:
        raise PreconditionError("budget must be at least 1")
    _common_ambient(tuple_, DUAL)
    X, _ = tuple_matrix(tuple_)
    m = X.shape[1]
    if m == 0 or X.shape[0] == 0:
        return 0.0
    eps0 = np.where(X[0] >= 0, 1.0, -1.0)
    best = _local_ascent(X, eps0)
    if budget == 1:
        return best
    rng = np.random.default_rng(seed)
    perm = rng.permutation(1 << (m - 1)) if m <= 21 else None
    for r in range(1, budget):
        if perm is not None:
            if r - 1 >= perm.size:
                break
            k = int(perm[r - 1])
            eps = sign_block(m, k, k + 1)[0]
        else:
            eps = rng.choice([-1.0, 1.0], size=m)
        best = max(best, _local_ascent(X, eps))
    return best


@dataclass(frozen=True)
class ClaimResult:
    lhs: float
    rhs: float
    holds: bool


def claim_check(tuple_: Sequence[SparseFunctional], picks: Sequence[int], tol: float = 1e-12,
                limit: int = EXACT_ENUMERATION_LIMIT) -> ClaimResult:
    """Compare ``sum_i |x_i*(m_i)|`` with the exact dual-ball supremum of the tuple."""
    if len(picks) != len(tuple_):
        raise PreconditionError(f"{len(picks)} picks for {len(tuple_)} functionals")
    _common_ambient(tuple_, DUAL)
    lhs = float(sum(abs(x.value(m)) for x, m in zip(tuple_, picks)))
    rhs = ball_sup_exact(tuple_, limit)
    return ClaimResult(lhs, rhs, lhs <= rhs + tol)


# -- witnesses ------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessTuple:
    functionals: tuple[SparseFunctional, ...]
    dual_ball_sup: float
    mode: str = "exact"
    scale_factor: float = 1.0

    def admissible(self, tol: float = ADMISSIBILITY_TOL) -> bool:
        return self.dual_ball_sup <= 1.0 + tol

    @property
    def ambient(self) -> str | None:
        return self.functionals[0].ambient if self.functionals else None

    def fingerprint(self, decimals: int = 12) -> tuple:
        return tuple(sorted(
            tuple((_id_key(k), round(v, decimals)) for k, v in _sorted_items(x.entries))
            for x in self.functionals
        ))

    def to_json(self) -> dict:
        return {
            "functionals": [x.to_json() for x in self.functionals],
            "dual_ball_sup": self.dual_ball_sup,
            "mode": self.mode,
            "scale_factor": self.scale_factor,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> WitnessTuple:
        return cls(
            tuple(SparseFunctional.from_json(d) for d in data["functionals"]),
            float(data["dual_ball_sup"]),
            data.get("mode", "exact"),
            float(data.get("scale_factor", 1.0)),
        )


def dual_ball_sup(tuple_: Sequence[SparseFunctional], limit: int = EXACT_ENUMERATION_LIMIT,
                  search_budget: int = 256, seed: int = 0) -> tuple[float, str]:
    """Admissibility value with the oracle matching the ambient, plus its mode."""
    amb = _common_ambient(tuple_)
    if amb is None or amb == CUBE:
        return coordinate_admissibility(tuple_), "exact"
    if len(joint_support(tuple_)) <= limit:
        return ball_sup_exact(tuple_, limit), "exact"
    return ball_sup_search(tuple_, search_budget, seed), "stochastic-lower"


def make_witness(tuple_: Sequence[SparseFunctional], **kw) -> WitnessTuple:
    s, mode = dual_ball_sup(tuple_, **kw)
    return WitnessTuple(tuple(tuple_), s, mode)


def scale_to_admissible(tuple_: Sequence[SparseFunctional], **kw) -> WitnessTuple:
    """Divide every functional by ``max(1, dual_ball_sup)``."""
    if all(x.is_zero() for x in tuple_):
        raise DegenerateInputError("cannot scale an all-zero tuple")
    s, mode = dual_ball_sup(tuple_, **kw)
    if s <= 1.0:
        return WitnessTuple(tuple(tuple_), s, mode, 1.0)
    factor = 1.0 / s
    scaled = tuple(x.scaled(factor) for x in tuple_)
    s2, mode = dual_ball_sup(scaled, **kw)
    return WitnessTuple(scaled, s2, mode, factor)
