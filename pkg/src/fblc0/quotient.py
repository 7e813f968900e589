"""The quotient of ``FBL(L)`` onto ``c0`` and the disjoint-witness selection.

``L`` is the set of finite nonempty subsets of the positive integers, cut
off at a truncation ``N``.  The quotient evaluates an element of the free
lattice at the points ``x_n* = (chi_A({n}))_{A in L}``, i.e. at the
indicator of "``n`` belongs to ``A``".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, TruncationExhaustedError
from .expr import LatticeExpr, dependency_support, evaluate
from .functionals import CUBE, SparseFunctional, coordinate_admissibility, sort_ids

Subset = frozenset


def subset(*items: int) -> frozenset:
    """A generator of ``L``: a nonempty finite set of positive integers."""
    s = frozenset(int(i) for i in items)
    if not s or min(s) < 1:
        raise DomainError(f"subset generators are nonempty sets of positive integers, got {set(s)}")
    return s


def _check_subset(A, truncation: int | None = None) -> frozenset:
    if not isinstance(A, frozenset) or not A or any(
        isinstance(i, bool) or not isinstance(i, (int, np.integer)) or i < 1 for i in A
    ):
        raise DomainError(f"{A!r} is not a subset generator")
    if truncation is not None and max(A) > truncation:
        raise DomainError(f"subset {sorted(A)} exceeds truncation {truncation}")
    return A


def chi(A: frozenset, B: frozenset) -> int:
    """``chi_A(B)``: 1 when ``B`` is contained in ``A``, else 0."""
    return 1 if _check_subset(B) <= _check_subset(A) else 0


class PhiPoint:
    """The evaluation point ``x_n* = (chi_A({n}))_{A in L}`` restricted to ``{1..N}``.

    The point has ``2**(N-1)`` nonzero coordinates, so it is kept implicit:
    ``value(A)`` answers directly and :meth:`restrict` produces an explicit
    :class:`SparseFunctional` on a finite family of generators.
    """

    ambient = CUBE

    def __init__(self, n: int, truncation: int):
        if not 1 <= n <= truncation:
            raise PreconditionError(f"coordinate {n} outside truncation 1..{truncation}")
        self.n, self.truncation = n, truncation

    def value(self, A) -> float:
        A = _check_subset(A, self.truncation)
        return float(chi(A, frozenset((self.n,))))

    __getitem__ = value

    def scaled(self, lam: float):
        return _ScaledPoint(self, lam)

    def restrict(self, family: Iterable[frozenset]) -> SparseFunctional:
        return SparseFunctional(CUBE, {A: self.value(A) for A in family})

    def __repr__(self):
        return f"PhiPoint(n={self.n}, N={self.truncation})"


class _ScaledPoint:
    ambient = CUBE

    def __init__(self, base, lam):
        self.base, self.lam = base, lam

    def value(self, A):
        return self.lam * self.base.value(A)

    def scaled(self, lam):
        return _ScaledPoint(self.base, self.lam * lam)


def phi_point(n: int, truncation: int) -> PhiPoint:
    return PhiPoint(n, truncation)


def phi_apply(expr: LatticeExpr, n_max: int, truncation: int | None = None) -> np.ndarray:
    """``(expr(x_1*), ..., expr(x_{n_max}*))``."""
    truncation = n_max if truncation is None else truncation
    if n_max > truncation:
        raise PreconditionError(f"n_max {n_max} exceeds truncation {truncation}")
    for A in dependency_support(expr):
        try:
            _check_subset(A, truncation)
        except DomainError as exc:
            raise DomainError(f"truncation too small for the expression: {exc}") from None
    return np.array([evaluate(expr, phi_point(n, truncation)) for n in range(1, n_max + 1)])


def indicator(A: Iterable[int], n_max: int) -> np.ndarray:
    v = np.zeros(n_max)
    for i in A:
        v[i - 1] = 1.0
    return v


def vanishing_index(F: Iterable[frozenset]) -> int:
    """Smallest ``n`` beyond every element of ``F``; ``phi_point(n)`` vanishes on ``F``."""
    F = [_check_subset(S) for S in F]
    return 1 + max((max(S) for S in F), default=0)


# -- greedy preimage decomposition --------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    terms: tuple[tuple[float, frozenset], ...]
    source: tuple[tuple[int, float], ...]

    def reconstruct(self, n_max: int | None = None) -> np.ndarray:
        if n_max is None:
            n_max = max((i for i, _ in self.source), default=0)
        out = np.zeros(n_max)
        for lam, A in self.terms:
            for i in A:
                out[i - 1] += lam
        return out

    def to_json(self) -> dict:
        return {
            "terms": [[lam, sorted(A)] for lam, A in self.terms],
            "source": [[i, v] for i, v in self.source],
        }


def _as_items(x) -> list[tuple[int, float]]:
    if isinstance(x, Mapping):
        items = [(int(i), float(v)) for i, v in x.items()]
    else:
        items = [(i + 1, float(v)) for i, v in enumerate(x)]
    return items


def greedy_decompose(x: Mapping[int, float] | Sequence[float]) -> Decomposition:
    """Write a nonnegative finitely supported ``x`` as ``sum_j lam_j 1_{A_j}``.

    Coordinates are visited in nonincreasing order of value (lowest index
    first on ties); ``A_j`` holds the first ``j`` of them and
    ``lam_j = x_{n_j} - x_{n_{j+1}}`` with zero after the last.  A sequence
    argument is read as ``(x_1, x_2, ...)``.
    """
    items = _as_items(x)
    neg = [(i, v) for i, v in items if v < 0 or not np.isfinite(v)]
    if neg:
        raise PreconditionError(f"greedy_decompose needs x >= 0; coordinate {neg[0][0]} is {neg[0][1]!r}")
    support = sorted(((i, v) for i, v in items if v > 0), key=lambda t: (-t[1], t[0]))
    terms = []
    chain: set[int] = set()
    for j, (i, v) in enumerate(support):
        chain.add(i)
        nxt = support[j + 1][1] if j + 1 < len(support) else 0.0
        terms.append((v - nxt, frozenset(chain)))
    return Decomposition(tuple(terms), tuple(sorted(items)))


def decomposition_expr(dec: Decomposition) -> LatticeExpr:
    """The preimage ``sum_j lam_j delta_{A_j}`` as an expression over ``L``."""
    from .expr import Generator, Scale, add_all, zero

    if not dec.terms:
        return zero()
    return add_all([Scale(lam, Generator(A)) for lam, A in dec.terms])


# -- disjoint witness selection --------------------------------------------------


@dataclass(frozen=True)
class WitnessSelection:
    indices: tuple[int, ...]
    supports: tuple[frozenset, ...]
    witnesses: tuple[SparseFunctional, ...]
    values: tuple[float, ...]
    eps: float

    def partial_sums(self) -> list[float]:
        return [float(v) for v in np.cumsum(self.values)]

    def to_json(self) -> dict:
        from .expr import format_generator_id

        return {
            "indices": list(self.indices),
            "supports": [[format_generator_id(a) for a in sort_ids(F)] for F in self.supports],
            "witnesses": [w.to_json() for w in self.witnesses],
            "values": list(self.values),
            "eps": self.eps,
        }


def check_vanishing(points: Sequence, F: Iterable) -> int | None:
    """First 1-based index whose point vanishes on every generator of ``F``."""
    F = list(F)
    for n, p in enumerate(points, start=1):
        if all(p.value(a) == 0.0 for a in F):
            return n
    return None


def select_subsequence(family: Sequence[tuple[LatticeExpr, object]], eps: float,
                       length: int | None = None, tol: float = 1e-9) -> WitnessSelection:
    """Pick ``n_1 < n_2 < ...`` with disjointly supported witnesses ``y_k*``.

    ``family[n-1] = (f_n, x_n*)`` with ``f_n >= 0`` and ``f_n(x_n*) = 1``.
    ``n_1 = 1``; ``F_k`` is the dependency support of ``f_{n_k}``, so
    ``f_{n_k}`` takes the same value at any point agreeing with
    ``x_{n_k}*`` on ``F_k``; ``n_{k+1}`` is the smallest later index whose
    point vanishes on ``F_1 u ... u F_k``; ``y_k*`` is ``x_{n_k}*``
    restricted to ``F_k``.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    if not family:
        raise PreconditionError("empty family")
    length = len(family) if length is None else length
    indices, supports, witnesses, values = [], [], [], []
    used: set = set()
    n = 1
    while len(indices) < length:
        fn, xn = family[n - 1]
        v0 = float(evaluate(fn, xn))
        if abs(v0 - 1.0) > tol:
            raise PreconditionError(f"f_{n}(x_{n}*) = {v0!r}, expected 1")
        Fk = dependency_support(fn)
        yk = SparseFunctional(CUBE, {a: xn.value(a) for a in Fk})
        val = float(evaluate(fn, yk))
        if val < -tol:
            raise PreconditionError(f"f_{n} is negative at its witness")
        indices.append(n)
        supports.append(frozenset(Fk))
        witnesses.append(yk)
        values.append(val)
        used |= Fk
        if len(indices) == length:
            break
        nxt = None
        for cand in range(n + 1, len(family) + 1):
            if all(family[cand - 1][1].value(a) == 0.0 for a in used):
                nxt = cand
                break
        if nxt is None:
            raise TruncationExhaustedError(
                f"no family member after index {n} vanishes on the selected supports; "
                f"selected {len(indices)} of {length} (increase the truncation)"
            )
        n = nxt
    return WitnessSelection(tuple(indices), tuple(supports), tuple(witnesses), tuple(values), eps)


def selection_admissibility(sel: WitnessSelection, m: int | None = None) -> float:
    m = len(sel.witnesses) if m is None else m
    return coordinate_admissibility(list(sel.witnesses[:m]))


def first_exceeding(eps: float, bound: float, m_max: int) -> int | None:
    """First ``m <= m_max`` with ``m - eps > bound``, the count a bounded lift cannot survive."""
    for m in range(1, m_max + 1):
        if m - eps > bound:
            return m
    return None


# -- example families -----------------------------------------------------------


def coordinate_family(length: int) -> list[tuple[LatticeExpr, SparseFunctional]]:
    """``f_n = (delta_n)^+`` with ``x_n*`` the indicator of coordinate ``n``."""
    from .expr import Generator, Pos

    return [(Pos(Generator(n)), SparseFunctional(CUBE, {n: 1.0})) for n in range(1, length + 1)]


def phi_family(length: int, truncation: int | None = None) -> list[tuple[LatticeExpr, PhiPoint]]:
    """``f_n = (delta_{{n}})^+`` paired with ``phi_point(n)``."""
    from .expr import Generator, Pos

    truncation = length if truncation is None else truncation
    return [(Pos(Generator(frozenset((n,)))), phi_point(n, truncation)) for n in range(1, length + 1)]


FAMILIES: dict[str, Callable[..., list]] = {
    "coordinate": coordinate_family,
    "phi": phi_family,
}
