"""The disjoint family ``f_n`` in ``FBL[c0]`` and the maps ``u`` and ``T``.

For a strictly increasing integer sequence ``N_1 < N_2 < ...``::

    f_n(x*) = (|x_n*| - N_n max_{m<n} |x_m*|)^+ * prod_{m>n} g_nm(x*)

where ``g_nm`` is the ratio clamp ``clamp(N_m - |x_m*| / |x_n*|, 0, 1)``.
It vanishes once ``|x_m*| >= N_m |x_n*|`` and equals one while
``|x_m*| <= (N_m - 1) |x_n*|``.  ``h_k`` keeps only the factors with
``n < m <= n + k``.

Functionals are finitely supported, so the product is finite: a factor
with ``x_m* = 0`` is exactly ``1.0`` whenever ``x_n* != 0``.  The clamp is
computed as ``(N_m |x_n*| - |x_m*|) / |x_n*|`` so that the comparison it
makes uses the same rounded product as the prefactor of ``f_m``; this keeps
``min(f_n, f_l)`` exactly zero in floating point, not just approximately.
Products are accumulated in increasing ``m``, which makes
``f_n <= h_k <= h_{k-1}`` hold exactly as well.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .config import ParamConfig
from .errors import PreconditionError
from .expr import Ref
from .functionals import DUAL, SparseFunctional, basis

__all__ = [
    "ParamConfig",
    "g",
    "f",
    "h",
    "u_apply",
    "t_apply",
    "disjointness_residual",
    "FnEvaluator",
    "HEvaluator",
    "UEvaluator",
    "fn_batch",
    "resolve_evaluator",
]


def _entries(x) -> Mapping[int, float]:
    if isinstance(x, SparseFunctional):
        if x.ambient != DUAL:
            raise PreconditionError("the c0 constructions take l1 (dual) functionals")
        return x.entries
    return x


def _clamp01(v: float) -> float:
    return 0.0 if v <= 0.0 else (1.0 if v >= 1.0 else v)


def _g_abs(xn: float, xm: float, Nm: int) -> float:
    if xn != 0.0:
        return _clamp01((Nm * xn - xm) / xn)
    return 1.0 if xm == 0.0 else 0.0


def g(n: int, m: int, x, cfg: ParamConfig) -> float:
    """The cut-off factor ``g_nm(x*)`` in ``[0, 1]``."""
    if not n < m:
        raise PreconditionError(f"g_nm needs n < m, got n={n}, m={m}")
    e = _entries(x)
    return _g_abs(abs(e.get(n, 0.0)), abs(e.get(m, 0.0)), cfg.N(m))


def _prefactor(n: int, e: Mapping[int, float], cfg: ParamConfig) -> float:
    xn = abs(e.get(n, 0.0))
    if xn == 0.0:
        return 0.0
    M = max((abs(v) for m, v in e.items() if m < n), default=0.0)
    return max(xn - cfg.N(n) * M, 0.0)


def _fh(n: int, x, cfg: ParamConfig, last: int | None) -> float:
    e = _entries(x)
    val = _prefactor(n, e, cfg)
    if val == 0.0:
        return 0.0
    xn = abs(e[n])
    for m in sorted(e):
        if m <= n:
            continue
        if last is not None and m > last:
            break
        val *= _g_abs(xn, abs(e[m]), cfg.N(m))
    return val


def f(n: int, x, cfg: ParamConfig) -> float:
    """``f_n(x*)`` for a finitely supported ``x*`` in ``l1``."""
    return _fh(n, x, cfg, None)


def h(n: int, k: int, x, cfg: ParamConfig) -> float:
    """The truncation ``h_k`` of ``f_n``: only factors ``g_nm`` with ``m <= n + k``."""
    if k < 1:
        raise PreconditionError(f"h needs k >= 1, got {k}")
    return _fh(n, x, cfg, n + k)


def fn_batch(n: int, X: np.ndarray, coords: Sequence[int], cfg: ParamConfig,
             last: int | None = None) -> np.ndarray:
    """Vectorized ``f_n`` (or ``h`` with ``last = n + k``) over the rows of ``X``.

    Bit-identical to the scalar path: the product is accumulated left to
    right in increasing ``m``.
    """
    X = np.asarray(X, dtype=float)
    rows = X.shape[0]
    lower, upper, jn = _layout(n, tuple(int(c) for c in coords), last)
    if jn is None:
        return np.zeros(rows)
    A = np.abs(X)
    xn = A[:, jn]
    M = A[:, lower].max(axis=1) if lower else np.zeros(rows)
    val = np.maximum(xn - cfg.N(n) * M, 0.0)
    nz = xn != 0.0
    if not upper:
        return np.where(nz, val, 0.0)
    Nm = np.array([cfg.N(m) for m, _ in upper], dtype=float)
    xm = A[:, [j for _, j in upper]]
    safe = np.where(nz, xn, 1.0)[:, None]
    G = np.minimum(np.maximum((Nm * xn[:, None] - xm) / safe, 0.0), 1.0)
    G = np.where(nz[:, None], G, np.where(xm == 0.0, 1.0, 0.0))
    val = np.multiply.accumulate(np.column_stack([val, G]), axis=1)[:, -1]
    return np.where(nz, val, 0.0)


@lru_cache(maxsize=4096)
def _layout(n: int, coords: tuple, last: int | None):
    jn = coords.index(n) if n in coords else None
    lower = [j for j, c in enumerate(coords) if c < n]
    upper = sorted((c, j) for j, c in enumerate(coords)
                   if c > n and (last is None or c <= last))
    return lower, upper, jn


def u_apply(x: Mapping[int, float], point, cfg: ParamConfig) -> float:
    """``u(x) = sum_i x_i f_i`` evaluated at ``point``."""
    return float(sum(xi * f(i, point, cfg) for i, xi in sorted(x.items()) if xi != 0.0))


def t_apply(func, n_max: int, cfg: ParamConfig | None = None) -> np.ndarray:
    """``T(func) = (func(e_1*), ..., func(e_n_max*))``."""
    return np.array([float(func(basis(n))) for n in range(1, n_max + 1)])


def disjointness_residual(n: int, l: int, x, cfg: ParamConfig) -> float:
    """``min(f_n(x*), f_l(x*))``, which is exactly zero for ``n != l``."""
    if n == l:
        raise PreconditionError("disjointness needs two different indices")
    return min(f(n, x, cfg), f(l, x, cfg))


class _Evaluator:
    cfg: ParamConfig

    def dependency_support(self) -> frozenset:
        return frozenset(range(1, self.cfg.truncation + 1))

    def as_expr(self) -> Ref:
        return Ref(self.name, self)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class FnEvaluator(_Evaluator):
    def __init__(self, n: int, cfg: ParamConfig):
        if not 1 <= n <= cfg.truncation:
            raise PreconditionError(f"index {n} outside truncation {cfg.truncation}")
        self.n, self.cfg = n, cfg
        self.name = f"f:{n}"

    def __call__(self, point) -> float:
        return f(self.n, point, self.cfg)

    def batch(self, X, coords) -> np.ndarray:
        return fn_batch(self.n, X, coords, self.cfg)


class HEvaluator(_Evaluator):
    def __init__(self, n: int, k: int, cfg: ParamConfig):
        if k < 1:
            raise PreconditionError(f"h needs k >= 1, got {k}")
        if not 1 <= n <= cfg.truncation:
            raise PreconditionError(f"index {n} outside truncation {cfg.truncation}")
        self.n, self.k, self.cfg = n, k, cfg
        self.name = f"h:{n}:{k}"

    def __call__(self, point) -> float:
        return h(self.n, self.k, point, self.cfg)

    def batch(self, X, coords) -> np.ndarray:
        return fn_batch(self.n, X, coords, self.cfg, last=self.n + self.k)


class UEvaluator(_Evaluator):
    """``u(x)`` for a finitely supported ``x`` in ``c0``."""

    def __init__(self, x: Mapping[int, float], cfg: ParamConfig):
        x = {int(i): float(v) for i, v in x.items() if float(v) != 0.0}
        if any(not 1 <= i <= cfg.truncation for i in x):
            raise PreconditionError("u(x) needs x supported inside the truncation")
        self.x, self.cfg = x, cfg
        self.name = "u:" + ",".join(f"{i}:{v!r}" for i, v in sorted(x.items()))

    def __call__(self, point) -> float:
        return u_apply(self.x, point, self.cfg)

    def batch(self, X, coords) -> np.ndarray:
        out = np.zeros(np.asarray(X).shape[0])
        for i, xi in sorted(self.x.items()):
            out = out + xi * fn_batch(i, X, coords, self.cfg)
        return out


def parse_vector(text: str) -> dict[int, float]:
    """Comma-separated ``index:value`` pairs, e.g. ``1:0.5,3:-2``."""
    out: dict[int, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        i, sep, v = part.partition(":")
        if not sep:
            raise ValueError(f"expected index:value, got {part!r}")
        i = int(i)
        if i < 1:
            raise ValueError(f"indices start at 1, got {i}")
        if i in out:
            raise ValueError(f"index {i} given twice")
        out[i] = float(v)
    return out


def resolve_evaluator(name: str, cfg: ParamConfig):
    """Look up ``f:<n>``, ``h:<n>:<k>`` or ``u:<vector-literal>``."""
    kind, _, rest = name.partition(":")
    if kind == "f":
        return FnEvaluator(int(rest), cfg)
    if kind == "h":
        n, _, k = rest.partition(":")
        return HEvaluator(int(n), int(k), cfg)
    if kind == "u":
        return UEvaluator(parse_vector(rest), cfg)
    raise KeyError(f"unknown evaluator {name!r}")
