"""Lower and upper evidence for the free Banach lattice norm.

The norm of ``f`` is ``sup sum_i |f(x_i*)|`` over admissible tuples.  Any
admissible tuple therefore certifies a lower bound, and :func:`norm_search`
looks for good tuples.  Nothing here proves an upper bound; the dominance
check only samples the pointwise inequality that would transfer one.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .config import ParamConfig
from .errors import InadmissibleWitnessError
from .functionals import (
    ADMISSIBILITY_TOL,
    CUBE,
    DUAL,
    SparseFunctional,
    WitnessTuple,
    make_witness,
    sign_block,
    sort_ids,
)

log = logging.getLogger(__name__)

MIN_STEP = 1e-13
POLISH = 8


@dataclass(frozen=True)
class NormEstimate:
    lower_bound: float
    best_witness: WitnessTuple
    upper_bound: float | None = None
    upper_certificate: dict | None = None
    evaluations_used: int = 0
    coords: tuple = ()
    fingerprint: tuple = ()

    def with_upper(self, bound: float, kind: str, detail: Any) -> NormEstimate:
        return NormEstimate(self.lower_bound, self.best_witness, bound,
                            {"kind": kind, "detail": detail}, self.evaluations_used,
                            self.coords, self.fingerprint)

    def to_json(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "best_witness": self.best_witness.to_json(),
            "upper_bound": self.upper_bound,
            "upper_certificate": self.upper_certificate,
            "evaluations_used": self.evaluations_used,
        }


# -- evaluation helpers -----------------------------------------------------------


def support_of(func) -> frozenset:
    dep = getattr(func, "dependency_support", None)
    return frozenset(dep()) if dep is not None else frozenset()


def batch_eval(func, X: np.ndarray, coords: Sequence[Hashable], ambient: str = DUAL) -> np.ndarray:
    """Evaluate ``func`` on the rows of ``X``, vectorized when it supports it."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    b = getattr(func, "batch", None)
    if b is not None:
        return np.asarray(b(X, coords), dtype=float)
    return np.array([float(func(SparseFunctional.from_dense(ambient, coords, row))) for row in X])


def norm_lower_bound(func: Callable, witness: WitnessTuple | Sequence[SparseFunctional],
                     tol: float = ADMISSIBILITY_TOL) -> float:
    """``sum_i |func(x_i*)|`` for an admissible witness.

    The dual-ball value is recomputed from the functionals, never trusted
    from the record.
    """
    functionals = witness.functionals if isinstance(witness, WitnessTuple) else tuple(witness)
    if not functionals:
        return 0.0
    checked = make_witness(functionals)
    if checked.mode != "exact":
        raise InadmissibleWitnessError(checked.dual_ball_sup, tol)
    if not checked.admissible(tol):
        raise InadmissibleWitnessError(checked.dual_ball_sup, tol)
    return float(sum(abs(float(func(x))) for x in functionals))


# -- search -----------------------------------------------------------------------


class _Ball:
    """Incremental dual-ball value for a batch of tuples (one per restart)."""

    def __init__(self, ambient: str, d: int):
        self.ambient = ambient
        self.E = sign_block(d, 0, 1 << (d - 1)) if ambient == DUAL and d > 0 else None

    def project(self, rows: np.ndarray) -> np.ndarray:
        # rows (..., d) -> per-row contribution (..., K) or (..., d)
        if self.ambient == DUAL:
            return np.abs(rows @ self.E.T)
        return np.abs(rows)

    def value(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """X (R, l, d) -> (contributions (R, l, K), totals (R, K))."""
        C = self.project(X)
        return C, C.sum(axis=1)


def _seed_tuples(ambient: str, d: int, max_tuple: int) -> list[np.ndarray]:
    eye = np.eye(d)
    seeds = []
    for j in range(d):
        seeds.append(eye[j:j + 1].copy())
        seeds.append(-eye[j:j + 1])
    for i in range(d):
        for j in range(i + 1, d):
            for s in (1.0, -1.0):
                seeds.append((eye[i] + s * eye[j])[None, :])
                seeds.append((-eye[i] - s * eye[j])[None, :])
    if ambient == CUBE:
        if d <= 4:
            for code in range(1, 3 ** d):
                v = np.array([(code // 3 ** t) % 3 - 1 for t in range(d)], dtype=float)
                seeds.append(v[None, :])
        if d <= max_tuple:
            seeds.append(eye.copy())
            seeds.append(-eye)
        for i in range(d):
            for j in range(d):
                if i != j:
                    for s in (1.0, -1.0):
                        seeds.append(np.stack([eye[i], s * eye[j]]))
    return seeds


def _random_tuple(rng: np.random.Generator, l: int, d: int) -> np.ndarray:
    X = np.zeros((l, d))
    for i in range(l):
        s = int(rng.integers(1, min(d, 3) + 1))
        idx = rng.choice(d, size=s, replace=False)
        X[i, idx] = rng.standard_normal(s) * np.exp(rng.uniform(-2, 1, size=s))
    return X


@dataclass
class _GroupResult:
    objectives: np.ndarray
    X: np.ndarray
    sizes: np.ndarray
    evaluations: int


def _objective(F: np.ndarray, S: np.ndarray) -> np.ndarray:
    num = np.abs(F).sum(axis=-1)
    return np.where(S > 0, num / np.where(S > 0, S, 1.0), 0.0)


def _run_group(func, coords, ambient, sizes, starts, steps, seed_seq, sigma0=0.5) -> _GroupResult:
    """Lockstep ascent for a batch of restarts.

    ``starts`` is ``(R, L, d)``; restart ``r`` only moves its first
    ``sizes[r]`` functionals, the remaining rows stay zero.
    """
    rng = np.random.default_rng(seed_seq)
    d = len(coords)
    X = np.array(starts, dtype=float)
    R, l = X.shape[0], X.shape[1]
    sizes = np.asarray(sizes)
    ball = _Ball(ambient, d)
    evals = 0

    def full(X):
        nonlocal evals
        F = batch_eval(func, X.reshape(R * l, d), coords, ambient).reshape(R, l)
        evals += R * l
        C, T = ball.value(X)
        return F, C, T

    F, C, T = full(X)
    S = T.max(axis=1)
    obj = _objective(F, S)
    sigma = np.full(R, float(sigma0))
    rows = np.arange(R)
    for step in range(steps):
        active = sigma > MIN_STEP
        if not active.any():
            break
        i = (rng.random(R) * sizes).astype(int)
        old = X[rows, i]  # (R, d)
        new = old.copy()
        move = rng.random(R)
        j = rng.integers(d, size=R)
        z = rng.standard_normal(R)
        scale = np.abs(old).max(axis=1)
        scale = np.where(scale > 0, scale, 1.0)
        u = rng.random(R)
        cur = new[rows, j]
        entry = move < 0.55
        mult = entry & (cur != 0.0) & (u > 0.05)
        kill = entry & (cur != 0.0) & (u <= 0.05)
        grow = entry & (cur == 0.0)
        new[rows[mult], j[mult]] = cur[mult] * (1.0 + sigma[mult] * z[mult])
        new[rows[kill], j[kill]] = np.where(u[kill] < 0.025, 0.0, -cur[kill])
        new[rows[grow], j[grow]] = sigma[grow] * z[grow] * scale[grow]
        resc = (move >= 0.55) & (move < 0.75)
        new[resc] *= np.exp(sigma[resc] * z[resc])[:, None]
        jig = move >= 0.75
        noise = rng.standard_normal((R, d))
        new[jig] += (sigma * scale)[jig, None] * noise[jig] * (new[jig] != 0)
        dead = jig & ~new.any(axis=1)
        new[rows[dead], j[dead]] = (sigma * scale)[dead]
        fnew = batch_eval(func, new, coords, ambient)
        evals += R
        cnew = ball.project(new)
        Tnew = T - C[rows, i] + cnew
        Snew = Tnew.max(axis=1)
        Fnew = F.copy()
        Fnew[rows, i] = fnew
        objnew = _objective(Fnew, Snew)
        acc = active & (objnew > obj * (1 + 1e-15)) & np.isfinite(objnew)
        if acc.any():
            a = rows[acc]
            X[a, i[acc]] = new[acc]
            F[a, i[acc]] = fnew[acc]
            C[a, i[acc]] = cnew[acc]
            T[a] = Tnew[acc]
            obj[a] = objnew[acc]
        sigma = np.where(acc, np.minimum(sigma * 2.0, 2.0), sigma * 0.84)
        if step % 64 == 63:
            # renormalize to keep magnitudes O(1); ratios are scale invariant
            S = T.max(axis=1)
            X = X / np.where(S > 0, S, 1.0)[:, None, None]
            F, C, T = full(X)
            obj = _objective(F, T.max(axis=1))
    return _GroupResult(obj, X, sizes, evals)


def _run_group_star(args):
    return _run_group(*args)


def search_coords(func, cfg: ParamConfig, coords=None) -> list:
    if coords is not None:
        return list(coords)
    return sort_ids(support_of(func))[: cfg.search_width]


def norm_search(func, cfg: ParamConfig | None = None, ambient: str = DUAL,
                coords: Sequence[Hashable] | None = None) -> NormEstimate:
    """Best certified lower bound on the norm of ``func`` found by search.

    Seeds (coordinate functionals, signed pairs, small basis tuples) are
    scored first.  Then ``cfg.restarts`` restarts run ``cfg.steps`` ascent
    steps each; restart ``r`` uses tuples of size ``1 + r % cfg.max_tuple``
    and the best seeds are used as starting points.  A step perturbs one
    functional (one entry multiplicatively, a new support entry, a rescale,
    or a random direction) and is kept when the scale-free objective
    ``sum_i |f(x_i*)| / dual_ball_sup`` improves.  The winner is divided by
    its dual-ball value and re-verified with the exact oracle.
    """
    cfg = cfg or ParamConfig()
    coords = search_coords(func, cfg, coords)
    d = len(coords)
    if d == 0:
        return NormEstimate(0.0, WitnessTuple((), 0.0), coords=())
    ball = _Ball(ambient, d)
    evals = 0

    # seeds
    seeds = _seed_tuples(ambient, d, cfg.max_tuple)
    scored = []
    for X in seeds:
        F = batch_eval(func, X, coords, ambient)
        evals += X.shape[0]
        S = ball.project(X).sum(axis=0).max()
        scored.append((float(np.abs(F).sum() / S) if S > 0 else 0.0, X))
    order = sorted(range(len(scored)), key=lambda k: -scored[k][0])
    best_obj, best_X = scored[order[0]]
    singles = [scored[k][1] for k in order if scored[k][1].shape[0] == 1]

    rng = np.random.default_rng(cfg.seed)
    L = cfg.max_tuple
    sizes = [1 + r % L for r in range(cfg.restarts)]
    starts = np.zeros((cfg.restarts, L, d))
    used = {}
    for r, l in enumerate(sizes):
        X = _random_tuple(rng, l, d)
        j = used.get(l, 0)
        used[l] = j + 1
        if j < 2 and j < len(singles):
            X = X * 1e-3
            X[0] = singles[j][0]
        starts[r, :l] = X

    # restarts are split into contiguous chunks, each with its own stream
    chunks = max(1, min(cfg.workers, cfg.restarts))
    bounds = np.linspace(0, cfg.restarts, chunks + 1).astype(int)
    children = np.random.SeedSequence(cfg.seed).spawn(chunks)
    jobs = [(func, coords, ambient, sizes[a:b], starts[a:b], cfg.steps, children[c])
            for c, (a, b) in enumerate(zip(bounds[:-1], bounds[1:]))]
    if len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_group_star, jobs))
    else:
        results = [_run_group_star(job) for job in jobs]

    objs = np.concatenate([res.objectives for res in results])
    Xs = np.concatenate([res.X for res in results])
    evals += sum(res.evaluations for res in results)

    # polish the best distinct end points with small steps
    top = []
    seen = set()
    for k in np.argsort(-objs, kind="stable"):
        key = tuple(np.round(Xs[k] / max(np.abs(Xs[k]).max(), 1e-300), 6).ravel())
        if key in seen:
            continue
        seen.add(key)
        top.append(k)
        if len(top) == POLISH:
            break
    pol = _run_group(func, coords, ambient, np.array(sizes)[top], Xs[top], cfg.steps,
                     np.random.SeedSequence([cfg.seed, 1]), sigma0=1e-3)
    evals += pol.evaluations
    objs = np.concatenate([objs, pol.objectives])
    Xs = np.concatenate([Xs, pol.X])
    k = int(np.argmax(objs))  # first maximum: deterministic
    if objs[k] > best_obj:
        best_obj, best_X = float(objs[k]), Xs[k]

    witness, lower = _certify(func, best_X, coords, ambient)
    # seeds are always admissible after scaling; keep the better certified one
    seed_w, seed_lower = _certify(func, scored[order[0]][1], coords, ambient)
    if seed_lower > lower:
        witness, lower = seed_w, seed_lower
    return NormEstimate(lower, witness, evaluations_used=evals, coords=tuple(coords),
                        fingerprint=witness.fingerprint())


def _certify(func, X: np.ndarray, coords, ambient) -> tuple[WitnessTuple, float]:
    X = X[np.abs(X).sum(axis=1) > 0]
    if X.shape[0] == 0:
        return WitnessTuple((), 0.0), 0.0
    tup = [SparseFunctional.from_dense(ambient, coords, row) for row in X]
    w = make_witness(tup)
    for _ in range(3):
        if w.dual_ball_sup <= 1.0:
            break
        tup = [x.scaled(1.0 / w.dual_ball_sup) for x in w.functionals]
        w = make_witness(tup)
    if w.dual_ball_sup < 1.0 and w.dual_ball_sup > 0:
        tup2 = [x.scaled(1.0 / w.dual_ball_sup) for x in w.functionals]
        w2 = make_witness(tup2)
        if w2.dual_ball_sup <= 1.0:
            w = w2
    return w, norm_lower_bound(func, w)


# -- dominance sampling -------------------------------------------------------------


def sample_points(rng: np.random.Generator, count: int, d: int,
                  ratios: Sequence[float] = ()) -> np.ndarray:
    """Random dense rows mixing sparse patterns, signs, magnitudes and near-ties.

    ``ratios`` are magnitude ratios worth hitting exactly (for instance the
    ``N_m`` thresholds); some rows set ``|x_b| = c |x_a|`` with ``c`` drawn
    from them, optionally nudged by one ulp-scale factor.
    """
    X = np.zeros((count, d))
    size = np.minimum(rng.geometric(0.35, size=count), d)
    mags = np.exp(rng.uniform(-8, 2.5, size=(count, d)))
    signs = rng.choice([-1.0, 1.0], size=(count, d))
    keys = rng.random((count, d))
    order = np.argsort(keys, axis=1)
    mask = np.zeros((count, d), dtype=bool)
    for s in range(1, d + 1):
        rows = size >= s
        mask[rows, order[rows, s - 1]] = True
    X[mask] = (mags * signs)[mask]
    if d >= 2:
        cands = np.array(list(ratios) + [1.0, 0.5, 2.0], dtype=float)
        tie = rng.random(count) < 0.35
        idx = np.flatnonzero(tie)
        a = rng.integers(d, size=idx.size)
        b = (a + rng.integers(1, d, size=idx.size)) % d
        c = cands[rng.integers(cands.size, size=idx.size)]
        nudge = rng.choice([1.0, 1.0 + 1e-12, 1.0 - 1e-12, 1.0 + 1e-6, 1.0 - 1e-6], size=idx.size)
        base = np.where(X[idx, a] != 0, X[idx, a], mags[idx, a])
        X[idx, a] = base
        X[idx, b] = signs[idx, b] * np.abs(base) * c * nudge
    return X


@dataclass(frozen=True)
class DominanceReport:
    samples: int
    violation: dict | None
    bound: float
    label: str = "sampled, not proven"

    @property
    def holds(self) -> bool:
        return self.violation is None

    def to_json(self) -> dict:
        return {"samples": self.samples, "violation": self.violation, "bound": self.bound,
                "label": self.label, "holds": self.holds}


def dominance_upper_bound(func, dominator, bound: float, samples: int, seed: int = 0,
                          coords: Sequence[Hashable] | None = None, ambient: str = DUAL,
                          ratios: Sequence[float] = (), tol: float = 0.0,
                          chunk: int = 20_000) -> DominanceReport:
    """Sample ``0 <= func <= dominator`` pointwise.

    Without a violation the report carries ``||func|| <= bound`` as sampled
    evidence; with one it records the first violating point and both values.
    """
    if coords is None:
        coords = sort_ids(support_of(func) | support_of(dominator))
    coords = list(coords)
    d = len(coords)
    rng = np.random.default_rng(seed)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        X = sample_points(rng, k, max(d, 1), ratios)[:, :d]
        if ambient == CUBE:
            m = np.abs(X).max(axis=1, keepdims=True)
            X = X / np.where(m > 0, m, 1.0)
        fv = batch_eval(func, X, coords, ambient)
        gv = batch_eval(dominator, X, coords, ambient)
        bad = (fv < -tol) | (fv > gv + tol)
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            point = SparseFunctional.from_dense(ambient, coords, X[r])
            return DominanceReport(done + r + 1, {
                "index": done + r,
                "point": point.to_json(),
                "f": float(fv[r]),
                "g": float(gv[r]),
            }, bound, "violation found")
        done += k
    return DominanceReport(samples, None, bound)
