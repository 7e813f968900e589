"""Seeded verification suites, one per quantitative statement about c0 and FBL.

Every suite returns a :class:`VerificationReport`.  Records carry the
witnesses (or the seeds that regenerate the sampled points) needed to
re-check a value without re-running any search.  Runtimes live in a
separate ``timing`` section so that the rest of the report is byte-stable
for a fixed seed and configuration.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .config import ParamConfig
from .embedding import FnEvaluator, HEvaluator, UEvaluator, fn_batch, disjointness_residual, t_apply
from .errors import ConfigError
from .expr import Abs, Add, Generator, Inf, Scale, Sup, add_all, random_expr
from .functionals import (
    SparseFunctional,
    basis,
    claim_check,
    coordinate_admissibility,
    sign_block,
)
from .norm import dominance_upper_bound, norm_lower_bound, norm_search, sample_points
from .quotient import (
    decomposition_expr,
    greedy_decompose,
    indicator,
    phi_apply,
    phi_family,
    coordinate_family,
    select_subsequence,
)

SUITES = ("lemma22", "lemma23", "claim", "lemma32", "lemma33", "lemma34", "lemma35", "thm36", "thm37")


@dataclass
class CheckRecord:
    check_id: str
    lemma: str
    inputs: dict
    values: dict
    bound: Any
    passed: bool
    tolerance: float
    seed: int | None

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "lemma": self.lemma,
            "inputs_digest": digest(self.inputs),
            "inputs": self.inputs,
            "values": self.values,
            "bound": self.bound,
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


@dataclass
class VerificationReport:
    suite: str
    config: dict
    records: list[CheckRecord] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "config": self.config,
            "status": self.status,
            "records": [r.to_json() for r in sorted(self.records, key=lambda r: r.check_id)],
        }
        if timing:
            out["timing"] = self.timing
        return out

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), sort_keys=True, indent=1)

    def table(self) -> str:
        width = max((len(r.check_id) for r in self.records), default=8)
        lines = [f"suite {self.suite}: {self.status.upper()} ({len(self.records)} checks)"]
        for r in sorted(self.records, key=lambda r: r.check_id):
            vals = ", ".join(f"{k}={_short(v)}" for k, v in r.values.items() if not isinstance(v, (dict, list)))
            lines.append(f"  {'ok  ' if r.passed else 'FAIL'} {r.check_id:<{width}}  [{r.lemma}]  {vals}")
        return "\n".join(lines)


def _short(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _rng(cfg: ParamConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, *key]))


class _Recorder:
    def __init__(self, report: VerificationReport, cfg: ParamConfig):
        self.report, self.cfg = report, cfg

    def add(self, check_id, lemma, inputs, values, bound, passed, tol, seed=None, started=None):
        self.report.records.append(
            CheckRecord(check_id, lemma, inputs, values, bound, bool(passed), tol, seed))
        if started is not None:
            self.report.timing[check_id] = round(time.perf_counter() - started, 3)


# -- suites -----------------------------------------------------------------------


def suite_lemma35(cfg: ParamConfig, rec: _Recorder, n_max: int = 8):
    """Each ``f_n`` has norm one: lower witness ``e_n*``, search ceiling, dominance by ``|delta_n|``."""
    ratios = sorted(set(cfg.n_seq[: cfg.search_width + 2]) | {v - 1 for v in cfg.n_seq[:14]})
    for n in range(1, min(n_max, cfg.truncation) + 1):
        t = time.perf_counter()
        fn = FnEvaluator(n, cfg)
        w = [basis(n)]
        lb = norm_lower_bound(fn, w)
        rec.add(f"lemma35.n{n}.witness", "lemma35", {"n": n, "witness": [x.to_json() for x in w]},
                {"lower_bound": lb}, 1.0, lb == 1.0, 0.0, started=t)
        t = time.perf_counter()
        est = norm_search(fn.as_expr(), cfg)
        rec.add(f"lemma35.n{n}.search", "lemma35", {"n": n, "expr": fn.name},
                {"search_max": est.lower_bound, "witness": est.best_witness.to_json()},
                1.0, est.lower_bound <= 1.0 + cfg.tol, cfg.tol, cfg.seed, started=t)
        t = time.perf_counter()
        seed = cfg.seed + 35_000 + n
        dom = dominance_upper_bound(fn, Abs(Generator(n)), 1.0, cfg.samples, seed=seed,
                                    coords=range(1, min(cfg.truncation, max(12, n + 4)) + 1),
                                    ratios=ratios)
        rec.add(f"lemma35.n{n}.dominance", "lemma35", {"n": n, "dominator": f"|delta_{n}|"},
                {"samples": dom.samples, "violations": 0 if dom.holds else 1, "label": dom.label,
                 "first_violation": dom.violation}, 1.0, dom.holds, 0.0, seed, started=t)


def suite_lemma34(cfg: ParamConfig, rec: _Recorder, n_max: int = 8):
    """Partial sums of the ``f_i`` have norm exactly one."""
    for n in range(1, min(n_max, cfg.truncation) + 1):
        t = time.perf_counter()
        expr = add_all([FnEvaluator(i, cfg).as_expr() for i in range(1, n + 1)])
        lb = norm_lower_bound(expr, [basis(1)])
        est = norm_search(expr, cfg)
        lo = max(lb, est.lower_bound)
        ok = est.lower_bound <= 1.0 + cfg.tol and lo >= 1.0 - cfg.tol
        rec.add(f"lemma34.n{n}", "lemma34", {"n": n, "expr": str(expr)},
                {"witness_e1": lb, "search_max": est.lower_bound,
                 "witness": est.best_witness.to_json()},
                [1.0 - cfg.tol, 1.0 + cfg.tol], ok, cfg.tol, cfg.seed, started=t)


def suite_lemma32(cfg: ParamConfig, rec: _Recorder, n_max: int = 8):
    """``f_n`` and ``f_l`` are pointwise disjoint: ``min(f_n, f_l)`` is exactly zero."""
    t = time.perf_counter()
    n_max = min(n_max, cfg.truncation)
    d = min(cfg.truncation, max(12, n_max + 4))
    coords = list(range(1, d + 1))
    seed = cfg.seed + 32_000
    rng = np.random.default_rng(seed)
    X = sample_points(rng, cfg.samples, d, ratios=cfg.n_seq[:d])
    Fv = np.column_stack([fn_batch(n, X, coords, cfg) for n in range(1, n_max + 1)])
    worst = 0.0
    for a in range(n_max):
        for b in range(a + 1, n_max):
            worst = max(worst, float(np.minimum(Fv[:, a], Fv[:, b]).max()))
    nonzero = int((Fv != 0).sum(axis=1).max())
    negatives = int((Fv < 0).sum())
    # scalar path on a prefix, to tie the vectorized values to the operation itself
    spot = min(2000, cfg.samples)
    spot_worst = 0.0
    for r in range(spot):
        x = SparseFunctional.from_dense("dual", coords, X[r])
        for a in range(1, n_max + 1):
            for b in range(a + 1, n_max + 1):
                spot_worst = max(spot_worst, disjointness_residual(a, b, x, cfg))
    rec.add("lemma32.pairs", "lemma32",
            {"n_max": n_max, "coords": d, "samples": cfg.samples, "sampler": "sample_points"},
            {"max_residual": worst, "scalar_spot_max": spot_worst, "spot_points": spot,
             "max_nonzero_per_point": nonzero, "negative_values": negatives},
            0.0, worst == 0.0 and spot_worst == 0.0 and nonzero <= 1 and negatives == 0,
            0.0, seed, started=t)


def suite_thm36(cfg: ParamConfig, rec: _Recorder, cases: int = 100, n_max: int = 6):
    """``||sum_i a_i f_i|| = max_i |a_i|``."""
    rng = _rng(cfg, 36)
    for c in range(cases):
        t = time.perf_counter()
        n = int(rng.integers(1, n_max + 1))
        a = np.round(rng.uniform(-2, 2, size=n), 6)
        a[a == 0] = 0.5
        x = {i + 1: float(v) for i, v in enumerate(a)}
        u = UEvaluator(x, cfg)
        est = norm_search(u.as_expr(), cfg)
        target = float(np.abs(a).max())
        ok = target - 1e-6 <= est.lower_bound <= target + cfg.tol
        rec.add(f"thm36.case{c:03d}", "thm36", {"a": list(map(float, a))},
                {"search_max": est.lower_bound, "max_abs_a": target,
                 "witness": est.best_witness.to_json()},
                [target - 1e-6, target + cfg.tol], ok, 1e-6, cfg.seed, started=t)


def suite_thm37(cfg: ParamConfig, rec: _Recorder, cases: int = 100):
    """``T(u(x)) = x`` on finitely supported vectors."""
    t = time.perf_counter()
    rng = _rng(cfg, 37)
    worst = 0.0
    for c in range(cases):
        k = int(rng.integers(1, min(cfg.truncation, 10) + 1))
        idx = rng.choice(np.arange(1, cfg.truncation + 1), size=k, replace=False)
        vals = rng.standard_normal(k) * np.exp(rng.uniform(-3, 3, size=k))
        x = {int(i): float(v) for i, v in zip(idx, vals)}
        back = t_apply(UEvaluator(x, cfg), cfg.truncation)
        ref = np.zeros(cfg.truncation)
        for i, v in x.items():
            ref[i - 1] = v
        worst = max(worst, float(np.abs(back - ref).max()))
    rec.add("thm37.roundtrip", "thm37", {"cases": cases, "truncation": cfg.truncation},
            {"max_error": worst}, 1e-12, worst <= 1e-12, 1e-12, cfg.seed, started=t)


def suite_lemma33(cfg: ParamConfig, rec: _Recorder, n_range=range(1, 5), k_range=range(1, 5),
                  pointwise: int | None = None):
    """``||h_k - f_n|| <= 1 / (N_{n+k} - 1)`` and ``h_k >= f_n >= 0`` pointwise."""
    pointwise = max(1, cfg.samples // 10) if pointwise is None else pointwise
    for n in n_range:
        for k in k_range:
            t = time.perf_counter()
            hk, fn = HEvaluator(n, k, cfg), FnEvaluator(n, cfg)
            expr = Add(hk.as_expr(), Scale(-1.0, fn.as_expr()))
            bound = 1.0 / (cfg.N(n + k) - 1)
            est = norm_search(expr, cfg)
            seed = cfg.seed + 33_000 + 10 * n + k
            d = min(cfg.truncation, max(12, n + k + 4))
            coords = list(range(1, d + 1))
            X = sample_points(np.random.default_rng(seed), pointwise, d, ratios=cfg.n_seq[:d])
            hv, fv = hk.batch(X, coords), fn.batch(X, coords)
            sandwich = bool(((fv >= 0) & (hv >= fv)).all())
            ok = est.lower_bound <= bound + cfg.tol and sandwich
            rec.add(f"lemma33.n{n}.k{k}", "lemma33", {"n": n, "k": k, "expr": str(expr)},
                    {"search_max": est.lower_bound, "bound": bound, "pointwise_samples": pointwise,
                     "sandwich_holds": sandwich, "witness": est.best_witness.to_json()},
                    bound, ok, cfg.tol, seed, started=t)


def random_claim_tuple(rng: np.random.Generator, width: int = 12, max_len: int = 4) -> np.ndarray:
    """Random ``l x width`` matrix whose joint support has 1..width columns."""
    l = int(rng.integers(1, max_len + 1))
    m = int(rng.integers(1, width + 1))
    cols = rng.choice(width, size=m, replace=False)
    X = np.zeros((l, width))
    mask = rng.random((l, m)) < 0.7
    mask[:, 0] |= ~mask.any(axis=1)
    vals = rng.standard_normal((l, m)) * np.exp(rng.uniform(-3, 1, size=(l, m)))
    X[:, cols] = np.where(mask, vals, 0.0)
    return X


def _ball_sup_batch(T: np.ndarray, E: np.ndarray) -> np.ndarray:
    b, L, w = T.shape
    P = np.abs(T.reshape(b * L, w) @ E.T).reshape(b, L, -1)
    return P.sum(axis=1).max(axis=1)


def suite_claim(cfg: ParamConfig, rec: _Recorder, width: int = 12, chunk: int = 1024):
    """Sign averaging: ``sum_i |x_i*(m_i)| <= max_eps sum_i |sum_j eps_j x_ij*|``."""
    t = time.perf_counter()
    seed = cfg.seed + 7_000
    rng = np.random.default_rng(seed)
    E = sign_block(width, 0, 1 << (width - 1))
    count = cfg.samples
    L = 4
    viol_adm = viol_raw = not_admissible = 0
    worst_gap = -np.inf
    spot = min(500, count)
    spot_mismatch = 0
    done = 0
    while done < count:
        b = min(chunk, count - done)
        T = np.zeros((b, L, width))
        picks = np.zeros((b, L), dtype=int)
        lens = np.zeros(b, dtype=int)
        for r in range(b):
            X = random_claim_tuple(rng, width, L)
            T[r, : X.shape[0]] = X
            lens[r] = X.shape[0]
            picks[r, : X.shape[0]] = rng.integers(width, size=X.shape[0])
        # exhaustive over all 2^(width-1) sign classes, every tuple at once
        sup_raw = _ball_sup_batch(T, E)
        lhs_raw = np.abs(np.take_along_axis(T, picks[:, :, None], axis=2)[:, :, 0]).sum(axis=1)
        viol_raw += int((lhs_raw > sup_raw * (1 + 1e-12)).sum())
        scale = 1.0 / np.maximum(sup_raw, 1.0)
        Ta = T * scale[:, None, None]
        sup_adm = _ball_sup_batch(Ta, E)
        lhs_adm = lhs_raw * scale
        not_admissible += int((sup_adm > 1.0 + cfg.tol).sum())
        viol_adm += int((lhs_adm > 1.0 + 1e-12).sum())
        worst_gap = max(worst_gap, float((lhs_adm - sup_adm).max()))
        if done < spot:
            for r in range(min(b, spot - done)):
                tup = [SparseFunctional.from_dense("dual", range(1, width + 1), T[r, i])
                       for i in range(lens[r])]
                res = claim_check(tup, [int(p) + 1 for p in picks[r, : lens[r]]])
                if not res.holds or abs(res.rhs - sup_raw[r]) > 1e-12 * max(1.0, sup_raw[r]):
                    spot_mismatch += 1
        done += b
    ok = viol_adm == 0 and viol_raw == 0 and not_admissible == 0 and spot_mismatch == 0
    rec.add("claim.random_tuples", "claim",
            {"samples": count, "width": width, "max_tuple": L, "generator": "random_claim_tuple"},
            {"violations_admissible": viol_adm, "violations_sign_averaging": viol_raw,
             "inadmissible_after_scaling": not_admissible, "max_lhs_minus_sup": worst_gap,
             "claim_check_spot_mismatches": spot_mismatch, "claim_check_spot": spot},
            1.0, ok, 1e-12, seed, started=t)


def suite_lemma23(cfg: ParamConfig, rec: _Recorder, length: int = 16, eps_values=(0.1, 0.5)):
    """Disjoint witnesses give ``||sum_{k<=m} f_{n_k}|| >= m - eps``."""
    if cfg.truncation < length:
        raise ConfigError(f"lemma23 needs truncation >= {length}")
    families = {
        "coordinate": coordinate_family(length + 4),
        "phi": phi_family(length + 4, cfg.truncation),
    }
    for name, fam in families.items():
        for eps in eps_values:
            t = time.perf_counter()
            sel = select_subsequence(fam, eps, length)
            supports_disjoint = all(
                not (sel.witnesses[a].support & sel.witnesses[b].support)
                for a in range(length) for b in range(a + 1, length))
            per_m = []
            ok = supports_disjoint
            for m in range(1, length + 1):
                wit = list(sel.witnesses[:m])
                adm = coordinate_admissibility(wit)
                total = float(sum(sel.values[:m]))
                sum_expr = add_all([fam[n - 1][0] for n in sel.indices[:m]])
                lb = norm_lower_bound(sum_expr, wit)
                good = adm <= 1.0 and total >= m - eps and lb >= m - eps
                ok &= good
                per_m.append({"m": m, "admissibility": adm, "sum_values": total, "lower_bound": lb})
            rec.add(f"lemma23.{name}.eps{eps}", "lemma23",
                    {"family": name, "eps": eps, "length": length},
                    {"indices": list(sel.indices), "per_m": per_m,
                     "supports_disjoint": supports_disjoint, "selection": sel.to_json()},
                    "m - eps", ok, 0.0, None, started=t)


def suite_lemma22(cfg: ParamConfig, rec: _Recorder, subsets: int = 100, exprs: int = 1000,
                  vectors: int = 1000):
    """The quotient onto c0: generators, lattice homomorphism, surjectivity."""
    N = min(cfg.truncation, 12)
    rng = _rng(cfg, 22)
    t = time.perf_counter()
    bad = 0
    for _ in range(subsets):
        k = int(rng.integers(1, N + 1))
        A = frozenset(int(i) for i in rng.choice(np.arange(1, N + 1), size=k, replace=False))
        if not np.array_equal(phi_apply(Generator(A), N), indicator(A, N)):
            bad += 1
    rec.add("lemma22.generators", "lemma22", {"subsets": subsets, "N": N},
            {"mismatches": bad}, 0, bad == 0, 0.0, cfg.seed, started=t)

    t = time.perf_counter()
    pool = [frozenset(int(i) for i in rng.choice(np.arange(1, N + 1), size=int(rng.integers(1, 4)),
                                                 replace=False)) for _ in range(12)]
    bad = 0
    for _ in range(exprs):
        e1 = random_expr(rng, pool, 3)
        e2 = random_expr(rng, pool, 3)
        c = float(np.round(rng.uniform(-3, 3), 3))
        p1, p2 = phi_apply(e1, N), phi_apply(e2, N)
        checks = [
            (Sup(e1, e2), np.maximum(p1, p2)),
            (Inf(e1, e2), np.minimum(p1, p2)),
            (Add(e1, e2), p1 + p2),
            (Abs(e1), np.abs(p1)),
            (Scale(c, e1), c * p1),
        ]
        for e, ref in checks:
            if not np.array_equal(phi_apply(e, N), ref):
                bad += 1
    rec.add("lemma22.homomorphism", "lemma22", {"expressions": exprs, "N": N},
            {"mismatches": bad}, 0, bad == 0, 0.0, cfg.seed, started=t)

    t = time.perf_counter()
    worst = 0.0
    structural = 0
    for _ in range(vectors):
        k = int(rng.integers(1, N + 1))
        x = np.zeros(N)
        idx = rng.choice(N, size=k, replace=False)
        x[idx] = np.abs(rng.standard_normal(k))
        if rng.random() < 0.3:
            x[idx[: max(1, k // 2)]] = x[idx[0]]
        dec = greedy_decompose(x)
        worst = max(worst, float(np.abs(dec.reconstruct(N) - x).max()))
        worst = max(worst, float(np.abs(phi_apply(decomposition_expr(dec), N) - x).max()))
        lams = [lam for lam, _ in dec.terms]
        chain = [A for _, A in dec.terms]
        if any(lam < 0 for lam in lams) or any(not (a < b) for a, b in zip(chain, chain[1:])):
            structural += 1
        if abs(sum(lams) - x.max()) > 1e-12:
            structural += 1
    rec.add("lemma22.surjective", "lemma22", {"vectors": vectors, "N": N},
            {"max_reconstruction_error": worst, "structural_failures": structural},
            1e-12, worst <= 1e-12 and structural == 0, 1e-12, cfg.seed, started=t)


_SUITE_FUNCS: dict[str, Callable] = {
    "lemma22": suite_lemma22,
    "lemma23": suite_lemma23,
    "claim": suite_claim,
    "lemma32": suite_lemma32,
    "lemma33": suite_lemma33,
    "lemma34": suite_lemma34,
    "lemma35": suite_lemma35,
    "thm36": suite_thm36,
    "thm37": suite_thm37,
}


def run_suite(name: str, cfg: ParamConfig | None = None, **kw) -> VerificationReport:
    """Run one suite (or ``all``) and collect its records."""
    cfg = cfg or ParamConfig()
    cfg.validate()
    if name != "all" and name not in _SUITE_FUNCS:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    report = VerificationReport(name, cfg.to_json())
    rec = _Recorder(report, cfg)
    names = SUITES if name == "all" else (name,)
    for n in names:
        t = time.perf_counter()
        _SUITE_FUNCS[n](cfg, rec, **kw)
        report.timing[f"suite.{n}"] = round(time.perf_counter() - t, 3)
    return report
