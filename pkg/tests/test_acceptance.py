"""End-to-end acceptance checks at full default budgets.

Each test records a one-line verdict; ``conftest.py`` prints them after the
run, and ``python tests/test_acceptance.py`` prints them directly.
"""

import time

import numpy as np
import pytest

from fblc0.config import ParamConfig
from fblc0.expr import random_expr
from fblc0.functionals import CUBE
from fblc0.norm import norm_search
from fblc0.verify import run_suite

from oracles import fbl_norm_exact

RESULTS: dict[int, tuple[bool, str]] = {}
CFG = ParamConfig()


def record(num: int, ok: bool, detail: str) -> None:
    RESULTS[num] = (ok, detail)
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _suite(name: str):
    t = time.perf_counter()
    rep = run_suite(name, CFG)
    return rep, time.perf_counter() - t


def _vals(rep, prefix):
    return [r for r in rep.records if r.check_id.startswith(prefix)]


pytestmark = pytest.mark.slow


def test_criterion_01_f_has_norm_one():
    rep, secs = _suite("lemma35")
    wit = [r.values["lower_bound"] for r in rep.records if r.check_id.endswith(".witness")]
    srch = [r.values["search_max"] for r in rep.records if r.check_id.endswith(".search")]
    dom = [r.values["violations"] for r in rep.records if r.check_id.endswith(".dominance")]
    ok = (len(wit) == 8 and all(v == 1.0 for v in wit) and max(srch) <= 1 + 1e-9
          and sum(dom) == 0 and all(r.values["samples"] == 100_000 for r in rep.records
                                    if r.check_id.endswith(".dominance"))
          and secs <= 60)
    record(1, ok, f"witness lb={sorted(set(wit))}, search max={max(srch)!r}, "
                  f"dominance violations={sum(dom)}, {secs:.1f}s")


def test_criterion_02_partial_sums_norm_one():
    rep, secs = _suite("lemma34")
    vals = [r.values["search_max"] for r in rep.records]
    e1 = [r.values["witness_e1"] for r in rep.records]
    ok = (len(vals) == 8 and all(1 - 1e-9 <= max(v, w) and v <= 1 + 1e-9 for v, w in zip(vals, e1))
          and secs <= 120)
    record(2, ok, f"search range [{min(vals)!r}, {max(vals)!r}], e1 witness={min(e1)!r}, {secs:.1f}s")


def test_criterion_03_disjointness_exact():
    rep, _ = _suite("lemma32")
    r = rep.records[0]
    ok = (r.values["max_residual"] == 0.0 and r.values["scalar_spot_max"] == 0.0
          and r.values["max_nonzero_per_point"] <= 1 and r.inputs["samples"] == 100_000)
    record(3, ok, f"max residual={r.values['max_residual']!r} over {r.inputs['samples']} points, "
                  f"max nonzero per point={r.values['max_nonzero_per_point']}")


def test_criterion_04_u_is_isometric():
    rep, secs = _suite("thm36")
    gaps = [r.values["max_abs_a"] - r.values["search_max"] for r in rep.records]
    ok = len(gaps) == 100 and all(-1e-9 <= g <= 1e-6 for g in gaps)
    record(4, ok, f"100 cases, max|a| - search in [{min(gaps)!r}, {max(gaps)!r}], {secs:.1f}s")


def test_criterion_05_t_inverts_u():
    rep, _ = _suite("thm37")
    err = rep.records[0].values["max_error"]
    record(5, err <= 1e-12, f"max |T(u(x)) - x| = {err!r}")


def test_criterion_06_truncation_bound():
    rep, _ = _suite("lemma33")
    slack = [r.values["bound"] + 1e-9 - r.values["search_max"] for r in rep.records]
    sandwich = all(r.values["sandwich_holds"] for r in rep.records)
    ok = len(slack) == 16 and min(slack) >= 0 and sandwich
    record(6, ok, f"16 pairs, min slack to bound={min(slack)!r}, h >= f >= 0 pointwise: {sandwich}")


def test_criterion_07_sign_averaging():
    rep, _ = _suite("claim")
    v = rep.records[0].values
    ok = (rep.records[0].inputs["samples"] == 100_000 and v["violations_admissible"] == 0
          and v["violations_sign_averaging"] == 0 and v["inadmissible_after_scaling"] == 0)
    record(7, ok, f"{rep.records[0].inputs['samples']} tuples, violations: admissible="
                  f"{v['violations_admissible']}, raw={v['violations_sign_averaging']}")


def test_criterion_08_disjoint_witnesses():
    rep, _ = _suite("lemma23")
    ok = len(rep.records) == 4 and rep.passed
    worst = min(p["sum_values"] - (p["m"] - r.inputs["eps"])
                for r in rep.records for p in r.values["per_m"])
    record(8, ok, f"2 families x eps in {{0.1, 0.5}} x m <= 16, min margin over m - eps = {worst!r}")


def test_criterion_09_quotient():
    rep, _ = _suite("lemma22")
    by = {r.check_id: r for r in rep.records}
    ok = (rep.passed and by["lemma22.generators"].inputs["subsets"] == 100
          and by["lemma22.homomorphism"].inputs["expressions"] == 1000
          and by["lemma22.surjective"].inputs["vectors"] == 1000)
    record(9, ok, "generators 100/100 exact, homomorphism 1000/1000 exact, reconstruction max err "
                  f"{by['lemma22.surjective'].values['max_reconstruction_error']!r}")


def test_criterion_10_exact_oracle():
    rng = np.random.default_rng(2024)
    worst, bad = 0.0, 0
    for _ in range(200):
        gens = ["a", "b"] if rng.random() < 0.8 else ["a"]
        e = random_expr(rng, gens, 3)
        exact = float(fbl_norm_exact(e, gens))
        est = norm_search(e, CFG, ambient=CUBE, coords=gens)
        gap = abs(exact - est.lower_bound)
        worst = max(worst, gap)
        bad += gap > 1e-6
    record(10, bad == 0, f"200 cases, {bad} beyond 1e-6, worst gap {worst!r}")


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) and len(RESULTS) == 10 else 1)
