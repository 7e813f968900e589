import numpy as np
import pytest

from fblc0.config import ParamConfig
from fblc0.embedding import (
    FnEvaluator, HEvaluator, UEvaluator, disjointness_residual, f, fn_batch, g, h, parse_vector,
    resolve_evaluator, t_apply, u_apply,
)
from fblc0.errors import PreconditionError
from fblc0.expr import Generator, evaluate
from fblc0.functionals import basis, cube, dual
from fblc0.norm import sample_points

CFG = ParamConfig()


def pt(*vals):
    return dual({i + 1: v for i, v in enumerate(vals)})


# -- g -----------------------------------------------------------------------------


def test_g_interpolates():
    assert g(1, 2, pt(0.4, 0.88), CFG) == pytest.approx(0.8, abs=1e-12)


def test_g_boundary_conditions():
    assert g(1, 2, pt(0.4, 0.0), CFG) == 1.0
    assert g(1, 2, pt(1.0, 3.1), CFG) == 0.0
    assert g(1, 2, pt(1.0, 3.0), CFG) == 0.0
    assert g(1, 2, pt(1.0, 2.0), CFG) == 1.0


def test_g_origin_convention():
    assert g(1, 2, pt(0.0, 0.0), CFG) == 1.0
    assert g(1, 2, pt(0.0, 0.5), CFG) == 0.0


def test_g_requires_n_below_m():
    with pytest.raises(PreconditionError):
        g(2, 2, pt(1, 1), CFG)
    with pytest.raises(PreconditionError):
        g(3, 1, pt(1, 1), CFG)


def test_g_degree_zero_homogeneous():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = pt(*rng.standard_normal(3))
        lam = float(np.exp(rng.uniform(-4, 4)))
        assert g(1, 3, x.scaled(lam), CFG) == pytest.approx(g(1, 3, x, CFG), abs=1e-12)


def test_g_rejects_cube_points():
    with pytest.raises(PreconditionError):
        g(1, 2, cube({1: 0.5}), CFG)


# -- f and h ------------------------------------------------------------------------


def test_f_examples():
    assert f(1, pt(0.5, 0.5), CFG) == 0.5
    assert f(2, pt(0.5, 0.5), CFG) == 0.0
    for n in range(1, 9):
        assert f(n, basis(n), CFG) == 1.0


def test_f_dominated_by_coordinate():
    rng = np.random.default_rng(2)
    X = sample_points(rng, 20000, 12, ratios=CFG.n_seq[:12])
    coords = list(range(1, 13))
    for n in range(1, 9):
        assert (fn_batch(n, X, coords, CFG) <= np.abs(X[:, n - 1])).all()


def test_h_examples():
    x = pt(0.1, 0.0, 0.9)
    assert f(1, x, CFG) == 0.0
    assert h(1, 1, x, CFG) == 0.1
    assert h(1, 1, x, CFG) - f(1, x, CFG) <= 1 / (CFG.N(2) - 1)
    y = pt(0.3, 0.2, -0.1)
    assert h(1, 2, y, CFG) == f(1, y, CFG)


def test_h_requires_positive_k():
    with pytest.raises(PreconditionError):
        h(1, 0, pt(1.0), CFG)


def test_h_monotone_in_k():
    rng = np.random.default_rng(6)
    X = sample_points(rng, 5000, 10, ratios=CFG.n_seq[:10])
    coords = list(range(1, 11))
    for n in (1, 2, 3):
        fv = fn_batch(n, X, coords, CFG)
        prev = None
        for k in range(1, 8):
            hv = fn_batch(n, X, coords, CFG, last=n + k)
            assert (hv >= fv).all()
            if prev is not None:
                assert (hv <= prev).all()
            prev = hv


def test_batch_matches_scalar_bitwise():
    rng = np.random.default_rng(3)
    X = sample_points(rng, 3000, 10, ratios=CFG.n_seq[:10])
    coords = list(range(1, 11))
    for n in (1, 4, 7):
        fast = fn_batch(n, X, coords, CFG)
        slow = np.array([f(n, dual({c: v for c, v in zip(coords, row)}), CFG) for row in X])
        assert np.array_equal(fast, slow)


def test_custom_sequence():
    cfg = ParamConfig(truncation=4, n_seq=(2, 5, 9, 20))
    assert f(2, pt(0.1, 0.5), cfg) == 0.0
    assert f(2, pt(0.1, 0.6), cfg) == pytest.approx(0.1)


# -- disjointness -----------------------------------------------------------------


def test_disjointness_examples():
    assert disjointness_residual(1, 2, pt(0.5, 0.5), CFG) == 0.0
    for j in range(1, 10):
        assert disjointness_residual(2, 5, basis(j), CFG) == 0.0


def test_disjointness_near_thresholds():
    rng = np.random.default_rng(10)
    X = sample_points(rng, 50000, 9, ratios=CFG.n_seq[:9])
    F = np.column_stack([fn_batch(n, X, range(1, 10), CFG) for n in range(1, 9)])
    assert ((F > 0).sum(axis=1) <= 1).all()


def test_disjointness_same_index():
    with pytest.raises(PreconditionError):
        disjointness_residual(3, 3, basis(1), CFG)


# -- u and T -----------------------------------------------------------------------


def test_u_examples():
    for n in range(1, 6):
        assert u_apply({n: 1.0}, basis(n), CFG) == 1.0
    assert u_apply({}, pt(0.3, 0.4), CFG) == 0.0
    assert UEvaluator({}, CFG)(pt(1.0)) == 0.0


def test_u_is_linear():
    x, y = {1: 0.5, 3: -2.0}, {2: 1.5, 3: 0.25}
    p = pt(0.7, -0.1, 0.05, 0.2)
    s = {k: x.get(k, 0) + y.get(k, 0) for k in set(x) | set(y)}
    assert u_apply(s, p, CFG) == pytest.approx(u_apply(x, p, CFG) + u_apply(y, p, CFG))


def test_t_examples():
    for n in range(1, 6):
        assert np.array_equal(t_apply(FnEvaluator(n, CFG), 8), np.eye(8)[n - 1])
    assert np.array_equal(t_apply(Generator(3), 6), np.eye(6)[2])


def test_t_inverts_u():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = {int(i): float(v) for i, v in zip(rng.choice(np.arange(1, 21), 5, replace=False),
                                               rng.standard_normal(5))}
        back = t_apply(UEvaluator(x, CFG), 20)
        ref = np.zeros(20)
        for i, v in x.items():
            ref[i - 1] = v
        assert np.abs(back - ref).max() <= 1e-12


# -- evaluators and names ----------------------------------------------------------


def test_resolve_names():
    assert isinstance(resolve_evaluator("f:3", CFG), FnEvaluator)
    he = resolve_evaluator("h:2:3", CFG)
    assert isinstance(he, HEvaluator) and (he.n, he.k) == (2, 3)
    ue = resolve_evaluator("u:1:0.5,3:-2", CFG)
    assert ue.x == {1: 0.5, 3: -2.0}
    with pytest.raises(KeyError):
        resolve_evaluator("q:1", CFG)


def test_evaluator_outside_truncation():
    with pytest.raises(PreconditionError):
        FnEvaluator(40, CFG)
    with pytest.raises(PreconditionError):
        UEvaluator({33: 1.0}, CFG)


def test_parse_vector():
    assert parse_vector("1:0.5, 3:-2") == {1: 0.5, 3: -2.0}
    for bad in ("1", "0:1", "1:1,1:2"):
        with pytest.raises(ValueError):
            parse_vector(bad)


def test_refs_combine_with_lattice_ops():
    e = FnEvaluator(1, CFG).as_expr() + FnEvaluator(2, CFG).as_expr()
    assert evaluate(e, pt(0.5, 0.5)) == 0.5
    assert evaluate(e, dual({1: 0.5, 2: 0.5}).scaled(0.5)) == 0.25
    assert evaluate(e, basis(1, 0.5)) + evaluate(e, basis(2, 0.5)) == 1.0
