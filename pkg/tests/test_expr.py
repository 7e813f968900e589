import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fblc0.errors import DomainError, ParseError, PreconditionError
from fblc0.expr import (
    Abs, Add, Generator, Inf, Pos, Scale, Sup, check_positive_homogeneity, dependency_support,
    depth, evaluate, evaluate_batch, parse, random_expr, to_text,
)
from fblc0.functionals import basis, cube, dual


# -- evaluation examples ----------------------------------------------------------


def test_generator_at_coordinate_functional():
    assert evaluate(Generator(1), basis(1)) == 1.0


def test_abs_of_difference_vanishes():
    e = Abs(Add(Generator("a"), Scale(-1, Generator("b"))))
    assert evaluate(e, cube({"a": 1, "b": 1})) == 0.0


def test_sup_of_scaled_generators():
    e = Sup(Scale(0.5, Generator("a")), Generator("b"))
    assert evaluate(e, cube({"a": 1, "b": 0.25})) == 0.5


def test_unresolvable_generator_names_the_id():
    pt = cube({"a": 1.0}, domain={"a"})
    with pytest.raises(DomainError, match="'zz'"):
        evaluate(Generator("zz"), pt)


def test_unlisted_dual_coordinate_is_zero():
    assert evaluate(Generator(7), dual({1: 0.5})) == 0.0


# -- dependency support ----------------------------------------------------------


def test_dependency_support_examples():
    assert dependency_support(Generator("a")) == {"a"}
    assert dependency_support(Sup(Generator("a"), Abs(Generator("b")))) == {"a", "b"}
    e = Add(Scale(2, Generator("a")), Generator("a"))
    assert dependency_support(e) == {"a"}


def test_eval_ignores_coordinates_outside_support():
    rng = np.random.default_rng(3)
    for _ in range(200):
        e = random_expr(rng, [1, 2, 3], 4)
        x = rng.uniform(-1, 1, 6)
        y = x.copy()
        y[3:] = rng.uniform(-1, 1, 3)
        px = dual({i + 1: v for i, v in enumerate(x)})
        py = dual({i + 1: v for i, v in enumerate(y)})
        assert evaluate(e, px) == evaluate(e, py)


# -- positive homogeneity ---------------------------------------------------------


@pytest.mark.parametrize("expr,point,lam", [
    (Generator(1), {1: 0.37, 2: -0.2}, 2.0),
    (Abs(Generator(1)), {1: -0.3}, 10.0),
    (Sup(Generator(1), Generator(2)), {1: 0.2, 2: 0.7}, 0.5),
])
def test_positive_homogeneity_examples(expr, point, lam):
    # cube points cannot leave [-1, 1], so the scaled point lives in l1
    assert check_positive_homogeneity(expr, dual(point), lam) == 0.0


def test_positive_homogeneity_rejects_nonpositive_lambda():
    with pytest.raises(PreconditionError):
        check_positive_homogeneity(Generator(1), basis(1), 0.0)
    with pytest.raises(PreconditionError):
        check_positive_homogeneity(Generator(1), basis(1), -1.0)


def test_positive_homogeneity_deep_trees():
    rng = np.random.default_rng(11)
    for _ in range(200):
        e = random_expr(rng, [1, 2, 3, 4], 20)
        assert depth(e) <= 21
        x = dual({i: float(v) for i, v in enumerate(rng.uniform(-1, 1, 4), start=1)})
        lam = float(np.exp(rng.uniform(-3, 3)))
        ref = abs(evaluate(e, x)) * lam
        assert check_positive_homogeneity(e, x, lam) <= 1e-12 * max(1.0, ref)


# -- lattice identities ----------------------------------------------------------

_gens = [1, 2, 3]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), vals=st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_lattice_identities(seed, vals):
    rng = np.random.default_rng(seed)
    e, f = random_expr(rng, _gens, 3), random_expr(rng, _gens, 3)
    x = dual({i + 1: v for i, v in enumerate(vals)})
    assert evaluate(Abs(e), x) == evaluate(Sup(e, Scale(-1, e)), x)
    assert evaluate(Inf(e, f), x) == evaluate(Scale(-1, Sup(Scale(-1, e), Scale(-1, f))), x)
    assert evaluate(Pos(e), x) == max(evaluate(e, x), 0.0)


def test_operator_sugar():
    a, b = Generator(1), Generator(2)
    assert (a + b) == Add(a, b)
    assert (a | b) == Sup(a, b)
    assert (a & b) == Inf(a, b)
    assert abs(a) == Abs(a)
    assert (2 * a) == Scale(2.0, a)
    assert evaluate(a - b, dual({1: 0.5, 2: 0.25})) == 0.25


def test_batch_matches_scalar_bitwise():
    rng = np.random.default_rng(5)
    coords = [1, 2, 3, 4]
    X = rng.standard_normal((300, 4))
    for _ in range(50):
        e = random_expr(rng, coords, 5)
        fast = evaluate_batch(e, X, coords)
        slow = np.array([evaluate(e, dual({c: v for c, v in zip(coords, row)})) for row in X])
        assert np.array_equal(fast, slow)


def test_scale_rejects_nonfinite():
    with pytest.raises(ValueError):
        Scale(float("nan"), Generator(1))


# -- text form -----------------------------------------------------------------


def test_round_trip_random_trees():
    rng = np.random.default_rng(1)
    ids = [1, 2, frozenset({1, 3}), "a"]
    for _ in range(500):
        e = random_expr(rng, ids, 5, coefficients=[0.1, -1 / 3, 1e-17, 2.5e300, 0.0])
        text = to_text(e)
        back = parse(text)
        assert back == e
        assert to_text(back) == text


def test_text_examples():
    e = parse("(sup (scale 0.5 (gen 1)) (abs (gen {1,3})))")
    assert e == Sup(Scale(0.5, Generator(1)), Abs(Generator(frozenset({1, 3}))))
    assert to_text(Pos(Generator(2))) == "(pos (gen 2))"
    assert parse("(pos (gen 2))") == Pos(Generator(2))


def test_variadic_add_folds_left():
    a, b, c = Generator(1), Generator(2), Generator(3)
    assert parse("(add (gen 1) (gen 2) (gen 3))") == Add(Add(a, b), c)
    assert parse("(sup (gen 1) (gen 2) (gen 3))") == Sup(Sup(a, b), c)


@pytest.mark.parametrize("text,pos", [
    ("(add (gen 1)", 12),
    ("(foo (gen 1))", 1),
    ("(gen 1) (gen 2)", 8),
    ("(scale x (gen 1))", 7),
    ("", 0),
    ("f:1", 0),
])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.position == pos
