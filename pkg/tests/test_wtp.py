import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_binary, random_wtp, wtp_functions
from osmax.wtp import (
    ProductFormFunction,
    ThresholdPotential,
    WtpFunction,
    approx_ratio,
    combine,
    degree,
    eval_integral,
    eval_product_form,
    eval_relaxation,
    from_coverage,
    from_facility_location,
    from_quadratic,
    lipschitz_bounds,
    relax_product_form,
    supergradient,
)


def naive_value(f: WtpFunction, x) -> float:
    """Term-by-term evaluation, independent of the compiled matrices."""
    return sum(c * psi(x) for c, psi in f.terms)


def single(c, b, support, weights, n):
    return WtpFunction(n, ((c, ThresholdPotential(b, support, weights)),))


# --- evaluation -------------------------------------------------------------


def test_eval_integral_examples():
    f = single(1.0, 1.0, [0, 1, 2], [1, 1, 1], 3)
    assert eval_integral(f, [1, 0, 0]) == 1.0
    assert eval_integral(f, [0, 0, 0]) == 0.0
    g = single(2.0, 3.0, [0, 1], [2, 2], 2)
    assert eval_integral(g, [1, 1]) == 6.0
    for x in all_binary(2):
        assert eval_integral(g, x) == pytest.approx(2 * min(3, 2 * x[0] + 2 * x[1]))


def test_eval_relaxation_examples():
    f = single(1.0, 1.0, [0, 1], [1, 1], 2)
    assert eval_relaxation(f, [0.5, 0.5]) == pytest.approx(1.0)
    assert eval_relaxation(f, [0.3, 0.3]) == pytest.approx(0.6)


def test_dimension_and_domain_errors():
    f = single(1.0, 1.0, [0, 1], [1, 1], 2)
    with pytest.raises(ValueError):
        eval_integral(f, [1, 0, 0])
    with pytest.raises(ValueError):
        eval_integral(f, [0.5, 0])
    with pytest.raises(ValueError):
        eval_relaxation(f, [1.1, 0.0])
    with pytest.raises(ValueError):
        supergradient(f, [0.1])


def test_relaxation_clips_roundoff():
    f = single(1.0, None, [0, 1], [1, 1], 2)
    assert eval_relaxation(f, [1 + 5e-10, -5e-10]) == pytest.approx(1.0)


def test_unbounded_threshold_never_binds():
    f = single(1.0, math.inf, [0, 1], [5, 5], 2)
    assert f.terms[0][1].unbounded
    assert eval_integral(f, [1, 1]) == 10.0
    assert np.array_equal(supergradient(f, [1.0, 1.0]), [5.0, 5.0])


def test_weights_clamped_to_threshold():
    psi = ThresholdPotential(1.0, [0, 1], [3.0, 0.5])
    assert psi.weights == (1.0, 0.5)


@pytest.mark.parametrize(
    "args",
    [
        (1.0, [], []),
        (1.0, [0, 0], [1, 1]),
        (1.0, [0], [-1.0]),
        (0.0, [0], [1.0]),
        (1.0, [0, 1], [1.0]),
    ],
)
def test_threshold_potential_validation(args):
    with pytest.raises(ValueError):
        ThresholdPotential(*args)


def test_function_validation():
    with pytest.raises(ValueError):
        single(-1.0, 1.0, [0], [1], 1)
    with pytest.raises(ValueError):
        single(1.0, 1.0, [3], [1], 2)


def test_zero_coefficients_are_skipped():
    f = WtpFunction(2, ((0.0, ThresholdPotential(1.0, [0], [1])), (1.0, ThresholdPotential(1.0, [1], [1]))))
    assert f.weight_matrix.shape == (1, 2)
    assert eval_integral(f, [1, 1]) == 1.0


def test_integral_agreement_exhaustive(rng):
    for _ in range(30):
        n = int(rng.integers(1, 13))
        f = random_wtp(rng, n)
        X = all_binary(n) if n <= 10 else rng.integers(0, 2, size=(2000, n)).astype(float)
        relaxed = f.evaluate_many(X)
        for x, v in zip(X[:256], relaxed[:256]):
            assert eval_relaxation(f, x) == eval_integral(f, x)
            assert v == pytest.approx(eval_integral(f, x), rel=1e-14, abs=1e-14)
            assert v == pytest.approx(naive_value(f, x), abs=1e-12)


@given(wtp_functions(), st.data())
@settings(max_examples=60, deadline=None)
def test_compiled_matches_naive(f, data):
    y = np.array(data.draw(st.lists(st.floats(0, 1), min_size=f.n, max_size=f.n)))
    assert eval_relaxation(f, y) == pytest.approx(naive_value(f, y), rel=1e-12, abs=1e-12)


# --- supergradients ---------------------------------------------------------


def test_supergradient_examples():
    f = single(1.0, 1.0, [0, 1], [1, 1], 2)
    assert np.array_equal(supergradient(f, [0.3, 0.3]), [1.0, 1.0])
    assert np.array_equal(supergradient(f, [0.7, 0.7]), [0.0, 0.0])
    # tie at the threshold counts as active
    assert np.array_equal(supergradient(f, [0.5, 0.5]), [1.0, 1.0])
    g = single(2.0, 3.0, [0, 1], [2, 2], 2)
    assert np.array_equal(supergradient(g, [0.5, 0.5]), [4.0, 4.0])


def test_supergradient_inequality_random_instances(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        f = random_wtp(rng, n, max_terms=4)
        y, y2 = rng.random(n), rng.random(n)
        g = supergradient(f, y)
        assert f(y) - f(y2) >= g @ (y - y2) - 1e-9


def test_supergradient_inequality_tie_instance(rng):
    g_fn = single(2.0, 3.0, [0, 1], [2, 2], 2)
    y = np.array([0.5, 0.5])
    g = supergradient(g_fn, y)
    for y2 in rng.random((1000, 2)):
        assert g_fn(y) - g_fn(y2) >= g @ (y - y2) - 1e-12


# --- structure --------------------------------------------------------------


def test_monotone_submodular_exhaustive(rng):
    for _ in range(15):
        n = int(rng.integers(2, 8))
        f = random_wtp(rng, n)
        X = all_binary(n)
        vals = dict(zip(map(tuple, X.astype(int)), f.evaluate_many(X)))
        for A in vals:
            for i in range(n):
                if A[i]:
                    continue
                Ai = list(A)
                Ai[i] = 1
                gain_A = vals[tuple(Ai)] - vals[A]
                assert gain_A >= -1e-12
                for B in vals:
                    if B[i] or any(a > b for a, b in zip(A, B)):
                        continue
                    Bi = list(B)
                    Bi[i] = 1
                    assert gain_A >= vals[tuple(Bi)] - vals[B] - 1e-12


def test_degree():
    assert degree(from_coverage([[0, 1, 2]])) == 3
    assert degree(single(1.0, 1.0, [2], [1], 3)) == 1
    q = from_quadratic([1, 1, 1], -0.1 * (np.ones((3, 3)) - np.eye(3)))
    assert degree(q) == 3
    assert all(len(psi.support) == 2 for _, psi in q.terms[1:])


def test_approx_ratio():
    assert approx_ratio(2) == pytest.approx(0.75)
    assert approx_ratio(1) == 1.0
    assert abs(approx_ratio(10**6) - (1 - math.exp(-1))) < 1e-5
    ratios = [approx_ratio(d) for d in range(1, 50)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 1 - math.exp(-1)
    with pytest.raises(ValueError):
        approx_ratio(0)


def test_lipschitz_bounds_dominate_supergradients(rng):
    for _ in range(100):
        f = random_wtp(rng, 5)
        bound = lipschitz_bounds(f)
        assert np.all(supergradient(f, rng.random(5)) <= bound + 1e-12)


# --- numeric inequalities --------------------------------------------------


def product_term(b, w, y):
    return b - b * np.prod(1 - y * w / b)


def test_product_lower_bound_random(rng):
    for _ in range(1000):
        k = int(rng.integers(1, 8))
        b = rng.uniform(0.1, 3)
        w = np.minimum(rng.uniform(0, 3, k), b)
        y = rng.random(k)
        assert min(b, y @ w) >= product_term(b, w, y) - 1e-12


def test_product_upper_bound_random(rng):
    for _ in range(1000):
        k = int(rng.integers(1, 8))
        b = rng.uniform(0.1, 3)
        w = np.minimum(rng.uniform(0, 3, k), b)
        y = rng.random(k)
        assert product_term(b, w, y) >= approx_ratio(k) * min(b, y @ w) - 1e-12


# --- builders ----------------------------------------------------------------


def test_from_coverage_matches_direct():
    f = from_coverage([[0, 1]])
    assert eval_integral(f, [1, 0]) == 1.0
    assert eval_integral(f, [1, 1]) == 1.0
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(1, 7))
        sets = [rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False) for _ in range(4)]
        c = rng.random(4)
        f = from_coverage(sets, c, n=n)
        for x in all_binary(n):
            direct = sum(ci * (1 - np.prod(1 - x[s])) for ci, s in zip(c, sets))
            assert eval_integral(f, x) == pytest.approx(direct)
    with pytest.raises(ValueError):
        from_coverage([[]])


def test_from_quadratic_examples():
    h = np.array([1.0, 1.0])
    H = np.array([[0.0, -1.0], [-1.0, 0.0]])
    f = from_quadratic(h, H)
    assert eval_integral(f, [1, 1]) == pytest.approx(1.0)
    for x in all_binary(2):
        assert eval_integral(f, x) == pytest.approx(h @ x + 0.5 * x @ H @ x)
    modular = from_quadratic([2.0, 3.0, 0.5], np.zeros((3, 3)))
    for x in all_binary(3):
        assert eval_integral(modular, x) == pytest.approx(np.array([2.0, 3.0, 0.5]) @ x)
    assert eval_integral(f, [0, 0]) == 0.0


def test_from_quadratic_brute_force(rng):
    for _ in range(20):
        n = int(rng.integers(2, 8))
        U = np.triu(-rng.random((n, n)), 1)
        H = U + U.T
        h = -H.sum(axis=1) + rng.random(n)
        f = from_quadratic(h, H)
        for x in all_binary(n):
            assert eval_integral(f, x) == pytest.approx(h @ x + 0.5 * x @ H @ x, abs=1e-9)


@pytest.mark.parametrize(
    "h,H,match",
    [
        ([0.5, 0.5], [[0, -1], [-1, 0]], "not monotone"),
        ([1, 1], [[0, 1], [1, 0]], "nonpositive"),
        ([1, 1], [[0, -1], [0, 0]], "symmetric"),
        ([1, 1], [[-1, 0], [0, 0]], "diagonal"),
    ],
)
def test_from_quadratic_rejects(h, H, match):
    with pytest.raises(ValueError, match=match):
        from_quadratic(h, np.array(H, dtype=float))


def test_from_facility_location():
    f = from_facility_location(np.array([[0.9], [0.4]]))
    assert eval_integral(f, [1, 0]) == pytest.approx(0.9)
    assert eval_integral(f, [0, 1]) == pytest.approx(0.4)
    assert eval_integral(f, [1, 1]) == pytest.approx(0.9)
    zero = from_facility_location(np.zeros((3, 2)))
    assert all(eval_integral(zero, x) == 0 for x in all_binary(3))
    with pytest.raises(ValueError):
        from_facility_location(np.array([[-1.0]]))


def test_from_facility_location_brute_force(rng):
    for _ in range(10):
        W = rng.random((5, 4))
        f = from_facility_location(W)
        for x in all_binary(5):
            sel = x.astype(bool)
            direct = W[sel].max(axis=0).mean() if sel.any() else 0.0
            assert eval_integral(f, x) == pytest.approx(direct)
    one = from_facility_location(rng.random((1, 3)))
    assert eval_integral(one, [1]) == pytest.approx(one.coefficients.sum())


def test_combine_and_serialization(rng):
    f, g = random_wtp(rng, 4), random_wtp(rng, 4)
    h = combine([f, g, f], [0.5, 1.0, 0.5])
    for x in all_binary(4):
        assert eval_integral(h, x) == pytest.approx(eval_integral(f, x) + eval_integral(g, x))
    back = WtpFunction.from_dict(h.to_dict())
    X = all_binary(4)
    assert np.allclose(back.evaluate_many(X), h.evaluate_many(X))
    data = {"n": 2, "terms": [{"c": 1, "b": "inf", "elements": [0, 1], "weights": [1, 2]}]}
    assert eval_integral(WtpFunction.from_dict(data), [1, 1]) == 3.0
    with pytest.raises(ValueError):
        combine([f, random_wtp(rng, 5)])


# --- product form ------------------------------------------------------------


def test_product_form_examples():
    p = ProductFormFunction(2, ((1.0, ThresholdPotential(1.0, [0, 1], [1.0, 1.0])),))
    assert eval_product_form(p, [1, 1]) == pytest.approx(1.0)
    assert eval_relaxation(relax_product_form(p), [1, 1]) == 1.0
    q = ProductFormFunction(2, ((1.0, ThresholdPotential(1.0, [0, 1], [0.5, 0.5])),))
    assert eval_product_form(q, [1, 1]) == pytest.approx(0.75)
    assert eval_relaxation(relax_product_form(q), [1, 1]) == 1.0
    y = np.array([0.5, 0.5])
    assert product_term(1.0, np.ones(2), y) == pytest.approx(0.75)
    assert approx_ratio(2) * min(1.0, y.sum()) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        ProductFormFunction(1, ((1.0, ThresholdPotential(None, [0], [1.0])),))


def test_product_form_sandwich_exhaustive(rng):
    for _ in range(10):
        n = int(rng.integers(1, 11))
        base = random_wtp(rng, n, unbounded_prob=0.0)
        p = ProductFormFunction(n, base.terms)
        relaxed = relax_product_form(p)
        X = all_binary(n)
        upper = relaxed.evaluate_many(X)
        for x, u in itertools.islice(zip(X, upper), 1024):
            assert u >= eval_product_form(p, x) - 1e-12
