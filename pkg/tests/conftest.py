import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from osmax.wtp import ThresholdPotential, WtpFunction


def random_wtp(rng: np.random.Generator, n: int, max_terms: int = 6, unbounded_prob: float = 0.2) -> WtpFunction:
    """A random WTP function with a mix of bounded and unbounded terms."""
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        size = int(rng.integers(1, n + 1))
        support = rng.choice(n, size=size, replace=False).tolist()
        b = None if rng.random() < unbounded_prob else float(rng.uniform(0.3, 2.0))
        weights = rng.uniform(0.0, 1.5, size).tolist()
        terms.append((float(rng.uniform(0.0, 2.0)), ThresholdPotential(b, support, weights)))
    return WtpFunction(n, tuple(terms))


def all_binary(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)))


@st.composite
def wtp_functions(draw, min_n: int = 1, max_n: int = 6):
    n = draw(st.integers(min_n, max_n))
    num_terms = draw(st.integers(1, 4))
    terms = []
    for _ in range(num_terms):
        support = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
        weights = draw(st.lists(st.floats(0.0, 2.0), min_size=len(support), max_size=len(support)))
        b = draw(st.one_of(st.none(), st.floats(0.1, 3.0)))
        c = draw(st.floats(0.0, 3.0))
        terms.append((c, ThresholdPotential(b, support, weights)))
    return WtpFunction(n, tuple(terms))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lp_optimum(f: WtpFunction, M) -> float:
    """Exact max of the relaxation over the matroid polytope, as a linear program.

    Variables are ``y`` and one epigraph value ``t_l <= min(b_l, w_l . y)`` per
    term; the objective is ``sum_l c_l t_l``.
    """
    from scipy.optimize import linprog

    A, c, thr = f.weight_matrix, f.coefficients, f.thresholds
    L, n = A.shape
    objective = np.r_[np.zeros(n), -c]
    A_ub = np.hstack([-A, np.eye(L)])
    rows = []
    for block in M.blocks:
        row = np.zeros(n + L)
        row[list(block)] = 1.0
        rows.append(row)
    bounds = [(0, 1)] * n + [(None, b if np.isfinite(b) else None) for b in thr]
    kwargs = dict(A_ub=A_ub, b_ub=np.zeros(L), bounds=bounds, method="highs")
    if M.exact:
        res = linprog(objective, A_eq=np.array(rows), b_eq=list(M.ranks), **kwargs)
    else:
        res = linprog(
            objective,
            A_ub=np.vstack([A_ub, rows]),
            b_ub=np.r_[np.zeros(L), M.ranks],
            bounds=bounds,
            method="highs",
        )
    assert res.status == 0, res.message
    return -res.fun
