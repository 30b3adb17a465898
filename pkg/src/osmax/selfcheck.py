"""Quick property checks behind ``osmax validate``.

These are small-budget versions of the library's main guarantees, meant as a
smoke test of an installation.  The full suite lives in the test directory.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .matroid import Matroid, decompose, is_basis
from .oco import EUCLIDEAN, MirrorMap, OcoPolicyState, bregman_divergence, bregman_project
from .rounding import round_point_batch
from .wtp import ThresholdPotential, WtpFunction, approx_ratio, degree


def _random_wtp(rng: np.random.Generator, n: int) -> WtpFunction:
    terms = []
    for _ in range(int(rng.integers(1, 6))):
        size = int(rng.integers(1, n + 1))
        support = rng.choice(n, size=size, replace=False).tolist()
        b = None if rng.random() < 0.2 else float(rng.uniform(0.5, 2.0))
        terms.append((float(rng.uniform(0, 2)), ThresholdPotential(b, support, rng.uniform(0, 1, size).tolist())))
    return WtpFunction(n, tuple(terms))


def check_sandwich(rng: np.random.Generator, instances: int = 10, samples: int = 2000) -> bool:
    for _ in range(instances):
        n = int(rng.integers(2, 7))
        f = _random_wtp(rng, n)
        M = Matroid.uniform(n, int(rng.integers(1, n + 1)))
        y = bregman_project(EUCLIDEAN, M, rng.random(n))
        X = round_point_batch(M, y, rng, samples)
        vals = f.evaluate_many(X)
        se = vals.std() / math.sqrt(samples)
        if vals.mean() < approx_ratio(degree(f)) * f(y) - 4 * se - 1e-12:
            return False
    return True


def check_marginals(rng: np.random.Generator, samples: int = 20000) -> bool:
    M = Matroid.partition([[0, 1, 2], [3, 4, 5, 6]], [1, 2])
    y = bregman_project(EUCLIDEAN, M, rng.random(M.n))
    X = round_point_batch(M, y, rng, samples)
    if not all(is_basis(M, x) for x in X[:100]):
        return False
    return bool(np.max(np.abs(X.mean(axis=0) - y)) <= 4 * math.sqrt(0.25 / samples))


def check_decomposition(rng: np.random.Generator) -> bool:
    M = Matroid.partition([[0, 1, 2, 3], [4, 5, 6]], [2, 1])
    for _ in range(20):
        y = bregman_project(EUCLIDEAN, M, rng.normal(size=M.n))
        d = decompose(M, y)
        if np.max(np.abs(d.point() - y)) > 1e-8 or len(d) > 2 * M.n + 1:
            return False
    return True


def check_projection(rng: np.random.Generator, trials: int = 200) -> bool:
    M = Matroid.uniform(5, 2)
    bases = [np.isin(np.arange(5), c).astype(float) for c in itertools.combinations(range(5), 2)]
    for mirror in (EUCLIDEAN, MirrorMap.entropy(0.05)):
        z = rng.uniform(0, 2, 5)
        y = bregman_project(mirror, M, z)
        best = bregman_divergence(mirror, y, z)
        for _ in range(trials):
            w = rng.dirichlet(np.ones(len(bases)))
            if bregman_divergence(mirror, w @ np.array(bases), z) < best - 1e-8:
                return False
    return True


def check_negative_result(T: int = 200) -> bool:
    M = Matroid.uniform(2, 1)
    state = OcoPolicyState.create("oma", MirrorMap.entropy(0.0), M, 1.0)
    regret = 0.0
    for t in range(1, T + 1):
        g = np.array([1.0, 0.0]) if t <= T // 2 else np.array([0.0, 1.0])
        regret += 1.0 - float(g @ state.y)
        state.update(g)
    return regret >= T / 4


CHECKS = {
    "sandwich": check_sandwich,
    "rounding marginals": check_marginals,
    "decomposition": check_decomposition,
    "projection optimality": check_projection,
}


def run_checks(seed: int = 0, verbose: bool = False) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    results = [(name, fn(rng)) for name, fn in CHECKS.items()]
    results.append(("pure-entropy dynamic regret", check_negative_result()))
    for name, passed in results:
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
