"""Swap rounding from the matroid base polytope to bases.

Given a convex combination of bases, swap rounding merges them one at a time.
Two bases are merged by repeatedly exchanging a mismatched pair of elements
inside one block, keeping either side with probability proportional to its
weight.  The output has the right marginals and negatively correlated
coordinates.  Mismatches are resolved in a fixed order (lowest block, then
lowest indices) so that a seed fully determines the outcome.
"""

from __future__ import annotations

import numpy as np

from .matroid import BaseDecomposition, Matroid, decompose, is_basis, pad_with_slack

__all__ = [
    "make_rng",
    "merge_bases",
    "swap_round",
    "swap_round_batch",
    "round_point",
    "round_point_batch",
]


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    """The generator used throughout: numpy's default bit generator."""
    return np.random.default_rng(seed)


def _mismatch_pair(M: Matroid, x1: np.ndarray, x2: np.ndarray) -> tuple[int, int] | None:
    only1 = np.flatnonzero(x1 & ~x2)
    if only1.size == 0:
        return None
    block = M.block_of[only1].min()
    i = int(only1[M.block_of[only1] == block][0])
    only2 = np.flatnonzero(x2 & ~x1 & (M.block_of == block))
    return i, int(only2[0])


def merge_bases(M: Matroid, beta1: float, B1, beta2: float, B2, rng: np.random.Generator) -> np.ndarray:
    """Merge two bases into one, favoring ``B1`` with probability ``beta1 / (beta1 + beta2)`` per swap."""
    if not (is_basis(M, B1) and is_basis(M, B2)):
        raise ValueError("merge_bases needs two bases of the matroid")
    return _merge(M, beta1, B1, beta2, B2, rng)


def _merge(M: Matroid, beta1: float, B1, beta2: float, B2, rng: np.random.Generator) -> np.ndarray:
    x1 = np.asarray(B1, dtype=float) > 0.5
    x2 = np.asarray(B2, dtype=float) > 0.5
    keep_first = beta1 / (beta1 + beta2)
    while (pair := _mismatch_pair(M, x1, x2)) is not None:
        i, j = pair
        if rng.random() < keep_first:
            x2[j], x2[i] = False, True
        else:
            x1[i], x1[j] = False, True
    return x1.astype(float)


def swap_round(M: Matroid, decomposition: BaseDecomposition, rng: np.random.Generator) -> np.ndarray:
    """Fold ``merge_bases`` over the decomposition from left to right."""
    if len(decomposition) == 0:
        raise ValueError("empty decomposition")
    x = decomposition.bases[0]
    beta = float(decomposition.coefficients[0])
    for z, gamma in zip(decomposition.bases[1:], decomposition.coefficients[1:]):
        x = _merge(M, beta, x, float(gamma), z, rng)
        beta += float(gamma)
    return x


def swap_round_batch(
    M: Matroid, decomposition: BaseDecomposition, rng: np.random.Generator, size: int
) -> np.ndarray:
    """``size`` independent swap roundings of one decomposition, vectorized.

    Follows the same merge order as :func:`swap_round`; returns a
    ``(size, n)`` array of bases.
    """
    if len(decomposition) == 0:
        raise ValueError("empty decomposition")
    n = M.n
    rows = np.arange(size)
    big = M.n * (len(M.blocks) + 1)
    key = M.block_of * n + np.arange(n)
    X = np.repeat(decomposition.bases[:1] > 0.5, size, axis=0)
    beta = float(decomposition.coefficients[0])
    for z, gamma in zip(decomposition.bases[1:], decomposition.coefficients[1:]):
        Z = np.repeat(z[None, :] > 0.5, size, axis=0)
        keep_first = beta / (beta + float(gamma))
        while True:
            only1 = X & ~Z
            live = only1.any(axis=1)
            if not live.any():
                break
            r = rows[live]
            i = np.where(only1[r], key, big).argmin(axis=1)
            blk = M.block_of[i]
            only2 = (Z[r] & ~X[r]) & (M.block_of[None, :] == blk[:, None])
            j = np.where(only2, key, big).argmin(axis=1)
            first = rng.random(r.size) < keep_first
            a, b = r[first], r[~first]
            Z[a, j[first]] = False
            Z[a, i[first]] = True
            X[b, i[~first]] = False
            X[b, j[~first]] = True
        beta += float(gamma)
    return X.astype(float)


def _prepare(M: Matroid, y) -> tuple[Matroid, np.ndarray]:
    y = np.asarray(y, dtype=float)
    if y.shape != (M.n,):
        raise ValueError(f"expected a vector of length {M.n}, got shape {y.shape}")
    if M.exact:
        return M, y
    return pad_with_slack(M, y)


def round_point(M: Matroid, y, rng: np.random.Generator) -> np.ndarray:
    """Randomly round a polytope point to a basis (or independent set)."""
    base, padded = _prepare(M, y)
    x = swap_round(base, decompose(base, padded), rng)
    return x[: M.n]


def round_point_batch(M: Matroid, y, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent roundings of ``y`` (one decomposition, many merges)."""
    base, padded = _prepare(M, y)
    X = swap_round_batch(base, decompose(base, padded), rng, size)
    return X[:, : M.n]
