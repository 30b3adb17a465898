"""Uniform and partition matroids used as decision sets.

The ground set ``{0, ..., n-1}`` is split into disjoint blocks ``V_i`` with
ranks ``r_i``.  In exact mode the decisions are bases (every block holds
exactly ``r_i`` chosen elements); in at-most mode they are independent sets.
A uniform matroid is the single-block case.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from math import comb, prod

import numpy as np

__all__ = [
    "Matroid",
    "BaseDecomposition",
    "is_independent",
    "is_basis",
    "polytope_membership",
    "lmo",
    "decompose",
    "pad_with_slack",
    "enumerate_bases",
    "count_bases",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Matroid:
    n: int
    blocks: tuple[tuple[int, ...], ...]
    ranks: tuple[int, ...]
    exact: bool = True
    block_of: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        blocks = tuple(tuple(int(j) for j in b) for b in self.blocks)
        ranks = tuple(int(r) for r in self.ranks)
        if len(blocks) != len(ranks):
            raise ValueError("one rank per block is required")
        flat = sorted(j for b in blocks for j in b)
        if flat != list(range(self.n)):
            raise ValueError(f"blocks must partition range({self.n})")
        for b, r in zip(blocks, ranks):
            if not b:
                raise ValueError("blocks must be nonempty")
            if not 1 <= r <= len(b):
                raise ValueError(f"rank {r} out of range for a block of size {len(b)}")
        block_of = np.empty(self.n, dtype=np.int64)
        for i, b in enumerate(blocks):
            block_of[list(b)] = i
        block_of.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "exact", bool(self.exact))
        object.__setattr__(self, "block_of", block_of)

    @classmethod
    def uniform(cls, n: int, r: int, exact: bool = True) -> "Matroid":
        return cls(n, (tuple(range(n)),), (r,), exact)

    @classmethod
    def partition(cls, blocks: Sequence[Sequence[int]], ranks: Sequence[int], exact: bool = True) -> "Matroid":
        n = sum(len(b) for b in blocks)
        return cls(n, tuple(tuple(b) for b in blocks), tuple(ranks), exact)

    @classmethod
    def from_dict(cls, data: dict) -> "Matroid":
        kind = data.get("type", "uniform")
        exact = data.get("mode", "exact") == "exact"
        if kind == "uniform":
            return cls.uniform(int(data["n"]), int(data["r"] if "r" in data else data["ranks"]), exact)
        if kind == "partition":
            return cls.partition(data["blocks"], data["ranks"], exact)
        raise ValueError(f"unknown matroid type {kind!r}")

    def to_dict(self) -> dict:
        return {
            "type": "uniform" if len(self.blocks) == 1 else "partition",
            "n": self.n,
            "blocks": [list(b) for b in self.blocks],
            "ranks": list(self.ranks),
            "mode": "exact" if self.exact else "at_most",
        }

    @property
    def rank(self) -> int:
        return sum(self.ranks)

    def block_sums(self, y: np.ndarray) -> np.ndarray:
        return np.bincount(self.block_of, weights=np.asarray(y, dtype=float), minlength=len(self.blocks))

    def with_mode(self, exact: bool) -> "Matroid":
        return Matroid(self.n, self.blocks, self.ranks, exact)


@dataclass(frozen=True)
class BaseDecomposition:
    """Convex combination ``sum_k coefficients[k] * bases[k]``."""

    bases: np.ndarray  # (k, n) array of 0/1 entries
    coefficients: np.ndarray  # (k,), positive, summing to one

    def point(self) -> np.ndarray:
        return self.coefficients @ self.bases

    def __len__(self) -> int:
        return len(self.coefficients)


def _as_vector(M: Matroid, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (M.n,):
        raise ValueError(f"expected a vector of length {M.n}, got shape {arr.shape}")
    return arr


def is_independent(M: Matroid, x) -> bool:
    """Whether the 0/1 vector ``x`` respects every block rank."""
    x = _as_vector(M, x)
    if not np.all((x == 0) | (x == 1)):
        return False
    return bool(np.all(M.block_sums(x) <= np.asarray(M.ranks)))


def is_basis(M: Matroid, x) -> bool:
    """Whether ``x`` holds exactly ``r_i`` elements of every block."""
    x = _as_vector(M, x)
    if not np.all((x == 0) | (x == 1)):
        return False
    return bool(np.all(M.block_sums(x) == np.asarray(M.ranks)))


def polytope_membership(M: Matroid, y, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the base polytope (exact mode) or independence polytope."""
    y = _as_vector(M, y)
    if y.min() < -tol or y.max() > 1 + tol:
        return False
    sums = M.block_sums(y)
    ranks = np.asarray(M.ranks, dtype=float)
    if M.exact:
        return bool(np.all(np.abs(sums - ranks) <= tol))
    return bool(np.all(sums <= ranks + tol))


def _top(values: np.ndarray, idx: np.ndarray, r: int) -> np.ndarray:
    order = np.lexsort((idx, -values))
    return idx[order[:r]]


def lmo(M: Matroid, w) -> np.ndarray:
    """Maximize ``w . x`` over bases (exact) or independent sets (at-most).

    Each block keeps its ``r_i`` heaviest elements, ties going to the lowest
    index.  In at-most mode picks with negative weight are dropped.
    """
    w = _as_vector(M, w)
    x = np.zeros(M.n)
    for block, r in zip(M.blocks, M.ranks):
        idx = np.asarray(block)
        chosen = _top(w[idx], idx, r)
        if not M.exact:
            chosen = chosen[w[chosen] >= 0]
        x[chosen] = 1.0
    return x


def decompose(M: Matroid, y, tol: float = DEFAULT_TOL) -> BaseDecomposition:
    """Write a base-polytope point as a convex combination of bases.

    Greedy extraction: keep a residual ``r`` and remaining weight ``W`` with
    ``r <= W`` and block sums ``r_i W``.  Each round takes the top-``r_i``
    residual coordinates of every block (coordinates already at ``W`` go
    first), removes as much of that basis as the invariant allows, and stops
    once ``W`` is exhausted.  Each round saturates a coordinate at 0 or at
    ``W``, so at most ``2n + 1`` bases are produced.
    """
    y = _as_vector(M, y)
    if not M.exact:
        raise ValueError("decompose works on base polytopes; pad at-most matroids first")
    if not polytope_membership(M, y, tol=max(tol, 1e-8)):
        raise ValueError("point is not in the base polytope")
    snap = 1e-12
    resid = np.clip(y, 0.0, 1.0)
    weight = 1.0
    blocks = [np.asarray(b) for b in M.blocks]
    bases: list[np.ndarray] = []
    coeffs: list[float] = []
    for _ in range(2 * M.n + 2):
        if weight <= tol:
            break
        resid[resid <= snap] = 0.0
        resid[resid >= weight - snap] = weight
        chosen = np.zeros(M.n, dtype=bool)
        for idx, r in zip(blocks, M.ranks):
            vals = resid[idx]
            forced = vals >= weight
            order = np.lexsort((idx, -vals, ~forced))
            chosen[idx[order[:r]]] = True
        gamma = weight
        if chosen.any():
            gamma = min(gamma, resid[chosen].min())
        if (~chosen).any():
            gamma = min(gamma, (weight - resid[~chosen]).min())
        if gamma <= snap:
            raise RuntimeError("decomposition stalled; the residual left the polytope")
        bases.append(chosen.astype(float))
        coeffs.append(gamma)
        resid[chosen] -= gamma
        weight -= gamma
        np.clip(resid, 0.0, weight, out=resid)
    else:
        if weight > tol:
            raise RuntimeError("decomposition did not terminate within 2n + 1 rounds")
    coef = np.asarray(coeffs)
    coef /= coef.sum()
    return BaseDecomposition(np.vstack(bases), coef)


def pad_with_slack(M: Matroid, y) -> tuple[Matroid, np.ndarray]:
    """Turn an at-most matroid point into a base-polytope point.

    Block ``i`` receives ``r_i`` slack elements (indices ``n, n+1, ...``)
    which share the missing mass ``r_i - sum_{V_i} y`` evenly.  Dropping the
    slack coordinates of a rounded basis gives an independent set.
    """
    y = _as_vector(M, y)
    blocks = []
    slack_mass = []
    nxt = M.n
    for block, r, s in zip(M.blocks, M.ranks, M.block_sums(y)):
        slack = tuple(range(nxt, nxt + r))
        nxt += r
        blocks.append(tuple(block) + slack)
        missing = max(float(r) - float(s), 0.0)
        slack_mass.extend([missing / r] * r)
    padded = Matroid(nxt, tuple(blocks), M.ranks, exact=True)
    return padded, np.concatenate([y, np.asarray(slack_mass)])


def count_bases(M: Matroid) -> int:
    if M.exact:
        return prod(comb(len(b), r) for b, r in zip(M.blocks, M.ranks))
    return prod(sum(comb(len(b), k) for k in range(r + 1)) for b, r in zip(M.blocks, M.ranks))


def enumerate_bases(M: Matroid) -> Iterator[np.ndarray]:
    """All bases (exact mode) or all independent sets (at-most mode)."""
    per_block = []
    for block, r in zip(M.blocks, M.ranks):
        sizes = [r] if M.exact else range(r + 1)
        per_block.append([c for k in sizes for c in itertools.combinations(block, k)])
    for combo in itertools.product(*per_block):
        x = np.zeros(M.n)
        for chosen in combo:
            x[list(chosen)] = 1.0
        yield x
