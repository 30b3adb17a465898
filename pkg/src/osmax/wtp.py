"""Weighted threshold potential (WTP) set functions.

A WTP function over the ground set ``{0, ..., n-1}`` is

    f(x) = sum_l c_l * min{b_l, sum_{j in S_l} w_{l,j} x_j}

with ``c_l >= 0``, ``w >= 0`` and thresholds ``b_l`` that are either positive
reals or unbounded.  The same formula evaluated at a fractional point
``y in [0, 1]^n`` is a concave relaxation that agrees with ``f`` on binary
inputs, so one object serves both purposes.

Functions are immutable.  Internally every function is compiled into a dense
``(L, n)`` weight matrix plus coefficient and threshold vectors so that
evaluation and supergradients are single matrix products.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "ThresholdPotential",
    "WtpFunction",
    "ProductFormFunction",
    "eval_integral",
    "eval_relaxation",
    "supergradient",
    "degree",
    "approx_ratio",
    "lipschitz_bounds",
    "from_coverage",
    "from_quadratic",
    "from_facility_location",
    "eval_product_form",
    "relax_product_form",
    "combine",
]

# Fractional points may leave [0, 1] by projection round-off up to this much.
CLIP_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdPotential:
    """One budget-additive term ``min{b, sum_j w_j x_j}``.

    ``threshold=None`` is the unbounded variant: the minimum never binds.
    Finite thresholds must be positive and weights above the threshold are
    clamped to it, which leaves the set function unchanged.
    """

    threshold: float | None
    support: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        support = tuple(int(j) for j in self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support:
            raise ValueError("threshold potential needs a nonempty support")
        if len(set(support)) != len(support):
            raise ValueError(f"duplicate elements in support {support}")
        if len(weights) != len(support):
            raise ValueError("support and weights differ in length")
        if any(j < 0 for j in support):
            raise ValueError(f"negative element in support {support}")
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ValueError(f"weights must be finite and nonnegative, got {weights}")
        b = self.threshold
        if b is not None:
            b = float(b)
            if math.isinf(b):
                b = None
            elif not b > 0:
                raise ValueError(f"threshold must be positive, got {b}")
            else:
                weights = tuple(min(w, b) for w in weights)
        object.__setattr__(self, "threshold", b)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @property
    def unbounded(self) -> bool:
        return self.threshold is None

    def __call__(self, y: Sequence[float]) -> float:
        total = sum(w * float(y[j]) for j, w in zip(self.support, self.weights))
        return total if self.threshold is None else min(self.threshold, total)


@dataclass(frozen=True)
class WtpFunction:
    """A nonnegative combination of threshold potentials over ``n`` elements."""

    n: int
    terms: tuple[tuple[float, ThresholdPotential], ...]
    _compiled: tuple[np.ndarray, np.ndarray, np.ndarray] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("ground set must be nonempty")
        terms = tuple((float(c), psi) for c, psi in self.terms)
        for c, psi in terms:
            if not math.isfinite(c) or c < 0:
                raise ValueError(f"coefficients must be finite and nonnegative, got {c}")
            if max(psi.support) >= self.n:
                raise ValueError(f"support {psi.support} exceeds ground set of size {self.n}")
        object.__setattr__(self, "terms", terms)
        live = [(c, psi) for c, psi in terms if c > 0]
        A = np.zeros((len(live), self.n))
        coef = np.empty(len(live))
        thr = np.empty(len(live))
        for row, (c, psi) in enumerate(live):
            A[row, list(psi.support)] = psi.weights
            coef[row] = c
            thr[row] = np.inf if psi.unbounded else psi.threshold
        for arr in (A, coef, thr):
            arr.setflags(write=False)
        object.__setattr__(self, "_compiled", (A, coef, thr))

    @property
    def weight_matrix(self) -> np.ndarray:
        return self._compiled[0]

    @property
    def coefficients(self) -> np.ndarray:
        return self._compiled[1]

    @property
    def thresholds(self) -> np.ndarray:
        """Thresholds of the live terms, with ``inf`` marking unbounded ones."""
        return self._compiled[2]

    def __call__(self, y: Sequence[float]) -> float:
        return eval_relaxation(self, y)

    def evaluate_many(self, Y: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``Y`` (binary or fractional, no checks)."""
        A, coef, thr = self._compiled
        if A.shape[0] == 0:
            return np.zeros(np.asarray(Y).shape[0])
        sums = np.asarray(Y, dtype=float) @ A.T
        return np.minimum(sums, thr) @ coef

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "terms": [
                {
                    "c": c,
                    "b": "inf" if psi.unbounded else psi.threshold,
                    "elements": list(psi.support),
                    "weights": list(psi.weights),
                }
                for c, psi in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WtpFunction":
        terms = []
        for item in data["terms"]:
            b = item.get("b", "inf")
            threshold = None if b in ("inf", None) else float(b)
            elements = item["elements"]
            weights = item.get("weights", [1.0] * len(elements))
            terms.append((float(item.get("c", 1.0)), ThresholdPotential(threshold, elements, weights)))
        return cls(int(data["n"]), tuple(terms))


def _check_point(f: WtpFunction, y: Sequence[float], binary: bool) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.shape != (f.n,):
        raise ValueError(f"expected a vector of length {f.n}, got shape {arr.shape}")
    if binary:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("integral evaluation needs a 0/1 vector")
        return arr
    if arr.min(initial=0.0) < -CLIP_TOL or arr.max(initial=0.0) > 1 + CLIP_TOL:
        raise ValueError("fractional point lies outside [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def eval_integral(f: WtpFunction, x: Sequence[float]) -> float:
    """Value of ``f`` at a binary vector."""
    x = _check_point(f, x, binary=True)
    return float(f.evaluate_many(x[None, :])[0])


def eval_relaxation(f: WtpFunction, y: Sequence[float]) -> float:
    """Value of the concave relaxation at ``y in [0, 1]^n``."""
    y = _check_point(f, y, binary=False)
    return float(f.evaluate_many(y[None, :])[0])


def supergradient(f: WtpFunction, y: Sequence[float]) -> np.ndarray:
    """A supergradient of the relaxation at ``y``.

    Term ``l`` contributes ``c_l * w_l`` whenever its weighted sum is at most
    its threshold (ties count as active); unbounded terms always contribute.
    """
    y = _check_point(f, y, binary=False)
    A, coef, thr = f._compiled
    if A.shape[0] == 0:
        return np.zeros(f.n)
    active = (A @ y) <= thr
    return (coef * active) @ A


def degree(f: WtpFunction) -> int:
    """Largest support size among the terms."""
    if not f.terms:
        return 1
    return max(len(psi.support) for _, psi in f.terms)


def approx_ratio(delta: int) -> float:
    """Rounding ratio ``1 - (1 - 1/delta)^delta`` for functions of degree ``delta``."""
    if int(delta) != delta or delta < 1:
        raise ValueError(f"degree must be a positive integer, got {delta}")
    delta = int(delta)
    return 1.0 - (1.0 - 1.0 / delta) ** delta


def lipschitz_bounds(f: WtpFunction) -> np.ndarray:
    """Per-coordinate bound ``sum_l c_l w_{l,j}`` on any supergradient entry."""
    return f.coefficients @ f.weight_matrix if f.weight_matrix.size else np.zeros(f.n)


def from_coverage(
    cover_sets: Sequence[Iterable[int]], weights: Sequence[float] | None = None, n: int | None = None
) -> WtpFunction:
    """Weighted coverage ``sum_l c_l * [x covers S_l]`` as a WTP function."""
    sets = [tuple(sorted(set(int(j) for j in s))) for s in cover_sets]
    if any(not s for s in sets):
        raise ValueError("cover sets must be nonempty")
    if weights is None:
        weights = [1.0] * len(sets)
    if len(weights) != len(sets):
        raise ValueError("one weight per cover set is required")
    if n is None:
        n = 1 + max((max(s) for s in sets), default=0)
    terms = tuple((float(c), ThresholdPotential(1.0, s, (1.0,) * len(s))) for c, s in zip(weights, sets))
    return WtpFunction(n, terms)


def from_quadratic(h: Sequence[float], H: np.ndarray, tol: float = 1e-12) -> WtpFunction:
    """Monotone submodular quadratic ``h.x + x.H.x / 2`` as a WTP function.

    ``H`` must be symmetric with zero diagonal and nonpositive entries, and
    ``h + H 1 >= 0`` must hold so that the function is monotone on the cube.
    """
    h = np.asarray(h, dtype=float)
    H = np.asarray(H, dtype=float)
    n = h.shape[0]
    if H.shape != (n, n):
        raise ValueError(f"H must be {n}x{n}, got {H.shape}")
    if not np.allclose(H, H.T, atol=tol, rtol=0):
        raise ValueError("H must be symmetric")
    if np.any(np.abs(np.diag(H)) > tol):
        raise ValueError("H must have a zero diagonal")
    if np.any(H > tol):
        raise ValueError("H must have nonpositive entries")
    linear = h + H.sum(axis=1)
    if np.any(linear < -tol):
        worst = int(np.argmin(linear))
        raise ValueError(
            f"quadratic is not monotone: h + H.1 is {linear[worst]:.6g} at element {worst}"
        )
    linear = np.maximum(linear, 0.0)
    terms: list[tuple[float, ThresholdPotential]] = []
    if np.any(linear > 0):
        terms.append((1.0, ThresholdPotential(None, range(n), linear)))
    rows, cols = np.nonzero(np.triu(-H, k=1) > 0)
    for i, j in zip(rows.tolist(), cols.tolist()):
        terms.append((float(-H[i, j]), ThresholdPotential(1.0, (i, j), (1.0, 1.0))))
    return WtpFunction(n, tuple(terms))


def from_facility_location(utility: np.ndarray) -> WtpFunction:
    """Facility location ``(1/|V'|) sum_v' max_{i in S} w_{i,v'}``.

    ``utility`` has one row per facility and one column per customer.  Each
    column is written as a telescoping sum of coverage terms over the prefixes
    of the facilities sorted by decreasing utility.
    """
    W = np.asarray(utility, dtype=float)
    if W.ndim != 2:
        raise ValueError("utility must be a 2-d array (facilities x customers)")
    if np.any(W < 0):
        raise ValueError("utilities must be nonnegative")
    n, customers = W.shape
    terms: list[tuple[float, ThresholdPotential]] = []
    for col in range(customers):
        order = np.argsort(-W[:, col], kind="stable")
        values = np.append(W[order, col], 0.0)
        for i in range(n):
            gap = (values[i] - values[i + 1]) / customers
            if gap > 0:
                prefix = order[: i + 1].tolist()
                terms.append((gap, ThresholdPotential(1.0, prefix, (1.0,) * len(prefix))))
    return WtpFunction(n, tuple(terms))


def combine(functions: Sequence[WtpFunction], weights: Sequence[float] | None = None) -> WtpFunction:
    """Nonnegative combination ``sum_k a_k f_k`` of functions on one ground set.

    Repeated objects are merged first, so averaging a long sequence drawn
    from a small pool stays compact.
    """
    if not functions:
        raise ValueError("need at least one function")
    if weights is None:
        weights = [1.0] * len(functions)
    n = functions[0].n
    merged: dict[int, list] = {}
    for f, a in zip(functions, weights):
        if f.n != n:
            raise ValueError("functions live on different ground sets")
        if a < 0:
            raise ValueError("combination weights must be nonnegative")
        slot = merged.setdefault(id(f), [f, 0.0])
        slot[1] += float(a)
    terms = tuple((a * c, psi) for f, a in merged.values() for c, psi in f.terms if a * c > 0)
    return WtpFunction(n, terms)


@dataclass(frozen=True)
class ProductFormFunction:
    """``sum_l c_l (b_l - b_l prod_{j in S_l} (1 - (w_{l,j}/b_l) x_j))`` with finite ``b_l``.

    On binary inputs this lies below the WTP function with the same
    parameters, which therefore serves as its concave relaxation.
    """

    n: int
    terms: tuple[tuple[float, ThresholdPotential], ...]

    def __post_init__(self) -> None:
        relaxed = WtpFunction(self.n, self.terms)
        if any(psi.unbounded for _, psi in relaxed.terms):
            raise ValueError("product form needs finite thresholds")
        object.__setattr__(self, "terms", relaxed.terms)


def eval_product_form(f: ProductFormFunction, x: Sequence[float]) -> float:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (f.n,):
        raise ValueError(f"expected a vector of length {f.n}, got shape {arr.shape}")
    total = 0.0
    for c, psi in f.terms:
        b = psi.threshold
        prod = 1.0
        for j, w in zip(psi.support, psi.weights):
            prod *= 1.0 - (w / b) * arr[j]
        total += c * (b - b * prod)
    return total


def relax_product_form(f: ProductFormFunction) -> WtpFunction:
    return WtpFunction(f.n, f.terms)
