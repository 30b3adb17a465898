"""Bandit online submodular maximization over partition matroids.

Block ``i`` of a partition matroid with rank ``r_i`` is expanded into ``r_i``
slots, each choosing at most one item of ``V_i``.  A slot-space point ``y``
assigns every slot a sub-probability vector over its items; the extension
rounding samples each slot independently and takes the union of picks.  The
expected reward of that rounding, ``f_hat``, is multilinear in ``y``.

The learner only sees the reward of the decision it plays.  Time is split
into windows of ``W`` slots.  Within a window the policy plays a shrunken
point ``y_delta``, except in one uniformly chosen exploration slot where a
randomized perturbation yields a one-point estimate of the gradient of the
auxiliary function ``F_hat(y) = int_0^1 exp(z - 1) / z * f_hat(z y) dz``.
That estimate is handed to an online linear optimizer at the end of the
window.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .matroid import Matroid
from .oco import MirrorMap, OcoPolicyState
from .raoco import Trace

__all__ = [
    "SlotSpace",
    "BanditConfig",
    "to_slot_space",
    "map_T",
    "shrink",
    "extension_round",
    "sample_z",
    "explore",
    "estimator_bound_check",
    "multilinear_value",
    "multilinear_gradient",
    "auxiliary_gradient",
    "make_bandit_policy",
    "run_liraoco",
    "run_random",
    "ALPHA_DEFAULT",
]

ALPHA_DEFAULT = 1.0 - math.exp(-1.0)
FEASIBILITY_TOL = 1e-12

ValueOracle = Callable[[int, np.ndarray], float]


@dataclass(frozen=True)
class SlotSpace:
    """Slot coordinates ``(block i, slot j, item k)`` of a partition matroid."""

    matroid: Matroid
    slot_block: tuple[int, ...]  # block index of every slot
    slot_items: tuple[tuple[int, ...], ...]  # items (ground elements) of every slot
    coord_slot: np.ndarray = field(repr=False, compare=False)
    coord_item: np.ndarray = field(repr=False, compare=False)
    slot_matroid: Matroid = field(repr=False, compare=False)

    @property
    def n_prime(self) -> int:
        return int(self.coord_item.size)

    @property
    def n_slots(self) -> int:
        return len(self.slot_items)

    @property
    def slot_size(self) -> np.ndarray:
        """``|V_i|`` for the slot owning each coordinate."""
        sizes = np.array([len(items) for items in self.slot_items])
        return sizes[self.coord_slot]

    @property
    def max_block(self) -> int:
        return max(len(items) for items in self.slot_items)


def to_slot_space(M: Matroid) -> SlotSpace:
    slot_block: list[int] = []
    slot_items: list[tuple[int, ...]] = []
    coord_slot: list[int] = []
    coord_item: list[int] = []
    for i, (block, r) in enumerate(zip(M.blocks, M.ranks)):
        for _ in range(r):
            s = len(slot_items)
            slot_block.append(i)
            slot_items.append(tuple(block))
            coord_slot.extend([s] * len(block))
            coord_item.extend(block)
    blocks = []
    pos = 0
    for items in slot_items:
        blocks.append(tuple(range(pos, pos + len(items))))
        pos += len(items)
    slot_matroid = Matroid(pos, tuple(blocks), (1,) * len(blocks), exact=False)
    return SlotSpace(
        M,
        tuple(slot_block),
        tuple(slot_items),
        np.asarray(coord_slot),
        np.asarray(coord_item),
        slot_matroid,
    )


def _slot_sums(space: SlotSpace, y: np.ndarray) -> np.ndarray:
    return np.bincount(space.coord_slot, weights=y, minlength=space.n_slots)


def map_T(space: SlotSpace, x_prime) -> np.ndarray:
    """Per-item union of the slot picks."""
    xp = np.asarray(x_prime, dtype=float)
    if xp.shape != (space.n_prime,):
        raise ValueError(f"expected a slot vector of length {space.n_prime}")
    if not np.all((xp == 0) | (xp == 1)):
        raise ValueError("slot indicator must be 0/1")
    if np.any(_slot_sums(space, xp) > 1):
        raise ValueError("a slot selects more than one item")
    x = np.zeros(space.matroid.n)
    x[space.coord_item[xp > 0]] = 1.0
    return x


def _check_delta(space: SlotSpace, delta: float) -> None:
    if not 0 < delta <= 1.0 / (2 * space.max_block):
        raise ValueError(f"delta must lie in (0, {1.0 / (2 * space.max_block):.6g}], got {delta}")


def shrink(space: SlotSpace, y, delta: float) -> np.ndarray:
    """Per slot ``(1 - 2 delta |V_i|) y + delta``: a ``delta``-ball around it stays feasible."""
    _check_delta(space, delta)
    y = np.asarray(y, dtype=float)
    return (1.0 - 2.0 * delta * space.slot_size) * y + delta


def extension_round(space: SlotSpace, y, rng: np.random.Generator) -> np.ndarray:
    """Each slot picks item ``k`` with probability ``y_k`` (or nothing); return the union."""
    y = np.asarray(y, dtype=float)
    if y.shape != (space.n_prime,):
        raise ValueError(f"expected a slot vector of length {space.n_prime}")
    if y.min(initial=0.0) < -FEASIBILITY_TOL or np.any(_slot_sums(space, y) > 1 + 1e-9):
        raise ValueError("slot masses must be nonnegative and at most one")
    u = rng.random(space.n_slots)
    x = np.zeros(space.matroid.n)
    start = 0
    for s, items in enumerate(space.slot_items):
        probs = y[start : start + len(items)]
        k = int(np.searchsorted(np.cumsum(probs), u[s], side="right"))
        if k < len(items):
            x[items[k]] = 1.0
        start += len(items)
    return x


def sample_z(rng: np.random.Generator) -> float:
    """Draw from the density ``exp(z - 1) / (1 - 1/e)`` on ``[0, 1]``."""
    return _z_from_uniform(rng.random())


def _z_from_uniform(u: float) -> float:
    return 1.0 + math.log(math.exp(-1.0) + u * (1.0 - math.exp(-1.0)))


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _assert_feasible(space: SlotSpace, point: np.ndarray) -> None:
    if point.min() < -FEASIBILITY_TOL or np.any(_slot_sums(space, point) > 1 + FEASIBILITY_TOL):
        raise AssertionError("exploration point left the slot polytope")


def explore(
    space: SlotSpace,
    y_delta: np.ndarray,
    delta: float,
    value: Callable[[np.ndarray], float],
    rng: np.random.Generator,
    alpha: float = ALPHA_DEFAULT,
) -> tuple[np.ndarray, np.ndarray, float]:
    """One exploration draw.  Returns ``(g_tilde, x_played, observed_reward)``."""
    n_p = space.n_prime
    z = sample_z(rng)
    v = _unit_vector(rng, n_p)
    _assert_feasible(space, y_delta + delta * v)
    if z >= 0.5:
        if rng.random() < 0.5:
            x = extension_round(space, z * y_delta, rng)
            f = float(value(x))
            est = -2.0 * alpha * n_p / z * f
        else:
            i = int(rng.integers(n_p))
            nudged = y_delta.copy()
            nudged[i] += delta * v[i]
            _assert_feasible(space, nudged)
            x = extension_round(space, z * nudged, rng)
            f = float(value(x))
            est = 2.0 * alpha * n_p / z * f
    else:
        i = int(rng.integers(n_p))
        plus = rng.random() < 0.5
        point = z * y_delta
        if plus:
            point = point.copy()
            point[i] += 0.5
        _assert_feasible(space, point)
        x = extension_round(space, point, rng)
        f = float(value(x))
        est = 4.0 * alpha * n_p * delta * v[i] * f * (1.0 if plus else -1.0)
    g = (n_p / delta) * est * v
    return g, x, f


def estimator_bound_check(n_prime: int, L: float, delta: float, alpha: float = ALPHA_DEFAULT) -> float:
    """Ceiling ``4 alpha n'^2 L / delta`` on the norm of any gradient estimate."""
    return 4.0 * alpha * n_prime**2 * L / delta


@dataclass(frozen=True)
class BanditConfig:
    delta: float
    window: int
    alpha: float = ALPHA_DEFAULT
    reward_bound: float | None = None  # L; enables the runtime norm ceiling

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window length must be at least one")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @classmethod
    def suggested(cls, T: int, scale: float = 0.25, **kwargs) -> "BanditConfig":
        """``W = ceil(T^(1/5))`` and ``delta = scale * T^(-1/5)``."""
        return cls(delta=scale * T ** (-0.2), window=math.ceil(T**0.2), **kwargs)


def make_bandit_policy(space: SlotSpace, kind: str, mirror: MirrorMap, eta: float) -> OcoPolicyState:
    """Online policy over the slot polytope (every slot is an at-most-one block)."""
    return OcoPolicyState.create(kind, mirror, space.slot_matroid, eta)


def run_liraoco(
    oracle: ValueOracle,
    M: Matroid,
    config: BanditConfig,
    policy: OcoPolicyState,
    T: int,
    rng: np.random.Generator,
    *,
    seed: int = 0,
    space: SlotSpace | None = None,
) -> Trace:
    """Windowed bandit loop; ``oracle(t, x)`` returns the reward of decision ``x`` at slot ``t``.

    The policy state lives on the unshrunken slot polytope; it plays
    ``shrink(y)`` and receives the estimate pulled back through the shrink map.
    The trace's fractional column is NaN because the bandit learner never
    observes the relaxation.
    """
    space = space or to_slot_space(M)
    _check_delta(space, config.delta)
    if T % config.window:
        raise ValueError(f"window {config.window} does not divide T = {T}")
    if policy.matroid != space.slot_matroid:
        raise ValueError("policy must be built on the slot polytope")
    ceiling = None
    if config.reward_bound is not None:
        ceiling = estimator_bound_check(space.n_prime, config.reward_bound, config.delta, config.alpha)
    pullback = 1.0 - 2.0 * config.delta * space.slot_size
    trace = Trace("liraoco", policy.eta, policy.mirror.gamma if policy.mirror.is_entropy else 0.0, seed)
    for start in range(0, T, config.window):
        y_delta = shrink(space, policy.y, config.delta)
        probe = start + int(rng.integers(config.window))
        g = None
        for t in range(start, start + config.window):
            if t == probe:
                g, x, f = explore(space, y_delta, config.delta, lambda x_: oracle(t, x_), rng, config.alpha)
                if ceiling is not None and np.linalg.norm(g) > ceiling * (1 + 1e-9):
                    raise AssertionError("gradient estimate exceeds its norm ceiling")
            else:
                x = extension_round(space, y_delta, rng)
                f = float(oracle(t, x))
            trace.record(y_delta, x, f, math.nan)
        policy.update(pullback * g)
    return trace


def run_random(oracle: ValueOracle, M: Matroid, T: int, rng: np.random.Generator, *, seed: int = 0) -> Trace:
    """Baseline: a uniformly random basis every slot."""
    trace = Trace("random", 0.0, 0.0, seed)
    for t in range(T):
        x = np.zeros(M.n)
        for block, r in zip(M.blocks, M.ranks):
            x[rng.choice(np.asarray(block), size=r, replace=False)] = 1.0
        trace.record(x, x, float(oracle(t, x)), math.nan)
    return trace


# Exact multilinear quantities, by enumerating every joint slot outcome.


def _outcomes(space: SlotSpace, y: np.ndarray):
    """Yield ``(picks, probability)`` for every joint slot outcome (pick ``-1`` = none)."""
    per_slot = []
    start = 0
    for items in space.slot_items:
        probs = y[start : start + len(items)]
        choices = [(-1, max(0.0, 1.0 - probs.sum()))] + [(start + k, probs[k]) for k in range(len(items))]
        per_slot.append(choices)
        start += len(items)
    for combo in itertools.product(*per_slot):
        yield tuple(c for c, _ in combo), math.prod(p for _, p in combo)


def _decision(space: SlotSpace, picks: tuple[int, ...]) -> np.ndarray:
    x = np.zeros(space.matroid.n)
    for c in picks:
        if c >= 0:
            x[space.coord_item[c]] = 1.0
    return x


def multilinear_value(space: SlotSpace, f: Callable[[np.ndarray], float], y) -> float:
    """``E[f(extension_round(y))]`` computed exactly."""
    y = np.asarray(y, dtype=float)
    return float(sum(p * f(_decision(space, picks)) for picks, p in _outcomes(space, y)))


def multilinear_gradient(space: SlotSpace, f: Callable[[np.ndarray], float], y) -> np.ndarray:
    """Exact gradient of the multilinear extension.

    The extension is affine in each slot's vector, so the partial derivative
    along coordinate ``(s, k)`` is the expected reward with slot ``s`` forced
    to ``k`` minus the expected reward with slot ``s`` forced empty.
    """
    y = np.asarray(y, dtype=float)
    grad = np.zeros(space.n_prime)
    start = 0
    for s, items in enumerate(space.slot_items):
        others = y.copy()
        others[start : start + len(items)] = 0.0
        empty = multilinear_value(space, f, others)
        for k in range(len(items)):
            forced = others.copy()
            forced[start + k] = 1.0
            grad[start + k] = multilinear_value(space, f, forced) - empty
        start += len(items)
    return grad


def auxiliary_gradient(
    space: SlotSpace, f: Callable[[np.ndarray], float], y, nodes: int = 64
) -> np.ndarray:
    """``int_0^1 exp(z - 1) grad f_hat(z y) dz`` by Gauss-Legendre quadrature."""
    y = np.asarray(y, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    z = 0.5 * (x + 1.0)
    w = 0.5 * w
    total = np.zeros(space.n_prime)
    for zq, wq in zip(z, w):
        total += wq * math.exp(zq - 1.0) * multilinear_gradient(space, f, zq * y)
    return total
