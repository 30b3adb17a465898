"""Rounding-augmented online learning over WTP rewards.

Each timeslot the online policy proposes a fractional point ``y_t`` in the
matroid polytope, a fresh swap rounding turns it into a decision ``x_t``, the
reward ``f_t`` is revealed, and the policy is fed the supergradient of the
relaxation of ``f_t`` at ``y_t``.  The run is recorded in a :class:`Trace`.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .matroid import Matroid, enumerate_bases
from .oco import OcoPolicyState
from .rounding import round_point
from .wtp import WtpFunction, supergradient

__all__ = [
    "Trace",
    "TRACE_COLUMNS",
    "run_raoco",
    "alpha_regret",
    "dynamic_comparator_value",
    "wtp_prediction",
]

TRACE_COLUMNS = (
    "t",
    "policy",
    "eta",
    "gamma",
    "seed",
    "reward_integral",
    "reward_fractional",
    "cum_avg_integral",
    "cum_avg_fractional",
)

Prediction = Callable[[np.ndarray], np.ndarray]


@dataclass
class Trace:
    policy: str
    eta: float
    gamma: float
    seed: int
    fractional: list[np.ndarray] = field(default_factory=list)
    integral: list[np.ndarray] = field(default_factory=list)
    reward_integral: list[float] = field(default_factory=list)
    reward_fractional: list[float] = field(default_factory=list)

    def record(self, y: np.ndarray, x: np.ndarray, fx: float, fy: float) -> None:
        self.fractional.append(np.array(y, dtype=float))
        self.integral.append(np.array(x, dtype=float))
        self.reward_integral.append(float(fx))
        self.reward_fractional.append(float(fy))

    def __len__(self) -> int:
        return len(self.reward_integral)

    @property
    def cum_avg_integral(self) -> np.ndarray:
        r = np.asarray(self.reward_integral)
        return np.cumsum(r) / np.arange(1, r.size + 1)

    @property
    def cum_avg_fractional(self) -> np.ndarray:
        r = np.asarray(self.reward_fractional)
        return np.cumsum(r) / np.arange(1, r.size + 1)

    def rows(self) -> list[list[str]]:
        out = []
        ci, cf = self.cum_avg_integral, self.cum_avg_fractional
        for t in range(len(self)):
            out.append(
                [
                    str(t + 1),
                    self.policy,
                    repr(float(self.eta)),
                    repr(float(self.gamma)),
                    str(self.seed),
                    repr(self.reward_integral[t]),
                    repr(self.reward_fractional[t]),
                    repr(float(ci[t])),
                    repr(float(cf[t])),
                ]
            )
        return out

    def to_csv(self, path: str | Path | None = None) -> str:
        """Serialize to CSV (floats in shortest round-trip form); optionally write it."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def wtp_prediction(
    f: WtpFunction, noise: float = 0.0, rng: np.random.Generator | None = None
) -> Prediction:
    """Prediction that returns the supergradient of ``f``, optionally with Gaussian noise."""

    def predict(y: np.ndarray) -> np.ndarray:
        g = supergradient(f, y)
        if noise > 0:
            g = g + noise * rng.standard_normal(g.shape)
        return g

    if noise > 0 and rng is None:
        raise ValueError("noisy predictions need an rng")
    return predict


def run_raoco(
    policy: OcoPolicyState,
    M: Matroid,
    rewards: Sequence[WtpFunction],
    rng: np.random.Generator,
    predictions: Sequence[Prediction | None] | None = None,
    *,
    name: str | None = None,
    seed: int = 0,
) -> Trace:
    """Run the rounding-augmented loop over ``rewards``.

    ``predictions[t]`` (0-based) predicts ``rewards[t]``; it is consulted at
    the end of slot ``t - 1``, before ``x_t`` is committed.
    """
    if not rewards:
        raise ValueError("empty reward sequence")
    if any(f.n != M.n for f in rewards):
        raise ValueError("reward and matroid ground sets differ")
    if predictions is not None and len(predictions) != len(rewards):
        raise ValueError("need one prediction per timeslot")
    if policy.matroid != M:
        raise ValueError("policy state was built for a different matroid")
    trace = Trace(
        name or policy.kind,
        policy.eta,
        policy.mirror.gamma if policy.mirror.is_entropy else 0.0,
        seed,
    )
    T = len(rewards)
    for t, f in enumerate(rewards):
        y = policy.y
        x = round_point(M, y, rng)
        trace.record(y, x, f.evaluate_many(x[None, :])[0], f(y))
        g = supergradient(f, y)
        predict = predictions[t + 1] if predictions is not None and t + 1 < T else None
        policy.update(g, predict)
    return trace


def alpha_regret(trace: Trace, alpha: float, offline_value: float) -> float:
    """``alpha * offline_value - sum_t f_t(x_t)``."""
    return alpha * offline_value - float(np.sum(trace.reward_integral))


def dynamic_comparator_value(
    rewards: Sequence[WtpFunction],
    M: Matroid,
    path_budget: float,
    *,
    max_n: int = 10,
    max_T: int = 30,
) -> float:
    """Best total reward of a basis sequence whose l1 path length is at most ``path_budget``.

    Dynamic program over (basis, budget spent); moving between bases ``B``
    and ``B'`` costs ``|B xor B'|``, twice the number of swaps.
    """
    T = len(rewards)
    if M.n > max_n or T > max_T:
        raise ValueError(f"instance too large for the exact comparator (n <= {max_n}, T <= {max_T})")
    if T == 0:
        return 0.0
    bases = np.array(list(enumerate_bases(M)))
    dist = np.abs(bases[:, None, :] - bases[None, :, :]).sum(axis=2).astype(int)
    budget = int(min(np.floor(path_budget + 1e-9), dist.max() * (T - 1)))
    values = np.array([f.evaluate_many(bases) for f in rewards])  # (T, B)
    steps = sorted(set(dist.ravel().tolist()))
    neg = -np.inf
    # best[b, u]: best total ending at basis b having spent exactly u.
    best = np.full((len(bases), budget + 1), neg)
    best[:, 0] = values[0]
    for t in range(1, T):
        nxt = np.full_like(best, neg)
        for d in steps:
            if d > budget:
                continue
            mask = dist == d
            shifted = np.full_like(best, neg)
            shifted[:, d:] = best[:, : budget + 1 - d]
            cand = np.where(mask[:, :, None], shifted[:, None, :], neg).max(axis=0)
            np.maximum(nxt, cand, out=nxt)
        best = nxt + values[t][:, None]
    return float(best.max())

