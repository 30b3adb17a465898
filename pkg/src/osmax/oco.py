"""Online convex optimization over matroid polytopes.

Two mirror maps are supported:

* Euclidean, ``Phi(y) = ||y||^2 / 2``, under which mirror ascent is projected
  gradient ascent;
* shifted negative entropy, ``Phi(y) = sum_j (y_j + g) log(y_j + g)`` with a
  shift ``g in [0, sqrt(e^-2 + 1/4) - 1/2]``, whose update is a fixed-share
  style multiplicative step.

Bregman projections onto a block polytope reduce to one scalar root per
block: every coordinate of the projection is a clipped monotone function of a
dual variable ``tau``, which is found by bisection and then polished in closed
form.  Both exact (``sum = r_i``) and at-most (``sum <= r_i``) blocks are
handled.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .matroid import Matroid

__all__ = [
    "GAMMA_MAX",
    "MirrorMap",
    "EUCLIDEAN",
    "bregman_divergence",
    "bregman_project",
    "oma_step",
    "ooma_step",
    "ftrl_step",
    "initial_point",
    "recommended_eta",
    "dual_norm_sq",
    "OcoPolicyState",
]

GAMMA_MAX = math.sqrt(math.exp(-2.0) + 0.25) - 0.5
BISECTION_CAP = 200
PROJECTION_TOL = 1e-10


@dataclass(frozen=True)
class MirrorMap:
    kind: str = "euclidean"  # "euclidean" or "entropy"
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("euclidean", "entropy"):
            raise ValueError(f"unknown mirror map {self.kind!r}")
        if self.kind == "entropy" and not 0.0 <= self.gamma <= GAMMA_MAX + 1e-15:
            raise ValueError(f"entropy shift must lie in [0, {GAMMA_MAX:.6f}], got {self.gamma}")

    @classmethod
    def entropy(cls, gamma: float) -> "MirrorMap":
        return cls("entropy", float(gamma))

    @property
    def is_entropy(self) -> bool:
        return self.kind == "entropy"

    @property
    def dynamic_safe(self) -> bool:
        """Pure entropy (zero shift) cannot track a moving comparator."""
        return not (self.is_entropy and self.gamma == 0.0)

    def grad(self, y: np.ndarray) -> np.ndarray:
        if self.is_entropy:
            return np.log(y + self.gamma) + 1.0
        return np.array(y, dtype=float)

    def grad_inverse(self, theta: np.ndarray) -> np.ndarray:
        if self.is_entropy:
            return np.exp(theta - 1.0) - self.gamma
        return np.array(theta, dtype=float)

    def value(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        if self.is_entropy:
            s = y + self.gamma
            return float(np.sum(np.where(s > 0, s * np.log(np.where(s > 0, s, 1.0)), 0.0)))
        return 0.5 * float(y @ y)

    def _shifted(self, u: np.ndarray, tau: float) -> np.ndarray:
        # ``u`` is z itself (Euclidean) or log(z + gamma) (entropy).
        if self.is_entropy:
            with np.errstate(over="ignore"):
                return np.clip(np.exp(u - tau) - self.gamma, 0.0, 1.0)
        return np.clip(u - tau, 0.0, 1.0)


EUCLIDEAN = MirrorMap()


def bregman_divergence(mirror: MirrorMap, y, z) -> float:
    """``D(y, z) = Phi(y) - Phi(z) - grad Phi(z) . (y - z)``."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if mirror.is_entropy:
        a = y + mirror.gamma
        b = z + mirror.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(a > 0, a * np.log(a / b), 0.0)
        return float(np.sum(terms - (y - z)))
    d = y - z
    return 0.5 * float(d @ d)


def _project_block(mirror: MirrorMap, u: np.ndarray, r: float, exact: bool, tol: float) -> np.ndarray:
    def total(tau: float) -> float:
        return float(mirror._shifted(u, tau).sum())

    if not exact and total(0.0) <= r + tol:
        return mirror._shifted(u, 0.0)
    finite = u[np.isfinite(u)]
    if finite.size < r - tol:
        raise ValueError("too few coordinates inside the entropy domain to reach the block rank")
    center = float(finite.max())
    width = 1.0
    for _ in range(BISECTION_CAP):
        lo, hi = center - width, center + width
        if total(lo) >= r and total(hi) <= r:
            break
        width *= 2.0
    else:
        raise RuntimeError("could not bracket the projection multiplier")
    if not exact:
        lo = max(lo, 0.0)

    tau = 0.5 * (lo + hi)
    for _ in range(BISECTION_CAP):
        tau = 0.5 * (lo + hi)
        s = total(tau)
        if abs(s - r) <= tol * 1e-3 or hi - lo <= 1e-15 * max(1.0, abs(tau)):
            break
        if s > r:
            lo = tau
        else:
            hi = tau
    y = mirror._shifted(u, tau)
    if abs(y.sum() - r) > tol:
        raise RuntimeError("projection bisection did not converge")

    # Closed-form polish on the free coordinates of the bisection solution.
    free = (y > 0) & (y < 1)
    if free.any():
        need = r - np.count_nonzero(y >= 1)
        if mirror.is_entropy:
            top = float(u[free].max())
            log_mass = top + math.log(float(np.sum(np.exp(u[free] - top))))
            denom = need + mirror.gamma * free.sum()
            cand_tau = log_mass - math.log(denom) if denom > 0 else tau
        else:
            cand_tau = (float(np.sum(u[free])) - need) / free.sum()
        cand = mirror._shifted(u, cand_tau)
        if abs(cand.sum() - r) < abs(y.sum() - r):
            y = cand
    return y


def _project(mirror: MirrorMap, M: Matroid, u: np.ndarray, tol: float) -> np.ndarray:
    y = np.empty(M.n)
    for block, r in zip(M.blocks, M.ranks):
        idx = list(block)
        y[idx] = _project_block(mirror, u[idx], float(r), M.exact, tol)
    return y


def bregman_project(mirror: MirrorMap, M: Matroid, z, tol: float = PROJECTION_TOL) -> np.ndarray:
    """Bregman projection of ``z`` onto the matroid polytope of ``M``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (M.n,):
        raise ValueError(f"expected a vector of length {M.n}, got shape {z.shape}")
    if not mirror.is_entropy:
        return _project(mirror, M, z, tol)
    shifted = z + mirror.gamma
    if np.any(shifted < 0):
        raise ValueError("point lies outside the entropy domain (some z_j < -gamma)")
    with np.errstate(divide="ignore"):
        return _project(mirror, M, np.log(shifted), tol)


def oma_step(mirror: MirrorMap, M: Matroid, y, g, eta: float, tol: float = PROJECTION_TOL) -> np.ndarray:
    """One mirror ascent step along the supergradient ``g``."""
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    if mirror.is_entropy:
        # z = (y + gamma) exp(eta g) - gamma, kept in log form to avoid overflow.
        with np.errstate(divide="ignore"):
            return _project(mirror, M, np.log(y + mirror.gamma) + eta * g, tol)
    return _project(mirror, M, y + eta * g, tol)


def ooma_step(
    mirror: MirrorMap,
    M: Matroid,
    y_pi,
    g,
    predict: Callable[[np.ndarray], np.ndarray] | None,
    eta: float,
    tol: float = PROJECTION_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Optimistic step: returns ``(y_next, y_pi_next)``.

    The secondary iterate absorbs the observed supergradient ``g``; the
    primary iterate is one further step from it along the predicted
    supergradient ``predict(y_pi_next)``.
    """
    y_pi_next = oma_step(mirror, M, y_pi, g, eta, tol)
    if predict is None:
        return y_pi_next.copy(), y_pi_next
    g_pred = np.asarray(predict(y_pi_next), dtype=float)
    return oma_step(mirror, M, y_pi_next, g_pred, eta, tol), y_pi_next


def ftrl_step(grad_sum, eta: float, M: Matroid, tol: float = PROJECTION_TOL) -> np.ndarray:
    """Follow the regularized leader with the Euclidean regularizer."""
    return bregman_project(EUCLIDEAN, M, eta * np.asarray(grad_sum, dtype=float), tol)


def initial_point(mirror: MirrorMap, M: Matroid) -> np.ndarray:
    """Entropy starts from the projected uniform point, Euclidean from the projected origin."""
    if mirror.is_entropy:
        start = np.empty(M.n)
        for block, r in zip(M.blocks, M.ranks):
            start[list(block)] = r / len(block)
        return bregman_project(mirror, M, start)
    return bregman_project(mirror, M, np.zeros(M.n))


def table_constants(mirror: MirrorMap, M: Matroid) -> tuple[float, float, float]:
    """``(rho, D^2, L_Phi)``: strong convexity, diameter and gradient bound."""
    r, n = M.rank, M.n
    if mirror.is_entropy:
        g = mirror.gamma
        rho = 1.0 / (r + g * n)
        d2 = r * (1 + g) * math.log((1 + g) * n / (r + g * n))
        l_phi = math.inf if g == 0 else math.log(1.0 / g) - 1.0
        return rho, d2, l_phi
    return 1.0, r / 2.0, 1.0


def recommended_eta(mirror: MirrorMap, M: Matroid, path_budget: float, grad_sq_sum: float) -> float:
    """Tuned step ``sqrt(2 rho (D^2 + 2 L_Phi P_T) / sum_t ||g_t - g_t^pi||_*^2)``."""
    if not grad_sq_sum > 0:
        raise ValueError("grad_sq_sum must be positive")
    if path_budget < 0:
        raise ValueError("path budget must be nonnegative")
    rho, d2, l_phi = table_constants(mirror, M)
    if path_budget > 0 and math.isinf(l_phi):
        raise ValueError("pure entropy (gamma = 0) has no dynamic guarantee; use a positive shift")
    drift = 0.0 if path_budget == 0 else 2.0 * l_phi * path_budget
    return math.sqrt(2.0 * rho * (d2 + drift) / grad_sq_sum)


def dual_norm_sq(mirror: MirrorMap, g) -> float:
    """Squared dual norm: l-infinity for entropy, l2 for Euclidean."""
    g = np.asarray(g, dtype=float)
    if mirror.is_entropy:
        return float(np.max(np.abs(g), initial=0.0) ** 2)
    return float(g @ g)


@dataclass
class OcoPolicyState:
    """Iterate and configuration of one online policy run.

    ``kind`` is ``"oma"``, ``"ooma"`` or ``"ftrl"``.  The state is owned by a
    single run and updated in place by :meth:`update`.
    """

    kind: str
    mirror: MirrorMap
    matroid: Matroid
    eta: float
    y: np.ndarray
    y_pi: np.ndarray | None = None
    grad_sum: np.ndarray | None = None

    @classmethod
    def create(cls, kind: str, mirror: MirrorMap, M: Matroid, eta: float) -> "OcoPolicyState":
        if kind not in ("oma", "ooma", "ftrl"):
            raise ValueError(f"unknown policy kind {kind!r}")
        if not eta > 0:
            raise ValueError("learning rate must be positive")
        if kind == "ftrl":
            if mirror.is_entropy:
                raise ValueError("FTRL is provided with the Euclidean regularizer only")
            zero = np.zeros(M.n)
            return cls(kind, mirror, M, eta, ftrl_step(zero, eta, M), grad_sum=zero)
        y0 = initial_point(mirror, M)
        return cls(kind, mirror, M, eta, y0, y_pi=y0.copy() if kind == "ooma" else None)

    def update(self, g, predict: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.kind == "oma":
            self.y = oma_step(self.mirror, self.matroid, self.y, g, self.eta)
        elif self.kind == "ooma":
            self.y, self.y_pi = ooma_step(self.mirror, self.matroid, self.y_pi, g, predict, self.eta)
        else:
            self.grad_sum = self.grad_sum + g
            self.y = ftrl_step(self.grad_sum, self.eta, self.matroid)
        return self.y
