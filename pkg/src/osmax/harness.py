"""Experiment driver: synthetic instances, schedules, offline comparators and CSV output.

A run is described by an :class:`ExperimentConfig` (usually loaded from a YAML
or JSON file).  For every seed the driver generates the reward sequence,
computes the fractional offline optimum ``F*`` by Frank-Wolfe, runs the
configured policy and writes one trace CSV.  A summary CSV reports the mean
and standard deviation over seeds of ``F_X / F*`` at ``floor(T/3)``,
``floor(2T/3)`` and ``T``.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np
import yaml

from . import bandit
from .matroid import Matroid, count_bases, enumerate_bases, lmo
from .oco import EUCLIDEAN, MirrorMap, OcoPolicyState, dual_norm_sq, recommended_eta
from .raoco import Trace, run_raoco, wtp_prediction
from .wtp import (
    ThresholdPotential,
    WtpFunction,
    approx_ratio,
    combine,
    degree,
    from_coverage,
    from_quadratic,
    lipschitz_bounds,
    supergradient,
)

__all__ = [
    "gen_synth_wc",
    "gen_synth_tf",
    "gen_influence",
    "load_edge_list",
    "karate_edges",
    "schedule_indices",
    "compute_fstar",
    "fstar_bounds",
    "lp_fstar",
    "brute_force_offline",
    "ExperimentConfig",
    "MetricsReport",
    "build_rewards",
    "run_experiment",
    "run_sweep",
    "report_times",
    "main",
]

SUMMARY_COLUMNS = ("dataset", "constraint", "policy", "eta", "gamma", "t", "mean_ratio", "std")
RUNS_COLUMNS = ("dataset", "constraint", "policy", "eta", "gamma", "seed", "fstar", "final_ratio", "trace")
MAX_BRUTE_FORCE = 1_000_000
FSTAR_SMOOTHING = 0.1  # initial smoothing temperature, relative to the largest weight


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _wc_objective(n: int, support: np.ndarray, num_terms: int, rng: np.random.Generator) -> WtpFunction:
    r = support.size
    heavy = rng.uniform(1.0, 2.0, size=r)
    terms = [(float(c), ThresholdPotential(1.0, (int(j),), (1.0,))) for c, j in zip(heavy, support)]
    light = []
    for _ in range(num_terms - r):
        size = int(rng.integers(2, min(4, n) + 1))
        elems = rng.choice(n, size=size, replace=False)
        b = float(rng.uniform(0.5, 1.5))
        w = rng.uniform(0.2, 1.0, size=size)
        light.append((float(rng.uniform(0.1, 1.0)), ThresholdPotential(b, elems.tolist(), w.tolist())))
    if light:
        # Every outside element gains at most half of the smallest heavy coefficient.
        mass = sum(c * max(psi.weights) for c, psi in light)
        scale = 0.5 * heavy.min() / mass
        terms.extend((c * scale, psi) for c, psi in light)
    return WtpFunction(n, tuple(terms))


def gen_synth_wc(
    n: int, num_terms: int, rng: np.random.Generator, r: int | None = None
) -> tuple[WtpFunction, WtpFunction]:
    """Two weighted-coverage objectives whose best ``r``-subsets are disjoint.

    Each objective puts a heavy singleton term on each element of its own
    random ``r``-subset and spreads light random terms over the whole ground
    set.  The light terms are scaled so that no outside element can beat a
    heavy one, which makes the designated subset the unique maximizer of both
    the set function and its relaxation under a rank-``r`` uniform matroid.
    """
    r = max(1, n // 4) if r is None else int(r)
    if 2 * r > n:
        raise ValueError(f"n = {n} is too small for two disjoint supports of size {r}")
    if num_terms < r:
        raise ValueError(f"need at least r = {r} terms per objective, got {num_terms}")
    perm = rng.permutation(n)
    first = np.sort(perm[:r])
    second = np.sort(perm[r : 2 * r])
    return _wc_objective(n, first, num_terms, rng), _wc_objective(n, second, num_terms, rng)


def synth_tf_matrices(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``(h, H)`` for one team-formation quadratic, already made monotone."""
    h = np.clip(rng.normal(60.0, 20.0, size=n), 0.0, 100.0)
    upper = np.triu(np.minimum(rng.normal(-20.0, 10.0, size=(n, n)), 0.0), k=1)
    H = upper + upper.T
    dead = h <= 0
    H[dead, :] = 0.0
    H[:, dead] = 0.0
    while True:
        bad = h + H.sum(axis=1) < 0
        if not bad.any():
            return h, H
        H[bad, :] *= 0.9
        H[:, bad] *= 0.9


def gen_synth_tf(n: int, rng: np.random.Generator, pool: int = 5) -> list[WtpFunction]:
    """Pool of team-formation quadratics ``h.x + x.H.x / 2``."""
    return [from_quadratic(*synth_tf_matrices(n, rng)) for _ in range(pool)]


def load_edge_list(path: str | Path) -> list[tuple[int, int]]:
    """Whitespace-separated ``u v`` pairs; ``#`` starts a comment."""
    return _parse_edges(Path(path).read_text())


def _parse_edges(text: str) -> list[tuple[int, int]]:
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected two node ids, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: node ids must be integers") from exc
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: node ids must be nonnegative")
        edges.append((u, v))
    return edges


def karate_edges() -> list[tuple[int, int]]:
    """The bundled 34-node karate-club graph as 78 arcs (0-indexed)."""
    return _parse_edges(resources.files("osmax").joinpath("data/karate.edges").read_text())


def gen_influence(
    edges: Sequence[tuple[int, int]],
    p: float,
    T: int,
    rng: np.random.Generator,
    *,
    n: int | None = None,
    directed: bool = True,
) -> list[WtpFunction]:
    """Independent-cascade reachability coverage, one sampled graph per timeslot.

    Each edge survives with probability ``p``; node ``v`` is influenced when
    the seed set meets ``P_v``, the nodes that reach ``v`` in the surviving
    graph (``v`` included).  Edges are arcs ``u -> v`` unless ``directed`` is
    false, in which case they are traversable both ways.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    try:
        edges = [(int(u), int(v)) for u, v in edges]
    except (TypeError, ValueError) as exc:
        raise ValueError("malformed edge list: expected (u, v) integer pairs") from exc
    if any(min(e) < 0 for e in edges):
        raise ValueError("malformed edge list: negative node id")
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    if n < 1:
        raise ValueError("graph has no nodes")
    if any(max(e) >= n for e in edges):
        raise ValueError("edge endpoint outside the node range")
    out = []
    for _ in range(T):
        keep = rng.random(len(edges)) < p
        G = nx.DiGraph() if directed else nx.Graph()
        G.add_nodes_from(range(n))
        G.add_edges_from(e for e, k in zip(edges, keep) if k)
        if directed:
            sets = [nx.ancestors(G, v) | {v} for v in range(n)]
        else:
            comp = {v: c for c in nx.connected_components(G) for v in c}
            sets = [comp[v] for v in range(n)]
        out.append(from_coverage(sets, [1.0 / n] * n, n=n))
    return out


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


def schedule_indices(schedule: str | dict, T: int) -> list[int]:
    """Which of two objectives (0 or 1) is active at each of ``T`` slots.

    ``stationary`` always uses objective 0; ``{"shift_at": tau}`` uses 0 for
    slots ``t < tau`` (1-based) and 1 afterwards; ``alternating`` uses 0 on odd
    slots and 1 on even ones.
    """
    if schedule == "stationary":
        return [0] * T
    if schedule == "alternating":
        return [t % 2 for t in range(T)]
    if isinstance(schedule, dict) and "shift_at" in schedule:
        tau = int(schedule["shift_at"])
        if not 1 <= tau <= T:
            raise ValueError(f"shift time {tau} outside 1..{T}")
        return [0 if t + 1 < tau else 1 for t in range(T)]
    raise ValueError(f"unknown schedule {schedule!r}")


# ---------------------------------------------------------------------------
# Offline comparators
# ---------------------------------------------------------------------------


def _feasible_start(M: Matroid) -> np.ndarray:
    y = np.zeros(M.n)
    if M.exact:
        for block, r in zip(M.blocks, M.ranks):
            y[list(block)] = r / len(block)
    return y


def _smoothed_gradient(f: WtpFunction, y: np.ndarray, mu: float) -> np.ndarray:
    """Gradient of the relaxation with each ``min{b, s}`` replaced by ``s - mu softplus((s - b) / mu)``."""
    s = f.weight_matrix @ y
    active = np.ones_like(s)
    bounded = np.isfinite(f.thresholds)
    # d/ds of the smoothed term is the logistic function of (b - s) / mu
    active[bounded] = 0.5 * (1.0 + np.tanh((f.thresholds[bounded] - s[bounded]) / (2.0 * mu)))
    return (f.coefficients * active) @ f.weight_matrix


def fstar_bounds(
    rewards: Sequence[WtpFunction], M: Matroid, iterations: int = 2000, tol: float = 1e-6
) -> tuple[float, float, np.ndarray]:
    """Frank-Wolfe on the average relaxation: ``(best value, upper bound, best point)``.

    The relaxation is piecewise linear, and plain Frank-Wolfe driven by
    supergradients can stall at a kink.  The search direction therefore comes
    from a smoothed surrogate whose temperature decays like ``1/sqrt(k)``;
    every iterate and every linear-oracle vertex is scored on the exact
    relaxation and the best one is kept.  The upper bound is the smallest
    ``F(y) + g.(s - y)`` over iterates, with ``g`` an exact supergradient,
    valid by concavity.  The loop stops early once that gap drops below ``tol``.
    """
    avg = combine(list(rewards), [1.0 / len(rewards)] * len(rewards))
    y = _feasible_start(M)
    best_val, best_y, upper = -math.inf, y.copy(), math.inf
    scale = float(np.max(np.abs(avg.weight_matrix), initial=0.0)) or 1.0
    for k in range(iterations):
        val = avg(y)
        if val > best_val:
            best_val, best_y = val, y.copy()
        g = supergradient(avg, y)
        s = lmo(M, g)
        gap = float(g @ (s - y))
        upper = min(upper, val + max(gap, 0.0))
        if gap <= tol:
            break
        s = lmo(M, _smoothed_gradient(avg, y, FSTAR_SMOOTHING * scale / math.sqrt(k + 1.0)))
        vertex = avg(s)
        if vertex > best_val:
            best_val, best_y = vertex, s.copy()
        y = y + (2.0 / (k + 2.0)) * (s - y)
    return best_val, upper, best_y


def lp_fstar(rewards: Sequence[WtpFunction], M: Matroid) -> tuple[float, np.ndarray]:
    """Exact ``(F*, maximizer)`` from the epigraph linear program.

    With one variable ``u_l <= min{b_l, w_l . y}`` per term, maximizing
    ``sum_l c_l u_l`` over the polytope is a linear program; HiGHS solves it
    to optimality.
    """
    from scipy import sparse
    from scipy.optimize import linprog

    avg = combine(list(rewards), [1.0 / len(rewards)] * len(rewards))
    W = sparse.csr_matrix(avg.weight_matrix)
    L, n = W.shape
    epigraph = sparse.hstack([-W, sparse.eye(L)]).tocsr()
    blocks = sparse.lil_matrix((len(M.blocks), n + L))
    for i, block in enumerate(M.blocks):
        blocks[i, list(block)] = 1.0
    blocks = blocks.tocsr()
    ranks = np.asarray(M.ranks, dtype=float)
    bounds = [(0.0, 1.0)] * n + [(None, b if np.isfinite(b) else None) for b in avg.thresholds]
    constraints = (
        dict(A_ub=epigraph, b_ub=np.zeros(L), A_eq=blocks, b_eq=ranks)
        if M.exact
        else dict(A_ub=sparse.vstack([epigraph, blocks]).tocsr(), b_ub=np.r_[np.zeros(L), ranks])
    )
    res = linprog(np.r_[np.zeros(n), -avg.coefficients], bounds=bounds, method="highs", **constraints)
    if res.status != 0:
        raise RuntimeError(f"F* linear program failed: {res.message}")
    y = np.clip(res.x[:n], 0.0, 1.0)
    return avg(y), y


FSTAR_METHODS = ("frank_wolfe", "lp")


def compute_fstar(
    rewards: Sequence[WtpFunction], M: Matroid, iterations: int = 2000, method: str = "frank_wolfe"
) -> float:
    """``max_y (1/T) sum_t f~_t(y)`` over the matroid polytope.

    ``method="frank_wolfe"`` runs :func:`fstar_bounds`; ``method="lp"`` solves
    the problem exactly with :func:`lp_fstar`.
    """
    if method == "frank_wolfe":
        return fstar_bounds(rewards, M, iterations)[0]
    if method == "lp":
        return lp_fstar(rewards, M)[0]
    raise ValueError(f"unknown F* method {method!r}; expected one of {FSTAR_METHODS}")


def brute_force_offline(rewards: Sequence[WtpFunction], M: Matroid) -> tuple[np.ndarray, float]:
    """Best fixed basis for ``sum_t f_t`` by exhaustive search, with its total."""
    if count_bases(M) > MAX_BRUTE_FORCE:
        raise ValueError(f"more than {MAX_BRUTE_FORCE} bases; exhaustive search refused")
    total = combine(list(rewards))
    best_x, best_v = None, -math.inf
    it = enumerate_bases(M)
    while chunk := list(itertools.islice(it, 4096)):
        X = np.array(chunk)
        vals = total.evaluate_many(X)
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_x, best_v = X[k], float(vals[k])
    return best_x, best_v


# ---------------------------------------------------------------------------
# Configuration and runs
# ---------------------------------------------------------------------------

POLICIES = ("oga", "oma", "ooma", "ftrl", "liraoco", "random")


@dataclass
class ExperimentConfig:
    dataset: str
    problem: dict[str, Any]
    matroid: dict[str, Any]
    policy: dict[str, Any]
    seeds: list[int] = field(default_factory=lambda: [0])
    fstar_iterations: int = 2000
    fstar_method: str = "frank_wolfe"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        missing = [k for k in ("problem", "matroid", "policy") if k not in data]
        if missing:
            raise ValueError(f"config is missing {', '.join(missing)}")
        cfg = cls(
            dataset=str(data.get("dataset", data["problem"].get("generator", "experiment"))),
            problem=dict(data["problem"]),
            matroid=dict(data["matroid"]),
            policy=dict(data["policy"]),
            seeds=[int(s) for s in data.get("seeds", [0])],
            fstar_iterations=int(data.get("fstar_iterations", 2000)),
            fstar_method=str(data.get("fstar_method", "frank_wolfe")),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))

    def validate(self) -> None:
        T = self.problem.get("T")
        if not isinstance(T, int) or T < 1:
            raise ValueError(f"problem.T must be a positive integer, got {T!r}")
        gen = self.problem.get("generator")
        if gen not in ("synth_wc", "synth_tf", "influence", "wtp"):
            raise ValueError(f"unknown generator {gen!r}")
        name = self.policy.get("name")
        if name not in POLICIES:
            raise ValueError(f"policy.name must be one of {POLICIES}, got {name!r}")
        schedule_indices(self.problem.get("schedule", "stationary"), T)
        self.build_matroid()
        if name in ("oga", "oma", "ooma", "ftrl", "liraoco"):
            eta = self.policy.get("eta")
            if eta != "auto" and not (isinstance(eta, (int, float)) and eta > 0):
                raise ValueError(f"policy.eta must be positive or 'auto', got {eta!r}")
        self.mirror()
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.fstar_method not in FSTAR_METHODS:
            raise ValueError(f"fstar_method must be one of {FSTAR_METHODS}, got {self.fstar_method!r}")

    def build_matroid(self) -> Matroid:
        return Matroid.from_dict(self.matroid)

    @property
    def constraint(self) -> str:
        return self.matroid.get("type", "uniform")

    def mirror(self) -> MirrorMap:
        name = self.policy["name"]
        kind = self.policy.get("map")
        if kind is None:
            kind = "euclidean" if name in ("oga", "ftrl", "random") else "entropy"
        if kind == "entropy":
            return MirrorMap.entropy(float(self.policy.get("gamma", 0.05)))
        return EUCLIDEAN


@dataclass
class MetricsReport:
    dataset: str
    policy: str
    eta: float
    gamma: float
    fstar: dict[int, float]
    ratio_integral: dict[int, np.ndarray]
    ratio_fractional: dict[int, np.ndarray]
    alpha_regret: dict[int, float]
    traces: dict[int, Trace]

    def summary_rows(self, constraint: str) -> list[list[str]]:
        seeds = sorted(self.ratio_integral)
        T = len(self.ratio_integral[seeds[0]])
        rows = []
        for t in report_times(T):
            vals = np.array([self.ratio_integral[s][t - 1] for s in seeds])
            rows.append(
                [
                    self.dataset,
                    constraint,
                    self.policy,
                    repr(float(self.eta)),
                    repr(float(self.gamma)),
                    str(t),
                    repr(float(vals.mean())),
                    repr(float(vals.std())),
                ]
            )
        return rows


def report_times(T: int) -> list[int]:
    return sorted({max(1, T // 3), max(1, (2 * T) // 3), T})


def build_rewards(config: ExperimentConfig, rng: np.random.Generator) -> tuple[list[WtpFunction], list[WtpFunction]]:
    """``(rewards, objectives)``: the per-slot sequence and the distinct objectives behind it."""
    prob = config.problem
    params = dict(prob.get("params", {}))
    T = prob["T"]
    M = config.build_matroid()
    gen = prob["generator"]
    if gen == "synth_wc":
        objectives = list(
            gen_synth_wc(M.n, int(params.get("num_terms", 24)), rng, r=params.get("r", M.rank))
        )
        idx = schedule_indices(prob.get("schedule", "stationary"), T)
        return [objectives[i] for i in idx], objectives
    if gen == "synth_tf":
        pool = gen_synth_tf(M.n, rng, int(params.get("pool", 5)))
        picks = rng.integers(len(pool), size=T)
        return [pool[i] for i in picks], pool
    if gen == "influence":
        graph = params.get("graph", "karate")
        edges = karate_edges() if graph == "karate" else load_edge_list(graph)
        seq = gen_influence(edges, float(params.get("p", 0.1)), T, rng, n=M.n, directed=bool(params.get("directed", True)))
        return seq, seq
    if gen == "wtp":
        functions = [WtpFunction.from_dict(d) for d in params["functions"]]
        idx = schedule_indices(prob.get("schedule", "stationary"), T)
        if max(idx) >= len(functions):
            raise ValueError("schedule needs two functions")
        return [functions[i] for i in idx], functions
    raise ValueError(f"unknown generator {gen!r}")


def _auto_eta(config: ExperimentConfig, mirror: MirrorMap, M: Matroid, objectives: list[WtpFunction], T: int, space=None) -> float:
    bound = np.max([lipschitz_bounds(f) for f in objectives], axis=0)
    target = M if space is None else space.slot_matroid
    if space is not None:
        bound = np.full(space.n_prime, float(bound.max()))
    per_slot = dual_norm_sq(mirror, bound)
    path = float(config.policy.get("path_budget", 0.0))
    return recommended_eta(mirror, target, path, per_slot * T)


def _run_one(config: ExperimentConfig, seed: int) -> tuple[Trace, float, float]:
    streams = np.random.SeedSequence(seed).spawn(3)
    problem_rng, policy_rng, pred_rng = (np.random.default_rng(s) for s in streams)
    M = config.build_matroid()
    T = config.problem["T"]
    rewards, objectives = build_rewards(config, problem_rng)
    fstar = compute_fstar(rewards, M, config.fstar_iterations, config.fstar_method)
    name = config.policy["name"]
    mirror = config.mirror()
    eta = config.policy.get("eta", 1.0)
    if name == "random":
        trace = bandit.run_random(lambda t, x: rewards[t].evaluate_many(x[None, :])[0], M, T, policy_rng, seed=seed)
        # Integral decisions: the relaxation equals the reward.
        trace.reward_fractional[:] = trace.reward_integral
    elif name == "liraoco":
        space = bandit.to_slot_space(M)
        cfg = bandit.BanditConfig(
            delta=float(config.policy.get("delta", 0.25 * T ** (-0.2))),
            window=int(config.policy.get("W", math.ceil(T**0.2))),
        )
        if eta == "auto":
            eta = _auto_eta(config, mirror, M, objectives, T, space)
        state = bandit.make_bandit_policy(space, config.policy.get("kind", "oma"), mirror, float(eta))
        trace = bandit.run_liraoco(
            lambda t, x: rewards[t].evaluate_many(x[None, :])[0], M, cfg, state, T, policy_rng, seed=seed, space=space
        )
    else:
        kind = {"oga": "oma", "oma": "oma", "ooma": "ooma", "ftrl": "ftrl"}[name]
        if eta == "auto":
            eta = _auto_eta(config, mirror, M, objectives, T)
        state = OcoPolicyState.create(kind, mirror, M, float(eta))
        predictions = None
        if kind == "ooma":
            noise = float(config.policy.get("prediction_noise", 0.0))
            predictions = [wtp_prediction(f, noise, pred_rng) for f in rewards]
        trace = run_raoco(state, M, rewards, policy_rng, predictions, name=name, seed=seed)
    alpha = approx_ratio(max(degree(f) for f in objectives))
    regret = alpha * fstar * T - float(np.sum(trace.reward_integral))
    return trace, fstar, regret


def _trace_name(config: ExperimentConfig, trace: Trace) -> str:
    return f"{config.dataset}_{trace.policy}_eta{trace.eta:g}_gamma{trace.gamma:g}_seed{trace.seed}.csv"


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> MetricsReport:
    """Run every seed of ``config``; write traces and summaries when ``out_dir`` is given."""
    traces, fstars, ratios_x, ratios_y, regrets = {}, {}, {}, {}, {}
    for seed in config.seeds:
        trace, fstar, regret = _run_one(config, seed)
        traces[seed], fstars[seed], regrets[seed] = trace, fstar, regret
        ratios_x[seed] = trace.cum_avg_integral / fstar
        ratios_y[seed] = trace.cum_avg_fractional / fstar
    first = traces[config.seeds[0]]
    report = MetricsReport(config.dataset, first.policy, first.eta, first.gamma, fstars, ratios_x, ratios_y, regrets, traces)
    if out_dir is not None:
        _write_outputs([(config, report)], Path(out_dir))
    return report


def _write_outputs(results: list[tuple[ExperimentConfig, MetricsReport]], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    summary = io.StringIO()
    runs = io.StringIO()
    sw = csv.writer(summary, lineterminator="\n")
    rw = csv.writer(runs, lineterminator="\n")
    sw.writerow(SUMMARY_COLUMNS)
    rw.writerow(RUNS_COLUMNS)
    for config, report in results:
        sw.writerows(report.summary_rows(config.constraint))
        for seed in sorted(report.traces):
            trace = report.traces[seed]
            fname = _trace_name(config, trace)
            trace.to_csv(out / fname)
            rw.writerow(
                [
                    config.dataset,
                    config.constraint,
                    trace.policy,
                    repr(float(trace.eta)),
                    repr(float(trace.gamma)),
                    str(seed),
                    repr(report.fstar[seed]),
                    repr(float(report.ratio_integral[seed][-1])),
                    fname,
                ]
            )
    (out / "summary.csv").write_text(summary.getvalue())
    (out / "runs.csv").write_text(runs.getvalue())


def expand_grid(config: ExperimentConfig, grid: dict[str, list]) -> list[ExperimentConfig]:
    """One config per point of the Cartesian product of policy parameter lists."""
    keys = sorted(grid)
    out = []
    for values in itertools.product(*(grid[k] for k in keys)):
        policy = dict(config.policy)
        policy.update(zip(keys, values))
        cfg = replace(config, policy=policy)
        cfg.validate()
        out.append(cfg)
    return out


def run_sweep(config: ExperimentConfig, grid: dict[str, list], out_dir: str | Path | None = None) -> list[MetricsReport]:
    configs = expand_grid(config, grid)
    results = [(cfg, run_experiment(cfg)) for cfg in configs]
    if out_dir is not None:
        _write_outputs(results, Path(out_dir))
    return [r for _, r in results]


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    report = run_experiment(config, args.out)
    for row in report.summary_rows(config.constraint):
        print(",".join(row))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    grid = yaml.safe_load(Path(args.grid).read_text())
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise ValueError("grid file must map policy parameter names to lists of values")
    reports = run_sweep(config, grid, args.out)
    for rep in reports:
        for row in rep.summary_rows(config.constraint):
            print(",".join(row))
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    M = config.build_matroid()
    for seed in config.seeds:
        problem_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[0])
        rewards, _ = build_rewards(config, problem_rng)
        value, upper, _ = fstar_bounds(rewards, M, config.fstar_iterations)
        result: dict[str, Any] = {"seed": seed, "fstar": value, "fstar_upper": upper, "fstar_lp": lp_fstar(rewards, M)[0]}
        if count_bases(M) <= MAX_BRUTE_FORCE:
            x, total = brute_force_offline(rewards, M)
            result["best_fixed"] = np.flatnonzero(x).tolist()
            result["best_fixed_per_slot"] = total / len(rewards)
        else:
            result["best_fixed"] = None
        print(json.dumps(result))
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    from .selfcheck import run_checks

    return 0 if run_checks(verbose=True) else 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="osmax", description="Online submodular maximization experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one configuration over its seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sweep", help="run a grid of policy parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("oracle", help="offline comparators (F* and brute force)")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_oracle)
    p = sub.add_parser("validate", help="run the built-in property checks")
    p.set_defaults(func=_cmd_validate)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
