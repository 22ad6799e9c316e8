"""LP-MAP solvers: AD³ (ADMM dual decomposition), projected subgradient and
branch-and-bound.

Edge quantities (``q``, ``lambda``, per-edge unary shares) are stored as flat
vectors with one slot per (edge, state), in the edge order of the graph. The
gather step sums slots into variables with ``np.bincount``, which always adds
in slot order, so results do not depend on threading or caching.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .activeset import (DenseOracle, InfeasibleFactorError, SequenceOracle, SubproblemInput,
                        dense_map_oracle, solve_qp_active_set, support_bound,
                        viterbi_map_oracle)
from .graph import DENSE, LOGIC_KINDS, PAIR, SEQUENCE, FactorGraph, MapResult, evaluate
from .logic import logic_map, solve_qp_logic
from .pairwise import solve_qp_pair_batch

AD3 = "AD3"
SUBGRADIENT = "SUBGRADIENT"

CONVERGED = "CONVERGED"
CERTIFIED_OPTIMAL = "CERTIFIED_OPTIMAL"
MAX_ITERS = "MAX_ITERS"
INFEASIBLE = "INFEASIBLE"

INTEGRAL_TOL = 1e-9
AGREE_TOL = 1e-9
GAP_TOL = 1e-9
LAMBDA_SUM_TOL = 1e-6
ETA_MIN, ETA_MAX = 1e-3, 1e3
DUAL_EVERY = 10
# inner active-set iterations once the outer residuals are within this factor of tol
NEAR_TOL_FACTOR = 100.0
NEAR_TOL_INNER = 500


@dataclass
class SolverConfig:
    algorithm: str = AD3
    eta: float = 1.0
    eta_adapt: bool = True
    eta_freeze_iter: int = 100
    max_iters: int = 1000
    residual_tol: float = 1e-6
    subgrad_eta0: float = 1.0
    inner_iters: int = 10
    caching: bool = True
    seed: int = 0
    # stop on convergence or certificate; off runs exactly max_iters iterations
    early_stop: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in (AD3, SUBGRADIENT):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        for name in ("eta", "subgrad_eta0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_iters", "inner_iters", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.eta_freeze_iter < 0:
            raise ValueError("eta_freeze_iter must be >= 0")
        if not 0 < self.residual_tol < 1:
            raise ValueError("residual_tol must lie in (0, 1)")


class TraceRow(NamedTuple):
    iter: int
    dual: float
    primal: float
    r_primal: float
    r_dual: float
    eta: float
    oracle_calls: int


TRACE_HEADER = ("iter", "dual", "primal", "r_primal", "r_dual", "eta", "oracle_calls")


@dataclass
class PrimalDualState:
    """Iterate of the consensus method.

    ``q`` and ``lam`` are lists with one vector per edge (aligned with
    ``edge_vars``); ``p`` has one distribution per variable.
    """

    p: list
    q: list
    lam: list
    edge_vars: tuple
    iteration: int = 0


class ResidualReport(NamedTuple):
    r_primal: float
    r_dual: float


@dataclass
class SolveReport:
    status: str
    best_dual: float
    best_primal_value: float
    assignment: tuple
    fractional: bool
    trace: list = field(default_factory=list)
    p: list = None
    iterations: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def oracle_calls(self):
        return self.trace[-1].oracle_calls if self.trace else 0


class BranchAndBoundBudgetError(RuntimeError):
    def __init__(self, message, incumbent, gap):
        super().__init__(message)
        self.incumbent = incumbent
        self.gap = gap


# ---------------------------------------------------------------------------
# Edge layout shared by the solvers
# ---------------------------------------------------------------------------

class _Layout:
    def __init__(self, graph: FactorGraph):
        self.graph = graph
        self.states = graph.num_states()
        self.var_offset = np.concatenate([[0], np.cumsum(self.states)]).astype(int)
        self.num_var_slots = int(self.var_offset[-1])
        self.deg = np.array([len(n) for n in graph.neighbors], dtype=int)
        self.edge_vars = tuple(v for v, _ in graph.edges)
        # slot -> variable-state index
        gidx, edge_slices = [], []
        pos = 0
        for v in self.edge_vars:
            s = self.states[v]
            edge_slices.append(slice(pos, pos + s))
            gidx.extend(range(self.var_offset[v], self.var_offset[v] + s))
            pos += s
        self.gidx = np.array(gidx, dtype=int)
        self.edge_slices = edge_slices
        self.num_slots = pos
        # edges of each factor, in factor order
        self.factor_edges = []
        e = 0
        for f in graph.factors:
            self.factor_edges.append(list(range(e, e + f.arity)))
            e += f.arity
        self.factor_slots = [np.concatenate([np.arange(edge_slices[e].start, edge_slices[e].stop)
                                             for e in es]) if es else np.zeros(0, int)
                             for es in self.factor_edges]
        unary = np.concatenate([var.unary for var in graph.variables]) if graph.variables \
            else np.zeros(0)
        self.unary = unary
        deg_slot = np.repeat(np.maximum(self.deg, 1), self.states) if graph.variables \
            else np.zeros(0)
        self.deg_slot = deg_slot.astype(float)
        with np.errstate(invalid="ignore"):
            self.theta_edge = unary[self.gidx] / self.deg_slot[self.gidx]
        self.isolated = [i for i in range(len(self.states)) if self.deg[i] == 0]

    def var_block(self, flat, i):
        return flat[self.var_offset[i]:self.var_offset[i + 1]]

    def split_vars(self, flat):
        return [flat[self.var_offset[i]:self.var_offset[i + 1]].copy()
                for i in range(len(self.states))]

    def split_edges(self, flat):
        return [flat[s].copy() for s in self.edge_slices]

    def gather(self, q_flat):
        """Plain average of the edge marginals of each variable."""
        total = np.bincount(self.gidx, weights=q_flat, minlength=self.num_var_slots)
        return total / self.deg_slot

    def argmax_assignment(self, p_flat):
        return tuple(int(np.argmax(self.var_block(p_flat, i))) for i in range(len(self.states)))

    def lambda_sum_max(self, lam_flat):
        if lam_flat.size == 0:
            return 0.0
        return float(np.max(np.abs(np.bincount(self.gidx, weights=lam_flat,
                                               minlength=self.num_var_slots))))


def _infeasible_reason(graph: FactorGraph):
    for i, var in enumerate(graph.variables):
        if np.all(var.unary == -np.inf):
            return f"variable {i} has no allowed state"
    for a, f in enumerate(graph.factors):
        if f.table is not None and np.all(f.table == -np.inf):
            return f"factor {a} has no allowed configuration"
        if f.kind == SEQUENCE:
            try:
                viterbi_map_oracle([np.zeros(graph.variables[v].num_states) for v in f.variables],
                                   f.transitions)
            except InfeasibleFactorError:
                return f"factor {a} has no allowed configuration"
    return None


def _infeasible_report(reason):
    return SolveReport(INFEASIBLE, -math.inf, -math.inf, None, False,
                       stats={"reason": reason})


def _factor_map(graph, factor, scores):
    """Best local configuration and value of ``factor`` under per-variable scores."""
    if factor.kind in LOGIC_KINDS:
        return logic_map(factor.kind, factor.negated, np.vstack(scores))
    if factor.kind == SEQUENCE:
        if not factor.transitions:
            y = int(np.argmax(scores[0]))
            return (y,), float(scores[0][y])
        return viterbi_map_oracle(scores, factor.transitions)
    shape = [graph.variables[v].num_states for v in factor.variables]
    return dense_map_oracle(scores, factor.table.reshape(shape))


def _isolated_value(layout):
    return float(sum(np.max(layout.graph.variables[i].unary) for i in layout.isolated))


def _dual_from_flat(layout, lam_flat):
    graph = layout.graph
    total = _isolated_value(layout)
    scores_flat = layout.theta_edge + lam_flat
    for a, f in enumerate(graph.factors):
        scores = [scores_flat[layout.edge_slices[e]] for e in layout.factor_edges[a]]
        try:
            _, value = _factor_map(graph, f, scores)
        except InfeasibleFactorError:
            return -math.inf
        total += value
    return float(total)


def dual_objective(graph: FactorGraph, lam) -> float:
    """Dual function: sum over factors of the best locally adjusted score.

    Parameters
    ----------
    graph : FactorGraph
    lam : sequence of 1-D arrays
        One multiplier vector per edge, in ``graph.edges`` order. The vectors of
        each variable must sum to zero.

    Returns
    -------
    float
        An upper bound on the MAP value.
    """
    layout = _Layout(graph)
    if len(lam) != len(layout.edge_slices):
        raise ValueError(f"expected {len(layout.edge_slices)} multiplier vectors, got {len(lam)}")
    lam_flat = np.concatenate([np.asarray(x, dtype=float) for x in lam]) if lam else np.zeros(0)
    if lam_flat.size != layout.num_slots:
        raise ValueError("multiplier vector sizes do not match variable state counts")
    if layout.lambda_sum_max(lam_flat) > LAMBDA_SUM_TOL:
        raise ValueError("multipliers of some variable do not sum to zero")
    return _dual_from_flat(layout, lam_flat)


def compute_residuals(state: PrimalDualState, previous_state: PrimalDualState) -> ResidualReport:
    """Primal residual (disagreement of edge marginals with ``p``) and dual
    residual (movement of ``p``), both normalised by the total number of edge
    slots."""
    denom = sum(len(state.p[v]) for v in state.edge_vars)
    if denom == 0:
        return ResidualReport(0.0, 0.0)
    rp = sum(float(np.sum((np.asarray(q) - state.p[v]) ** 2))
             for q, v in zip(state.q, state.edge_vars))
    rd = sum(float(np.sum((np.asarray(state.p[v]) - previous_state.p[v]) ** 2))
             for v in state.edge_vars)
    return ResidualReport(rp / denom, rd / denom)


def adjust_eta(r_primal, r_dual, eta, iteration, config: SolverConfig):
    """Residual-balancing update of the penalty constant."""
    if iteration >= config.eta_freeze_iter:
        return eta
    if r_primal > 10.0 * r_dual:
        eta = 2.0 * eta
    elif r_dual > 10.0 * r_primal:
        eta = eta / 2.0
    return min(max(eta, ETA_MIN), ETA_MAX)


# ---------------------------------------------------------------------------
# AD³
# ---------------------------------------------------------------------------

class _PairBatch:
    """All PAIR factors solved together in closed form."""

    def __init__(self, graph, layout, pair_ids):
        self.ids = np.array(pair_ids, dtype=int)
        sl = layout.edge_slices
        first = [sl[layout.factor_edges[a][0]].start for a in pair_ids]
        second = [sl[layout.factor_edges[a][1]].start for a in pair_ids]
        self.i0 = np.array(first, dtype=int)
        self.j0 = np.array(second, dtype=int)
        self.tables = np.array([graph.factors[a].table for a in pair_ids], dtype=float).reshape(-1, 4)
        self.last_a = None
        self.last_q = None
        self.last_eta = None

    def solve(self, a_flat, q_flat, eta, caching):
        """Write factor marginals into ``q_flat``; returns the number of solves."""
        if self.ids.size == 0:
            return 0
        a = np.stack([a_flat[self.i0], a_flat[self.i0 + 1],
                      a_flat[self.j0], a_flat[self.j0 + 1]], axis=1)
        if caching and self.last_a is not None and eta == self.last_eta:
            todo = np.any(a.view(np.int64) != self.last_a.view(np.int64), axis=1)
        else:
            todo = np.ones(len(a), dtype=bool)
        q = self.last_q.copy() if self.last_q is not None else np.zeros((len(a), 4))
        if todo.any():
            at = a[todo]
            b = self.tables[todo] / eta
            with np.errstate(invalid="ignore"):
                c1 = (at[:, 1] + 1.0 - at[:, 0] - b[:, 0] + b[:, 2]) / 2.0
                c2 = (at[:, 3] + 1.0 - at[:, 2] - b[:, 0] + b[:, 1]) / 2.0
            c12 = (b[:, 0] - b[:, 2] - b[:, 1] + b[:, 3]) / 2.0
            z1, z2, _ = solve_qp_pair_batch(c1, c2, c12)
            q[todo] = np.stack([1.0 - z1, z1, 1.0 - z2, z2], axis=1)
        self.last_a, self.last_q, self.last_eta = a, q, eta
        q_flat[self.i0] = q[:, 0]
        q_flat[self.i0 + 1] = q[:, 1]
        q_flat[self.j0] = q[:, 2]
        q_flat[self.j0 + 1] = q[:, 3]
        return int(todo.sum())


class _GeneralFactor:
    """A logic, DENSE or SEQUENCE factor with its cache and warm-start state."""

    def __init__(self, graph, layout, a):
        self.factor = graph.factors[a]
        self.slots = layout.factor_slots[a]
        self.sizes = [graph.variables[v].num_states for v in self.factor.variables]
        self.splits = np.cumsum(self.sizes)[:-1]
        f = self.factor
        if f.kind in LOGIC_KINDS:
            self.oracle = None
        elif f.kind == SEQUENCE:
            self.oracle = SequenceOracle(f.transitions)
            if self.oracle.num_states is None:
                self.oracle.num_states = tuple(self.sizes)
        else:
            self.oracle = DenseOracle(f.table, self.sizes)
        self.bound = support_bound(self.sizes)
        self.warm = None
        self.last_a = None
        self.last_eta = None
        self.last_q = None
        self.last_exact = False

    def needs_solve(self, a_flat, eta, caching):
        if not caching or not self.last_exact or eta != self.last_eta:
            return True
        a = a_flat[self.slots]
        return not np.array_equal(a.view(np.int64), self.last_a.view(np.int64))

    def solve(self, a_flat, eta, inner):
        """Returns (q slice, exact flag, support or None)."""
        a = a_flat[self.slots]
        f = self.factor
        if self.oracle is None:
            q = solve_qp_logic(f.kind, f.negated, a.reshape(-1, 2)).ravel()
            return a, q, True, None
        inp = SubproblemInput(np.split(a, self.splits), self.oracle, 1.0 / eta)
        sol, self.warm = solve_qp_active_set(self.oracle, inp, self.warm, inner)
        return a, np.concatenate(sol.u), sol.exact, sol.support

    def store(self, a, q, exact, eta):
        self.last_a, self.last_q, self.last_exact, self.last_eta = a, q, exact, eta


def _pin_isolated(layout, p_flat):
    """Variables without factors sit at the indicator of their best state."""
    for i in layout.isolated:
        block = layout.var_block(p_flat, i)
        block[:] = 0.0
        block[int(np.argmax(layout.graph.variables[i].unary))] = 1.0


def _is_integral(layout, p_flat):
    return all(np.max(layout.var_block(p_flat, i)) >= 1.0 - INTEGRAL_TOL
               for i in range(len(layout.states)))


def run_ad3(graph: FactorGraph, config: SolverConfig = None, prune_below: float = None):
    """Solve the LP-MAP relaxation with alternating-directions dual decomposition.

    Parameters
    ----------
    graph : FactorGraph
    config : SolverConfig, optional
    prune_below : float, optional
        Stop with status INFEASIBLE as soon as an evaluated dual value is at or
        below this bound (used by branch-and-bound).

    Returns
    -------
    SolveReport
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    graph.validate()
    reason = _infeasible_reason(graph)
    if reason:
        return _infeasible_report(reason)
    layout = _Layout(graph)
    pairs = [a for a, f in enumerate(graph.factors) if f.kind == PAIR]
    batch = _PairBatch(graph, layout, pairs)
    general = [_GeneralFactor(graph, layout, a)
               for a, f in enumerate(graph.factors) if f.kind != PAIR]

    p = np.concatenate([np.full(s, 1.0 / s) for s in layout.states]) if layout.states \
        else np.zeros(0)
    _pin_isolated(layout, p)
    lam = np.zeros(layout.num_slots)
    q = np.zeros(layout.num_slots)
    eta = float(config.eta)
    calls = 0
    rp = rd = math.inf
    dual = math.inf
    best_dual = math.inf
    best_primal, best_assign = -math.inf, layout.argmax_assignment(p)
    trace = []
    stats = {"lambda_sum_max": 0.0, "active_set_solves": 0, "support_violations": 0,
             "max_support_ratio": 0.0}
    status = MAX_ITERS
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    denom = float(layout.num_slots) or 1.0
    t = 0
    try:
        for t in range(1, config.max_iters + 1):
            with np.errstate(invalid="ignore"):
                a_flat = p[layout.gidx] + (layout.theta_edge + lam) / eta
            calls += batch.solve(a_flat, q, eta, config.caching)
            near = max(rp, rd) < NEAR_TOL_FACTOR * config.residual_tol
            inner = NEAR_TOL_INNER if near else config.inner_iters
            todo = [g for g in general if g.needs_solve(a_flat, eta, config.caching)]
            if pool is not None and len(todo) > 1:
                results = list(pool.map(lambda g: g.solve(a_flat, eta, inner), todo))
            else:
                results = [g.solve(a_flat, eta, inner) for g in todo]
            for g, (a_slice, q_slice, exact, support) in zip(todo, results):
                g.store(a_slice, q_slice, exact, eta)
                if support is not None:
                    stats["active_set_solves"] += 1
                    stats["max_support_ratio"] = max(stats["max_support_ratio"], support / g.bound)
                    if support > g.bound:
                        stats["support_violations"] += 1
            calls += len(todo)
            for g in general:
                q[g.slots] = g.last_q

            p_old = p
            p = layout.gather(q)
            for i in layout.isolated:
                p[layout.var_offset[i]:layout.var_offset[i + 1]] = \
                    p_old[layout.var_offset[i]:layout.var_offset[i + 1]]
            diff = q - p[layout.gidx]
            lam = lam - eta * diff
            rp = float(np.dot(diff, diff)) / denom
            move = p[layout.gidx] - p_old[layout.gidx]
            rd = float(np.dot(move, move)) / denom
            stats["lambda_sum_max"] = max(stats["lambda_sum_max"], layout.lambda_sum_max(lam))

            assign = layout.argmax_assignment(p)
            primal = evaluate(graph, assign)
            if primal > best_primal:
                best_primal, best_assign = primal, assign

            evaluated = False
            stop = None
            if config.early_stop:
                agree = diff.size == 0 or float(np.max(np.abs(diff))) <= AGREE_TOL
                still = float(np.max(np.abs(p - p_old))) <= AGREE_TOL if p.size else True
                if agree and still and _is_integral(layout, p):
                    dual = _dual_from_flat(layout, lam)
                    evaluated = True
                    if dual - primal <= GAP_TOL * max(1.0, abs(dual)):
                        stop = CERTIFIED_OPTIMAL
                if stop is None and rp < config.residual_tol and rd < config.residual_tol:
                    stop = CONVERGED
            last = stop is not None or t == config.max_iters
            if not evaluated and (t == 1 or t % DUAL_EVERY == 0 or last):
                dual = _dual_from_flat(layout, lam)
                evaluated = True
            if evaluated:
                best_dual = min(best_dual, dual)
            trace.append(TraceRow(t, dual, primal, rp, rd, eta, calls))
            if evaluated and prune_below is not None and best_dual <= prune_below:
                status = INFEASIBLE
                break
            if stop is not None:
                status = stop
                break
            if config.eta_adapt:
                eta = adjust_eta(rp, rd, eta, t, config)
    finally:
        if pool is not None:
            pool.shutdown()

    integral = _is_integral(layout, p)
    if status == CERTIFIED_OPTIMAL:
        best_assign, best_primal = assign, primal
    stats["wall_time"] = time.perf_counter() - start
    return SolveReport(status, best_dual, best_primal, best_assign, not integral, trace,
                       layout.split_vars(p), t, stats)


# ---------------------------------------------------------------------------
# Projected subgradient
# ---------------------------------------------------------------------------

def run_subgradient(graph: FactorGraph, config: SolverConfig = None):
    """Dual decomposition by projected subgradient with step ``subgrad_eta0 / t``.

    Each iteration solves every factor's local MAP problem, averages the
    resulting indicators per variable and moves the multipliers against the
    disagreement. Stops with a certificate once all local solutions agree.
    """
    config = config or SolverConfig(algorithm=SUBGRADIENT)
    start = time.perf_counter()
    graph.validate()
    reason = _infeasible_reason(graph)
    if reason:
        return _infeasible_report(reason)
    layout = _Layout(graph)
    iso_value = _isolated_value(layout)
    p = np.concatenate([np.full(s, 1.0 / s) for s in layout.states]) if layout.states \
        else np.zeros(0)
    _pin_isolated(layout, p)
    lam = np.zeros(layout.num_slots)
    denom = float(layout.num_slots) or 1.0
    calls = 0
    best_dual = math.inf
    best_primal, best_assign = -math.inf, layout.argmax_assignment(p)
    trace = []
    stats = {"lambda_sum_max": 0.0}
    status = MAX_ITERS
    t = 0
    for t in range(1, config.max_iters + 1):
        scores_flat = layout.theta_edge + lam
        qhat = np.zeros(layout.num_slots)
        dual = iso_value
        for a, f in enumerate(graph.factors):
            edges = layout.factor_edges[a]
            scores = [scores_flat[layout.edge_slices[e]] for e in edges]
            config_a, value = _factor_map(graph, f, scores)
            dual += value
            for e, y in zip(edges, config_a):
                qhat[layout.edge_slices[e].start + y] = 1.0
        calls += len(graph.factors)
        best_dual = min(best_dual, dual)
        p_old = p
        p = layout.gather(qhat)
        for i in layout.isolated:
            p[layout.var_offset[i]:layout.var_offset[i + 1]] = \
                p_old[layout.var_offset[i]:layout.var_offset[i + 1]]
        diff = qhat - p[layout.gidx]
        move = p[layout.gidx] - p_old[layout.gidx]
        rp = float(np.dot(diff, diff)) / denom
        rd = float(np.dot(move, move)) / denom
        assign = layout.argmax_assignment(p)
        primal = evaluate(graph, assign)
        if primal > best_primal:
            best_primal, best_assign = primal, assign
        step = config.subgrad_eta0 / t
        trace.append(TraceRow(t, dual, primal, rp, rd, step, calls))
        if config.early_stop and not np.any(diff):
            status = CERTIFIED_OPTIMAL
            best_assign, best_primal = assign, primal
            break
        lam = lam - step * diff
        stats["lambda_sum_max"] = max(stats["lambda_sum_max"], layout.lambda_sum_max(lam))
    stats["wall_time"] = time.perf_counter() - start
    return SolveReport(status, best_dual, best_primal, best_assign,
                       not _is_integral(layout, p), trace, layout.split_vars(p), t, stats)


def solve(graph: FactorGraph, config: SolverConfig = None):
    """Run the algorithm named by ``config.algorithm``."""
    config = config or SolverConfig()
    if config.algorithm == SUBGRADIENT:
        return run_subgradient(graph, config)
    return run_ad3(graph, config)


# ---------------------------------------------------------------------------
# Branch-and-bound
# ---------------------------------------------------------------------------

def _entropy(p):
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def _branch_variable(p, free):
    """Free variable with the most uncertain marginal; smallest index on ties.

    If every free marginal is integral, the one with the smallest peak is used.
    """
    ent = [_entropy(p[i]) for i in free]
    if max(ent) > 0:
        return free[ent.index(max(ent))]
    peaks = [float(np.max(p[i])) for i in free]
    return free[peaks.index(min(peaks))]


def _fixed(graph, fixes):
    node = graph.copy()
    for var, state in fixes.items():
        unary = node.variables[var].unary
        keep = unary[state]
        unary[:] = -np.inf
        unary[state] = keep
    return node


def branch_and_bound(graph: FactorGraph, config: SolverConfig = None,
                     max_depth: int = 64, max_nodes: int = 10 ** 4):
    """Exact MAP by depth-first branch-and-bound over the LP relaxation.

    Every node runs AD³ on the graph with some variables fixed (other states get
    a ``-inf`` unary). Nodes whose dual bound cannot beat the incumbent are
    pruned; otherwise the node branches on its most uncertain variable.

    Returns
    -------
    MapResult
        With ``nodes`` (number of AD³ runs) attached as an attribute.

    Raises
    ------
    BranchAndBoundBudgetError
        When ``max_nodes`` or ``max_depth`` is exceeded.
    """
    config = config or SolverConfig()
    best_value, best_assign = -math.inf, None
    nodes = 0
    stack = [{}]
    open_bounds = []
    while stack:
        fixes = stack.pop()
        if nodes >= max_nodes or len(fixes) > max_depth:
            gap = (max(open_bounds + [math.inf]) - best_value) if best_assign else math.inf
            raise BranchAndBoundBudgetError(
                f"branch-and-bound budget exhausted after {nodes} nodes",
                MapResult(best_assign, best_value) if best_assign else None, gap)
        nodes += 1
        node = _fixed(graph, fixes)
        report = run_ad3(node, config,
                         prune_below=best_value if best_assign is not None else None)
        if report.status == INFEASIBLE:
            continue
        if report.best_primal_value > best_value or (
                report.best_primal_value == best_value and best_assign is not None
                and report.assignment < best_assign):
            if math.isfinite(report.best_primal_value):
                best_value, best_assign = report.best_primal_value, report.assignment
        bound = report.best_dual
        if best_assign is not None and bound <= best_value:
            continue
        if report.status == CERTIFIED_OPTIMAL:
            continue
        if best_assign is not None and bound - best_value <= GAP_TOL * max(1.0, abs(bound)):
            continue
        free = [i for i in range(graph.num_variables) if i not in fixes]
        if not free:
            continue
        var = _branch_variable(report.p, free)
        order = sorted(range(len(report.p[var])), key=lambda y: (-report.p[var][y], y))
        order = [y for y in order if graph.variables[var].unary[y] != -np.inf]
        # push in reverse so the most likely state is explored first
        for y in reversed(order):
            stack.append({**fixes, var: y})
        open_bounds.append(bound)
    if best_assign is None:
        raise ValueError("graph has no feasible assignment")
    result = MapResult(best_assign, evaluate(graph, best_assign))
    result.nodes = nodes
    return result


def write_trace_csv(trace, path):
    """Write trace rows with 12 significant digits per float."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in trace:
            writer.writerow([row.iter] + [f"{x:.12g}" for x in row[1:6]] + [row.oracle_calls])
