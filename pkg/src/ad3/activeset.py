"""Active-set solver for the quadratic subproblem of an arbitrary factor.

The solver only touches the factor through a MAP oracle, so any factor whose
local MAP problem can be solved (dense tables, chains via Viterbi, ...) gets an
exact quadratic subproblem solver for free. The working set holds factor
configurations; the KKT system is built from their Gram matrix, whose entries
count the variables on which two configurations agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-12
NEG_CLAMP = 1e-12
SAME_TOL = 1e-12


class InfeasibleFactorError(ValueError):
    """Every configuration of a factor has score -inf."""


class DegenerateWorksetError(RuntimeError):
    pass


class OracleInconsistencyError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# MAP oracles
# ---------------------------------------------------------------------------

def dense_map_oracle(scores, table):
    """Best configuration of a dense factor under per-variable score adjustments.

    Parameters
    ----------
    scores : sequence of 1-D arrays
        One adjustment vector per incident variable.
    table : ndarray
        Log-potential table of shape ``(len(s) for s in scores)``.

    Returns
    -------
    (tuple, float)
        The maximising configuration (lexicographically smallest on ties) and its
        total score.
    """
    table = np.asarray(table, dtype=float)
    shape = tuple(len(s) for s in scores)
    total = table.reshape(shape).copy()
    k = len(shape)
    for i, s in enumerate(scores):
        idx = [None] * k
        idx[i] = slice(None)
        total = total + np.asarray(s, dtype=float)[tuple(idx)]
    flat = total.ravel()
    best = int(np.argmax(flat))
    if flat[best] == -np.inf:
        raise InfeasibleFactorError("all configurations have score -inf")
    return tuple(int(x) for x in np.unravel_index(best, shape)), float(flat[best])


def viterbi_map_oracle(scores, transitions):
    """Max-sum dynamic program over a chain.

    ``scores[t]`` scores the state at position ``t``; ``transitions[t]`` scores the
    pair at positions ``(t, t+1)``. Ties resolve to the lowest state both in the
    backpointers and at the final position.
    """
    scores = [np.asarray(s, dtype=float) for s in scores]
    if len(transitions) != len(scores) - 1:
        raise ValueError(f"{len(scores)} positions need {len(scores) - 1} transition tables, "
                         f"got {len(transitions)}")
    for t, m in enumerate(transitions):
        if np.shape(m) != (len(scores[t]), len(scores[t + 1])):
            raise ValueError(f"transition {t} has shape {np.shape(m)}")
    delta = scores[0]
    back = []
    for t, m in enumerate(transitions):
        cand = delta[:, None] + np.asarray(m, dtype=float)
        arg = np.argmax(cand, axis=0)
        back.append(arg)
        delta = cand[arg, np.arange(cand.shape[1])] + scores[t + 1]
    last = int(np.argmax(delta))
    if delta[last] == -np.inf:
        raise InfeasibleFactorError("all configurations have score -inf")
    config = [last]
    for arg in reversed(back):
        config.append(int(arg[config[-1]]))
    config = tuple(reversed(config))
    value = sum(float(scores[t][y]) for t, y in enumerate(config))
    value += sum(float(transitions[t][config[t], config[t + 1]]) for t in range(len(transitions)))
    return config, value


class MapOracle:
    """Local MAP solver for one factor.

    Subclasses implement :meth:`compute_map` (best configuration under
    per-variable score adjustments, returning ``(config, total_score)``) and
    :meth:`score` (the factor's own log-potential at a configuration).
    """

    num_states: tuple

    def compute_map(self, scores):
        raise NotImplementedError

    def score(self, config):
        raise NotImplementedError


class DenseOracle(MapOracle):
    def __init__(self, table, num_states):
        self.num_states = tuple(num_states)
        self.table = np.asarray(table, dtype=float).reshape(self.num_states)

    def compute_map(self, scores):
        return dense_map_oracle(scores, self.table)

    def score(self, config):
        return float(self.table[tuple(config)])


class SequenceOracle(MapOracle):
    def __init__(self, transitions):
        self.transitions = [np.asarray(m, dtype=float) for m in transitions]
        self.num_states = tuple([m.shape[0] for m in self.transitions]
                                + [self.transitions[-1].shape[1]]) if self.transitions else None

    def compute_map(self, scores):
        if self.num_states is None:
            # single-position chain
            s = np.asarray(scores[0], dtype=float)
            y = int(np.argmax(s))
            if s[y] == -np.inf:
                raise InfeasibleFactorError("all configurations have score -inf")
            return (y,), float(s[y])
        return viterbi_map_oracle(scores, self.transitions)

    def score(self, config):
        return float(sum(m[config[t], config[t + 1]] for t, m in enumerate(self.transitions)))


# ---------------------------------------------------------------------------
# Active set
# ---------------------------------------------------------------------------

def support_bound(num_states):
    """Maximum support size of an optimal factor marginal."""
    return sum(num_states) - len(num_states) + 1


def common_values(c1, c2):
    return sum(1 for x, y in zip(c1, c2) if x == y)


@dataclass
class SubproblemInput:
    """Linear terms of one factor's quadratic subproblem.

    ``a`` holds one vector per incident variable; the factor term is
    ``b(config) = scale * oracle.score(config)`` (``scale`` is the inverse
    penalty constant).
    """

    a: list
    oracle: MapOracle
    scale: float = 1.0
    _b_cache: dict = field(default_factory=dict, repr=False)

    def b(self, config):
        val = self._b_cache.get(config)
        if val is None:
            val = self.scale * self.oracle.score(config)
            self._b_cache[config] = val
        return val

    def linear(self, config):
        """m_r^T a for the indicator column of ``config``."""
        return float(sum(ai[y] for ai, y in zip(self.a, config)))

    def best_response(self, w):
        """Configuration maximising ``m_r^T w + b_r`` and that maximum."""
        config, value = self.oracle.compute_map([wi / self.scale for wi in w])
        return config, value * self.scale


@dataclass
class ActiveSetState:
    workset: list = field(default_factory=list)
    gram: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau: float = 0.0
    exact: bool = False

    def copy(self):
        return ActiveSetState(list(self.workset), self.gram.copy(), self.v.copy(),
                              self.tau, self.exact)


@dataclass
class QpSolution:
    u: list
    v_sparse: list
    tau: float
    exact: bool
    iterations: int
    oracle_calls: int
    objective_trace: list = None

    @property
    def support(self):
        return sum(1 for _, w in self.v_sparse if w > 0.0)


def solve_kkt(state, a, b):
    """Solve the bordered Gram system of the working set.

    Parameters
    ----------
    state : ActiveSetState
        Supplies ``workset`` and ``gram``.
    a : SubproblemInput or sequence of per-variable vectors
    b : sequence of float
        Factor scores of the working-set configurations.

    Returns
    -------
    (ndarray, float)
        Weights ``v`` over the working set and the multiplier ``tau``.

    Raises
    ------
    DegenerateWorksetError
        If the system is singular and its right-hand side is inconsistent.
    """
    k = len(state.workset)
    if k == 0:
        raise DegenerateWorksetError("empty working set")
    avecs = a.a if isinstance(a, SubproblemInput) else a
    rhs = np.empty(k + 1)
    for r, config in enumerate(state.workset):
        rhs[r] = sum(ai[y] for ai, y in zip(avecs, config)) + b[r]
    rhs[k] = 1.0
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = state.gram
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
        if np.all(np.isfinite(sol)) and np.allclose(K @ sol, rhs, rtol=1e-9, atol=1e-9):
            return sol[:k], float(sol[k])
    except np.linalg.LinAlgError:
        pass
    # singular: least-squares solution differs from the exact one by a null-space vector
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=PIVOT_TOL)
    if not np.allclose(K @ sol, rhs, rtol=1e-8, atol=1e-8):
        raise DegenerateWorksetError("singular KKT system with inconsistent right-hand side")
    return sol[:k], float(sol[k])


def _remove(state, k):
    keep = [i for i in range(len(state.workset)) if i != k]
    state.workset.pop(k)
    state.gram = state.gram[np.ix_(keep, keep)]
    state.v = state.v[keep]


def _insert(state, config, inp):
    """Append ``config`` with zero weight, stepping along a null-space direction of
    the enlarged Gram matrix first if the new column is linearly dependent."""
    k = len(state.workset)
    row = np.array([common_values(config, c) for c in state.workset], dtype=float)
    gram = np.empty((k + 1, k + 1))
    gram[:k, :k] = state.gram
    gram[k, :k] = row
    gram[:k, k] = row
    gram[k, k] = len(config)
    state.workset.append(config)
    state.gram = gram
    state.v = np.append(state.v, 0.0)
    if k == 0:
        return
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] > 1e-9 * max(1.0, evals[-1]):
        return
    d = evecs[:, 0]
    if abs(d[k]) < 1e-12:
        return
    d = d / d[k]
    # along d the marginals M v are unchanged while the factor score improves;
    # move until some weight hits zero and drop that configuration
    neg = np.nonzero(d[:k] < -1e-12)[0]
    if neg.size == 0:
        return
    ratios = state.v[neg] / -d[neg]
    j = int(np.argmin(ratios))
    step = float(ratios[j])
    state.v = np.maximum(state.v + step * d, 0.0)
    state.v[k] = max(state.v[k], 0.0)
    block = int(neg[j])
    state.v[block] = 0.0
    _remove(state, block)
    total = state.v.sum()
    if total > 0:
        state.v = state.v / total


def marginals(workset, v, num_states):
    u = [np.zeros(s) for s in num_states]
    for config, w in zip(workset, v):
        for i, y in enumerate(config):
            u[i][y] += w
    return u


def _primal_objective(inp, workset, v, num_states):
    u = marginals(workset, v, num_states)
    quad = 0.5 * sum(float(np.sum((ui - ai) ** 2)) for ui, ai in zip(u, inp.a))
    return quad - sum(w * inp.b(c) for c, w in zip(workset, v))


def solve_qp_active_set(oracle, inp, warm=None, max_inner=10, record=False):
    """Solve ``min 1/2 ||M v - a||^2 - b^T v`` over the simplex by an active-set
    method that queries ``oracle`` for the most violated configuration.

    Parameters
    ----------
    oracle : MapOracle
    inp : SubproblemInput
    warm : ActiveSetState, optional
        State from a previous call; its working set and weights seed the search.
    max_inner : int
        Iteration cap. When it is hit the current (feasible) iterate is returned
        with ``exact=False``.
    record : bool
        Keep the primal objective after every iteration (for diagnostics).

    Returns
    -------
    (QpSolution, ActiveSetState)
    """
    if max_inner < 1:
        raise ValueError("max_inner must be >= 1")
    num_states = oracle.num_states or (len(inp.a[0]),)
    calls = 0
    if warm is not None and warm.workset:
        state = warm.copy()
        state.exact = False
    else:
        config, _ = inp.best_response(inp.a)
        calls += 1
        state = ActiveSetState([config], np.array([[float(len(config))]]), np.array([1.0]))
    trace = [] if record else None
    if record:
        trace.append(_primal_objective(inp, state.workset, state.v, num_states))
    it = 0
    while it < max_inner:
        it += 1
        b = [inp.b(c) for c in state.workset]
        try:
            v_hat, tau = solve_kkt(state, inp, b)
        except DegenerateWorksetError:
            if len(state.workset) == 1:
                raise
            _remove(state, len(state.workset) - 1)
            state.v = state.v / state.v.sum()
            continue
        v_hat = np.where((v_hat < 0) & (v_hat > -NEG_CLAMP), 0.0, v_hat)
        state.tau = tau
        if np.max(np.abs(v_hat - state.v)) <= SAME_TOL:
            state.v = v_hat
            u = marginals(state.workset, v_hat, num_states)
            w = [ai - ui for ai, ui in zip(inp.a, u)]
            config, value = inp.best_response(w)
            calls += 1
            slack = 1e-10 * max(1.0, abs(tau))
            if value <= tau + slack:
                state.exact = True
                break
            if config in state.workset:
                if value - tau > 1e-6 * max(1.0, abs(tau)):
                    raise OracleInconsistencyError(
                        f"oracle returned working-set configuration {config} "
                        f"violating the stopping test by {value - tau:g}")
                state.exact = True
                break
            _insert(state, config, inp)
        else:
            alpha, block = 1.0, None
            for k in range(len(state.v)):
                if state.v[k] > v_hat[k]:
                    ratio = state.v[k] / (state.v[k] - v_hat[k])
                    if ratio < alpha:
                        alpha, block = ratio, k
            state.v = (1.0 - alpha) * state.v + alpha * v_hat
            if block is not None:
                state.v[block] = 0.0
                _remove(state, block)
            state.v = np.maximum(state.v, 0.0)
            state.v = state.v / state.v.sum()
        if record:
            trace.append(_primal_objective(inp, state.workset, state.v, num_states))
    u = marginals(state.workset, state.v, num_states)
    solution = QpSolution(
        u=u,
        v_sparse=[(c, float(w)) for c, w in zip(state.workset, state.v)],
        tau=state.tau,
        exact=state.exact,
        iterations=it,
        oracle_calls=calls,
        objective_trace=trace,
    )
    return solution, state
