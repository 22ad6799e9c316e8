import itertools

import numpy as np
import pytest

from ad3.activeset import (ActiveSetState, DenseOracle, InfeasibleFactorError, SequenceOracle,
                           SubproblemInput, common_values, dense_map_oracle, solve_kkt,
                           solve_qp_active_set, support_bound, viterbi_map_oracle)
from ad3.graph import FactorGraph, brute_force_map
from ad3.pairwise import compute_pair_coefficients, solve_qp_pair
from oracles import factor_qp_reference


def _state(configs):
    gram = np.array([[common_values(c, d) for d in configs] for c in configs], dtype=float)
    return ActiveSetState(list(configs), gram, np.full(len(configs), 1.0 / len(configs)))


def test_kkt_singleton():
    a = [np.array([0.2, 0.7]), np.array([0.1, 0.4]), np.array([0.0, 0.3])]
    state = _state([(1, 0, 1)])
    v, tau = solve_kkt(state, a, [0.5])
    assert v.tolist() == [1.0]
    assert tau == pytest.approx(0.7 + 0.1 + 0.3 + 0.5 - 3)


def test_kkt_symmetric_pair():
    a = [np.zeros(2), np.zeros(2)]
    state = _state([(0, 0), (1, 1)])
    v, _ = solve_kkt(state, a, [1.0, 1.0])
    np.testing.assert_allclose(v, [0.5, 0.5])


def test_kkt_matches_dense_solve():
    rng = np.random.default_rng(2)
    shape = (2, 3, 2)
    all_configs = list(itertools.product(*[range(s) for s in shape]))
    for _ in range(50):
        k = int(rng.integers(1, 4))
        configs = [all_configs[i] for i in rng.choice(len(all_configs), k, replace=False)]
        state = _state(configs)
        if np.linalg.matrix_rank(state.gram) < k:
            continue
        a = [rng.normal(size=s) for s in shape]
        b = rng.normal(size=k)
        v, tau = solve_kkt(state, a, b)
        K = np.block([[state.gram, np.ones((k, 1))], [np.ones((1, k)), np.zeros((1, 1))]])
        rhs = np.append([sum(a[i][c[i]] for i in range(3)) + b[r] for r, c in enumerate(configs)],
                        1.0)
        ref = np.linalg.solve(K, rhs)
        np.testing.assert_allclose(np.append(v, tau), ref, atol=1e-10)


def test_dense_oracle_examples():
    table = np.zeros((2, 2))
    table[1, 0] = 1.0
    assert dense_map_oracle([np.zeros(2), np.zeros(2)], table)[0] == (1, 0)
    assert dense_map_oracle([np.zeros(2), np.zeros(2)], np.zeros((2, 2)))[0] == (0, 0)
    with pytest.raises(InfeasibleFactorError):
        dense_map_oracle([np.zeros(2)], np.full(2, -np.inf))


def test_dense_oracle_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(30):
        shape = tuple(int(s) for s in rng.integers(2, 4, size=3))
        table = rng.normal(size=shape)
        g = FactorGraph()
        for s in shape:
            g.add_variable(s)
        g.add_dense((0, 1, 2), table.ravel())
        config, value = dense_map_oracle([np.zeros(s) for s in shape], table)
        ref = brute_force_map(g)
        assert config == ref.assignment and value == pytest.approx(ref.value)


def test_viterbi_examples():
    scores = [np.zeros(3), np.zeros(2), np.zeros(3)]
    trans = [np.zeros((3, 2)), np.zeros((2, 3))]
    assert viterbi_map_oracle(scores, trans)[0] == (0, 0, 0)
    with pytest.raises(ValueError):
        viterbi_map_oracle(scores, [np.zeros((3, 2))])


def test_viterbi_length_two_equals_dense():
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = [rng.normal(size=3), rng.normal(size=4)]
        m = rng.normal(size=(3, 4))
        c1, v1 = viterbi_map_oracle(s, [m])
        c2, v2 = dense_map_oracle(s, m)
        assert c1 == c2 and v1 == pytest.approx(v2)


def test_viterbi_matches_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        states = [int(x) for x in rng.integers(1, 5, size=n)]
        scores = [rng.normal(size=s) for s in states]
        trans = [rng.normal(size=(states[t], states[t + 1])) for t in range(n - 1)]
        best = max(itertools.product(*[range(s) for s in states]),
                   key=lambda c: sum(scores[t][y] for t, y in enumerate(c))
                   + sum(trans[t][c[t], c[t + 1]] for t in range(n - 1)))
        config, value = SequenceOracle(trans).compute_map(scores)
        assert config == best
        ref = sum(scores[t][y] for t, y in enumerate(config)) \
            + sum(trans[t][config[t], config[t + 1]] for t in range(n - 1))
        assert value == pytest.approx(ref)


def test_vertex_solution():
    table = np.zeros(4)
    table[2] = 100.0
    oracle = DenseOracle(table, (2, 2))
    inp = SubproblemInput([np.full(2, 0.5), np.full(2, 0.5)], oracle)
    sol, _ = solve_qp_active_set(oracle, inp, max_inner=50)
    assert sol.exact
    np.testing.assert_allclose(sol.u[0], [0, 1])
    np.testing.assert_allclose(sol.u[1], [1, 0])
    assert sol.iterations == 1


def test_matches_pairwise_closed_form():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a1, a2 = rng.normal(size=2), rng.normal(size=2)
        b = rng.normal(size=4)
        oracle = DenseOracle(b, (2, 2))
        sol, _ = solve_qp_active_set(oracle, SubproblemInput([a1, a2], oracle), max_inner=100)
        assert sol.exact
        z = solve_qp_pair(compute_pair_coefficients(a1, a2, b))
        assert sol.u[0][1] == pytest.approx(z.z1, abs=1e-6)
        assert sol.u[1][1] == pytest.approx(z.z2, abs=1e-6)


def test_matches_projected_gradient_reference():
    rng = np.random.default_rng(8)
    for shape in [(3, 2), (2, 2, 2), (3, 3)]:
        for _ in range(5):
            a = [rng.normal(size=s) for s in shape]
            table = rng.normal(size=int(np.prod(shape)))
            oracle = DenseOracle(table, shape)
            sol, _ = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=200)
            ref = factor_qp_reference(a, table, shape)
            for u, r in zip(sol.u, ref):
                np.testing.assert_allclose(u, r, atol=1e-5)


def test_support_bound_and_simplex():
    rng = np.random.default_rng(9)
    shape = (2, 2, 2)
    assert support_bound(shape) == 4
    for _ in range(200):
        a = [rng.normal(size=2) for _ in shape]
        oracle = DenseOracle(rng.normal(size=8), shape)
        sol, state = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=100)
        weights = np.array([w for _, w in sol.v_sparse])
        assert sol.support <= 4
        assert len(state.workset) <= 4
        assert np.all(weights >= 0) and weights.sum() == pytest.approx(1.0)
        assert np.all(np.diag(state.gram) == 3)
        assert np.all((state.gram >= 0) & (state.gram <= 3) & (state.gram == np.round(state.gram)))


def test_primal_objective_never_increases():
    rng = np.random.default_rng(10)
    for _ in range(100):
        shape = (3, 2, 2)
        a = [rng.normal(size=s) for s in shape]
        oracle = DenseOracle(rng.normal(size=12), shape)
        sol, _ = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=100,
                                     record=True)
        trace = np.array(sol.objective_trace)
        assert np.all(np.diff(trace) <= 1e-10)


def test_warm_start_reuses_workset():
    rng = np.random.default_rng(11)
    shape = (3, 3)
    table = rng.normal(size=9)
    oracle = DenseOracle(table, shape)
    a = [rng.normal(size=3) for _ in shape]
    sol, state = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=100)
    again, _ = solve_qp_active_set(oracle, SubproblemInput(a, oracle), warm=state, max_inner=100)
    assert again.exact and again.oracle_calls == 1
    for u, v in zip(sol.u, again.u):
        np.testing.assert_allclose(u, v, atol=1e-12)


def test_forbidden_configurations_never_enter():
    table = np.array([-np.inf, 0.0, 0.0, -np.inf])
    oracle = DenseOracle(table, (2, 2))
    a = [np.array([0.0, 0.0]), np.array([0.0, 0.0])]
    sol, state = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=50)
    assert sol.exact
    assert all(np.isfinite(table[2 * c[0] + c[1]]) for c in state.workset)
    np.testing.assert_allclose(sol.u[0], [0.5, 0.5])


def test_sequence_oracle_subproblem():
    rng = np.random.default_rng(12)
    trans = [rng.normal(size=(2, 3)), rng.normal(size=(3, 2))]
    seq = SequenceOracle(trans)
    dense = np.zeros((2, 3, 2))
    for c in itertools.product(range(2), range(3), range(2)):
        dense[c] = trans[0][c[0], c[1]] + trans[1][c[1], c[2]]
    a = [rng.normal(size=s) for s in (2, 3, 2)]
    s1, _ = solve_qp_active_set(seq, SubproblemInput(a, seq), max_inner=200)
    d = DenseOracle(dense, (2, 3, 2))
    s2, _ = solve_qp_active_set(d, SubproblemInput(a, d), max_inner=200)
    for u, v in zip(s1.u, s2.u):
        np.testing.assert_allclose(u, v, atol=1e-9)
