"""Acceptance suite: one check per criterion, each at its stated tolerance.

Run under pytest (a summary block lists PASS/FAIL per criterion) or directly
with ``python3 tests/test_acceptance.py``.
"""
import functools
import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ad3.activeset import DenseOracle, SubproblemInput, solve_qp_active_set, support_bound
from ad3.bench import GeneratorSpec, gen_frustrated_cycle, gen_ising, gen_potts, gen_tree
from ad3.graph import binarize, brute_force_map
from ad3.logic import project_cone_a1, project_or, project_or_out, project_simplex
from ad3.pairwise import PairwiseCoefficients, pair_objective, solve_qp_pair
from ad3.solvers import (CERTIFIED_OPTIMAL, SUBGRADIENT, SolverConfig, branch_and_bound,
                         run_ad3, run_subgradient)
from oracles import PairGrid, polytope, project_by_enumeration

TREE_SEEDS = range(100)
ISING_SEEDS = range(50)
RHOS = (0.5, 1.0)


# ---------------------------------------------------------------------------
# shared suites
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def tree_suite():
    start = time.perf_counter()
    runs = []
    for seed in TREE_SEEDS:
        g = gen_tree(seed)
        report = run_ad3(g, SolverConfig(max_iters=2000, residual_tol=1e-6))
        runs.append((g, brute_force_map(g), report))
    return runs, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def ising_suite():
    start = time.perf_counter()
    runs = []
    for rho in RHOS:
        for seed in ISING_SEEDS:
            g = gen_ising(GeneratorSpec("ising", 4, 4, rho=rho, seed=seed))
            report = run_ad3(g, SolverConfig(eta=5.0, max_iters=500))
            runs.append((g, brute_force_map(g), report))
    return runs, time.perf_counter() - start


def _pair_input(c):
    """Dense two-variable factor whose closed-form coefficients equal ``c``."""
    c1, c2, c12 = c
    a = [np.array([0.0, 2 * c1 - 1]), np.array([0.0, 2 * c2 - 1])]
    table = np.array([0.0, 0.0, 0.0, 2 * c12])
    return a, table


@functools.lru_cache(maxsize=None)
def pairwise_suite():
    rng = np.random.default_rng(2024)
    grid = PairGrid(step=1e-3)
    rows = []
    for c in rng.uniform(-2, 2, size=(1000, 3)):
        z = solve_qp_pair(PairwiseCoefficients(*c))
        a, table = _pair_input(c)
        oracle = DenseOracle(table, (2, 2))
        sol, _ = solve_qp_active_set(oracle, SubproblemInput(a, oracle), max_inner=100)
        rows.append((c, z, grid.best_value(c), sol))
    return rows


@functools.lru_cache(maxsize=None)
def potts_binarized_suite():
    runs = []
    for seed in range(10):
        g = gen_potts(GeneratorSpec("potts", 3, 3, num_states=3, seed=seed))
        bg, _ = binarize(g)
        opt = brute_force_map(g).value
        opt_bin = brute_force_map(bg).value
        report = run_ad3(bg, SolverConfig(max_iters=1000))
        runs.append((opt, opt_bin, report))
    return runs


@functools.lru_cache(maxsize=None)
def caching_suite():
    g = gen_ising(GeneratorSpec("ising", 6, 6, rho=1.0, seed=0))
    on = run_ad3(g, SolverConfig(max_iters=500, caching=True, early_stop=False))
    off = run_ad3(g, SolverConfig(max_iters=500, caching=False, early_stop=False))
    return on, off


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1():
    runs, elapsed = tree_suite()
    converged = sum(1 for _, _, r in runs
                    if r.trace and r.trace[-1].r_primal < 1e-6 and r.trace[-1].r_dual < 1e-6)
    exact = sum(1 for _, bf, r in runs if r.assignment == bf.assignment)
    ok = converged == len(runs) and exact == len(runs) and elapsed < 30
    return ok, (f"trees: residuals<1e-6 {converged}/{len(runs)}, assignment == brute force "
                f"{exact}/{len(runs)}, {elapsed:.1f}s")


def criterion_2():
    runs, elapsed = ising_suite()
    certified = [(bf, r) for _, bf, r in runs if r.status == CERTIFIED_OPTIMAL]
    wrong = sum(1 for bf, r in certified if r.best_primal_value != bf.value)
    frac = len(certified) / len(runs)
    ok = wrong == 0 and frac >= 0.8 and elapsed < 120
    return ok, (f"4x4 Ising: certified {len(certified)}/{len(runs)} ({frac:.0%}), "
                f"certified but wrong {wrong}, {elapsed:.1f}s")


def criterion_3():
    violations, rows = 0, 0
    for runs, _ in (tree_suite(), ising_suite()):
        for _, bf, r in runs:
            rows += len(r.trace)
            violations += sum(1 for row in r.trace if row.dual < bf.value - 1e-9)
    return violations == 0, f"dual >= optimum - 1e-9 on {rows} traced rows, violations {violations}"


PROJ = {"simplex": project_simplex, "or": project_or, "or_out": project_or_out,
        "a1": project_cone_a1}


def criterion_4():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_ref = worst_idem = worst_member = 0.0
    for kind, proj in PROJ.items():
        for k in (1, 2, 3, 4):
            A, b, E, f = polytope(kind, k)
            Z = rng.uniform(-2, 3, size=(1000, A.shape[1]))
            ref = project_by_enumeration(A, b, E, f, Z)
            got = np.array([proj(z) for z in Z])
            again = np.array([proj(z) for z in got])
            worst_ref = max(worst_ref, float(np.max(np.abs(got - ref))))
            worst_idem = max(worst_idem, float(np.max(np.abs(again - got))))
            viol = np.max(got @ A.T - b)
            if len(E):
                viol = max(viol, float(np.max(np.abs(got @ E.T - f))))
            worst_member = max(worst_member, float(viol))
    elapsed = time.perf_counter() - start
    ok = worst_ref <= 1e-8 and worst_idem <= 1e-12 and worst_member <= 1e-12 and elapsed < 60
    return ok, (f"projections vs enumeration max err {worst_ref:.1e}, idempotence "
                f"{worst_idem:.1e}, membership {worst_member:.1e}, {elapsed:.1f}s")


def _pair_feasible(z, tol=1e-12):
    z1, z2, z12 = z
    return (z12 >= -tol and z12 <= min(z1, z2) + tol and z12 >= z1 + z2 - 1 - tol
            and -tol <= z1 <= 1 + tol and -tol <= z2 <= 1 + tol)


def criterion_5():
    rows = pairwise_suite()
    beaten = sum(1 for c, z, grid_best, _ in rows if pair_objective(c, z) > grid_best + 1e-6)
    infeasible = sum(1 for _, z, _, _ in rows if not _pair_feasible(z))
    mismatch = max(max(abs(sol.u[0][1] - z.z1), abs(sol.u[1][1] - z.z2))
                   for _, z, _, sol in rows)
    ok = beaten == 0 and infeasible == 0 and mismatch <= 1e-6
    return ok, (f"1000 closed-form solves: worse than grid {beaten}, infeasible {infeasible}, "
                f"max gap to active set {mismatch:.1e}")


def criterion_6():
    solves = violations = 0
    for runs, _ in (tree_suite(), ising_suite()):
        for _, _, r in runs:
            solves += r.stats["active_set_solves"]
            violations += r.stats["support_violations"]
    bound = support_bound((2, 2))
    for _, _, _, sol in pairwise_suite():
        solves += 1
        violations += sol.support > bound
    return violations == 0, f"{solves} active-set solves, support-bound violations {violations}"


def criterion_7():
    reports = [r for runs, _ in (tree_suite(), ising_suite()) for _, _, r in runs]
    reports += [r for _, _, r in potts_binarized_suite()]
    reports += list(caching_suite())
    worst = max(r.stats["lambda_sum_max"] for r in reports)
    return worst < 1e-10, f"max |sum of multipliers| over {len(reports)} runs {worst:.1e}"


def criterion_8():
    found, exact, most_nodes, seed = 0, 0, 0, 0
    while found < 20 and seed < 1000:
        g = gen_frustrated_cycle(seed)
        seed += 1
        if not run_ad3(g).fractional:
            continue
        found += 1
        res = branch_and_bound(g, max_nodes=1000)
        most_nodes = max(most_nodes, res.nodes)
        exact += res.value == brute_force_map(g).value
    ok = found == 20 and exact == 20 and most_nodes <= 1000
    return ok, f"frustrated cycles (fractional root) {found}, exact {exact}/20, max nodes {most_nodes}"


def criterion_9():
    runs = potts_binarized_suite()
    equal = sum(1 for opt, opt_bin, _ in runs if abs(opt - opt_bin) <= 1e-9)
    below = sum(1 for opt, _, r in runs for row in r.trace if row.dual < opt - 1e-9)
    ok = equal == len(runs) and below == 0
    return ok, f"3x3 Potts binarized: optima equal {equal}/{len(runs)}, dual below optimum {below}"


def criterion_10():
    on, off = caching_suite()
    bits = lambda trace: [tuple(float(x).hex() for x in row[1:6]) + (row.iter,) for row in trace]
    same = bits(on.trace) == bits(off.trace)
    ratio = on.oracle_calls / off.oracle_calls
    ok = same and ratio < 0.7
    return ok, (f"6x6 Ising 500 iterations: traces identical {same}, oracle calls "
                f"{on.oracle_calls}/{off.oracle_calls} = {ratio:.1%}")


def criterion_11():
    runs, _ = tree_suite()
    good = 0
    for g, bf, _ in runs:
        r = run_subgradient(g, SolverConfig(algorithm=SUBGRADIENT, subgrad_eta0=1.0,
                                            max_iters=5000))
        good += r.status == CERTIFIED_OPTIMAL and r.best_primal_value == bf.value
    frac = good / len(runs)
    return frac >= 0.9, f"subgradient certifies the optimum on {good}/{len(runs)} trees"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def _line(n, ok, detail):
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, acceptance_log):
    ok, detail = CRITERIA[n - 1]()
    line = _line(n, ok, detail)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for n, crit in enumerate(CRITERIA, start=1):
        ok, detail = crit()
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
