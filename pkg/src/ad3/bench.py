"""Seeded synthetic instances and the ``ad3`` command-line harness.

Random numbers come from a fixed, pure-Python generator so that an instance is
defined by its parameters alone, on any platform:

* seeding: the 64-bit seed drives a splitmix64 stream whose first four outputs
  form the generator state (splitmix64 with seed 0 first yields
  ``0xe220a8397b1dcdaf``);
* stream: xoshiro256** (state ``[1, 2, 3, 4]`` yields ``11520`` then ``0``);
* uniform doubles: ``(x >> 11) * 2**-53``, scaled to ``[lo, hi)``.

Grid generators number variables row-major. Couplings are drawn after all
unaries, in factor order: for each cell, the edge to its right neighbour and
then the edge to the cell below.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .graph import FactorGraph, GraphFormatError, GraphValidationError, parse_graph, serialize_graph
from .solvers import (AD3, CERTIFIED_OPTIMAL, CONVERGED, SUBGRADIENT, BranchAndBoundBudgetError,
                      SolverConfig, branch_and_bound, run_ad3, run_subgradient, write_trace_csv)

MASK64 = (1 << 64) - 1
ISING = "ISING"
POTTS = "POTTS"


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed=0, state=None):
        if state is None:
            sm = SplitMix64(seed)
            state = [sm.next() for _ in range(4)]
        self.s = [x & MASK64 for x in state]

    def next_u64(self):
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self):
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def randint(self, n):
        """Integer in ``[0, n)`` (multiply-shift on the top 53 bits)."""
        return min(int(self.random() * n), n - 1)


@dataclass
class GeneratorSpec:
    family: str = ISING
    rows: int = 4
    cols: int = 4
    num_states: int = 3
    rho: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.family = self.family.upper()
        if self.family not in (ISING, POTTS):
            raise ValueError(f"unknown family {self.family!r}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.family == POTTS and self.num_states < 2:
            raise ValueError("Potts grids need at least 2 states")


def grid_edges(rows, cols):
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return edges


def gen_ising(spec: GeneratorSpec) -> FactorGraph:
    """Binary grid with random fields and random couplings on the 11 entry."""
    if spec.family != ISING:
        raise ValueError("gen_ising needs an ISING spec")
    rng = Xoshiro256(spec.seed)
    g = FactorGraph()
    for _ in range(spec.rows * spec.cols):
        g.add_variable(2, [0.0, rng.uniform(-1.0, 1.0)])
    for u, v in grid_edges(spec.rows, spec.cols):
        g.add_pair(u, v, [0.0, 0.0, 0.0, rng.uniform(-spec.rho, spec.rho)])
    g.validate()
    return g


def gen_potts(spec: GeneratorSpec) -> FactorGraph:
    """Grid with random unaries and diagonal (agreement) couplings."""
    if spec.family != POTTS:
        raise ValueError("gen_potts needs a POTTS spec")
    rng = Xoshiro256(spec.seed)
    k = spec.num_states
    g = FactorGraph()
    for _ in range(spec.rows * spec.cols):
        g.add_variable(k, [rng.uniform(-1.0, 1.0) for _ in range(k)])
    for u, v in grid_edges(spec.rows, spec.cols):
        table = np.zeros((k, k))
        for y in range(k):
            table[y, y] = rng.uniform(-10.0, 10.0)
        g.add_dense((u, v), table)
    g.validate()
    return g


def generate(spec: GeneratorSpec) -> FactorGraph:
    return gen_ising(spec) if spec.family == ISING else gen_potts(spec)


def gen_tree(seed, num_vars=10, max_states=3):
    """Random tree of PAIR and DENSE factors.

    Variable ``v > 0`` attaches to a uniformly chosen earlier variable. Each
    variable is binary with probability 1/2, otherwise it has ``max_states``
    states. Edges between two binary variables are PAIR or DENSE with equal
    probability; all other edges are DENSE.
    """
    rng = Xoshiro256(seed)
    g = FactorGraph()
    for _ in range(num_vars):
        s = 2 if max_states == 2 or rng.random() < 0.5 else max_states
        g.add_variable(s, [rng.uniform(-1.0, 1.0) for _ in range(s)])
    for v in range(1, num_vars):
        u = rng.randint(v)
        su, sv = g.variables[u].num_states, g.variables[v].num_states
        table = [rng.uniform(-2.0, 2.0) for _ in range(su * sv)]
        if su == sv == 2 and rng.random() < 0.5:
            g.add_pair(u, v, table)
        else:
            g.add_dense((u, v), table)
    g.validate()
    return g


def gen_frustrated_cycle(seed, length=None):
    """Binary cycle with mostly repulsive couplings and weak fields.

    Repulsive edges reward disagreement (table ``(-w, w, w, -w)``). An odd
    cycle of them cannot be satisfied; on even cycles one edge is made
    attractive to the same effect. The length is drawn from 4..6 unless given.
    """
    rng = Xoshiro256(seed)
    n = length if length is not None else 4 + rng.randint(3)
    g = FactorGraph()
    for _ in range(n):
        g.add_variable(2, [0.0, rng.uniform(-0.1, 0.1)])
    for k in range(n):
        w = rng.uniform(0.5, 1.5)
        sign = -1.0 if (n % 2 == 0 and k == n - 1) else 1.0
        g.add_pair(k, (k + 1) % n, [-sign * w, sign * w, sign * w, -sign * w])
    g.validate()
    return g


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="ad3", description="LP-MAP inference on factor graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic grid instance")
    gen.add_argument("--family", choices=["ising", "potts"], default="ising")
    gen.add_argument("--rows", type=int, default=4)
    gen.add_argument("--cols", type=int, default=4)
    gen.add_argument("--rho", type=float, default=1.0)
    gen.add_argument("--states", type=int, default=3, help="states per variable (potts)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", help="output path (default: standard output)")

    for name in ("solve", "exact"):
        p = sub.add_parser(name, help="run a solver on a graph file"
                           if name == "solve" else "exact MAP by branch-and-bound")
        p.add_argument("--input", required=True)
        p.add_argument("--trace", help="trace CSV path (default: next to the input)")
        p.add_argument("--algorithm", choices=["ad3", "psg", "both"], default="ad3")
        p.add_argument("--eta", type=float, default=1.0)
        p.add_argument("--no-eta-adapt", action="store_true")
        p.add_argument("--subgrad-eta0", type=float, default=1.0)
        p.add_argument("--max-iters", type=int, default=1000)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--inner-iters", type=int, default=10)
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--exact", action="store_true")
        p.add_argument("--require-convergence", action="store_true")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
    return parser


def _trace_paths(args, algorithms):
    if args.trace and len(algorithms) == 1:
        return {algorithms[0]: args.trace}
    base = args.trace or args.input
    stem = base[:-4] if base.endswith(".csv") else os.path.splitext(base)[0]
    return {alg: f"{stem}.{alg}.csv" for alg in algorithms}


def _config(args, algorithm):
    return SolverConfig(
        algorithm=AD3 if algorithm == "ad3" else SUBGRADIENT,
        eta=args.eta, eta_adapt=not args.no_eta_adapt, max_iters=args.max_iters,
        residual_tol=args.tol, subgrad_eta0=args.subgrad_eta0, inner_iters=args.inner_iters,
        caching=not args.no_cache, seed=args.seed, threads=args.threads)


def _cmd_gen(args, out):
    spec = GeneratorSpec(args.family, args.rows, args.cols, args.states, args.rho, args.seed)
    text = serialize_graph(generate(spec))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def _cmd_solve(args, out):
    with open(args.input) as fh:
        graph = parse_graph(fh.read())
    algorithms = ["ad3", "psg"] if args.algorithm == "both" else [args.algorithm]
    if args.exact:
        config = _config(args, "ad3")
        start = time.perf_counter()
        try:
            result = branch_and_bound(graph, config)
        except BranchAndBoundBudgetError as exc:
            print(f"exact budget-exhausted gap={exc.gap:.12g}", file=out)
            return 2
        assignment = " ".join(str(y) for y in result.assignment)
        print(f"exact value={result.value:.12g} nodes={result.nodes} "
              f"time={time.perf_counter() - start:.3f}s assignment={assignment}", file=out)
        return 0
    paths = _trace_paths(args, algorithms)
    code = 0
    for alg in algorithms:
        config = _config(args, alg)
        runner = run_ad3 if alg == "ad3" else run_subgradient
        report = runner(graph, config)
        write_trace_csv(report.trace, paths[alg])
        print(f"{alg} status={report.status} best_dual={report.best_dual:.12g} "
              f"best_primal={report.best_primal_value:.12g} iterations={report.iterations} "
              f"time={report.stats.get('wall_time', 0.0):.3f}s", file=out)
        if args.require_convergence and report.status not in (CONVERGED, CERTIFIED_OPTIMAL):
            code = 2
    return code


def run_cli(args, out=None, err=None):
    """Run the command line ``args``; returns the process exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        ns = _build_parser().parse_args(args)
        if ns.command == "exact":
            ns.exact = True
        if ns.command == "gen":
            return _cmd_gen(ns, out)
        return _cmd_solve(ns, out)
    except _UsageError as exc:
        print(f"ad3: error: {exc}", file=err)
        return 1
    except OSError as exc:
        print(f"ad3: error: {exc}", file=err)
        return 1
    except (GraphFormatError, GraphValidationError, ValueError) as exc:
        print(f"ad3: error: {exc}", file=err)
        return 1


def main(argv=None):
    return run_cli(sys.argv[1:] if argv is None else argv)
