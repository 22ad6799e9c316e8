"""Factor graph data model, scoring, text format, binarization and a brute-force
MAP oracle.

Potentials are extended reals: ``-inf`` marks forbidden states or configurations.
Logic factors (XOR, OR, OR_OUT) carry no payload; their log-potential is 0 on the
acceptance set and ``-inf`` elsewhere, after applying per-edge negations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NEG_INF = float("-inf")

DENSE = "DENSE"
PAIR = "PAIR"
XOR = "XOR"
OR = "OR"
OR_OUT = "OR_OUT"
SEQUENCE = "SEQUENCE"

FACTOR_KINDS = (DENSE, PAIR, XOR, OR, OR_OUT, SEQUENCE)
LOGIC_KINDS = (XOR, OR, OR_OUT)

DEFAULT_ENUMERATION_CAP = 2 ** 24


class GraphFormatError(ValueError):
    """Malformed line in a factor graph document."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GraphValidationError(ValueError):
    pass


class EnumerationCapError(RuntimeError):
    pass


@dataclass
class Variable:
    num_states: int
    unary: np.ndarray

    def __post_init__(self):
        self.unary = np.asarray(self.unary, dtype=float).copy()


@dataclass
class Factor:
    """A factor over an ordered tuple of variables.

    ``table`` holds the dense log-potential (row-major over ``variables``) for
    DENSE and PAIR factors; ``transitions`` holds one score matrix per adjacent
    pair for SEQUENCE factors; ``negated`` flags are only meaningful on logic
    kinds.
    """

    kind: str
    variables: tuple
    negated: tuple = None
    table: np.ndarray = None
    transitions: list = None

    def __post_init__(self):
        self.variables = tuple(int(v) for v in self.variables)
        if self.negated is None:
            self.negated = (False,) * len(self.variables)
        self.negated = tuple(bool(s) for s in self.negated)
        if self.table is not None:
            self.table = np.asarray(self.table, dtype=float).ravel().copy()
        if self.transitions is not None:
            self.transitions = [np.atleast_2d(np.asarray(t, dtype=float)).copy()
                                for t in self.transitions]

    @property
    def arity(self):
        return len(self.variables)


@dataclass
class MapResult:
    assignment: tuple
    value: float


@dataclass
class FactorGraph:
    variables: list = field(default_factory=list)
    factors: list = field(default_factory=list)

    def __post_init__(self):
        self._rebuild()

    def _rebuild(self):
        self.edges = [(v, a) for a, f in enumerate(self.factors) for v in f.variables]
        self.neighbors = [[] for _ in self.variables]
        for e, (v, a) in enumerate(self.edges):
            if 0 <= v < len(self.variables):
                self.neighbors[v].append(a)

    # -- construction helpers -------------------------------------------
    def add_variable(self, num_states, unary=None):
        if unary is None:
            unary = np.zeros(num_states)
        self.variables.append(Variable(num_states, unary))
        self.neighbors.append([])
        return len(self.variables) - 1

    def add_factor(self, kind, variables, negated=None, table=None, transitions=None):
        factor = Factor(kind, variables, negated, table, transitions)
        self.factors.append(factor)
        a = len(self.factors) - 1
        for v in factor.variables:
            self.edges.append((v, a))
            if 0 <= v < len(self.variables):
                self.neighbors[v].append(a)
        return a

    def add_dense(self, variables, table):
        return self.add_factor(DENSE, variables, table=table)

    def add_pair(self, v1, v2, table):
        return self.add_factor(PAIR, (v1, v2), table=table)

    def add_logic(self, kind, variables, negated=None):
        return self.add_factor(kind, variables, negated=negated)

    def add_sequence(self, variables, transitions):
        return self.add_factor(SEQUENCE, variables, transitions=transitions)

    # -- queries ----------------------------------------------------------
    @property
    def num_variables(self):
        return len(self.variables)

    @property
    def num_factors(self):
        return len(self.factors)

    def num_states(self):
        return [v.num_states for v in self.variables]

    def validate(self):
        """Raise :class:`GraphValidationError` if any structural invariant fails."""
        n = len(self.variables)
        for i, var in enumerate(self.variables):
            if var.num_states < 1:
                raise GraphValidationError(f"variable {i} has no states")
            if var.unary.shape != (var.num_states,):
                raise GraphValidationError(
                    f"variable {i}: unary potential length {var.unary.size} != {var.num_states}")
            if np.any(np.isnan(var.unary)) or np.any(var.unary == np.inf):
                raise GraphValidationError(f"variable {i}: unary potential must be finite or -inf")
        for a, f in enumerate(self.factors):
            if f.kind not in FACTOR_KINDS:
                raise GraphValidationError(f"factor {a}: unknown kind {f.kind!r}")
            if f.arity == 0:
                raise GraphValidationError(f"factor {a}: no variables")
            for v in f.variables:
                if not 0 <= v < n:
                    raise GraphValidationError(f"factor {a}: variable index {v} out of range")
            if len(set(f.variables)) != f.arity:
                raise GraphValidationError(f"factor {a}: variable listed twice")
            if len(f.negated) != f.arity:
                raise GraphValidationError(f"factor {a}: negation flags do not match arity")
            states = [self.variables[v].num_states for v in f.variables]
            if f.kind in LOGIC_KINDS:
                if any(s != 2 for s in states):
                    raise GraphValidationError("logic factor on non-binary variable")
                if f.kind == OR_OUT and f.arity < 2:
                    raise GraphValidationError(f"factor {a}: OR_OUT needs at least one input")
                continue
            if any(f.negated):
                raise GraphValidationError(f"factor {a}: negations only allowed on logic factors")
            if f.kind == PAIR:
                if f.arity != 2 or states != [2, 2]:
                    raise GraphValidationError(f"factor {a}: PAIR must link two binary variables")
                if f.table is None or f.table.size != 4 or not np.all(np.isfinite(f.table)):
                    raise GraphValidationError(f"factor {a}: PAIR needs 4 finite entries")
            elif f.kind == DENSE:
                size = int(np.prod(states))
                if f.table is None or f.table.size != size:
                    raise GraphValidationError(
                        f"factor {a}: DENSE table needs {size} entries")
                if np.any(np.isnan(f.table)) or np.any(f.table == np.inf):
                    raise GraphValidationError(f"factor {a}: table entries must be finite or -inf")
            elif f.kind == SEQUENCE:
                trans = f.transitions or []
                if len(trans) != f.arity - 1:
                    raise GraphValidationError(
                        f"factor {a}: SEQUENCE needs {f.arity - 1} transition tables")
                for t, mat in enumerate(trans):
                    if mat.shape != (states[t], states[t + 1]):
                        raise GraphValidationError(
                            f"factor {a}: transition {t} has shape {mat.shape}, "
                            f"expected {(states[t], states[t + 1])}")
                    if np.any(np.isnan(mat)) or np.any(mat == np.inf):
                        raise GraphValidationError(
                            f"factor {a}: transition entries must be finite or -inf")
        return self

    def copy(self):
        return FactorGraph(
            [Variable(v.num_states, v.unary) for v in self.variables],
            [Factor(f.kind, f.variables, f.negated, f.table, f.transitions)
             for f in self.factors])

    def __eq__(self, other):
        if not isinstance(other, FactorGraph):
            return NotImplemented
        if len(self.variables) != len(other.variables) or len(self.factors) != len(other.factors):
            return False
        for u, v in zip(self.variables, other.variables):
            if u.num_states != v.num_states or not np.array_equal(u.unary, v.unary):
                return False
        for f, g in zip(self.factors, other.factors):
            if (f.kind, f.variables, f.negated) != (g.kind, g.variables, g.negated):
                return False
            if (f.table is None) != (g.table is None):
                return False
            if f.table is not None and not np.array_equal(f.table, g.table):
                return False
            ft, gt = f.transitions or [], g.transitions or []
            if len(ft) != len(gt) or any(not np.array_equal(x, y) for x, y in zip(ft, gt)):
                return False
        return True


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _parse_float(tok, lineno):
    try:
        x = float(tok)
    except ValueError:
        raise GraphFormatError(lineno, f"expected a number, got {tok!r}") from None
    if math.isnan(x) or x == math.inf:
        raise GraphFormatError(lineno, f"invalid potential {tok!r}")
    return x


def _parse_int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise GraphFormatError(lineno, f"expected an integer, got {tok!r}") from None


def parse_graph(text: str) -> FactorGraph:
    """Parse the line-based factor graph format and validate the result.

    Raises
    ------
    GraphFormatError
        For a malformed line (the message carries the line number).
    GraphValidationError
        For a well-formed document describing an invalid graph.
    """
    declared = None
    var_specs = {}
    factors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "variables":
            if len(toks) != 2 or declared is not None:
                raise GraphFormatError(lineno, "expected a single 'variables N' line")
            declared = _parse_int(toks[1], lineno)
            if declared < 0:
                raise GraphFormatError(lineno, "negative variable count")
        elif head == "var":
            if declared is None:
                raise GraphFormatError(lineno, "'var' before 'variables'")
            if len(toks) < 3:
                raise GraphFormatError(lineno, "expected 'var <id> <num_states> <potentials>'")
            vid = _parse_int(toks[1], lineno)
            ns = _parse_int(toks[2], lineno)
            vals = [_parse_float(t, lineno) for t in toks[3:]]
            if ns < 1 or len(vals) != ns:
                raise GraphFormatError(lineno, f"variable {vid} declares {ns} states "
                                               f"but lists {len(vals)} potentials")
            if vid in var_specs:
                raise GraphFormatError(lineno, f"variable {vid} declared twice")
            var_specs[vid] = (ns, vals, lineno)
        elif head == "factor":
            if declared is None:
                raise GraphFormatError(lineno, "'factor' before 'variables'")
            factors.append(_parse_factor(toks, lineno))
        else:
            raise GraphFormatError(lineno, f"unknown statement {head!r}")
    if declared is None:
        raise GraphFormatError(0, "missing 'variables N' line")
    if sorted(var_specs) != list(range(declared)):
        raise GraphValidationError(
            f"expected variables 0..{declared - 1}, got ids {sorted(var_specs)}")
    variables = [Variable(var_specs[i][0], var_specs[i][1]) for i in range(declared)]
    factors = [_build_sequence(*f, variables) if isinstance(f, tuple) else f for f in factors]
    return FactorGraph(variables, factors).validate()


def _parse_factor(toks, lineno):
    if len(toks) < 3:
        raise GraphFormatError(lineno, "expected 'factor <KIND> <arity> ...'")
    kind = toks[1]
    if kind not in FACTOR_KINDS:
        raise GraphFormatError(lineno, f"unknown factor kind {kind!r}")
    arity = _parse_int(toks[2], lineno)
    if arity < 1 or len(toks) < 3 + arity:
        raise GraphFormatError(lineno, f"factor declares arity {arity} but lists fewer variables")
    refs = [_parse_int(t, lineno) for t in toks[3:3 + arity]]
    rest = toks[3 + arity:]
    if kind in LOGIC_KINDS:
        if rest:
            raise GraphFormatError(lineno, "logic factors take no payload")
        if any(r == 0 for r in refs):
            raise GraphFormatError(lineno, "logic factor references are signed 1-based (±(v+1))")
        return Factor(kind, [abs(r) - 1 for r in refs], [r < 0 for r in refs])
    payload = [_parse_float(t, lineno) for t in rest]
    if kind == SEQUENCE:
        # transition shapes depend on state counts; split once variables are known
        return (refs, payload, lineno)
    return Factor(kind, refs, table=payload)


def _build_sequence(refs, payload, lineno, variables):
    for v in refs:
        if not 0 <= v < len(variables):
            raise GraphValidationError(f"SEQUENCE factor: variable index {v} out of range")
    states = [variables[v].num_states for v in refs]
    need = sum(states[t] * states[t + 1] for t in range(len(states) - 1))
    if len(payload) != need:
        raise GraphFormatError(lineno, f"SEQUENCE needs {need} transition entries, "
                                       f"got {len(payload)}")
    mats, pos = [], 0
    for t in range(len(states) - 1):
        n = states[t] * states[t + 1]
        mats.append(np.reshape(payload[pos:pos + n], (states[t], states[t + 1])))
        pos += n
    return Factor(SEQUENCE, refs, transitions=mats)


def _fmt(x):
    x = float(x)
    if x == NEG_INF:
        return "-inf"
    return repr(x)


def serialize_graph(graph: FactorGraph) -> str:
    """Render ``graph`` in the line-based text format (deterministic output)."""
    out = [f"variables {graph.num_variables}"]
    for i, v in enumerate(graph.variables):
        out.append(" ".join([f"var {i} {v.num_states}"] + [_fmt(x) for x in v.unary]))
    for f in graph.factors:
        head = f"factor {f.kind} {f.arity}"
        if f.kind in LOGIC_KINDS:
            refs = [str(-(v + 1) if neg else v + 1) for v, neg in zip(f.variables, f.negated)]
            out.append(" ".join([head] + refs))
        elif f.kind == SEQUENCE:
            vals = [_fmt(x) for m in f.transitions for x in m.ravel()]
            out.append(" ".join([head] + [str(v) for v in f.variables] + vals))
        else:
            out.append(" ".join([head] + [str(v) for v in f.variables]
                                + [_fmt(x) for x in f.table]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def logic_accepts(kind, values, negated):
    """Whether a binary configuration lies in the acceptance set of a logic factor."""
    y = [1 - v if s else v for v, s in zip(values, negated)]
    if kind == XOR:
        return sum(y) == 1
    if kind == OR:
        return any(y)
    if kind == OR_OUT:
        return y[-1] == int(any(y[:-1]))
    raise ValueError(f"not a logic factor: {kind}")


def factor_score(graph, factor, config):
    """Log-potential of ``factor`` at the local configuration ``config``."""
    if factor.kind in LOGIC_KINDS:
        return 0.0 if logic_accepts(factor.kind, config, factor.negated) else NEG_INF
    if factor.kind == SEQUENCE:
        return float(sum(m[config[t], config[t + 1]] for t, m in enumerate(factor.transitions)))
    states = [graph.variables[v].num_states for v in factor.variables]
    return float(factor.table[np.ravel_multi_index(tuple(config), states)])


def evaluate(graph: FactorGraph, assignment: Sequence[int]) -> float:
    """MAP objective: sum of unary and factor log-potentials at ``assignment``."""
    if len(assignment) != graph.num_variables:
        raise ValueError(f"assignment has {len(assignment)} entries, "
                         f"graph has {graph.num_variables} variables")
    total = 0.0
    for var, y in zip(graph.variables, assignment):
        if not 0 <= y < var.num_states:
            raise ValueError(f"state {y} out of range for a {var.num_states}-state variable")
        total += var.unary[y]
    for f in graph.factors:
        total += factor_score(graph, f, [assignment[v] for v in f.variables])
    return float(total)


# ---------------------------------------------------------------------------
# Brute-force MAP
# ---------------------------------------------------------------------------

def _better(value, assignment, best_value, best_assignment):
    if best_assignment is None or value > best_value:
        return True
    return value == best_value and tuple(assignment) < tuple(best_assignment)


def brute_force_map(graph: FactorGraph, cap: int = DEFAULT_ENUMERATION_CAP) -> MapResult:
    """Exact MAP by exhaustive search; ties go to the lexicographically smallest
    assignment.

    Graphs without logic factors are enumerated directly (vectorised), which
    requires the size of the joint state space to be at most ``cap``. Graphs with
    logic factors are searched depth-first with constraint propagation through
    the logic factors, so only feasible assignments are completed; there ``cap``
    bounds the number of search nodes instead.
    """
    if any(f.kind in LOGIC_KINDS for f in graph.factors):
        return _search_map(graph, cap)
    states = graph.num_states()
    total = math.prod(states)
    if total > cap:
        raise EnumerationCapError(f"{total} joint configurations exceed the cap of {cap}")
    if graph.num_variables == 0:
        return MapResult((), 0.0)
    # itertools.product order is lexicographic, so argmax picks the smallest tie
    configs = np.array(list(itertools.product(*[range(s) for s in states])), dtype=np.int64)
    scores = np.zeros(len(configs))
    for i, var in enumerate(graph.variables):
        scores += var.unary[configs[:, i]]
    for f in graph.factors:
        cols = configs[:, list(f.variables)]
        if f.kind == SEQUENCE:
            for t, m in enumerate(f.transitions):
                scores += m[cols[:, t], cols[:, t + 1]]
        else:
            fs = [states[v] for v in f.variables]
            scores += f.table[np.ravel_multi_index(tuple(cols.T), fs)]
    best = int(np.argmax(scores))
    assignment = tuple(int(x) for x in configs[best])
    return MapResult(assignment, evaluate(graph, assignment))


class _Search:
    """Depth-first exhaustive search with propagation through logic factors."""

    def __init__(self, graph, cap):
        self.graph = graph
        self.cap = cap
        self.nodes = 0
        n = graph.num_variables
        self.assign = [-1] * n
        self.logic = [a for a, f in enumerate(graph.factors) if f.kind in LOGIC_KINDS]
        self.soft = [a for a, f in enumerate(graph.factors) if f.kind not in LOGIC_KINDS]
        self.logic_of = [[] for _ in range(n)]
        for a in self.logic:
            for v in graph.factors[a].variables:
                self.logic_of[v].append(a)
        self.soft_of = [[] for _ in range(n)]
        for a in self.soft:
            for v in graph.factors[a].variables:
                self.soft_of[v].append(a)
        self.best_value = NEG_INF
        self.best = None
        # optimistic bound: each free variable at its best unary, each soft
        # factor at its best entry; logic factors can only lower the score
        self.var_max = [float(np.max(v.unary)) for v in graph.variables]
        self.opt = sum(self.var_max) + sum(_factor_max(graph.factors[a]) for a in self.soft)
        self.num_neg_inf = 0

    def _literal(self, f, k):
        y = self.assign[f.variables[k]]
        if y < 0:
            return -1
        return 1 - y if f.negated[k] else y

    def _check(self, a, forced):
        """Return False on violation; append implied (variable, value) pairs."""
        f = self.graph.factors[a]
        lits = [self._literal(f, k) for k in range(f.arity)]
        free = [k for k, l in enumerate(lits) if l < 0]
        ones = sum(1 for l in lits if l == 1)

        def force(k, lit):
            forced.append((f.variables[k], 1 - lit if f.negated[k] else lit))

        if f.kind == XOR:
            if ones > 1:
                return False
            if ones == 1:
                for k in free:
                    force(k, 0)
            elif not free:
                return False
            elif len(free) == 1:
                force(free[0], 1)
            return True
        if f.kind == OR:
            if ones:
                return True
            if not free:
                return False
            if len(free) == 1:
                force(free[0], 1)
            return True
        # OR_OUT: output is the last literal
        out = lits[-1]
        ins = lits[:-1]
        in_ones = sum(1 for l in ins if l == 1)
        in_free = [k for k, l in enumerate(ins) if l < 0]
        if out == 0:
            if in_ones:
                return False
            for k in in_free:
                force(k, 0)
        elif out == 1:
            if not in_ones:
                if not in_free:
                    return False
                if len(in_free) == 1:
                    force(in_free[0], 1)
        elif in_ones:
            force(f.arity - 1, 1)
        elif not in_free:
            force(f.arity - 1, 0)
        return True

    def _set(self, var, value, trail):
        """Assign and propagate; return False on conflict. Assignments go on ``trail``."""
        stack = [(var, value)]
        while stack:
            v, y = stack.pop()
            cur = self.assign[v]
            if cur >= 0:
                if cur != y:
                    return False
                continue
            self.assign[v] = y
            trail.append(v)
            self._shift(v, y, 1.0)
            forced = []
            for a in self.logic_of[v]:
                if not self._check(a, forced):
                    return False
            stack.extend(forced)
        return True

    def _shift(self, v, y, sign):
        val = self.graph.variables[v].unary[y]
        delta = NEG_INF if val == NEG_INF else val - self.var_max[v]
        if delta == NEG_INF:
            self.num_neg_inf += int(sign)
        else:
            self.opt += sign * delta

    def _undo(self, trail, mark):
        while len(trail) > mark:
            v = trail.pop()
            self._shift(v, self.assign[v], -1.0)
            self.assign[v] = -1

    def _hopeless(self):
        if self.best is None:
            return False
        if self.num_neg_inf:
            return True
        return self.opt < self.best_value - 1e-9 * max(1.0, abs(self.best_value))

    def run(self):
        g = self.graph
        trail = []
        # initial propagation (e.g. single-variable XOR factors)
        forced = []
        for a in self.logic:
            if not self._check(a, forced):
                return MapResult(tuple([0] * g.num_variables), NEG_INF)
        for v, y in forced:
            if not self._set(v, y, trail):
                return MapResult(tuple([0] * g.num_variables), NEG_INF)
        self._dfs(0, trail)
        if self.best is None:
            return MapResult(tuple([0] * g.num_variables), NEG_INF)
        return MapResult(self.best, evaluate(g, self.best))

    def _dfs(self, start, trail):
        g = self.graph
        n = g.num_variables
        i = start
        while i < n and self.assign[i] >= 0:
            i += 1
        if i == n:
            value = evaluate(g, self.assign)
            if value > NEG_INF and _better(value, self.assign, self.best_value, self.best):
                self.best_value, self.best = value, tuple(self.assign)
            return
        for y in range(g.variables[i].num_states):
            self.nodes += 1
            if self.nodes > self.cap:
                raise EnumerationCapError(f"search exceeded {self.cap} nodes")
            mark = len(trail)
            if self._set(i, y, trail) and not self._hopeless():
                self._dfs(i + 1, trail)
            self._undo(trail, mark)


def _factor_max(f):
    if f.kind == SEQUENCE:
        return float(sum(np.max(m) for m in f.transitions))
    return float(np.max(f.table))


def _search_map(graph, cap):
    return _Search(graph, cap).run()


# ---------------------------------------------------------------------------
# Binarization
# ---------------------------------------------------------------------------

@dataclass
class BinarizationMap:
    """Index bookkeeping between an original graph and its binarized form."""

    state_vars: list  # state_vars[i][y] -> binary variable index of U_{i,y}
    config_vars: list  # config_vars[a][r] -> binary variable index of U_{a,r}

    def recover(self, binary_assignment):
        """Original assignment from a binarized one (first active state per variable)."""
        out = []
        for states in self.state_vars:
            on = [y for y, b in enumerate(states) if binary_assignment[b] == 1]
            out.append(on[0] if on else 0)
        return tuple(out)

    def lift(self, graph, assignment):
        """Binarized assignment encoding an original one."""
        size = sum(len(s) for s in self.state_vars) + sum(len(c) for c in self.config_vars)
        z = [0] * size
        for i, y in enumerate(assignment):
            z[self.state_vars[i][y]] = 1
        for a, f in enumerate(graph.factors):
            states = [graph.variables[v].num_states for v in f.variables]
            r = int(np.ravel_multi_index(tuple(assignment[v] for v in f.variables), states))
            z[self.config_vars[a][r]] = 1
        return tuple(z)


def binarize(graph: FactorGraph):
    """Rewrite a graph of DENSE/PAIR factors as binary variables tied by XOR factors.

    Each original state gets an indicator variable carrying that state's unary
    potential, and the indicators of one variable share a XOR. Each factor
    configuration gets an indicator carrying the configuration's log-potential;
    for every incident variable and state, a XOR links the configurations
    consistent with that state to the negated state indicator.

    Returns
    -------
    (FactorGraph, BinarizationMap)
    """
    for f in graph.factors:
        if f.kind not in (DENSE, PAIR):
            raise ValueError(f"binarize supports DENSE/PAIR factors only, got {f.kind}")
    out = FactorGraph()
    state_vars = []
    for var in graph.variables:
        state_vars.append([out.add_variable(2, [0.0, float(var.unary[y])])
                           for y in range(var.num_states)])
    config_vars = []
    for f in graph.factors:
        config_vars.append([out.add_variable(2, [0.0, float(t)]) for t in f.table])
    for states in state_vars:
        out.add_logic(XOR, states)
    for a, f in enumerate(graph.factors):
        shape = [graph.variables[v].num_states for v in f.variables]
        configs = list(itertools.product(*[range(s) for s in shape]))
        for k, v in enumerate(f.variables):
            for y in range(shape[k]):
                members = [config_vars[a][r] for r, c in enumerate(configs) if c[k] == y]
                out.add_logic(XOR, members + [state_vars[v][y]],
                              [False] * len(members) + [True])
    return out, BinarizationMap(state_vars, config_vars)


def iter_assignments(graph: FactorGraph) -> Iterable[tuple]:
    """All joint assignments in lexicographic order."""
    return itertools.product(*[range(s) for s in graph.num_states()])
