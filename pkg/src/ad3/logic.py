"""Euclidean projections onto the marginal polytopes of logic factors.

All projections take and return 1-D float arrays. For OR_OUT-style polytopes the
output coordinate is the last one. Negated inputs are handled by reflecting the
flagged coordinates (``z -> 1 - z``) before and after projecting.
"""
import numpy as np

from .graph import OR, OR_OUT, XOR

FEAS_TOL = 1e-12
# stands in for +-inf inputs coming from forbidden states
_PIN = 1e9


def project_simplex(z0):
    """Project onto the probability simplex by sorting and thresholding."""
    z0 = np.asarray(z0, dtype=float)
    y = np.sort(z0)[::-1]
    cums = np.cumsum(y) - 1.0
    j = np.arange(1, y.size + 1)
    rho = int(np.nonzero(y - cums / j > 0)[0][-1]) + 1
    tau = cums[rho - 1] / rho
    return np.maximum(z0 - tau, 0.0)


def project_box(z0):
    return np.clip(np.asarray(z0, dtype=float), 0.0, 1.0)


def project_or(z0):
    """Project onto {z in [0,1]^K : sum(z) >= 1}."""
    z = project_box(z0)
    if z.sum() >= 1.0 - FEAS_TOL:
        return z
    return project_simplex(z0)


def project_cone_a1(z0):
    """Project onto {z : z_k <= z_last for all k} (no box constraint)."""
    z0 = np.asarray(z0, dtype=float)
    inputs, out = z0[:-1], z0[-1]
    y = np.sort(inputs)[::-1]
    K = y.size
    acc = out
    rho = K + 1
    for j in range(1, K + 1):
        # acc = out + sum of the j-1 largest inputs
        if acc / j > y[j - 1]:
            rho = j
            break
        acc += y[j - 1]
    tau = acc / rho
    z = np.minimum(z0, tau)
    z[-1] = tau
    return z


def _in_a1(z):
    return bool(np.all(z[:-1] <= z[-1] + FEAS_TOL))


def _in_a2(z):
    return bool(z[:-1].sum() >= z[-1] - FEAS_TOL)


def project_or_out(z0):
    """Project onto conv{y in {0,1}^(K+1) : y_last = OR(y_1..y_K)}."""
    z0 = np.asarray(z0, dtype=float)
    z = project_box(z0)
    if _in_a1(z):
        if _in_a2(z):
            return z
    else:
        z = project_box(project_cone_a1(z0))
        if _in_a2(z):
            return z
    # sum of inputs equals the output: a XOR with the output negated
    flipped = z0.copy()
    flipped[-1] = 1.0 - flipped[-1]
    z = project_simplex(flipped)
    z[-1] = 1.0 - z[-1]
    return z


_PROJECTIONS = {XOR: project_simplex, OR: project_or, OR_OUT: project_or_out}


def project_logic(kind, z0, negated=None):
    """Projection onto the polytope of ``kind`` with the flagged coordinates negated."""
    z0 = np.asarray(z0, dtype=float)
    if negated is None or not any(negated):
        return _PROJECTIONS[kind](z0)
    mask = np.asarray(negated, dtype=bool)
    z = z0.copy()
    z[mask] = 1.0 - z[mask]
    z = _PROJECTIONS[kind](z)
    z[mask] = 1.0 - z[mask]
    return z


def solve_qp_logic(kind, negated, a):
    """Solve the quadratic subproblem of a logic factor.

    Parameters
    ----------
    kind : {"XOR", "OR", "OR_OUT"}
    negated : sequence of bool
        Per-variable negation flags.
    a : array_like, shape (K, 2)
        Per-variable linear terms ``a_i``; ``-inf`` entries pin a variable.

    Returns
    -------
    ndarray, shape (K, 2)
        Variable marginals ``(1 - z_i, z_i)``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"logic factors need binary variables, got linear terms of shape {a.shape}")
    z0 = np.clip((a[:, 1] + 1.0 - a[:, 0]) / 2.0, -_PIN, _PIN)
    z = project_logic(kind, z0, negated)
    return np.column_stack([1.0 - z, z])


def logic_map(kind, negated, scores):
    """Highest-scoring accepted configuration of a logic factor.

    ``scores`` has shape (K, 2): the score of each variable taking value 0 or 1.
    Returns ``(config, value)`` where ``config`` is a tuple of 0/1 values.
    """
    scores = np.asarray(scores, dtype=float).reshape(-1, 2)
    neg = np.asarray(negated, dtype=bool) if negated is not None else np.zeros(len(scores), bool)
    # work with literals (value after negation): score of literal 0 / literal 1
    lit0 = np.where(neg, scores[:, 1], scores[:, 0])
    lit1 = np.where(neg, scores[:, 0], scores[:, 1])
    with np.errstate(invalid="ignore"):
        gain = lit1 - lit0
    gain = np.where(np.isnan(gain), -np.inf, gain)
    K = len(scores)
    lits = np.zeros(K, dtype=int)

    def at_least_one(idx):
        g = gain[idx]
        chosen = g > 0
        if not chosen.any():
            chosen = np.zeros(len(idx), bool)
            chosen[int(np.argmax(g))] = True
        return chosen

    if kind == XOR:
        lits[int(np.argmax(gain))] = 1
    elif kind == OR:
        lits[at_least_one(np.arange(K))] = 1
    elif kind == OR_OUT:
        ins = np.arange(K - 1)
        on = at_least_one(ins)
        active = lits.copy()
        active[ins[on]] = 1
        active[-1] = 1
        off_value = float(lit0.sum())
        on_value = float(np.where(active == 1, lit1, lit0).sum())
        if on_value > off_value:
            lits = active
    else:
        raise ValueError(f"not a logic factor: {kind}")
    config = tuple(int(1 - l) if n else int(l) for l, n in zip(lits, neg))
    value = float(sum(scores[k, y] for k, y in enumerate(config)))
    return config, value
