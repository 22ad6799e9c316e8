"""Closed-form quadratic subproblem for a factor linking two binary variables."""
from typing import NamedTuple

import numpy as np


class PairwiseCoefficients(NamedTuple):
    c1: float
    c2: float
    c12: float


class PairwiseSolution(NamedTuple):
    z1: float
    z2: float
    z12: float

    def marginals(self):
        """Factor marginal over (00, 01, 10, 11)."""
        z1, z2, z12 = self
        return (1.0 - z1 - z2 + z12, z2 - z12, z1 - z12, z12)


def _clip(x):
    return min(max(x, 0.0), 1.0)


def compute_pair_coefficients(a1, a2, b):
    """Coefficients of the reduced problem in (z1, z2, z12).

    ``a1`` and ``a2`` are the per-variable linear terms (length 2); ``b`` is the
    scaled factor table in row-major order ``(b00, b01, b10, b11)``.
    """
    b00, b01, b10, b11 = (float(x) for x in b)
    c1 = (a1[1] + 1.0 - a1[0] - b00 + b10) / 2.0
    c2 = (a2[1] + 1.0 - a2[0] - b00 + b01) / 2.0
    c12 = (b00 - b10 - b01 + b11) / 2.0
    return PairwiseCoefficients(float(c1), float(c2), float(c12))


def solve_qp_pair(c):
    """Minimise ``(z1-c1)^2/2 + (z2-c2)^2/2 - c12*z12`` over the pairwise local polytope.

    Infinite ``c1``/``c2`` (from forbidden states) are allowed and pin the
    corresponding variable to 0 or 1.
    """
    c1, c2, c12 = (float(x) for x in c)
    if c12 >= 0.0:
        if c1 > c2 + c12:
            z1, z2 = _clip(c1), _clip(c2 + c12)
        elif c2 > c1 + c12:
            z1, z2 = _clip(c1 + c12), _clip(c2)
        else:
            z1 = z2 = _clip((c1 + c2 + c12) / 2.0)
        return PairwiseSolution(z1, z2, min(z1, z2))
    if c1 + c2 + 2.0 * c12 > 1.0:
        z1, z2 = _clip(c1 + c12), _clip(c2 + c12)
    elif c1 + c2 < 1.0:
        z1, z2 = _clip(c1), _clip(c2)
    else:
        z1, z2 = _clip((c1 + 1.0 - c2) / 2.0), _clip((c2 + 1.0 - c1) / 2.0)
    return PairwiseSolution(z1, z2, max(0.0, z1 + z2 - 1.0))


def pair_objective(c, z):
    c1, c2, c12 = c
    z1, z2, z12 = z
    return 0.5 * (z1 - c1) ** 2 + 0.5 * (z2 - c2) ** 2 - c12 * z12


def solve_qp_pair_batch(c1, c2, c12):
    """Vectorised :func:`solve_qp_pair` over arrays of coefficients.

    Returns arrays ``(z1, z2, z12)``.
    """
    c1, c2, c12 = (np.asarray(x, dtype=float) for x in (c1, c2, c12))
    with np.errstate(invalid="ignore"):
        # attractive branch (c12 >= 0)
        b1 = c1 > c2 + c12
        b2 = ~b1 & (c2 > c1 + c12)
        mid = np.clip((c1 + c2 + c12) / 2.0, 0.0, 1.0)
        z1p = np.where(b1, np.clip(c1, 0.0, 1.0), np.where(b2, np.clip(c1 + c12, 0.0, 1.0), mid))
        z2p = np.where(b1, np.clip(c2 + c12, 0.0, 1.0), np.where(b2, np.clip(c2, 0.0, 1.0), mid))
        # repulsive branch (c12 < 0)
        n1 = c1 + c2 + 2.0 * c12 > 1.0
        n2 = ~n1 & (c1 + c2 < 1.0)
        z1n = np.where(n1, np.clip(c1 + c12, 0.0, 1.0),
                       np.where(n2, np.clip(c1, 0.0, 1.0), np.clip((c1 + 1.0 - c2) / 2.0, 0.0, 1.0)))
        z2n = np.where(n1, np.clip(c2 + c12, 0.0, 1.0),
                       np.where(n2, np.clip(c2, 0.0, 1.0), np.clip((c2 + 1.0 - c1) / 2.0, 0.0, 1.0)))
    pos = c12 >= 0.0
    z1 = np.where(pos, z1p, z1n)
    z2 = np.where(pos, z2p, z2n)
    z12 = np.where(pos, np.minimum(z1, z2), np.maximum(0.0, z1 + z2 - 1.0))
    return z1, z2, z12
