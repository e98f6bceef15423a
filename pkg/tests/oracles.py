"""Independent reference computations used to check the library's fast paths."""

import math

import numpy as np
import torch
from scipy.optimize import linprog


def ot_lp(a, b, cost=lambda x, y: abs(x - y)):
    """Optimal transport between uniform empirical measures, solved as a dense LP."""
    n, m = len(a), len(b)
    C = np.array([[cost(x, y) for y in b] for x in a], dtype=float).ravel()
    A_eq, b_eq = [], []
    for i in range(n):
        row = np.zeros((n, m))
        row[i, :] = 1
        A_eq.append(row.ravel())
        b_eq.append(1.0 / n)
    for j in range(m):
        col = np.zeros((n, m))
        col[:, j] = 1
        A_eq.append(col.ravel())
        b_eq.append(1.0 / m)
    res = linprog(C, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0, res.message
    return res.fun


def dif_corr_double_sum(R, F):
    total = 0.0
    for i in range(len(R)):
        for j in range(len(R)):
            total += (R[i][j] - F[i][j]) ** 2
    return math.sqrt(total)


def pearson_by_hand(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)


def central_differences(fn, params, h=1e-6):
    """Numerical gradient of scalar ``fn()`` w.r.t. every element of ``params`` (float64 tensors).

    ``fn`` runs with autograd enabled because the critic loss differentiates
    internally; only the in-place perturbations bypass autograd.
    """
    grads = []
    for p in params:
        g = torch.zeros_like(p)
        flat, gflat = p.data.view(-1), g.view(-1)
        for k in range(flat.numel()):
            orig = flat[k].item()
            flat[k] = orig + h
            up = fn().item()
            flat[k] = orig - h
            down = fn().item()
            flat[k] = orig
            gflat[k] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-3):
    """Largest |a - n| / max(|n|, floor) over all elements.

    ``floor`` keeps near-zero derivatives from turning rounding noise into a
    huge relative error.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        err = (a - n).abs() / n.abs().clamp_min(floor)
        worst = max(worst, err.max().item())
    return worst
