"""Independent reference solvers shared by the module and acceptance tests."""

import math

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from panoblend.seams import BoundaryChain, trace_boundary


def chain_of(region):
    return BoundaryChain(trace_boundary(region), 0)


def laplace_dirichlet(region, points, values):
    """5-point harmonic interpolation of ``values`` given at ``points`` into ``region``."""
    h, w = region.shape
    fixed = np.zeros((h, w), dtype=bool)
    fixed[points[:, 0], points[:, 1]] = True
    known = np.zeros((h, w, values.shape[1]))
    known[points[:, 0], points[:, 1]] = values
    free = region & ~fixed
    idx = -np.ones((h, w), dtype=int)
    idx[free] = np.arange(free.sum())
    rows, cols, vals = [], [], []
    rhs = np.zeros((free.sum(), values.shape[1]))
    for k, (y, x) in enumerate(np.argwhere(free)):
        rows.append(k), cols.append(k), vals.append(4.0)
        for dy, dx in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            qy, qx = y + dy, x + dx
            if fixed[qy, qx]:
                rhs[k] += known[qy, qx]
            else:
                assert free[qy, qx], "interior pixel touches the outside"
                rows.append(k), cols.append(idx[qy, qx]), vals.append(-1.0)
    a = sparse.csr_matrix((vals, (rows, cols)), shape=(len(rhs), len(rhs)))
    out = known.copy()
    sol = spsolve(a.tocsc(), rhs)
    out[free] = sol.reshape(len(rhs), -1)
    return out


def mvc_point_weights(x, y, poly):
    """Mean-value weights of one point from the textbook angle formula."""
    m = len(poly)
    ang = []
    for k in range(m):
        ax, ay = poly[k] - (x, y)
        bx, by = poly[(k + 1) % m] - (x, y)
        ang.append(math.atan2(ax * by - ay * bx, ax * bx + ay * by))
    w = np.array([
        (math.tan(ang[k - 1] / 2) + math.tan(ang[k] / 2)) / math.hypot(*(poly[k] - (x, y)))
        for k in range(m)
    ])
    return w / w.sum()


def smooth_boundary_values(points, seed, channels=3):
    rng = np.random.default_rng(seed)
    y, x = points[:, 0].astype(float), points[:, 1].astype(float)
    out = []
    for _ in range(channels):
        a, b, fx, fy, px, py = rng.uniform(-1, 1, 6)
        out.append(0.1 * a + 0.1 * np.sin(fx * x / 6 + 3 * px) * np.cos(fy * y / 6 + 3 * py) + 0.05 * b)
    return np.stack(out, axis=1)
