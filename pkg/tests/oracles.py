"""Independent reference computations for the test-suite.

Nothing here imports the package's numerics: eigenvalues come from LAPACK,
rank-one minima from brute-force grids, and scalar jets from dense sampling.
"""

import itertools

import numpy as np


def vee_matrix(xi, R):
    xi = np.asarray(xi, float)
    R = np.asarray(R, float)
    return 0.5 * (np.outer(xi, R) + np.outer(R, xi))


def vee_eigenvalues(xi, R):
    return np.linalg.eigh(vee_matrix(xi, R))[0]


def rank_one_value_loops(Xi, eta, w):
    N, n = Xi.shape[0], Xi.shape[1]
    total = 0.0
    for a, i, b, j in itertools.product(range(N), range(n), range(N), range(n)):
        total += Xi[a, i, b, j] * eta[a] * w[i] * eta[b] * w[j]
    return total


def rank_one_grid_min(Xi, steps=360):
    """Minimum of the rank-one quadratic form over a circle grid (N = n = 2)."""
    th = np.linspace(0, 2 * np.pi, steps, endpoint=False)
    circle = np.stack([np.cos(th), np.sin(th)], 1)
    vals = np.einsum("aibj,pa,qi,pb,qj->pq", Xi, circle, circle, circle, circle)
    return float(vals.min())


def flat_min_eigenvalue(Xi):
    N, n = Xi.shape[0], Xi.shape[1]
    return float(np.linalg.eigvalsh(Xi.reshape(N * n, N * n)).min())


def scalar_superjet_ratio(f, x, p, X, r, order=2, samples=2001):
    """sup over 0 < |z| <= r of the positive part of the Taylor remainder over |z|^order (dense 1-d grid)."""
    z = np.linspace(-r, r, samples)
    z = z[z != 0]
    rem = f(x + z) - f(x) - p * z
    if order == 2:
        rem = rem - 0.5 * X * z * z
    return float(np.max(np.maximum(rem, 0.0) / np.abs(z) ** order))


def is_scalar_superjet(f, x, p, X=None, radii=(1e-1, 1e-2, 1e-3)):
    """Classical upper semijet: the ratio vanishes or shrinks twentyfold over two decades of radii."""
    order = 1 if X is None else 2
    first, last = (scalar_superjet_ratio(f, x, p, X, r, order) for r in (radii[0], radii[-1]))
    return last <= 1e-12 or last <= 0.05 * first


def nonpositive(M, tol=1e-10):
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).max() <= tol)


def vee_hess_flat(xi, X):
    """The (N n) x (N n) matrix of xi v X by explicit loops."""
    N, n = X.shape[0], X.shape[1]
    out = np.zeros((N * n, N * n))
    for a, i, b, j in itertools.product(range(N), range(n), range(N), range(n)):
        out[a * n + i, b * n + j] = 0.5 * (xi[a] * X[b, i, j] + xi[b] * X[a, i, j])
    return out
