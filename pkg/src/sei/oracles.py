"""Independent verification routes for the closed-form kernels.

Nothing here shares code with the Rodrigues implementations: the matrix
exponential comes from a scaled-and-squared truncated Taylor series, the
phi-function from Gauss-Legendre quadrature of its defining integral, and
spectral norms from power iteration.  The selftest subcommand and the test
suite compare the production kernels against these routes.
"""

from __future__ import annotations

import numpy as np

from .so3 import LinearPart


def series_expm(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Matrix exponential by scaling and squaring a truncated Taylor series."""
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a, ord="fro"))
    squarings = max(0, int(np.ceil(np.log2(norm)))) if norm > 1.0 else 0
    scaled = a / (2.0**squarings)
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ scaled / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def series_exp_so3(t: float, lp: LinearPart, terms: int = 30) -> np.ndarray:
    """Series route for the rotation exp(t S)."""
    return series_expm(t * lp.s, terms=terms)


def phi1_gauss(t: float, lp: LinearPart, nodes: int = 64) -> np.ndarray:
    """Quadrature route for phi1(t S) = int_0^1 exp(sigma t S) dsigma."""
    pts, wts = np.polynomial.legendre.leggauss(nodes)
    # map from [-1, 1] to [0, 1]
    sigma = 0.5 * (pts + 1.0)
    out = np.zeros((3, 3))
    for s_i, w_i in zip(sigma, wts):
        out += 0.5 * w_i * series_expm(s_i * t * lp.s)
    return out


def spectral_norm(m: np.ndarray, iters: int = 60, seed: int = 0) -> float:
    """Largest singular value estimated by power iteration on M^T M.

    The Rayleigh-quotient estimate approaches the true norm from below, so
    an upper-bound assertion on the result can never fail spuriously.
    """
    m = np.asarray(m, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[1])
    x /= np.linalg.norm(x)
    gram = m.T @ m
    for _ in range(iters):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return float(np.sqrt(x @ gram @ x))


def matrix_from_action(apply_fn, dim: int) -> np.ndarray:
    """Materialize a linear map from its action on the standard basis."""
    cols = []
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        cols.append(apply_fn(e))
    return np.column_stack(cols)
