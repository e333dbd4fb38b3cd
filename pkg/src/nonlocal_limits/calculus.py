"""Multi-index calculus on test functions.

Directional derivative forms, higher-order differences, binomial segment
remainders, Taylor polynomials and remainders, plus quadrature residuals for
the two mean-value identities used as correctness gates.

All operations are pure and broadcast over point batches of shape ``(..., dim)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .functions import TestFunction, as_points

Array = np.ndarray

MAX_ORDER = 6
MAX_DIM = 4


@lru_cache(maxsize=None)
def multi_indices(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of the given total order, lexicographic order."""
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"dim must be in 1..{MAX_DIM}")
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}")
    if dim == 1:
        return ((order,),)
    out = []
    for head in range(order, -1, -1):
        for rest in multi_indices(dim - 1, order - head):
            out.append((head,) + rest)
    return tuple(sorted(out, reverse=True))


def multi_factorial(alpha) -> int:
    return math.prod(math.factorial(int(a)) for a in alpha)


def multinomial(m: int, alpha) -> float:
    """m! / alpha! for |alpha| = m."""
    return math.factorial(m) / multi_factorial(alpha)


def directional_m_form(f: TestFunction, x, y, m: int) -> Array:
    """Diagonal m-linear derivative form: sum_{|a|=m} (m!/a!) y^a d^a f(x).

    Equals the sum over ordered index tuples (i_1..i_m) of
    y_{i_1}..y_{i_m} * d^m f / dx_{i_1}..dx_{i_m}.
    """
    if m > f.smoothness_order:
        raise ValueError(f"m={m} exceeds smoothness_order={f.smoothness_order}")
    x = as_points(x, f.dim)
    y = as_points(y, f.dim)
    out = 0.0
    for alpha in multi_indices(f.dim, m):
        mono = np.ones(y.shape[:-1])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * y[..., i] ** a
        out = out + multinomial(m, alpha) * mono * f.partial(alpha, x)
    return out


def direction_bound(f: TestFunction, m: int, sigma) -> Array:
    """Per-direction bound: sup_x |diagonal m-form at x in direction sigma|.

    Bounded by sum_{|a|=m} (m!/a!) |sigma^a| sup|d^a f|; exact truncation of the
    level-set kernels only needs an over-estimate, which this is.
    """
    sigma = as_points(sigma, f.dim)
    out = 0.0
    for alpha in multi_indices(f.dim, m):
        mono = np.ones(sigma.shape[:-1])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * np.abs(sigma[..., i]) ** a
        out = out + multinomial(m, alpha) * f.sup_partial(alpha) * mono
    return out


def forward_difference(f: TestFunction, x, h, m: int) -> Array:
    """m-th order difference: sum_j (-1)^(m+j) C(m,j) f(x + j h)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = as_points(x, f.dim)
    h = as_points(h, f.dim)
    out = 0.0
    for j in range(m + 1):
        out = out + (-1.0) ** (m + j) * math.comb(m, j) * f.eval(x + j * h)
    return out


def centered_remainder(f: TestFunction, x, y, m: int) -> Array:
    """Binomial remainder on the m+1 equally spaced points of segment [x, y].

    sum_j (-1)^j C(m,j) f(((m-j) x + j y) / m); equals (-1)^m times the m-th
    difference with step (y - x)/m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x = as_points(x, f.dim)
    y = as_points(y, f.dim)
    out = 0.0
    for j in range(m + 1):
        point = ((m - j) * x + j * y) / m
        out = out + (-1.0) ** j * math.comb(m, j) * f.eval(point)
    return out


def taylor_polynomial(f: TestFunction, y, x, degree: int) -> Array:
    """Taylor polynomial of f of the given degree, expanded at y, evaluated at x."""
    if degree > f.smoothness_order:
        raise ValueError(f"degree={degree} exceeds smoothness_order={f.smoothness_order}")
    x = as_points(x, f.dim)
    y = as_points(y, f.dim)
    diff = x - y
    out = 0.0
    for order in range(degree + 1):
        for alpha in multi_indices(f.dim, order):
            mono = np.ones(diff.shape[:-1])
            for i, a in enumerate(alpha):
                if a:
                    mono = mono * diff[..., i] ** a
            out = out + f.partial(alpha, y) * mono / multi_factorial(alpha)
    return out


def taylor_remainder(f: TestFunction, x, y, m: int) -> Array:
    """f(x) minus its degree-(m-1) Taylor polynomial expanded at y."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return f.eval(x) - taylor_polynomial(f, y, x, m - 1)


# ---------------------------------------------------------------------------
# Quadrature residuals for the exact integral identities
# ---------------------------------------------------------------------------

def _unit_cube_grid(m: int, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * m), indexing="ij")
    weight = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * m), indexing="ij"):
        weight = weight * g
    return [g.ravel() for g in grids], weight.ravel()


def mean_value_identity_check(f: TestFunction, x, h, m: int, quadrature_nodes: int = 32) -> float:
    """Residual of the cube mean-value identity for the m-th difference.

    |difference - integral over [0,1]^m of the diagonal m-form at x + (sum t_j) h|,
    estimated with tensor Gauss-Legendre quadrature.  Diagnostic only; cost grows
    as nodes^m, so m <= 3.
    """
    if m > 3:
        raise ValueError("identity check restricted to m <= 3")
    x = as_points(x, f.dim)
    h = as_points(h, f.dim)
    ts, w = _unit_cube_grid(m, quadrature_nodes)
    shift = sum(ts)  # (nodes^m,)
    pts = x[np.newaxis, :] + shift[:, np.newaxis] * h[np.newaxis, :]
    form = directional_m_form(f, pts, np.broadcast_to(h, pts.shape), m)
    integral = float(np.dot(w, form))
    lhs = float(forward_difference(f, x, h, m))
    return abs(lhs - integral)


def taylor_kernel_identity_check(f: TestFunction, x, h: float, m: int,
                                 quadrature_nodes: int = 32) -> float:
    """Residual of the iterated-kernel identity for the Taylor remainder.

    The remainder of expanding at x and evaluating at x + h e_N equals
    h^m * integral over [0,1]^m of d^m_N f(x + (prod t_i) h e_N) * prod t_i^(m-i).
    """
    if m > 3:
        raise ValueError("identity check restricted to m <= 3")
    x = as_points(x, f.dim)
    ts, w = _unit_cube_grid(m, quadrature_nodes)
    prod = np.ones_like(ts[0])
    weight = np.ones_like(ts[0])
    for i, t in enumerate(ts):
        prod = prod * t
        weight = weight * t ** (m - 1 - i)
    pts = np.broadcast_to(x, (prod.size, f.dim)).copy()
    pts[:, -1] += prod * h
    alpha = (0,) * (f.dim - 1) + (m,)
    integral = float(np.dot(w * weight, f.partial(alpha, pts)))
    shifted = x.copy()
    shifted[-1] += h
    lhs = float(taylor_remainder(f, shifted, x, m))
    return abs(lhs - h ** m * integral)


def m_form_tableau(f: TestFunction, m: int, xs: Array, ys: Array) -> Array:
    """Matrix of diagonal m-form values: entry (i, j) = form at xs[i] in direction ys[j].

    Separable evaluation used by the local-limit quadratures: partials on the
    x-grid combine with weighted monomials on the y-grid by an outer product.
    """
    xs = as_points(xs, f.dim)
    ys = as_points(ys, f.dim)
    out = np.zeros((xs.shape[0], ys.shape[0]))
    for alpha in multi_indices(f.dim, m):
        mono = np.ones(ys.shape[0])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * ys[:, i] ** a
        out += np.outer(f.partial(alpha, xs), multinomial(m, alpha) * mono)
    return out
