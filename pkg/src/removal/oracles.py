"""Brute-force reference implementations.

Each function here recomputes a quantity along a path that shares no code
with the fast implementation it checks: explicit pair sums, full Kronecker
matrices, subset enumeration. They are only meant for desk-scale inputs.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .chain import ProductSpace


def product_edge_matrix(space: ProductSpace) -> np.ndarray:
    """``W[x, y] = prod_i mu(x_i) A(x_i, y_i)`` built from digit tables."""
    digits = space.digits()
    E = space.base.edge_matrix
    W = np.ones((space.size, space.size))
    for i in range(space.n):
        col = digits[:, i]
        W *= E[col[:, None], col[None, :]]
    return W


def product_transition_matrix(space: ProductSpace) -> np.ndarray:
    digits = space.digits()
    A = space.base.transition
    M = np.ones((space.size, space.size))
    for i in range(space.n):
        col = digits[:, i]
        M *= A[col[:, None], col[None, :]]
    return M


def quad_form_bruteforce(space: ProductSpace, f, g) -> float:
    """``sum_{x,y} mu(x) A(x,y) f(x) g(y)`` over all ordered pairs."""
    fv = np.asarray(getattr(f, "values", f), dtype=float)
    gv = np.asarray(getattr(g, "values", g), dtype=float)
    return float(fv @ product_edge_matrix(space) @ gv)


def apply_markov_bruteforce(space: ProductSpace, f) -> np.ndarray:
    return product_transition_matrix(space) @ np.asarray(getattr(f, "values", f), dtype=float)


def min_edge_weight_bruteforce(space: ProductSpace) -> float:
    W = product_edge_matrix(space)
    return float(W[W > 0].min())


def restrict_bruteforce(f, coords, cell) -> np.ndarray:
    """Walk raw codes and keep those whose digits on ``coords`` equal ``cell``."""
    space = f.space
    coords = sorted(coords)
    out = []
    for code in range(space.size):
        digits, rest = [], code
        for _ in range(space.n):
            digits.append(rest % space.radix)
            rest //= space.radix
        digits.reverse()
        if all(digits[c] == v for c, v in zip(coords, cell)):
            out.append(f.values[code])
    return np.array(out)


def conditional_expectation_bruteforce(f, coords) -> np.ndarray:
    space = f.space
    coords = sorted(coords)
    digits = space.digits()
    cells = np.zeros(space.size, dtype=np.int64)
    for c in coords:
        cells = cells * space.radix + digits[:, c]
    size = space.radix ** len(coords)
    num = np.bincount(cells, weights=space.measure * f.values, minlength=size)
    den = np.bincount(cells, weights=space.measure, minlength=size)
    return num / den


def influence_variance(f, i: int) -> float:
    """``E_{x_-i}[Var_{x_i} f]`` computed directly."""
    space = f.space
    mu = space.base.stationary
    tensor = np.moveaxis(f.tensor, i, -1)
    mean = tensor @ mu
    var = ((tensor - mean[..., None]) ** 2) @ mu
    rest = space.measure.reshape(space.shape)
    rest = np.moveaxis(rest, i, -1).sum(axis=-1)
    return float(np.sum(rest * var))


def noise_matrix(space: ProductSpace, eta: float) -> np.ndarray:
    """Full matrix of ``(eta I + (1 - eta) 1 mu^T)^{(x)n}``."""
    base = space.base
    T = eta * np.eye(base.size) + (1 - eta) * np.outer(np.ones(base.size), base.stationary)
    out = np.ones((1, 1))
    for _ in range(space.n):
        out = np.kron(out, T)
    return out


def mwis_bruteforce(space: ProductSpace, vertices, weights) -> tuple:
    """Maximum-weight independent set by enumerating every subset (<= 20 vertices)."""
    vertices = list(vertices)
    if len(vertices) > 20:
        raise ValueError("too many vertices for exhaustive enumeration")
    A = product_transition_matrix(space) > 0
    best, best_set = 0.0, ()
    for mask in range(1 << len(vertices)):
        chosen = [vertices[i] for i in range(len(vertices)) if mask >> i & 1]
        if any(A[a, b] for a in chosen for b in chosen):
            continue
        w = sum(weights[i] for i in range(len(vertices)) if mask >> i & 1)
        if w > best:
            best, best_set = w, tuple(chosen)
    return best_set, best


def edge_cube_bruteforce(values, n: int, p: float) -> float:
    """``sum_{x cap y = {}} g(x) g(y) mu_pp(x, y)`` over disjoint ordered pairs."""
    total = 0.0
    full = (1 << n) - 1
    for x in range(1 << n):
        if values[x] == 0:
            continue
        comp = full & ~x
        y = comp
        while True:
            sx = bin(x).count("1")
            sy = bin(y).count("1")
            total += values[x] * values[y] * p ** sx * p ** sy * (1 - 2 * p) ** (n - sx - sy)
            if y == 0:
                break
            y = (y - 1) & comp
    return total


def edge_layer_bruteforce(values, n: int, k: int) -> float:
    """Ordered disjoint pairs of k-sets, enumerated as tuples."""
    sets = list(combinations(range(n), k))
    rank = {s: i for i, s in enumerate(sorted(sets, key=lambda s: tuple(reversed(s))))}
    total = 0.0
    for x in sets:
        for y in sets:
            if not set(x) & set(y):
                total += values[rank[x]] * values[rank[y]]
    return total / (math.comb(n, k) * math.comb(n - k, k))


def threshold_edge_cube(n: int, k: int, p: float) -> float:
    """``Edge(1_{|x| >= k})`` summed by sizes of the two disjoint sets."""
    total = 0.0
    for a in range(k, n + 1):
        for b in range(k, n - a + 1):
            pairs = math.comb(n, a) * math.comb(n - a, b)
            total += pairs * p ** a * p ** b * (1 - 2 * p) ** (n - a - b)
    return total


def down_inner_sum_direct(p: float, n: int, k: int, J_size: int, w_size: int) -> float:
    """The down-transfer inner sum in its original form, summed over supersets by size."""
    free = n - J_size
    need = k - w_size
    total = 0.0
    for extra in range(0, free - need + 1):
        count = math.comb(free - need, extra)
        size = k + extra
        total += count * p ** size * (1 - p) ** (n - size) * math.comb(n, k) / math.comb(size, k)
    return total


def label_pair_density_bruteforce(space: ProductSpace, labels) -> float:
    total = 0.0
    E = space.base.edge_matrix
    for a in range(space.size):
        pa = space.point(a)
        for b in range(space.size):
            if labels[a] & labels[b]:
                pb = space.point(b)
                total += float(np.prod([E[u, v] for u, v in zip(pa, pb)]))
    return total
