"""Independent sets in product graphs and the matching-like reduction.

Adjacency is always read off the sparsity pattern of the base transition
matrix: ``x ~ y`` iff ``A(x_i, y_i) > 0`` for every coordinate. No decision
here compares a floating-point quadratic form with zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .chain import ProductSpace
from .functions import PointFunction

DEFAULT_MWIS_CAP = 2000
MATCHING_TOL = 1e-12


class CapExceeded(ValueError):
    """A desk-scale cap (vertex count, table size, search budget) was exceeded."""


@dataclass(frozen=True, eq=False)
class SupportGraph:
    """Induced subgraph of the product graph on ``vertices`` (canonical indices).

    ``adjacency[i, j]`` is True iff there is a positive-probability transition
    between ``vertices[i]`` and ``vertices[j]``; the diagonal marks loops.
    """

    space: ProductSpace
    vertices: np.ndarray
    adjacency: np.ndarray

    @property
    def loops(self) -> np.ndarray:
        return np.diag(self.adjacency).copy()

    def edges(self) -> list:
        """Pairs ``(x, y)`` with ``x <= y`` in index order, loops included."""
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(int(self.vertices[a]), int(self.vertices[b])) for a, b in zip(i, j)]


def support_graph(space: ProductSpace, vertices: Iterable | None = None) -> SupportGraph:
    if vertices is None:
        vertices = np.arange(space.size)
    vertices = np.unique(np.asarray(list(vertices), dtype=np.int64))
    digits = space.digits(vertices)
    pattern = space.base.pattern
    adj = np.ones((len(vertices), len(vertices)), dtype=bool)
    for i in range(space.n):
        col = digits[:, i]
        adj &= pattern[col[:, None], col[None, :]]
    adj.setflags(write=False)
    return SupportGraph(space, vertices, adj)


def _as_indices(space: ProductSpace, points) -> list:
    return [int(p) if isinstance(p, (int, np.integer)) else space.index(p) for p in points]


def is_independent(space: ProductSpace, points) -> bool:
    """True iff no pair of members (a member with itself included) is adjacent."""
    indices = _as_indices(space, points)
    if not indices:
        return True
    return not support_graph(space, indices).adjacency.any()


def _branch_and_bound(adj_masks: list, weights: list) -> tuple:
    """Exact maximum-weight independent set on vertices ``0..k-1``.

    Vertices must be loop-free with positive weight, numbered by decreasing
    weight. ``adj_masks[v]`` is the bitmask of neighbours of ``v``. Bounds come
    from a greedy clique partition of the remaining candidates: an independent
    set meets each clique at most once, so the sum of the clique maxima is an
    upper bound on the residual weight.
    """
    k = len(weights)
    full = (1 << k) - 1
    non_adj = [full & ~adj_masks[v] & ~(1 << v) for v in range(k)]
    best = [0.0, 0]

    def bound_order(cands: int):
        order, bounds = [], []
        total = 0.0
        rest = cands
        while rest:
            q = rest
            first = True
            while q:
                v = (q & -q).bit_length() - 1
                if first:
                    total += weights[v]
                    first = False
                q &= adj_masks[v]
                rest &= ~(1 << v)
                order.append(v)
                bounds.append(total)
        return order, bounds

    def expand(weight: float, chosen: int, cands: int):
        order, bounds = bound_order(cands)
        for pos in range(len(order) - 1, -1, -1):
            if weight + bounds[pos] <= best[0]:
                return
            v = order[pos]
            w = weight + weights[v]
            picked = chosen | (1 << v)
            if w > best[0]:
                best[0], best[1] = w, picked
            nxt = cands & non_adj[v]
            if nxt:
                expand(w, picked, nxt)
            cands &= ~(1 << v)

    if k:
        expand(0.0, 0, full)
    mask = best[1]
    return [v for v in range(k) if mask >> v & 1]


def max_weight_independent_set(graph: SupportGraph, weights, cap: int = DEFAULT_MWIS_CAP) -> tuple:
    """Exact maximum-weight independent set of ``graph``.

    Returns ``(points, total)`` where ``points`` is a sorted list of canonical
    point indices. Looped vertices are excluded up front. Zero-weight
    vertices are appended afterwards (in index order) whenever they keep the
    set independent, so an edgeless graph returns every vertex.
    """
    k = len(graph.vertices)
    if k > cap:
        raise CapExceeded(f"support graph has {k} vertices, cap is {cap}")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (k,) or np.any(weights < 0):
        raise ValueError("weights must be a nonnegative vector, one entry per vertex")
    adj = graph.adjacency
    loops = np.diag(adj)
    cand = [i for i in range(k) if not loops[i] and weights[i] > 0]
    cand.sort(key=lambda i: (-weights[i], i))
    pos = {v: p for p, v in enumerate(cand)}
    masks = []
    for v in cand:
        m = 0
        for u in np.flatnonzero(adj[v]):
            p = pos.get(int(u))
            if p is not None:
                m |= 1 << p
        masks.append(m)
    chosen = sorted(cand[p] for p in _branch_and_bound(masks, [float(weights[v]) for v in cand]))
    total = float(sum(weights[v] for v in chosen))
    picked = np.zeros(k, dtype=bool)
    picked[chosen] = True
    for v in range(k):
        if not picked[v] and not loops[v] and weights[v] == 0 and not (adj[v] & picked).any():
            picked[v] = True
    return [int(x) for x in graph.vertices[picked]], total


class FarResult(NamedTuple):
    far: bool
    witness: list
    captured: float


def eps_far_from_independent(g: PointFunction, eps: float, cap: int = DEFAULT_MWIS_CAP) -> FarResult:
    """Is ``g`` eps-far from independent?

    Computes ``m* = max_U E[1_U g]`` over independent ``U`` exactly and returns
    ``E[g] - m* > eps`` together with the maximising set and ``m*``.
    """
    space = g.space
    support = np.flatnonzero(g.values > 0)
    graph = support_graph(space, support)
    weights = space.measure[graph.vertices] * g.values[graph.vertices]
    witness, captured = max_weight_independent_set(graph, weights, cap)
    return FarResult(bool(g.mean() - captured > eps), witness, captured)


@dataclass(frozen=True, eq=False)
class MatchingLikeResult:
    f: PointFunction
    residual_set: list
    augmentation_trace: list


def matching_like_decompose(g: PointFunction) -> MatchingLikeResult:
    """Greedy matching-like minorant of ``g``.

    Starting from ``f = 0``: every looped vertex is saturated (it lies in no
    independent set), then each non-loop edge ``(a, b)`` is visited once in
    index order and, if both endpoints still have slack, receives
    ``gamma = min(mu(a)(g(a)-f(a)), mu(b)(g(b)-f(b)))``: ``f(a) += gamma/mu(a)``
    and ``f(b) += gamma/mu(b)``. The smaller side is set to ``g`` exactly, so
    after the sweep every edge has a saturated endpoint.
    """
    if g.signed:
        raise ValueError("matching_like_decompose needs a unit-interval function")
    space = g.space
    gv = g.values
    mu = space.measure
    f = np.zeros(space.size)
    trace = []
    graph = support_graph(space, np.flatnonzero(gv > 0))
    verts = graph.vertices
    adj = graph.adjacency
    for i in np.flatnonzero(np.diag(adj)):
        x = int(verts[i])
        trace.append(((x, x), float(mu[x] * gv[x])))
        f[x] = gv[x]
    for i in range(len(verts)):
        a = int(verts[i])
        if f[a] >= gv[a]:
            continue
        for j in np.flatnonzero(adj[i, i + 1:]) + i + 1:
            b = int(verts[j])
            if f[b] >= gv[b]:
                continue
            slack_a = mu[a] * (gv[a] - f[a])
            slack_b = mu[b] * (gv[b] - f[b])
            gamma = min(slack_a, slack_b)
            if slack_a <= slack_b:
                f[a] = gv[a]
                f[b] = min(gv[b], f[b] + gamma / mu[b])
            else:
                f[b] = gv[b]
                f[a] = min(gv[a], f[a] + gamma / mu[a])
            trace.append(((a, b), float(gamma)))
            if f[a] >= gv[a]:
                break
    residual = [int(x) for x in np.flatnonzero(f < gv)]
    return MatchingLikeResult(PointFunction(space, f), residual, trace)


class MatchingLikeCheck(NamedTuple):
    ok: bool
    worst_set: list
    worst_mass: float


def is_matching_like(f: PointFunction, cap: int = DEFAULT_MWIS_CAP) -> MatchingLikeCheck:
    """Exact check of ``E[1_W f] <= E[f]/2`` for every independent ``W``."""
    space = f.space
    graph = support_graph(space, np.flatnonzero(f.values > 0))
    weights = space.measure[graph.vertices] * f.values[graph.vertices]
    worst, mass = max_weight_independent_set(graph, weights, cap)
    return MatchingLikeCheck(bool(mass <= f.mean() / 2 + MATCHING_TOL), worst, mass)
