"""Kneser layers, the p-biased disjointness chain, and the Up/Down transfer.

Subsets of ``[n]`` double as points of ``{0,1}^n``: element ``i`` is
coordinate ``i``, i.e. bit ``n-1-i`` of the canonical index (coordinate 0 is
most significant). Layer tables are indexed by the combinatorial number
system over ascending elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .chain import BaseChain, ProductSpace, quad_form, validate_chain
from .functions import PointFunction
from .independent import DEFAULT_MWIS_CAP, is_independent
from .junta import CaptureParams, IndependentCapture, independent_junta_capture


def _as_fraction(p) -> Fraction:
    return p if isinstance(p, Fraction) else Fraction(p).limit_denominator(10 ** 12)


def disjointness_chain(p) -> BaseChain:
    """Chain on ``{0, 1}`` moving ``0 -> 1`` w.p. ``p/(1-p)`` and ``1 -> 0`` surely."""
    if not 0 < float(p) < 0.5:
        raise ValueError(f"p must lie in (0, 1/2), got {p}")
    q = _as_fraction(p)
    stay = (1 - 2 * q) / (1 - q)
    move = q / (1 - q)
    return validate_chain([[str(stay), str(move)], [1, 0]])


@lru_cache(maxsize=32)
def _cached_chain(p: float) -> BaseChain:
    return disjointness_chain(p)


def cube_space(n: int, p: float) -> ProductSpace:
    return ProductSpace(_cached_chain(float(p)), n)


def set_to_code(n: int, s: Iterable[int]) -> int:
    code = 0
    for i in s:
        if not 0 <= i < n:
            raise ValueError(f"element {i} outside [0, {n})")
        code |= 1 << (n - 1 - i)
    return code


def code_to_set(n: int, code: int) -> tuple:
    return tuple(i for i in range(n) if code >> (n - 1 - i) & 1)


def popcounts(n: int) -> np.ndarray:
    codes = np.arange(1 << n)
    out = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        out += (codes >> b) & 1
    return out


def mu_pp(n: int, p: float, x: Iterable[int], y: Iterable[int]) -> float:
    """``p^|x| p^|y| (1-2p)^(n-|x|-|y|)`` for disjoint ``x, y``; 0 otherwise."""
    x, y = set(x), set(y)
    if x & y:
        return 0.0
    return p ** len(x) * p ** len(y) * (1 - 2 * p) ** (n - len(x) - len(y))


def edge_cube(g: PointFunction, p: float | None = None) -> float:
    """``Edge(g)``: ordered disjoint pairs weighted by ``mu_{p,p}``.

    Evaluated as ``<g, A g>`` for the disjointness product chain.
    """
    return quad_form(g.space, g, g)


def rank_subset(s: Iterable[int]) -> int:
    """Combinatorial-number-system rank of a subset (elements ascending)."""
    return sum(math.comb(c, i + 1) for i, c in enumerate(sorted(s)))


def unrank_subset(rank: int, k: int) -> tuple:
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        out.append(c)
        rank -= math.comb(c, i)
    return tuple(sorted(out))


@lru_cache(maxsize=64)
def layer_sets(n: int, k: int) -> tuple:
    """Every k-subset of ``[n]`` in rank order."""
    return tuple(unrank_subset(r, k) for r in range(math.comb(n, k)))


@lru_cache(maxsize=64)
def layer_codes(n: int, k: int) -> np.ndarray:
    codes = np.array([set_to_code(n, s) for s in layer_sets(n, k)], dtype=np.int64)
    codes.setflags(write=False)
    return codes


@dataclass(frozen=True, eq=False)
class LayerFunction:
    n: int
    k: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 < self.k < self.n / 2:
            raise ValueError(f"need 0 < k < n/2, got n={self.n}, k={self.k}")
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != math.comb(self.n, self.k):
            raise ValueError(f"expected C({self.n},{self.k}) = {math.comb(self.n, self.k)} values")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("layer function values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, n: int, k: int, c: float = 1.0) -> "LayerFunction":
        return cls(n, k, np.full(math.comb(n, k), float(c)))

    @classmethod
    def star(cls, n: int, k: int, element: int = 0) -> "LayerFunction":
        return cls(n, k, np.array([float(element in s) for s in layer_sets(n, k)]))

    def value(self, s) -> float:
        return float(self.values[rank_subset(s)])


def kneser_params(n: int, p) -> int:
    """``k = p n``, refusing non-integers."""
    k = _as_fraction(p) * n
    if k.denominator != 1:
        raise ValueError(f"p*n = {float(k)} is not an integer")
    if not 0 < float(p) < 0.5:
        raise ValueError("p must lie in (0, 1/2)")
    return int(k)


def _disjoint_matrix(codes: np.ndarray) -> np.ndarray:
    return (codes[:, None] & codes[None, :]) == 0


def edge_layer(f: LayerFunction, unordered: bool = False) -> float:
    """Edge density of ``f`` on the Kneser graph, normalised so ``Edge(1) = 1``.

    Sums over ordered disjoint pairs; ``unordered=True`` halves the result.
    """
    codes = layer_codes(f.n, f.k)
    D = _disjoint_matrix(codes)
    total = float(f.values @ D @ f.values) / (math.comb(f.n, f.k) * math.comb(f.n - f.k, f.k))
    return total / 2 if unordered else total


def up_lift(f: LayerFunction, p) -> PointFunction:
    """Average ``f`` over the k-subsets of ``x`` (zero when ``|x| < k``)."""
    n, k = f.n, f.k
    if kneser_params(n, p) != k:
        raise ValueError(f"k = {k} differs from p*n")
    h = np.zeros(1 << n)
    h[layer_codes(n, k)] = f.values
    codes = np.arange(1 << n)
    for b in range(n):
        bit = 1 << b
        low = codes[(codes & bit) == 0]
        h[low | bit] += h[low]
    sizes = popcounts(n)
    denom = np.array([math.comb(int(s), k) for s in sizes], dtype=float)
    g = np.where(sizes >= k, h / np.where(denom > 0, denom, 1.0), 0.0)
    return PointFunction(cube_space(n, float(p)), np.clip(g, 0.0, 1.0))


def c_constant(p, n: int) -> float:
    """``c(p, n) = Edge(up_lift(1))``."""
    k = kneser_params(n, p)
    return edge_cube(up_lift(LayerFunction.constant(n, k), p))


def falling(a: int, i: int) -> int:
    out = 1
    for t in range(i):
        out *= a - t
    return out


def down_inner_sum(p: float, n: int, k: int, J_size: int, w_size: int) -> float:
    """``sum_i p^(k+i) (1-p)^(n-k-i) C(n, k+i) (n-k-(|J|-|w|))_i / (n-k)_i``."""
    m = n - k - (J_size - w_size)
    total = 0.0
    for i in range(m + 1):
        log = ((k + i) * math.log(p) + (n - k - i) * math.log1p(-p) + math.lgamma(n + 1)
               - math.lgamma(k + i + 1) - math.lgamma(n - k - i + 1))
        ratio = math.exp(math.lgamma(m + 1) - math.lgamma(m - i + 1) - math.lgamma(n - k + 1)
                         + math.lgamma(n - k - i + 1))
        total += math.exp(log) * ratio
    return total


@dataclass(frozen=True)
class DownRatio:
    V_f: float
    V_g: float
    ratio: float
    inner_sum: float
    inner_ok: bool


def down_ratio(f: LayerFunction, g: PointFunction, J, w, p) -> DownRatio:
    """Masses of the cell ``w`` of ``{0,1}^J`` on the layer and on the cube.

    ``w`` is given as the subset of ``J`` it selects. ``inner_ok`` flags
    whether the closed-form inner sum reaches 1/5; it is reported, never
    raised, because the transfer only holds for large ``n``.
    """
    n, k = f.n, f.k
    J = tuple(sorted(J))
    w = set(w)
    if not w <= set(J):
        raise ValueError("w must be a subset of J")
    if len(w) > k:
        raise ValueError("|w| must not exceed k")
    jmask = set_to_code(n, J)
    wmask = set_to_code(n, w)
    space = g.space
    codes = np.arange(space.size)
    in_cell = (codes & jmask) == wmask
    V_g = float(np.dot(space.measure[in_cell], g.values[in_cell]))
    lcodes = layer_codes(n, k)
    on_layer = (lcodes & jmask) == wmask
    V_f = float(f.values[on_layer].sum()) / math.comb(n, k)
    inner = down_inner_sum(float(p), n, k, len(J), len(w))
    ratio = V_f / V_g if V_g > 0 else (0.0 if V_f == 0 else math.inf)
    return DownRatio(V_f, V_g, ratio, inner, inner > 0.2)


def is_intersecting(J_size: int, T) -> bool:
    """No two members of ``T`` (a member with itself included) are disjoint.

    ``T`` holds cells of ``{0,1}^J`` as canonical indices (bitmasks).
    """
    T = [int(t) for t in T]
    return all(a & b for a in T for b in T)


@dataclass(frozen=True, eq=False)
class KneserCapture:
    J: tuple
    T: tuple
    captured_loss: float
    cube_loss: float
    edge_layer: float
    edge_layer_unordered: float
    edge_cube: float
    intersecting: bool
    inner: IndependentCapture

    def as_dict(self) -> dict:
        return {
            "J": list(self.J),
            "T": list(self.T),
            "T_sets": [list(code_to_set(len(self.J), t)) for t in self.T],
            "captured_loss": self.captured_loss,
            "cube_loss": self.cube_loss,
            "edge_layer": self.edge_layer,
            "edge_layer_unordered": self.edge_layer_unordered,
            "edge_cube": self.edge_cube,
            "intersecting": self.intersecting,
            "capture": self.inner.as_dict(),
        }


def layer_loss(f: LayerFunction, J, T) -> float:
    """``C(n,k)^-1 sum_{x : x cap J not in T} f(x)`` by enumeration of the layer."""
    J = tuple(J)
    T = set(int(t) for t in T)
    total = 0.0
    for s, v in zip(layer_sets(f.n, f.k), f.values):
        cell = set_to_code(len(J), [pos for pos, c in enumerate(J) if c in s])
        if cell not in T:
            total += v
    return total / math.comb(f.n, f.k)


def kneser_capture(f: LayerFunction, eps: float, p, params: CaptureParams = CaptureParams(),
                   mwis_cap: int = DEFAULT_MWIS_CAP) -> KneserCapture:
    """Lift to the cube, capture by an independent junta, and read the loss back on the layer."""
    g = up_lift(f, p)
    inner = independent_junta_capture(g, eps, params, mwis_cap)
    J, T = inner.J, inner.T
    intersecting = is_intersecting(len(J), T)
    assert intersecting == is_independent(g.space.sub(len(J)), T)
    assert intersecting, "captured family is not intersecting"
    return KneserCapture(J, T, layer_loss(f, J, T), inner.loss, edge_layer(f), edge_layer(f, unordered=True),
                         edge_cube(g), intersecting, inner)
