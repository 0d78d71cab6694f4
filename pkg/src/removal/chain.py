"""Base Markov chains and their tensor powers.

A product space ``V^n`` is stored densely. Points are encoded in mixed radix
with coordinate 0 most significant, which is exactly numpy's C order when the
flat table is reshaped to ``(|V|,) * n``. Every module relies on this layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

import numpy as np

ROW_TOL = 1e-12
REV_TOL = 1e-12
DEFAULT_POINT_CAP = 3 ** 16


class ChainError(ValueError):
    """A transition matrix fails one of the chain requirements.

    ``prop`` names the violated property and ``witness`` is a pair of states
    (or a state and a value) exhibiting the failure.
    """

    def __init__(self, prop: str, witness, message: str):
        super().__init__(f"{prop}: {message} (witness {witness})")
        self.prop = prop
        self.witness = witness


@dataclass(frozen=True, eq=False)
class BaseChain:
    states: tuple
    transition: np.ndarray
    stationary: np.ndarray
    w_min: float

    @property
    def size(self) -> int:
        return len(self.states)

    @cached_property
    def pattern(self) -> np.ndarray:
        """Boolean sparsity pattern of the transition matrix."""
        return self.transition > 0

    @cached_property
    def edge_matrix(self) -> np.ndarray:
        """``mu(x) A(x, y)``, the stationary weight of each directed edge."""
        return self.stationary[:, None] * self.transition

    @property
    def has_loops(self) -> np.ndarray:
        return np.diag(self.pattern).copy()


@dataclass(frozen=True)
class ChainSpectrum:
    """Eigen-decomposition of a reversible chain.

    ``basis[:, s]`` is the s-th eigenfunction, orthonormal under ``mu``.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    lambda2: float


def _parse_entry(value) -> float:
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    if isinstance(value, Fraction):
        return float(value)
    return float(value)


def _reachable(pattern: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(len(pattern), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(pattern[u]):
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def chain_period(pattern: np.ndarray) -> int:
    """Period of a strongly connected pattern.

    BFS levels from state 0; the period is the gcd of
    ``level(u) + 1 - level(v)`` over all edges ``u -> v``, which equals the gcd
    of the lengths of cycles through state 0.
    """
    size = len(pattern)
    level = np.full(size, -1)
    level[0] = 0
    queue = [0]
    for u in queue:
        for v in np.flatnonzero(pattern[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    period = 0
    for u, v in zip(*np.nonzero(pattern)):
        period = gcd(period, abs(int(level[u]) + 1 - int(level[v])))
    return period


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Solve ``(A^T - I) pi = 0`` with ``sum(pi) = 1`` by least squares."""
    size = len(transition)
    system = np.vstack([transition.T - np.eye(size), np.ones((1, size))])
    rhs = np.zeros(size + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return pi


def validate_chain(transition, states: Sequence | None = None) -> BaseChain:
    """Validate a transition matrix and build a :class:`BaseChain`.

    Entries may be numbers or fraction strings such as ``"1/3"``; fractions
    are parsed exactly and then converted to double.

    Raises
    ------
    ChainError
        With ``prop`` one of ``shape``, ``negative-entry``,
        ``not-row-stochastic``, ``reducible``, ``periodic``,
        ``not-reversible``.
    """
    rows = [[_parse_entry(v) for v in row] for row in transition]
    mat = np.array(rows, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
        raise ChainError("shape", mat.shape, "transition must be a square matrix with at least 2 states")
    size = mat.shape[0]
    if states is None:
        states = tuple(range(size))
    states = tuple(states)
    if len(states) != size:
        raise ChainError("shape", (len(states), size), "number of state labels differs from matrix size")

    neg = np.argwhere(mat < 0)
    if len(neg):
        x, y = map(int, neg[0])
        raise ChainError("negative-entry", (x, y), f"A[{x},{y}] = {float(mat[x, y])}")
    sums = mat.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
    if len(bad):
        x = int(bad[0])
        raise ChainError("not-row-stochastic", (x, float(sums[x])), f"row {x} sums to {float(sums[x])!r}")

    pattern = mat > 0
    for start, pat in ((0, pattern), (0, pattern.T)):
        seen = _reachable(pat, start)
        if not seen.all():
            y = int(np.flatnonzero(~seen)[0])
            pair = (0, y) if pat is pattern else (y, 0)
            raise ChainError("reducible", pair, f"state {pair[1]} is not reachable from state {pair[0]}")

    period = chain_period(pattern)
    if period != 1:
        raise ChainError("periodic", (0, period), f"state 0 has period {period}")

    pi = stationary_distribution(mat)
    if np.any(pi <= 0):
        x = int(np.argmin(pi))
        raise ChainError("reducible", (x, float(pi[x])), "stationary measure is not strictly positive")

    flow = pi[:, None] * mat
    diff = np.abs(flow - flow.T)
    if diff.max() > REV_TOL:
        x, y = map(int, np.unravel_index(np.argmax(diff), diff.shape))
        raise ChainError("not-reversible", (x, y), f"mu(x)A(x,y) - mu(y)A(y,x) = {float(flow[x, y] - flow[y, x])!r}")

    w_min = float(flow[pattern].min())
    mat.setflags(write=False)
    pi.setflags(write=False)
    return BaseChain(states=states, transition=mat, stationary=pi, w_min=w_min)


def eigendecompose(chain: BaseChain) -> ChainSpectrum:
    """Eigenvalues sorted by decreasing absolute value and a mu-orthonormal basis.

    Works with the symmetrisation ``D^{1/2} A D^{-1/2}`` (``D = diag(mu)``),
    which is symmetric exactly when the chain is reversible.
    """
    mu = chain.stationary
    root = np.sqrt(mu)
    sym = root[:, None] * chain.transition / root[None, :]
    sym = (sym + sym.T) / 2
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ChainError("eigendecomposition", None, str(exc)) from exc
    basis = vecs / root[:, None]
    order = sorted(range(len(vals)), key=lambda i: (-round(abs(vals[i]), 12), -vals[i], i))
    vals = vals[order]
    basis = basis[:, order]
    # the top eigenfunction is the constant; pin it to exactly 1
    basis[:, 0] = 1.0
    vals[0] = 1.0
    for s in range(1, len(vals)):
        pivot = np.flatnonzero(np.abs(basis[:, s]) > 1e-9)[0]
        if basis[pivot, s] < 0:
            basis[:, s] = -basis[:, s]
    lambda2 = float(abs(vals[1])) if len(vals) > 1 else 0.0
    if lambda2 >= 1 - 1e-12:
        raise ChainError("eigendecomposition", (0, lambda2), "second eigenvalue has modulus 1")
    vals.setflags(write=False)
    basis.setflags(write=False)
    return ChainSpectrum(eigenvalues=vals, basis=basis, lambda2=lambda2)


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """``V^n`` with the chain ``A^{(x)n}`` and measure ``mu^{(x)n}``."""

    base: BaseChain
    n: int
    cap: int = field(default=DEFAULT_POINT_CAP, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        if self.base.size ** self.n > self.cap:
            raise MemoryError(f"|V|^n = {self.base.size}^{self.n} exceeds the point cap {self.cap}")

    @property
    def radix(self) -> int:
        return self.base.size

    @property
    def size(self) -> int:
        return self.base.size ** self.n

    @property
    def shape(self) -> tuple:
        return (self.base.size,) * self.n

    def sub(self, n: int) -> "ProductSpace":
        return ProductSpace(self.base, n, self.cap)

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and other.base is self.base and other.n == self.n

    def __hash__(self):
        return hash((id(self.base), self.n))

    @cached_property
    def measure(self) -> np.ndarray:
        """Flat table of ``mu^{(x)n}``."""
        out = np.ones(1)
        for _ in range(self.n):
            out = np.multiply.outer(out, self.base.stationary).ravel()
        out.setflags(write=False)
        return out

    def index(self, point: Iterable[int]) -> int:
        point = tuple(int(v) for v in point)
        if len(point) != self.n or any(not 0 <= v < self.radix for v in point):
            raise ValueError(f"invalid point {point} for |V|={self.radix}, n={self.n}")
        code = 0
        for v in point:
            code = code * self.radix + v
        return code

    def point(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range")
        return tuple(int(v) for v in np.unravel_index(index, self.shape)) if self.n else ()

    def digits(self, indices=None) -> np.ndarray:
        """Digit matrix of shape ``(len(indices), n)``; all points by default."""
        if indices is None:
            indices = np.arange(self.size)
        indices = np.asarray(indices, dtype=np.int64)
        out = np.empty((len(indices), self.n), dtype=np.int64)
        rest = indices.copy()
        for i in range(self.n - 1, -1, -1):
            out[:, i] = rest % self.radix
            rest //= self.radix
        return out

    @cached_property
    def min_edge_weight(self) -> float:
        return self.base.w_min ** self.n


def edge_weight(space: ProductSpace, x, y) -> float:
    """``mu^{(x)n}(x) A^{(x)n}(x, y)`` for points given as tuples or indices."""
    if isinstance(x, (int, np.integer)):
        x = space.point(int(x))
    if isinstance(y, (int, np.integer)):
        y = space.point(int(y))
    space.index(x), space.index(y)
    weights = space.base.edge_matrix
    out = 1.0
    for a, b in zip(x, y):
        out *= weights[a, b]
    return float(out)


def apply_axes(space: ProductSpace, values: np.ndarray, matrix: np.ndarray, axes=None) -> np.ndarray:
    """Apply ``matrix`` along the given tensor axes (all by default).

    ``out[..., a, ...] = sum_b matrix[a, b] values[..., b, ...]``; the full
    Kronecker power is never formed.
    """
    values = np.asarray(values)
    if values.shape != (space.size,):
        raise ValueError(f"table of length {values.shape} does not match |V|^n = {space.size}")
    if space.n == 0:
        return values.copy()
    tensor = values.reshape(space.shape)
    for axis in range(space.n) if axes is None else axes:
        tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(tensor).reshape(-1)


def apply_markov(space: ProductSpace, f) -> np.ndarray:
    """``A^{(x)n} f`` as a flat table; ``f`` may be a table or a PointFunction."""
    values = getattr(f, "values", f)
    return apply_axes(space, values, space.base.transition)


def quad_form(space: ProductSpace, f, g) -> float:
    """``<f, A g>_mu = sum_x mu(x) f(x) (A g)(x)``."""
    fv = np.asarray(getattr(f, "values", f), dtype=float)
    if fv.shape != (space.size,):
        raise ValueError(f"table of length {fv.shape} does not match |V|^n = {space.size}")
    return float(np.dot(space.measure * fv, apply_markov(space, g)))



def complete_graph_chain(m: int = 3) -> BaseChain:
    """Uniform walk on the complete graph ``K_m``: ``A = (J - I) / (m - 1)``."""
    if m < 3:
        raise ValueError("K_m is periodic for m < 3")
    rows = [[0 if i == j else f"1/{m - 1}" for j in range(m)] for i in range(m)]
    return validate_chain(rows)
