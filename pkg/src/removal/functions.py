"""Functions on product spaces: restrictions, averages, Fourier expansion, noise."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .chain import BaseChain, ChainSpectrum, ProductSpace, apply_axes, eigendecompose

RNG_NAME = "numpy.random.PCG64"


@dataclass(frozen=True, eq=False)
class PointFunction:
    """A dense table of values on ``V^n`` in canonical index order.

    ``signed=False`` means the values are checked to lie in ``[0, 1]``.
    """

    space: ProductSpace
    values: np.ndarray
    signed: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape != (self.space.size,):
            raise ValueError(f"expected {self.space.size} values, got {values.size}")
        if not self.signed and (np.any(values < 0) or np.any(values > 1)):
            raise ValueError("unit-interval function has values outside [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.space.shape)

    def mean(self) -> float:
        return float(np.dot(self.space.measure, self.values))

    def norm2(self) -> float:
        return float(np.dot(self.space.measure, self.values ** 2))

    @classmethod
    def constant(cls, space: ProductSpace, c: float) -> "PointFunction":
        return cls(space, np.full(space.size, float(c)))

    @classmethod
    def indicator(cls, space: ProductSpace, points: Iterable) -> "PointFunction":
        values = np.zeros(space.size)
        for p in points:
            values[p if isinstance(p, (int, np.integer)) else space.index(p)] = 1.0
        return cls(space, values)

    @classmethod
    def dictator(cls, space: ProductSpace, coord: int = 0, value: int = 0) -> "PointFunction":
        """Indicator of ``{x : x[coord] == value}``."""
        digits = space.digits()
        return cls(space, (digits[:, coord] == value).astype(float))


def coordinate_set(coords: Iterable[int], n: int) -> tuple:
    """Validate and sort a set of coordinates in ``range(n)``."""
    out = tuple(sorted(int(c) for c in coords))
    if len(set(out)) != len(out):
        raise ValueError(f"repeated coordinates in {out}")
    if out and (out[0] < 0 or out[-1] >= n):
        raise ValueError(f"coordinates {out} out of range for n={n}")
    return out


def cell_index(radix: int, cell) -> int:
    code = 0
    for v in cell:
        code = code * radix + int(v)
    return code


def cell_digits(radix: int, size: int, index: int) -> tuple:
    out = []
    for _ in range(size):
        out.append(index % radix)
        index //= radix
    return tuple(reversed(out))


def restrict(f: PointFunction, coords, cell) -> PointFunction:
    """``f(x, .)`` on ``V^{[n] minus I}`` for a cell ``x`` of ``V^I``.

    ``cell`` is either a tuple aligned with the sorted coordinates or its
    canonical cell index.
    """
    space = f.space
    coords = coordinate_set(coords, space.n)
    if isinstance(cell, (int, np.integer)):
        if not 0 <= cell < space.radix ** len(coords):
            raise ValueError(f"cell index {cell} out of range")
        cell = cell_digits(space.radix, len(coords), int(cell))
    cell = tuple(int(v) for v in cell)
    if len(cell) != len(coords) or any(not 0 <= v < space.radix for v in cell):
        raise ValueError(f"invalid assignment {cell} to coordinates {coords}")
    index = [slice(None)] * space.n
    for c, v in zip(coords, cell):
        index[c] = v
    sub = f.tensor[tuple(index)]
    return PointFunction(space.sub(space.n - len(coords)), np.asarray(sub).reshape(-1), f.signed)


def conditional_expectation(f: PointFunction, coords) -> np.ndarray:
    """Table over ``V^I`` of ``E[f(x, .)]``, in canonical cell order."""
    space = f.space
    coords = coordinate_set(coords, space.n)
    tensor = f.tensor
    mu = space.base.stationary
    for axis in range(space.n - 1, -1, -1):
        if axis not in coords:
            tensor = np.tensordot(tensor, mu, axes=([axis], [0]))
    return np.asarray(tensor, dtype=float).reshape(-1)


def cell_measure(base: BaseChain, size: int) -> np.ndarray:
    """``mu^{(x)size}`` as a flat table over ``V^size``."""
    out = np.ones(1)
    for _ in range(size):
        out = np.multiply.outer(out, base.stationary).ravel()
    return out


@lru_cache(maxsize=64)
def spectrum_of(chain: BaseChain) -> ChainSpectrum:
    return eigendecompose(chain)


@dataclass(frozen=True, eq=False)
class FourierExpansion:
    """Coefficients ``f^(S)`` in the product eigenbasis.

    ``S`` runs over ``{0..|V|-1}^n`` in the same mixed-radix order as points;
    ``S_i = 0`` is the constant character.
    """

    space: ProductSpace
    spectrum: ChainSpectrum
    coefficients: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return (self.space.digits() != 0).sum(axis=1)

    @property
    def lambdas(self) -> np.ndarray:
        out = np.ones(1)
        for _ in range(self.space.n):
            out = np.multiply.outer(out, self.spectrum.eigenvalues).ravel()
        return out

    def synthesize(self) -> np.ndarray:
        return apply_axes(self.space, self.coefficients, self.spectrum.basis)

    def influences(self) -> np.ndarray:
        sq = (self.coefficients ** 2).reshape(self.space.shape)
        total = sq.sum()
        return np.array([total - np.take(sq, 0, axis=i).sum() for i in range(self.space.n)])


def fourier_expand(f: PointFunction, spectrum: ChainSpectrum | None = None) -> FourierExpansion:
    space = f.space
    if spectrum is None:
        spectrum = spectrum_of(space.base)
    if spectrum.basis.shape != (space.radix, space.radix):
        raise ValueError("spectrum does not belong to the function's base chain")
    analysis = (spectrum.basis * space.base.stationary[:, None]).T
    coeffs = apply_axes(space, f.values, analysis)
    return FourierExpansion(space, spectrum, coeffs)


def noise_operator(f: PointFunction, eta: float) -> PointFunction:
    """``N_eta f``: scale the degree-``|S|`` coefficients by ``eta**|S|``.

    For unit-interval input the result is clipped back into ``[0, 1]`` to
    remove rounding residue; the operator is Markov so nothing else changes.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    exp = fourier_expand(f)
    scaled = FourierExpansion(exp.space, exp.spectrum, exp.coefficients * eta ** exp.degrees)
    values = scaled.synthesize()
    if not f.signed:
        values = np.clip(values, 0.0, 1.0)
    return PointFunction(f.space, values, f.signed)


def influences(f: PointFunction) -> np.ndarray:
    """``Inf_i(f) = sum_{S: S_i != 0} f^(S)^2`` for every coordinate."""
    return fourier_expand(f).influences()


def influence(f: PointFunction, i: int) -> float:
    if not 0 <= i < f.space.n:
        raise ValueError(f"coordinate {i} out of range for n={f.space.n}")
    return float(influences(f)[i])


def randomized_booleanize(f: PointFunction, m: int, seed: int) -> PointFunction:
    """Round ``f`` to a {0,1}-valued function on ``V^{n+m}``.

    ``f'(x, y) = 1`` with probability ``f(x)``, independently for every
    ``(x, y)``, drawn from a PCG64 generator seeded with ``seed``.
    """
    if f.signed:
        raise ValueError("randomized_booleanize needs a unit-interval function")
    space = f.space.sub(f.space.n + m)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.random((f.space.size, f.space.radix ** m))
    values = (draws < f.values[:, None]).astype(float).reshape(-1)
    return PointFunction(space, values)


def random_function(space: ProductSpace, rng: np.random.Generator, signed: bool = False) -> PointFunction:
    if signed:
        return PointFunction(space, rng.uniform(-1.0, 1.0, space.size), signed=True)
    return PointFunction(space, rng.random(space.size))
