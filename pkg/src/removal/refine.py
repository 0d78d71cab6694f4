"""Entropy potential, refinement witnesses, and parameter schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .chain import BaseChain, ProductSpace
from .functions import PointFunction, cell_measure, conditional_expectation, coordinate_set, restrict
from .independent import support_graph
from .junta import CaptureFailure, CaptureParams, one_sided_capture

WITNESS_TOL = 1e-12
GAIN_TOL = 1e-9


def phi(x: float) -> float:
    """``x ln x`` with ``phi(0) = 0``."""
    if x < 0:
        raise ValueError(f"phi is defined on [0, inf), got {x}")
    return 0.0 if x == 0 else x * math.log(x)


def phi_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("phi is defined on [0, inf)")
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def entropy(f: PointFunction, coords) -> float:
    """``H(f, I) = E_{x in V^I} phi(E[f(x, .)])``; always at most 0."""
    coords = coordinate_set(coords, f.space.n)
    table = np.clip(conditional_expectation(f, coords), 0.0, None)
    mu = cell_measure(f.space.base, len(coords))
    return float(np.dot(mu, phi_array(table)))


class PhiCheck(NamedTuple):
    holds: bool
    margin: float


def check_phi_inequality(lam: float, u: float, v: float) -> PhiCheck:
    """``lam phi(u) + (1 - lam) phi(v) >= phi(w) + w/32`` with ``w = lam u + (1 - lam) v``.

    Requires ``lam`` in ``[1/4, 1]``, ``u, v > 0`` and ``u <= w/2``.
    """
    if not 0.25 <= lam <= 1:
        raise ValueError(f"lambda must lie in [1/4, 1], got {lam}")
    if u <= 0 or v <= 0:
        raise ValueError("u and v must be positive")
    w = lam * u + (1 - lam) * v
    if u > w / 2 * (1 + 1e-12):
        raise ValueError(f"precondition u <= w/2 fails: u={u}, w={w}")
    margin = lam * phi(u) + (1 - lam) * phi(v) - phi(w) - w / 32
    return PhiCheck(margin >= 0, margin)


@dataclass(frozen=True, eq=False)
class RefinementWitness:
    """``S`` is the key set of ``cells``; each cell maps to ``(J_x, T_x)``.

    Cells of ``V^I`` and of ``V^{J_x}`` are canonical mixed-radix indices.
    """

    I: tuple
    cells: dict

    @property
    def S(self) -> tuple:
        return tuple(sorted(self.cells))

    def refined(self) -> tuple:
        out = set(self.I)
        for J, _ in self.cells.values():
            out.update(J)
        return tuple(sorted(out))

    def as_dict(self) -> dict:
        return {
            "I": list(self.I),
            "S": list(self.S),
            "cells": {str(x): {"J": list(J), "T": list(T)} for x, (J, T) in sorted(self.cells.items())},
        }


def _cell_table(f: PointFunction, I: tuple, x: int, J: tuple) -> np.ndarray:
    """``E[f(x, y, .)]`` for every cell ``y`` of ``V^J``, with ``x`` fixed on ``I``."""
    radix = f.space.radix
    both = tuple(sorted(set(I) | set(J)))
    table = conditional_expectation(f, both).reshape((radix,) * len(both))
    digits = np.unravel_index(x, (radix,) * len(I)) if I else ()
    fixed = dict(zip(I, (int(d) for d in digits)))
    index = tuple(fixed.get(c, slice(None)) for c in both)
    return np.asarray(table[index]).reshape(-1)


@dataclass
class WitnessCheck:
    ok: bool
    diagnostics: dict = field(default_factory=dict)


def verify_witness(f: PointFunction, r: int, w: RefinementWitness) -> WitnessCheck:
    """Check the three substantial-improvement conditions.

    Never raises on a bad witness; ``diagnostics`` reports the slack of each
    condition (positive slack means satisfied).
    """
    space = f.space
    alpha = f.mean()
    diag = {"alpha": alpha, "shape_ok": True, "cells": {}}
    I = tuple(w.I)
    try:
        coordinate_set(I, space.n)
    except ValueError as exc:
        return WitnessCheck(False, {**diag, "shape_ok": False, "error": str(exc)})
    means = conditional_expectation(f, I)
    mu_I = cell_measure(space.base, len(I))
    S = list(w.S)
    if any(not 0 <= x < len(means) for x in S):
        return WitnessCheck(False, {**diag, "shape_ok": False, "error": "cell outside V^I"})
    mass = float(np.dot(mu_I[S], means[S])) if S else 0.0
    diag["mass_S"] = mass
    diag["slack_1"] = mass - alpha / 2
    ok = diag["slack_1"] >= -WITNESS_TOL
    for x in S:
        J, T = w.cells[x]
        J = tuple(J)
        if len(J) > r or set(J) & set(I) or len(set(J)) != len(J) or any(not 0 <= c < space.n for c in J):
            diag["cells"][x] = {"shape_ok": False}
            diag["shape_ok"] = False
            ok = False
            continue
        h = _cell_table(f, I, x, tuple(sorted(J)))
        mu_J = cell_measure(space.base, len(J))
        inside = np.zeros(len(h), dtype=bool)
        inside[list(T)] = True
        prob = float(mu_J[inside].sum())
        rest = 1.0 - prob
        out_mass = float(np.dot(mu_J[~inside], h[~inside]))
        cond_mean = out_mass / rest if rest > 0 else math.inf
        cell = {
            "prob_T": prob,
            "slack_2a": 0.75 - prob,
            "mean_outside_T": cond_mean,
            "slack_2b": alpha / 8 - cond_mean,
        }
        diag["cells"][x] = cell
        ok = ok and cell["slack_2a"] >= -WITNESS_TOL and cell["slack_2b"] >= -WITNESS_TOL
    return WitnessCheck(bool(ok), diag)


@dataclass
class RefinementSearch:
    witness: RefinementWitness | None
    check: WitnessCheck | None
    failures: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.witness is not None


def search_refinement(f: PointFunction, coords, r: int, eps: float | None = None,
                      params: CaptureParams | None = None) -> RefinementSearch:
    """Build a candidate witness by the edge sweep and verify it.

    Every edge ``(x1, x2)`` of ``V^I`` (loops included, ``x1 <= x2`` in index
    order) with neither endpoint already in ``S`` gets a one-sided capture of
    the restricted pair at ``eps/32``; the selected cell joins ``S``. Capture
    failures are collected in ``failures`` rather than raised.
    """
    space = f.space
    I = coordinate_set(coords, space.n)
    if eps is None:
        eps = f.mean()
    if params is None:
        params = CaptureParams(j_budget=r)
    elif params.j_budget is None or params.j_budget > r:
        params = CaptureParams(**{**params.as_dict(), "j_budget": r})
    rest = [c for c in range(space.n) if c not in I]
    graph = support_graph(space.sub(len(I)))
    adj = graph.adjacency
    chosen: dict = {}
    failures = []
    for x1 in range(len(adj)):
        for x2 in np.flatnonzero(adj[x1, x1:]) + x1:
            x2 = int(x2)
            if x1 in chosen or x2 in chosen:
                continue
            f1 = restrict(f, I, x1)
            f2 = restrict(f, I, x2)
            try:
                side = one_sided_capture(f1, f2, eps / 32, params)
            except CaptureFailure as exc:
                failures.append({"edge": [x1, x2], "prob1": exc.prob1, "prob2": exc.prob2, "reason": str(exc)})
                continue
            cell = x1 if side.index == 1 else x2
            chosen[cell] = (tuple(rest[j] for j in side.J), tuple(side.T))
    witness = RefinementWitness(I, chosen)
    check = verify_witness(f, r, witness)
    return RefinementSearch(witness if check.ok else None, check, failures)


def find_refinement(f: PointFunction, coords, r: int, eps: float | None = None,
                    params: CaptureParams | None = None) -> RefinementWitness | None:
    return search_refinement(f, coords, r, eps, params).witness


class EntropyGainError(AssertionError):
    """An accepted witness failed to raise the entropy by alpha/128."""


def step_bound(alpha: float) -> int:
    """``ceil(128 ln(1/alpha))``."""
    if alpha <= 0:
        return 0
    return max(0, math.ceil(128 * math.log(1 / alpha) - 1e-12))


class TraceStep(NamedTuple):
    step: int
    I: tuple
    H: float
    accepted: bool
    gain: float


@dataclass
class RefinementTrace:
    alpha: float
    steps: list
    final_I: tuple
    final_H: float
    stop_reason: str
    bound: int

    @property
    def accepted_steps(self) -> int:
        return sum(s.accepted for s in self.steps)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "bound": self.bound,
            "stop_reason": self.stop_reason,
            "final_I": list(self.final_I),
            "final_H": self.final_H,
            "steps": [
                {"step": s.step, "I": list(s.I), "H": s.H, "accepted": s.accepted, "gain": s.gain}
                for s in self.steps
            ],
        }


def refinement_loop(f: PointFunction, r: int, eps: float | None = None, max_steps: int | None = None,
                    params: CaptureParams | None = None) -> RefinementTrace:
    """Repeat refinement from ``I = {}`` until no witness is found.

    Each accepted step must raise ``H(f, I)`` by at least ``alpha/128``;
    otherwise :class:`EntropyGainError` is raised.
    """
    alpha = f.mean()
    bound = step_bound(alpha)
    if max_steps is None:
        max_steps = bound + 2
    I: tuple = ()
    H = entropy(f, I)
    steps = []
    if alpha <= 0:
        return RefinementTrace(alpha, steps, I, H, "zero-mean", bound)
    reason = "max-steps"
    for t in range(max_steps):
        if len(I) == f.space.n:
            reason = "all-coordinates"
            break
        search = search_refinement(f, I, r, eps, params)
        if not search.accepted:
            steps.append(TraceStep(t, I, H, False, 0.0))
            reason = "no-witness"
            break
        J = search.witness.refined()
        H_next = entropy(f, J)
        gain = H_next - H
        if gain < alpha / 128 - GAIN_TOL:
            raise EntropyGainError(f"step {t}: gain {gain} < alpha/128 = {alpha / 128}")
        steps.append(TraceStep(t, I, H, True, gain))
        I, H = J, H_next
    return RefinementTrace(alpha, steps, I, H, reason, bound)


class Astronomical:
    """Stands in for numbers beyond ``1e300`` (or, reciprocally, below ``1e-300``)."""

    def __init__(self, reciprocal: bool = False):
        self.reciprocal = reciprocal

    def __repr__(self):
        return "1/astronomical" if self.reciprocal else "astronomical"

    def __eq__(self, other):
        return isinstance(other, Astronomical) and other.reciprocal == self.reciprocal

    def __hash__(self):
        return hash(("astronomical", self.reciprocal))


ASTRONOMICAL = Astronomical()
TINY = Astronomical(reciprocal=True)
LOG10_LIMIT = 300


@dataclass(frozen=True)
class ParameterSchedule:
    c: float
    r: int
    states: int
    w_min: float

    def delta1(self, eps: float) -> float:
        return eps ** self.c

    def j1(self, eps: float) -> float:
        return eps ** -self.c

    def r1(self, eps: float) -> float:
        return eps ** -self.c

    def r2(self, eps: float) -> float:
        return (eps / 32) ** -self.c

    def delta2(self, eps: float, k):
        if isinstance(k, Astronomical):
            return TINY
        log10 = k * math.log10(self.w_min) + self.c * math.log10(eps / 32)
        return TINY if log10 < -LOG10_LIMIT else self.w_min ** k * (eps / 32) ** self.c

    def gamma(self, ell):
        """``Gamma(l) = l + r |V|^l``, exact integers until ``1e300``."""
        if isinstance(ell, Astronomical):
            return ASTRONOMICAL
        if ell * math.log10(self.states) + math.log10(max(self.r, 1)) > LOG10_LIMIT:
            return ASTRONOMICAL
        out = ell + self.r * self.states ** ell
        return ASTRONOMICAL if out > 10 ** LOG10_LIMIT else out

    def k_table(self, alpha: float) -> list:
        """``[Gamma^0(0), Gamma^1(0), ...]`` with ``ceil(128 ln(1/alpha))`` compositions."""
        table = [0]
        for _ in range(step_bound(alpha)):
            nxt = self.gamma(table[-1])
            table.append(nxt)
            if isinstance(nxt, Astronomical):
                break
        return table

    def k(self, alpha: float):
        return self.k_table(alpha)[-1]


def tower(t: int):
    """``2^2^...^2`` with ``t`` twos; ``tower(0) = 1``."""
    out = 1
    for _ in range(t):
        if isinstance(out, Astronomical) or out * math.log10(2) > LOG10_LIMIT:
            return ASTRONOMICAL
        out = 2 ** out
    return out


def schedule(c: float, eps: float, alpha: float, r: int, base: BaseChain) -> dict:
    """Evaluate every schedule function at one parameter point."""
    if not (0 < eps <= 1 and 0 < alpha <= 1 and c > 0):
        raise ValueError("need eps, alpha in (0, 1] and c > 0")
    sched = ParameterSchedule(c, r, base.size, base.w_min)
    table = sched.k_table(alpha)
    k = table[-1]
    return {
        "c": c,
        "eps": eps,
        "alpha": alpha,
        "r": r,
        "states": base.size,
        "w_min": base.w_min,
        "delta1": sched.delta1(eps),
        "j1": sched.j1(eps),
        "r1": sched.r1(eps),
        "r2": sched.r2(eps),
        "compositions": step_bound(alpha),
        "gamma_table": table,
        "k": k,
        "delta2": sched.delta2(eps, k),
        "tower": [tower(t) for t in range(6)],
    }
