"""Capturing a pair of sparse functions by a junta.

The spectral capture follows the noise/influence construction: smooth both
functions with ``N_eta``, take ``J`` to be the coordinates of influence above
``gamma``, and keep the cells of ``V^J`` whose smoothed mean is at least
``eps``. The brute-force capture is an exhaustive oracle for small spaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .chain import BaseChain, ProductSpace, quad_form
from .functions import (
    PointFunction,
    cell_measure,
    conditional_expectation,
    influences,
    noise_operator,
    spectrum_of,
)
from .independent import DEFAULT_MWIS_CAP, CapExceeded, is_independent, max_weight_independent_set, support_graph

OUTSIDE_TOL = 1e-12
SIDE_LIMIT = 0.75
EXHAUSTIVE_CELLS = 9


@dataclass(frozen=True)
class CaptureParams:
    """Knobs for the practical capture.

    ``gamma`` is the starting influence threshold; it is halved until the
    cross term drops to ``eps``, ``J`` would exceed ``j_budget``, or ``gamma``
    falls below ``min_gamma``.
    """

    eta: float = 0.99
    gamma: float = 0.05
    j_budget: int | None = None
    min_gamma: float = 1e-6
    method: str = "spectral"
    j_max: int = 2
    mode: str = "practical"

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class JuntaCapture:
    J: tuple
    T1: tuple
    T2: tuple
    outside1: float
    outside2: float
    cross: float
    prob1: float
    prob2: float
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "J": list(self.J),
            "T1": list(self.T1),
            "T2": list(self.T2),
            "outside1": self.outside1,
            "outside2": self.outside2,
            "cross": self.cross,
            "prob1": self.prob1,
            "prob2": self.prob2,
            "params": dict(self.params),
        }


class CaptureBudgetExceeded(CapExceeded):
    def __init__(self, message: str, partial: JuntaCapture | None = None):
        super().__init__(message)
        self.partial = partial


def _indicator(size: int, cells) -> np.ndarray:
    out = np.zeros(size)
    out[list(cells)] = 1.0
    return out


def capture_diagnostics(f1: PointFunction, f2: PointFunction, J, T1, T2) -> dict:
    """Outside masses, cross term and cell probabilities of ``(J, T1, T2)``."""
    space = f1.space
    cells = space.sub(len(J))
    mu = cells.measure
    F1 = conditional_expectation(f1, J)
    F2 = conditional_expectation(f2, J)
    in1 = _indicator(cells.size, T1)
    in2 = _indicator(cells.size, T2)
    return {
        "outside1": float(np.dot(mu, (1 - in1) * F1)),
        "outside2": float(np.dot(mu, (1 - in2) * F2)),
        "cross": quad_form(cells, in1, in2),
        "prob1": float(np.dot(mu, in1)),
        "prob2": float(np.dot(mu, in2)),
    }


def junta_capture_spectral(f1: PointFunction, f2: PointFunction, eps: float, eta: float, gamma: float,
                           j_budget: int | None = None) -> JuntaCapture:
    """Single spectral capture at fixed ``(eta, gamma)``.

    Raises
    ------
    CaptureBudgetExceeded
        If more than ``j_budget`` coordinates have influence above ``gamma``;
        the exception carries the over-budget capture as ``partial``.
    AssertionError
        If an outside mass exceeds ``eps``, which the low-noise mass bound
        rules out.
    """
    if f1.space != f2.space:
        raise ValueError("f1 and f2 live on different spaces")
    if not 0 < eta <= 1 or gamma <= 0:
        raise ValueError(f"need 0 < eta <= 1 and gamma > 0, got eta={eta}, gamma={gamma}")
    g1 = noise_operator(f1, eta)
    g2 = noise_operator(f2, eta)
    inf1 = influences(g1)
    inf2 = influences(g2)
    J = tuple(int(i) for i in np.flatnonzero((inf1 > gamma) | (inf2 > gamma)))
    T1 = tuple(int(a) for a in np.flatnonzero(conditional_expectation(g1, J) >= eps))
    T2 = tuple(int(a) for a in np.flatnonzero(conditional_expectation(g2, J) >= eps))
    diag = capture_diagnostics(f1, f2, J, T1, T2)
    capture = JuntaCapture(J, T1, T2, params={"eta": eta, "gamma": gamma, "eps": eps, "method": "spectral"}, **diag)
    if j_budget is not None and len(J) > j_budget:
        raise CaptureBudgetExceeded(f"|J| = {len(J)} exceeds budget {j_budget}", capture)
    assert capture.outside1 <= eps + OUTSIDE_TOL and capture.outside2 <= eps + OUTSIDE_TOL, (
        f"outside mass {capture.outside1}, {capture.outside2} exceeds eps={eps}")
    return capture


def practical_capture(f1: PointFunction, f2: PointFunction, eps: float,
                      params: CaptureParams = CaptureParams()) -> JuntaCapture:
    """Spectral capture, halving ``gamma`` until the cross term is at most ``eps``.

    Returns the last capture within budget; ``params['target_met']`` records
    whether the cross-term target was reached.
    """
    gamma = params.gamma
    best = None
    while True:
        try:
            cap = junta_capture_spectral(f1, f2, eps, params.eta, gamma, params.j_budget)
        except CaptureBudgetExceeded:
            if best is None:
                raise
            break
        best = cap
        if cap.cross <= eps or len(cap.J) == f1.space.n or gamma / 2 < params.min_gamma:
            break
        gamma /= 2
    met = best.cross <= eps
    return JuntaCapture(best.J, best.T1, best.T2, best.outside1, best.outside2, best.cross, best.prob1,
                        best.prob2, {**best.params, "mode": params.mode, "target_met": met})


def _candidate_sets(F: np.ndarray, mu: np.ndarray, eps: float) -> list:
    """Feasible ``T`` (outside mass at most eps) for the brute-force oracle.

    All subsets when there are at most ``EXHAUSTIVE_CELLS`` cells, otherwise
    the superlevel sets ``{a : F(a) >= t}``.
    """
    size = len(F)
    if size <= EXHAUSTIVE_CELLS:
        cands = [tuple(a for a in range(size) if mask >> a & 1) for mask in range(1 << size)]
    else:
        levels = sorted(set(F.tolist()), reverse=True)
        cands = [()] + [tuple(int(a) for a in np.flatnonzero(F >= t)) for t in levels]
    out = []
    for T in cands:
        inside = np.zeros(size, dtype=bool)
        inside[list(T)] = True
        if float(np.dot(mu[~inside], F[~inside])) <= eps + OUTSIDE_TOL:
            out.append(T)
    return out


def _kron_edge_matrix(base: BaseChain, size: int) -> np.ndarray:
    out = np.ones((1, 1))
    for _ in range(size):
        out = np.kron(out, base.edge_matrix)
    return out


def junta_capture_bruteforce(f1: PointFunction, f2: PointFunction, eps: float, j_max: int,
                             budget: int = 2_000_000) -> JuntaCapture:
    """Exhaustive capture over every ``J`` with ``|J| <= j_max``.

    Among feasible pairs (both outside masses at most ``eps``) returns the one
    minimising ``(cross term, total outside mass)``; ties go to the smaller
    ``J`` (by size, then lexicographically), then the smaller ``T``.
    """
    space = f1.space
    if f2.space != space:
        raise ValueError("f1 and f2 live on different spaces")
    n = space.n
    j_max = min(j_max, n)
    work = sum(math.comb(n, j) * (2 ** (space.radix ** j) if space.radix ** j <= EXHAUSTIVE_CELLS
                                  else space.radix ** j + 1) ** 2 for j in range(j_max + 1))
    if work > budget:
        raise CapExceeded(f"brute-force capture needs ~{work} pair evaluations, budget {budget}")
    best_key, best = None, None
    for size in range(j_max + 1):
        mu = cell_measure(space.base, size)
        W = _kron_edge_matrix(space.base, size)
        for J in combinations(range(n), size):
            F1 = conditional_expectation(f1, J)
            F2 = conditional_expectation(f2, J)
            c1 = _candidate_sets(F1, mu, eps)
            c2 = _candidate_sets(F2, mu, eps)
            if not c1 or not c2:
                continue
            M1 = np.array([_indicator(len(mu), T) for T in c1])
            M2 = np.array([_indicator(len(mu), T) for T in c2])
            cross = M1 @ W @ M2.T
            out1 = (1 - M1) @ (mu * F1)
            out2 = (1 - M2) @ (mu * F2)
            total = out1[:, None] + out2[None, :]
            order = np.lexsort((total.ravel(), cross.ravel()))
            a, b = divmod(int(order[0]), len(c2))
            key = (float(cross[a, b]), float(total[a, b]), size, J, c1[a], c2[b])
            if best_key is None or key < best_key:
                best_key = key
                best = (J, c1[a], c2[b])
    J, T1, T2 = best
    diag = capture_diagnostics(f1, f2, J, T1, T2)
    return JuntaCapture(J, T1, T2, params={"eps": eps, "j_max": j_max, "method": "bruteforce"}, **diag)


def capture(f1: PointFunction, f2: PointFunction, eps: float, params: CaptureParams = CaptureParams()) -> JuntaCapture:
    if params.method == "bruteforce":
        return junta_capture_bruteforce(f1, f2, eps, params.j_max)
    if params.method != "spectral":
        raise ValueError(f"unknown capture method {params.method!r}")
    return practical_capture(f1, f2, eps, params)


class CaptureFailure(Exception):
    """Neither side of a capture has cell probability at most 3/4."""

    def __init__(self, prob1: float, prob2: float, capture: JuntaCapture | None = None, reason: str = ""):
        super().__init__(reason or f"neither side qualifies: Pr[T1]={prob1}, Pr[T2]={prob2}")
        self.prob1 = prob1
        self.prob2 = prob2
        self.capture = capture


class OneSided(NamedTuple):
    index: int
    J: tuple
    T: tuple
    capture: JuntaCapture


def select_side(prob1: float, prob2: float) -> int | None:
    """1 if ``Pr[T1] <= 3/4``, else 2 if ``Pr[T2] <= 3/4``, else None."""
    if prob1 <= SIDE_LIMIT:
        return 1
    if prob2 <= SIDE_LIMIT:
        return 2
    return None


def one_sided_capture(f1: PointFunction, f2: PointFunction, eps: float,
                      params: CaptureParams = CaptureParams()) -> OneSided:
    """Capture and keep a side whose cells have probability at most 3/4.

    Raises
    ------
    CaptureFailure
        If neither side qualifies or the capture exceeds its ``|J|`` budget.
    """
    try:
        cap = capture(f1, f2, eps, params)
    except CaptureBudgetExceeded as exc:
        raise CaptureFailure(float("nan"), float("nan"), exc.partial, str(exc)) from exc
    side = select_side(cap.prob1, cap.prob2)
    if side is None:
        raise CaptureFailure(cap.prob1, cap.prob2, cap)
    return OneSided(side, cap.J, cap.T1 if side == 1 else cap.T2, cap)


@dataclass(frozen=True, eq=False)
class IndependentCapture:
    J: tuple
    T: tuple
    loss: float
    T_prime: tuple
    capture: JuntaCapture
    independent: bool

    def as_dict(self) -> dict:
        return {
            "J": list(self.J),
            "T": list(self.T),
            "T_prime": list(self.T_prime),
            "loss": self.loss,
            "independent": self.independent,
            "capture": self.capture.as_dict(),
        }


def captured_loss_bruteforce(g: PointFunction, J, T) -> float:
    """``E[1_{not T}(x_J) g(x)]`` by a direct sweep over all points."""
    space = g.space
    digits = space.digits()
    cells = np.zeros(space.size, dtype=np.int64)
    for c in J:
        cells = cells * space.radix + digits[:, c]
    outside = ~np.isin(cells, np.asarray(list(T), dtype=np.int64))
    return float(np.sum(space.measure[outside] * g.values[outside]))


def independent_junta_capture(g: PointFunction, eps: float, params: CaptureParams = CaptureParams(),
                              mwis_cap: int = DEFAULT_MWIS_CAP) -> IndependentCapture:
    """Capture ``g`` by a junta, then prune the cells to an independent set.

    The pruning keeps the maximum-weight independent ``T`` inside ``T'`` with
    cell weights ``mu(x) E[g(x, .)]``; the loss is recomputed from ``g``.
    """
    cap = capture(g, g, eps, params)
    J = cap.J
    cells = g.space.sub(len(J))
    G = conditional_expectation(g, J)
    graph = support_graph(cells, cap.T1)
    weights = cells.measure[graph.vertices] * G[graph.vertices]
    T, _ = max_weight_independent_set(graph, weights, mwis_cap)
    T = tuple(T)
    independent = is_independent(cells, T)
    assert independent, "pruned cell set is not independent"
    loss = captured_loss_bruteforce(g, J, T)
    return IndependentCapture(J, T, loss, cap.T1, cap, independent)


def noise_condition(eta: float, lam: float) -> bool:
    """``(1 - eta) log_lam(1 - eta) <= sqrt(1 - eta)``."""
    t = 1.0 - eta
    if t <= 0 or lam <= 0:
        return True
    return t * math.log(t) / math.log(lam) <= math.sqrt(t)


class GapResult(NamedTuple):
    gap: float
    bound: float
    condition_ok: bool


def noisy_ip_gap(f1: PointFunction, f2: PointFunction, eta: float) -> GapResult:
    """``|<f1, A f2> - <N f1, A N f2>|`` against ``sqrt(1 - eta)``."""
    lam = spectrum_of(f1.space.base).lambda2
    if not (1 - lam < eta <= 1):
        raise ValueError(f"eta must lie in (1 - lambda, 1] = ({1 - lam}, 1], got {eta}")
    space = f1.space
    g1 = noise_operator(f1, eta)
    g2 = noise_operator(f2, eta)
    gap = abs(quad_form(space, f1, f2) - quad_form(space, g1, g2))
    return GapResult(gap, math.sqrt(1 - eta), noise_condition(eta, lam))


@dataclass(frozen=True, eq=False)
class LabelMap:
    """A label set ``L(a)`` (subset of the naturals) for every cell ``a`` of ``V^j``."""

    space: ProductSpace
    labels: tuple
    ell: int
    p_exponent: float

    def __post_init__(self):
        labels = tuple(frozenset(int(i) for i in L) for L in self.labels)
        if len(labels) != self.space.size:
            raise ValueError(f"need {self.space.size} label sets, got {len(labels)}")
        if any(len(L) > self.ell for L in labels):
            raise ValueError(f"a label set exceeds the cardinality bound {self.ell}")
        if self.p_exponent <= 2:
            raise ValueError("p_exponent must exceed 2")
        object.__setattr__(self, "labels", labels)


class LabelCheck(NamedTuple):
    best_index: int | None
    best_measure: float
    threshold: float
    pair_density: float
    holds: bool | None


def label_density_check(m: LabelMap, eps: float) -> LabelCheck:
    """Check the label-density statement for one label map.

    ``pair_density`` is the edge-distribution mass of pairs ``(a, b)`` whose
    label sets meet. When it is at least ``eps`` the most popular label is
    compared with ``(eps / ell^2)^(2p/(p-2))``; otherwise ``holds`` is None.
    A failure means ``p_exponent`` is below the chain's true exponent.
    """
    space = m.space
    W = _kron_edge_matrix(space.base, space.n)
    everything = sorted(set().union(*m.labels))
    member = np.array([[i in L for i in everything] for L in m.labels], dtype=float).reshape(space.size, -1)
    meets = (member @ member.T) > 0
    pair_density = float(W[meets].sum())
    p = m.p_exponent
    threshold = (eps / m.ell ** 2) ** (2 * p / (p - 2))
    if everything:
        measures = space.measure @ member
        k = int(np.argmax(measures))
        best_index, best_measure = everything[k], float(measures[k])
    else:
        best_index, best_measure = None, 0.0
    holds = None if pair_density < eps else best_measure >= threshold
    return LabelCheck(best_index, best_measure, threshold, pair_density, holds)


def pair_embedding(f1: PointFunction, f2: PointFunction) -> tuple:
    """Fold two functions into one on ``V^{n+2}``.

    Uses the lexicographically first edge ``a1 < a2`` of ``V^2`` with no
    loops at either end; ``f(a1, x) = f1(x)``, ``f(a2, x) = f2(x)`` and zero
    elsewhere, so that ``<f, A f> = 2 w <f1, A f2>``. Returns ``(f, w)``.
    """
    space = f1.space
    pair = space.sub(2)
    graph = support_graph(pair)
    loops = graph.loops
    for a1 in range(pair.size):
        for a2 in range(a1 + 1, pair.size):
            if graph.adjacency[a1, a2] and not loops[a1] and not loops[a2]:
                big = space.sub(space.n + 2)
                table = np.zeros((pair.size, space.size))
                table[a1] = f1.values
                table[a2] = f2.values
                signed = f1.signed or f2.signed
                w = float(np.prod([space.base.edge_matrix[u, v] for u, v in zip(pair.point(a1), pair.point(a2))]))
                return PointFunction(big, table.reshape(-1), signed), w
    raise ValueError("every vertex of V^2 carries a loop; no loop-free edge exists")


def faithful_parameters(eps: float, c: float, lam: float, p: float) -> dict:
    """The worst-case parameter trail, evaluated without running anything.

    ``tau = delta_MOO = eps^c``; ``1 - eta`` is the largest power-of-two
    fraction of ``min(lam / 2, (delta_MOO eps / 4)^2)`` that satisfies the noise
    condition; ``ell = 2 (1 - eta^2)^-2 / tau``; ``gamma`` is half the bound
    ``tau (eps / (2 ell^2))^(2p/(p-2)) / 2``. Tiny quantities are reported as
    base-10 logarithms.
    """
    if p <= 2:
        raise ValueError("p must exceed 2")
    tau = delta_moo = eps ** c
    t = min(lam * 0.5, (delta_moo * eps / 4) ** 2)
    while not noise_condition(1 - t, lam):
        t /= 2
    one_minus_eta2 = t * (2 - t)
    ell = 2 * one_minus_eta2 ** -2 / tau
    log10_gamma = (math.log10(tau) + (2 * p / (p - 2)) * math.log10(eps / (2 * ell ** 2)) - math.log10(4))
    log10_j = math.log10(2) - 2 * math.log10(one_minus_eta2) - log10_gamma
    return {
        "eps": eps,
        "c": c,
        "lambda": lam,
        "p": p,
        "tau_moo": tau,
        "delta_moo": delta_moo,
        "one_minus_eta": t,
        "eta": 1 - t,
        "delta_upper": math.sqrt(t),
        "ell": ell,
        "log10_gamma": log10_gamma,
        "log10_j_bound": log10_j,
    }
