"""Property suites with deterministic report bodies.

Every suite takes a seed and returns a body dict holding only quantities
computed from the inputs (no timing), plus a ``passed`` flag. ``run_suite``
adds the wall time separately.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import oracles
from .chain import ProductSpace, complete_graph_chain, quad_form
from .functions import (
    RNG_NAME,
    PointFunction,
    coordinate_set,
    influences,
    noise_operator,
    random_function,
    spectrum_of,
)
from .independent import is_independent, is_matching_like, matching_like_decompose
from .io import report_body
from .junta import CaptureParams, independent_junta_capture, noise_condition, noisy_ip_gap
from .kneser import (
    LayerFunction,
    c_constant,
    code_to_set,
    cube_space,
    down_inner_sum,
    edge_cube,
    edge_layer,
    is_intersecting,
    kneser_capture,
    layer_codes,
    set_to_code,
    unrank_subset,
    up_lift,
)
from .refine import EntropyGainError, check_phi_inequality, entropy, phi, refinement_loop, step_bound

ETA_GRID = (0.5, 0.7, 0.9, 0.99)
EPS_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
NOISE_TOL = 1e-9


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def k3(n: int) -> ProductSpace:
    return ProductSpace(complete_graph_chain(3), n)


def quadform_suite(seed: int = 0, pairs: int = 100) -> dict:
    """Kronecker quadratic form against the explicit double sum."""
    spaces = [(f"K3^{n}", k3(n)) for n in range(1, 5)]
    spaces += [(f"cube(p=1/4)^{n}", cube_space(n, 0.25)) for n in range(1, 11)]
    rows = []
    for idx, (name, space) in enumerate(spaces):
        rng = _rng(seed, 1, idx)
        W = oracles.product_edge_matrix(space)
        worst = 0.0
        for _ in range(pairs):
            f = random_function(space, rng)
            g = random_function(space, rng)
            worst = max(worst, abs(quad_form(space, f, g) - float(f.values @ W @ g.values)))
        rows.append({"space": name, "pairs": pairs, "max_dev": worst})
    max_dev = max(r["max_dev"] for r in rows)
    return {"spaces": rows, "max_dev": max_dev, "tol": 1e-12, "passed": max_dev <= 1e-12}


def planted_suite(seed: int = 0) -> dict:
    space = k3(2)
    U = PointFunction.indicator(space, [(0, 0), (1, 1)])
    value = quad_form(space, U, U)
    # Each of the two ordered edges has weight (1/3)(1/2) per coordinate.
    exact = Fraction(2) * (Fraction(1, 3) * Fraction(1, 2)) ** 2
    dev = abs(value - float(exact))
    return {"value": value, "expected": str(exact), "dev": dev, "tol": 1e-15, "passed": dev <= 1e-15}


def matching_suite(seed: int = 0, trials: int = 200) -> dict:
    """Greedy decomposition: ``f <= g``, independent residual, matching-like ``f``."""
    spaces = [("K3^2", k3(2)), ("K3^3", k3(3)), ("cube(p=1/4)^6", cube_space(6, 0.25))]
    rows = []
    for idx, (name, space) in enumerate(spaces):
        rng = _rng(seed, 3, idx)
        dominated = independent = matching = 0
        worst_slack = math.inf
        for _ in range(trials):
            g = random_function(space, rng)
            if rng.random() < 0.5:
                g = PointFunction(space, g.values * (rng.random(space.size) < 0.4))
            res = matching_like_decompose(g)
            dominated += bool(np.all(res.f.values <= g.values))
            independent += is_independent(space, res.residual_set)
            check = is_matching_like(res.f)
            matching += check.ok
            worst_slack = min(worst_slack, res.f.mean() / 2 - check.worst_mass)
        rows.append({"space": name, "trials": trials, "dominated": dominated, "independent": independent,
                     "matching_like": matching, "min_slack": worst_slack})
    ok = all(r["dominated"] == r["independent"] == r["matching_like"] == trials for r in rows)
    ok = ok and all(r["min_slack"] >= -1e-12 for r in rows)
    return {"spaces": rows, "slack_tol": -1e-12, "passed": ok}


def _refinement_instances(seed: int) -> list:
    rng = _rng(seed, 4, 99)
    out = []
    for n in (2, 3, 4):
        space = k3(n)
        for coord in range(n):
            out.append((f"dictator K3^{n} x{coord}=0", PointFunction.dictator(space, coord, 0)))
    space = k3(3)
    d = space.digits()
    out.append(("and K3^3 x0=0,x2=1", PointFunction(space, ((d[:, 0] == 0) & (d[:, 2] == 1)).astype(float))))
    cube = cube_space(6, 0.25)
    out.append(("dictator cube^6 x2=1", PointFunction.dictator(cube, 2, 1)))
    for t in range(10):
        base = PointFunction.dictator(space, t % 3, 0).values
        flips = rng.random(space.size) < 0.05
        out.append((f"noisy dictator K3^3 #{t}", PointFunction(space, np.abs(base - flips))))
    for t in range(10):
        out.append((f"random K3^3 #{t}", random_function(space, rng)))
        out.append((f"sparse K3^3 #{t}", PointFunction(space, (rng.random(space.size) < 0.15).astype(float))))
    return out


def entropy_suite(seed: int = 0, triples: int = 500) -> dict:
    """Monotonicity of ``H`` under refinement and the refinement-loop invariants."""
    rng = _rng(seed, 4)
    spaces = [k3(3), k3(4), cube_space(6, 0.25)]
    worst = -math.inf
    for t in range(triples):
        space = spaces[t % len(spaces)]
        f = random_function(space, rng)
        J = [c for c in range(space.n) if rng.random() < 0.5]
        I = [c for c in J if rng.random() < 0.5]
        worst = max(worst, entropy(f, I) - entropy(f, J))
    runs = []
    fired = 0
    over = 0
    for name, f in _refinement_instances(seed):
        try:
            trace = refinement_loop(f, r=2)
        except EntropyGainError as exc:
            fired += 1
            runs.append({"instance": name, "error": str(exc)})
            continue
        over += trace.accepted_steps > step_bound(trace.alpha)
        gains = [s.gain for s in trace.steps if s.accepted]
        runs.append({"instance": name, "alpha": trace.alpha, "accepted": trace.accepted_steps,
                     "bound": trace.bound, "final_I": list(trace.final_I), "final_H": trace.final_H,
                     "min_gain": min(gains) if gains else None, "stop": trace.stop_reason})
    accepted_total = sum(r.get("accepted", 0) for r in runs)
    ok = worst <= 1e-12 and fired == 0 and over == 0
    return {"triples": triples, "max_violation": worst, "tol": 1e-12, "runs": runs,
            "gain_assertions_fired": fired, "bound_exceeded": over, "accepted_steps_total": accepted_total,
            "passed": ok}


def phi_anchor() -> float:
    return 0.25 * phi(0.5) + 0.75 * phi(7 / 6)


def phi_grid_suite(seed: int = 0) -> dict:
    """25 lambdas x 20 scales x 20 ratios ``u/w`` in ``(0, 1/2]``."""
    lams = np.linspace(0.25, 1.0, 25, endpoint=False)
    scales = np.linspace(0.1, 2.0, 20)
    ratios = np.linspace(0.5, 0.0, 20, endpoint=False)
    worst = math.inf
    worst_at = None
    points = 0
    for lam in lams:
        for w in scales:
            for q in ratios:
                u = q * w
                v = (w - lam * u) / (1 - lam)
                check = check_phi_inequality(float(lam), float(u), float(v))
                points += 1
                if check.margin < worst:
                    worst, worst_at = check.margin, [float(lam), float(u), float(v)]
    anchor = phi_anchor()
    ok = points == 10_000 and worst >= -1e-12 and anchor > 1 / 32
    return {"points": points, "min_margin": worst, "min_at": worst_at, "tol": -1e-12,
            "anchor": anchor, "anchor_floor": 1 / 32, "passed": ok}


def noise_bounds_suite(seed: int = 0, trials: int = 100) -> dict:
    """Influence budget, noisy inner-product gap and low-noise mass."""
    spaces = [("K3^3", k3(3)), ("K3^4", k3(4)), ("cube(p=1/4)^6", cube_space(6, 0.25))]
    a2 = {"checked": 0, "violations": 0, "max_excess": -math.inf}
    a3 = {"checked": 0, "violations": 0, "max_excess": -math.inf, "skipped_eta": {}}
    a5 = {"checked": 0, "violations": 0, "max_excess": -math.inf}
    for idx, (name, space) in enumerate(spaces):
        rng = _rng(seed, 6, idx)
        lam = spectrum_of(space.base).lambda2
        admissible = [eta for eta in ETA_GRID if 1 - lam < eta and noise_condition(eta, lam)]
        a3["skipped_eta"][name] = [eta for eta in ETA_GRID if eta not in admissible]
        for _ in range(trials):
            f1 = random_function(space, rng, signed=True)
            f2 = random_function(space, rng, signed=True)
            h = random_function(space, rng)
            for eta in ETA_GRID:
                excess = float(influences(noise_operator(f1, eta)).sum()) - (1 - eta ** 2) ** -2
                a2["checked"] += 1
                a2["violations"] += excess > NOISE_TOL
                a2["max_excess"] = max(a2["max_excess"], excess)
                if eta in admissible:
                    gap = noisy_ip_gap(f1, f2, eta)
                    a3["checked"] += 1
                    a3["violations"] += gap.gap - gap.bound > NOISE_TOL
                    a3["max_excess"] = max(a3["max_excess"], gap.gap - gap.bound)
                smooth = noise_operator(h, eta).values
                for eps in EPS_GRID:
                    low = smooth <= eps
                    excess = float(np.dot(space.measure[low], h.values[low])) - eps
                    a5["checked"] += 1
                    a5["violations"] += excess > NOISE_TOL
                    a5["max_excess"] = max(a5["max_excess"], excess)
    ok = all(part["violations"] == 0 and part["checked"] > 0 for part in (a2, a3, a5))
    return {"eta_grid": list(ETA_GRID), "eps_grid": list(EPS_GRID), "tol": NOISE_TOL,
            "influence_budget": a2, "noisy_gap": a3, "low_noise_mass": a5, "passed": ok}


def _loss_by_oracle(g: PointFunction, J, T) -> float:
    """``E[g] - sum_{t in T} mu(t) E[g | t]`` from the bincount conditional expectation."""
    table = oracles.conditional_expectation_bruteforce(g, J)
    mu = g.space.sub(len(J)).measure
    kept = float(sum(mu[t] * table[t] for t in T))
    return float(np.dot(g.space.measure, g.values)) - kept


def noisy_dictator_suite(seed: int = 0, runs: int = 100, n: int = 6, flip: float = 0.02, eps: float = 0.05) -> dict:
    """Independent capture of noisy dictators on ``K3^n``."""
    space = k3(n)
    clean = PointFunction.dictator(space, 0, 0)
    rng = _rng(seed, 7)
    independent = 0
    worst_dev = 0.0
    losses = []
    juntas = {}
    for _ in range(runs):
        flips = rng.random(space.size) < flip
        g = PointFunction(space, np.abs(clean.values - flips))
        res = independent_junta_capture(g, eps)
        independent += is_independent(space.sub(len(res.J)), res.T)
        worst_dev = max(worst_dev, abs(res.loss - _loss_by_oracle(g, res.J, res.T)))
        losses.append(res.loss)
        key = ",".join(map(str, res.J))
        juntas[key] = juntas.get(key, 0) + 1
    base = independent_junta_capture(clean, eps)
    clean_ok = base.loss == 0.0 and base.J == (0,)
    ok = independent == runs and worst_dev <= 1e-12 and clean_ok
    return {"n": n, "flip_rate": flip, "eps": eps, "runs": runs, "independent": independent,
            "max_loss_dev": worst_dev, "max_loss": max(losses), "mean_loss": float(np.mean(losses)),
            "junta_counts": juntas, "clean": {"J": list(base.J), "T": list(base.T), "loss": base.loss},
            "passed": ok}


def _down_worst(f: LayerFunction, p: float, max_j: int) -> float:
    """Largest ``V_w(f) / V_w(g)`` over all ``J`` with ``|J| <= max_j`` and all ``w``."""
    n, k = f.n, f.k
    g = up_lift(f, p)
    codes = np.arange(1 << n)
    lcodes = layer_codes(n, k)
    mass = g.space.measure * g.values
    worst = 0.0
    for size in range(max_j + 1):
        for J in combinations(range(n), size):
            jmask = set_to_code(n, J)
            for wsize in range(size + 1):
                for w in combinations(J, wsize):
                    wmask = set_to_code(n, w)
                    vg = float(mass[(codes & jmask) == wmask].sum())
                    vf = float(f.values[(lcodes & jmask) == wmask].sum()) / math.comb(n, k)
                    if vg > 0:
                        worst = max(worst, vf / vg)
                    elif vf > 0:
                        return math.inf
    return worst


def kneser_suite(seed: int = 0, trials: int = 100, oracle_trials: int = 5) -> dict:
    rng = _rng(seed, 8)
    edge_one = {f"n={n},k={k}": edge_layer(LayerFunction.constant(n, k)) for n, k in ((8, 2), (9, 3), (12, 3))}
    up = []
    for n, k in ((8, 2), (9, 3), (12, 3)):
        p = Fraction(k, n)
        c = c_constant(p, n)
        worst_ineq = -math.inf
        worst_identity = 0.0
        worst_oracle = 0.0
        for t in range(trials):
            f = LayerFunction(n, k, rng.random(math.comb(n, k)))
            g = up_lift(f, p)
            lhs, rhs = edge_cube(g), edge_layer(f)
            worst_ineq = max(worst_ineq, lhs - rhs)
            worst_identity = max(worst_identity, abs(lhs - c * rhs))
            if t < oracle_trials and n <= 9:
                worst_oracle = max(worst_oracle, abs(lhs - oracles.edge_cube_bruteforce(g.values, n, float(p))),
                                   abs(rhs - oracles.edge_layer_bruteforce(f.values, n, k)))
        c_oracle = oracles.threshold_edge_cube(n, k, float(p))
        up.append({"n": n, "k": k, "p": str(p), "c": c, "c_oracle_dev": abs(c - c_oracle),
                   "max_lhs_minus_rhs": worst_ineq, "max_identity_dev": worst_identity,
                   "max_oracle_dev": worst_oracle})
    n, k, p = 12, 3, 0.25
    down_worst = max(_down_worst(LayerFunction(n, k, rng.random(math.comb(n, k))), p, 3) for _ in range(trials))
    inner = down_inner_sum(0.25, 64, 16, 2, 1)
    inner_direct = oracles.down_inner_sum_direct(0.25, 64, 16, 2, 1)
    ok = (all(abs(v - 1) <= 1e-12 for v in edge_one.values())
          and all(r["max_lhs_minus_rhs"] <= 1e-12 and r["c"] <= 1 and r["c"] > 0
                  and r["c_oracle_dev"] <= 1e-12 and r["max_identity_dev"] <= 1e-12
                  and r["max_oracle_dev"] <= 1e-12 for r in up)
          and down_worst <= 5 and inner > 0.2 and abs(inner - inner_direct) <= 1e-12)
    return {"edge_of_one": edge_one, "up": up,
            "down": {"n": n, "k": k, "p": p, "max_J": 3, "trials": trials, "max_ratio": down_worst, "bound": 5},
            "inner_sum": {"n": 64, "k": 16, "J": 2, "w": 1, "value": inner, "direct": inner_direct},
            "passed": ok}


def _layer_loss_oracle(f: LayerFunction, J, T) -> float:
    """Loss by unranking each k-set independently of the cached tables."""
    total = 0.0
    T = set(T)
    for r in range(f.values.size):
        s = set(unrank_subset(r, f.k))
        cell = set_to_code(len(J), [pos for pos, c in enumerate(J) if c in s])
        if cell not in T:
            total += f.values[r]
    return total / math.comb(f.n, f.k)


def star_suite(seed: int = 0, perturbed_runs: int = 20, eps: float = 0.05) -> dict:
    n, k, p = 9, 3, Fraction(1, 3)
    star = LayerFunction.star(n, k, 0)
    res = kneser_capture(star, eps, p)
    clean = {"J": list(res.J), "T": list(res.T),
             "T_sets": [list(code_to_set(len(res.J), t)) for t in res.T],
             "loss": res.captured_loss, "oracle_loss": _layer_loss_oracle(star, res.J, res.T),
             "intersecting": is_intersecting(len(res.J), res.T), "edge_layer": res.edge_layer}
    rng = _rng(seed, 9)
    off = np.flatnonzero(star.values == 0)
    extra = max(1, round(0.01 * star.values.size))
    runs = []
    for _ in range(perturbed_runs):
        values = star.values.copy()
        values[rng.choice(off, size=extra, replace=False)] = 1.0
        f = LayerFunction(n, k, values)
        r = kneser_capture(f, eps, p)
        runs.append({"J": list(r.J), "T": list(r.T), "loss": r.captured_loss,
                     "oracle_dev": abs(r.captured_loss - _layer_loss_oracle(f, r.J, r.T)),
                     "intersecting": is_intersecting(len(r.J), r.T), "edge_layer": r.edge_layer})
    ok = (clean["intersecting"] and clean["loss"] == 0 and clean["oracle_loss"] == 0
          and all(r["intersecting"] and r["loss"] <= 5 * eps and r["oracle_dev"] <= 1e-12 for r in runs))
    return {"n": n, "k": k, "p": str(p), "eps": eps, "off_star_sets": extra, "clean": clean,
            "perturbed": runs, "max_perturbed_loss": max(r["loss"] for r in runs), "passed": ok}


SUITES = {
    "quadform": quadform_suite,
    "planted": planted_suite,
    "matching": matching_suite,
    "entropy": entropy_suite,
    "phi-grid": phi_grid_suite,
    "noise-bounds": noise_bounds_suite,
    "noisy-dictator": noisy_dictator_suite,
    "kneser": kneser_suite,
    "star": star_suite,
}


def run_suite(name: str, seed: int = 0) -> tuple:
    """Run one suite; returns ``(body, seconds)`` with the seed and RNG recorded in the body."""
    start = time.perf_counter()
    body = SUITES[name](seed)
    elapsed = time.perf_counter() - start
    return {"suite": name, "seed": seed, "rng": RNG_NAME, **body}, elapsed


def determinism_suite(seed: int = 0, names=None) -> dict:
    """Run every suite twice and compare the canonical JSON bodies byte for byte."""
    names = list(SUITES) if names is None else list(names)
    rows = []
    for name in names:
        first = report_body(run_suite(name, seed)[0]).encode()
        second = report_body(run_suite(name, seed)[0]).encode()
        rows.append({"suite": name, "bytes": len(first), "identical": first == second})
    return {"suites": rows, "passed": all(r["identical"] for r in rows)}
