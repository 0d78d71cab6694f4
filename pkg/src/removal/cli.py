"""Command-line runner: ``removal <command> [--config FILE] [options]``.

Each command writes ``<command>.txt`` and ``<command>.json`` to ``--out``.
The body holds only input-determined results; timing, version and the
seed record go into the metadata block. Reported quantities are recomputed
along an independent path before anything is written.

Exit codes: 0 success, 1 soft failure, 2 invariant failure, 3 config error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import oracles
from .chain import ProductSpace, apply_axes, apply_markov, eigendecompose, quad_form
from .functions import RNG_NAME, PointFunction, influences, noise_operator, random_function, spectrum_of
from .independent import (
    DEFAULT_MWIS_CAP,
    CapExceeded,
    eps_far_from_independent,
    is_independent,
    is_matching_like,
    matching_like_decompose,
)
from .io import (
    ConfigError,
    chain_from_mapping,
    load_chain,
    load_yaml,
    read_function,
    read_layer,
    write_report,
)
from .junta import (
    CaptureFailure,
    CaptureParams,
    capture,
    faithful_parameters,
    independent_junta_capture,
)
from .kneser import LayerFunction, edge_layer, kneser_capture, kneser_params
from .refine import EntropyGainError, phi, refinement_loop, schedule
from .suites import SUITES, determinism_suite, run_suite

EXIT_OK, EXIT_SOFT, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2, 3
RECOMPUTE_TOL = 1e-9
ORACLE_TOL = 1e-12
ORACLE_SIZE = 4096


class InvariantError(AssertionError):
    pass


class SoftFailure(RuntimeError):
    pass


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _agree(name: str, reported: float, recomputed: float) -> None:
    if abs(reported - recomputed) > RECOMPUTE_TOL:
        raise InvariantError(f"{name}: reported {reported!r}, recomputed {recomputed!r}")


class Config:
    """Merged view of the YAML file and command-line overrides."""

    def __init__(self, args: argparse.Namespace):
        self.data = load_yaml(args.config) if args.config else {}
        self.base = Path(args.config).parent if args.config else Path.cwd()
        self.args = args
        caps = self.data.get("caps", {}) or {}
        self.cap_points = args.cap_points or caps.get("points") or 3 ** 16
        self.cap_mwis = args.cap_mwis or caps.get("mwis") or DEFAULT_MWIS_CAP
        self.mode = args.mode or self.data.get("mode", "practical")
        if self.mode not in ("practical", "faithful"):
            raise ConfigError("must be 'practical' or 'faithful'", "mode")
        seed = args.seed if args.seed is not None else self.data.get("seed", 0)
        self.seed = self.integer(seed, "seed")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("must be an unsigned 64-bit integer", "seed")

    def get(self, key: str, default=None):
        value = getattr(self.args, key.replace("-", "_"), None)
        return value if value is not None else self.data.get(key, default)

    def integer(self, value, field: str) -> int:
        try:
            out = int(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"not an integer: {value!r}", field) from exc
        if out != value and not isinstance(value, str):
            raise ConfigError(f"not an integer: {value!r}", field)
        return out

    def number(self, key: str, default=None, low=-math.inf, high=math.inf) -> float:
        value = self.get(key, default)
        if value is None:
            raise ConfigError("required", key)
        try:
            out = float(Fraction(value)) if isinstance(value, str) else float(value)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"not a number: {value!r}", key) from exc
        if not low <= out <= high:
            raise ConfigError(f"{out} outside [{low}, {high}]", key)
        return out

    def int_key(self, key: str, default=None, low=0) -> int:
        value = self.get(key, default)
        if value is None:
            raise ConfigError("required", key)
        out = self.integer(value, key)
        if out < low:
            raise ConfigError(f"must be at least {low}", key)
        return out

    def path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    def chain(self):
        spec = self.get("chain")
        if spec is None:
            raise ConfigError("required", "chain")
        if isinstance(spec, str):
            if spec in ("k3", "complete"):
                return chain_from_mapping({"preset": spec})
            p = self.path(spec)
            if not p.exists():
                raise ConfigError(f"file not found: {p}", "chain")
            return load_chain(p)
        return chain_from_mapping(spec)

    def space(self, chain, n: int) -> ProductSpace:
        if chain.size ** n > self.cap_points:
            raise SoftFailure(f"|V|^n = {chain.size ** n} exceeds cap-points {self.cap_points}")
        return ProductSpace(chain, n, cap=self.cap_points)

    def function(self, key: str = "function", rng=None) -> PointFunction:
        spec = self.get(key)
        if spec is None:
            raise ConfigError("required", key)
        if isinstance(spec, str):
            p = self.path(spec)
            if not p.exists():
                raise ConfigError(f"file not found: {p}", key)
            chain = self.chain() if self.get("chain") is not None else None
            return read_function(p, chain)
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("must be a file path or a mapping with 'kind'", key)
        space = self.space(self.chain(), self.int_key("n", low=0))
        kind = spec["kind"]
        if rng is None:
            rng = np.random.default_rng(self.seed)
        if kind == "dictator":
            return PointFunction.dictator(space, int(spec.get("coord", 0)), int(spec.get("value", 0)))
        if kind == "noisy-dictator":
            f = PointFunction.dictator(space, int(spec.get("coord", 0)), int(spec.get("value", 0)))
            flips = rng.random(space.size) < float(spec.get("flip", 0.02))
            return PointFunction(space, np.abs(f.values - flips))
        if kind == "random":
            return random_function(space, rng, signed=bool(spec.get("signed", False)))
        if kind == "indicator":
            return PointFunction.indicator(space, [tuple(p) for p in spec.get("points", [])])
        if kind == "constant":
            return PointFunction.constant(space, float(spec.get("value", 1.0)))
        raise ConfigError(f"unknown kind {kind!r}", f"{key}.kind")

    def layer(self, rng=None) -> LayerFunction:
        spec = self.get("layer")
        if spec is None:
            raise ConfigError("required", "layer")
        if isinstance(spec, str):
            p = self.path(spec)
            if not p.exists():
                raise ConfigError(f"file not found: {p}", "layer")
            return read_layer(p)
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("must be a file path or a mapping with 'kind'", "layer")
        n, k = self.int_key("n", low=1), self.int_key("k", low=1)
        if rng is None:
            rng = np.random.default_rng(self.seed)
        kind = spec["kind"]
        if kind == "star":
            return LayerFunction.star(n, k, int(spec.get("element", 0)))
        if kind == "perturbed-star":
            f = LayerFunction.star(n, k, int(spec.get("element", 0)))
            off = np.flatnonzero(f.values == 0)
            count = max(1, round(float(spec.get("fraction", 0.01)) * f.values.size))
            values = f.values.copy()
            values[rng.choice(off, size=count, replace=False)] = 1.0
            return LayerFunction(n, k, values)
        if kind == "constant":
            return LayerFunction.constant(n, k, float(spec.get("value", 1.0)))
        if kind == "random":
            return LayerFunction(n, k, rng.random(math.comb(n, k)))
        raise ConfigError(f"unknown kind {kind!r}", "layer.kind")

    def capture_params(self, j_budget=None) -> CaptureParams:
        block = self.data.get("capture", {}) or {}
        try:
            return CaptureParams(
                eta=self.number("eta", block.get("eta", 0.99), 0, 1),
                gamma=self.number("gamma", block.get("gamma", 0.05), 0, 1),
                j_budget=j_budget if j_budget is not None else block.get("j_budget"),
                method=block.get("method", "spectral"),
                j_max=int(block.get("j_max", 2)),
                mode=self.mode,
            )
        except TypeError as exc:
            raise ConfigError(str(exc), "capture") from exc


def _space_info(space: ProductSpace) -> dict:
    return {"states": list(space.base.states), "n": space.n, "size": space.size}


def cmd_validate_chain(cfg: Config) -> dict:
    chain = cfg.chain()
    spec = eigendecompose(chain)
    pi, A = chain.stationary, chain.transition
    _agree("stationarity residual", float(np.abs(pi @ A - pi).max()), 0.0)
    flow = pi[:, None] * A
    _agree("reversibility residual", float(np.abs(flow - flow.T).max()), 0.0)
    _agree("w_min", chain.w_min, float(flow[flow > 0].min()))
    return {"states": list(chain.states), "transition": A, "stationary": pi, "w_min": chain.w_min,
            "eigenvalues": spec.eigenvalues, "lambda2": spec.lambda2, "loops": chain.has_loops}


def cmd_quadform(cfg: Config) -> dict:
    rng = np.random.default_rng(cfg.seed)
    f = cfg.function("function", rng)
    g = cfg.function("second", rng) if cfg.get("second") is not None else f
    space = f.space
    value = quad_form(space, f, g)
    if space.size <= ORACLE_SIZE:
        check = oracles.quad_form_bruteforce(space, f, g)
    else:
        check = float(f.values @ apply_axes(space, g.values, space.base.edge_matrix).reshape(-1))
    _agree("quad_form", value, check)
    return {"space": _space_info(space), "value": value, "mean_f": f.mean(), "mean_g": g.mean()}


def cmd_decompose(cfg: Config) -> dict:
    g = cfg.function()
    res = matching_like_decompose(g)
    check = is_matching_like(res.f, cfg.cap_mwis)
    if not np.all(res.f.values <= g.values):
        raise InvariantError("decomposition exceeds g")
    if not is_independent(g.space, res.residual_set):
        raise InvariantError("residual set is not independent")
    if not check.ok:
        raise InvariantError(f"f is not matching-like: {check.worst_mass} > {res.f.mean() / 2}")
    return {"space": _space_info(g.space), "mean_g": g.mean(), "mean_f": res.f.mean(),
            "residual_set": res.residual_set, "augmentations": len(res.augmentation_trace),
            "worst_independent_mass": check.worst_mass, "f": res.f.values}


def cmd_far(cfg: Config) -> dict:
    g = cfg.function()
    eps = cfg.number("eps", None, 0, 1)
    res = eps_far_from_independent(g, eps, cfg.cap_mwis)
    if not is_independent(g.space, res.witness):
        raise InvariantError("witness is not independent")
    w = np.asarray(res.witness, dtype=np.int64)
    _agree("captured", res.captured, float(np.dot(g.space.measure[w], g.values[w])) if w.size else 0.0)
    return {"space": _space_info(g.space), "eps": eps, "mean": g.mean(), "far": res.far,
            "witness": res.witness, "captured": res.captured, "missed": g.mean() - res.captured}


def cmd_refine(cfg: Config) -> dict:
    f = cfg.function()
    r = cfg.int_key("r", 2, low=1)
    eps = cfg.get("eps")
    eps = None if eps is None else cfg.number("eps", None, 0, 1)
    max_steps = cfg.get("max_steps")
    trace = refinement_loop(f, r, eps, None if max_steps is None else int(max_steps),
                            CaptureParams(eta=cfg.number("eta", 0.99, 0, 1), gamma=cfg.number("gamma", 0.05, 0, 1),
                                          j_budget=r, mode=cfg.mode))
    for step in trace.steps:
        table = oracles.conditional_expectation_bruteforce(f, step.I)
        mu = f.space.sub(len(step.I)).measure
        _agree(f"H at step {step.step}", step.H, float(sum(m * phi(max(t, 0.0)) for m, t in zip(mu, table))))
    if trace.accepted_steps > trace.bound:
        raise InvariantError("step bound exceeded")
    return {"space": _space_info(f.space), "r": r, "eps": eps, "trace": trace.as_dict()}


def _faithful_block(cfg: Config, lam: float) -> dict:
    return faithful_parameters(cfg.number("eps", None, 0, 1), cfg.number("c", 1.0, 0),
                               lam, cfg.number("p_exponent", 3.0, 2))


def _capture_oracle(f: PointFunction, J, T) -> float:
    table = oracles.conditional_expectation_bruteforce(f, J)
    mu = f.space.sub(len(J)).measure
    return float(np.dot(f.space.measure, f.values)) - float(sum(mu[t] * table[t] for t in T))


def cmd_capture(cfg: Config) -> dict:
    rng = np.random.default_rng(cfg.seed)
    f1 = cfg.function("function", rng)
    f2 = cfg.function("second", rng) if cfg.get("second") is not None else f1
    eps = cfg.number("eps", None, 0, 1)
    if cfg.mode == "faithful":
        return {"mode": "faithful", "parameters": _faithful_block(cfg, spectrum_of(f1.space.base).lambda2)}
    try:
        cap = capture(f1, f2, eps, cfg.capture_params())
    except CapExceeded as exc:
        raise SoftFailure(str(exc)) from exc
    _agree("outside1", cap.outside1, _capture_oracle(f1, cap.J, cap.T1))
    _agree("outside2", cap.outside2, _capture_oracle(f2, cap.J, cap.T2))
    cells = f1.space.sub(len(cap.J))
    W = oracles.product_edge_matrix(cells)
    _agree("cross", cap.cross, float(W[np.ix_(list(cap.T1), list(cap.T2))].sum()) if cap.T1 and cap.T2 else 0.0)
    return {"space": _space_info(f1.space), "eps": eps, "capture": cap.as_dict()}


def cmd_independent_capture(cfg: Config) -> dict:
    g = cfg.function()
    eps = cfg.number("eps", None, 0, 1)
    if cfg.mode == "faithful":
        return {"mode": "faithful", "parameters": _faithful_block(cfg, spectrum_of(g.space.base).lambda2)}
    try:
        res = independent_junta_capture(g, eps, cfg.capture_params(), cfg.cap_mwis)
    except CapExceeded as exc:
        raise SoftFailure(str(exc)) from exc
    if not is_independent(g.space.sub(len(res.J)), res.T):
        raise InvariantError("T is not independent")
    _agree("loss", res.loss, _capture_oracle(g, res.J, res.T))
    return {"space": _space_info(g.space), "eps": eps, "J": res.J, "T": res.T, "loss": res.loss,
            "T_prime": res.T_prime, "capture": res.capture.as_dict()}


def cmd_kneser(cfg: Config) -> dict:
    from .suites import _layer_loss_oracle

    f = cfg.layer()
    p = cfg.get("p")
    if p is None:
        raise ConfigError("required", "p")
    try:
        p = Fraction(str(p))
        if kneser_params(f.n, p) != f.k:
            raise ConfigError(f"p*n = {p * f.n} differs from k = {f.k}", "p")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "p") from exc
    eps = cfg.number("eps", None, 0, 1)
    if cfg.mode == "faithful":
        from .kneser import disjointness_chain

        lam = spectrum_of(disjointness_chain(p)).lambda2
        return {"mode": "faithful", "parameters": _faithful_block(cfg, lam)}
    try:
        res = kneser_capture(f, eps, p, cfg.capture_params(), cfg.cap_mwis)
    except CapExceeded as exc:
        raise SoftFailure(str(exc)) from exc
    _agree("captured_loss", res.captured_loss, _layer_loss_oracle(f, res.J, res.T))
    if math.comb(f.n, f.k) <= 400:
        _agree("edge_layer", res.edge_layer, oracles.edge_layer_bruteforce(f.values, f.n, f.k))
    return {"n": f.n, "k": f.k, "p": str(p), "eps": eps, "bound": 5 * eps,
            "within_bound": res.captured_loss <= 5 * eps, **res.as_dict()}


def cmd_sweep(cfg: Config) -> dict:
    names = cfg.args.target or list(cfg.data.get("suites", [])) or list(SUITES) + ["determinism"]
    body = {}
    for name in names:
        if name == "determinism":
            body[name] = determinism_suite(cfg.seed)
        elif name in SUITES:
            body[name] = run_suite(name, cfg.seed)[0]
        else:
            raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['determinism']}", "suite")
    failed = [name for name, b in body.items() if not b["passed"]]
    if failed:
        cfg.failed = f"suites failed: {', '.join(failed)}"
    return body


COMPARE_TARGETS = ("quadform", "markov", "noise", "influence", "conditional")


def cmd_oracle_compare(cfg: Config) -> dict:
    targets = cfg.args.target or [cfg.data.get("target", "quadform")]
    rng = np.random.default_rng(cfg.seed)
    space = cfg.space(cfg.chain(), cfg.int_key("n", 3, low=1))
    if space.size > ORACLE_SIZE:
        raise SoftFailure(f"oracle comparison needs |V|^n <= {ORACLE_SIZE}")
    trials = cfg.int_key("trials", 10, low=1)
    eta = cfg.number("eta", 0.9, 0, 1)
    body = {"space": _space_info(space), "trials": trials, "tol": ORACLE_TOL, "results": {}}
    for target in targets:
        if target not in COMPARE_TARGETS:
            raise ConfigError(f"unknown target {target!r}; choose from {list(COMPARE_TARGETS)}", "target")
        worst = 0.0
        for _ in range(trials):
            f = random_function(space, rng)
            if target == "quadform":
                g = random_function(space, rng)
                dev = abs(quad_form(space, f, g) - oracles.quad_form_bruteforce(space, f, g))
            elif target == "markov":
                dev = float(np.abs(apply_markov(space, f).reshape(-1) - oracles.apply_markov_bruteforce(space, f)).max())
            elif target == "noise":
                fast = noise_operator(PointFunction(space, f.values, signed=True), eta).values
                dev = float(np.abs(fast - oracles.noise_matrix(space, eta) @ f.values).max())
            elif target == "influence":
                dev = max(abs(a - oracles.influence_variance(f, i)) for i, a in enumerate(influences(f)))
            else:
                from .functions import conditional_expectation

                coords = [c for c in range(space.n) if rng.random() < 0.5]
                dev = float(np.abs(conditional_expectation(f, coords).reshape(-1)
                                   - oracles.conditional_expectation_bruteforce(f, coords)).max())
            worst = max(worst, float(dev))
        body["results"][target] = {"max_dev": worst, "ok": worst <= ORACLE_TOL}
    bad = [t for t, r in body["results"].items() if not r["ok"]]
    if bad:
        raise InvariantError(f"oracle deviation above {ORACLE_TOL} for {', '.join(bad)}")
    return body


def cmd_schedule(cfg: Config) -> dict:
    chain = cfg.chain() if cfg.get("chain") is not None else chain_from_mapping({"preset": "k3"})
    eps = cfg.number("eps", 0.1, 0, 1)
    alpha = cfg.number("alpha", eps, 0, 1)
    body = schedule(cfg.number("c", 1.0, 0), eps, alpha, cfg.int_key("r", 10, low=1), chain)
    if cfg.mode == "faithful":
        body["faithful"] = faithful_parameters(eps, body["c"], spectrum_of(chain).lambda2,
                                               cfg.number("p_exponent", 3.0, 2))
    return body


def cmd_phi_grid(cfg: Config) -> dict:
    points = cfg.int_key("points", 101, low=2)
    high = cfg.number("x_max", 2.0, 0)
    xs = np.linspace(0.0, high, points)
    table = [[float(x), phi(float(x))] for x in xs]
    for x, y in table:
        _agree(f"phi({x})", y, 0.0 if x == 0 else float(np.log(x) * x))
    return {"columns": ["x", "phi"], "rows": table, "minimum": {"x": math.exp(-1), "phi": -math.exp(-1)}}


COMMANDS = {
    "validate-chain": cmd_validate_chain,
    "quadform": cmd_quadform,
    "decompose": cmd_decompose,
    "far": cmd_far,
    "refine": cmd_refine,
    "capture": cmd_capture,
    "independent-capture": cmd_independent_capture,
    "kneser": cmd_kneser,
    "sweep": cmd_sweep,
    "oracle-compare": cmd_oracle_compare,
    "schedule": cmd_schedule,
    "phi-grid": cmd_phi_grid,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="removal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("target", nargs="*", help="suite names (sweep) or oracle targets (oracle-compare)")
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        p.add_argument("--mode", choices=("practical", "faithful"))
        p.add_argument("--cap-points", type=int, help="largest |V|^n table")
        p.add_argument("--cap-mwis", type=int, help="largest exact independent-set instance")
        p.add_argument("--chain", help="chain file or preset name (k3)")
        p.add_argument("--function", help="function file")
        p.add_argument("--layer", help="layer function file")
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--p")
        p.add_argument("--eps", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--r", type=int)
        p.add_argument("--quiet", action="store_true", help="do not echo the report body")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    status, error = EXIT_OK, None
    body: dict = {}
    cfg = None
    try:
        cfg = Config(args)
        cfg.failed = None
        body = COMMANDS[args.command](cfg)
        if cfg.failed:
            status, error = EXIT_INVARIANT, cfg.failed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SoftFailure, CaptureFailure, MemoryError) as exc:
        status, error = EXIT_SOFT, f"{type(exc).__name__}: {exc}"
    except (InvariantError, EntropyGainError, AssertionError) as exc:
        status, error = EXIT_INVARIANT, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config_echo = dict(cfg.data) if cfg else {}
    for key in ("n", "k", "p", "eps", "eta", "gamma", "alpha", "c", "r", "chain", "function", "layer"):
        value = getattr(args, key, None)
        if value is not None:
            config_echo[key] = value
    full = {"command": args.command, "config": config_echo, "mode": cfg.mode if cfg else None,
            "seed": cfg.seed if cfg else None, "rng": RNG_NAME, "status": status, "error": error,
            "result": body}
    meta = {"seconds": round(time.perf_counter() - start, 3), "version": _tool_version()}
    txt, _ = write_report(args.out, args.command, full, meta)
    if not args.quiet:
        sys.stdout.write(txt.read_text())
    if error:
        print(error, file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
