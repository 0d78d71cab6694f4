"""Text formats for chains, point functions, layer functions and reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml

from .chain import BaseChain, ChainError, complete_graph_chain, validate_chain
from .functions import PointFunction
from .chain import ProductSpace


class ConfigError(ValueError):
    """A malformed input file or configuration field."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


def load_yaml(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(str(exc.problem), line=mark.line + 1 if mark else None) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    return data


def chain_from_mapping(spec: dict, field: str = "chain") -> BaseChain:
    """Build a chain from ``{states, rows}`` or ``{preset: ...}``."""
    if not isinstance(spec, dict):
        raise ConfigError("chain must be a mapping or a file path", field)
    preset = spec.get("preset")
    try:
        if preset in ("k3", "complete"):
            return complete_graph_chain(int(spec.get("m", 3)))
        if preset == "disjointness":
            from .kneser import disjointness_chain

            if "p" not in spec:
                raise ConfigError("disjointness preset needs p", f"{field}.p")
            return disjointness_chain(_number(spec["p"], f"{field}.p"))
        if preset is not None:
            raise ConfigError(f"unknown preset {preset!r}", f"{field}.preset")
        if "rows" not in spec:
            raise ConfigError("missing 'rows'", f"{field}.rows")
        return validate_chain(spec["rows"], spec.get("states"))
    except ChainError as exc:
        raise ConfigError(str(exc), field) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), field) from exc


def load_chain(path) -> BaseChain:
    return chain_from_mapping(load_yaml(path), field=str(path))


def dump_chain(chain: BaseChain, path, rows=None) -> None:
    rows = rows if rows is not None else [[repr(float(v)) for v in row] for row in chain.transition]
    with open(path, "w") as fh:
        yaml.safe_dump({"states": list(chain.states), "rows": rows}, fh, sort_keys=False)


def _number(value, field: str) -> float:
    from fractions import Fraction

    try:
        return float(Fraction(value)) if isinstance(value, str) else float(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {value!r}", field) from exc


def _read_table(path, required: tuple) -> tuple:
    header, values = {}, []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            key, _, val = text[1:].partition(":")
            header[key.strip()] = val.strip()
            continue
        try:
            values.append(float(text))
        except ValueError as exc:
            raise ConfigError(f"bad value {text!r}", str(path), lineno) from exc
    for key in required:
        if key not in header:
            raise ConfigError(f"missing header '# {key}:'", str(path))
    return header, np.array(values)


def write_function(path, f: PointFunction, chain_ref: str) -> None:
    lines = [f"# chain: {chain_ref}", f"# n: {f.space.n}", f"# range: {'signed' if f.signed else 'unit'}"]
    lines += [repr(float(v)) for v in f.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_function(path, chain: BaseChain | None = None) -> PointFunction:
    """Read a point function; the chain comes from the header unless given."""
    header, values = _read_table(path, ("chain", "n", "range"))
    if chain is None:
        ref = Path(header["chain"])
        if not ref.is_absolute():
            ref = Path(path).parent / ref
        chain = load_chain(ref)
    n = int(header["n"])
    signed = header["range"] == "signed"
    try:
        return PointFunction(ProductSpace(chain, n), values, signed)
    except ValueError as exc:
        raise ConfigError(str(exc), str(path)) from exc


def write_layer(path, f) -> None:
    lines = [f"# n: {f.n}", f"# k: {f.k}"] + [repr(float(v)) for v in f.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_layer(path):
    from .kneser import LayerFunction

    header, values = _read_table(path, ("n", "k"))
    try:
        return LayerFunction(int(header["n"]), int(header["k"]), values)
    except ValueError as exc:
        raise ConfigError(str(exc), str(path)) from exc


def to_plain(obj):
    """Convert results to JSON-ready builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        value = int(obj)
        return value if abs(value) < 10 ** 15 else str(value)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    return repr(obj)


def report_body(body: dict) -> str:
    """Canonical JSON text of a report body; equal inputs give equal bytes."""
    return json.dumps(to_plain(body), sort_keys=True, indent=1)


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append(f"{prefix}: {json.dumps(obj)}")


def report_lines(body: dict) -> str:
    out: list = []
    _flatten("", to_plain(body), out)
    return "\n".join(out) + "\n"


def write_report(out_dir, name: str, body: dict, meta: dict) -> tuple:
    """Write ``<name>.txt`` (body lines, then ``#``-prefixed meta) and ``<name>.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = report_lines(body)
    for key in sorted(meta):
        text += f"# {key}: {json.dumps(to_plain(meta[key]))}\n"
    txt = out_dir / f"{name}.txt"
    js = out_dir / f"{name}.json"
    txt.write_text(text)
    js.write_text(json.dumps({"body": to_plain(body), "meta": to_plain(meta)}, sort_keys=True, indent=1) + "\n")
    return txt, js
