"""JSON encoding for mechanisms, multi-agent tables and grid distributions.

Segment coefficients and parameters are written as decimal strings with 17
significant digits, which round-trips every binary64 value exactly.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import InvariantViolation, ParseError
from .piecewise import COEFF_NAMES, PiecewiseFn, Segment
from .types import GridDistribution, MechanismParams, MultiAgentTable, SingleAgentMechanism

VERSION = 1
SEGMENT_KEYS = ("lo", "hi") + COEFF_NAMES


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _num(raw, field: str) -> float:
    if isinstance(raw, bool):
        raise ParseError("expected a number", field=field)
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"not a decimal number: {raw!r}", field=field) from None
    raise ParseError(f"expected a number, got {type(raw).__name__}", field=field)


def _get(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field=path)
    if key not in obj:
        raise ParseError("missing field", field=f"{path}.{key}" if path else key)
    return obj[key]


def _dump_fn(f: PiecewiseFn) -> list[dict]:
    return [
        {k: fmt(getattr(s, k)) for k in SEGMENT_KEYS}
        for s in f.segments
    ]


def _load_fn(raw, path: str) -> PiecewiseFn:
    if not isinstance(raw, list):
        raise ParseError("expected a list of segments", field=path)
    segs = []
    for i, item in enumerate(raw):
        where = f"{path}[{i}]"
        vals = {k: _num(_get(item, k, where), f"{where}.{k}") for k in SEGMENT_KEYS}
        segs.append(Segment(**vals))
    return PiecewiseFn(segs)


def mechanism_to_dict(m: SingleAgentMechanism) -> dict:
    params = {k: (None if v is None else (v if isinstance(v, str) else fmt(v)))
              for k, v in m.params.as_dict().items()}
    return {
        "version": VERSION,
        "kind": "single_agent",
        "rule": m.rule,
        "params": params,
        "allocation": _dump_fn(m.allocation),
        "payment": _dump_fn(m.payment),
    }


def mechanism_from_dict(d: dict) -> SingleAgentMechanism:
    _check_header(d, "single_agent")
    raw = _get(d, "params", "")
    if not isinstance(raw, dict):
        raise ParseError("expected an object", field="params")
    kw: dict[str, Any] = {}
    for name in MechanismParams.__dataclass_fields__:
        if name not in raw:
            continue
        v = raw[name]
        if name == "family":
            kw[name] = str(v)
        elif v is not None:
            kw[name] = _num(v, f"params.{name}")
    required = ("mu", "z_star", "lambda1", "lambda0", "nu_low", "nu_circ", "nu_star", "nu_bar")
    for name in required:
        if name not in kw:
            raise ParseError("missing field", field=f"params.{name}")
    params = MechanismParams(**kw)
    return SingleAgentMechanism(
        allocation=_load_fn(_get(d, "allocation", ""), "allocation"),
        payment=_load_fn(_get(d, "payment", ""), "payment"),
        params=params,
        rule=str(d.get("rule", "linear")),
    )


def table_to_dict(t: MultiAgentTable) -> dict:
    def flat(a):
        return [float(v) for v in np.asarray(a).reshape(-1)]

    return {
        "version": VERSION,
        "kind": "multi_agent",
        "agents": t.agents,
        "grid": t.grid,
        "status": t.status,
        "objective": t.objective,
        "engine": t.engine,
        "lambda1": fmt(t.lambda1),
        "lambda0": fmt(t.lambda0),
        "flags": sorted(t.flags),
        "x": flat(t.x),
        "p": flat(t.p),
        "pm": flat(t.pm),
    }


def table_from_dict(d: dict) -> MultiAgentTable:
    _check_header(d, "multi_agent")
    J = int(_num(_get(d, "agents", ""), "agents"))
    G = int(_num(_get(d, "grid", ""), "grid"))
    status = str(d.get("status", "optimal"))
    shape = (G,) * J + (J,) if status == "optimal" else (0,)
    arrays = {}
    for name in ("x", "p", "pm"):
        raw = _get(d, name, "")
        if not isinstance(raw, list):
            raise ParseError("expected a list", field=name)
        vals = np.array([_num(v, f"{name}[{i}]") for i, v in enumerate(raw)], dtype=float)
        if vals.size != int(np.prod(shape)):
            raise ParseError(f"expected {int(np.prod(shape))} values, got {vals.size}", field=name)
        arrays[name] = vals.reshape(shape)
    flags = _get(d, "flags", "")
    if not isinstance(flags, list) or not all(isinstance(f, str) for f in flags):
        raise ParseError("expected a list of flag names", field="flags")
    obj = d.get("objective")
    return MultiAgentTable(
        agents=J,
        grid=G,
        lambda1=_num(_get(d, "lambda1", ""), "lambda1"),
        lambda0=_num(_get(d, "lambda0", ""), "lambda0"),
        flags=frozenset(flags),
        status=status,
        objective=None if obj is None else _num(obj, "objective"),
        engine=str(d.get("engine", "")),
        **arrays,
    )


def distribution_to_dict(q: GridDistribution) -> dict:
    return {
        "version": VERSION,
        "kind": "distribution",
        "dims": q.dims,
        "support": [[fmt(c) for c in row] for row in q.support],
        "weights": [fmt(w) for w in q.weights],
    }


def distribution_from_dict(d: dict) -> GridDistribution:
    _check_header(d, "distribution")
    sup = _get(d, "support", "")
    w = _get(d, "weights", "")
    if not isinstance(sup, list) or not isinstance(w, list):
        raise ParseError("support and weights must be lists", field="support")
    pts = [[_num(c, f"support[{i}]") for c in row] for i, row in enumerate(sup)]
    ws = [_num(v, f"weights[{i}]") for i, v in enumerate(w)]
    return GridDistribution(np.array(pts, dtype=float).reshape(len(ws), -1), ws)


_LOADERS = {
    "single_agent": mechanism_from_dict,
    "multi_agent": table_from_dict,
    "distribution": distribution_from_dict,
}


def _check_header(d, kind: str) -> None:
    if not isinstance(d, dict):
        raise ParseError("top level must be an object")
    if d.get("version") != VERSION:
        raise ParseError(f"unsupported version {d.get('version')!r}", field="version")
    if d.get("kind") != kind:
        raise ParseError(f"expected kind {kind!r}, got {d.get('kind')!r}", field="kind")


def dumps(obj) -> str:
    if isinstance(obj, SingleAgentMechanism):
        d = mechanism_to_dict(obj)
    elif isinstance(obj, MultiAgentTable):
        d = table_to_dict(obj)
    elif isinstance(obj, GridDistribution):
        d = distribution_to_dict(obj)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return json.dumps(d, indent=1, sort_keys=False) + "\n"


def loads(text: str | bytes):
    """Parse any supported document, dispatching on its ``kind`` field."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(d, dict):
        raise ParseError("top level must be an object")
    kind = d.get("kind")
    if kind not in _LOADERS:
        raise ParseError(f"unknown kind {kind!r}", field="kind")
    try:
        return _LOADERS[kind](d)
    except InvariantViolation:
        raise
    except ParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
