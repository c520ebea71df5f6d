"""Run configuration: a single JSON document describing one check.

Rationals (weights, kernel entries, times) are ``"p/q"`` strings so they
round-trip exactly; coordinates, radii and masses-as-floats are JSON numbers.
See the README for an annotated example.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from markov_feller.checkers import (
    EPS0,
    TAIL_WINDOW,
    TOL,
    ProbeSchedule,
    PropertyReport,
    TestFunction,
    check_asf,
    check_asymptotic_e_property,
    check_e_property,
    default_probes,
    state_probes,
)
from markov_feller.errors import ConfigError, FellerError
from markov_feller.hamel import AdditiveFunction, SpanPoint
from markov_feller.semigroups import FiniteKernel, Identity, MarkovSemigroup, Scaling
from markov_feller.spaces import Metric, Point, PseudoMetricFamily

_RATIONAL = {"oneOf": [{"type": "string", "pattern": r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$"}, {"type": "integer"}]}
_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_SPAN = {"type": "array", "items": _RATIONAL, "minItems": 1}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["check", "semigroup", "y", "schedules"],
    "properties": {
        "check": {"enum": ["e", "asymptotic-e", "asf"]},
        "semigroup": {
            "type": "object",
            "required": ["variant"],
            "properties": {
                "variant": {"enum": ["scaling", "identity", "kernel"]},
                "weights": {"type": "array", "items": _RATIONAL, "minItems": 2},
                "dimension": {"type": "integer", "minimum": 1},
                "allow_sign_violation": {"type": "boolean"},
                "states": {"type": "array", "items": _VECTOR, "minItems": 1},
                "matrix": {"type": "array", "items": {"type": "array", "items": _RATIONAL}},
            },
        },
        "metric": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["pnorm", "table"]},
                "p": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]},
                "points": {"type": "array", "items": _VECTOR},
                "distances": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            },
        },
        "family": {
            "type": "object",
            "properties": {"schedule": {"enum": ["linear", "geometric"]}},
        },
        "y": _VECTOR,
        "schedules": {
            "type": "object",
            "required": ["radii"],
            "properties": {
                "times": {"type": "array", "items": _SPAN, "minItems": 1},
                "time_ranges": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["start", "step", "count"],
                        "properties": {
                            "start": _SPAN,
                            "step": _SPAN,
                            "count": {"type": "integer", "minimum": 1},
                        },
                    },
                },
                "tail_start": {"type": "integer", "minimum": 0},
                "tail_window": {"type": "integer", "minimum": 1},
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "probes": {"type": "array", "items": {"type": "array", "items": _VECTOR}},
                "random_probes": {"type": "integer", "minimum": 0},
                "radial_probes": {"type": "integer", "minimum": 0},
            },
        },
        "test_functions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["distance", "truncated_distance", "table", "constant"]},
                    "anchor": _VECTOR,
                    "value": {"type": "number"},
                    "lipschitz": {"type": "number", "minimum": 0},
                    "values": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["point", "value"],
                            "properties": {"point": _VECTOR, "value": {"type": "number"}},
                        },
                    },
                },
            },
        },
        "format": {"enum": ["json", "csv"]},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0}, "eps0": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


def validate_document(doc: Any) -> None:
    """Raise :class:`ConfigError` for the first schema violation (deterministic order)."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = [p for p in err.validator_value if isinstance(err.instance, dict) and p not in err.instance]
        if missing:
            path.append(missing[0])
            raise ConfigError("required field is missing", _pointer(path))
    raise ConfigError(err.message, _pointer(path))


@dataclass
class RunConfig:
    check: str
    semigroup: MarkovSemigroup
    metric: Metric
    family: PseudoMetricFamily
    y: Point
    schedule: ProbeSchedule
    test_functions: list[TestFunction]
    format: str = "json"
    seed: int = 0
    tol: float = TOL
    eps0: float = EPS0


def _metric(doc: dict | None) -> Metric:
    if doc is None:
        return Metric.euclidean()
    if doc["kind"] == "pnorm":
        p = doc.get("p", 2)
        return Metric.pnorm(math.inf if p == "inf" else p)
    if "points" not in doc:
        raise ConfigError("required field is missing", "/metric/points")
    if "distances" not in doc:
        raise ConfigError("required field is missing", "/metric/distances")
    try:
        return Metric.table([Point(tuple(p)) for p in doc["points"]], doc["distances"])
    except (ValueError, FellerError) as exc:
        raise ConfigError(str(exc), "/metric") from None


def _semigroup(doc: dict) -> MarkovSemigroup:
    variant = doc["variant"]
    try:
        if variant == "identity":
            return Identity()
        if variant == "scaling":
            weights = doc.get("weights", ["-1", "1"])
            f = AdditiveFunction.from_weights(weights)
            return Scaling(f, doc.get("dimension", 2), doc.get("allow_sign_violation", False))
        for key in ("states", "matrix"):
            if key not in doc:
                raise ConfigError("required field is missing", f"/semigroup/{key}")
        return FiniteKernel(tuple(Point(tuple(s)) for s in doc["states"]), doc["matrix"])
    except ConfigError:
        raise
    except (ValueError, FellerError) as exc:
        where = "/semigroup/weights" if variant == "scaling" else "/semigroup/matrix"
        raise ConfigError(str(exc), where) from None


def _times(doc: dict) -> list[SpanPoint]:
    if "times" in doc:
        return [SpanPoint.from_json(t) for t in doc["times"]]
    if "time_ranges" in doc:
        out = []
        for k, r in enumerate(doc["time_ranges"]):
            start, step = SpanPoint.from_json(r["start"]), SpanPoint.from_json(r["step"])
            if start.dim != step.dim:
                raise ConfigError("start and step differ in dimension", f"/schedules/time_ranges/{k}")
            out.extend(start + j * step for j in range(r["count"]))
        return out
    raise ConfigError("required field is missing", "/schedules/times")


def _test_function(doc: dict, metric: Metric, y: Point, k: int) -> TestFunction:
    kind = doc["kind"]
    where = f"/test_functions/{k}"
    if kind == "constant":
        return TestFunction.const(doc.get("value", 1.0))
    if kind == "table":
        if "values" not in doc:
            raise ConfigError("required field is missing", where + "/values")
        try:
            return TestFunction.table(
                [(Point(tuple(v["point"])), v["value"]) for v in doc["values"]], metric, doc.get("lipschitz")
            )
        except (ValueError, FellerError) as exc:
            raise ConfigError(str(exc), where) from None
    if "anchor" in doc:
        anchor = Point(tuple(doc["anchor"]))
    elif metric.kind == "pnorm":
        anchor = Point((0.0,) * y.dim)
    else:
        anchor = y
    if kind == "distance":
        return TestFunction.distance(metric, anchor)
    return TestFunction.truncated_distance(metric, anchor)


def parse_config(doc: Any) -> RunConfig:
    validate_document(doc)
    metric = _metric(doc.get("metric"))
    sg = _semigroup(doc["semigroup"])
    y = Point(tuple(doc["y"]))
    family = PseudoMetricFamily(metric, doc.get("family", {}).get("schedule", "linear"))
    sch = doc["schedules"]
    times = _times(sch)
    for k, u in enumerate(times):
        try:
            sg.check_time(u)
        except FellerError as exc:
            raise ConfigError(str(exc), f"/schedules/times/{k}") from None
    radii = sch["radii"]
    seed = doc.get("seed", 0)
    if "probes" in sch:
        probes = [[Point(tuple(p)) for p in group] for group in sch["probes"]]
    elif isinstance(sg, FiniteKernel):
        probes = state_probes(sg.states, y, radii, metric)
    elif metric.kind == "table":
        probes = state_probes(metric.points, y, radii, metric)
    else:
        probes = default_probes(
            y, radii, metric, seed=seed,
            n_random=sch.get("random_probes", 4),
            n_radial=sch.get("radial_probes", 0 if metric.norm(y) == 0 else 4),
        )
    try:
        schedule = ProbeSchedule(
            times, radii, probes, sch.get("tail_start", 0), sch.get("tail_window", min(TAIL_WINDOW, len(times)))
        )
        schedule.validate(metric, y)
    except (ValueError, FellerError) as exc:
        raise ConfigError(str(exc), "/schedules") from None
    if isinstance(sg, FiniteKernel):
        if y not in sg.states:
            raise ConfigError("y must be one of the kernel states", "/y")
    fns_doc = doc.get("test_functions") or [{"kind": "distance"}, {"kind": "truncated_distance"}]
    fns = [_test_function(f, metric, y, k) for k, f in enumerate(fns_doc)]
    tols = doc.get("tolerances", {})
    return RunConfig(
        check=doc["check"],
        semigroup=sg,
        metric=metric,
        family=family,
        y=y,
        schedule=schedule,
        test_functions=fns,
        format=doc.get("format", "json"),
        seed=seed,
        tol=tols.get("tol", TOL),
        eps0=tols.get("eps0", EPS0),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(doc)


def run_config(cfg: RunConfig) -> PropertyReport:
    sch = cfg.schedule
    if cfg.check == "e":
        return check_e_property(cfg.semigroup, cfg.y, sch, cfg.test_functions, cfg.tol, cfg.eps0)
    if cfg.check == "asymptotic-e":
        return check_asymptotic_e_property(cfg.semigroup, cfg.y, sch, cfg.test_functions, cfg.tol, cfg.eps0)
    return check_asf(cfg.semigroup, cfg.y, sch.times, cfg.family, sch.radii, sch.probes, sch.tail_window, cfg.tol)
