"""YAML run configuration with strict keys and range checks."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import yaml

from . import geometry as geo
from .errors import ParseError, RangeError, UnknownKey
from .nonlinearity import Bistable

DEFAULTS = {
    "nonlinearity": {"kind": "cubic", "a": 0.25},
    "domain": {"preset": "straight"},
    "dx": 0.1,
    "dt_factor": 0.9,
    "tolerances": {"stat": 1e-7, "mono": 1e-8, "shoot": 1e-11, "ball": 1e-6},
    "stop": {"rule": "stationary", "t_max": 500.0, "x1_target": None},
    "init": {"T": -40.0, "M": None},
    "classify": {"u_lo": 0.05, "u_hi": 0.95, "u_mid": 0.1, "tail_fraction": 0.1},
    "output": {"dir": "out", "csv": True, "vtk": False, "snapshots_every": None},
}

_SECTION_KEYS = {k: set(v) for k, v in DEFAULTS.items() if isinstance(v, dict)}
_SECTION_KEYS["nonlinearity"] = {"kind", "a", "scale", "knots", "theta"}
_SECTION_KEYS["domain"] = None  # preset parameters are checked against the preset signature
_RULES = ("stationary", "front_reached", "t_max", "either")


@dataclass
class RunConfig:
    nonlinearity: dict
    domain: dict
    dx: float
    dt_factor: float
    tolerances: dict
    stop: dict
    init: dict
    classify: dict
    output: dict
    extra: dict = field(default_factory=dict)

    def bistable(self) -> Bistable:
        return Bistable.from_dict(self.nonlinearity)

    def domain_spec(self) -> geo.DomainSpec:
        return domain_from_dict(self.domain)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def domain_from_dict(d: dict) -> geo.DomainSpec:
    d = dict(d)
    if "preset" in d:
        name = d.pop("preset")
        if "truncation" in d:
            d["truncation"] = tuple(d["truncation"])
        try:
            return geo.preset(name, **d)
        except TypeError as exc:
            raise UnknownKey(f"domain preset {name!r}: {exc}") from None
    unknown = set(d) - {"top", "bottom", "smoothing_length", "truncation"}
    if unknown:
        raise UnknownKey(f"unknown domain keys: {sorted(unknown)}")
    if "top" not in d or "bottom" not in d:
        raise ParseError("a custom domain needs both 'top' and 'bottom' point lists")
    return geo.DomainSpec(d["top"], d["bottom"], float(d.get("smoothing_length", 0.1)),
                          tuple(d.get("truncation", (-40.0, 20.0))))


def _merge(section: str, given, default):
    if not isinstance(given, dict):
        raise ParseError(f"section {section!r} must be a mapping")
    allowed = _SECTION_KEYS.get(section)
    if allowed is not None:
        unknown = set(given) - allowed
        if unknown:
            raise UnknownKey(f"unknown keys in {section!r}: {sorted(unknown)}")
    out = dict(default)
    out.update(given)
    return out


def _positive(name, value):
    if value is None:
        return
    if not isinstance(value, (int, float)) or not value > 0:
        raise RangeError(f"{name} must be a positive number, got {value!r}")


def from_dict(raw: dict) -> RunConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("the configuration must be a mapping at top level")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise UnknownKey(f"unknown keys: {sorted(unknown)}")
    vals = {}
    for key, default in DEFAULTS.items():
        given = raw.get(key, default)
        if key == "domain" and isinstance(given, str):
            given = {"preset": given}
        if key == "nonlinearity" and isinstance(given, str):
            given = {"kind": given}
        if isinstance(default, dict):
            vals[key] = _merge(key, given, default if key != "domain" else {})
            if key == "domain" and not vals[key]:
                vals[key] = dict(default)
        else:
            vals[key] = given
    cfg = RunConfig(**vals)
    _check(cfg)
    return cfg


def _check(cfg: RunConfig):
    _positive("dx", cfg.dx)
    if not 0 < cfg.dt_factor <= 1:
        raise RangeError(f"dt_factor must lie in (0, 1], got {cfg.dt_factor!r}")
    for k, v in cfg.tolerances.items():
        _positive(f"tolerances.{k}", v)
    if cfg.stop["rule"] not in _RULES:
        raise RangeError(f"stop.rule must be one of {_RULES}, got {cfg.stop['rule']!r}")
    _positive("stop.t_max", cfg.stop["t_max"])
    if cfg.stop["rule"] in ("front_reached", "either") and cfg.stop["x1_target"] is None:
        raise RangeError("stop.x1_target is required for the front_reached rule")
    _positive("init.M", cfg.init["M"])
    if not cfg.init["T"] < 0:
        raise RangeError("init.T must be negative")
    c = cfg.classify
    if not 0 < c["u_lo"] < c["u_mid"] < c["u_hi"] < 1:
        raise RangeError("classify thresholds must satisfy 0 < u_lo < u_mid < u_hi < 1")
    if not 0 < c["tail_fraction"] < 1:
        raise RangeError("classify.tail_fraction must lie in (0, 1)")
    _positive("output.snapshots_every", cfg.output["snapshots_every"])
    nl = cfg.nonlinearity
    if nl.get("kind", "cubic") == "cubic":
        a = nl.get("a")
        if not isinstance(a, (int, float)) or not 0 < a < 1:
            raise RangeError(f"nonlinearity.a must lie in (0, 1), got {a!r}")
    elif nl.get("kind") != "tabulated":
        raise RangeError(f"nonlinearity.kind must be 'cubic' or 'tabulated', got {nl.get('kind')!r}")
    _positive("nonlinearity.scale", nl.get("scale"))
    try:
        cfg.domain_spec()
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (UnknownKey, ParseError)):
            raise
        raise RangeError(f"invalid domain: {exc}") from None


def parse(text: str) -> RunConfig:
    """Parse YAML text into a fully defaulted :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(f"malformed configuration: {exc.problem}", line, col) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration: {exc}") from None
    return from_dict(raw)


def load(path) -> RunConfig:
    with open(path) as fh:
        return parse(fh.read())
