"""Unit-suffixed config values and the scenario <-> dict mapping.

Dimensioned quantities are strings of the form ``"<number> <unit>"`` or
``"[x, y, z] <unit>"``; bare numbers are rejected for them. Dimensionless
quantities (``rho``, ``q``, ``rician_k``) are plain JSON numbers, with
``"inf"`` accepted for the Rician factor.

>>> parse_quantity("500 km", "length")
500000.0
>>> parse_quantity("[7, 0, 0] km/s", "speed")
[7000.0, 0.0, 0.0]
"""

from __future__ import annotations

import json
import math
import re

from .antenna import BeamConfig
from .channel import SPEED_OF_LIGHT, Scenario
from .errors import ConfigError, UnitError
from .geometry import UNIT_TOL, BodyState, unit_between
from .scatter import VmfField

UNITS = {
    "length": {"m": 1.0, "km": 1e3, "cm": 1e-2, "mm": 1e-3},
    "speed": {"m/s": 1.0, "km/s": 1e3},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
}

LOS_TOKEN = "los@t0"

_QUANTITY = re.compile(r"^\s*(\[[^\]]*\]|[-+0-9.eEinfINF]+)\s*(\S+)?\s*$")


def parse_quantity(text, kind: str, path: str = "", *, wavelength: float | None = None):
    """Value in SI units. Vectors come back as lists of floats.

    A ``"lambda"`` suffix is accepted for lengths when ``wavelength`` is
    given.
    """
    if not isinstance(text, str):
        raise UnitError(path, f"expected a unit-suffixed string for a {kind}, got {text!r}")
    m = _QUANTITY.match(text)
    if m is None:
        raise ConfigError(path, f"cannot parse quantity {text!r}")
    number, unit = m.groups()
    if unit is None:
        raise UnitError(path, f"missing unit in {text!r}")
    table = UNITS[kind]
    if unit in table:
        factor = table[unit]
    elif unit == "lambda" and kind == "length" and wavelength is not None:
        factor = wavelength
    else:
        raise UnitError(path, f"unit {unit!r} is not a {kind} unit")
    try:
        if number.startswith("["):
            parts = [float(x) for x in number[1:-1].split(",")]
            if len(parts) != 3:
                raise ValueError
            return [x * factor for x in parts]
        return float(number) * factor
    except ValueError:
        raise ConfigError(path, f"cannot parse number in {text!r}") from None


def _number(value, path: str, *, allow_inf: bool = False) -> float:
    if isinstance(value, str) and allow_inf and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _vector(value, kind: str, path: str):
    v = parse_quantity(value, kind, path)
    if not isinstance(v, list):
        raise ConfigError(path, "expected a 3-vector like '[x, y, z] unit'")
    return v


def _direction(value, los, path: str):
    if value == LOS_TOKEN:
        return los
    if isinstance(value, list) and len(value) == 3:
        v = [_number(x, path) for x in value]
        try:
            if abs(math.sqrt(sum(x * x for x in v)) - 1.0) < UNIT_TOL:
                return v  # already unit: keep it bit-exact
            return unit_between([0, 0, 0], v)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
    raise ConfigError(path, f"expected '{LOS_TOKEN}' or a 3-vector, got {value!r}")


def _beam(data, los, path: str) -> BeamConfig:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    pointing = _direction(data.get("pointing", LOS_TOKEN), los, path + ".pointing")
    has_q, has_psi = "q" in data, "hpbw" in data
    if has_q == has_psi:
        raise ConfigError(path, "give exactly one of 'q' and 'hpbw'")
    try:
        if has_q:
            return BeamConfig(pointing, _number(data["q"], path + ".q"))
        return BeamConfig.from_hpbw(pointing, parse_quantity(data["hpbw"], "angle", path + ".hpbw"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}.{key}", "missing")
    return data[key]


def scenario_from_dict(data: dict, path: str = "scenario") -> Scenario:
    """Build a :class:`Scenario` from its config mapping.

    ``rician_k`` may be omitted or null; it must then be supplied by the
    experiment that uses the scenario.
    """
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    fc = parse_quantity(_require(data, "carrier", path), "frequency", path + ".carrier")
    if not fc > 0:
        raise ConfigError(path + ".carrier", "must be positive")
    lam = SPEED_OF_LIGHT / fc
    bodies = {}
    for name in ("bs", "ue"):
        body = _require(data, name, path)
        p = f"{path}.{name}"
        bodies[name] = BodyState(
            _vector(_require(body, "position", p), "length", p + ".position"),
            _vector(body.get("velocity", "[0, 0, 0] m/s"), "speed", p + ".velocity"),
        )
    bs, ue = bodies["bs"], bodies["ue"]
    try:
        los = unit_between(ue.p0, bs.p0)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None

    sc = _require(data, "scatter", path)
    sp = path + ".scatter"
    mu = _direction(sc.get("mu", LOS_TOKEN), los, sp + ".mu")
    radius = parse_quantity(_require(sc, "radius", sp), "length", sp + ".radius", wavelength=lam)
    try:
        field = VmfField(mu, _number(_require(sc, "rho", sp), sp + ".rho"), radius)
    except ValueError as exc:
        raise ConfigError(sp, str(exc)) from None

    beam_bs = _beam(_require(data, "beam_bs", path), -los, path + ".beam_bs")
    beam_ue = _beam(_require(data, "beam_ue", path), los, path + ".beam_ue")

    k = data.get("rician_k")
    if k is not None:
        k = _number(k, path + ".rician_k", allow_inf=True)
        if k < 0 or math.isnan(k):
            raise ConfigError(path + ".rician_k", "must be in [0, inf]")
    return Scenario(bs, ue, beam_bs, beam_ue, field, k, fc)


def _fmt_vec(v, unit: str) -> str:
    return "[" + ", ".join(repr(float(x)) for x in v) + "] " + unit


def scenario_to_dict(scn: Scenario) -> dict:
    """Config mapping that rebuilds ``scn`` exactly.

    Floats are written with ``repr`` and in SI units, so the round trip
    through :func:`scenario_from_dict` is lossless.
    """
    k = scn.rician_k
    return {
        "bs": {"position": _fmt_vec(scn.bs.p0, "m"), "velocity": _fmt_vec(scn.bs.v, "m/s")},
        "ue": {"position": _fmt_vec(scn.ue.p0, "m"), "velocity": _fmt_vec(scn.ue.v, "m/s")},
        "carrier": f"{scn.fc_hz!r} Hz",
        "rician_k": "inf" if k is not None and math.isinf(k) else k,
        "scatter": {
            "mu": [float(x) for x in scn.field.mu],
            "rho": float(scn.field.rho),
            "radius": f"{scn.field.radius_m!r} m",
        },
        "beam_bs": {"pointing": [float(x) for x in scn.beam_bs.pointing], "q": float(scn.beam_bs.q)},
        "beam_ue": {"pointing": [float(x) for x in scn.beam_ue.pointing], "q": float(scn.beam_ue.q)},
    }


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be an object")
    return data

