"""Scenario and solution JSON.

Scenario documents mirror :class:`~uavpower.model.Scenario`. A quantity is
either a bare number in SI units or an object ``{"value": v, "unit": u}``;
powers may be given in dBm and the noise density in dBm/Hz::

    {
      "terminals": [
        {"position": [12.5, -40.0], "min_rate": {"value": 3, "unit": "Mbps"},
         "max_power": {"value": 20, "unit": "dBm"}}
      ],
      "total_bandwidth": {"value": 10, "unit": "MHz"},
      "noise_density": {"value": -169, "unit": "dBm/Hz"},
      "h_min": 50, "h_max": 500
    }

Omitted scenario fields take the model defaults.
"""

from __future__ import annotations

import json
import math
from typing import Any, Callable

import numpy as np

from . import model
from .model import GroundTerminal, Scenario, Solution

FORMAT = "uavpower-scenario/1"


class ScenarioError(ValueError):
    """A scenario document is malformed or physically invalid."""


def _scale(factor: float) -> Callable[[float], float]:
    return lambda v: v * factor


# unit name -> conversion to SI, per quantity kind
UNITS: dict[str, dict[str, Callable[[float], float]]] = {
    "length": {"m": _scale(1.0), "km": _scale(1e3)},
    "rate": {"bps": _scale(1.0), "kbps": _scale(1e3), "Mbps": _scale(1e6)},
    "power": {"W": _scale(1.0), "mW": _scale(1e-3), "dBm": model.dbm_to_watt},
    "density": {"W/Hz": _scale(1.0), "dBm/Hz": model.dbm_to_watt},
    "frequency": {"Hz": _scale(1.0), "kHz": _scale(1e3), "MHz": _scale(1e6)},
    "angle": {"rad": _scale(1.0), "deg": math.radians},
    "ratio": {"1": _scale(1.0)},
}

# scenario field -> quantity kind
FIELDS = {
    "total_bandwidth": "frequency",
    "noise_density": "density",
    "ref_gain": "ratio",
    "antenna_const": "ratio",
    "pathloss_exp": "ratio",
    "h_min": "length",
    "h_max": "length",
    "theta_min": "angle",
    "theta_max": "angle",
    "theta_floor": "angle",
}


def quantity(raw: Any, kind: str, where: str) -> float:
    """Convert a bare SI number or a ``{"value", "unit"}`` object to SI."""
    if isinstance(raw, dict):
        unknown = set(raw) - {"value", "unit"}
        if unknown or "value" not in raw:
            raise ScenarioError(f"{where}: expected {{'value', 'unit'}}, got keys {sorted(raw)}")
        unit = raw.get("unit", next(iter(UNITS[kind])))
        conv = UNITS[kind].get(unit)
        if conv is None:
            raise ScenarioError(f"{where}: unit {unit!r} not allowed here; use one of {sorted(UNITS[kind])}")
        value = raw["value"]
    else:
        conv, value = UNITS[kind][next(iter(UNITS[kind]))], raw
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    out = float(conv(float(value)))
    if not math.isfinite(out):
        raise ScenarioError(f"{where}: value must be finite, got {value!r}")
    return out


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise ScenarioError(f"unsupported format {fmt!r}; expected {FORMAT!r}")
    allowed = set(FIELDS) | {"terminals", "format"}
    unknown = set(doc) - allowed
    if unknown:
        raise ScenarioError(f"unknown scenario fields {sorted(unknown)}")
    terms = doc.get("terminals")
    if not isinstance(terms, list) or not terms:
        raise ScenarioError("'terminals' must be a non-empty list")
    gts = []
    for i, t in enumerate(terms):
        where = f"terminals[{i}]"
        if not isinstance(t, dict) or set(t) != {"position", "min_rate", "max_power"}:
            raise ScenarioError(f"{where}: needs exactly position, min_rate, max_power")
        pos = t["position"]
        if not isinstance(pos, list) or len(pos) != 2:
            raise ScenarioError(f"{where}.position: expected [x, y]")
        xy = tuple(quantity(p, "length", f"{where}.position") for p in pos)
        try:
            gts.append(
                GroundTerminal(
                    xy,
                    quantity(t["min_rate"], "rate", f"{where}.min_rate"),
                    quantity(t["max_power"], "power", f"{where}.max_power"),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    kwargs = {name: quantity(doc[name], kind, name) for name, kind in FIELDS.items() if name in doc}
    try:
        return Scenario(tuple(gts), **kwargs)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(scn: Scenario, power_unit: str = "dBm") -> dict:
    """Unit-tagged document; powers in ``power_unit`` (``dBm`` or ``W``)."""

    def power(p):
        if power_unit == "dBm":
            return {"value": model.watt_to_dbm(p), "unit": "dBm"}
        return {"value": float(p), "unit": "W"}

    return {
        "format": FORMAT,
        "terminals": [
            {
                "position": [g.position[0], g.position[1]],
                "min_rate": {"value": g.min_rate, "unit": "bps"},
                "max_power": power(g.max_power),
            }
            for g in scn.gts
        ],
        "total_bandwidth": {"value": scn.total_bandwidth, "unit": "Hz"},
        "noise_density": (
            {"value": model.watt_to_dbm(scn.noise_density), "unit": "dBm/Hz"}
            if power_unit == "dBm"
            else {"value": scn.noise_density, "unit": "W/Hz"}
        ),
        "ref_gain": scn.ref_gain,
        "antenna_const": scn.antenna_const,
        "pathloss_exp": scn.pathloss_exp,
        "h_min": {"value": scn.h_min, "unit": "m"},
        "h_max": {"value": scn.h_max, "unit": "m"},
        "theta_min": {"value": scn.theta_min, "unit": "rad"},
        "theta_max": {"value": scn.theta_max, "unit": "rad"},
        "theta_floor": {"value": scn.theta_floor, "unit": "rad"},
    }


def _finite(v: float):
    return float(v) if math.isfinite(v) else None


def solution_to_dict(sol: Solution) -> dict:
    """Plain-JSON view of a solution; non-finite numbers become null."""
    pl = sol.placement
    return {
        "status": sol.status,
        "message": sol.message,
        "iterations": sol.iterations,
        "placement": {
            "y_m": [_finite(pl.y[0]), _finite(pl.y[1])],
            "height_m": _finite(pl.height),
            "half_beamwidth_rad": _finite(pl.half_beamwidth),
        },
        "bandwidth_hz": [_finite(v) for v in np.asarray(sol.allocation.w, dtype=float)],
        "powers_w": [_finite(v) for v in np.asarray(sol.powers, dtype=float)],
        "sum_power_w": _finite(sol.sum_power),
        "sum_power_dbm": _finite(model.watt_to_dbm(sol.sum_power)) if sol.sum_power > 0 else None,
        "trace": [{"iter": r.iter, "block": r.block, "objective_w": _finite(r.objective)} for r in sol.trace],
    }


def dumps(doc: dict) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, LF newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
