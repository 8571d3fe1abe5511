"""Config loading: YAML with explicit units, schema validation, defaults.

Physical quantities appear in the config text as "value unit" strings
("8.351 uA", "2.5 ns") or as bare numbers in the internal default unit of
their slot (nA, pF, pH, ns, nA/ns, rad/ns).  Loading resolves everything to
internal units and fills protocol defaults, so two configs that resolve
identically drive byte-identical runs.
"""

from __future__ import annotations

import copy
import importlib.resources
import json
import math

import jsonschema
import yaml

from .circuit import CircuitParams, REFERENCE_PARAMS
from .errors import ConfigParseError, ConfigValidationError, UnknownUnit
from .pulses import (CHIRP_PUMP, CHIRP_RATE_NA_PER_NS, CHIRP_WINDOW,
                     HADAMARD_PUMP, HADAMARD_STARK, HADAMARD_WINDOW,
                     INVERSION_PUMP, INVERSION_STARK, INVERSION_WINDOW,
                     PulseSchedule, PulseShape, constant, gaussian,
                     linear_ramp, zero)
from .two_qubit import DEFAULT_CHIRP_RATE, DEFAULT_HALF_WINDOW, MIN_EDGE_RATIO

PROTOCOLS = ("levels", "pi-pulse", "inversion", "hadamard", "phase-gate",
             "not-gate", "readout", "iswap", "adiabaticity", "stark-shift",
             "sweep")

UNIT_SCALES = {
    "current": {"nA": 1.0, "uA": 1e3, "µA": 1e3, "mA": 1e6, "A": 1e9},
    "capacitance": {"pF": 1.0, "fF": 1e-3, "nF": 1e3},
    "inductance": {"pH": 1.0, "nH": 1e3, "uH": 1e6, "µH": 1e6},
    "time": {"ns": 1.0, "ps": 1e-3, "us": 1e3, "µs": 1e3},
    "current_rate": {"nA/ns": 1.0, "uA/ns": 1e3, "µA/ns": 1e3},
    "frequency": {"rad/ns": 1.0, "GHz": 2.0 * math.pi,
                  "MHz": 2.0 * math.pi * 1e-3},
}

DEFAULT_UNITS = {
    "current": "nA",
    "capacitance": "pF",
    "inductance": "pH",
    "time": "ns",
    "current_rate": "nA/ns",
    "frequency": "rad/ns",
}

_PULSE_FIELD_KINDS = {
    "amplitude": "current",
    "center": "time",
    "width": "time",
    "slope": "current_rate",
    "start": "time",
}

DEFAULT_GRID_POINTS = 4096
DEFAULT_N_LEVELS = 4
DEFAULT_SINGLE_QUBIT_DT = 0.001
DEFAULT_TWO_QUBIT_DT = 0.01
DEFAULT_PI_PULSE_AREAS = [0.0, 0.25 * math.pi, 0.5 * math.pi, math.pi,
                          2.0 * math.pi]
DEFAULT_STARK_CURRENTS = [400.0, -400.0]


def parse_quantity(value, kind: str, field: str) -> float:
    """Resolve a number or "value unit" string to internal units."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigValidationError(
            f"{field}: expected a number or 'value unit' string", field=field)
    parts = value.split()
    if len(parts) == 1:
        try:
            return float(parts[0])
        except ValueError:
            raise ConfigValidationError(
                f"{field}: cannot parse quantity {value!r}", field=field)
    if len(parts) != 2:
        raise ConfigValidationError(
            f"{field}: expected 'value unit', got {value!r}", field=field)
    try:
        magnitude = float(parts[0])
    except ValueError:
        raise ConfigValidationError(
            f"{field}: cannot parse number in {value!r}", field=field)
    scales = UNIT_SCALES[kind]
    if parts[1] not in scales:
        raise UnknownUnit(
            f"{field}: unknown {kind} unit {parts[1]!r} "
            f"(known: {', '.join(sorted(scales))})")
    return magnitude * scales[parts[1]]


def _schema() -> dict:
    text = (importlib.resources.files("scrapsim")
            .joinpath("config_schema.json").read_text())
    return json.loads(text)


def load_config(path: str) -> "RunConfig":
    """Parse, validate, and resolve a config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigParseError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigParseError(
                f"{path}:{mark.line + 1}:{mark.column + 1}: {exc}",
                line=mark.line + 1, column=mark.column + 1)
        raise ConfigParseError(f"{path}: {exc}")
    if raw is None:
        raise ConfigParseError(f"{path}: empty config")
    return resolve_config(raw)


def resolve_config(raw: dict) -> "RunConfig":
    """Validate a raw mapping and fill every default."""
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigValidationError(f"{field}: {exc.message}", field=field)

    protocol = raw["protocol"]
    data = {"protocol": protocol}

    circuit_raw = raw.get("circuit", {})
    data["circuit"] = {
        "critical_current_na": parse_quantity(
            circuit_raw.get("critical_current",
                            REFERENCE_PARAMS.critical_current_ua * 1e3),
            "current", "circuit/critical_current"),
        "junction_capacitance_pf": parse_quantity(
            circuit_raw.get("junction_capacitance",
                            REFERENCE_PARAMS.junction_capacitance_pf),
            "capacitance", "circuit/junction_capacitance"),
        "loop_inductance_ph": parse_quantity(
            circuit_raw.get("loop_inductance",
                            REFERENCE_PARAMS.loop_inductance_ph),
            "inductance", "circuit/loop_inductance"),
        "inductance_ratio": float(
            circuit_raw.get("inductance_ratio",
                            REFERENCE_PARAMS.inductance_ratio)),
        "dc_bias_na": parse_quantity(
            circuit_raw.get("dc_bias", REFERENCE_PARAMS.dc_bias_ua * 1e3),
            "current", "circuit/dc_bias"),
    }

    numerics_raw = raw.get("numerics", {})
    default_dt = (DEFAULT_TWO_QUBIT_DT if protocol == "iswap"
                  else DEFAULT_SINGLE_QUBIT_DT)
    data["numerics"] = {
        "grid_points": int(numerics_raw.get("grid_points", DEFAULT_GRID_POINTS)),
        "n_levels": int(numerics_raw.get("n_levels", DEFAULT_N_LEVELS)),
        "dt_ns": parse_quantity(numerics_raw.get("dt", default_dt), "time",
                                "numerics/dt"),
        "check_convergence": bool(numerics_raw.get("check_convergence", True)),
    }
    if data["numerics"]["dt_ns"] <= 0:
        raise ConfigValidationError("numerics/dt: must be positive",
                                    field="numerics/dt")

    data["schedule"] = _resolve_schedule(raw.get("schedule", {}), protocol)
    data["phase_gate"] = _resolve_phase_gate(raw.get("phase_gate", {}))
    data["pi_pulse"] = {
        "areas_rad": [float(a) for a in raw.get("pi_pulse", {}).get(
            "areas", DEFAULT_PI_PULSE_AREAS)],
        "width_ns": parse_quantity(raw.get("pi_pulse", {}).get("width", 2.5),
                                   "time", "pi_pulse/width"),
    }

    tq = raw.get("two_qubit", {})
    if "coupling_capacitance" in tq and "zeta" in tq:
        raise ConfigValidationError(
            "two_qubit: give either zeta or coupling_capacitance, not both",
            field="two_qubit")
    data["two_qubit"] = {
        "zeta": float(tq.get("zeta", 0.0017)) if "coupling_capacitance" not in tq else None,
        "coupling_capacitance_pf": (
            parse_quantity(tq["coupling_capacitance"], "capacitance",
                           "two_qubit/coupling_capacitance")
            if "coupling_capacitance" in tq else None),
        "chirp_rate_na_per_ns": parse_quantity(
            tq.get("chirp_rate", DEFAULT_CHIRP_RATE), "current_rate",
            "two_qubit/chirp_rate"),
        "window_ns": _resolve_window(tq.get("window"), "two_qubit/window",
                                     (-DEFAULT_HALF_WINDOW, DEFAULT_HALF_WINDOW)),
        "min_edge_ratio": float(tq.get("min_edge_ratio", MIN_EDGE_RATIO)),
    }

    ss = raw.get("stark_shift", {})
    data["stark_shift"] = {
        "currents_na": [parse_quantity(v, "current",
                                       f"stark_shift/currents/{k}")
                        for k, v in enumerate(ss.get("currents",
                                                     DEFAULT_STARK_CURRENTS))],
        "expected_ratios": [float(v) for v in ss["expected_ratios"]]
                           if "expected_ratios" in ss else None,
        "tolerance": float(ss.get("tolerance", 5e-4)),
    }
    if (data["stark_shift"]["expected_ratios"] is not None
            and len(data["stark_shift"]["expected_ratios"])
            != len(data["stark_shift"]["currents_na"])):
        raise ConfigValidationError(
            "stark_shift/expected_ratios: needs one entry per current",
            field="stark_shift/expected_ratios")

    ad = raw.get("adiabaticity", {})
    data["adiabaticity"] = {
        "threshold": float(ad.get("threshold", 0.1)),
        "require_adiabatic": bool(ad.get("require_adiabatic", False)),
    }

    if "sweep" in raw:
        sweep = raw["sweep"]
        data["sweep"] = {
            "protocol": sweep["protocol"],
            "path": sweep["path"],
            "values": list(sweep["values"]),
        }
    elif protocol == "sweep":
        raise ConfigValidationError("sweep: section required for the sweep "
                                    "protocol", field="sweep")
    else:
        data["sweep"] = None

    data["thresholds"] = {k: float(v)
                          for k, v in raw.get("thresholds", {}).items()}
    out = raw.get("output", {})
    data["output"] = {
        "directory": out.get("directory"),
        "stride": int(out.get("stride", 1)),
    }
    data["workers"] = int(raw.get("workers", 1))
    return RunConfig(data)


def _resolve_window(value, field: str,
                    default: tuple[float, float]) -> list[float]:
    if value is None:
        return [float(default[0]), float(default[1])]
    t0 = parse_quantity(value[0], "time", f"{field}/0")
    tf = parse_quantity(value[1], "time", f"{field}/1")
    if not t0 < tf:
        raise ConfigValidationError(f"{field}: start must precede end",
                                    field=field)
    return [t0, tf]


def _resolve_pulse(raw: dict, field: str) -> dict:
    kind = raw["kind"]
    resolved = {"kind": kind}
    for key, quantity_kind in _PULSE_FIELD_KINDS.items():
        if key in raw:
            resolved[key] = parse_quantity(raw[key], quantity_kind,
                                           f"{field}/{key}")
    if "clip" in raw:
        resolved["clip"] = [parse_quantity(raw["clip"][0], "time",
                                           f"{field}/clip/0"),
                            parse_quantity(raw["clip"][1], "time",
                                           f"{field}/clip/1")]
    if kind == "gaussian":
        if resolved.get("width", 1.0) <= 0:
            raise ConfigValidationError(f"{field}/width: gaussian width must "
                                        "be positive", field=f"{field}/width")
        resolved.setdefault("amplitude", 0.0)
        resolved.setdefault("center", 0.0)
        resolved.setdefault("width", 1.0)
    elif kind == "linear_ramp":
        resolved.setdefault("slope", 0.0)
        resolved.setdefault("start", 0.0)
    elif kind == "constant":
        resolved.setdefault("amplitude", 0.0)
    return resolved


_SCHEDULE_DEFAULTS = {
    "inversion": {
        "figure": (INVERSION_PUMP, INVERSION_STARK, INVERSION_WINDOW, None),
        "chirped": (CHIRP_PUMP, None, CHIRP_WINDOW, CHIRP_RATE_NA_PER_NS),
    },
    "hadamard": (HADAMARD_PUMP, HADAMARD_STARK, HADAMARD_WINDOW, None),
}


def _default_schedule_dict(protocol: str, variant: str) -> dict:
    if protocol == "hadamard":
        pump, stark, window, _ = *_SCHEDULE_DEFAULTS["hadamard"][:3], None
    else:
        pump, stark, window, ramp = _SCHEDULE_DEFAULTS["inversion"][variant]
        if ramp is not None:
            return {
                "pump": {"kind": "gaussian", "amplitude": pump["amplitude_na"],
                         "center": pump["center_ns"], "width": pump["width_ns"]},
                "stark": {"kind": "linear_ramp", "slope": ramp, "start": 0.0},
                "window": [window[0], window[1]],
            }
    return {
        "pump": {"kind": "gaussian", "amplitude": pump["amplitude_na"],
                 "center": pump["center_ns"], "width": pump["width_ns"]},
        "stark": {"kind": "gaussian", "amplitude": stark["amplitude_na"],
                  "center": stark["center_ns"], "width": stark["width_ns"]},
        "window": [window[0], window[1]],
    }


def _resolve_schedule(raw: dict, protocol: str) -> dict:
    variant = raw.get("variant", "figure")
    base_protocol = "hadamard" if protocol == "hadamard" else "inversion"
    defaults = _default_schedule_dict(base_protocol, variant)
    resolved = {
        "variant": variant,
        "initial_level": int(raw.get("initial_level", 1)),
        "auto_calibrate": bool(raw.get("auto_calibrate", True)),
        "time_scale": float(raw.get("time_scale", 1.0)),
        "carrier_rad_per_ns": (parse_quantity(raw["carrier"], "frequency",
                                              "schedule/carrier")
                               if "carrier" in raw else None),
        "pump": (_resolve_pulse(raw["pump"], "schedule/pump")
                 if "pump" in raw else defaults["pump"]),
        "stark": (_resolve_pulse(raw["stark"], "schedule/stark")
                  if "stark" in raw else defaults["stark"]),
        "window_ns": _resolve_window(raw.get("window"), "schedule/window",
                                     tuple(defaults["window"])),
    }
    return resolved


def _resolve_phase_gate(raw: dict) -> dict:
    stark = (_resolve_pulse(raw["stark"], "phase_gate/stark")
             if "stark" in raw
             else {"kind": "gaussian", "amplitude": 5.0, "center": 0.0,
                   "width": 5.0})
    return {
        "stark": stark,
        "window_ns": _resolve_window(raw.get("window"), "phase_gate/window",
                                     (-25.0, 25.0)),
    }


class RunConfig:
    """Fully resolved configuration in internal units."""

    def __init__(self, data: dict):
        self.data = data

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    @property
    def protocol(self) -> str:
        return self.data["protocol"]

    @property
    def dt(self) -> float:
        return self.data["numerics"]["dt_ns"]

    @property
    def workers(self) -> int:
        return self.data["workers"]

    @property
    def thresholds(self) -> dict:
        return self.data["thresholds"]

    def circuit_params(self) -> CircuitParams:
        c = self.data["circuit"]
        return CircuitParams(
            critical_current_ua=c["critical_current_na"] * 1e-3,
            junction_capacitance_pf=c["junction_capacitance_pf"],
            loop_inductance_ph=c["loop_inductance_ph"],
            inductance_ratio=c["inductance_ratio"],
            dc_bias_ua=c["dc_bias_na"] * 1e-3,
        )

    def pulse_shape(self, resolved: dict) -> PulseShape:
        kind = resolved["kind"]
        clip = tuple(resolved["clip"]) if "clip" in resolved else None
        if kind == "gaussian":
            return gaussian(resolved["amplitude"], resolved["center"],
                            resolved["width"], clip=clip)
        if kind == "linear_ramp":
            return linear_ramp(resolved["slope"], resolved["start"], clip=clip)
        if kind == "constant":
            return constant(resolved["amplitude"])
        return zero()

    def schedule(self, carrier: float) -> PulseSchedule:
        """Build the schedule, using `carrier` when none is pinned in config."""
        s = self.data["schedule"]
        pinned = s["carrier_rad_per_ns"]
        sched = PulseSchedule(
            pump=self.pulse_shape(s["pump"]),
            stark=self.pulse_shape(s["stark"]),
            window=tuple(s["window_ns"]),
            carrier=pinned if pinned is not None else carrier,
        )
        scale = s["time_scale"]
        if scale != 1.0:
            sched = sched.time_dilated(scale)
        return sched

    def copy_with(self, path: str, value) -> "RunConfig":
        """New config with the scalar at `path` (slash-separated) replaced."""
        data = copy.deepcopy(self.data)
        keys = path.split("/")
        node = data
        for key in keys[:-1]:
            key = int(key) if isinstance(node, list) else key
            try:
                node = node[key]
            except (KeyError, IndexError, TypeError):
                raise ConfigValidationError(
                    f"sweep path {path!r} does not resolve", field=path)
        leaf = keys[-1]
        leaf = int(leaf) if isinstance(node, list) else leaf
        try:
            old = node[leaf]
        except (KeyError, IndexError, TypeError):
            raise ConfigValidationError(
                f"sweep path {path!r} does not resolve", field=path)
        if isinstance(old, (dict, list)):
            raise ConfigValidationError(
                f"sweep path {path!r} must point at a scalar", field=path)
        if isinstance(old, bool) or not isinstance(old, (int, float)):
            node[leaf] = value
        elif isinstance(old, int) and float(value) == int(value):
            node[leaf] = int(value)
        else:
            node[leaf] = float(value)
        return RunConfig(data)


def dump_config(config: RunConfig) -> str:
    """Canonical YAML text of a resolved config.

    Emits the raw schema layout with every quantity in its internal unit, so
    loading the dump resolves back to the identical configuration.
    """
    d = config.data
    raw: dict = {"protocol": d["protocol"]}
    c = d["circuit"]
    raw["circuit"] = {
        "critical_current": f"{c['critical_current_na']:.12g} nA",
        "junction_capacitance": f"{c['junction_capacitance_pf']:.12g} pF",
        "loop_inductance": f"{c['loop_inductance_ph']:.12g} pH",
        "inductance_ratio": c["inductance_ratio"],
        "dc_bias": f"{c['dc_bias_na']:.12g} nA",
    }
    n = d["numerics"]
    raw["numerics"] = {
        "grid_points": n["grid_points"],
        "n_levels": n["n_levels"],
        "dt": f"{n['dt_ns']:.12g} ns",
        "check_convergence": n["check_convergence"],
    }
    s = d["schedule"]
    raw["schedule"] = {
        "variant": s["variant"],
        "initial_level": s["initial_level"],
        "auto_calibrate": s["auto_calibrate"],
        "time_scale": s["time_scale"],
        "pump": _dump_pulse(s["pump"]),
        "stark": _dump_pulse(s["stark"]),
        "window": [f"{s['window_ns'][0]:.12g} ns",
                   f"{s['window_ns'][1]:.12g} ns"],
    }
    if s["carrier_rad_per_ns"] is not None:
        raw["schedule"]["carrier"] = f"{s['carrier_rad_per_ns']:.12g} rad/ns"
    pg = d["phase_gate"]
    raw["phase_gate"] = {
        "stark": _dump_pulse(pg["stark"]),
        "window": [f"{pg['window_ns'][0]:.12g} ns",
                   f"{pg['window_ns'][1]:.12g} ns"],
    }
    raw["pi_pulse"] = {
        "areas": d["pi_pulse"]["areas_rad"],
        "width": f"{d['pi_pulse']['width_ns']:.12g} ns",
    }
    tq = d["two_qubit"]
    raw["two_qubit"] = {
        "chirp_rate": f"{tq['chirp_rate_na_per_ns']:.12g} nA/ns",
        "window": [f"{tq['window_ns'][0]:.12g} ns",
                   f"{tq['window_ns'][1]:.12g} ns"],
        "min_edge_ratio": tq["min_edge_ratio"],
    }
    if tq["coupling_capacitance_pf"] is not None:
        raw["two_qubit"]["coupling_capacitance"] = (
            f"{tq['coupling_capacitance_pf']:.12g} pF")
    else:
        raw["two_qubit"]["zeta"] = tq["zeta"]
    ss = d["stark_shift"]
    raw["stark_shift"] = {
        "currents": [f"{v:.12g} nA" for v in ss["currents_na"]],
        "tolerance": ss["tolerance"],
    }
    if ss["expected_ratios"] is not None:
        raw["stark_shift"]["expected_ratios"] = ss["expected_ratios"]
    raw["adiabaticity"] = dict(d["adiabaticity"])
    if d["sweep"] is not None:
        raw["sweep"] = dict(d["sweep"])
    if d["thresholds"]:
        raw["thresholds"] = dict(d["thresholds"])
    out = {}
    if d["output"]["directory"] is not None:
        out["directory"] = d["output"]["directory"]
    if d["output"]["stride"] != 1:
        out["stride"] = d["output"]["stride"]
    if out:
        raw["output"] = out
    raw["workers"] = d["workers"]
    return yaml.safe_dump(raw, sort_keys=True, default_flow_style=False)


def _dump_pulse(resolved: dict) -> dict:
    kind = resolved["kind"]
    out = {"kind": kind}
    units = {"amplitude": "nA", "center": "ns", "width": "ns",
             "slope": "nA/ns", "start": "ns"}
    for key, unit in units.items():
        if key in resolved:
            out[key] = f"{resolved[key]:.12g} {unit}"
    if "clip" in resolved:
        out["clip"] = [f"{resolved['clip'][0]:.12g} ns",
                       f"{resolved['clip'][1]:.12g} ns"]
    return out


def load_config_text(text: str) -> RunConfig:
    """Resolve config YAML given as a string (used for round-trips and tests)."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(str(exc))
    if raw is None:
        raise ConfigParseError("empty config")
    return resolve_config(raw)
