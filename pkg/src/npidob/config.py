"""
Simulation parameters, gains and scenarios, plus the JSON document format.

All quantities are SI: inductance in H (0.275 mH is 2.75e-4 H),
velocities in rad/s (500 rpm = 52.36 rad/s, 1000 rpm = 104.72 rad/s).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple, Union

from .errors import InvalidValue, MissingField, UnitError
from .plant import MotorState
from .signals import INVERTER_KINDS, InverterErrorModel, LoadProfile, ReferenceProfile

RPM = 2.0 * math.pi / 60.0


def rpm_to_rad_s(rpm: float) -> float:
    return rpm * RPM


def _positive(name, value):
    if not (isinstance(value, (int, float)) and not isinstance(value, bool)):
        raise InvalidValue(name, "must be a number")
    if not math.isfinite(value):
        raise InvalidValue(name, "must be finite")
    if value <= 0:
        raise InvalidValue(name, "must be positive")


def _nonnegative(name, value):
    if not (isinstance(value, (int, float)) and not isinstance(value, bool)):
        raise InvalidValue(name, "must be a number")
    if not math.isfinite(value):
        raise InvalidValue(name, "must be finite")
    if value < 0:
        raise InvalidValue(name, "must be nonnegative")


@dataclass(frozen=True)
class MotorParams:
    R: float
    L: float
    Phi: float
    P: int
    J: float
    B: float

    def __post_init__(self):
        for name in ("R", "L", "Phi", "J", "B"):
            _positive(name, getattr(self, name))
        P = self.P
        if isinstance(P, float) and P.is_integer():
            object.__setattr__(self, "P", int(P))
        if not isinstance(self.P, int) or isinstance(self.P, bool):
            raise InvalidValue("P", "must be a positive integer")
        _positive("P", self.P)

    @property
    def k_m(self) -> float:
        """Torque constant (3/2) P Phi."""
        return 1.5 * self.P * self.Phi


@dataclass(frozen=True)
class GainSet:
    k_theta: float
    k_omega: float
    l_p_tau: float
    l_i_tau: float
    omega_tilde_max: float
    l_p_e: float
    l_i_e: float
    e_tilde_max: float
    eta1: float
    eta2: float

    def __post_init__(self):
        for name in ("k_theta", "k_omega", "l_i_tau", "l_i_e", "eta1", "eta2",
                     "omega_tilde_max", "e_tilde_max"):
            _positive(name, getattr(self, name))
        for name in ("l_p_tau", "l_p_e"):
            _nonnegative(name, getattr(self, name))


@dataclass(frozen=True)
class TimingConfig:
    dt_ctrl: float = 1e-4
    dt_plant: float = 1e-5
    duration: float = 20.0

    def __post_init__(self):
        _positive("dt_ctrl", self.dt_ctrl)
        _positive("dt_plant", self.dt_plant)
        _nonnegative("duration", self.duration)
        ratio = self.dt_ctrl / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise InvalidValue("dt_plant", "must divide dt_ctrl into an integer number of sub-steps")

    @property
    def substeps(self) -> int:
        return int(round(self.dt_ctrl / self.dt_plant))

    @property
    def n_ticks(self) -> int:
        # one record per tick at t = k*dt_ctrl, k*dt_ctrl < duration
        return int(math.ceil(self.duration / self.dt_ctrl - 1e-9))


class ControllerVariant(str, enum.Enum):
    FULL = "full"
    OUTER_ONLY = "outer-only"
    NO_DOB = "no-dob"

    @classmethod
    def parse(cls, value) -> "ControllerVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"outeronly": "outer-only", "nodob": "no-dob"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidValue("variant", f"unknown controller variant {value!r}") from None


@dataclass(frozen=True)
class Scenario:
    reference: ReferenceProfile
    load: LoadProfile = field(default_factory=LoadProfile)
    inverter_error: Optional[InverterErrorModel] = None
    variant: ControllerVariant = ControllerVariant.FULL
    timing: TimingConfig = field(default_factory=TimingConfig)
    initial_state: MotorState = MotorState(0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "variant", ControllerVariant.parse(self.variant))
        object.__setattr__(self, "initial_state", MotorState(*map(float, self.initial_state)))

    def with_variant(self, variant) -> "Scenario":
        return Scenario(self.reference, self.load, self.inverter_error,
                        ControllerVariant.parse(variant), self.timing, self.initial_state)

    def with_timing(self, **changes) -> "Scenario":
        t = self.timing
        timing = TimingConfig(
            changes.get("dt_ctrl", t.dt_ctrl),
            changes.get("dt_plant", t.dt_plant),
            changes.get("duration", t.duration),
        )
        return Scenario(self.reference, self.load, self.inverter_error,
                        self.variant, timing, self.initial_state)

    def with_inverter_error(self, model: Optional[InverterErrorModel]) -> "Scenario":
        return Scenario(self.reference, self.load, model, self.variant,
                        self.timing, self.initial_state)


Config = Tuple[MotorParams, GainSet, Scenario]

_MOTOR_FIELDS = ("R", "L", "Phi", "P", "J", "B")
_GAIN_FIELDS = ("k_theta", "k_omega", "l_p_tau", "l_i_tau", "omega_tilde_max",
                "l_p_e", "l_i_e", "e_tilde_max", "eta1", "eta2")


def _require(doc: Mapping, name: str, path: str = ""):
    if not isinstance(doc, Mapping) or name not in doc:
        raise MissingField(name)
    return doc[name]


def _number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidValue(name, "must be a number")
    return value


def _pairs(name, value) -> Tuple[Tuple[float, float], ...]:
    try:
        out = tuple((float(_number(name, a)), float(_number(name, b))) for a, b in value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidValue):
            raise
        raise InvalidValue(name, "must be a list of [time, value] pairs") from None
    return out


def _parse_reference(doc) -> ReferenceProfile:
    segments = _pairs("reference.segments", _require(doc, "segments"))
    slew = _number("slew", _require(doc, "slew"))
    _positive("slew", slew)
    initial = doc.get("initial")
    try:
        return ReferenceProfile(segments, float(slew),
                                None if initial is None else float(_number("initial", initial)))
    except ValueError as exc:
        if isinstance(exc, InvalidValue):
            raise
        raise InvalidValue("reference", str(exc)) from None


def _parse_load(doc) -> LoadProfile:
    if doc is None:
        return LoadProfile()
    steps = _pairs("load.steps", doc.get("steps", []))
    smoothing = _number("smoothing", doc.get("smoothing", 0.0))
    _nonnegative("smoothing", smoothing)
    try:
        return LoadProfile(steps, float(smoothing))
    except ValueError as exc:
        raise InvalidValue("load", str(exc)) from None


def _parse_inverter(doc) -> Optional[InverterErrorModel]:
    if doc is None:
        return None
    kind = str(_require(doc, "kind")).lower().replace("-", "_")
    if kind not in INVERTER_KINDS:
        raise InvalidValue("inverter_error.kind", f"must be one of {INVERTER_KINDS}")
    kw = {}
    for name in ("amplitude_1", "amplitude_2", "v_dead"):
        if name in doc:
            value = _number(name, doc[name])
            _nonnegative(name, value)
            kw[name] = float(value)
    for name in ("phase_1", "phase_2"):
        if name in doc:
            kw[name] = None if doc[name] is None else float(_number(name, doc[name]))
    return InverterErrorModel(kind=kind, **kw)


def _parse_state(doc) -> MotorState:
    if doc is None:
        return MotorState(0.0, 0.0, 0.0, 0.0)
    vals = []
    for name in MotorState._fields:
        v = _number(name, doc.get(name, 0.0))
        if not math.isfinite(v):
            raise InvalidValue(name, "must be finite")
        vals.append(float(v))
    return MotorState(*vals)


def load_config(document: Union[str, bytes, Mapping[str, Any]]) -> Config:
    """Parse and validate a configuration document.

    ``document`` is either JSON text or an already-decoded mapping. Returns
    ``(MotorParams, GainSet, Scenario)``.
    """
    if isinstance(document, (str, bytes)):
        document = json.loads(document)
    if not isinstance(document, Mapping):
        raise InvalidValue("document", "top level must be an object")

    units = document.get("units", "SI")
    if str(units).upper() != "SI":
        raise UnitError(f"config units must be 'SI', got {units!r}")

    motor_doc = _require(document, "motor")
    motor = MotorParams(**{n: _number(n, _require(motor_doc, n)) for n in _MOTOR_FIELDS})
    gains_doc = _require(document, "gains")
    gains = GainSet(**{n: _number(n, _require(gains_doc, n)) for n in _GAIN_FIELDS})

    timing_doc = _require(document, "timing")
    timing = TimingConfig(
        **{n: _number(n, timing_doc[n]) for n in ("dt_ctrl", "dt_plant", "duration")
           if n in timing_doc}
    )

    sc = _require(document, "scenario")
    scenario = Scenario(
        reference=_parse_reference(_require(sc, "reference")),
        load=_parse_load(sc.get("load")),
        inverter_error=_parse_inverter(sc.get("inverter_error")),
        variant=ControllerVariant.parse(sc.get("variant", "full")),
        timing=timing,
        initial_state=_parse_state(sc.get("initial_state")),
    )
    return motor, gains, scenario


def config_to_dict(motor: MotorParams, gains: GainSet, scenario: Scenario) -> dict:
    ref = scenario.reference
    ref_doc = {"segments": [list(s) for s in ref.segments], "slew": ref.slew}
    if ref.initial is not None:
        ref_doc["initial"] = ref.initial
    inv = scenario.inverter_error
    inv_doc = None
    if inv is not None:
        inv_doc = {
            "kind": inv.kind,
            "amplitude_1": inv.amplitude_1,
            "amplitude_2": inv.amplitude_2,
            "phase_1": inv.phase_1,
            "phase_2": inv.phase_2,
            "v_dead": inv.v_dead,
        }
    return {
        "units": "SI",
        "motor": {n: getattr(motor, n) for n in _MOTOR_FIELDS},
        "gains": {n: getattr(gains, n) for n in _GAIN_FIELDS},
        "timing": {
            "dt_ctrl": scenario.timing.dt_ctrl,
            "dt_plant": scenario.timing.dt_plant,
            "duration": scenario.timing.duration,
        },
        "scenario": {
            "variant": scenario.variant.value,
            "reference": ref_doc,
            "load": {"steps": [list(s) for s in scenario.load.steps],
                     "smoothing": scenario.load.smoothing},
            "inverter_error": inv_doc,
            "initial_state": scenario.initial_state._asdict(),
        },
    }


def dump_config(motor: MotorParams, gains: GainSet, scenario: Scenario, indent: int = 2) -> str:
    return json.dumps(config_to_dict(motor, gains, scenario), indent=indent)


def read_config(path: Union[str, Path]) -> Config:
    return load_config(Path(path).read_text())


def bundled_config(name: str) -> Config:
    """Load one of the configurations shipped with the package.

    ``"published_gains"`` holds the published gains verbatim; ``"default"`` is the
    comparative simulation scenario with observer gains retuned for a stable
    10 kHz forward-Euler discretization.
    """
    text = resources.files("npidob.configs").joinpath(f"{name}.json").read_text()
    return load_config(text)
