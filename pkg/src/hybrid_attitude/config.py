"""Run configuration: a fixed JSON schema parsed into validated objects.

Example::

    {
      "name": "case1",
      "plant": {"J": [[3, 0, 0], [0, 2, 0], [0, 0, 1]]},
      "trajectory": {"phi": {"kind": "sin", "a": 1.0, "b": 0.5}, ...},
      "controller": {"kind": "hybrid", "k1": 10, "k2": 11, ...},
      "sim": {"dt": 0.001, "T": 20},
      "initial": "case1"
    }

``initial`` is a preset name or an object ``{"R0": [[...]], "Omega0": [...]}``
with an optional starting ``mode``. Presets fix the disturbance: ``case1``
and ``case2`` have none, ``case3`` uses ``(-1, 2, 1)``. Unknown keys are
rejected everywhere.
"""

from __future__ import annotations

import copy
import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .control import ControllerKind, ControllerSpec, ControllerState, PlantParams, c_bounds, coupling_bound
from .errfun import DeltaBoundaryWarning, Mode, ShapeParams
from .errors import AttitudeError, ParseError, ValidationError
from .sim import HybridState, SimConfig
from .so3 import exp_so3
from .trajectory import ANGLE_KINDS, AngleFunction, DesiredTrajectory, EulerCommand, omega_bound, \
    orthogonalize_directions

log = logging.getLogger(__name__)

PRESETS = ("case1", "case2", "case3")
PRESET_DELTA = {"case1": (0.0, 0.0, 0.0), "case2": (0.0, 0.0, 0.0), "case3": (-1.0, 2.0, 1.0)}
# fraction of a half turn about r_d1 x r_d2 used for the near-undesired start
NEAR_HALF_TURN = 0.9999

_TOP_KEYS = {"name", "plant", "trajectory", "controller", "sim", "initial"}
_PLANT_KEYS = {"J", "Delta"}
_ANGLE_KEYS = {"kind", "a", "b", "c"}
_CTRL_KEYS = {"kind", "k1", "k2", "k_Omega", "k_I", "alpha", "beta", "delta", "c", "b1", "b2"}
_SIM_KEYS = {"dt", "T", "record_every", "seed"}
_INIT_KEYS = {"R0", "Omega0", "mode"}


@dataclass(frozen=True)
class RunConfig:
    name: str
    plant: PlantParams
    command: EulerCommand
    spec: ControllerSpec
    sim: SimConfig
    init: HybridState
    initial_label: str
    metadata: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def trajectory(self) -> DesiredTrajectory:
        return DesiredTrajectory(self.command, self.spec.shape.b1, self.spec.shape.b2)

    def with_kind(self, kind) -> RunConfig:
        """Same scenario under a different controller kind (re-validated)."""
        raw = copy.deepcopy(self.raw)
        raw["controller"]["kind"] = ControllerKind(kind).value
        return config_from_dict(raw, source=self.metadata.get("source"))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


# -- low-level field readers --------------------------------------------------

def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _obj(data, path: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected an object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ParseError(f"{path}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(set(required) - set(data))
    if missing:
        raise ParseError(f"{path}: missing key(s) {', '.join(missing)}")
    return data


def _num(data: dict, key: str, path: str, default=None) -> float:
    if key not in data:
        if default is None:
            raise ParseError(f"{path}.{key}: required")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    if not np.isfinite(v):
        raise ParseError(f"{path}.{key}: must be finite")
    return float(v)


def _int(data: dict, key: str, path: str, default: int) -> int:
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{path}.{key}: expected an integer")
    return v


def _array(value, shape: tuple, path: str) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: expected a numeric array of shape {shape}") from None
    if a.shape != shape or _has_bool(value):
        raise ParseError(f"{path}: expected a numeric array of shape {shape}")
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{path}: entries must be finite")
    return a


def _has_bool(value) -> bool:
    if isinstance(value, bool):
        return True
    if isinstance(value, list):
        return any(_has_bool(v) for v in value)
    return False


def _validated(path: str, build):
    """Run a constructor, re-raising invariant failures as ValidationError naming ``path``."""
    try:
        return build()
    except ParseError:
        raise
    except (ValidationError, AttitudeError, ValueError) as exc:
        raise ValidationError(f"{path}: {exc}") from exc


# -- sections -----------------------------------------------------------------

def _angle(data, path: str) -> AngleFunction:
    data = _obj(data, path, _ANGLE_KEYS, {"kind"})
    kind = data["kind"]
    if kind not in ANGLE_KINDS:
        raise ParseError(f"{path}.kind: expected one of {', '.join(ANGLE_KINDS)}, got {kind!r}")
    return _validated(path, lambda: AngleFunction(kind, _num(data, "a", path, 0.0), _num(data, "b", path, 0.0),
                                                  _num(data, "c", path, 0.0)))


def _command(data) -> EulerCommand:
    data = _obj(data, "trajectory", {"phi", "theta", "psi"})
    return EulerCommand(**{k: _angle(data[k], f"trajectory.{k}") if k in data else AngleFunction()
                           for k in ("phi", "theta", "psi")})


def _shape(data: dict, meta: dict) -> ShapeParams:
    path = "controller"
    b1 = _array(data.get("b1", [1.0, 0.0, 0.0]), (3,), f"{path}.b1")
    b2 = _array(data.get("b2", [0.0, 1.0, 0.0]), (3,), f"{path}.b2")
    if np.linalg.norm(b1) == 0 or np.linalg.norm(b2) == 0:
        raise ValidationError(f"{path}: body directions must be non-zero")
    b1n, b2n, substituted = _validated(f"{path}.b2", lambda: orthogonalize_directions(b1, b2))
    if substituted:
        meta["b2_substituted"] = b2n.tolist()
        log.warning("b1 and b2 are not orthogonal; using b2 = b1 x b2 / |b1 x b2| = %s", b2n.tolist())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DeltaBoundaryWarning)
        shape = _validated(path, lambda: ShapeParams(
            _num(data, "k1", path), _num(data, "k2", path), _num(data, "alpha", path),
            _num(data, "beta", path), _num(data, "delta", path), b1n, b2n))
    for w in caught:
        if issubclass(w.category, DeltaBoundaryWarning):
            meta.setdefault("warnings", []).append(str(w.message))
            log.warning("%s", w.message)
    return shape


def _initial(value, cmd: EulerCommand, shape: ShapeParams, plant_delta):
    """Return ``(HybridState, label, Delta)``."""
    if isinstance(value, str):
        if value not in PRESETS:
            raise ParseError(f"initial: unknown preset {value!r}; expected one of {', '.join(PRESETS)}")
        delta = np.array(PRESET_DELTA[value])
        if plant_delta is not None and not np.array_equal(plant_delta, delta):
            raise ValidationError(f"plant.Delta conflicts with preset {value!r}, which fixes Delta = {delta.tolist()}")
        d0 = DesiredTrajectory(cmd, shape.b1, shape.b2).at(0.0)
        if value == "case1":
            return HybridState(0.0, np.eye(3), np.zeros(3)), value, delta
        R0 = exp_so3(NEAR_HALF_TURN * np.pi * d0.r_d3) @ d0.R_d
        return HybridState(0.0, R0, R0.T @ d0.omega_d), value, delta
    data = _obj(value, "initial", _INIT_KEYS, {"R0", "Omega0"})
    R0 = _array(data["R0"], (3, 3), "initial.R0")
    W0 = _array(data["Omega0"], (3,), "initial.Omega0")
    mode = _int(data, "mode", "initial", 1)
    if mode not in (1, 2, 3):
        raise ValidationError("initial.mode: must be 1, 2 or 3")
    state = _validated("initial.R0", lambda: HybridState(0.0, R0, W0, ControllerState(Mode(mode))))
    delta = np.zeros(3) if plant_delta is None else plant_delta
    return state, "explicit", delta


def config_from_dict(data, source: str | None = None) -> RunConfig:
    """Validate a decoded configuration object."""
    data = _obj(data, "config", _TOP_KEYS, {"plant", "trajectory", "controller", "sim", "initial"})
    meta: dict = {}
    if source is not None:
        meta["source"] = source
    name = data.get("name", Path(source).stem if source else "run")
    if not isinstance(name, str) or not name:
        raise ParseError("name: expected a non-empty string")

    plant_d = _obj(data["plant"], "plant", _PLANT_KEYS, {"J"})
    J = _array(plant_d["J"], (3, 3), "plant.J")
    plant_delta = _array(plant_d["Delta"], (3,), "plant.Delta") if "Delta" in plant_d else None

    cmd = _command(data["trajectory"])

    ctrl = _obj(data["controller"], "controller", _CTRL_KEYS, {"kind", "k1", "k2", "k_Omega", "alpha", "beta", "delta"})
    try:
        kind = ControllerKind(ctrl["kind"])
    except ValueError:
        raise ParseError(f"controller.kind: expected one of {', '.join(k.value for k in ControllerKind)}, "
                         f"got {ctrl['kind']!r}") from None
    shape = _shape(ctrl, meta)
    spec = _validated("controller", lambda: ControllerSpec(kind, shape, _num(ctrl, "k_Omega", "controller"),
                                                           _num(ctrl, "k_I", "controller", 0.0),
                                                           _num(ctrl, "c", "controller", 0.0)))

    sim_d = _obj(data["sim"], "sim", _SIM_KEYS, {"dt", "T"})
    sim = _validated("sim", lambda: SimConfig(_num(sim_d, "dt", "sim"), _num(sim_d, "T", "sim"),
                                              _int(sim_d, "record_every", "sim", 1), _int(sim_d, "seed", "sim", 0)))

    init, label, Delta = _initial(data["initial"], cmd, shape, plant_delta)
    plant = _validated("plant", lambda: PlantParams(J, Delta))

    omega_sup = omega_bound(cmd, sim.T, sim.dt)
    B = coupling_bound(plant, omega_sup)
    first, second = c_bounds(spec, plant, B)
    meta.update(omega_d_sup=omega_sup, B=B, c_bound=min(first, second), c_candidates=[first, second])
    if not spec.c < min(first, second):
        msg = (f"controller.c: c={spec.c} must be < min({first:.6g}, {second:.6g}) = {min(first, second):.6g} "
               f"(B = {B:.6g})")
        if kind.integral:
            raise ValidationError(msg)
        meta.setdefault("warnings", []).append(msg)
        log.warning("%s", msg)

    raw = copy.deepcopy(data)
    raw["name"] = name
    return RunConfig(name, plant, cmd, spec, sim, init, label, meta, raw)


def loads_config(text: str, source: str | None = None) -> RunConfig:
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source or '<string>'}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, source)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return loads_config(text, str(path))


# -- bundled cases ------------------------------------------------------------

def bundled_cases() -> list[str]:
    return list(PRESETS)


def case_text(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(name)
    return resources.files("hybrid_attitude").joinpath("cases", f"{name}.json").read_text()


def load_case(name: str, kind=None, **sim_overrides) -> RunConfig:
    """A bundled scenario, optionally with another controller kind or sim settings."""
    data = json.loads(case_text(name))
    if kind is not None:
        data["controller"]["kind"] = ControllerKind(kind).value
    data["sim"].update(sim_overrides)
    return config_from_dict(data, source=f"{name}.json")


def replace_sim(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, sim=replace(cfg.sim, **changes))
