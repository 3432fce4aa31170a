"""Geometric attitude tracking on SO(3) with smooth and hybrid controllers."""

from .control import (ControllerKind, ControllerSpec, ControllerState, JumpVariant, PlantParams,
                      control_input, in_jump_set, jump_map, validate_c)
from .errfun import Mode, ShapeParams, critical_point_margins, critical_points, psi_modes
from .errors import (AttitudeError, CTooLarge, NonFiniteState, NotARotation, ParseError,
                     ValidationError, ZenoSuspected)
from .sim import HybridState, JumpEvent, SimConfig, Trace, lyapunov_U, lyapunov_Vm, run, step
from .trajectory import AngleFunction, DesiredTrajectory, EulerCommand, reference_command

__version__ = "0.1.0"

__all__ = [
    "AngleFunction", "AttitudeError", "CTooLarge", "ControllerKind", "ControllerSpec",
    "ControllerState", "DesiredTrajectory", "EulerCommand", "HybridState", "JumpEvent",
    "JumpVariant", "Mode", "NonFiniteState", "NotARotation", "ParseError", "PlantParams",
    "ShapeParams", "SimConfig", "Trace", "ValidationError", "ZenoSuspected", "control_input",
    "critical_point_margins", "critical_points", "in_jump_set", "jump_map", "lyapunov_U",
    "lyapunov_Vm", "reference_command", "psi_modes", "run", "step", "validate_c",
]
