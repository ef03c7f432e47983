"""Closed-loop servo simulation: scenarios, the servo loop, and the grasp pipeline."""

from .loop import (
    CameraChannel,
    ServoState,
    goal_setpoints,
    init_servo,
    run_servo,
    run_two_camera_servo,
    servo_step,
)
from .pipeline import (
    TransferOutcome,
    plan_and_transfer,
    run_grasp_pipeline,
    run_grasp_pipeline_detailed,
    setpoint_transfer_error,
)
from .scenario import (
    Scenario,
    bundled_scenario_path,
    load_bundled,
    load_scenario,
    replace,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .trace import (
    CSV_HEADER,
    GraspResult,
    ServoTrace,
    TraceRow,
    fit_log_error,
    read_trace_columns,
    time_to_half_error,
    write_trace_csv,
)

__all__ = [
    "CameraChannel",
    "ServoState",
    "goal_setpoints",
    "init_servo",
    "run_servo",
    "run_two_camera_servo",
    "servo_step",
    "TransferOutcome",
    "plan_and_transfer",
    "run_grasp_pipeline",
    "run_grasp_pipeline_detailed",
    "setpoint_transfer_error",
    "Scenario",
    "bundled_scenario_path",
    "load_bundled",
    "load_scenario",
    "replace",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "CSV_HEADER",
    "GraspResult",
    "ServoTrace",
    "TraceRow",
    "fit_log_error",
    "read_trace_columns",
    "time_to_half_error",
    "write_trace_csv",
]
