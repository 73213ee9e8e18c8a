"""Behavioral-cloning driving pipeline (C++ core)."""

from pkgutil import extend_path

# Lets an in-tree build directory supply the compiled module.
__path__ = extend_path(__path__, __name__)

from ._core import (  # noqa: E402
    CameraSpec,
    CarState,
    ContractError,
    FormatError,
    IoError,
    Model,
    ShapeError,
    Track,
    car_step,
    collect,
    evaluate,
    expert_command,
    drive,
    measure_latency,
    read_frame,
    read_manifest,
    render,
    train,
    write_frame,
)

__all__ = [
    "CameraSpec",
    "CarState",
    "ContractError",
    "FormatError",
    "IoError",
    "Model",
    "ShapeError",
    "Track",
    "car_step",
    "collect",
    "evaluate",
    "expert_command",
    "drive",
    "measure_latency",
    "read_frame",
    "read_manifest",
    "render",
    "train",
    "write_frame",
]
