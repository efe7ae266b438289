"""Execution outcome types shared by the interpreter, world and session."""

from dataclasses import dataclass, field
from enum import Enum


class ExecutionStatus(str, Enum):
    OK = "ok"
    GENERATION_FAILED = "generation_failed"
    PARSE_ERROR = "parse_error"
    STATIC_CHECK_FAILED = "static_check_failed"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    ABORTED = "aborted"


@dataclass
class ExecutionLimits:
    """Hard bounds on one program run."""

    wall_deadline: float = 10.0
    max_steps: int = 100_000
    max_loop_iterations: int = 10_000

    def validate(self) -> None:
        if self.wall_deadline <= 0 or self.max_steps <= 0 or self.max_loop_iterations <= 0:
            raise ValueError("execution limits must be positive")


@dataclass
class ExecutionReport:
    """What one program run did to the world."""

    status: ExecutionStatus = ExecutionStatus.OK
    say_outputs: list = field(default_factory=list)
    motion_log: list = field(default_factory=list)
    gripper_events: list = field(default_factory=list)
    error_detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status is ExecutionStatus.OK
