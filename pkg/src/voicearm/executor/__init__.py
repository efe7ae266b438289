"""Sandboxed parsing, checking and execution of command-script programs."""

from .checks import (
    BUILTIN_NAMES,
    CONTROLLER_API,
    MODULE_MEMBERS,
    called_names_in_order,
    detect_undefined_calls,
    static_check,
)
from .interpreter import ScriptRuntimeError, execute
from .parser import FunctionDef, Program, ScriptParseError, parse_program
from .report import ExecutionLimits, ExecutionReport, ExecutionStatus

__all__ = [
    "BUILTIN_NAMES",
    "CONTROLLER_API",
    "MODULE_MEMBERS",
    "ExecutionLimits",
    "ExecutionReport",
    "ExecutionStatus",
    "FunctionDef",
    "Program",
    "ScriptParseError",
    "ScriptRuntimeError",
    "called_names_in_order",
    "detect_undefined_calls",
    "execute",
    "parse_program",
    "static_check",
]
