"""Tree-walking interpreter for validated command-script programs.

Programs never touch Python's own execution machinery: the interpreter
evaluates the validated AST itself, binds the controller surface through
a RobotHandle and enforces a wall deadline, a statement budget, a
per-loop iteration cap and an external abort flag. time.sleep inside
programs is scaled by a dilation factor and time.time is skewed to
match, so wait loops behave identically at any dilation.
"""

import ast
import math
import threading
import time

from .checks import CONTROLLER_API
from .parser import FunctionDef, Program
from .report import ExecutionLimits, ExecutionReport, ExecutionStatus

MAX_CALL_DEPTH = 32
_SLEEP_CHUNK = 0.05


class ScriptRuntimeError(Exception):
    """Raised inside the interpreter and mapped onto report statuses."""


class _LimitExceeded(Exception):
    pass


class _Aborted(Exception):
    pass


class ModuleProxy:
    """Pre-bound stand-in for a whitelisted module; nothing else is reachable."""

    def __init__(self, name: str, members: dict):
        self.name = name
        self.members = members

    def get(self, attr: str):
        try:
            return self.members[attr]
        except KeyError:
            raise ScriptRuntimeError(f"'{self.name}' has no member '{attr}'") from None


class _Clock:
    """Wall clock with sleep dilation and matching time() skew."""

    def __init__(self, dilation: float, abort: threading.Event, deadline_at: float):
        self.dilation = dilation
        self.abort = abort
        self.deadline_at = deadline_at
        self.skew = 0.0

    def time(self) -> float:
        return time.time() + self.skew

    def sleep(self, seconds) -> None:
        if not isinstance(seconds, (int, float)) or isinstance(seconds, bool):
            raise ScriptRuntimeError("sleep expects a number of seconds")
        if seconds < 0:
            raise ScriptRuntimeError("sleep expects a non-negative duration")
        real = seconds * self.dilation
        remaining = real
        while remaining > 0:
            if self.abort.is_set():
                raise _Aborted()
            if time.monotonic() > self.deadline_at:
                raise _LimitExceeded("wall deadline exceeded during sleep")
            chunk = min(_SLEEP_CHUNK, remaining)
            time.sleep(chunk)
            remaining -= chunk
        self.skew += seconds - real


def default_modules(clock: _Clock) -> dict:
    return {
        "math": ModuleProxy(
            "math",
            {
                "pi": math.pi,
                "cos": math.cos,
                "sin": math.sin,
                "sqrt": math.sqrt,
                "radians": math.radians,
            },
        ),
        "time": ModuleProxy("time", {"time": clock.time, "sleep": clock.sleep}),
    }


BUILTINS = {"range": range, "len": len, "abs": abs, "min": min, "max": max, "round": round}


def execute(
    program: Program,
    entry: str,
    bindings: dict,
    robot_api,
    limits: ExecutionLimits | None = None,
    *,
    time_dilation: float = 1.0,
    abort: threading.Event | None = None,
) -> ExecutionReport:
    """Run entry(robot) under the sandbox limits and return the report.

    bindings maps external function names (policy bodies and aliases) to
    parser FunctionDef objects; program-local definitions shadow them.
    """
    limits = limits or ExecutionLimits()
    limits.validate()
    report = robot_api.report if hasattr(robot_api, "report") else ExecutionReport()
    if entry not in program.functions:
        report.status = ExecutionStatus.RUNTIME_ERROR
        report.error_detail = f"entry function '{entry}' is not defined"
        return report

    interp = _Interpreter(
        program=program,
        bindings=bindings or {},
        robot=robot_api,
        limits=limits,
        abort=abort or threading.Event(),
        time_dilation=time_dilation,
    )
    try:
        interp.call_function(program.functions[entry], robot_api)
        report.status = ExecutionStatus.OK
    except _Aborted:
        report.status = ExecutionStatus.ABORTED
        report.error_detail = "execution aborted by stop signal"
    except _LimitExceeded as exc:
        report.status = ExecutionStatus.TIMEOUT
        report.error_detail = str(exc)
    except ScriptRuntimeError as exc:
        report.status = ExecutionStatus.RUNTIME_ERROR
        report.error_detail = str(exc)
    return report


class _Interpreter:
    def __init__(self, program, bindings, robot, limits, abort, time_dilation):
        self.program = program
        self.bindings = bindings
        self.robot = robot
        self.limits = limits
        self.abort = abort
        self.steps = 0
        self.deadline_at = time.monotonic() + limits.wall_deadline
        self.clock = _Clock(time_dilation, abort, self.deadline_at)
        self.modules = default_modules(self.clock)
        self.call_depth = 0

    # -- bookkeeping -------------------------------------------------------

    def _tick(self) -> None:
        if self.abort.is_set():
            raise _Aborted()
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _LimitExceeded(f"statement budget exceeded ({self.limits.max_steps})")
        if time.monotonic() > self.deadline_at:
            raise _LimitExceeded(
                f"wall deadline exceeded ({self.limits.wall_deadline:.3f} s)"
            )

    def _lookup_function(self, name: str) -> FunctionDef | None:
        if name in self.program.functions:
            return self.program.functions[name]
        return self.bindings.get(name)

    # -- execution ---------------------------------------------------------

    def call_function(self, fn: FunctionDef, arg) -> None:
        self.call_depth += 1
        if self.call_depth > MAX_CALL_DEPTH:
            raise ScriptRuntimeError(f"call depth exceeds {MAX_CALL_DEPTH} in '{fn.name}'")
        try:
            local = {fn.param: arg}
            self._exec_block(fn.node.body, local)
        finally:
            self.call_depth -= 1

    def _exec_block(self, body: list, env: dict) -> None:
        for stmt in body:
            self._exec_statement(stmt, env)

    def _exec_statement(self, stmt: ast.stmt, env: dict) -> None:
        self._tick()
        if isinstance(stmt, ast.Assign):
            value = self._eval(stmt.value, env)
            self._assign(stmt.targets[0], value, env)
        elif isinstance(stmt, ast.AugAssign):
            current = self._load_target(stmt.target, env)
            delta = self._eval(stmt.value, env)
            updated = self._binop(
                stmt.op, current, delta, line=stmt.lineno
            )
            self._assign(stmt.target, updated, env)
        elif isinstance(stmt, ast.Expr):
            self._eval(stmt.value, env)
        elif isinstance(stmt, ast.If):
            branch = stmt.body if self._truthy(self._eval(stmt.test, env)) else stmt.orelse
            self._exec_block(branch, env)
        elif isinstance(stmt, ast.For):
            iterable = self._eval(stmt.iter, env)
            iterations = 0
            for item in iterable:
                iterations += 1
                if iterations > self.limits.max_loop_iterations:
                    raise _LimitExceeded(
                        f"loop iteration cap exceeded ({self.limits.max_loop_iterations})"
                    )
                env[stmt.target.id] = item
                self._exec_block(stmt.body, env)
        elif isinstance(stmt, ast.While):
            iterations = 0
            while self._truthy(self._eval(stmt.test, env)):
                iterations += 1
                if iterations > self.limits.max_loop_iterations:
                    raise _LimitExceeded(
                        f"loop iteration cap exceeded ({self.limits.max_loop_iterations})"
                    )
                self._exec_block(stmt.body, env)
        else:  # pragma: no cover - parser rejects everything else
            raise ScriptRuntimeError(f"unsupported statement at line {stmt.lineno}")

    # -- assignment --------------------------------------------------------

    def _assign(self, target: ast.expr, value, env: dict) -> None:
        if isinstance(target, ast.Name):
            env[target.id] = value
        elif isinstance(target, ast.Attribute):
            obj = self._eval(target.value, env)
            self._set_attribute(obj, target.attr, value, line=target.lineno)
        elif isinstance(target, ast.Tuple):
            if not isinstance(value, tuple) or len(value) != 2:
                raise ScriptRuntimeError(
                    f"line {target.lineno}: expected a two-element result to unpack"
                )
            env[target.elts[0].id] = value[0]
            env[target.elts[1].id] = value[1]
        else:  # pragma: no cover - parser rejects everything else
            raise ScriptRuntimeError(f"invalid assignment target at line {target.lineno}")

    def _load_target(self, target: ast.expr, env: dict):
        if isinstance(target, ast.Name):
            if target.id not in env:
                raise ScriptRuntimeError(
                    f"line {target.lineno}: name '{target.id}' is not defined"
                )
            return env[target.id]
        return self._eval(target, env)

    def _set_attribute(self, obj, attr: str, value, line: int) -> None:
        # Writable state is confined to pose components handed out by the
        # controller; nothing else accepts attribute assignment.
        from ..world import Quat, Vec3

        if isinstance(obj, Vec3) and attr in ("x", "y", "z"):
            pass
        elif isinstance(obj, Quat) and attr in ("w", "x", "y", "z"):
            pass
        else:
            raise ScriptRuntimeError(
                f"line {line}: attribute '{attr}' is not assignable on this value"
            )
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScriptRuntimeError(
                f"line {line}: pose fields only accept numbers"
            )
        setattr(obj, attr, float(value))

    # -- expressions -------------------------------------------------------

    def _eval(self, node: ast.expr, env: dict):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return self._eval_name(node, env)
        if isinstance(node, ast.Attribute):
            return self._eval_attribute(node, env)
        if isinstance(node, ast.BinOp):
            left = self._eval(node.left, env)
            right = self._eval(node.right, env)
            return self._binop(node.op, left, right, line=node.lineno)
        if isinstance(node, ast.UnaryOp):
            operand = self._eval(node.operand, env)
            if isinstance(node.op, ast.Not):
                return not self._truthy(operand)
            if not isinstance(operand, (int, float)) or isinstance(operand, bool):
                raise ScriptRuntimeError(
                    f"line {node.lineno}: unary minus needs a number"
                )
            return -operand
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                result = True
                for value in node.values:
                    result = self._truthy(self._eval(value, env))
                    if not result:
                        return False
                return result
            for value in node.values:
                if self._truthy(self._eval(value, env)):
                    return True
            return False
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            right = self._eval(node.comparators[0], env)
            return self._compare(node.ops[0], left, right, line=node.lineno)
        if isinstance(node, ast.Call):
            return self._eval_call(node, env)
        raise ScriptRuntimeError(  # pragma: no cover - parser rejects everything else
            f"unsupported expression at line {node.lineno}"
        )

    def _eval_name(self, node: ast.Name, env: dict):
        name = node.id
        if name in env:
            return env[name]
        if name in self.modules:
            return self.modules[name]
        fn = self._lookup_function(name)
        if fn is not None:
            return fn
        if name in BUILTINS:
            return BUILTINS[name]
        raise ScriptRuntimeError(f"line {node.lineno}: name '{name}' is not defined")

    def _eval_attribute(self, node: ast.Attribute, env: dict):
        from ..world import Pose, Quat, Vec3

        base = self._eval(node.value, env)
        attr = node.attr
        if isinstance(base, Pose):
            if attr == "position":
                return base.position
            if attr == "orientation":
                return base.orientation
            raise ScriptRuntimeError(f"line {node.lineno}: pose has no field '{attr}'")
        if isinstance(base, Vec3):
            if attr in ("x", "y", "z"):
                return getattr(base, attr)
            raise ScriptRuntimeError(f"line {node.lineno}: position has no field '{attr}'")
        if isinstance(base, Quat):
            if attr in ("w", "x", "y", "z"):
                return getattr(base, attr)
            raise ScriptRuntimeError(f"line {node.lineno}: orientation has no field '{attr}'")
        if isinstance(base, ModuleProxy):
            return base.get(attr)
        if base is self.robot:
            raise ScriptRuntimeError(
                f"line {node.lineno}: controller method '{attr}' must be called"
            )
        raise ScriptRuntimeError(
            f"line {node.lineno}: value has no attribute '{attr}'"
        )

    def _eval_call(self, node: ast.Call, env: dict):
        self._tick()
        args = [self._eval(arg, env) for arg in node.args]
        if isinstance(node.func, ast.Attribute):
            base = self._eval(node.func.value, env)
            attr = node.func.attr
            if base is self.robot:
                return self._call_controller(attr, args, line=node.lineno)
            if isinstance(base, ModuleProxy):
                member = base.get(attr)
                if not callable(member):
                    raise ScriptRuntimeError(
                        f"line {node.lineno}: '{base.name}.{attr}' is not callable"
                    )
                return self._call_python(member, args, f"{base.name}.{attr}", node.lineno)
            raise ScriptRuntimeError(
                f"line {node.lineno}: cannot call method '{attr}' on this value"
            )
        target = self._eval(node.func, env)
        if isinstance(target, FunctionDef):
            if len(args) != 1:
                raise ScriptRuntimeError(
                    f"line {node.lineno}: '{target.name}' takes exactly one argument"
                )
            self.call_function(target, args[0])
            return None
        if callable(target):
            return self._call_python(target, args, node.func.id, node.lineno)
        raise ScriptRuntimeError(f"line {node.lineno}: value is not callable")

    def _call_controller(self, method: str, args: list, line: int):
        if method not in CONTROLLER_API:
            raise ScriptRuntimeError(f"line {line}: unknown controller method '{method}'")
        if self.abort.is_set():
            raise _Aborted()
        from ..world import WorldError

        try:
            result = getattr(self.robot, method)(*args)
        except WorldError as exc:
            raise ScriptRuntimeError(f"line {line}: {exc}") from exc
        except TypeError as exc:
            raise ScriptRuntimeError(f"line {line}: bad arguments to '{method}': {exc}") from exc
        if self.abort.is_set():
            raise _Aborted()
        return result

    def _call_python(self, fn, args: list, name: str, line: int):
        try:
            return fn(*args)
        except (_Aborted, _LimitExceeded, ScriptRuntimeError):
            raise
        except ZeroDivisionError:
            raise ScriptRuntimeError(f"line {line}: division by zero") from None
        except (TypeError, ValueError) as exc:
            raise ScriptRuntimeError(f"line {line}: bad call to '{name}': {exc}") from exc

    # -- operators ---------------------------------------------------------

    def _binop(self, op: ast.operator, left, right, line: int):
        if not self._is_number(left) or not self._is_number(right):
            if isinstance(op, ast.Add) and isinstance(left, str) and isinstance(right, str):
                return left + right
            raise ScriptRuntimeError(
                f"line {line}: arithmetic needs numeric operands "
                f"({type(left).__name__} and {type(right).__name__})"
            )
        if isinstance(op, ast.Add):
            return left + right
        if isinstance(op, ast.Sub):
            return left - right
        if isinstance(op, ast.Mult):
            return left * right
        if isinstance(op, ast.Div):
            if right == 0:
                raise ScriptRuntimeError(f"line {line}: division by zero")
            return left / right
        raise ScriptRuntimeError(f"line {line}: unsupported operator")  # pragma: no cover

    def _compare(self, op: ast.cmpop, left, right, line: int):
        if isinstance(op, ast.Eq):
            return left == right
        if isinstance(op, ast.NotEq):
            return left != right
        comparable = (self._is_number(left) and self._is_number(right)) or (
            isinstance(left, str) and isinstance(right, str)
        )
        if not comparable:
            raise ScriptRuntimeError(
                f"line {line}: cannot order {type(left).__name__} "
                f"and {type(right).__name__}"
            )
        if isinstance(op, ast.Lt):
            return left < right
        if isinstance(op, ast.LtE):
            return left <= right
        if isinstance(op, ast.Gt):
            return left > right
        return left >= right

    @staticmethod
    def _is_number(value) -> bool:
        return isinstance(value, (int, float)) and not isinstance(value, bool)

    @staticmethod
    def _truthy(value) -> bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, (int, float)):
            return value != 0
        if isinstance(value, str):
            return bool(value)
        raise ScriptRuntimeError(f"value of type {type(value).__name__} is not a condition")
