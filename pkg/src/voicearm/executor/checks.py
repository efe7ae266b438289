"""Pre-execution checks: every call in a program must resolve before it runs.

Catches generated code that invents controller methods (the classic
failure is a call like robot.set_digital_output) so nothing starts
moving before the program is known to be runnable.
"""

import ast

from .parser import Program

CONTROLLER_API = frozenset(
    {"get_pose", "add_waypoint", "go", "stop", "find", "say", "open_hand", "close_hand"}
)

MODULE_MEMBERS = {
    "math": frozenset({"pi", "cos", "sin", "sqrt", "radians"}),
    "time": frozenset({"time", "sleep"}),
}

BUILTIN_NAMES = frozenset({"range", "len", "abs", "min", "max", "round"})


def static_check(program: Program, environment_names) -> list:
    """Return the unresolved identifiers in a program, empty when clean.

    environment_names is the set of externally bound callables (policy
    functions and aliases). Program-local functions, controller methods
    on the robot handle, whitelisted module members and builtins are
    always in scope.
    """
    env = set(environment_names)
    unresolved = []
    seen = set()

    def report(name: str) -> None:
        if name not in seen:
            seen.add(name)
            unresolved.append(name)

    for fn in program.functions.values():
        for node in _walk_in_order(fn.node):
            if isinstance(node, ast.Call):
                target = node.func
                if isinstance(target, ast.Name):
                    name = target.id
                    if (
                        name not in program.functions
                        and name not in env
                        and name not in BUILTIN_NAMES
                    ):
                        report(name)
                elif isinstance(target, ast.Attribute):
                    _check_attribute(target, fn.param, report, is_call=True)
            elif isinstance(node, ast.Attribute):
                # Non-call module member reads like math.pi.
                root = _attribute_root(node)
                if isinstance(root, ast.Name) and root.id in MODULE_MEMBERS:
                    _check_attribute(node, fn.param, report, is_call=False)
    return unresolved


def _check_attribute(node: ast.Attribute, robot_param: str, report, is_call: bool) -> None:
    root = _attribute_root(node)
    if not isinstance(root, ast.Name):
        return
    if root.id == robot_param:
        if node.attr not in CONTROLLER_API:
            report(node.attr)
    elif root.id in MODULE_MEMBERS:
        if node.attr not in MODULE_MEMBERS[root.id]:
            report(f"{root.id}.{node.attr}")
    elif is_call:
        # Method call on an ordinary value; nothing in the language has those.
        report(node.attr)


def _attribute_root(node: ast.Attribute) -> ast.expr:
    current: ast.expr = node.value
    while isinstance(current, ast.Attribute):
        current = current.value
    return current


def called_names_in_order(program: Program) -> list:
    """All bare-name call targets in source order, first occurrence only."""
    ordered = []
    seen = set()
    for fn in program.functions.values():
        for node in _walk_in_order(fn.node):
            if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
                if node.func.id not in seen:
                    seen.add(node.func.id)
                    ordered.append(node.func.id)
    return ordered


def detect_undefined_calls(program: Program, known_names) -> list:
    """Bare-name calls that resolve to nothing, in first-occurrence order.

    known_names covers policy functions, aliases and any other bindings
    the executor will supply; controller methods and builtins are never
    candidates for definition.
    """
    known = set(known_names) | set(program.functions) | BUILTIN_NAMES | CONTROLLER_API
    return [name for name in called_names_in_order(program) if name not in known]


def _walk_in_order(node: ast.AST):
    """Depth-first, source-ordered walk (ast.walk is breadth-first)."""
    for child in ast.iter_child_nodes(node):
        yield child
        yield from _walk_in_order(child)
