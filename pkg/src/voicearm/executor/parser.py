"""Parser for the restricted command-script language.

The language is a small imperative subset: single-parameter function
definitions, assignments to names and attribute paths, arithmetic with
+ - * /, calls, if/elif/else, for-loops over range(), while-loops and
comments. Source is parsed with the stdlib ``ast`` module and then
validated node by node; anything outside the subset is rejected with a
line number. Accepted programs carry their validated AST for the
interpreter, so nothing is ever handed to Python's own runtime.
"""

import ast
from dataclasses import dataclass, field


class ScriptParseError(Exception):
    """Source is outside the accepted language subset."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)
ALLOWED_AUGOPS = (ast.Add, ast.Sub)
ALLOWED_UNARYOPS = (ast.Not, ast.USub)
ALLOWED_CMPOPS = (ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq)


@dataclass
class FunctionDef:
    """One accepted function: a name, its single parameter and its body."""

    name: str
    param: str
    node: ast.FunctionDef
    line: int


@dataclass
class Program:
    """A validated command-script program."""

    source: str
    functions: dict = field(default_factory=dict)  # name -> FunctionDef
    statement_count: int = 0

    def function_names(self) -> list:
        return list(self.functions)


def parse_program(source: str) -> Program:
    """Parse and validate source, rejecting out-of-subset constructs."""
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise ScriptParseError(exc.msg or "invalid syntax", exc.lineno or 0) from exc

    program = Program(source=source)
    for node in tree.body:
        if not isinstance(node, ast.FunctionDef):
            raise ScriptParseError(
                "only function definitions are allowed at top level", node.lineno
            )
        fn = _validate_function(node)
        if fn.name in program.functions:
            raise ScriptParseError(f"duplicate function definition '{fn.name}'", node.lineno)
        program.functions[fn.name] = fn
        program.statement_count += _count_statements(node.body)
    return program


def _validate_function(node: ast.FunctionDef) -> FunctionDef:
    if node.decorator_list:
        raise ScriptParseError("decorators are not allowed", node.lineno)
    if node.returns is not None:
        raise ScriptParseError("return annotations are not allowed", node.lineno)
    args = node.args
    if (
        len(args.args) != 1
        or args.posonlyargs
        or args.kwonlyargs
        or args.vararg
        or args.kwarg
        or args.defaults
        or args.kw_defaults
    ):
        raise ScriptParseError(
            "functions must take exactly one plain parameter", node.lineno
        )
    if args.args[0].annotation is not None:
        raise ScriptParseError("parameter annotations are not allowed", node.lineno)
    _validate_block(node.body)
    return FunctionDef(name=node.name, param=args.args[0].arg, node=node, line=node.lineno)


def _validate_block(body: list) -> None:
    for stmt in body:
        _validate_statement(stmt)


def _validate_statement(stmt: ast.stmt) -> None:
    if isinstance(stmt, ast.Assign):
        if len(stmt.targets) != 1:
            raise ScriptParseError("chained assignment is not allowed", stmt.lineno)
        _validate_assign_target(stmt.targets[0], stmt.value)
        _validate_expression(stmt.value)
    elif isinstance(stmt, ast.AugAssign):
        if not isinstance(stmt.op, ALLOWED_AUGOPS):
            raise ScriptParseError("only += and -= are allowed", stmt.lineno)
        if not isinstance(stmt.target, (ast.Name, ast.Attribute)):
            raise ScriptParseError(
                "augmented assignment target must be a name or attribute path",
                stmt.lineno,
            )
        if isinstance(stmt.target, ast.Attribute):
            _validate_attribute_path(stmt.target)
        _validate_expression(stmt.value)
    elif isinstance(stmt, ast.Expr):
        if not isinstance(stmt.value, ast.Call):
            raise ScriptParseError("bare expressions must be calls", stmt.lineno)
        _validate_expression(stmt.value)
    elif isinstance(stmt, ast.If):
        _validate_expression(stmt.test)
        _validate_block(stmt.body)
        _validate_block(stmt.orelse)
    elif isinstance(stmt, ast.For):
        if not isinstance(stmt.target, ast.Name):
            raise ScriptParseError("for-loop target must be a plain name", stmt.lineno)
        if stmt.orelse:
            raise ScriptParseError("for-else is not allowed", stmt.lineno)
        _validate_range_call(stmt.iter)
        _validate_block(stmt.body)
    elif isinstance(stmt, ast.While):
        if stmt.orelse:
            raise ScriptParseError("while-else is not allowed", stmt.lineno)
        _validate_expression(stmt.test)
        _validate_block(stmt.body)
    elif isinstance(stmt, ast.Import) or isinstance(stmt, ast.ImportFrom):
        raise ScriptParseError("import statements are not allowed in programs", stmt.lineno)
    elif isinstance(stmt, ast.FunctionDef):
        raise ScriptParseError("nested function definitions are not allowed", stmt.lineno)
    else:
        raise ScriptParseError(
            f"'{type(stmt).__name__}' statements are not allowed", stmt.lineno
        )


def _validate_assign_target(target: ast.expr, value: ast.expr) -> None:
    if isinstance(target, ast.Name):
        return
    if isinstance(target, ast.Attribute):
        _validate_attribute_path(target)
        return
    if isinstance(target, ast.Tuple):
        if len(target.elts) == 2 and all(isinstance(e, ast.Name) for e in target.elts):
            if not isinstance(value, ast.Call):
                raise ScriptParseError(
                    "tuple destructuring requires a call on the right-hand side",
                    target.lineno,
                )
            return
        raise ScriptParseError(
            "tuple assignment must destructure exactly two names", target.lineno
        )
    raise ScriptParseError(
        f"'{type(target).__name__}' is not a valid assignment target", target.lineno
    )


def _validate_attribute_path(node: ast.Attribute) -> None:
    """Accept Name.attr(.attr...) chains with safe attribute names."""
    current: ast.expr = node
    while isinstance(current, ast.Attribute):
        if current.attr.startswith("_"):
            raise ScriptParseError(
                f"attribute '{current.attr}' is not allowed", current.lineno
            )
        current = current.value
    if not isinstance(current, ast.Name):
        raise ScriptParseError(
            "attribute access must start from a plain name", node.lineno
        )


def _validate_range_call(node: ast.expr) -> None:
    if (
        not isinstance(node, ast.Call)
        or not isinstance(node.func, ast.Name)
        or node.func.id != "range"
    ):
        raise ScriptParseError("for-loops may only iterate over range(...)", node.lineno)
    if node.keywords or len(node.args) not in (1, 2):
        raise ScriptParseError("range() takes one or two positional arguments", node.lineno)
    for arg in node.args:
        _validate_expression(arg)


def _validate_expression(node: ast.expr) -> None:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or isinstance(node.value, (int, float, str)):
            return
        raise ScriptParseError(
            f"literal of type '{type(node.value).__name__}' is not allowed", node.lineno
        )
    if isinstance(node, ast.Name):
        return
    if isinstance(node, ast.Attribute):
        _validate_attribute_path(node)
        return
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, ALLOWED_BINOPS):
            raise ScriptParseError("only + - * / arithmetic is allowed", node.lineno)
        _validate_expression(node.left)
        _validate_expression(node.right)
        return
    if isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, ALLOWED_UNARYOPS):
            raise ScriptParseError("only 'not' and unary minus are allowed", node.lineno)
        _validate_expression(node.operand)
        return
    if isinstance(node, ast.BoolOp):
        for value in node.values:
            _validate_expression(value)
        return
    if isinstance(node, ast.Compare):
        if len(node.ops) != 1 or len(node.comparators) != 1:
            raise ScriptParseError("chained comparisons are not allowed", node.lineno)
        if not isinstance(node.ops[0], ALLOWED_CMPOPS):
            raise ScriptParseError("comparison operator is not allowed", node.lineno)
        _validate_expression(node.left)
        _validate_expression(node.comparators[0])
        return
    if isinstance(node, ast.Call):
        if node.keywords:
            raise ScriptParseError("keyword arguments are not allowed", node.lineno)
        if isinstance(node.func, ast.Name):
            pass
        elif isinstance(node.func, ast.Attribute):
            _validate_attribute_path(node.func)
        else:
            raise ScriptParseError("call target must be a name or attribute", node.lineno)
        for arg in node.args:
            if isinstance(arg, ast.Starred):
                raise ScriptParseError("star arguments are not allowed", arg.lineno)
            _validate_expression(arg)
        return
    if isinstance(node, ast.Subscript):
        raise ScriptParseError("subscripting is not allowed", node.lineno)
    raise ScriptParseError(
        f"'{type(node).__name__}' expressions are not allowed", node.lineno
    )


def _count_statements(body: list) -> int:
    total = 0
    for stmt in body:
        total += 1
        for inner in ("body", "orelse"):
            total += _count_statements(getattr(stmt, inner, []) or [])
    return total
