"""Reusable script policies: parsing, storage, registry, prompts, teaching.

A policy file has three sections separated by tag lines: import lines,
a #BODY section holding the executable function definitions, and a #HINT
section holding the prompt-visible part (a natural-language directive
comment plus a one-line alias function calling the entry function).
Policies are registered through a JSON file and can be created live by
recording executed commands and saving them under a spoken name.
"""

import ast
import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from .executor import MODULE_MEMBERS, parse_program
from .executor.parser import ScriptParseError
from .names import sanitize_name

HINT_DIRECTIVE_PREFIX = "# define function: "
HINT_END = "# end of function"
_TAG_RE = re.compile(r"^#\s?(BODY|HINT)\s*$", re.IGNORECASE)


class PolicyError(Exception):
    """A policy file or operation that cannot be accepted."""


@dataclass
class Policy:
    name: str
    imports: list = field(default_factory=list)
    body_source: str = ""
    entry_function: str = ""
    hint_utterance: str = ""
    alias_function: str = ""
    learned: bool = False
    source_path: str = ""

    def body_function_names(self) -> list:
        return parse_program(self.body_source).function_names()

    def hint_block(self) -> str:
        return (
            f"{HINT_DIRECTIVE_PREFIX}{self.hint_utterance}\n"
            f"def {self.alias_function}(robot):\n"
            f"    {self.entry_function}(robot)\n"
            f"{HINT_END}"
        )

    def structural_key(self) -> tuple:
        return (
            self.name,
            tuple(self.imports),
            self.body_source.strip("\n"),
            self.entry_function,
            self.hint_utterance,
            self.alias_function,
        )


def parse_policy_file(text: str, name: str = "", learned: bool = False) -> Policy:
    """Parse policy text into its import, body and hint sections."""
    imports_part, body_part, hint_part = _split_sections(text)

    imports = []
    for idx, raw in enumerate(imports_part.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = re.fullmatch(r"import\s+([A-Za-z_][A-Za-z0-9_]*)", line)
        if not match:
            raise PolicyError(f"line {idx}: only plain 'import <module>' lines may precede the body")
        module = match.group(1)
        if module not in MODULE_MEMBERS:
            raise PolicyError(f"import of '{module}' is outside the executor whitelist")
        if module not in imports:
            imports.append(module)

    body_source = body_part.strip("\n")
    if not body_source:
        raise PolicyError("policy body is empty")
    try:
        body_program = parse_program(body_source)
    except ScriptParseError as exc:
        raise PolicyError(f"policy body does not parse: {exc}") from exc
    if not body_program.functions:
        raise PolicyError("policy body defines no functions")

    hint_utterance, alias, entry = _parse_hint(hint_part)
    if entry not in body_program.functions:
        raise PolicyError(f"hint alias calls '{entry}' which the body does not define")
    expected_alias = sanitize_name(hint_utterance)
    if alias != expected_alias:
        raise PolicyError(
            f"alias '{alias}' does not match the hint utterance (expected '{expected_alias}')"
        )

    return Policy(
        name=name or entry,
        imports=imports,
        body_source=body_source,
        entry_function=entry,
        hint_utterance=hint_utterance,
        alias_function=alias,
        learned=learned,
    )


def _split_sections(text: str) -> tuple:
    body_idx = hint_idx = None
    lines = text.splitlines()
    for i, line in enumerate(lines):
        match = _TAG_RE.match(line.strip())
        if not match:
            continue
        tag = match.group(1).upper()
        if tag == "BODY":
            if body_idx is not None:
                raise PolicyError("duplicate #BODY tag")
            body_idx = i
        else:
            if hint_idx is not None:
                raise PolicyError("duplicate #HINT tag")
            hint_idx = i
    if body_idx is None:
        raise PolicyError("missing #BODY tag")
    if hint_idx is None:
        raise PolicyError("missing #HINT tag")
    if hint_idx < body_idx:
        raise PolicyError("#HINT tag must come after #BODY")
    imports_part = "\n".join(lines[:body_idx])
    body_part = "\n".join(lines[body_idx + 1 : hint_idx])
    hint_part = "\n".join(lines[hint_idx + 1 :])
    return imports_part, body_part, hint_part


def _parse_hint(hint_part: str) -> tuple:
    lines = [line for line in hint_part.splitlines() if line.strip()]
    if not lines or not lines[0].strip().startswith(HINT_DIRECTIVE_PREFIX.strip()):
        raise PolicyError("hint section must start with a '# define function:' comment")
    first = lines[0].strip()
    prefix = HINT_DIRECTIVE_PREFIX.strip()
    hint_utterance = first[len(prefix):].strip()
    if not hint_utterance:
        raise PolicyError("hint utterance is empty")
    closer = lines[-1].strip().lower()
    if closer not in ("# end of function", "#end of function"):
        raise PolicyError("hint section must end with '# end of function'")

    alias_source = "\n".join(lines[1:-1])
    try:
        alias_program = parse_program(alias_source)
    except ScriptParseError as exc:
        raise PolicyError(f"hint alias does not parse: {exc}") from exc
    if len(alias_program.functions) != 1:
        raise PolicyError("hint section must define exactly one alias function")
    alias_fn = next(iter(alias_program.functions.values()))
    body = alias_fn.node.body
    if (
        len(body) != 1
        or not isinstance(body[0], ast.Expr)
        or not isinstance(body[0].value, ast.Call)
        or not isinstance(body[0].value.func, ast.Name)
        or len(body[0].value.args) != 1
        or not isinstance(body[0].value.args[0], ast.Name)
    ):
        raise PolicyError("alias body must be exactly one call to the entry function")
    entry = body[0].value.func.id
    return hint_utterance, alias_fn.name, entry


def serialize_policy(policy: Policy) -> str:
    """Canonical text form: LF endings, '#BODY' and '# HINT' tags."""
    parts = []
    for module in policy.imports:
        parts.append(f"import {module}")
    parts.append("#BODY")
    parts.append(policy.body_source.strip("\n"))
    parts.append("# HINT")
    parts.append(policy.hint_block())
    return "\n".join(parts) + "\n"


@dataclass
class RegistryEntry:
    name: str
    file: str
    enabled: bool = True
    learned: bool = False
    error: str = ""


class PolicyRegistry:
    """Ordered policy collection backed by a JSON registry file."""

    def __init__(self, entries=None, config_path: str = ""):
        self.entries: list = list(entries or [])
        self.loaded: dict = {}
        self.config_path = config_path

    @property
    def errors(self) -> dict:
        return {e.name: e.error for e in self.entries if e.error}

    def enabled_policies(self) -> list:
        return [self.loaded[e.name] for e in self.entries if e.enabled and e.name in self.loaded]

    def get(self, name: str):
        return self.loaded.get(name)

    def names(self) -> list:
        return [e.name for e in self.entries]

    def prompt_names(self) -> set:
        """Identifiers generated code may call: bodies and aliases."""
        names = set()
        for policy in self.enabled_policies():
            names.update(policy.body_function_names())
            names.add(policy.alias_function)
        return names

    def save_config(self) -> None:
        if not self.config_path:
            raise PolicyError("registry has no backing config file")
        data = {
            "policies": [
                {"name": e.name, "file": e.file, "enabled": e.enabled, "learned": e.learned}
                for e in self.entries
            ]
        }
        Path(self.config_path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")

    def add_entry(self, entry: RegistryEntry, policy: Policy) -> None:
        if any(e.name == entry.name for e in self.entries):
            raise PolicyError(f"policy name '{entry.name}' already registered")
        self.entries.append(entry)
        self.loaded[entry.name] = policy

    def set_enabled(self, name: str, enabled: bool) -> None:
        for entry in self.entries:
            if entry.name == name:
                entry.enabled = enabled
                return
        raise PolicyError(f"no policy named '{name}'")

    def remove(self, name: str) -> None:
        before = len(self.entries)
        self.entries = [e for e in self.entries if e.name != name]
        if len(self.entries) == before:
            raise PolicyError(f"no policy named '{name}'")
        self.loaded.pop(name, None)


def load_registry(config_path) -> PolicyRegistry:
    """Load a registry file; per-entry failures do not sink the rest."""
    config_path = Path(config_path)
    with open(config_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    registry = PolicyRegistry(config_path=str(config_path))
    for item in data.get("policies", []):
        entry = RegistryEntry(
            name=item["name"],
            file=item["file"],
            enabled=bool(item.get("enabled", True)),
            learned=bool(item.get("learned", False)),
        )
        registry.entries.append(entry)
        if not entry.enabled:
            continue
        path = Path(entry.file)
        if not path.is_absolute():
            path = config_path.parent / path
        try:
            text = path.read_text(encoding="utf-8")
            policy = parse_policy_file(text, name=entry.name, learned=entry.learned)
            policy.source_path = str(path)
            registry.loaded[entry.name] = policy
        except (OSError, PolicyError) as exc:
            entry.error = str(exc)
    return registry


def prompt_extension(registry: PolicyRegistry) -> str:
    """Deduplicated imports, then each enabled policy's hint block in order."""
    policies = registry.enabled_policies()
    if not policies:
        return ""
    import_lines = []
    for policy in policies:
        for module in policy.imports:
            line = f"import {module}"
            if line not in import_lines:
                import_lines.append(line)
    blocks = [policy.hint_block() for policy in policies]
    sections = []
    if import_lines:
        sections.append("\n".join(import_lines))
    sections.extend(blocks)
    return "\n\n".join(sections)


def execution_bindings(registry: PolicyRegistry) -> dict:
    """Function bindings the executor injects: bodies plus aliases."""
    bindings: dict = {}
    owners: dict = {}
    for policy in registry.enabled_policies():
        program = parse_program(_policy_executable_source(policy))
        for name, fn in program.functions.items():
            if name in bindings:
                raise PolicyError(
                    f"function '{name}' defined by both "
                    f"'{owners[name]}' and '{policy.name}'"
                )
            bindings[name] = fn
            owners[name] = policy.name
    return bindings


def _policy_executable_source(policy: Policy) -> str:
    return (
        policy.body_source.strip("\n")
        + "\n\ndef "
        + policy.alias_function
        + "(robot):\n    "
        + policy.entry_function
        + "(robot)\n"
    )


@dataclass
class RecordingSession:
    steps: list = field(default_factory=list)  # LMPs in execution order
    started_at: float = field(default_factory=time.time)


def begin_recording() -> RecordingSession:
    return RecordingSession()


def record_step(session: RecordingSession, lmp) -> None:
    session.steps.append(lmp)


def finalize_recording(
    session: RecordingSession,
    name: str,
    hint: str,
    registry: PolicyRegistry,
    policies_dir,
) -> Policy:
    """Build, persist, register and enable a learned policy from a recording.

    The body is the recorded code in step order followed by a wrapper
    function (named from the spoken name) calling each step's top-level
    function; the hint alias then calls the wrapper.
    """
    if not session.steps:
        raise PolicyError("cannot save a recording with no steps")
    wrapper = sanitize_name(name)
    if any(e.name == wrapper for e in registry.entries):
        raise PolicyError(f"policy name '{wrapper}' already registered")

    pieces = []
    for i, lmp in enumerate(session.steps, start=1):
        pieces.append(f"# recorded command {i}: {lmp.utterance}")
        pieces.append(lmp.code_text.strip("\n"))
    pieces.append("# wrapper added on save")
    wrapper_lines = [f"def {wrapper}(robot):"]
    wrapper_lines.extend(f"    {lmp.top_level_function}(robot)" for lmp in session.steps)
    pieces.append("\n".join(wrapper_lines))
    body_source = "\n".join(pieces)

    policy = Policy(
        name=wrapper,
        imports=[],
        body_source=body_source,
        entry_function=wrapper,
        hint_utterance=hint.strip(),
        alias_function=sanitize_name(hint),
        learned=True,
    )
    # Re-parse to guarantee the saved file is valid before it is registered.
    parsed = parse_policy_file(serialize_policy(policy), name=wrapper, learned=True)

    policies_dir = Path(policies_dir)
    policies_dir.mkdir(parents=True, exist_ok=True)
    path = policies_dir / f"{wrapper}.policy"
    path.write_text(serialize_policy(policy), encoding="utf-8")
    parsed.source_path = str(path)

    registry.add_entry(
        RegistryEntry(name=wrapper, file=str(path), enabled=True, learned=True), parsed
    )
    if registry.config_path:
        registry.save_config()
    return parsed
