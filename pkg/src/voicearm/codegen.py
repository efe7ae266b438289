"""Prompt assembly, completion clients and hierarchical program generation.

One generation cycle: build a prompt from the static preamble, the policy
hint extension, retained context code and a directive comment naming the
requested function; ask the completion endpoint; then keep re-prompting
for any still-undefined functions until the program is complete. Each new
definition is placed above the code that calls it, so the top-level
function always ends up last.
"""

import json
import time
from dataclasses import dataclass, field

import requests

from .executor import detect_undefined_calls, parse_program
from .executor.parser import ScriptParseError
from .names import directive_for_identifier, normalize_directive, sanitize_name

STOP_SEQUENCE = "#end of function"
DIRECTIVE_PREFIX = "#define function: "
DEFAULT_MAX_ROUNDS = 3


class CodegenError(Exception):
    """Base for generation failures."""


class TransportError(CodegenError):
    """The completion endpoint could not be reached."""


class EndpointError(CodegenError):
    """The completion endpoint answered with an error status."""


class EmptyCompletionError(CodegenError):
    """The completion came back empty."""


class NoCannedResponseError(CodegenError):
    """The mock client has no fixture entry for a directive."""


class GenerationParseError(CodegenError):
    """A completion did not parse as command-script code."""

    def __init__(self, message: str, completion: str):
        self.completion = completion
        super().__init__(message)


class UnresolvedNamesError(CodegenError):
    """Undefined calls remained after the allowed rounds."""


@dataclass
class PromptBundle:
    """The four prompt segments, concatenated in fixed order."""

    preamble: str
    policy_extension: str = ""
    context_code: str = ""
    user_directive: str = ""

    def render(self) -> str:
        segments = [
            seg.strip("\n")
            for seg in (self.preamble, self.policy_extension, self.context_code)
            if seg.strip()
        ]
        segments.append(self.user_directive)
        return "\n\n".join(segments) + "\n"

    def with_directive(self, directive: str) -> "PromptBundle":
        return PromptBundle(
            preamble=self.preamble,
            policy_extension=self.policy_extension,
            context_code=self.context_code,
            user_directive=directive,
        )


@dataclass
class LMP:
    """One complete generation result for one utterance."""

    utterance: str
    code_text: str
    top_level_function: str
    dependency_functions: list = field(default_factory=list)
    created_at: float = field(default_factory=time.time)


def directive_line(utterance: str) -> str:
    return DIRECTIVE_PREFIX + normalize_directive(utterance)


def build_prompt(preamble: str, registry_extension: str, context, utterance: str) -> PromptBundle:
    """Assemble the prompt segments for one utterance.

    context is the retained list of recent LMPs, oldest first; their code
    is included verbatim between the policy extension and the directive.
    """
    if not preamble.strip():
        raise ValueError("preamble must not be empty")
    context_code = "\n\n".join(lmp.code_text.strip("\n") for lmp in context)
    return PromptBundle(
        preamble=preamble,
        policy_extension=registry_extension,
        context_code=context_code,
        user_directive=directive_line(utterance),
    )


def complete(prompt_text: str, client) -> str:
    """One raw completion, truncated at the stop sequence."""
    text = client.complete(prompt_text)
    if STOP_SEQUENCE in text:
        text = text.split(STOP_SEQUENCE, 1)[0]
    text = text.strip("\n")
    if not text.strip():
        raise EmptyCompletionError("completion endpoint returned no code")
    return text


class MockCompletionClient:
    """Canned completions keyed by the normalized directive line.

    Fixture format: an object mapping directive text to either a single
    completion string or {"rounds": [text, ...]} consumed one entry per
    call. Wall-clock time per call is recorded like the real client's.
    """

    def __init__(self, fixture: dict):
        self.fixture = dict(fixture)
        self.call_log = []  # (directive, elapsed_seconds)
        self._round_counters: dict = {}

    @classmethod
    def from_file(cls, path) -> "MockCompletionClient":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, prompt_text: str) -> str:
        started = time.perf_counter()
        directive = _last_directive(prompt_text)
        entry = self.fixture.get(directive)
        if entry is None:
            raise NoCannedResponseError(f"no canned response for directive '{directive}'")
        if isinstance(entry, dict):
            rounds = entry["rounds"]
            index = min(self._round_counters.get(directive, 0), len(rounds) - 1)
            self._round_counters[directive] = index + 1
            text = rounds[index]
        else:
            text = entry
        elapsed = time.perf_counter() - started
        self.call_log.append((directive, elapsed))
        return text

    def elapsed_total(self) -> float:
        return sum(elapsed for _, elapsed in self.call_log)

    def reset_log(self) -> None:
        self.call_log = []


class EndpointCompletionClient:
    """Plain-completion HTTP client (prompt in, text out, stop honored)."""

    def __init__(
        self,
        base_url: str,
        model: str = "",
        *,
        temperature: float = 0.0,
        max_tokens: int = 512,
        timeout: float = 60.0,
        token: str = "",
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.token = token
        self.call_log = []

    def complete(self, prompt_text: str) -> str:
        payload = {
            "prompt": prompt_text,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "stop": [STOP_SEQUENCE],
        }
        if self.model:
            payload["model"] = self.model
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        started = time.perf_counter()
        try:
            response = requests.post(
                self.base_url + "/v1/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"completion endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise EndpointError(
                f"completion endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
            text = body["choices"][0]["text"]
        except (ValueError, KeyError, IndexError) as exc:
            raise EndpointError(f"malformed completion response: {exc}") from exc
        elapsed = time.perf_counter() - started
        self.call_log.append((_last_directive(prompt_text), elapsed))
        return text

    def elapsed_total(self) -> float:
        return sum(elapsed for _, elapsed in self.call_log)

    def reset_log(self) -> None:
        self.call_log = []


def _last_directive(prompt_text: str) -> str:
    for line in reversed(prompt_text.splitlines()):
        if line.startswith(DIRECTIVE_PREFIX):
            return line[len(DIRECTIVE_PREFIX):].strip()
    return ""


def resolve_and_assemble(
    utterance: str,
    prompt: PromptBundle,
    client,
    known_names,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> LMP:
    """Generate, then define undefined calls until the program is closed.

    Every newly generated definition is prepended, keeping dependencies
    above their callers and the top-level function last. Fails when names
    remain after max_rounds or when a round makes no progress.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    top_name = sanitize_name(utterance)

    code_text = _generate_fragment(prompt, prompt.user_directive, client)
    program = _parse_fragment(code_text)
    if top_name not in program.functions:
        raise GenerationParseError(
            f"completion does not define the requested function '{top_name}'", code_text
        )

    known = set(known_names)
    for _ in range(max_rounds - 1):
        undefined = detect_undefined_calls(program, known)
        if not undefined:
            break
        for name in undefined:
            directive = DIRECTIVE_PREFIX + normalize_directive(directive_for_identifier(name))
            fragment = _generate_fragment(prompt, directive, client)
            fragment_program = _parse_fragment(fragment)
            if name not in fragment_program.functions:
                continue  # no progress for this name; caught below
            code_text = fragment.strip("\n") + "\n\n" + code_text.strip("\n") + "\n"
            program = _parse_fragment(code_text)
        still = detect_undefined_calls(program, known)
        if still == undefined:
            raise UnresolvedNamesError(
                f"no new definitions produced for: {', '.join(still)}"
            )

    remaining = detect_undefined_calls(program, known)
    if remaining:
        raise UnresolvedNamesError(
            f"undefined calls after {max_rounds} rounds: {', '.join(remaining)}"
        )

    dependency_functions = [n for n in program.functions if n != top_name]
    return LMP(
        utterance=utterance,
        code_text=code_text if code_text.endswith("\n") else code_text + "\n",
        top_level_function=top_name,
        dependency_functions=dependency_functions,
    )


def _generate_fragment(prompt: PromptBundle, directive: str, client) -> str:
    return complete(prompt.with_directive(directive).render(), client)


def _parse_fragment(fragment: str):
    try:
        return parse_program(fragment)
    except ScriptParseError as exc:
        raise GenerationParseError(str(exc), fragment) from exc
