"""Operator session: keyword dispatch, command lifecycle, context, teaching.

One logical command runs at a time; the session is a serialized state
machine. A stop keyword (or gateway stop) may arrive from another thread
and is honored mid-execution through the shared abort event.
"""

import logging
import re
import threading
from dataclasses import dataclass, field
from enum import Enum

from .codegen import (
    CodegenError,
    GenerationParseError,
    LMP,
    build_prompt,
    resolve_and_assemble,
)
from .executor import (
    ExecutionLimits,
    ExecutionReport,
    ExecutionStatus,
    execute,
    parse_program,
    static_check,
)
from .executor.parser import ScriptParseError
from .policybank import (
    PolicyError,
    PolicyRegistry,
    begin_recording,
    execution_bindings,
    finalize_recording,
    prompt_extension,
    record_step,
)
from .world import RobotHandle, RobotSimulator

logger = logging.getLogger(__name__)

_PUNCT_RE = re.compile(r"[^a-z0-9\s]+")
_WS_RE = re.compile(r"\s+")


class KeywordAction(str, Enum):
    STOP = "stop"
    RECORD_POLICY = "record_policy"
    SAVE_POLICY = "save_policy"
    DISCARD_RECORDING = "discard_recording"
    CLEAR_CONTEXT = "clear_context"


class SessionStatus(str, Enum):
    IDLE = "idle"
    LISTENING = "listening"
    GENERATING = "generating"
    AWAITING_APPROVAL = "awaiting_approval"
    EXECUTING = "executing"
    RECORDING_NAME = "recording_name"


def normalize_phrase(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    lowered = _PUNCT_RE.sub(" ", text.lower())
    return _WS_RE.sub(" ", lowered).strip()


@dataclass(frozen=True)
class KeywordBinding:
    phrase: str  # already normalized
    action: KeywordAction


def default_bindings(keywords: dict | None = None) -> list:
    source = keywords or {
        "stop": "stop",
        "record policy": "record_policy",
        "save policy": "save_policy",
        "discard recording": "discard_recording",
        "clear context": "clear_context",
    }
    bindings = []
    seen = set()
    for phrase, action in source.items():
        normalized = normalize_phrase(phrase)
        if normalized in seen:
            raise ValueError(f"duplicate keyword phrase after normalization: '{normalized}'")
        seen.add(normalized)
        bindings.append(KeywordBinding(normalized, KeywordAction(action)))
    return bindings


@dataclass(frozen=True)
class CodegenRequest:
    utterance: str


def dispatch(transcript: str, bindings) -> "KeywordAction | CodegenRequest":
    """Exact match on the normalized transcript, otherwise a codegen request."""
    if not transcript.strip():
        raise ValueError("transcript must not be empty")
    normalized = normalize_phrase(transcript)
    for binding in bindings:
        if normalized == binding.phrase:
            return binding.action
    return CodegenRequest(transcript)


@dataclass
class PendingApproval:
    command_id: str
    utterance: str
    lmp: LMP
    program: object


@dataclass
class SessionState:
    context_lmps: list = field(default_factory=list)
    recording: object = None
    approval_required: bool = False
    status: SessionStatus = SessionStatus.IDLE


class Session:
    """Wires listener output through generation and execution."""

    def __init__(
        self,
        *,
        sim: RobotSimulator,
        registry: PolicyRegistry,
        client,
        preamble: str,
        bindings=None,
        context_capacity: int = 3,
        approval_required: bool = False,
        limits: ExecutionLimits | None = None,
        time_dilation: float = 1.0,
        policies_dir: str = "",
        event_sink=None,
    ):
        self.sim = sim
        self.registry = registry
        self.client = client
        self.preamble = preamble
        self.bindings = bindings if bindings is not None else default_bindings()
        self.context_capacity = context_capacity
        self.approval_required = approval_required
        self.limits = limits or ExecutionLimits()
        self.time_dilation = time_dilation
        self.policies_dir = policies_dir
        self.state = SessionState(approval_required=approval_required)
        self.pending: PendingApproval | None = None
        self.last_report: ExecutionReport | None = None
        self.last_lmp: LMP | None = None
        self._event_sink = event_sink
        self._pending_counter = 0
        self._pending_policy_name: str | None = None
        self._lock = threading.Lock()

        sim.say_listeners.append(lambda text: self._emit("say", {"text": text}))
        sim.pose_listeners.append(lambda pose: self._emit("pose", pose.to_dict()))

    # -- events -------------------------------------------------------------

    def _emit(self, event_type: str, payload: dict) -> None:
        if self._event_sink is not None:
            self._event_sink(event_type, payload)

    # -- status -------------------------------------------------------------

    @property
    def status(self) -> SessionStatus:
        return self.state.status

    @property
    def busy(self) -> bool:
        return self.state.status not in (SessionStatus.IDLE, SessionStatus.RECORDING_NAME)

    # -- transcript entry ---------------------------------------------------

    def handle_transcript(self, text: str, command_id: str | None = None):
        """Route one transcript: name/hint capture, keyword, or command."""
        self._emit("transcript", {"text": text})
        if self.state.status is SessionStatus.RECORDING_NAME:
            return self._capture_recording_field(text)
        result = dispatch(text, self.bindings)
        if isinstance(result, KeywordAction):
            self._emit("keyword", {"action": result.value})
            return self.perform_keyword(result)
        return self.run_command(result.utterance, command_id=command_id)

    # -- keyword actions ----------------------------------------------------

    def perform_keyword(self, action: KeywordAction):
        if action is KeywordAction.STOP:
            self.sim.stop()
            return action
        if action is KeywordAction.RECORD_POLICY:
            if self.state.recording is None:
                self.state.recording = begin_recording()
            self._emit("recording_state", {"recording": True, "steps": 0})
            return action
        if action is KeywordAction.SAVE_POLICY:
            if self.state.recording is None or not self.state.recording.steps:
                self._emit("error", {"message": "nothing recorded to save"})
                return action
            self.state.status = SessionStatus.RECORDING_NAME
            self._pending_policy_name = None
            self._emit("recording_state", {"recording": True, "awaiting": "name"})
            return action
        if action is KeywordAction.DISCARD_RECORDING:
            self.state.recording = None
            self._emit("recording_state", {"recording": False})
            return action
        if action is KeywordAction.CLEAR_CONTEXT:
            self.state.context_lmps.clear()
            return action
        raise ValueError(f"unknown keyword action: {action}")  # pragma: no cover

    def _capture_recording_field(self, text: str):
        if self._pending_policy_name is None:
            self._pending_policy_name = text.strip()
            self._emit("recording_state", {"recording": True, "awaiting": "hint"})
            return SessionStatus.RECORDING_NAME
        name = self._pending_policy_name
        self._pending_policy_name = None
        self.state.status = SessionStatus.IDLE
        return self.save_recording(name, text.strip())

    # -- recording ----------------------------------------------------------

    def save_recording(self, name: str, hint: str):
        if self.state.recording is None:
            raise PolicyError("no active recording")
        policy = finalize_recording(
            self.state.recording, name, hint, self.registry, self.policies_dir
        )
        self.state.recording = None
        self.state.status = SessionStatus.IDLE
        self._emit(
            "policy_saved",
            {"name": policy.name, "hint": policy.hint_utterance, "learned": True},
        )
        return policy

    # -- command lifecycle ----------------------------------------------------

    def run_command(self, utterance: str, command_id: str | None = None):
        """Generate, check and (unless gated on approval) execute one command."""
        with self._lock:
            if self.busy:
                raise RuntimeError(f"session is busy ({self.state.status.value})")
            self.state.status = SessionStatus.GENERATING
        self.sim.reset_abort()
        try:
            self._emit("codegen_started", {"utterance": utterance})
            bundle = build_prompt(
                self.preamble,
                prompt_extension(self.registry),
                self.state.context_lmps,
                utterance,
            )
            try:
                lmp = resolve_and_assemble(
                    utterance, bundle, self.client, self.registry.prompt_names()
                )
            except GenerationParseError as exc:
                return self._fail(ExecutionStatus.PARSE_ERROR, str(exc))
            except CodegenError as exc:
                return self._fail(ExecutionStatus.GENERATION_FAILED, str(exc))

            self.last_lmp = lmp
            self._emit(
                "codegen_result",
                {"utterance": utterance, "code": lmp.code_text, "top": lmp.top_level_function},
            )

            try:
                program = parse_program(lmp.code_text)
                bindings = execution_bindings(self.registry)
            except (ScriptParseError, PolicyError) as exc:
                return self._fail(ExecutionStatus.PARSE_ERROR, str(exc))

            unresolved = static_check(program, set(bindings))
            if unresolved:
                return self._fail(
                    ExecutionStatus.STATIC_CHECK_FAILED, ", ".join(unresolved)
                )

            if self.approval_required:
                if command_id is None:
                    self._pending_counter += 1
                    command_id = f"cmd-{self._pending_counter}"
                self.pending = PendingApproval(
                    command_id=command_id,
                    utterance=utterance,
                    lmp=lmp,
                    program=program,
                )
                self.state.status = SessionStatus.AWAITING_APPROVAL
                self._emit(
                    "awaiting_approval",
                    {
                        "command_id": self.pending.command_id,
                        "utterance": utterance,
                        "code": lmp.code_text,
                    },
                )
                return self.pending

            return self._execute(lmp, program, bindings)
        finally:
            if self.state.status in (SessionStatus.GENERATING, SessionStatus.EXECUTING):
                self.state.status = SessionStatus.IDLE

    def approve(self, command_id: str):
        pending = self.pending
        if pending is None or pending.command_id != command_id:
            raise KeyError(f"no pending command '{command_id}'")
        self.pending = None
        self.state.status = SessionStatus.EXECUTING
        try:
            bindings = execution_bindings(self.registry)
            return self._execute(pending.lmp, pending.program, bindings)
        finally:
            self.state.status = SessionStatus.IDLE

    def reject(self, command_id: str) -> None:
        pending = self.pending
        if pending is None or pending.command_id != command_id:
            raise KeyError(f"no pending command '{command_id}'")
        self.pending = None
        self.state.status = SessionStatus.IDLE
        self._emit("execution_finished", {"status": "rejected", "utterance": pending.utterance})

    def _fail(self, status: ExecutionStatus, detail: str) -> ExecutionReport:
        report = ExecutionReport(status=status, error_detail=detail)
        self.last_report = report
        self._emit("error", {"status": status.value, "detail": detail})
        self._emit("execution_finished", {"status": status.value, "detail": detail})
        self.state.status = SessionStatus.IDLE
        return report

    def _execute(self, lmp: LMP, program, bindings) -> ExecutionReport:
        self.state.status = SessionStatus.EXECUTING
        self._emit("execution_started", {"utterance": lmp.utterance})
        report = ExecutionReport()
        handle = RobotHandle(self.sim, report)
        report = execute(
            program,
            lmp.top_level_function,
            bindings,
            handle,
            self.limits,
            time_dilation=self.time_dilation,
            abort=self.sim.abort_event,
        )
        self.last_report = report
        self._emit(
            "execution_finished",
            {
                "status": report.status.value,
                "utterance": lmp.utterance,
                "say_outputs": list(report.say_outputs),
                "detail": report.error_detail,
            },
        )
        if report.ok:
            self.update_context(lmp)
            if self.state.recording is not None:
                record_step(self.state.recording, lmp)
                self._emit(
                    "recording_state",
                    {"recording": True, "steps": len(self.state.recording.steps)},
                )
        self.state.status = SessionStatus.IDLE
        return report

    # -- context --------------------------------------------------------------

    def update_context(self, lmp: LMP) -> None:
        self.state.context_lmps.append(lmp)
        while len(self.state.context_lmps) > self.context_capacity:
            self.state.context_lmps.pop(0)

    def snapshot(self) -> dict:
        """REST-facing view of the session."""
        return {
            "status": self.state.status.value,
            "context": [lmp.top_level_function for lmp in self.state.context_lmps],
            "recording": (
                {"steps": len(self.state.recording.steps)}
                if self.state.recording is not None
                else None
            ),
            "pending": (
                {
                    "command_id": self.pending.command_id,
                    "utterance": self.pending.utterance,
                    "code": self.pending.lmp.code_text,
                }
                if self.pending is not None
                else None
            ),
            "approval_required": self.approval_required,
        }
