"""Transcript sources: scripted files/queues, typed input, adapter hook.

Audio capture and transcription models stay outside; an external
speech-to-text engine plugs in by implementing next_transcript().
"""

import queue
import time
from dataclasses import dataclass, field

SOURCE_SCRIPTED = "scripted"
SOURCE_TYPED = "typed"
SOURCE_ADAPTER = "stt_adapter"


class ListenerError(Exception):
    """The engine itself failed; distinct from silence."""


@dataclass
class Transcript:
    text: str
    source: str = SOURCE_TYPED
    captured_at: float = field(default_factory=time.time)


class ScriptedListener:
    """Deterministic, order-preserving queue of utterances.

    Session scripts are UTF-8 text with one utterance per line; lines
    starting with '#' and blank lines are ignored.
    """

    def __init__(self, utterances=None):
        self._queue = list(utterances or [])

    @classmethod
    def from_file(cls, path) -> "ScriptedListener":
        utterances = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                utterances.append(stripped)
        return cls(utterances)

    def push(self, text: str) -> None:
        self._queue.append(text)

    def next_transcript(self, timeout: float = 0.0) -> Transcript | None:
        if not self._queue:
            if timeout > 0:
                time.sleep(timeout)
            return None
        text = self._queue.pop(0)
        if not text:
            raise ListenerError("scripted engine produced an empty utterance")
        return Transcript(text=text, source=SOURCE_SCRIPTED)


class TypedListener:
    """Thread-safe queue fed by the gateway or an interactive prompt."""

    def __init__(self):
        self._queue: queue.Queue = queue.Queue()

    def push(self, text: str) -> None:
        if not text.strip():
            raise ListenerError("typed transcript must not be empty")
        self._queue.put(text)

    def next_transcript(self, timeout: float = 0.1) -> Transcript | None:
        try:
            text = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        return Transcript(text=text, source=SOURCE_TYPED)


def make_listener(config: dict):
    engine = config.get("engine", "typed")
    if engine == "scripted":
        if "script" in config:
            return ScriptedListener.from_file(config["script"])
        return ScriptedListener(config.get("utterances", []))
    if engine == "typed":
        return TypedListener()
    raise ListenerError(f"unknown listener engine '{engine}'")
