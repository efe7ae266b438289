"""Session configuration: JSON file plus environment overrides."""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .executor import ExecutionLimits

ENV_LLM_URL = "VOICEARM_LLM_URL"
ENV_LLM_TOKEN = "VOICEARM_LLM_TOKEN"
ENV_API_TOKEN = "VOICEARM_API_TOKEN"

DEFAULT_KEYWORDS = {
    "stop": "stop",
    "record policy": "record_policy",
    "save policy": "save_policy",
    "discard recording": "discard_recording",
    "clear context": "clear_context",
}


@dataclass
class SessionConfig:
    keywords: dict = field(default_factory=lambda: dict(DEFAULT_KEYWORDS))
    context_capacity: int = 3
    approval_required: bool | None = None  # None: on for endpoints, off for mock
    listener: dict = field(default_factory=lambda: {"engine": "typed"})
    llm: dict = field(default_factory=dict)  # {"fixture": path} or {"url": ..., "model": ...}
    world_file: str = ""
    registry_file: str = ""
    policies_dir: str = ""
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    time_dilation: float = 1.0
    motion_mode: str = "instant"
    motion_time_scale: float = 1.0

    @property
    def uses_endpoint(self) -> bool:
        return bool(self.llm.get("url"))

    def approval_enabled(self) -> bool:
        if self.approval_required is not None:
            return self.approval_required
        return self.uses_endpoint


def load_config(path) -> SessionConfig:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    cfg = SessionConfig()
    if "keywords" in data:
        cfg.keywords = dict(data["keywords"])
    cfg.context_capacity = int(data.get("context_capacity", cfg.context_capacity))
    if "approval_required" in data:
        cfg.approval_required = bool(data["approval_required"])
    if "listener" in data:
        cfg.listener = dict(data["listener"])
    if "llm" in data:
        cfg.llm = dict(data["llm"])
    cfg.time_dilation = float(data.get("time_dilation", cfg.time_dilation))
    cfg.motion_mode = data.get("motion_mode", cfg.motion_mode)
    cfg.motion_time_scale = float(data.get("motion_time_scale", cfg.motion_time_scale))

    def resolve(key: str) -> str:
        value = data.get(key, "")
        if not value:
            return ""
        p = Path(value)
        return str(p if p.is_absolute() else path.parent / p)

    cfg.world_file = resolve("world_file")
    cfg.registry_file = resolve("registry_file")
    cfg.policies_dir = resolve("policies_dir") or (
        str(Path(cfg.registry_file).parent) if cfg.registry_file else ""
    )

    if "limits" in data:
        raw = data["limits"]
        cfg.limits = ExecutionLimits(
            wall_deadline=float(raw.get("wall_deadline", 10.0)),
            max_steps=int(raw.get("max_steps", 100_000)),
            max_loop_iterations=int(raw.get("max_loop_iterations", 10_000)),
        )

    url = os.environ.get(ENV_LLM_URL)
    if url:
        cfg.llm["url"] = url
        cfg.llm.pop("fixture", None)
    token = os.environ.get(ENV_LLM_TOKEN)
    if token:
        cfg.llm["token"] = token
    return cfg
