"""Scripted collaborative pump-assembly session.

Drives the full pipeline end to end: inspections through the taught
full_check policy, context reuse ("Check again."), relative motion, the
hand-written pick and handover policies, and operator-side world edits
standing in for the human placing parts.
"""

import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .codegen import MockCompletionClient
from .policybank import load_registry
from .resources import data_path
from .session import Session
from .world import Pose, Quat, RobotSimulator, Vec3, load_world

COVER_POSE = Pose(Vec3(0.5, 0.1, 0.17), Quat())
BOLTS_POSE = Pose(Vec3(0.5, 0.1, 0.16), Quat())


@dataclass
class DemoStep:
    kind: str  # "command" | "place"
    value: str
    pose: Pose | None = None


PUMP_SCRIPT = [
    DemoStep("command", "Do a full inspection."),
    DemoStep("place", "cover", COVER_POSE),
    DemoStep("command", "Check again."),
    DemoStep("command", "30cm to the left."),
    DemoStep("command", "Pick up the big bolt."),
    DemoStep("command", "Give it to me."),
    DemoStep("place", "bolts", BOLTS_POSE),
    DemoStep("command", "Check again."),
    DemoStep("command", "Do a full inspection."),
]


@dataclass
class DemoResult:
    say_outputs: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    events: list = field(default_factory=list)
    world: object = None


def build_demo_session(workdir=None, event_sink=None) -> Session:
    """Session against the pump world with the bundled policies and mocks.

    Policy files are copied into workdir (a temp dir by default) so a
    recording saved during the demo never mutates the bundled data.
    """
    workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="voicearm-demo-"))
    src = data_path("policies")
    for path in src.iterdir():
        shutil.copy(path, workdir / path.name)
    registry = load_registry(workdir / "registry.json")
    sim = RobotSimulator(load_world(data_path("pump_world.json")))
    return Session(
        sim=sim,
        registry=registry,
        client=MockCompletionClient.from_file(data_path("golden_fixture.json")),
        preamble=data_path("preamble.txt").read_text(encoding="utf-8"),
        time_dilation=0.0,
        policies_dir=str(workdir),
        event_sink=event_sink,
    )


def run_pump_demo(session: Session | None = None, steps=None, printer=None) -> DemoResult:
    result = DemoResult()

    def sink(event_type, payload):
        result.events.append((event_type, payload))
        if event_type == "say":
            result.say_outputs.append(payload["text"])
            if printer:
                printer(f"robot: {payload['text']}")

    if session is None:
        session = build_demo_session(event_sink=sink)
    else:
        session._event_sink = sink

    for step in steps or PUMP_SCRIPT:
        if step.kind == "place":
            session.sim.place_object(step.value, step.pose)
            if printer:
                printer(f"operator places the {step.value}")
            continue
        if printer:
            printer(f"operator: {step.value}")
        report = session.handle_transcript(step.value)
        result.reports.append(report)
        if not report.ok:
            if printer:
                printer(f"  -> {report.status.value}: {report.error_detail}")
            break

    result.world = session.sim.model
    return result


EXPECTED_SAY_SEQUENCE = [
    "Can't find the cover!",
    "Missing bolts!",
    "All parts found!",
    "Missing bolts!",
    "In handover position, releasing in two seconds!",
    "All parts found!",
    "All bolts secured!",
    "All parts found!",
    "All bolts secured!",
]
