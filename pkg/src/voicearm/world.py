"""Simulated arm and world: poses, waypoint motion, gripper, detection, speech.

Coordinate conventions (all bundled examples and oracles follow them):
units are meters; "left" decreases y, "right" increases y, "up" increases z,
"down" decreases z, "forward" increases x, "back" decreases x. Rotations are
yaw about the world z-axis and "clockwise" is negative yaw seen from +z.
"""

import json
import math
import threading
import time
from dataclasses import dataclass, field

from .executor.report import ExecutionReport

QUAT_NORM_TOL = 1e-9


class WorldError(Exception):
    """A controller request the simulated world refuses."""


@dataclass
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def copy(self) -> "Vec3":
        return Vec3(self.x, self.y, self.z)

    def distance_to(self, other: "Vec3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


@dataclass
class Quat:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def copy(self) -> "Quat":
        return Quat(self.w, self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def yaw(self) -> float:
        """Rotation about the world z-axis, radians."""
        return math.atan2(
            2.0 * (self.w * self.z + self.x * self.y),
            1.0 - 2.0 * (self.y**2 + self.z**2),
        )


@dataclass
class Pose:
    position: Vec3 = field(default_factory=Vec3)
    orientation: Quat = field(default_factory=Quat)

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.orientation.copy())

    def to_dict(self) -> dict:
        return {
            "position": [self.position.x, self.position.y, self.position.z],
            "orientation": [
                self.orientation.w,
                self.orientation.x,
                self.orientation.y,
                self.orientation.z,
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        px, py, pz = data["position"]
        qw, qx, qy, qz = data["orientation"]
        pose = cls(Vec3(px, py, pz), Quat(qw, qx, qy, qz))
        if abs(pose.orientation.norm() - 1.0) > QUAT_NORM_TOL:
            raise WorldError(
                f"orientation quaternion is not unit length: {data['orientation']}"
            )
        return pose


def identity_pose() -> Pose:
    return Pose()


@dataclass
class WorkspaceBox:
    min_corner: Vec3 = field(default_factory=lambda: Vec3(-1.0, -1.0, -1.0))
    max_corner: Vec3 = field(default_factory=lambda: Vec3(1.0, 1.0, 1.0))

    def contains(self, p: Vec3) -> bool:
        return (
            self.min_corner.x <= p.x <= self.max_corner.x
            and self.min_corner.y <= p.y <= self.max_corner.y
            and self.min_corner.z <= p.z <= self.max_corner.z
        )


GRIPPER_OPEN = "open"
GRIPPER_CLOSED = "closed"


@dataclass
class WorldModel:
    objects: dict = field(default_factory=dict)  # name -> Pose
    ee_pose: Pose = field(default_factory=Pose)
    gripper: str = GRIPPER_OPEN
    held_object: str | None = None
    workspace: WorkspaceBox = field(default_factory=WorkspaceBox)

    def snapshot(self) -> dict:
        """Serializable snapshot; restore() brings the model back bit-exactly."""
        return {
            "objects": {name: pose.to_dict() for name, pose in sorted(self.objects.items())},
            "ee_pose": self.ee_pose.to_dict(),
            "gripper": self.gripper,
            "held_object": self.held_object,
            "workspace": {
                "min": [self.workspace.min_corner.x, self.workspace.min_corner.y, self.workspace.min_corner.z],
                "max": [self.workspace.max_corner.x, self.workspace.max_corner.y, self.workspace.max_corner.z],
            },
        }

    def restore(self, snap: dict) -> None:
        self.objects = {name: Pose.from_dict(d) for name, d in snap["objects"].items()}
        self.ee_pose = Pose.from_dict(snap["ee_pose"])
        self.gripper = snap["gripper"]
        self.held_object = snap["held_object"]
        mn, mx = snap["workspace"]["min"], snap["workspace"]["max"]
        self.workspace = WorkspaceBox(Vec3(*mn), Vec3(*mx))


def load_world(path) -> WorldModel:
    """Read a world file: start pose, named objects with poses, workspace box."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    model = WorldModel()
    model.ee_pose = Pose.from_dict(data["start_pose"])
    for name, pose_data in data.get("objects", {}).items():
        model.objects[name] = Pose.from_dict(pose_data)
    if "workspace" in data:
        mn, mx = data["workspace"]["min"], data["workspace"]["max"]
        model.workspace = WorkspaceBox(Vec3(*mn), Vec3(*mx))
    return model


MOTION_INSTANT = "instant"
MOTION_TIMED = "timed"


@dataclass
class MotionResult:
    completed: bool
    traversed: list = field(default_factory=list)


class RobotSimulator:
    """Drives a WorldModel: waypoint queue, gripper attachment, event hooks.

    Pose and say hooks fire synchronously on the executing thread; stop()
    may be called from any thread (it only sets the abort event and clears
    the queue under the state lock).
    """

    def __init__(
        self,
        model: WorldModel,
        *,
        mode: str = MOTION_INSTANT,
        speed: float = 0.1,
        tick_hz: float = 20.0,
        time_scale: float = 1.0,
        grasp_radius: float = 0.05,
    ):
        self.model = model
        self.mode = mode
        self.speed = speed
        self.tick_hz = tick_hz
        self.time_scale = time_scale
        self.grasp_radius = grasp_radius
        self.abort_event = threading.Event()
        self.pose_listeners = []  # callables taking a Pose
        self.say_listeners = []  # callables taking a string
        self._lock = threading.Lock()
        self._queue: list = []
        self._held_offset: Vec3 | None = None

    # -- queue and motion -------------------------------------------------

    def add_waypoint(self, pose: Pose) -> None:
        if not self.model.workspace.contains(pose.position):
            raise WorldError(
                f"waypoint ({pose.position.x:.3f}, {pose.position.y:.3f}, "
                f"{pose.position.z:.3f}) is outside the workspace"
            )
        norm = pose.orientation.norm()
        if abs(norm - 1.0) > 1e-6:
            raise WorldError(f"waypoint orientation is not unit length (|q|={norm:.6f})")
        wp = pose.copy()
        # Snap tiny float drift so stored poses keep the unit invariant.
        wp.orientation.w /= norm
        wp.orientation.x /= norm
        wp.orientation.y /= norm
        wp.orientation.z /= norm
        with self._lock:
            self._queue.append(wp)

    def queued_waypoints(self) -> int:
        with self._lock:
            return len(self._queue)

    def go(self) -> MotionResult:
        with self._lock:
            if not self._queue:
                raise WorldError("go() called with an empty waypoint queue")
            waypoints = self._queue
            self._queue = []
        traversed = []
        for wp in waypoints:
            if self.abort_event.is_set():
                return MotionResult(completed=False, traversed=traversed)
            if self.mode == MOTION_TIMED:
                finished = self._traverse_timed(wp)
                if not finished:
                    return MotionResult(completed=False, traversed=traversed)
            else:
                self._set_ee(wp)
                self._emit_pose()
            traversed.append(wp.copy())
        return MotionResult(completed=True, traversed=traversed)

    def _traverse_timed(self, target: Pose) -> bool:
        start = self.model.ee_pose.copy()
        dist = start.position.distance_to(target.position)
        duration = dist / self.speed if self.speed > 0 else 0.0
        ticks = max(1, int(math.ceil(duration * self.tick_hz)))
        for i in range(1, ticks + 1):
            if self.abort_event.is_set():
                return False
            alpha = i / ticks
            self._set_ee(_interpolate(start, target, alpha))
            self._emit_pose()
            if self.time_scale > 0:
                time.sleep((1.0 / self.tick_hz) * self.time_scale)
        return True

    def _set_ee(self, pose: Pose) -> None:
        with self._lock:
            self.model.ee_pose = pose.copy()
            if self.model.held_object is not None and self._held_offset is not None:
                held = self.model.objects[self.model.held_object]
                held.position.x = pose.position.x + self._held_offset.x
                held.position.y = pose.position.y + self._held_offset.y
                held.position.z = pose.position.z + self._held_offset.z

    def stop(self) -> None:
        """Halt any in-flight traversal and drop pending waypoints."""
        self.abort_event.set()
        with self._lock:
            self._queue = []

    def reset_abort(self) -> None:
        self.abort_event.clear()

    # -- perception and interaction ---------------------------------------

    def get_pose(self) -> Pose:
        with self._lock:
            return self.model.ee_pose.copy()

    def find(self, name: str):
        with self._lock:
            pose = self.model.objects.get(name)
            if pose is None:
                return identity_pose(), False
            return pose.copy(), True

    def say(self, text: str) -> None:
        for listener in self.say_listeners:
            listener(text)

    def open_hand(self) -> str | None:
        with self._lock:
            released = self.model.held_object
            self.model.gripper = GRIPPER_OPEN
            self.model.held_object = None
            self._held_offset = None
        return released

    def close_hand(self) -> str | None:
        with self._lock:
            self.model.gripper = GRIPPER_CLOSED
            nearest, best = None, None
            for name, pose in self.model.objects.items():
                d = pose.position.distance_to(self.model.ee_pose.position)
                if d <= self.grasp_radius and (best is None or d < best):
                    nearest, best = name, d
            if nearest is not None:
                self.model.held_object = nearest
                held = self.model.objects[nearest].position
                ee = self.model.ee_pose.position
                self._held_offset = Vec3(held.x - ee.x, held.y - ee.y, held.z - ee.z)
        return nearest

    def place_object(self, name: str, pose: Pose) -> None:
        """Operator-side world edit (a human putting a part down)."""
        with self._lock:
            self.model.objects[name] = pose.copy()

    def remove_object(self, name: str) -> None:
        with self._lock:
            self.model.objects.pop(name, None)
            if self.model.held_object == name:
                self.model.held_object = None
                self._held_offset = None

    def _emit_pose(self) -> None:
        pose = self.get_pose()
        for listener in self.pose_listeners:
            listener(pose)


def _interpolate(a: Pose, b: Pose, alpha: float) -> Pose:
    pos = Vec3(
        a.position.x + (b.position.x - a.position.x) * alpha,
        a.position.y + (b.position.y - a.position.y) * alpha,
        a.position.z + (b.position.z - a.position.z) * alpha,
    )
    # Normalized lerp; adequate for the small reorientations scripts perform.
    qw = a.orientation.w + (b.orientation.w - a.orientation.w) * alpha
    qx = a.orientation.x + (b.orientation.x - a.orientation.x) * alpha
    qy = a.orientation.y + (b.orientation.y - a.orientation.y) * alpha
    qz = a.orientation.z + (b.orientation.z - a.orientation.z) * alpha
    norm = math.sqrt(qw**2 + qx**2 + qy**2 + qz**2)
    if norm == 0:
        return Pose(pos, a.orientation.copy())
    return Pose(pos, Quat(qw / norm, qx / norm, qy / norm, qz / norm))


class RobotHandle:
    """The controller surface a running program sees.

    Routes every effect through the simulator and logs speech, motion and
    gripper activity into the active ExecutionReport.
    """

    METHODS = frozenset(
        {"get_pose", "add_waypoint", "go", "stop", "find", "say", "open_hand", "close_hand"}
    )

    def __init__(self, sim: RobotSimulator, report: ExecutionReport):
        self.sim = sim
        self.report = report

    def get_pose(self) -> Pose:
        return self.sim.get_pose()

    def add_waypoint(self, pose) -> None:
        if not isinstance(pose, Pose):
            raise WorldError("add_waypoint expects a pose")
        self.sim.add_waypoint(pose)

    def go(self) -> None:
        result = self.sim.go()
        self.report.motion_log.extend(p.copy() for p in result.traversed)

    def stop(self) -> None:
        self.sim.stop()

    def find(self, name):
        if not isinstance(name, str):
            raise WorldError("find expects an object name")
        return self.sim.find(name)

    def say(self, text) -> None:
        if not isinstance(text, str):
            raise WorldError("say expects a string")
        self.report.say_outputs.append(text)
        self.sim.say(text)

    def open_hand(self) -> None:
        released = self.sim.open_hand()
        self.report.gripper_events.append(("open", released))

    def close_hand(self) -> None:
        grasped = self.sim.close_hand()
        self.report.gripper_events.append(("close", grasped))
