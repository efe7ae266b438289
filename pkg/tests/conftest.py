import pytest

from voicearm.world import Pose, Quat, RobotSimulator, Vec3, WorldModel, WorkspaceBox


def make_world(objects=None, start=(0.4, 0.0, 0.5)) -> WorldModel:
    model = WorldModel()
    model.ee_pose = Pose(Vec3(*start), Quat())
    for name, pos in (objects or {}).items():
        model.objects[name] = Pose(Vec3(*pos), Quat())
    return model


@pytest.fixture
def world() -> WorldModel:
    return make_world({"big_bolt": (0.5, -0.2, 0.1)})


@pytest.fixture
def sim(world) -> RobotSimulator:
    return RobotSimulator(world)
