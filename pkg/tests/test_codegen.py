import json

import pytest

from voicearm.codegen import (
    EmptyCompletionError,
    LMP,
    MockCompletionClient,
    NoCannedResponseError,
    PromptBundle,
    UnresolvedNamesError,
    build_prompt,
    complete,
    directive_line,
    resolve_and_assemble,
)
from voicearm.executor import detect_undefined_calls, parse_program
from voicearm.resources import data_path, load_preamble


@pytest.fixture(scope="module")
def golden() -> dict:
    with open(data_path("golden_fixture.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def client(golden) -> MockCompletionClient:
    return MockCompletionClient(golden)


def test_directive_format():
    assert directive_line("tell me the first law of robotics") == (
        "#define function: tell me the first law of robotics"
    )
    assert directive_line("Move a little down.") == "#define function: move a little down"


def test_prompt_order_and_final_directive():
    bundle = build_prompt("# preamble", "# hints", [], "Move a little down.")
    text = bundle.render()
    assert text.startswith("# preamble")
    assert text.rstrip("\n").endswith("#define function: move a little down")
    assert text.index("# preamble") < text.index("# hints")


def test_empty_context_leaves_no_context_segment():
    bundle = build_prompt("# preamble", "", [], "go")
    assert bundle.context_code == ""
    assert bundle.render() == "# preamble\n\n#define function: go\n"


def test_prompt_assembly_is_deterministic():
    context = [LMP("prior", "def prior(robot):\n    robot.go()\n", "prior")]
    first = build_prompt(load_preamble(), "# ext", context, "Move a little down.").render()
    second = build_prompt(load_preamble(), "# ext", context, "Move a little down.").render()
    assert first == second


def test_empty_preamble_rejected():
    with pytest.raises(ValueError):
        build_prompt("", "", [], "go")


def test_complete_truncates_at_stop_sequence():
    class OneShot:
        def complete(self, prompt):
            return "def f(robot):\n    robot.go()\n#end of function\ndef junk(robot):..."

    assert complete("ignored", OneShot()) == "def f(robot):\n    robot.go()"


def test_complete_rejects_empty():
    class Silent:
        def complete(self, prompt):
            return "\n\n"

    with pytest.raises(EmptyCompletionError):
        complete("ignored", Silent())


def test_mock_client_answers_fig_directive(client):
    prompt = "stuff\n#define function: tell me the first law of robotics\n"
    text = client.complete(prompt)
    assert "def tell_me_the_first_law_of_robotics(robot):" in text
    assert "injure a human being" in text


def test_mock_client_unknown_directive(client):
    with pytest.raises(NoCannedResponseError):
        client.complete("#define function: juggle five balls\n")


def test_mock_client_records_elapsed(client):
    client.complete("#define function: move a little down\n")
    assert len(client.call_log) == 1
    assert client.call_log[0][1] > 0


def test_mock_client_rounds_sequence():
    fixture = {"练 practice": {"rounds": ["def a(robot):\n    robot.go()", "def b(robot):\n    robot.go()"]}}
    client = MockCompletionClient(fixture)
    prompt = "#define function: 练 practice\n"
    assert "def a" in client.complete(prompt)
    assert "def b" in client.complete(prompt)
    assert "def b" in client.complete(prompt)  # last round repeats


def test_resolve_single_round_unchanged(client):
    bundle = build_prompt(load_preamble(), "", [], "Move a little down.")
    lmp = resolve_and_assemble("Move a little down.", bundle, client, set())
    assert lmp.top_level_function == "move_a_little_down"
    assert lmp.dependency_functions == []
    assert "waypoint.position.z -= 0.05" in lmp.code_text
    assert detect_undefined_calls(parse_program(lmp.code_text), set()) == []


def test_resolve_two_stage_orders_dependencies_before_top(client):
    utterance = "Move a little down, and then draw a circle with radius 35 millimeters."
    bundle = build_prompt(load_preamble(), "", [], utterance)
    lmp = resolve_and_assemble(utterance, bundle, client, set())
    names = parse_program(lmp.code_text).function_names()
    assert names[-1] == lmp.top_level_function
    assert set(names[:-1]) == {"move_a_little_down", "draw_a_circle_of_radius_35_millimeters"}
    assert detect_undefined_calls(parse_program(lmp.code_text), set()) == []


def test_resolve_scripted_helper_on_round_two(client):
    bundle = build_prompt(load_preamble(), "", [], "Say hi and wave.")
    lmp = resolve_and_assemble("Say hi and wave.", bundle, client, set())
    names = parse_program(lmp.code_text).function_names()
    assert names == ["wave_hand", "say_hi_and_wave"]


def test_resolve_policy_names_count_as_known(client):
    bundle = build_prompt(load_preamble(), "", [], "Give it to me.")
    lmp = resolve_and_assemble("Give it to me.", bundle, client, {"handover"})
    assert lmp.dependency_functions == []
    assert "handover(robot)" in lmp.code_text


def test_resolve_fails_when_helper_never_defined():
    fixture = {
        "call the ghost": "def call_the_ghost(robot):\n    ghost_routine(robot)\n",
        "ghost routine": "def unrelated(robot):\n    robot.go()\n",
    }
    client = MockCompletionClient(fixture)
    bundle = build_prompt("# p", "", [], "Call the ghost.")
    with pytest.raises(UnresolvedNamesError):
        resolve_and_assemble("Call the ghost.", bundle, client, set())


def test_resolve_respects_max_rounds():
    fixture = {
        "deep dive": "def deep_dive(robot):\n    level_one(robot)\n",
        "level one": "def level_one(robot):\n    level_two(robot)\n",
        "level two": "def level_two(robot):\n    level_three(robot)\n",
        "level three": "def level_three(robot):\n    robot.go()\n",
    }
    client = MockCompletionClient(fixture)
    bundle = build_prompt("# p", "", [], "Deep dive.")
    with pytest.raises(UnresolvedNamesError):
        resolve_and_assemble("Deep dive.", bundle, client, set(), max_rounds=2)

    client = MockCompletionClient(fixture)
    lmp = resolve_and_assemble("Deep dive.", bundle, client, set(), max_rounds=4)
    names = parse_program(lmp.code_text).function_names()
    assert names[-1] == "deep_dive"


def test_generation_is_reproducible(golden):
    bundle = build_prompt(load_preamble(), "", [], "Draw a small circle.")
    first = resolve_and_assemble(
        "Draw a small circle.", bundle, MockCompletionClient(golden), set()
    )
    second = resolve_and_assemble(
        "Draw a small circle.", bundle, MockCompletionClient(golden), set()
    )
    assert first.code_text == second.code_text
    assert first.top_level_function == second.top_level_function
