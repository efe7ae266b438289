import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from voicearm.codegen import LMP
from voicearm.policybank import (
    Policy,
    PolicyError,
    begin_recording,
    execution_bindings,
    finalize_recording,
    load_registry,
    parse_policy_file,
    prompt_extension,
    record_step,
    serialize_policy,
)
from voicearm.resources import data_path


@pytest.fixture()
def registry(tmp_path):
    # Work on a scratch copy so saves never touch the bundled files.
    src = data_path("policies")
    for name in ("handover", "pick", "parts_check", "bolts_check", "full_check"):
        (tmp_path / f"{name}.policy").write_text(
            (src / f"{name}.policy").read_text(encoding="utf-8"), encoding="utf-8"
        )
    (tmp_path / "registry.json").write_text(
        (src / "registry.json").read_text(encoding="utf-8"), encoding="utf-8"
    )
    return load_registry(tmp_path / "registry.json")


def test_parse_handover_listing():
    text = data_path("policies/handover.policy").read_text(encoding="utf-8")
    policy = parse_policy_file(text)
    assert policy.name == "handover"
    assert policy.imports == ["time"]
    assert policy.entry_function == "handover"
    assert policy.hint_utterance == "give me the held item"
    assert policy.alias_function == "give_me_the_held_item"
    assert "robot.open_hand()" in policy.body_source


def test_parse_parts_check_listing():
    text = data_path("policies/parts_check.policy").read_text(encoding="utf-8")
    policy = parse_policy_file(text)
    assert policy.imports == []
    assert policy.entry_function == "parts_check"
    assert policy.hint_utterance == "inspect all parts"
    assert policy.alias_function == "inspect_all_parts"


@pytest.mark.parametrize(
    "mutation, message",
    [
        (lambda t: t.replace("#BODY", ""), "BODY"),
        (lambda t: t.replace("# HINT", ""), "HINT"),
        (lambda t: t + "\n#BODY\n", "duplicate"),
        (lambda t: t.replace("    handover(robot)", "    handover(robot)\n    handover(robot)"), "alias body"),
        (lambda t: t.replace("# define function: give me the held item", "# hint text"), "define function"),
    ],
)
def test_malformed_policy_rejected(mutation, message):
    text = data_path("policies/handover.policy").read_text(encoding="utf-8")
    with pytest.raises(PolicyError, match=message):
        parse_policy_file(mutation(text))


def test_import_outside_whitelist_rejected():
    text = "import os\n#BODY\ndef f(robot):\n    robot.go()\n# HINT\n# define function: eff\ndef eff(robot):\n    f(robot)\n# end of function\n"
    with pytest.raises(PolicyError, match="whitelist"):
        parse_policy_file(text)


def test_serialize_round_trip_handover():
    text = data_path("policies/handover.policy").read_text(encoding="utf-8")
    policy = parse_policy_file(text)
    again = parse_policy_file(serialize_policy(policy))
    assert again.structural_key() == policy.structural_key()


def test_serialize_no_imports_starts_with_body_tag():
    text = data_path("policies/parts_check.policy").read_text(encoding="utf-8")
    policy = parse_policy_file(text)
    assert serialize_policy(policy).startswith("#BODY\n")


_WORDS = st.lists(
    st.sampled_from(["move", "turn", "grab", "lift", "wait", "place", "scan"]),
    min_size=1,
    max_size=4,
)


@given(words=_WORDS, imports=st.sets(st.sampled_from(["time", "math"])), zap=st.integers(1, 9))
def test_serialize_parse_round_trip_property(words, imports, zap):
    entry = "_".join(words) + f"_{zap}"
    hint = " ".join(words) + " now"
    policy = Policy(
        name=entry,
        imports=sorted(imports),
        body_source=(
            f"def helper_{zap}(robot):\n    robot.say('step')\n\n"
            f"def {entry}(robot):\n    helper_{zap}(robot)\n    robot.go()"
        ),
        entry_function=entry,
        hint_utterance=hint,
        alias_function="_".join(words) + "_now",
    )
    again = parse_policy_file(serialize_policy(policy))
    assert again.structural_key() == policy.structural_key()


def test_load_registry_counts(registry):
    assert registry.names() == ["handover", "pick", "parts_check", "bolts_check", "full_check"]
    assert len(registry.loaded) == 5
    assert registry.errors == {}
    assert registry.get("full_check").learned is True
    assert registry.get("handover").learned is False


def test_disabled_entry_listed_but_not_loaded(tmp_path):
    src = data_path("policies")
    (tmp_path / "handover.policy").write_text(
        (src / "handover.policy").read_text(encoding="utf-8")
    )
    (tmp_path / "registry.json").write_text(
        json.dumps(
            {"policies": [{"name": "handover", "file": "handover.policy", "enabled": False}]}
        )
    )
    registry = load_registry(tmp_path / "registry.json")
    assert registry.names() == ["handover"]
    assert registry.loaded == {}
    assert prompt_extension(registry) == ""
    assert execution_bindings(registry) == {}


def test_corrupt_file_reported_per_entry(tmp_path):
    src = data_path("policies")
    (tmp_path / "handover.policy").write_text(
        (src / "handover.policy").read_text(encoding="utf-8")
    )
    (tmp_path / "parts_check.policy").write_text(
        (src / "parts_check.policy").read_text(encoding="utf-8")
    )
    (tmp_path / "broken.policy").write_text("def nope(robot):\n    robot.go()\n")
    (tmp_path / "registry.json").write_text(
        json.dumps(
            {
                "policies": [
                    {"name": "handover", "file": "handover.policy", "enabled": True},
                    {"name": "broken", "file": "broken.policy", "enabled": True},
                    {"name": "parts_check", "file": "parts_check.policy", "enabled": True},
                ]
            }
        )
    )
    registry = load_registry(tmp_path / "registry.json")
    assert sorted(registry.loaded) == ["handover", "parts_check"]
    assert "broken" in registry.errors


def test_prompt_extension_contents(registry):
    ext = prompt_extension(registry)
    assert "def give_me_the_held_item(robot):" in ext
    assert ext.count("import time") == 1  # handover and pick both import it
    assert "# define function: inspect all parts" in ext
    # Body lines never leak into prompts.
    assert "robot.open_hand()" not in ext
    assert "robot.find('pipe')" not in ext
    # Registry order drives extension order.
    assert ext.index("give_me_the_held_item") < ext.index("inspect_all_parts")


def test_prompt_extension_empty_registry(tmp_path):
    (tmp_path / "registry.json").write_text(json.dumps({"policies": []}))
    assert prompt_extension(load_registry(tmp_path / "registry.json")) == ""


def test_execution_bindings_cover_bodies_and_aliases(registry):
    bindings = execution_bindings(registry)
    assert "handover" in bindings
    assert "give_me_the_held_item" in bindings
    assert "full_check" in bindings
    assert "do_a_full_inspection" in bindings
    # full_check's calls into parts_check/bolts_check resolve via their bindings
    assert "parts_check" in bindings and "bolts_check" in bindings


def test_binding_collision_is_explicit(tmp_path):
    a = "#BODY\ndef utility(robot):\n    robot.go()\n# HINT\n# define function: use tool a\ndef use_tool_a(robot):\n    utility(robot)\n# end of function\n"
    b = "#BODY\ndef utility(robot):\n    robot.stop()\n# HINT\n# define function: use tool b\ndef use_tool_b(robot):\n    utility(robot)\n# end of function\n"
    (tmp_path / "a.policy").write_text(a)
    (tmp_path / "b.policy").write_text(b)
    (tmp_path / "registry.json").write_text(
        json.dumps(
            {
                "policies": [
                    {"name": "tool_a", "file": "a.policy", "enabled": True},
                    {"name": "tool_b", "file": "b.policy", "enabled": True},
                ]
            }
        )
    )
    registry = load_registry(tmp_path / "registry.json")
    with pytest.raises(PolicyError, match="utility"):
        execution_bindings(registry)


def _lmp(utterance, code, top):
    return LMP(utterance=utterance, code_text=code, top_level_function=top)


def test_recording_single_step_matches_saved_structure(registry, tmp_path):
    session = begin_recording()
    record_step(
        session,
        _lmp(
            "If you see a pipe and a cover, say all parts found, otherwise tell me what's missing.",
            data_path("policies/parts_check.policy")
            .read_text(encoding="utf-8")
            .split("#BODY\n")[1]
            .split("# wrapper added on save")[0]
            .strip("\n")
            + "\n",
            "if_you_see_a_pipe_and_a_cover_say_all_parts_found_otherwise_tell_me_what_s_missing",
        ),
    )
    policy = finalize_recording(session, "parts check two", "inspect the parts", registry, tmp_path)
    assert policy.entry_function == "parts_check_two"
    assert policy.alias_function == "inspect_the_parts"
    assert policy.learned is True
    program_names = policy.body_function_names()
    assert program_names[-1] == "parts_check_two"
    # The saved file parses back to the same structure.
    reloaded = parse_policy_file((tmp_path / "parts_check_two.policy").read_text(), name="parts_check_two", learned=True)
    assert reloaded.structural_key() == policy.structural_key()


def test_recording_three_steps_wrapper_order(registry, tmp_path):
    session = begin_recording()
    record_step(session, _lmp("step one", "def step_one(robot):\n    robot.go()\n", "step_one"))
    record_step(session, _lmp("step two", "def step_two(robot):\n    robot.stop()\n", "step_two"))
    record_step(session, _lmp("step three", "def step_three(robot):\n    robot.say('x')\n", "step_three"))
    policy = finalize_recording(session, "combo move", "do the combo", registry, tmp_path)
    lines = [l.strip() for l in policy.body_source.splitlines() if l.strip()]
    wrapper_at = lines.index("def combo_move(robot):")
    assert lines[wrapper_at + 1 : wrapper_at + 4] == [
        "step_one(robot)",
        "step_two(robot)",
        "step_three(robot)",
    ]


def test_finalize_empty_recording_fails(registry, tmp_path):
    with pytest.raises(PolicyError, match="no steps"):
        finalize_recording(begin_recording(), "nothing", "do nothing", registry, tmp_path)


def test_finalize_name_collision_fails(registry, tmp_path):
    session = begin_recording()
    record_step(session, _lmp("step", "def step(robot):\n    robot.go()\n", "step"))
    with pytest.raises(PolicyError, match="already registered"):
        finalize_recording(session, "full check", "again", registry, tmp_path)


def test_saved_policy_reloads_after_restart(registry, tmp_path):
    session = begin_recording()
    record_step(session, _lmp("wave around", "def wave_around(robot):\n    robot.go()\n", "wave_around"))
    saved = finalize_recording(session, "wave combo", "wave at me", registry, tmp_path)

    # Simulate a process restart by reloading the registry file from disk.
    reloaded = load_registry(tmp_path / "registry.json")
    assert "wave_combo" in reloaded.loaded
    assert reloaded.get("wave_combo").structural_key() == saved.structural_key()
    assert reloaded.get("wave_combo").learned is True
