"""Acceptance suite: one test per release criterion, one printed verdict each.

Run with `pytest -s tests/test_acceptance.py` to see the verdict lines.
"""

import contextlib
import csv
import io
import json
import math
import pathlib
import tempfile
import time

from voicearm.bench import (
    load_cases,
    mock_client_factory,
    run_suite,
    summarize,
    write_csv,
)
from voicearm.codegen import MockCompletionClient, build_prompt, resolve_and_assemble
from voicearm.demo import EXPECTED_SAY_SEQUENCE, run_pump_demo
from voicearm.executor import (
    ExecutionLimits,
    ExecutionStatus,
    detect_undefined_calls,
    parse_program,
)
from voicearm.policybank import (
    load_registry,
    parse_policy_file,
    prompt_extension,
    serialize_policy,
)
from voicearm.resources import data_path, load_preamble
from voicearm.session import Session
from voicearm.world import RobotSimulator, load_world


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE  {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE  {name}: PASS", flush=True)


def golden_fixture() -> dict:
    with open(data_path("golden_fixture.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def scratch_registry(tmp_path, names=("handover", "pick", "parts_check", "bolts_check", "full_check")):
    tmp_path.mkdir(parents=True, exist_ok=True)
    src = data_path("policies")
    entries = []
    bundled = json.loads((src / "registry.json").read_text())["policies"]
    for item in bundled:
        if item["name"] not in names:
            continue
        (tmp_path / item["file"]).write_text((src / item["file"]).read_text(encoding="utf-8"))
        entries.append(item)
    (tmp_path / "registry.json").write_text(json.dumps({"policies": entries}))
    return load_registry(tmp_path / "registry.json")


def make_session(tmp_path, world="pump_world.json", limits=None, registry_names=None, **kw):
    registry = scratch_registry(
        tmp_path,
        registry_names or ("handover", "pick", "parts_check", "bolts_check", "full_check"),
    )
    return Session(
        sim=RobotSimulator(load_world(data_path(world))),
        registry=registry,
        client=MockCompletionClient(golden_fixture()),
        preamble=load_preamble(),
        limits=limits or ExecutionLimits(),
        time_dilation=0.0,
        policies_dir=str(tmp_path),
        **kw,
    )


def test_golden_listings_end_to_end(tmp_path):
    with criterion("golden listings end-to-end"):
        started = time.monotonic()

        # twenty centimeters to the left: y -0.2
        session = make_session(tmp_path / "a")
        report = session.run_command("Twenty centimeters to the left.")
        assert report.status is ExecutionStatus.OK
        assert abs(session.sim.model.ee_pose.position.y - (0.0 - 0.2)) <= 1e-6

        # move a little down: z -0.05
        session = make_session(tmp_path / "b")
        report = session.run_command("Move a little down.")
        assert report.status is ExecutionStatus.OK
        assert abs(session.sim.model.ee_pose.position.z - 0.45) <= 1e-6

        # can you see the big bolt: say output branches on world contents
        session = make_session(tmp_path / "c")  # pump world has the big bolt
        report = session.run_command("Can you see the big bolt?")
        assert report.say_outputs == ["Found the big bolt!"]
        session = make_session(tmp_path / "d")
        session.sim.remove_object("big_bolt")
        report = session.run_command("Can you see the big bolt?")
        assert report.say_outputs == ["Can't find the big bolt!"]

        # circle radius 0.035: 26 waypoints, net +x offset
        session = make_session(tmp_path / "e")
        start_x = session.sim.model.ee_pose.position.x
        report = session.run_command("Draw a circle with radius 35 millimeters.")
        assert report.status is ExecutionStatus.OK
        assert len(report.motion_log) == 26
        assert abs(session.sim.model.ee_pose.position.x - (start_x + 0.035)) <= 1e-6
        assert abs(session.sim.model.ee_pose.position.y - 0.0) <= 1e-6

        # double the radius with the prior circle retained as context: 0.1 offsets
        session = make_session(tmp_path / "f")
        first = session.run_command("Draw a small circle.")
        assert first.status is ExecutionStatus.OK
        assert len(session.state.context_lmps) == 1
        x_before = session.sim.model.ee_pose.position.x
        second = session.run_command("Double the radius.")
        assert second.status is ExecutionStatus.OK
        assert len(second.motion_log) == 26
        assert "0.1" in session.state.context_lmps[-1].code_text
        assert abs(session.sim.model.ee_pose.position.x - (x_before + 0.1)) <= 1e-6

        assert time.monotonic() - started < 5.0


def test_hierarchical_generation_orders_helper_first(tmp_path):
    with criterion("hierarchical generation"):
        client = MockCompletionClient(golden_fixture())
        bundle = build_prompt(load_preamble(), "", [], "Say hi and wave.")
        lmp = resolve_and_assemble("Say hi and wave.", bundle, client, set())
        program = parse_program(lmp.code_text)
        names = program.function_names()
        # helper defined before the top-level function, which comes last
        assert names == ["wave_hand", "say_hi_and_wave"]
        assert lmp.top_level_function == "say_hi_and_wave"
        assert detect_undefined_calls(program, set()) == []
        # two completion rounds were needed
        assert len(client.call_log) == 2

        # the two-stage motion command assembles dependencies above the top level
        client = MockCompletionClient(golden_fixture())
        utterance = "Move a little down, and then draw a circle with radius 35 millimeters."
        bundle = build_prompt(load_preamble(), "", [], utterance)
        lmp = resolve_and_assemble(utterance, bundle, client, set())
        names = parse_program(lmp.code_text).function_names()
        assert names[-1] == lmp.top_level_function
        assert set(names[:-1]) == {
            "move_a_little_down",
            "draw_a_circle_of_radius_35_millimeters",
        }
        assert detect_undefined_calls(parse_program(lmp.code_text), set()) == []


def test_policy_round_trip_and_prompt_extension(tmp_path):
    with criterion("policy round-trip"):
        for name in ("handover", "parts_check", "full_check"):
            text = data_path(f"policies/{name}.policy").read_text(encoding="utf-8")
            policy = parse_policy_file(text)
            reparsed = parse_policy_file(serialize_policy(policy))
            assert reparsed.structural_key() == policy.structural_key()

        registry = scratch_registry(tmp_path, names=("handover", "parts_check", "full_check"))
        ext = prompt_extension(registry)
        assert ext.count("import time") == 1
        for hint in ("give me the held item", "inspect all parts", "do a full inspection"):
            assert f"# define function: {hint}" in ext
        for alias in ("give_me_the_held_item", "inspect_all_parts", "do_a_full_inspection"):
            assert f"def {alias}(robot):" in ext
        # no body line leaks into the prompt
        for body_marker in ("robot.open_hand()", "robot.find('pipe')", "robot.find('assembly')"):
            assert body_marker not in ext


def test_teaching_equivalence_rebuilds_full_check(tmp_path):
    with criterion("teaching equivalence"):
        session = make_session(
            tmp_path, registry_names=("handover", "pick", "parts_check", "bolts_check")
        )
        session.handle_transcript("record policy")
        for utterance in (
            "Find the assembly and move thirty centimeters above it.",
            "Check parts.",
            "Check bolts.",
        ):
            report = session.handle_transcript(utterance)
            assert report.status is ExecutionStatus.OK, report.error_detail
        session.handle_transcript("save policy")
        session.handle_transcript("full check")
        taught = session.handle_transcript("do a full inspection")

        reference = parse_policy_file(
            data_path("policies/full_check.policy").read_text(encoding="utf-8")
        )
        assert taught.entry_function == reference.entry_function == "full_check"
        assert taught.alias_function == reference.alias_function == "do_a_full_inspection"
        assert taught.hint_utterance == reference.hint_utterance
        assert taught.body_function_names() == reference.body_function_names()
        # wrapper calls the three recorded top-level functions in recorded order
        wrapper_calls = [
            line.strip()
            for line in taught.body_source.splitlines()[
                taught.body_source.splitlines().index("def full_check(robot):") + 1 :
            ]
            if line.strip()
        ]
        assert wrapper_calls == [
            "find_the_assembly_and_move_thirty_centimeters_above_it(robot)",
            "check_parts(robot)",
            "check_bolts(robot)",
        ]
        # the persisted learned policy is byte-identical to the bundled listing
        saved = (tmp_path / "full_check.policy").read_text(encoding="utf-8")
        bundled = data_path("policies/full_check.policy").read_text(encoding="utf-8")
        assert saved == bundled


def test_pump_assembly_scripted_demo():
    with criterion("pump-assembly scripted demo"):
        result = run_pump_demo()
        assert all(r.ok for r in result.reports), [
            (r.status, r.error_detail) for r in result.reports if not r.ok
        ]
        assert result.say_outputs == EXPECTED_SAY_SEQUENCE
        world = result.world
        handover_pose = world.objects["handover"].position
        bolt_pose = world.objects["big_bolt"].position
        assert abs(bolt_pose.x - handover_pose.x) <= 1e-6
        assert abs(bolt_pose.y - handover_pose.y) <= 1e-6
        assert abs(bolt_pose.z - handover_pose.z) <= 1e-6
        assert world.held_object is None  # released after the handover


def test_sandbox_safety_adversarial_suite(tmp_path):
    with criterion("sandbox safety"):
        deadline = 0.5

        # unbounded loop: halts within wall_deadline + 0.5 s
        session = make_session(
            tmp_path / "loop",
            limits=ExecutionLimits(wall_deadline=deadline, max_steps=10**9, max_loop_iterations=10**9),
        )
        started = time.monotonic()
        report = session.run_command("Spin forever.")
        elapsed = time.monotonic() - started
        assert report.status is ExecutionStatus.TIMEOUT
        assert elapsed <= deadline + 0.5

        # unknown controller method: static check failure, zero world mutation
        session = make_session(tmp_path / "static")
        before = json.dumps(session.sim.model.snapshot(), sort_keys=True)
        report = session.run_command("Press the red button.")
        assert report.status is ExecutionStatus.STATIC_CHECK_FAILED
        assert "set_digital_output" in report.error_detail
        assert json.dumps(session.sim.model.snapshot(), sort_keys=True) == before

        # out-of-subset construct: parse error, zero world mutation
        session = make_session(tmp_path / "parse")
        before = json.dumps(session.sim.model.snapshot(), sort_keys=True)
        report = session.run_command("Use the clamp.")
        assert report.status is ExecutionStatus.PARSE_ERROR
        assert json.dumps(session.sim.model.snapshot(), sort_keys=True) == before


def test_bench_harness_full_fixture():
    with criterion("bench harness"):
        cases = load_cases(data_path("bench_cases.jsonl"))
        world = load_world(data_path("bench_world.json"))
        registry = load_registry(data_path("policies/registry.json"))
        records = run_suite(
            cases,
            10,
            mock_client_factory(data_path("bench_fixture.json")),
            world,
            registry=registry,
            preamble=load_preamble(),
        )
        assert len(records) == 500

        summary = summarize(records)
        assert summary["success_rate"] == 1.0, [
            (r.case_id, r.reason) for r in records if not r.passed
        ][:5]

        # independent brute-force recomputation of the statistics
        for item in summary["per_command"]:
            xs = [r.gen_latency_s for r in records if r.case_id == item["case_id"]]
            mean = sum(xs) / len(xs)
            var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
            assert abs(item["mean_latency_s"] - mean) <= 1e-12
            assert abs(item["std_latency_s"] - math.sqrt(var)) <= 1e-12

        # deliberately broken fixture: exactly 39 of 50 pass -> 0.78
        broken_cases = load_cases(data_path("bench_cases_broken.jsonl"))
        broken_records = run_suite(
            broken_cases,
            1,
            mock_client_factory(data_path("bench_fixture.json")),
            world,
            registry=registry,
            preamble=load_preamble(),
        )
        broken_summary = summarize(broken_records)
        assert broken_summary["passes"] == 39
        assert broken_summary["success_rate"] == 0.78


def test_determinism_byte_identical_csv():
    with criterion("determinism of suite outputs"):
        cases = load_cases(data_path("bench_cases.jsonl"))
        world = load_world(data_path("bench_world.json"))
        registry = load_registry(data_path("policies/registry.json"))
        snapshot = json.dumps(world.snapshot(), sort_keys=True)

        def one_run() -> bytes:
            records = run_suite(
                cases,
                2,
                mock_client_factory(data_path("bench_fixture.json")),
                world,
                registry=registry,
                preamble=load_preamble(),
            )
            with tempfile.TemporaryDirectory() as td:
                path = pathlib.Path(td) / "runs.csv"
                write_csv(records, path)
                return path.read_bytes()

        def strip_timing_columns(raw: bytes) -> bytes:
            rows = list(csv.reader(io.StringIO(raw.decode("utf-8"))))
            header = rows[0]
            keep = [i for i, col in enumerate(header) if col not in ("gen_latency_s", "started_at")]
            out = io.StringIO()
            writer = csv.writer(out, lineterminator="\n")
            for row in rows:
                writer.writerow([row[i] for i in keep])
            return out.getvalue().encode("utf-8")

        first = one_run()
        assert json.dumps(world.snapshot(), sort_keys=True) == snapshot  # restored
        second = one_run()
        assert strip_timing_columns(first) == strip_timing_columns(second)
