"""Latency and command-completion benchmark harness.

Runs a command set against a fresh session per run, repeating each case a
fixed number of times with the world restored from a snapshot in between.
Generation latency is measured around the completion calls only; every
run is judged by the case's machine-checkable oracle.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .codegen import MockCompletionClient
from .executor import ExecutionLimits, parse_program
from .executor.checks import called_names_in_order
from .policybank import PolicyRegistry
from .session import Session
from .world import RobotSimulator, WorldModel

ORACLE_KINDS = ("pose_delta", "say_matches", "calls_policy", "world_predicate", "code_contains")


class BenchError(Exception):
    pass


@dataclass
class OracleSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise BenchError(f"unknown oracle kind '{self.kind}'")


@dataclass
class CommandCase:
    id: int
    utterance: str
    oracle: OracleSpec
    tags: list = field(default_factory=list)


def load_cases(path) -> list:
    """Read a JSONL case file, one CommandCase per line."""
    cases = []
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            case = CommandCase(
                id=int(raw["id"]),
                utterance=raw["utterance"],
                oracle=OracleSpec(kind=raw["oracle"]["kind"], params=raw["oracle"].get("params", {})),
                tags=list(raw.get("tags", [])),
            )
            if case.id in seen_ids:
                raise BenchError(f"duplicate case id {case.id}")
            seen_ids.add(case.id)
            cases.append(case)
    return cases


@dataclass
class RunRecord:
    case_id: int
    repetition: int
    utterance: str
    status: str
    passed: bool
    reason: str
    gen_latency_s: float
    started_at: float


# -- oracles -------------------------------------------------------------------


def judge(case: CommandCase, report, world_before: dict, world_after: dict, code_text: str = ""):
    """Evaluate the case's oracle; returns (passed, reason)."""
    oracle = case.oracle
    if oracle.kind == "pose_delta":
        return _judge_pose_delta(oracle.params, world_before, world_after)
    if oracle.kind == "say_matches":
        pattern = oracle.params["pattern"].lower()
        for text in report.say_outputs:
            if pattern in text.lower():
                return True, ""
        return False, f"no say output contains '{oracle.params['pattern']}'"
    if oracle.kind == "calls_policy":
        acceptable = {oracle.params["policy"], *oracle.params.get("aliases", [])}
        if not code_text:
            return False, "no generated code to analyze"
        try:
            called = set(called_names_in_order(parse_program(code_text)))
        except Exception as exc:  # noqa: BLE001 - judged code may be arbitrary
            return False, f"generated code does not parse: {exc}"
        if called & acceptable:
            return True, ""
        return False, f"code never calls {sorted(acceptable)}"
    if oracle.kind == "world_predicate":
        return _judge_predicate(oracle.params, world_before, world_after, report)
    if oracle.kind == "code_contains":
        if oracle.params["text"] in code_text:
            return True, ""
        return False, f"code does not contain '{oracle.params['text']}'"
    raise BenchError(f"unknown oracle kind '{oracle.kind}'")  # pragma: no cover


def _ee_position(world: dict):
    return world["ee_pose"]["position"]


def _yaw_of(orientation) -> float:
    w, x, y, z = orientation
    return math.degrees(math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))


def _judge_pose_delta(params: dict, before: dict, after: dict):
    tol = float(params.get("tolerance", 1e-6))
    b, a = _ee_position(before), _ee_position(after)
    expected = (params.get("dx", 0.0), params.get("dy", 0.0), params.get("dz", 0.0))
    actual = (a[0] - b[0], a[1] - b[1], a[2] - b[2])
    for axis, exp, act in zip("xyz", expected, actual):
        if abs(act - exp) > tol:
            return False, f"d{axis}={act:.9f}, expected {exp:.9f} ± {tol:g}"
    if "dyaw_deg" in params:
        yaw_tol = float(params.get("yaw_tolerance_deg", 1e-6))
        dyaw = _yaw_of(after["ee_pose"]["orientation"]) - _yaw_of(before["ee_pose"]["orientation"])
        dyaw = (dyaw + 180.0) % 360.0 - 180.0
        if abs(dyaw - float(params["dyaw_deg"])) > yaw_tol:
            return False, f"dyaw={dyaw:.9f} deg, expected {params['dyaw_deg']} ± {yaw_tol:g}"
    return True, ""


def _judge_predicate(params: dict, before: dict, after: dict, report):
    pid = params["id"]
    if pid == "holding":
        held = after["held_object"]
        if held == params["object"]:
            return True, ""
        return False, f"held_object is {held!r}, expected {params['object']!r}"
    if pid == "gripper":
        if after["gripper"] == params["state"]:
            return True, ""
        return False, f"gripper is {after['gripper']}, expected {params['state']}"
    if pid == "ee_above":
        obj = after["objects"].get(params["object"])
        if obj is None:
            return False, f"object '{params['object']}' not in world"
        tol = float(params.get("tolerance", 1e-6))
        ee = _ee_position(after)
        target = obj["position"]
        dz = float(params.get("dz", 0.0))
        if (
            abs(ee[0] - target[0]) <= tol
            and abs(ee[1] - target[1]) <= tol
            and abs(ee[2] - (target[2] + dz)) <= tol
        ):
            return True, ""
        return False, f"ee at {ee}, expected above '{params['object']}' by {dz}"
    if pid == "ee_at":
        obj = after["objects"].get(params["object"])
        if obj is None:
            return False, f"object '{params['object']}' not in world"
        tol = float(params.get("tolerance", 1e-6))
        ee = _ee_position(after)
        target = obj["position"]
        if all(abs(e - t) <= tol for e, t in zip(ee, target)):
            return True, ""
        return False, f"ee at {ee}, expected at '{params['object']}'"
    if pid == "object_at":
        obj = after["objects"].get(params["object"])
        if obj is None:
            return False, f"object '{params['object']}' not in world"
        tol = float(params.get("tolerance", 1e-6))
        target = (params["x"], params["y"], params["z"])
        actual = obj["position"]
        if all(abs(e - t) <= tol for e, t in zip(actual, target)):
            return True, ""
        return False, f"object '{params['object']}' at {actual}, expected {list(target)}"
    raise BenchError(f"unknown world predicate '{pid}'")


# -- suite runner --------------------------------------------------------------


def run_suite(
    cases,
    repetitions: int,
    client,
    world: WorldModel,
    *,
    registry: PolicyRegistry,
    preamble: str,
    limits: ExecutionLimits | None = None,
    time_dilation: float = 0.0,
    inter_run_delay: float = 0.0,
) -> list:
    """Run every case repetitions times from the same world snapshot.

    client may be a completion client or a zero-argument factory returning
    one (a fresh client per run keeps scripted fixtures independent).
    """
    snapshot = world.snapshot()
    records = []
    for case in cases:
        for rep in range(1, repetitions + 1):
            world.restore(snapshot)
            run_client = client() if callable(client) else client
            sim = RobotSimulator(world)
            session = Session(
                sim=sim,
                registry=registry,
                client=run_client,
                preamble=preamble,
                limits=limits or ExecutionLimits(),
                time_dilation=time_dilation,
            )
            calls_before = len(run_client.call_log)
            started_at = time.time()
            code_text = ""
            try:
                outcome = session.run_command(case.utterance)
                status = outcome.status.value
                report = outcome
                if session.last_lmp is not None:
                    code_text = session.last_lmp.code_text
            except Exception as exc:  # noqa: BLE001 - a broken run must not sink the suite
                from .executor import ExecutionReport, ExecutionStatus

                report = ExecutionReport(
                    status=ExecutionStatus.RUNTIME_ERROR, error_detail=str(exc)
                )
                status = report.status.value
            latency = sum(elapsed for _, elapsed in run_client.call_log[calls_before:])
            world_after = world.snapshot()
            passed, reason = judge(case, report, snapshot, world_after, code_text)
            if not passed and report.error_detail:
                reason = f"{reason} [{status}: {report.error_detail}]"
            records.append(
                RunRecord(
                    case_id=case.id,
                    repetition=rep,
                    utterance=case.utterance,
                    status=status,
                    passed=passed,
                    reason=reason,
                    gen_latency_s=latency,
                    started_at=started_at,
                )
            )
            if inter_run_delay > 0:
                time.sleep(inter_run_delay)
    world.restore(snapshot)
    return records


# -- statistics ----------------------------------------------------------------


def summarize(records) -> dict:
    """Per-command mean and sample standard deviation, plus overall rate.

    The overall success rate counts first-repetition verdicts only.
    """
    by_case: dict = {}
    for record in records:
        by_case.setdefault(record.case_id, []).append(record)

    per_command = []
    first_rep_passes = 0
    for case_id in sorted(by_case):
        runs = sorted(by_case[case_id], key=lambda r: r.repetition)
        latencies = [r.gen_latency_s for r in runs]
        n = len(latencies)
        mean = sum(latencies) / n
        if n > 1:
            variance = sum((x - mean) ** 2 for x in latencies) / (n - 1)
            std = math.sqrt(variance)
        else:
            std = 0.0
        first = runs[0]
        if first.passed:
            first_rep_passes += 1
        per_command.append(
            {
                "case_id": case_id,
                "utterance": first.utterance,
                "runs": n,
                "mean_latency_s": mean,
                "std_latency_s": std,
                "passed_first_rep": first.passed,
                "pass_rate_all_reps": sum(1 for r in runs if r.passed) / n,
            }
        )
    total_cases = len(by_case)
    return {
        "cases": total_cases,
        "repetitions": max((r.repetition for r in records), default=0),
        "passes": first_rep_passes,
        "success_rate": (first_rep_passes / total_cases) if total_cases else 0.0,
        "per_command": per_command,
    }


CSV_COLUMNS = (
    "case_id",
    "repetition",
    "utterance",
    "status",
    "passed",
    "reason",
    "gen_latency_s",
    "started_at",
)


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.case_id,
                    r.repetition,
                    r.utterance,
                    r.status,
                    r.passed,
                    r.reason,
                    repr(r.gen_latency_s),
                    repr(r.started_at),
                ]
            )


def write_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")


def write_chart_data(summary: dict, path) -> None:
    """Per-command bar chart data: id, utterance, mean and std latency."""
    data = [
        {
            "case_id": item["case_id"],
            "utterance": item["utterance"],
            "mean_latency_s": item["mean_latency_s"],
            "std_latency_s": item["std_latency_s"],
        }
        for item in summary["per_command"]
    ]
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def mock_client_factory(fixture_path):
    """Factory handed to run_suite: a fresh mock client per run."""
    path = str(fixture_path)

    def factory() -> MockCompletionClient:
        return MockCompletionClient.from_file(path)

    return factory
