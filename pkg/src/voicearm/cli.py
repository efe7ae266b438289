"""Command-line entry points: scripted sessions, gateway server, bench, demo."""

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    load_cases,
    mock_client_factory,
    run_suite,
    summarize,
    write_chart_data,
    write_csv,
    write_summary_json,
)
from .codegen import EndpointCompletionClient, MockCompletionClient
from .config import SessionConfig, load_config
from .executor import ExecutionLimits
from .listener import make_listener
from .policybank import load_registry
from .resources import data_path, load_preamble
from .session import Session, default_bindings
from .world import RobotSimulator, load_world


def build_session(cfg: SessionConfig, event_sink=None) -> Session:
    world_file = cfg.world_file or str(data_path("pump_world.json"))
    registry_file = cfg.registry_file or str(data_path("policies/registry.json"))
    sim = RobotSimulator(
        load_world(world_file),
        mode=cfg.motion_mode,
        time_scale=cfg.motion_time_scale,
    )
    if cfg.uses_endpoint:
        client = EndpointCompletionClient(
            cfg.llm["url"],
            cfg.llm.get("model", ""),
            temperature=float(cfg.llm.get("temperature", 0.0)),
            max_tokens=int(cfg.llm.get("max_tokens", 512)),
            token=cfg.llm.get("token", ""),
        )
    else:
        fixture = cfg.llm.get("fixture") or str(data_path("golden_fixture.json"))
        client = MockCompletionClient.from_file(fixture)
    return Session(
        sim=sim,
        registry=load_registry(registry_file),
        client=client,
        preamble=load_preamble(),
        bindings=default_bindings(cfg.keywords),
        context_capacity=cfg.context_capacity,
        approval_required=cfg.approval_enabled(),
        limits=cfg.limits,
        time_dilation=cfg.time_dilation,
        policies_dir=cfg.policies_dir or str(Path(registry_file).parent),
        event_sink=event_sink,
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else SessionConfig()
    if args.script:
        cfg.listener = {"engine": "scripted", "script": args.script}
    listener = make_listener(cfg.listener)

    def sink(event_type, payload):
        if event_type == "say":
            print(f"robot: {payload['text']}")
        elif event_type == "error":
            print(f"error: {payload}", file=sys.stderr)

    session = build_session(cfg, event_sink=sink)
    while True:
        transcript = listener.next_transcript(timeout=args.timeout)
        if transcript is None:
            break
        print(f"operator: {transcript.text}")
        result = session.handle_transcript(transcript.text)
        if hasattr(result, "status") and hasattr(result, "error_detail") and result.error_detail:
            print(f"  -> {result.status.value}: {result.error_detail}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import create_app

    cfg = load_config(args.config) if args.config else SessionConfig()
    session = build_session(cfg)
    console_dir = args.console or ""
    if not console_dir:
        candidate = Path(__file__).resolve().parents[2] / "frontend"
        if (candidate / "index.html").exists() and (candidate / "dist").exists():
            console_dir = str(candidate)
    app = create_app(session, console_dir=console_dir)
    if console_dir:
        print(f"console at http://{args.host}:{args.port}/console/")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_bench(args) -> int:
    cases = load_cases(args.cases or data_path("bench_cases.jsonl"))
    world = load_world(args.world or data_path("bench_world.json"))
    registry = load_registry(args.registry or data_path("policies/registry.json"))
    if args.endpoint:
        client = EndpointCompletionClient(args.endpoint, args.model or "")
    else:
        client = mock_client_factory(args.fixture or data_path("bench_fixture.json"))
    records = run_suite(
        cases,
        args.repetitions,
        client,
        world,
        registry=registry,
        preamble=load_preamble(),
        limits=ExecutionLimits(),
        inter_run_delay=args.delay,
    )
    summary = summarize(records)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(records, out / "runs.csv")
    write_summary_json(summary, out / "summary.json")
    write_chart_data(summary, out / "latency_chart.json")
    print(
        f"{summary['cases']} commands x {summary['repetitions']} reps: "
        f"success rate {summary['success_rate']:.2f}"
    )
    slowest = max(summary["per_command"], key=lambda item: item["mean_latency_s"])
    print(
        f"slowest command: #{slowest['case_id']} '{slowest['utterance']}' "
        f"mean {slowest['mean_latency_s']*1000:.2f} ms"
    )
    print(f"reports written to {out}/")
    return 0


def cmd_demo(args) -> int:
    from .demo import EXPECTED_SAY_SEQUENCE, run_pump_demo

    result = run_pump_demo(printer=print)
    ok = result.say_outputs == EXPECTED_SAY_SEQUENCE
    print()
    print("demo completed" if ok else "demo DIVERGED from the expected narrative")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="voicearm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scripted or typed session")
    p_run.add_argument("--config", help="session config JSON")
    p_run.add_argument("--script", help="session script file (one utterance per line)")
    p_run.add_argument("--timeout", type=float, default=0.2, help="listener timeout seconds")
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="start the REST/WebSocket gateway")
    p_serve.add_argument("--config", help="session config JSON")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8400)
    p_serve.add_argument("--console", help="built console directory to serve at /console")
    p_serve.set_defaults(func=cmd_serve)

    p_bench = sub.add_parser("bench", help="run the latency/completion benchmark")
    p_bench.add_argument("--cases", help="JSONL case file (default: bundled 50 commands)")
    p_bench.add_argument("--fixture", help="mock completion fixture JSON")
    p_bench.add_argument("--endpoint", help="completion endpoint base URL instead of the mock")
    p_bench.add_argument("--model", help="model name for the endpoint")
    p_bench.add_argument("--world", help="world file (default: bundled bench world)")
    p_bench.add_argument("--registry", help="policy registry (default: bundled)")
    p_bench.add_argument("--repetitions", type=int, default=10)
    p_bench.add_argument("--delay", type=float, default=0.0, help="inter-run delay seconds")
    p_bench.add_argument("--out", default="bench_out", help="output directory")
    p_bench.set_defaults(func=cmd_bench)

    p_demo = sub.add_parser("demo", help="run the scripted pump-assembly session")
    p_demo.set_defaults(func=cmd_demo)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
