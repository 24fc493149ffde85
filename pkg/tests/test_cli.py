from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

from dalia import reference
from dalia.canonical import canonical_bytes
from dalia.cli import main
from dalia.directory import save_snapshot, snapshot_to_json
from dalia.wire import TcpServerHandle, WireServer, server_config_to_json

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_INPUT_ARGS = ["location=city centre", "date=tomorrow", "party_size=4"]


def write_scenario_configs(tmp_path: Path, fail_on=None) -> Path:
    server_doc = server_config_to_json(reference.food_server_config(fail_on=fail_on))
    (tmp_path / "food_server.json").write_bytes(canonical_bytes(server_doc))
    (tmp_path / "directory.json").write_bytes(save_snapshot(reference.scenario_directory()))
    config = {
        "servers": ["local:food_server.json"],
        "directory": "local:directory.json",
    }
    path = tmp_path / "orchestrator.json"
    path.write_text(json.dumps(config))
    return path


def run_cli(args: list[str]) -> tuple[int, str]:
    out = io.StringIO()
    code = main(args, out=out)
    return code, out.getvalue()


def test_discover_prints_summary_and_fingerprint(tmp_path):
    config = write_scenario_configs(tmp_path)
    code, output = run_cli(
        ["discover", "--config", str(config), "--inputs", *SCENARIO_INPUT_ARGS]
    )
    assert code == 0
    assert "capabilities (2): restaurant.reserve, restaurant.search" in output
    assert "tasks (1): restaurant.booking" in output
    assert "agents (1): RestaurantAgent" in output
    assert "feasible tasks (1): restaurant.booking" in output
    assert "fingerprint: " in output

    code_again, output_again = run_cli(
        ["discover", "--config", str(config), "--inputs", *SCENARIO_INPUT_ARGS]
    )
    assert code_again == 0
    assert output_again == output


def test_discover_unreachable_endpoint_exits_2(tmp_path):
    config = tmp_path / "orchestrator.json"
    config.write_text(
        json.dumps({"servers": ["local:missing.json"], "directory": "local:directory.json"})
    )
    code, _ = run_cli(["discover", "--config", str(config), "--inputs"])
    assert code == 2


def test_plan_emits_two_node_graph(tmp_path):
    config = write_scenario_configs(tmp_path)
    code, output = run_cli(
        [
            "plan",
            "--config",
            str(config),
            "--intent",
            "book_restaurant",
            "--inputs",
            *SCENARIO_INPUT_ARGS,
        ]
    )
    assert code == 0
    graph = json.loads(output)
    assert len(graph["nodes"]) == 2
    assert len(graph["edges"]) == 1
    assert graph["edges"][0]["slot"] == "restaurant_list"
    assert {node["agent_id"] for node in graph["nodes"]} == {"RestaurantAgent"}


def test_plan_output_is_byte_identical_across_runs(tmp_path):
    config = write_scenario_configs(tmp_path)
    args = [
        "plan",
        "--config",
        str(config),
        "--intent",
        "book_restaurant",
        "--inputs",
        *SCENARIO_INPUT_ARGS,
    ]
    outputs = {run_cli(args)[1] for _ in range(5)}
    assert len(outputs) == 1


def test_plan_dot_output(tmp_path):
    config = write_scenario_configs(tmp_path)
    code, output = run_cli(
        [
            "plan",
            "--config",
            str(config),
            "--intent",
            "book_restaurant",
            "--inputs",
            *SCENARIO_INPUT_ARGS,
            "--dot",
        ]
    )
    assert code == 0
    assert output.startswith("digraph task_restaurant_booking {")
    assert output.count('[label="restaurant_list"]') == 1


def test_plan_unknown_intent_exits_3(tmp_path, capsys):
    config = write_scenario_configs(tmp_path)
    code, _ = run_cli(
        ["plan", "--config", str(config), "--intent", "fly_to_moon", "--inputs"]
    )
    assert code == 3
    assert "NoSuchTask" in capsys.readouterr().err


def test_run_scenario_completes(tmp_path):
    config = write_scenario_configs(tmp_path)
    code, output = run_cli(
        [
            "run",
            "--config",
            str(config),
            "--intent",
            "book_restaurant",
            "--inputs",
            *SCENARIO_INPUT_ARGS,
        ]
    )
    assert code == 0
    trace = json.loads(output)
    assert trace["outcome"] == "completed"
    assert trace["final_bindings"]["booking_confirmation"] == reference.BOOKING_CONFIRMATION


def test_run_aborted_exits_4(tmp_path):
    config = write_scenario_configs(tmp_path, fail_on={reference.SEARCH_ID: (1,)})
    code, output = run_cli(
        [
            "run",
            "--config",
            str(config),
            "--intent",
            "book_restaurant",
            "--inputs",
            *SCENARIO_INPUT_ARGS,
        ]
    )
    assert code == 4
    trace = json.loads(output)
    assert trace["outcome"] == "aborted"
    assert [step["status"] for step in trace["steps"]] == ["failed", "skipped"]


def test_run_trace_files_are_byte_identical(tmp_path):
    config = write_scenario_configs(tmp_path)
    paths = [tmp_path / "trace_one.json", tmp_path / "trace_two.json"]
    for path in paths:
        code, output = run_cli(
            [
                "run",
                "--config",
                str(config),
                "--intent",
                "book_restaurant",
                "--inputs",
                *SCENARIO_INPUT_ARGS,
                "--trace",
                str(path),
            ]
        )
        assert code == 0
        assert output == ""
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_usage_errors_exit_1(tmp_path):
    config = write_scenario_configs(tmp_path)
    code, _ = run_cli(
        ["plan", "--config", str(config), "--intent", "book_restaurant", "--inputs", "no-equals"]
    )
    assert code == 1
    code, _ = run_cli(["plan", "--config", str(tmp_path / "absent.json"), "--intent", "x"])
    assert code == 1
    code, _ = run_cli(["bogus-command"])
    assert code == 1


def test_server_serve_rejects_broken_config(tmp_path):
    doc = server_config_to_json(reference.food_server_config())
    doc["tasks"][0]["capabilities"].append("ghost.capability")
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, _ = run_cli(["server", "serve", "--config", str(path)])
    assert code == 1


def test_server_serve_stdio_subprocess(tmp_path):
    server_doc = server_config_to_json(reference.food_server_config())
    path = tmp_path / "food_server.json"
    path.write_bytes(canonical_bytes(server_doc))
    request = {"jsonrpc": "2.0", "id": 1, "method": "dalia/list_capabilities", "params": {}}
    proc = subprocess.run(
        [sys.executable, "-m", "dalia.cli", "server", "serve", "--config", str(path)],
        input=json.dumps(request) + "\n",
        capture_output=True,
        text=True,
        timeout=30,
        cwd=REPO_ROOT,
    )
    assert proc.returncode == 0
    response = json.loads(proc.stdout.splitlines()[0])
    assert [doc["capability_id"] for doc in response["result"]] == [
        "restaurant.search",
        "restaurant.reserve",
    ]


def test_directory_serve_snapshot_round_trip(tmp_path):
    snapshot_path = tmp_path / "directory.json"
    original = save_snapshot(reference.scenario_directory()) + b"\n"
    snapshot_path.write_bytes(original)
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "dalia.cli",
            "directory",
            "serve",
            "--snapshot",
            str(snapshot_path),
        ],
        input="",
        capture_output=True,
        text=True,
        timeout=30,
        cwd=REPO_ROOT,
    )
    assert proc.returncode == 0
    assert snapshot_path.read_bytes() == original


def test_pipeline_over_tcp_endpoints(tmp_path):
    from dalia.wire import DirectoryService

    server_handle = TcpServerHandle(WireServer(reference.food_server_config()), "127.0.0.1:0")
    directory_handle = TcpServerHandle(
        DirectoryService(reference.scenario_directory()), "127.0.0.1:0"
    )
    try:
        config = tmp_path / "orchestrator.json"
        config.write_text(
            json.dumps(
                {
                    "servers": [f"tcp:{server_handle.address}"],
                    "directory": f"tcp:{directory_handle.address}",
                }
            )
        )
        code, output = run_cli(
            [
                "run",
                "--config",
                str(config),
                "--intent",
                "book_restaurant",
                "--inputs",
                *SCENARIO_INPUT_ARGS,
            ]
        )
        assert code == 0
        assert json.loads(output)["outcome"] == "completed"
    finally:
        server_handle.shutdown()
        directory_handle.shutdown()


def test_checked_in_demo_configs_work():
    code, output = run_cli(
        [
            "plan",
            "--config",
            str(REPO_ROOT / "configs" / "orchestrator.json"),
            "--intent",
            "book_restaurant",
            "--inputs",
            *SCENARIO_INPUT_ARGS,
        ]
    )
    assert code == 0
    assert len(json.loads(output)["nodes"]) == 2
