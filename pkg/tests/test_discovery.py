from __future__ import annotations

import pytest

from dalia import reference
from dalia.capabilities import CapabilityId
from dalia.discovery import build_invoker, context_fingerprint, discover
from dalia.errors import (
    DuplicateCapabilityId,
    EndpointUnreachable,
    NoSuchTask,
    ProtocolError,
)
from dalia.executor import execute
from dalia.planner import Goal, plan, resolve_goal
from dalia.wire import (
    CountingClient,
    DirectoryService,
    LocalClient,
    ServerConfig,
    WireServer,
)

BOOKING = CapabilityId("restaurant", "booking")


def _scenario_clients():
    server = LocalClient(WireServer(reference.food_server_config()), endpoint="food")
    directory = LocalClient(DirectoryService(reference.scenario_directory()), endpoint="dir")
    return server, directory


def test_discover_scenario_builds_sealed_context():
    server, directory = _scenario_clients()
    ctx = discover([server], directory, set(reference.SCENARIO_INPUTS))
    assert len(ctx.capabilities) == 2
    assert len(ctx.tasks) == 1
    assert ctx.feasibility[BOOKING].feasible
    assert ctx.provider(reference.SEARCH_ID) == reference.FOOD_SERVER_ID
    assert "RestaurantAgent" in ctx.directory.agents
    assert ctx.server_routes[reference.FOOD_SERVER_ID] is server


def test_discover_zero_servers_empty_directory():
    directory = LocalClient(DirectoryService())
    ctx = discover([], directory, set())
    assert ctx.capabilities == {}
    assert ctx.tasks == {}
    with pytest.raises(NoSuchTask):
        resolve_goal(Goal(intent="book_restaurant", bindings={}), ctx)


def test_repeated_discovery_is_deterministic():
    server, directory = _scenario_clients()
    first = discover([server], directory, set(reference.SCENARIO_INPUTS))
    second = discover([server], directory, set(reference.SCENARIO_INPUTS))
    assert first.sealed_at != second.sealed_at
    assert first.capabilities == second.capabilities
    assert first.tasks == second.tasks
    assert first.directory == second.directory
    assert first.feasibility == second.feasibility
    assert context_fingerprint(first) == context_fingerprint(second)


def test_fingerprint_changes_when_a_capability_is_added():
    server, directory = _scenario_clients()
    base = discover([server], directory, set(reference.SCENARIO_INPUTS))

    extra = ServerConfig(
        server_id="extra_server",
        capabilities=(
            reference.search_capability().__class__(
                capability_id=CapabilityId("maps", "lookup"),
                role="information_retrieval",
                domain="maps",
                inputs=("location",),
                outputs=("coordinates",),
            ),
        ),
        tasks=(),
    )
    enlarged = discover(
        [server, LocalClient(WireServer(extra), endpoint="extra")],
        directory,
        set(reference.SCENARIO_INPUTS),
    )
    assert context_fingerprint(base) != context_fingerprint(enlarged)


def test_empty_context_fingerprint_is_fixed():
    first = discover([], LocalClient(DirectoryService()), set())
    second = discover([], LocalClient(DirectoryService()), set())
    assert context_fingerprint(first) == context_fingerprint(second)


def test_unreachable_endpoint_fails_atomically():
    _, directory = _scenario_clients()
    with pytest.raises(EndpointUnreachable):
        discover(["local:/nonexistent/server.json"], directory, set())
    with pytest.raises(EndpointUnreachable):
        discover([], "local:/nonexistent/directory.json", set())


def test_duplicate_capability_id_across_servers_is_an_error():
    server_a, directory = _scenario_clients()
    clone = reference.food_server_config()
    clone_b = ServerConfig(
        server_id="mcp_food_clone",
        capabilities=clone.capabilities,
        tasks=(),
        handlers=clone.handlers,
    )
    server_b = LocalClient(WireServer(clone_b), endpoint="clone")
    with pytest.raises(DuplicateCapabilityId) as excinfo:
        discover([server_a, server_b], directory, set())
    assert excinfo.value.capability_id in ("restaurant.search", "restaurant.reserve")


def test_duplicate_task_id_across_servers_is_an_error():
    server_a, directory = _scenario_clients()
    other = ServerConfig(
        server_id="other_food_server",
        capabilities=(
            reference.search_capability().__class__(
                capability_id=CapabilityId("bistro", "search"),
                role="information_retrieval",
                domain="food",
                inputs=("location",),
                outputs=("bistro_list",),
            ),
        ),
        tasks=(
            reference.booking_task().__class__(
                task_id=BOOKING,
                intent="book_bistro",
                inputs=("location",),
                outputs=("bistro_list",),
                capabilities=(CapabilityId("bistro", "search"),),
            ),
        ),
    )
    server_b = LocalClient(WireServer(other), endpoint="other")
    with pytest.raises(ProtocolError):
        discover([server_a, server_b], directory, set())


def test_closed_world_no_discovery_calls_during_plan_and_execute(scenario_goal):
    server, directory = _scenario_clients()
    counting_server = CountingClient(server)
    counting_directory = CountingClient(directory)
    ctx = discover(
        [counting_server], counting_directory, set(reference.SCENARIO_INPUTS)
    )
    assert counting_server.discovery_call_count() > 0

    before = (
        counting_server.discovery_call_count()
        + counting_directory.discovery_call_count()
    )
    graph = plan(scenario_goal, ctx)
    trace = execute(graph, scenario_goal, ctx, build_invoker(ctx))
    after = (
        counting_server.discovery_call_count()
        + counting_directory.discovery_call_count()
    )
    assert trace.outcome == "completed"
    assert after - before == 0
    # the only wire traffic during execution is invocation itself
    assert counting_server.calls.get("dalia/invoke") == 2


def test_context_invariant_task_refs_resolve_or_flag_infeasible():
    server, directory = _scenario_clients()
    ctx = discover([server], directory, set(reference.SCENARIO_INPUTS))
    for task_id, task in ctx.tasks.items():
        for cid in task.capabilities:
            assert cid in ctx.capabilities or not ctx.feasibility[task_id].feasible
