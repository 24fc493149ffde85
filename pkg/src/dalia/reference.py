"""Reference restaurant-booking scenario.

A food server declaring two capabilities and one composed task, plus a
directory seeded with the one agent that can reach it. Used by the CLI demo
configs under configs/ and throughout the test suite.
"""

from __future__ import annotations

from .atdp import TaskDeclaration
from .capabilities import Capability, CapabilityId
from .directory import (
    AgentRecord,
    DirectorySnapshot,
    bind_server_capabilities,
    empty_snapshot,
    register_agent,
)
from .wire import HandlerSpec, ServerConfig

FOOD_SERVER_ID = "mcp_food_server"
MAP_SERVER_ID = "mcp_map_server"

SEARCH_ID = CapabilityId("restaurant", "search")
RESERVE_ID = CapabilityId("restaurant", "reserve")
BOOKING_TASK_ID = CapabilityId("restaurant", "booking")

RESTAURANT_LIST = ["La Piazzetta", "Harbour Grill", "Casa Verde"]
BOOKING_CONFIRMATION = {
    "restaurant": "La Piazzetta",
    "status": "confirmed",
    "reference": "BK-0001",
}


def search_capability() -> Capability:
    return Capability(
        capability_id=SEARCH_ID,
        role="information_retrieval",
        domain="food",
        inputs=("location", "date", "party_size"),
        outputs=("restaurant_list",),
        preconditions=("location_known",),
        postconditions=("results_available",),
    )


def reserve_capability() -> Capability:
    return Capability(
        capability_id=RESERVE_ID,
        role="transaction",
        domain="food",
        inputs=("restaurant_list", "date", "party_size"),
        outputs=("booking_confirmation",),
        preconditions=("results_available",),
        postconditions=("booking_confirmed",),
    )


def booking_task() -> TaskDeclaration:
    return TaskDeclaration(
        task_id=BOOKING_TASK_ID,
        intent="book_restaurant",
        inputs=("location", "date", "party_size"),
        outputs=("booking_confirmation",),
        capabilities=(SEARCH_ID, RESERVE_ID),
    )


def food_server_config(
    fail_on: dict[CapabilityId, tuple[int, ...]] | None = None,
    scripts: dict[CapabilityId, tuple[dict, ...]] | None = None,
) -> ServerConfig:
    """The reference food server; faults and scripts are injectable."""
    fail_on = fail_on or {}
    scripts = scripts or {
        SEARCH_ID: ({"restaurant_list": RESTAURANT_LIST},),
        RESERVE_ID: ({"booking_confirmation": BOOKING_CONFIRMATION},),
    }
    handlers = {}
    for cid in (SEARCH_ID, RESERVE_ID):
        handlers[cid] = HandlerSpec(
            script=scripts.get(cid, ()),
            fail_on=fail_on.get(cid, ()),
        )
    return ServerConfig(
        server_id=FOOD_SERVER_ID,
        capabilities=(search_capability(), reserve_capability()),
        tasks=(booking_task(),),
        handlers=handlers,
    )


def scenario_directory() -> DirectorySnapshot:
    snapshot = empty_snapshot(origin="primary")
    snapshot = register_agent(
        snapshot,
        AgentRecord(
            agent_id="RestaurantAgent",
            role="task_executor",
            domains=("food",),
            accessible_servers=(FOOD_SERVER_ID, MAP_SERVER_ID),
        ),
    )
    return bind_server_capabilities(snapshot, FOOD_SERVER_ID, [SEARCH_ID, RESERVE_ID])


SCENARIO_INPUTS = {
    "location": "city centre",
    "date": "tomorrow",
    "party_size": "4",
}
